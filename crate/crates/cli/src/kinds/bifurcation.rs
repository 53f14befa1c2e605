use confsurf::compressed_fluid::{
    bifurcation_classify, bisect_threshold, brute_force_fold, min_dx_du, PoleFamilyParams, SurfaceClass,
};
use confsurf::{Error, Result};
use serde::Deserialize;

use crate::check::{sci, Out};

pub const CHECKS: &[&str] = &["flip_location", "brute_force_agreement"];

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bisect {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for Bisect {
    fn default() -> Self {
        Self {
            lo: 0.05,
            hi: 1.0,
            tol: 1e-9,
        }
    }
}

/// Grid search for a fold, `|u| ≤ u_max`, `t ∈ [t_ref, t_end]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteForce {
    pub u_max: f64,
    pub n_u: usize,
    pub n_t: usize,
    /// The flip is also confirmed at `a* (1 ± delta)`.
    pub delta: f64,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            u_max: 5.0,
            n_u: 2000,
            n_t: 2000,
            delta: 0.01,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "A")]
    pub amp: f64,
    pub a_values: Option<Vec<f64>>,
    pub a_range: Range,
    pub t_ref: f64,
    pub t_end: f64,
    /// Time samples for the critical-point listing.
    pub samples: usize,
    pub bisect: Option<Bisect>,
    /// Where the flip should be; defaults to the classifier's own threshold.
    pub expected_flip: Option<f64>,
    pub brute_force: Option<BruteForce>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            amp: 1.0,
            a_values: None,
            a_range: Range {
                min: 0.05,
                max: 1.0,
                count: 20,
            },
            t_ref: 1.0,
            t_end: 11.0,
            samples: 11,
            bisect: Some(Bisect::default()),
            expected_flip: None,
            brute_force: Some(BruteForce::default()),
        }
    }
}

fn class_name(c: SurfaceClass) -> &'static str {
    match c {
        SurfaceClass::OneValued => "one_valued",
        SurfaceClass::Bubbles => "bubbles",
        SurfaceClass::Droplets => "droplets",
    }
}

impl Params {
    fn heights(&self) -> Vec<f64> {
        match &self.a_values {
            Some(v) => v.clone(),
            None => {
                let r = self.a_range;
                (0..r.count)
                    .map(|k| r.min + (r.max - r.min) * k as f64 / (r.count.max(2) - 1) as f64)
                    .collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amp.is_finite() {
            return Err(Error::Config("A must be finite".into()));
        }
        if !(self.t_ref > 0.0 && self.t_end >= self.t_ref) {
            return Err(Error::Config("need 0 < t_ref <= t_end".into()));
        }
        if self.a_values.is_none() && (self.a_range.count == 0 || !(self.a_range.max >= self.a_range.min)) {
            return Err(Error::Config("a_range needs count >= 1 and min <= max".into()));
        }
        for a in self.heights() {
            PoleFamilyParams::new(self.amp, a)?;
        }
        if let Some(b) = &self.bisect {
            if !(b.lo > 0.0 && b.hi > b.lo && b.tol > 0.0) {
                return Err(Error::Config("bisect needs 0 < lo < hi and tol > 0".into()));
            }
        }
        if let Some(b) = &self.brute_force {
            if !(b.u_max > 0.0 && b.n_u >= 2 && b.n_t >= 1 && b.delta > 0.0 && b.delta < 1.0) {
                return Err(Error::Config("brute_force needs u_max > 0, n_u >= 2, n_t >= 1, 0 < delta < 1".into()));
            }
        }
        Ok(())
    }

    pub fn run(&self, out: &mut Out) -> Result<()> {
        out.stage("compressed_fluid", "bifurcation_classify");
        let classify = |a: f64| -> Result<_> {
            Ok(bifurcation_classify(PoleFamilyParams::new(self.amp, a)?, self.t_ref, self.t_end, self.samples))
        };
        let brute = |a: f64, b: &BruteForce| -> Result<bool> {
            Ok(brute_force_fold(PoleFamilyParams::new(self.amp, a)?, self.t_ref, self.t_end, b.u_max, b.n_u, b.n_t))
        };
        let mut csv = String::from("a,class,min_dx_du,brute_force_fold\n");
        let mut jsonl = String::new();
        let mut disagree = 0usize;
        for a in self.heights() {
            let rep = classify(a)?;
            let multi = rep.class != SurfaceClass::OneValued;
            let fold = match &self.brute_force {
                Some(b) => {
                    let f = brute(a, b)?;
                    disagree += usize::from(f != multi);
                    f.to_string()
                }
                None => String::new(),
            };
            let m = min_dx_du(PoleFamilyParams::new(self.amp, a)?, self.t_ref);
            csv.push_str(&format!("{},{},{},{fold}\n", sci(a), class_name(rep.class), sci(m)));
            jsonl.push_str(&serde_json::to_string(&rep).expect("report serializes"));
            jsonl.push('\n');
        }
        out.file("classification.csv", csv);
        out.file("reports.jsonl", jsonl);

        let mut threshold = serde_json::json!({
            "A": self.amp,
            "t_ref": self.t_ref,
            "critical_a": classify(self.heights()[0])?.critical_a,
            "a_by_a2_over_8": (self.amp * self.amp / 8.0).sqrt(),
        });
        let mut flip = None;
        if let Some(b) = &self.bisect {
            out.stage("compressed_fluid", "bisect_threshold");
            let multivalued = |a: f64| classify(a).map(|r| r.class != SurfaceClass::OneValued).unwrap_or(false);
            let a_star = bisect_threshold(b.lo, b.hi, b.tol, multivalued)?;
            let expected = self.expected_flip.unwrap_or(classify(a_star)?.critical_a);
            threshold["bisected"] = serde_json::json!(a_star);
            threshold["expected"] = serde_json::json!(expected);
            out.below("flip_location", (a_star - expected).abs(), 1e-6, "|bisected flip - expected flip|");
            flip = Some(a_star);
        }
        if let Some(b) = &self.brute_force {
            out.stage("compressed_fluid", "brute_force_fold");
            if let Some(a_star) = flip {
                for (a, want) in [(a_star * (1.0 - b.delta), true), (a_star * (1.0 + b.delta), false)] {
                    disagree += usize::from(brute(a, b)? != want);
                }
            }
            out.below(
                "brute_force_agreement",
                disagree as f64,
                0.5,
                "heights where the grid search and the classifier disagree",
            );
        }
        out.json("threshold.json", &threshold);
        Ok(())
    }
}
