use std::path::{Path, PathBuf};

use confsurf::narrow_cut::{compare_full, hopf_residual, hopf_v, CompareConfig, ComparisonTable, NarrowCutParams};
use confsurf::{Cplx, Error, Result};
use serde::Deserialize;

use super::GridSpec;
use crate::check::Out;
use crate::config::resolve;

pub const CHECKS: &[&str] = &[
    "hopf_residual_v",
    "hopf_residual_z",
    "refinement_ratio",
    "small_tau_limit",
    "monotone",
    "fixture_match",
];

/// Second-order check: residuals at one `tau` for a halving sequence of steps.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Refine {
    pub grid: GridSpec,
    pub tau: f64,
    pub dtaus: [f64; 2],
}

impl Default for Refine {
    fn default() -> Self {
        // the finer box keeps the spatial floor below the difference error
        Self {
            grid: GridSpec {
                n: 1024,
                length: 32.0 * std::f64::consts::PI,
            },
            tau: 1.0,
            dtaus: [0.4, 0.2],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hopf {
    pub cut: NarrowCutParams,
    pub grid: GridSpec,
    pub taus: Vec<f64>,
    pub dtau: f64,
    pub refine: Option<Refine>,
    pub small_tau: f64,
    pub small_tau_points: Vec<Cplx>,
}

impl Default for Hopf {
    fn default() -> Self {
        Self {
            cut: NarrowCutParams { lambda: 2.0, amp: 0.05 },
            grid: GridSpec::default(),
            taus: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            dtau: 1e-4,
            refine: Some(Refine::default()),
            small_tau: 1e-8,
            small_tau_points: vec![Cplx::new(0.0, 0.0), Cplx::new(1.5, 0.0), Cplx::new(-4.0, -0.5)],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Compare {
    pub lambda: f64,
    /// Cut strengths `A/λ²`.
    pub widths: Vec<f64>,
    pub config: CompareConfig,
    /// Stored table (`width,max_rel_err_V,t_window`) the run must reproduce.
    pub fixture: Option<PathBuf>,
    pub fixture_rtol: f64,
}

impl Default for Compare {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            widths: vec![0.2, 0.1, 0.05, 0.025],
            config: CompareConfig::default(),
            fixture: None,
            fixture_rtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default)]
    pub hopf: Option<Hopf>,
    #[serde(default)]
    pub compare: Option<Compare>,
}

fn read_table(path: &Path) -> Result<Vec<[f64; 3]>> {
    let bad = |m: String| Error::Config(format!("fixture {}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("width,max_rel_err_V,t_window") {
        return Err(bad("expected header width,max_rel_err_V,t_window".into()));
    }
    lines
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(e.to_string()))?;
            <[f64; 3]>::try_from(v).map_err(|_| bad(format!("row '{l}' needs three columns")))
        })
        .collect()
}

/// Number of in-regime neighbours (by width) whose errors do not decrease.
fn monotone_violations(table: &ComparisonTable) -> usize {
    let mut rows: Vec<_> = table.rows.iter().filter(|r| !r.out_of_regime).collect();
    rows.sort_by(|a, b| a.width.total_cmp(&b.width));
    rows.windows(2).filter(|w| w[0].max_rel_err_v >= w[1].max_rel_err_v).count()
}

impl Params {
    pub fn resolved(mut self, base: &Path) -> Self {
        if let Some(f) = self.compare.as_mut().and_then(|c| c.fixture.as_mut()) {
            *f = resolve(base, f);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hopf.is_none() && self.compare.is_none() {
            return Err(Error::Config("enable at least one of hopf, compare".into()));
        }
        if let Some(h) = &self.hopf {
            h.cut.validate()?;
            h.grid.build()?;
            if !(h.dtau > 0.0) || h.taus.is_empty() || h.taus.iter().any(|t| !(*t >= 0.0)) {
                return Err(Error::Config("hopf needs dtau > 0 and nonnegative taus".into()));
            }
            if !(h.small_tau > 0.0) {
                return Err(Error::Config("hopf.small_tau must be positive".into()));
            }
            if let Some(r) = &h.refine {
                r.grid.build()?;
                if !(r.dtaus[0] > r.dtaus[1] && r.dtaus[1] > 0.0 && r.tau >= 0.0) {
                    return Err(Error::Config("refine.dtaus must decrease and stay positive".into()));
                }
            }
        }
        if let Some(c) = &self.compare {
            c.config.validate()?;
            if c.widths.is_empty() {
                return Err(Error::Config("compare.widths is empty".into()));
            }
            for &w in &c.widths {
                NarrowCutParams::new(c.lambda, w * c.lambda * c.lambda)?;
            }
            if let Some(f) = &c.fixture {
                read_table(f)?;
            }
        }
        Ok(())
    }

    pub fn run(&self, out: &mut Out, threads: usize) -> Result<()> {
        if let Some(h) = &self.hopf {
            out.stage("narrow_cut", "hopf_residual");
            let (rv, rz) = hopf_residual(&h.cut, &h.grid.build()?, &h.taus, h.dtau)?;
            out.below("hopf_residual_v", rv, 1e-7, "max|V_tau - iVV'|");
            out.below("hopf_residual_z", rz, 1e-7, "max|z_tau - iVz'|");
            let mut summary = serde_json::json!({ "residual_v": rv, "residual_z": rz });
            if let Some(r) = &h.refine {
                let grid = r.grid.build()?;
                let coarse = hopf_residual(&h.cut, &grid, &[r.tau], r.dtaus[0])?;
                let fine = hopf_residual(&h.cut, &grid, &[r.tau], r.dtaus[1])?;
                let expect = (r.dtaus[0] / r.dtaus[1]).powi(2);
                let ratios = [coarse.0 / fine.0, coarse.1 / fine.1];
                let off = ratios.iter().map(|q| (q / expect - 1.0).abs()).fold(0.0, f64::max);
                out.below(
                    "refinement_ratio",
                    off,
                    0.075,
                    "relative distance of the residual ratio from the second-order value",
                );
                summary["refinement_ratios"] = serde_json::json!(ratios);
            }
            out.stage("narrow_cut", "hopf_v");
            let mut worst = 0.0f64;
            for &chi in &h.small_tau_points {
                let v = hopf_v(&h.cut, chi, h.small_tau)?;
                let pole = h.cut.amp / (h.cut.lambda + Cplx::i() * chi);
                worst = worst.max((v - pole).norm());
            }
            out.below("small_tau_limit", worst, 1e-6, "|V(tau) - A/(lambda + i chi)| at small tau");
            summary["small_tau_error"] = serde_json::json!(worst);
            out.json("hopf.json", &summary);
        }
        if let Some(c) = &self.compare {
            out.stage("narrow_cut", "compare_full");
            let table = compare_full(c.lambda, &c.widths, &c.config, threads)?;
            out.file("convergence.csv", table.to_csv());
            out.json("table.json", &table);
            out.below(
                "monotone",
                monotone_violations(&table) as f64,
                0.5,
                "count of in-regime widths whose error does not fall with the width",
            );
            if let Some(f) = &c.fixture {
                let stored = read_table(f)?;
                let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / b.abs().max(f64::MIN_POSITIVE) };
                let diff = if stored.len() != table.rows.len() {
                    f64::INFINITY
                } else {
                    stored
                        .iter()
                        .zip(&table.rows)
                        .map(|(s, r)| {
                            rel(r.width, s[0]).max(rel(r.max_rel_err_v, s[1])).max(rel(r.t_window, s[2]))
                        })
                        .fold(0.0, f64::max)
                };
                out.below("fixture_match", diff, c.fixture_rtol, "max relative difference from the stored table");
            }
        }
        Ok(())
    }
}
