use confsurf::compressed_fluid::{lh_bernoulli_residual, lh_eval, LhParams};
use confsurf::selfsimilar::{gravity_exponent_check, residual_report, Admissible, SelfSimilarProfile};
use confsurf::{Error, Result};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Deserialize;

use super::GridSpec;
use crate::check::{row, Out};

pub const CHECKS: &[&str] = &[
    "lh_bernoulli",
    "lh_surface_pressure",
    "lh_harmonicity",
    "profile_residual",
    "gravity_exponent",
];

/// Random interior points of the compressed fluid, `y < 0`.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lh {
    pub t0: f64,
    pub t: f64,
    pub points: usize,
    pub seed: u64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Step of the five-point Laplacian; exact for the quadratic potential,
    /// so only round-off is measured.
    pub h: f64,
}

impl Default for Lh {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t: 1.0,
            points: 100,
            seed: 20_240_601,
            x_range: [-2.0, 2.0],
            y_range: [-2.0, 0.0],
            h: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lh: Option<Lh>,
    pub profile: SelfSimilarProfile,
    pub grid: GridSpec,
    pub g_values: Vec<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lh: Some(Lh::default()),
            profile: SelfSimilarProfile::anchor(),
            grid: GridSpec::default(),
            g_values: vec![0.0, 1.0],
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        SelfSimilarProfile::new(self.profile.alpha_exp, self.profile.z0.clone(), self.profile.phi0.clone())?;
        if let Some(lh) = &self.lh {
            let ok_range = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
            if lh.points == 0 || !(lh.h > 0.0) || !ok_range(lh.x_range) || !ok_range(lh.y_range) {
                return Err(Error::Config("lh needs points >= 1, h > 0 and increasing ranges".into()));
            }
            if lh.t == lh.t0 {
                return Err(Error::SingularTime(lh.t));
            }
        }
        if self.g_values.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("g_values must be finite".into()));
        }
        Ok(())
    }

    pub fn run(&self, out: &mut Out) -> Result<()> {
        if let Some(lh) = &self.lh {
            out.stage("compressed_fluid", "lh_eval");
            let p = LhParams { t0: lh.t0 };
            let mut rng = StdRng::seed_from_u64(lh.seed);
            let mut csv = String::from("x,y,phi,p,bernoulli,laplacian\n");
            let (mut bern, mut lap, mut surf) = (0.0f64, 0.0f64, 0.0f64);
            let phi = |x: f64, y: f64| lh_eval(p, x, y, lh.t).map(|v| v.0);
            for _ in 0..lh.points {
                let x = rng.gen_range(lh.x_range[0]..lh.x_range[1]);
                // open interval: the surface itself is checked separately
                let y = loop {
                    let y = rng.gen_range(lh.y_range[0]..lh.y_range[1]);
                    if y != lh.y_range[0] {
                        break y;
                    }
                };
                let (ph, pr) = lh_eval(p, x, y, lh.t)?;
                let b = lh_bernoulli_residual(p, x, y, lh.t)?;
                let h = lh.h;
                let l = (phi(x + h, y)? + phi(x - h, y)? + phi(x, y + h)? + phi(x, y - h)? - 4.0 * ph) / (h * h);
                let (_, p_surface) = lh_eval(p, x, 0.0, lh.t)?;
                bern = bern.max(b.abs());
                lap = lap.max(l.abs());
                surf = surf.max(p_surface.abs());
                csv.push_str(&row(&[x, y, ph, pr, b, l]));
            }
            out.file("lh_points.csv", csv);
            out.below("lh_bernoulli", bern, 1e-12, "max|Phi_t + |grad Phi|^2/2 + P|");
            out.below("lh_surface_pressure", surf, 1e-12, "max|P(x, 0)|");
            out.below("lh_harmonicity", lap, 1e-10, "max|five-point Laplacian of Phi|");
        }
        out.stage("selfsimilar", "residual_profile");
        let rep = residual_report(&self.profile, &self.grid.build()?)?;
        out.json("residual.json", &rep);
        out.below("profile_residual", rep.res1.max(rep.res2), 1e-9, "max of the two profile residuals");

        out.stage("selfsimilar", "gravity_exponent_check");
        let reports = self
            .g_values
            .iter()
            .map(|&g| gravity_exponent_check(g))
            .collect::<Result<Vec<_>>>()?;
        out.json("exponents.json", &reports);
        let off = reports
            .iter()
            .map(|r| match r.admissible {
                Admissible::Unique(a) => (a - 2.0).abs(),
                Admissible::All => 0.0,
            })
            .fold(0.0, f64::max);
        if reports.iter().any(|r| r.g != 0.0) {
            out.below("gravity_exponent", off, 1e-12, "|alpha - 2| for the runs with gravity");
        }
        Ok(())
    }
}
