use confsurf::compressed_fluid::{loglog_slope, make_exact, make_exact_with, PhiReading, SeriesSolution};
use confsurf::dyachenko::{field_distance, simulate, SimConfig};
use confsurf::{Cplx, Error, RationalFn, Result};
use serde::Deserialize;

use super::GridSpec;
use crate::check::{row, Out};

pub const CHECKS: &[&str] = &["residual_exact", "residual_literal_min", "solver_field_error", "series_slope_error"];

/// Evenly spaced probe points `u_min..=u_max`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Probe {
    pub u_min: f64,
    pub u_max: f64,
    pub count: usize,
}

impl Default for Probe {
    fn default() -> Self {
        // offset so that no probe lands on u = 0
        Self {
            u_min: -19.9863,
            u_max: 20.0137,
            count: 401,
        }
    }
}

impl Probe {
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| self.u_min + (self.u_max - self.u_min) * k as f64 / (n - 1) as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 || !(self.u_max > self.u_min) || !self.u_min.is_finite() || !self.u_max.is_finite() {
            return Err(Error::Config("probe needs count >= 2 and u_min < u_max".into()));
        }
        Ok(())
    }
}

fn c(re: f64, im: f64) -> Cplx {
    Cplx::new(re, im)
}

fn pole(p: Cplx, order: u32, coeff: Cplx) -> RationalFn {
    RationalFn::pole(p, order, coeff).expect("pole off the axis")
}

/// Ten perturbations with simple and double poles on both sides of the axis.
pub fn default_battery() -> Vec<RationalFn> {
    let mut out: Vec<RationalFn> = [
        (c(0.0, -2.0), c(0.3, 0.0)),
        (c(0.0, 2.0), c(0.3, 0.0)),
        (c(1.0, 1.0), c(0.5, -0.2)),
        (c(-2.0, -0.5), c(0.0, 1.0)),
        (c(0.3, 3.0), c(-1.0, 0.4)),
    ]
    .into_iter()
    .map(|(p, k)| pole(p, 1, k))
    .collect();
    for (p, k) in [(c(0.0, 1.0), c(0.2, 0.0)), (c(0.5, -1.5), c(0.1, 0.3)), (c(-1.0, 2.0), c(0.0, -0.4))] {
        out.push(pole(p, 2, k));
    }
    out.push(pole(c(1.0, 1.0), 1, c(0.2, 0.0)).add(&pole(c(-1.0, 2.0), 1, c(0.0, 0.3))));
    out.push(pole(c(0.0, -1.0), 1, c(0.5, 0.0)).add(&pole(c(2.0, 1.5), 2, c(0.1, 0.1))));
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Residuals {
    pub alphas: Vec<RationalFn>,
    pub times: Vec<f64>,
    pub probe: Probe,
    /// The rejected reading must leave at least this residual.
    pub literal_min: f64,
}

impl Default for Residuals {
    fn default() -> Self {
        Self {
            alphas: default_battery(),
            times: vec![0.5, 1.0, 3.0],
            probe: Probe::default(),
            literal_min: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub alpha: RationalFn,
    pub grid: GridSpec,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub dealias: bool,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            alpha: pole(c(0.2, 3.0), 1, c(0.5, 0.1)),
            grid: GridSpec::default(),
            t0: 1.0,
            t_end: 2.0,
            dt: 1e-3,
            stride: 50,
            dealias: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Series {
    pub alpha: RationalFn,
    pub z1: RationalFn,
    pub times: Vec<f64>,
    pub probe: Probe,
    /// Use `z₂ = Q/u` with its origin term instead of the lower-analytic `z₂`.
    pub alternative: bool,
}

impl Default for Series {
    fn default() -> Self {
        Self {
            alpha: pole(c(0.0, 1.0), 1, c(1.0, 0.0)),
            z1: pole(c(0.0, 2.0), 1, c(1.0, 0.0)),
            times: vec![10.0, 20.0, 40.0],
            probe: Probe::default(),
            alternative: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default)]
    pub residuals: Option<Residuals>,
    #[serde(default)]
    pub solver: Option<Solver>,
    #[serde(default)]
    pub series: Option<Series>,
}

fn positive(ts: &[f64], what: &str) -> Result<()> {
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config(format!("{what} must be a nonempty list of positive times")));
    }
    Ok(())
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.residuals.is_none() && self.solver.is_none() && self.series.is_none() {
            return Err(Error::Config("enable at least one of residuals, solver, series".into()));
        }
        if let Some(r) = &self.residuals {
            if r.alphas.is_empty() {
                return Err(Error::Config("residuals.alphas is empty".into()));
            }
            positive(&r.times, "residuals.times")?;
            r.probe.validate()?;
        }
        if let Some(s) = &self.solver {
            s.grid.build()?;
            if !s.alpha.is_lower_analytic() {
                return Err(Error::Config("solver.alpha must be lower-analytic to seed the solver".into()));
            }
            if !(s.t0 > 0.0 && s.t_end > s.t0) {
                return Err(Error::Config("solver needs 0 < t0 < t_end".into()));
            }
            self.sim(s).validate()?;
        }
        if let Some(s) = &self.series {
            if s.times.len() < 2 {
                return Err(Error::Config("series.times needs at least two times".into()));
            }
            positive(&s.times, "series.times")?;
            s.probe.validate()?;
        }
        Ok(())
    }

    fn sim(&self, s: &Solver) -> SimConfig {
        SimConfig {
            dt: s.dt,
            t_end: s.t_end,
            stride: s.stride,
            dealias: s.dealias,
            ..SimConfig::default()
        }
    }

    pub fn run(&self, out: &mut Out) -> Result<()> {
        if let Some(r) = &self.residuals {
            out.stage("compressed_fluid", "residual_implicit");
            let us = r.probe.points();
            let mut csv = String::from("index,t,res1,res2,res1_literal,res2_literal\n");
            let (mut worst, mut literal_least) = (0.0f64, f64::INFINITY);
            for (k, alpha) in r.alphas.iter().enumerate() {
                let exact = make_exact(alpha)?;
                let literal = make_exact_with(alpha, PhiReading::Literal)?;
                for &t in &r.times {
                    let (a, b) = exact.residual(&us, t)?;
                    let (la, lb) = literal.residual(&us, t)?;
                    worst = worst.max(a.max(b));
                    literal_least = literal_least.min(la.max(lb));
                    csv.push_str(&format!("{k},{}", row(&[t, a, b, la, lb])));
                }
            }
            out.file("residuals.csv", csv);
            out.below("residual_exact", worst, 1e-9, "max residual over the battery, derivative reading");
            out.above(
                "residual_literal_min",
                literal_least,
                r.literal_min,
                "smallest residual of the rejected reading",
            );
        }
        if let Some(s) = &self.solver {
            out.stage("compressed_fluid", "make_exact");
            let grid = s.grid.build()?;
            let sol = make_exact(&s.alpha)?;
            let s0 = sol.state(&grid, s.t0)?;
            out.stage("dyachenko", "simulate");
            let traj = simulate(s0, &self.sim(s))?;
            let mut csv = String::from("t,field_error\n");
            let mut worst = 0.0f64;
            for snap in &traj.snapshots {
                let e = field_distance(snap, &sol.state(&grid, snap.t)?);
                worst = worst.max(e);
                csv.push_str(&row(&[snap.t, e]));
            }
            out.file("solver_error.csv", csv);
            out.below("solver_field_error", worst, 1e-6, "max field error against the closed form");
        }
        if let Some(s) = &self.series {
            out.stage("compressed_fluid", "series_next");
            let sol = SeriesSolution::new(&s.alpha, &s.z1, s.alternative)?;
            let us = s.probe.points();
            let mut csv = String::from("t,residual\n");
            let mut res = Vec::with_capacity(s.times.len());
            for &t in &s.times {
                let (a, b) = sol.residual(&us, t)?;
                res.push(a.max(b));
                csv.push_str(&row(&[t, a.max(b)]));
            }
            let slope = loglog_slope(&s.times, &res);
            out.file("series.csv", csv);
            out.json(
                "series.json",
                &serde_json::json!({ "slope": slope, "solvability": sol.terms.solvability }),
            );
            out.below("series_slope_error", (slope + 3.0).abs(), 0.3, "|log-log slope + 3|");
        }
        Ok(())
    }
}
