use std::path::{Path, PathBuf};

use confsurf::dyachenko::{reconstruct_surface_detrended, simulate, Background, SimConfig, State};
use confsurf::{ComplexField, Cplx, Error, Grid, RationalFn, Result};
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::check::Out;
use crate::config::resolve;

pub const CHECKS: &[&str] = &["I_drift", "J_law", "J_law_literal"];

/// Initial `R − 1` and `V`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// `R = 1`, `V = 0`.
    Rest,
    /// Lower-analytic rationals, sampled as periodic image sums.
    Rational { r: RationalFn, v: RationalFn },
    /// Field files with header `u,re,im` and one row per grid point.
    Csv { r: PathBuf, v: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default)]
    pub grid: GridSpec,
    pub initial: Initial,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub sim: SimConfig,
}

/// Reads a `u,re,im` field file onto `grid`.
pub fn read_field_csv(path: &Path, grid: &Grid) -> Result<ComplexField> {
    let bad = |m: String| Error::Config(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("u,re,im") {
        return Err(bad("expected header u,re,im".into()));
    }
    let mut samples = Vec::with_capacity(grid.n());
    for (j, line) in lines.enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", j + 1)))?;
        if cols.len() != 3 {
            return Err(bad(format!("row {} has {} columns", j + 1, cols.len())));
        }
        if j < grid.n() && (cols[0] - grid.u(j)).abs() > 1e-9 * grid.length() {
            return Err(bad(format!("row {} is at u = {}, grid point is {}", j + 1, cols[0], grid.u(j))));
        }
        samples.push(Cplx::new(cols[1], cols[2]));
    }
    if samples.len() != grid.n() {
        return Err(bad(format!("{} rows for a grid of {}", samples.len(), grid.n())));
    }
    ComplexField::from_samples(grid, samples)
}

impl Params {
    pub fn resolved(mut self, base: &Path) -> Self {
        if let Initial::Csv { r, v } = &mut self.initial {
            *r = resolve(base, r);
            *v = resolve(base, v);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.sim.validate()?;
        if !self.t0.is_finite() {
            return Err(Error::Config("t0 must be finite".into()));
        }
        match &self.initial {
            Initial::Rest => {}
            Initial::Rational { r, v } => {
                if !(r.is_lower_analytic() && v.is_lower_analytic()) {
                    return Err(Error::Config("initial r and v must have all poles in the upper half plane".into()));
                }
            }
            Initial::Csv { r, v } => {
                read_field_csv(r, &grid)?;
                read_field_csv(v, &grid)?;
            }
        }
        Ok(())
    }

    fn initial_state(&self, grid: &Grid) -> Result<State<f64>> {
        match &self.initial {
            Initial::Rest => {
                let mut s = State::rest(grid);
                s.t = self.t0;
                Ok(s)
            }
            Initial::Rational { r, v } => State::from_rational(grid, r, v, self.t0),
            Initial::Csv { r, v } => State::new(
                read_field_csv(r, grid)?,
                read_field_csv(v, grid)?,
                self.t0,
                Background::Quiescent,
            ),
        }
    }

    pub fn run(&self, out: &mut Out) -> Result<()> {
        let grid = self.grid.build()?;
        out.stage("dyachenko", "State::new");
        let s0 = self.initial_state(&grid)?;
        out.stage("dyachenko", "simulate");
        let traj = simulate(s0, &self.sim)?;
        out.file("trajectory.jsonl", traj.to_jsonl());
        let last = traj.last();
        // same convention as the CSV input, so a final state can seed a new run
        out.file("final_r.csv", last.r.to_csv());
        out.file("final_v.csv", last.v.to_csv());
        out.stage("dyachenko", "reconstruct_surface");
        let (shape, drift) = reconstruct_surface_detrended(last)?;
        out.file("final_surface.csv", shape.to_csv());
        out.json(
            "summary.json",
            &serde_json::json!({
                "steps_recorded": traj.records.len(),
                "t_final": last.t,
                "surface_drift": [drift.re, drift.im],
            }),
        );

        out.stage("dyachenko", "conserved_line");
        let line: Vec<(f64, Cplx, Cplx)> = traj
            .records
            .iter()
            .filter_map(|r| Some((r.t, r.i_bar?, r.j?)))
            .map(|(t, i, j)| (t, Cplx::new(i[0], i[1]), Cplx::new(j[0], j[1])))
            .collect();
        if let Some(&(t0, i0, j0)) = line.first() {
            let g = self.sim.g;
            let i_drift = line.iter().map(|(_, i, _)| (i - i0).norm()).fold(0.0, f64::max) / (i0.norm() + 1.0);
            out.below("I_drift", i_drift, 1e-9, "max|I(t) - I(0)| / (|I(0)| + 1)");
            let j_law = |offset: f64| {
                line.iter()
                    .map(|(t, _, j)| (j - (j0 - g * (i0 + offset) * (t - t0))).norm())
                    .fold(0.0, f64::max)
            };
            out.below("J_law", j_law(0.0), 1e-8, "max|J(t) - (J(0) - g I t)|");
            if g > 0.0 {
                out.below(
                    "J_law_literal",
                    j_law(grid.length()),
                    1e-8,
                    "max|J(t) - (J(0) - g (I + L) t)|, the stated law; the derived one is J_law",
                );
            }
        }
        Ok(())
    }
}
