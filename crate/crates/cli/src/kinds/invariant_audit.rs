use std::f64::consts::PI;

use confsurf::dyachenko::{simulate, Background, SimConfig, State};
use confsurf::invariants::{contour_ij, find_zero, track_zeros, zero_constants, zero_pole_factor, ContourSpec};
use confsurf::{ComplexField, Cplx, Error, RationalFn, Result};
use serde::Deserialize;

use super::GridSpec;
use crate::check::{row, sci, Out};

pub const CHECKS: &[&str] = &[
    "a_drift",
    "b_slope",
    "b_slope_literal",
    "lambda_dot",
    "lambda_dot_literal",
    "contour_I_drift",
    "contour_J_law",
    "contour_deformation",
    "residue_identity",
];

/// Seeded state: `R` is the periodic zero–pole factor with its zero at `zero`
/// and its pole at `pole`; `V` is a lower-analytic rational.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub grid: GridSpec,
    pub zero: Cplx,
    pub pole: Cplx,
    pub v: RationalFn,
    pub sim: SimConfig,
    /// Starting guesses for the zero tracker; defaults to `zero`.
    pub guesses: Option<Vec<Cplx>>,
    pub zero_laws: bool,
    /// The first contour must enclose `zero`; the others are deformations of it.
    pub contours: Vec<ContourSpec>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                n: 1024,
                length: 32.0 * PI,
            },
            zero: Cplx::new(0.3, 0.8),
            pole: Cplx::new(0.0, 5.0),
            v: RationalFn::pole(Cplx::new(-0.5, 4.5), 1, Cplx::new(0.3, -0.2)).expect("pole off the axis"),
            sim: SimConfig {
                g: 1.0,
                dt: 0.005,
                t_end: 0.5,
                stride: 2,
                ..SimConfig::default()
            },
            guesses: None,
            zero_laws: true,
            contours: Vec::new(),
        }
    }
}

fn max_over(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.sim.validate()?;
        if !(self.zero.im > 0.0 && self.pole.im > 0.0) || self.zero == self.pole {
            return Err(Error::Config("zero and pole must be distinct points in the upper half plane".into()));
        }
        if !self.v.is_lower_analytic() {
            return Err(Error::Config("v must have all poles in the upper half plane".into()));
        }
        for c in &self.contours {
            if !(c.radius > 0.0) || c.n_nodes < 8 {
                return Err(Error::Config("contours need radius > 0 and at least 8 nodes".into()));
            }
        }
        if let Some(first) = self.contours.first() {
            if (self.zero - first.center).norm() >= first.radius {
                return Err(Error::Config("the first contour must enclose the seeded zero".into()));
            }
        }
        if !self.zero_laws && self.contours.is_empty() {
            return Err(Error::Config("nothing to audit: enable zero_laws or give contours".into()));
        }
        Ok(())
    }

    pub fn run(&self, out: &mut Out, threads: usize) -> Result<()> {
        let grid = self.grid.build()?;
        out.stage("invariants", "zero_pole_factor");
        let r = zero_pole_factor(&grid, self.zero, self.pole)?;
        let s0 = State::new(
            r.add_const(Cplx::new(-1.0, 0.0)),
            ComplexField::from_rational(&grid, &self.v),
            0.0,
            Background::Quiescent,
        )?;
        out.stage("dyachenko", "simulate");
        let traj = simulate(s0, &self.sim)?;
        let g = self.sim.g;

        if self.zero_laws {
            out.stage("invariants", "track_zeros");
            let guesses = self.guesses.clone().unwrap_or_else(|| vec![self.zero]);
            let tracks = track_zeros(&traj.snapshots, &guesses, threads)?;
            let reports: Vec<_> = tracks.iter().map(|t| t.report(g)).collect();
            for (k, t) in tracks.iter().enumerate() {
                out.file(&format!("zero_track_{k}.csv"), t.to_csv());
            }
            out.json("laws.json", &reports);
            let worst = |f: &dyn Fn(&confsurf::invariants::LawReport) -> f64| max_over(reports.iter().map(f));
            out.below("a_drift", worst(&|r| r.a_drift), 1e-6, "max|a(t) - a(0)|");
            out.below("b_slope", worst(&|r| r.b_slope_err_g), 1e-5, "slope of b against -g, relative");
            out.below(
                "b_slope_literal",
                worst(&|r| r.b_slope_err_ga),
                1e-5,
                "slope of b against -g a(0), relative; the derived law is b_slope",
            );
            out.below("lambda_dot", worst(&|r| r.mismatch_minus_iu), 1e-5, "max|dλ/dt + iU(λ)|");
            out.below(
                "lambda_dot_literal",
                worst(&|r| r.mismatch_plus_iu),
                1e-5,
                "max|dλ/dt - iU(λ)|; the derived law is lambda_dot",
            );
        }

        if !self.contours.is_empty() {
            out.stage("invariants", "contour_ij");
            let mut csv = String::from("t,contour,re_I,im_I,re_J,im_J\n");
            let mut ij = Vec::with_capacity(traj.snapshots.len());
            for s in &traj.snapshots {
                let vals = self.contours.iter().map(|c| contour_ij(s, c)).collect::<Result<Vec<_>>>()?;
                for (k, (i, j)) in vals.iter().enumerate() {
                    csv.push_str(&format!("{},{k},", sci(s.t)));
                    csv.push_str(&row(&[i.re, i.im, j.re, j.im]));
                }
                ij.push((s.t, vals));
            }
            out.file("contours.csv", csv);
            let (t0, first) = (&ij[0].0, &ij[0].1);
            let i_drift = max_over(ij.iter().flat_map(|(_, v)| v.iter().zip(first).map(|((i, _), (i0, _))| (i - i0).norm())));
            let j_law = max_over(ij.iter().flat_map(|(t, v)| {
                v.iter().zip(first).map(move |((_, j), (i0, j0))| (j - (j0 - g * i0 * (t - t0))).norm())
            }));
            out.below("contour_I_drift", i_drift, 1e-7, "max|I(t) - I(0)|");
            out.below("contour_J_law", j_law, 1e-7, "max|J(t) - (J(0) - g I t)|");
            if self.contours.len() > 1 {
                let deform = max_over(ij.iter().flat_map(|(_, v)| {
                    v.iter().map(|(i, j)| (i - v[0].0).norm().max((j - v[0].1).norm()))
                }));
                out.below("contour_deformation", deform, 1e-7, "max difference of I and J between contours");
            }
            out.stage("invariants", "zero_constants");
            let s = &traj.snapshots[0];
            let lambda = find_zero(&s.big_r(), self.zero)?;
            let (a, _) = zero_constants(&s.big_r(), &s.big_v(), lambda)?;
            let res = (first[0].0 / (2.0 * PI * Cplx::i()) - 1.0 / a).norm();
            out.below("residue_identity", res, 1e-7, "|I/(2 pi i) - 1/a| at t = 0");
        }
        Ok(())
    }
}
