//! Zeros of `R` in the upper half plane and the contour integrals built on
//! `1/R`.
//!
//! Near a zero `R = a(w − λ) + ⋯` and `V = b + ⋯`. Evaluating
//! `R_t = i(UR' − RU')` and the `V` equation at `λ` gives
//!
//! ```text
//! λ̇ = −iU(λ),   ȧ = 0,   ḃ = −g
//! ```
//!
//! and for a closed contour `Γ` avoiding the singularities,
//! `I = ∮ dw/R` is conserved while `J = ∮ V/R dw` obeys `J̇ = −gI`.
//! The readings `λ̇ = +iU` and `ḃ = −g·a` are measured too, for comparison.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dyachenko::{compute_aux, State};
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

type C = Complex<f64>;

const I: C = C { re: 0.0, im: 1.0 };

/// Newton stops once `|R(λ)| < ZERO_TOL·max|R|`.
pub const ZERO_TOL: f64 = 1e-10;
pub const MAX_NEWTON: usize = 50;
/// Smallest `|R|` tolerated on a contour node.
pub const CONTOUR_MIN_ABS_R: f64 = 1e-6;

/// Periodic counterpart of `(w − λ)/(w − μ)` on the grid's box:
/// `e^{iπ(λ−μ)/L} sin(π(w−λ)/L) / sin(π(w−μ)/L)`. It tends to 1 at
/// `w → −i∞` and has its only zero in each period exactly at `λ`.
pub fn zero_pole_factor(grid: &Grid<f64>, lambda: C, mu: C) -> Result<ComplexField<f64>> {
    if !(lambda.im > 0.0 && mu.im > 0.0) {
        return Err(Error::Config("zero and pole must lie in the upper half plane".into()));
    }
    let l = grid.length();
    let phase = (I * PI * (lambda - mu) / l).exp();
    Ok(ComplexField::from_fn(grid, |u| {
        let w = C::new(u, 0.0);
        phase * (PI * (w - lambda) / l).sin() / (PI * (w - mu) / l).sin()
    }))
}

/// `R'(λ)` of [`zero_pole_factor`]; tends to `1/(λ − μ)` as `L → ∞`.
pub fn zero_pole_slope(length: f64, lambda: C, mu: C) -> C {
    let phase = (I * PI * (lambda - mu) / length).exp();
    phase * (PI / length) / (PI * (lambda - mu) / length).sin()
}

/// A field prepared for evaluation above the axis: the mean is split off so
/// that the truncation floor is set by the oscillating part alone.
struct Continued {
    mean: C,
    osc: ComplexField<f64>,
    deriv: ComplexField<f64>,
}

fn validity(e: Error, w: C) -> Error {
    match e {
        Error::ContinuationUnreliable { height, estimate } => Error::LeftValidityRegion(format!(
            "w = {w}: continuation to height {height} has estimated error {estimate:e}"
        )),
        other => other,
    }
}

impl Continued {
    fn new(f: &ComplexField<f64>) -> Self {
        let mean = f.mean();
        Self {
            mean,
            osc: f.add_const(-mean),
            // differentiation lifts the aliased tail near Nyquist; the
            // derivative only steers Newton, so that tail is dropped
            deriv: f.deriv().drop_positive_modes(),
        }
    }

    fn value(&self, w: C) -> Result<C> {
        Ok(self.mean + self.osc.eval_offaxis(w).map_err(|e| validity(e, w))?)
    }

    fn slope(&self, w: C) -> Result<C> {
        self.deriv.eval_offaxis(w).map_err(|e| validity(e, w))
    }
}

/// Newton iteration for a zero of the continued `R`, started at `guess`.
pub fn find_zero(r: &ComplexField<f64>, guess: C) -> Result<C> {
    if !(guess.im > 0.0) {
        return Err(Error::Config(format!("guess {guess} must lie above the axis")));
    }
    let f = Continued::new(r);
    let target = ZERO_TOL * r.max_abs();
    let mut w = guess;
    let mut val = f.value(w)?;
    for _ in 0..MAX_NEWTON {
        if val.norm() < target {
            return Ok(w);
        }
        let slope = f.slope(w)?;
        let step = val / slope;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if !(w.im > 0.0) {
            return Err(Error::LeftValidityRegion(format!("Newton iterate {w} left the upper half plane")));
        }
        val = f.value(w)?;
    }
    if val.norm() < target {
        return Ok(w);
    }
    Err(Error::NoConvergence { residual: val.norm() })
}

/// `a = R'(λ)` and `b = V(λ)` at a verified zero.
pub fn zero_constants(r: &ComplexField<f64>, v: &ComplexField<f64>, lambda: C) -> Result<(C, C)> {
    let f = Continued::new(r);
    let at = f.value(lambda)?;
    if !(at.norm() < 1e3 * ZERO_TOL * r.max_abs()) {
        return Err(Error::Config(format!("|R({lambda})| = {:e} is not a zero", at.norm())));
    }
    let a = f.slope(lambda)?;
    let b = Continued::new(v).value(lambda)?;
    Ok((a, b))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroTrack {
    pub times: Vec<f64>,
    pub lambda_n: Vec<C>,
    pub a_n: Vec<C>,
    pub b_n: Vec<C>,
    #[serde(rename = "U_at_zero")]
    pub u_at_zero: Vec<C>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    /// `max|λ̇ − iU(λ)|` over interior records.
    pub mismatch_plus_iu: f64,
    /// `max|λ̇ + iU(λ)|`, the law that follows from the `R` equation.
    pub mismatch_minus_iu: f64,
    pub a_drift: f64,
    /// Least-squares slope of `b(t)`.
    pub b_slope: C,
    /// Max deviation of `b(t)` from its linear fit.
    pub b_fit_residual: f64,
    /// `|slope + g·a(0)| / |g·a(0)|` (absolute when `g = 0`).
    pub b_slope_err_ga: f64,
    /// `|slope + g| / g` (absolute when `g = 0`).
    pub b_slope_err_g: f64,
}

impl ZeroTrack {
    fn lambda_dot(&self) -> Vec<C> {
        let (t, l) = (&self.times, &self.lambda_n);
        let n = t.len();
        (0..n)
            .map(|k| match (k, n) {
                (_, 0..=1) => C::new(0.0, 0.0),
                (0, _) => (l[1] - l[0]) / (t[1] - t[0]),
                (k, n) if k == n - 1 => (l[k] - l[k - 1]) / (t[k] - t[k - 1]),
                (k, _) => (l[k + 1] - l[k - 1]) / (t[k + 1] - t[k - 1]),
            })
            .collect()
    }

    pub fn report(&self, g: f64) -> LawReport {
        let dots = self.lambda_dot();
        let n = self.times.len();
        let interior = 1..n.saturating_sub(1);
        let mismatch = |sign: f64| {
            interior
                .clone()
                .map(|k| (dots[k] - sign * I * self.u_at_zero[k]).norm())
                .fold(0.0, f64::max)
        };
        let a0 = self.a_n.first().copied().unwrap_or_default();
        let a_drift = self.a_n.iter().map(|a| (a - a0).norm()).fold(0.0, f64::max);
        let (slope, intercept) = linear_fit(&self.times, &self.b_n);
        let b_fit_residual = self
            .times
            .iter()
            .zip(&self.b_n)
            .map(|(t, b)| (b - (intercept + slope * t)).norm())
            .fold(0.0, f64::max);
        let rel = |err: f64, scale: f64| if scale == 0.0 { err } else { err / scale };
        LawReport {
            mismatch_plus_iu: mismatch(1.0),
            mismatch_minus_iu: mismatch(-1.0),
            a_drift,
            b_slope: slope,
            b_fit_residual,
            b_slope_err_ga: rel((slope + g * a0).norm(), (g * a0).norm()),
            b_slope_err_g: rel((slope + g).norm(), g),
        }
    }

    /// `t, Re λ, Im λ, Re a, Im a, Re b, Im b, |λ̇ − iU(λ)|`, with one-sided
    /// differences at the two ends.
    pub fn to_csv(&self) -> String {
        let dots = self.lambda_dot();
        let mut out = String::from("t,re_lambda,im_lambda,re_a,im_a,re_b,im_b,lambda_dot_minus_iU\n");
        for k in 0..self.times.len() {
            let (l, a, b) = (self.lambda_n[k], self.a_n[k], self.b_n[k]);
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[k],
                l.re,
                l.im,
                a.re,
                a.im,
                b.re,
                b.im,
                (dots[k] - I * self.u_at_zero[k]).norm()
            );
        }
        out
    }
}

/// Least-squares line `b ≈ b₀ + s·t`; returns `(s, b₀)`.
fn linear_fit(t: &[f64], b: &[C]) -> (C, C) {
    let n = t.len() as f64;
    if t.len() < 2 {
        return (C::new(0.0, 0.0), b.first().copied().unwrap_or_default());
    }
    let tm = t.iter().sum::<f64>() / n;
    let bm = b.iter().sum::<C>() / n;
    let var: f64 = t.iter().map(|t| (t - tm) * (t - tm)).sum();
    let cov: C = t.iter().zip(b).map(|(t, b)| (b - bm) * (t - tm)).sum();
    let s = cov / var;
    (s, bm - s * tm)
}

fn track_one(snapshots: &[State<f64>], guess: C) -> Result<ZeroTrack> {
    let mut track = ZeroTrack::default();
    let mut w = guess;
    for state in snapshots {
        let r = state.big_r();
        let lost = |e: Error| Error::TrackLost {
            last_good_time: track.times.last().copied().unwrap_or(f64::NAN),
            reason: e.to_string(),
        };
        w = find_zero(&r, w).map_err(lost)?;
        let (a, b) = zero_constants(&r, &state.big_v(), w).map_err(lost)?;
        let u = Continued::new(&compute_aux(state, true).u).value(w).map_err(lost)?;
        track.times.push(state.t);
        track.lambda_n.push(w);
        track.a_n.push(a);
        track.b_n.push(b);
        track.u_at_zero.push(u);
    }
    Ok(track)
}

/// Follows each zero through `snapshots`, starting from `guesses`, one
/// worker thread per zero up to `threads`. Tracks come back in guess order.
pub fn track_zeros(snapshots: &[State<f64>], guesses: &[C], threads: usize) -> Result<Vec<ZeroTrack>> {
    let threads = threads.clamp(1, guesses.len().max(1));
    let chunk = guesses.len().div_ceil(threads).max(1);
    let mut slots: Vec<Option<Result<ZeroTrack>>> = vec![None; guesses.len()];
    std::thread::scope(|scope| {
        for (gs, out) in guesses.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (g, slot) in gs.iter().zip(out) {
                    *slot = Some(track_one(snapshots, *g));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every slot is filled"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub center: C,
    pub radius: f64,
    #[serde(default = "default_nodes")]
    pub n_nodes: usize,
}

fn default_nodes() -> usize {
    256
}

impl ContourSpec {
    pub fn new(center: C, radius: f64) -> Self {
        Self {
            center,
            radius,
            n_nodes: default_nodes(),
        }
    }

    fn nodes(&self) -> impl Iterator<Item = (C, C)> + '_ {
        let n = self.n_nodes;
        (0..n).map(move |k| {
            let e = (I * (2.0 * PI * k as f64 / n as f64)).exp();
            // node and dw/dθ·Δθ
            (self.center + self.radius * e, I * self.radius * e * (2.0 * PI / n as f64))
        })
    }
}

/// `I = ∮ dw/R` and `J = ∮ V/R dw` by the trapezoid rule on a circle.
pub fn contour_ij(state: &State<f64>, contour: &ContourSpec) -> Result<(C, C)> {
    if !(contour.radius > 0.0) || contour.n_nodes < 8 {
        return Err(Error::Config("contour needs radius > 0 and at least 8 nodes".into()));
    }
    let r = Continued::new(&state.big_r());
    let v = Continued::new(&state.big_v());
    let (mut i_sum, mut j_sum) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
    let mut min_abs = f64::INFINITY;
    for (w, dw) in contour.nodes() {
        let rw = r.value(w)?;
        min_abs = min_abs.min(rw.norm());
        i_sum += dw / rw;
        j_sum += v.value(w)? * dw / rw;
    }
    if min_abs < CONTOUR_MIN_ABS_R {
        return Err(Error::ContourThroughZero { min_abs });
    }
    Ok((i_sum, j_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::RationalFn;
    use crate::dyachenko::{simulate, Background, SimConfig};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn box_grid() -> Grid<f64> {
        Grid::new(1024, 32.0 * PI).unwrap()
    }

    fn state(r: ComplexField<f64>, v: ComplexField<f64>) -> State<f64> {
        State::new(r.add_const(c(-1.0, 0.0)), v, 0.0, Background::Quiescent).unwrap()
    }

    #[test]
    fn factor_is_normalized_and_vanishes_at_lambda() {
        let g = box_grid();
        let (lambda, mu) = (c(1.0, 2.0), c(0.0, 3.0));
        let r = zero_pole_factor(&g, lambda, mu).unwrap();
        assert!((r.mean() - 1.0).norm() < 1e-12);
        assert!(r.is_lower_analytic());
        let a = zero_pole_slope(g.length(), lambda, mu);
        // normalizing to 1 at −i∞ costs a phase e^{iπ(λ−μ)/L} = 1 + O(1/L)
        assert!((a - 1.0 / (lambda - mu)).norm() < 2.0 * PI / g.length());
    }

    #[test]
    fn zero_at_two_thirds_of_pole_height_is_out_of_reach() {
        // continuation error at height y below a singularity at σ scales like
        // ε^{1 − y/σ}; at y/σ = 2/3 it exceeds the 1e-5 ceiling, so the
        // search refuses to start rather than return a 1e-4 answer
        let g = Grid::new(2048, 128.0 * PI).unwrap();
        let (lambda, mu) = (c(1.0, 2.0), c(0.0, 3.0));
        let r = zero_pole_factor(&g, lambda, mu).unwrap();
        assert!(matches!(find_zero(&r, c(1.1, 1.9)), Err(Error::LeftValidityRegion(_))));
    }

    #[test]
    fn low_zero_to_1e_8() {
        let g = Grid::new(2048, 128.0 * PI).unwrap();
        let (lambda, mu) = (c(1.0, 0.75), c(0.0, 3.0));
        let r = zero_pole_factor(&g, lambda, mu).unwrap();
        let z = find_zero(&r, c(1.1, 0.7)).unwrap();
        assert!((z - lambda).norm() < 1e-8, "{:e}", (z - lambda).norm());
    }

    #[test]
    fn no_zero_to_find() {
        let g = box_grid();
        let r = ComplexField::constant(&g, c(1.0, 0.0));
        assert!(matches!(find_zero(&r, c(0.3, 1.0)), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn guess_above_validity_is_refused() {
        let g = box_grid();
        let r = zero_pole_factor(&g, c(0.0, 0.5), c(0.0, 2.0)).unwrap();
        assert!(matches!(find_zero(&r, c(0.0, 2.5)), Err(Error::LeftValidityRegion(_))));
    }

    #[test]
    fn two_zeros_two_basins() {
        let g = box_grid();
        let (l1, l2) = (c(-1.0, 0.8), c(1.5, 1.0));
        let r = zero_pole_factor(&g, l1, c(-1.0, 4.0))
            .unwrap()
            .mul(&zero_pole_factor(&g, l2, c(1.5, 4.0)).unwrap());
        assert!((find_zero(&r, c(-0.8, 0.9)).unwrap() - l1).norm() < 1e-8);
        assert!((find_zero(&r, c(1.3, 1.1)).unwrap() - l2).norm() < 1e-8);
    }

    #[test]
    fn constants_at_a_zero() {
        let g = box_grid();
        let (lambda, mu, nu) = (c(1.0, 1.0), c(0.0, 4.0), c(-0.5, 3.5));
        let r = zero_pole_factor(&g, lambda, mu).unwrap();
        let (a, b) = zero_constants(&r, &ComplexField::zeros(&g), lambda).unwrap();
        assert!((a - zero_pole_slope(g.length(), lambda, mu)).norm() < 1e-9);
        assert_eq!(b, c(0.0, 0.0));
        let vr = RationalFn::pole(nu, 1, c(0.3, -0.2)).unwrap();
        let v = ComplexField::from_rational(&g, &vr);
        let (_, b) = zero_constants(&r, &v, lambda).unwrap();
        assert!((b - vr.eval_periodic(lambda, g.length())).norm() < 1e-9);
        // the line value differs only by the image sum
        assert!((b - vr.eval(lambda).unwrap()).norm() < 0.05);
    }

    #[test]
    fn contour_integrals_and_residue_identity() {
        let g = box_grid();
        // poles well above the contour keep the truncation floor, amplified
        // to the top node, below 1e-8
        let (lambda, mu) = (c(0.3, 0.8), c(0.0, 5.0));
        let rest = state(ComplexField::constant(&g, c(1.0, 0.0)), ComplexField::zeros(&g));
        let (i0, j0) = contour_ij(&rest, &ContourSpec::new(c(0.0, 1.0), 0.5)).unwrap();
        assert!(i0.norm() < 1e-14 && j0.norm() < 1e-14);

        let st = state(zero_pole_factor(&g, lambda, mu).unwrap(), ComplexField::zeros(&g));
        let (i1, _) = contour_ij(&st, &ContourSpec::new(c(0.3, 0.6), 0.5)).unwrap();
        let (i2, _) = contour_ij(&st, &ContourSpec::new(c(0.4, 0.3), 0.8)).unwrap();
        let a = zero_pole_slope(g.length(), lambda, mu);
        assert!((i1 - 2.0 * PI * I / a).norm() < 1e-7);
        assert!((i1 - i2).norm() < 1e-7);
        let (a_found, _) = zero_constants(&st.big_r(), &st.v, lambda).unwrap();
        assert!((i1 / (2.0 * PI * I) - 1.0 / a_found).norm() < 1e-7);
        // the line residue λ − μ differs from the box one by the phase above
        let line = 2.0 * PI * I * (lambda - mu);
        assert!((i1 / line - 1.0).norm() < 2.0 * PI * (lambda - mu).norm() / g.length());

        let through = ContourSpec::new(lambda + 0.5, 0.5);
        assert!(matches!(contour_ij(&st, &through), Err(Error::ContourThroughZero { .. })));
    }

    fn seeded(g: &Grid<f64>, with_v: bool) -> State<f64> {
        let r = zero_pole_factor(g, c(0.3, 0.8), c(0.0, 5.0)).unwrap();
        let v = if with_v {
            ComplexField::from_rational(g, &RationalFn::pole(c(-0.5, 4.5), 1, c(0.3, -0.2)).unwrap())
        } else {
            ComplexField::zeros(g)
        };
        state(r, v)
    }

    #[test]
    fn stationary_zero() {
        let g = box_grid();
        let cfg = SimConfig {
            dt: 0.01,
            t_end: 0.2,
            stride: 5,
            ..SimConfig::default()
        };
        let traj = simulate(seeded(&g, false), &cfg).unwrap();
        let tracks = track_zeros(&traj.snapshots, &[c(0.35, 0.75)], 1).unwrap();
        let rep = tracks[0].report(0.0);
        assert!(rep.mismatch_minus_iu < 1e-12 && rep.mismatch_plus_iu < 1e-12);
        assert!(rep.a_drift < 1e-12 && rep.b_slope.norm() < 1e-12);
        let csv = tracks[0].to_csv();
        assert_eq!(csv.lines().count(), traj.snapshots.len() + 1);
    }

    #[test]
    fn moving_zero_obeys_minus_i_u() {
        let g = box_grid();
        let cfg = SimConfig {
            g: 1.0,
            dt: 0.005,
            t_end: 0.5,
            stride: 2,
            ..SimConfig::default()
        };
        let traj = simulate(seeded(&g, true), &cfg).unwrap();
        let tracks = track_zeros(&traj.snapshots, &[c(0.3, 0.8), c(0.3, 0.8)], 2).unwrap();
        assert_eq!(tracks[0], tracks[1]);
        let rep = tracks[0].report(1.0);
        assert!(rep.mismatch_minus_iu < 1e-5, "{rep:?}");
        assert!(rep.mismatch_plus_iu > 1e-2, "{rep:?}");
        assert!(rep.a_drift < 1e-6, "{rep:?}");
        assert!(rep.b_slope_err_g < 1e-5, "{rep:?}");
        let moved = (tracks[0].lambda_n.last().unwrap() - tracks[0].lambda_n[0]).norm();
        assert!(moved > 1e-3, "zero moved only {moved:e}");
    }

    #[test]
    fn contour_laws_over_a_run() {
        let g = box_grid();
        let contour = ContourSpec::new(c(0.3, 0.6), 0.5);
        for grav in [0.0, 1.0] {
            let cfg = SimConfig {
                g: grav,
                dt: 0.005,
                t_end: 0.5,
                stride: 10,
                ..SimConfig::default()
            };
            let traj = simulate(seeded(&g, true), &cfg).unwrap();
            let ij: Vec<(C, C)> = traj.snapshots.iter().map(|s| contour_ij(s, &contour).unwrap()).collect();
            let (i0, j0) = ij[0];
            for (s, (i, j)) in traj.snapshots.iter().zip(&ij) {
                assert!((i - i0).norm() < 1e-7, "g {grav}: I drift {:e}", (i - i0).norm());
                let expect = j0 - grav * i0 * s.t;
                assert!((j - expect).norm() < 1e-6, "g {grav}: J off by {:e}", (j - expect).norm());
            }
        }
    }
}
