//! Method-of-lines integration of the Dyachenko equations for `R = 1/z'`
//! and `V = iRΦ'`:
//!
//! ```text
//! U = P⁻(RV̄ + R̄V),   B = P⁻(VV̄)
//! R_t = i(UR' − RU')
//! V_t = i(UV' − RB') + g(R − 1)
//! ```
//!
//! Two backgrounds are supported. The quiescent one stores `r = R − 1` and
//! `v = V`, both decaying. The compressed-fluid background describes states
//! near `z = ut`, where `R → 1/t` and `V` contains the unbounded part `iw`.
//! There we store `r = R − 1/t` and `ṽ = V − iw`; substituting
//! `U = −iwR + Ũ` makes every unbounded term cancel:
//!
//! ```text
//! Ũ = R∞ P⁻(ṽ + ṽ̄) + P⁻(rṽ̄ + r̄ṽ),   B̃ = P⁻(ṽṽ̄)
//! r_t = −(2R∞r + r²) + i(Ũr' − RŨ')
//! ṽ_t = −Ũ − Rṽ + i(Ũṽ' − RB̃')
//! ```

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analytic::RationalFn;
use crate::error::{Error, Result};
use crate::scalar::{imag_unit, lit, to_f64, Scalar};
use crate::spectral::{ComplexField, Grid};

/// Largest relative positive-mode content tolerated in states and rates.
pub const ANALYTICITY_TOL: f64 = 1e-8;
/// Field magnitude treated as blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Smallest admissible `min |R|` on the grid.
pub const MIN_ABS_R: f64 = 1e-10;
/// Largest admissible mean of `1/R − 1/R∞` for surface reconstruction.
pub const DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    Quiescent,
    Compressed,
}

#[derive(Clone, Debug)]
pub struct State<T: Scalar> {
    /// `R − R∞`.
    pub r: ComplexField<T>,
    /// `V` (quiescent) or `V − iw` (compressed).
    pub v: ComplexField<T>,
    pub t: T,
    pub background: Background,
}

impl<T: Scalar> State<T> {
    pub fn new(r: ComplexField<T>, v: ComplexField<T>, t: T, background: Background) -> Result<Self> {
        if r.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        if background == Background::Compressed && !(t > T::zero()) {
            return Err(Error::Config("compressed background needs t > 0".into()));
        }
        let state = Self {
            r,
            v,
            t,
            background,
        };
        state.check_analytic()?;
        state.check_zeros()?;
        Ok(state)
    }

    /// `R = 1`, `V = 0`.
    pub fn rest(grid: &Grid<T>) -> Self {
        Self {
            r: ComplexField::zeros(grid),
            v: ComplexField::zeros(grid),
            t: T::zero(),
            background: Background::Quiescent,
        }
    }

    /// Quiescent state from rational `R − 1` and `V`, sampled periodically.
    pub fn from_rational(grid: &Grid<T>, r: &RationalFn<T>, v: &RationalFn<T>, t: T) -> Result<Self> {
        Self::new(
            ComplexField::from_rational(grid, r),
            ComplexField::from_rational(grid, v),
            t,
            Background::Quiescent,
        )
    }

    pub fn grid(&self) -> &Grid<T> {
        self.r.grid()
    }

    /// Value of `R` at `w → −i∞`.
    pub fn r_asymptote(&self) -> T {
        match self.background {
            Background::Quiescent => T::one(),
            Background::Compressed => T::one() / self.t,
        }
    }

    pub fn big_r(&self) -> ComplexField<T> {
        self.r.add_const(Complex::new(self.r_asymptote(), T::zero()))
    }

    pub fn big_v(&self) -> ComplexField<T> {
        match self.background {
            Background::Quiescent => self.v.clone(),
            Background::Compressed => {
                let iu = ComplexField::from_fn(self.grid(), |u| Complex::new(T::zero(), u));
                self.v.add(&iu)
            }
        }
    }

    fn check_analytic(&self) -> Result<()> {
        for f in [&self.r, &self.v] {
            let ratio = f.positive_mode_ratio();
            if ratio > lit(ANALYTICITY_TOL) {
                return Err(Error::NotLowerAnalytic {
                    ratio: to_f64(ratio),
                });
            }
        }
        Ok(())
    }

    fn check_zeros(&self) -> Result<()> {
        let min = self.big_r().min_abs();
        if !(min > lit(MIN_ABS_R)) {
            return Err(Error::StepRejected {
                t: to_f64(self.t),
                reason: format!("min |R| = {min:e} on the axis"),
            });
        }
        Ok(())
    }

    fn axpy(&self, h: T, dr: &ComplexField<T>, dv: &ComplexField<T>) -> Self {
        let c = Complex::new(h, T::zero());
        Self {
            r: self.r.add(&dr.scale(c)),
            v: self.v.add(&dv.scale(c)),
            t: self.t + h,
            background: self.background,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub g: f64,
    /// Step size; negative values integrate backwards.
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Record every `stride` accepted steps.
    pub stride: usize,
    pub cfl_safety: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            g: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            dealias: true,
            stride: 10,
            cfl_safety: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::Config(format!("g = {} must be finite and >= 0", self.g)));
        }
        if !(self.dt != 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be finite and nonzero", self.dt)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::Config("t_end must be finite".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if !(self.cfl_safety > 0.0) {
            return Err(Error::Config("cfl_safety must be positive".into()));
        }
        Ok(())
    }
}

/// `U, B` for the quiescent background, `Ũ, B̃` for the compressed one.
#[derive(Clone, Debug)]
pub struct Aux<T: Scalar> {
    pub u: ComplexField<T>,
    pub b: ComplexField<T>,
}

fn product<T: Scalar>(a: &ComplexField<T>, b: &ComplexField<T>, dealias: bool) -> ComplexField<T> {
    let p = a.mul(b);
    if dealias {
        p.dealias()
    } else {
        p
    }
}

pub fn compute_aux<T: Scalar>(state: &State<T>, dealias: bool) -> Aux<T> {
    let v = &state.v;
    let vbar = v.conj();
    match state.background {
        Background::Quiescent => {
            let big_r = state.big_r();
            let u = product(&big_r, &vbar, dealias)
                .add(&product(&big_r.conj(), v, dealias))
                .project_minus();
            let b = product(v, &vbar, dealias).project_minus();
            Aux { u, b }
        }
        Background::Compressed => {
            let rinf = Complex::new(state.r_asymptote(), T::zero());
            let r = &state.r;
            let u = v
                .add(&vbar)
                .scale(rinf)
                .add(&product(r, &vbar, dealias))
                .add(&product(&r.conj(), v, dealias))
                .project_minus();
            let b = product(v, &vbar, dealias).project_minus();
            Aux { u, b }
        }
    }
}

/// Time derivatives of the stored fields `(r, v)`.
pub fn rhs<T: Scalar>(state: &State<T>, g: T, dealias: bool) -> Result<(ComplexField<T>, ComplexField<T>)> {
    rhs_with_aux(state, g, dealias).map(|(dr, dv, _)| (dr, dv))
}

fn rhs_with_aux<T: Scalar>(
    state: &State<T>,
    g: T,
    dealias: bool,
) -> Result<(ComplexField<T>, ComplexField<T>, Aux<T>)> {
    let aux = compute_aux(state, dealias);
    let i = imag_unit::<T>();
    let r = &state.r;
    let v = &state.v;
    let big_r = state.big_r();
    let r_p = r.deriv();
    let v_p = v.deriv();
    let u_p = aux.u.deriv();
    let b_p = aux.b.deriv();
    let adv_r = product(&aux.u, &r_p, dealias)
        .sub(&product(&big_r, &u_p, dealias))
        .scale(i);
    let adv_v = product(&aux.u, &v_p, dealias)
        .sub(&product(&big_r, &b_p, dealias))
        .scale(i);
    let (dr, dv) = match state.background {
        Background::Quiescent => {
            let dv = adv_v.add(&r.scale(Complex::new(g, T::zero())));
            (adv_r, dv)
        }
        Background::Compressed => {
            if g != T::zero() {
                return Err(Error::Config(
                    "gravity is not supported on the compressed background".into(),
                ));
            }
            let two_rinf = Complex::new(lit::<T>(2.0) * state.r_asymptote(), T::zero());
            let dr = adv_r
                .sub(&r.scale(two_rinf))
                .sub(&product(r, r, dealias));
            let dv = adv_v.sub(&aux.u).sub(&product(&big_r, v, dealias));
            (dr, dv)
        }
    };
    let dr = clean_rate(dr, state)?;
    let dv = clean_rate(dv, state)?;
    Ok((dr, dv, aux))
}

/// Rejects rates with significant `k > 0` content and strips the round-off
/// remainder. The reference scale includes the state so that a vanishing
/// rate is not judged by its own round-off.
fn clean_rate<T: Scalar>(rate: ComplexField<T>, state: &State<T>) -> Result<ComplexField<T>> {
    let spec_max = |f: &ComplexField<T>| {
        f.spectrum()
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), T::max)
    };
    let scale = spec_max(&rate).max(lit::<T>(1e-6) * spec_max(&state.r).max(spec_max(&state.v)));
    if scale == T::zero() {
        return Ok(rate);
    }
    let positive = rate.positive_mode_ratio() * spec_max(&rate);
    if positive > lit::<T>(ANALYTICITY_TOL) * scale {
        return Err(Error::AnalyticityLoss {
            ratio: to_f64(positive / scale),
        });
    }
    Ok(rate.drop_positive_modes())
}

/// `0.5·Δu / max(|U| + |V| + 1)`, with `Ũ, ṽ` on the compressed background
/// since the `−iwR` transport is treated exactly there.
pub fn cfl_cap<T: Scalar>(state: &State<T>, aux: &Aux<T>, safety: T) -> T {
    let speed = aux
        .u
        .samples()
        .iter()
        .zip(state.v.samples())
        .map(|(u, v)| u.norm() + v.norm() + T::one())
        .fold(T::zero(), T::max);
    safety * state.grid().dx() / speed
}

/// One classical RK4 step of size `config.dt`.
pub fn step_rk4<T: Scalar>(state: &State<T>, config: &SimConfig) -> Result<State<T>> {
    let dt: T = lit(config.dt);
    let g: T = lit(config.g);
    let half = dt * lit(0.5);
    let (k1r, k1v, aux) = rhs_with_aux(state, g, config.dealias)?;
    let cap = cfl_cap(state, &aux, lit(config.cfl_safety));
    if dt.abs() > cap {
        return Err(Error::CflViolation {
            dt: config.dt,
            cap: to_f64(cap),
        });
    }
    let (k2r, k2v) = rhs(&state.axpy(half, &k1r, &k1v), g, config.dealias)?;
    let (k3r, k3v) = rhs(&state.axpy(half, &k2r, &k2v), g, config.dealias)?;
    let (k4r, k4v) = rhs(&state.axpy(dt, &k3r, &k3v), g, config.dealias)?;
    let two = Complex::new(lit::<T>(2.0), T::zero());
    let sum_r = k1r.add(&k2r.scale(two)).add(&k3r.scale(two)).add(&k4r);
    let sum_v = k1v.add(&k2v.scale(two)).add(&k3v.scale(two)).add(&k4v);
    let next = state.axpy(dt / lit(6.0), &sum_r, &sum_v);
    accept(next)
}

fn accept<T: Scalar>(state: State<T>) -> Result<State<T>> {
    let max = state.r.max_abs().max(state.v.max_abs());
    if !(max <= lit(BLOWUP_LIMIT)) {
        return Err(Error::Blowup {
            t: to_f64(state.t),
            max: to_f64(max),
        });
    }
    state.check_zeros()?;
    for f in [&state.r, &state.v] {
        let ratio = f.positive_mode_ratio();
        if ratio > lit(ANALYTICITY_TOL) {
            return Err(Error::StepRejected {
                t: to_f64(state.t),
                reason: format!("positive-mode content {ratio:e}"),
            });
        }
    }
    Ok(state)
}

/// Box forms of the mass and momentum integrals:
/// `Ī = ∫(1/R − 1) du` and `J = ∫ V/R du`.
///
/// On the periodic box `dĪ/dt = 0` and `dJ/dt = −g·Ī`.
pub fn conserved_line<T: Scalar>(state: &State<T>) -> Result<(Complex<T>, Complex<T>)> {
    if state.background != Background::Quiescent {
        return Err(Error::Config(
            "line integrals are defined for the quiescent background only".into(),
        ));
    }
    let big_r = state.big_r();
    let one = Complex::new(T::one(), T::zero());
    let inv = big_r.map(|x| one / x);
    let i_bar = inv.add_const(-one).integral();
    let j = state.v.mul(&inv).integral();
    Ok((i_bar, j))
}

/// Parametric surface `x(u) + i y(u)` at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceShape {
    pub t: f64,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SurfaceShape {
    /// Columns `u, x, y, t`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,x,y,t\n");
        for ((u, x), y) in self.u.iter().zip(&self.x).zip(&self.y) {
            let _ = writeln!(out, "{u:.17e},{x:.17e},{y:.17e},{:.17e}", self.t);
        }
        out
    }
}

/// Integrates `z' = 1/R` to `z = w/R∞ + ∂⁻¹(1/R − 1/R∞)`.
///
/// Fails with `SecularDrift` when `1/R − 1/R∞` has a mean, which on the
/// periodic box would add a linear term to `z − w/R∞`.
pub fn reconstruct_surface<T: Scalar>(state: &State<T>) -> Result<SurfaceShape> {
    let (shape, mean) = reconstruct_surface_detrended(state)?;
    if mean.norm() > DRIFT_TOL {
        return Err(Error::SecularDrift { mean: mean.norm() });
    }
    Ok(shape)
}

/// Like [`reconstruct_surface`] but removes the mean of `1/R − 1/R∞` and
/// returns it alongside the shape.
pub fn reconstruct_surface_detrended<T: Scalar>(state: &State<T>) -> Result<(SurfaceShape, Complex<f64>)> {
    let grid = state.grid();
    let one = Complex::new(T::one(), T::zero());
    let scale = T::one() / state.r_asymptote();
    let dz = state
        .big_r()
        .map(|x| one / x)
        .add_const(Complex::new(-scale, T::zero()));
    let mean = dz.mean();
    let tail = dz.add_const(-mean).antideriv()?;
    let mut shape = SurfaceShape {
        t: to_f64(state.t),
        u: Vec::with_capacity(grid.n()),
        x: Vec::with_capacity(grid.n()),
        y: Vec::with_capacity(grid.n()),
    };
    for (j, d) in tail.samples().iter().enumerate() {
        let u = grid.u(j);
        shape.u.push(to_f64(u));
        shape.x.push(to_f64(u * scale + d.re));
        shape.y.push(to_f64(d.im));
    }
    Ok((shape, Complex::new(to_f64(mean.re), to_f64(mean.im))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// `[Re, Im]` of `Ī`; absent on the compressed background.
    pub i_bar: Option<[f64; 2]>,
    pub j: Option<[f64; 2]>,
    pub min_abs_r: f64,
    pub max_abs_v: f64,
}

impl TrajectoryRecord {
    pub fn of<T: Scalar>(state: &State<T>) -> Self {
        let line = conserved_line(state).ok();
        let pair = |c: Complex<T>| [to_f64(c.re), to_f64(c.im)];
        Self {
            t: to_f64(state.t),
            i_bar: line.map(|(i, _)| pair(i)),
            j: line.map(|(_, j)| pair(j)),
            min_abs_r: to_f64(state.big_r().min_abs()),
            max_abs_v: to_f64(state.big_v().max_abs()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    pub records: Vec<TrajectoryRecord>,
    /// States at the recorded times.
    pub snapshots: Vec<State<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> &State<T> {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Number of steps of size `dt` from `t0` to `t_end`; the span must be an
/// integer multiple of `dt`.
pub fn step_count(t0: f64, config: &SimConfig) -> Result<usize> {
    let steps = (config.t_end - t0) / config.dt;
    let rounded = steps.round();
    if rounded < 0.0 || (steps - rounded).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "span {} is not a nonnegative multiple of dt = {}",
            config.t_end - t0,
            config.dt
        )));
    }
    Ok(rounded as usize)
}

/// Runs from `initial` to `config.t_end`, recording every `stride` steps
/// and always the final state.
pub fn simulate<T: Scalar>(initial: State<T>, config: &SimConfig) -> Result<Trajectory<T>> {
    config.validate()?;
    let steps = step_count(to_f64(initial.t), config)?;
    let t0: T = initial.t;
    let mut traj = Trajectory {
        records: vec![TrajectoryRecord::of(&initial)],
        snapshots: vec![initial.clone()],
    };
    let mut state = initial;
    for k in 1..=steps {
        state = step_rk4(&state, config)?;
        // pin the clock to t0 + k·dt so long runs do not accumulate drift
        state.t = t0 + lit::<T>(config.dt) * lit(k as f64);
        if k % config.stride == 0 || k == steps {
            traj.records.push(TrajectoryRecord::of(&state));
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}

/// Max-norm distance between the `R` and `V` fields of two states.
pub fn field_distance<T: Scalar>(a: &State<T>, b: &State<T>) -> T {
    a.big_r()
        .sub(&b.big_r())
        .max_abs()
        .max(a.big_v().sub(&b.big_v()).max_abs())
}
