//! Exact solutions around the Longuet-Higgins compressed fluid.
//!
//! In conformal variables the compressed fluid is `z = ut`, `Φ = ½u²t`.
//! Adding any decaying rational `α(u)` gives the exact family
//! `z = ut + α(u)`, `Φ = ½u²t + Φ₀(u)` with `Φ₀' = uα'`; the inverse-time
//! series `z = ut + α + z₁/t + z₂/t² + …` extends it.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analytic::RationalFn;
use crate::dyachenko::{Background, State, SurfaceShape};
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

type C = Complex<f64>;
type Rf = RationalFn<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhParams {
    pub t0: f64,
}

/// Potential and pressure `(Φ, P)` of the compressed fluid,
/// `Φ = ½(x² − y²)/(t − t₀)`, `P = −y²/(t − t₀)²`.
pub fn lh_eval(params: LhParams, x: f64, y: f64, t: f64) -> Result<(f64, f64)> {
    let s = t - params.t0;
    if s == 0.0 {
        return Err(Error::SingularTime(t));
    }
    Ok((0.5 * (x * x - y * y) / s, -y * y / (s * s)))
}

/// `Φ_t + ½|∇Φ|² + P` from the closed-form derivatives.
pub fn lh_bernoulli_residual(params: LhParams, x: f64, y: f64, t: f64) -> Result<f64> {
    let (_, p) = lh_eval(params, x, y, t)?;
    let s = t - params.t0;
    let phi_t = -0.5 * (x * x - y * y) / (s * s);
    let (phi_x, phi_y) = (x / s, -y / s);
    Ok(phi_t + 0.5 * (phi_x * phi_x + phi_y * phi_y) + p)
}

/// How the potential of the perturbation is read from `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiReading {
    /// `Φ₀' = uα'`, the reading that solves the equations.
    #[default]
    Derivative,
    /// `Φ₀' = uα`, kept to show that it fails.
    Literal,
}

/// Values of `z_t, z_u, Φ_t, Φ_u` at one boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitSample {
    pub z_t: C,
    pub z_u: C,
    pub phi_t: C,
    pub phi_u: C,
}

/// Kinematic and dynamic residuals at one point:
///
/// ```text
/// eq1 = z_t z̄_u − z̄_t z_u + Φ_u − Φ̄_u
/// eq2 = Ψ_t z_u − Ψ_u z_t + ½ Φ̄_u² / z̄_u,   Ψ = Re Φ
/// ```
pub fn residual_pointwise(s: &ImplicitSample) -> (C, C) {
    let eq1 = s.z_t * s.z_u.conj() - s.z_t.conj() * s.z_u + s.phi_u - s.phi_u.conj();
    let psi_t = s.phi_t.re;
    let psi_u = s.phi_u.re;
    let eq2 = s.z_u * psi_t - s.z_t * psi_u + s.phi_u.conj().powi(2) / s.z_u.conj() * 0.5;
    (eq1, eq2)
}

/// Max-norm residuals of both implicit equations over a set of points.
///
/// The second equation is checked pointwise, not after projection: on an
/// exact solution `Re(eq2/z_u)` is the Bernoulli condition and `Im(eq2/z_u)`
/// restates the kinematic one, so the unprojected expression vanishes too
/// and is the stronger test.
pub fn residual_implicit(samples: &[ImplicitSample]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(a, b), s| {
        let (e1, e2) = residual_pointwise(s);
        (a.max(e1.norm()), b.max(e2.norm()))
    })
}

/// Five-point centered first derivative from values at `t − 2h … t + 2h`.
pub fn fd5(values: [C; 5], h: f64) -> C {
    (values[0] - values[1] * 8.0 + values[3] * 8.0 - values[4]) / (12.0 * h)
}

/// `Φ₀` split as `rational + linear·w + Σ c log(w − p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi0 {
    pub rational: Rf,
    pub linear: C,
    pub logs: Vec<(C, C)>,
}

impl Phi0 {
    fn from_derivative(d: &Rf) -> Result<Self> {
        let logs = d.log_residues();
        let linear = d.constant_term();
        let rest = d.without_simple_poles().sub(&Rf::constant(linear));
        Ok(Self {
            rational: rest.antiderivative()?,
            linear,
            logs,
        })
    }

    /// Principal logarithms; continuous along the real axis since no pole
    /// sits on it.
    pub fn eval(&self, w: C) -> Result<C> {
        let mut acc = self.rational.eval(w)? + self.linear * w;
        for (p, c) in &self.logs {
            acc += c * (w - p).ln();
        }
        Ok(acc)
    }
}

/// The exact perturbation `z = ut + α(u)`, `Φ = ½u²t + Φ₀(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSolution {
    pub alpha: Rf,
    pub phi0_prime: Rf,
    pub phi0: Phi0,
    pub reading: PhiReading,
}

pub fn make_exact(alpha: &Rf) -> Result<PerturbationSolution> {
    make_exact_with(alpha, PhiReading::Derivative)
}

pub fn make_exact_with(alpha: &Rf, reading: PhiReading) -> Result<PerturbationSolution> {
    if alpha.constant_term().norm() != 0.0 {
        return Err(Error::Config("α must decay at infinity".into()));
    }
    let phi0_prime = match reading {
        PhiReading::Derivative => alpha.derivative().mul_w()?,
        PhiReading::Literal => alpha.mul_w()?,
    };
    let phi0 = Phi0::from_derivative(&phi0_prime)?;
    Ok(PerturbationSolution {
        alpha: alpha.clone(),
        phi0_prime,
        phi0,
        reading,
    })
}

impl PerturbationSolution {
    pub fn z(&self, u: f64, t: f64) -> Result<C> {
        Ok(C::new(u * t, 0.0) + self.alpha.eval(C::new(u, 0.0))?)
    }

    pub fn phi(&self, u: f64, t: f64) -> Result<C> {
        Ok(C::new(0.5 * u * u * t, 0.0) + self.phi0.eval(C::new(u, 0.0))?)
    }

    /// Analytic derivatives at boundary point `u`.
    pub fn sample(&self, u: f64, t: f64) -> Result<ImplicitSample> {
        let w = C::new(u, 0.0);
        Ok(ImplicitSample {
            z_t: w,
            z_u: C::new(t, 0.0) + self.alpha.derivative().eval(w)?,
            phi_t: C::new(0.5 * u * u, 0.0),
            phi_u: C::new(u * t, 0.0) + self.phi0_prime.eval(w)?,
        })
    }

    pub fn residual(&self, us: &[f64], t: f64) -> Result<(f64, f64)> {
        let samples = us.iter().map(|&u| self.sample(u, t)).collect::<Result<Vec<_>>>()?;
        Ok(residual_implicit(&samples))
    }

    /// `R = 1/z_u` and `V = iΦ_u/z_u` at time `t` as a compressed-background
    /// solver state on the periodic box.
    ///
    /// The box version of the family is `z = ut + α_per(u)` with `α_per` the
    /// periodic image sum of `α`. The dynamics of `R` reduce to `R_t = −R²`
    /// pointwise, so `R = 1/(t + α_per')` is exact on the box as well.
    pub fn state(&self, grid: &Grid<f64>, t: f64) -> Result<State<f64>> {
        if !(t > 0.0) {
            return Err(Error::SingularTime(t));
        }
        let dalpha = self.alpha.derivative();
        let l = grid.length();
        let r = ComplexField::from_fn(grid, |u| {
            let a1 = dalpha.eval_periodic(C::new(u, 0.0), l);
            C::new(1.0, 0.0) / (a1 + t) - 1.0 / t
        });
        // V − iw = i(Φ₀' − uα')/(t + α'), zero for the exact reading
        let drift = self.phi0_prime.sub(&dalpha.mul_w()?);
        let v = if drift.is_zero() {
            ComplexField::zeros(grid)
        } else {
            ComplexField::from_fn(grid, |u| {
                let w = C::new(u, 0.0);
                let num = drift.eval(w).unwrap_or(C::new(f64::NAN, 0.0));
                let den = dalpha.eval(w).unwrap_or(C::new(f64::NAN, 0.0)) + t;
                C::i() * num / den
            })
        };
        State::new(r, v, t, Background::Compressed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleFamilyParams {
    #[serde(rename = "A")]
    pub amp: f64,
    pub a: f64,
}

impl PoleFamilyParams {
    pub fn new(amp: f64, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Config(format!("pole height a = {a} must be positive")));
        }
        Ok(Self { amp, a })
    }

    /// `α = A/(u + ia)`.
    pub fn alpha(&self) -> Rf {
        Rf::pole(C::new(0.0, -self.a), 1, C::new(self.amp, 0.0)).expect("a > 0")
    }
}

/// Surface of `z = ut + A/(u + ia)` written with `s = ut`:
/// `x = s + Ats/(s² + a²t²)`, `y = −aAt²/(s² + a²t²)`.
pub fn pole_family_shape(params: PoleFamilyParams, t: f64, s: &[f64]) -> SurfaceShape {
    let (amp, a) = (params.amp, params.a);
    let mut shape = SurfaceShape {
        t,
        u: s.to_vec(),
        x: Vec::with_capacity(s.len()),
        y: Vec::with_capacity(s.len()),
    };
    for &si in s {
        let d = si * si + a * a * t * t;
        shape.x.push(si + amp * t * si / d);
        shape.y.push(-a * amp * t * t / d);
    }
    shape
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceClass {
    OneValued,
    Bubbles,
    Droplets,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub u: f64,
    pub t: f64,
    /// `+1` or `−1`, the sign in front of the square root.
    pub branch: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    #[serde(rename = "A")]
    pub amp: f64,
    pub a: f64,
    pub t_ref: f64,
    pub class: SurfaceClass,
    /// Pole height at which the class flips for this `A` and `t_ref`.
    pub critical_a: f64,
    /// Verdict of the time-independent rule `a² > A²/8`.
    pub one_valued_by_a2_over_8: bool,
    pub critical_points: Vec<CriticalPoint>,
}

/// Minimum over real `u` of `∂x/∂u = t + A(a² − u²)/(u² + a²)²`.
pub fn min_dx_du(params: PoleFamilyParams, t: f64) -> f64 {
    let (amp, a) = (params.amp, params.a);
    if amp >= 0.0 {
        t - amp / (8.0 * a * a)
    } else {
        t + amp / (a * a)
    }
}

/// Classifies the surface for all times `t ≥ t_ref`.
///
/// The surface stops being a graph when `x(u)` folds. `∂x/∂u` grows with
/// `t`, so the worst case over `t ≥ t_ref` is `t_ref` itself. With `A > 0`
/// the minimum `t − A/(8a²)` sits at `u² = 3a²`; with `A < 0` it is
/// `t + A/a²` at `u = 0`. Critical points solve `∂x/∂s = 0` in the
/// `s = ut` parameterization, `s² = ½At(1 ± √(1 − 8a²t/A)) − a²t²`, over
/// `t ∈ [t_ref, t_end]`.
pub fn bifurcation_classify(params: PoleFamilyParams, t_ref: f64, t_end: f64, samples: usize) -> BifurcationReport {
    let (amp, a) = (params.amp, params.a);
    let class = if amp == 0.0 || min_dx_du(params, t_ref) > 0.0 {
        SurfaceClass::OneValued
    } else if amp > 0.0 {
        SurfaceClass::Bubbles
    } else {
        SurfaceClass::Droplets
    };
    let critical_a = if amp >= 0.0 {
        (amp / (8.0 * t_ref)).sqrt()
    } else {
        (-amp / t_ref).sqrt()
    };
    let mut critical_points = Vec::new();
    if class != SurfaceClass::OneValued {
        for k in 0..samples.max(1) {
            let t = if samples <= 1 {
                t_ref
            } else {
                t_ref + (t_end - t_ref) * k as f64 / (samples - 1) as f64
            };
            let disc = 1.0 - 8.0 * a * a * t / amp;
            if disc < 0.0 {
                continue;
            }
            for branch in [1i8, -1] {
                let s2 = 0.5 * amp * t * (1.0 + f64::from(branch) * disc.sqrt()) - a * a * t * t;
                if s2 >= 0.0 {
                    critical_points.push(CriticalPoint {
                        u: s2.sqrt(),
                        t,
                        branch,
                    });
                }
            }
        }
    }
    BifurcationReport {
        amp,
        a,
        t_ref,
        class,
        critical_a,
        one_valued_by_a2_over_8: a * a > amp * amp / 8.0,
        critical_points,
    }
}

/// Brute-force check: does `∂x/∂u ≤ 0` occur anywhere on an `n_u × n_t`
/// grid with `|u| ≤ u_max`, `t ∈ [t_ref, t_end]`?
pub fn brute_force_fold(params: PoleFamilyParams, t_ref: f64, t_end: f64, u_max: f64, n_u: usize, n_t: usize) -> bool {
    let (amp, a) = (params.amp, params.a);
    (0..n_t).any(|i| {
        let t = t_ref + (t_end - t_ref) * i as f64 / (n_t.max(2) - 1) as f64;
        (0..n_u).any(|j| {
            let u = -u_max + 2.0 * u_max * j as f64 / (n_u.max(2) - 1) as f64;
            let d = u * u + a * a;
            t + amp * (a * a - u * u) / (d * d) <= 0.0
        })
    })
}

/// Bisection on `a` at fixed `A` for the one-valued/multivalued flip,
/// using `classify` as the decision.
pub fn bisect_threshold(mut lo: f64, mut hi: f64, tol: f64, multivalued: impl Fn(f64) -> bool) -> Result<f64> {
    if multivalued(lo) == multivalued(hi) {
        return Err(Error::NoConvergence { residual: hi - lo });
    }
    let lo_state = multivalued(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if multivalued(mid) == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First two inverse-time corrections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerms {
    pub z1: Rf,
    pub phi1: Rf,
    pub z2: Rf,
    pub phi2: Rf,
    /// `|Q(0)|` for the alternative `u z₂ = Q = −P⁻(z̄₁α' − z₁ᾱ')`: the
    /// residue that form leaves at the origin.
    pub solvability: f64,
    /// `Q/u` without its origin term, and the origin coefficient.
    pub z2_alt: Rf,
    pub z2_alt_origin: C,
}

/// `Φ₁ = u z₁`, `z₂ = P⁻(z̄₁α' − z₁ᾱ')`, `Φ₂ = u z₂`.
///
/// Matching the `1/t²` terms of the kinematic equation with `Φ₂ = u z₂`
/// leaves `z₂ − z̄₂ = z̄₁α' − z₁ᾱ'`; the right side is imaginary on the axis
/// so its lower-analytic part solves it.
pub fn series_next(alpha: &Rf, z1: &Rf) -> Result<SeriesTerms> {
    let da = alpha.derivative();
    let d = z1.conj().mul(&da)?.sub(&z1.mul(&da.conj())?);
    let z2 = d.pminus();
    let q = d.pminus().scale(C::new(-1.0, 0.0));
    let (z2_alt, origin) = q.div_w()?;
    Ok(SeriesTerms {
        z1: z1.clone(),
        phi1: z1.mul_w()?,
        phi2: z2.mul_w()?,
        z2,
        solvability: origin.norm(),
        z2_alt,
        z2_alt_origin: origin,
    })
}

/// The truncated series `z = ut + α + z₁/t + z₂/t²` and its potential.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub base: PerturbationSolution,
    pub terms: SeriesTerms,
    /// Use the alternative `z₂` (with its origin pole) instead.
    pub alternative: bool,
}

impl SeriesSolution {
    pub fn new(alpha: &Rf, z1: &Rf, alternative: bool) -> Result<Self> {
        Ok(Self {
            base: make_exact(alpha)?,
            terms: series_next(alpha, z1)?,
            alternative,
        })
    }

    pub fn sample(&self, u: f64, t: f64) -> Result<ImplicitSample> {
        let w = C::new(u, 0.0);
        let base = self.base.sample(u, t)?;
        let tm = &self.terms;
        let (z2, z2p) = if self.alternative {
            let o = tm.z2_alt_origin;
            (tm.z2_alt.eval(w)? + o / w, tm.z2_alt.derivative().eval(w)? - o / (w * w))
        } else {
            (tm.z2.eval(w)?, tm.z2.derivative().eval(w)?)
        };
        // Φ₂ = u z₂ in both variants
        let (phi2, phi2p) = (w * z2, z2 + w * z2p);
        let z1 = tm.z1.eval(w)?;
        let phi1 = tm.phi1.eval(w)?;
        let (t2, t3) = (t * t, t * t * t);
        Ok(ImplicitSample {
            z_t: base.z_t - z1 / t2 - z2 * 2.0 / t3,
            z_u: base.z_u + tm.z1.derivative().eval(w)? / t + z2p / t2,
            phi_t: base.phi_t - phi1 / t2 - phi2 * 2.0 / t3,
            phi_u: base.phi_u + tm.phi1.derivative().eval(w)? / t + phi2p / t2,
        })
    }

    pub fn residual(&self, us: &[f64], t: f64) -> Result<(f64, f64)> {
        let samples = us.iter().map(|&u| self.sample(u, t)).collect::<Result<Vec<_>>>()?;
        Ok(residual_implicit(&samples))
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
