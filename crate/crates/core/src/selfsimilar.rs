//! Self-similar solutions `z = t^α z₀(u)`, `Φ = t^{2α−1} Φ₀(u)`.
//!
//! Substituting into the implicit equations factors out `t^{2α−1}` from the
//! kinematic one and `t^{3α−2}` from the dynamic one, leaving the profile
//! equations
//!
//! ```text
//! α(z₀z̄₀' − z̄₀z₀') = Φ̄₀' − Φ₀'
//! (2α − 1)Ψ₀z₀' − αΨ₀'z₀ + ½Φ̄₀'²/z̄₀' = 0,   Ψ₀ = Re Φ₀
//! ```
//!
//! The compressed fluid `z₀ = u`, `Φ₀ = ½u²` solves both for every `α`:
//! `z = t^α u` only reparametrizes the same flow `Φ = x²/(2t)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analytic::RationalFn;
use crate::compressed_fluid::{residual_implicit, ImplicitSample};
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

type C = Complex<f64>;

/// Smallest `|z̄₀'|` accepted on the sample points.
pub const MIN_ABS_DZ: f64 = 1e-12;

/// `Σ poly[k]·u^k` plus a decaying rational part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileFn {
    pub poly: Vec<C>,
    pub rational: RationalFn<f64>,
}

impl ProfileFn {
    pub fn polynomial(poly: Vec<C>) -> Self {
        Self {
            poly,
            rational: RationalFn::zero(),
        }
    }

    pub fn with_rational(mut self, rational: RationalFn<f64>) -> Self {
        self.rational = rational;
        self
    }

    pub fn eval(&self, u: f64) -> Result<C> {
        let w = C::new(u, 0.0);
        let p = self.poly.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * w + c);
        Ok(p + self.rational.eval(w)?)
    }

    pub fn derivative(&self) -> Self {
        Self {
            poly: self
                .poly
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
            rational: self.rational.derivative(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarProfile {
    /// The similarity exponent α.
    pub alpha_exp: f64,
    pub z0: ProfileFn,
    pub phi0: ProfileFn,
}

impl SelfSimilarProfile {
    pub fn new(alpha_exp: f64, z0: ProfileFn, phi0: ProfileFn) -> Result<Self> {
        if !alpha_exp.is_finite() {
            return Err(Error::Config("alpha_exp must be finite".into()));
        }
        for f in [&z0, &phi0] {
            if !f.rational.is_lower_analytic() {
                return Err(Error::Config("decaying profile parts must be lower-analytic".into()));
            }
        }
        Ok(Self { alpha_exp, z0, phi0 })
    }

    /// The compressed fluid `z₀ = u`, `Φ₀ = ½u²` with the labeled exponent
    /// `α = −1` (any exponent works, see the module notes).
    pub fn anchor() -> Self {
        let c = |x: f64| C::new(x, 0.0);
        Self {
            alpha_exp: -1.0,
            z0: ProfileFn::polynomial(vec![c(0.0), c(1.0)]),
            phi0: ProfileFn::polynomial(vec![c(0.0), c(0.0), c(0.5)]),
        }
    }

    /// `z_t, z_u, Φ_t, Φ_u` of the substituted solution at `(u, t)`.
    pub fn sample(&self, u: f64, t: f64) -> Result<ImplicitSample> {
        if !(t > 0.0) {
            return Err(Error::Config(format!("t = {t} must be positive")));
        }
        let a = self.alpha_exp;
        let (z0, dz0) = (self.z0.eval(u)?, self.z0.derivative().eval(u)?);
        let (p0, dp0) = (self.phi0.eval(u)?, self.phi0.derivative().eval(u)?);
        Ok(ImplicitSample {
            z_t: z0 * a * t.powf(a - 1.0),
            z_u: dz0 * t.powf(a),
            phi_t: p0 * (2.0 * a - 1.0) * t.powf(2.0 * a - 2.0),
            phi_u: dp0 * t.powf(2.0 * a - 1.0),
        })
    }
}

/// `z = t^α z₀` and `Φ = t^{2α−1} Φ₀` sampled on the grid points. The fields
/// grow with `u`, so they are sample containers, not periodic functions.
pub fn substitute(profile: &SelfSimilarProfile, grid: &Grid<f64>, t: f64) -> Result<(ComplexField<f64>, ComplexField<f64>)> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("t = {t} must be positive")));
    }
    let a = profile.alpha_exp;
    let (sz, sp) = (t.powf(a), t.powf(2.0 * a - 1.0));
    let mut z = Vec::with_capacity(grid.n());
    let mut phi = Vec::with_capacity(grid.n());
    for u in grid.points() {
        z.push(profile.z0.eval(u)? * sz);
        phi.push(profile.phi0.eval(u)? * sp);
    }
    Ok((ComplexField::from_samples(grid, z)?, ComplexField::from_samples(grid, phi)?))
}

/// Max-norm residuals of the two profile equations at the points `us`,
/// checked pointwise like [`residual_implicit`].
pub fn residual_profile(profile: &SelfSimilarProfile, us: &[f64]) -> Result<(f64, f64)> {
    let a = profile.alpha_exp;
    let (dz, dp) = (profile.z0.derivative(), profile.phi0.derivative());
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for &u in us {
        let (z0, z0u) = (profile.z0.eval(u)?, dz.eval(u)?);
        let (p0, p0u) = (profile.phi0.eval(u)?, dp.eval(u)?);
        if z0u.norm() < MIN_ABS_DZ {
            return Err(Error::DivisionByZeroOnGrid(u));
        }
        let eq1 = a * (z0 * z0u.conj() - z0.conj() * z0u) - (p0u.conj() - p0u);
        let (psi, psi_u) = (p0.re, p0u.re);
        let eq2 = (2.0 * a - 1.0) * psi * z0u - a * psi_u * z0 + 0.5 * p0u.conj() * p0u.conj() / z0u.conj();
        r1 = r1.max(eq1.norm());
        r2 = r2.max(eq2.norm());
    }
    Ok((r1, r2))
}

/// [`residual_implicit`] of the substituted solution at time `t`, divided by
/// the weights `t^{2α−1}` and `t^{3α−2}`. The result does not depend on `t`.
pub fn scaled_residual(profile: &SelfSimilarProfile, us: &[f64], t: f64) -> Result<(f64, f64)> {
    let samples = us
        .iter()
        .map(|&u| profile.sample(u, t))
        .collect::<Result<Vec<_>>>()?;
    let (r1, r2) = residual_implicit(&samples);
    let a = profile.alpha_exp;
    Ok((r1 / t.powf(2.0 * a - 1.0), r2 / t.powf(3.0 * a - 2.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub length: f64,
}

/// `{alpha_exp, res1, res2, grid}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub alpha_exp: f64,
    pub res1: f64,
    pub res2: f64,
    pub grid: GridInfo,
}

pub fn residual_report(profile: &SelfSimilarProfile, grid: &Grid<f64>) -> Result<ResidualReport> {
    let (res1, res2) = residual_profile(profile, &grid.points())?;
    Ok(ResidualReport {
        alpha_exp: profile.alpha_exp,
        res1,
        res2,
        grid: GridInfo {
            n: grid.n(),
            length: grid.length(),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Admissible {
    /// Every exponent balances.
    All,
    Unique(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledExponent {
    pub alpha_exp: f64,
    pub label: String,
    /// Whether the exponent is compatible with the requested `g`.
    pub admissible: bool,
}

/// Exponent bookkeeping for the Bernoulli condition
/// `Φ_t + ½|∇Φ|² + g·y = 0` under `z = t^α z₀`, `Φ = t^{2α−1}Φ₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GravityExponentReport {
    pub g: f64,
    /// `t`-power of `Φ_t` and `|∇Φ|²` is `kinetic.0·α + kinetic.1`.
    pub kinetic: (f64, f64),
    /// `t`-power of `g·y`, same encoding.
    pub gravity: (f64, f64),
    pub admissible: Admissible,
    pub table: Vec<LabeledExponent>,
}

pub fn gravity_exponent_check(g: f64) -> Result<GravityExponentReport> {
    if !g.is_finite() {
        return Err(Error::Config("g must be finite".into()));
    }
    // Φ ~ t^{2α−1}, x ~ t^α: Φ_t and (∇Φ)² both scale as t^{2α−2}
    let kinetic = (2.0, -2.0);
    let gravity = (1.0, 0.0);
    let admissible = if g == 0.0 {
        Admissible::All
    } else {
        Admissible::Unique((gravity.1 - kinetic.1) / (kinetic.0 - gravity.0))
    };
    let ok = |a: f64| match admissible {
        Admissible::All => true,
        Admissible::Unique(b) => (a - b).abs() < 1e-12,
    };
    let table = [
        (-3.0, "parabolic Dirichlet jet"),
        (-1.0, "compressed fluid"),
        (2.0, "gravity wedge"),
    ]
    .into_iter()
    .map(|(a, label)| LabeledExponent {
        alpha_exp: a,
        label: label.into(),
        admissible: ok(a),
    })
    .collect();
    Ok(GravityExponentReport {
        g,
        kinetic,
        gravity,
        admissible,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressed_fluid::{make_exact, ImplicitSample};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn points() -> Vec<f64> {
        Grid::default().points()
    }

    fn bumped(eps: f64, pole: C) -> SelfSimilarProfile {
        let mut p = SelfSimilarProfile::anchor();
        p.z0 = p.z0.with_rational(RationalFn::pole(pole, 1, c(eps, 0.0)).unwrap());
        p
    }

    #[test]
    fn anchor_solves_the_profile_equations() {
        let (r1, r2) = residual_profile(&SelfSimilarProfile::anchor(), &points()).unwrap();
        assert!(r1 < 1e-9 && r2 < 1e-9, "{r1:e} {r2:e}");
    }

    #[test]
    fn anchor_matches_compressed_fluid_sample() {
        // α = 0 in the Miracle-1 family is the compressed fluid z = ut
        let exact = make_exact(&RationalFn::zero()).unwrap();
        let mut profile = SelfSimilarProfile::anchor();
        profile.alpha_exp = 1.0;
        for u in [-3.0, 0.5, 7.0] {
            for t in [0.5, 2.0] {
                let a: ImplicitSample = exact.sample(u, t).unwrap();
                let b = profile.sample(u, t).unwrap();
                assert!((a.z_t - b.z_t).norm() < 1e-12 && (a.z_u - b.z_u).norm() < 1e-12);
                assert!((a.phi_u - b.phi_u).norm() < 1e-12 && (a.phi_t - b.phi_t).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn translated_anchor_is_still_exact() {
        let mut p = SelfSimilarProfile::anchor();
        let u0 = 1.7;
        p.z0 = ProfileFn::polynomial(vec![c(u0, 0.0), c(1.0, 0.0)]);
        p.phi0 = ProfileFn::polynomial(vec![c(0.5 * u0 * u0, 0.0), c(u0, 0.0), c(0.5, 0.0)]);
        let (r1, r2) = residual_profile(&p, &points()).unwrap();
        assert!(r1 < 1e-9 && r2 < 1e-9);
    }

    #[test]
    fn anchor_is_exact_for_every_exponent() {
        for a in [-3.0, -1.0, 0.5, 1.0, 2.0] {
            let mut p = SelfSimilarProfile::anchor();
            p.alpha_exp = a;
            let (r1, r2) = residual_profile(&p, &points()).unwrap();
            assert!(r1 < 1e-9 && r2 < 1e-9, "alpha {a}");
        }
    }

    #[test]
    fn bumped_profile_depends_on_the_exponent() {
        let mut p = bumped(1e-2, c(0.5, 1.0));
        let (_, r_minus) = residual_profile(&p, &points()).unwrap();
        p.alpha_exp = 2.0;
        let (_, r_two) = residual_profile(&p, &points()).unwrap();
        assert!((r_minus - r_two).abs() > 1e-4);
    }

    #[test]
    fn bumps_are_detected() {
        for pole in [c(0.3, 1.0), c(-2.0, 0.5), c(5.0, 2.0)] {
            let (r1, r2) = residual_profile(&bumped(1e-3, pole), &points()).unwrap();
            assert!(r1.max(r2) >= 1e-4, "pole {pole}: {r1:e} {r2:e}");
        }
    }

    #[test]
    fn substitution_identities() {
        let g = Grid::new(64, 20.0).unwrap();
        let p = bumped(1e-2, c(0.0, 1.0));
        let (z, phi) = substitute(&p, &g, 1.0).unwrap();
        for (j, u) in g.points().into_iter().enumerate() {
            assert_eq!(z.samples()[j], p.z0.eval(u).unwrap());
            assert_eq!(phi.samples()[j], p.phi0.eval(u).unwrap());
        }
        let mut scaling = SelfSimilarProfile::anchor();
        scaling.alpha_exp = 1.0;
        let (z, _) = substitute(&scaling, &g, 3.0).unwrap();
        for (j, u) in g.points().into_iter().enumerate() {
            assert!((z.samples()[j] - 3.0 * u).norm() < 1e-14);
        }
    }

    #[test]
    fn scaled_residual_is_time_independent() {
        let p = bumped(1e-2, c(0.5, 1.0));
        let us = points();
        let base = scaled_residual(&p, &us, 1.0).unwrap();
        assert!(base.0 > 1e-4);
        for t in [0.5, 2.0] {
            let r = scaled_residual(&p, &us, t).unwrap();
            assert!((r.0 - base.0).abs() < 1e-12 * base.0.max(1.0));
            assert!((r.1 - base.1).abs() < 1e-12 * base.1.max(1.0));
        }
        let anchor = scaled_residual(&SelfSimilarProfile::anchor(), &us, 2.0).unwrap();
        assert!(anchor.0 < 1e-9 && anchor.1 < 1e-9);
    }

    #[test]
    fn flat_profile_is_refused() {
        let mut p = SelfSimilarProfile::anchor();
        p.z0 = ProfileFn::polynomial(vec![c(1.0, 0.0)]);
        assert!(matches!(
            residual_profile(&p, &[0.0, 1.0]),
            Err(Error::DivisionByZeroOnGrid(_))
        ));
    }

    #[test]
    fn gravity_fixes_the_exponent() {
        let rep = gravity_exponent_check(1.0).unwrap();
        assert_eq!(rep.admissible, Admissible::Unique(2.0));
        let free = gravity_exponent_check(0.0).unwrap();
        assert_eq!(free.admissible, Admissible::All);
        assert!(free.table.iter().all(|e| e.admissible));
        let labels: Vec<f64> = rep.table.iter().filter(|e| e.admissible).map(|e| e.alpha_exp).collect();
        assert_eq!(labels, vec![2.0]);
    }

    #[test]
    fn report_json_shape() {
        let g = Grid::default();
        let rep = residual_report(&SelfSimilarProfile::anchor(), &g).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        for key in ["alpha_exp", "res1", "res2", "grid"] {
            assert!(v.get(key).is_some());
        }
        assert!(SelfSimilarProfile::new(
            1.0,
            ProfileFn::polynomial(vec![]).with_rational(RationalFn::pole(c(0.0, -1.0), 1, c(1.0, 0.0)).unwrap()),
            ProfileFn::polynomial(vec![])
        )
        .is_err());
    }
}
