//! Exact rational-function algebra on the complex plane.
//!
//! A [`RationalFn`] is a constant plus a finite sum of principal-part terms
//! `c / (w - p)^m`. Poles never sit on the real axis, so the split into
//! lower-analytic (poles above the axis) and upper-analytic (poles below)
//! pieces is exact. This is the discretization-free reference the spectral
//! code is checked against.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{imag_unit, lit, to_f64, Scalar};

/// Poles closer than this are considered equal.
pub const MERGE_TOL: f64 = 1e-12;
/// Default cap on the order of any pole produced by multiplication.
pub const DEFAULT_ORDER_CAP: u32 = 8;
/// Evaluation within this distance of a pole is refused.
pub const POLE_HIT_TOL: f64 = 1e-14;

/// One principal-part term `coeff / (w - pole)^order`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleTerm<T: Scalar> {
    pub pole: Complex<T>,
    pub order: u32,
    pub coeff: Complex<T>,
}

impl<T: Scalar> PoleTerm<T> {
    pub fn new(pole: Complex<T>, order: u32, coeff: Complex<T>) -> Self {
        Self { pole, order, coeff }
    }

    fn eval(&self, w: Complex<T>) -> Complex<T> {
        self.coeff / (w - self.pole).powu(self.order)
    }
}

/// `constant + Σ coeff_j / (w - pole_j)^order_j` in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn<T: Scalar> {
    terms: Vec<PoleTerm<T>>,
    constant: Complex<T>,
}

impl<T: Scalar> Default for RationalFn<T> {
    fn default() -> Self {
        Self::zero()
    }
}

fn same_pole<T: Scalar>(a: Complex<T>, b: Complex<T>) -> bool {
    (a - b).norm() < lit(MERGE_TOL)
}

fn cmp_pole<T: Scalar>(a: &PoleTerm<T>, b: &PoleTerm<T>) -> Ordering {
    if !same_pole(a.pole, b.pole) {
        let by_re = a.pole.re.partial_cmp(&b.pole.re).unwrap_or(Ordering::Equal);
        if by_re != Ordering::Equal {
            return by_re;
        }
        let by_im = a.pole.im.partial_cmp(&b.pole.im).unwrap_or(Ordering::Equal);
        if by_im != Ordering::Equal {
            return by_im;
        }
    }
    a.order.cmp(&b.order)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// Lattice sum `Σ_n 1/(x + nL)^m` (symmetric summation for `m = 1`).
///
/// With `θ = πx/L` the simple-pole sum is `(π/L) cot θ`; higher orders follow
/// from repeated differentiation, using `d cot/dθ = -(1 + cot²)` to carry the
/// derivatives as polynomials in `cot θ`.
pub fn lattice_sum<T: Scalar>(x: Complex<T>, order: u32, period: T) -> Complex<T> {
    let k = T::PI() / period;
    let theta = x * k;
    let cot: Complex<T> = Complex::<T>::one() / theta.tan();
    // poly[j] = coefficient of cot^j in the (order-1)-th θ-derivative of cot.
    let mut poly = vec![0.0f64, 1.0];
    for _ in 1..order {
        // P' then multiply by -(1 + y²)
        let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(j, c)| c * j as f64).collect();
        let mut next = vec![0.0; deriv.len() + 2];
        for (j, c) in deriv.iter().enumerate() {
            next[j] -= c;
            next[j + 2] -= c;
        }
        poly = next;
    }
    let mut value = Complex::<T>::zero();
    for c in poly.iter().rev() {
        value = value * cot + Complex::<T>::new(lit::<T>(*c), T::zero());
    }
    let m = order - 1;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    value * k.powi(order as i32) * lit::<T>(sign / factorial(m))
}

impl<T: Scalar> RationalFn<T> {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            constant: Complex::zero(),
        }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    /// `coeff / (w - pole)^order`.
    pub fn pole(pole: Complex<T>, order: u32, coeff: Complex<T>) -> Result<Self> {
        Self::new(vec![PoleTerm::new(pole, order, coeff)], Complex::zero())
    }

    /// Builds a canonical rational function. Poles on the real axis and
    /// zero orders are rejected.
    pub fn new(terms: Vec<PoleTerm<T>>, constant: Complex<T>) -> Result<Self> {
        for t in &terms {
            if t.pole.im.abs() <= T::zero() {
                return Err(Error::PoleOnAxis(format!("{}", t.pole)));
            }
            if t.order == 0 {
                return Err(Error::Config("pole order must be positive".into()));
            }
        }
        Ok(Self::from_terms_unchecked(terms, constant))
    }

    fn from_terms_unchecked(mut terms: Vec<PoleTerm<T>>, constant: Complex<T>) -> Self {
        terms.sort_by(cmp_pole);
        let mut merged: Vec<PoleTerm<T>> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if same_pole(last.pole, t.pole) && last.order == t.order => {
                    last.coeff = last.coeff + t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        Self {
            terms: merged,
            constant,
        }
    }

    pub fn terms(&self) -> &[PoleTerm<T>] {
        &self.terms
    }

    pub fn constant_term(&self) -> Complex<T> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    /// Poles strictly above the real axis only.
    pub fn is_lower_analytic(&self) -> bool {
        self.terms.iter().all(|t| t.pole.im > T::zero())
    }

    pub fn eval(&self, w: Complex<T>) -> Result<Complex<T>> {
        let mut acc = self.constant;
        for t in &self.terms {
            let d = (w - t.pole).norm();
            if d < lit(POLE_HIT_TOL) {
                return Err(Error::PoleHit {
                    pole: format!("{}", t.pole),
                    distance: to_f64(d),
                });
            }
            acc = acc + t.eval(w);
        }
        Ok(acc)
    }

    /// Value of the `period`-periodic image sum of `self` at `w`.
    ///
    /// Each simple-pole term is summed symmetrically, so the result is the
    /// function a periodic grid of that length actually represents.
    pub fn eval_periodic(&self, w: Complex<T>, period: T) -> Complex<T> {
        self.terms.iter().fold(self.constant, |acc, t| {
            acc + t.coeff * lattice_sum(w - t.pole, t.order, period)
        })
    }

    /// Mean over one period of the periodized function.
    pub fn periodic_mean(&self, period: T) -> Complex<T> {
        let ipl = imag_unit::<T>() * (T::PI() / period);
        self.terms
            .iter()
            .filter(|t| t.order == 1)
            .fold(self.constant, |acc, t| {
                let s = if t.pole.im > T::zero() { T::one() } else { -T::one() };
                acc + t.coeff * ipl * s
            })
    }

    /// Grid projector `P⁻` applied to the periodized function, evaluated at `w`.
    ///
    /// Upper-half-plane terms keep their oscillating part, and the total mean
    /// is halved.
    pub fn eval_periodic_pminus(&self, w: Complex<T>, period: T) -> Complex<T> {
        let upper = self.pminus_terms_only();
        let osc = upper.eval_periodic(w, period) - upper.periodic_mean(period);
        osc + self.periodic_mean(period) * lit::<T>(0.5)
    }

    fn pminus_terms_only(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| t.pole.im > T::zero())
                .collect(),
            constant: Complex::zero(),
        }
    }

    /// Projection onto functions analytic and decaying in `Im w < 0`,
    /// plus half of the constant.
    pub fn pminus(&self) -> Self {
        let mut out = self.pminus_terms_only();
        out.constant = self.constant * lit::<T>(0.5);
        out
    }

    /// Complementary projector: `pminus + pplus = id`.
    pub fn pplus(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| t.pole.im < T::zero())
                .collect(),
            constant: self.constant * lit::<T>(0.5),
        }
    }

    /// Reflection across the real axis: boundary values become conjugated.
    pub fn conj(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PoleTerm::new(t.pole.conj(), t.order, t.coeff.conj()))
            .collect();
        Self::from_terms_unchecked(terms, self.constant.conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PoleTerm::new(t.pole, t.order, t.coeff * s))
            .collect();
        Self::from_terms_unchecked(terms, self.constant * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms_unchecked(terms, self.constant + other.constant)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Complex::one()))
    }

    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let m = lit::<T>(f64::from(t.order));
                PoleTerm::new(t.pole, t.order + 1, -t.coeff * m)
            })
            .collect();
        Self::from_terms_unchecked(terms, Complex::zero())
    }

    /// Decaying antiderivative. Requires zero constant and no simple poles.
    pub fn antiderivative(&self) -> Result<Self> {
        if !self.constant.is_zero() {
            return Err(Error::NotIntegrableToRational(
                "nonzero constant integrates to a linear term".into(),
            ));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.order == 1 {
                return Err(Error::NotIntegrableToRational(format!(
                    "simple pole at {} integrates to a logarithm",
                    t.pole
                )));
            }
            let m1 = lit::<T>(f64::from(t.order - 1));
            terms.push(PoleTerm::new(t.pole, t.order - 1, -t.coeff / m1));
        }
        Ok(Self::from_terms_unchecked(terms, Complex::zero()))
    }

    /// Residues of the simple-pole terms, i.e. the coefficients of the
    /// logarithms an antiderivative would need.
    pub fn log_residues(&self) -> Vec<(Complex<T>, Complex<T>)> {
        self.terms
            .iter()
            .filter(|t| t.order == 1)
            .map(|t| (t.pole, t.coeff))
            .collect()
    }

    /// Drops the simple-pole terms (the non-rationally-integrable part).
    pub fn without_simple_poles(&self) -> Self {
        Self {
            terms: self.terms.iter().copied().filter(|t| t.order > 1).collect(),
            constant: self.constant,
        }
    }

    /// Exact product, re-expanded into partial fractions, with the default
    /// order cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_capped(other, DEFAULT_ORDER_CAP)
    }

    pub fn mul_capped(&self, other: &Self, cap: u32) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push(PoleTerm::new(t.pole, t.order, t.coeff * other.constant));
        }
        for t in &other.terms {
            terms.push(PoleTerm::new(t.pole, t.order, t.coeff * self.constant));
        }
        for a in &self.terms {
            for b in &other.terms {
                product_terms(a, b, cap, &mut terms)?;
            }
        }
        Ok(Self::from_terms_unchecked(terms, self.constant * other.constant))
    }

    /// Multiplication by the identity function `w`.
    ///
    /// Uses `w = (w - p) + p` per term; simple poles contribute a constant.
    /// The constant part of `self` would give a linear term and is rejected.
    pub fn mul_w(&self) -> Result<Self> {
        if !self.constant.is_zero() {
            return Err(Error::NotIntegrableToRational(
                "w times a nonzero constant is not decaying".into(),
            ));
        }
        let mut constant = Complex::zero();
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.order == 1 {
                constant = constant + t.coeff;
            } else {
                terms.push(PoleTerm::new(t.pole, t.order - 1, t.coeff));
            }
            terms.push(PoleTerm::new(t.pole, t.order, t.coeff * t.pole));
        }
        Ok(Self::from_terms_unchecked(terms, constant))
    }

    /// Division by `w`: returns `(q, f(0))` with `f(w)/w = q(w) + f(0)/w`.
    ///
    /// The origin lies on the real axis, so the `f(0)/w` term cannot be a
    /// `RationalFn` term and is handed back separately.
    pub fn div_w(&self) -> Result<(Self, Complex<T>)> {
        let origin = self.eval(Complex::zero())?;
        let mut terms = Vec::new();
        for t in &self.terms {
            // 1/(w (w-p)^m) = 1/((-p)^m w) + Σ_j (-1)^j p^{-(j+1)} (w-p)^{-(m-j)}
            let mut inv_p = Complex::<T>::one() / t.pole;
            let mut sign = T::one();
            for j in 0..t.order {
                terms.push(PoleTerm::new(t.pole, t.order - j, t.coeff * inv_p * sign));
                inv_p = inv_p / t.pole;
                sign = -sign;
            }
        }
        Ok((Self::from_terms_unchecked(terms, Complex::zero()), origin))
    }

    /// True when every coefficient of `self - other` is below `tol`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        let d = self.sub(other);
        d.constant.norm() <= tol && d.terms.iter().all(|t| t.coeff.norm() <= tol)
    }

    /// Removes terms with |coeff| ≤ tol.
    pub fn pruned(&self, tol: T) -> Self {
        Self {
            terms: self.terms.iter().copied().filter(|t| t.coeff.norm() > tol).collect(),
            constant: self.constant,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RationalFnJson::from_fn(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: RationalFnJson =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        j.to_fn()
    }
}

/// Partial fractions of `a * b`, appended to `out`.
fn product_terms<T: Scalar>(
    a: &PoleTerm<T>,
    b: &PoleTerm<T>,
    cap: u32,
    out: &mut Vec<PoleTerm<T>>,
) -> Result<()> {
    let c = a.coeff * b.coeff;
    if same_pole(a.pole, b.pole) {
        let order = a.order + b.order;
        if order > cap {
            return Err(Error::OrderOverflow { order, cap });
        }
        out.push(PoleTerm::new(a.pole, order, c));
        return Ok(());
    }
    let (m, n) = (a.order, b.order);
    // 1/((w-p)^m (w-q)^n): coefficient of 1/(w-p)^k is
    // (-1)^j C(n+j-1, j) / (p-q)^(n+j) with j = m-k, and symmetrically at q.
    let d = a.pole - b.pole;
    for k in 1..=m {
        let j = m - k;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = c * lit::<T>(sign * binomial(n + j - 1, j)) / d.powu(n + j);
        out.push(PoleTerm::new(a.pole, k, coeff));
    }
    let d = b.pole - a.pole;
    for k in 1..=n {
        let j = n - k;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = c * lit::<T>(sign * binomial(m + j - 1, j)) / d.powu(m + j);
        out.push(PoleTerm::new(b.pole, k, coeff));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    pole: [f64; 2],
    order: u32,
    coeff: [f64; 2],
}

/// JSON wire form: `{"constant":[re,im],"terms":[{"pole":[re,im],"order":m,"coeff":[re,im]}]}`.
#[derive(Serialize, Deserialize)]
pub struct RationalFnJson {
    #[serde(default)]
    constant: [f64; 2],
    terms: Vec<TermJson>,
}

fn pair<T: Scalar>(z: Complex<T>) -> [f64; 2] {
    [to_f64(z.re), to_f64(z.im)]
}

fn unpair<T: Scalar>(p: [f64; 2]) -> Complex<T> {
    Complex::new(lit(p[0]), lit(p[1]))
}

impl RationalFnJson {
    pub fn from_fn<T: Scalar>(f: &RationalFn<T>) -> Self {
        Self {
            constant: pair(f.constant),
            terms: f
                .terms
                .iter()
                .map(|t| TermJson {
                    pole: pair(t.pole),
                    order: t.order,
                    coeff: pair(t.coeff),
                })
                .collect(),
        }
    }

    pub fn to_fn<T: Scalar>(&self) -> Result<RationalFn<T>> {
        RationalFn::new(
            self.terms
                .iter()
                .map(|t| PoleTerm::new(unpair(t.pole), t.order, unpair(t.coeff)))
                .collect(),
            unpair(self.constant),
        )
    }
}

impl<T: Scalar> Serialize for RationalFn<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalFnJson::from_fn(self).serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for RationalFn<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RationalFnJson::deserialize(d)?
            .to_fn()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {

    #[test]
    fn division_by_w() {
        let f = RationalFn::new(
            vec![
                PoleTerm::new(C::new(0.5, 1.0), 1, C::new(0.3, -0.1)),
                PoleTerm::new(C::new(-1.0, -2.0), 3, C::new(1.2, 0.4)),
            ],
            C::new(0.7, 0.2),
        )
        .unwrap();
        let (q, f0) = f.div_w().unwrap();
        assert!((f0 - f.eval(C::new(0.0, 0.0)).unwrap()).norm() < 1e-15);
        for w in [C::new(0.3, 0.0), C::new(-2.0, 0.5), C::new(5.0, -1.0)] {
            let lhs = f.eval(w).unwrap() / w;
            let rhs = q.eval(w).unwrap() + f0 / w;
            assert!((lhs - rhs).norm() < 1e-13, "{lhs} vs {rhs}");
        }
    }
    use super::*;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn simple(p: C, k: C) -> RationalFn<f64> {
        RationalFn::pole(p, 1, k).unwrap()
    }

    /// Principal-value Hilbert transform `(1/π) PV ∫ f(s)/(s-u) ds` by
    /// pairing `u ± x` and integrating over `x = e^y` with the trapezoid rule.
    fn hilbert_quadrature(f: &RationalFn<f64>, u: f64) -> C {
        let h = 0.01;
        let mut acc = C::zero();
        let mut y: f64 = -40.0;
        while y <= 40.0 {
            let x = y.exp();
            let a = f.eval(c(u + x, 0.0)).unwrap();
            let b = f.eval(c(u - x, 0.0)).unwrap();
            acc += (a - b) * h;
            y += h;
        }
        acc / std::f64::consts::PI
    }

    #[test]
    fn eval_zero_function() {
        assert_eq!(RationalFn::<f64>::zero().eval(c(5.0, 0.0)).unwrap(), C::zero());
    }

    #[test]
    fn eval_pole_family_at_origin() {
        // A/(u + ia), A = a = 1
        let f = simple(c(0.0, -1.0), c(1.0, 0.0));
        let v = f.eval(C::zero()).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_matches_independent_forms() {
        let f = simple(c(0.0, 2.0), C::one()).add(&simple(c(0.0, -2.0), C::one()));
        let w = c(1.0, 0.0);
        let direct = C::one() / (w - c(0.0, 2.0)) + C::one() / (w - c(0.0, -2.0));
        let reversed = C::one() / (w - c(0.0, -2.0)) + C::one() / (w - c(0.0, 2.0));
        // combined: 2w / (w² + 4)
        let combined = w * 2.0 / (w * w + 4.0);
        let v = f.eval(w).unwrap();
        for r in [direct, reversed, combined] {
            assert!((v - r).norm() < 1e-14);
        }
    }

    #[test]
    fn eval_refuses_pole() {
        let f = simple(c(0.0, 1.0), C::one());
        assert!(matches!(f.eval(c(0.0, 1.0)), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn pole_on_axis_rejected() {
        assert!(RationalFn::pole(c(1.0, 0.0), 1, C::one()).is_err());
    }

    #[test]
    fn pminus_examples() {
        let up = simple(c(0.0, 1.0), C::one());
        let down = simple(c(0.0, -1.0), C::one());
        assert_eq!(up.pminus(), up);
        assert!(down.pminus().is_zero());
        let f = up.add(&down).add(&RationalFn::constant(c(4.0, 0.0)));
        let expect = up.add(&RationalFn::constant(c(2.0, 0.0)));
        assert!(f.pminus().approx_eq(&expect, 1e-15));
    }

    #[test]
    fn pminus_matches_hilbert_quadrature() {
        // P⁻ = ½(1 + iĤ) on the decaying part; constant halves separately.
        let f = simple(c(0.0, 1.0), C::one())
            .add(&simple(c(0.0, -1.0), C::one()))
            .add(&RationalFn::constant(c(4.0, 0.0)));
        let decaying = f.sub(&RationalFn::constant(f.constant_term()));
        let p = f.pminus();
        for j in 0..20 {
            let u = -4.75 + 0.5 * j as f64;
            let hil = hilbert_quadrature(&decaying, u);
            let lhs = (decaying.eval(c(u, 0.0)).unwrap() + C::i() * hil) * 0.5
                + f.constant_term() * 0.5;
            let rhs = p.eval(c(u, 0.0)).unwrap();
            assert!((lhs - rhs).norm() < 1e-8, "u = {u}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn pminus_double_application_quarters_constant() {
        let f = simple(c(1.0, 2.0), c(0.5, 0.1)).add(&RationalFn::constant(c(3.0, -1.0)));
        let twice = f.pminus().pminus();
        assert_eq!(twice.terms(), f.pminus().terms());
        assert!((twice.constant_term() - c(0.75, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn conj_examples() {
        let f = simple(c(0.0, 1.0), C::one());
        assert_eq!(f.conj(), simple(c(0.0, -1.0), C::one()));
        let sym = simple(c(1.0, 1.0), c(2.0, 0.0)).add(&simple(c(1.0, -1.0), c(2.0, 0.0)));
        assert!(sym.conj().approx_eq(&sym, 1e-15));
    }

    #[test]
    fn derivative_and_antiderivative() {
        let f = simple(c(0.0, 1.0), C::one());
        let d = f.derivative();
        assert_eq!(d, RationalFn::pole(c(0.0, 1.0), 2, c(-1.0, 0.0)).unwrap());
        assert!(d.antiderivative().unwrap().approx_eq(&f, 1e-15));
        assert!(matches!(
            f.antiderivative(),
            Err(Error::NotIntegrableToRational(_))
        ));
    }

    #[test]
    fn mul_partial_fractions() {
        let f = simple(c(0.0, 1.0), C::one());
        let g = simple(c(0.0, 2.0), C::one());
        let p = f.mul(&g).unwrap();
        // (1/i)[1/(w-2i) - 1/(w-i)]
        let expect = g.sub(&f).scale(C::one() / C::i());
        assert!(p.approx_eq(&expect, 1e-14));
        for j in 0..20 {
            let w = c(-3.0 + 0.37 * j as f64, 0.3 * (j as f64).sin());
            let lhs = p.eval(w).unwrap();
            let rhs = f.eval(w).unwrap() * g.eval(w).unwrap();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn mul_same_pole_bumps_order_and_caps() {
        let f = RationalFn::pole(c(0.0, 1.0), 3, C::one()).unwrap();
        let sq = f.mul(&f).unwrap();
        assert_eq!(sq.max_order(), 6);
        assert!(matches!(
            sq.mul(&f),
            Err(Error::OrderOverflow { order: 9, cap: 8 })
        ));
    }

    #[test]
    fn mul_w_matches_pointwise() {
        let f = RationalFn::new(
            vec![
                PoleTerm::new(c(0.5, 1.0), 1, c(1.0, -0.5)),
                PoleTerm::new(c(-1.0, 2.0), 2, c(0.3, 0.2)),
            ],
            C::zero(),
        )
        .unwrap();
        let g = f.mul_w().unwrap();
        for j in 0..10 {
            let w = c(j as f64 - 4.5, -0.2);
            assert!((g.eval(w).unwrap() - w * f.eval(w).unwrap()).norm() < 1e-13);
        }
    }

    #[test]
    fn lattice_sum_matches_direct_sum() {
        let period = 7.0;
        let x = c(0.4, 0.9);
        for order in 2..=5u32 {
            let direct: C = (-4000..=4000)
                .map(|n| C::one() / (x + period * n as f64).powu(order))
                .sum();
            let closed = lattice_sum(x, order, period);
            // truncation tail of the direct sum beyond |n| = 4000
            let tail = 2.0 / (f64::from(order - 1) * period.powi(order as i32) * 4000f64.powi(order as i32 - 1));
            assert!((direct - closed).norm() < 2.0 * tail + 1e-13, "order {order}");
        }
        let direct: C = (-200000..=200000)
            .map(|n| C::one() / (x + period * n as f64))
            .sum();
        assert!((direct - lattice_sum(x, 1, period)).norm() < 1e-5);
    }

    #[test]
    fn json_wire_format() {
        let f = simple(c(1.0, 2.0), c(0.5, -1.0)).add(&RationalFn::constant(c(3.0, 0.0)));
        let s = f.to_json();
        assert_eq!(
            s,
            r#"{"constant":[3.0,0.0],"terms":[{"pole":[1.0,2.0],"order":1,"coeff":[0.5,-1.0]}]}"#
        );
        assert_eq!(RationalFn::<f64>::from_json(&s).unwrap(), f);
    }

    #[test]
    fn works_in_single_precision() {
        let f = RationalFn::<f32>::pole(Complex::new(0.0, 1.0), 1, Complex::new(1.0, 0.0)).unwrap();
        let v = f.eval(Complex::new(0.0, 0.0)).unwrap();
        assert!((v - Complex::new(0.0, 1.0)).norm() < 1e-6);
    }

    fn arb_fn(upper_only: bool) -> impl Strategy<Value = RationalFn<f64>> {
        let lo = if upper_only { 0.3 } else { -3.0 };
        prop::collection::vec(
            (-3.0..3.0f64, lo..3.0f64, 1u32..3, -2.0..2.0f64, -2.0..2.0f64),
            1..4,
        )
        .prop_filter_map("pole off axis", |v| {
            let terms = v
                .into_iter()
                .map(|(pr, pi, m, cr, ci)| {
                    let pi = if pi.abs() < 0.3 { 0.3f64.copysign(pi) } else { pi };
                    PoleTerm::new(c(pr, pi), m, c(cr, ci))
                })
                .collect();
            RationalFn::new(terms, c(0.7, -0.2)).ok()
        })
    }

    proptest! {
        #[test]
        fn projectors_complete(f in arb_fn(false), u in -5.0..5.0f64) {
            let w = c(u, 0.0);
            let sum = f.pminus().eval(w).unwrap() + f.pplus().eval(w).unwrap();
            let v = f.eval(w).unwrap();
            prop_assert!((sum - v).norm() < 1e-13 * (1.0 + v.norm()));
        }

        #[test]
        fn conj_is_involution(f in arb_fn(false)) {
            prop_assert_eq!(f.conj().conj(), f);
        }

        #[test]
        fn conj_conjugates_boundary_values(f in arb_fn(false), u in -5.0..5.0f64) {
            let w = c(u, 0.0);
            let lhs = f.conj().eval(w).unwrap();
            let rhs = f.eval(w).unwrap().conj();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn product_is_pointwise(f in arb_fn(false), g in arb_fn(true), u in -5.0..5.0f64) {
            let w = c(u, 0.1);
            let p = f.mul(&g).unwrap();
            let lhs = p.eval(w).unwrap();
            let rhs = f.eval(w).unwrap() * g.eval(w).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        }
    }
}
