//! Periodic pseudospectral representation of complex functions of `u`.
//!
//! Samples live on `u_j = -L/2 + j Δu`. The spectrum holds the coefficients
//! `f̂_k` of `e^{iκ_k u}`, `κ_k = 2πk/L`, stored in FFT order (index `j`
//! carries `k = j` for `j < n/2` and `k = j - n` otherwise, so the Nyquist
//! mode counts as `k = -n/2`).
//!
//! A function analytic and bounded in `Im w < 0` has `f̂_k = 0` for `k > 0`.

use std::fmt;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::analytic::RationalFn;
use crate::error::{Error, Result};
use crate::scalar::{imag_unit, lit, to_f64, Scalar};

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 1024;
/// Default box length `64·2π`.
pub const DEFAULT_LENGTH: f64 = 64.0 * 2.0 * std::f64::consts::PI;
/// Relative size of positive modes tolerated in a lower-analytic field.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Coefficients below this fraction of the largest are dropped before
/// evaluating above the axis.
pub const NOISE_THRESHOLD: f64 = 1e-12;
/// Default ceiling on the estimated continuation error, relative to the
/// largest coefficient.
pub const CONTINUATION_TOL: f64 = 1e-5;

#[derive(Clone)]
pub struct Grid<T: Scalar> {
    n: usize,
    length: T,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl<T: Scalar> Grid<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= 16"
            )));
        }
        if !(length > T::zero()) {
            return Err(Error::InvalidGrid(format!("length {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            length,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn dx(&self) -> T {
        self.length / lit(self.n as f64)
    }

    pub fn u(&self, j: usize) -> T {
        -self.length * lit(0.5) + self.dx() * lit(j as f64)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|j| self.u(j)).collect()
    }

    /// Signed wavenumber index of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn kappa(&self, j: usize) -> T {
        T::TAU() * lit(self.wavenumber(j) as f64) / self.length
    }

    /// Sample indices with |u| ≤ `frac`·L/2.
    pub fn interior(&self, frac: f64) -> Vec<usize> {
        let lim = self.length * lit(0.5 * frac);
        (0..self.n).filter(|&j| self.u(j).abs() <= lim).collect()
    }
}

impl Default for Grid<f64> {
    fn default() -> Self {
        Grid::new(DEFAULT_POINTS, DEFAULT_LENGTH).expect("default grid")
    }
}

/// Grid samples of a complex function with a lazily cached spectrum.
#[derive(Clone)]
pub struct ComplexField<T: Scalar> {
    grid: Grid<T>,
    samples: Vec<Complex<T>>,
    spectrum: OnceLock<Vec<Complex<T>>>,
}

impl<T: Scalar> fmt::Debug for ComplexField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

fn parity<T: Scalar>(j: usize) -> T {
    if j % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: Scalar> ComplexField<T> {
    pub fn from_samples(grid: &Grid<T>, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} samples for {} points",
                samples.len(),
                grid.n
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        let samples = (0..grid.n).map(|j| f(grid.u(j))).collect();
        Self {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    /// Samples of the `L`-periodic image sum of `f`.
    pub fn from_rational(grid: &Grid<T>, f: &RationalFn<T>) -> Self {
        let l = grid.length;
        Self::from_fn(grid, |u| f.eval_periodic(Complex::new(u, T::zero()), l))
    }

    /// Samples of the periodic image sum of `f`, where `head` is a rational
    /// function sharing the slow algebraic tail of `f`: the images of `head`
    /// are summed exactly and those of `f - head` are neglected.
    pub fn from_fn_with_head(
        grid: &Grid<T>,
        f: impl Fn(T) -> Complex<T>,
        head: &RationalFn<T>,
    ) -> Result<Self> {
        let l = grid.length;
        let samples = (0..grid.n)
            .map(|j| {
                let u = Complex::new(grid.u(j), T::zero());
                Ok(f(u.re) + head.eval_periodic(u, l) - head.eval(u)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(grid, samples)
    }

    pub fn from_spectrum(grid: &Grid<T>, spectrum: Vec<Complex<T>>) -> Result<Self> {
        if spectrum.len() != grid.n {
            return Err(Error::InvalidGrid("spectrum length mismatch".into()));
        }
        let n = lit::<T>(grid.n as f64);
        let mut buf: Vec<Complex<T>> = spectrum
            .iter()
            .enumerate()
            .map(|(j, c)| *c * (n * parity::<T>(j)))
            .collect();
        grid.inv.process(&mut buf);
        for s in buf.iter_mut() {
            *s = *s / n;
        }
        let field = Self {
            grid: grid.clone(),
            samples: buf,
            spectrum: OnceLock::new(),
        };
        let _ = field.spectrum.set(spectrum);
        Ok(field)
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, Complex::zero())
    }

    pub fn constant(grid: &Grid<T>, c: Complex<T>) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn spectrum(&self) -> &[Complex<T>] {
        self.spectrum.get_or_init(|| {
            let mut buf = self.samples.clone();
            self.grid.fwd.process(&mut buf);
            let n = lit::<T>(self.grid.n as f64);
            buf.iter()
                .enumerate()
                .map(|(j, c)| *c * parity::<T>(j) / n)
                .collect()
        })
    }

    fn map_spectrum(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
        let spec = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(j, c)| f(j, *c))
            .collect();
        Self::from_spectrum(&self.grid, spec).expect("same grid")
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|a| f(*a)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a / b)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|a| a * s)
    }

    pub fn add_const(&self, c: Complex<T>) -> Self {
        self.map(|a| a + c)
    }

    /// Pointwise conjugate of the boundary values (spectrum reflected `k → -k`).
    pub fn conj(&self) -> Self {
        self.map(|a| a.conj())
    }

    /// Keeps `k < 0`, halves `k = 0`, zeroes `k > 0`.
    pub fn project_minus(&self) -> Self {
        let g = &self.grid;
        let half = lit::<T>(0.5);
        self.map_spectrum(|j, c| match g.wavenumber(j) {
            k if k < 0 => c,
            0 => c * half,
            _ => Complex::zero(),
        })
    }

    /// Mirror of [`project_minus`](Self::project_minus): the two sum to the identity.
    pub fn project_plus(&self) -> Self {
        let g = &self.grid;
        let half = lit::<T>(0.5);
        self.map_spectrum(|j, c| match g.wavenumber(j) {
            k if k > 0 => c,
            0 => c * half,
            _ => Complex::zero(),
        })
    }

    /// `f̂_k ↦ i sign(k) f̂_k`.
    pub fn hilbert(&self) -> Self {
        let g = &self.grid;
        let i = imag_unit::<T>();
        self.map_spectrum(|j, c| match g.wavenumber(j) {
            k if k > 0 => c * i,
            k if k < 0 => -c * i,
            _ => Complex::zero(),
        })
    }

    pub fn deriv(&self) -> Self {
        let g = &self.grid;
        let i = imag_unit::<T>();
        self.map_spectrum(|j, c| c * i * g.kappa(j))
    }

    /// Periodic antiderivative with zero mean; refuses fields whose mean
    /// would integrate to a secular term.
    pub fn antideriv(&self) -> Result<Self> {
        let spec = self.spectrum();
        let max = max_norm(spec);
        let zero_mode = spec[0].norm();
        if zero_mode > lit::<T>(ANALYTIC_TOL) * max {
            return Err(Error::ZeroModeError {
                magnitude: to_f64(zero_mode),
            });
        }
        let g = &self.grid;
        let i = imag_unit::<T>();
        Ok(self.map_spectrum(|j, c| {
            if j == 0 {
                Complex::zero()
            } else {
                c / (i * g.kappa(j))
            }
        }))
    }

    /// Two-thirds rule: zero every mode with |k| > n/3.
    pub fn dealias(&self) -> Self {
        let g = &self.grid;
        let cut = (g.n / 3) as i64;
        self.map_spectrum(|j, c| {
            if g.wavenumber(j).abs() > cut {
                Complex::zero()
            } else {
                c
            }
        })
    }

    /// Zeroes the positive modes without touching `k ≤ 0`.
    pub fn drop_positive_modes(&self) -> Self {
        let g = &self.grid;
        self.map_spectrum(|j, c| if g.wavenumber(j) > 0 { Complex::zero() } else { c })
    }

    pub fn mean(&self) -> Complex<T> {
        let sum = self
            .samples
            .iter()
            .fold(Complex::<T>::zero(), |acc, s| acc + *s);
        sum / lit::<T>(self.grid.n as f64)
    }

    /// Trapezoid quadrature over one period (spectrally exact).
    pub fn integral(&self) -> Complex<T> {
        self.mean() * self.grid.length
    }

    pub fn max_abs(&self) -> T {
        max_norm(&self.samples)
    }

    pub fn min_abs(&self) -> T {
        self.samples
            .iter()
            .map(|s| s.norm())
            .fold(T::infinity(), T::min)
    }

    /// `max_{k>0} |f̂_k| / max_k |f̂_k|` (zero for the zero field).
    pub fn positive_mode_ratio(&self) -> T {
        let spec = self.spectrum();
        let max = max_norm(spec);
        if max == T::zero() {
            return T::zero();
        }
        let pos = spec
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.wavenumber(*j) > 0)
            .map(|(_, c)| c.norm())
            .fold(T::zero(), T::max);
        pos / max
    }

    pub fn is_lower_analytic(&self) -> bool {
        self.positive_mode_ratio() <= lit(ANALYTIC_TOL)
    }

    /// Continuation `Σ_{k≤0} f̂_k e^{iκ_k w}` with the default error ceiling.
    pub fn eval_offaxis(&self, w: Complex<T>) -> Result<Complex<T>> {
        self.eval_offaxis_tol(w, lit(CONTINUATION_TOL))
    }

    /// Continuation off the axis.
    ///
    /// Above the axis each mode is amplified by `e^{|κ| Im w}`. Coefficients
    /// under `NOISE_THRESHOLD·max|f̂|` are dropped first, and the error that
    /// truncation costs (see [`continuation_error`](Self::continuation_error))
    /// must stay below `tol·max|f(u)|`.
    pub fn eval_offaxis_tol(&self, w: Complex<T>, tol: T) -> Result<Complex<T>> {
        let ratio = self.positive_mode_ratio();
        if ratio > lit(ANALYTIC_TOL) {
            return Err(Error::NotLowerAnalytic {
                ratio: to_f64(ratio),
            });
        }
        let spec = self.spectrum();
        let max = max_norm(spec);
        if max == T::zero() {
            return Ok(Complex::zero());
        }
        let floor = max * lit(NOISE_THRESHOLD);
        if w.im > T::zero() {
            let scale = self.max_abs();
            let estimate = self.continuation_error(w.im);
            if !(estimate <= tol * scale) {
                return Err(Error::ContinuationUnreliable {
                    height: to_f64(w.im),
                    estimate: to_f64(estimate / scale),
                });
            }
        }
        let i = imag_unit::<T>();
        let mut acc = Complex::zero();
        for (j, c) in spec.iter().enumerate() {
            if self.grid.wavenumber(j) > 0 || c.norm() < floor {
                continue;
            }
            acc = acc + *c * (i * w * self.grid.kappa(j)).exp();
        }
        Ok(acc)
    }

    /// Spectral envelope `max |f̂_{-m}|` over a small window around `m`.
    fn envelope(&self, m: i64) -> T {
        let spec = self.spectrum();
        let n = self.grid.n as i64;
        let lo = (m - 4).max(0);
        let hi = (m + 4).min(n / 2);
        (lo..=hi)
            .map(|q| spec[((n - q) % n) as usize].norm())
            .fold(T::zero(), T::max)
    }

    /// Exponential decay rate of the `k ≤ 0` spectrum in `κ`, fitted between
    /// the middle and the end of the retained band. This approximates the
    /// distance from the axis to the nearest singularity.
    pub fn decay_rate(&self) -> T {
        let (last, _) = self.retained_band();
        if last < 8 {
            return T::infinity();
        }
        let dk = T::TAU() / self.grid.length;
        let mid = last / 2;
        let a = self.envelope(mid);
        let b = self.envelope(last);
        if b <= T::zero() {
            return T::infinity();
        }
        (a / b).ln() / (dk * lit((last - mid) as f64))
    }

    fn retained_band(&self) -> (i64, T) {
        let spec = self.spectrum();
        let floor = max_norm(spec) * lit(NOISE_THRESHOLD);
        let mut last = 0i64;
        for (j, c) in spec.iter().enumerate() {
            let k = self.grid.wavenumber(j);
            if k <= 0 && c.norm() >= floor {
                last = last.max(-k);
            }
        }
        (last, floor)
    }

    /// Estimated absolute continuation error at height `h > 0`.
    ///
    /// The dropped coefficients continue the fitted decay `e^{-σκ}` below the
    /// noise floor, so their amplified sum is a geometric series starting at
    /// the first dropped wavenumber. When the spectrum is still above the
    /// floor at Nyquist the Nyquist coefficient stands in for the floor.
    /// Heights at or above the fitted singularity distance give infinity.
    pub fn continuation_error(&self, h: T) -> T {
        let (last, floor) = self.retained_band();
        let n = self.grid.n;
        let dk = T::TAU() / self.grid.length;
        let sigma = self.decay_rate();
        let geometric = if sigma.is_infinite() {
            T::one()
        } else if sigma <= h {
            return T::infinity();
        } else {
            T::one() / (T::one() - (-(sigma - h) * dk).exp())
        };
        let (start, k0) = if last == (n / 2) as i64 {
            (self.spectrum()[n / 2].norm().max(floor), last)
        } else {
            (floor, last + 1)
        };
        start * (dk * lit(k0 as f64) * h).exp() * geometric
    }

    /// Largest height at which [`eval_offaxis_tol`](Self::eval_offaxis_tol)
    /// accepts a point.
    pub fn validity_height(&self, tol: T) -> T {
        let target = tol * self.max_abs();
        if target == T::zero() {
            return T::infinity();
        }
        let sigma = self.decay_rate();
        let mut hi = if sigma.is_finite() { sigma } else { self.grid.length };
        if self.continuation_error(hi) <= target {
            return hi;
        }
        let mut lo = T::zero();
        for _ in 0..80 {
            let mid = (lo + hi) * lit(0.5);
            if self.continuation_error(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `u, Re f, Im f` rows in full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,re,im\n");
        for (j, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", self.grid.u(j), s.re, s.im);
        }
        out
    }

    /// `k, Re f̂, Im f̂` rows ordered from `k = -n/2` upwards.
    pub fn spectrum_csv(&self) -> String {
        let spec = self.spectrum();
        let n = self.grid.n;
        let mut out = String::from("k,re,im\n");
        for shift in 0..n {
            let j = (shift + n / 2) % n;
            let c = spec[j];
            let _ = writeln!(out, "{},{:.17e},{:.17e}", self.grid.wavenumber(j), c.re, c.im);
        }
        out
    }
}

fn max_norm<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|c| c.norm()).fold(T::zero(), T::max)
}
