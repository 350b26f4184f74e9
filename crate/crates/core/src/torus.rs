//! Fourier analysis on the torus of circumference 2πλ.
//!
//! Coefficients are normalized so that `f(x) = (1/λ) Σ_k c(k) e^{ikx}` over the
//! lattice `k = m/λ`, i.e. `c(k) = (1/2π) ∫₀^{2πλ} e^{-ikx} f(x) dx`. With this
//! choice every sum over frequencies carries the counting-measure factor `1/λ`
//! and the product of two functions transforms to
//! `(1/λ) Σ_{k₁} c_f(k - k₁) c_g(k₁)` without stray constants.

use crate::error::{invalid, Result};
use crate::scalar::Real;
use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Rational period parameter `λ = num/den ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lambda {
    num: u64,
    den: u64,
}

impl Lambda {
    pub const ONE: Lambda = Lambda { num: 1, den: 1 };

    pub fn integer(n: u64) -> Result<Self> {
        Self::rational(n, 1)
    }

    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num < den {
            return invalid(format!("lambda = {num}/{den} must be a rational >= 1"));
        }
        let g = num.gcd(&den);
        Ok(Lambda { num: num / g, den: den / g })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn value<T: Real>(&self) -> T {
        T::from_u64(self.num).unwrap() / T::from_u64(self.den).unwrap()
    }

    pub fn ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    /// `λμ` for an integer dilation `μ`.
    pub fn dilate(&self, mu: u64) -> Result<Self> {
        match self.num.checked_mul(mu) {
            Some(n) if mu >= 1 => Self::rational(n, self.den),
            _ => invalid(format!("cannot dilate lambda by {mu}")),
        }
    }

    /// Exact frequency `m/λ`.
    pub fn frequency_exact(&self, m: i64) -> BigRational {
        BigRational::new(BigInt::from(m) * BigInt::from(self.den), BigInt::from(self.num))
    }
}

impl std::fmt::Display for Lambda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Equispaced grid of `M` points on `[0, 2πλ)` and the dual lattice
/// `{m/λ : |m| ≤ M/2}`; the Nyquist mode `|m| = M/2` is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    lambda: Lambda,
    modes: usize,
}

impl TorusGrid {
    pub fn new(lambda: Lambda, modes: usize) -> Result<Self> {
        if modes < 4 || modes % 2 != 0 {
            return invalid(format!("grid size M = {modes} must be even and >= 4"));
        }
        Ok(TorusGrid { lambda, modes })
    }

    /// Grid on the standard 2π-torus.
    pub fn unit(modes: usize) -> Result<Self> {
        Self::new(Lambda::ONE, modes)
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Largest |m| that may carry a nonzero coefficient.
    pub fn cutoff(&self) -> i64 {
        (self.modes / 2) as i64 - 1
    }

    /// Storage slot of lattice index `m` (FFT ordering), `None` outside the
    /// retained band.
    #[inline]
    pub fn slot(&self, m: i64) -> Option<usize> {
        if m.abs() > self.cutoff() {
            None
        } else {
            Some(m.rem_euclid(self.modes as i64) as usize)
        }
    }

    #[inline]
    pub fn mode_at(&self, slot: usize) -> i64 {
        if slot < self.modes / 2 {
            slot as i64
        } else {
            slot as i64 - self.modes as i64
        }
    }

    /// Lattice indices `-cutoff ..= cutoff` in increasing order.
    pub fn lattice(&self) -> impl Iterator<Item = i64> {
        let c = self.cutoff();
        -c..=c
    }

    #[inline]
    pub fn frequency<T: Real>(&self, m: i64) -> T {
        T::from_i64_lossy(m) / self.lambda.value::<T>()
    }

    pub fn period<T: Real>(&self) -> T {
        T::lit(2.0) * T::PI() * self.lambda.value::<T>()
    }

    pub fn points<T: Real>(&self) -> Vec<T> {
        let h = self.period::<T>() / T::from_usize(self.modes).unwrap();
        (0..self.modes).map(|n| T::from_usize(n).unwrap() * h).collect()
    }

    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        Self::new(self.lambda, modes)
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return invalid(format!("grid mismatch: {self:?} vs {other:?}"));
        }
        Ok(())
    }
}

/// Fourier coefficients of a function on the torus, in FFT slot order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct SpectralField<T> {
    grid: TorusGrid,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField { grid, coeffs: vec![Complex::new(T::zero(), T::zero()); grid.modes] }
    }

    /// Build from `(m, c)` pairs; repeated indices accumulate.
    pub fn from_modes<I>(grid: TorusGrid, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex<T>)>,
    {
        let mut f = Self::zeros(grid);
        for (m, c) in modes {
            match grid.slot(m) {
                Some(i) => f.coeffs[i] = f.coeffs[i] + c,
                None => return invalid(format!("mode {m} outside lattice |m| <= {}", grid.cutoff())),
            }
        }
        Ok(f)
    }

    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(i64) -> Complex<T>) -> Self {
        let mut out = Self::zeros(grid);
        for m in grid.lattice() {
            let i = grid.slot(m).unwrap();
            out.coeffs[i] = f(m);
        }
        out
    }

    /// Wrap raw FFT-ordered storage; the Nyquist slot is cleared.
    pub fn from_slots(grid: TorusGrid, mut coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.modes {
            return invalid(format!("expected {} coefficients, got {}", grid.modes, coeffs.len()));
        }
        coeffs[grid.modes / 2] = Complex::new(T::zero(), T::zero());
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn slots(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Coefficient at lattice index `m` (zero outside the band).
    #[inline]
    pub fn coeff(&self, m: i64) -> Complex<T> {
        match self.grid.slot(m) {
            Some(i) => self.coeffs[i],
            None => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn set(&mut self, m: i64, c: Complex<T>) -> Result<()> {
        match self.grid.slot(m) {
            Some(i) => {
                self.coeffs[i] = c;
                Ok(())
            }
            None => invalid(format!("mode {m} outside lattice")),
        }
    }

    /// `(m, c)` in increasing `m`.
    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        self.grid.lattice().map(move |m| (m, self.coeff(m)))
    }

    /// Lattice indices carrying a nonzero coefficient, increasing.
    pub fn support(&self) -> Vec<i64> {
        self.iter_modes().filter(|(_, c)| !c.is_zero_c()).map(|(m, _)| m).collect()
    }

    pub fn support_radius(&self) -> i64 {
        self.support().iter().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0].is_zero_c()
    }

    pub fn is_conjugate_symmetric(&self, tol: T) -> bool {
        self.grid.lattice().all(|m| (self.coeff(-m) - self.coeff(m).conj()).norm() <= tol)
    }

    pub fn map(&self, mut f: impl FnMut(i64, Complex<T>) -> Complex<T>) -> Self {
        let mut out = self.clone();
        for slot in 0..self.grid.modes {
            if slot == self.grid.modes / 2 {
                continue;
            }
            out.coeffs[slot] = f(self.grid.mode_at(slot), self.coeffs[slot]);
        }
        out
    }

    pub fn scale(&self, a: Complex<T>) -> Self {
        self.map(|_, c| c * a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a = *a + *b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a = *a - *b);
        Ok(out)
    }

    /// `out += a * other` in place.
    pub fn axpy(&mut self, a: Complex<T>, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(x, y)| *x = *x + a * *y);
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Zero every mode with `|m| > radius`.
    pub fn truncate(&self, radius: i64) -> Self {
        self.map(|m, c| if m.abs() > radius { Complex::new(T::zero(), T::zero()) } else { c })
    }

    /// 2/3-rule band: keep `|m| ≤ ⌊(M-1)/3⌋`.
    pub fn dealias(&self) -> Self {
        self.truncate(dealias_radius(self.grid.modes))
    }

    /// Multiply by the symbol `ik` of `∂_x`.
    pub fn derivative(&self) -> Self {
        let g = self.grid;
        self.map(|m, c| c * Complex::new(T::zero(), g.frequency::<T>(m)))
    }

    /// `(1/λ) Σ_k |c(k)|²` = `(1/2π) ∫ |f|² dx`.
    pub fn mass(&self) -> T {
        let lam = self.grid.lambda.value::<T>();
        self.coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr()) / lam
    }

    /// Physical `L²(0, 2πλ)` norm.
    pub fn l2_norm(&self) -> T {
        (T::lit(2.0) * T::PI() * self.mass()).sqrt()
    }

    /// Mean value `(1/2πλ) ∫ f dx`.
    pub fn mean(&self) -> Complex<T> {
        self.coeffs[0] / self.grid.lambda.value::<T>()
    }

    /// Copy onto a grid with a different `M` (same λ), dropping modes that
    /// do not fit.
    pub fn resample(&self, modes: usize) -> Result<Self> {
        let g = self.grid.with_modes(modes)?;
        Ok(Self::from_fn(g, |m| self.coeff(m)))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) trait ComplexExt {
    fn is_zero_c(&self) -> bool;
}

impl<T: Real> ComplexExt for Complex<T> {
    #[inline]
    fn is_zero_c(&self) -> bool {
        self.re == T::zero() && self.im == T::zero()
    }
}

/// Largest retained index under the 2/3 rule for an `M`-point grid.
pub fn dealias_radius(modes: usize) -> i64 {
    ((modes - 1) / 3) as i64
}

/// Reusable FFT plans for one transform length.
pub struct FftPair<T: Real> {
    len: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPair<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair { len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// In place `Σ_n x_n e^{-2πi mn/L}`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.fwd.process(buf);
    }

    /// In place `Σ_m x_m e^{2πi mn/L}` (no normalization).
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.inv.process(buf);
    }
}

impl<T: Real> std::fmt::Debug for FftPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftPair({})", self.len)
    }
}

/// Transform plans bound to a grid; reuse across calls in hot loops.
#[derive(Debug)]
pub struct SpectralPlan<T: Real> {
    grid: TorusGrid,
    fft: FftPair<T>,
    padded: FftPair<T>,
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(grid: TorusGrid) -> Self {
        SpectralPlan { grid, fft: FftPair::new(grid.modes), padded: FftPair::new(2 * grid.modes) }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn forward(&self, samples: &[Complex<T>]) -> Result<SpectralField<T>> {
        if samples.len() != self.grid.modes {
            return invalid(format!(
                "expected {} samples, got {}",
                self.grid.modes,
                samples.len()
            ));
        }
        let mut buf = samples.to_vec();
        self.forward_in_place(&mut buf);
        SpectralField::from_slots(self.grid, buf)
    }

    /// Samples → coefficients in place (`c = (λ/M) DFT`). Leaves the Nyquist
    /// slot untouched; callers wrap through `from_slots`.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.fft.forward(buf);
        let w = self.grid.lambda.value::<T>() / T::from_usize(self.grid.modes).unwrap();
        buf.iter_mut().for_each(|c| *c = *c * w);
    }

    pub fn inverse(&self, field: &SpectralField<T>) -> Vec<Complex<T>> {
        let mut buf = field.coeffs.clone();
        self.inverse_in_place(&mut buf);
        buf
    }

    /// Coefficients → samples in place (`f = (1/λ) IDFT`).
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.fft.inverse(buf);
        let w = T::one() / self.grid.lambda.value::<T>();
        buf.iter_mut().for_each(|c| *c = *c * w);
    }

    /// Exact linear convolution (zero-padded to `2M`), truncated to the lattice.
    pub fn convolve(&self, f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.grid.check_same(&f.grid)?;
        self.grid.check_same(&g.grid)?;
        let sf = f.support();
        let sg = g.support();
        let len = self.padded.len();
        // direct sum wins for sparse inputs (Picard data, single modes)
        if (sf.len() * sg.len()) as f64 <= 4.0 * len as f64 * (len as f64).log2() {
            return Ok(convolve_direct(f, g, &sf, &sg));
        }
        let scatter = |h: &SpectralField<T>| {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
            for (m, c) in h.iter_modes() {
                buf[m.rem_euclid(len as i64) as usize] = c;
            }
            self.padded.inverse(&mut buf);
            buf
        };
        let mut a = scatter(f);
        let b = scatter(g);
        a.iter_mut().zip(&b).for_each(|(x, y)| *x = *x * *y);
        self.padded.forward(&mut a);
        let w = T::one() / (self.grid.lambda.value::<T>() * T::from_usize(len).unwrap());
        Ok(SpectralField::from_fn(self.grid, |m| a[m.rem_euclid(len as i64) as usize] * w))
    }
}

fn convolve_direct<T: Real>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    sf: &[i64],
    sg: &[i64],
) -> SpectralField<T> {
    let grid = f.grid;
    let mut out = SpectralField::zeros(grid);
    let w = T::one() / grid.lambda.value::<T>();
    for &m1 in sf {
        let a = f.coeff(m1);
        for &m2 in sg {
            if let Some(i) = grid.slot(m1 + m2) {
                out.coeffs[i] = out.coeffs[i] + a * g.coeff(m2) * w;
            }
        }
    }
    out.coeffs[grid.modes / 2] = Complex::new(T::zero(), T::zero());
    out
}

/// Samples on `grid.points()` → coefficients.
pub fn forward_transform<T: Real>(samples: &[Complex<T>], grid: TorusGrid) -> Result<SpectralField<T>> {
    SpectralPlan::new(grid).forward(samples)
}

pub fn forward_transform_real<T: Real>(samples: &[T], grid: TorusGrid) -> Result<SpectralField<T>> {
    let c: Vec<_> = samples.iter().map(|&x| Complex::new(x, T::zero())).collect();
    forward_transform(&c, grid)
}

/// Coefficients → samples `(1/λ) Σ_k c(k) e^{ikx_n}`.
pub fn inverse_transform<T: Real>(field: &SpectralField<T>) -> Vec<Complex<T>> {
    SpectralPlan::new(field.grid).inverse(field)
}

/// `(1/λ) Σ_{k₁} f(k - k₁) g(k₁)` restricted to the lattice.
pub fn convolve<T: Real>(f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
    f.grid.check_same(&g.grid)?;
    SpectralPlan::new(f.grid).convolve(f, g)
}

/// `(1/λ) Σ_k f(k) conj(g(k))` = `(1/2π) ∫ f conj(g) dx`.
pub fn inner_product<T: Real>(f: &SpectralField<T>, g: &SpectralField<T>) -> Result<Complex<T>> {
    f.grid.check_same(&g.grid)?;
    let s = f
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * b.conj());
    Ok(s / f.grid.lambda.value::<T>())
}
