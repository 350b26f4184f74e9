//! Space-time Fourier fields on a modulation-aligned lattice.
//!
//! Row `m` (frequency `k = m/λ`) stores `ℱu(k, τ)` at `τ = p(k) + nΔτ`, so a
//! cell is addressed by `(m, n)` and its modulation is exactly `σ = nΔτ`.
//! Aligning each row with the dispersion curve keeps free solutions on a few
//! cells even when `p(k)` is astronomically large.
//!
//! Normalization: `ℱu(k,τ) = (1/2π) ∫ e^{-iτt} c_k(t) dt`, hence
//! `c_k(t) = ∫ e^{iτt} ℱu(k,τ) dτ` and products transform to the
//! `(1/λ)Σ_{k₁} ∫ dτ₁` convolution.

use crate::dispersion::DispersionModel;
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::torus::{FftPair, SpectralField, TorusGrid};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Contiguous run of cells `start, start+1, …` in one row.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T> {
    pub start: i64,
    pub values: Vec<Complex<T>>,
}

impl<T> Segment<T> {
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField<T> {
    model: DispersionModel,
    grid: TorusGrid,
    dtau: T,
    rows: BTreeMap<i64, Vec<Segment<T>>>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(model: DispersionModel, grid: TorusGrid, dtau: T) -> Result<Self> {
        if grid.lambda() != model.lambda() {
            return invalid("grid and model disagree on lambda");
        }
        if !(dtau > T::zero()) || !dtau.is_finite() {
            return invalid(format!("dtau = {dtau} must be positive"));
        }
        Ok(SpaceTimeField { model, grid, dtau, rows: BTreeMap::new() })
    }

    /// Empty field sharing this field's lattice.
    pub fn empty_like(&self) -> Self {
        SpaceTimeField { model: self.model, grid: self.grid, dtau: self.dtau, rows: BTreeMap::new() }
    }

    pub fn model(&self) -> &DispersionModel {
        &self.model
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dtau(&self) -> T {
        self.dtau
    }

    pub fn rows(&self) -> &BTreeMap<i64, Vec<Segment<T>>> {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn frequency(&self, m: i64) -> T {
        self.grid.frequency(m)
    }

    #[inline]
    pub fn sigma(&self, n: i64) -> T {
        T::from_i64_lossy(n) * self.dtau
    }

    /// Absolute temporal frequency of cell `(m, n)`.
    pub fn tau(&self, m: i64, n: i64) -> T {
        self.model.phase_of_mode::<T>(m) + self.sigma(n)
    }

    /// Add `values` onto row `m` starting at cell `start`, merging with any
    /// overlapping or adjacent segment.
    pub fn accumulate(&mut self, m: i64, start: i64, values: &[Complex<T>]) -> Result<()> {
        if self.grid.slot(m).is_none() {
            return invalid(format!("row {m} outside lattice |m| <= {}", self.grid.cutoff()));
        }
        if values.is_empty() {
            return Ok(());
        }
        let row = self.rows.entry(m).or_default();
        let end = start + values.len() as i64;
        let mut lo = start;
        let mut hi = end;
        let mut touching = Vec::new();
        for (i, seg) in row.iter().enumerate() {
            if seg.start <= end && seg.end() >= start {
                lo = lo.min(seg.start);
                hi = hi.max(seg.end());
                touching.push(i);
            }
        }
        let mut merged = vec![Complex::new(T::zero(), T::zero()); (hi - lo) as usize];
        for &i in touching.iter().rev() {
            let seg = row.remove(i);
            let off = (seg.start - lo) as usize;
            for (d, v) in merged[off..].iter_mut().zip(seg.values) {
                *d = *d + v;
            }
        }
        let off = (start - lo) as usize;
        for (d, v) in merged[off..].iter_mut().zip(values) {
            *d = *d + *v;
        }
        let pos = row.partition_point(|s| s.start < lo);
        row.insert(pos, Segment { start: lo, values: merged });
        Ok(())
    }

    pub fn get(&self, m: i64, n: i64) -> Complex<T> {
        self.rows
            .get(&m)
            .and_then(|row| row.iter().find(|s| s.start <= n && n < s.end()))
            .map(|s| s.values[(n - s.start) as usize])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Every stored cell `(m, n, value)` in row-major, increasing order.
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64, Complex<T>)> + '_ {
        self.rows.iter().flat_map(|(&m, row)| {
            row.iter().flat_map(move |seg| {
                seg.values.iter().enumerate().map(move |(i, &v)| (m, seg.start + i as i64, v))
            })
        })
    }

    pub fn cell_count(&self) -> usize {
        self.rows.values().flat_map(|r| r.iter()).map(|s| s.values.len()).sum()
    }

    /// Same storage layout, values transformed cellwise.
    pub fn map_cells(&self, mut f: impl FnMut(i64, i64, Complex<T>) -> Complex<T>) -> Self {
        let mut out = self.clone();
        for (&m, row) in out.rows.iter_mut() {
            for seg in row.iter_mut() {
                for (i, v) in seg.values.iter_mut().enumerate() {
                    *v = f(m, seg.start + i as i64, *v);
                }
            }
        }
        out
    }

    /// Keep cells where `keep(k, σ)` holds, zero the rest.
    pub fn mask(&self, mut keep: impl FnMut(T, T) -> bool) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let g = self.grid;
        let dtau = self.dtau;
        self.map_cells(|m, n, v| {
            if keep(g.frequency(m), T::from_i64_lossy(n) * dtau) {
                v
            } else {
                zero
            }
        })
    }

    pub fn scale(&self, a: Complex<T>) -> Self {
        self.map_cells(|_, _, v| v * a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (&m, row) in &other.rows {
            for seg in row {
                out.accumulate(m, seg.start, &seg.values)?;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.model != other.model || self.grid != other.grid || self.dtau != other.dtau {
            return invalid("space-time fields live on different lattices");
        }
        Ok(())
    }

    /// `(1/λ) Δτ Σ |ℱu|²`, the squared `X_{0,0}` norm.
    pub fn mass(&self) -> T {
        let s = self.cells().fold(T::zero(), |a, (_, _, v)| a + v.norm_sqr());
        s * self.dtau / self.grid.lambda().value::<T>()
    }

    pub fn max_abs(&self) -> T {
        self.cells().map(|(_, _, v)| v.norm()).fold(T::zero(), T::max)
    }

    /// Drop all-zero segments and rows.
    pub fn compact(&mut self) {
        for row in self.rows.values_mut() {
            row.retain(|s| s.values.iter().any(|v| v.re != T::zero() || v.im != T::zero()));
        }
        self.rows.retain(|_, r| !r.is_empty());
    }

    /// Smallest and largest cell index over all rows.
    pub fn sigma_extent(&self) -> Option<(i64, i64)> {
        let lo = self.rows.values().filter_map(|r| r.first()).map(|s| s.start).min()?;
        let hi = self.rows.values().filter_map(|r| r.last()).map(|s| s.end() - 1).max()?;
        Some((lo, hi))
    }

    pub(crate) fn from_parts(
        model: DispersionModel,
        grid: TorusGrid,
        dtau: T,
        rows: BTreeMap<i64, Vec<Segment<T>>>,
    ) -> Self {
        SpaceTimeField { model, grid, dtau, rows }
    }
}

/// Smooth time cutoff.
pub trait TimeWindow<T> {
    fn value(&self, t: T) -> T;
}

/// C^∞ bump: 1 on `[-1, 1]`, 0 outside `(-2, 2)`, built from `e^{-1/x}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SmoothBump;

impl<T: Real> TimeWindow<T> for SmoothBump {
    fn value(&self, t: T) -> T {
        let psi = |x: T| if x > T::zero() { (-x.recip()).exp() } else { T::zero() };
        let a = t.abs();
        let up = psi(T::lit(2.0) - a);
        let down = psi(a - T::one());
        if up == T::zero() {
            T::zero()
        } else {
            up / (up + down)
        }
    }
}

/// `η ≡ 1`; for frame series that already carry their cutoff.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitWindow;

impl<T: Real> TimeWindow<T> for UnitWindow {
    fn value(&self, _t: T) -> T {
        T::one()
    }
}

/// Frames `u(t₀ + n·dt)`, `n = 0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSeries<T> {
    pub t0: T,
    pub dt: T,
    pub frames: Vec<SpectralField<T>>,
}

impl<T: Real> FrameSeries<T> {
    pub fn new(t0: T, dt: T, frames: Vec<SpectralField<T>>) -> Result<Self> {
        if !(dt > T::zero()) {
            return invalid("frame spacing must be positive");
        }
        if let Some(f) = frames.first() {
            if frames.iter().any(|g| g.grid() != f.grid()) {
                return invalid("frames live on different grids");
            }
        }
        Ok(FrameSeries { t0, dt, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time(&self, n: usize) -> T {
        self.t0 + T::from_usize(n).unwrap() * self.dt
    }

    pub fn last(&self) -> Option<&SpectralField<T>> {
        self.frames.last()
    }

    /// Index of the frame at time 0, if it lies on the grid.
    pub fn origin_index(&self) -> Option<usize> {
        let x = -self.t0 / self.dt;
        let n = x.round();
        if (x - n).abs() < T::lit(1e-9) && n >= T::zero() && n.to_usize()? < self.len() {
            n.to_usize()
        } else {
            None
        }
    }
}

/// Window the frames with `η`, demodulate each row by `e^{-itp(k)}` and
/// Fourier transform in time. `Δτ = 2π/(T·dt)`; cells `n ∈ [-⌊T/2⌋, ⌈T/2⌉)`.
pub fn spacetime_from_timeseries<T: Real, W: TimeWindow<T>>(
    model: &DispersionModel,
    series: &FrameSeries<T>,
    window: &W,
) -> Result<SpaceTimeField<T>> {
    let len = series.len();
    if len < 8 {
        return invalid(format!("need at least 8 frames, got {len}"));
    }
    let grid = *series.frames[0].grid();
    let two_pi = T::lit(2.0) * T::PI();
    let dtau = two_pi / (T::from_usize(len).unwrap() * series.dt);
    let mut out = SpaceTimeField::new(*model, grid, dtau)?;
    let fft = FftPair::<T>::new(len);
    let weights: Vec<T> = (0..len).map(|n| window.value(series.time(n))).collect();
    let lo = -((len / 2) as i64);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for m in grid.lattice() {
        if series.frames.iter().all(|f| {
            let c = f.coeff(m);
            c.re == T::zero() && c.im == T::zero()
        }) {
            continue;
        }
        let p = model.phase_of_mode::<T>(m);
        for (n, b) in buf.iter_mut().enumerate() {
            let t = series.time(n);
            *b = series.frames[n].coeff(m) * Complex::from_polar(weights[n], -t * p);
        }
        fft.forward(&mut buf);
        let scale = series.dt / two_pi;
        let values: Vec<Complex<T>> = (0..len as i64)
            .map(|i| {
                let q = lo + i;
                let sigma = T::from_i64_lossy(q) * dtau;
                buf[q.rem_euclid(len as i64) as usize] * Complex::from_polar(scale, -sigma * series.t0)
            })
            .collect();
        out.accumulate(m, lo, &values)?;
    }
    Ok(out)
}

/// Result of a space-time product.
#[derive(Clone, Debug)]
pub struct Product<T> {
    pub field: SpaceTimeField<T>,
    /// Largest `|Δ/Δτ - round(Δ/Δτ)|` over contributing pairs; zero when every
    /// dispersion mismatch is a multiple of `Δτ`.
    pub binning_error: f64,
    /// Contributions discarded because `m₁+m₂` left the lattice.
    pub dropped_pairs: usize,
}

/// `ℱ(uv)(k,τ) = (1/λ) Σ_{k₁} Δτ Σ ℱu(k₁,τ₁) ℱv(k-k₁,τ-τ₁)`.
///
/// In modulation coordinates the output cell is `n₁+n₂+Δ/Δτ` with
/// `Δ = p(k₁)+p(k₂)-p(k)`, computed exactly; non-integral offsets are
/// rounded to the nearest cell.
pub fn spacetime_product<T: Real>(
    u: &SpaceTimeField<T>,
    v: &SpaceTimeField<T>,
) -> Result<Product<T>> {
    u.check_compatible(v)?;
    let model = u.model;
    let dtau_exact = BigRational::from_float(u.dtau.f64())
        .ok_or_else(|| crate::Error::InvalidInput("non-finite dtau".into()))?;
    let w = u.dtau / u.grid.lambda().value::<T>();
    let mut out = u.empty_like();
    let mut binning = 0.0f64;
    let mut dropped = 0usize;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    for (&m1, row1) in &u.rows {
        for (&m2, row2) in &v.rows {
            let m = m1 + m2;
            if u.grid.slot(m).is_none() {
                dropped += 1;
                continue;
            }
            let delta = model.phase_exact(m1) + model.phase_exact(m2) - model.phase_exact(m);
            let x = delta / &dtau_exact;
            let shift_r = (x.clone() + &half).floor();
            let err = (x - &shift_r).to_f64().unwrap_or(f64::INFINITY).abs();
            binning = binning.max(err);
            let shift = shift_r
                .to_integer()
                .to_i64()
                .ok_or_else(|| crate::Error::InvalidInput("modulation offset overflow".into()))?;
            for s1 in row1 {
                for s2 in row2 {
                    let conv = linear_convolution(&s1.values, &s2.values, w);
                    out.accumulate(m, s1.start + s2.start + shift, &conv)?;
                }
            }
        }
    }
    Ok(Product { field: out, binning_error: binning, dropped_pairs: dropped })
}

fn linear_convolution<T: Real>(a: &[Complex<T>], b: &[Complex<T>], w: T) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let xw = x * w;
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o = *o + xw * y;
        }
    }
    out
}
