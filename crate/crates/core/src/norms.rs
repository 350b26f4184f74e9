//! Sobolev, Bourgain `X_{s,b}`, `Y^s` and region-decomposed `Z^s` norms, and
//! dyadic modulation shells. All sums run in fixed (row-major) order so the
//! results are bit-reproducible.

use crate::dispersion::{DispersionModel, RegionLabel};
use crate::scalar::{bracket, Real};
use crate::spacetime::SpaceTimeField;
use crate::torus::SpectralField;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `(s, b)` and the choice `|k|^s` (homogeneous) vs `⟨k⟩^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec<T> {
    pub s: T,
    pub b: T,
    pub homogeneous: bool,
}

impl<T: Real> NormSpec<T> {
    pub fn new(s: T, b: T) -> Self {
        NormSpec { s, b, homogeneous: false }
    }

    pub fn sobolev(s: T) -> Self {
        NormSpec { s, b: T::zero(), homogeneous: false }
    }

    pub fn homogeneous(s: T) -> Self {
        NormSpec { s, b: T::zero(), homogeneous: true }
    }

    /// Squared frequency weight, `None` for the excluded homogeneous zero mode.
    #[inline]
    fn k_weight_sq(&self, k: T) -> Option<T> {
        if self.homogeneous {
            if k == T::zero() {
                None
            } else {
                Some(k.abs().powf(T::lit(2.0) * self.s))
            }
        } else {
            Some(bracket(k).powf(T::lit(2.0) * self.s))
        }
    }
}

/// `⟨σ⟩^{2b}` without forming the square root.
#[inline]
fn sigma_weight_sq<T: Real>(sigma: T, b: T) -> T {
    if b == T::zero() {
        T::one()
    } else {
        (T::one() + sigma * sigma).powf(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorm<T> {
    pub value: T,
    /// Set when a homogeneous norm skipped a nonzero mean.
    pub mean_excluded: bool,
}

/// `((1/λ) Σ_k w(k)^{2s} |c(k)|²)^{1/2}`.
pub fn sobolev_norm<T: Real>(u: &SpectralField<T>, spec: &NormSpec<T>) -> SobolevNorm<T> {
    let grid = *u.grid();
    let mut acc = T::zero();
    let mut mean_excluded = false;
    for (m, c) in u.iter_modes() {
        match spec.k_weight_sq(grid.frequency::<T>(m)) {
            Some(w) => acc = acc + w * c.norm_sqr(),
            None => mean_excluded |= c.norm_sqr() > T::zero(),
        }
    }
    SobolevNorm { value: (acc / grid.lambda().value::<T>()).sqrt(), mean_excluded }
}

/// `‖⟨k⟩^s ⟨σ⟩^b ℱu‖_{L²((dk)_λ dτ)}` with `Δτ` quadrature.
pub fn xsb_norm<T: Real>(u: &SpaceTimeField<T>, spec: &NormSpec<T>) -> T {
    xsb_sq(u, spec, |_| true).sqrt()
}

fn xsb_sq<T: Real>(u: &SpaceTimeField<T>, spec: &NormSpec<T>, mut keep: impl FnMut(RegionLabel) -> bool) -> T {
    let model = *u.model();
    let mut acc = T::zero();
    for (&m, row) in u.rows() {
        let k = u.frequency(m);
        let wk = match spec.k_weight_sq(k) {
            Some(w) => w,
            None => continue,
        };
        let mut row_acc = T::zero();
        for seg in row {
            for (i, v) in seg.values.iter().enumerate() {
                let sigma = u.sigma(seg.start + i as i64);
                if keep(model.classify_modulation(k, sigma)) {
                    row_acc = row_acc + sigma_weight_sq(sigma, spec.b) * v.norm_sqr();
                }
            }
        }
        acc = acc + wk * row_acc;
    }
    acc * u.dtau() / u.grid().lambda().value::<T>()
}

/// `‖⟨k⟩^s ℱu‖_{ℓ²_k L¹_τ}`.
pub fn ys_norm<T: Real>(u: &SpaceTimeField<T>, s: T) -> T {
    ys_sq(u, s, |_| true).sqrt()
}

fn ys_sq<T: Real>(u: &SpaceTimeField<T>, s: T, mut keep_row: impl FnMut(i64) -> bool) -> T {
    let mut acc = T::zero();
    for (&m, row) in u.rows() {
        if !keep_row(m) {
            continue;
        }
        let l1 = row.iter().flat_map(|seg| seg.values.iter()).fold(T::zero(), |a, v| a + v.norm());
        let l1 = l1 * u.dtau();
        acc = acc + bracket(u.frequency(m)).powf(T::lit(2.0) * s) * l1 * l1;
    }
    acc / u.grid().lambda().value::<T>()
}

/// The four `Z^s` terms and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZsNorm<T> {
    pub total: T,
    /// `‖P_{D₁∪D₅} u‖_{X_{s,(2j-1)/2j}}`
    pub low: T,
    /// `‖P_{D₂} u‖_{X_{(1-2j)s-1, s+1}}`
    pub mid: T,
    /// `‖P_{D₃∪D₄} u‖_{X_{-s/j-1, s/j+1}}`
    pub high: T,
    pub ys: T,
    /// Squared mass on `k = 0` cells, which `Z^s` does not see.
    pub zero_mode_mass: T,
}

/// `(s, b)` pairs of the three region terms for regularity `s`.
pub fn zs_weights<T: Real>(model: &DispersionModel, s: T) -> [NormSpec<T>; 3] {
    let j = T::from_u32(model.j()).unwrap();
    let one = T::one();
    let two = T::lit(2.0);
    [
        NormSpec::new(s, (two * j - one) / (two * j)),
        NormSpec::new((one - two * j) * s - one, s + one),
        NormSpec::new(-s / j - one, s / j + one),
    ]
}

/// Whether `s` lies in `[-j+½, -j/2]`.
pub fn zs_admissible<T: Real>(model: &DispersionModel, s: T) -> bool {
    let j = T::from_u32(model.j()).unwrap();
    s >= -j + T::lit(0.5) && s <= -j / T::lit(2.0)
}

pub fn zs_norm<T: Real>(u: &SpaceTimeField<T>, s: T) -> ZsNorm<T> {
    let model = *u.model();
    if !zs_admissible(&model, s) {
        log::warn!("Z^s evaluated at s = {s} outside [-j+1/2, -j/2] for j = {}", model.j());
    }
    zs_norm_quiet(u, s)
}

/// `zs_norm` without the admissibility warning, for sweeps that leave the
/// window on purpose.
pub(crate) fn zs_norm_quiet<T: Real>(u: &SpaceTimeField<T>, s: T) -> ZsNorm<T> {
    let model = *u.model();
    let [w15, w2, w34] = zs_weights(&model, s);
    use RegionLabel::*;
    let low = xsb_sq(u, &w15, |r| matches!(r, D1 | D5)).sqrt();
    let mid = xsb_sq(u, &w2, |r| r == D2).sqrt();
    let high = xsb_sq(u, &w34, |r| matches!(r, D3 | D4)).sqrt();
    let ys = ys_sq(u, s, |m| m != 0).sqrt();
    let zero_mode_mass = restrict_to_regions(u, &[ZeroMode]).mass();
    ZsNorm { total: low + mid + high + ys, low, mid, high, ys, zero_mode_mass }
}

/// `P_D u` for a union of regions.
pub fn restrict_to_regions<T: Real>(u: &SpaceTimeField<T>, regions: &[RegionLabel]) -> SpaceTimeField<T> {
    let model = *u.model();
    u.mask(|k, sigma| regions.contains(&model.classify_modulation(k, sigma)))
}

/// Squared mass per region label (labels with no cells omitted).
pub fn region_masses<T: Real>(u: &SpaceTimeField<T>) -> BTreeMap<RegionLabel, T> {
    let model = *u.model();
    let mut out = BTreeMap::new();
    for (m, n, v) in u.cells() {
        let label = model.classify_modulation(u.frequency(m), u.sigma(n));
        let e = out.entry(label).or_insert(T::zero());
        *e = *e + v.norm_sqr();
    }
    let w = u.dtau() / u.grid().lambda().value::<T>();
    out.values_mut().for_each(|x| *x = *x * w);
    out
}

/// Modulation band `⟨σ⟩ ∈ [2^l, 2^{l+1})`; `l = 0` covers `⟨σ⟩ < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicShell {
    pub l: u32,
}

impl DyadicShell {
    pub fn new(l: u32) -> Self {
        DyadicShell { l }
    }

    /// Shell containing `σ`; compares `1+σ²` against powers of 4, so the
    /// boundaries are exact.
    pub fn of<T: Real>(sigma: T) -> Self {
        let q = T::one() + sigma * sigma;
        let mut l = 0u32;
        let mut edge = T::lit(4.0);
        while q >= edge && l < 1023 {
            l += 1;
            edge = edge * T::lit(4.0);
        }
        DyadicShell { l }
    }

    pub fn contains<T: Real>(&self, sigma: T) -> bool {
        Self::of(sigma) == *self
    }
}

/// `Ψ_l u`.
pub fn dyadic_localize<T: Real>(u: &SpaceTimeField<T>, shell: DyadicShell) -> SpaceTimeField<T> {
    u.mask(|_, sigma| shell.contains(sigma))
}

/// Squared mass of each nonempty shell.
pub fn shell_masses<T: Real>(u: &SpaceTimeField<T>) -> BTreeMap<u32, T> {
    let mut out = BTreeMap::new();
    for (_, n, v) in u.cells() {
        let e = out.entry(DyadicShell::of(u.sigma(n)).l).or_insert(T::zero());
        *e = *e + v.norm_sqr();
    }
    let w = u.dtau() / u.grid().lambda().value::<T>();
    out.values_mut().for_each(|x| *x = *x * w);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{Lambda, TorusGrid};
    use num_complex::Complex;

    #[test]
    fn shell_boundaries() {
        assert_eq!(DyadicShell::of(0.0f64).l, 0);
        // ⟨σ⟩ = 2 exactly at σ = √3
        assert_eq!(DyadicShell::of(3.0f64.sqrt() * (1.0 - 1e-12)).l, 0);
        assert_eq!(DyadicShell::of(3.0f64.sqrt() * (1.0 + 1e-12)).l, 1);
        assert_eq!(DyadicShell::of(100.0f64).l, 6);
    }

    #[test]
    fn single_mode_sobolev() {
        let g = TorusGrid::unit(16).unwrap();
        let u = SpectralField::from_modes(g, [(2, Complex::new(3.0, 4.0))]).unwrap();
        let n = sobolev_norm(&u, &NormSpec::sobolev(1.0));
        assert!((n.value - 5.0f64.sqrt() * 5.0).abs() < 1e-14);
        let with_mean = SpectralField::from_modes(g, [(0, Complex::new(1.0, 0.0))]).unwrap();
        let h = sobolev_norm(&with_mean, &NormSpec::homogeneous(-1.0));
        assert_eq!(h.value, 0.0);
        assert!(h.mean_excluded);
    }

    #[test]
    fn single_cell_norms() {
        let model = DispersionModel::new(2, Lambda::integer(2).unwrap()).unwrap();
        let g = TorusGrid::new(model.lambda(), 16).unwrap();
        let mut u = SpaceTimeField::new(model, g, 0.25).unwrap();
        let c = Complex::new(0.6, -0.8);
        u.accumulate(3, 5, &[c]).unwrap();
        let k = 1.5f64;
        let sigma = 1.25f64;
        let spec = NormSpec::new(-1.5, 0.75);
        let expect = bracket(k).powf(-1.5) * bracket(sigma).powf(0.75) * (0.25f64 / 2.0).sqrt();
        assert!((xsb_norm(&u, &spec) - expect).abs() < 1e-15);
        let ys = bracket(k).powf(-1.5) * 0.25 / 2.0f64.sqrt();
        assert!((ys_norm(&u, -1.5) - ys).abs() < 1e-15);
    }
}
