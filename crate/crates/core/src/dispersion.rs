//! Dispersion relation, free propagator, resonance functions and the
//! modulation regions of (k, τ) space.

use crate::error::{invalid, Result};
use crate::scalar::{ipow, Exact, Real};
use crate::torus::{Lambda, SpectralField};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// `u_t + (-1)^{j+1} ∂_x^{2j+1} u + ½ ∂_x(u²) = 0` on the 2πλ-torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispersionModel {
    j: u32,
    lambda: Lambda,
}

impl DispersionModel {
    pub fn new(j: u32, lambda: Lambda) -> Result<Self> {
        if j == 0 {
            return invalid("j must be >= 1");
        }
        if j == 1 {
            log::warn!("j = 1 is classical KdV; running in sanity mode");
        }
        if 2 * j + 1 > 63 {
            return invalid(format!("j = {j} is too large"));
        }
        Ok(DispersionModel { j, lambda })
    }

    pub fn unit(j: u32) -> Result<Self> {
        Self::new(j, Lambda::ONE)
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: Lambda) -> Self {
        DispersionModel { j: self.j, lambda }
    }

    /// Odd exponent `2j+1`.
    pub fn order(&self) -> u32 {
        2 * self.j + 1
    }

    /// `(-1)^{j+1}`.
    pub fn sign(&self) -> i32 {
        if self.j % 2 == 1 {
            1
        } else {
            -1
        }
    }

    /// Phase speed `p(k) = (-1)^{j+1} k^{2j+1}`; `S(t)` multiplies mode `k`
    /// by `e^{itp(k)}`.
    #[inline]
    pub fn phase<T: Real>(&self, k: T) -> T {
        let p = k.powi(self.order() as i32);
        if self.sign() > 0 {
            p
        } else {
            -p
        }
    }

    /// `p(m/λ)`, computed as `m^{2j+1}/λ^{2j+1}` to keep integer powers exact.
    #[inline]
    pub fn phase_of_mode<T: Real>(&self, m: i64) -> T {
        let n = self.order() as i32;
        let lam = self.lambda.value::<T>();
        let p = T::from_i64_lossy(m).powi(n) / lam.powi(n);
        if self.sign() > 0 {
            p
        } else {
            -p
        }
    }

    /// Exact `p(m/λ)`.
    pub fn phase_exact(&self, m: i64) -> BigRational {
        let p = ipow(&self.lambda.frequency_exact(m), self.order());
        if self.sign() > 0 {
            p
        } else {
            -p
        }
    }

    /// `m^{2j+1}` in lattice units (the phase is `sign·m^{2j+1}/λ^{2j+1}`).
    pub fn lattice_power(&self, m: i64) -> BigInt {
        ipow(&BigInt::from(m), self.order())
    }

    /// `λ^{2j+1}` as a float.
    pub fn lambda_power<T: Real>(&self) -> T {
        self.lambda.value::<T>().powi(self.order() as i32)
    }

    fn thresholds<T: Real>(&self, k: T) -> (T, T) {
        let ak = k.abs();
        let two_j1 = T::from_u32(self.order()).unwrap();
        let low = T::lit(2.0) * two_j1 / T::lit(3.0) * ak.powi(2 * self.j as i32);
        let high = T::lit(2.0) * two_j1 * ak.powi(self.order() as i32);
        (low, high)
    }

    /// Region of `(k, τ)` for modulation `σ = τ - p(k)`.
    pub fn classify_modulation<T: Real>(&self, k: T, sigma: T) -> RegionLabel {
        if k == T::zero() {
            return RegionLabel::ZeroMode;
        }
        let (low, high) = self.thresholds(k);
        let s = sigma.abs();
        if k.abs() >= T::one() {
            if s <= low {
                RegionLabel::D1
            } else if s <= high {
                RegionLabel::D2
            } else {
                RegionLabel::D3
            }
        } else if s > high {
            RegionLabel::D4
        } else {
            RegionLabel::D5
        }
    }
}

/// Multiply every mode by `e^{itp(k)}`.
pub fn free_evolve<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
) -> Result<SpectralField<T>> {
    let mut u = u0.clone();
    free_evolve_in_place(model, &mut u, t)?;
    Ok(u)
}

pub fn free_evolve_in_place<T: Real>(
    model: &DispersionModel,
    u: &mut SpectralField<T>,
    t: T,
) -> Result<()> {
    if u.grid().lambda() != model.lambda {
        return invalid(format!(
            "field lambda {} does not match model lambda {}",
            u.grid().lambda(),
            model.lambda
        ));
    }
    if t == T::zero() {
        return Ok(());
    }
    let grid = *u.grid();
    for (slot, c) in u.slots_mut().iter_mut().enumerate() {
        if c.re == T::zero() && c.im == T::zero() {
            continue;
        }
        let p = model.phase_of_mode::<T>(grid.mode_at(slot));
        *c = *c * Complex::from_polar(T::one(), t * p);
    }
    Ok(())
}

/// Point of (k, τ) space; `σ` is always derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulationPoint<T> {
    pub k: T,
    pub tau: T,
}

impl<T: Real> ModulationPoint<T> {
    pub fn new(k: T, tau: T) -> Self {
        ModulationPoint { k, tau }
    }

    pub fn sigma(&self, model: &DispersionModel) -> T {
        self.tau - model.phase(self.k)
    }

    pub fn region(&self, model: &DispersionModel) -> RegionLabel {
        classify_region(model, self.k, self.tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionLabel {
    D1,
    D2,
    D3,
    D4,
    D5,
    ZeroMode,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 6] = [
        RegionLabel::D1,
        RegionLabel::D2,
        RegionLabel::D3,
        RegionLabel::D4,
        RegionLabel::D5,
        RegionLabel::ZeroMode,
    ];
}

/// Region of `(k, τ)`: the five inequalities with ties to the lower index,
/// `|k| = 1` assigned to `D₁–D₃`.
pub fn classify_region<T: Real>(model: &DispersionModel, k: T, tau: T) -> RegionLabel {
    model.classify_modulation(k, tau - model.phase(k))
}

/// `q₀(k₁,k₂) = k₁^{2j+1} + k₂^{2j+1} - (k₁+k₂)^{2j+1}`.
pub fn resonance_q0<I: Exact>(model: &DispersionModel, k1: &I, k2: &I) -> I {
    let n = model.order();
    let k = k1.clone() + k2.clone();
    ipow(k1, n) + ipow(k2, n) - ipow(&k, n)
}

/// `(q₁, q₂)` with `k = k₁+k₂+k₃`:
/// `q₁ = k₁ⁿ+k₂ⁿ+k₃ⁿ-kⁿ`, `q₂ = k₁ⁿ+(k₂+k₃)ⁿ-kⁿ`, `n = 2j+1`.
pub fn resonance_q1_q2<I: Exact>(model: &DispersionModel, k1: &I, k2: &I, k3: &I) -> (I, I) {
    let n = model.order();
    let m = k2.clone() + k3.clone();
    let k = k1.clone() + m.clone();
    let pk = ipow(&k, n);
    let p1 = ipow(k1, n);
    let q1 = p1.clone() + ipow(k2, n) + ipow(k3, n) - pk.clone();
    let q2 = p1 + ipow(&m, n) - pk;
    (q1, q2)
}

/// Outcome of the exhaustive `|kⁿ - k₁ⁿ - k₂ⁿ| ≥ (2j+1)|k k₁ʲ k₂ʲ|` check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma27Report {
    pub j: u32,
    pub kmax: i64,
    pub pairs_checked: u64,
    pub violations: u64,
    /// Smallest LHS/RHS (rounded from the exact fraction).
    pub min_ratio: f64,
    pub min_ratio_num: String,
    pub min_ratio_den: String,
    pub min_witness: (i64, i64),
    pub first_violation: Option<(i64, i64)>,
}

impl Lemma27Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub const CSV_HEADER: &'static str = "j,kmax,pairs_checked,violations,min_ratio";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:.16e}", self.j, self.kmax, self.pairs_checked, self.violations, self.min_ratio)
    }
}

struct RowAudit {
    pairs: u64,
    violations: u64,
    first_violation: Option<(i64, i64)>,
    best: Option<(BigInt, BigInt, (i64, i64))>,
}

/// Exhaustive audit over `1 ≤ |k₁|,|k₂| ≤ kmax`, `k₁+k₂ ≠ 0`, in exact
/// integer arithmetic. Rows in `k₁` run in parallel and are merged in order,
/// so the witness is the first minimizer in lexicographic `(k₁, k₂)`.
pub fn lemma27_audit(model: &DispersionModel, kmax: i64) -> Result<Lemma27Report> {
    if kmax < 1 {
        return invalid("kmax must be >= 1");
    }
    let n = model.order();
    let j = model.j();
    let span = 2 * kmax;
    let idx = |v: i64| (v + span) as usize;
    let pow_n: Vec<BigInt> = (-span..=span).map(|v| ipow(&BigInt::from(v), n)).collect();
    let pow_j: Vec<BigInt> = (-span..=span).map(|v| ipow(&BigInt::from(v.abs()), j)).collect();
    let coef = BigInt::from(n);
    let ks: Vec<i64> = (-kmax..=kmax).filter(|&k| k != 0).collect();

    let rows: Vec<RowAudit> = ks
        .par_iter()
        .map(|&k1| {
            let mut row = RowAudit { pairs: 0, violations: 0, first_violation: None, best: None };
            for &k2 in &ks {
                let k = k1 + k2;
                if k == 0 {
                    continue;
                }
                row.pairs += 1;
                let lhs = (&pow_n[idx(k)] - &pow_n[idx(k1)] - &pow_n[idx(k2)]).abs();
                let rhs = &coef * BigInt::from(k.abs()) * &pow_j[idx(k1)] * &pow_j[idx(k2)];
                if lhs < rhs {
                    row.violations += 1;
                    row.first_violation.get_or_insert((k1, k2));
                }
                let better = match &row.best {
                    None => true,
                    Some((bl, br, _)) => (&lhs * br).cmp(&(bl * &rhs)) == Ordering::Less,
                };
                if better {
                    row.best = Some((lhs, rhs, (k1, k2)));
                }
            }
            row
        })
        .collect();

    let mut pairs = 0;
    let mut violations = 0;
    let mut first_violation = None;
    let mut best: Option<(BigInt, BigInt, (i64, i64))> = None;
    for row in rows {
        pairs += row.pairs;
        violations += row.violations;
        if first_violation.is_none() {
            first_violation = row.first_violation;
        }
        if let Some((l, r, w)) = row.best {
            let better = match &best {
                None => true,
                Some((bl, br, _)) => (&l * br).cmp(&(bl * &r)) == Ordering::Less,
            };
            if better {
                best = Some((l, r, w));
            }
        }
    }
    let (l, r, w) = best.expect("at least one pair");
    let frac = BigRational::new(l, r);
    Ok(Lemma27Report {
        j,
        kmax,
        pairs_checked: pairs,
        violations,
        min_ratio: frac.to_f64().unwrap_or(f64::NAN),
        min_ratio_num: frac.numer().to_string(),
        min_ratio_den: frac.denom().to_string(),
        min_witness: w,
        first_violation,
    })
}

/// `true` iff `q₀(k₁,k₂)` vanishes somewhere with `k₁, k₂, k₁+k₂` all nonzero
/// in `1 ≤ |k₁|,|k₂| ≤ kmax`.
pub fn q0_has_nontrivial_zero(model: &DispersionModel, kmax: i64) -> bool {
    (-kmax..=kmax).filter(|&a| a != 0).any(|k1| {
        (-kmax..=kmax)
            .filter(|&b| b != 0 && b + k1 != 0)
            .any(|k2| resonance_q0(model, &BigInt::from(k1), &BigInt::from(k2)).is_zero())
    })
}
