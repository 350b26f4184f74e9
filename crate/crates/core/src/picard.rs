//! Picard iterates of the Duhamel expansion around zero data.
//!
//! For data `εφ` the solution expands as
//! `u = ε u₁ - ½ε² A₂ + ¼ε³ A₃ + O(ε⁴)` with `u₁ = S(t)φ`,
//! `A₂ = ∫₀ᵗ S(t-s) ∂_x(u₁²) ds` and `A₃ = 2 ∫₀ᵗ S(t-s) ∂_x(u₁ A₂) ds`.
//! The closed forms below evaluate these integrals exactly mode by mode,
//! with every resonance decided in integer arithmetic; the quadrature
//! versions integrate the same Duhamel integrals numerically and serve as
//! independent oracles.

use crate::dispersion::{free_evolve, free_evolve_in_place, resonance_q0, resonance_q1_q2, DispersionModel};
use crate::error::{invalid, Error, Result};
use crate::fit::{power_law_fit, LinearFit};
use crate::norms::{sobolev_norm, NormSpec};
use crate::quadrature::gauss_legendre;
use crate::scalar::{ipow, Real};
use crate::torus::{SpectralField, SpectralPlan, TorusGrid};
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct IterateResult<T> {
    pub field: SpectralField<T>,
    pub t: T,
    /// Terms evaluated through the `q = 0` limit `(e^{itq}-1)/q → it`.
    pub resonant_terms: usize,
    /// Smallest and largest `|q₀|` met as a denominator (lattice units).
    pub min_abs_q0: Option<BigInt>,
    pub max_abs_q0: Option<BigInt>,
}

impl<T> IterateResult<T> {
    fn observe(&mut self, q: &BigInt) {
        let a = q.abs();
        if self.min_abs_q0.as_ref().map_or(true, |m| &a < m) {
            self.min_abs_q0 = Some(a.clone());
        }
        if self.max_abs_q0.as_ref().map_or(true, |m| &a > m) {
            self.max_abs_q0 = Some(a);
        }
    }
}

/// `u₁(t) = S(t)u₀`.
pub fn free_solution<T: Real>(model: &DispersionModel, u0: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
    free_evolve(model, u0, t)
}

/// `(e^{itx} - 1)/x`, continuous through `x = 0` (value `it`).
///
/// Written as `it·e^{iθ/2}·sin(θ/2)/(θ/2)`, `θ = tx`, which has no
/// cancellation for small `θ`.
#[inline]
pub fn resonant_factor<T: Real>(x: T, t: T) -> Complex<T> {
    let half = T::lit(0.5) * t * x;
    let sinc = if half == T::zero() { T::one() } else { half.sin() / half };
    Complex::new(T::zero(), t * sinc) * Complex::from_polar(T::one(), half)
}

fn sparse_support<T: Real>(u: &SpectralField<T>) -> Vec<(i64, Complex<T>)> {
    u.iter_modes().filter(|(_, c)| c.re != T::zero() || c.im != T::zero()).collect()
}

fn check_data<T: Real>(model: &DispersionModel, u0: &SpectralField<T>) -> Result<()> {
    if u0.grid().lambda() != model.lambda() {
        return invalid("data and model disagree on lambda");
    }
    if !u0.is_mean_zero() {
        return invalid("Picard iterates require mean-zero data");
    }
    Ok(())
}

/// `(den/num)^{2j+1}`: converts lattice-unit resonances to frequencies.
fn lattice_scale<T: Real>(model: &DispersionModel) -> T {
    let l = model.lambda();
    (T::from_u64(l.den()).unwrap() / T::from_u64(l.num()).unwrap()).powi(model.order() as i32)
}

fn signed<T: Real>(model: &DispersionModel, q: &BigInt, scale: T) -> T {
    let v = T::lit(q.to_f64().unwrap_or(f64::INFINITY)) * scale;
    if model.sign() > 0 {
        v
    } else {
        -v
    }
}

fn slot_or_err(grid: &TorusGrid, m: i64) -> Result<usize> {
    grid.slot(m).ok_or_else(|| {
        Error::InvalidInput(format!("iterate mode {m} exceeds the lattice (|m| <= {})", grid.cutoff()))
    })
}

/// Closed-form `A₂(u₀)(t)`:
/// `A₂(k) = k e^{itp(k)} (1/λ) Σ_{k₁+k₂=k} c(k₁)c(k₂) (e^{itΔ}-1)/Δ`,
/// `Δ = p(k₁)+p(k₂)-p(k) = (-1)^{j+1} q₀(k₁,k₂)`. The `k = 0` output is
/// dropped by its prefactor.
pub fn second_iterate_closed<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
) -> Result<IterateResult<T>> {
    check_data(model, u0)?;
    let grid = *u0.grid();
    let sup = sparse_support(u0);
    let scale = lattice_scale::<T>(model);
    let inv_lam = T::one() / grid.lambda().value::<T>();
    let mut res = IterateResult {
        field: SpectralField::zeros(grid),
        t,
        resonant_terms: 0,
        min_abs_q0: None,
        max_abs_q0: None,
    };
    let mut acc = vec![Complex::new(T::zero(), T::zero()); grid.modes()];
    for &(m1, c1) in &sup {
        for &(m2, c2) in &sup {
            let m = m1 + m2;
            if m == 0 {
                continue;
            }
            let slot = slot_or_err(&grid, m)?;
            let q = resonance_q0(model, &BigInt::from(m1), &BigInt::from(m2));
            if q.is_zero() {
                return Err(Error::Consistency(format!(
                    "q0({m1},{m2}) = 0 with k = {m} != 0 contradicts the resonance lower bound"
                )));
            }
            res.observe(&q);
            let delta = signed(model, &q, scale);
            acc[slot] = acc[slot] + c1 * c2 * resonant_factor(delta, t) * inv_lam;
        }
    }
    for (slot, a) in acc.into_iter().enumerate() {
        if a.re == T::zero() && a.im == T::zero() {
            continue;
        }
        let m = grid.mode_at(slot);
        let k = grid.frequency::<T>(m);
        let phase = Complex::from_polar(T::one(), t * model.phase_of_mode::<T>(m));
        res.field.slots_mut()[slot] = a * phase * k;
    }
    Ok(res)
}

/// Closed-form `A₃(u₀)(t)`:
/// `A₃(k) = 2 k e^{itp(k)} (1/λ²) Σ c₁c₂c₃ (m/D) [E(Δ₁) - E(Δ₂)]`,
/// with `m = k₂+k₃`, `D = p(k₂)+p(k₃)-p(m)`, `Δ₁ = p₁+p₂+p₃-p(k)`,
/// `Δ₂ = p₁+p(m)-p(k)` and `E(x) = (e^{itx}-1)/x`. In lattice units
/// `D = εq₀(k₂,k₃)`, `Δ₁ = εq₁`, `Δ₂ = εq₂`, `ε = (-1)^{j+1}`.
pub fn third_iterate_closed<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
) -> Result<IterateResult<T>> {
    check_data(model, u0)?;
    let grid = *u0.grid();
    let sup = sparse_support(u0);
    let scale = lattice_scale::<T>(model);
    let lam = grid.lambda().value::<T>();
    let w = T::lit(2.0) / (lam * lam);
    let mut res = IterateResult {
        field: SpectralField::zeros(grid),
        t,
        resonant_terms: 0,
        min_abs_q0: None,
        max_abs_q0: None,
    };
    let mut acc = vec![Complex::new(T::zero(), T::zero()); grid.modes()];
    for &(m2, c2) in &sup {
        for &(m3, c3) in &sup {
            let mm = m2 + m3;
            if mm == 0 {
                continue;
            }
            let (b2, b3) = (BigInt::from(m2), BigInt::from(m3));
            let q0 = resonance_q0(model, &b2, &b3);
            if q0.is_zero() {
                return Err(Error::Consistency(format!(
                    "q0({m2},{m3}) = 0 with k2+k3 = {mm} != 0 contradicts the resonance lower bound"
                )));
            }
            res.observe(&q0);
            let d = signed(model, &q0, scale);
            let inner = c2 * c3 * (grid.frequency::<T>(mm) / d);
            for &(m1, c1) in &sup {
                let m = m1 + mm;
                if m == 0 {
                    continue;
                }
                let slot = slot_or_err(&grid, m)?;
                let (q1, q2) = resonance_q1_q2(model, &BigInt::from(m1), &b2, &b3);
                if q1.is_zero() || q2.is_zero() {
                    res.resonant_terms += 1;
                }
                let e1 = resonant_factor(signed(model, &q1, scale), t);
                let e2 = resonant_factor(signed(model, &q2, scale), t);
                acc[slot] = acc[slot] + c1 * inner * (e1 - e2) * w;
            }
        }
    }
    for (slot, a) in acc.into_iter().enumerate() {
        if a.re == T::zero() && a.im == T::zero() {
            continue;
        }
        let m = grid.mode_at(slot);
        let phase = Complex::from_polar(T::one(), t * model.phase_of_mode::<T>(m));
        res.field.slots_mut()[slot] = a * phase * grid.frequency::<T>(m);
    }
    Ok(res)
}

/// Composite Gauss–Legendre rule on `[0, t]`.
///
/// `panels` equal panels carry `nodes` points each. With `max_phase` set,
/// every panel is further split into equal sub-panels so that the a priori
/// bandwidth `B` of the integrand (an upper bound on `|Δ|` for every
/// contributing frequency combination) advances by at most `max_phase`
/// radians per sub-panel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub panels: usize,
    pub nodes: usize,
    pub max_phase: Option<f64>,
}

impl QuadratureRule {
    /// 32-point panels resolving the integrand's oscillation (≤ 24 rad each).
    pub fn resolved(panels: usize) -> Self {
        QuadratureRule { panels, nodes: 32, max_phase: Some(24.0) }
    }

    /// Fixed rule without sub-division; `nodes = 2` gives order 4.
    pub fn fixed(panels: usize, nodes: usize) -> Self {
        QuadratureRule { panels, nodes, max_phase: None }
    }

    fn subpanels(&self, bandwidth: f64, t: f64) -> usize {
        match self.max_phase {
            Some(phi) if bandwidth > 0.0 => {
                let h = (t / self.panels as f64).abs();
                ((bandwidth * h / phi).ceil() as usize).max(1)
            }
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureOutcome<T> {
    pub field: SpectralField<T>,
    /// Total integrand evaluations.
    pub evaluations: u64,
    /// A priori bandwidth used to size the sub-panels.
    pub bandwidth: f64,
}

fn max_abs_phase<T: Real>(model: &DispersionModel, modes: impl Iterator<Item = i64>) -> f64 {
    modes.map(|m| model.phase_of_mode::<f64>(m).abs()).fold(0.0, f64::max)
}

/// `A₂(u₀)(t)` by Gauss–Legendre quadrature, resolved sub-panels, `steps`
/// base panels.
pub fn second_iterate_quadrature<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
    steps: usize,
) -> Result<SpectralField<T>> {
    Ok(second_iterate_quadrature_with(model, u0, t, &QuadratureRule::resolved(steps))?.field)
}

/// `∫₀ᵗ S(t-s) ∂_x[(S(s)u₀)²] ds` under an explicit rule.
///
/// Sparse data take a fast path that carries each mode's phase `e^{isp}`
/// from sub-panel to sub-panel by one complex multiplication (re-seeded at
/// every base panel); otherwise each node runs the full spectral pipeline
/// (propagate, square, differentiate, propagate back).
pub fn second_iterate_quadrature_with<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
    rule: &QuadratureRule,
) -> Result<QuadratureOutcome<T>> {
    check_data(model, u0)?;
    if rule.panels < 16 {
        return invalid(format!("quadrature needs at least 16 panels, got {}", rule.panels));
    }
    if rule.nodes == 0 {
        return invalid("quadrature needs at least one node per panel");
    }
    let grid = *u0.grid();
    let sup = sparse_support(u0);
    let mut outs: Vec<i64> = sup.iter().flat_map(|a| sup.iter().map(move |b| a.0 + b.0)).collect();
    outs.sort_unstable();
    outs.dedup();
    for &m in &outs {
        slot_or_err(&grid, m)?;
    }
    let bandwidth = max_abs_phase::<T>(model, outs.iter().copied())
        + 2.0 * max_abs_phase::<T>(model, sup.iter().map(|x| x.0));
    if t == T::zero() || sup.is_empty() {
        return Ok(QuadratureOutcome { field: SpectralField::zeros(grid), evaluations: 0, bandwidth });
    }
    if sup.len() <= 64 {
        a2_quadrature_sparse(model, grid, &sup, &outs, t, rule, bandwidth)
    } else {
        a2_quadrature_dense(model, u0, t, rule, bandwidth)
    }
}

fn a2_quadrature_dense<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
    rule: &QuadratureRule,
    bandwidth: f64,
) -> Result<QuadratureOutcome<T>> {
    let grid = *u0.grid();
    let plan = SpectralPlan::new(grid);
    let (x, w) = gauss_legendre(rule.nodes);
    let tf = t.f64();
    let sub = rule.subpanels(bandwidth, tf);
    let h = tf / (rule.panels * sub) as f64;
    let mut total = SpectralField::zeros(grid);
    let mut evals = 0u64;
    for p in 0..rule.panels * sub {
        let a = p as f64 * h;
        let mut panel = SpectralField::zeros(grid);
        for (xq, wq) in x.iter().zip(&w) {
            let s = T::lit(a + 0.5 * h * (1.0 + xq));
            let u1 = free_evolve(model, u0, s)?;
            let mut g = plan.convolve(&u1, &u1)?.derivative();
            free_evolve_in_place(model, &mut g, t - s)?;
            panel.axpy(Complex::new(T::lit(0.5 * h * wq), T::zero()), &g)?;
            evals += 1;
        }
        total = total.add(&panel)?;
    }
    Ok(QuadratureOutcome { field: total, evaluations: evals, bandwidth })
}

fn a2_quadrature_sparse<T: Real>(
    model: &DispersionModel,
    grid: TorusGrid,
    sup: &[(i64, Complex<T>)],
    outs: &[i64],
    t: T,
    rule: &QuadratureRule,
    bandwidth: f64,
) -> Result<QuadratureOutcome<T>> {
    let (x, w) = gauss_legendre(rule.nodes);
    let tf = t.f64();
    let sub = rule.subpanels(bandwidth, tf);
    let big_h = tf / rule.panels as f64;
    let h = big_h / sub as f64;
    let inv_lam = T::one() / grid.lambda().value::<T>();
    let p_in: Vec<T> = sup.iter().map(|&(m, _)| model.phase_of_mode::<T>(m)).collect();
    let p_out: Vec<T> = outs.iter().map(|&m| model.phase_of_mode::<T>(m)).collect();
    let out_index = |m: i64| outs.binary_search(&m).expect("output mode listed");
    let pairs: Vec<(usize, usize, usize)> = (0..sup.len())
        .flat_map(|i| (0..sup.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, out_index(sup[i].0 + sup[j].0)))
        .collect();
    let nq = x.len();
    let zero = Complex::new(T::zero(), T::zero());
    let rot_in: Vec<Complex<T>> = p_in.iter().map(|&p| Complex::from_polar(T::one(), T::lit(h) * p)).collect();
    let rot_out: Vec<Complex<T>> = p_out.iter().map(|&p| Complex::from_polar(T::one(), -T::lit(h) * p)).collect();
    // accumulates ∫ e^{-isp(k)} (u₁(s)²)_k ds per output mode
    let mut total = vec![zero; outs.len()];
    let mut cur_in = vec![zero; nq * sup.len()];
    let mut cur_out = vec![zero; nq * outs.len()];
    let mut sq = vec![zero; outs.len()];
    let mut node_acc = vec![zero; outs.len()];
    let mut evals = 0u64;
    for panel in 0..rule.panels {
        let a = panel as f64 * big_h;
        for q in 0..nq {
            let s0 = T::lit(a + 0.5 * h * (1.0 + x[q]));
            for (i, &p) in p_in.iter().enumerate() {
                cur_in[q * sup.len() + i] = sup[i].1 * Complex::from_polar(T::one(), s0 * p);
            }
            for (i, &p) in p_out.iter().enumerate() {
                cur_out[q * outs.len() + i] = Complex::from_polar(T::one(), -s0 * p);
            }
        }
        let mut panel_acc = vec![zero; outs.len()];
        for _ in 0..sub {
            node_acc.iter_mut().for_each(|v| *v = zero);
            for q in 0..nq {
                let vin = &mut cur_in[q * sup.len()..(q + 1) * sup.len()];
                let vout = &mut cur_out[q * outs.len()..(q + 1) * outs.len()];
                sq.iter_mut().for_each(|v| *v = zero);
                for &(i, j, o) in &pairs {
                    sq[o] = sq[o] + vin[i] * vin[j];
                }
                let wq = T::lit(0.5 * h * w[q]);
                for o in 0..outs.len() {
                    node_acc[o] = node_acc[o] + sq[o] * vout[o] * wq;
                    vout[o] = vout[o] * rot_out[o];
                }
                for (v, r) in vin.iter_mut().zip(&rot_in) {
                    *v = *v * *r;
                }
                evals += 1;
            }
            for (p, n) in panel_acc.iter_mut().zip(&node_acc) {
                *p = *p + *n;
            }
        }
        for (tot, p) in total.iter_mut().zip(&panel_acc) {
            *tot = *tot + *p;
        }
    }
    let mut field = SpectralField::zeros(grid);
    for (o, &m) in outs.iter().enumerate() {
        let k = grid.frequency::<T>(m);
        let prop = Complex::from_polar(T::one(), t * p_out[o]);
        let v = total[o] * prop * Complex::new(T::zero(), k) * inv_lam;
        field.set(m, v)?;
    }
    Ok(QuadratureOutcome { field, evaluations: evals, bandwidth })
}

/// `A₃(u₀)(t) = 2∫₀ᵗ S(t-s) ∂_x(u₁ A₂)(s) ds` by quadrature, with `A₂(s)`
/// from the closed form at each node. Meant for small supports.
pub fn third_iterate_quadrature<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    t: T,
    rule: &QuadratureRule,
) -> Result<QuadratureOutcome<T>> {
    check_data(model, u0)?;
    let grid = *u0.grid();
    let sup = sparse_support(u0);
    let plan = SpectralPlan::new(grid);
    let s1 = max_abs_phase::<T>(model, sup.iter().map(|x| x.0));
    let r = u0.support_radius();
    let s2 = max_abs_phase::<T>(model, -2 * r..=2 * r);
    let s3 = max_abs_phase::<T>(model, -3 * r..=3 * r);
    let bandwidth = s3 + s2 + 3.0 * s1;
    if t == T::zero() || sup.is_empty() {
        return Ok(QuadratureOutcome { field: SpectralField::zeros(grid), evaluations: 0, bandwidth });
    }
    let (x, w) = gauss_legendre(rule.nodes);
    let tf = t.f64();
    let sub = rule.subpanels(bandwidth, tf);
    let h = tf / (rule.panels * sub) as f64;
    let mut total = SpectralField::zeros(grid);
    let mut evals = 0u64;
    for p in 0..rule.panels * sub {
        let a = p as f64 * h;
        let mut panel = SpectralField::zeros(grid);
        for (xq, wq) in x.iter().zip(&w) {
            let s = T::lit(a + 0.5 * h * (1.0 + xq));
            let u1 = free_evolve(model, u0, s)?;
            let a2 = second_iterate_closed(model, u0, s)?.field;
            let mut g = plan.convolve(&u1, &a2)?.derivative();
            free_evolve_in_place(model, &mut g, t - s)?;
            panel.axpy(Complex::new(T::lit(h * wq), T::zero()), &g)?;
            evals += 1;
        }
        total = total.add(&panel)?;
    }
    Ok(QuadratureOutcome { field: total, evaluations: evals, bandwidth })
}

/// `φ_N`: coefficient `N^{-s}` at frequencies `±N` (lattice index `±Nλ`).
/// The grid must hold frequency `3N` so that `A₃(φ_N)` is not aliased.
pub fn phi_n_data<T: Real>(n: u64, s: T, grid: TorusGrid) -> Result<SpectralField<T>> {
    if n == 0 {
        return invalid("N must be positive");
    }
    let lam = grid.lambda();
    if (n * lam.num()) % lam.den() != 0 {
        return invalid(format!("frequency {n} is not on the lattice for lambda = {lam}"));
    }
    let m = (n * lam.num() / lam.den()) as i64;
    if 3 * m > grid.cutoff() {
        return invalid(format!(
            "3N = {} exceeds the lattice cutoff {} (M = {})",
            3 * m,
            grid.cutoff(),
            grid.modes()
        ));
    }
    let c = Complex::new(T::from_u64(n).unwrap().powf(-s), T::zero());
    SpectralField::from_modes(grid, [(m, c), (-m, c)])
}

/// Smallest power-of-two grid whose lattice holds frequency `3·nmax` with a
/// margin, on the period `λ`.
pub fn iterate_grid(lambda: crate::torus::Lambda, nmax: u64) -> Result<TorusGrid> {
    let m = 3 * nmax * lambda.num() / lambda.den() + 2;
    let modes = (2 * m as usize + 2).next_power_of_two().max(16);
    TorusGrid::new(lambda, modes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: u64,
    pub h_s_norm: f64,
    pub resonant_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub j: u32,
    pub s: f64,
    pub t: f64,
    pub modes: usize,
    pub rows: Vec<GrowthRow>,
    pub fit: LinearFit,
    /// `-2s - (2j-1)`.
    pub predicted_exponent: f64,
    /// `-j + ½`; growth is predicted iff `s` lies below it.
    pub threshold_s: f64,
}

impl GrowthReport {
    pub const CSV_HEADER: &'static str = "j,s,N,t,h_s_norm,resonant_terms";

    pub fn exponent(&self) -> f64 {
        self.fit.slope
    }

    pub fn exponent_matches(&self, tol: f64) -> bool {
        (self.fit.slope - self.predicted_exponent).abs() <= tol
    }

    pub fn predicts_growth(&self) -> bool {
        self.s < self.threshold_s
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{},{:.16e},{:.16e},{}\n",
                self.j, self.s, r.n, self.t, r.h_s_norm, r.resonant_terms
            ));
        }
        out
    }
}

/// `‖A₃(φ_N)(t)‖_{Ḣ^s}` over `N`, with a log-log fit of the exponent.
pub fn growth_sweep(model: &DispersionModel, s: f64, n_list: &[u64], t: f64) -> Result<GrowthReport> {
    if n_list.len() < 3 {
        return invalid("growth sweep needs at least three values of N");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("N list must be strictly ascending");
    }
    let grid = iterate_grid(model.lambda(), *n_list.last().unwrap())?;
    let rows: Vec<GrowthRow> = n_list
        .par_iter()
        .map(|&n| {
            let u0 = phi_n_data::<f64>(n, s, grid)?;
            let a3 = third_iterate_closed(model, &u0, t)?;
            let norm = sobolev_norm(&a3.field, &NormSpec::homogeneous(s)).value;
            Ok(GrowthRow { n, h_s_norm: norm, resonant_terms: a3.resonant_terms })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.h_s_norm).collect();
    let fit = power_law_fit(&xs, &ys)?;
    let j = model.j() as f64;
    Ok(GrowthReport {
        j: model.j(),
        s,
        t,
        modes: grid.modes(),
        rows,
        fit,
        predicted_exponent: -2.0 * s - (2.0 * j - 1.0),
        threshold_s: -j + 0.5,
    })
}

/// Slope of `|A₃(φ_N)(t)|` at the output mode `N` for small `t`:
/// `2·N·2N·N^{-3s} / ((2^{2j+1}-2) N^{2j+1})`, from the single resonant
/// triple `(-N, N, N)`.
pub fn resonant_slope(j: u32, n: u64, s: f64) -> f64 {
    let nf = n as f64;
    let order = (2 * j + 1) as i32;
    let q2 = (ipow(&2i128, 2 * j + 1) - 2) as f64 * nf.powi(order);
    2.0 * nf * 2.0 * nf * nf.powf(-3.0 * s) / q2
}
