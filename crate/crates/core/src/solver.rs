//! Pseudo-spectral time integration, the cutoff Duhamel map and the
//! dilation symmetry.

use crate::dispersion::{free_evolve, free_evolve_in_place, DispersionModel};
use crate::error::{invalid, Error, Result};
use crate::norms::{sobolev_norm, zs_norm, NormSpec};
use crate::scalar::Real;
use crate::spacetime::{spacetime_from_timeseries, FrameSeries, SmoothBump, TimeWindow, UnitWindow};
use crate::torus::{dealias_radius, SpectralField, SpectralPlan, TorusGrid};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Classical RK4 for `v = S(-t)u`, phases taken at absolute times.
    IntegratingFactorRk4,
    /// Cox–Matthews ETDRK4 with φ-functions.
    Etdrk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub dt: T,
    pub final_time: T,
    pub dealias: bool,
    pub scheme: Scheme,
    pub nonlinear: bool,
    /// Store one frame every this many steps (the initial frame is always kept).
    pub frame_every: usize,
    /// Abort when `‖u‖_{L²}` exceeds this multiple of its initial value.
    pub blowup_factor: T,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(dt: T, final_time: T) -> Self {
        SolverConfig {
            dt,
            final_time,
            dealias: true,
            scheme: Scheme::IntegratingFactorRk4,
            nonlinear: true,
            frame_every: 1,
            blowup_factor: T::lit(10.0),
        }
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn every(mut self, n: usize) -> Self {
        self.frame_every = n.max(1);
        self
    }

    /// `(steps, step size)` with the step shrunk to land on `final_time`.
    pub fn steps(&self) -> Result<(usize, T)> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return invalid(format!("dt = {} must be positive", self.dt));
        }
        if self.final_time < T::zero() || !self.final_time.is_finite() {
            return invalid("final time must be non-negative");
        }
        let n = (self.final_time / self.dt - T::lit(1e-9)).ceil().max(T::zero());
        let n = n.to_usize().ok_or_else(|| Error::InvalidInput("too many steps".into()))?;
        if n == 0 {
            return Ok((0, self.dt));
        }
        Ok((n, self.final_time / T::from_usize(n).unwrap()))
    }
}

/// `-½ ∂_x(u²)` by a transform-space product, optionally 2/3-dealiased.
pub struct Nonlinearity<T: Real> {
    plan: SpectralPlan<T>,
    dealias: Option<i64>,
    ik: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
}

impl<T: Real> Nonlinearity<T> {
    pub fn new(grid: TorusGrid, dealias: bool) -> Self {
        let ik = (0..grid.modes())
            .map(|slot| Complex::new(T::zero(), grid.frequency::<T>(grid.mode_at(slot))))
            .collect();
        Nonlinearity {
            plan: SpectralPlan::new(grid),
            dealias: dealias.then(|| dealias_radius(grid.modes())),
            ik,
            buf: vec![Complex::new(T::zero(), T::zero()); grid.modes()],
        }
    }

    /// Writes `-½ ik (u²)^(k)` into `out`.
    pub fn apply(&mut self, u: &[Complex<T>], out: &mut [Complex<T>]) {
        let grid = *self.plan.grid();
        let zero = Complex::new(T::zero(), T::zero());
        self.buf.copy_from_slice(u);
        self.truncate_buf(&grid);
        self.plan.inverse_in_place(&mut self.buf);
        self.buf.iter_mut().for_each(|v| *v = *v * *v);
        self.plan.forward_in_place(&mut self.buf);
        self.buf[grid.modes() / 2] = zero;
        self.truncate_buf(&grid);
        // the mean of ∂_x(u²) is exactly zero: ik vanishes at k = 0
        let half = T::lit(-0.5);
        for ((o, b), ik) in out.iter_mut().zip(&self.buf).zip(&self.ik) {
            *o = *b * *ik * half;
        }
    }

    fn truncate_buf(&mut self, grid: &TorusGrid) {
        if let Some(r) = self.dealias {
            for (slot, v) in self.buf.iter_mut().enumerate() {
                if grid.mode_at(slot).abs() > r {
                    *v = Complex::new(T::zero(), T::zero());
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conserved<T> {
    pub mean: T,
    pub l2: T,
}

/// `(mean, ‖u‖_{L²(0,2πλ)})`.
pub fn conserved_quantities<T: Real>(u: &SpectralField<T>) -> Conserved<T> {
    Conserved { mean: u.mean().re, l2: u.l2_norm() }
}

/// Integrate the equation from mean-zero `u0`.
pub fn integrate<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    cfg: &SolverConfig<T>,
) -> Result<FrameSeries<T>> {
    if u0.grid().lambda() != model.lambda() {
        return invalid("data and model disagree on lambda");
    }
    if !u0.is_mean_zero() {
        return invalid("initial data must have zero mean");
    }
    let (steps, h) = cfg.steps()?;
    let every = cfg.frame_every.max(1);
    let l2_0 = u0.l2_norm();
    let mut frames = vec![u0.clone()];
    let check = |u: &SpectralField<T>, t: T| -> Result<()> {
        if !u.is_finite() {
            return Err(Error::BlowUp { time: t.f64(), ratio: f64::INFINITY });
        }
        if l2_0 > T::zero() {
            let r = u.l2_norm() / l2_0;
            if r > cfg.blowup_factor {
                return Err(Error::BlowUp { time: t.f64(), ratio: r.f64() });
            }
        }
        Ok(())
    };
    match cfg.scheme {
        Scheme::IntegratingFactorRk4 => {
            let mut stepper = IfRk4::new(model, *u0.grid(), cfg.dealias, cfg.nonlinear);
            let mut v = u0.slots().to_vec();
            for n in 0..steps {
                let t = T::from_usize(n).unwrap() * h;
                stepper.step(&mut v, t, h);
                if (n + 1) % every == 0 || n + 1 == steps {
                    let tn = T::from_usize(n + 1).unwrap() * h;
                    let mut u = SpectralField::from_slots(*u0.grid(), v.clone())?;
                    free_evolve_in_place(model, &mut u, tn)?;
                    check(&u, tn)?;
                    if (n + 1) % every == 0 {
                        frames.push(u);
                    }
                }
            }
        }
        Scheme::Etdrk4 => {
            let mut stepper = Etdrk4::new(model, *u0.grid(), h, cfg.dealias, cfg.nonlinear);
            let mut u = u0.slots().to_vec();
            for n in 0..steps {
                stepper.step(&mut u);
                if (n + 1) % every == 0 || n + 1 == steps {
                    let tn = T::from_usize(n + 1).unwrap() * h;
                    let f = SpectralField::from_slots(*u0.grid(), u.clone())?;
                    check(&f, tn)?;
                    if (n + 1) % every == 0 {
                        frames.push(f);
                    }
                }
            }
        }
    }
    FrameSeries::new(T::zero(), h * T::from_usize(every).unwrap(), frames)
}

struct IfRk4<T: Real> {
    phases: Vec<T>,
    nl: Option<Nonlinearity<T>>,
    w: Vec<Complex<T>>,
    stage: Vec<Complex<T>>,
    ks: [Vec<Complex<T>>; 4],
}

impl<T: Real> IfRk4<T> {
    fn new(model: &DispersionModel, grid: TorusGrid, dealias: bool, nonlinear: bool) -> Self {
        let zero = vec![Complex::new(T::zero(), T::zero()); grid.modes()];
        IfRk4 {
            phases: (0..grid.modes()).map(|s| model.phase_of_mode::<T>(grid.mode_at(s))).collect(),
            nl: nonlinear.then(|| Nonlinearity::new(grid, dealias)),
            w: zero.clone(),
            stage: zero.clone(),
            ks: [zero.clone(), zero.clone(), zero.clone(), zero],
        }
    }

    /// `k = S(-s) N(S(s) v)`.
    fn rhs(nl: &mut Nonlinearity<T>, phases: &[T], s: T, v: &[Complex<T>], w: &mut [Complex<T>], k: &mut [Complex<T>]) {
        for ((wi, vi), &p) in w.iter_mut().zip(v).zip(phases) {
            *wi = *vi * Complex::from_polar(T::one(), s * p);
        }
        nl.apply(w, k);
        for (ki, &p) in k.iter_mut().zip(phases) {
            *ki = *ki * Complex::from_polar(T::one(), -s * p);
        }
    }

    fn step(&mut self, v: &mut [Complex<T>], t: T, h: T) {
        let nl = match self.nl.as_mut() {
            Some(nl) => nl,
            None => return,
        };
        let half = h * T::lit(0.5);
        let [k1, k2, k3, k4] = &mut self.ks;
        Self::rhs(nl, &self.phases, t, v, &mut self.w, k1);
        for i in 0..v.len() {
            self.stage[i] = v[i] + k1[i] * half;
        }
        Self::rhs(nl, &self.phases, t + half, &self.stage, &mut self.w, k2);
        for i in 0..v.len() {
            self.stage[i] = v[i] + k2[i] * half;
        }
        Self::rhs(nl, &self.phases, t + half, &self.stage, &mut self.w, k3);
        for i in 0..v.len() {
            self.stage[i] = v[i] + k3[i] * h;
        }
        Self::rhs(nl, &self.phases, t + h, &self.stage, &mut self.w, k4);
        let sixth = h / T::lit(6.0);
        for i in 0..v.len() {
            v[i] = v[i] + (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth;
        }
    }
}

/// `(φ₁, φ₂, φ₃)(z)`; Taylor series for `|z| < 1`, closed forms otherwise.
pub fn phi_functions<T: Real>(z: Complex<T>) -> [Complex<T>; 3] {
    let one = Complex::new(T::one(), T::zero());
    if z.norm() < T::one() {
        let mut out = [Complex::new(T::zero(), T::zero()); 3];
        for (l, o) in out.iter_mut().enumerate() {
            // Σ_{n≥0} zⁿ/(n+l+1)!
            let mut term = one;
            let mut fact = T::one();
            for i in 1..=(l + 1) {
                fact = fact * T::from_usize(i).unwrap();
            }
            term = term / fact;
            let mut sum = term;
            for n in 1..40 {
                term = term * z / T::from_usize(n + l + 1).unwrap();
                sum = sum + term;
                if term.norm() < T::epsilon() * T::lit(1e-3) {
                    break;
                }
            }
            *o = sum;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - one) / z;
        let p2 = (p1 - one) / z;
        let p3 = (p2 - one * T::lit(0.5)) / z;
        [p1, p2, p3]
    }
}

struct Etdrk4<T: Real> {
    e: Vec<Complex<T>>,
    e2: Vec<Complex<T>>,
    q: Vec<Complex<T>>,
    f1: Vec<Complex<T>>,
    f2: Vec<Complex<T>>,
    f3: Vec<Complex<T>>,
    nl: Option<Nonlinearity<T>>,
    scratch: [Vec<Complex<T>>; 6],
}

impl<T: Real> Etdrk4<T> {
    fn new(model: &DispersionModel, grid: TorusGrid, h: T, dealias: bool, nonlinear: bool) -> Self {
        let n = grid.modes();
        let zero = vec![Complex::new(T::zero(), T::zero()); n];
        let mut s = Etdrk4 {
            e: zero.clone(),
            e2: zero.clone(),
            q: zero.clone(),
            f1: zero.clone(),
            f2: zero.clone(),
            f3: zero.clone(),
            nl: nonlinear.then(|| Nonlinearity::new(grid, dealias)),
            scratch: [zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero],
        };
        for slot in 0..n {
            let p = model.phase_of_mode::<T>(grid.mode_at(slot));
            let z = Complex::new(T::zero(), h * p);
            s.e[slot] = Complex::from_polar(T::one(), h * p);
            s.e2[slot] = Complex::from_polar(T::one(), h * p * T::lit(0.5));
            let [h1, _, _] = phi_functions(z * T::lit(0.5));
            s.q[slot] = h1 * (h * T::lit(0.5));
            let [p1, p2, p3] = phi_functions(z);
            s.f1[slot] = (p1 - p2 * T::lit(3.0) + p3 * T::lit(4.0)) * h;
            s.f2[slot] = (p2 - p3 * T::lit(2.0)) * h;
            s.f3[slot] = (p3 * T::lit(4.0) - p2) * h;
        }
        s
    }

    fn step(&mut self, u: &mut [Complex<T>]) {
        let nl = match self.nl.as_mut() {
            Some(nl) => nl,
            None => {
                u.iter_mut().zip(&self.e).for_each(|(x, e)| *x = *x * *e);
                return;
            }
        };
        let [nu, a, na, b, nb, nc] = &mut self.scratch;
        let len = u.len();
        nl.apply(u, nu);
        for i in 0..len {
            a[i] = self.e2[i] * u[i] + self.q[i] * nu[i];
        }
        nl.apply(a, na);
        for i in 0..len {
            b[i] = self.e2[i] * u[i] + self.q[i] * na[i];
        }
        nl.apply(b, nb);
        // c overwrites b once N(b) is known
        for i in 0..len {
            b[i] = self.e2[i] * a[i] + self.q[i] * (nb[i] * T::lit(2.0) - nu[i]);
        }
        nl.apply(b, nc);
        for i in 0..len {
            u[i] = self.e[i] * u[i]
                + self.f1[i] * nu[i]
                + self.f2[i] * (na[i] + nb[i]) * T::lit(2.0)
                + self.f3[i] * nc[i];
        }
    }
}

/// `Φ(u)(t) = η(t)S(t)φ - ½η(t)∫₀ᵗ S(t-t')η(t')∂_x(u²)(t')dt'` on the time
/// grid of `u`. The time integral is accumulated outward from `t = 0` with a
/// fourth-order cumulative rule (cubic interpolation of the integrand).
pub fn duhamel_map<T: Real, W: TimeWindow<T>>(
    model: &DispersionModel,
    phi: &SpectralField<T>,
    u: &FrameSeries<T>,
    window: &W,
) -> Result<FrameSeries<T>> {
    let len = u.len();
    if len < 4 {
        return invalid("duhamel map needs at least four frames");
    }
    let origin = u
        .origin_index()
        .ok_or_else(|| Error::InvalidInput("t = 0 must be a frame time".into()))?;
    let grid = *phi.grid();
    if u.frames[0].grid() != &grid {
        return invalid("frames and data live on different grids");
    }
    let plan = SpectralPlan::new(grid);
    let mut g = Vec::with_capacity(len);
    for (n, f) in u.frames.iter().enumerate() {
        let t = u.time(n);
        let eta = window.value(t);
        let mut d = if eta == T::zero() || f.max_abs() == T::zero() {
            SpectralField::zeros(grid)
        } else {
            plan.convolve(f, f)?.derivative().scale(Complex::new(eta, T::zero()))
        };
        free_evolve_in_place(model, &mut d, -t)?;
        g.push(d);
    }
    let integral = cumulative_integral(&g, origin, u.dt)?;
    let mut out = Vec::with_capacity(len);
    for (n, i) in integral.into_iter().enumerate() {
        let t = u.time(n);
        let eta = window.value(t);
        let mut v = phi.clone();
        v.axpy(Complex::new(T::lit(-0.5), T::zero()), &i)?;
        free_evolve_in_place(model, &mut v, t)?;
        out.push(v.scale(Complex::new(eta, T::zero())));
    }
    FrameSeries::new(u.t0, u.dt, out)
}

/// `∫_{t_o}^{t_n} g` for every `n`, fourth order, from samples spaced `h`.
fn cumulative_integral<T: Real>(g: &[SpectralField<T>], origin: usize, h: T) -> Result<Vec<SpectralField<T>>> {
    let len = g.len();
    let grid = *g[0].grid();
    let c = |x: f64| Complex::new(T::lit(x) * h / T::lit(24.0), T::zero());
    // integral over [t_n, t_{n+1}]
    let interval = |n: usize| -> Result<SpectralField<T>> {
        let mut acc = SpectralField::zeros(grid);
        if n >= 1 && n + 2 < len {
            acc.axpy(c(-1.0), &g[n - 1])?;
            acc.axpy(c(13.0), &g[n])?;
            acc.axpy(c(13.0), &g[n + 1])?;
            acc.axpy(c(-1.0), &g[n + 2])?;
        } else if n == 0 {
            acc.axpy(c(9.0), &g[0])?;
            acc.axpy(c(19.0), &g[1])?;
            acc.axpy(c(-5.0), &g[2])?;
            acc.axpy(c(1.0), &g[3])?;
        } else {
            acc.axpy(c(1.0), &g[n - 2])?;
            acc.axpy(c(-5.0), &g[n - 1])?;
            acc.axpy(c(19.0), &g[n])?;
            acc.axpy(c(9.0), &g[n + 1])?;
        }
        Ok(acc)
    };
    let mut out = vec![SpectralField::zeros(grid); len];
    for n in origin..len - 1 {
        out[n + 1] = out[n].add(&interval(n)?)?;
    }
    for n in (1..=origin).rev() {
        out[n - 1] = out[n].sub(&interval(n - 1)?)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub max_iter: usize,
    /// Frame spacing on `[-2, 2]`.
    pub dt: f64,
    /// Stop once a difference drops below `tol` times the iterate norm.
    pub tol: f64,
    /// `‖φ‖_{H^s}` above which the small-data hypothesis is flagged.
    pub smallness: f64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig { max_iter: 30, dt: 2e-3, tol: 1e-12, smallness: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionTrace {
    pub phi_hs_norm: f64,
    pub above_smallness: bool,
    /// `‖u⁽ⁿ⁾‖_{Z^s}`, `n = 0, 1, …`
    pub iterate_norms: Vec<f64>,
    /// `‖u⁽ⁿ⁺¹⁾ - u⁽ⁿ⁾‖_{Z^s}`
    pub differences: Vec<f64>,
    /// `sup_t ‖u⁽ⁿ⁺¹⁾(t) - u⁽ⁿ⁾(t)‖_{H^s}`
    pub hs_sup_differences: Vec<f64>,
    /// Successive difference ratios.
    pub ratios: Vec<f64>,
    /// Largest ratio, if at least two nonzero differences were measured.
    pub factor: Option<f64>,
    pub converged: bool,
    pub diverged: bool,
}

impl ContractionTrace {
    pub const CSV_HEADER: &'static str = "iteration,iterate_norm,difference,hs_sup_difference,ratio";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (n, d) in self.differences.iter().enumerate() {
            let ratio = if n == 0 { f64::NAN } else { self.ratios.get(n - 1).copied().unwrap_or(f64::NAN) };
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                n + 1,
                self.iterate_norms.get(n + 1).copied().unwrap_or(f64::NAN),
                d,
                self.hs_sup_differences[n],
                ratio
            ));
        }
        out
    }
}

/// Picard iteration `u⁽ⁿ⁺¹⁾ = Φ(u⁽ⁿ⁾)` from `u⁽⁰⁾ = ηS(t)φ` on `[-2, 2]`,
/// differences measured in the discrete `Z^s` norm.
pub fn contraction_experiment<T: Real>(
    model: &DispersionModel,
    phi: &SpectralField<T>,
    s: T,
    cfg: &ContractionConfig,
) -> Result<ContractionTrace> {
    if cfg.max_iter == 0 {
        return invalid("max_iter must be >= 1");
    }
    if !(cfg.dt > 0.0) || cfg.dt > 0.25 {
        return invalid("frame spacing must lie in (0, 0.25]");
    }
    let half_frames = (2.0 / cfg.dt).round() as usize;
    let dt = T::lit(2.0 / half_frames as f64);
    let len = 2 * half_frames + 1;
    let grid = *phi.grid();
    let phi_hs = sobolev_norm(phi, &NormSpec::sobolev(s)).value.f64();
    let above_smallness = phi_hs > cfg.smallness;
    if above_smallness {
        log::warn!("||phi||_H^s = {phi_hs} exceeds the smallness parameter {}", cfg.smallness);
    }
    let zero = FrameSeries::new(T::lit(-2.0), dt, vec![SpectralField::zeros(grid); len])?;
    let zs = |f: &FrameSeries<T>| -> Result<f64> {
        Ok(zs_norm(&spacetime_from_timeseries(model, f, &UnitWindow)?, s).total.f64())
    };
    let hs_sup = |a: &FrameSeries<T>, b: &FrameSeries<T>| -> Result<f64> {
        let mut m = 0.0f64;
        for (x, y) in a.frames.iter().zip(&b.frames) {
            m = m.max(sobolev_norm(&x.sub(y)?, &NormSpec::sobolev(s)).value.f64());
        }
        Ok(m)
    };
    let diff_series = |a: &FrameSeries<T>, b: &FrameSeries<T>| -> Result<FrameSeries<T>> {
        let frames = a.frames.iter().zip(&b.frames).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
        FrameSeries::new(a.t0, a.dt, frames)
    };
    let mut u = duhamel_map(model, phi, &zero, &SmoothBump)?;
    let mut trace = ContractionTrace {
        phi_hs_norm: phi_hs,
        above_smallness,
        iterate_norms: vec![zs(&u)?],
        differences: Vec::new(),
        hs_sup_differences: Vec::new(),
        ratios: Vec::new(),
        factor: None,
        converged: false,
        diverged: false,
    };
    let n0 = trace.iterate_norms[0];
    for _ in 0..cfg.max_iter {
        let next = duhamel_map(model, phi, &u, &SmoothBump)?;
        let d = zs(&diff_series(&next, &u)?)?;
        let dh = hs_sup(&next, &u)?;
        let norm = zs(&next)?;
        trace.iterate_norms.push(norm);
        trace.hs_sup_differences.push(dh);
        if let Some(&prev) = trace.differences.last() {
            if prev > 0.0 && d > 0.0 {
                trace.ratios.push(d / prev);
            }
        }
        trace.differences.push(d);
        u = next;
        if !d.is_finite() || !norm.is_finite() || (n0 > 0.0 && norm > 1e6 * n0) {
            trace.diverged = true;
            break;
        }
        if d <= cfg.tol * norm.max(f64::MIN_POSITIVE) || d == 0.0 {
            trace.converged = true;
            break;
        }
    }
    trace.factor = trace.ratios.iter().copied().fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    if !trace.converged && cfg.max_iter > 1 {
        trace.diverged = true;
    }
    Ok(trace)
}

/// Dilation `u ↦ μ^{-2j} u(·/μ)` onto the torus of period `2πλμ`: same
/// lattice indices, coefficients scaled by `μ^{1-2j}`.
pub fn scale_transform<T: Real>(
    model: &DispersionModel,
    u0: &SpectralField<T>,
    mu: T,
) -> Result<(SpectralField<T>, DispersionModel)> {
    if mu < T::one() || mu.fract() != T::zero() {
        return invalid(format!("mu = {mu} must be an integer >= 1"));
    }
    if u0.grid().lambda() != model.lambda() {
        return invalid("data and model disagree on lambda");
    }
    let m = mu.to_u64().ok_or_else(|| Error::InvalidInput("mu out of range".into()))?;
    let lambda = model.lambda().dilate(m)?;
    let grid = TorusGrid::new(lambda, u0.grid().modes())?;
    let factor = mu.powi(1 - 2 * model.j() as i32);
    let field = SpectralField::from_slots(grid, u0.slots().iter().map(|c| *c * factor).collect())?;
    Ok((field, model.with_lambda(lambda)))
}

/// Time at which the dilated solution matches the original at `t`.
pub fn scaled_time<T: Real>(model: &DispersionModel, t: T, mu: T) -> T {
    t * mu.powi(model.order() as i32)
}

/// Map a field on the dilated torus back (inverse of `scale_transform`).
pub fn unscale_field<T: Real>(
    model: &DispersionModel,
    scaled: &SpectralField<T>,
    mu: T,
) -> Result<SpectralField<T>> {
    let m = mu.to_u64().ok_or_else(|| Error::InvalidInput("mu out of range".into()))?;
    let lam = scaled.grid().lambda();
    if lam.num() % m != 0 && (lam.num() / lam.den()) % m != 0 {
        return invalid("field is not on a dilated torus");
    }
    let base = crate::torus::Lambda::rational(lam.num(), lam.den() * m)?;
    if base != model.lambda() {
        return invalid("mu does not undo the dilation");
    }
    let grid = TorusGrid::new(base, scaled.grid().modes())?;
    let factor = mu.powi(2 * model.j() as i32 - 1);
    SpectralField::from_slots(grid, scaled.slots().iter().map(|c| *c * factor).collect())
}

/// Linear flow check helper: `S(T)u₀`.
pub fn linear_reference<T: Real>(model: &DispersionModel, u0: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
    free_evolve(model, u0, t)
}
