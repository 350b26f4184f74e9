//! Ratio searches for the bilinear and embedding estimates.
//!
//! Random fields can only bound constants from below, so every search
//! reports the measured maximum, the trial that attained it and enough to
//! replay that trial. Fields are synthesized directly on the
//! modulation-aligned `(k, τ)` lattice as a few rows with short `σ`
//! profiles, then made real-valued by adding the mirrored conjugate
//! `(−m, −n)` cells.

use crate::dispersion::{DispersionModel, RegionLabel};
use crate::error::{invalid, Result};
use crate::norms::{dyadic_localize, restrict_to_regions, xsb_norm, zs_admissible, zs_norm_quiet, DyadicShell, NormSpec};
use crate::scalar::bracket;
use crate::spacetime::{spacetime_product, SpaceTimeField};
use crate::torus::TorusGrid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Random rows, white-noise `σ` profiles at log-uniform offsets.
    GaussianRandom,
    /// One dyadic band in `k` and one modulation shell.
    DyadicConcentrated,
    /// The rows `±N` with a bump at `σ = 0`, coefficient `⟨N⟩^{-s}`.
    PhiNFamily,
    /// Several rows, each a bump at `σ = 0` (windowed free waves).
    FreeSolutionLike,
    /// One of the above, drawn per field.
    Mixed,
}

impl Generator {
    const PURE: [Generator; 4] =
        [Generator::GaussianRandom, Generator::DyadicConcentrated, Generator::PhiNFamily, Generator::FreeSolutionLike];

    pub fn name(&self) -> &'static str {
        match self {
            Generator::GaussianRandom => "gaussian-random",
            Generator::DyadicConcentrated => "dyadic-concentrated",
            Generator::PhiNFamily => "phi-n-family",
            Generator::FreeSolutionLike => "free-solution-like",
            Generator::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::PURE.as_slice(), &[Generator::Mixed]].concat().into_iter().find(|g| g.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSearchConfig {
    pub trials: usize,
    /// Rows are drawn from lattice indices `1 ≤ |m| ≤ k_max`.
    pub k_max: i64,
    /// Longest `σ` profile, in cells.
    pub t_modes: usize,
    pub dtau: f64,
    /// Rows per field before mirroring.
    pub max_rows: usize,
    pub generator: Generator,
    pub seed: u64,
}

impl Default for RatioSearchConfig {
    fn default() -> Self {
        RatioSearchConfig {
            trials: 500,
            k_max: 64,
            t_modes: 32,
            dtau: 1.0,
            max_rows: 8,
            generator: Generator::Mixed,
            seed: 0,
        }
    }
}

impl RatioSearchConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.k_max < 1 || self.t_modes == 0 || self.max_rows == 0 {
            return invalid("trials, k_max, t_modes and max_rows must be positive");
        }
        if !(self.dtau > 0.0) || !self.dtau.is_finite() {
            return invalid("dtau must be positive");
        }
        Ok(())
    }

    /// Lattice holding every product row `|m₁ + m₂| ≤ 2 k_max`.
    pub fn grid(&self, model: &DispersionModel) -> Result<TorusGrid> {
        TorusGrid::new(model.lambda(), (4 * self.k_max as usize + 4).next_power_of_two())
    }

    /// Deterministic generator for one trial: stream `trial` of the seed.
    pub fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioParams {
    pub s: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub l1: Option<u32>,
    pub l2: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub generators: Vec<Generator>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Enough to rebuild the maximizing inputs: rerun `trial` under `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub seed: u64,
    pub generators: Vec<Generator>,
    /// Nonzero rows of each input.
    pub rows: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub lemma: String,
    pub j: u32,
    pub lambda: String,
    pub params: RatioParams,
    pub config: RatioSearchConfig,
    pub trials: Vec<TrialRecord>,
    /// Trials whose inputs vanished after localization.
    pub skipped: usize,
    pub max_ratio: f64,
    pub witness: Option<Witness>,
    /// Parameters outside the hypotheses (exploratory run).
    pub inadmissible: bool,
    /// Largest rounding of a modulation shift to the `Δτ` lattice, in cells.
    pub max_binning_error: f64,
}

impl RatioReport {
    pub const CSV_HEADER: &'static str = "trial,generators,lhs,rhs,ratio";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for t in &self.trials {
            let g: Vec<&str> = t.generators.iter().map(|g| g.name()).collect();
            out.push_str(&format!("{},{},{:.16e},{:.16e},{:.16e}\n", t.trial, g.join("+"), t.lhs, t.rhs, t.ratio));
        }
        out
    }
}

/// One random field per call.
pub struct FieldSampler {
    model: DispersionModel,
    grid: TorusGrid,
    cfg: RatioSearchConfig,
    /// Regularity used by the φ_N coefficients.
    s: f64,
    /// Largest `|σ|` offset in cells.
    offset_cap: f64,
}

impl FieldSampler {
    pub fn new(model: &DispersionModel, cfg: &RatioSearchConfig, s: f64) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid(model)?;
        let kf = cfg.k_max as f64 / model.lambda().value::<f64>();
        let n = model.order() as i32;
        // reach past the D₂/D₃ boundary 2(2j+1)|k|^{2j+1} of the top row
        let b = 2.0 * n as f64 * kf.max(1.0).powi(n);
        Ok(FieldSampler { model: *model, grid, cfg: *cfg, s, offset_cap: (8.0 * b / cfg.dtau).max(64.0) })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Draw a field; with `shell`, every profile is centred in that
    /// modulation shell (cells outside it are removed afterwards by `Ψ_l`).
    pub fn sample(&self, rng: &mut ChaCha8Rng, generator: Generator, shell: Option<DyadicShell>) -> (Generator, SpaceTimeField<f64>) {
        let g = match generator {
            Generator::Mixed => Generator::PURE[rng.random_range(0..4)],
            g => g,
        };
        let mut rows: Vec<(i64, i64, Vec<Complex64>)> = Vec::new();
        match g {
            Generator::GaussianRandom => {
                for _ in 0..rng.random_range(1..=self.cfg.max_rows) {
                    let m = self.random_row(rng, 1, self.cfg.k_max);
                    let len = rng.random_range(1..=self.cfg.t_modes);
                    let centre = self.centre(rng, shell);
                    rows.push((m, centre - (len / 2) as i64, (0..len).map(|_| gaussian(rng)).collect()));
                }
            }
            Generator::DyadicConcentrated => {
                let top = 63 - (self.cfg.k_max as u64).leading_zeros() as i64;
                let a = rng.random_range(0..=top);
                let lo = 1i64 << a;
                let hi = ((1i64 << (a + 1)) - 1).min(self.cfg.k_max);
                let band = shell.unwrap_or_else(|| DyadicShell::new(rng.random_range(0..=self.max_shell())));
                for _ in 0..rng.random_range(1..=self.cfg.max_rows) {
                    let m = self.random_row(rng, lo, hi);
                    let len = rng.random_range(1..=self.cfg.t_modes);
                    let centre = self.centre(rng, Some(band));
                    rows.push((m, centre - (len / 2) as i64, (0..len).map(|_| gaussian(rng)).collect()));
                }
            }
            Generator::PhiNFamily => {
                let n = rng.random_range(1..=self.cfg.k_max);
                let k = self.grid.frequency::<f64>(n);
                let amp = bracket(k).powf(-self.s);
                let (start, bump) = self.bump(rng, shell);
                rows.push((n, start, bump.into_iter().map(|v| Complex64::new(v * amp, 0.0)).collect()));
            }
            Generator::FreeSolutionLike => {
                for _ in 0..rng.random_range(1..=self.cfg.max_rows) {
                    let m = self.random_row(rng, 1, self.cfg.k_max);
                    let c = gaussian(rng);
                    let (start, bump) = self.bump(rng, shell);
                    rows.push((m, start, bump.into_iter().map(|v| c * v).collect()));
                }
            }
            Generator::Mixed => unreachable!(),
        }
        (g, self.assemble(rows))
    }

    fn assemble(&self, rows: Vec<(i64, i64, Vec<Complex64>)>) -> SpaceTimeField<f64> {
        let mut u = SpaceTimeField::new(self.model, self.grid, self.cfg.dtau).expect("validated lattice");
        for (m, start, values) in rows {
            let end = start + values.len() as i64 - 1;
            let mirror: Vec<Complex64> = values.iter().rev().map(|c| c.conj()).collect();
            u.accumulate(m, start, &values).expect("row inside lattice");
            u.accumulate(-m, -end, &mirror).expect("row inside lattice");
        }
        u
    }

    fn random_row(&self, rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
        let m = rng.random_range(lo..=hi.max(lo));
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    }

    fn max_shell(&self) -> u32 {
        DyadicShell::of(self.offset_cap * self.cfg.dtau).l
    }

    /// Profile centre in cells: `σ = 0` a quarter of the time, otherwise
    /// log-uniform in `[1, offset_cap]` with a random sign.
    fn centre(&self, rng: &mut ChaCha8Rng, shell: Option<DyadicShell>) -> i64 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let sigma = match shell {
            Some(sh) => {
                // |σ| uniform on the shell: ⟨σ⟩ ∈ [2^l, 2^{l+1})
                let lo = if sh.l == 0 { 0.0 } else { (4f64.powi(sh.l as i32) - 1.0).sqrt() };
                let hi = (4f64.powi(sh.l as i32 + 1) - 1.0).sqrt();
                lo + (hi - lo) * rng.random::<f64>()
            }
            None => {
                if rng.random_range(0..4) == 0 {
                    0.0
                } else {
                    (rng.random::<f64>() * self.offset_cap.ln()).exp() * self.cfg.dtau
                }
            }
        };
        (sign * sigma / self.cfg.dtau).round() as i64
    }

    /// A Gaussian bump in `σ` of random width, centred at `σ = 0` (or in
    /// `shell`).
    fn bump(&self, rng: &mut ChaCha8Rng, shell: Option<DyadicShell>) -> (i64, Vec<f64>) {
        let len = rng.random_range(1..=self.cfg.t_modes);
        let width = 0.5 + rng.random::<f64>() * (len as f64 / 4.0).max(0.5);
        let centre = if shell.is_some() { self.centre(rng, shell) } else { 0 };
        let start = centre - (len / 2) as i64;
        let values = (0..len as i64)
            .map(|i| {
                let x = (start + i - centre) as f64 / width;
                (-x * x).exp()
            })
            .collect();
        (start, values)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `(2^{l₁}∧2^{l₂})^{1/2} (2^{l₁}∨2^{l₂})^{1/(2(2j+1))}`.
pub fn lemma21_prefactor(j: u32, l1: u32, l2: u32) -> f64 {
    let (lo, hi) = (l1.min(l2) as f64, l1.max(l2) as f64);
    2f64.powf(lo / 2.0) * 2f64.powf(hi / (2.0 * (2 * j + 1) as f64))
}

fn l2_norm(u: &SpaceTimeField<f64>) -> f64 {
    u.mass().sqrt()
}

/// `(lhs, rhs)` of the dyadic bilinear estimate on explicit inputs, `None`
/// when a nonzero input has no mass in its shell.
pub fn lemma21_pair(
    u1: &SpaceTimeField<f64>,
    u2: &SpaceTimeField<f64>,
    l1: u32,
    l2: u32,
) -> Result<Option<(f64, f64, f64)>> {
    if u1.max_abs() == 0.0 || u2.max_abs() == 0.0 {
        return Ok(Some((0.0, 0.0, 0.0)));
    }
    let v1 = dyadic_localize(u1, DyadicShell::new(l1));
    let v2 = dyadic_localize(u2, DyadicShell::new(l2));
    if v1.max_abs() == 0.0 || v2.max_abs() == 0.0 {
        return Ok(None);
    }
    let p = spacetime_product(&v1, &v2)?;
    let lhs = l2_norm(&p.field);
    let rhs = lemma21_prefactor(u1.model().j(), l1, l2) * l2_norm(&v1) * l2_norm(&v2);
    Ok(Some((lhs, rhs, p.binning_error)))
}

/// `‖uv‖_{L²}` (as the `(k,τ)` convolution's `L²` norm) against
/// `‖u‖_{X_{0,a}} ‖v‖_{X_{0,b}}`.
pub fn lemma22_pair(u: &SpaceTimeField<f64>, v: &SpaceTimeField<f64>, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let p = spacetime_product(u, v)?;
    let rhs = xsb_norm(u, &NormSpec::new(0.0, a)) * xsb_norm(v, &NormSpec::new(0.0, b));
    Ok((l2_norm(&p.field), rhs, p.binning_error))
}

/// Whether `(a, b)` meets `a + b ≥ (j+1)/(2j+1)` and `min(a,b) > 1/(2(2j+1))`.
pub fn lemma22_admissible(j: u32, a: f64, b: f64) -> bool {
    let n = (2 * j + 1) as f64;
    a + b >= (j + 1) as f64 / n - 1e-15 && a.min(b) > 1.0 / (2.0 * n)
}

/// `Λ^{-1} ∂_x (u₁u₂)`: the product times `ik ⟨σ⟩^{-1}` cell by cell.
pub fn lambda_inv_dx_product(u1: &SpaceTimeField<f64>, u2: &SpaceTimeField<f64>) -> Result<(SpaceTimeField<f64>, f64)> {
    let p = spacetime_product(u1, u2)?;
    let f = &p.field;
    let out = f.map_cells(|m, n, v| {
        let k = f.frequency(m);
        v * Complex64::new(0.0, k / bracket(f.sigma(n)))
    });
    Ok((out, p.binning_error))
}

/// `‖Λ^{-1}∂_x(u₁u₂)‖_{Z^s}` against `‖u₁‖_{Z^s}‖u₂‖_{Z^s}`.
pub fn lemma31_pair(u1: &SpaceTimeField<f64>, u2: &SpaceTimeField<f64>, s: f64) -> Result<(f64, f64, f64)> {
    let (w, bin) = lambda_inv_dx_product(u1, u2)?;
    let lhs = zs_norm_quiet(&w, s).total;
    let rhs = zs_norm_quiet(u1, s).total * zs_norm_quiet(u2, s).total;
    Ok((lhs, rhs, bin))
}

/// The three embedding directions of the `Z^s` space on one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Embedding {
    /// `‖u‖_{X^{s,1/(2j)}} / ‖u‖_{Z^s}`
    Lower,
    /// `‖u‖_{Z^s} / ‖u‖_{X^{s,(2j-1)/(2j)}}`
    Upper,
    /// `‖u‖_{X^{s,1/2}(D₁∪D₂)} / ‖u‖_{Z^s(D₁∪D₂)}`
    Restricted,
}

impl Embedding {
    pub const ALL: [Embedding; 3] = [Embedding::Lower, Embedding::Upper, Embedding::Restricted];

    pub fn name(&self) -> &'static str {
        match self {
            Embedding::Lower => "2.5-lower",
            Embedding::Upper => "2.5-upper",
            Embedding::Restricted => "2.5-restricted",
        }
    }
}

/// `(lhs, rhs)` of one embedding, `None` when the restricted field is empty.
pub fn embedding_pair(u: &SpaceTimeField<f64>, s: f64, which: Embedding) -> Option<(f64, f64)> {
    let j = u.model().j() as f64;
    match which {
        Embedding::Lower => Some((xsb_norm(u, &NormSpec::new(s, 1.0 / (2.0 * j))), zs_norm_quiet(u, s).total)),
        Embedding::Upper => Some((zs_norm_quiet(u, s).total, xsb_norm(u, &NormSpec::new(s, (2.0 * j - 1.0) / (2.0 * j))))),
        Embedding::Restricted => {
            let r = restrict_to_regions(u, &[RegionLabel::D1, RegionLabel::D2]);
            if r.max_abs() == 0.0 {
                return None;
            }
            Some((xsb_norm(&r, &NormSpec::new(s, 0.5)), zs_norm_quiet(&r, s).total))
        }
    }
}

struct Outcome {
    generators: Vec<Generator>,
    rows: Vec<Vec<i64>>,
    value: Option<(f64, f64)>,
    binning: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn run_search(
    lemma: &str,
    model: &DispersionModel,
    cfg: &RatioSearchConfig,
    params: RatioParams,
    inadmissible: bool,
    trial: impl Fn(usize, &mut ChaCha8Rng) -> Result<Outcome> + Sync,
) -> Result<RatioReport> {
    cfg.validate()?;
    let outcomes: Vec<Outcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.trial_rng(t);
            trial(t, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut trials = Vec::new();
    let mut skipped = 0;
    let mut best: Option<(usize, f64)> = None;
    let mut binning = 0.0f64;
    let mut witness = None;
    for (t, o) in outcomes.into_iter().enumerate() {
        binning = binning.max(o.binning);
        let (lhs, rhs) = match o.value {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        let r = ratio(lhs, rhs);
        // strict comparison: the lowest trial index wins ties
        if best.map_or(true, |(_, b)| r > b) {
            best = Some((t, r));
            witness = Some(Witness { trial: t, seed: cfg.seed, generators: o.generators.clone(), rows: o.rows });
        }
        trials.push(TrialRecord { trial: t, generators: o.generators, lhs, rhs, ratio: r });
    }
    Ok(RatioReport {
        lemma: lemma.to_string(),
        j: model.j(),
        lambda: model.lambda().to_string(),
        params,
        config: *cfg,
        trials,
        skipped,
        max_ratio: best.map_or(0.0, |b| b.1),
        witness,
        inadmissible,
        max_binning_error: binning,
    })
}

fn rows_of(u: &SpaceTimeField<f64>) -> Vec<i64> {
    u.rows().keys().copied().collect()
}

/// Dyadic bilinear estimate with inputs in shells `l₁`, `l₂`.
pub fn lemma21_ratio(model: &DispersionModel, l1: u32, l2: u32, cfg: &RatioSearchConfig) -> Result<RatioReport> {
    let sampler = FieldSampler::new(model, cfg, 0.0)?;
    let top = sampler.max_shell();
    if l1 > top || l2 > top {
        return invalid(format!("shells ({l1}, {l2}) exceed the largest representable shell {top}"));
    }
    let params = RatioParams { l1: Some(l1), l2: Some(l2), ..Default::default() };
    run_search("2.1", model, cfg, params, false, |_, rng| {
        let (g1, u1) = sampler.sample(rng, cfg.generator, Some(DyadicShell::new(l1)));
        let (g2, u2) = sampler.sample(rng, cfg.generator, Some(DyadicShell::new(l2)));
        let r = lemma21_pair(&u1, &u2, l1, l2)?;
        Ok(Outcome {
            generators: vec![g1, g2],
            rows: vec![rows_of(&u1), rows_of(&u2)],
            value: r.map(|(l, r, _)| (l, r)),
            binning: r.map_or(0.0, |x| x.2),
        })
    })
}

/// `L²` bilinear estimate; inadmissible `(a, b)` run but are flagged.
pub fn lemma22_ratio(model: &DispersionModel, a: f64, b: f64, cfg: &RatioSearchConfig) -> Result<RatioReport> {
    let sampler = FieldSampler::new(model, cfg, 0.0)?;
    let params = RatioParams { a: Some(a), b: Some(b), ..Default::default() };
    let bad = !lemma22_admissible(model.j(), a, b);
    if bad {
        log::warn!("(a, b) = ({a}, {b}) violates the hypotheses; exploratory run");
    }
    run_search("2.2", model, cfg, params, bad, |_, rng| {
        let (g1, u1) = sampler.sample(rng, cfg.generator, None);
        let (g2, u2) = sampler.sample(rng, cfg.generator, None);
        let (l, r, bin) = lemma22_pair(&u1, &u2, a, b)?;
        Ok(Outcome { generators: vec![g1, g2], rows: vec![rows_of(&u1), rows_of(&u2)], value: Some((l, r)), binning: bin })
    })
}

/// All three embedding directions over the same random fields.
pub fn lemma25_embedding_ratio(model: &DispersionModel, s: f64, cfg: &RatioSearchConfig) -> Result<Vec<RatioReport>> {
    let sampler = FieldSampler::new(model, cfg, s)?;
    let bad = !zs_admissible(model, s);
    Embedding::ALL
        .iter()
        .map(|&which| {
            let params = RatioParams { s: Some(s), ..Default::default() };
            run_search(which.name(), model, cfg, params, bad, |_, rng| {
                let (g, u) = sampler.sample(rng, cfg.generator, None);
                Ok(Outcome { generators: vec![g], rows: vec![rows_of(&u)], value: embedding_pair(&u, s, which), binning: 0.0 })
            })
        })
        .collect()
}

/// Bilinear `Z^s` estimate for `Λ^{-1}∂_x(u₁u₂)`.
pub fn lemma31_bilinear_ratio(model: &DispersionModel, s: f64, cfg: &RatioSearchConfig) -> Result<RatioReport> {
    let sampler = FieldSampler::new(model, cfg, s)?;
    let params = RatioParams { s: Some(s), ..Default::default() };
    let bad = !zs_admissible(model, s);
    run_search("3.1", model, cfg, params, bad, |_, rng| {
        let (g1, u1) = sampler.sample(rng, cfg.generator, None);
        let (g2, u2) = sampler.sample(rng, cfg.generator, None);
        let (l, r, bin) = lemma31_pair(&u1, &u2, s)?;
        Ok(Outcome { generators: vec![g1, g2], rows: vec![rows_of(&u1), rows_of(&u2)], value: Some((l, r)), binning: bin })
    })
}

/// Adversarial pair behind the third-iterate resonance: a free bump on row
/// `N` and a bump on row `2N` displaced to `σ = p(N)+p(N)-p(2N)` (where
/// `u₁²` puts it). Their product returns to row `N` exactly on `σ = 0`.
pub fn resonant_pair(model: &DispersionModel, n: i64) -> Result<(SpaceTimeField<f64>, SpaceTimeField<f64>)> {
    if n < 1 {
        return invalid("N must be positive");
    }
    if !model.lambda().is_integer() {
        return invalid("the resonant pair needs integer lambda (integral modulation shift)");
    }
    let grid = TorusGrid::new(model.lambda(), (8 * n as usize + 8).next_power_of_two())?;
    let dtau = 1.0 / model.lambda_power::<f64>();
    let shift = (model.lattice_power(n) * 2 - model.lattice_power(2 * n)) * model.sign();
    let shift = num_traits::ToPrimitive::to_i64(&shift).ok_or_else(|| crate::Error::InvalidInput("N too large".into()))?;
    let put = |m: i64, centre: i64| -> Result<SpaceTimeField<f64>> {
        let mut u = SpaceTimeField::new(*model, grid, dtau)?;
        let values: Vec<Complex64> = (-16..=16).map(|i: i64| Complex64::new((-(i as f64 / 3.0).powi(2)).exp(), 0.0)).collect();
        u.accumulate(m, centre - 16, &values)?;
        u.accumulate(-m, -centre - 16, &values)?;
        Ok(u)
    };
    Ok((put(n, 0)?, put(2 * n, shift)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantFamilyReport {
    pub j: u32,
    pub s: f64,
    pub n: Vec<i64>,
    pub ratios: Vec<f64>,
    /// Log-log slope of the ratios in `N`.
    pub exponent: f64,
    /// `-2(s + j - ½)`, the growth rate of the resonant interaction.
    pub predicted_exponent: f64,
}

/// Bilinear ratio on `resonant_pair(N)` across `N`.
pub fn lemma31_resonant_family(model: &DispersionModel, s: f64, ns: &[i64]) -> Result<ResonantFamilyReport> {
    if ns.len() < 2 {
        return invalid("need at least two values of N");
    }
    let ratios = ns
        .iter()
        .map(|&n| {
            let (u1, u2) = resonant_pair(model, n)?;
            let (l, r, _) = lemma31_pair(&u1, &u2, s)?;
            Ok(ratio(l, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    // the smallest N sits before the asymptotic regime for j ≥ 3
    let tail = if xs.len() > 3 { 1 } else { 0 };
    let fit = crate::fit::power_law_fit(&xs[tail..], &ratios[tail..])?;
    let j = model.j() as f64;
    Ok(ResonantFamilyReport {
        j: model.j(),
        s,
        n: ns.to_vec(),
        ratios,
        exponent: fit.slope,
        predicted_exponent: -2.0 * (s + j - 0.5),
    })
}

/// Rebuild the inputs of one trial (replay of a witness).
pub fn replay_inputs(
    model: &DispersionModel,
    cfg: &RatioSearchConfig,
    s: f64,
    trial: usize,
    inputs: usize,
    shells: Option<(u32, u32)>,
) -> Result<Vec<SpaceTimeField<f64>>> {
    let sampler = FieldSampler::new(model, cfg, s)?;
    let mut rng = cfg.trial_rng(trial);
    Ok((0..inputs)
        .map(|i| {
            let shell = shells.map(|(a, b)| DyadicShell::new(if i == 0 { a } else { b }));
            sampler.sample(&mut rng, cfg.generator, shell).1
        })
        .collect())
}

/// Maximum ratio per lattice size and the trend verdict
/// `max(K_last) ≤ factor · max(K_first)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeTrend {
    pub k_values: Vec<i64>,
    pub max_ratios: Vec<f64>,
    pub factor: f64,
    pub bounded: bool,
}

pub fn lattice_trend(
    k_values: &[i64],
    factor: f64,
    mut search: impl FnMut(i64) -> Result<f64>,
) -> Result<LatticeTrend> {
    if k_values.len() < 2 {
        return invalid("a lattice trend needs at least two sizes");
    }
    let max_ratios = k_values.iter().map(|&k| search(k)).collect::<Result<Vec<_>>>()?;
    let bounded = max_ratios.last().unwrap() <= &(factor * max_ratios[0]);
    Ok(LatticeTrend { k_values: k_values.to_vec(), max_ratios, factor, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_names_round_trip() {
        for g in [Generator::Mixed, Generator::GaussianRandom, Generator::PhiNFamily] {
            assert_eq!(Generator::parse(g.name()), Some(g));
        }
        assert_eq!(Generator::parse("nope"), None);
    }

    #[test]
    fn admissibility_of_22() {
        let j = 2;
        let a = 3.0 / 10.0;
        assert!(lemma22_admissible(j, a, a));
        assert!(!lemma22_admissible(j, 0.0, 0.0));
        assert!(!lemma22_admissible(j, 0.1, 0.9));
    }

    #[test]
    fn sampled_fields_are_real() {
        let model = DispersionModel::unit(2).unwrap();
        let cfg = RatioSearchConfig { k_max: 16, ..Default::default() };
        let s = FieldSampler::new(&model, &cfg, -1.5).unwrap();
        let mut rng = cfg.trial_rng(3);
        for _ in 0..20 {
            let (_, u) = s.sample(&mut rng, Generator::Mixed, None);
            for (m, n, v) in u.cells() {
                assert_eq!(u.get(-m, -n), v.conj());
            }
        }
    }
}
