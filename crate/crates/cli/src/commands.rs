use crate::config::*;
use crate::error::{usage, CliError};
use crate::run::{columns, f, Run, Status, Verdict};
use hokdv_core::dispersion::lemma27_audit;
use hokdv_core::io::encode_frames;
use hokdv_core::norms::{sobolev_norm, zs_admissible};
use hokdv_core::picard::{growth_sweep, iterate_grid, phi_n_data, second_iterate_closed, second_iterate_quadrature, GrowthReport};
use hokdv_core::solver::{conserved_quantities, contraction_experiment, integrate, ContractionConfig};
use hokdv_core::torus::TorusGrid;
use hokdv_core::verify::*;
use hokdv_core::{DispersionModel, Error, NormSpec, SolverConfig, SpectralField64};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

fn start(root: &Path, command: &'static str, cfg: &impl Serialize, seed: u64) -> Result<Run, CliError> {
    let table = toml::Table::try_from(cfg).map_err(|e| CliError::Failure(e.into()))?;
    Run::create(root, command, table, seed)
}

fn model(j: u32, lambda: LambdaValue) -> Result<DispersionModel, CliError> {
    Ok(DispersionModel::new(j, lambda.0)?)
}

fn smooth(grid: TorusGrid, amp: f64, radius: i64) -> SpectralField64 {
    SpectralField64::from_fn(grid, |m| {
        if m == 0 || m.abs() > radius {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(amp * (-(m.abs() as f64)).exp(), 0.7 * m as f64)
    })
}

fn initial_data(cfg: &SimulateConfig, grid: TorusGrid) -> Result<SpectralField64, CliError> {
    if cfg.radius < 1 || cfg.radius >= grid.cutoff() {
        return usage(format!("radius must lie in [1, {}) for modes = {}", grid.cutoff(), grid.modes()));
    }
    Ok(match cfg.family {
        Family::Smooth => smooth(grid, cfg.amplitude, cfg.radius),
        Family::PhiN => phi_n_data::<f64>(cfg.n, cfg.s, grid)?.scale(Complex64::new(cfg.amplitude, 0.0)),
        Family::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut u = SpectralField64::zeros(grid);
            for m in 1..=cfg.radius {
                let a = cfg.amplitude * (-(m as f64) / 4.0).exp();
                let c = Complex64::new(rng.random_range(-a..a), rng.random_range(-a..a));
                u.set(m, c)?;
                u.set(-m, c.conj())?;
            }
            u
        }
        Family::Coefficients => {
            let path = cfg
                .coefficients_file
                .as_ref()
                .ok_or_else(|| CliError::Usage("family = \"coefficients\" needs key `coefficients_file`".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let mut modes = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('m') {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                let parsed = (cols.len() == 3)
                    .then(|| Some((cols[0].parse::<i64>().ok()?, cols[1].parse::<f64>().ok()?, cols[2].parse::<f64>().ok()?)))
                    .flatten();
                let (m, re, im) = parsed
                    .ok_or_else(|| CliError::Usage(format!("{}:{}: expected `m,re,im`", path.display(), i + 1)))?;
                modes.push((m, Complex64::new(re, im)));
            }
            SpectralField64::from_modes(grid, modes)?
        }
    })
}

pub fn simulate(root: &Path, cfg: SimulateConfig) -> Result<i32, CliError> {
    let model = model(cfg.j, cfg.lambda)?;
    let grid = TorusGrid::new(cfg.lambda.0, cfg.modes)?;
    let u0 = initial_data(&cfg, grid)?;
    let solver = SolverConfig {
        dt: cfg.dt,
        final_time: cfg.final_time,
        dealias: cfg.dealias,
        scheme: cfg.scheme,
        nonlinear: cfg.nonlinear,
        frame_every: cfg.frame_every.max(1),
        blowup_factor: cfg.blowup_factor,
    };
    solver.steps()?;
    let mut run = start(root, "simulate", &cfg, cfg.seed)?;
    let series = match integrate(&model, &u0, &solver) {
        Ok(s) => s,
        Err(Error::BlowUp { time, ratio }) => {
            run.verdict(Verdict::judged("blow-up", false, format!("L2 grew by {ratio:e} at t = {time}")));
            return run.finish();
        }
        Err(e) => return Err(e.into()),
    };
    run.write("frames.bin", &encode_frames(&model, &series)?)?;
    let c0 = conserved_quantities(&u0);
    let mut drift = String::from("t,mean,l2,mean_drift,l2_drift\n");
    let (mut worst_mean, mut worst_l2) = (0.0f64, 0.0f64);
    let mut l2_rows = Vec::new();
    for (n, frame) in series.frames.iter().enumerate() {
        let c = conserved_quantities(frame);
        let t = series.time(n);
        let (dm, dl) = ((c.mean - c0.mean).abs(), (c.l2 - c0.l2).abs());
        worst_mean = worst_mean.max(dm);
        worst_l2 = worst_l2.max(dl);
        drift.push_str(&format!("{},{},{},{},{}\n", f(t), f(c.mean), f(c.l2), f(dm), f(dl)));
        l2_rows.push((t, c.l2));
    }
    run.write("drift.csv", drift.as_bytes())?;
    run.write("l2.dat", columns(l2_rows).as_bytes())?;
    let last = series.last().expect("integrate keeps the initial frame");
    let mut coeffs = String::from("m,re,im\n");
    for (m, c) in last.iter_modes().filter(|(_, c)| c.norm() > 0.0) {
        coeffs.push_str(&format!("{m},{},{}\n", f(c.re), f(c.im)));
    }
    run.write("final_coefficients.csv", coeffs.as_bytes())?;
    run.verdict(Verdict::judged(
        "conservation",
        worst_mean <= 1e-12 && worst_l2 <= cfg.drift_tol,
        format!("mean drift {worst_mean:.3e}, L2 drift {worst_l2:.3e} (tol {:e})", cfg.drift_tol),
    ));
    run.finish()
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    j: u32,
    threshold_s: f64,
    sweeps: Vec<SweepEntry<'a>>,
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    s: f64,
    exponent: f64,
    stderr: f64,
    predicted_exponent: f64,
    predicts_growth: bool,
    report: &'a GrowthReport,
}

pub fn illposed_sweep(root: &Path, cfg: SweepConfig) -> Result<i32, CliError> {
    if cfg.n.is_empty() {
        return usage("key `n` must list at least three N values");
    }
    if cfg.s.is_empty() {
        return usage("key `s` must list at least one regularity");
    }
    let model = model(cfg.j, cfg.lambda)?;
    let reports = cfg.s.iter().map(|&s| growth_sweep(&model, s, &cfg.n, cfg.t)).collect::<Result<Vec<_>, _>>()?;
    let mut run = start(root, "illposed-sweep", &cfg, cfg.seed)?;
    let thr = -(cfg.j as f64) + 0.5;
    let mut table = String::from("s,exponent,stderr,predicted_exponent,predicts_growth\n");
    for (i, r) in reports.iter().enumerate() {
        run.write(&format!("growth_{i}.csv"), r.csv().as_bytes())?;
        let pts = r.rows.iter().map(|row| (row.n as f64, row.h_s_norm));
        run.write(&format!("growth_{i}.dat"), columns(pts).as_bytes())?;
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            f(r.s),
            f(r.exponent()),
            f(r.fit.slope_stderr),
            f(r.predicted_exponent),
            r.predicts_growth()
        ));
        let name = format!("s={}", r.s);
        let detail = format!("exponent {:.4} vs {:.4}", r.exponent(), r.predicted_exponent.max(0.0));
        if r.s < thr {
            run.verdict(Verdict::judged(name, r.exponent_matches(cfg.tol), detail));
        } else if r.s == thr {
            run.verdict(Verdict::judged(name, r.exponent().abs() <= cfg.tol, detail));
        } else {
            // above the threshold the law is only a lower bound
            run.verdict(Verdict::new(name, Status::Informational, detail));
        }
    }
    run.write("exponents.csv", table.as_bytes())?;
    run.write("exponents.dat", columns(reports.iter().map(|r| (r.s, r.exponent()))).as_bytes())?;
    let summary = SweepSummary {
        j: cfg.j,
        threshold_s: thr,
        sweeps: reports
            .iter()
            .map(|r| SweepEntry {
                s: r.s,
                exponent: r.exponent(),
                stderr: r.fit.slope_stderr,
                predicted_exponent: r.predicted_exponent,
                predicts_growth: r.predicts_growth(),
                report: r,
            })
            .collect(),
    };
    run.write_json("summary.json", &summary)?;
    run.finish()
}

pub fn resonance_audit(root: &Path, cfg: AuditConfig) -> Result<i32, CliError> {
    if cfg.j.is_empty() {
        return usage("key `j` must list at least one value");
    }
    let reports = cfg
        .j
        .iter()
        .map(|&j| lemma27_audit(&model(j, LambdaValue::default())?, cfg.kmax).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let mut run = start(root, "resonance-audit", &cfg, cfg.seed)?;
    let mut csv = format!("{}\n", hokdv_core::dispersion::Lemma27Report::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
        let detail = match r.first_violation {
            Some(w) => format!("{} violations, first at {w:?}", r.violations),
            None => format!("{} pairs, min ratio {:.6} at {:?}", r.pairs_checked, r.min_ratio, r.min_witness),
        };
        run.verdict(Verdict::judged(format!("j={}", r.j), r.passed(), detail));
    }
    run.write("audit.csv", csv.as_bytes())?;
    run.write_json("audit.json", &reports)?;
    run.finish()
}

fn search_config(cfg: &EstimateConfig, k_max: i64) -> Result<RatioSearchConfig, CliError> {
    let generator = Generator::parse(&cfg.generator)
        .ok_or_else(|| CliError::Usage(format!("unknown generator `{}`", cfg.generator)))?;
    Ok(RatioSearchConfig {
        trials: cfg.trials,
        k_max,
        t_modes: cfg.t_modes,
        dtau: cfg.dtau,
        max_rows: cfg.max_rows,
        generator,
        seed: cfg.seed,
    })
}

pub fn estimate_search(root: &Path, cfg: EstimateConfig) -> Result<i32, CliError> {
    let model = model(cfg.j, cfg.lambda)?;
    let s = cfg.s.unwrap_or(-(cfg.j as f64) + 0.5);
    let lemma = cfg.lemma.0.clone();
    if !["2.1", "2.2", "2.5", "3.1"].contains(&lemma.as_str()) {
        return usage(format!("unknown lemma `{lemma}` (expected 2.1, 2.2, 2.5 or 3.1)"));
    }
    let ks: Vec<i64> = if cfg.k_trend.is_empty() { vec![64] } else { cfg.k_trend.clone() };
    let (a, b) = {
        let d = (cfg.j as f64 + 1.0) / (2.0 * (2 * cfg.j + 1) as f64);
        (cfg.a.unwrap_or(d), cfg.b.unwrap_or(d))
    };
    // one report list per lattice size
    let mut per_k: Vec<Vec<RatioReport>> = Vec::new();
    for &k in &ks {
        let sc = search_config(&cfg, k)?;
        per_k.push(match lemma.as_str() {
            "2.1" => vec![lemma21_ratio(&model, cfg.l1, cfg.l2, &sc)?],
            "2.2" => vec![lemma22_ratio(&model, a, b, &sc)?],
            "2.5" => lemma25_embedding_ratio(&model, s, &sc)?,
            _ => vec![lemma31_bilinear_ratio(&model, s, &sc)?],
        });
    }
    let mut run = start(root, "estimate-search", &cfg, cfg.seed)?;
    let exploratory = per_k[0].iter().any(|r| r.inadmissible) || (lemma != "2.2" && lemma != "2.1" && !zs_admissible(&model, s));
    for (k, reports) in ks.iter().zip(&per_k) {
        for r in reports {
            let tag = r.lemma.replace(' ', "_");
            run.write(&format!("{tag}_K{k}.json"), &(serde_json::to_string_pretty(r)? + "\n").into_bytes())?;
            run.write(&format!("{tag}_K{k}.csv"), r.csv().as_bytes())?;
        }
    }
    for i in 0..per_k[0].len() {
        let name = per_k[0][i].lemma.clone();
        let maxes: Vec<f64> = per_k.iter().map(|rs| rs[i].max_ratio).collect();
        let shown = maxes.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join("/");
        if exploratory {
            run.verdict(Verdict::new(name, Status::Informational, format!("exploratory (outside the admissible range); max ratios {shown}")));
        } else if ks.len() < 2 {
            run.verdict(Verdict::new(name, Status::Informational, format!("max ratio {shown} at K={}", ks[0])));
        } else {
            let mut it = maxes.iter().copied();
            let tr = lattice_trend(&ks, cfg.trend_factor, |_| Ok(it.next().unwrap()))?;
            let detail = format!("max ratios {shown} over K={ks:?}, bound x{}", cfg.trend_factor);
            run.verdict(Verdict::judged(name, tr.bounded && maxes.iter().all(|m| m.is_finite()), detail));
        }
    }
    let trend = ks.iter().zip(per_k.iter()).map(|(&k, rs)| (k as f64, rs[0].max_ratio));
    run.write("trend.dat", columns(trend).as_bytes())?;
    run.finish()
}

pub fn contraction(root: &Path, cfg: ContractionCmdConfig) -> Result<i32, CliError> {
    if !(cfg.amplitude > 0.0) {
        return usage("key `amplitude` must be positive");
    }
    let model = model(cfg.j, cfg.lambda)?;
    let s = cfg.s.unwrap_or(-(cfg.j as f64) + 0.5);
    let grid = TorusGrid::new(cfg.lambda.0, cfg.modes)?;
    let base = smooth(grid, 1.0, 3);
    let norm = sobolev_norm(&base, &NormSpec::sobolev(s)).value;
    let phi = base.scale(Complex64::new(cfg.amplitude / norm, 0.0));
    let cc = ContractionConfig { max_iter: cfg.max_iter, dt: cfg.dt, tol: cfg.tol, ..Default::default() };
    let trace = contraction_experiment(&model, &phi, s, &cc)?;
    let mut run = start(root, "contraction", &cfg, cfg.seed)?;
    run.write("trace.csv", trace.csv().as_bytes())?;
    run.write_json("trace.json", &trace)?;
    let diffs = trace.differences.iter().enumerate().map(|(i, d)| (i as f64, *d));
    run.write("differences.dat", columns(diffs).as_bytes())?;
    let factor = trace.factor.map_or("n/a".to_string(), |x| format!("{x:.4e}"));
    if trace.diverged {
        run.verdict(Verdict::judged("contraction", false, format!("iteration diverged (factor {factor})")));
    } else if cfg.max_iter == 1 {
        run.verdict(Verdict::new("contraction", Status::Informational, "single step, no factor"));
    } else {
        let pass = trace.converged && trace.factor.is_some_and(|x| x < 0.5);
        run.verdict(Verdict::judged("contraction", pass, format!("factor {factor}, converged {}", trace.converged)));
    }
    if trace.above_smallness {
        run.verdict(Verdict::new("smallness", Status::Informational, format!("||phi||_H^s = {:e} above the small-data parameter", trace.phi_hs_norm)));
    }
    run.finish()
}

pub fn picard_check(root: &Path, cfg: PicardConfig) -> Result<i32, CliError> {
    if cfg.j.is_empty() || cfg.n.is_empty() || cfg.t.is_empty() {
        return usage("keys `j`, `n` and `t` must be non-empty lists");
    }
    let mut rows = Vec::new();
    for &j in &cfg.j {
        let model = model(j, LambdaValue::default())?;
        let s = cfg.s.unwrap_or(-(j as f64) + 0.5);
        for &n in &cfg.n {
            let u0 = phi_n_data::<f64>(n, s, iterate_grid(model.lambda(), n)?)?;
            for &t in &cfg.t {
                let closed = second_iterate_closed(&model, &u0, t)?.field;
                let quad = second_iterate_quadrature(&model, &u0, t, cfg.steps)?;
                rows.push((j, n, t, quad.max_abs_diff(&closed), closed.max_abs()));
            }
        }
    }
    let mut run = start(root, "picard-check", &cfg, cfg.seed)?;
    let mut csv = String::from("j,N,t,abs_error,closed_max_abs\n");
    for &(j, n, t, e, m) in &rows {
        csv.push_str(&format!("{j},{n},{},{},{}\n", f(t), f(e), f(m)));
    }
    run.write("picard.csv", csv.as_bytes())?;
    let worst = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    run.verdict(Verdict::judged(
        "closed-vs-quadrature",
        worst <= cfg.tol,
        format!("max |A2 closed - quadrature| = {worst:.3e} over {} cases (tol {:e})", rows.len(), cfg.tol),
    ));
    run.finish()
}
