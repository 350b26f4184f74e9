use hokdv_core::picard::*;
use hokdv_core::torus::TorusGrid;
use hokdv_core::{DispersionModel, Lambda, SpectralField64};
use num_complex::Complex64;

fn sample(grid: TorusGrid) -> SpectralField64 {
    SpectralField64::from_modes(
        grid,
        [
            (1, Complex64::new(0.3, 0.1)),
            (-1, Complex64::new(0.3, -0.1)),
            (2, Complex64::new(-0.2, 0.25)),
            (-2, Complex64::new(-0.2, -0.25)),
            (3, Complex64::new(0.05, 0.0)),
            (-3, Complex64::new(0.05, 0.0)),
        ],
    )
    .unwrap()
}

/// Brute-force A₂ by trapezoid-free midpoint sums of the explicit mode
/// integrand `ik e^{i(t-s)p(k)} (1/λ) Σ c₁c₂ e^{is(p₁+p₂)}`.
fn a2_midpoint(model: &DispersionModel, u0: &SpectralField64, t: f64, steps: usize) -> SpectralField64 {
    let grid = *u0.grid();
    let lam = grid.lambda().value::<f64>();
    let modes: Vec<(i64, Complex64)> = u0.iter_modes().filter(|(_, c)| c.norm() > 0.0).collect();
    let h = t / steps as f64;
    let mut out = SpectralField64::zeros(grid);
    for &(m1, c1) in &modes {
        for &(m2, c2) in &modes {
            let m = m1 + m2;
            if grid.slot(m).is_none() || m.abs() > grid.cutoff() {
                continue;
            }
            let k = grid.frequency::<f64>(m);
            let (p, p1, p2) = (
                model.phase_of_mode::<f64>(m),
                model.phase_of_mode::<f64>(m1),
                model.phase_of_mode::<f64>(m2),
            );
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..steps {
                let s = (i as f64 + 0.5) * h;
                acc += Complex64::from_polar(1.0, (t - s) * p + s * (p1 + p2)) * h;
            }
            let v = out.coeff(m) + Complex64::new(0.0, k) * c1 * c2 * acc / lam;
            out.set(m, v).unwrap();
        }
    }
    out
}

#[test]
fn closed_second_iterate_matches_brute_force() {
    for j in [2u32, 3] {
        for lam in [Lambda::ONE, Lambda::integer(2).unwrap(), Lambda::rational(3, 2).unwrap()] {
            let model = DispersionModel::new(j, lam).unwrap();
            let grid = TorusGrid::new(lam, 32).unwrap();
            let u0 = sample(grid);
            let closed = second_iterate_closed(&model, &u0, 0.05).unwrap();
            let brute = a2_midpoint(&model, &u0, 0.05, 40_000);
            let err = closed.field.max_abs_diff(&brute);
            assert!(err < 1e-7 * closed.field.max_abs().max(1.0), "j={j} λ={lam}: {err}");
        }
    }
}

#[test]
fn closed_second_iterate_matches_quadrature() {
    let model = DispersionModel::unit(2).unwrap();
    let grid = TorusGrid::unit(32).unwrap();
    let u0 = sample(grid);
    for t in [0.1, 0.3] {
        let closed = second_iterate_closed(&model, &u0, t).unwrap().field;
        let quad = second_iterate_quadrature(&model, &u0, t, 64).unwrap();
        assert!(closed.max_abs_diff(&quad) < 1e-11, "t={t}");
    }
}

#[test]
fn sparse_and_dense_quadrature_paths_agree() {
    let model = DispersionModel::unit(2).unwrap();
    let grid = TorusGrid::unit(32).unwrap();
    let sparse = sample(grid);
    // more than 64 support modes force the dense path
    let big = TorusGrid::unit(256).unwrap();
    let dense = SpectralField64::from_fn(big, |m| {
        if m == 0 || m.abs() > 40 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / (1 + m * m) as f64, 0.0)
        }
    });
    let rule = QuadratureRule::fixed(64, 8);
    let a = second_iterate_quadrature_with(&model, &sparse, 0.01, &rule).unwrap();
    let b = second_iterate_closed(&model, &sparse, 0.01).unwrap();
    assert!(a.field.max_abs_diff(&b.field) < 1e-10);
    let t = 1e-5;
    let a = second_iterate_quadrature_with(&model, &dense, t, &QuadratureRule::resolved(16)).unwrap();
    let b = second_iterate_closed(&model, &dense, t).unwrap();
    let err = a.field.max_abs_diff(&b.field);
    assert!(err < 1e-9 * b.field.max_abs(), "{err}");
}

#[test]
fn third_iterate_closed_matches_quadrature() {
    for j in [2u32, 3] {
        let model = DispersionModel::unit(j).unwrap();
        let grid = TorusGrid::unit(32).unwrap();
        let u0 = SpectralField64::from_modes(
            grid,
            [
                (1, Complex64::new(0.4, 0.2)),
                (-1, Complex64::new(0.4, -0.2)),
                (2, Complex64::new(0.1, -0.3)),
                (-2, Complex64::new(0.1, 0.3)),
            ],
        )
        .unwrap();
        let t = if j == 2 { 0.05 } else { 0.01 };
        let closed = third_iterate_closed(&model, &u0, t).unwrap();
        let quad = third_iterate_quadrature(&model, &u0, t, &QuadratureRule::resolved(32)).unwrap();
        let err = closed.field.max_abs_diff(&quad.field);
        assert!(err < 1e-8 * closed.field.max_abs(), "j={j}: {err} vs {}", closed.field.max_abs());
    }
}

#[test]
fn resonant_mode_grows_linearly() {
    for (j, s) in [(2u32, -1.75), (2, -1.5), (3, -2.5)] {
        let model = DispersionModel::unit(j).unwrap();
        let n = 4;
        let grid = iterate_grid(Lambda::ONE, n).unwrap();
        let u0 = phi_n_data::<f64>(n, s, grid).unwrap();
        let slope = resonant_slope(j, n, s);
        for t in [0.02, 0.05, 0.1] {
            let a3 = third_iterate_closed(&model, &u0, t).unwrap();
            let v = a3.field.coeff(n as i64).norm();
            assert!((v / t / slope - 1.0).abs() < 0.02, "j={j} s={s} t={t}: {} vs {slope}", v / t);
        }
    }
}

#[test]
fn growth_exponent_follows_law() {
    let model = DispersionModel::unit(2).unwrap();
    let ns = [8, 16, 32, 64, 128];
    for (s, want) in [(-1.5, 0.0), (-1.75, 0.5), (-2.0, 1.0)] {
        let r = growth_sweep(&model, s, &ns, 1.0).unwrap();
        assert!((r.exponent() - want).abs() < 0.1, "s={s}: {}", r.exponent());
        assert_eq!(r.predicts_growth(), s < -1.5);
    }
}

#[test]
fn resonant_denominators_are_exact() {
    let model = DispersionModel::unit(2).unwrap();
    let grid = iterate_grid(Lambda::ONE, 4).unwrap();
    let u0 = phi_n_data::<f64>(4, -1.5, grid).unwrap();
    let a2 = second_iterate_closed(&model, &u0, 1.0).unwrap();
    // (N, -N) and (-N, N) pairs hit q₀ = 0 at output 0, which the k factor kills
    assert!(a2.field.coeff(0).norm() == 0.0);
    let a3 = third_iterate_closed(&model, &u0, 1.0).unwrap();
    assert!(a3.resonant_terms > 0);
    assert!(a3.min_abs_q0.is_some());
}
