use hokdv_core::dispersion::free_evolve;
use hokdv_core::io::*;
use hokdv_core::norms::*;
use hokdv_core::picard::phi_n_data;
use hokdv_core::spacetime::{spacetime_from_timeseries, spacetime_product};
use hokdv_core::torus::TorusGrid;
use hokdv_core::{
    DispersionModel, FrameSeries64, Lambda, RegionLabel, SmoothBump, SpaceTimeField64,
    SpectralField64, UnitWindow,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Rows `m ∈ [-r, r]`, each a run of cells starting at a pseudo-random offset.
fn random_field(model: DispersionModel, dtau: f64, r: i64, seed: &[f64]) -> SpaceTimeField64 {
    let grid = TorusGrid::new(model.lambda(), 64).unwrap();
    let mut u = SpaceTimeField64::new(model, grid, dtau).unwrap();
    let mut i = 0usize;
    let mut next = || {
        i += 1;
        seed[i % seed.len()]
    };
    for m in -r..=r {
        let start = (next() * 400.0) as i64;
        let len = 1 + (next().abs() * 12.0) as usize;
        let vals: Vec<Complex64> = (0..len).map(|_| c(next(), next())).collect();
        u.accumulate(m, start, &vals).unwrap();
    }
    u
}

fn models() -> impl Strategy<Value = DispersionModel> {
    prop_oneof![
        Just(DispersionModel::unit(2).unwrap()),
        Just(DispersionModel::unit(3).unwrap()),
        Just(DispersionModel::new(2, Lambda::integer(2).unwrap()).unwrap()),
    ]
}

fn seeds() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 16..64)
}

#[test]
fn phi_n_homogeneous_norm_is_root_two() {
    for n in [1u64, 4, 8, 16] {
        for s in [-2.0, -1.5, 0.0] {
            let u = phi_n_data::<f64>(n, s, TorusGrid::unit(128).unwrap()).unwrap();
            let v = sobolev_norm(&u, &NormSpec::homogeneous(s));
            assert!((v.value - 2f64.sqrt()).abs() < 1e-13, "N={n} s={s}");
            assert!(!v.mean_excluded);
        }
    }
    let u = phi_n_data::<f64>(8, -2.0, TorusGrid::unit(64).unwrap()).unwrap();
    assert_eq!(u.coeff(8), c(64.0, 0.0));
}

#[test]
fn single_mode_and_zero_norms() {
    let g = TorusGrid::unit(16).unwrap();
    let a = c(0.6, -0.8);
    let u = SpectralField64::from_modes(g, [(2, a)]).unwrap();
    assert!((sobolev_norm(&u, &NormSpec::sobolev(1.0)).value - 5f64.sqrt()).abs() < 1e-14);
    assert_eq!(sobolev_norm(&SpectralField64::zeros(g), &NormSpec::sobolev(-3.0)).value, 0.0);
    let with_mean = SpectralField64::from_modes(g, [(0, a)]).unwrap();
    assert!(sobolev_norm(&with_mean, &NormSpec::homogeneous(1.0)).mean_excluded);
}

#[test]
fn single_cell_formulas() {
    let lam = Lambda::integer(2).unwrap();
    let model = DispersionModel::new(3, lam).unwrap();
    let grid = TorusGrid::new(lam, 32).unwrap();
    let dtau = 0.5;
    let mut u = SpaceTimeField64::new(model, grid, dtau).unwrap();
    let v = c(1.5, 2.0);
    u.accumulate(5, -9, &[v]).unwrap();
    let (k, sigma) = (2.5, -4.5);
    let (s, b) = (-1.25, 0.7);
    let want = bracket(k).powf(s) * bracket(sigma).powf(b) * v.norm() * (dtau / 2.0).sqrt();
    assert!((xsb_norm(&u, &NormSpec::new(s, b)) / want - 1.0).abs() < 1e-14);
    let want = bracket(k).powf(s) * v.norm() * dtau / 2f64.sqrt();
    assert!((ys_norm(&u, s) / want - 1.0).abs() < 1e-14);
    // L¹ in τ: W equal cells scale the norm by W
    let mut w = SpaceTimeField64::new(model, grid, dtau).unwrap();
    w.accumulate(5, -9, &[v; 7]).unwrap();
    assert!((ys_norm(&w, s) / ys_norm(&u, s) - 7.0).abs() < 1e-13);
    assert!((xsb_norm(&w, &NormSpec::new(s, 0.0)) / xsb_norm(&u, &NormSpec::new(s, 0.0)) - 7f64.sqrt()).abs() < 1e-13);
}

#[test]
fn zero_field_norms_vanish() {
    let model = DispersionModel::unit(2).unwrap();
    let u = SpaceTimeField64::new(model, TorusGrid::unit(16).unwrap(), 1.0).unwrap();
    assert_eq!(zs_norm(&u, -1.5).total, 0.0);
    assert_eq!(xsb_norm(&u, &NormSpec::new(1.0, 1.0)), 0.0);
    assert_eq!(ys_norm(&u, 1.0), 0.0);
}

#[test]
fn d1_only_field_uses_the_low_term() {
    let model = DispersionModel::unit(2).unwrap();
    let mut u = SpaceTimeField64::new(model, TorusGrid::unit(32).unwrap(), 1.0).unwrap();
    // |σ| ≤ (10/3)k⁴ at k = 3 is |σ| ≤ 270
    u.accumulate(3, -200, &vec![c(0.1, 0.2); 400]).unwrap();
    u.accumulate(-3, -5, &[c(1.0, 0.0); 9]).unwrap();
    for (m, n, _) in u.cells() {
        assert_eq!(model.classify_modulation(u.frequency(m), u.sigma(n)), RegionLabel::D1);
    }
    let s = -1.5;
    let z = zs_norm(&u, s);
    assert_eq!((z.mid, z.high), (0.0, 0.0));
    let want = xsb_norm(&u, &NormSpec::new(s, 0.75)) + ys_norm(&u, s);
    assert!((z.total - want).abs() < 1e-14 * want);
}

fn series_of(model: &DispersionModel, u0: &SpectralField64, len: usize, static_frames: bool) -> FrameSeries64 {
    let dt = 4.0 / len as f64;
    let frames = (0..len)
        .map(|n| {
            let t = -2.0 + n as f64 * dt;
            if static_frames {
                u0.clone()
            } else {
                free_evolve(model, u0, t).unwrap()
            }
        })
        .collect();
    FrameSeries64::new(-2.0, dt, frames).unwrap()
}

#[test]
fn windowed_free_solution_sits_on_the_curve() {
    let model = DispersionModel::unit(2).unwrap();
    let grid = TorusGrid::unit(32).unwrap();
    let u0 = SpectralField64::from_modes(grid, [(1, c(1.0, 0.0)), (-1, c(1.0, 0.0)), (5, c(0.3, 0.4)), (-5, c(0.3, -0.4))]).unwrap();
    let st = spacetime_from_timeseries(&model, &series_of(&model, &u0, 256, false), &SmoothBump).unwrap();
    let shells = shell_masses(&st);
    let low: f64 = shells.range(..=3).map(|(_, v)| v).sum();
    let total: f64 = shells.values().sum();
    assert!(low / total > 0.99, "{low} / {total}");
}

#[test]
fn static_frames_sit_at_zero_frequency() {
    // u(x) constant in time: ℱu(k,·) is the window profile at τ = 0
    let model = DispersionModel::unit(2).unwrap();
    let grid = TorusGrid::unit(16).unwrap();
    let u0 = SpectralField64::from_modes(grid, [(2, c(1.0, 0.0)), (-2, c(1.0, 0.0))]).unwrap();
    let st = spacetime_from_timeseries(&model, &series_of(&model, &u0, 256, true), &SmoothBump).unwrap();
    let mut near = 0.0;
    let mut total = 0.0;
    for (m, n, v) in st.cells() {
        total += v.norm_sqr();
        if st.tau(m, n).abs() < 8.0 {
            near += v.norm_sqr();
        }
    }
    assert!(near / total > 0.999, "{near} / {total}");
}

#[test]
fn timeseries_edge_cases() {
    let model = DispersionModel::unit(2).unwrap();
    let grid = TorusGrid::unit(16).unwrap();
    let zero = SpectralField64::zeros(grid);
    let st = spacetime_from_timeseries(&model, &series_of(&model, &zero, 16, true), &UnitWindow).unwrap();
    assert!(st.is_empty() || st.max_abs() == 0.0);
    assert!(spacetime_from_timeseries(&model, &series_of(&model, &zero, 7, true), &UnitWindow).is_err());
}

#[test]
fn io_round_trips() {
    let model = DispersionModel::new(3, Lambda::rational(5, 2).unwrap()).unwrap();
    let u = random_field(model, 0.75, 6, &[0.3, -0.9, 0.2, 0.55, -0.1, 0.8, 0.05]);
    for layout in [Layout::Dense, Layout::Sparse] {
        let bytes = encode_spacetime(&u, layout).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let back: SpaceTimeField64 = decode_spacetime(&mut bytes.as_slice()).unwrap();
        let a: Vec<_> = u.cells().filter(|x| x.2.norm() > 0.0).collect();
        let b: Vec<_> = back.cells().filter(|x| x.2.norm() > 0.0).collect();
        assert_eq!(a, b, "{layout:?}");
        assert_eq!(back.model(), u.model());
        assert_eq!(back.dtau(), u.dtau());
    }
    let grid = TorusGrid::new(model.lambda(), 16).unwrap();
    let u0 = SpectralField64::from_modes(grid, [(1, c(0.5, 0.25)), (-1, c(0.5, -0.25))]).unwrap();
    let series = series_of(&model, &u0, 10, false);
    let bytes = encode_frames(&model, &series).unwrap();
    let (m2, s2) = decode_frames::<f64>(&mut bytes.as_slice()).unwrap();
    assert_eq!(m2, model);
    assert_eq!(s2, series);
    assert!(decode_spacetime::<f64>(&mut bytes.as_slice()).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.bin");
    write_atomic(&path, &bytes).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

/// Direct evaluation of `(1/λ) Δτ Σ u(k₁,τ₁) v(k₂,τ₂)` on the cell lattice.
fn product_oracle(u: &SpaceTimeField64, v: &SpaceTimeField64) -> Vec<(i64, i64, Complex64)> {
    let model = u.model();
    let lam = model.lambda().value::<f64>();
    let mut acc = std::collections::BTreeMap::new();
    for (m1, n1, a) in u.cells() {
        for (m2, n2, b) in v.cells() {
            let m = m1 + m2;
            if u.grid().slot(m).is_none() {
                continue;
            }
            let delta = model.phase_of_mode::<f64>(m1) + model.phase_of_mode::<f64>(m2) - model.phase_of_mode::<f64>(m);
            let n = n1 + n2 + (delta / u.dtau()).round() as i64;
            *acc.entry((m, n)).or_insert(c(0.0, 0.0)) += a * b * u.dtau() / lam;
        }
    }
    acc.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((m, n), v)| (m, n, v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_axioms(model in models(), a in seeds(), b in seeds(), s in -3.0f64..0.0, bb in -1.0f64..1.0,
                   k in -3.0f64..3.0) {
        let u = random_field(model, 1.0, 5, &a);
        let v = random_field(model, 1.0, 4, &b);
        let w = u.add(&v).unwrap();
        let us = u.scale(c(k, 0.5 * k));
        let scale = Complex64::new(k, 0.5 * k).norm();
        let norms: [&dyn Fn(&SpaceTimeField64) -> f64; 3] = [
            &|f| xsb_norm(f, &NormSpec::new(s, bb)),
            &|f| ys_norm(f, s),
            &|f| zs_norm(f, -(model.j() as f64) + 0.5).total,
        ];
        for n in norms {
            let (nu, nv, nw) = (n(&u), n(&v), n(&w));
            prop_assert!(nw <= (nu + nv) * (1.0 + 1e-12));
            prop_assert!((n(&us) - scale * nu).abs() <= 1e-12 * (scale * nu).max(1e-300));
        }
    }

    #[test]
    fn xsb_is_monotone_in_b(model in models(), a in seeds(), s in -3.0f64..1.0, b in -1.0f64..1.0, db in 0.0f64..1.0) {
        let u = random_field(model, 1.0, 5, &a);
        prop_assert!(xsb_norm(&u, &NormSpec::new(s, b)) <= xsb_norm(&u, &NormSpec::new(s, b + db)) * (1.0 + 1e-14));
        prop_assert!((xsb_norm(&u, &NormSpec::new(0.0, 0.0)).powi(2) - u.mass()).abs() < 1e-12 * u.mass());
    }

    #[test]
    fn ys_cauchy_schwarz(model in models(), a in seeds(), s in -3.0f64..1.0) {
        let u = random_field(model, 0.5, 5, &a);
        let (lo, hi) = u.sigma_extent().unwrap();
        let width = (hi - lo + 1) as f64 * u.dtau();
        prop_assert!(ys_norm(&u, s) <= width.sqrt() * xsb_norm(&u, &NormSpec::new(s, 0.0)) * (1.0 + 1e-12));
    }

    #[test]
    fn dyadic_shells_partition(model in models(), a in seeds(), dtau in 0.1f64..20.0) {
        let u = random_field(model, dtau, 5, &a);
        let masses = shell_masses(&u);
        let mut sum = u.empty_like();
        for &l in masses.keys() {
            let piece = dyadic_localize(&u, DyadicShell::new(l));
            prop_assert!((piece.mass() - masses[&l]).abs() <= 1e-14 * u.mass());
            sum = sum.add(&piece).unwrap();
        }
        // disjoint masks: reassembly is bit-exact
        for (m, n, v) in u.cells() {
            prop_assert_eq!(sum.get(m, n), v);
        }
        let total: f64 = masses.values().sum();
        prop_assert!((total - u.mass()).abs() <= 1e-13 * u.mass());
    }

    #[test]
    fn region_masks_partition(model in models(), a in seeds(), dtau in 0.5f64..2000.0) {
        let u = random_field(model, dtau, 6, &a);
        let masses = region_masses(&u);
        let nonzero = u.mask(|k, _| k != 0.0).mass();
        let summed: f64 = masses.iter().filter(|(l, _)| **l != RegionLabel::ZeroMode).map(|(_, v)| v).sum();
        prop_assert!((summed - nonzero).abs() <= 1e-13 * nonzero);
        let labels = [RegionLabel::D1, RegionLabel::D2, RegionLabel::D3, RegionLabel::D4, RegionLabel::D5];
        let mut acc = 0.0;
        for l in labels {
            let part = restrict_to_regions(&u, &[l]).mass();
            prop_assert!((part - masses.get(&l).copied().unwrap_or(0.0)).abs() <= 1e-14 * u.mass());
            acc += part;
        }
        prop_assert!((acc - nonzero).abs() <= 1e-13 * nonzero);
        let z = zs_norm(&u, -(model.j() as f64) + 0.5);
        prop_assert!((z.zero_mode_mass - masses.get(&RegionLabel::ZeroMode).copied().unwrap_or(0.0)).abs() <= 1e-14 * u.mass());
    }

    #[test]
    fn product_matches_direct_sum(j in 2u32..4, a in seeds(), b in seeds()) {
        let model = DispersionModel::unit(j).unwrap();
        let u = random_field(model, 1.0, 3, &a);
        let v = random_field(model, 1.0, 3, &b);
        let prod = spacetime_product(&u, &v).unwrap();
        prop_assert_eq!(prod.binning_error, 0.0);
        let got: Vec<_> = prod.field.cells().filter(|x| x.2.norm() > 0.0).collect();
        let want = product_oracle(&u, &v);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!((g.0, g.1), (w.0, w.1));
            prop_assert!((g.2 - w.2).norm() <= 1e-13 * (1.0 + w.2.norm()));
        }
    }
}
