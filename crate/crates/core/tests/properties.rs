use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qht_core::diagnostics::{hellinger_conditional, stft, stft_fn};
use qht_core::prior::{sample_block_simplex, weighted_l1, ferguson_klass_jumps};
use qht_core::simulate::seeded_rng;
use qht_core::states::{phase_aligned_distance, vacuum_window};
use qht_core::*;

fn gauss(t: f64) -> Complex64 {
    Complex64::new(vacuum_window(t), 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stft_is_shift_covariant(a in -1.0..1.0f64, b in -1.0..1.0f64, x in -1.5..1.5f64, w in -1.5..1.5f64) {
        let f = WaveFunction::Fock2;
        let moved = |t: f64| f.eval(t - a) * Complex64::from_polar(1.0, 2.0 * PI * b * (t - a));
        let lhs = stft_fn(moved, gauss, 8.0, x, w).norm();
        let rhs = stft_fn(|t| f.eval(t), gauss, 8.0, x - a, w - b).norm();
        prop_assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn gaussian_stft_closed_form(x in -2.0..2.0f64, w in -2.0..2.0f64) {
        let g = WaveFunction::Vacuum;
        let v = stft(&g, &g, x, w).norm();
        prop_assert!((v - (-PI * (x * x + w * w) / 2.0).exp()).abs() < 1e-6);
    }

    #[test]
    fn wilson_prior_lies_on_weighted_simplex(
        seed in any::<u64>(),
        a1 in 0.05..1.0f64,
        extra in 0.1..2.0f64,
        width in 1.0..2.0f64,
        r in 0.2..0.8f64,
        k_max in 1usize..5,
    ) {
        let cfg = WilsonPriorConfig { a1, b1: 2.0 + r + extra, shell_width: width, r, k_max, ..WilsonPriorConfig::default() };
        cfg.validate().unwrap();
        let c0 = cfg.c0();
        let mut rng = seeded_rng(seed);
        for _ in 0..20 {
            let d = sample_wilson_prior(&cfg, &mut rng);
            let s: f64 = d.p.iter().map(|p| p * p).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(d.p.iter().all(|p| *p >= 0.0));
            prop_assert!(d.indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(weighted_l1(&d, cfg.beta, cfg.r) <= c0 * d.z * d.z);
        }
    }

    #[test]
    fn block_simplex_covers_all_shells(seed in any::<u64>(), k in 1usize..5) {
        let cfg = WilsonPriorConfig::default();
        let mut rng = seeded_rng(seed);
        let (idx, p) = sample_block_simplex(&cfg, k, &mut rng);
        prop_assert_eq!(idx.len(), LambdaZ::new(cfg.radius(k)).len());
        prop_assert_eq!(idx.len(), p.len());
    }

    #[test]
    fn levy_jumps_decrease(seed in any::<u64>(), alpha0 in 0.2..5.0f64) {
        let mut rng = seeded_rng(seed);
        let j = ferguson_klass_jumps(alpha0, 30, &mut rng);
        prop_assert!(j.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(j.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn cat_marginal_is_a_density(x0 in 0.0..3.0f64, theta in 0.0..PI) {
        let state = WaveFunction::cat(x0);
        let grid = Grid1D::symmetric(x0 + 6.0, 4001).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|&x| quadrature_density(&state, x, theta)).collect();
        prop_assert!(v.iter().all(|p| *p >= 0.0));
        prop_assert!((grid.trapezoid(&v) - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn noisy_marginal_is_a_density(eta in 0.5..0.99f64, theta in 0.0..PI) {
        let nm = NoiseModel::new(eta).unwrap();
        let grid = Grid1D::symmetric(8.0, 3201).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|&y| noisy_density(&WaveFunction::Fock2, y, theta, &nm)).collect();
        prop_assert!((grid.trapezoid(&v) - 1.0 / PI).abs() < 1e-8);
    }

    #[test]
    fn distances_ignore_global_phase(phi in 0.0..(2.0 * PI), x0 in -1.0..1.0f64, w0 in -1.0..1.0f64) {
        let basis = std::sync::Arc::new(WilsonBasis::standard().unwrap());
        let idx = [WilsonIndex::new(0, 0), WilsonIndex::new(1, 1)];
        let a = synthesize(&basis, WilsonSeriesParams::new(1.5, idx.to_vec(), vec![0.6, 0.8], vec![0.0, 1.0]).unwrap());
        let b = synthesize(&basis, WilsonSeriesParams::new(1.5, idx.to_vec(), vec![0.6, 0.8], vec![phi, 1.0 + phi]).unwrap());
        prop_assert!(phase_aligned_distance(&a, &b) < 1e-6);
        let c = WaveFunction::coherent(x0, w0);
        let h = hellinger_conditional(&a, &c, 0.4, None);
        let hb = hellinger_conditional(&b, &c, 0.4, None);
        prop_assert!((h - hb).abs() < 1e-9);
        prop_assert!(h <= 1.0);
    }
}
