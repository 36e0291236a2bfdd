//! Acceptance criteria of the primary component. Each criterion prints one
//! `PASS`/`FAIL` line with the measured values and its runtime; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use qht_core::diagnostics::{run_checks, CheckOptions};
use qht_core::infer::{draw_errors, posterior_mean_state, ShellLayout};
use qht_core::numerics::GaussHermite;
use qht_core::prior::weighted_l1;
use qht_core::simulate::{add_noise, seeded_rng, simulate, QuadratureSample, StateSpec};
use qht_core::states::{phase_aligned_distance, vacuum_wigner};
use qht_core::*;

/// Regression threshold for the smoke study, set from the first build
/// (measured error 0.186).
const SMOKE_THRESHOLD: f64 = 0.20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{} {name}: {} [{:.1}s of {}s budget]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn closed_forms() -> Outcome {
    let grid = Grid2D::square(3.0, 64).unwrap();
    let w = wigner(&WaveFunction::Vacuum, &grid).unwrap();
    let xs = grid.x.points();
    let ws = grid.omega.points();
    let mut wig_err: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        for (j, om) in ws.iter().enumerate() {
            let want = 2.0 * (-2.0 * PI * (x * x + om * om)).exp();
            wig_err = wig_err.max((w.at(i, j) - want).abs());
        }
    }
    let mut dens_err: f64 = 0.0;
    for eta in [0.9, 0.95] {
        let nm = NoiseModel::new(eta).unwrap();
        let var = 1.0 / (4.0 * PI * eta);
        for k in 0..81 {
            let y = -2.0 + 0.05 * k as f64;
            for theta in [0.0, 0.9, 2.2] {
                let got = noisy_density(&WaveFunction::Vacuum, y, theta, &nm);
                let want = (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt() / PI;
                dens_err = dens_err.max((got - want).abs());
            }
        }
    }
    // Cross-check of the oracle itself.
    let oracle_gap = (vacuum_wigner(0.3, -0.2) - 2.0 * (-2.0 * PI * 0.13f64).exp()).abs();
    Outcome {
        pass: wig_err < 1e-6 && dens_err < 1e-6 && oracle_gap < 1e-15,
        detail: format!("vacuum Wigner max err {wig_err:.2e}, noisy vacuum density max err {dens_err:.2e} (tol 1e-6)"),
    }
}

fn radon_equivalence() -> Outcome {
    let grid = Grid2D::default();
    let mut worst = Vec::new();
    for state in [WaveFunction::cat(2.0), WaveFunction::Fock2] {
        let w = wigner(&state, &grid).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..20 {
            let x = -3.8 + 0.4 * i as f64;
            for k in 0..10 {
                let theta = PI * k as f64 / 10.0;
                let a = quadrature_density(&state, x, theta);
                let b = radon_of_wigner(&w, x, theta).unwrap();
                err = err.max((a - b).abs());
            }
        }
        worst.push((state.label(), err));
    }
    Outcome {
        pass: worst.iter().all(|w| w.1 < 1e-3),
        detail: worst
            .iter()
            .map(|(l, e)| format!("{l} max err {e:.2e}"))
            .collect::<Vec<_>>()
            .join(", ")
            + " (tol 1e-3)",
    }
}

fn wilson_basis(basis: &Arc<WilsonBasis>) -> Outcome {
    let gram = basis.gram_deviation(8.0);

    let mut rng = seeded_rng(3);
    let lz = LambdaZ::new(8.0);
    let raw: Vec<f64> = (0..lz.len()).map(|_| rng.random::<f64>()).collect();
    let s = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let zeta: Vec<f64> = (0..lz.len()).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
    let params = WilsonSeriesParams::over_lambda(8.0, p, zeta).unwrap();
    let want = params.coefficients();
    let psi = synthesize(basis, params);
    let got = analyze(basis, &psi, 8.0);
    let round_trip = got.iter().zip(&want).map(|(g, w)| (g.1 - w).norm()).fold(0.0, f64::max);

    // Truncation error against Z^r for a state in the class beta = 1, r = 0.5.
    let (beta, r) = (1.0, 0.5);
    let state = WaveFunction::cat(2.0);
    let zs = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    let errs: Vec<f64> = zs
        .iter()
        .map(|&z| phase_aligned_distance(&truncate_normalize(basis, &state, z).unwrap(), &state))
        .collect();
    let zr: Vec<f64> = zs.iter().map(|z: &f64| z.powf(r)).collect();
    let ln_errs: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    // Slope of log error against Z^r, a straight line fit.
    let slope = {
        let n = zr.len() as f64;
        let mx = zr.iter().sum::<f64>() / n;
        let my = ln_errs.iter().sum::<f64>() / n;
        let sxy: f64 = zr.iter().zip(&ln_errs).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = zr.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    };
    let bound = -beta / 2.0 * 0.8;
    Outcome {
        pass: gram < 1e-6 && round_trip < 1e-6 && slope <= bound,
        detail: format!(
            "Gram dev {gram:.2e}, round trip {round_trip:.2e} (tol 1e-6), truncation slope {slope:.2} <= {bound:.2} (errors {})",
            errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" ")
        ),
    }
}

fn prior_laws() -> Outcome {
    let cfg = WilsonPriorConfig::default();
    let c0 = cfg.c0();
    let mut rng = seeded_rng(17);
    let mut worst_norm: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let d = sample_wilson_prior(&cfg, &mut rng);
        let s: f64 = d.p.iter().map(|p| p * p).sum();
        worst_norm = worst_norm.max((s - 1.0).abs());
        let w = weighted_l1(&d, cfg.beta, cfg.r);
        worst_ratio = worst_ratio.max(w / (c0 * d.z * d.z));
    }
    let mix = GammaMixtureConfig::default();
    let mut total = 0.0;
    let draws = 10_000;
    for _ in 0..draws {
        let d = sample_gamma_mixture(&mix, &mut rng).unwrap();
        total += d.mixture.atoms().iter().map(|a| a.weight).sum::<f64>();
    }
    let mean = total / draws as f64;
    let rel = (mean - mix.alpha0).abs() / mix.alpha0;
    Outcome {
        pass: worst_norm <= 1e-12 && worst_ratio <= 1.0 && rel < 0.05,
        detail: format!(
            "max |sum p^2 - 1| {worst_norm:.1e}, max weighted-l1 / (c0 Z^2) {worst_ratio:.3}, Gamma mass mean {mean:.4} vs alpha0 {} ({:.1}%)",
            mix.alpha0,
            100.0 * rel
        ),
    }
}

fn inequality_suite() -> Outcome {
    let report = run_checks(&CheckOptions::default()).unwrap();
    let failed: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
    let slope = report.checks.iter().find(|c| c.id == "tail_mass_slope").map(|c| c.value).unwrap();
    Outcome {
        pass: failed.is_empty() && slope <= -1.8,
        detail: format!(
            "{} checks, failures {:?}, tail slope {slope:.1} (<= -1.8), window-swap C {:.4}",
            report.checks.len(),
            failed,
            report.window_swap_constant
        ),
    }
}

/// Two atoms in a single shell: the posterior lives on `u = p_a^2` and the
/// relative phase, with a uniform prior on both.
fn toy_posterior(basis: &Arc<WilsonBasis>) -> Outcome {
    let a = WilsonIndex::new(0, 0);
    let b = WilsonIndex::new(1, 0);
    let nm = NoiseModel::new(0.9).unwrap();
    let mut rng = seeded_rng(23);
    let clean: Vec<(f64, f64)> = (0..20)
        .map(|_| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (z / (4.0 * PI).sqrt(), PI * rng.random::<f64>())
        })
        .collect();
    let data: Vec<QuadratureSample> = add_noise(&clean, &nm, &mut rng);

    let prior = WilsonPriorConfig {
        k_max: 1,
        dirichlet_conc: 1.0,
        ..WilsonPriorConfig::default()
    };
    let layout = ShellLayout::custom(vec![vec![a, b]], vec![1.0]).unwrap();
    let cfg = McmcConfig {
        n_iter: 100_000,
        burn_in: 10_000,
        ..McmcConfig::default()
    };
    let chain = qht_core::infer::mcmc_wilson_with_layout(&data, &nm, basis, &prior, &layout, &cfg, 29).unwrap();

    const BINS: usize = 50;
    let mut hist_u = [0.0; BINS];
    let mut hist_d = [0.0; BINS];
    for d in chain.retained() {
        let Draw::Wilson { params } = d else { unreachable!() };
        let ia = params.indices.iter().position(|i| *i == a).unwrap();
        let ib = params.indices.iter().position(|i| *i == b).unwrap();
        let u = params.p[ia] * params.p[ia];
        let delta = (params.zeta[ib] - params.zeta[ia]).rem_euclid(2.0 * PI);
        hist_u[((u * BINS as f64) as usize).min(BINS - 1)] += 1.0;
        hist_d[((delta / (2.0 * PI) * BINS as f64) as usize).min(BINS - 1)] += 1.0;
    }
    let t = chain.retained().len() as f64;

    // Grid posterior from per-atom quadrature amplitudes by the sampled
    // fractional Fourier transform and a 64-node Gauss-Hermite noise rule.
    let gh = GaussHermite::new(64);
    let phi_a = synthesize(basis, WilsonSeriesParams::single(a, 0.0));
    let phi_b = synthesize(basis, WilsonSeriesParams::single(b, 0.0));
    let scale = std::f64::consts::SQRT_2 * nm.sd();
    let sums: Vec<(f64, f64, Complex64)> = data
        .iter()
        .map(|s| {
            let pa = QuadratureProfile::numeric(&phi_a, s.theta);
            let pb = QuadratureProfile::numeric(&phi_b, s.theta);
            let mut out = (0.0, 0.0, Complex64::new(0.0, 0.0));
            for (t, w) in gh.nodes.iter().zip(&gh.weights) {
                let x = s.y + scale * t;
                let (fa, fb) = (pa.amplitude(x), pb.amplitude(x));
                out.0 += w * fa.norm_sqr();
                out.1 += w * fb.norm_sqr();
                out.2 += w * fa * fb.conj();
            }
            out
        })
        .collect();
    const FINE: usize = 10;
    let n = BINS * FINE;
    let mut logpost = vec![0.0; n * n];
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let cross = 2.0 * (u * (1.0 - u)).sqrt();
        for j in 0..n {
            let delta = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            let rot = Complex64::from_polar(1.0, -delta);
            logpost[i * n + j] = sums
                .iter()
                .map(|(saa, sbb, sab)| (u * saa + (1.0 - u) * sbb + cross * (sab * rot).re).ln())
                .sum();
        }
    }
    let top = logpost.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let post: Vec<f64> = logpost.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = post.iter().sum();
    let mut grid_u = [0.0; BINS];
    let mut grid_d = [0.0; BINS];
    for i in 0..n {
        for j in 0..n {
            let v = post[i * n + j] / z;
            grid_u[i / FINE] += v;
            grid_d[j / FINE] += v;
        }
    }
    let tv = |h: &[f64; BINS], g: &[f64; BINS]| 0.5 * h.iter().zip(g).map(|(a, b)| (a / t - b).abs()).sum::<f64>();
    let (tv_u, tv_d) = (tv(&hist_u, &grid_u), tv(&hist_d, &grid_d));
    // Distance of the exact posterior from the uniform prior, to show the
    // data are informative at this sample size.
    let flat = [t / BINS as f64; BINS];
    let (prior_u, prior_d) = (tv(&flat, &grid_u), tv(&flat, &grid_d));
    Outcome {
        pass: tv_u < 0.05 && tv_d < 0.05,
        detail: format!(
            "TV(u) {tv_u:.4}, TV(relative phase) {tv_d:.4} (tol 0.05, {} retained draws); prior-to-posterior TV {prior_u:.3}, {prior_d:.3}",
            t as usize
        ),
    }
}

fn smoke_study(basis: &Arc<WilsonBasis>) -> Outcome {
    let nm = NoiseModel::new(0.95).unwrap();
    let data = simulate(&StateSpec::Fock2, 500, &nm, 7).unwrap();
    let prior = WilsonPriorConfig::default();
    let cfg = McmcConfig {
        n_iter: 300,
        burn_in: 100,
        ..McmcConfig::default()
    };
    let truth = WaveFunction::Fock2;
    let post = mcmc_wilson(&data.samples, &nm, basis, &prior, &cfg, 11).unwrap();
    let err = phase_aligned_distance(&posterior_mean_state(&post, basis).unwrap(), &truth);
    let base = mcmc_wilson(&[], &nm, basis, &prior, &cfg, 11).unwrap();
    let base_err = phase_aligned_distance(&posterior_mean_state(&base, basis).unwrap(), &truth);
    let mut draws = draw_errors(&post, basis, &truth).unwrap();
    draws.sort_by(f64::total_cmp);
    Outcome {
        pass: err < base_err && err < SMOKE_THRESHOLD,
        detail: format!(
            "posterior-mean L2 error {err:.4} vs prior baseline {base_err:.4}, threshold {SMOKE_THRESHOLD}; median draw error {:.4}",
            draws[draws.len() / 2]
        ),
    }
}

fn determinism(basis: &Arc<WilsonBasis>) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let nm = NoiseModel::new(0.95).unwrap();
    let cfg = McmcConfig {
        n_iter: 200,
        burn_in: 50,
        ..McmcConfig::default()
    };
    let mut same = true;
    let mut files = 0;
    for rep in 0..2 {
        let data = simulate(&StateSpec::Cat { x0: 2.0 }, 300, &nm, 5).unwrap();
        data.write(&dir.path().join(format!("data{rep}.csv"))).unwrap();
        let chain = mcmc_wilson(&data.samples, &nm, basis, &WilsonPriorConfig::default(), &cfg, 9).unwrap();
        chain.write_jsonl(&dir.path().join(format!("wilson{rep}.jsonl"))).unwrap();
        let chain = mcmc_mixture(&data.samples, &nm, &GammaMixtureConfig::default(), &cfg, 9).unwrap();
        chain.write_jsonl(&dir.path().join(format!("mixture{rep}.jsonl"))).unwrap();
    }
    for stem in ["data", "wilson", "mixture"] {
        let ext = if stem == "data" { "csv" } else { "jsonl" };
        let a = std::fs::read(dir.path().join(format!("{stem}0.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("{stem}1.{ext}"))).unwrap();
        same &= a == b && !a.is_empty();
        files += 1;
        if stem == "data" {
            let ma = std::fs::read(qht_core::simulate::meta_path(&dir.path().join("data0.csv"))).unwrap();
            let mb = std::fs::read(qht_core::simulate::meta_path(&dir.path().join("data1.csv"))).unwrap();
            same &= ma == mb;
            files += 1;
        }
    }
    Outcome {
        pass: same,
        detail: format!("{files} artifact pairs from repeated seeded runs byte-identical: {same}"),
    }
}

fn main() {
    let basis = Arc::new(WilsonBasis::standard().expect("standard basis"));
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        run("closed-form oracle suite", Duration::from_secs(10), closed_forms),
        run("quadrature density vs Radon of Wigner", min(2), radon_equivalence),
        run("Wilson basis", min(2), || wilson_basis(&basis)),
        run("prior laws", min(1), prior_laws),
        run("inequality suite", min(5), inequality_suite),
        run("two-atom toy posterior", min(10), || toy_posterior(&basis)),
        run("fock2 smoke study", min(10), || smoke_study(&basis)),
        run("determinism", min(5), || determinism(&basis)),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
