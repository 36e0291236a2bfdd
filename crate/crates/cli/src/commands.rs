use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use qht_core::diagnostics::{run_checks, CheckOptions, CheckReport};
use qht_core::infer::{credible_bands, draw_errors, posterior_mean_state, posterior_mean_wigner};
use qht_core::simulate::{fmt9, simulate, Dataset, StateSpec};
use qht_core::states::phase_aligned_distance;
use qht_core::{mcmc_mixture, mcmc_wilson, wigner, wigner_mixed, Chain, Grid1D, Grid2D, QuadratureProfile, WaveFunction, WilsonBasis, WignerGrid};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, PriorKind};
use crate::error::{CliError, Result};

pub const DATA_FILE: &str = "data.csv";
pub const CHAIN_FILE: &str = "chain.jsonl";
pub const WIGNER_MEAN_FILE: &str = "wigner_mean.csv";
pub const WIGNER_TRUTH_FILE: &str = "wigner_truth.csv";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const REPORT_FILE: &str = "report.json";
pub const CHECK_FILE: &str = "check_report.json";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt9))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let nm = cfg.noise()?;
    let data = simulate(&cfg.state, cfg.data.n, &nm, cfg.data.seed)?;
    ensure_dir(out)?;
    let path = out.join(DATA_FILE);
    data.write(&path)?;
    Ok(path)
}

fn write_wigner(path: &Path, w: &WignerGrid) -> Result<()> {
    let xs = w.grid.x.points();
    let ws = w.grid.omega.points();
    let n = ws.len();
    write_csv(
        path,
        &["x", "omega", "w"],
        w.values.iter().enumerate().map(|(k, v)| vec![xs[k / n], ws[k % n], *v]),
    )
}

/// Conditional density `|F_theta psi|^2` of the true state, when known.
fn truth_marginal(spec: &StateSpec, theta: f64, xs: &[f64]) -> Option<Vec<f64>> {
    let parts: Vec<(f64, WaveFunction)> = match spec {
        StateSpec::Mixed { .. } => {
            let m = spec.mixed_state().ok()?;
            m.weights().iter().copied().zip(m.components().iter().cloned()).collect()
        }
        _ => vec![(1.0, spec.wave_function()?)],
    };
    let profiles: Vec<(f64, QuadratureProfile)> =
        parts.iter().map(|(w, s)| (*w, QuadratureProfile::new(s, theta))).collect();
    Some(
        xs.iter()
            .map(|&x| profiles.iter().map(|(w, p)| w * p.conditional(x)).sum())
            .collect(),
    )
}

fn truth_wigner(spec: &StateSpec, grid: &Grid2D) -> Result<WignerGrid> {
    Ok(match spec {
        StateSpec::Mixed { .. } => wigner_mixed(&spec.mixed_state()?, grid)?,
        _ => wigner(&spec.wave_function().expect("pure state"), grid)?,
    })
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub state: String,
    pub prior: PriorKind,
    pub data: DataSummary,
    pub mcmc_seed: u64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub retained: usize,
    /// Acceptance rates after burn-in, per move type.
    pub acceptance: std::collections::BTreeMap<String, f64>,
    pub steps: std::collections::BTreeMap<String, f64>,
    pub max_log_posterior: f64,
    pub mean_log_likelihood: f64,
    pub wigner_integral: f64,
    /// Phase-aligned L2 distance from the posterior mean to the true state.
    pub l2_error: Option<f64>,
    pub median_draw_error: Option<f64>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub path: String,
    pub n: usize,
    pub eta: f64,
    pub seed: u64,
}

pub fn cmd_fit(cfg: &ExperimentConfig, data_path: &Path, out: &Path) -> Result<FitReport> {
    cfg.validate()?;
    let start = Instant::now();
    let data = Dataset::read(data_path)?;
    let nm = qht_core::NoiseModel::new(data.meta.eta)?;
    let basis = Arc::new(WilsonBasis::standard()?);
    let sampler = cfg.mcmc.sampler();
    let chain = match cfg.prior.kind {
        PriorKind::Wilson => mcmc_wilson(&data.samples, &nm, &basis, &cfg.prior.wilson, &sampler, cfg.mcmc.seed)?,
        PriorKind::Mixture => mcmc_mixture(&data.samples, &nm, &cfg.prior.mixture, &sampler, cfg.mcmc.seed)?,
    };
    ensure_dir(out)?;
    chain.write_jsonl(&out.join(CHAIN_FILE))?;

    let g = &cfg.grid;
    let grid = Grid2D::square(g.half_width, g.points)?;
    let w = posterior_mean_wigner(&chain, &grid, &basis)?;
    write_wigner(&out.join(WIGNER_MEAN_FILE), &w)?;

    let spec = data.meta.spec.clone().unwrap_or_else(|| cfg.state.clone());
    let xs = Grid1D::symmetric(g.x_half_width, g.x_points)?;
    let points = xs.points();
    let mut header = vec!["theta", "x", "mean", "lower", "upper"];
    let truths: Vec<Option<Vec<f64>>> = g.thetas.iter().map(|&t| truth_marginal(&spec, t, &points)).collect();
    let with_truth = truths.iter().all(Option::is_some);
    if with_truth {
        header.push("truth");
    }
    let mut rows = Vec::new();
    for (theta, truth) in g.thetas.iter().zip(&truths) {
        let b = credible_bands(&chain, &basis, *theta, &xs, g.band_level)?;
        for i in 0..points.len() {
            let mut row = vec![*theta, points[i], b.mean[i], b.lower[i], b.upper[i]];
            if let (true, Some(t)) = (with_truth, truth) {
                row.push(t[i]);
            }
            rows.push(row);
        }
    }
    write_csv(&out.join(MARGINALS_FILE), &header, rows.into_iter())?;

    let (l2_error, median_draw_error) = match spec.wave_function() {
        Some(truth) => {
            let mean = posterior_mean_state(&chain, &basis)?;
            let mut errs = draw_errors(&chain, &basis, &truth)?;
            errs.sort_by(f64::total_cmp);
            (Some(phase_aligned_distance(&mean, &truth)), errs.get(errs.len() / 2).copied())
        }
        None => (None, None),
    };

    let lp = chain.retained_log_posterior();
    let ll = &chain.log_likelihood[chain.burn_in.min(chain.log_likelihood.len())..];
    let report = FitReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        state: spec.label(),
        prior: cfg.prior.kind,
        data: DataSummary {
            path: data_path.display().to_string(),
            n: data.samples.len(),
            eta: data.meta.eta,
            seed: data.meta.seed,
        },
        mcmc_seed: cfg.mcmc.seed,
        n_iter: sampler.n_iter,
        burn_in: sampler.burn_in,
        retained: chain.retained().len(),
        acceptance: chain
            .moves
            .iter()
            .filter(|m| m.proposed_after_burn_in > 0)
            .map(|m| (m.name.clone(), m.accepted_after_burn_in as f64 / m.proposed_after_burn_in as f64))
            .collect(),
        steps: chain.steps.clone(),
        max_log_posterior: lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean_log_likelihood: ll.iter().sum::<f64>() / ll.len().max(1) as f64,
        wigner_integral: w.integral(),
        l2_error,
        median_draw_error,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// Writes the true Wigner function and, given a chain, the posterior mean.
pub fn cmd_wigner(cfg: &ExperimentConfig, chain: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_dir(out)?;
    let grid = Grid2D::square(cfg.grid.half_width, cfg.grid.points)?;
    let mut written = Vec::new();
    let path = out.join(WIGNER_TRUTH_FILE);
    write_wigner(&path, &truth_wigner(&cfg.state, &grid)?)?;
    written.push(path);
    if let Some(chain_path) = chain {
        let chain = Chain::read_jsonl(chain_path)?;
        let basis = Arc::new(WilsonBasis::standard()?);
        let path = out.join(WIGNER_MEAN_FILE);
        write_wigner(&path, &posterior_mean_wigner(&chain, &grid, &basis)?)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_check(out: &Path, opts: &CheckOptions) -> Result<CheckReport> {
    let report = run_checks(opts)?;
    ensure_dir(out)?;
    write_json(&out.join(CHECK_FILE), &json!({
        "version": env!("CARGO_PKG_VERSION"),
        "all_pass": report.all_pass(),
        "window_swap_constant": report.window_swap_constant,
        "checks": report.checks,
    }))?;
    Ok(report)
}

/// Human-readable summary of a fit directory.
pub fn cmd_report(out: &Path) -> Result<String> {
    let path = out.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let r: FitReport = serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let chain = Chain::read_jsonl(&out.join(CHAIN_FILE))?;
    if chain.len() != r.n_iter || chain.seed != r.mcmc_seed {
        return Err(CliError::Io(format!("{CHAIN_FILE} does not match {REPORT_FILE}")));
    }
    let mut s = format!(
        "state {} | prior {:?} | n = {}, eta = {} | {} iterations, {} retained\n",
        r.state, r.prior, r.data.n, r.data.eta, r.n_iter, r.retained
    );
    for (name, rate) in &r.acceptance {
        s += &format!("  acceptance {name:<10} {rate:.3}\n");
    }
    s += &format!("  max log-posterior {:.3}\n", r.max_log_posterior);
    s += &format!("  Wigner integral   {:.5}\n", r.wigner_integral);
    if let Some(e) = r.l2_error {
        s += &format!("  L2 error of posterior mean {e:.4}\n");
    }
    s += &format!("  runtime {:.1} s\n", r.runtime_seconds);
    Ok(s)
}
