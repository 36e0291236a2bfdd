//! Posterior computation: likelihoods, MCMC over Wilson series and coherent
//! mixtures, and posterior summaries.

mod mixture_chain;
mod summary;
mod wilson_chain;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{noisy_density, NoiseModel};
use crate::numerics::GaussHermite;
use crate::simulate::QuadratureSample;
use crate::states::{CoherentAtom, CoherentMixture, WaveFunction};
use crate::wilson::{synthesize, WilsonBasis, WilsonSeriesParams};

pub use mixture_chain::mcmc_mixture;
pub use summary::{
    coefficient_draws, credible_bands, draw_errors, posterior_mean_state, posterior_mean_wigner, CoefficientDraws,
    CredibleBands, MIXTURE_PROJECTION_RADIUS,
};
pub use wilson_chain::{mcmc_wilson, mcmc_wilson_with_layout, ShellLayout};

/// Gauss-Hermite nodes used to integrate the detector noise in the samplers.
pub const LIKELIHOOD_NODES: usize = 32;
/// Floor applied to density values before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Version written into chain checkpoints.
pub const CHECKPOINT_VERSION: u32 = 1;

/// `sum_i log p_psi^eta(y_i, theta_i)`.
pub fn log_likelihood(state: &WaveFunction, data: &[QuadratureSample], nm: &NoiseModel) -> f64 {
    let terms: Vec<f64> = data
        .par_iter()
        .map(|s| noisy_density(state, s.y, s.theta, nm).max(DENSITY_FLOOR).ln())
        .collect();
    terms.iter().sum()
}

/// Offsets and weights turning `|F_theta psi|^2` at `y + offset` into the
/// noisy joint density at `y`.
#[derive(Debug, Clone)]
pub(crate) struct NoiseNodes {
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NoiseNodes {
    pub fn new(nm: &NoiseModel) -> Self {
        let inv_pi = std::f64::consts::FRAC_1_PI;
        if nm.is_ideal() {
            return Self {
                offsets: vec![0.0],
                weights: vec![inv_pi],
            };
        }
        let gh = GaussHermite::new(LIKELIHOOD_NODES);
        let scale = std::f64::consts::SQRT_2 * nm.sd();
        let norm = inv_pi / std::f64::consts::PI.sqrt();
        Self {
            offsets: gh.nodes.iter().map(|t| scale * t).collect(),
            weights: gh.weights.iter().map(|w| w * norm).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    /// Log likelihood from amplitudes laid out observation-major, scaled by `scale`.
    pub fn log_likelihood(&self, amp: &[Complex64], scale: f64) -> f64 {
        let q = self.len();
        amp.chunks_exact(q)
            .map(|c| {
                let d: f64 = c.iter().zip(&self.weights).map(|(a, w)| w * a.norm_sqr()).sum();
                (d * scale).max(DENSITY_FLOOR).ln()
            })
            .sum()
    }
}

/// Sampler settings shared by both chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    /// Initial sd of the log-scale random walk on amplitude weights.
    pub step_amplitude: f64,
    pub step_phase: f64,
    pub step_location: f64,
    /// Initial sd of the shell-scale walk, relative to the shell's range.
    pub step_shell: f64,
    /// Probability of attempting a birth or death move per iteration.
    pub z_move_prob: f64,
    pub target_acceptance: f64,
    pub adapt: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_iter: 3000,
            burn_in: 1000,
            step_amplitude: 0.5,
            step_phase: 0.5,
            step_location: 0.2,
            step_shell: 0.2,
            z_move_prob: 0.2,
            target_acceptance: 0.25,
            adapt: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.burn_in > 0 && self.burn_in < self.n_iter) {
            return Err(invalid("burn_in", format!("need 0 < burn_in < n_iter = {}", self.n_iter)));
        }
        for (v, f) in [
            (self.step_amplitude, "step_amplitude"),
            (self.step_phase, "step_phase"),
            (self.step_location, "step_location"),
            (self.step_shell, "step_shell"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(f, "step sizes must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.z_move_prob) {
            return Err(invalid("z_move_prob", "must lie in [0, 1]"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(invalid("target_acceptance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Robbins-Monro scaling of step sizes during burn-in.
#[derive(Debug, Clone)]
pub(crate) struct Adapter {
    names: Vec<&'static str>,
    log_steps: Vec<f64>,
    target: f64,
    enabled: bool,
}

impl Adapter {
    pub fn new(blocks: &[(&'static str, f64)], cfg: &McmcConfig) -> Self {
        Self {
            names: blocks.iter().map(|b| b.0).collect(),
            log_steps: blocks.iter().map(|b| b.1.ln()).collect(),
            target: cfg.target_acceptance,
            enabled: cfg.adapt,
        }
    }

    pub fn step(&self, block: usize) -> f64 {
        self.log_steps[block].exp()
    }

    pub fn update(&mut self, block: usize, rate: f64, iter: usize, burn_in: usize) {
        if self.enabled && iter < burn_in {
            let gain = (iter as f64 + 1.0).powf(-0.6);
            self.log_steps[block] = (self.log_steps[block] + gain * (rate - self.target)).clamp(-12.0, 3.0);
        }
    }

    pub fn steps(&self) -> BTreeMap<String, f64> {
        self.names.iter().enumerate().map(|(i, n)| (n.to_string(), self.step(i))).collect()
    }
}

/// Proposal and acceptance counts for one move type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub name: String,
    pub proposed: u64,
    pub accepted: u64,
    /// Counts restricted to iterations after burn-in.
    pub proposed_after_burn_in: u64,
    pub accepted_after_burn_in: u64,
}

impl MoveStats {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            proposed: 0,
            accepted: 0,
            proposed_after_burn_in: 0,
            accepted_after_burn_in: 0,
        }
    }

    pub(crate) fn record(&mut self, accepted: bool, after_burn_in: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
        if after_burn_in {
            self.proposed_after_burn_in += 1;
            self.accepted_after_burn_in += accepted as u64;
        }
    }

    /// Acceptance rate after burn-in (NaN when nothing was proposed).
    pub fn rate(&self) -> f64 {
        self.accepted_after_burn_in as f64 / self.proposed_after_burn_in as f64
    }
}

/// One retained parameter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Draw {
    Wilson { params: WilsonSeriesParams },
    Mixture { atoms: Vec<CoherentAtom> },
}

impl Draw {
    pub fn wave_function(&self, basis: &Arc<WilsonBasis>) -> Result<WaveFunction> {
        match self {
            Self::Wilson { params } => Ok(synthesize(basis, params.clone())),
            Self::Mixture { atoms } => Ok(WaveFunction::CoherentMixture(CoherentMixture::new(atoms.clone())?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Wilson,
    Mixture,
}

/// Output of a sampler: one draw per iteration, including burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub kind: ChainKind,
    pub seed: u64,
    pub burn_in: usize,
    pub draws: Vec<Draw>,
    pub log_posterior: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub moves: Vec<MoveStats>,
    /// Step sizes after adaptation.
    pub steps: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: u32,
    kind: ChainKind,
    seed: u64,
    burn_in: usize,
    n_draws: usize,
    moves: Vec<MoveStats>,
    steps: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    iter: usize,
    log_posterior: f64,
    log_likelihood: f64,
    draw: Draw,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Draws after burn-in.
    pub fn retained(&self) -> &[Draw] {
        &self.draws[self.burn_in.min(self.draws.len())..]
    }

    pub fn retained_log_posterior(&self) -> &[f64] {
        &self.log_posterior[self.burn_in.min(self.draws.len())..]
    }

    pub fn move_stats(&self, name: &str) -> Option<&MoveStats> {
        self.moves.iter().find(|m| m.name == name)
    }

    /// Writes the chain as JSON lines: a header, then one record per draw.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = CheckpointHeader {
            format: "qht-chain".into(),
            version: CHECKPOINT_VERSION,
            kind: self.kind,
            seed: self.seed,
            burn_in: self.burn_in,
            n_draws: self.draws.len(),
            moves: self.moves.clone(),
            steps: self.steps.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for (i, d) in self.draws.iter().enumerate() {
            let rec = CheckpointRecord {
                iter: i,
                log_posterior: self.log_posterior[i],
                log_likelihood: self.log_likelihood[i],
                draw: d.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let first = lines.next().ok_or_else(|| Error::Format("empty checkpoint".into()))??;
        let header: CheckpointHeader = serde_json::from_str(&first)?;
        if header.format != "qht-chain" || header.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                header.format, header.version
            )));
        }
        let mut chain = Chain {
            kind: header.kind,
            seed: header.seed,
            burn_in: header.burn_in,
            draws: Vec::with_capacity(header.n_draws),
            log_posterior: Vec::with_capacity(header.n_draws),
            log_likelihood: Vec::with_capacity(header.n_draws),
            moves: header.moves,
            steps: header.steps,
        };
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CheckpointRecord = serde_json::from_str(&line)?;
            chain.log_posterior.push(rec.log_posterior);
            chain.log_likelihood.push(rec.log_likelihood);
            chain.draws.push(rec.draw);
        }
        if chain.draws.len() != header.n_draws {
            return Err(Error::Format(format!(
                "checkpoint has {} draws, header says {}",
                chain.draws.len(),
                header.n_draws
            )));
        }
        Ok(chain)
    }
}

/// Reflects `v` into `[0, b]`.
pub(crate) fn reflect(mut v: f64, b: f64) -> f64 {
    for _ in 0..64 {
        if v < 0.0 {
            v = -v;
        } else if v > b {
            v = 2.0 * b - v;
        } else {
            return v;
        }
    }
    v.clamp(0.0, b)
}

pub(crate) fn wrap_phase(v: f64) -> f64 {
    v.rem_euclid(2.0 * std::f64::consts::PI)
}

/// Metropolis test on a log acceptance ratio.
pub(crate) fn accept(log_ratio: f64, rng: &mut crate::simulate::SeededRng) -> bool {
    use rand::Rng;
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}
