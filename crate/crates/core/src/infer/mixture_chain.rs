//! Metropolis-within-Gibbs over a fixed number of coherent atoms.
//!
//! Weights carry i.i.d. `Gamma(alpha0 / J, 1)` priors, the finite-dimensional
//! approximation of the Gamma process; locations and phases follow the
//! normalized base measure. The chain starts from a truncated Gamma-process
//! draw.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{accept, wrap_phase, Adapter, Chain, ChainKind, Draw, McmcConfig, MoveStats, NoiseNodes};
use crate::error::{Error, Result};
use crate::forward::{tf_shift, NoiseModel};
use crate::prior::{sample_gamma_mixture, GammaMixtureConfig};
use crate::simulate::{seeded_rng, QuadratureSample, SeededRng};
use crate::states::{gaussian_overlap, vacuum_window, CoherentAtom};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const REFRESH_EVERY: usize = 25;
/// Log-weights are kept above this value.
const MIN_LOG_WEIGHT: f64 = -700.0;

const WEIGHT: usize = 0;
const LOCATION: usize = 1;
const PHASE: usize = 2;

struct Sampler<'a> {
    data: &'a [QuadratureSample],
    nodes: NoiseNodes,
    cfg: &'a GammaMixtureConfig,
}

#[derive(Clone)]
struct State {
    atoms: Vec<CoherentAtom>,
    lw: Vec<f64>,
    /// `F_theta (M_omega T_x g)` at the noise nodes, one vector per atom.
    g: Vec<Vec<Complex64>>,
    sum: Vec<Complex64>,
    overlap: Vec<Complex64>,
    norm2: f64,
    loglik: f64,
}

impl<'a> Sampler<'a> {
    fn shape(&self) -> f64 {
        self.cfg.alpha0 / self.cfg.truncation as f64
    }

    fn atom_amplitudes(&self, x0: f64, w0: f64) -> Vec<Complex64> {
        let q = self.nodes.len();
        let mut out = vec![ZERO; self.data.len() * q];
        for (i, s) in self.data.iter().enumerate() {
            for (j, off) in self.nodes.offsets.iter().enumerate() {
                let x = s.y + off;
                let (shift, phase) = tf_shift(x, s.theta, x0, w0);
                out[i * q + j] = phase * vacuum_window(x - shift);
            }
        }
        out
    }

    fn norm2(&self, atoms: &[CoherentAtom], overlap: &[Complex64]) -> f64 {
        let n = atoms.len();
        let c: Vec<Complex64> = atoms.iter().map(|a| a.coefficient()).collect();
        let mut acc = 0.0;
        for j in 0..n {
            acc += c[j].norm_sqr();
            for l in j + 1..n {
                acc += 2.0 * (c[j] * c[l].conj() * overlap[j * n + l]).re;
            }
        }
        acc
    }

    fn loglik(&self, sum: &[Complex64], norm2: f64) -> f64 {
        if !(norm2 > 1e-16) {
            return f64::NEG_INFINITY;
        }
        self.nodes.log_likelihood(sum, 1.0 / norm2)
    }

    fn build(&self, atoms: Vec<CoherentAtom>) -> State {
        let n = atoms.len();
        let g: Vec<Vec<Complex64>> = atoms.par_iter().map(|a| self.atom_amplitudes(a.x, a.omega)).collect();
        let mut overlap = vec![ZERO; n * n];
        for j in 0..n {
            for l in 0..n {
                overlap[j * n + l] = gaussian_overlap((atoms[j].x, atoms[j].omega), (atoms[l].x, atoms[l].omega));
            }
        }
        let mut sum = vec![ZERO; self.data.len() * self.nodes.len()];
        for (a, gv) in atoms.iter().zip(&g) {
            let c = a.coefficient();
            for (s, v) in sum.iter_mut().zip(gv) {
                *s += c * v;
            }
        }
        let norm2 = self.norm2(&atoms, &overlap);
        let loglik = self.loglik(&sum, norm2);
        let lw = atoms.iter().map(|a| a.weight.ln().max(MIN_LOG_WEIGHT)).collect();
        State {
            atoms,
            lw,
            g,
            sum,
            overlap,
            norm2,
            loglik,
        }
    }

    fn log_prior(&self, st: &State) -> f64 {
        let shape = self.shape();
        let v = self.cfg.location_var;
        let lg = statrs::function::gamma::ln_gamma(shape);
        st.atoms
            .iter()
            .zip(&st.lw)
            .map(|(a, lw)| {
                shape * lw - lw.exp() - lg - (a.x * a.x + a.omega * a.omega) / (2.0 * v)
                    - (2.0 * PI * v).ln()
                    - (2.0 * PI).ln()
            })
            .sum()
    }

    /// Proposes replacing atom `j`; `g_new` is its new amplitude vector when
    /// the location moves.
    fn atom_move(
        &self,
        st: &mut State,
        j: usize,
        new: CoherentAtom,
        lw_new: f64,
        g_new: Option<Vec<Complex64>>,
        log_extra: f64,
        rng: &mut SeededRng,
    ) -> bool {
        let n = st.atoms.len();
        let old_c = st.atoms[j].coefficient();
        let new_c = new.coefficient();
        let mut overlap_row = None;
        let sum_new: Vec<Complex64> = match &g_new {
            Some(gn) => st
                .sum
                .iter()
                .zip(gn)
                .zip(&st.g[j])
                .map(|((s, gn), go)| s + new_c * gn - old_c * go)
                .collect(),
            None => {
                let d = new_c - old_c;
                st.sum.iter().zip(&st.g[j]).map(|(s, g)| s + d * g).collect()
            }
        };
        let mut atoms = st.atoms.clone();
        atoms[j] = new;
        let norm2 = if g_new.is_some() {
            let row: Vec<Complex64> = (0..n)
                .map(|l| gaussian_overlap((new.x, new.omega), (atoms[l].x, atoms[l].omega)))
                .collect();
            let mut ov = st.overlap.clone();
            for l in 0..n {
                ov[j * n + l] = row[l];
                ov[l * n + j] = row[l].conj();
            }
            let v = self.norm2(&atoms, &ov);
            overlap_row = Some(ov);
            v
        } else {
            self.norm2(&atoms, &st.overlap)
        };
        let ll = self.loglik(&sum_new, norm2);
        if accept(ll - st.loglik + log_extra, rng) {
            st.atoms = atoms;
            st.lw[j] = lw_new;
            if let Some(gn) = g_new {
                st.g[j] = gn;
            }
            if let Some(ov) = overlap_row {
                st.overlap = ov;
            }
            st.sum = sum_new;
            st.norm2 = norm2;
            st.loglik = ll;
            true
        } else {
            false
        }
    }
}

/// Posterior sampler for the Gamma-process mixture prior.
pub fn mcmc_mixture(
    data: &[QuadratureSample],
    nm: &NoiseModel,
    mix: &GammaMixtureConfig,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<Chain> {
    mix.validate()?;
    cfg.validate()?;
    let sm = Sampler {
        data,
        nodes: NoiseNodes::new(nm),
        cfg: mix,
    };
    let mut rng = seeded_rng(seed);
    let init = sample_gamma_mixture(mix, &mut rng)?;
    let mut atoms = init.mixture.atoms().to_vec();
    for a in &mut atoms {
        a.weight = a.weight.max(MIN_LOG_WEIGHT.exp());
    }
    let mut st = sm.build(atoms);
    let shape = sm.shape();
    let var = mix.location_var;

    let mut adapter = Adapter::new(
        &[
            ("weight", cfg.step_amplitude),
            ("location", cfg.step_location),
            ("phase", cfg.step_phase),
        ],
        cfg,
    );
    let mut moves: Vec<MoveStats> = ["weight", "location", "phase"].iter().map(|n| MoveStats::new(n)).collect();
    let mut chain = Chain {
        kind: ChainKind::Mixture,
        seed,
        burn_in: cfg.burn_in,
        draws: Vec::with_capacity(cfg.n_iter),
        log_posterior: Vec::with_capacity(cfg.n_iter),
        log_likelihood: Vec::with_capacity(cfg.n_iter),
        moves: Vec::new(),
        steps: Default::default(),
    };
    let n_atoms = st.atoms.len();

    for iter in 0..cfg.n_iter {
        if iter > 0 && iter % REFRESH_EVERY == 0 {
            let lw = st.lw.clone();
            st = sm.build(st.atoms.clone());
            st.lw = lw;
        }
        let post = iter >= cfg.burn_in;
        let mut acc = [0usize; 3];
        let steps = [adapter.step(WEIGHT), adapter.step(LOCATION), adapter.step(PHASE)];
        for j in 0..n_atoms {
            let eps: f64 = StandardNormal.sample(&mut rng);
            // The weight prior is truncated below at MIN_LOG_WEIGHT.
            let lw_new = st.lw[j] + steps[WEIGHT] * eps;
            let ok = lw_new >= MIN_LOG_WEIGHT && {
                let mut a = st.atoms[j];
                a.weight = lw_new.exp();
                let log_extra = shape * (lw_new - st.lw[j]) - (lw_new.exp() - st.lw[j].exp());
                sm.atom_move(&mut st, j, a, lw_new, None, log_extra, &mut rng)
            };
            moves[WEIGHT].record(ok, post);
            acc[WEIGHT] += ok as usize;

            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            let mut a = st.atoms[j];
            let old = (a.x, a.omega);
            a.x += steps[LOCATION] * e1;
            a.omega += steps[LOCATION] * e2;
            let log_extra = -(a.x * a.x + a.omega * a.omega - old.0 * old.0 - old.1 * old.1) / (2.0 * var);
            let g_new = sm.atom_amplitudes(a.x, a.omega);
            let lw = st.lw[j];
            let ok = sm.atom_move(&mut st, j, a, lw, Some(g_new), log_extra, &mut rng);
            moves[LOCATION].record(ok, post);
            acc[LOCATION] += ok as usize;

            let eps: f64 = StandardNormal.sample(&mut rng);
            let mut a = st.atoms[j];
            a.phase = wrap_phase(a.phase + steps[PHASE] * eps);
            let ok = sm.atom_move(&mut st, j, a, lw, None, 0.0, &mut rng);
            moves[PHASE].record(ok, post);
            acc[PHASE] += ok as usize;
        }
        for b in 0..3 {
            adapter.update(b, acc[b] as f64 / n_atoms as f64, iter, cfg.burn_in);
        }
        let lp = sm.log_prior(&st) + st.loglik;
        if lp.is_nan() {
            return Err(Error::ChainDiverged { iteration: iter });
        }
        chain.draws.push(Draw::Mixture { atoms: st.atoms.clone() });
        chain.log_posterior.push(lp);
        chain.log_likelihood.push(st.loglik);
    }
    chain.moves = moves;
    chain.steps = adapter.steps();
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::log_likelihood;
    use crate::simulate::{simulate, StateSpec};
    use crate::states::{CoherentMixture, WaveFunction};

    #[test]
    fn cached_likelihood_matches_direct() {
        let nm = NoiseModel::new(0.95).unwrap();
        let data = simulate(&StateSpec::Cat { x0: 1.5 }, 25, &nm, 3).unwrap();
        let mix = GammaMixtureConfig {
            truncation: 6,
            ..Default::default()
        };
        let sm = Sampler {
            data: &data.samples,
            nodes: NoiseNodes::new(&nm),
            cfg: &mix,
        };
        let mut rng = seeded_rng(4);
        let atoms = sample_gamma_mixture(&mix, &mut rng).unwrap().mixture.atoms().to_vec();
        let st = sm.build(atoms.clone());
        let psi = WaveFunction::CoherentMixture(CoherentMixture::new(atoms).unwrap());
        let direct = log_likelihood(&psi, &data.samples, &nm);
        assert!((st.loglik - direct).abs() < 1e-8 * direct.abs().max(1.0), "{} {}", st.loglik, direct);
    }

    #[test]
    fn single_observation_runs() {
        let nm = NoiseModel::new(0.95).unwrap();
        let data = [QuadratureSample { y: 0.3, theta: 1.0 }];
        let cfg = McmcConfig {
            n_iter: 1000,
            burn_in: 100,
            ..Default::default()
        };
        let mix = GammaMixtureConfig {
            truncation: 10,
            ..Default::default()
        };
        let chain = mcmc_mixture(&data, &nm, &mix, &cfg, 8).unwrap();
        assert_eq!(chain.len(), 1000);
        assert!(chain.log_posterior.iter().all(|v| !v.is_nan()));
    }
}
