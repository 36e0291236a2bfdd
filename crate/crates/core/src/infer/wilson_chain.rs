//! Metropolis-within-Gibbs over random Wilson series with birth and death of
//! the outermost shell.
//!
//! Each shell `k` carries latent weights `w ~ Gamma(conc)` (so `w / sum w`
//! is the shell's Dirichlet vector), a scale `theta_k` and phases. The
//! coefficient of atom `a` in shell `k` is
//! `theta_k / S * sqrt(w_a / W_k) * e^{i zeta_a}` with `S^2 = sum theta^2`
//! and `W_k = sum_{a in k} w_a`. For every shell the sampler keeps
//! `U_k = sum_a sqrt(w_a) e^{i zeta_a} F_theta phi_a` evaluated at the noise
//! nodes of every observation, so single-atom moves cost `O(n Q)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{accept, reflect, wrap_phase, Adapter, Chain, ChainKind, Draw, McmcConfig, MoveStats, NoiseNodes};
use crate::error::{invalid, Error, Result};
use crate::forward::{tf_shift, NoiseModel};
use crate::prior::{gamma_draw, ln_gamma_density, WilsonPriorConfig};
use crate::simulate::{seeded_rng, QuadratureSample, SeededRng};
use crate::wilson::{WilsonBasis, WilsonIndex, WilsonSeriesParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Iterations between full recomputations of the cached sums.
const REFRESH_EVERY: usize = 25;

const AMPLITUDE: usize = 0;
const PHASE: usize = 1;
const SHELL: usize = 2;
const BIRTH: usize = 3;
const DEATH: usize = 4;

/// Partition of the index set into nested shells, with the range of each
/// shell's scale `theta_k` (the first is fixed at one).
#[derive(Debug, Clone, PartialEq)]
pub struct ShellLayout {
    pub shells: Vec<Vec<WilsonIndex>>,
    pub bounds: Vec<f64>,
    radii: Vec<f64>,
}

impl ShellLayout {
    pub fn from_prior(cfg: &WilsonPriorConfig) -> Self {
        let shells = (1..=cfg.k_max).map(|k| cfg.shell_indices(k)).collect();
        let bounds = (1..=cfg.k_max).map(|k| cfg.theta_bound(k)).collect();
        let radii = (1..=cfg.k_max).map(|k| cfg.radius(k)).collect();
        Self { shells, bounds, radii }
    }

    /// Arbitrary disjoint shells, e.g. a fixed two-atom model.
    pub fn custom(shells: Vec<Vec<WilsonIndex>>, bounds: Vec<f64>) -> Result<Self> {
        if shells.is_empty() || shells.iter().any(|s| s.is_empty()) {
            return Err(invalid("shells", "every shell needs at least one atom"));
        }
        if bounds.len() != shells.len() || bounds.iter().skip(1).any(|b| !(*b > 0.0)) {
            return Err(invalid("bounds", "need one positive bound per shell"));
        }
        let mut all: Vec<WilsonIndex> = shells.concat();
        all.sort();
        all.dedup();
        if all.len() != shells.iter().map(|s| s.len()).sum::<usize>() {
            return Err(invalid("shells", "shells must be disjoint"));
        }
        let mut radii = Vec::new();
        let mut r: f64 = 0.0;
        for s in &shells {
            r = s.iter().map(|i| i.radius() + 0.5).fold(r, f64::max);
            radii.push(r);
        }
        Ok(Self { shells, bounds, radii })
    }

    pub fn k_max(&self) -> usize {
        self.shells.len()
    }

    fn atoms(&self) -> Vec<WilsonIndex> {
        self.shells.concat()
    }
}

/// `F_theta phi_a` at `y_i + offset_q`, laid out as `[atom][i * Q + q]`.
struct AtomCache {
    nq: usize,
    values: Vec<Complex64>,
}

impl AtomCache {
    fn build(data: &[QuadratureSample], nodes: &NoiseNodes, basis: &WilsonBasis, atoms: &[WilsonIndex]) -> Self {
        let q = nodes.len();
        let nq = data.len() * q;
        let per_obs: Vec<Vec<Complex64>> = data
            .par_iter()
            .map(|s| {
                let table = basis.window_transform(s.theta);
                let mut out = vec![ZERO; atoms.len() * q];
                for (a, idx) in atoms.iter().enumerate() {
                    let (terms, count) = idx.tf_terms();
                    for (j, off) in nodes.offsets.iter().enumerate() {
                        let x = s.y + off;
                        let mut v = ZERO;
                        for (c, x0, w0) in &terms[..count] {
                            let (shift, phase) = tf_shift(x, s.theta, *x0, *w0);
                            v += c * phase * table.eval(x - shift);
                        }
                        out[a * q + j] = v;
                    }
                }
                out
            })
            .collect();
        let mut values = vec![ZERO; atoms.len() * nq];
        for (i, obs) in per_obs.iter().enumerate() {
            for a in 0..atoms.len() {
                values[a * nq + i * q..a * nq + (i + 1) * q].copy_from_slice(&obs[a * q..(a + 1) * q]);
            }
        }
        Self { nq, values }
    }

    fn atom(&self, a: usize) -> &[Complex64] {
        &self.values[a * self.nq..(a + 1) * self.nq]
    }
}

struct Sampler<'a> {
    prior: &'a WilsonPriorConfig,
    layout: &'a ShellLayout,
    nodes: NoiseNodes,
    cache: AtomCache,
    /// First atom of each shell in the flattened atom list, plus the end.
    offsets: Vec<usize>,
    atoms: Vec<WilsonIndex>,
}

#[derive(Clone)]
struct State {
    k: usize,
    theta: Vec<f64>,
    w: Vec<f64>,
    zeta: Vec<f64>,
    wsum: Vec<f64>,
    u: Vec<Vec<Complex64>>,
    amp: Vec<Complex64>,
    loglik: f64,
}

impl<'a> Sampler<'a> {
    fn shell_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    fn shell_sum(&self, k: usize, w: &[f64], zeta: &[f64]) -> (Vec<Complex64>, f64) {
        let mut u = vec![ZERO; self.cache.nq];
        let mut ws = 0.0;
        for a in self.shell_range(k) {
            ws += w[a];
            let c = Complex64::from_polar(w[a].sqrt(), zeta[a]);
            for (ui, b) in u.iter_mut().zip(self.cache.atom(a)) {
                *ui += c * b;
            }
        }
        (u, ws)
    }

    fn scales(&self, k: usize, theta: &[f64], wsum: &[f64]) -> Vec<f64> {
        let s = theta[..k].iter().map(|t| t * t).sum::<f64>().sqrt();
        (0..k).map(|j| theta[j] / (s * wsum[j].sqrt())).collect()
    }

    fn combine(&self, k: usize, theta: &[f64], wsum: &[f64], u: &[Vec<Complex64>], out: &mut Vec<Complex64>) {
        let sc = self.scales(k, theta, wsum);
        out.clear();
        out.resize(self.cache.nq, ZERO);
        for j in 0..k {
            for (o, v) in out.iter_mut().zip(&u[j]) {
                *o += v * sc[j];
            }
        }
    }

    fn refresh(&self, st: &mut State) {
        for k in 0..st.k {
            let (u, ws) = self.shell_sum(k, &st.w, &st.zeta);
            st.u[k] = u;
            st.wsum[k] = ws;
        }
        let mut amp = Vec::new();
        self.combine(st.k, &st.theta, &st.wsum, &st.u, &mut amp);
        st.amp = amp;
        st.loglik = self.nodes.log_likelihood(&st.amp, 1.0);
    }

    fn log_prior(&self, st: &State) -> f64 {
        let conc = self.prior.dirichlet_conc;
        let mut lp = self.prior.log_pk(st.k);
        for k in 1..st.k {
            lp -= self.layout.bounds[k].ln();
        }
        for a in 0..self.offsets[st.k] {
            lp += ln_gamma_density(st.w[a], conc) - (2.0 * PI).ln();
        }
        lp
    }

    fn draw(&self, st: &State) -> Draw {
        let sc = self.scales(st.k, &st.theta, &st.wsum);
        let mut entries: Vec<(WilsonIndex, f64, f64)> = Vec::with_capacity(self.offsets[st.k]);
        for k in 0..st.k {
            for a in self.shell_range(k) {
                entries.push((self.atoms[a], sc[k] * st.w[a].sqrt(), st.zeta[a]));
            }
        }
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        Draw::Wilson {
            params: WilsonSeriesParams {
                z: self.layout.radii[st.k - 1],
                indices: entries.iter().map(|e| e.0).collect(),
                p: entries.iter().map(|e| e.1 / norm).collect(),
                zeta: entries.iter().map(|e| e.2).collect(),
            },
        }
    }

    fn initial(&self, rng: &mut SeededRng) -> State {
        let n_atoms = self.atoms.len();
        let kmax = self.layout.k_max();
        let w = (0..n_atoms).map(|_| gamma_draw(self.prior.dirichlet_conc, rng)).collect();
        let zeta = (0..n_atoms).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let theta = (0..kmax)
            .map(|k| if k == 0 { 1.0 } else { rng.random::<f64>() * self.layout.bounds[k] })
            .collect();
        let mut st = State {
            k: 1,
            theta,
            w,
            zeta,
            wsum: vec![0.0; kmax],
            u: vec![Vec::new(); kmax],
            amp: Vec::new(),
            loglik: 0.0,
        };
        self.refresh(&mut st);
        st
    }

    /// Single-atom proposal: new `(w, zeta)` for atom `a` of shell `k`.
    fn atom_move(&self, st: &mut State, a: usize, w_new: f64, zeta_new: f64, log_extra: f64, rng: &mut SeededRng) -> bool {
        let k = self.shell_of(a);
        let delta = Complex64::from_polar(w_new.sqrt(), zeta_new) - Complex64::from_polar(st.w[a].sqrt(), st.zeta[a]);
        let wsum_new = st.wsum[k] - st.w[a] + w_new;
        let sc_old = self.scales(st.k, &st.theta, &st.wsum)[k];
        let mut wsum = st.wsum.clone();
        wsum[k] = wsum_new;
        let sc_new = self.scales(st.k, &st.theta, &wsum)[k];
        let b = self.cache.atom(a);
        let u_new: Vec<Complex64> = st.u[k].iter().zip(b).map(|(u, b)| u + delta * b).collect();
        let amp_new: Vec<Complex64> = st
            .amp
            .iter()
            .zip(&u_new)
            .zip(&st.u[k])
            .map(|((a, un), uo)| a + un * sc_new - uo * sc_old)
            .collect();
        let ll = self.nodes.log_likelihood(&amp_new, 1.0);
        if accept(ll - st.loglik + log_extra, rng) {
            st.w[a] = w_new;
            st.zeta[a] = zeta_new;
            st.wsum[k] = wsum_new;
            st.u[k] = u_new;
            st.amp = amp_new;
            st.loglik = ll;
            true
        } else {
            false
        }
    }

    fn shell_of(&self, a: usize) -> usize {
        self.offsets.partition_point(|&o| o <= a) - 1
    }

    fn birth_prob(&self, k: usize) -> f64 {
        let kmax = self.layout.k_max();
        if kmax == 1 {
            0.0
        } else if k == 1 {
            1.0
        } else if k == kmax {
            0.0
        } else {
            0.5
        }
    }

    fn death_prob(&self, k: usize) -> f64 {
        if self.layout.k_max() == 1 || k == 1 {
            0.0
        } else {
            1.0 - self.birth_prob(k)
        }
    }
}

/// Posterior sampler for the random Wilson series prior.
pub fn mcmc_wilson(
    data: &[QuadratureSample],
    nm: &NoiseModel,
    basis: &Arc<WilsonBasis>,
    prior: &WilsonPriorConfig,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<Chain> {
    let layout = ShellLayout::from_prior(prior);
    mcmc_wilson_with_layout(data, nm, basis, prior, &layout, cfg, seed)
}

/// As [`mcmc_wilson`] with an explicit shell layout. The prior on the shell
/// count comes from `prior` and must cover `layout.k_max()` shells.
pub fn mcmc_wilson_with_layout(
    data: &[QuadratureSample],
    nm: &NoiseModel,
    basis: &Arc<WilsonBasis>,
    prior: &WilsonPriorConfig,
    layout: &ShellLayout,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<Chain> {
    prior.validate()?;
    cfg.validate()?;
    if prior.k_max != layout.k_max() {
        return Err(invalid("k_max", "prior and shell layout disagree on the number of shells"));
    }
    let atoms = layout.atoms();
    let nodes = NoiseNodes::new(nm);
    let cache = AtomCache::build(data, &nodes, basis, &atoms);
    let mut offsets = vec![0];
    for s in &layout.shells {
        offsets.push(offsets.last().unwrap() + s.len());
    }
    let sm = Sampler {
        prior,
        layout,
        nodes,
        cache,
        offsets,
        atoms,
    };

    let mut rng = seeded_rng(seed);
    let mut st = sm.initial(&mut rng);
    let mut adapter = Adapter::new(
        &[
            ("amplitude", cfg.step_amplitude),
            ("phase", cfg.step_phase),
            ("shell", cfg.step_shell),
        ],
        cfg,
    );
    let mut moves: Vec<MoveStats> = ["amplitude", "phase", "shell", "birth", "death"]
        .iter()
        .map(|n| MoveStats::new(n))
        .collect();
    let mut chain = Chain {
        kind: ChainKind::Wilson,
        seed,
        burn_in: cfg.burn_in,
        draws: Vec::with_capacity(cfg.n_iter),
        log_posterior: Vec::with_capacity(cfg.n_iter),
        log_likelihood: Vec::with_capacity(cfg.n_iter),
        moves: Vec::new(),
        steps: Default::default(),
    };

    for iter in 0..cfg.n_iter {
        if iter > 0 && iter % REFRESH_EVERY == 0 {
            sm.refresh(&mut st);
        }
        let post = iter >= cfg.burn_in;
        let active = sm.offsets[st.k];

        let step = adapter.step(AMPLITUDE);
        let mut acc = 0usize;
        for a in 0..active {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let w_new = st.w[a] * (step * eps).exp();
            let conc = prior.dirichlet_conc;
            let log_extra = ln_gamma_density(w_new, conc) - ln_gamma_density(st.w[a], conc) + (w_new / st.w[a]).ln();
            let z = st.zeta[a];
            let ok = sm.atom_move(&mut st, a, w_new, z, log_extra, &mut rng);
            moves[AMPLITUDE].record(ok, post);
            acc += ok as usize;
        }
        adapter.update(AMPLITUDE, acc as f64 / active as f64, iter, cfg.burn_in);

        let step = adapter.step(PHASE);
        let mut acc = 0usize;
        for a in 0..active {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let z_new = wrap_phase(st.zeta[a] + step * eps);
            let w = st.w[a];
            let ok = sm.atom_move(&mut st, a, w, z_new, 0.0, &mut rng);
            moves[PHASE].record(ok, post);
            acc += ok as usize;
        }
        adapter.update(PHASE, acc as f64 / active as f64, iter, cfg.burn_in);

        if st.k > 1 {
            let step = adapter.step(SHELL);
            let mut acc = 0usize;
            let mut amp = Vec::new();
            for k in 1..st.k {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let b = layout.bounds[k];
                let mut theta = st.theta.clone();
                theta[k] = reflect(theta[k] + step * b * eps, b);
                sm.combine(st.k, &theta, &st.wsum, &st.u, &mut amp);
                let ll = sm.nodes.log_likelihood(&amp, 1.0);
                let ok = accept(ll - st.loglik, &mut rng);
                if ok {
                    st.theta = theta;
                    std::mem::swap(&mut st.amp, &mut amp);
                    st.loglik = ll;
                }
                moves[SHELL].record(ok, post);
                acc += ok as usize;
            }
            adapter.update(SHELL, acc as f64 / (st.k - 1) as f64, iter, cfg.burn_in);
        }

        if layout.k_max() > 1 && rng.random::<f64>() < cfg.z_move_prob {
            let pb = sm.birth_prob(st.k);
            if rng.random::<f64>() < pb {
                let k_new = st.k + 1;
                let mut prop = st.clone();
                let shell = k_new - 1;
                prop.theta[shell] = rng.random::<f64>() * layout.bounds[shell];
                for a in sm.shell_range(shell) {
                    prop.w[a] = gamma_draw(prior.dirichlet_conc, &mut rng);
                    prop.zeta[a] = rng.random::<f64>() * 2.0 * PI;
                }
                let (u, ws) = sm.shell_sum(shell, &prop.w, &prop.zeta);
                prop.u[shell] = u;
                prop.wsum[shell] = ws;
                prop.k = k_new;
                let mut amp = Vec::new();
                sm.combine(k_new, &prop.theta, &prop.wsum, &prop.u, &mut amp);
                prop.amp = amp;
                prop.loglik = sm.nodes.log_likelihood(&prop.amp, 1.0);
                let log_ratio = prior.log_pk(k_new) - prior.log_pk(st.k) + prop.loglik - st.loglik
                    + (sm.death_prob(k_new) / pb).ln();
                let ok = accept(log_ratio, &mut rng);
                if ok {
                    st = prop;
                }
                moves[BIRTH].record(ok, post);
            } else {
                let pd = sm.death_prob(st.k);
                let k_new = st.k - 1;
                let mut amp = Vec::new();
                sm.combine(k_new, &st.theta, &st.wsum, &st.u, &mut amp);
                let ll = sm.nodes.log_likelihood(&amp, 1.0);
                let log_ratio =
                    prior.log_pk(k_new) - prior.log_pk(st.k) + ll - st.loglik + (sm.birth_prob(k_new) / pd).ln();
                let ok = accept(log_ratio, &mut rng);
                if ok {
                    st.k = k_new;
                    st.amp = amp;
                    st.loglik = ll;
                }
                moves[DEATH].record(ok, post);
            }
        }

        let lp = sm.log_prior(&st) + st.loglik;
        if lp.is_nan() {
            return Err(Error::ChainDiverged { iteration: iter });
        }
        chain.draws.push(sm.draw(&st));
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
    use crate::forward::noisy_density;
    use crate::simulate::{simulate, StateSpec};
    use crate::wilson::synthesize;

    fn basis() -> Arc<WilsonBasis> {
        Arc::new(WilsonBasis::standard().unwrap())
    }

    #[test]
    fn cache_reproduces_noisy_density() {
        let basis = basis();
        let nm = NoiseModel::new(0.9).unwrap();
        let data = [
            QuadratureSample { y: 0.4, theta: 0.02 },
            QuadratureSample { y: -1.1, theta: 1.3 },
            QuadratureSample { y: 0.9, theta: 3.1 },
        ];
        let prior = WilsonPriorConfig {
            k_max: 2,
            ..Default::default()
        };
        let layout = ShellLayout::from_prior(&prior);
        let atoms = layout.atoms();
        let nodes = NoiseNodes::new(&nm);
        let cache = AtomCache::build(&data, &nodes, &basis, &atoms);
        let mut rng = seeded_rng(3);
        let p: Vec<f64> = (0..atoms.len()).map(|_| rng.random::<f64>()).collect();
        let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let p: Vec<f64> = p.iter().map(|v| v / s).collect();
        let zeta: Vec<f64> = (0..atoms.len()).map(|_| rng.random::<f64>() * 6.0).collect();
        let q = nodes.len();
        let psi = synthesize(&basis, WilsonSeriesParams::new(3.0, atoms.clone(), p.clone(), zeta.clone()).unwrap());
        for (i, s) in data.iter().enumerate() {
            let amp: Vec<Complex64> = (0..q)
                .map(|j| {
                    (0..atoms.len())
                        .map(|a| Complex64::from_polar(p[a], zeta[a]) * cache.atom(a)[i * q + j])
                        .sum()
                })
                .collect();
            let direct = noisy_density(&psi, s.y, s.theta, &nm);
            assert!((nodes.log_likelihood(&amp, 1.0) - direct.ln()).abs() < 1e-7, "{i}: {} {}", nodes.log_likelihood(&amp, 1.0), direct.ln());
        }
    }

    #[test]
    fn prior_only_chain_keeps_unit_norm() {
        let basis = basis();
        let prior = WilsonPriorConfig::default();
        let cfg = McmcConfig {
            n_iter: 200,
            burn_in: 50,
            ..Default::default()
        };
        let chain = mcmc_wilson(&[], &NoiseModel::ideal(), &basis, &prior, &cfg, 1).unwrap();
        assert_eq!(chain.len(), 200);
        for d in &chain.draws {
            let Draw::Wilson { params } = d else { panic!() };
            let s: f64 = params.p.iter().map(|v| v * v).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_chain_is_deterministic() {
        let basis = basis();
        let nm = NoiseModel::new(0.95).unwrap();
        let data = simulate(&StateSpec::Fock2, 40, &nm, 5).unwrap();
        let prior = WilsonPriorConfig::default();
        let cfg = McmcConfig {
            n_iter: 30,
            burn_in: 10,
            ..Default::default()
        };
        let a = mcmc_wilson(&data.samples, &nm, &basis, &prior, &cfg, 9).unwrap();
        let b = mcmc_wilson(&data.samples, &nm, &basis, &prior, &cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn custom_layout_validation() {
        let a = WilsonIndex::new(0, 0);
        assert!(ShellLayout::custom(vec![vec![a], vec![a]], vec![1.0, 1.0]).is_err());
        assert!(ShellLayout::custom(vec![vec![]], vec![1.0]).is_err());
        assert!(ShellLayout::custom(vec![vec![a]], vec![1.0]).is_ok());
    }
}
