//! Priors on wave functions: the random Wilson series with a block simplex
//! law on the amplitudes, and Gamma-process mixtures of coherent states.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::exponential::integral as expint;

use crate::error::{invalid, Result};
use crate::simulate::SeededRng;
use crate::states::{unnormalized_norm, CoherentAtom, CoherentMixture};
use crate::wilson::{LambdaZ, WilsonIndex, WilsonSeriesParams};

/// Hyperparameters of the random Wilson series prior.
///
/// The truncation radius is `Z = K M` where the shell count `K` has law
/// `P(K = k) ∝ exp(-a1 k^b1)` on `1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WilsonPriorConfig {
    pub a1: f64,
    pub b1: f64,
    /// Shell width `M`.
    pub shell_width: f64,
    pub beta: f64,
    pub r: f64,
    /// Class radius `L`.
    pub l_class: f64,
    pub dirichlet_conc: f64,
    pub k_max: usize,
}

impl Default for WilsonPriorConfig {
    fn default() -> Self {
        Self {
            a1: 0.1,
            b1: 3.0,
            shell_width: 1.5,
            beta: 1.0,
            r: 0.5,
            l_class: 5.0,
            dirichlet_conc: 1.0,
            k_max: 4,
        }
    }
}

impl WilsonPriorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, f: &'static str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(f, format!("must be positive, got {v}")))
            }
        };
        pos(self.a1, "a1")?;
        pos(self.beta, "beta")?;
        pos(self.l_class, "l_class")?;
        pos(self.dirichlet_conc, "dirichlet_conc")?;
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(invalid("r", format!("must lie in (0, 1), got {}", self.r)));
        }
        if !(self.b1 > 2.0 + self.r) {
            return Err(invalid("b1", format!("must exceed 2 + r = {}", 2.0 + self.r)));
        }
        if !(self.shell_width >= 1.0) {
            return Err(invalid("shell_width", "must be at least 1 so every shell is nonempty"));
        }
        if self.k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        Ok(())
    }

    /// `log P(K = k)` including the normalizing constant.
    pub fn log_pk(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max {
            return f64::NEG_INFINITY;
        }
        let logs: Vec<f64> = (1..=self.k_max).map(|j| -self.a1 * (j as f64).powf(self.b1)).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        logs[k - 1] - lse
    }

    /// Upper end `sqrt(2) L exp(-beta (k^r - 1) M^r)` of the law of `theta_k`.
    pub fn theta_bound(&self, k: usize) -> f64 {
        std::f64::consts::SQRT_2
            * self.l_class
            * (-self.beta * ((k as f64).powf(self.r) - 1.0) * self.shell_width.powf(self.r)).exp()
    }

    /// Radius `Z = K M`.
    pub fn radius(&self, k: usize) -> f64 {
        k as f64 * self.shell_width
    }

    /// Indices of shell `k`, in `Lambda_Z` order.
    pub fn shell_indices(&self, k: usize) -> Vec<WilsonIndex> {
        LambdaZ::new(self.radius(k))
            .indices
            .into_iter()
            .filter(|i| i.shell(self.shell_width) == k)
            .collect()
    }

    /// Constant `c0` with `sum p_lm exp(beta (l^2 + m^2)^{r/2}) <= c0 Z^2` for
    /// every draw, from `p_lm <= theta_k eta_lm`, Cauchy-Schwarz within shells
    /// and the bounds on `theta_k`.
    pub fn c0(&self) -> f64 {
        let lead = (self.beta * self.shell_width.powf(self.r)).exp();
        let mut tail = 0.0;
        let mut best: f64 = 0.0;
        for k in 1..=self.k_max.max(64) {
            let root = (self.shell_indices(k).len() as f64).sqrt();
            if k == 1 {
                tail += root;
            } else {
                tail += std::f64::consts::SQRT_2 * self.l_class * root;
            }
            best = best.max(lead * tail / self.radius(k).powi(2));
        }
        best
    }
}

/// Weighted simplex statistic `sum p_lm exp(beta (l^2 + m^2)^{r/2})`.
pub fn weighted_l1(params: &WilsonSeriesParams, beta: f64, r: f64) -> f64 {
    params
        .indices
        .iter()
        .zip(&params.p)
        .map(|(i, p)| p * (beta * i.radius().powf(r)).exp())
        .sum()
}

/// Draws the shell count `K`.
pub fn sample_z(cfg: &WilsonPriorConfig, rng: &mut SeededRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for k in 1..=cfg.k_max {
        acc += cfg.log_pk(k).exp();
        if u < acc {
            return k;
        }
    }
    cfg.k_max
}

/// Square roots of a symmetric Dirichlet draw of dimension `n`.
pub(crate) fn sqrt_dirichlet(n: usize, conc: f64, rng: &mut SeededRng) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let w: Vec<f64> = (0..n).map(|_| gamma_draw(conc, rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| (v / s).sqrt()).collect()
}

/// Block simplex draw over `Lambda_{K M}`: `p_lm = theta_k eta_lm / sqrt(sum theta_k^2)`.
pub fn sample_block_simplex(cfg: &WilsonPriorConfig, k: usize, rng: &mut SeededRng) -> (Vec<WilsonIndex>, Vec<f64>) {
    let mut thetas = vec![1.0];
    for j in 2..=k {
        thetas.push(rng.random::<f64>() * cfg.theta_bound(j));
    }
    let scale = thetas.iter().map(|t| t * t).sum::<f64>().sqrt();
    let mut indices = Vec::new();
    let mut p = Vec::new();
    for (j, th) in thetas.iter().enumerate() {
        let shell = cfg.shell_indices(j + 1);
        let eta = sqrt_dirichlet(shell.len(), cfg.dirichlet_conc, rng);
        indices.extend(shell);
        p.extend(eta.into_iter().map(|e| e * th / scale));
    }
    // Restore Lambda_Z ordering.
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by_key(|&i| indices[i]);
    let indices = order.iter().map(|&i| indices[i]).collect();
    let p: Vec<f64> = order.iter().map(|&i| p[i]).collect();
    let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    (indices, p.into_iter().map(|v| v / s).collect())
}

/// Full draw `(Z, p, zeta)` from the Wilson prior.
pub fn sample_wilson_prior(cfg: &WilsonPriorConfig, rng: &mut SeededRng) -> WilsonSeriesParams {
    let k = sample_z(cfg, rng);
    let (indices, p) = sample_block_simplex(cfg, k, rng);
    let zeta = (0..p.len()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    WilsonSeriesParams {
        z: cfg.radius(k),
        indices,
        p,
        zeta,
    }
}

/// Gamma-process mixture of coherent states with base measure
/// `alpha0 * N(0, diag(1/2, 1/2)) x U[0, 2 pi]`, truncated to `truncation` jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaMixtureConfig {
    pub alpha0: f64,
    pub truncation: usize,
    pub location_var: f64,
}

impl Default for GammaMixtureConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            truncation: 50,
            location_var: 0.5,
        }
    }
}

impl GammaMixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(invalid("alpha0", "total mass must be positive"));
        }
        if self.truncation == 0 {
            return Err(invalid("truncation", "need at least one atom"));
        }
        if !(self.location_var > 0.0) {
            return Err(invalid("location_var", "must be positive"));
        }
        Ok(())
    }
}

/// Draw from the Gamma-process prior.
#[derive(Debug, Clone)]
pub struct GammaMixtureDraw {
    pub mixture: CoherentMixture,
    /// Expected mass of the jumps beyond the truncation, `alpha0 (1 - e^{-w_J})`.
    pub deficit: f64,
}

/// Solves `alpha0 E1(w) = level` for the jump size `w`.
fn inverse_levy_tail(alpha0: f64, level: f64) -> f64 {
    let tail = |w: f64| alpha0 * expint(w, 1).unwrap_or(0.0);
    let (mut lo, mut hi) = (-745.0f64, 5.0f64.ln() + 3.0);
    if tail(lo.exp()) < level {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid.exp()) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Decreasing jumps `w_j = N^{-1}(Gamma_j)` of a Gamma process with total
/// mass `alpha0`, where `N(w) = alpha0 E1(w)` is its Levy tail.
pub fn ferguson_klass_jumps(alpha0: f64, count: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut arrival = 0.0;
    (0..count)
        .map(|_| {
            arrival += -(1.0 - rng.random::<f64>()).ln();
            inverse_levy_tail(alpha0, arrival)
        })
        .collect()
}

/// Location and phase drawn from the normalized base measure.
pub(crate) fn base_atom(cfg: &GammaMixtureConfig, weight: f64, rng: &mut SeededRng) -> CoherentAtom {
    let sd = cfg.location_var.sqrt();
    let x: f64 = StandardNormal.sample(rng);
    let w: f64 = StandardNormal.sample(rng);
    CoherentAtom {
        weight,
        x: sd * x,
        omega: sd * w,
        phase: rng.random::<f64>() * 2.0 * PI,
    }
}

pub fn sample_gamma_mixture(cfg: &GammaMixtureConfig, rng: &mut SeededRng) -> Result<GammaMixtureDraw> {
    cfg.validate()?;
    let jumps = ferguson_klass_jumps(cfg.alpha0, cfg.truncation, rng);
    let mut atoms: Vec<CoherentAtom> = jumps.iter().map(|w| base_atom(cfg, *w, rng)).collect();
    // All jumps can underflow when alpha0 is tiny; keep the first atom alive.
    if atoms.iter().all(|a| a.weight == 0.0) {
        atoms[0].weight = f64::MIN_POSITIVE;
    }
    let last = *jumps.last().expect("truncation >= 1");
    let deficit = cfg.alpha0 * (-(-last).exp_m1());
    if unnormalized_norm(&atoms) <= 1e-8 {
        // Rescale: only the direction matters once normalized.
        let s: f64 = atoms.iter().map(|a| a.weight).sum();
        for a in &mut atoms {
            a.weight /= s;
        }
    }
    Ok(GammaMixtureDraw {
        mixture: CoherentMixture::new(atoms)?,
        deficit,
    })
}

/// Log density of a `Gamma(shape, 1)` variable.
pub(crate) fn ln_gamma_density(w: f64, shape: f64) -> f64 {
    if w <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * w.ln() - w - statrs::function::gamma::ln_gamma(shape)
}

/// Draws from `Gamma(shape, 1)`.
pub(crate) fn gamma_draw(shape: f64, rng: &mut SeededRng) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::seeded_rng;

    #[test]
    fn shell_law() {
        let cfg = WilsonPriorConfig {
            a1: 1.0,
            ..Default::default()
        };
        let ratio = (cfg.log_pk(1) - cfg.log_pk(2)).exp();
        assert!((ratio - 7f64.exp()).abs() < 1e-6 * 7f64.exp());
        let total: f64 = (1..=cfg.k_max).map(|k| cfg.log_pk(k).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(WilsonPriorConfig::default().validate().is_ok());
        let bad = WilsonPriorConfig {
            b1: 2.4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(GammaMixtureConfig {
            alpha0: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn shells_partition_lambda() {
        let cfg = WilsonPriorConfig::default();
        for k in 1..=4 {
            let n: usize = (1..=k).map(|j| cfg.shell_indices(j).len()).sum();
            assert_eq!(n, LambdaZ::new(cfg.radius(k)).len());
        }
        assert_eq!(cfg.shell_indices(1).len(), 10);
    }

    #[test]
    fn draws_lie_on_simplex() {
        let cfg = WilsonPriorConfig::default();
        let mut rng = seeded_rng(11);
        let c0 = cfg.c0();
        for _ in 0..200 {
            let d = sample_wilson_prior(&cfg, &mut rng);
            let s: f64 = d.p.iter().map(|v| v * v).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(weighted_l1(&d, cfg.beta, cfg.r) <= c0 * d.z * d.z);
            assert_eq!(d.indices, LambdaZ::new(d.z).indices);
        }
    }

    #[test]
    fn single_shell_is_sqrt_dirichlet() {
        let cfg = WilsonPriorConfig::default();
        let mut a = seeded_rng(5);
        let mut b = seeded_rng(5);
        let (_, p) = sample_block_simplex(&cfg, 1, &mut a);
        let eta = sqrt_dirichlet(cfg.shell_indices(1).len(), cfg.dirichlet_conc, &mut b);
        for (x, y) in p.iter().zip(&eta) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn levy_inverse() {
        for level in [0.1, 1.0, 5.0, 30.0] {
            let w = inverse_levy_tail(2.0, level);
            assert!((2.0 * expint(w, 1).unwrap() - level).abs() < 1e-9 * level);
        }
    }

    #[test]
    fn single_atom_mixture_is_coherent() {
        let cfg = GammaMixtureConfig {
            truncation: 1,
            ..Default::default()
        };
        let mut rng = seeded_rng(2);
        let d = sample_gamma_mixture(&cfg, &mut rng).unwrap();
        let a = d.mixture.atoms()[0];
        let psi = crate::states::WaveFunction::CoherentMixture(d.mixture.clone());
        let coh = crate::states::WaveFunction::coherent(a.x, a.omega);
        let g = crate::grid::Grid1D::symmetric(12.0, 6001).unwrap();
        assert!((crate::states::inner_product(&psi, &coh, &g).norm() - 1.0).abs() < 1e-6);
    }
}
