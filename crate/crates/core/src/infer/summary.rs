//! Posterior summaries computed in Wilson coordinates.
//!
//! Every retained draw is represented by its coefficient vector over a common
//! index set. Wilson draws are represented exactly; mixture draws are
//! projected on `Lambda_Z` with `Z = MIXTURE_PROJECTION_RADIUS`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{Chain, Draw};
use crate::error::{invalid, Result};
use crate::forward::tf_shift;
use crate::grid::{Grid1D, Grid2D};
use crate::states::{wigner_ensemble_unchecked, WaveFunction, WignerGrid};
use crate::wilson::{analyze, synthesize, LambdaZ, WilsonBasis, WilsonIndex, WilsonSeriesParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Radius of the index set mixture draws are projected on.
pub const MIXTURE_PROJECTION_RADIUS: f64 = 8.0;

/// Eigenvalues of the mean density matrix below this fraction of its trace
/// are dropped from the Wigner average.
const EIGEN_CUTOFF: f64 = 1e-12;

/// Retained draws as coefficient vectors over a shared index set.
#[derive(Debug, Clone)]
pub struct CoefficientDraws {
    pub indices: Vec<WilsonIndex>,
    pub coeffs: Vec<Vec<Complex64>>,
    pub log_posterior: Vec<f64>,
    /// Largest `1 - sum |c|^2` over draws (zero for Wilson chains).
    pub projection_loss: f64,
}

impl CoefficientDraws {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn radius(&self) -> f64 {
        self.indices.iter().map(|i| i.radius()).fold(0.0, f64::max) + 0.5
    }

    /// Unit-norm Wilson state from an arbitrary coefficient vector.
    fn state(&self, basis: &Arc<WilsonBasis>, c: &[Complex64]) -> Result<WaveFunction> {
        let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(invalid("coefficients", "zero vector"));
        }
        let p: Vec<f64> = c.iter().map(|v| v.norm() / norm).collect();
        let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let params = WilsonSeriesParams::new(
            self.radius(),
            self.indices.clone(),
            p.into_iter().map(|v| v / s).collect(),
            c.iter().map(|v| v.arg().rem_euclid(2.0 * PI)).collect(),
        )?;
        Ok(synthesize(basis, params))
    }
}

/// Coefficient vectors of the retained draws.
pub fn coefficient_draws(chain: &Chain, basis: &WilsonBasis) -> Result<CoefficientDraws> {
    let draws = chain.retained();
    if draws.is_empty() {
        return Err(invalid("chain", "no draws after burn-in"));
    }
    let log_posterior = chain.retained_log_posterior().to_vec();
    let wilson = draws.iter().all(|d| matches!(d, Draw::Wilson { .. }));
    if wilson {
        let mut indices: Vec<WilsonIndex> = draws
            .iter()
            .flat_map(|d| match d {
                Draw::Wilson { params } => params.indices.clone(),
                Draw::Mixture { .. } => unreachable!(),
            })
            .collect();
        indices.sort();
        indices.dedup();
        let coeffs = draws
            .iter()
            .map(|d| {
                let Draw::Wilson { params } = d else { unreachable!() };
                let mut c = vec![ZERO; indices.len()];
                for ((idx, p), z) in params.indices.iter().zip(&params.p).zip(&params.zeta) {
                    let pos = indices.binary_search(idx).expect("index collected above");
                    c[pos] = Complex64::from_polar(*p, *z);
                }
                c
            })
            .collect();
        return Ok(CoefficientDraws {
            indices,
            coeffs,
            log_posterior,
            projection_loss: 0.0,
        });
    }
    let indices = LambdaZ::new(MIXTURE_PROJECTION_RADIUS).indices;
    let coeffs: Vec<Vec<Complex64>> = draws
        .par_iter()
        .map(|d| -> Result<Vec<Complex64>> {
            let Draw::Mixture { atoms } = d else {
                return Err(invalid("chain", "mixed draw kinds"));
            };
            let psi = WaveFunction::CoherentMixture(crate::states::CoherentMixture::new(atoms.clone())?);
            Ok(analyze(basis, &psi, MIXTURE_PROJECTION_RADIUS).into_iter().map(|c| c.1).collect())
        })
        .collect::<Result<_>>()?;
    let projection_loss = coeffs
        .iter()
        .map(|c| 1.0 - c.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(CoefficientDraws {
        indices,
        coeffs,
        log_posterior,
        projection_loss,
    })
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Posterior mean wave function: draws are phase-aligned to the retained draw
/// with the highest log-posterior, averaged, and renormalized.
pub fn posterior_mean_state(chain: &Chain, basis: &Arc<WilsonBasis>) -> Result<WaveFunction> {
    let cd = coefficient_draws(chain, basis)?;
    let best = cd
        .log_posterior
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > cd.log_posterior[b] { i } else { b });
    let reference = &cd.coeffs[best];
    let mut mean = vec![ZERO; cd.indices.len()];
    for c in &cd.coeffs {
        let ip = dot(c, reference);
        let align = if ip.norm() > 0.0 { ip.conj() / ip.norm() } else { Complex64::new(1.0, 0.0) };
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v * align;
        }
    }
    cd.state(basis, &mean)
}

/// Phase-aligned L2 distance of every retained draw to `truth`.
pub fn draw_errors(chain: &Chain, basis: &Arc<WilsonBasis>, truth: &WaveFunction) -> Result<Vec<f64>> {
    let cd = coefficient_draws(chain, basis)?;
    let d: Vec<Complex64> = analyze(basis, truth, cd.radius())
        .into_iter()
        .filter(|(i, _)| cd.indices.binary_search(i).is_ok())
        .map(|c| c.1)
        .collect();
    debug_assert_eq!(d.len(), cd.indices.len());
    Ok(cd
        .coeffs
        .iter()
        .map(|c| {
            let n = c.iter().map(|v| v.norm_sqr()).sum::<f64>();
            (1.0 + n - 2.0 * dot(c, &d).norm()).max(0.0).sqrt()
        })
        .collect())
}

/// Pointwise average of the Wigner functions of the retained draws.
///
/// The average equals the Wigner function of the mean density matrix
/// `(1/T) sum c_t c_t^*`, which is diagonalized so only its significant
/// eigenvectors are transformed.
pub fn posterior_mean_wigner(chain: &Chain, grid: &Grid2D, basis: &Arc<WilsonBasis>) -> Result<WignerGrid> {
    let cd = coefficient_draws(chain, basis)?;
    let n = cd.indices.len();
    let t = cd.len() as f64;
    let mut rho = DMatrix::<Complex64>::zeros(n, n);
    for c in &cd.coeffs {
        for j in 0..n {
            if c[j] == ZERO {
                continue;
            }
            for k in 0..n {
                rho[(j, k)] += c[j] * c[k].conj();
            }
        }
    }
    rho /= Complex64::new(t, 0.0);
    let trace: f64 = (0..n).map(|j| rho[(j, j)].re).sum();
    let eig = rho.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut members: Vec<(f64, WaveFunction)> = Vec::new();
    for &j in &order {
        let lambda = eig.eigenvalues[j];
        if !(lambda > EIGEN_CUTOFF * trace) {
            break;
        }
        let v: Vec<Complex64> = eig.eigenvectors.column(j).iter().copied().collect();
        members.push((lambda, cd.state(basis, &v)?));
    }
    let refs: Vec<(f64, &WaveFunction)> = members.iter().map(|(w, s)| (*w, s)).collect();
    Ok(wigner_ensemble_unchecked(&refs, grid))
}

/// Pointwise sup-norm credible band for the marginal density at angle `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBands {
    pub theta: f64,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub retained: usize,
}

/// `F_theta phi_a` on `xs` for every index.
fn atom_transforms(basis: &WilsonBasis, indices: &[WilsonIndex], theta: f64, xs: &[f64]) -> Vec<Vec<Complex64>> {
    let table = basis.window_transform(theta);
    indices
        .iter()
        .map(|idx| {
            let (terms, count) = idx.tf_terms();
            xs.iter()
                .map(|&x| {
                    terms[..count]
                        .iter()
                        .map(|(c, x0, w0)| {
                            let (shift, phase) = tf_shift(x, theta, *x0, *w0);
                            c * phase * table.eval(x - shift)
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Ranks draws by the sup-norm distance of their marginal `|F_theta psi_t|^2`
/// to the mean curve, keeps the closest `ceil(level T)` and returns their
/// pointwise envelope.
pub fn credible_bands(
    chain: &Chain,
    basis: &WilsonBasis,
    theta: f64,
    grid: &Grid1D,
    level: f64,
) -> Result<CredibleBands> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(invalid("level", "must lie in (0, 1]"));
    }
    let cd = coefficient_draws(chain, basis)?;
    let xs = grid.points();
    let f = atom_transforms(basis, &cd.indices, theta, &xs);
    let curves: Vec<Vec<f64>> = cd
        .coeffs
        .par_iter()
        .map(|c| {
            (0..xs.len())
                .map(|i| {
                    let mut a = ZERO;
                    for (ca, fa) in c.iter().zip(&f) {
                        if *ca != ZERO {
                            a += ca * fa[i];
                        }
                    }
                    a.norm_sqr()
                })
                .collect()
        })
        .collect();
    let t = curves.len();
    let mut mean = vec![0.0; xs.len()];
    for c in &curves {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= t as f64;
    }
    let dist: Vec<f64> = curves
        .iter()
        .map(|c| c.iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b)));
    let keep = ((level * t as f64) - 1e-9).ceil().clamp(1.0, t as f64) as usize;
    let mut lower = vec![f64::INFINITY; xs.len()];
    let mut upper = vec![f64::NEG_INFINITY; xs.len()];
    for &k in &order[..keep] {
        for (i, v) in curves[k].iter().enumerate() {
            lower[i] = lower[i].min(*v);
            upper[i] = upper[i].max(*v);
        }
    }
    Ok(CredibleBands {
        theta,
        x: xs,
        mean,
        lower,
        upper,
        retained: keep,
    })
}
