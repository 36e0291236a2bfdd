//! Orthonormal Wilson basis of exponential decay.
//!
//! The window is the canonical tight window of the Gabor system
//! `{M_k T_{n/2} g}` generated by a Gaussian `g`. Its frame operator is
//! diagonal in the Zak domain (period 1), with symbol
//! `|Z g(x, xi)|^2 + |Z g(x - 1/2, xi)|^2`, so the tight window is obtained by
//! dividing `Z g` by the square root of that symbol and inverting the Zak
//! transform. Atoms are
//!
//! ```text
//! phi_{0,m}(x) = phi(x - 2m)
//! phi_{l,m}(x) = sqrt(2) phi(x - m) cos(2 pi l x)   if 2m + l is even
//!              = sqrt(2) phi(x - m) sin(2 pi l x)   otherwise
//! ```
//!
//! with `l >= 1` and `m` a half-integer.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::frft_samples;
use crate::grid::Grid1D;
use crate::numerics::{cis_pi, fourier_sum, inverse_dft, UniformTable};
use crate::states::{WaveFunction, WilsonState};

/// Gram tolerance enforced by [`WilsonBasis::build_window`].
pub const GRAM_TOLERANCE: f64 = 1e-5;

/// Values of the window below this are treated as zero when sizing supports.
const NEGLIGIBLE: f64 = 1e-15;

/// Index `(l, m)` with `m` stored as the integer `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WilsonIndex {
    pub l: u32,
    pub two_m: i32,
}

impl WilsonIndex {
    pub const fn new(l: u32, two_m: i32) -> Self {
        Self { l, two_m }
    }

    pub fn m(&self) -> f64 {
        0.5 * self.two_m as f64
    }

    /// `sqrt(l^2 + m^2)`.
    pub fn radius(&self) -> f64 {
        (self.l as f64).hypot(self.m())
    }

    /// Translation of the window: `2m` for `l = 0`, `m` otherwise.
    pub fn shift(&self) -> f64 {
        if self.l == 0 {
            self.two_m as f64
        } else {
            self.m()
        }
    }

    /// Cosine atom (as opposed to sine).
    pub fn is_cosine(&self) -> bool {
        (self.two_m + self.l as i32).rem_euclid(2) == 0
    }

    /// Shell `k >= 1` with `(k - 1) M <= sqrt(l^2 + m^2) < k M`.
    pub fn shell(&self, width: f64) -> usize {
        (self.radius() / width).floor() as usize + 1
    }

    /// Expansion `atom = sum c_j M_{omega_j} T_{x_j} phi`; the second term is
    /// absent for `l = 0`.
    pub fn tf_terms(&self) -> ([(Complex64, f64, f64); 2], usize) {
        let zero = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        if self.l == 0 {
            return ([(Complex64::new(1.0, 0.0), self.shift(), 0.0), zero], 1);
        }
        let (x, w) = (self.m(), self.l as f64);
        let c = FRAC_1_SQRT_2;
        if self.is_cosine() {
            ([(Complex64::new(c, 0.0), x, w), (Complex64::new(c, 0.0), x, -w)], 2)
        } else {
            ([(Complex64::new(0.0, -c), x, w), (Complex64::new(0.0, c), x, -w)], 2)
        }
    }
}

/// Spherical index array `{(l, m) : l^2 + m^2 < Z^2}`, ordered by `(l, 2m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaZ {
    pub z: f64,
    pub indices: Vec<WilsonIndex>,
}

impl LambdaZ {
    pub fn new(z: f64) -> Self {
        let mut indices = Vec::new();
        if z > 0.0 {
            let z2 = z * z;
            let lmax = z.ceil() as u32;
            for l in 0..=lmax {
                let mmax = (2.0 * z).ceil() as i32;
                for two_m in -mmax..=mmax {
                    let idx = WilsonIndex::new(l, two_m);
                    if idx.radius().powi(2) < z2 {
                        indices.push(idx);
                    }
                }
            }
        }
        Self { z, indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Wilson-series parameters `(Z, p, zeta)`: `psi = sum p_lm e^{i zeta_lm} phi_lm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonSeriesParams {
    pub z: f64,
    pub indices: Vec<WilsonIndex>,
    pub p: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl WilsonSeriesParams {
    pub fn new(z: f64, indices: Vec<WilsonIndex>, p: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        if indices.len() != p.len() || p.len() != zeta.len() {
            return Err(invalid("p", "indices, amplitudes and phases must have equal length"));
        }
        if p.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("p", "amplitudes must be nonnegative"));
        }
        let s: f64 = p.iter().map(|v| v * v).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid("p", format!("sum of squares is {s}, not 1")));
        }
        Ok(Self { z, indices, p, zeta })
    }

    /// Parameters over the full array `Lambda_Z`.
    pub fn over_lambda(z: f64, p: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        Self::new(z, LambdaZ::new(z).indices, p, zeta)
    }

    /// Single atom with unit amplitude.
    pub fn single(idx: WilsonIndex, zeta: f64) -> Self {
        Self {
            z: idx.radius() + 0.5,
            indices: vec![idx],
            p: vec![1.0],
            zeta: vec![zeta],
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.p.iter().zip(&self.zeta).map(|(p, z)| Complex64::from_polar(*p, *z)).collect()
    }

    pub fn max_shift(&self) -> f64 {
        self.indices.iter().map(|i| i.shift().abs()).fold(0.0, f64::max)
    }

    pub fn max_frequency(&self) -> f64 {
        self.indices.iter().map(|i| i.l as f64).fold(0.0, f64::max)
    }
}

/// Window table plus derived support information.
#[derive(Debug, Clone)]
pub struct WilsonBasis {
    window: UniformTable<f64>,
    /// Samples per unit length; every half-integer shift lands on a node.
    per_unit: usize,
    radius: f64,
    band: f64,
    raw_norm: f64,
    decay: (f64, f64),
}

impl WilsonBasis {
    /// Window on `[-16, 16]` sampled at 256 points per unit.
    pub fn standard() -> Result<Self> {
        Self::build_window(&Grid1D::symmetric(16.0, 32 * 256 + 1)?)
    }

    /// Builds the tight window at the resolution of `resolution`.
    pub fn build_window(resolution: &Grid1D) -> Result<Self> {
        if resolution.min > -12.0 || resolution.max < 12.0 {
            return Err(Error::InvalidGrid(format!(
                "window grid [{}, {}] must span [-12, 12]",
                resolution.min, resolution.max
            )));
        }
        let half = resolution.min.abs().max(resolution.max).ceil() as i64;
        let mut per_unit = ((1.0 / resolution.spacing()).round() as usize).max(64);
        per_unit += per_unit % 2;
        let (values, raw_norm) = tight_window(half, per_unit);
        let window = UniformTable::new(-(half as f64), 1.0 / per_unit as f64, values);

        let peak = window.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = window.values.iter().rposition(|v| v.abs() > NEGLIGIBLE * peak).unwrap_or(0);
        let radius = ((window.node(last).abs() * 2.0).ceil() / 2.0).max(1.0);
        let band = window_band(&window, radius);
        let decay = fit_decay(&window, per_unit);
        let basis = Self {
            window,
            per_unit,
            radius,
            band,
            raw_norm,
            decay,
        };
        let dev = basis.gram_deviation(4.0);
        if dev > GRAM_TOLERANCE {
            return Err(Error::ConstructionFailed {
                deviation: dev,
                limit: GRAM_TOLERANCE,
            });
        }
        Ok(basis)
    }

    /// `phi(x)`.
    #[inline]
    pub fn window(&self, x: f64) -> f64 {
        if x.abs() > self.radius {
            return 0.0;
        }
        self.window.eval(x)
    }

    pub fn window_table(&self) -> &UniformTable<f64> {
        &self.window
    }

    /// `|phi(x)|` is below `1e-15 max |phi|` outside this radius.
    pub fn window_radius(&self) -> f64 {
        self.radius
    }

    /// Effective bandwidth of the window.
    pub fn frequency_radius(&self) -> f64 {
        self.band
    }

    /// Norm of the tight window (frame bound 2) before rescaling; close to 1.
    pub fn raw_norm(&self) -> f64 {
        self.raw_norm
    }

    /// Fitted envelope `|phi(x)| <= C e^{-a |x|}` as `(C, a)`.
    pub fn decay(&self) -> (f64, f64) {
        self.decay
    }

    /// Piecewise (real) form of the atom.
    #[inline]
    pub fn atom(&self, idx: WilsonIndex, x: f64) -> f64 {
        let w = self.window(x - idx.shift());
        if idx.l == 0 || w == 0.0 {
            return w;
        }
        let arg = 2.0 * idx.l as f64 * x;
        // Reduce the argument so large x keeps full precision.
        let r = arg.rem_euclid(2.0);
        let trig = if idx.is_cosine() { (PI * r).cos() } else { (PI * r).sin() };
        SQRT_2 * w * trig
    }

    /// Operator form `2^{-1/2} T_m (M_l + (-1)^{2m+l} M_{-l}) phi` for `l >= 1`
    /// (and `T_{2m} phi` for `l = 0`).
    pub fn atom_operator_form(&self, idx: WilsonIndex, x: f64) -> Complex64 {
        if idx.l == 0 {
            return Complex64::new(self.window(x - idx.shift()), 0.0);
        }
        let m = idx.m();
        let l = idx.l as f64;
        let sign = if (idx.two_m + idx.l as i32).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let w = self.window(x - m);
        (cis_pi(2.0 * l * (x - m)) + cis_pi(-2.0 * l * (x - m)) * sign) * (w * FRAC_1_SQRT_2)
    }

    /// Unimodular factor `u` with `operator_form = u * atom`.
    pub fn operator_form_factor(idx: WilsonIndex) -> Complex64 {
        if idx.l == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let sign = if (idx.l as i64 * idx.two_m as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        if idx.is_cosine() {
            Complex64::new(sign, 0.0)
        } else {
            Complex64::new(0.0, sign)
        }
    }

    /// `sum p e^{i zeta} phi_lm(x)`.
    pub fn eval_series(&self, params: &WilsonSeriesParams, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((idx, p), z) in params.indices.iter().zip(&params.p).zip(&params.zeta) {
            if (x - idx.shift()).abs() > self.radius || *p == 0.0 {
                continue;
            }
            acc += Complex64::from_polar(*p, *z) * self.atom(*idx, x);
        }
        acc
    }

    /// Samples of an atom at the aligned nodes `j / per_unit`, `j in [j0, j0 + len)`.
    fn atom_samples(&self, idx: WilsonIndex) -> (i64, Vec<f64>) {
        let pu = self.per_unit as i64;
        let shift_nodes = (idx.shift() * pu as f64).round() as i64;
        let r_nodes = (self.radius * pu as f64).round() as i64;
        let w0 = (self.window.start * pu as f64).round() as i64;
        let j0 = shift_nodes - r_nodes;
        let vals = (j0..=shift_nodes + r_nodes)
            .map(|j| {
                let wv = self.window.values[(j - shift_nodes - w0) as usize];
                if idx.l == 0 {
                    return wv;
                }
                let arg = (2 * idx.l as i64 * j).rem_euclid(2 * pu) as f64 / pu as f64;
                let trig = if idx.is_cosine() { (PI * arg).cos() } else { (PI * arg).sin() };
                SQRT_2 * wv * trig
            })
            .collect();
        (j0, vals)
    }

    /// Gram matrix of the atoms by trapezoid sums on the window nodes.
    pub fn gram(&self, indices: &[WilsonIndex]) -> DMatrix<f64> {
        let samples: Vec<(i64, Vec<f64>)> = indices.iter().map(|i| self.atom_samples(*i)).collect();
        let h = 1.0 / self.per_unit as f64;
        let n = indices.len();
        let mut g = DMatrix::<f64>::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let (ja, va) = &samples[a];
                let (jb, vb) = &samples[b];
                let lo = (*ja).max(*jb);
                let hi = (ja + va.len() as i64).min(jb + vb.len() as i64);
                let mut s = 0.0;
                for j in lo..hi {
                    s += va[(j - ja) as usize] * vb[(j - jb) as usize];
                }
                g[(a, b)] = s * h;
                g[(b, a)] = s * h;
            }
        }
        g
    }

    /// Largest entrywise deviation of the Gram matrix on `Lambda_Z` from the identity.
    pub fn gram_deviation(&self, z: f64) -> f64 {
        let lz = LambdaZ::new(z);
        let g = self.gram(&lz.indices);
        let mut dev: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - target).abs());
            }
        }
        dev
    }

    /// `F_theta phi` tabulated at the output step of the numeric transform.
    pub fn window_transform(&self, theta: f64) -> UniformTable<Complex64> {
        let pu = self.per_unit as i64;
        let r_nodes = (self.radius * pu as f64).round() as i64;
        let w0 = (self.window.start * pu as f64).round() as i64;
        let samples: Vec<Complex64> = (-r_nodes..=r_nodes)
            .map(|j| Complex64::new(self.window.values[(j - w0) as usize], 0.0))
            .collect();
        let h = 1.0 / self.per_unit as f64;
        frft_samples(&samples, -self.radius, h, self.band, theta, self.radius.hypot(self.band) + 1.0)
    }
}

/// Synthesizes `sum p e^{i zeta} phi_lm`.
pub fn synthesize(basis: &Arc<WilsonBasis>, params: WilsonSeriesParams) -> WaveFunction {
    WaveFunction::WilsonSeries(WilsonState {
        params,
        basis: Arc::clone(basis),
    })
}

/// Coefficients `<psi, phi_lm>` over `Lambda_Z`.
pub fn analyze(basis: &WilsonBasis, psi: &WaveFunction, z: f64) -> Vec<(WilsonIndex, Complex64)> {
    let lz = LambdaZ::new(z);
    if lz.is_empty() {
        return Vec::new();
    }
    let pu = basis.per_unit as i64;
    let h = 1.0 / pu as f64;
    let samples: Vec<(i64, Vec<f64>)> = lz.indices.iter().map(|i| basis.atom_samples(*i)).collect();
    let lo = samples.iter().map(|s| s.0).min().unwrap_or(0);
    let hi = samples.iter().map(|s| s.0 + s.1.len() as i64).max().unwrap_or(0);
    let sampler = psi.sampler();
    let values: Vec<Complex64> = (lo..hi).map(|j| sampler.eval(j as f64 * h)).collect();
    lz.indices
        .iter()
        .zip(&samples)
        .map(|(idx, (j0, v))| {
            let off = (j0 - lo) as usize;
            let c: Complex64 = v.iter().enumerate().map(|(k, a)| values[off + k] * *a).sum();
            (*idx, c * h)
        })
        .collect()
}

/// Unit-norm truncation `psi_Z = psi~_Z / ||psi~_Z||` of the Wilson expansion.
pub fn truncate_normalize(basis: &Arc<WilsonBasis>, psi: &WaveFunction, z: f64) -> Result<WaveFunction> {
    let coeffs = analyze(basis, psi, z);
    let norm = coeffs.iter().map(|c| c.1.norm_sqr()).sum::<f64>().sqrt();
    if !(norm >= 1e-8) {
        return Err(Error::DegenerateTruncation { norm });
    }
    let indices = coeffs.iter().map(|c| c.0).collect();
    let p: Vec<f64> = coeffs.iter().map(|c| c.1.norm() / norm).collect();
    let s: f64 = p.iter().map(|v| v * v).sum();
    let p = p.into_iter().map(|v| v / s.sqrt()).collect();
    let zeta = coeffs.iter().map(|c| c.1.arg().rem_euclid(2.0 * PI)).collect();
    Ok(synthesize(basis, WilsonSeriesParams::new(z, indices, p, zeta)?))
}

/// Seed window `exp(-2 pi x^2)`. Its time and frequency spreads are in the
/// same 1 : 2 ratio as the lattice steps, which balances the decay of the
/// tight window in time and frequency.
fn seed(x: f64) -> f64 {
    (-2.0 * PI * x * x).exp()
}

/// Tight window on `[-half, half]` with `per_unit` samples per unit, and the
/// norm it had before rescaling.
fn tight_window(half: i64, per_unit: usize) -> (Vec<f64>, f64) {
    let n_xi = ((2 * half + 16) as usize).next_power_of_two().max(64);
    let reach = 9i64;
    let zak = |x: f64, xi: f64| -> Complex64 {
        (-reach..=reach)
            .map(|k| seed(x + k as f64) * cis_pi(-2.0 * k as f64 * xi))
            .sum()
    };
    let n = 2 * half as usize * per_unit + 1;
    let mut values = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_xi];
    for i in 0..per_unit {
        let x = i as f64 / per_unit as f64;
        for (q, b) in buf.iter_mut().enumerate() {
            let xi = q as f64 / n_xi as f64;
            let z1 = zak(x, xi);
            let z2 = zak(x - 0.5, xi);
            let symbol = z1.norm_sqr() + z2.norm_sqr();
            *b = z1 * (SQRT_2 / symbol.sqrt());
        }
        inverse_dft(&mut buf);
        for k in -half..half {
            let pos = ((k + half) as usize) * per_unit + i;
            values[pos] = buf[k.rem_euclid(n_xi as i64) as usize].re / n_xi as f64;
        }
    }
    // Last node x = half.
    values[n - 1] = values[0];
    let h = 1.0 / per_unit as f64;
    let norm = (values.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    for v in &mut values {
        *v /= norm;
    }
    (values, norm)
}

/// Frequency beyond which `|phi^|` is negligible.
fn window_band(window: &UniformTable<f64>, radius: f64) -> f64 {
    let h = window.step;
    let w0 = (window.start / h).round() as i64;
    let r_nodes = (radius / h).round() as i64;
    let samples: Vec<Complex64> = (-r_nodes..=r_nodes)
        .map(|j| Complex64::new(window.values[(j - w0) as usize], 0.0))
        .collect();
    let dnu = 1.0 / 16.0;
    let m = 40 * 16 + 1;
    let hat = fourier_sum(&samples, -radius, h, 0.0, dnu, m, 1.0);
    let peak = hat.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let last = hat.iter().rposition(|v| v.norm() > 1e-14 * peak).unwrap_or(m - 1);
    ((last as f64 * dnu * 2.0).ceil() / 2.0 + 1.0).max(2.0)
}

/// Least-squares fit of `log max_{[k, k+1)} |phi|` against `k` over `k in [3, 8)`.
fn fit_decay(window: &UniformTable<f64>, per_unit: usize) -> (f64, f64) {
    let peak = window.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pts = Vec::new();
    for k in 3..8 {
        let mut env: f64 = 0.0;
        for s in [-1.0, 1.0] {
            for i in 0..per_unit {
                let x = s * (k as f64 + i as f64 / per_unit as f64);
                env = env.max(window.eval(x).abs());
            }
        }
        if env > 1e-13 * peak {
            pts.push((k as f64, env.ln()));
        }
    }
    if pts.len() < 2 {
        // Decay is faster than the fit window resolves; fit on the first unit interval instead.
        let e1 = (1..per_unit).map(|i| window.eval(1.0 + i as f64 / per_unit as f64).abs()).fold(0.0, f64::max);
        let e2 = (1..per_unit).map(|i| window.eval(2.0 + i as f64 / per_unit as f64).abs()).fold(0.0, f64::max);
        let a = (e1 / e2).ln();
        return (e1 * a.exp(), a);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Shift the intercept so the line bounds every fitted point.
    let lift = pts.iter().map(|p| p.1 - (intercept + slope * p.0)).fold(0.0, f64::max);
    ((intercept + lift).exp(), -slope)
}
