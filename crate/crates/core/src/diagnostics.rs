//! Numeric checks of the quantities behind the contraction theory: STFT,
//! smoothness-class norms, Hellinger bounds, Fourier decay of Wigner
//! functions and tail masses of the noisy observations.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::forward::{NoiseModel, QuadratureProfile};
use crate::grid::{Grid1D, Grid2D};
use crate::numerics::fourier_sum;
use crate::states::{phase_aligned_distance, vacuum_wigner, WaveFunction};
use crate::wilson::{synthesize, WilsonBasis, WilsonIndex, WilsonSeriesParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Step of the `t` quadrature in STFT evaluations.
pub const STFT_STEP: f64 = 1.0 / 256.0;
/// Half-width and resolution of the phase-space quadrature.
pub const CLASS_HALF_WIDTH: f64 = 10.0;
pub const CLASS_POINTS: usize = 1001;
/// Largest relative change between the `[-8, 8]^2` and `[-10, 10]^2`
/// integrals accepted by the tail check.
pub const TAIL_TOLERANCE: f64 = 1e-3;
/// Phase nodes of the Hellinger quadrature over `[0, pi)`.
pub const HELLINGER_THETAS: usize = 64;
/// Spatial step of the Hellinger quadrature.
pub const DENSITY_STEP: f64 = 1.0 / 128.0;
/// Spatial step of the noiseless tail quadrature, whose endpoint error is
/// first order in the density slope.
pub const TAIL_STEP: f64 = 1.0 / 1024.0;

/// `C_g(beta, r, L)`: states whose STFT against `window` has weighted `L^1`
/// norm at most `L` under the weight `exp(beta |z|^r)`.
#[derive(Debug, Clone)]
pub struct SmoothnessClass {
    pub beta: f64,
    pub r: f64,
    pub l: f64,
    pub window: WaveFunction,
}

impl SmoothnessClass {
    pub fn new(beta: f64, r: f64, l: f64, window: WaveFunction) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(invalid("beta", "must be positive"));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid("r", format!("must lie in (0, 1), got {r}")));
        }
        if !(l > 0.0) {
            return Err(invalid("L", "must be positive"));
        }
        Ok(Self { beta, r, l, window })
    }

    /// Class with the vacuum window.
    pub fn vacuum(beta: f64, r: f64, l: f64) -> Result<Self> {
        Self::new(beta, r, l, WaveFunction::Vacuum)
    }

    pub fn weight(&self, x: f64, w: f64) -> f64 {
        (self.beta * x.hypot(w).powf(self.r)).exp()
    }

    /// `D_n = (log n / beta)^{1/r}`.
    pub fn d_n(&self, n: f64) -> f64 {
        (n.ln() / self.beta).powf(1.0 / self.r)
    }
}

/// `V_g f(x, omega) = integral f(t) conj(g(t - x)) e^{-2 pi i omega t} dt` for
/// functions supported in `[-radius, radius]`.
pub fn stft_fn(
    f: impl Fn(f64) -> Complex64,
    g: impl Fn(f64) -> Complex64,
    radius: f64,
    x: f64,
    omega: f64,
) -> Complex64 {
    let n = (radius / STFT_STEP).ceil() as i64;
    let mut acc = ZERO;
    for j in -n..=n {
        let t = j as f64 * STFT_STEP;
        let w = if j.abs() == n { 0.5 } else { 1.0 };
        acc += f(t) * g(t - x).conj() * Complex64::from_polar(w, -2.0 * PI * omega * t);
    }
    acc * STFT_STEP
}

/// `V_g f(x, omega)` by quadrature of the defining integral.
pub fn stft(f: &WaveFunction, g: &WaveFunction, x: f64, omega: f64) -> Complex64 {
    let (sf, sg) = (f.sampler(), g.sampler());
    stft_fn(|t| sf.eval(t), |t| sg.eval(t), f.support_radius(), x, omega)
}

/// `V_g f` on every node of `grid`, one Fourier sum per `x` row.
pub fn stft_grid(f: &WaveFunction, g: &WaveFunction, grid: &Grid2D) -> Vec<Complex64> {
    let (sf, sg) = (f.sampler(), g.sampler());
    let r = f.support_radius();
    let h = 1.0 / 64.0;
    let n = (2.0 * r / h).ceil() as usize + 1;
    let ts: Vec<f64> = (0..n).map(|j| -r + j as f64 * h).collect();
    let fv: Vec<Complex64> = ts.iter().map(|&t| sf.eval(t)).collect();
    let rows: Vec<Vec<Complex64>> = grid
        .x
        .points()
        .par_iter()
        .map(|&x| {
            let s: Vec<Complex64> = ts.iter().zip(&fv).map(|(&t, fv)| fv * sg.eval(t - x).conj()).collect();
            fourier_sum(&s, -r, h, grid.omega.min, grid.omega.spacing(), grid.omega.n, 1.0)
        })
        .collect();
    rows.concat()
}

fn weighted_integral(values: &[f64], grid: &Grid2D, cls: &SmoothnessClass) -> f64 {
    let xs = grid.x.points();
    let ws = grid.omega.points();
    let weighted: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * cls.weight(xs[k / grid.omega.n], ws[k % grid.omega.n]))
        .collect();
    grid.trapezoid(&weighted)
}

fn with_tail_check(f: impl Fn(&Grid2D) -> f64) -> Result<f64> {
    let outer = Grid2D::square(CLASS_HALF_WIDTH, CLASS_POINTS)?;
    let inner = Grid2D::square(0.8 * CLASS_HALF_WIDTH, (CLASS_POINTS - 1) * 4 / 5 + 1)?;
    let full = f(&outer);
    let part = f(&inner);
    let change = ((full - part) / full).abs();
    if !(change <= TAIL_TOLERANCE) {
        return Err(Error::Diverging { change });
    }
    Ok(full)
}

/// `integral |V_g psi(z)| exp(beta |z|^r) dz` over `[-10, 10]^2`.
pub fn class_norm(psi: &WaveFunction, cls: &SmoothnessClass) -> Result<f64> {
    with_tail_check(|g| class_norm_on(psi, cls, g))
}

/// Weighted STFT integral on an explicit grid, without the tail check.
pub fn class_norm_on(psi: &WaveFunction, cls: &SmoothnessClass, grid: &Grid2D) -> f64 {
    let v: Vec<f64> = stft_grid(psi, &cls.window, grid).iter().map(|c| c.norm()).collect();
    weighted_integral(&v, grid, cls)
}

/// `integral |W^_psi(z)|^2 exp(beta |z|^r) dz`, using
/// `|W^_psi(xi_1, xi_2)| = |V_psi psi(-xi_2, xi_1)|` and the rotation
/// invariance of the weight.
pub fn wigner_fourier_decay(psi: &WaveFunction, cls: &SmoothnessClass) -> Result<f64> {
    with_tail_check(|g| {
        let v: Vec<f64> = stft_grid(psi, psi, g).iter().map(|c| c.norm_sqr()).collect();
        weighted_integral(&v, g, cls)
    })
}

/// `W^_psi(xi_1, xi_2)` at one point.
pub fn wigner_fourier(psi: &WaveFunction, xi1: f64, xi2: f64) -> Complex64 {
    let v = stft(psi, psi, -xi2, xi1);
    Complex64::from_polar(1.0, -PI * xi1 * xi2) * v
}

struct DensityQuadrature {
    xs: Vec<f64>,
    thetas: Vec<f64>,
}

impl DensityQuadrature {
    fn new(states: &[&WaveFunction], nm: Option<&NoiseModel>) -> Self {
        let mut r = states.iter().map(|s| s.support_radius()).fold(0.0, f64::max) + 1.0;
        if let Some(nm) = nm {
            r += 12.0 * nm.sd();
        }
        let n = (2.0 * r / DENSITY_STEP).ceil() as usize + 1;
        let xs = (0..n).map(|j| -r + j as f64 * DENSITY_STEP).collect();
        let thetas = (0..HELLINGER_THETAS)
            .map(|k| PI * k as f64 / HELLINGER_THETAS as f64)
            .collect();
        Self { xs, thetas }
    }
}

/// Conditional density of the (noisy) quadrature at `theta`.
fn conditional_curve(state: &WaveFunction, theta: f64, xs: &[f64], nm: Option<&NoiseModel>) -> Vec<f64> {
    let prof = QuadratureProfile::new(state, theta);
    xs.iter()
        .map(|&x| match nm {
            Some(nm) if !nm.is_ideal() => PI * prof.noisy_density(x, nm),
            _ => prof.conditional(x),
        })
        .collect()
}

fn hellinger_sq_curves(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.max(0.0).sqrt() - b.max(0.0).sqrt();
            d * d
        })
        .sum();
    0.5 * s * DENSITY_STEP
}

/// Hellinger distance between the joint laws on `R x [0, pi]` of the clean
/// (`nm = None`) or noisy observations.
pub fn hellinger(a: &WaveFunction, b: &WaveFunction, nm: Option<&NoiseModel>) -> f64 {
    let q = DensityQuadrature::new(&[a, b], nm);
    let per_theta: Vec<f64> = q
        .thetas
        .par_iter()
        .map(|&t| {
            let pa = conditional_curve(a, t, &q.xs, nm);
            let pb = conditional_curve(b, t, &q.xs, nm);
            hellinger_sq_curves(&pa, &pb)
        })
        .collect();
    // Joint density is the conditional one divided by pi.
    let h2 = per_theta.iter().sum::<f64>() / q.thetas.len() as f64;
    h2.max(0.0).sqrt()
}

/// Hellinger distance between the conditional laws at one phase.
pub fn hellinger_conditional(a: &WaveFunction, b: &WaveFunction, theta: f64, nm: Option<&NoiseModel>) -> f64 {
    let q = DensityQuadrature::new(&[a, b], nm);
    let pa = conditional_curve(a, theta, &q.xs, nm);
    let pb = conditional_curve(b, theta, &q.xs, nm);
    hellinger_sq_curves(&pa, &pb).max(0.0).sqrt()
}

/// Terms of the chain `H^2(noisy) <= sqrt 2 H(clean) <= sqrt 2 ||psi - psi0||`
/// and of the conditional bound at `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HellingerChain {
    pub noisy_h2: f64,
    pub clean_h: f64,
    pub l2: f64,
    pub theta: f64,
    pub conditional_h: f64,
}

impl HellingerChain {
    /// Slacks of the three inequalities, in chain order.
    pub fn slacks(&self) -> [f64; 3] {
        [
            SQRT_2 * self.clean_h - self.noisy_h2,
            SQRT_2 * (self.l2 - self.clean_h),
            self.l2 - self.conditional_h,
        ]
    }

    pub fn holds(&self) -> bool {
        self.slacks().iter().all(|s| *s >= 0.0)
    }
}

pub fn hellinger_chain(a: &WaveFunction, b: &WaveFunction, nm: &NoiseModel, theta: f64) -> HellingerChain {
    HellingerChain {
        noisy_h2: hellinger(a, b, Some(nm)).powi(2),
        clean_h: hellinger(a, b, None),
        l2: phase_aligned_distance(a, b),
        theta,
        conditional_h: hellinger_conditional(a, b, theta, None),
    }
}

/// `P_psi^eta(|Y| > D_n)` for the noisy joint law.
pub fn tail_mass(psi: &WaveFunction, nm: &NoiseModel, n: f64, cls: &SmoothnessClass) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(invalid("n", "need n >= 2"));
    }
    let d = cls.d_n(n);
    let r = (psi.support_radius() + 1.0).max(d + 1.0);
    let thetas: Vec<f64> = (0..HELLINGER_THETAS)
        .map(|k| PI * k as f64 / HELLINGER_THETAS as f64)
        .collect();
    let per_theta: Vec<f64> = if nm.is_ideal() {
        if d >= r {
            return Ok(0.0);
        }
        let grid = Grid1D::new(d, r, ((r - d) / TAIL_STEP).ceil() as usize + 1)?;
        let xs = grid.points();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        thetas
            .par_iter()
            .map(|&t| {
                let a = conditional_curve(psi, t, &xs, None);
                let b = conditional_curve(psi, t, &neg, None);
                grid.trapezoid(&a) + grid.trapezoid(&b)
            })
            .collect()
    } else {
        // Integrate the Gaussian noise out exactly: P(|x + e| > D) per clean x.
        let grid = Grid1D::symmetric(r, (2.0 * r / DENSITY_STEP).ceil() as usize + 1)?;
        let xs = grid.points();
        let scale = nm.sd() * SQRT_2;
        let survival: Vec<f64> = xs
            .iter()
            .map(|x| 0.5 * (erfc((d - x) / scale) + erfc((d + x) / scale)))
            .collect();
        thetas
            .par_iter()
            .map(|&t| {
                let p = conditional_curve(psi, t, &xs, None);
                let v: Vec<f64> = p.iter().zip(&survival).map(|(p, s)| p * s).collect();
                grid.trapezoid(&v)
            })
            .collect()
    };
    Ok(per_theta.iter().sum::<f64>() / thetas.len() as f64)
}

/// `2 (1 - Phi(D sqrt(4 pi eta)))`, the vacuum tail mass.
pub fn vacuum_tail_mass(nm: &NoiseModel, d: f64) -> f64 {
    let z = d * (4.0 * PI * nm.eta).sqrt();
    erfc(z / SQRT_2)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// One entry of the check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub inputs: serde_json::Value,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Machine-readable outcome of [`run_checks`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub window_swap_constant: f64,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Knobs of the check suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Normalizing constant used for the vacuum window in the normalization
    /// check; anything but `2^{1/4}` must fail.
    pub vacuum_constant: f64,
    /// Noise efficiency for the Hellinger and tail checks.
    pub eta: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            vacuum_constant: 2f64.powf(0.25),
            eta: 0.95,
        }
    }
}

/// Class used for tail checks: `D_n` stays in the range where the masses are
/// representable.
pub fn tail_class() -> SmoothnessClass {
    SmoothnessClass::vacuum(2.0, 0.75, 1.0).expect("valid constants")
}

/// States with a closed-form or exact representation used by the suite.
pub fn builtin_states() -> Vec<WaveFunction> {
    vec![
        WaveFunction::Vacuum,
        WaveFunction::Fock2,
        WaveFunction::cat(2.0),
        WaveFunction::coherent(1.0, 0.5),
    ]
}

/// The Wilson window as a unit-norm state, used as the second window.
pub fn wilson_window_state(basis: &std::sync::Arc<WilsonBasis>) -> WaveFunction {
    synthesize(basis, WilsonSeriesParams::single(WilsonIndex::new(0, 0), 0.0))
}

/// Ratios `class_norm(psi; g0) / class_norm(psi; g)` for the vacuum window
/// `g` and the Wilson window `g0`.
pub fn window_swap_ratios(states: &[WaveFunction], g0: &WaveFunction, beta: f64, r: f64) -> Result<Vec<f64>> {
    let cg = SmoothnessClass::vacuum(beta, r, 1.0)?;
    let c0 = SmoothnessClass::new(beta, r, 1.0, g0.clone())?;
    states
        .iter()
        .map(|s| Ok(class_norm(s, &c0)? / class_norm(s, &cg)?))
        .collect()
}

fn check(id: &str, inputs: serde_json::Value, value: f64, bound: f64) -> CheckResult {
    CheckResult {
        id: id.to_string(),
        inputs,
        value,
        bound,
        pass: value <= bound,
    }
}

fn spot_grid() -> Result<Grid2D> {
    Grid2D::square(3.0, 64)
}

/// Runs the full diagnostics suite.
pub fn run_checks(opts: &CheckOptions) -> Result<CheckReport> {
    use serde_json::json;
    let nm = NoiseModel::new(opts.eta)?;
    let mut out = Vec::new();

    let c = opts.vacuum_constant;
    let norm = Grid1D::symmetric(8.0, 4097)?;
    let sq: Vec<f64> = norm.points().iter().map(|x| (c * (-PI * x * x).exp()).powi(2)).collect();
    out.push(check("vacuum_normalization", json!({ "constant": c }), (norm.trapezoid(&sq) - 1.0).abs(), 1e-9));

    let grid = spot_grid()?;
    let w = crate::states::wigner(&WaveFunction::Vacuum, &grid)?;
    let (xs, ws) = (grid.x.points(), grid.omega.points());
    let err = (0..grid.len())
        .map(|k| (w.values[k] - vacuum_wigner(xs[k / grid.omega.n], ws[k % grid.omega.n])).abs())
        .fold(0.0, f64::max);
    out.push(check("vacuum_wigner_closed_form", json!({ "grid": "[-3,3]^2, 64^2" }), err, 1e-6));

    let mut err: f64 = 0.0;
    for eta in [0.9, 0.95] {
        let nm = NoiseModel::new(eta)?;
        let var = 1.0 / (4.0 * PI * eta);
        for k in 0..41 {
            let y = -2.0 + 0.1 * k as f64;
            let want = (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt() / PI;
            let got = crate::forward::noisy_density(&WaveFunction::Vacuum, y, 0.3, &nm);
            err = err.max((got - want).abs());
        }
    }
    out.push(check("noisy_vacuum_density", json!({ "eta": [0.9, 0.95] }), err, 1e-6));

    let vac = WaveFunction::Vacuum;
    let lattice: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut err: f64 = (stft(&vac, &vac, 0.0, 0.0) - 1.0).norm();
    for &x in &lattice {
        for &om in &lattice {
            let v = stft(&vac, &vac, 0.5 * x, 0.5 * om).norm();
            err = err.max((v - (-PI * (x * x + om * om) / 8.0).exp()).abs());
        }
    }
    out.push(check("stft_gaussian_closed_form", json!({ "lattice": "5x5 on [-1,1]^2" }), err, 1e-6));

    let f = WaveFunction::Fock2;
    let (a, b) = (0.7, -0.4);
    let gauss = |t: f64| Complex64::new(crate::states::vacuum_window(t), 0.0);
    let shifted = |t: f64| f.eval(t - a) * Complex64::from_polar(1.0, 2.0 * PI * b * (t - a));
    let mut err: f64 = 0.0;
    for &x in &lattice {
        for &om in &lattice {
            let lhs = stft_fn(shifted, gauss, 8.0, x, om).norm();
            let rhs = stft_fn(|t| f.eval(t), gauss, 8.0, x - a, om - b).norm();
            err = err.max((lhs - rhs).abs());
        }
    }
    out.push(check("stft_covariance", json!({ "state": "fock2", "shift": [a, b] }), err, 1e-8));

    let cls = SmoothnessClass::vacuum(1.0, 0.5, 1.0)?;
    let outer = class_norm_on(&vac, &cls, &Grid2D::square(CLASS_HALF_WIDTH, CLASS_POINTS)?);
    let inner = class_norm_on(&vac, &cls, &Grid2D::square(0.8 * CLASS_HALF_WIDTH, (CLASS_POINTS - 1) * 4 / 5 + 1)?);
    out.push(check(
        "class_norm_domain_stability",
        json!({ "state": "vacuum", "beta": 1.0, "r": 0.5 }),
        ((outer - inner) / outer).abs(),
        1e-4,
    ));

    let lo = class_norm(&f, &SmoothnessClass::vacuum(0.5, 0.5, 1.0)?)?;
    let hi = class_norm(&f, &cls)?;
    out.push(check("class_norm_monotone_beta", json!({ "state": "fock2", "beta": [0.5, 1.0] }), lo - hi, 0.0));

    let basis = std::sync::Arc::new(WilsonBasis::standard()?);
    let g0 = wilson_window_state(&basis);
    let fit = builtin_states();
    let constant = window_swap_ratios(&fit, &g0, 1.0, 0.5)?.into_iter().fold(0.0, f64::max);
    let held_out = [WaveFunction::cat(1.0), WaveFunction::coherent(-0.5, 1.0)];
    let worst = window_swap_ratios(&held_out, &g0, 1.0, 0.5)?.into_iter().fold(0.0, f64::max);
    out.push(check(
        "window_swap_held_out",
        json!({ "windows": ["vacuum", "wilson"], "held_out": ["cat(1)", "coherent(-0.5,1)"] }),
        worst,
        constant,
    ));

    out.push(check(
        "wilson_gram",
        json!({ "z": 8.0 }),
        basis.gram_deviation(8.0),
        1e-6,
    ));

    let cat = WaveFunction::cat(2.0);
    out.push(check("hellinger_self", json!({ "state": "cat(2)" }), hellinger(&cat, &cat, Some(&nm)), 1e-8));

    let states = builtin_states();
    let mut worst = [f64::INFINITY; 3];
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let ch = hellinger_chain(&states[i], &states[j], &nm, 0.7);
            for (w, s) in worst.iter_mut().zip(ch.slacks()) {
                *w = w.min(s);
            }
        }
    }
    let pairs = json!({ "states": states.iter().map(|s| s.label()).collect::<Vec<_>>(), "eta": opts.eta, "theta": 0.7 });
    for (id, w) in ["hellinger_noisy_vs_clean", "hellinger_clean_vs_l2", "hellinger_conditional"].iter().zip(worst) {
        out.push(check(id, pairs.clone(), -w, 0.0));
    }

    let dec = wigner_fourier_decay(&vac, &cls)?;
    let closed = radial_integral(|r| (-PI * r * r + r.sqrt()).exp());
    out.push(check(
        "wigner_fourier_vacuum_closed_form",
        json!({ "beta": 1.0, "r": 0.5 }),
        (dec - closed).abs(),
        1e-4,
    ));
    let mut excess = f64::NEG_INFINITY;
    for s in [WaveFunction::Vacuum, WaveFunction::Fock2] {
        let l = class_norm(&s, &cls)?;
        excess = excess.max(wigner_fourier_decay(&s, &cls)? - l * l);
    }
    out.push(check(
        "wigner_fourier_decay_bound",
        json!({ "states": ["vacuum", "fock2"], "beta": 1.0, "r": 0.5 }),
        excess,
        1e-6,
    ));
    out.push(check(
        "wigner_fourier_dc",
        json!({ "state": "fock2" }),
        (wigner_fourier(&f, 0.0, 0.0) - 1.0).norm(),
        1e-3,
    ));

    let tc = tail_class();
    let ns = [1e2, 1e3, 1e4];
    let masses: Vec<f64> = ns.iter().map(|&n| tail_mass(&f, &nm, n, &tc)).collect::<Result<_>>()?;
    let tail_inputs = json!({ "state": "fock2", "eta": opts.eta, "beta": tc.beta, "r": tc.r, "n": ns, "mass": masses });
    let rise = masses.windows(2).map(|m| m[1] - m[0]).fold(f64::NEG_INFINITY, f64::max);
    out.push(check("tail_mass_monotone", tail_inputs.clone(), rise, 0.0));
    out.push(check("tail_mass_slope", tail_inputs, log_log_slope(&ns, &masses), -1.8));
    let vac_cls = SmoothnessClass::vacuum(4.0, 0.9, 1.0)?;
    let d = vac_cls.d_n(10.0);
    out.push(check(
        "tail_mass_vacuum_closed_form",
        json!({ "beta": 4.0, "r": 0.9, "n": 10, "eta": opts.eta }),
        (tail_mass(&vac, &nm, 10.0, &vac_cls)? - vacuum_tail_mass(&nm, d)).abs(),
        1e-6,
    ));

    Ok(CheckReport {
        window_swap_constant: constant,
        checks: out,
    })
}

/// `integral_{R^2} f(|z|) dz` for radial integrands decaying by `|z| = 15`.
pub fn radial_integral(f: impl Fn(f64) -> f64) -> f64 {
    let h = 1e-4;
    (1..150_000)
        .map(|k| {
            let r = k as f64 * h;
            2.0 * PI * r * f(r)
        })
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x: f64) -> Complex64 {
        Complex64::new(crate::states::vacuum_window(x), 0.0)
    }

    #[test]
    fn stft_of_vacuum() {
        let g = WaveFunction::Vacuum;
        assert!((stft(&g, &g, 0.0, 0.0) - 1.0).norm() < 1e-12);
        for x in [-2.0, -0.5, 0.0, 1.0, 2.0] {
            for w in [-2.0, -1.0, 0.0, 0.5, 1.5] {
                let v = stft(&g, &g, x, w).norm();
                assert!((v - (-PI * (x * x + w * w) / 2.0).exp()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stft_covariance() {
        let f = WaveFunction::Fock2;
        let (a, b) = (0.7, -0.4);
        let shifted = |t: f64| f.eval(t - a) * Complex64::from_polar(1.0, 2.0 * PI * b * (t - a));
        for x in [-1.0, 0.3, 1.2] {
            for w in [-0.8, 0.0, 0.9] {
                let lhs = stft_fn(shifted, gaussian, 8.0, x, w).norm();
                let rhs = stft_fn(|t| f.eval(t), gaussian, 8.0, x - a, w - b).norm();
                assert!((lhs - rhs).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn grid_matches_pointwise() {
        let f = WaveFunction::cat(1.5);
        let g = WaveFunction::Vacuum;
        let grid = Grid2D::square(3.0, 7).unwrap();
        let v = stft_grid(&f, &g, &grid);
        for (i, x) in grid.x.points().iter().enumerate() {
            for (j, w) in grid.omega.points().iter().enumerate() {
                assert!((v[i * 7 + j] - stft(&f, &g, *x, *w)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn hellinger_of_identical_states() {
        let s = WaveFunction::cat(2.0);
        assert!(hellinger(&s, &s, None) < 1e-8);
        let nm = NoiseModel::new(0.9).unwrap();
        assert!(hellinger(&s, &s, Some(&nm)) < 1e-8);
    }

    #[test]
    fn vacuum_tail_matches_closed_form() {
        let nm = NoiseModel::new(0.95).unwrap();
        let cls = SmoothnessClass::vacuum(4.0, 0.9, 1.0).unwrap();
        for n in [10.0, 30.0, 100.0] {
            let d = cls.d_n(n);
            let numeric = tail_mass(&WaveFunction::Vacuum, &nm, n, &cls).unwrap();
            assert!((numeric - vacuum_tail_mass(&nm, d)).abs() < 1e-6, "{n}: {numeric} {}", vacuum_tail_mass(&nm, d));
        }
    }

    #[test]
    fn vacuum_class_norm_matches_radial_integral() {
        let cls = SmoothnessClass::vacuum(1.0, 0.5, 1.0).unwrap();
        let got = class_norm(&WaveFunction::Vacuum, &cls).unwrap();
        let want = radial_integral(|r| (-PI * r * r / 2.0 + r.sqrt()).exp());
        assert!((got - want).abs() < 2e-4 * want, "{got} {want}");
        let dec = wigner_fourier_decay(&WaveFunction::Vacuum, &cls).unwrap();
        let want = radial_integral(|r| (-PI * r * r + r.sqrt()).exp());
        assert!((dec - want).abs() < 2e-4 * want, "{dec} {want}");
    }

    #[test]
    fn wigner_fourier_matches_grid_transform() {
        let psi = WaveFunction::coherent(0.8, -0.5);
        let grid = Grid2D::square(6.0, 241).unwrap();
        let w = crate::states::wigner(&psi, &grid).unwrap();
        let (xs, ws) = (grid.x.points(), grid.omega.points());
        for (a, b) in [(0.0, 0.0), (0.3, 0.0), (0.0, -0.4), (0.5, 0.7)] {
            let re: Vec<f64> = (0..grid.len())
                .map(|k| w.values[k] * (-2.0 * PI * (a * xs[k / 241] + b * ws[k % 241])).cos())
                .collect();
            let im: Vec<f64> = (0..grid.len())
                .map(|k| w.values[k] * (-2.0 * PI * (a * xs[k / 241] + b * ws[k % 241])).sin())
                .collect();
            let direct = Complex64::new(grid.trapezoid(&re), grid.trapezoid(&im));
            let via = wigner_fourier(&psi, a, b);
            assert!((direct - via).norm() < 1e-8, "({a}, {b}): {direct} vs {via}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 10.0, 100.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((log_log_slope(&x, &y) + 2.0).abs() < 1e-12);
    }
}
