//! Measurement model: quadrature densities, the Radon-of-Wigner oracle and
//! the Gaussian efficiency noise.
//!
//! The quadrature amplitude at phase `theta` is the fractional Fourier
//! transform
//!
//! ```text
//! F_theta psi(x) = A e^{i pi cot(theta) x^2} integral e^{i pi cot(theta) z^2 - 2 pi i csc(theta) x z} psi(z) dz
//! ```
//!
//! with `A = sqrt(1 - i cot theta)`. With this constant the vacuum window is
//! a fixed point, `F_{pi/2}` is the Fourier transform, and the joint density
//! of `(X, theta)` on `R x [0, pi]` is `|F_theta psi(x)|^2 / pi`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numerics::{cis_pi, fourier_sum, GaussHermite, UniformTable};
use crate::states::{vacuum_window, GaussianTerm, WaveFunction, WignerGrid, BOUNDARY_DECAY};

/// Input sampling step of the numeric transform.
const FRFT_IN_STEP: f64 = 1.0 / 256.0;
/// Output sampling step of the numeric transform.
const FRFT_OUT_STEP: f64 = 1.0 / 256.0;

/// Detector efficiency and the derived noise scale `gamma = pi (1 - eta) / (2 eta)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel {
    pub eta: f64,
    pub gamma: f64,
}

impl NoiseModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid("eta", format!("efficiency must lie in (0, 1], got {eta}")));
        }
        Ok(Self {
            eta,
            gamma: PI * (1.0 - eta) / (2.0 * eta),
        })
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0, gamma: 0.0 }
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0
    }

    /// Variance `(1 - eta) / (4 pi eta)` of the additive noise.
    pub fn variance(&self) -> f64 {
        (1.0 - self.eta) / (4.0 * PI * self.eta)
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// `G_gamma(x) = sqrt(pi / gamma) exp(-pi^2 x^2 / gamma)`.
pub fn noise_kernel(nm: &NoiseModel, x: f64) -> Result<f64> {
    if nm.is_ideal() {
        return Err(Error::EtaIsOne);
    }
    Ok((PI / nm.gamma).sqrt() * (-PI * PI * x * x / nm.gamma).exp())
}

pub(crate) fn gauss_hermite_64() -> &'static GaussHermite {
    static GH: OnceLock<GaussHermite> = OnceLock::new();
    GH.get_or_init(|| GaussHermite::new(64))
}

/// Phase-space shift `x0 cos(theta) + omega0 sin(theta)` and phase `Phi` in
/// `F_theta(M_omega0 T_x0 f)(x) = e^{i pi Phi(x)} F_theta f(x - shift)`.
#[inline]
pub fn tf_shift(x: f64, theta: f64, x0: f64, omega0: f64) -> (f64, Complex64) {
    let (s, c) = theta.sin_cos();
    let shift = x0 * c + omega0 * s;
    let phi = 2.0 * x * (omega0 * c - x0 * s) + s * c * (x0 * x0 - omega0 * omega0) + 2.0 * x0 * omega0 * s * s;
    (shift, cis_pi(phi))
}

/// `F_theta` applied to a Gaussian expansion (the vacuum window is fixed).
pub fn gaussian_amplitude(terms: &[GaussianTerm], x: f64, theta: f64) -> Complex64 {
    terms
        .iter()
        .map(|t| {
            let (shift, phase) = tf_shift(x, theta, t.x, t.omega);
            t.coeff * phase * vacuum_window(x - shift)
        })
        .sum()
}

/// Fock-2 amplitude; the state is an eigenfunction of every `F_theta`, so the
/// unimodular eigenvalue is dropped.
fn fock2_amplitude(x: f64) -> Complex64 {
    WaveFunction::Fock2.eval(x)
}

/// Direct fractional transform of uniform samples `f(z0 + j h)` at angle
/// `alpha` with `|sin alpha|` bounded away from zero.
fn frft_direct(samples: &[Complex64], z0: f64, h: f64, alpha: f64, x0: f64, dx: f64, m: usize) -> Vec<Complex64> {
    let (s, c) = alpha.sin_cos();
    let cot = c / s;
    let csc = 1.0 / s;
    let chirped: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let z = z0 + j as f64 * h;
            f * cis_pi(cot * z * z)
        })
        .collect();
    let a = Complex64::new(1.0, -cot).sqrt();
    let mut out = fourier_sum(&chirped, z0, h, x0, dx, m, csc);
    for (k, v) in out.iter_mut().enumerate() {
        let x = x0 + k as f64 * dx;
        *v *= a * cis_pi(cot * x * x);
    }
    out
}

/// Samples `F_theta f` on `[-out_radius, out_radius]` from samples of `f`.
///
/// Near `theta = 0, pi` the chirp in the direct kernel is steep, so the
/// transform is composed as `F_{theta - pi/2} F` instead, which keeps
/// `|cot|` at most one on both legs.
pub fn frft_samples(
    samples: &[Complex64],
    z0: f64,
    h: f64,
    band_radius: f64,
    theta: f64,
    out_radius: f64,
) -> UniformTable<Complex64> {
    let m = (2.0 * out_radius / FRFT_OUT_STEP).ceil() as usize + 1;
    let x0 = -out_radius;
    let values = if theta.sin().abs() >= FRAC_1_SQRT_2 {
        frft_direct(samples, z0, h, theta, x0, FRFT_OUT_STEP, m)
    } else {
        let nw = (2.0 * band_radius / h).ceil() as usize + 1;
        let hat = fourier_sum(samples, z0, h, -band_radius, h, nw, 1.0);
        frft_direct(&hat, -band_radius, h, theta - 0.5 * PI, x0, FRFT_OUT_STEP, m)
    };
    UniformTable::new(x0, FRFT_OUT_STEP, values)
}

/// Tabulated quadrature amplitude `F_theta psi` of a state at one phase.
pub struct QuadratureProfile {
    pub theta: f64,
    amp: Amplitude,
}

enum Amplitude {
    Gaussian(Vec<GaussianTerm>),
    Fock2,
    Table(UniformTable<Complex64>),
}

impl QuadratureProfile {
    /// Uses a closed form where one exists.
    pub fn new(state: &WaveFunction, theta: f64) -> Self {
        let amp = match state {
            WaveFunction::Fock2 => Amplitude::Fock2,
            _ => match state.gaussian_terms() {
                Some(t) => Amplitude::Gaussian(t),
                None => Amplitude::Table(numeric_table(state, theta)),
            },
        };
        Self { theta, amp }
    }

    /// Always uses the sampled fractional Fourier transform.
    pub fn numeric(state: &WaveFunction, theta: f64) -> Self {
        Self {
            theta,
            amp: Amplitude::Table(numeric_table(state, theta)),
        }
    }

    pub fn amplitude(&self, x: f64) -> Complex64 {
        match &self.amp {
            Amplitude::Gaussian(t) => gaussian_amplitude(t, x, self.theta),
            Amplitude::Fock2 => fock2_amplitude(x),
            Amplitude::Table(t) => t.eval(x),
        }
    }

    /// Conditional density of `X` given `theta`.
    pub fn conditional(&self, x: f64) -> f64 {
        self.amplitude(x).norm_sqr()
    }

    /// Joint density with respect to Lebesgue measure on `R x [0, pi]`.
    pub fn density(&self, x: f64) -> f64 {
        self.conditional(x) / PI
    }

    /// Joint density of the noisy observation `y`.
    pub fn noisy_density(&self, y: f64, nm: &NoiseModel) -> f64 {
        if nm.is_ideal() {
            return self.density(y);
        }
        gauss_hermite_64().expect(y, nm.sd(), |x| self.density(x))
    }
}

fn numeric_table(state: &WaveFunction, theta: f64) -> UniformTable<Complex64> {
    let r = state.support_radius();
    let band = state.frequency_radius();
    let sampler = state.sampler();
    let n = (2.0 * r / FRFT_IN_STEP).ceil() as usize + 1;
    let samples: Vec<Complex64> = (0..n).map(|j| sampler.eval(-r + j as f64 * FRFT_IN_STEP)).collect();
    frft_samples(&samples, -r, FRFT_IN_STEP, band, theta, r.hypot(band) + 1.0)
}

fn check_theta(theta: f64) {
    debug_assert!((-1e-12..=PI + 1e-12).contains(&theta), "theta = {theta} outside [0, pi]");
}

/// Joint density `p_psi(x, theta)`.
pub fn quadrature_density(state: &WaveFunction, x: f64, theta: f64) -> f64 {
    check_theta(theta);
    QuadratureProfile::new(state, theta).density(x)
}

/// Joint density evaluated through the sampled fractional Fourier transform,
/// bypassing any closed form.
pub fn quadrature_density_numeric(state: &WaveFunction, x: f64, theta: f64) -> f64 {
    check_theta(theta);
    QuadratureProfile::numeric(state, theta).density(x)
}

/// Joint density of the noisy observation: `[p_psi(., theta) * G_gamma](y)`.
pub fn noisy_density(state: &WaveFunction, y: f64, theta: f64, nm: &NoiseModel) -> f64 {
    check_theta(theta);
    QuadratureProfile::new(state, theta).noisy_density(y, nm)
}

/// Line integral of the Wigner grid along `{x cos t - xi sin t, x sin t + xi cos t}`,
/// divided by `pi`.
pub fn radon_of_wigner(w: &WignerGrid, x: f64, theta: f64) -> Result<f64> {
    let edge = w.boundary_max();
    if edge > BOUNDARY_DECAY {
        return Err(Error::GridTooNarrow {
            what: "|W|",
            value: edge,
            limit: BOUNDARY_DECAY,
        });
    }
    let (s, c) = theta.sin_cos();
    let g = w.grid;
    let reach = (g.x.min.abs().max(g.x.max.abs())).hypot(g.omega.min.abs().max(g.omega.max.abs()));
    let h = 0.5 * g.x.spacing().min(g.omega.spacing());
    let n = (reach / h).ceil() as i64;
    let mut acc = 0.0;
    for j in -n..=n {
        let xi = j as f64 * h;
        acc += w.interpolate(x * c - xi * s, x * s + xi * c);
    }
    Ok(acc * h / PI)
}

/// Closed-form conditional density of the cat state given `theta`.
pub fn cat_conditional(x0: f64, x: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let g2 = |u: f64| std::f64::consts::SQRT_2 * (-2.0 * PI * u * u).exp();
    let (a, b) = (x - x0 * c, x + x0 * c);
    let cross = 2.0 * (g2(a) * g2(b)).sqrt() * (4.0 * PI * x * x0 * s).cos();
    (g2(a) + g2(b) + cross) / (2.0 * (1.0 + (-2.0 * PI * x0 * x0).exp()))
}

/// Conditional density of the Fock-2 state (independent of `theta`).
pub fn fock2_conditional(x: f64) -> f64 {
    let q = 4.0 * PI * x * x - 1.0;
    FRAC_1_SQRT_2 * q * q * (-2.0 * PI * x * x).exp()
}
