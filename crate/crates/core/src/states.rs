//! Pure and mixed states and their Wigner quasi-densities.
//!
//! Conventions: `T_x f(y) = f(y - x)`, `M_w f(y) = exp(2 pi i w y) f(y)`,
//! inner products are linear in the first argument, and the Fourier
//! transform uses the kernel `exp(-2 pi i x w)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid1D, Grid2D};
use crate::numerics::{cis_pi, fourier_sum, lagrange6, UniformTable};
use crate::wilson::{WilsonBasis, WilsonSeriesParams};

/// Normalization of the vacuum window `g(x) = c exp(-pi x^2)`, chosen so that
/// `||g||_2 = 1` and `|g|^2` is the `N(0, 1/(4 pi))` density.
pub const VACUUM_NORM: f64 = 1.189_207_115_002_721; // 2^(1/4)

/// Spacing of the internal tables used for states without a cheap closed form.
pub(crate) const FINE_STEP: f64 = 1.0 / 256.0;

/// Boundary decay required by [`wigner`].
pub const BOUNDARY_DECAY: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gaussian vacuum window.
#[inline]
pub fn vacuum_window(x: f64) -> f64 {
    VACUUM_NORM * (-PI * x * x).exp()
}

/// Coefficient times the time-frequency shift `M_omega T_x g` of the vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm {
    pub coeff: Complex64,
    pub x: f64,
    pub omega: f64,
}

impl GaussianTerm {
    #[inline]
    pub fn eval(&self, z: f64) -> Complex64 {
        self.coeff * cis_pi(2.0 * self.omega * z) * vacuum_window(z - self.x)
    }
}

/// `<M_w T_x g, M_w' T_x' g>` for the vacuum window.
pub fn gaussian_overlap(a: (f64, f64), b: (f64, f64)) -> Complex64 {
    let (dx, dw) = (a.0 - b.0, a.1 - b.1);
    let mid = 0.5 * (a.0 + b.0);
    (-0.5 * PI * (dx * dx + dw * dw)).exp() * cis_pi(2.0 * dw * mid)
}

/// One atom of a coherent-state mixture: weight `w`, phase `phi`, and the
/// coherent state `T_x M_omega g`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoherentAtom {
    pub weight: f64,
    pub x: f64,
    pub omega: f64,
    pub phase: f64,
}

impl CoherentAtom {
    /// Coefficient of the atom on `M_omega T_x g` (`T_x M_w = e^{-2 pi i w x} M_w T_x`).
    #[inline]
    pub fn coefficient(&self) -> Complex64 {
        self.weight * cis_pi(self.phase / PI - 2.0 * self.omega * self.x)
    }
}

/// Normalized superposition `sum_j w_j e^{i phi_j} T_{x_j} M_{omega_j} g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentMixture {
    atoms: Vec<CoherentAtom>,
    norm: f64,
}

impl CoherentMixture {
    pub fn new(atoms: Vec<CoherentAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "a mixture needs at least one atom"));
        }
        let norm = unnormalized_norm(&atoms);
        if !(norm > 1e-8) {
            return Err(Error::DegenerateTruncation { norm });
        }
        Ok(Self { atoms, norm })
    }

    pub fn atoms(&self) -> &[CoherentAtom] {
        &self.atoms
    }

    /// `||psi~||_2` before normalization.
    pub fn raw_norm(&self) -> f64 {
        self.norm
    }

    pub fn terms(&self) -> Vec<GaussianTerm> {
        self.atoms
            .iter()
            .map(|a| GaussianTerm {
                coeff: a.coefficient() / self.norm,
                x: a.x,
                omega: a.omega,
            })
            .collect()
    }
}

pub(crate) fn unnormalized_norm(atoms: &[CoherentAtom]) -> f64 {
    let mut acc = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        let ca = a.coefficient();
        acc += ca.norm_sqr();
        for b in &atoms[i + 1..] {
            let cross = ca * b.coefficient().conj() * gaussian_overlap((a.x, a.omega), (b.x, b.omega));
            acc += 2.0 * cross.re;
        }
    }
    acc.max(0.0).sqrt()
}

/// A Wilson-series state together with the basis it was synthesized in.
#[derive(Debug, Clone)]
pub struct WilsonState {
    pub params: WilsonSeriesParams,
    pub basis: Arc<WilsonBasis>,
}

/// Wave function sampled on a grid, linearly interpolated and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl Tabulated {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid("values", format!("expected {} samples, got {}", grid.n, values.len())));
        }
        Ok(Self { grid, values })
    }

    fn eval(&self, x: f64) -> Complex64 {
        if !self.grid.contains(x) {
            return ZERO;
        }
        let u = (x - self.grid.min) / self.grid.spacing();
        let i = (u.floor() as usize).min(self.grid.n - 2);
        let t = u - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// A unit-norm wave function on the line.
#[derive(Debug, Clone)]
pub enum WaveFunction {
    Vacuum,
    /// `e^{i phase} T_{x0} M_{w0} g`.
    Coherent { x0: f64, w0: f64, phase: f64 },
    /// Even superposition of coherent states at `+-x0`.
    Cat { x0: f64 },
    /// Two-photon Fock state.
    Fock2,
    WilsonSeries(WilsonState),
    CoherentMixture(CoherentMixture),
    Tabulated(Tabulated),
}

impl WaveFunction {
    pub fn coherent(x0: f64, w0: f64) -> Self {
        Self::Coherent { x0, w0, phase: 0.0 }
    }

    pub fn cat(x0: f64) -> Self {
        Self::Cat { x0 }
    }

    /// Short human-readable descriptor.
    pub fn label(&self) -> String {
        match self {
            Self::Vacuum => "vacuum".into(),
            Self::Coherent { x0, w0, .. } => format!("coherent(x0={x0}, w0={w0})"),
            Self::Cat { x0 } => format!("cat(x0={x0})"),
            Self::Fock2 => "fock2".into(),
            Self::WilsonSeries(s) => format!("wilson(Z={}, atoms={})", s.params.z, s.params.len()),
            Self::CoherentMixture(m) => format!("coherent-mixture(J={})", m.atoms.len()),
            Self::Tabulated(t) => format!("tabulated(n={})", t.grid.n),
        }
    }

    /// Whether the wave function is real valued (up to a global phase).
    pub fn is_real(&self) -> bool {
        matches!(self, Self::Vacuum | Self::Cat { .. } | Self::Fock2)
    }

    /// Closed-form expansion over shifted Gaussians, when one exists.
    pub fn gaussian_terms(&self) -> Option<Vec<GaussianTerm>> {
        match self {
            Self::Vacuum => Some(vec![GaussianTerm {
                coeff: Complex64::new(1.0, 0.0),
                x: 0.0,
                omega: 0.0,
            }]),
            Self::Coherent { x0, w0, phase } => Some(vec![GaussianTerm {
                coeff: cis_pi(phase / PI - 2.0 * w0 * x0),
                x: *x0,
                omega: *w0,
            }]),
            Self::Cat { x0 } => {
                let c = 1.0 / (2.0 * (1.0 + (-2.0 * PI * x0 * x0).exp())).sqrt();
                Some(vec![
                    GaussianTerm {
                        coeff: Complex64::new(c, 0.0),
                        x: *x0,
                        omega: 0.0,
                    },
                    GaussianTerm {
                        coeff: Complex64::new(c, 0.0),
                        x: -*x0,
                        omega: 0.0,
                    },
                ])
            }
            Self::CoherentMixture(m) => Some(m.terms()),
            _ => None,
        }
    }

    /// Radius outside which `|psi|` is negligible.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Vacuum | Self::Fock2 => 5.0,
            Self::Coherent { x0, .. } | Self::Cat { x0 } => x0.abs() + 5.0,
            Self::WilsonSeries(s) => s.basis.window_radius() + s.params.max_shift(),
            Self::CoherentMixture(m) => m.atoms.iter().map(|a| a.x.abs()).fold(0.0, f64::max) + 5.0,
            Self::Tabulated(t) => t.grid.min.abs().max(t.grid.max.abs()),
        }
    }

    /// Radius outside which `|psi^|` is negligible.
    pub fn frequency_radius(&self) -> f64 {
        match self {
            Self::Vacuum | Self::Fock2 | Self::Cat { .. } => 5.0,
            Self::Coherent { w0, .. } => w0.abs() + 5.0,
            Self::WilsonSeries(s) => s.basis.frequency_radius() + s.params.max_frequency(),
            Self::CoherentMixture(m) => m.atoms.iter().map(|a| a.omega.abs()).fold(0.0, f64::max) + 5.0,
            // Linear interpolation is not band limited; take the grid Nyquist.
            Self::Tabulated(t) => (0.5 / t.grid.spacing()).min(64.0),
        }
    }

    /// Evaluates `psi(x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Self::Fock2 => {
                let v = 2f64.powf(-0.25) * (4.0 * PI * x * x - 1.0) * (-PI * x * x).exp();
                Complex64::new(v, 0.0)
            }
            Self::WilsonSeries(s) => s.basis.eval_series(&s.params, x),
            Self::Tabulated(t) => t.eval(x),
            Self::Cat { x0 } => {
                let num = (-PI * (x - x0).powi(2)).exp() + (-PI * (x + x0).powi(2)).exp();
                let den = 2f64.powf(0.25) * (1.0 + (-2.0 * PI * x0 * x0).exp()).sqrt();
                Complex64::new(num / den, 0.0)
            }
            _ => self
                .gaussian_terms()
                .expect("closed-form variant")
                .iter()
                .map(|t| t.eval(x))
                .sum(),
        }
    }

    /// An evaluator suited to many calls: expensive expansions are first
    /// tabulated on a fine grid.
    pub fn sampler(&self) -> Sampler<'_> {
        match self {
            Self::WilsonSeries(_) | Self::CoherentMixture(_) => {
                let r = self.support_radius();
                let n = (2.0 * r / FINE_STEP).ceil() as usize + 1;
                Sampler::Table(UniformTable::from_fn(-r, FINE_STEP, n, |x| self.eval(x)))
            }
            _ => Sampler::Direct(self),
        }
    }

    /// Samples on a grid.
    pub fn sample(&self, grid: &Grid1D) -> Vec<Complex64> {
        let s = self.sampler();
        grid.points().into_iter().map(|x| s.eval(x)).collect()
    }

    /// Converts to a tabulated state on `grid`.
    pub fn tabulate(&self, grid: Grid1D) -> WaveFunction {
        WaveFunction::Tabulated(Tabulated {
            grid,
            values: self.sample(&grid),
        })
    }
}

/// Fast evaluator returned by [`WaveFunction::sampler`].
pub enum Sampler<'a> {
    Direct(&'a WaveFunction),
    Table(UniformTable<Complex64>),
}

impl Sampler<'_> {
    #[inline]
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Sampler::Direct(w) => w.eval(x),
            Sampler::Table(t) => t.eval(x),
        }
    }
}

/// `psi(x)`.
pub fn eval_psi(state: &WaveFunction, x: f64) -> Complex64 {
    state.eval(x)
}

/// `<a, b>` by trapezoid quadrature on `grid`.
pub fn inner_product(a: &WaveFunction, b: &WaveFunction, grid: &Grid1D) -> Complex64 {
    let (sa, sb) = (a.sampler(), b.sampler());
    let w = grid.trapezoid_weights();
    grid.points()
        .iter()
        .zip(&w)
        .map(|(&x, &wi)| sa.eval(x) * sb.eval(x).conj() * wi)
        .sum()
}

/// Working grid wide enough for both states.
pub fn working_grid(a: &WaveFunction, b: &WaveFunction) -> Grid1D {
    let r = a.support_radius().max(b.support_radius());
    let n = (2.0 * r / FINE_STEP).ceil() as usize + 1;
    Grid1D::symmetric(r, n).expect("positive radius")
}

/// `||a||_2`.
pub fn norm(a: &WaveFunction) -> f64 {
    inner_product(a, a, &working_grid(a, a)).re.sqrt()
}

/// `min_phi ||e^{i phi} a - b||_2 = sqrt(2 - 2 |<a, b>|)` for unit vectors.
pub fn phase_aligned_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let ip = inner_product(a, b, &working_grid(a, b)).norm();
    (2.0 - 2.0 * ip).max(0.0).sqrt()
}

/// `||a - b||_2` without phase alignment.
pub fn l2_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let g = working_grid(a, b);
    let (sa, sb) = (a.sampler(), b.sampler());
    let v: Vec<f64> = g.points().iter().map(|&x| (sa.eval(x) - sb.eval(x)).norm_sqr()).collect();
    g.trapezoid(&v).sqrt()
}

/// Convex combination of (orthonormal) pure states.
#[derive(Debug, Clone)]
pub struct MixedState {
    weights: Vec<f64>,
    components: Vec<WaveFunction>,
}

impl MixedState {
    pub fn new(weights: Vec<f64>, components: Vec<WaveFunction>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(invalid("weights", "need one positive weight per component"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("weights", "all weights must be positive"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("weights sum to {s}, not 1")));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[WaveFunction] {
        &self.components
    }
}

/// Sampled Wigner quasi-density on a phase-space grid (row-major in `x`).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl WignerGrid {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.omega.n + j]
    }

    pub fn integral(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `||W||_{L^2}` by the tensor trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        self.grid.trapezoid(&sq).sqrt()
    }

    /// `<W, V>_{L^2}`; both grids must coincide.
    pub fn dot(&self, other: &WignerGrid) -> f64 {
        assert_eq!(self.grid, other.grid, "Wigner grids differ");
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        self.grid.trapezoid(&prod)
    }

    /// Largest absolute value on the outer rows and columns.
    pub fn boundary_max(&self) -> f64 {
        let (nx, nw) = (self.grid.x.n, self.grid.omega.n);
        let mut m: f64 = 0.0;
        for j in 0..nw {
            m = m.max(self.at(0, j).abs()).max(self.at(nx - 1, j).abs());
        }
        for i in 0..nx {
            m = m.max(self.at(i, 0).abs()).max(self.at(i, nw - 1).abs());
        }
        m
    }

    /// Sixth-order tensor Lagrange interpolation, zero outside the grid.
    pub fn interpolate(&self, x: f64, omega: f64) -> f64 {
        let (gx, gw) = (self.grid.x, self.grid.omega);
        let ux = (x - gx.min) / gx.spacing();
        let uw = (omega - gw.min) / gw.spacing();
        if !(ux > -3.0 && ux < gx.n as f64 + 2.0 && uw > -3.0 && uw < gw.n as f64 + 2.0) {
            return 0.0;
        }
        let (ix, tx) = (ux.floor(), ux - ux.floor());
        let (iw, tw) = (uw.floor(), uw - uw.floor());
        let wx = lagrange_weights(tx);
        let ww = lagrange_weights(tw);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let i = ix as isize - 2 + a as isize;
            if i < 0 || i as usize >= gx.n || *wa == 0.0 {
                continue;
            }
            let row = &self.values[i as usize * gw.n..(i as usize + 1) * gw.n];
            let mut s = 0.0;
            for (b, wb) in ww.iter().enumerate() {
                let j = iw as isize - 2 + b as isize;
                if j >= 0 && (j as usize) < gw.n {
                    s += wb * row[j as usize];
                }
            }
            acc += wa * s;
        }
        acc
    }
}

fn lagrange_weights(t: f64) -> [f64; 6] {
    if t == 0.0 {
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
    } else {
        lagrange6(t)
    }
}

/// Checks that `psi` and `psi^` have decayed at the edges of `grid`.
fn check_decay(states: &[&WaveFunction], grid: &Grid2D) -> Result<()> {
    for st in states {
        let s = st.sampler();
        let edge = s.eval(grid.x.min).norm().max(s.eval(grid.x.max).norm());
        if edge > BOUNDARY_DECAY {
            return Err(Error::GridTooNarrow {
                what: "|psi|",
                value: edge,
                limit: BOUNDARY_DECAY,
            });
        }
        let r = st.support_radius();
        let n = (2.0 * r / FINE_STEP).ceil() as usize + 1;
        let samples: Vec<Complex64> = (0..n).map(|j| s.eval(-r + j as f64 * FINE_STEP)).collect();
        let span = grid.omega.max - grid.omega.min;
        let hat = fourier_sum(&samples, -r, FINE_STEP, grid.omega.min, span, 2, 1.0);
        let edge = hat[0].norm().max(hat[1].norm());
        if edge > BOUNDARY_DECAY {
            return Err(Error::GridTooNarrow {
                what: "|psi^|",
                value: edge,
                limit: BOUNDARY_DECAY,
            });
        }
    }
    Ok(())
}

/// Wigner transform of a single pure state.
pub fn wigner(state: &WaveFunction, grid: &Grid2D) -> Result<WignerGrid> {
    wigner_ensemble(&[(1.0, state)], grid)
}

/// Wigner transform of a mixed state.
pub fn wigner_mixed(state: &MixedState, grid: &Grid2D) -> Result<WignerGrid> {
    let members: Vec<(f64, &WaveFunction)> = state.weights.iter().copied().zip(state.components.iter()).collect();
    wigner_ensemble(&members, grid)
}

/// Wigner transform of the statistical mixture `sum_k w_k |psi_k><psi_k|`.
///
/// Each row `x` accumulates the weighted autocorrelation
/// `sum_k w_k psi_k(x + t/2) conj(psi_k(x - t/2))` on a symmetric `t` lattice
/// and then evaluates its Fourier sum at the grid frequencies.
pub fn wigner_ensemble(members: &[(f64, &WaveFunction)], grid: &Grid2D) -> Result<WignerGrid> {
    if members.is_empty() {
        return Err(invalid("members", "empty ensemble"));
    }
    let states: Vec<&WaveFunction> = members.iter().map(|m| m.1).collect();
    check_decay(&states, grid)?;
    Ok(ensemble_rows(members, grid))
}

/// As [`wigner_ensemble`] without the edge-decay check. The values are
/// pointwise exact whatever the grid, since the `t` integral always spans
/// the full support of the states.
pub(crate) fn wigner_ensemble_unchecked(members: &[(f64, &WaveFunction)], grid: &Grid2D) -> WignerGrid {
    ensemble_rows(members, grid)
}

fn ensemble_rows(members: &[(f64, &WaveFunction)], grid: &Grid2D) -> WignerGrid {
    let states: Vec<&WaveFunction> = members.iter().map(|m| m.1).collect();
    let radius = states.iter().map(|s| s.support_radius()).fold(0.0, f64::max);
    let band = states.iter().map(|s| s.frequency_radius()).fold(0.0, f64::max);
    let omega_max = grid.omega.min.abs().max(grid.omega.max.abs());
    let dt = (1.0 / (2.0 * (band + omega_max) + 8.0)).min(1.0 / 32.0);
    let half = (2.0 * radius / dt).ceil() as usize;
    let t0 = -(half as f64) * dt;
    let nt = 2 * half + 1;

    let samplers: Vec<(f64, Sampler<'_>)> = members.iter().map(|(w, s)| (*w, s.sampler())).collect();
    let xs = grid.x.points();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let mut acc = vec![ZERO; nt];
            for (w, s) in &samplers {
                for (j, a) in acc.iter_mut().enumerate() {
                    let t = t0 + j as f64 * dt;
                    *a += s.eval(x + 0.5 * t) * s.eval(x - 0.5 * t).conj() * *w;
                }
            }
            let out = fourier_sum(&acc, t0, dt, grid.omega.min, grid.omega.spacing(), grid.omega.n, 1.0);
            out.into_iter().map(|c| c.re).collect()
        })
        .collect();
    WignerGrid {
        grid: *grid,
        values: rows.concat(),
    }
}

/// Pointwise Wigner value by direct quadrature of the defining integral.
pub fn wigner_point(state: &WaveFunction, x: f64, omega: f64) -> f64 {
    let s = state.sampler();
    let r = state.support_radius();
    let dt = 1.0 / 64.0;
    let half = (2.0 * r / dt).ceil() as i64;
    let mut acc = ZERO;
    for j in -half..=half {
        let t = j as f64 * dt;
        acc += s.eval(x + 0.5 * t) * s.eval(x - 0.5 * t).conj() * cis_pi(-2.0 * omega * t);
    }
    acc.re * dt
}

/// Closed-form Wigner function of the vacuum.
pub fn vacuum_wigner(x: f64, omega: f64) -> f64 {
    2.0 * (-2.0 * PI * (x * x + omega * omega)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide() -> Grid1D {
        Grid1D::symmetric(10.0, 4001).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert!((eval_psi(&WaveFunction::Fock2, 0.0).re + 2f64.powf(-0.25)).abs() < 1e-12);
        assert!((eval_psi(&WaveFunction::Vacuum, 0.0).re - 1.189_207_1).abs() < 1e-7);
        let cat = eval_psi(&WaveFunction::cat(2.0), 0.0).re;
        let expect = 2.0 * (-4.0 * PI).exp() / (2f64.powf(0.25) * (1.0 + (-8.0 * PI).exp()).sqrt());
        assert!((cat - expect).abs() < 1e-15);
        assert!((cat - 5.8651e-6).abs() < 1e-9);
    }

    #[test]
    fn cat_terms_match_formula() {
        let c = WaveFunction::cat(1.3);
        let terms = c.gaussian_terms().unwrap();
        for x in [-2.0, -0.4, 0.0, 0.9] {
            let v: Complex64 = terms.iter().map(|t| t.eval(x)).sum();
            assert!((v - c.eval(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn builtins_are_normalized() {
        for s in [
            WaveFunction::Vacuum,
            WaveFunction::Fock2,
            WaveFunction::cat(2.0),
            WaveFunction::cat(0.3),
            WaveFunction::Coherent { x0: 1.0, w0: -0.7, phase: 0.4 },
        ] {
            let n = inner_product(&s, &s, &wide());
            assert!((n.re - 1.0).abs() < 1e-8 && n.im.abs() < 1e-12, "{}", s.label());
        }
    }

    #[test]
    fn fock2_is_orthogonal_to_vacuum() {
        let ip = inner_product(&WaveFunction::Fock2, &WaveFunction::Vacuum, &wide());
        assert!(ip.norm() < 1e-8);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric() {
        let a = WaveFunction::Coherent { x0: 0.5, w0: 0.8, phase: 1.0 };
        let b = WaveFunction::cat(1.0);
        let ab = inner_product(&a, &b, &wide());
        let ba = inner_product(&b, &a, &wide());
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn coherent_overlap_closed_form() {
        let (a, b) = ((0.3, -0.2), (1.1, 0.5));
        let sa = WaveFunction::Coherent { x0: a.0, w0: a.1, phase: 0.0 };
        let sb = WaveFunction::Coherent { x0: b.0, w0: b.1, phase: 0.0 };
        let num = inner_product(&sa, &sb, &wide());
        let ta = sa.gaussian_terms().unwrap()[0];
        let tb = sb.gaussian_terms().unwrap()[0];
        let closed = ta.coeff * tb.coeff.conj() * gaussian_overlap(a, b);
        assert!((num - closed).norm() < 1e-10);
    }

    #[test]
    fn mixed_state_validates_weights() {
        assert!(MixedState::new(vec![0.5, 0.4], vec![WaveFunction::Vacuum, WaveFunction::Fock2]).is_err());
        assert!(MixedState::new(vec![1.0, 0.0], vec![WaveFunction::Vacuum, WaveFunction::Fock2]).is_err());
        assert!(MixedState::new(vec![0.5, 0.5], vec![WaveFunction::Vacuum, WaveFunction::Fock2]).is_ok());
    }

    #[test]
    fn vacuum_wigner_matches_closed_form() {
        let g = Grid2D::square(4.0, 65).unwrap();
        let w = wigner(&WaveFunction::Vacuum, &g).unwrap();
        for i in (0..65).step_by(7) {
            for j in (0..65).step_by(5) {
                let exact = vacuum_wigner(g.x.point(i), g.omega.point(j));
                assert!((w.at(i, j) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = Grid2D::square(1.0, 33).unwrap();
        assert!(matches!(wigner(&WaveFunction::cat(2.0), &g), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn tabulated_linear_interpolation() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let t = Tabulated::new(g, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]).unwrap();
        let w = WaveFunction::Tabulated(t);
        assert!((w.eval(0.25) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((w.eval(0.75) - Complex64::new(0.5, 1.0)).norm() < 1e-15);
        assert_eq!(w.eval(1.5), ZERO);
    }
}
