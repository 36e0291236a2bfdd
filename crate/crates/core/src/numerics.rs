//! Numerical building blocks: Bluestein chirp-z sums, uniform-table
//! interpolation and Gauss–Hermite rules.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// `exp(i pi a)` with the argument reduced modulo 2 first.
#[inline]
pub(crate) fn cis_pi(a: f64) -> Complex64 {
    let r = a.rem_euclid(2.0);
    Complex64::from_polar(1.0, PI * r)
}

/// In-place unnormalized inverse DFT (`exp(+2 pi i jk/n)`).
pub(crate) fn inverse_dft(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// Forward DFT (`exp(-2 pi i jk/n)`).
pub(crate) fn forward_dft(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// Chirp-z transform `X_k = sum_j a_j exp(-2 pi i beta j k)` for `k < m`.
///
/// Bluestein's identity `jk = (j^2 + k^2 - (k - j)^2) / 2` turns the sum into
/// a linear convolution evaluated with three FFTs.
pub fn chirp_z(input: &[Complex64], m: usize, beta: f64) -> Vec<Complex64> {
    let n = input.len();
    if n == 0 || m == 0 {
        return vec![Complex64::new(0.0, 0.0); m];
    }
    if n * m <= 4096 {
        return (0..m)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * cis_pi(-2.0 * beta * (j as f64) * (k as f64)))
                    .sum()
            })
            .collect();
    }
    let len = (n + m - 1).next_power_of_two();
    let chirp = |q: usize| cis_pi(beta * (q as f64) * (q as f64));

    let mut u = vec![Complex64::new(0.0, 0.0); len];
    for (j, a) in input.iter().enumerate() {
        u[j] = a * chirp(j).conj();
    }
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    for (q, slot) in v.iter_mut().enumerate().take(m) {
        *slot = chirp(q);
    }
    for q in 1..n {
        v[len - q] = chirp(q);
    }
    forward_dft(&mut u);
    forward_dft(&mut v);
    for (a, b) in u.iter_mut().zip(&v) {
        *a *= b;
    }
    inverse_dft(&mut u);
    let scale = 1.0 / len as f64;
    (0..m).map(|k| u[k] * chirp(k).conj() * scale).collect()
}

/// Trapezoid approximation of `integral f(z) exp(-2 pi i s x z) dz` on the
/// output nodes `x_k = x0 + k dx`, from samples `f(z0 + j h)`.
pub fn fourier_sum(
    samples: &[Complex64],
    z0: f64,
    h: f64,
    x0: f64,
    dx: f64,
    m: usize,
    s: f64,
) -> Vec<Complex64> {
    let pre: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, f)| f * cis_pi(-2.0 * s * x0 * h * j as f64))
        .collect();
    let mut out = chirp_z(&pre, m, s * dx * h);
    for (k, v) in out.iter_mut().enumerate() {
        let xk = x0 + k as f64 * dx;
        *v *= cis_pi(-2.0 * s * xk * z0) * h;
    }
    out
}

const LAGRANGE_DENOMS: [f64; 6] = [-120.0, 24.0, -12.0, 12.0, -24.0, 120.0];

/// Six-point Lagrange weights for nodes at offsets `-2..=3`, evaluated at `t`.
#[inline]
pub(crate) fn lagrange6(t: f64) -> [f64; 6] {
    let d = [t + 2.0, t + 1.0, t, t - 1.0, t - 2.0, t - 3.0];
    let mut w = [0.0; 6];
    for k in 0..6 {
        let mut p = 1.0;
        for (j, dj) in d.iter().enumerate() {
            if j != k {
                p *= dj;
            }
        }
        w[k] = p / LAGRANGE_DENOMS[k];
    }
    w
}

/// Samples on a uniform grid, extended by zero, with local sixth-order
/// interpolation.
#[derive(Debug, Clone)]
pub struct UniformTable<T> {
    pub start: f64,
    pub step: f64,
    pub values: Vec<T>,
}

impl<T> UniformTable<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    pub fn new(start: f64, step: f64, values: Vec<T>) -> Self {
        Self {
            start,
            step,
            values,
        }
    }

    pub fn from_fn(start: f64, step: f64, n: usize, f: impl Fn(f64) -> T) -> Self {
        let values = (0..n).map(|i| f(start + i as f64 * step)).collect();
        Self::new(start, step, values)
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() as f64 - 1.0)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    #[inline]
    fn at(&self, i: isize) -> T {
        if i < 0 || i as usize >= self.values.len() {
            T::default()
        } else {
            self.values[i as usize]
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> T {
        let u = (x - self.start) / self.step;
        let n = self.values.len() as f64;
        if !(u > -3.0 && u < n + 2.0) {
            return T::default();
        }
        let i = u.floor();
        let t = u - i;
        let i = i as isize;
        if t == 0.0 {
            return self.at(i);
        }
        let w = lagrange6(t);
        let mut acc = T::default();
        for (k, wk) in w.iter().enumerate() {
            acc = acc + self.at(i - 2 + k as isize) * *wk;
        }
        acc
    }
}

/// Gauss–Hermite rule for weight `exp(-t^2)` via the Golub–Welsch
/// eigenproblem.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// `E[f(X)]` for `X ~ N(mean, sd^2)`.
    pub fn expect(&self, mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mean + scale * t))
            .sum();
        s / PI.sqrt()
    }
}
