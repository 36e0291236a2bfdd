//! Synthetic homodyne data: uniform phases, rejection sampling of clean
//! quadratures, and additive efficiency noise.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{cat_conditional, fock2_conditional, NoiseModel};
use crate::states::{MixedState, WaveFunction};

/// Seeded generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum acceptance rate tolerated by the rejection samplers.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Standard deviation of the vacuum quadrature, `(4 pi)^{-1/2}`.
pub fn vacuum_sd() -> f64 {
    (4.0 * PI).sqrt().recip()
}

/// One observation: noisy quadrature `y` at phase `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub y: f64,
    pub theta: f64,
}

/// Description of a state that can be simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    Vacuum,
    Cat { x0: f64 },
    Fock2,
    Mixed { weights: Vec<f64>, components: Vec<StateSpec> },
}

impl StateSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Cat { x0 } if !x0.is_finite() => Err(invalid("x0", "must be finite")),
            StateSpec::Mixed { components, .. } => {
                if components.iter().any(|c| matches!(c, StateSpec::Mixed { .. })) {
                    return Err(invalid("components", "mixed components must be pure states"));
                }
                self.mixed_state().map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StateSpec::Vacuum => "vacuum".into(),
            StateSpec::Cat { .. } => "cat".into(),
            StateSpec::Fock2 => "fock2".into(),
            StateSpec::Mixed { .. } => "mixed".into(),
        }
    }

    pub fn x0(&self) -> Option<f64> {
        match self {
            StateSpec::Cat { x0 } => Some(*x0),
            _ => None,
        }
    }

    /// Pure wave function, if the state is pure.
    pub fn wave_function(&self) -> Option<WaveFunction> {
        match self {
            StateSpec::Vacuum => Some(WaveFunction::Vacuum),
            StateSpec::Cat { x0 } => Some(WaveFunction::cat(*x0)),
            StateSpec::Fock2 => Some(WaveFunction::Fock2),
            StateSpec::Mixed { .. } => None,
        }
    }

    /// The state as a mixture (a pure state is a one-component mixture).
    pub fn mixed_state(&self) -> Result<MixedState> {
        match self {
            StateSpec::Mixed { weights, components } => {
                let comps = components
                    .iter()
                    .map(|c| c.wave_function().ok_or_else(|| invalid("components", "must be pure")))
                    .collect::<Result<Vec<_>>>()?;
                MixedState::new(weights.clone(), comps)
            }
            pure => MixedState::new(vec![1.0], vec![pure.wave_function().expect("pure")]),
        }
    }
}

struct Budget {
    proposed: u64,
    accepted: u64,
}

impl Budget {
    fn new() -> Self {
        Self { proposed: 0, accepted: 0 }
    }

    fn record(&mut self, accepted: bool) -> Result<()> {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.proposed >= 10_000 {
            let rate = self.accepted as f64 / self.proposed as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::RejectionBudgetExceeded {
                    rate,
                    limit: MIN_ACCEPTANCE,
                });
            }
        }
        Ok(())
    }
}

/// Envelope constant for the cat target over the two-Gaussian candidate:
/// `sup_x p_cat / q = 2 / (1 + e^{-2 pi x0^2})`.
pub fn cat_envelope(x0: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * PI * x0 * x0).exp())
}

fn normal(rng: &mut SeededRng) -> f64 {
    StandardNormal.sample(rng)
}

fn uniform_theta(rng: &mut SeededRng) -> f64 {
    rng.random::<f64>() * PI
}

/// Draws `x | theta` from the cat conditional density.
fn cat_given_theta(x0: f64, theta: f64, rng: &mut SeededRng, budget: &mut Budget) -> Result<f64> {
    let sd = vacuum_sd();
    let c = x0 * theta.cos();
    let m = cat_envelope(x0);
    loop {
        let centre = if rng.random::<bool>() { c } else { -c };
        let x = centre + sd * normal(rng);
        let g2 = |u: f64| std::f64::consts::SQRT_2 * (-2.0 * PI * u * u).exp();
        let q = 0.5 * (g2(x - c) + g2(x + c));
        let u: f64 = rng.random();
        let accept = u * m * q <= cat_conditional(x0, x, theta);
        budget.record(accept)?;
        if accept {
            return Ok(x);
        }
    }
}

/// Clean `(x, theta)` pairs from the cat state.
pub fn sample_cat(n: usize, x0: f64, rng: &mut SeededRng) -> Result<Vec<(f64, f64)>> {
    let mut budget = Budget::new();
    (0..n)
        .map(|_| {
            let theta = uniform_theta(rng);
            Ok((cat_given_theta(x0, theta, rng, &mut budget)?, theta))
        })
        .collect()
}

/// Scale of the Laplace candidate for the Fock-2 sampler.
pub fn fock2_laplace_scale() -> f64 {
    1.2 * vacuum_sd()
}

/// `sup_x p_2(x) / laplace(x)`, located by a fine scan plus a small margin.
pub fn fock2_envelope() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        let b = fock2_laplace_scale();
        let ratio = |x: f64| fock2_conditional(x) / ((-x.abs() / b).exp() / (2.0 * b));
        let best = (0..=80_000).map(|i| ratio(i as f64 * 1e-4)).fold(0.0, f64::max);
        best * 1.001
    })
}

fn fock2_draw(rng: &mut SeededRng, budget: &mut Budget) -> Result<f64> {
    let b = fock2_laplace_scale();
    let m = fock2_envelope();
    loop {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln() * b;
        let x = if rng.random::<bool>() { e } else { -e };
        let q = (-x.abs() / b).exp() / (2.0 * b);
        let u: f64 = rng.random();
        let accept = u * m * q <= fock2_conditional(x);
        budget.record(accept)?;
        if accept {
            return Ok(x);
        }
    }
}

/// Clean `(x, theta)` pairs from the two-photon state.
pub fn sample_fock2(n: usize, rng: &mut SeededRng) -> Result<Vec<(f64, f64)>> {
    let mut budget = Budget::new();
    (0..n)
        .map(|_| {
            let theta = uniform_theta(rng);
            Ok((fock2_draw(rng, &mut budget)?, theta))
        })
        .collect()
}

/// Clean samples from any supported state.
pub fn sample_clean(spec: &StateSpec, n: usize, rng: &mut SeededRng) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    match spec {
        StateSpec::Cat { x0 } => sample_cat(n, *x0, rng),
        StateSpec::Fock2 => sample_fock2(n, rng),
        StateSpec::Vacuum => Ok((0..n)
            .map(|_| {
                let theta = uniform_theta(rng);
                (vacuum_sd() * normal(rng), theta)
            })
            .collect()),
        StateSpec::Mixed { weights, components } => {
            let mut budget = Budget::new();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = components.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                let theta = uniform_theta(rng);
                let x = match &components[k] {
                    StateSpec::Cat { x0 } => cat_given_theta(*x0, theta, rng, &mut budget)?,
                    StateSpec::Fock2 => fock2_draw(rng, &mut budget)?,
                    _ => vacuum_sd() * normal(rng),
                };
                out.push((x, theta));
            }
            Ok(out)
        }
    }
}

/// `y = x + sqrt((1 - eta) / eta) xi` with `xi ~ N(0, 1/(4 pi))`.
pub fn add_noise(clean: &[(f64, f64)], nm: &NoiseModel, rng: &mut SeededRng) -> Vec<QuadratureSample> {
    if nm.is_ideal() {
        return clean.iter().map(|&(y, theta)| QuadratureSample { y, theta }).collect();
    }
    let sd = nm.sd();
    clean
        .iter()
        .map(|&(x, theta)| QuadratureSample {
            y: x + sd * normal(rng),
            theta,
        })
        .collect()
}

/// Sidecar metadata of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub state: String,
    pub x0: Option<f64>,
    pub eta: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<StateSpec>,
    #[serde(default)]
    pub version: String,
}

/// Observations plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<QuadratureSample>,
    pub meta: DatasetMeta,
}

/// Simulates a full dataset from a seed.
pub fn simulate(spec: &StateSpec, n: usize, nm: &NoiseModel, seed: u64) -> Result<Dataset> {
    let mut rng = seeded_rng(seed);
    let clean = sample_clean(spec, n, &mut rng)?;
    let samples = add_noise(&clean, nm, &mut rng);
    Ok(Dataset {
        samples,
        meta: DatasetMeta {
            state: spec.label(),
            x0: spec.x0(),
            eta: nm.eta,
            n,
            seed,
            spec: Some(spec.clone()),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

/// Formats with nine significant digits, using the shortest decimal that
/// round-trips the rounded value.
pub fn fmt9(v: f64) -> String {
    let r: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if r != 0.0 && !(1e-4..1e16).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Sidecar path `data.meta.json` for `data.csv`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes `y,theta` CSV and the JSON sidecar.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
        w.write_record(["y", "theta"])?;
        for s in &self.samples {
            w.write_record([fmt9(s.y), fmt9(s.theta)])?;
        }
        w.flush()?;
        let mut f = BufWriter::new(File::create(meta_path(csv_path))?);
        serde_json::to_writer_pretty(&mut f, &self.meta)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads the CSV and, when present, its sidecar.
    pub fn read(csv_path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_reader(File::open(csv_path)?);
        let headers = r.headers()?.clone();
        let yi = headers.iter().position(|h| h == "y").ok_or_else(|| Error::Format("missing column `y`".into()))?;
        let ti = headers
            .iter()
            .position(|h| h == "theta")
            .ok_or_else(|| Error::Format("missing column `theta`".into()))?;
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad number in row {}", samples.len() + 1)))
            };
            let s = QuadratureSample {
                y: parse(yi)?,
                theta: parse(ti)?,
            };
            if !(0.0..=PI + 1e-9).contains(&s.theta) {
                return Err(Error::Format(format!("theta {} outside [0, pi]", s.theta)));
            }
            samples.push(s);
        }
        let mp = meta_path(csv_path);
        let meta = if mp.exists() {
            serde_json::from_reader(File::open(mp)?)?
        } else {
            DatasetMeta {
                state: "unknown".into(),
                x0: None,
                eta: 1.0,
                n: samples.len(),
                seed: 0,
                spec: None,
                version: String::new(),
            }
        };
        if meta.n != samples.len() {
            return Err(Error::Format(format!("meta declares n = {} but file has {} rows", meta.n, samples.len())));
        }
        Ok(Self { samples, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_requests() {
        let mut rng = seeded_rng(1);
        assert!(sample_cat(0, 2.0, &mut rng).unwrap().is_empty());
        assert!(sample_fock2(0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn cat_envelope_bounds_ratio() {
        let x0 = 2.0;
        let m = cat_envelope(x0);
        for theta in [0.0, 0.5, PI / 2.0, 2.5] {
            let c = x0 * f64::cos(theta);
            for k in -400..=400 {
                let x = k as f64 * 0.01;
                let g2 = |u: f64| std::f64::consts::SQRT_2 * (-2.0 * PI * u * u).exp();
                let q = 0.5 * (g2(x - c) + g2(x + c));
                assert!(cat_conditional(x0, x, theta) <= m * q * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn fock2_envelope_bounds_ratio() {
        let b = fock2_laplace_scale();
        let m = fock2_envelope();
        for k in 0..5000 {
            let x = k as f64 * 1.3e-3;
            assert!(fock2_conditional(x) <= m * (-x / b).exp() / (2.0 * b));
        }
    }

    #[test]
    fn ideal_noise_passes_through() {
        let clean = vec![(0.3, 1.0), (-1.2, 0.1)];
        let mut rng = seeded_rng(3);
        let out = add_noise(&clean, &NoiseModel::ideal(), &mut rng);
        assert_eq!(out[0].y, 0.3);
        assert_eq!(out[1].y, -1.2);
    }

    #[test]
    fn fmt9_rounds() {
        assert_eq!(fmt9(0.1), "0.1");
        assert_eq!(fmt9(PI), "3.14159265");
        assert_eq!(fmt9(-1.234567891234e-7), "-1.23456789e-7");
    }

    #[test]
    fn round_trip_and_determinism() {
        let nm = NoiseModel::new(0.95).unwrap();
        let d = simulate(&StateSpec::Cat { x0: 2.0 }, 50, &nm, 7).unwrap();
        let e = simulate(&StateSpec::Cat { x0: 2.0 }, 50, &nm, 7).unwrap();
        assert_eq!(d, e);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("data.csv");
        d.write(&p).unwrap();
        let r = Dataset::read(&p).unwrap();
        assert_eq!(r.meta, d.meta);
        for (a, b) in r.samples.iter().zip(&d.samples) {
            assert!((a.y - b.y).abs() <= 1e-8 * a.y.abs().max(1e-300));
        }
    }
}
