//! Correlated source pairs with equal marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Marginal {
    Gaussian {
        variance: f64,
    },
    /// Uniform on `[−half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
}

impl Marginal {
    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Gaussian { variance } => variance,
            Marginal::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Differential entropy in bits per component.
    pub fn differential_entropy(&self) -> f64 {
        match *self {
            Marginal::Gaussian { variance } => {
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2()
            }
            Marginal::Uniform { half_width } => (2.0 * half_width).log2(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Marginal::Gaussian { variance } => {
                let z: f64 = StandardNormal.sample(rng);
                variance.sqrt() * z
            }
            Marginal::Uniform { half_width } => rng.random_range(-half_width..half_width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Correlation {
    /// `X₂ = X₁`.
    Identical,
    /// `X₂ = ρX₁ + √(1−ρ²)W` with `W` an independent copy; Gaussian marginals only.
    GaussianCorrelated { rho: f64 },
    /// `X₂ = X₁ + D` with `D` uniform on the ball of radius `δ√n`. The
    /// marginal of `X₂` is then a slightly smoothed copy of the marginal of `X₁`.
    BoundedDifference { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub marginal: Marginal,
    pub correlation: Correlation,
    pub n: usize,
}

/// One draw `(x₁ⁿ, x₂ⁿ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl SourceModel {
    pub fn new(marginal: Marginal, correlation: Correlation, n: usize) -> Result<Self> {
        let model = Self {
            marginal,
            correlation,
            n,
        };
        model.check()?;
        Ok(model)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("block dimension must be positive".into()));
        }
        match self.marginal {
            Marginal::Gaussian { variance } if !(variance > 0.0 && variance.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "variance must be positive, got {variance}"
                )))
            }
            Marginal::Uniform { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "uniform half-width must be positive, got {half_width}"
                )))
            }
            _ => {}
        }
        match self.correlation {
            Correlation::GaussianCorrelated { rho } => {
                if !(-1.0..=1.0).contains(&rho) {
                    return Err(Error::InvalidParameter(format!("rho must lie in [-1, 1], got {rho}")));
                }
                if !matches!(self.marginal, Marginal::Gaussian { .. }) {
                    return Err(Error::InvalidParameter(
                        "the correlated mode keeps marginals equal only for Gaussian sources".into(),
                    ));
                }
            }
            Correlation::BoundedDifference { delta } if !(delta >= 0.0 && delta.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "delta must be nonnegative, got {delta}"
                )))
            }
            _ => {}
        }
        Ok(())
    }

    /// Per-component differential entropy of the marginal, in bits.
    pub fn differential_entropy(&self) -> f64 {
        self.marginal.differential_entropy()
    }
}

/// Deterministic sampler; `stream` separates parallel workers sharing a seed.
pub struct PairSampler {
    model: SourceModel,
    rng: ChaCha8Rng,
    dir: Vec<f64>,
}

impl PairSampler {
    pub fn new(model: SourceModel, seed: u64, stream: u64) -> Result<Self> {
        model.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            model,
            rng,
            dir: vec![0.0; model.n],
        })
    }

    pub fn fill(&mut self, x1: &mut [f64], x2: &mut [f64]) {
        let n = self.model.n;
        for v in x1.iter_mut() {
            *v = self.model.marginal.draw(&mut self.rng);
        }
        match self.model.correlation {
            Correlation::Identical => x2.copy_from_slice(x1),
            Correlation::GaussianCorrelated { rho } => {
                let s = (1.0 - rho * rho).max(0.0).sqrt();
                for (b, a) in x2.iter_mut().zip(x1.iter()) {
                    let w = self.model.marginal.draw(&mut self.rng);
                    *b = rho * a + s * w;
                }
            }
            Correlation::BoundedDifference { delta } => {
                let radius = delta * (n as f64).sqrt();
                loop {
                    for d in self.dir.iter_mut() {
                        *d = StandardNormal.sample(&mut self.rng);
                    }
                    let norm = self.dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        let u: f64 = self.rng.random();
                        let r = radius * u.powf(1.0 / n as f64) / norm;
                        for ((b, a), d) in x2.iter_mut().zip(x1.iter()).zip(&self.dir) {
                            *b = a + r * d;
                        }
                        break;
                    }
                }
            }
        }
    }

    pub fn next_pair(&mut self) -> SourcePair {
        let n = self.model.n;
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        self.fill(&mut first, &mut second);
        SourcePair { first, second }
    }
}

pub fn sample_pairs(model: &SourceModel, count: usize, seed: u64) -> Result<Vec<SourcePair>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let mut s = PairSampler::new(*model, seed, 0)?;
    Ok((0..count).map(|_| s.next_pair()).collect())
}

/// Monte Carlo estimate of `P[‖X₂ − X₁‖ ≥ r₀]` with a 99% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub half_width: f64,
    pub count: u64,
}

pub fn tail_probability(model: &SourceModel, r0: f64, count: u64, seed: u64) -> Result<TailEstimate> {
    if r0.is_nan() || r0 <= 0.0 {
        return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let mut s = PairSampler::new(*model, seed, 0)?;
    let n = model.n;
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    let r2 = r0 * r0;
    let mut hits = 0u64;
    for _ in 0..count {
        s.fill(&mut x1, &mut x2);
        let d: f64 = x1.iter().zip(&x2).map(|(a, b)| (b - a).powi(2)).sum();
        if d >= r2 {
            hits += 1;
        }
    }
    Ok(tail_from_counts(hits, count))
}

pub fn tail_from_counts(hits: u64, count: u64) -> TailEstimate {
    let p = hits as f64 / count as f64;
    TailEstimate {
        probability: p,
        half_width: 2.576 * (p * (1.0 - p) / count as f64).sqrt(),
        count,
    }
}

/// Markov bound `2n(1−ρ)σ²/r₀²` on the tail probability.
pub fn markov_rho_bound(n: usize, sigma2: f64, rho: f64, r0: f64) -> f64 {
    2.0 * n as f64 * (1.0 - rho) * sigma2 / (r0 * r0)
}

/// One-sample Kolmogorov–Smirnov distance to `N(0, σ²)`.
pub fn ks_distance_gaussian(samples: &[f64], sigma2: f64) -> f64 {
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("positive variance");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(count: usize) -> f64 {
    1.628 / (count as f64).sqrt()
}
