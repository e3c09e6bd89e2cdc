//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use lrdsc::{Correlation, IntMatrix, Lattice, LatticeKind, Marginal, SourceModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub ladder: LadderSection,
    #[serde(default)]
    pub r0: R0Rule,
    pub source: SourceSection,
    #[serde(default)]
    pub codec: CodecSection,
    /// Pairs simulated per ladder point.
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Pairs for the last ladder point, where entropy tables are largest.
    /// Defaults to `samples`.
    #[serde(default)]
    pub final_samples: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_samples() -> u64 {
    100_000
}

/// The central lattice is `θ·Λ₀` for the family's unit lattice `Λ₀`; the
/// intermediate lattice is fixed relative to it, so `K` does not change
/// along the ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub family: LatticeKind,
    /// Dimension; implied for the hexagonal family.
    #[serde(default)]
    pub n: Option<usize>,
    /// Row-major generator of `Λ₀` for the generic family.
    #[serde(default)]
    pub basis: Option<Vec<f64>>,
    /// Intermediate lattice `a·Λ_c`, giving `K = aⁿ`.
    #[serde(default)]
    pub index_scale: Option<i64>,
    /// Row-major integer basis of the intermediate lattice in central
    /// coefficients. Overrides `index_scale`.
    #[serde(default)]
    pub sublattice: Option<Vec<i64>>,
    /// Expected `K`; checked against the sublattice when given.
    #[serde(default)]
    pub k: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// `(θ[i], μ[i])`; both ladders have the same length.
    #[default]
    Zip,
    /// Every `θ` with every `μ`, `θ` outermost.
    Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub theta: Vec<f64>,
    pub mu: Vec<i64>,
    #[serde(default)]
    pub pairing: Pairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum R0Rule {
    /// `min(r_in − 2r̄_c, r_c/2)`.
    #[default]
    Default,
    Fixed {
        value: f64,
    },
    /// A multiple of the central inscribed radius `r_c`.
    FractionOfRc {
        fraction: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub marginal: Marginal,
    pub correlation: Correlation,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecSection {
    /// Decoder threshold constant; defaults to `μ`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub unsafe_small_mu: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

/// One `(θ, μ)` pair of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub theta: f64,
    pub mu: i64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        match self.lattice.family {
            LatticeKind::Hexagonal => 2,
            _ => self.lattice.n.unwrap_or(0),
        }
    }

    pub fn check(&self) -> Result<()> {
        let l = &self.lattice;
        match l.family {
            LatticeKind::Hexagonal => {
                ensure!(l.n.is_none_or(|n| n == 2), "the hexagonal family is two-dimensional");
                ensure!(l.basis.is_none(), "the hexagonal family takes no basis");
            }
            LatticeKind::IntegerGrid => {
                ensure!(l.n.is_some_and(|n| n >= 1), "integer-grid needs n ≥ 1");
                ensure!(l.basis.is_none(), "the integer-grid family takes no basis");
            }
            LatticeKind::Generic => {
                let n = l.n.context("generic needs n")?;
                let b = l.basis.as_ref().context("generic needs a basis")?;
                ensure!(b.len() == n * n, "basis has {} entries, expected {}", b.len(), n * n);
            }
        }
        let n = self.dim();
        match (&l.sublattice, l.index_scale) {
            (Some(b), _) => ensure!(
                b.len() == n * n,
                "sublattice has {} entries, expected {}",
                b.len(),
                n * n
            ),
            (None, Some(a)) => ensure!(a >= 1, "index_scale must be at least 1"),
            (None, None) => bail!("give lattice.index_scale or lattice.sublattice"),
        }
        if let Some(k) = l.k {
            let got = self.sublattice().determinant().unsigned_abs();
            ensure!(got == k, "sublattice has index {got}, but k = {k}");
        }

        let lad = &self.ladder;
        ensure!(!lad.theta.is_empty() && !lad.mu.is_empty(), "ladders must be nonempty");
        for &t in &lad.theta {
            ensure!(t.is_finite() && t > 0.0, "theta must be positive, got {t}");
        }
        for &m in &lad.mu {
            ensure!(m >= 2 && m % 2 == 0, "mu must be an even integer ≥ 2, got {m}");
        }
        if lad.pairing == Pairing::Zip {
            ensure!(
                lad.theta.len() == lad.mu.len(),
                "zip pairing needs ladders of equal length ({} vs {})",
                lad.theta.len(),
                lad.mu.len()
            );
            for w in self.points().windows(2) {
                let (a, b) = (w[0], w[1]);
                let scale_a = (a.mu * a.mu) as f64 * a.theta;
                let scale_b = (b.mu * b.mu) as f64 * b.theta;
                ensure!(
                    b.theta < a.theta && b.mu >= a.mu && scale_b < scale_a,
                    "ladder must move θ down, μ up and μ²θ down; ({}, {}) → ({}, {}) does not",
                    a.theta,
                    a.mu,
                    b.theta,
                    b.mu
                );
            }
        }

        match self.r0 {
            R0Rule::Fixed { value } => ensure!(value.is_finite() && value > 0.0, "r0 must be positive"),
            R0Rule::FractionOfRc { fraction } => {
                ensure!(fraction.is_finite() && fraction > 0.0, "r0 fraction must be positive")
            }
            R0Rule::Default => {}
        }
        if let Some(c) = self.codec.c {
            ensure!(c.is_finite() && c > 0.0, "codec.c must be positive");
        }
        ensure!(self.samples >= 1, "samples must be positive");
        if let Some(s) = self.final_samples {
            ensure!(s >= 1, "final_samples must be positive");
        }
        self.source_model()?;
        Ok(())
    }

    pub fn points(&self) -> Vec<LadderPoint> {
        let lad = &self.ladder;
        match lad.pairing {
            Pairing::Zip => lad
                .theta
                .iter()
                .zip(&lad.mu)
                .map(|(&theta, &mu)| LadderPoint { theta, mu })
                .collect(),
            Pairing::Grid => lad
                .theta
                .iter()
                .flat_map(|&theta| lad.mu.iter().map(move |&mu| LadderPoint { theta, mu }))
                .collect(),
        }
    }

    /// Pairs to simulate at ladder position `index`.
    pub fn samples_at(&self, index: usize) -> u64 {
        if index + 1 == self.points().len() {
            self.final_samples.unwrap_or(self.samples)
        } else {
            self.samples
        }
    }

    pub fn sublattice(&self) -> IntMatrix {
        let n = self.dim();
        match (&self.lattice.sublattice, self.lattice.index_scale) {
            (Some(b), _) => IntMatrix::new(n, b.clone()),
            (None, Some(a)) => IntMatrix::scalar(n, a),
            (None, None) => IntMatrix::identity(n),
        }
    }

    /// `θ·Λ₀`.
    pub fn central_lattice(&self, theta: f64) -> Result<Lattice> {
        let l = &self.lattice;
        Ok(match l.family {
            LatticeKind::IntegerGrid => Lattice::integer_grid(self.dim(), theta)?,
            LatticeKind::Hexagonal => Lattice::hexagonal(theta)?,
            LatticeKind::Generic => Lattice::generic(self.dim(), l.basis.clone().unwrap_or_default(), theta)?,
        })
    }

    pub fn source_model(&self) -> Result<SourceModel> {
        Ok(SourceModel::new(
            self.source.marginal,
            self.source.correlation,
            self.dim(),
        )?)
    }
}
