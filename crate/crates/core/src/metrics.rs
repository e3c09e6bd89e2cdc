//! Distortion, entropy estimates and rate accounting.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyEstimator {
    #[default]
    PlugIn,
    /// Plug-in plus the `(S − 1)/(2N ln 2)` bias correction.
    MillerMadow,
}

/// Symbol counts keyed by exact integer coordinates. Tables merge by
/// adding counts, so workers can fill their own and combine afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable<K: Hash + Eq> {
    counts: HashMap<K, u64>,
    total: u64,
}

impl<K: Hash + Eq> Default for CountTable<K> {
    fn default() -> Self {
        Self {
            counts: HashMap::new(),
            total: 0,
        }
    }
}

impl<K: Hash + Eq + Clone> CountTable<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn add_ref(&mut self, key: &K) {
        if let Some(c) = self.counts.get_mut(key) {
            *c += 1;
        } else {
            self.counts.insert(key.clone(), 1);
        }
        self.total += 1;
    }

    pub fn merge(&mut self, other: &CountTable<K>) {
        for (k, &c) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct observed symbols.
    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &u64)> {
        self.counts.iter()
    }

    pub fn entropy(&self, estimator: EntropyEstimator) -> Result<f64> {
        let h = plug_in_entropy(self.counts.values().copied())?;
        Ok(match estimator {
            EntropyEstimator::PlugIn => h,
            EntropyEstimator::MillerMadow => {
                h + (self.support() as f64 - 1.0) / (2.0 * self.total as f64 * std::f64::consts::LN_2)
            }
        })
    }
}

impl<A: Hash + Eq + Clone, B: Hash + Eq + Clone> CountTable<(A, B)> {
    pub fn first_marginal(&self) -> CountTable<A> {
        let mut out = CountTable::new();
        for ((a, _), &c) in &self.counts {
            *out.counts.entry(a.clone()).or_insert(0) += c;
        }
        out.total = self.total;
        out
    }

    pub fn second_marginal(&self) -> CountTable<B> {
        let mut out = CountTable::new();
        for ((_, b), &c) in &self.counts {
            *out.counts.entry(b.clone()).or_insert(0) += c;
        }
        out.total = self.total;
        out
    }
}

/// `−Σ p̂ log₂ p̂` with `0·log 0 = 0`, in bits.
pub fn plug_in_entropy(counts: impl IntoIterator<Item = u64>) -> Result<f64> {
    let mut counts: Vec<u64> = counts.into_iter().collect();
    // table iteration order is random; a fixed summation order keeps output reproducible
    counts.sort_unstable();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("entropy of an empty table".into()));
    }
    let t = total as f64;
    let s: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64).log2())
        .sum();
    Ok((t.log2() - s / t).max(0.0))
}

/// `H(A, B) − H(A)` from one joint table.
pub fn conditional_entropy<A, B>(joint: &CountTable<(A, B)>, estimator: EntropyEstimator) -> Result<f64>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    // nonnegative for both estimators; the clamp only removes rounding
    Ok((joint.entropy(estimator)? - joint.first_marginal().entropy(estimator)?).max(0.0))
}

/// Mean of `(1/n)‖x − x̂‖²` over paired streams.
pub fn empirical_distortion(originals: &[Vec<f64>], reconstructions: &[Vec<f64>], n: usize) -> Result<f64> {
    if originals.is_empty() {
        return Err(Error::InvalidParameter("empty stream".into()));
    }
    if originals.len() != reconstructions.len() {
        return Err(Error::InvalidParameter("streams have different lengths".into()));
    }
    let mut acc = DistortionSum::default();
    for (x, y) in originals.iter().zip(reconstructions) {
        acc.add(x, y);
    }
    Ok(acc.mean(n))
}

/// Running sum of squared errors; mergeable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionSum {
    pub sum: f64,
    pub count: u64,
}

impl DistortionSum {
    #[inline]
    pub fn add(&mut self, x: &[f64], y: &[f64]) {
        self.sum += x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        self.count += 1;
    }

    pub fn merge(&mut self, other: &DistortionSum) {
        self.sum += other.sum;
        self.count += other.count;
    }

    /// Per-component mean squared error.
    pub fn mean(&self, n: usize) -> f64 {
        self.sum / (self.count as f64 * n as f64)
    }
}

/// Components of the sum rate, all estimated from one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub n: usize,
    /// `H(λ_{s,i})`, bits per block.
    pub h_side: [f64; 2],
    /// Boundary-flag probabilities `𝒫_i`.
    pub p_boundary: [f64; 2],
    /// `H(U₁, U₂)`, bits per block.
    pub h_joint_u: f64,
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Bits per block spent on `b_i` and `τ_i`: binary entropy of the flag plus
/// `n` bits whenever it is set.
pub fn boundary_overhead(p: f64, n: usize) -> f64 {
    -xlog2x(1.0 - p) - xlog2x(p) + p * n as f64
}

/// Sum rate in bits per sample: side labels, boundary flags with their
/// fixed-length `τ`, and the ideal Slepian–Wolf cost `H(U₁,U₂)`.
pub fn rate_account(inputs: &RateInputs) -> Result<f64> {
    for &p in &inputs.p_boundary {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "boundary probability {p} outside [0,1]"
            )));
        }
    }
    let n = inputs.n as f64;
    let per_encoder: f64 = (0..2)
        .map(|i| inputs.h_side[i] + boundary_overhead(inputs.p_boundary[i], inputs.n))
        .sum();
    Ok((per_encoder + inputs.h_joint_u) / n)
}

/// Measured quantities for one experiment point. Entropies are in bits per
/// block; `sum_rate` is in bits per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdReport {
    pub d_side: [f64; 2],
    pub d_central: [f64; 2],
    pub h_side: [f64; 2],
    pub p_boundary: [f64; 2],
    pub h_u: [f64; 2],
    pub h_joint_u: f64,
    pub h_cond_u: f64,
    pub sum_rate: f64,
    pub sample_count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        assert_eq!(plug_in_entropy([7]).unwrap(), 0.0);
        assert!((plug_in_entropy([5, 5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((plug_in_entropy([3; 8]).unwrap() - 3.0).abs() < 1e-14);
        assert!((plug_in_entropy([4, 0, 4]).unwrap() - 1.0).abs() < 1e-15);
        assert!(plug_in_entropy([0, 0]).is_err());
    }

    #[test]
    fn conditional_entropy_extremes() {
        let mut same = CountTable::new();
        let mut indep = CountTable::new();
        for a in 0..4i64 {
            same.add((vec![a], vec![a]));
            for b in 0..4i64 {
                indep.add((vec![a], vec![b]));
            }
        }
        assert!(conditional_entropy(&same, EntropyEstimator::PlugIn).unwrap().abs() < 1e-14);
        assert!((conditional_entropy(&indep, EntropyEstimator::PlugIn).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_entropy_matches_double_sum() {
        let mut t = CountTable::new();
        let data = [(0, 0, 5u64), (0, 1, 3), (1, 1, 7), (2, 0, 1), (2, 2, 4)];
        for &(a, b, c) in &data {
            for _ in 0..c {
                t.add((a, b));
            }
        }
        let total: u64 = data.iter().map(|d| d.2).sum();
        let mut h = 0.0;
        for &(a, _, c) in &data {
            let pa: u64 = data.iter().filter(|d| d.0 == a).map(|d| d.2).sum();
            let pj = c as f64 / total as f64;
            h -= pj * (c as f64 / pa as f64).log2();
        }
        let got = conditional_entropy(&t, EntropyEstimator::PlugIn).unwrap();
        assert!((got - h).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_independent() {
        let mut a = CountTable::new();
        let mut b = CountTable::new();
        a.add(vec![1]);
        a.add(vec![2]);
        b.add(vec![2]);
        b.add(vec![3]);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.get(&vec![2]), 2);
        assert_eq!(ab.total(), 4);
    }

    #[test]
    fn miller_madow_adds_bias_term() {
        let mut t = CountTable::new();
        for k in 0..10i64 {
            t.add(k);
        }
        let plug = t.entropy(EntropyEstimator::PlugIn).unwrap();
        let mm = t.entropy(EntropyEstimator::MillerMadow).unwrap();
        assert!((mm - plug - 9.0 / (20.0 * std::f64::consts::LN_2)).abs() < 1e-14);
    }

    #[test]
    fn distortion_examples() {
        let x = vec![vec![0.5, 1.0], vec![2.0, -1.0]];
        assert_eq!(empirical_distortion(&x, &x, 2).unwrap(), 0.0);
        assert_eq!(empirical_distortion(&[vec![0.0]], &[vec![1.0]], 1).unwrap(), 1.0);
        assert!(empirical_distortion(&[], &[], 1).is_err());
    }

    #[test]
    fn rate_account_examples() {
        let r = rate_account(&RateInputs {
            n: 2,
            h_side: [10.0, 12.0],
            p_boundary: [0.0, 0.0],
            h_joint_u: 6.0,
        })
        .unwrap();
        assert!((r - 14.0).abs() < 1e-14);
        // H_b(1/2) = 1 plus half of n = 2 bits, over n = 2: one bit per sample per encoder
        let r = rate_account(&RateInputs {
            n: 2,
            h_side: [0.0, 0.0],
            p_boundary: [0.5, 0.0],
            h_joint_u: 0.0,
        })
        .unwrap();
        assert!((r - 1.0).abs() < 1e-14);
        assert!(rate_account(&RateInputs {
            n: 1,
            h_side: [0.0, 0.0],
            p_boundary: [1.5, 0.0],
            h_joint_u: 0.0,
        })
        .is_err());
    }
}
