//! Labeling maps from the intermediate lattice to the side lattice.
//!
//! Everything here works on integer coefficients in the intermediate basis.
//! With `Λ_s = μ·Λ_in` and `Λ_{s/2} = (μ/2)·Λ_in`, side points are
//! multiples of `μ` and fractional points are multiples of `μ/2`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Which of the two encoders a labeling belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Encoder {
    First,
    Second,
}

impl Encoder {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Encoder::First),
            2 => Ok(Encoder::Second),
            _ => Err(Error::InvalidParameter(format!(
                "encoder index must be 1 or 2, got {i}"
            ))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Encoder::First => 1,
            Encoder::Second => 2,
        }
    }
}

/// `λ_{s/2} = λ_s + τ` for some intermediate point, all in intermediate coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub fractional: Vec<i64>,
    pub side: Vec<i64>,
    pub tau: Vec<i64>,
}

#[derive(Debug)]
pub struct LabelingContext {
    intermediate: Lattice,
    fractional: Lattice,
    side: Lattice,
    mu: i64,
    tau_set: Vec<Vec<i64>>,
    u_set: OnceLock<Vec<Vec<i64>>>,
}

impl Clone for LabelingContext {
    fn clone(&self) -> Self {
        let u_set = OnceLock::new();
        if let Some(u) = self.u_set.get() {
            let _ = u_set.set(u.clone());
        }
        Self {
            intermediate: self.intermediate.clone(),
            fractional: self.fractional.clone(),
            side: self.side.clone(),
            mu: self.mu,
            tau_set: self.tau_set.clone(),
            u_set,
        }
    }
}

impl LabelingContext {
    /// Checks that `side = μ·intermediate` and builds the context.
    pub fn build(side: &Lattice, intermediate: &Lattice, mu: i64) -> Result<Self> {
        let expected = intermediate.scaled(mu as f64)?;
        let same = side.dim() == expected.dim()
            && side
                .generator()
                .iter()
                .zip(expected.generator())
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        if !same {
            return Err(Error::InvalidParameter(format!(
                "side lattice is not {mu} times the intermediate lattice"
            )));
        }
        Self::from_intermediate(intermediate, mu)
    }

    pub fn from_intermediate(intermediate: &Lattice, mu: i64) -> Result<Self> {
        if mu < 2 || mu % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "mu must be an even integer ≥ 2, got {mu}"
            )));
        }
        let n = intermediate.dim();
        let fractional = intermediate.scaled((mu / 2) as f64)?;
        let side = intermediate.scaled(mu as f64)?;

        // τ = (μ/2)·j with (j/2)·G_in ∈ V_in(0)
        let radius = 2.0 * intermediate.covering_radius()? * (1.0 + 1e-9);
        let half = mu / 2;
        let mut tau_set: Vec<Vec<i64>> = intermediate
            .points_within(radius)
            .into_iter()
            .filter(|j| intermediate.quantize_coords(j, 2).iter().all(|&c| c == 0))
            .map(|j| j.iter().map(|&c| c * half).collect())
            .collect();
        tau_set.sort();
        let expected = 1usize << n;
        if tau_set.len() != expected {
            return Err(Error::WindowTooSmall {
                expected,
                found: tau_set.len(),
            });
        }
        Ok(Self {
            intermediate: intermediate.clone(),
            fractional,
            side,
            mu,
            tau_set,
            u_set: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.intermediate.dim()
    }

    pub fn mu(&self) -> i64 {
        self.mu
    }

    /// `M = μⁿ`.
    pub fn side_index(&self) -> u64 {
        (self.mu as u64).pow(self.dim() as u32)
    }

    pub fn intermediate(&self) -> &Lattice {
        &self.intermediate
    }

    pub fn fractional(&self) -> &Lattice {
        &self.fractional
    }

    pub fn side(&self) -> &Lattice {
        &self.side
    }

    /// `V_s(0) ∩ Λ_{s/2}`, sorted.
    pub fn tau_set(&self) -> &[Vec<i64>] {
        &self.tau_set
    }

    /// `∪_τ V_{s/2}(τ) ∩ Λ_in`, sorted. Built on first use since it has
    /// `μⁿ` points.
    pub fn u_set(&self) -> Result<&[Vec<i64>]> {
        if let Some(u) = self.u_set.get() {
            return Ok(u);
        }
        let mut pts = self.enumerate_u()?;
        pts.sort();
        Ok(self.u_set.get_or_init(|| pts))
    }

    fn enumerate_u(&self) -> Result<Vec<Vec<i64>>> {
        let r_side = self.side.covering_radius()?;
        let radius = 2.5 * r_side * (1.0 + 1e-9);
        let pts: Vec<Vec<i64>> = self
            .intermediate
            .points_within(radius)
            .into_iter()
            .filter(|k| {
                let frac = self.fractional_point(k);
                self.tau_set.binary_search(&frac).is_ok()
            })
            .collect();
        let expected = self.side_index() as usize;
        if pts.len() != expected {
            return Err(Error::WindowTooSmall {
                expected,
                found: pts.len(),
            });
        }
        Ok(pts)
    }

    /// `Q_{s/2}(λ)` in intermediate coefficients.
    pub fn fractional_point(&self, lambda: &[i64]) -> Vec<i64> {
        let half = self.mu / 2;
        self.intermediate
            .quantize_coords(lambda, half)
            .into_iter()
            .map(|c| c * half)
            .collect()
    }

    /// `Q_s` of a point in intermediate coefficients.
    pub fn side_point(&self, lambda: &[i64]) -> Vec<i64> {
        self.intermediate
            .quantize_coords(lambda, self.mu)
            .into_iter()
            .map(|c| c * self.mu)
            .collect()
    }

    /// Splits `Q_{s/2}(λ)` into `λ_s + τ` with `τ ∈ 𝒯`.
    pub fn decompose(&self, lambda: &[i64]) -> Decomposition {
        let half = self.mu / 2;
        let j = self.intermediate.quantize_coords(lambda, half);
        let s = self.intermediate.quantize_coords(&j, 2);
        let fractional: Vec<i64> = j.iter().map(|&c| c * half).collect();
        let side: Vec<i64> = s.iter().map(|&c| c * self.mu).collect();
        let tau = fractional.iter().zip(&side).map(|(a, b)| a - b).collect();
        Decomposition { fractional, side, tau }
    }

    /// `β_i(λ)` for `λ` given by intermediate coefficients.
    pub fn beta(&self, which: Encoder, lambda: &[i64]) -> Vec<i64> {
        let d = self.decompose(lambda);
        let mu = self.mu;
        lambda
            .iter()
            .zip(d.side.iter().zip(&d.tau))
            .map(|(&l, (&s, &t))| {
                let spread = mu * (l - s - t);
                match which {
                    Encoder::First => spread + s,
                    Encoder::Second => 2 * t - spread + s,
                }
            })
            .collect()
    }

    /// `β_i` of a point given in space; rejects points off `Λ_in`.
    pub fn beta_of_point(&self, which: Encoder, x: &[f64]) -> Result<Vec<f64>> {
        let k = self
            .intermediate
            .lattice_coeffs(x)
            .ok_or_else(|| Error::NotInLattice(format!("{x:?}")))?;
        Ok(self.intermediate.point(&self.beta(which, &k)))
    }

    /// `β_i⁻¹(0) = {λ − β_i(λ) : λ ∈ 𝒰}`.
    pub fn beta_preimage_zero(&self, which: Encoder) -> Result<Vec<Vec<i64>>> {
        Ok(self
            .u_set()?
            .iter()
            .map(|l| {
                let b = self.beta(which, l);
                l.iter().zip(&b).map(|(a, c)| a - c).collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn z(n: usize) -> Lattice {
        Lattice::integer_grid(n, 1.0).unwrap()
    }

    #[test]
    fn scalar_sets() {
        let ctx = LabelingContext::from_intermediate(&z(1), 4).unwrap();
        assert_eq!(ctx.tau_set(), &[vec![0], vec![2]]);
        assert_eq!(ctx.u_set().unwrap(), &[vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn square_sets_at_mu_two() {
        let ctx = LabelingContext::from_intermediate(&z(2), 2).unwrap();
        assert_eq!(ctx.tau_set().len(), 4);
        assert_eq!(ctx.u_set().unwrap().len(), 4);
        // with μ = 2 the fractional lattice is Λ_in itself, so 𝒰 = 𝒯
        assert_eq!(ctx.u_set().unwrap(), ctx.tau_set());
    }

    #[test]
    fn hexagonal_sets_at_mu_twelve() {
        let hex = Lattice::hexagonal(1.0).unwrap();
        let ctx = LabelingContext::from_intermediate(&hex, 12).unwrap();
        assert_eq!(ctx.tau_set().len(), 4);
        assert_eq!(ctx.u_set().unwrap().len(), 144);
    }

    #[test]
    fn hand_evaluated_labels() {
        let ctx = LabelingContext::from_intermediate(&z(1), 4).unwrap();
        // 1 is a tie between 0 and 2 in 2Z; the tie rule keeps 0
        assert_eq!(ctx.decompose(&[1]).fractional, vec![0]);
        assert_eq!(ctx.beta(Encoder::First, &[1]), vec![4]);
        assert_eq!(ctx.beta(Encoder::Second, &[1]), vec![-4]);
        // 3 lies in V(2) of 2Z, and 2 is in V(0) of 4Z, so τ = 2, λ_s = 0
        let d = ctx.decompose(&[3]);
        assert_eq!((d.side, d.tau), (vec![0], vec![2]));
        assert_eq!(ctx.beta(Encoder::First, &[3]), vec![4]);
        assert_eq!(ctx.beta(Encoder::Second, &[3]), vec![0]);
        assert_eq!(ctx.beta(Encoder::First, &[0]), vec![0]);
        assert_eq!(ctx.beta(Encoder::Second, &[0]), vec![0]);
    }

    #[test]
    fn rejects_odd_or_small_mu() {
        assert!(LabelingContext::from_intermediate(&z(1), 3).is_err());
        assert!(LabelingContext::from_intermediate(&z(1), 0).is_err());
        let side = z(1).scaled(6.0).unwrap();
        assert!(LabelingContext::build(&side, &z(1), 4).is_err());
        assert!(LabelingContext::build(&side, &z(1), 6).is_ok());
    }

    #[test]
    fn off_lattice_points_rejected() {
        let ctx = LabelingContext::from_intermediate(&z(2), 4).unwrap();
        assert!(matches!(
            ctx.beta_of_point(Encoder::First, &[0.5, 0.0]),
            Err(Error::NotInLattice(_))
        ));
        assert_eq!(ctx.beta_of_point(Encoder::First, &[1.0, 0.0]).unwrap(), vec![4.0, 0.0]);
    }

    #[test]
    fn preimage_of_zero_is_distinct_and_maps_to_zero() {
        let hex = Lattice::hexagonal(1.0).unwrap();
        let ctx = LabelingContext::from_intermediate(&hex, 8).unwrap();
        for which in [Encoder::First, Encoder::Second] {
            let pre = ctx.beta_preimage_zero(which).unwrap();
            let distinct: HashSet<_> = pre.iter().cloned().collect();
            assert_eq!(distinct.len(), 64);
            for p in &pre {
                assert!(ctx.beta(which, p).iter().all(|&c| c == 0));
            }
        }
    }
}
