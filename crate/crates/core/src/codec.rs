//! Encoder and side/central decoders for the nested triple
//! `Λ_s ⊂ Λ_in ⊂ Λ_c`.
//!
//! Coordinates:
//! - central points and residuals `u` use central-lattice coefficients;
//! - side points, `τ` and all labeling arithmetic use intermediate
//!   coefficients, so every division by `μ` in the central decoder is an
//!   exact integer division.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{Encoder, LabelingContext};
use crate::lattice::{CellSelector, Lattice, LatticeGeometry, NestedPair, Separation};
use crate::linalg::{self, IntMatrix};

/// Smallest μ the exact-recovery argument is made for.
pub const MIN_SAFE_MU: i64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `r0 + 2r̄_c ≤ r_in`
    CorrelationRadius,
    /// `3r̄_in < r_{s/2}`, i.e. `γ > 0`
    PositiveGamma,
    /// `Δ_{s/2} > 3r̄_in`
    CellWidth,
    /// `μ ≥ 8`
    MinimumMu,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::CorrelationRadius => "r0 + 2*rbar_c <= r_in",
            Condition::PositiveGamma => "gamma > 0 (3*rbar_in < r_half)",
            Condition::CellWidth => "delta_half > 3*rbar_in",
            Condition::MinimumMu => "mu >= 8",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    /// Positive when satisfied, by how much.
    pub margin: f64,
    pub satisfied: bool,
    /// Unenforced checks are reported but do not reject the config.
    pub enforced: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn rejected(&self) -> bool {
        self.checks.iter().any(|c| c.enforced && !c.satisfied)
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let broken: Vec<String> = self
            .failures()
            .map(|c| format!("{} violated by {:.6e}", c.condition, -c.margin))
            .collect();
        if broken.is_empty() {
            f.write_str("all conditions hold")
        } else {
            f.write_str(&broken.join("; "))
        }
    }
}

/// Parameters of one codec instance before validation.
#[derive(Debug, Clone)]
pub struct CodecSpec {
    pub central: Lattice,
    /// Intermediate basis in central coefficients.
    pub sublattice: IntMatrix,
    pub mu: i64,
    /// `None` selects [`default_r0`].
    pub r0: Option<f64>,
    /// Decoder threshold constant; `None` means `c = μ`.
    pub c: Option<f64>,
    /// Report the μ, γ and cell-width conditions instead of enforcing them.
    pub allow_small_mu: bool,
}

/// `min(r_in − 2r̄_c, r_c/2)`.
pub fn default_r0(central: &LatticeGeometry, intermediate: &LatticeGeometry) -> f64 {
    (intermediate.inscribed_radius - 2.0 * central.covering_radius).min(0.5 * central.inscribed_radius)
}

#[derive(Debug, Clone)]
pub struct LrdscConfig {
    pair: NestedPair,
    labeling: LabelingContext,
    geo_central: LatticeGeometry,
    geo_intermediate: LatticeGeometry,
    geo_side: LatticeGeometry,
    geo_fractional: LatticeGeometry,
    separation_fractional: Separation,
    inner_reps: Vec<Vec<i64>>,
    mu: i64,
    r0: f64,
    gamma: f64,
    c: f64,
    report: ValidationReport,
}

impl CodecSpec {
    pub fn validate(self) -> Result<LrdscConfig> {
        let pair = NestedPair::from_basis(self.central.clone(), self.sublattice.clone())?;
        let intermediate = pair.coarse().clone();
        let labeling = LabelingContext::from_intermediate(&intermediate, self.mu)?;
        let geo_central = self.central.geometry()?;
        let geo_intermediate = intermediate.geometry()?;
        let geo_side = labeling.side().geometry()?;
        let geo_fractional = labeling.fractional().geometry()?;
        let separation_fractional = labeling.fractional().nonadjacent_separation()?;

        let r0 = self.r0.unwrap_or_else(|| default_r0(&geo_central, &geo_intermediate));
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
        }
        let c = self.c.unwrap_or(self.mu as f64);
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        let gamma = 1.0 - 3.0 * geo_intermediate.covering_radius / geo_fractional.inscribed_radius;

        let strict = !self.allow_small_mu;
        let mut checks = Vec::new();
        let r0_margin = geo_intermediate.inscribed_radius - r0 - 2.0 * geo_central.covering_radius;
        checks.push(ConditionCheck {
            condition: Condition::CorrelationRadius,
            margin: r0_margin,
            // equality is allowed
            satisfied: r0_margin >= -1e-12 * geo_intermediate.inscribed_radius,
            enforced: true,
        });
        checks.push(ConditionCheck {
            condition: Condition::PositiveGamma,
            margin: gamma,
            satisfied: gamma > 0.0,
            enforced: strict,
        });
        let width_margin = separation_fractional.value - 3.0 * geo_intermediate.covering_radius;
        checks.push(ConditionCheck {
            condition: Condition::CellWidth,
            margin: width_margin,
            satisfied: width_margin > 0.0,
            enforced: strict,
        });
        checks.push(ConditionCheck {
            condition: Condition::MinimumMu,
            margin: (self.mu - MIN_SAFE_MU) as f64,
            satisfied: self.mu >= MIN_SAFE_MU,
            enforced: strict,
        });
        let report = ValidationReport { checks };
        if report.rejected() {
            return Err(Error::Rejected(report));
        }
        let inner_reps = pair.coset_representatives(CellSelector::CoarseVoronoi)?;
        Ok(LrdscConfig {
            pair,
            labeling,
            geo_central,
            geo_intermediate,
            geo_side,
            geo_fractional,
            separation_fractional,
            inner_reps,
            mu: self.mu,
            r0,
            gamma,
            c,
            report,
        })
    }
}

/// What one encoder sends.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Description {
    /// `β_i(λ_i)`, intermediate coefficients.
    pub side_point: Vec<i64>,
    /// `λ_c mod Λ_in`, central coefficients.
    pub residual: Vec<i64>,
    pub boundary: bool,
    /// `Q_{s/2}(λ_i) mod Λ_s`, intermediate coefficients, sent when `boundary`.
    pub tau: Option<Vec<i64>>,
}

/// An encoding together with the intermediate quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeTrace {
    /// `Q_c(x)`, central coefficients.
    pub central: Vec<i64>,
    /// `Q_in(Q_c(x))`, intermediate coefficients.
    pub intermediate: Vec<i64>,
    pub description: Description,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Side points too far apart; they are returned unchanged.
    SideFallback,
    /// At least one boundary flag is clear.
    Case1,
    /// Both flags set with equal `τ`.
    Case2,
    /// Both flags set with different `τ`.
    Case3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralDecode {
    /// Reconstructions in central coefficients.
    pub first: Vec<i64>,
    pub second: Vec<i64>,
    pub branch: Branch,
    /// In case 2, whether the recomputed `τ̃` equals the received `τ`.
    /// Always true elsewhere.
    pub tau_consistent: bool,
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale(a: &[i64], k: i64) -> Vec<i64> {
    a.iter().map(|x| x * k).collect()
}

fn exact_div(a: &[i64], d: i64, what: &str) -> Result<Vec<i64>> {
    a.iter()
        .map(|&x| {
            if x % d == 0 {
                Ok(x / d)
            } else {
                Err(Error::Internal(format!("{what}: {a:?} is not divisible by {d}")))
            }
        })
        .collect()
}

impl LrdscConfig {
    pub fn dim(&self) -> usize {
        self.pair.fine().dim()
    }

    pub fn central(&self) -> &Lattice {
        self.pair.fine()
    }

    pub fn intermediate(&self) -> &Lattice {
        self.pair.coarse()
    }

    pub fn side(&self) -> &Lattice {
        self.labeling.side()
    }

    pub fn fractional(&self) -> &Lattice {
        self.labeling.fractional()
    }

    pub fn nested(&self) -> &NestedPair {
        &self.pair
    }

    pub fn labeling(&self) -> &LabelingContext {
        &self.labeling
    }

    pub fn central_geometry(&self) -> &LatticeGeometry {
        &self.geo_central
    }

    pub fn intermediate_geometry(&self) -> &LatticeGeometry {
        &self.geo_intermediate
    }

    pub fn side_geometry(&self) -> &LatticeGeometry {
        &self.geo_side
    }

    pub fn fractional_geometry(&self) -> &LatticeGeometry {
        &self.geo_fractional
    }

    pub fn fractional_separation(&self) -> Separation {
        self.separation_fractional
    }

    /// `K = ν_in / ν_c`.
    pub fn k(&self) -> u64 {
        self.pair.index()
    }

    /// `M = μⁿ`.
    pub fn m(&self) -> u64 {
        self.labeling.side_index()
    }

    pub fn mu(&self) -> i64 {
        self.mu
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// False when some unenforced condition fails, so the recovery
    /// guarantees do not apply.
    pub fn supported_by_theory(&self) -> bool {
        self.report.all_satisfied()
    }

    /// Central-lattice coset representatives of `Λ_in` inside `V_in(0)`.
    pub fn inner_reps(&self) -> &[Vec<i64>] {
        &self.inner_reps
    }

    /// Right-hand side of the decoder's closeness test.
    pub fn decoder_threshold(&self) -> f64 {
        (8.0 + self.c) * self.geo_side.covering_radius + 3.0 * self.geo_intermediate.covering_radius
    }

    /// Worst-case central reconstruction error `16μ·r̄_s`.
    pub fn worst_case_error(&self) -> f64 {
        16.0 * self.mu as f64 * self.geo_side.covering_radius
    }

    /// Whether `λ` lies outside `λ_{s/2} + γ·V_{s/2}(0)`.
    pub fn in_boundary_set(&self, lambda: &[i64]) -> bool {
        if self.gamma <= 0.0 {
            return true;
        }
        let frac = self.labeling.fractional_point(lambda);
        let offset = self.intermediate().point(&sub(lambda, &frac));
        let stretched: Vec<f64> = offset.iter().map(|v| v / self.gamma).collect();
        self.fractional()
            .nearest_coeffs_unchecked(&stretched)
            .iter()
            .any(|&c| c != 0)
    }

    pub fn encode(&self, which: Encoder, x: &[f64]) -> Result<Description> {
        Ok(self.encode_trace(which, x)?.description)
    }

    pub fn encode_trace(&self, which: Encoder, x: &[f64]) -> Result<EncodeTrace> {
        let central = self.central().nearest_coeffs(x)?;
        let (intermediate, residual) = self.pair.reduce(&central);
        let side_point = self.labeling.beta(which, &intermediate);
        let boundary = self.in_boundary_set(&intermediate);
        let tau = boundary.then(|| self.labeling.decompose(&intermediate).tau);
        Ok(EncodeTrace {
            central,
            intermediate,
            description: Description {
                side_point,
                residual,
                boundary,
                tau,
            },
        })
    }

    /// The side reconstruction `λ_{s,i}` as a point.
    pub fn side_decode(&self, d: &Description) -> Vec<f64> {
        self.intermediate().point(&d.side_point)
    }

    /// Central-lattice coefficients of an intermediate point.
    pub fn intermediate_to_central(&self, lambda: &[i64]) -> Vec<i64> {
        self.pair.coarse_to_fine(lambda)
    }

    pub fn central_point(&self, coeffs: &[i64]) -> Vec<f64> {
        self.central().point(coeffs)
    }

    pub fn central_decode(&self, d1: &Description, d2: &Description) -> Result<CentralDecode> {
        let mu = self.mu;
        let s1 = &d1.side_point;
        let s2 = &d2.side_point;
        let gap = linalg::norm_sq(&self.intermediate().point(&sub(s1, s2))).sqrt();
        let threshold = self.decoder_threshold();
        if gap > threshold * (1.0 + 1e-12) {
            return Ok(CentralDecode {
                first: self.intermediate_to_central(s1),
                second: self.intermediate_to_central(s2),
                branch: Branch::SideFallback,
                tau_consistent: true,
            });
        }

        let delta = self.pair.quantize_to_coarse(&sub(&d1.residual, &d2.residual));
        let taus = match (d1.boundary, d2.boundary) {
            (true, true) => {
                let t1 = d1
                    .tau
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("boundary flag set without tau".into()))?;
                let t2 = d2
                    .tau
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("boundary flag set without tau".into()))?;
                Some((t1, t2))
            }
            _ => None,
        };

        let (l1, l2, branch, tau_consistent) = match taus {
            Some((t1, t2)) if t1 != t2 => {
                let (l1, l2) = self.decode_case3(s1, s2, &delta, t1, t2)?;
                (l1, l2, Branch::Case3, true)
            }
            _ => {
                let doubled = add(&add(s1, s2), &scale(&delta, mu));
                let frac = exact_div(&doubled, 2, "fractional estimate")?;
                let tau = sub(&frac, &self.labeling.side_point(&frac));
                let l1 = add(&frac, &exact_div(&add(&sub(s1, &frac), &tau), mu, "case 1 first")?);
                let l2 = add(&frac, &exact_div(&sub(&add(&tau, &frac), s2), mu, "case 1 second")?);
                match taus {
                    Some((t1, _)) => (l1, l2, Branch::Case2, &tau == t1),
                    None => (l1, l2, Branch::Case1, true),
                }
            }
        };

        let first = add(&self.intermediate_to_central(&l1), &d1.residual);
        let second = add(&self.intermediate_to_central(&l2), &d2.residual);
        Ok(CentralDecode {
            first,
            second,
            branch,
            tau_consistent,
        })
    }

    fn decode_case3(
        &self,
        s1: &[i64],
        s2: &[i64],
        delta: &[i64],
        t1: &[i64],
        t2: &[i64],
    ) -> Result<(Vec<i64>, Vec<i64>)> {
        let mu = self.mu;
        let dt = sub(t2, t1);
        let doubled = sub(
            &sub(&add(&add(s1, s2), &scale(delta, mu)), &scale(t2, 2)),
            &scale(&dt, mu),
        );
        let v = exact_div(&doubled, 2, "case 3 midpoint")?;
        let w_hat = sub(&v, &self.labeling.side_point(&v));
        // Q_s(ŵ + (τ2 − τ1)/2) as a rational point with denominator 2
        let num = add(&scale(&w_hat, 2), &dt);
        let q = scale(&self.intermediate().quantize_coords(&num, 2 * mu), mu);
        let w = sub(&w_hat, &q);
        let side = sub(&v, &scale(&w, mu + 1));
        let side_other = add(&side, &scale(&w, 2));
        let l1 = add(&add(&side, t1), &exact_div(&sub(s1, &side), mu, "case 3 first")?);
        let l2 = add(
            &add(&side_other, t2),
            &exact_div(&sub(&add(&scale(t2, 2), &side_other), s2), mu, "case 3 second")?,
        );
        Ok((l1, l2))
    }
}

/// Outcome of an exhaustive search for two intermediate pairs that the
/// central decoder cannot tell apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryAudit {
    /// Pairs `(λ₁, λ₂)` examined, with `λ₁ ∈ 𝒰` and `‖λ₂ − λ₁‖ < 3r̄_in`.
    pub pairs: u64,
    /// Distinct pairs sharing `(β₁(λ₁), β₂(λ₂), λ₂ − λ₁)`.
    pub label_collisions: u64,
    /// Collisions that also agree on both boundary flags and on every `τ`
    /// that would be sent.
    pub collisions_with_boundary_data: u64,
    /// First label-only collision found: `[λ₁, λ₂, λ₁', λ₂']`.
    pub example: Option<[Vec<i64>; 4]>,
}

impl RecoveryAudit {
    pub fn labels_alone_injective(&self) -> bool {
        self.label_collisions == 0
    }

    pub fn injective_with_boundary_data(&self) -> bool {
        self.collisions_with_boundary_data == 0
    }
}

impl LrdscConfig {
    /// `(b, τ)` as sent by an encoder whose intermediate point is `λ`.
    fn boundary_data(&self, lambda: &[i64]) -> Option<Vec<i64>> {
        self.in_boundary_set(lambda)
            .then(|| self.labeling.decompose(lambda).tau)
    }

    /// Exhaustive collision search for the central decoder's inputs.
    ///
    /// Labels are shift invariant, so it is enough to fix `λ₁ ∈ 𝒰`; any
    /// competitor `λ₁'` with the same first label lies in
    /// `β₁⁻¹(0) + β₁(λ₁)`, which has `M` points.
    pub fn recovery_audit(&self) -> Result<RecoveryAudit> {
        let ctx = &self.labeling;
        let lat = self.intermediate();
        let limit = 3.0 * self.geo_intermediate.covering_radius;
        let steps: Vec<Vec<i64>> = lat
            .points_within(limit)
            .into_iter()
            .filter(|d| crate::linalg::norm_sq(&lat.point(d)).sqrt() < limit)
            .collect();
        let preimage = ctx.beta_preimage_zero(Encoder::First)?;
        let mut audit = RecoveryAudit {
            pairs: 0,
            label_collisions: 0,
            collisions_with_boundary_data: 0,
            example: None,
        };
        for l1 in ctx.u_set()? {
            let label1 = ctx.beta(Encoder::First, l1);
            let data1 = self.boundary_data(l1);
            for d in &steps {
                let l2 = add(l1, d);
                let label2 = ctx.beta(Encoder::Second, &l2);
                let data2 = self.boundary_data(&l2);
                audit.pairs += 1;
                for p in &preimage {
                    let o1 = add(p, &label1);
                    if &o1 == l1 {
                        continue;
                    }
                    let o2 = add(&o1, d);
                    if ctx.beta(Encoder::Second, &o2) != label2 {
                        continue;
                    }
                    audit.label_collisions += 1;
                    if audit.example.is_none() {
                        audit.example = Some([l1.clone(), l2.clone(), o1.clone(), o2.clone()]);
                    }
                    if self.boundary_data(&o1) == data1 && self.boundary_data(&o2) == data2 {
                        audit.collisions_with_boundary_data += 1;
                    }
                }
            }
        }
        Ok(audit)
    }
}
