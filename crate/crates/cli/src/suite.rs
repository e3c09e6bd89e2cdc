//! Property checks run by `lrdsc validate` on each ladder point.

use anyhow::{bail, Result};
use lrdsc::lattice::LatticeKind;
use lrdsc::{lemma3_oracle, Encoder, LrdscConfig, PairSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::build_codec;

/// Quadrature tolerance for the region-moment identity when the grid
/// follows the fine cells exactly.
pub const LEMMA3_TOL_ALIGNED: f64 = 1e-3;
/// Tolerance when the fine lattice is not a square grid.
pub const LEMMA3_TOL_GENERIC: f64 = 2e-2;
const LEMMA3_RES_ALIGNED: usize = 2;
const LEMMA3_RES_GENERIC: usize = 24;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointChecks {
    pub theta: f64,
    pub mu: i64,
    pub supported_by_theory: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub points: Vec<PointChecks>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.checks.iter().all(|c| c.passed))
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Uniform draw from the open ball of radius `r`.
pub fn ball_step(rng: &mut impl Rng, n: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = norm(&v);
        if s > 0.0 && s < 1.0 {
            return v.iter().map(|x| x * r).collect();
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct InBallCounts {
    pub pairs: u64,
    pub recovery_failures: u64,
    pub central_gap_violations: u64,
    pub intermediate_gap_violations: u64,
}

/// Pairs `x₁` from the source, `x₂ = x₁ + d` with `d` uniform in the
/// `r0` ball; checks exact recovery and the two closeness bounds.
pub fn in_ball_run(codec: &LrdscConfig, cfg: &ExperimentConfig, pairs: u64, seed: u64) -> Result<InBallCounts> {
    let model = cfg.source_model()?;
    let n = codec.dim();
    let r0 = codec.r0();
    let r_in = codec.intermediate_geometry().inscribed_radius;
    let rbar_in = codec.intermediate_geometry().covering_radius;
    let chunks = pairs.div_ceil(4096);
    let parts: Vec<InBallCounts> = (0..chunks)
        .into_par_iter()
        .map(|b| {
            let count = 4096.min(pairs - b * 4096);
            let mut sampler = PairSampler::new(model, seed, b).expect("checked model");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(b);
            let mut c = InBallCounts::default();
            for _ in 0..count {
                let x1 = sampler.next_pair().first;
                let x2: Vec<f64> = x1.iter().zip(ball_step(&mut rng, n, r0)).map(|(a, d)| a + d).collect();
                let t1 = codec.encode_trace(Encoder::First, &x1).expect("finite");
                let t2 = codec.encode_trace(Encoder::Second, &x2).expect("finite");
                let qc = sub(&codec.central_point(&t1.central), &codec.central_point(&t2.central));
                if norm(&qc) >= r_in {
                    c.central_gap_violations += 1;
                }
                let qi = sub(
                    &codec.intermediate().point(&t1.intermediate),
                    &codec.intermediate().point(&t2.intermediate),
                );
                if norm(&qi) >= 3.0 * rbar_in {
                    c.intermediate_gap_violations += 1;
                }
                let ok = codec
                    .central_decode(&t1.description, &t2.description)
                    .is_ok_and(|o| o.first == t1.central && o.second == t2.central);
                c.recovery_failures += !ok as u64;
                c.pairs += 1;
            }
            c
        })
        .collect();
    Ok(parts.into_iter().fold(InBallCounts::default(), |mut a, b| {
        a.pairs += b.pairs;
        a.recovery_failures += b.recovery_failures;
        a.central_gap_violations += b.central_gap_violations;
        a.intermediate_gap_violations += b.intermediate_gap_violations;
        a
    }))
}

/// Pairs at separations from `r0` up to far beyond the decoder threshold;
/// returns the largest central error and the branch counts.
pub fn adversarial_run(codec: &LrdscConfig, pairs: u64, seed: u64) -> (f64, [u64; 4]) {
    let n = codec.dim();
    let rbar_s = codec.side_geometry().covering_radius;
    let radii = [
        codec.r0(),
        2.0 * codec.r0(),
        codec.intermediate_geometry().covering_radius * 3.0,
        rbar_s,
        codec.decoder_threshold(),
        10.0 * codec.decoder_threshold(),
    ];
    let spread = 50.0 * rbar_s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut branches = [0u64; 4];
    for i in 0..pairs {
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let step = ball_step(&mut rng, n, radii[i as usize % radii.len()]);
        let x2: Vec<f64> = x1.iter().zip(&step).map(|(a, b)| a + b).collect();
        let d1 = codec.encode(Encoder::First, &x1).expect("finite");
        let d2 = codec.encode(Encoder::Second, &x2).expect("finite");
        let Ok(out) = codec.central_decode(&d1, &d2) else {
            worst = f64::INFINITY;
            continue;
        };
        branches[crate::experiment::branch_slot(out.branch)] += 1;
        let e1 = norm(&sub(&x1, &codec.central_point(&out.first)));
        let e2 = norm(&sub(&x2, &codec.central_point(&out.second)));
        worst = worst.max(e1).max(e2);
    }
    (worst, branches)
}

/// Shift invariance and the sum identity over `𝒰` and the nearest side
/// shifts.
pub fn labeling_identities(codec: &LrdscConfig) -> Result<(u64, u64)> {
    let ctx = codec.labeling();
    let mu = ctx.mu();
    let shifts: Vec<Vec<i64>> = ctx
        .side()
        .relevant_vectors()
        .into_iter()
        .map(|v| v.iter().map(|c| c * mu).collect())
        .collect();
    let mut checked = 0;
    let mut failures = 0;
    for l in ctx.u_set()? {
        let b1 = ctx.beta(Encoder::First, l);
        let b2 = ctx.beta(Encoder::Second, l);
        let double_half: Vec<i64> = ctx.fractional_point(l).iter().map(|c| 2 * c).collect();
        let sum: Vec<i64> = b1.iter().zip(&b2).map(|(a, b)| a + b).collect();
        failures += (sum != double_half) as u64;
        for s in &shifts {
            let moved: Vec<i64> = l.iter().zip(s).map(|(a, b)| a + b).collect();
            for (which, b) in [(Encoder::First, &b1), (Encoder::Second, &b2)] {
                let expect: Vec<i64> = b.iter().zip(s).map(|(a, b)| a + b).collect();
                failures += (ctx.beta(which, &moved) != expect) as u64;
            }
        }
        checked += 1;
    }
    Ok((checked, failures))
}

pub fn validate_point(cfg: &ExperimentConfig, codec: &LrdscConfig, pairs: u64, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let counts = in_ball_run(codec, cfg, pairs, seed)?;
    out.push(check(
        "exact recovery",
        counts.recovery_failures == 0,
        format!(
            "{} failures in {} in-ball pairs",
            counts.recovery_failures, counts.pairs
        ),
    ));
    out.push(check(
        "closeness bounds",
        counts.central_gap_violations == 0 && counts.intermediate_gap_violations == 0,
        format!(
            "central ≥ r_in: {}, intermediate ≥ 3r̄_in: {}",
            counts.central_gap_violations, counts.intermediate_gap_violations
        ),
    ));

    let (checked, failures) = labeling_identities(codec)?;
    out.push(check(
        "labeling identities",
        failures == 0,
        format!("{failures} failures over {checked} points of 𝒰"),
    ));

    let aligned = codec.central().kind() == LatticeKind::IntegerGrid;
    let (tol, res) = if aligned {
        (LEMMA3_TOL_ALIGNED, LEMMA3_RES_ALIGNED)
    } else {
        (LEMMA3_TOL_GENERIC, LEMMA3_RES_GENERIC)
    };
    match lemma3_oracle(codec.nested(), res) {
        Ok(l) => {
            let gap = (l.lhs - l.rhs).abs() / l.lhs.abs().max(f64::MIN_POSITIVE);
            out.push(check(
                "region moment identity",
                gap <= tol,
                format!(
                    "lhs {:.6e}, rhs {:.6e}, relative gap {gap:.2e} (tol {tol:e})",
                    l.lhs, l.rhs
                ),
            ));
        }
        Err(e) => out.push(check("region moment identity", false, e.to_string())),
    }

    let bound = codec.worst_case_error();
    let (worst, branches) = adversarial_run(codec, pairs.min(100_000), seed.wrapping_add(1));
    out.push(check(
        "worst-case error",
        worst <= bound,
        format!("max {worst:.4e} vs 16μr̄_s = {bound:.4e}; branches {branches:?}"),
    ));
    Ok(out)
}

/// Builds every ladder point's codec first; any rejection stops the suite
/// before a single check runs.
pub fn validate_suite(cfg: &ExperimentConfig, pairs: u64) -> Result<SuiteReport> {
    let mut codecs = Vec::new();
    for p in cfg.points() {
        match build_codec(cfg, p) {
            Ok(c) => codecs.push((p, c)),
            Err(e) => bail!("θ = {}, μ = {} rejected: {e}", p.theta, p.mu),
        }
    }
    let mut points = Vec::new();
    for (i, (p, codec)) in codecs.iter().enumerate() {
        let checks = validate_point(cfg, codec, pairs, cfg.seed.wrapping_add(i as u64))?;
        points.push(PointChecks {
            theta: p.theta,
            mu: p.mu,
            supported_by_theory: codec.supported_by_theory(),
            checks,
        });
    }
    Ok(SuiteReport { points })
}
