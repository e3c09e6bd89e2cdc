//! Monte Carlo runs of single ladder points and whole sweeps.

use anyhow::Result;
use log::{info, warn};
use lrdsc::theory::Prediction;
use lrdsc::{
    conditional_entropy, rate_account, thm2_predictions, Branch, CodecSpec, CountTable, DistortionSum, Encoder,
    EntropyEstimator, LrdscConfig, PairSampler, PredictionInputs, RateInputs, RdReport, SourceModel, TailEstimate,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LadderPoint, R0Rule};

/// Pairs per work item. Each batch draws from its own RNG stream, so
/// results do not depend on the number of threads.
pub const BATCH: u64 = 4096;

pub const SIDE_RATIO_BAND: (f64, f64) = (0.93, 1.07);
pub const CENTRAL_RATIO_BAND: (f64, f64) = (0.95, 1.05);
pub const RATE_GAP_LIMIT: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "reason", rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    /// Validated in unsafe mode with at least one failed condition.
    UnsupportedByTheory(String),
    Skipped(String),
}

impl PointStatus {
    pub fn label(&self) -> String {
        match self {
            PointStatus::Ok => "ok".into(),
            PointStatus::UnsupportedByTheory(_) => "unsupported-by-theory".into(),
            PointStatus::Skipped(r) => format!("skipped: {r}"),
        }
    }

    pub fn ran(&self) -> bool {
        !matches!(self, PointStatus::Skipped(_))
    }
}

/// Decoder behaviour on the simulated pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCounts {
    /// Pairs with `‖x₂ − x₁‖ < r0`.
    pub in_ball: u64,
    /// In-ball pairs whose central reconstructions equal `Q_c(x_i)`.
    pub exact: u64,
    /// Branch counts: side fallback, case 1, case 2, case 3.
    pub branches: [u64; 4],
    /// Largest `‖x_i − x̂_{c,i}‖` seen.
    pub worst_error: f64,
}

impl RecoveryCounts {
    fn merge(&mut self, o: &RecoveryCounts) {
        self.in_ball += o.in_ball;
        self.exact += o.exact;
        for (a, b) in self.branches.iter_mut().zip(&o.branches) {
            *a += b;
        }
        self.worst_error = self.worst_error.max(o.worst_error);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointOutcome {
    pub index: usize,
    pub point: LadderPoint,
    pub n: usize,
    pub k: u64,
    /// `None` when the codec could not be built.
    pub r0: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub status: PointStatus,
    pub report: Option<RdReport>,
    pub prediction: Option<Prediction>,
    pub tail: Option<TailEstimate>,
    pub recovery: Option<RecoveryCounts>,
}

#[derive(Default)]
struct Accumulator {
    side: [DistortionSum; 2],
    central: [DistortionSum; 2],
    labels: [CountTable<Vec<i64>>; 2],
    boundary: [u64; 2],
    residuals: CountTable<(Vec<i64>, Vec<i64>)>,
    tail_hits: u64,
    recovery: RecoveryCounts,
}

impl Accumulator {
    fn merge(mut self, o: Accumulator) -> Accumulator {
        for i in 0..2 {
            self.side[i].merge(&o.side[i]);
            self.central[i].merge(&o.central[i]);
            self.labels[i].merge(&o.labels[i]);
            self.boundary[i] += o.boundary[i];
        }
        self.residuals.merge(&o.residuals);
        self.tail_hits += o.tail_hits;
        self.recovery.merge(&o.recovery);
        self
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub fn branch_slot(b: Branch) -> usize {
    match b {
        Branch::SideFallback => 0,
        Branch::Case1 => 1,
        Branch::Case2 => 2,
        Branch::Case3 => 3,
    }
}

/// Validates the codec for one ladder point, or returns why it cannot run.
pub fn build_codec(cfg: &ExperimentConfig, point: LadderPoint) -> std::result::Result<LrdscConfig, String> {
    let central = cfg.central_lattice(point.theta).map_err(|e| e.to_string())?;
    let r0 = match cfg.r0 {
        R0Rule::Default => None,
        R0Rule::Fixed { value } => Some(value),
        R0Rule::FractionOfRc { fraction } => Some(fraction * central.inscribed_radius()),
    };
    CodecSpec {
        central,
        sublattice: cfg.sublattice(),
        mu: point.mu,
        r0,
        c: cfg.codec.c,
        allow_small_mu: cfg.codec.unsafe_small_mu,
    }
    .validate()
    .map_err(|e| e.to_string())
}

fn run_batch(codec: &LrdscConfig, model: SourceModel, seed: u64, stream: u64, count: u64) -> Accumulator {
    let n = model.n;
    let mut sampler = PairSampler::new(model, seed, stream).expect("model was checked");
    let mut acc = Accumulator::default();
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    let r0_sq = codec.r0() * codec.r0();
    for _ in 0..count {
        sampler.fill(&mut x1, &mut x2);
        let t1 = codec.encode_trace(Encoder::First, &x1).expect("finite input");
        let t2 = codec.encode_trace(Encoder::Second, &x2).expect("finite input");
        let d1 = &t1.description;
        let d2 = &t2.description;
        acc.side[0].add(&x1, &codec.side_decode(d1));
        acc.side[1].add(&x2, &codec.side_decode(d2));
        let out = codec.central_decode(d1, d2).expect("decoder arithmetic is exact");
        let c1 = codec.central_point(&out.first);
        let c2 = codec.central_point(&out.second);
        acc.central[0].add(&x1, &c1);
        acc.central[1].add(&x2, &c2);
        acc.labels[0].add_ref(&d1.side_point);
        acc.labels[1].add_ref(&d2.side_point);
        acc.boundary[0] += d1.boundary as u64;
        acc.boundary[1] += d2.boundary as u64;
        acc.residuals.add((d1.residual.clone(), d2.residual.clone()));

        let gap = dist_sq(&x1, &x2);
        if gap >= r0_sq {
            acc.tail_hits += 1;
        } else {
            acc.recovery.in_ball += 1;
            if out.first == t1.central && out.second == t2.central {
                acc.recovery.exact += 1;
            }
        }
        acc.recovery.branches[branch_slot(out.branch)] += 1;
        let worst = dist_sq(&x1, &c1).max(dist_sq(&x2, &c2)).sqrt();
        acc.recovery.worst_error = acc.recovery.worst_error.max(worst);
    }
    acc
}

/// Simulates `samples` pairs through a validated codec. Deterministic for
/// a given `(seed, stream_base)`.
pub fn simulate_codec(
    codec: &LrdscConfig,
    model: SourceModel,
    samples: u64,
    seed: u64,
    stream_base: u64,
) -> Result<(RdReport, Prediction, TailEstimate, RecoveryCounts)> {
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH.min(samples - b * BATCH);
            run_batch(codec, model, seed, stream_base + b, count)
        })
        .collect();
    // merge in batch order so float sums are reproducible
    let acc = parts.into_iter().fold(Accumulator::default(), Accumulator::merge);

    let n = model.n;
    let est = EntropyEstimator::PlugIn;
    let h_side = [acc.labels[0].entropy(est)?, acc.labels[1].entropy(est)?];
    let p_boundary = [
        acc.boundary[0] as f64 / samples as f64,
        acc.boundary[1] as f64 / samples as f64,
    ];
    let h_u = [
        acc.residuals.first_marginal().entropy(est)?,
        acc.residuals.second_marginal().entropy(est)?,
    ];
    let h_joint_u = acc.residuals.entropy(est)?;
    let h_cond_u = conditional_entropy(&acc.residuals, est)?;
    let sum_rate = rate_account(&RateInputs {
        n,
        h_side,
        p_boundary,
        h_joint_u,
    })?;
    let report = RdReport {
        d_side: [acc.side[0].mean(n), acc.side[1].mean(n)],
        d_central: [acc.central[0].mean(n), acc.central[1].mean(n)],
        h_side,
        p_boundary,
        h_u,
        h_joint_u,
        h_cond_u,
        sum_rate,
        sample_count: samples,
    };
    let tail = lrdsc::sources::tail_from_counts(acc.tail_hits, samples);
    let h = model.differential_entropy();
    let prediction = thm2_predictions(&PredictionInputs::from_config(codec, h, h, h_cond_u, tail.probability));
    Ok((report, prediction, tail, acc.recovery))
}

/// Runs ladder position `index` of `cfg`. Validation failures give a
/// skipped outcome rather than an error.
pub fn run_point(cfg: &ExperimentConfig, index: usize) -> Result<PointOutcome> {
    let point = cfg.points()[index];
    let samples = cfg.samples_at(index);
    let n = cfg.dim();
    let k = cfg.sublattice().determinant().unsigned_abs();
    let mut outcome = PointOutcome {
        index,
        point,
        n,
        k,
        r0: None,
        samples,
        seed: cfg.seed,
        status: PointStatus::Ok,
        report: None,
        prediction: None,
        tail: None,
        recovery: None,
    };
    let codec = match build_codec(cfg, point) {
        Ok(c) => c,
        Err(reason) => {
            warn!("θ = {}, μ = {}: skipped: {reason}", point.theta, point.mu);
            outcome.status = PointStatus::Skipped(reason);
            return Ok(outcome);
        }
    };
    if !codec.supported_by_theory() {
        let failed: Vec<String> = codec.report().failures().map(|c| c.condition.to_string()).collect();
        outcome.status = PointStatus::UnsupportedByTheory(failed.join(", "));
    }
    outcome.r0 = Some(codec.r0());
    // streams are disjoint across ladder points
    let stream_base = (index as u64) << 40;
    let (report, prediction, tail, recovery) =
        simulate_codec(&codec, cfg.source_model()?, samples, cfg.seed, stream_base)?;
    info!(
        "θ = {}, μ = {}: d_s = {:.4e} (pred {:.4e}), d_c = {:.4e} (pred {:.4e}), R = {:.4}",
        point.theta,
        point.mu,
        report.d_side[0],
        prediction.d_side_pred,
        report.d_central[0],
        prediction.d_central_pred_low,
        report.sum_rate
    );
    outcome.report = Some(report);
    outcome.prediction = Some(prediction);
    outcome.tail = Some(tail);
    outcome.recovery = Some(recovery);
    Ok(outcome)
}

/// Measured-over-predicted comparisons at the last ladder point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub final_index: usize,
    pub side_ratio: Option<f64>,
    pub side_ratio_ok: bool,
    /// Measured `d_c` over the lower arm of the bracket.
    pub central_ratio: Option<f64>,
    pub central_ratio_ok: bool,
    pub rate_gap: Option<f64>,
    pub rate_gap_ok: bool,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<PointOutcome>,
    pub summary: SweepSummary,
}

pub fn summarize(rows: &[PointOutcome]) -> SweepSummary {
    let last = rows.last();
    let pair = last.and_then(|r| Some((r.report.as_ref()?, r.prediction.as_ref()?)));
    let side_ratio = pair.map(|(m, p)| 0.5 * (m.d_side[0] + m.d_side[1]) / p.d_side_pred);
    let central_ratio = pair.map(|(m, p)| 0.5 * (m.d_central[0] + m.d_central[1]) / p.d_central_pred_low);
    let rate_gap = pair.map(|(m, p)| m.sum_rate - p.rate_pred);
    let within = |v: Option<f64>, (lo, hi): (f64, f64)| v.is_some_and(|v| v >= lo && v <= hi);
    SweepSummary {
        final_index: rows.len().saturating_sub(1),
        side_ratio,
        side_ratio_ok: within(side_ratio, SIDE_RATIO_BAND),
        central_ratio,
        central_ratio_ok: within(central_ratio, CENTRAL_RATIO_BAND),
        rate_gap,
        rate_gap_ok: rate_gap.is_some_and(|g| g.abs() <= RATE_GAP_LIMIT),
        skipped: rows.iter().filter(|r| !r.status.ran()).count(),
    }
}

/// Runs every ladder point. Rows come back in ladder order; a failing
/// point is recorded as skipped and the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let count = cfg.points().len();
    let rows: Vec<PointOutcome> = (0..count)
        .into_par_iter()
        .map(|i| {
            run_point(cfg, i).unwrap_or_else(|e| {
                let point = cfg.points()[i];
                warn!("θ = {}, μ = {}: failed: {e:#}", point.theta, point.mu);
                PointOutcome {
                    index: i,
                    point,
                    n: cfg.dim(),
                    k: cfg.sublattice().determinant().unsigned_abs(),
                    r0: None,
                    samples: cfg.samples_at(i),
                    seed: cfg.seed,
                    status: PointStatus::Skipped(format!("{e:#}")),
                    report: None,
                    prediction: None,
                    tail: None,
                    recovery: None,
                }
            })
        })
        .collect();
    let summary = summarize(&rows);
    Ok(SweepReport { rows, summary })
}
