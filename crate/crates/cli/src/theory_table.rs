//! Formula-only rows for `lrdsc theory`.

use lrdsc::{markov_rho_bound, r_md, r_rc, thm2_predictions, Correlation, LrdscConfig, Marginal, PredictionInputs};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::build_codec;

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub h: f64,
    pub d_s: f64,
    pub d_c: f64,
    pub r_md: f64,
    pub r_rc: f64,
    pub gap: f64,
}

pub fn rate_table(h: f64, d_s: &[f64], d_c: &[f64]) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for &s in d_s {
        for &c in d_c {
            let md = r_md(h, s, c);
            let rc = r_rc(h, s, c);
            rows.push(RateRow {
                h,
                d_s: s,
                d_c: c,
                r_md: md,
                r_rc: rc,
                gap: rc - md,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionRow {
    pub theta: f64,
    pub mu: i64,
    #[serde(rename = "K")]
    pub k: u64,
    pub status: String,
    pub r0: Option<f64>,
    pub tail_prob_bound: Option<f64>,
    pub pred_d_s: Option<f64>,
    pub pred_d_c_low: Option<f64>,
    pub pred_d_c_high: Option<f64>,
    /// Rate with `H(U₂|U₁)` replaced by its upper bound.
    pub pred_rate: Option<f64>,
    pub pred_hu_bound: Option<f64>,
    pub r_md: Option<f64>,
    pub r_rc: Option<f64>,
}

/// An upper bound on `P[‖X₂ − X₁‖ ≥ r0]` that needs no simulation.
fn tail_bound(cfg: &ExperimentConfig, codec: &LrdscConfig) -> f64 {
    let n = codec.dim();
    let r0 = codec.r0();
    match (cfg.source.correlation, cfg.source.marginal) {
        (Correlation::Identical, _) => 0.0,
        (Correlation::GaussianCorrelated { rho }, Marginal::Gaussian { variance }) => {
            markov_rho_bound(n, variance, rho, r0).min(1.0)
        }
        (Correlation::GaussianCorrelated { .. }, _) => 1.0,
        (Correlation::BoundedDifference { delta }, _) => {
            if delta * (n as f64).sqrt() < r0 {
                0.0
            } else {
                1.0
            }
        }
    }
}

pub fn prediction_table(cfg: &ExperimentConfig) -> Vec<PredictionRow> {
    let k = cfg.sublattice().determinant().unsigned_abs();
    cfg.points()
        .into_iter()
        .map(|p| {
            let mut row = PredictionRow {
                theta: p.theta,
                mu: p.mu,
                k,
                status: "ok".into(),
                r0: None,
                tail_prob_bound: None,
                pred_d_s: None,
                pred_d_c_low: None,
                pred_d_c_high: None,
                pred_rate: None,
                pred_hu_bound: None,
                r_md: None,
                r_rc: None,
            };
            let codec = match build_codec(cfg, p) {
                Ok(c) => c,
                Err(e) => {
                    row.status = format!("skipped: {e}");
                    return row;
                }
            };
            if !codec.supported_by_theory() {
                row.status = "unsupported-by-theory".into();
            }
            let h = cfg.source.marginal.differential_entropy();
            let tail = tail_bound(cfg, &codec);
            // the bound does not depend on H(U₂|U₁), so evaluate it first
            let bound = thm2_predictions(&PredictionInputs::from_config(&codec, h, h, 0.0, tail)).hu_cond_bound;
            let pred = thm2_predictions(&PredictionInputs::from_config(&codec, h, h, bound, tail));
            row.r0 = Some(codec.r0());
            row.tail_prob_bound = Some(tail);
            row.pred_d_s = Some(pred.d_side_pred);
            row.pred_d_c_low = Some(pred.d_central_pred_low);
            row.pred_d_c_high = Some(pred.d_central_pred_high);
            row.pred_rate = Some(pred.rate_pred);
            row.pred_hu_bound = Some(pred.hu_cond_bound);
            row.r_md = Some(pred.r_md);
            row.r_rc = Some(pred.r_rc);
            row
        })
        .collect()
}
