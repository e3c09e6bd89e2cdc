//! CSV rows and the JSON mirror.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::experiment::{PointOutcome, SweepReport};

/// One CSV row. Field order is the column order.
#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
pub struct CsvRow {
    pub theta: f64,
    pub mu: i64,
    pub K: u64,
    pub r0: Option<f64>,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub status: String,
    pub d_s1: Option<f64>,
    pub d_s2: Option<f64>,
    pub d_c1: Option<f64>,
    pub d_c2: Option<f64>,
    pub H_side1: Option<f64>,
    pub H_side2: Option<f64>,
    pub P1: Option<f64>,
    pub P2: Option<f64>,
    pub H_u1: Option<f64>,
    pub H_u2: Option<f64>,
    pub H_cond_u: Option<f64>,
    pub H_joint_u: Option<f64>,
    pub sum_rate: Option<f64>,
    pub pred_d_s: Option<f64>,
    pub pred_d_c_low: Option<f64>,
    pub pred_d_c_high: Option<f64>,
    pub pred_rate: Option<f64>,
    pub pred_hu_bound: Option<f64>,
    pub tail_prob: Option<f64>,
    pub tail_prob_err: Option<f64>,
}

pub const COLUMNS: [&str; 28] = [
    "theta",
    "mu",
    "K",
    "r0",
    "n",
    "samples",
    "seed",
    "status",
    "d_s1",
    "d_s2",
    "d_c1",
    "d_c2",
    "H_side1",
    "H_side2",
    "P1",
    "P2",
    "H_u1",
    "H_u2",
    "H_cond_u",
    "H_joint_u",
    "sum_rate",
    "pred_d_s",
    "pred_d_c_low",
    "pred_d_c_high",
    "pred_rate",
    "pred_hu_bound",
    "tail_prob",
    "tail_prob_err",
];

impl From<&PointOutcome> for CsvRow {
    fn from(o: &PointOutcome) -> Self {
        let m = o.report.as_ref();
        let p = o.prediction.as_ref();
        let t = o.tail.as_ref();
        CsvRow {
            theta: o.point.theta,
            mu: o.point.mu,
            K: o.k,
            r0: o.r0,
            n: o.n,
            samples: o.samples,
            seed: o.seed,
            status: o.status.label(),
            d_s1: m.map(|m| m.d_side[0]),
            d_s2: m.map(|m| m.d_side[1]),
            d_c1: m.map(|m| m.d_central[0]),
            d_c2: m.map(|m| m.d_central[1]),
            H_side1: m.map(|m| m.h_side[0]),
            H_side2: m.map(|m| m.h_side[1]),
            P1: m.map(|m| m.p_boundary[0]),
            P2: m.map(|m| m.p_boundary[1]),
            H_u1: m.map(|m| m.h_u[0]),
            H_u2: m.map(|m| m.h_u[1]),
            H_cond_u: m.map(|m| m.h_cond_u),
            H_joint_u: m.map(|m| m.h_joint_u),
            sum_rate: m.map(|m| m.sum_rate),
            pred_d_s: p.map(|p| p.d_side_pred),
            pred_d_c_low: p.map(|p| p.d_central_pred_low),
            pred_d_c_high: p.map(|p| p.d_central_pred_high),
            pred_rate: p.map(|p| p.rate_pred),
            pred_hu_bound: p.map(|p| p.hu_cond_bound),
            tail_prob: t.map(|t| t.probability),
            tail_prob_err: t.map(|t| t.half_width),
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[PointOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, report: &SweepReport, json: bool) -> Result<()> {
    if json {
        write_json(out, report)
    } else {
        write_csv(out, &report.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_columns() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), COLUMNS.join(","));
    }
}
