use std::io::Write;

use serde::Serialize;

use super::EstimatorError;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub estimate: f64,
    pub m: usize,
    pub exact: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub confidence: Option<f64>,
}

impl EstimateReport {
    pub fn new(estimate: f64, m: usize) -> Self {
        Self {
            estimate,
            m,
            exact: None,
            interval: None,
            confidence: None,
        }
    }

    pub fn with_exact(mut self, exact: f64) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Panics if `lo > hi`.
    pub fn with_interval(mut self, lo: f64, hi: f64, confidence: f64) -> Self {
        assert!(lo <= hi, "interval [{lo}, {hi}] is not ordered");
        self.interval = Some((lo, hi));
        self.confidence = Some(confidence);
        self
    }

    pub fn abs_err(&self) -> Option<f64> {
        self.exact.map(|e| (self.estimate - e).abs())
    }

    pub fn row(&self, estimator: &str, seed: u64) -> ReportRow {
        ReportRow {
            estimator: estimator.to_string(),
            m: self.m,
            seed,
            estimate: self.estimate,
            exact: self.exact,
            abs_err: self.abs_err(),
            interval_lo: self.interval.map(|i| i.0),
            interval_hi: self.interval.map(|i| i.1),
            confidence: self.confidence,
        }
    }
}

/// One CSV line of a replication sweep. Missing optional values are empty cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub estimator: String,
    pub m: usize,
    pub seed: u64,
    pub estimate: f64,
    pub exact: Option<f64>,
    pub abs_err: Option<f64>,
    pub interval_lo: Option<f64>,
    pub interval_hi: Option<f64>,
    pub confidence: Option<f64>,
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<(), EstimatorError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "estimator",
            "m",
            "seed",
            "estimate",
            "exact",
            "abs_err",
            "interval_lo",
            "interval_hi",
            "confidence",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
