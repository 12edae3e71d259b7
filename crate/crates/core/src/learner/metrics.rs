use std::io::Write;

use serde::Serialize;

use super::LearnerError;

/// One line of the per-iteration metrics CSV. `eval_success` is empty on
/// iterations without an evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub iter: usize,
    pub elbo: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "J_c")]
    pub j_c: f64,
    #[serde(rename = "J_gen")]
    pub j_gen: f64,
    pub j_adv: f64,
    pub constraint_margin: f64,
    pub eval_success: Option<f64>,
    pub frames: u64,
}

pub const METRICS_HEADER: [&str; 9] = [
    "iter",
    "elbo",
    "H",
    "J_c",
    "J_gen",
    "j_adv",
    "constraint_margin",
    "eval_success",
    "frames",
];

pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> Result<(), LearnerError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_empty_cells() {
        let row = MetricsRow {
            iter: 3,
            elbo: -1.5,
            h: 2.0,
            j_c: -0.5,
            j_gen: -3.0,
            j_adv: -4.0,
            constraint_margin: 0.0,
            eval_success: None,
            frames: 120,
        };
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "iter,elbo,H,J_c,J_gen,j_adv,constraint_margin,eval_success,frames\n3,-1.5,2.0,-0.5,-3.0,-4.0,0.0,,120\n"
        );
    }
}
