//! Per-algorithm summary of benchmark measurements.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::metering::Measurement;
use crate::recognizers::Algorithm;
use crate::stats::median;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no measurements")]
    Empty,
    #[error("no measurements for {0}")]
    MissingAlgorithm(Algorithm),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub samples: usize,
    pub accuracy: f64,
    pub median_square_accuracy: f64,
    pub median_latency_s: f64,
    pub median_energy_j: f64,
    pub median_invocations: f64,
    pub median_occ_calls: f64,
    pub median_color_calls: f64,
    pub median_type_calls: f64,
}

impl ReportRow {
    /// Board accuracy as a percentage; square-level algorithms add the
    /// median square accuracy in parentheses.
    pub fn accuracy_cell(&self) -> String {
        if self.algorithm.is_domain_aware() {
            format!("{:.2}%", self.accuracy * 100.0)
        } else {
            format!(
                "{:.2}% ({:.2}%)",
                self.accuracy * 100.0,
                self.median_square_accuracy * 100.0
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

/// Aggregate measurements per algorithm. With `algorithms`, rows follow that
/// order and every listed algorithm must be present; otherwise rows follow
/// first appearance.
pub fn render_report(
    measurements: &[Measurement],
    algorithms: Option<&[Algorithm]>,
) -> Result<ReportTable, ReportError> {
    if measurements.is_empty() {
        return Err(ReportError::Empty);
    }
    let order: Vec<Algorithm> = match algorithms {
        Some(list) => list.to_vec(),
        None => {
            let mut seen = Vec::new();
            for m in measurements {
                if !seen.contains(&m.algorithm) {
                    seen.push(m.algorithm);
                }
            }
            seen
        }
    };
    let mut rows = Vec::with_capacity(order.len());
    for alg in order {
        let ms: Vec<&Measurement> = measurements.iter().filter(|m| m.algorithm == alg).collect();
        if ms.is_empty() {
            return Err(ReportError::MissingAlgorithm(alg));
        }
        let med = |f: &dyn Fn(&Measurement) -> f64| {
            median(&ms.iter().map(|m| f(m)).collect::<Vec<_>>()).expect("non-empty")
        };
        rows.push(ReportRow {
            algorithm: alg,
            samples: ms.len(),
            accuracy: ms.iter().filter(|m| m.correct).count() as f64 / ms.len() as f64,
            median_square_accuracy: med(&|m| m.square_accuracy),
            median_latency_s: med(&|m| m.latency_s),
            median_energy_j: med(&|m| m.energy_j),
            median_invocations: med(&|m| f64::from(m.invocations.total())),
            median_occ_calls: med(&|m| f64::from(m.invocations.occupancy)),
            median_color_calls: med(&|m| f64::from(m.invocations.color)),
            median_type_calls: med(&|m| f64::from(m.invocations.type_)),
        });
    }
    Ok(ReportTable { rows })
}

impl ReportTable {
    /// Fixed-width text table.
    pub fn to_text(&self) -> String {
        let header = [
            "Algorithm",
            "Accuracy",
            "Median latency (s)",
            "Median energy (J)",
            "Median invocations",
        ];
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.algorithm.to_string(),
                    r.accuracy_cell(),
                    format!("{:.3}", r.median_latency_s),
                    format!("{:.3}", r.median_energy_j),
                    format!("{}", r.median_invocations),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            for (i, (c, w)) in row.iter().zip(widths).enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "  {c:>w$}");
                }
            }
            out.push('\n');
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &cells {
            line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<ReportTable, ReportError> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows = rdr.deserialize().collect::<Result<Vec<ReportRow>, _>>()?;
        Ok(ReportTable { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognizers::InvocationCounts;

    fn m(alg: Algorithm, correct: bool, sq: f64, latency: f64) -> Measurement {
        Measurement {
            algorithm: alg,
            sample: 0,
            latency_s: latency,
            energy_j: latency * 10.0,
            correct,
            square_accuracy: sq,
            invocations: InvocationCounts {
                occupancy: 10,
                color: 1,
                type_: 0,
            },
        }
    }

    #[test]
    fn square_level_rows_show_parenthetical() {
        let ms = vec![
            m(Algorithm::Sd, false, 0.72, 0.1),
            m(Algorithm::Sd, false, 0.70, 0.1),
            m(Algorithm::Sd, false, 0.74, 0.1),
        ];
        let t = render_report(&ms, None).unwrap();
        assert_eq!(t.rows[0].accuracy_cell(), "0.00% (72.00%)");
    }

    #[test]
    fn all_correct_and_latency_median() {
        let ms = vec![
            m(Algorithm::Cps, true, 1.0, 0.2),
            m(Algorithm::Cps, true, 1.0, 0.4),
            m(Algorithm::Cps, true, 1.0, 0.3),
        ];
        let t = render_report(&ms, None).unwrap();
        assert_eq!(t.rows[0].accuracy_cell(), "100.00%");
        assert_eq!(format!("{:.3}", t.rows[0].median_latency_s), "0.300");
        assert!(t.to_text().contains("0.300"));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let ms = vec![
            m(Algorithm::Esd, false, 0.8, 0.123_456_789),
            m(Algorithm::TopK(3), true, 1.0, 0.1 + 0.2),
        ];
        let t = render_report(&ms, None).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(ReportTable::read_csv(&buf[..]).unwrap(), t);
        assert!(matches!(render_report(&[], None), Err(ReportError::Empty)));
        assert!(matches!(
            render_report(&ms, Some(&[Algorithm::Ia])),
            Err(ReportError::MissingAlgorithm(_))
        ));
    }
}
