//! CSV datasets: a header row with `time`, `event` (0/1) and `arm` (0/1)
//! columns, and any further numeric columns usable as covariates by name.

use std::io::{Read, Write};
use std::path::Path;

use rmst_core::{Arm, RmstError, SurvivalSample};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SurvivalSample>,
    /// Names of the covariates stored in each sample, in order.
    pub covariate_names: Vec<String>,
}

pub fn read_csv(path: impl AsRef<Path>, covariates: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| CliError::io(path.as_ref(), e))?;
    read_csv_from(file, covariates)
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
}

fn number(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    if raw.is_empty() {
        return Err(CliError::Parse {
            line,
            message: format!("missing value in column {name:?}"),
        });
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Parse {
            line,
            message: format!("column {name:?}: {raw:?} is not a finite number"),
        }),
    }
}

pub fn read_csv_from<R: Read>(reader: R, covariates: &[String]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let time_idx = column(&headers, "time")?;
    let event_idx = column(&headers, "event")?;
    let arm_idx = column(&headers, "arm")?;
    let cov_idx = covariates
        .iter()
        .map(|name| column(&headers, name))
        .collect::<Result<Vec<_>>>()?;

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let time = number(&record, time_idx, "time", line)?;
        let event = match number(&record, event_idx, "event", line)? {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => {
                return Err(CliError::Parse {
                    line,
                    message: format!("event must be 0 or 1, got {v}"),
                })
            }
        };
        let arm_code = number(&record, arm_idx, "arm", line)?;
        let arm = match arm_code {
            v if v == 0.0 => Arm::Control,
            v if v == 1.0 => Arm::Treatment,
            v => {
                return Err(RmstError::InvalidInput(format!("line {line}: arm must be 0 or 1, got {v}")).into());
            }
        };
        let covs = cov_idx
            .iter()
            .zip(covariates)
            .map(|(&j, name)| number(&record, j, name, line))
            .collect::<Result<Vec<_>>>()?;
        samples.push(SurvivalSample::new(time, event, arm, covs));
    }
    if samples.is_empty() {
        return Err(CliError::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(Dataset {
        samples,
        covariate_names: covariates.to_vec(),
    })
}

/// Writes `dataset` in the same schema. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| CliError::Usage(format!("cannot write CSV: {e}"));
    let mut header = vec!["time".to_string(), "event".into(), "arm".into()];
    header.extend(dataset.covariate_names.iter().cloned());
    wtr.write_record(&header).map_err(to_err)?;
    for s in &dataset.samples {
        let mut row = vec![
            s.time.to_string(),
            u8::from(s.event).to_string(),
            (s.arm.indicator() as u8).to_string(),
        ];
        row.extend(s.covariates.iter().map(|c| c.to_string()));
        wtr.write_record(&row).map_err(to_err)?;
    }
    wtr.flush().map_err(|e| CliError::Usage(format!("cannot write CSV: {e}")))
}
