use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Column-oriented table written as CSV (17 significant digits) or JSON records.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// Full double precision, round-trippable.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf, CliError> {
        match format {
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|&x| fmt17(x)))?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let path = dir.join(format!("{stem}.json"));
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(h, &x)| (h.to_string(), x.into()))
                            .collect()
                    })
                    .collect();
                write_json(&path, &records)?;
                Ok(path)
            }
        }
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[1.0 / 3.0, 19.0 / 420.0, 1e-300, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(
                s.split('e').next().unwrap().replace(['.', '-'], "").len(),
                17
            );
        }
    }
}
