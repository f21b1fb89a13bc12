//! Declarative experiment configs, seeded reproducible runs and CSV output.
//!
//! Every experiment kind is driven by an [`ExperimentConfig`] (TOML, with
//! JSON accepted) and writes one or more CSV files with documented columns.
//! Identical config and seed produce byte-identical files.

mod config;
mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use runner::{run, summarize, RunOutput};

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Per-epoch loss records with named columns; epochs strictly increase.
#[derive(Debug, Clone)]
pub struct LossHistory {
    columns: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

impl LossHistory {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn push(&mut self, epoch: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::InvalidConfig(format!(
                "loss row has {} values, expected {}",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some((last, _)) = self.rows.last() {
            if epoch <= *last {
                return Err(Error::InvalidConfig(format!(
                    "epochs must strictly increase ({last} then {epoch})"
                )));
            }
        }
        self.rows.push((epoch, values.to_vec()));
        Ok(())
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(e, v)| (*e, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column values in epoch order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[idx]).collect())
    }

    /// Last value of a column.
    pub fn final_value(&self, name: &str) -> Option<f64> {
        self.column(name)?.last().copied()
    }

    /// First epoch at which a column reaches `threshold`.
    pub fn first_epoch_reaching(&self, name: &str, threshold: f64) -> Option<usize> {
        let idx = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .find(|(_, v)| v[idx] >= threshold)
            .map(|(e, _)| *e)
    }

    /// CSV text: header row, one line per epoch, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (epoch, values) in &self.rows {
            let _ = write!(out, "{epoch}");
            for v in values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Writes a generic CSV table with LF endings and '.' decimal separators.
pub fn write_csv_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_enforces_increasing_epochs_and_width() {
        let mut h = LossHistory::new(&["training_loss"]);
        h.push(0, &[0.5]).unwrap();
        h.push(1, &[0.6]).unwrap();
        assert!(h.push(1, &[0.7]).is_err());
        assert!(h.push(2, &[0.7, 0.8]).is_err());
        assert_eq!(h.final_value("training_loss"), Some(0.6));
        assert_eq!(h.first_epoch_reaching("training_loss", 0.6), Some(1));
        assert_eq!(h.first_epoch_reaching("training_loss", 0.9), None);
    }

    #[test]
    fn csv_uses_lf_and_headers() {
        let mut h = LossHistory::new(&["training_loss", "validation_loss"]);
        h.push(0, &[0.25, 0.5]).unwrap();
        let csv = h.to_csv();
        assert_eq!(csv, "epoch,training_loss,validation_loss\n0,0.25,0.5\n");
    }
}
