//! Per-iteration metrics log.
//!
//! One CSV row per training iteration, flushed immediately so interrupted
//! runs keep partial logs. Floats use the shortest round-trip
//! representation, so parsing a column back yields the exact value that
//! was logged; the `sum_cost`/`sum_dnorm` columns let the η recursion be
//! replayed bit-exactly offline.

use crate::error::Result;
use crate::hinf::LossReport;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const METRICS_HEADER: &str = "iter,eta,lambda,l_hinf_mean,sat_frac,actor_loss,disturber_loss,mean_task_reward,mean_cost,mean_force_norm,sum_cost,sum_dnorm,falls";

pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{METRICS_HEADER}")?;
        out.flush()?;
        Ok(MetricsWriter { out })
    }

    pub fn write_row(&mut self, r: &LossReport) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iter,
            r.eta_after,
            r.lambda_after,
            r.l_hinf_mean,
            r.sat_frac,
            r.actor_loss,
            r.disturber_loss,
            r.mean_task_reward,
            r.mean_cost,
            r.mean_force_norm,
            r.sum_cost,
            r.sum_dnorm,
            r.falls
        )?;
        self.out.flush()?;
        Ok(())
    }
}

/// Parsed metrics rows (columns by name).
pub struct MetricsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricsTable {
    pub fn read<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> =
            lines.next().unwrap_or_default().split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line.split(',').map(|v| v.trim().parse::<f64>().unwrap_or(f64::NAN)).collect();
            rows.push(row);
        }
        Ok(MetricsTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_exact_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let report = LossReport {
            iter: 3,
            eta_before: 1.0,
            eta_after: 0.123456789012345678,
            lambda_before: 1.0,
            lambda_after: 0.999999999999999,
            l_hinf_mean: -1.5e-13,
            sat_frac: 0.5,
            actor_loss: 0.1,
            entropy: 0.0,
            value_loss_overall: 0.0,
            value_loss_cost: 0.0,
            disturber_loss: -0.2,
            mean_reward: 0.0,
            mean_task_reward: 1.2,
            mean_cost: 0.3,
            mean_force_norm: 10.0,
            sum_cost: 0.1 + 0.2,
            sum_dnorm: 123.456,
            falls: 2,
            eta_update_skipped: false,
        };
        let mut w = MetricsWriter::create(&path).unwrap();
        w.write_row(&report).unwrap();
        drop(w);
        let table = MetricsTable::read(&path).unwrap();
        assert_eq!(table.column("eta").unwrap()[0].to_bits(), report.eta_after.to_bits());
        assert_eq!(table.column("sum_cost").unwrap()[0].to_bits(), (0.1f64 + 0.2).to_bits());
    }
}
