use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// One scheduler at one epoch. Empty cells mean "not measured".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub config_hash: String,
    pub seed: u64,
    pub epoch: u64,
    pub scheduler: String,
    pub n_ues: usize,
    pub objective: f64,
    pub reward: f64,
    pub mean_entropy: Option<f64>,
    pub train_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub decisions_latency_ms: Option<f64>,
    pub optimizer_evals: u64,
    pub world_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub seed: u64,
    pub scheduler: String,
    pub epochs: usize,
    pub mean_objective: f64,
    pub std_objective: f64,
    pub mean_reward: f64,
    /// Mean reward over the last `min(50, epochs)` epochs.
    pub final_reward: f64,
    pub mean_test_loss: Option<f64>,
    pub updates: u64,
    pub optimizer_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRow {
    pub config_hash: String,
    pub seed: u64,
    pub epoch: u64,
    pub node: usize,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub n_ues: usize,
    pub scheduler: String,
    pub seed: u64,
    /// Mean objective over the measured epochs.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub config_hash: String,
    pub n_ues: usize,
    pub scheduler: String,
    pub seeds: usize,
    pub mean_objective: f64,
    pub std_objective: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Sample mean and (n - 1) standard deviation; zero spread for fewer than two values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let row = MetricsRow {
            config_hash: "ab".into(),
            seed: 1,
            epoch: 0,
            scheduler: "odd, \"name\"".into(),
            n_ues: 3,
            objective: 1.5,
            reward: 1.0 / 1.5,
            mean_entropy: None,
            train_loss: Some(0.25),
            test_loss: None,
            decisions_latency_ms: None,
            optimizer_evals: 0,
            world_digest: "00".into(),
        };
        write_csv(&path, std::slice::from_ref(&row)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("config_hash,seed,epoch,scheduler,n_ues,objective,reward,mean_entropy,"));
        assert!(text.contains("\"odd, \"\"name\"\"\""));
        assert!(text.contains(",,0.25,,,0,"));
        assert_eq!(read_csv::<MetricsRow>(&path).unwrap(), vec![row]);
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
