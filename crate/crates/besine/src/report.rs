//! Report assembly and persistence: one CSV row per (E, statistic, quantile),
//! full metadata in JSON, and a config hash stamped on every row.
//!
//! CSV bodies are a pure function of the config and seeds; wall-clock metadata
//! lives only in the JSON so reruns can be compared byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::stats;

/// FNV-1a over the canonical config text. Not cryptographic; it only needs to
/// distinguish configs reliably in a report directory.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    format!("{:016x}", fnv1a(config.canonical().as_bytes()))
}

/// One report line: a named statistic of one shift, at one quantile (or a
/// pooled/fitted scalar), with an optional pass flag against the configured
/// thresholds.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ReportRow {
    pub e: f64,
    pub statistic: String,
    pub quantile: String,
    pub value: f64,
    pub pass: Option<bool>,
}

/// Run metadata: everything needed to reproduce or audit the rows.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ReportMeta {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub grid: String,
    pub build: String,
    /// Seconds since the Unix epoch at assembly time; JSON only.
    pub timestamp: u64,
    pub threads: usize,
    /// Free-form notes: resample counts, skipped paths, exploratory labels.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StatsReport {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

impl StatsReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        let gopts = config.grid_options();
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        StatsReport {
            meta: ReportMeta {
                experiment: experiment.to_string(),
                config_hash: config_hash(config),
                seed: config.seed,
                grid: format!("phase_cap={:e},step_factor={:e}", gopts.phase_cap, gopts.step_factor),
                build: env!("CARGO_PKG_VERSION").to_string(),
                timestamp,
                threads: rayon::current_num_threads(),
                notes: Vec::new(),
            },
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.meta.notes.push(note.into());
    }

    pub fn push(&mut self, e: f64, statistic: &str, quantile: &str, value: f64, pass: Option<bool>) {
        self.rows.push(ReportRow {
            e,
            statistic: statistic.to_string(),
            quantile: quantile.to_string(),
            value,
            pass,
        });
    }

    /// Median, p05 and p95 rows of a sample, sorted in place first. Returns
    /// the median so sweep drivers can track it across E.
    pub fn push_quantiles(&mut self, e: f64, statistic: &str, samples: &mut Vec<f64>) -> Result<f64> {
        samples.sort_by(|x, y| x.partial_cmp(y).expect("non-NaN statistic"));
        let med = stats::median(samples)?;
        self.push(e, statistic, "median", med, None);
        self.push(e, statistic, "p05", stats::quantile(samples, 0.05)?, None);
        self.push(e, statistic, "p95", stats::quantile(samples, 0.95)?, None);
        Ok(med)
    }

    /// Summary row asserting that `values` (one per E) decrease strictly: the
    /// stored value is the fraction of consecutive strict decreases, passing
    /// only at 1.
    pub fn push_decreasing(&mut self, statistic: &str, es: &[f64], values: &[f64]) {
        let pairs = values.len().saturating_sub(1);
        if pairs == 0 {
            return;
        }
        let good = values.windows(2).filter(|w| w[1] < w[0]).count();
        let frac = good as f64 / pairs as f64;
        self.push(
            *es.last().expect("nonempty sweep"),
            &format!("{statistic}_decreasing"),
            "sweep",
            frac,
            Some(frac == 1.0),
        );
    }

    /// True when no row failed (rows without a flag do not count).
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn csv_string(&self) -> String {
        let mut out = String::from("e,statistic,quantile,value,pass,config_hash\n");
        for r in &self.rows {
            let pass = match r.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            let _ = writeln!(
                out,
                "{:.16e},{},{},{:.16e},{},{}",
                r.e, r.statistic, r.quantile, r.value, pass, self.meta.config_hash
            );
        }
        out
    }

    pub fn json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self).map_err(|e| crate::Error::Parse(e.to_string()))?)
    }

    /// Write `report.csv` and `report.json` into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join("report.csv");
        let json = dir.join("report.json");
        std::fs::write(&csv, self.csv_string())?;
        std::fs::write(&json, self.json_string()?)?;
        Ok((csv, json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn csv_is_deterministic_and_flags_aggregate() {
        let cfg = ExperimentConfig::default();
        let mut rep = StatsReport::new("demo", &cfg);
        rep.push(100.0, "stat", "median", 0.125, None);
        rep.push(100.0, "gate", "pooled", 0.5, Some(true));
        assert!(rep.passed());
        rep.push(1000.0, "gate", "pooled", 0.7, Some(false));
        assert!(!rep.passed());
        let body = rep.csv_string();
        assert!(body.starts_with("e,statistic,quantile,value,pass,config_hash\n"));
        assert!(body.contains(&rep.meta.config_hash));
        assert_eq!(body, rep.csv_string());
        // The hash tracks the canonical config, not the report contents.
        assert_eq!(rep.meta.config_hash, config_hash(&cfg));
    }

    #[test]
    fn quantile_and_decrease_rows() {
        let cfg = ExperimentConfig::default();
        let mut rep = StatsReport::new("demo", &cfg);
        let mut samples = vec![3.0, 1.0, 2.0, 5.0, 4.0];
        rep.push_quantiles(10.0, "stat", &mut samples).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert_eq!(rep.rows[0].value, 3.0);
        rep.push_decreasing("stat_median", &[10.0, 100.0, 1000.0], &[3.0, 2.0, 1.0]);
        assert_eq!(rep.rows.last().unwrap().pass, Some(true));
        rep.push_decreasing("stat_median", &[10.0, 100.0, 1000.0], &[3.0, 2.0, 2.5]);
        assert_eq!(rep.rows.last().unwrap().pass, Some(false));
        assert_eq!(rep.rows.last().unwrap().value, 0.5);
    }

    #[test]
    fn write_dir_roundtrip() {
        let cfg = ExperimentConfig::default();
        let mut rep = StatsReport::new("demo", &cfg);
        rep.push(100.0, "stat", "median", 1.0, None);
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = rep.write_dir(dir.path()).unwrap();
        let body = std::fs::read_to_string(csv).unwrap();
        assert_eq!(body, rep.csv_string());
        let parsed: StatsReport =
            serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(parsed.rows.len(), 1);
        assert_eq!(parsed.meta.config_hash, rep.meta.config_hash);
    }
}
