//! Experiment configuration: a flat key = value file format, validation, and
//! the canonical serialization that reports hash for reproducibility checks.

use crate::bessel::{BesselParams, GridOptions};
use crate::coupling::CouplingConfig;
use crate::error::{Error, Result};

/// Pass/fail thresholds applied by the experiment runners.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Largest admissible Herglotz violation of any evaluated Weyl function.
    pub herglotz: f64,
    /// KS bound for the asymptotic phase against the uniform circle law.
    pub phase_ks: f64,
    /// KS bound for pooled sine spectral masses against the Gamma law.
    pub gamma_ks: f64,
    /// Half-width of the accepted band around the theoretical radial slope.
    pub slope_band: f64,
    /// The fitted log-log slope of the coupling deviation must not exceed this.
    pub deviation_slope: f64,
    /// Required fraction of paths inside the reported fluctuation envelope.
    pub envelope_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herglotz: 1e-8,
            phase_ks: 0.05,
            gamma_ks: 0.08,
            slope_band: 0.05,
            deviation_slope: -0.05,
            envelope_fraction: 0.95,
        }
    }
}

/// Everything an experiment run needs: model parameters, the shift sweep,
/// seeds, grid policy, coupling exponents, thresholds and output location.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub a: f64,
    /// Spectral shifts E, strictly increasing.
    pub e_list: Vec<f64>,
    pub paths_per_e: usize,
    /// Experiment id: the top level of the seed hierarchy.
    pub seed: u64,
    pub alpha: f64,
    pub delta: f64,
    pub phase_cap: f64,
    pub step_factor: f64,
    pub output_dir: String,
    /// Worker threads; `None` leaves the global pool untouched.
    pub threads: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let gopts = GridOptions::default();
        ExperimentConfig {
            beta: 2.0,
            a: 0.0,
            e_list: vec![1e2, 1e3, 1e4],
            paths_per_e: 200,
            seed: 1,
            alpha: 0.3,
            delta: 0.05,
            phase_cap: gopts.phase_cap,
            step_factor: gopts.step_factor,
            output_dir: "out".to_string(),
            threads: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> BesselParams {
        BesselParams { beta: self.beta, a: self.a }
    }

    pub fn coupling(&self) -> Result<CouplingConfig> {
        CouplingConfig::new(self.alpha, self.delta)
    }

    pub fn grid_options(&self) -> GridOptions {
        GridOptions { phase_cap: self.phase_cap, step_factor: self.step_factor }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::config(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.a > -1.0) {
            return Err(Error::config(format!("a = {} must exceed -1", self.a)));
        }
        if self.e_list.is_empty() {
            return Err(Error::config("e_list must not be empty"));
        }
        for (i, &e) in self.e_list.iter().enumerate() {
            if !(e > 1.0 && e.is_finite()) {
                return Err(Error::config(format!("e_list entry {e} must be finite and > 1")));
            }
            if i > 0 && e <= self.e_list[i - 1] {
                return Err(Error::config("e_list must be strictly increasing"));
            }
        }
        if self.paths_per_e < 1 {
            return Err(Error::config("paths_per_e must be at least 1"));
        }
        self.coupling()?;
        if !(self.phase_cap > 0.0 && self.phase_cap < 1.0) {
            return Err(Error::config(format!("phase_cap = {} must lie in (0, 1)", self.phase_cap)));
        }
        if !(self.step_factor > 0.0 && self.step_factor <= 1.0) {
            return Err(Error::config(format!(
                "step_factor = {} must lie in (0, 1]",
                self.step_factor
            )));
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::config("threads must be positive when given"));
            }
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Lines are trimmed; blank lines and
    /// `#` comments are skipped; unknown keys are errors.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Parse(format!("line {}: {key} needs {what}, got '{value}'", lineno + 1))
            };
            match key {
                "beta" => cfg.beta = parse_beta(value).ok_or_else(|| bad("a positive number or inf"))?,
                "a" => cfg.a = value.parse().map_err(|_| bad("a number"))?,
                "e_list" => {
                    let mut list = Vec::new();
                    for part in value.split(',') {
                        list.push(part.trim().parse().map_err(|_| bad("comma-separated numbers"))?);
                    }
                    cfg.e_list = list;
                }
                "paths_per_e" => cfg.paths_per_e = value.parse().map_err(|_| bad("a positive integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
                "alpha" => cfg.alpha = value.parse().map_err(|_| bad("a number"))?,
                "delta" => cfg.delta = value.parse().map_err(|_| bad("a number"))?,
                "phase_cap" => cfg.phase_cap = value.parse().map_err(|_| bad("a number"))?,
                "step_factor" => cfg.step_factor = value.parse().map_err(|_| bad("a number"))?,
                "output_dir" => cfg.output_dir = value.to_string(),
                "threads" => cfg.threads = Some(value.parse().map_err(|_| bad("a positive integer"))?),
                "tol_herglotz" => cfg.tolerances.herglotz = value.parse().map_err(|_| bad("a number"))?,
                "tol_phase_ks" => cfg.tolerances.phase_ks = value.parse().map_err(|_| bad("a number"))?,
                "tol_gamma_ks" => cfg.tolerances.gamma_ks = value.parse().map_err(|_| bad("a number"))?,
                "tol_slope_band" => cfg.tolerances.slope_band = value.parse().map_err(|_| bad("a number"))?,
                "tol_deviation_slope" => {
                    cfg.tolerances.deviation_slope = value.parse().map_err(|_| bad("a number"))?
                }
                "tol_envelope_fraction" => {
                    cfg.tolerances.envelope_fraction = value.parse().map_err(|_| bad("a number"))?
                }
                other => {
                    return Err(Error::Parse(format!("line {}: unknown key '{other}'", lineno + 1)))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form: fixed key order, full precision. Reports hash this
    /// string, so byte-equal canonical forms mean the same experiment.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let e_list: Vec<String> = self.e_list.iter().map(|e| format!("{e:e}")).collect();
        out.push_str(&format!("a = {:e}\n", self.a));
        out.push_str(&format!("alpha = {:e}\n", self.alpha));
        out.push_str(&format!("beta = {:e}\n", self.beta));
        out.push_str(&format!("delta = {:e}\n", self.delta));
        out.push_str(&format!("e_list = {}\n", e_list.join(",")));
        out.push_str(&format!("paths_per_e = {}\n", self.paths_per_e));
        out.push_str(&format!("phase_cap = {:e}\n", self.phase_cap));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("step_factor = {:e}\n", self.step_factor));
        let t = &self.tolerances;
        out.push_str(&format!("tol_deviation_slope = {:e}\n", t.deviation_slope));
        out.push_str(&format!("tol_envelope_fraction = {:e}\n", t.envelope_fraction));
        out.push_str(&format!("tol_gamma_ks = {:e}\n", t.gamma_ks));
        out.push_str(&format!("tol_herglotz = {:e}\n", t.herglotz));
        out.push_str(&format!("tol_phase_ks = {:e}\n", t.phase_ks));
        out.push_str(&format!("tol_slope_band = {:e}\n", t.slope_band));
        out
    }
}

fn parse_beta(value: &str) -> Option<f64> {
    if value.eq_ignore_ascii_case("inf") || value.eq_ignore_ascii_case("infinity") {
        return Some(f64::INFINITY);
    }
    value.parse().ok().filter(|b: &f64| *b > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parse_roundtrip_and_overrides() {
        let text = "
            # sweep for the decay experiment
            beta = 4
            a = 0.5
            e_list = 100, 1000, 10000
            paths_per_e = 50
            seed = 9
            alpha = 0.25
            delta = 0.02
            tol_gamma_ks = 0.1
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.beta, 4.0);
        assert_eq!(cfg.a, 0.5);
        assert_eq!(cfg.e_list, vec![100.0, 1000.0, 10000.0]);
        assert_eq!(cfg.paths_per_e, 50);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tolerances.gamma_ks, 0.1);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.phase_cap, GridOptions::default().phase_cap);
    }

    #[test]
    fn unknown_keys_and_bad_values_error() {
        assert!(matches!(ExperimentConfig::parse("coolness = 11"), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::parse("beta"), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::parse("beta = soup"), Err(Error::Parse(_))));
        // Parsed but invalid: validation runs after parsing.
        assert!(ExperimentConfig::parse("e_list = 100, 50").is_err());
        assert!(ExperimentConfig::parse("paths_per_e = 0").is_err());
        assert!(ExperimentConfig::parse("alpha = 0.6").is_err());
    }

    #[test]
    fn infinite_beta_spelled_out() {
        let cfg = ExperimentConfig::parse("beta = inf").unwrap();
        assert!(cfg.beta.is_infinite());
    }

    #[test]
    fn canonical_is_stable() {
        let a = ExperimentConfig::default().canonical();
        let b = ExperimentConfig::default().canonical();
        assert_eq!(a, b);
        let mut other = ExperimentConfig::default();
        other.seed = 2;
        assert_ne!(a, other.canonical());
    }
}
