//! Run configuration: defaults, overlaid by a flat JSON file, overlaid by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub n: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub all_n: bool,
    pub unmerged: bool,
    pub j_max: usize,
    pub epsilon: f64,
    pub count: usize,
    pub output: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub format: Format,
    pub binary: bool,
    pub allow_even_n: bool,
    pub tol_unitarity: f64,
    pub tol_cluster: f64,
    pub jobs: Option<usize>,
    pub max_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 2,
            b: 3,
            c: 1,
            d: 2,
            n: Vec::new(),
            n_min: 3,
            n_max: 1001,
            all_n: false,
            unmerged: false,
            j_max: 50,
            epsilon: 0.1,
            count: 6,
            output: None,
            input: None,
            svg: None,
            format: Format::Csv,
            binary: false,
            allow_even_n: false,
            tol_unitarity: 1e-9,
            tol_cluster: catmap::spectral::CLUSTER_TOL,
            jobs: None,
            max_dim: catmap::experiments::DEFAULT_MAX_DIM,
        }
    }
}

/// A partial configuration; `None` leaves the underlying value alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub a: Option<i64>,
    pub b: Option<i64>,
    pub c: Option<i64>,
    pub d: Option<i64>,
    pub n: Option<Vec<usize>>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub all_n: Option<bool>,
    pub unmerged: Option<bool>,
    pub j_max: Option<usize>,
    pub epsilon: Option<f64>,
    pub count: Option<usize>,
    pub output: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub format: Option<Format>,
    pub binary: Option<bool>,
    pub allow_even_n: Option<bool>,
    pub tol_unitarity: Option<f64>,
    pub tol_cluster: Option<f64>,
    pub jobs: Option<usize>,
    pub max_dim: Option<usize>,
}

macro_rules! overlay {
    ($cfg:ident, $layer:ident; $($field:ident),*; $($opt:ident),*) => {{
        $(if let Some(v) = $layer.$field { $cfg.$field = v; })*
        $(if $layer.$opt.is_some() { $cfg.$opt = $layer.$opt; })*
    }};
}

impl RunConfig {
    pub fn apply(mut self, layer: ConfigLayer) -> Self {
        overlay!(self, layer;
            a, b, c, d, n, n_min, n_max, all_n, unmerged, j_max, epsilon, count,
            format, binary, allow_even_n, tol_unitarity, tol_cluster, max_dim;
            output, input, svg, jobs);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let layer: ConfigLayer =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))?;
        Ok(Self::default().apply(layer))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load_layer(path: &Path) -> Result<ConfigLayer, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Defaults, then the file layer, then the flag layer.
    pub fn resolve(file: Option<ConfigLayer>, flags: ConfigLayer) -> Result<Self, CliError> {
        let cfg = Self::default().apply(file.unwrap_or_default()).apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Usage(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tol-unitarity", self.tol_unitarity)?;
        positive("tol-cluster", self.tol_cluster)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Usage(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let file = ConfigLayer { n_max: Some(301), j_max: Some(20), ..Default::default() };
        let flags = ConfigLayer { n_max: Some(101), ..Default::default() };
        let cfg = RunConfig::resolve(Some(file), flags).unwrap();
        assert_eq!(cfg.n_max, 101);
        assert_eq!(cfg.j_max, 20);
        assert_eq!(cfg.n_min, 3);
    }

    #[test]
    fn rejects_bad_tolerances_and_unknown_keys() {
        let flags = ConfigLayer { tol_cluster: Some(0.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(None, flags), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::from_json(r#"{"bogus": 1}"#), Err(CliError::Usage(_))));
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig { n: vec![855], svg: Some("x.svg".into()), format: Format::Json, ..Default::default() };
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
