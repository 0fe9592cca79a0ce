//! Run configuration: a JSON file with flat CLI-flag overrides. Unknown keys
//! are rejected; every run writes the resolved configuration next to its
//! outputs so reruns are byte-reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use penalise_core::StepFunction;

/// Seed fallback order: `--seed` flag, config file, this environment
/// variable, then the built-in default.
pub const SEED_ENV: &str = "PENALISE_SEED";
pub const DEFAULT_SEED: u64 = 42;

/// On-disk configuration; every field optional so flags can fill the gaps.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub n_paths: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub workers: Option<usize>,
    pub tolerance_scale: Option<f64>,
    /// Verification subset (check ids).
    pub checks: Option<Vec<String>>,
    /// Per-check path-count overrides.
    pub n_override: BTreeMap<String, u64>,
    /// Number of full path dumps for `simulate`.
    pub dump_paths: Option<u64>,
    /// Step integrand for `integrate`, as (right_endpoint, level) pairs.
    pub integrand: Option<StepFunction>,
    /// Times at which `integrate` reports the cumulative integral.
    pub t_grid: Option<Vec<f64>>,
    /// Refinement levels for `table`.
    pub levels: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved configuration, echoed to `config.json` in the output
/// directory. The echo plus the seed determine every output byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub subcommand: String,
    pub out_dir: String,
    pub seed: u64,
    pub n_paths: u64,
    pub dt: f64,
    pub horizon: f64,
    pub workers: usize,
    pub tolerance_scale: f64,
    pub checks: Option<Vec<String>>,
    pub n_override: BTreeMap<String, u64>,
    pub dump_paths: u64,
    pub integrand: Option<StepFunction>,
    pub t_grid: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub n_paths: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub workers: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub checks: Option<Vec<String>>,
    pub dump_paths: Option<u64>,
    pub integrand: Option<StepFunction>,
    pub t_grid: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
}

pub fn resolve(
    subcommand: &str,
    out_dir: &Path,
    file: RunConfig,
    flags: Overrides,
) -> ResolvedConfig {
    let env_seed = std::env::var(SEED_ENV).ok().and_then(|v| v.parse::<u64>().ok());
    ResolvedConfig {
        subcommand: subcommand.to_string(),
        out_dir: out_dir.display().to_string(),
        seed: flags.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED),
        n_paths: flags.n_paths.or(file.n_paths).unwrap_or(100_000),
        dt: flags.dt.or(file.dt).unwrap_or(1.0 / 1024.0),
        horizon: flags.horizon.or(file.horizon).unwrap_or(16.0),
        workers: flags.workers.or(file.workers).unwrap_or(0),
        tolerance_scale: flags.tolerance_scale.or(file.tolerance_scale).unwrap_or(1.0),
        checks: flags.checks.or(file.checks),
        n_override: file.n_override,
        dump_paths: flags.dump_paths.or(file.dump_paths).unwrap_or(0),
        integrand: flags.integrand.or(file.integrand),
        t_grid: flags.t_grid.or(file.t_grid),
        levels: flags.levels.or(file.levels),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let res: Result<RunConfig, _> = serde_json::from_str(r#"{"n_paths": 10, "typo": 1}"#);
        assert!(res.is_err());
    }

    #[test]
    fn integrand_pairs_parse() {
        let cfg: RunConfig = serde_json::from_str(r#"{"integrand": [[1.0, 1.0]]}"#).unwrap();
        let f = cfg.integrand.unwrap();
        assert_eq!(f.support_end(), 1.0);
        assert_eq!(f.eval(0.5), 1.0);
    }
}
