//! Flat `key = value` pipeline configuration.
//!
//! One key per line, `#` starts a comment, unknown keys are rejected.
//! Precedence: built-in defaults < config file < command-line flags. The
//! fully resolved document is written into the run directory so every run
//! records exactly what it used.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use hyphc_core::eval::ExperimentConfig;
use hyphc_core::hyphc::HypHCConfig;
use hyphc_core::learn::{ForestConfig, RunConfig};
use hyphc_core::synth::SynthConfig;

use crate::CliError;

/// All tunables of every stage, kept as strings until a stage asks for a
/// typed view. Keys are fixed at construction; `set` on anything else is a
/// usage error.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    values: BTreeMap<&'static str, String>,
}

/// Key table: name, default. Kept in one place so defaults, the resolved
/// dump and the rejection of unknown keys can never drift apart.
const KEYS: &[(&str, &str)] = &[
    // influencer selection and reducers
    ("p", "20"),
    ("max_p", "20"),
    ("dim", "8"),
    ("se_neighbors", "10"),
    // ball optimizer
    ("tau", "0.25"),
    ("anneal", "0.3"),
    ("epochs", "400"),
    ("triplets_per_epoch", "0"),
    ("learning_rate", "0.3"),
    ("lr_anneal", "0.25"),
    ("rescale", "0.9"),
    ("eps_ball", "1e-5"),
    ("embed_seed", "42"),
    // classification runs
    ("test_fraction", "0.2"),
    ("smote_k", "5"),
    ("split_seed", "42"),
    ("trees", "200"),
    ("max_depth", "0"),
    ("min_leaf", "2"),
    ("forest_seed", "42"),
    // input paths; empty means the default file inside the run directory
    ("tweets", ""),
    ("profiles", ""),
    ("labels", ""),
    // synthetic corpus
    ("synth_seed", "42"),
    ("synth_horizon_seconds", "2592000"),
    ("synth_n_influencers", "20"),
    ("synth_tweets_per_influencer", "60"),
    ("synth_n_regular", "1250"),
    ("synth_n_collusive_groups", "26"),
    ("synth_group_size", "50"),
    ("synth_targets_per_group", "1"),
    ("synth_mu_organic", "8"),
    ("synth_sigma_organic", "0.8"),
    ("synth_mu_collusive", "4"),
    ("synth_sigma_collusive", "0.5"),
    ("synth_p_organic", "0.25"),
    ("synth_p_collusive", "0.9"),
    ("synth_suspended_fraction", "0.5"),
    ("synth_background_rate", "0.66"),
    ("synth_mainstream_influencers", "2"),
    ("synth_shared_targets", "2"),
    ("synth_activity_sigma", "0.2"),
    ("synth_camp_bias", "0.8"),
];

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            values: KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let slot = KEYS
            .iter()
            .find(|&&(k, _)| k == key)
            .ok_or_else(|| CliError::Usage(format!("unknown config key `{key}`")))?;
        self.values.insert(slot.0, value.trim().to_string());
        Ok(())
    }

    /// Apply a config file on top of the current values.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Apply repeated `--set key=value` flags.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        &self.values[key]
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key)
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, CliError> {
        self.parse(key)
    }

    pub fn get_i64(&self, key: &str) -> Result<i64, CliError> {
        self.parse(key)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, CliError> {
        self.parse(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Usage(format!("config key `{key}`: bad value `{}`", self.raw(key))))
    }

    /// Input path override, or `run_dir/<default_name>` when unset.
    pub fn input_path(&self, key: &str, run_dir: &Path, default_name: &str) -> std::path::PathBuf {
        let raw = self.raw(key);
        if raw.is_empty() {
            run_dir.join(default_name)
        } else {
            std::path::PathBuf::from(raw)
        }
    }

    /// The resolved document, one sorted `key = value` per line.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.values {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn synth_config(&self) -> Result<SynthConfig, CliError> {
        Ok(SynthConfig {
            seed: self.get_u64("synth_seed")?,
            horizon_seconds: self.get_i64("synth_horizon_seconds")?,
            n_influencers: self.get_usize("synth_n_influencers")?,
            tweets_per_influencer: self.get_f64("synth_tweets_per_influencer")?,
            n_regular: self.get_usize("synth_n_regular")?,
            n_collusive_groups: self.get_usize("synth_n_collusive_groups")?,
            group_size: self.get_usize("synth_group_size")?,
            targets_per_group: self.get_usize("synth_targets_per_group")?,
            mu_organic: self.get_f64("synth_mu_organic")?,
            sigma_organic: self.get_f64("synth_sigma_organic")?,
            mu_collusive: self.get_f64("synth_mu_collusive")?,
            sigma_collusive: self.get_f64("synth_sigma_collusive")?,
            p_organic: self.get_f64("synth_p_organic")?,
            p_collusive: self.get_f64("synth_p_collusive")?,
            suspended_fraction: self.get_f64("synth_suspended_fraction")?,
            background_rate: self.get_f64("synth_background_rate")?,
            mainstream_influencers: self.get_usize("synth_mainstream_influencers")?,
            shared_targets: self.get_usize("synth_shared_targets")?,
            activity_sigma: self.get_f64("synth_activity_sigma")?,
            camp_bias: self.get_f64("synth_camp_bias")?,
        })
    }

    pub fn hyphc_config(&self) -> Result<HypHCConfig, CliError> {
        Ok(HypHCConfig {
            dim: self.get_usize("dim")?,
            tau: self.get_f64("tau")?,
            anneal: self.get_f64("anneal")?,
            epochs: self.get_usize("epochs")?,
            triplets_per_epoch: self.get_usize("triplets_per_epoch")?,
            learning_rate: self.get_f64("learning_rate")?,
            lr_anneal: self.get_f64("lr_anneal")?,
            seed: self.get_u64("embed_seed")?,
            eps_ball: self.get_f64("eps_ball")?,
            rescale: self.get_f64("rescale")?,
        })
    }

    pub fn forest_config(&self) -> Result<ForestConfig, CliError> {
        let max_depth = self.get_usize("max_depth")?;
        Ok(ForestConfig {
            trees: self.get_usize("trees")?,
            max_depth: if max_depth == 0 { None } else { Some(max_depth) },
            min_leaf: self.get_usize("min_leaf")?,
            seed: self.get_u64("forest_seed")?,
        })
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            test_fraction: self.get_f64("test_fraction")?,
            smote_k: self.get_usize("smote_k")?,
            forest: self.forest_config()?,
            seed: self.get_u64("split_seed")?,
        })
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        Ok(ExperimentConfig {
            p: self.get_usize("p")?,
            reducer_dim: self.get_usize("dim")?,
            se_neighbors: self.get_usize("se_neighbors")?,
            hyphc: self.hyphc_config()?,
            similarity: Default::default(),
            run: self.run_config()?,
        })
    }
}
