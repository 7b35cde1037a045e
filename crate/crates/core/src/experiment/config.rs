//! Experiment configuration: TOML with explicit keys.
//!
//! Unknown keys are hard errors; a typo in `epsilon` or `delta0` must never
//! silently fall back to a default. The parsed file is kept verbatim so the
//! run manifest can echo exactly what was resolved.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accountant::PrivacyParams;
use crate::data::partition::PartitionMode;
use crate::data::synthetic::BlobSpec;
use crate::data::Normalization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// One of: mnist, isolet, har, synthetic.
    pub kind: String,
    /// Directory holding the distribution files (file-backed kinds only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_limit: Option<usize>,
    /// Per-sample feature normalization: "unit" or "none". Defaults to
    /// "unit" for the file-backed kinds and "none" for synthetic blobs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    // synthetic-only knobs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_per_class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_per_class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    /// One of: iid, two_class_non_iid.
    pub mode: String,
    /// Ring size K.
    pub clients: usize,
    /// Samples each client holds (N).
    pub samples_per_client: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Hypervector dimensionality D.
    pub dim: usize,
    /// Corrective passes per visit in rounds >= 2.
    #[serde(default = "default_retrain_passes")]
    pub retrain_passes: u32,
}

fn default_retrain_passes() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    pub epsilon: f64,
    pub delta0: f64,
    /// Disabling noise turns the run into a non-private diagnostic.
    #[serde(default = "default_noise")]
    pub noise: bool,
}

fn default_noise() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Ring traversals R.
    pub rounds: u64,
    /// Single master seed; exactly one of `seed`/`seeds` must be present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Replicate master seeds; triggers per-seed runs plus a summary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// One of: per_round, final.
    #[serde(default = "default_evaluation")]
    pub evaluation: String,
    pub output_dir: PathBuf,
}

fn default_evaluation() -> String {
    "per_round".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: DatasetSection,
    pub partition: PartitionSection,
    pub model: ModelSection,
    pub privacy: PrivacySection,
    pub run: RunSection,
}

/// Which dataset to materialize, resolved from the dataset section.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Mnist { path: PathBuf },
    Isolet { path: PathBuf },
    Har { path: PathBuf },
    Synthetic(BlobSpec),
}

/// When test-set evaluation happens during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    PerRound,
    Final,
}

/// A validated configuration. Field access goes through methods so every
/// consumer sees the same resolution rules.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    file: ConfigFile,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        let cfg = ExperimentConfig { file };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset_spec()?;
        self.normalization()?;
        self.partition_mode()?;
        self.evaluation()?;
        self.seeds()?;
        // epsilon/delta0 must be coherent even for noise-off runs; they are
        // echoed into manifests and drive the analytic schedule reports.
        self.privacy_params()?;
        let f = &self.file;
        if f.partition.clients == 0 {
            return Err(Error::Config("partition.clients must be at least 1".into()));
        }
        if f.partition.samples_per_client == 0 {
            return Err(Error::Config(
                "partition.samples_per_client must be at least 1".into(),
            ));
        }
        if f.model.dim == 0 {
            return Err(Error::Config("model.dim must be at least 1".into()));
        }
        if f.model.retrain_passes == 0 {
            return Err(Error::Config("model.retrain_passes must be at least 1".into()));
        }
        if f.run.rounds == 0 {
            return Err(Error::Config("run.rounds must be at least 1".into()));
        }
        if f.run.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("run.output_dir must not be empty".into()));
        }
        Ok(())
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let d = &self.file.dataset;
        let need_path = || {
            d.path.clone().ok_or_else(|| {
                Error::Config(format!("dataset.path is required for kind {:?}", d.kind))
            })
        };
        let synthetic_keys_set = d.classes.is_some()
            || d.features.is_some()
            || d.train_per_class.is_some()
            || d.test_per_class.is_some()
            || d.cluster_std.is_some()
            || d.spread.is_some()
            || d.data_seed.is_some();
        match d.kind.as_str() {
            "mnist" | "isolet" | "har" => {
                if synthetic_keys_set {
                    return Err(Error::Config(format!(
                        "dataset kind {:?} does not accept synthetic generator keys",
                        d.kind
                    )));
                }
                let path = need_path()?;
                Ok(match d.kind.as_str() {
                    "mnist" => DatasetSpec::Mnist { path },
                    "isolet" => DatasetSpec::Isolet { path },
                    _ => DatasetSpec::Har { path },
                })
            }
            "synthetic" => {
                if d.path.is_some() {
                    return Err(Error::Config(
                        "dataset.path is not accepted for synthetic data".into(),
                    ));
                }
                let miss =
                    |k: &str| Error::Config(format!("dataset.{k} is required for synthetic data"));
                Ok(DatasetSpec::Synthetic(BlobSpec {
                    classes: d.classes.ok_or_else(|| miss("classes"))?,
                    feature_dim: d.features.ok_or_else(|| miss("features"))?,
                    train_per_class: d.train_per_class.ok_or_else(|| miss("train_per_class"))?,
                    test_per_class: d.test_per_class.ok_or_else(|| miss("test_per_class"))?,
                    cluster_std: d.cluster_std.unwrap_or(0.5),
                    spread: d.spread.unwrap_or(2.0),
                    seed: d.data_seed.unwrap_or(1),
                }))
            }
            other => Err(Error::Config(format!(
                "unknown dataset kind {other:?} (expected mnist, isolet, har, or synthetic)"
            ))),
        }
    }

    pub fn train_limit(&self) -> Option<usize> {
        self.file.dataset.train_limit
    }

    pub fn test_limit(&self) -> Option<usize> {
        self.file.dataset.test_limit
    }

    /// Effective feature normalization. The file-backed datasets default to
    /// unit-norm samples because their raw feature norms sit far above 1,
    /// where the cosine projection encoding decorrelates (see
    /// [`crate::data::Normalization`]); synthetic blobs default to "none" so
    /// configured cluster geometry is preserved.
    pub fn normalization(&self) -> Result<Normalization> {
        match &self.file.dataset.normalization {
            Some(raw) => Normalization::parse(raw),
            None => Ok(match self.file.dataset.kind.as_str() {
                "synthetic" => Normalization::None,
                _ => Normalization::UnitL2,
            }),
        }
    }

    pub fn partition_mode(&self) -> Result<PartitionMode> {
        match self.file.partition.mode.as_str() {
            "iid" => Ok(PartitionMode::Iid),
            "two_class_non_iid" => Ok(PartitionMode::TwoClassNonIid),
            other => Err(Error::Config(format!(
                "unknown partition mode {other:?} (expected iid or two_class_non_iid)"
            ))),
        }
    }

    pub fn clients(&self) -> usize {
        self.file.partition.clients
    }

    pub fn samples_per_client(&self) -> usize {
        self.file.partition.samples_per_client
    }

    pub fn dim(&self) -> usize {
        self.file.model.dim
    }

    pub fn retrain_passes(&self) -> u32 {
        self.file.model.retrain_passes
    }

    pub fn epsilon(&self) -> f64 {
        self.file.privacy.epsilon
    }

    pub fn delta0(&self) -> f64 {
        self.file.privacy.delta0
    }

    pub fn noise_enabled(&self) -> bool {
        self.file.privacy.noise
    }

    pub fn rounds(&self) -> u64 {
        self.file.run.rounds
    }

    /// Replicate master seeds, resolved from `seed` xor `seeds`.
    pub fn seeds(&self) -> Result<Vec<u64>> {
        match (&self.file.run.seed, &self.file.run.seeds) {
            (Some(_), Some(_)) => Err(Error::Config(
                "run.seed and run.seeds are mutually exclusive".into(),
            )),
            (Some(s), None) => Ok(vec![*s]),
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(Error::Config("run.seeds must not be empty".into()));
                }
                let mut sorted = list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != list.len() {
                    return Err(Error::Config("run.seeds contains duplicates".into()));
                }
                Ok(list.clone())
            }
            (None, None) => Err(Error::Config(
                "one of run.seed or run.seeds is required".into(),
            )),
        }
    }

    pub fn evaluation(&self) -> Result<Cadence> {
        match self.file.run.evaluation.as_str() {
            "per_round" => Ok(Cadence::PerRound),
            "final" => Ok(Cadence::Final),
            other => Err(Error::Config(format!(
                "unknown evaluation cadence {other:?} (expected per_round or final)"
            ))),
        }
    }

    pub fn output_dir(&self) -> &Path {
        &self.file.run.output_dir
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.file.run.output_dir = dir;
    }

    /// Privacy parameters for this config's D and N.
    pub fn privacy_params(&self) -> Result<PrivacyParams> {
        PrivacyParams::new(
            self.file.privacy.epsilon,
            self.file.privacy.delta0,
            self.file.model.dim,
            self.file.partition.samples_per_client,
        )
    }

    pub fn set_epsilon(&mut self, v: f64) {
        self.file.privacy.epsilon = v;
    }

    pub fn set_delta0(&mut self, v: f64) {
        self.file.privacy.delta0 = v;
    }

    pub fn set_dim(&mut self, v: usize) {
        self.file.model.dim = v;
    }

    pub fn set_clients(&mut self, v: usize) {
        self.file.partition.clients = v;
    }

    pub fn set_samples_per_client(&mut self, v: usize) {
        self.file.partition.samples_per_client = v;
    }

    pub fn set_rounds(&mut self, v: u64) {
        self.file.run.rounds = v;
    }

    pub fn set_seeds(&mut self, seeds: Vec<u64>) {
        if seeds.len() == 1 {
            self.file.run.seed = Some(seeds[0]);
            self.file.run.seeds = None;
        } else {
            self.file.run.seed = None;
            self.file.run.seeds = Some(seeds);
        }
    }

    /// The resolved config as TOML, for the run manifest.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(&self.file).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BASE: &str = r#"
[dataset]
kind = "synthetic"
classes = 4
features = 6
train_per_class = 50
test_per_class = 10
cluster_std = 0.4
spread = 2.0
data_seed = 9

[partition]
mode = "iid"
clients = 4
samples_per_client = 40

[model]
dim = 64

[privacy]
epsilon = 0.4
delta0 = 1e-3

[run]
rounds = 3
seed = 42
output_dir = "out"
"#;

    #[test]
    fn parses_and_resolves_defaults() {
        let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.retrain_passes(), 1);
        assert!(cfg.noise_enabled());
        assert_eq!(cfg.evaluation().unwrap(), Cadence::PerRound);
        assert_eq!(cfg.seeds().unwrap(), vec![42]);
        assert_eq!(cfg.clients(), 4);
        assert!(matches!(
            cfg.dataset_spec().unwrap(),
            DatasetSpec::Synthetic(_)
        ));
        let p = cfg.privacy_params().unwrap();
        assert_eq!(p.dim, 64);
        assert_eq!(p.aggregated_samples, 40);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let bad = BASE.replace("epsilon = 0.4", "epsilon = 0.4\nepsilonn = 0.5");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("epsilonn"), "{err}");
        let bad = format!("{BASE}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn seed_and_seeds_are_mutually_exclusive() {
        let bad = BASE.replace("seed = 42", "seed = 42\nseeds = [1, 2]");
        assert!(ExperimentConfig::from_toml_str(&bad)
            .unwrap_err()
            .to_string()
            .contains("mutually exclusive"));
        let neither = BASE.replace("seed = 42\n", "");
        assert!(ExperimentConfig::from_toml_str(&neither).is_err());
        let multi = BASE.replace("seed = 42", "seeds = [1, 2, 3]");
        let cfg = ExperimentConfig::from_toml_str(&multi).unwrap();
        assert_eq!(cfg.seeds().unwrap(), vec![1, 2, 3]);
        let dup = BASE.replace("seed = 42", "seeds = [1, 1]");
        assert!(ExperimentConfig::from_toml_str(&dup).is_err());
    }

    #[test]
    fn privacy_bounds_are_enforced_even_with_noise_off() {
        let bad = BASE.replace("epsilon = 0.4", "epsilon = -0.4\nnoise = false");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let ok = BASE.replace("delta0 = 1e-3", "delta0 = 1e-3\nnoise = false");
        assert!(!ExperimentConfig::from_toml_str(&ok).unwrap().noise_enabled());
    }

    #[test]
    fn dataset_kind_key_discipline() {
        let bad = BASE.replace("kind = \"synthetic\"", "kind = \"mnist\"");
        // mnist with synthetic keys and no path
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad2 = BASE.replace("data_seed = 9", "data_seed = 9\npath = \"x\"");
        assert!(ExperimentConfig::from_toml_str(&bad2)
            .unwrap_err()
            .to_string()
            .contains("path"));
        let bad3 = BASE.replace("kind = \"synthetic\"", "kind = \"tabular\"");
        assert!(ExperimentConfig::from_toml_str(&bad3)
            .unwrap_err()
            .to_string()
            .contains("tabular"));
    }

    #[test]
    fn normalization_defaults_follow_dataset_kind() {
        let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.normalization().unwrap(), Normalization::None);
        let overridden = BASE.replace("kind = \"synthetic\"", "kind = \"synthetic\"\nnormalization = \"unit\"");
        let cfg = ExperimentConfig::from_toml_str(&overridden).unwrap();
        assert_eq!(cfg.normalization().unwrap(), Normalization::UnitL2);
        let bad = BASE.replace("kind = \"synthetic\"", "kind = \"synthetic\"\nnormalization = \"l2\"");
        assert!(ExperimentConfig::from_toml_str(&bad)
            .unwrap_err()
            .to_string()
            .contains("l2"));
    }

    #[test]
    fn file_backed_kinds_default_to_unit_normalization() {
        let mnist = BASE
            .replace(
                "kind = \"synthetic\"",
                "kind = \"mnist\"\npath = \"data/mnist\"",
            )
            .replace("classes = 4\n", "")
            .replace("features = 6\n", "")
            .replace("train_per_class = 50\n", "")
            .replace("test_per_class = 10\n", "")
            .replace("cluster_std = 0.4\n", "")
            .replace("spread = 2.0\n", "")
            .replace("data_seed = 9\n", "");
        let cfg = ExperimentConfig::from_toml_str(&mnist).unwrap();
        assert_eq!(cfg.normalization().unwrap(), Normalization::UnitL2);
    }

    #[test]
    fn invalid_cadence_and_zeroes_rejected() {
        let bad = BASE.replace("rounds = 3", "rounds = 3\nevaluation = \"hourly\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("rounds = 3", "rounds = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("dim = 64", "dim = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("clients = 4", "clients = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        let echoed = cfg.echo_toml();
        let again = ExperimentConfig::from_toml_str(&echoed).unwrap();
        assert_eq!(again.echo_toml(), echoed);
    }
}
