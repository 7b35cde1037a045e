//! Experiment execution: dataset -> partition -> ring protocol -> files.
//!
//! Every replicate seed gets its own subdirectory with metrics, ledger,
//! timing, and model artifacts. Everything except `timings.csv` is
//! byte-deterministic for a fixed config; wall-clock readings are kept out
//! of the deterministic files on purpose.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::accountant::NoiseLedger;
use crate::data::partition::{partition_iid, partition_two_class, PartitionMode, PartitionPlan};
use crate::data::synthetic::generate_blobs;
use crate::data::{idx, isolet, har, Dataset};
use crate::error::{Error, Result};
use crate::experiment::config::{Cadence, DatasetSpec, ExperimentConfig};
use crate::experiment::report::noise_schedule;
use crate::federation::{
    run_federation_encoded, Client, EncodedClient, Evaluation, Evaluator, RunOptions,
};
use crate::hd::{ClassPrototypes, ProjectionBasis};
use crate::rng::derive_subseed;

/// One evaluated round of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub round: u64,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub cumulative_variance: f64,
    pub required_variance: f64,
    pub blackbox_variance: f64,
    /// Measured, not deterministic; written to timings.csv only.
    pub wall_clock_seconds: f64,
}

impl MetricsRecord {
    pub fn validate(&self) -> Result<()> {
        let ok_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !ok_unit(self.accuracy) || !self.per_class_accuracy.iter().all(|&v| ok_unit(v)) {
            return Err(Error::Invariant(format!(
                "round {}: accuracy outside [0,1]",
                self.round
            )));
        }
        if self.cumulative_variance < 0.0
            || self.required_variance < 0.0
            || self.blackbox_variance < 0.0
        {
            return Err(Error::Invariant(format!(
                "round {}: negative variance in metrics",
                self.round
            )));
        }
        if self.blackbox_variance < self.required_variance {
            return Err(Error::Invariant(format!(
                "round {}: blackbox variance {} below required {}",
                self.round, self.blackbox_variance, self.required_variance
            )));
        }
        Ok(())
    }
}

/// In-memory result of one seed's run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub basis_seed: u64,
    pub metrics: Vec<MetricsRecord>,
    pub ledger: NoiseLedger,
    pub model: ClassPrototypes,
    pub final_evaluation: Evaluation,
}

impl SeedRun {
    pub fn final_accuracy(&self) -> f64 {
        self.final_evaluation.accuracy
    }
}

/// Result of a full experiment (all replicate seeds), with file locations.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub final_accuracies: Vec<f64>,
    pub mean_final_accuracy: f64,
    pub stddev_final_accuracy: f64,
    /// Final cumulative injected variance (0 when noise is disabled);
    /// identical across seeds because the schedule is analytic.
    pub final_cumulative_variance: f64,
    pub seed_dirs: Vec<PathBuf>,
}

/// Load (or generate) and validate the dataset named by the config,
/// applying `train_limit`/`test_limit` and the configured normalization.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut dataset = match cfg.dataset_spec()? {
        DatasetSpec::Mnist { path } => idx::load_mnist(&path)?,
        DatasetSpec::Isolet { path } => isolet::load_isolet(&path)?,
        DatasetSpec::Har { path } => har::load_har(&path)?,
        DatasetSpec::Synthetic(spec) => generate_blobs(&spec)?,
    };
    dataset.truncate(cfg.train_limit(), cfg.test_limit())?;
    dataset.normalize(cfg.normalization()?);
    dataset.validate()?;
    Ok(dataset)
}

/// Build the partition plan for one replicate seed.
pub fn build_partition(cfg: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<PartitionPlan> {
    let partition_seed = derive_subseed(seed, "partition", &[]);
    match cfg.partition_mode()? {
        PartitionMode::Iid => partition_iid(
            dataset.train.len(),
            cfg.clients(),
            cfg.samples_per_client(),
            partition_seed,
        ),
        PartitionMode::TwoClassNonIid => {
            let labels: Vec<usize> = dataset.train.iter().map(|s| s.label).collect();
            partition_two_class(
                &labels,
                dataset.class_count,
                cfg.clients(),
                cfg.samples_per_client(),
                partition_seed,
            )
        }
    }
}

/// Execute one replicate seed entirely in memory.
pub fn run_seed(cfg: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<SeedRun> {
    let plan = build_partition(cfg, dataset, seed)?;
    let clients: Vec<Client> = plan.apply(dataset)?;
    let basis_seed = derive_subseed(seed, "basis", &[]);
    let basis = ProjectionBasis::generate(basis_seed, dataset.feature_dim, cfg.dim());
    let encoded: Vec<EncodedClient> = clients
        .iter()
        .map(|c| EncodedClient::from_samples(c, &basis, dataset.class_count))
        .collect::<Result<_>>()?;
    let evaluator = Evaluator::new(&dataset.test, &basis, dataset.class_count)?;

    let privacy = if cfg.noise_enabled() {
        Some(cfg.privacy_params()?)
    } else {
        None
    };
    let schedule = privacy
        .as_ref()
        .map(|p| noise_schedule(p, cfg.clients() as u64, cfg.rounds()));
    let options = RunOptions {
        rounds: cfg.rounds(),
        retrain_passes: cfg.retrain_passes(),
        privacy,
        seed,
    };
    let cadence = cfg.evaluation()?;
    let clients_per_round = cfg.clients() as u64;

    let mut metrics: Vec<MetricsRecord> = Vec::new();
    let mut final_evaluation: Option<Evaluation> = None;
    let mut round_start = Instant::now();
    let run = run_federation_encoded(
        &encoded,
        dataset.class_count,
        cfg.dim(),
        &options,
        |round, state| {
            let due = cadence == Cadence::PerRound || round == cfg.rounds();
            if due {
                let eval = evaluator.evaluate(state)?;
                let (cumulative, required, blackbox) = match &schedule {
                    Some(rows) => {
                        let row = &rows[(round * clients_per_round - 1) as usize];
                        (
                            row.cumulative_variance,
                            row.required_variance,
                            row.blackbox_variance,
                        )
                    }
                    None => (0.0, 0.0, 0.0),
                };
                let record = MetricsRecord {
                    round,
                    accuracy: eval.accuracy,
                    per_class_accuracy: per_class_accuracy(&eval),
                    cumulative_variance: cumulative,
                    required_variance: required,
                    blackbox_variance: blackbox,
                    wall_clock_seconds: round_start.elapsed().as_secs_f64(),
                };
                record.validate()?;
                metrics.push(record);
                if round == cfg.rounds() {
                    final_evaluation = Some(eval);
                }
            }
            round_start = Instant::now();
            Ok(())
        },
    )?;

    Ok(SeedRun {
        seed,
        basis_seed,
        metrics,
        ledger: run.ledger,
        model: run.model,
        final_evaluation: final_evaluation.expect("final round always evaluates"),
    })
}

fn per_class_accuracy(eval: &Evaluation) -> Vec<f64> {
    eval.confusion
        .iter()
        .enumerate()
        .map(|(s, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                0.0
            } else {
                row[s] as f64 / total as f64
            }
        })
        .collect()
}

#[derive(Serialize)]
struct ModelArtifact<'a> {
    feature_dim: usize,
    dim: usize,
    class_count: usize,
    basis_seed: u64,
    prototypes: &'a ClassPrototypes,
}

#[derive(Serialize)]
struct ResolvedSection<'a> {
    dataset: &'a str,
    feature_dim: usize,
    class_count: usize,
    train_samples: usize,
    test_samples: usize,
    normalization: &'a str,
    total_steps: u64,
    noise_enabled: bool,
    seeds: &'a [u64],
    package_version: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: toml::Value,
    resolved: ResolvedSection<'a>,
}

/// Run all replicate seeds of `cfg` and write the output tree:
///
/// ```text
/// output_dir/
///   manifest.toml
///   summary.csv
///   seed-<s>/metrics.csv  timings.csv  ledger.csv  model.json
/// ```
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let seeds = cfg.seeds()?;
    let output_dir = cfg.output_dir().to_path_buf();
    fs::create_dir_all(&output_dir)?;

    let mut seed_dirs = Vec::new();
    let mut final_accuracies = Vec::new();
    let mut final_cumulative = 0.0;
    for &seed in &seeds {
        let run = run_seed(cfg, &dataset, seed)?;
        let dir = output_dir.join(format!("seed-{seed}"));
        fs::create_dir_all(&dir)?;
        write_metrics_csv(&run.metrics, &dir.join("metrics.csv"))?;
        write_timings_csv(&run.metrics, &dir.join("timings.csv"))?;
        let mut ledger_file = fs::File::create(dir.join("ledger.csv"))?;
        run.ledger.write_csv(&mut ledger_file)?;
        write_model_json(&run, &dataset, &dir.join("model.json"))?;
        final_cumulative = run.ledger.total_injected();
        final_accuracies.push(run.final_accuracy());
        seed_dirs.push(dir);
    }

    let (mean, stddev) = mean_stddev(&final_accuracies);
    write_summary_csv(&seeds, &final_accuracies, mean, stddev, &output_dir.join("summary.csv"))?;
    write_manifest(cfg, &dataset, &seeds, &output_dir.join("manifest.toml"))?;

    Ok(ExperimentOutcome {
        output_dir,
        seeds,
        final_accuracies,
        mean_final_accuracy: mean,
        stddev_final_accuracy: stddev,
        final_cumulative_variance: final_cumulative,
        seed_dirs,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_metrics_csv(metrics: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = fs::File::create(path)?;
    writeln!(
        w,
        "round,accuracy,per_class_accuracy,cumulative_variance,required_variance,blackbox_variance"
    )?;
    for m in metrics {
        let per_class = m
            .per_class_accuracy
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            m.round,
            m.accuracy,
            per_class,
            m.cumulative_variance,
            m.required_variance,
            m.blackbox_variance
        )?;
    }
    Ok(())
}

fn write_timings_csv(metrics: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = fs::File::create(path)?;
    writeln!(w, "round,wall_clock_seconds")?;
    for m in metrics {
        writeln!(w, "{},{:.6}", m.round, m.wall_clock_seconds)?;
    }
    Ok(())
}

fn write_model_json(run: &SeedRun, dataset: &Dataset, path: &Path) -> Result<()> {
    let artifact = ModelArtifact {
        feature_dim: dataset.feature_dim,
        dim: run.model.dim(),
        class_count: run.model.class_count(),
        basis_seed: run.basis_seed,
        prototypes: &run.model,
    };
    let mut text = serde_json::to_string_pretty(&artifact)
        .map_err(|e| Error::Invariant(format!("model serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_summary_csv(
    seeds: &[u64],
    finals: &[f64],
    mean: f64,
    stddev: f64,
    path: &Path,
) -> Result<()> {
    let mut w = fs::File::create(path)?;
    writeln!(w, "seed,final_accuracy")?;
    for (s, a) in seeds.iter().zip(finals) {
        writeln!(w, "{s},{a}")?;
    }
    writeln!(w, "mean,{mean}")?;
    writeln!(w, "stddev,{stddev}")?;
    Ok(())
}

fn write_manifest(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    seeds: &[u64],
    path: &Path,
) -> Result<()> {
    let config: toml::Value = toml::from_str(&cfg.echo_toml())
        .map_err(|e| Error::Invariant(format!("config echo failed to parse: {e}")))?;
    let manifest = Manifest {
        config,
        resolved: ResolvedSection {
            dataset: &dataset.name,
            feature_dim: dataset.feature_dim,
            class_count: dataset.class_count,
            train_samples: dataset.train.len(),
            test_samples: dataset.test.len(),
            normalization: cfg.normalization()?.name(),
            total_steps: cfg.clients() as u64 * cfg.rounds(),
            noise_enabled: cfg.noise_enabled(),
            seeds,
            package_version: env!("CARGO_PKG_VERSION"),
        },
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Invariant(format!("manifest serialization failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}
