//! Parameter sweeps: one experiment bundle per axis value plus a summary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::runner::run_experiment;
use crate::rng::derive_subseed;

/// Config fields a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Delta0,
    Dim,
    Clients,
    SamplesPerClient,
    Rounds,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "epsilon" => Ok(SweepAxis::Epsilon),
            "delta0" => Ok(SweepAxis::Delta0),
            "dim" => Ok(SweepAxis::Dim),
            "clients" => Ok(SweepAxis::Clients),
            "samples_per_client" => Ok(SweepAxis::SamplesPerClient),
            "rounds" => Ok(SweepAxis::Rounds),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected epsilon, delta0, dim, clients, \
                 samples_per_client, or rounds)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Delta0 => "delta0",
            SweepAxis::Dim => "dim",
            SweepAxis::Clients => "clients",
            SweepAxis::SamplesPerClient => "samples_per_client",
            SweepAxis::Rounds => "rounds",
        }
    }

    fn ordinal(&self) -> u64 {
        match self {
            SweepAxis::Epsilon => 0,
            SweepAxis::Delta0 => 1,
            SweepAxis::Dim => 2,
            SweepAxis::Clients => 3,
            SweepAxis::SamplesPerClient => 4,
            SweepAxis::Rounds => 5,
        }
    }

    /// Parse `raw` and set the field on `cfg`.
    pub fn apply(&self, cfg: &mut ExperimentConfig, raw: &str) -> Result<()> {
        let bad = |kind: &str| {
            Error::Config(format!(
                "sweep value {raw:?} is not a valid {kind} for axis {}",
                self.name()
            ))
        };
        match self {
            SweepAxis::Epsilon => cfg.set_epsilon(raw.parse().map_err(|_| bad("number"))?),
            SweepAxis::Delta0 => cfg.set_delta0(raw.parse().map_err(|_| bad("number"))?),
            SweepAxis::Dim => cfg.set_dim(raw.parse().map_err(|_| bad("integer"))?),
            SweepAxis::Clients => cfg.set_clients(raw.parse().map_err(|_| bad("integer"))?),
            SweepAxis::SamplesPerClient => {
                cfg.set_samples_per_client(raw.parse().map_err(|_| bad("integer"))?)
            }
            SweepAxis::Rounds => cfg.set_rounds(raw.parse().map_err(|_| bad("integer"))?),
        }
        cfg.validate()
    }
}

/// Summary line for one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub mean_final_accuracy: f64,
    pub stddev_final_accuracy: f64,
    pub final_cumulative_variance: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub output_dir: PathBuf,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub bundle_dirs: Vec<PathBuf>,
}

fn dir_label(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Run one experiment bundle per value under
/// `<output_dir>/<axis>-<value>/`, then write `sweep-summary.csv`.
///
/// Each value's runs use replicate seeds derived from the base seeds, the
/// axis, and the value's position, so no two bundles share RNG state.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    {
        let mut labels: Vec<String> = values.iter().map(|v| dir_label(v)).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != values.len() {
            return Err(Error::Config("sweep values collide after sanitizing".into()));
        }
    }
    let root = base.output_dir().to_path_buf();
    fs::create_dir_all(&root)?;
    let base_seeds = base.seeds()?;

    let mut rows = Vec::new();
    let mut bundle_dirs = Vec::new();
    for (i, raw) in values.iter().enumerate() {
        let mut cfg = base.clone();
        axis.apply(&mut cfg, raw)?;
        // masked to the i64 range so the seeds stay representable in the
        // TOML manifests that echo them
        let sub_seeds: Vec<u64> = base_seeds
            .iter()
            .map(|&s| derive_subseed(s, "sweep", &[axis.ordinal(), i as u64]) & (i64::MAX as u64))
            .collect();
        cfg.set_seeds(sub_seeds);
        let bundle_dir = root.join(format!("{}-{}", axis.name(), dir_label(raw)));
        cfg.set_output_dir(bundle_dir.clone());
        let outcome = run_experiment(&cfg)?;
        rows.push(SweepRow {
            value: raw.clone(),
            mean_final_accuracy: outcome.mean_final_accuracy,
            stddev_final_accuracy: outcome.stddev_final_accuracy,
            final_cumulative_variance: outcome.final_cumulative_variance,
        });
        bundle_dirs.push(bundle_dir);
    }

    let mut w = fs::File::create(root.join("sweep-summary.csv"))?;
    writeln!(
        w,
        "axis,value,final_accuracy_mean,final_accuracy_stddev,final_cumulative_variance"
    )?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{:.16e}",
            axis.name(),
            r.value,
            r.mean_final_accuracy,
            r.stddev_final_accuracy,
            r.final_cumulative_variance
        )?;
    }

    Ok(SweepOutcome {
        output_dir: root,
        axis,
        rows,
        bundle_dirs,
    })
}
