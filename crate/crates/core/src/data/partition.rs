//! Splitting a training set across ring clients.
//!
//! Both strategies draw without replacement, assign every client exactly
//! `samples_per_client` samples, and are fully determined by their seed.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::Client;
use crate::rng::derive_stream;

/// How training samples are spread over the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Uniform shuffle: every client sees every class.
    Iid,
    /// Label-skewed: classes are grouped in consecutive pairs and each
    /// client draws only from one pair (assigned round-robin).
    TwoClassNonIid,
}

/// Per-client sample indices into the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub mode: PartitionMode,
    pub assignments: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn clients(&self) -> usize {
        self.assignments.len()
    }

    /// Materialize the plan against the dataset it was built for.
    pub fn apply(&self, dataset: &Dataset) -> Result<Vec<Client>> {
        self.assignments
            .iter()
            .map(|idxs| {
                idxs.iter()
                    .map(|&i| {
                        dataset.train.get(i).cloned().ok_or_else(|| {
                            Error::Partition(format!(
                                "plan references sample {i} but the training split has {}",
                                dataset.train.len()
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Client::new)
            })
            .collect()
    }

    /// Write the plan as CSV: one row per assigned sample with its label.
    pub fn write_csv<W: Write>(&self, labels: &[usize], mut w: W) -> Result<()> {
        writeln!(w, "client,slot,sample_index,label")?;
        for (c, idxs) in self.assignments.iter().enumerate() {
            for (slot, &i) in idxs.iter().enumerate() {
                let label = labels.get(i).ok_or_else(|| {
                    Error::Partition(format!("plan references sample {i} beyond label table"))
                })?;
                writeln!(w, "{},{},{},{}", c + 1, slot, i, label)?;
            }
        }
        Ok(())
    }
}

/// Group classes into consecutive pairs; an odd class count leaves the last
/// class alone in its group.
pub fn class_groups(class_count: usize) -> Vec<Vec<usize>> {
    (0..class_count)
        .step_by(2)
        .map(|c| {
            if c + 1 < class_count {
                vec![c, c + 1]
            } else {
                vec![c]
            }
        })
        .collect()
}

fn check_args(clients: usize, samples_per_client: usize) -> Result<()> {
    if clients == 0 {
        return Err(Error::Partition("at least one client is required".into()));
    }
    if samples_per_client == 0 {
        return Err(Error::Partition("samples_per_client must be positive".into()));
    }
    Ok(())
}

/// Uniform split: shuffle all indices with the seed, hand out consecutive
/// blocks of `samples_per_client`.
pub fn partition_iid(
    sample_count: usize,
    clients: usize,
    samples_per_client: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    check_args(clients, samples_per_client)?;
    let needed = clients * samples_per_client;
    if needed > sample_count {
        return Err(Error::Partition(format!(
            "{clients} clients x {samples_per_client} samples need {needed}, only {sample_count} available"
        )));
    }
    let mut indices: Vec<usize> = (0..sample_count).collect();
    let mut rng = derive_stream(seed, "partition-iid", &[]);
    indices.shuffle(&mut rng);
    let assignments = (0..clients)
        .map(|c| indices[c * samples_per_client..(c + 1) * samples_per_client].to_vec())
        .collect();
    Ok(PartitionPlan {
        mode: PartitionMode::Iid,
        assignments,
    })
}

/// Label-skewed split: client k draws `samples_per_client` samples, without
/// replacement, from the class pair `class_groups(class_count)[(k-1) % G]`.
/// Each group's pool is shuffled once with a group-specific stream and
/// consumed in client order; running a pool dry is an error.
pub fn partition_two_class(
    labels: &[usize],
    class_count: usize,
    clients: usize,
    samples_per_client: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    check_args(clients, samples_per_client)?;
    if class_count < 2 {
        return Err(Error::Partition(
            "label-skewed partitioning needs at least 2 classes".into(),
        ));
    }
    for (i, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::LabelOutOfRange {
                sample_index: i,
                label: l,
                class_count,
            });
        }
    }
    let groups = class_groups(class_count);
    let mut pools: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            (0..labels.len())
                .filter(|&i| g.contains(&labels[i]))
                .collect()
        })
        .collect();
    for (g, pool) in pools.iter_mut().enumerate() {
        let mut rng = derive_stream(seed, "partition-two-class", &[g as u64]);
        pool.shuffle(&mut rng);
    }
    let mut cursors = vec![0usize; groups.len()];
    let mut assignments = Vec::with_capacity(clients);
    for c in 0..clients {
        let g = c % groups.len();
        let start = cursors[g];
        let end = start + samples_per_client;
        if end > pools[g].len() {
            return Err(Error::Partition(format!(
                "client {} needs {samples_per_client} samples from classes {:?} but only {} remain \
                 (group pool holds {})",
                c + 1,
                groups[g],
                pools[g].len() - start,
                pools[g].len()
            )));
        }
        assignments.push(pools[g][start..end].to_vec());
        cursors[g] = end;
    }
    Ok(PartitionPlan {
        mode: PartitionMode::TwoClassNonIid,
        assignments,
    })
}
