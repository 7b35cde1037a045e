//! Dataset loading, generation, and partitioning.

pub mod har;
pub mod idx;
pub mod isolet;
pub mod partition;
pub mod synthetic;

use crate::error::{Error, Result};
use crate::hd::Sample;

/// Per-sample feature normalization applied after a loader's base
/// preprocessing.
///
/// The cosine projection encoding reads features as angles: component d of an
/// encoded sample is cos(features . basis_d), and basis entries are standard
/// normal, so the projection has standard deviation equal to the feature
/// vector's Euclidean norm. Norms far above 1 wrap the cosine many times and
/// the encodings of any two samples decorrelate to noise. Scaling each sample
/// to unit norm keeps projections at unit variance, where nearby samples stay
/// similar after encoding; it is the default for the file-backed datasets
/// (raw MNIST pixel vectors have norms near 10, for example). Generated blob
/// data keeps its geometry instead, since cluster separation there is
/// configured directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Leave features exactly as the loader produced them.
    None,
    /// Scale each sample to unit Euclidean norm; all-zero samples are kept
    /// as-is.
    UnitL2,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::UnitL2 => "unit",
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        match raw {
            "none" => Ok(Normalization::None),
            "unit" => Ok(Normalization::UnitL2),
            other => Err(Error::Config(format!(
                "unknown normalization {other:?}; expected \"unit\" or \"none\""
            ))),
        }
    }
}

/// An in-memory train/test split with fixed feature dimensionality and a
/// known label alphabet 0..class_count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub feature_dim: usize,
    pub class_count: usize,
}

impl Dataset {
    /// Check feature dimensions and label ranges across both splits.
    pub fn validate(&self) -> Result<()> {
        for (split, samples) in [("train", &self.train), ("test", &self.test)] {
            for (i, s) in samples.iter().enumerate() {
                if s.features.len() != self.feature_dim {
                    return Err(Error::Load {
                        path: format!("{} ({split})", self.name),
                        detail: format!(
                            "sample {i} has {} features, expected {}",
                            s.features.len(),
                            self.feature_dim
                        ),
                    });
                }
                if s.label >= self.class_count {
                    return Err(Error::LabelOutOfRange {
                        sample_index: i,
                        label: s.label,
                        class_count: self.class_count,
                    });
                }
            }
        }
        Ok(())
    }

    /// Keep only the first `train_limit`/`test_limit` samples of each split.
    /// `None` keeps everything; a limit larger than the split is an error so
    /// experiments never silently run on less data than configured.
    pub fn truncate(&mut self, train_limit: Option<usize>, test_limit: Option<usize>) -> Result<()> {
        for (split, samples, limit) in [
            ("train", &mut self.train, train_limit),
            ("test", &mut self.test, test_limit),
        ] {
            if let Some(n) = limit {
                if n == 0 {
                    return Err(Error::Config(format!("{split}_limit must be positive")));
                }
                if n > samples.len() {
                    return Err(Error::Config(format!(
                        "{split}_limit {n} exceeds the {} available {split} samples",
                        samples.len()
                    )));
                }
                samples.truncate(n);
            }
        }
        Ok(())
    }

    /// Apply `mode` to every sample in both splits.
    pub fn normalize(&mut self, mode: Normalization) {
        if mode == Normalization::None {
            return;
        }
        for s in self.train.iter_mut().chain(self.test.iter_mut()) {
            let norm = s.features.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut s.features {
                    *v /= norm;
                }
            }
        }
    }
}
