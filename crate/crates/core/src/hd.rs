//! Hyperdimensional classifier lifecycle.
//!
//! Samples are lifted into a D-dimensional space through a shared random
//! projection basis: component d of an encoding is cos(features . basis_d),
//! so every encoded component lies in [-1, 1]. A class is represented by
//! the running sum of its encoded samples (a prototype), inference is
//! cosine similarity against the prototypes, and retraining moves a
//! misclassified sample's encoding from the wrongly predicted prototype
//! to the true one.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_stream;

/// A fixed-length real vector in the encoded space.
///
/// Length is set at creation and never changes. Encoded samples additionally
/// have every component in [-1, 1]; prototypes and noise draws do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypervector {
    values: Vec<f64>,
}

impl Hypervector {
    pub fn zeros(dim: usize) -> Self {
        Hypervector {
            values: vec![0.0; dim],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Hypervector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn add_assign(&mut self, other: &Hypervector) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &Hypervector) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
    }

    pub fn dot(&self, other: &Hypervector) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn squared_norm(&self) -> f64 {
        dot(&self.values, &self.values)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A labeled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Sample { features, label }
    }
}

/// An already-encoded sample, for paths that reuse encodings across rounds.
#[derive(Debug, Clone)]
pub struct EncodedSample {
    pub hv: Hypervector,
    pub label: usize,
}

/// The shared random projection basis: D rows of F standard-normal entries.
///
/// All participants in one run hold the same basis; it is fully determined
/// by (seed, feature_dim, dim) and reproduces bit-for-bit.
#[derive(Debug, Clone)]
pub struct ProjectionBasis {
    rows: Vec<f64>, // dim x feature_dim, row-major
    feature_dim: usize,
    dim: usize,
    seed: u64,
}

impl ProjectionBasis {
    pub fn generate(seed: u64, feature_dim: usize, dim: usize) -> Self {
        let mut rng = derive_stream(seed, "projection-basis", &[feature_dim as u64, dim as u64]);
        let rows = (0..dim * feature_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        ProjectionBasis {
            rows,
            feature_dim,
            dim,
            seed,
        }
    }

    /// Build a basis from explicit rows (each of length `feature_dim`).
    pub fn from_rows(rows: Vec<Vec<f64>>, feature_dim: usize) -> Result<Self> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * feature_dim);
        for row in &rows {
            if row.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(ProjectionBasis {
            rows: flat,
            feature_dim,
            dim,
            seed: 0,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn row(&self, d: usize) -> &[f64] {
        &self.rows[d * self.feature_dim..(d + 1) * self.feature_dim]
    }

    /// Encode a feature vector: component d is cos(features . basis_d).
    ///
    /// Mostly-zero inputs (images) take a term-skipping path; zero terms
    /// contribute an exact +0.0, so both paths produce identical bits.
    pub fn encode(&self, features: &[f64]) -> Result<Hypervector> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        let nonzero: Vec<(usize, f64)> = features
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        let values = if nonzero.len() * 2 <= self.feature_dim {
            (0..self.dim)
                .map(|d| {
                    let row = self.row(d);
                    nonzero
                        .iter()
                        .map(|&(i, v)| v * row[i])
                        .sum::<f64>()
                        .cos()
                })
                .collect()
        } else {
            (0..self.dim)
                .map(|d| dot(features, self.row(d)).cos())
                .collect()
        };
        Ok(Hypervector { values })
    }

    /// Encode a batch of labeled samples, validating labels against
    /// `class_count`. Errors name the offending sample index.
    pub fn encode_samples(&self, samples: &[Sample], class_count: usize) -> Result<Vec<EncodedSample>> {
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.label >= class_count {
                    return Err(Error::LabelOutOfRange {
                        sample_index: i,
                        label: s.label,
                        class_count,
                    });
                }
                Ok(EncodedSample {
                    hv: self.encode(&s.features)?,
                    label: s.label,
                })
            })
            .collect()
    }
}

/// Result of one inference: the chosen class and all per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// One prototype per class. Prototypes start at zero; a class never
/// observed stays all-zero and scores 0 against every query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrototypes {
    dim: usize,
    prototypes: Vec<Hypervector>,
}

impl ClassPrototypes {
    pub fn new(class_count: usize, dim: usize) -> Self {
        ClassPrototypes {
            dim,
            prototypes: (0..class_count).map(|_| Hypervector::zeros(dim)).collect(),
        }
    }

    pub fn class_count(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prototype(&self, class: usize) -> &Hypervector {
        &self.prototypes[class]
    }

    pub fn prototypes(&self) -> &[Hypervector] {
        &self.prototypes
    }

    /// Add an encoded sample into its class prototype.
    pub fn accumulate(&mut self, encoded: &EncodedSample) {
        self.prototypes[encoded.label].add_assign(&encoded.hv);
    }

    /// Add a raw vector (e.g. a noise draw) onto one prototype.
    pub fn add_to_class(&mut self, class: usize, delta: &Hypervector) -> Result<()> {
        if delta.dim() != self.dim {
            return Err(Error::HypervectorDimension {
                expected: self.dim,
                actual: delta.dim(),
            });
        }
        self.prototypes[class].add_assign(delta);
        Ok(())
    }

    /// Cosine similarity of `query` against every prototype, plus the argmax.
    ///
    /// All-zero prototypes (and an all-zero query) score 0. Ties go to the
    /// lowest class index.
    pub fn predict(&self, query: &Hypervector) -> Result<Prediction> {
        if query.dim() != self.dim {
            return Err(Error::HypervectorDimension {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        let query_norm = query.squared_norm().sqrt();
        let scores: Vec<f64> = self
            .prototypes
            .iter()
            .map(|c| cosine_with_norms(c.dot(query), c.squared_norm().sqrt(), query_norm))
            .collect();
        Ok(Prediction {
            class: argmax(&scores),
            scores,
        })
    }

    /// One corrective pass over `encoded` in presented order, predicting
    /// with the evolving model. A misprediction of true class s as s'
    /// subtracts the encoding from prototype s' and adds it to prototype s.
    /// Returns the misprediction count.
    pub fn retrain_pass(&mut self, encoded: &[EncodedSample]) -> Result<usize> {
        let class_count = self.class_count();
        // Squared norms are kept current by full recomputation of the two
        // affected prototypes after each update, so scores are bit-identical
        // to a fresh predict() at every step.
        let mut sq_norms: Vec<f64> = self.prototypes.iter().map(|c| c.squared_norm()).collect();
        let mut mispredictions = 0;
        for (i, sample) in encoded.iter().enumerate() {
            if sample.label >= class_count {
                return Err(Error::LabelOutOfRange {
                    sample_index: i,
                    label: sample.label,
                    class_count,
                });
            }
            if sample.hv.dim() != self.dim {
                return Err(Error::HypervectorDimension {
                    expected: self.dim,
                    actual: sample.hv.dim(),
                });
            }
            let query_norm = sample.hv.squared_norm().sqrt();
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (s, proto) in self.prototypes.iter().enumerate() {
                let score =
                    cosine_with_norms(proto.dot(&sample.hv), sq_norms[s].sqrt(), query_norm);
                if score > best_score {
                    best_score = score;
                    best = s;
                }
            }
            if best != sample.label {
                mispredictions += 1;
                self.prototypes[sample.label].add_assign(&sample.hv);
                self.prototypes[best].sub_assign(&sample.hv);
                sq_norms[sample.label] = self.prototypes[sample.label].squared_norm();
                sq_norms[best] = self.prototypes[best].squared_norm();
            }
        }
        Ok(mispredictions)
    }
}

fn cosine_with_norms(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (norm_a * norm_b)
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    best
}

/// Form class prototypes from scratch: the componentwise sum of the
/// encodings of all samples of each class, accumulated in presented order.
pub fn train_prototypes(
    samples: &[Sample],
    basis: &ProjectionBasis,
    class_count: usize,
) -> Result<ClassPrototypes> {
    let mut model = ClassPrototypes::new(class_count, basis.dim());
    for (i, sample) in samples.iter().enumerate() {
        if sample.label >= class_count {
            return Err(Error::LabelOutOfRange {
                sample_index: i,
                label: sample.label,
                class_count,
            });
        }
        let hv = basis.encode(&sample.features)?;
        model.prototypes[sample.label].add_assign(&hv);
    }
    Ok(model)
}

/// Convenience wrapper over [`ClassPrototypes::retrain_pass`] for raw samples.
pub fn retrain_pass(
    model: &mut ClassPrototypes,
    samples: &[Sample],
    basis: &ProjectionBasis,
) -> Result<usize> {
    let encoded = basis.encode_samples(samples, model.class_count())?;
    model.retrain_pass(&encoded)
}
