//! Ring protocol: a single model travels client 1 -> 2 -> ... -> K, then
//! wraps back to client 1 for the next round.
//!
//! Round 1 builds the model: the first client forms class prototypes from
//! its own data, every later client folds its local prototypes into the
//! received state. Rounds 2 onward refine it: each client runs corrective
//! retraining passes over its local data against the received state. When
//! privacy is enabled every visit ends by perturbing all prototype
//! components with Gaussian noise sized by the accountant for that visit's
//! global step, and the injection is recorded in the ledger.

use crate::accountant::{draw_noise, step_index, NoiseLedger, PrivacyParams};
use crate::error::{Error, Result};
use crate::hd::{ClassPrototypes, EncodedSample, ProjectionBasis, Sample};
use crate::rng::derive_stream;

/// One participant's raw local data.
#[derive(Debug, Clone)]
pub struct Client {
    pub samples: Vec<Sample>,
}

impl Client {
    pub fn new(samples: Vec<Sample>) -> Self {
        Client { samples }
    }
}

/// A participant with its samples already lifted into the encoded space.
/// Encoding dominates run time, so callers that reuse the same data across
/// runs encode once and share.
#[derive(Debug, Clone)]
pub struct EncodedClient {
    pub encoded: Vec<EncodedSample>,
}

impl EncodedClient {
    pub fn from_samples(
        client: &Client,
        basis: &ProjectionBasis,
        class_count: usize,
    ) -> Result<Self> {
        Ok(EncodedClient {
            encoded: basis.encode_samples(&client.samples, class_count)?,
        })
    }
}

/// Per-run protocol settings.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Number of full ring traversals, >= 1.
    pub rounds: u64,
    /// Corrective passes each client runs per visit in rounds >= 2.
    pub retrain_passes: u32,
    /// Privacy parameters; `None` disables noise entirely (diagnostic runs).
    pub privacy: Option<PrivacyParams>,
    /// Master seed; per-visit noise streams are derived from it.
    pub seed: u64,
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.retrain_passes == 0 {
            return Err(Error::Config("retrain_passes must be at least 1".into()));
        }
        if let Some(p) = &self.privacy {
            p.validate()?;
        }
        Ok(())
    }
}

/// Final model plus the injection record that produced it.
#[derive(Debug, Clone)]
pub struct FederationRun {
    pub model: ClassPrototypes,
    pub ledger: NoiseLedger,
}

/// Run the ring protocol over raw clients, encoding with `basis` first.
pub fn run_federation(
    clients: &[Client],
    basis: &ProjectionBasis,
    class_count: usize,
    options: &RunOptions,
) -> Result<FederationRun> {
    let encoded = clients
        .iter()
        .map(|c| EncodedClient::from_samples(c, basis, class_count))
        .collect::<Result<Vec<_>>>()?;
    run_federation_encoded(&encoded, class_count, basis.dim(), options, |_, _| Ok(()))
}

/// Run the ring protocol over pre-encoded clients. `on_round` fires after
/// each completed ring traversal with the state as it leaves client K.
pub fn run_federation_encoded<F>(
    clients: &[EncodedClient],
    class_count: usize,
    dim: usize,
    options: &RunOptions,
    mut on_round: F,
) -> Result<FederationRun>
where
    F: FnMut(u64, &ClassPrototypes) -> Result<()>,
{
    options.validate()?;
    if clients.is_empty() {
        return Err(Error::Config("at least one client is required".into()));
    }
    for (i, c) in clients.iter().enumerate() {
        if c.encoded.is_empty() {
            return Err(Error::EmptyClient {
                round: 1,
                client: i as u64 + 1,
            });
        }
        for e in &c.encoded {
            if e.hv.dim() != dim {
                return Err(Error::HypervectorDimension {
                    expected: dim,
                    actual: e.hv.dim(),
                });
            }
        }
    }
    if let Some(p) = &options.privacy {
        if p.dim != dim {
            return Err(Error::Config(format!(
                "privacy accounting is calibrated for dimension {} but the model has dimension {}",
                p.dim, dim
            )));
        }
        for (i, c) in clients.iter().enumerate() {
            if c.encoded.len() != p.aggregated_samples {
                return Err(Error::Config(format!(
                    "privacy accounting assumes {} samples per client but client {} holds {}",
                    p.aggregated_samples,
                    i + 1,
                    c.encoded.len()
                )));
            }
        }
    }

    let k_total = clients.len() as u64;
    let mut state = ClassPrototypes::new(class_count, dim);
    let mut ledger = NoiseLedger::new(k_total);

    for round in 1..=options.rounds {
        for (idx, client) in clients.iter().enumerate() {
            let k = idx as u64 + 1;
            if round == 1 {
                // Formation/merge: fold this client's encodings into the
                // traveling state sample by sample, which makes the round-1
                // result identical to training centrally on the
                // concatenated data.
                for e in &client.encoded {
                    state.accumulate(e);
                }
            } else {
                for _ in 0..options.retrain_passes {
                    state.retrain_pass(&client.encoded)?;
                }
            }
            if let Some(p) = &options.privacy {
                let entry = ledger.record(p, round, k)?;
                let variance = entry.incremental_variance;
                let mut rng = derive_stream(options.seed, "noise", &[round, k]);
                for s in 0..class_count {
                    let noise = draw_noise(&mut rng, variance, dim);
                    state.add_to_class(s, &noise)?;
                }
            }
        }
        on_round(round, &state)?;
    }
    debug_assert_eq!(
        ledger.entries().len() as u64,
        if options.privacy.is_some() {
            options.rounds * k_total
        } else {
            0
        }
    );
    if options.privacy.is_some() {
        let last = ledger.entries().last().unwrap();
        debug_assert_eq!(last.step, step_index(options.rounds, k_total, k_total));
    }
    Ok(FederationRun { model: state, ledger })
}

/// Test-set evaluation with the encodings cached up front.
#[derive(Debug, Clone)]
pub struct Evaluator {
    encoded: Vec<EncodedSample>,
    class_count: usize,
}

/// Accuracy plus the full confusion matrix (rows = true class, columns =
/// predicted class).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl Evaluator {
    pub fn new(test: &[Sample], basis: &ProjectionBasis, class_count: usize) -> Result<Self> {
        if test.is_empty() {
            return Err(Error::Config("evaluation requires a non-empty test set".into()));
        }
        Ok(Evaluator {
            encoded: basis.encode_samples(test, class_count)?,
            class_count,
        })
    }

    pub fn from_encoded(encoded: Vec<EncodedSample>, class_count: usize) -> Result<Self> {
        if encoded.is_empty() {
            return Err(Error::Config("evaluation requires a non-empty test set".into()));
        }
        for (i, e) in encoded.iter().enumerate() {
            if e.label >= class_count {
                return Err(Error::LabelOutOfRange {
                    sample_index: i,
                    label: e.label,
                    class_count,
                });
            }
        }
        Ok(Evaluator {
            encoded,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.encoded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encoded.is_empty()
    }

    pub fn evaluate(&self, model: &ClassPrototypes) -> Result<Evaluation> {
        if model.class_count() != self.class_count {
            return Err(Error::Config(format!(
                "model has {} classes but the evaluator expects {}",
                model.class_count(),
                self.class_count
            )));
        }
        let mut confusion = vec![vec![0u64; self.class_count]; self.class_count];
        let mut correct = 0usize;
        for e in &self.encoded {
            let pred = model.predict(&e.hv)?;
            confusion[e.label][pred.class] += 1;
            if pred.class == e.label {
                correct += 1;
            }
        }
        Ok(Evaluation {
            total: self.encoded.len(),
            correct,
            accuracy: correct as f64 / self.encoded.len() as f64,
            confusion,
        })
    }
}

/// Sum of per-component squared deviations between two models, used by
/// equivalence checks.
pub fn model_distance(a: &ClassPrototypes, b: &ClassPrototypes) -> f64 {
    assert_eq!(a.class_count(), b.class_count());
    assert_eq!(a.dim(), b.dim());
    let mut acc = 0.0;
    for s in 0..a.class_count() {
        let mut diff = a.prototype(s).clone();
        diff.sub_assign(b.prototype(s));
        acc += diff.squared_norm();
    }
    acc
}
