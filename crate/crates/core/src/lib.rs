//! Decentralized ring federation of hyperdimensional classifiers with
//! differentially private, explainable noise accounting.
//!
//! A single model travels a ring of clients. Round 1 builds class
//! prototypes collaboratively; later rounds refine them by corrective
//! retraining. Every handoff perturbs the model with Gaussian noise, and
//! the accountant sizes each injection as exactly the increment between
//! what the model already carries and what the growing sample population
//! requires, recording every step in an auditable ledger.
//!
//! Module map:
//! * [`hd`]: encoding, prototypes, inference, retraining
//! * [`accountant`]: variance schedules, noise draws, the ledger
//! * [`federation`]: the ring protocol and evaluation
//! * [`data`]: dataset loaders, synthetic data, partitioning
//! * [`experiment`]: configs, runs, sweeps, analytic reports
//! * [`math`], [`rng`], [`error`]: shared numerics, seeded streams, errors

pub mod accountant;
pub mod data;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod hd;
pub mod math;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
