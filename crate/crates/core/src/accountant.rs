//! Differential-privacy accounting for the ring protocol.
//!
//! The traveling model is perturbed with the Gaussian mechanism. Merging a
//! client's prototypes changes each encoded component by at most 2, so the
//! L2 sensitivity of one merge is sqrt(D) over D components, giving
//!
//!   sigma^2(delta) = 2 D ln(1.25 / delta) / epsilon^2.
//!
//! After the model has absorbed m client contributions of N samples each it
//! protects m*N samples, so the failure probability each sample tolerates
//! shrinks to delta_0 / (m*N) and the variance the model must carry grows
//! with ln m. The accountant exposes three views of that schedule:
//!
//! * `required_variance(m)`: total variance the model must carry at step m
//! * `incremental_variance(m)`: what the m-th client injects on top of the
//!   variance already present, so that the running sum telescopes to the
//!   requirement exactly
//! * `blackbox_variance(m)`: what m independent single-step perturbations
//!   would have accumulated, the baseline an incremental scheme is measured
//!   against (kept in log space; the m! inside would overflow directly)

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hd::Hypervector;
use crate::math::ln_factorial;

/// Privacy configuration shared by every client in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    /// Privacy budget epsilon, > 0.
    pub epsilon: f64,
    /// Base failure probability delta_0, in (0, 1).
    pub delta0: f64,
    /// Hypervector dimensionality D.
    pub dim: usize,
    /// Samples each client aggregates into its contribution (N).
    pub aggregated_samples: usize,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta0: f64, dim: usize, aggregated_samples: usize) -> Result<Self> {
        let p = PrivacyParams {
            epsilon,
            delta0,
            dim,
            aggregated_samples,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be a positive finite number, got {}",
                self.epsilon
            )));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return Err(Error::Config(format!(
                "delta0 must lie in (0, 1), got {}",
                self.delta0
            )));
        }
        if self.dim == 0 {
            return Err(Error::Config("hypervector dimension must be positive".into()));
        }
        if self.aggregated_samples == 0 {
            return Err(Error::Config(
                "aggregated sample count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// L2 sensitivity of one client merge: sqrt(D).
    pub fn sensitivity(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    /// 2 D / epsilon^2, the factor shared by every variance expression.
    fn scale(&self) -> f64 {
        2.0 * self.dim as f64 / (self.epsilon * self.epsilon)
    }

    /// Failure probability protecting each sample once `step` contributions
    /// have merged: delta_0 / (step * N).
    pub fn effective_delta(&self, step: u64) -> f64 {
        assert!(step >= 1, "steps are 1-based");
        self.delta0 / (step as f64 * self.aggregated_samples as f64)
    }

    /// Total Gaussian variance the model must carry after `step` merges.
    pub fn required_variance(&self, step: u64) -> f64 {
        assert!(step >= 1, "steps are 1-based");
        let n = self.aggregated_samples as f64;
        self.scale() * (1.25 * step as f64 * n / self.delta0).ln()
    }

    /// Variance the `step`-th contributor injects on top of what the model
    /// already carries. The first contributor pays the full single-step
    /// requirement; each later one only pays the ln(m/(m-1)) increment, and
    /// the prefix sums reproduce `required_variance` at every step.
    pub fn incremental_variance(&self, step: u64) -> f64 {
        assert!(step >= 1, "steps are 1-based");
        if step == 1 {
            self.required_variance(1)
        } else {
            self.scale() * (step as f64 / (step as f64 - 1.0)).ln()
        }
    }

    /// Variance accumulated by `step` independent single-step perturbations,
    /// each sized for the delta in force at its own step: the scheme that
    /// treats the model as a black box and re-noises from scratch every time.
    pub fn blackbox_variance(&self, step: u64) -> f64 {
        assert!(step >= 1, "steps are 1-based");
        let n = self.aggregated_samples as f64;
        let per_step_ln = (1.25 * n / self.delta0).ln();
        self.scale() * (step as f64 * per_step_ln + ln_factorial(step))
    }
}

/// Global 1-based step index of the visit to `client` in `round` on a ring
/// of `clients` participants.
pub fn step_index(round: u64, client: u64, clients: u64) -> u64 {
    debug_assert!(round >= 1 && client >= 1 && client <= clients);
    (round - 1) * clients + client
}

/// Draw a D-dimensional Gaussian noise vector with the given per-component
/// variance. Zero variance yields an exact zero vector.
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, variance: f64, dim: usize) -> Hypervector {
    assert!(
        variance >= 0.0 && variance.is_finite(),
        "noise variance must be finite and non-negative, got {variance}"
    );
    if variance == 0.0 {
        return Hypervector::zeros(dim);
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite std dev");
    Hypervector::from_values((0..dim).map(|_| normal.sample(rng)).collect())
}

/// One noise injection as it happened, with the analytic context needed to
/// audit it later.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub round: u64,
    pub client: u64,
    pub step: u64,
    pub incremental_variance: f64,
    /// Running sum of incremental variances up to and including this entry.
    pub cumulative_variance: f64,
    /// Analytic requirement at this step; should match the cumulative sum.
    pub required_variance: f64,
    pub effective_delta: f64,
}

/// Append-only record of every injection in a run, in ring order.
///
/// Entries exist only for injections that actually happened; a run with
/// noise disabled leaves the ledger empty.
#[derive(Debug, Clone)]
pub struct NoiseLedger {
    clients: u64,
    entries: Vec<LedgerEntry>,
}

impl NoiseLedger {
    pub fn new(clients: u64) -> Self {
        assert!(clients >= 1);
        NoiseLedger {
            clients,
            entries: Vec::new(),
        }
    }

    pub fn clients(&self) -> u64 {
        self.clients
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn expected_next(&self) -> (u64, u64) {
        match self.entries.last() {
            None => (1, 1),
            Some(e) if e.client < self.clients => (e.round, e.client + 1),
            Some(e) => (e.round + 1, 1),
        }
    }

    /// Record the injection at (round, client), computing its analytic
    /// context from `params`. Visits must arrive in ring order with no gaps.
    pub fn record(
        &mut self,
        params: &PrivacyParams,
        round: u64,
        client: u64,
    ) -> Result<&LedgerEntry> {
        let (er, ec) = self.expected_next();
        if (round, client) != (er, ec) {
            return Err(Error::LedgerOrder {
                expected_round: er,
                expected_client: ec,
                round,
                client,
            });
        }
        let step = step_index(round, client, self.clients);
        let incremental = params.incremental_variance(step);
        let cumulative = self
            .entries
            .last()
            .map_or(0.0, |e| e.cumulative_variance)
            + incremental;
        self.entries.push(LedgerEntry {
            round,
            client,
            step,
            incremental_variance: incremental,
            cumulative_variance: cumulative,
            required_variance: params.required_variance(step),
            effective_delta: params.effective_delta(step),
        });
        Ok(self.entries.last().unwrap())
    }

    /// Total variance injected so far.
    pub fn total_injected(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.cumulative_variance)
    }

    /// Write the ledger as CSV. Floats carry 17 significant digits so the
    /// exact f64 values survive a round trip.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "round,client,step,incremental_variance,cumulative_variance,required_variance,effective_delta"
        )?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.round,
                e.client,
                e.step,
                e.incremental_variance,
                e.cumulative_variance,
                e.required_variance,
                e.effective_delta
            )?;
        }
        Ok(())
    }
}
