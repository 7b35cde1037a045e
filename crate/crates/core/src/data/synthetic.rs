//! Synthetic Gaussian-blob classification data for tests and demos.
//!
//! Each class gets a mean drawn uniformly from a hypercube; samples are
//! that mean plus isotropic Gaussian noise. Generation is fully determined
//! by the `BlobSpec` (including its own seed, independent of run seeds).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hd::Sample;
use crate::rng::derive_stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub feature_dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Standard deviation of the within-class noise.
    pub cluster_std: f64,
    /// Half-width of the hypercube the class means are drawn from.
    pub spread: f64,
    pub seed: u64,
}

impl BlobSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config("synthetic data needs at least 2 classes".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("synthetic feature_dim must be positive".into()));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::Config(
                "synthetic per-class sample counts must be positive".into(),
            ));
        }
        if !(self.cluster_std > 0.0) || !(self.spread > 0.0) {
            return Err(Error::Config(
                "synthetic cluster_std and spread must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Generate a blob dataset. Samples are emitted class-major (all of class
/// 0, then class 1, ...), which partitioning reshuffles anyway.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut means_rng = derive_stream(spec.seed, "blob-means", &[]);
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.feature_dim)
                .map(|_| means_rng.random_range(-spec.spread..spec.spread))
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spec.cluster_std).expect("validated std");
    let emit = |domain: &str, per_class: usize| -> Vec<Sample> {
        let mut rng = derive_stream(spec.seed, domain, &[]);
        let mut out = Vec::with_capacity(per_class * spec.classes);
        for (c, mean) in means.iter().enumerate() {
            for _ in 0..per_class {
                let features = mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
                out.push(Sample::new(features, c));
            }
        }
        out
    };
    let dataset = Dataset {
        name: format!(
            "synthetic (classes={}, dim={}, seed={})",
            spec.classes, spec.feature_dim, spec.seed
        ),
        train: emit("blob-train", spec.train_per_class),
        test: emit("blob-test", spec.test_per_class),
        feature_dim: spec.feature_dim,
        class_count: spec.classes,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> BlobSpec {
        BlobSpec {
            classes: 3,
            feature_dim: 5,
            train_per_class: 20,
            test_per_class: 4,
            cluster_std: 0.3,
            spread: 2.0,
            seed: 77,
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let a = generate_blobs(&spec()).unwrap();
        assert_eq!(a.train.len(), 60);
        assert_eq!(a.test.len(), 12);
        assert_eq!(a.feature_dim, 5);
        let b = generate_blobs(&spec()).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let mut other = spec();
        other.seed = 78;
        let c = generate_blobs(&other).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn train_and_test_are_distinct_draws() {
        let d = generate_blobs(&spec()).unwrap();
        assert_ne!(d.train[0].features, d.test[0].features);
    }

    #[test]
    fn blobs_cluster_near_their_means() {
        let d = generate_blobs(&spec()).unwrap();
        // within-class scatter should be far below between-class distance
        let class0: Vec<&Sample> = d.train.iter().filter(|s| s.label == 0).collect();
        let mut centroid = vec![0.0; 5];
        for s in &class0 {
            for (c, f) in centroid.iter_mut().zip(&s.features) {
                *c += f / class0.len() as f64;
            }
        }
        for s in &class0 {
            let dist2: f64 = s
                .features
                .iter()
                .zip(&centroid)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(dist2.sqrt() < 0.3 * 6.0, "outlier at {dist2}");
        }
    }

    #[test]
    fn rejects_degenerate_specs() {
        let mut s = spec();
        s.classes = 1;
        assert!(generate_blobs(&s).is_err());
        let mut s = spec();
        s.cluster_std = 0.0;
        assert!(generate_blobs(&s).is_err());
        let mut s = spec();
        s.test_per_class = 0;
        assert!(generate_blobs(&s).is_err());
    }
}
