//! Seeded Gaussian-mixture classification data.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::Dataset;
use crate::rng::keyed;

/// Each class is an equal-weight mixture of unit-variance Gaussian blobs whose
/// centres are drawn once from `N(0, spread^2 I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    num_classes: usize,
    dim: usize,
    /// `num_classes * components` centres, each `dim` long.
    centres: Vec<Vec<f64>>,
    components: usize,
}

impl GaussianMixture {
    pub fn new(num_classes: usize, dim: usize, components: usize, spread: f64, seed: u64) -> Self {
        assert!(num_classes >= 2 && dim >= 1 && components >= 1);
        let mut rng = keyed(seed, &[0xC0FFEE]);
        let normal = Normal::new(0.0, spread).expect("finite spread");
        let centres =
            (0..num_classes * components).map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect()).collect();
        GaussianMixture { num_classes, dim, centres, components }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `n` rows with labels cycling through the classes, so class sizes
    /// differ by at most one.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = keyed(seed, &[0x5A3D1E]);
        let mut features = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % self.num_classes;
            let comp = rng.random_range(0..self.components);
            let centre = &self.centres[class * self.components + comp];
            for &c in centre {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(c + z);
            }
            labels.push(class);
        }
        Dataset::new(features, labels, self.dim, self.num_classes).expect("finite samples")
    }
}
