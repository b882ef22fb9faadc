//! Random Fourier feature maps for the Gaussian RBF kernel.
//!
//! Frequencies `W` (one row per feature) are drawn i.i.d. `N(0, I/sigma^2)`
//! from a seeded generator, so a map is fully described by
//! `(seed, num_features, input_dim, sigma)` and `W` can always be rebuilt
//! bit-exactly instead of being stored.
//!
//! Each frequency contributes a cosine/sine pair scaled by `1/sqrt(M)`:
//!
//! ```text
//! phi(x) = [cos(w_1 x), sin(w_1 x), ..., cos(w_M x), sin(w_M x)] / sqrt(M)
//! ```
//!
//! so `phi(x) . phi(y) = (1/M) sum_m cos(w_m . (x - y))`, an unbiased
//! Monte-Carlo estimate of `exp(-||x-y||^2 / (2 sigma^2))`, and every feature
//! vector has unit norm exactly. The paired construction keeps the estimate
//! real-valued and avoids the extra variance of a random phase shift.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// A sampled set of random frequencies together with its descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatureMap {
    frequencies: Matrix, // M x d
    sigma: f64,
    seed: u64,
}

/// The `(seed, num_features, input_dim, sigma)` tuple that regenerates a map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureMapDescriptor {
    pub seed: u64,
    pub num_features: usize,
    pub input_dim: usize,
    pub sigma: f64,
}

impl RandomFeatureMap {
    /// Draws `num_features` frequencies of dimension `input_dim`, each entry
    /// `N(0, 1/sigma^2)`, deterministically from `seed`.
    pub fn sample(num_features: usize, input_dim: usize, sigma: f64, seed: u64) -> Result<RandomFeatureMap> {
        if num_features == 0 || input_dim == 0 {
            return Err(Error::validation(
                "feature count and input dimension must be positive",
            ));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::validation(format!("bandwidth {sigma} must be positive")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv_sigma = 1.0 / sigma;
        let mut data = Vec::with_capacity(num_features * input_dim);
        for _ in 0..num_features * input_dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(z * inv_sigma);
        }
        Ok(RandomFeatureMap {
            frequencies: Matrix::from_vec(num_features, input_dim, data)?,
            sigma,
            seed,
        })
    }

    pub fn regenerate(desc: &FeatureMapDescriptor) -> Result<RandomFeatureMap> {
        RandomFeatureMap::sample(desc.num_features, desc.input_dim, desc.sigma, desc.seed)
    }

    pub fn descriptor(&self) -> FeatureMapDescriptor {
        FeatureMapDescriptor {
            seed: self.seed,
            num_features: self.frequencies.rows(),
            input_dim: self.frequencies.cols(),
            sigma: self.sigma,
        }
    }

    pub fn num_features(&self) -> usize {
        self.frequencies.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.cols()
    }

    /// Dimension of the feature vectors: `2 * num_features`.
    pub fn feature_dim(&self) -> usize {
        2 * self.frequencies.rows()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frequencies(&self) -> &Matrix {
        &self.frequencies
    }

    /// Test hook: a map with explicitly chosen frequencies.
    pub fn with_frequencies(frequencies: Matrix, sigma: f64, seed: u64) -> Result<RandomFeatureMap> {
        if frequencies.rows() == 0 || frequencies.cols() == 0 {
            return Err(Error::validation("frequency matrix must be nonempty"));
        }
        Ok(RandomFeatureMap {
            frequencies,
            sigma,
            seed,
        })
    }

    /// Feature matrix for a batch: row `i` is `phi(x_i)`, of length `2M`,
    /// laid out as interleaved (cos, sin) pairs per frequency.
    pub fn features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input of dimension {} against a map over dimension {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let m = self.num_features();
        let scale = 1.0 / (m as f64).sqrt();
        let mut out = Matrix::zeros(x.rows(), 2 * m);
        for i in 0..x.rows() {
            let xi = x.row(i);
            let row = out.row_mut(i);
            for f in 0..m {
                let u = dot(self.frequencies.row(f), xi);
                row[2 * f] = u.cos() * scale;
                row[2 * f + 1] = u.sin() * scale;
            }
        }
        Ok(out)
    }

    /// `phi(x)` for a single point.
    pub fn features_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "input of dimension {} against a map over dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        let m = self.num_features();
        let scale = 1.0 / (m as f64).sqrt();
        let mut out = Vec::with_capacity(2 * m);
        for f in 0..m {
            let u = dot(self.frequencies.row(f), x);
            out.push(u.cos() * scale);
            out.push(u.sin() * scale);
        }
        Ok(out)
    }

    /// Monte-Carlo kernel estimate `phi(x) . phi(y)`.
    pub fn approx_kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let fx = self.features_row(x)?;
        let fy = self.features_row(y)?;
        Ok(dot(&fx, &fy))
    }
}
