//! The doubly stochastic adversary.
//!
//! The adversary is a linear functional over random Fourier features. With
//! `d = mean phi(Y) - mean phi(Y~)` the embedding gap between prior samples
//! and generated codes, the adversary function is
//!
//! ```text
//! f(z) = sum_c alpha_c * d_c * phi_c(z)
//! ```
//!
//! where `d` is frozen at the adversary's last update. Training alternates:
//! the adversary ascends `alpha` to widen the mean-embedding distance, the
//! generator descends its codes to shrink it, each treating the other's
//! parameters as fixed. The squared norm of the gap equals the
//! random-feature MMD^2 of the same batches, which ties the ascent direction
//! to the closed-form estimator in [`crate::kernel`].

use crate::error::{Error, Result};
use crate::features::RandomFeatureMap;
use crate::matrix::{dot, Matrix};

/// Ascent hyperparameters for the adversary coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversaryConfig {
    /// Step size on `alpha`.
    pub ascent_lr: f64,
    /// L2 shrinkage toward zero, the stand-in for the unit-ball constraint
    /// on the witness function.
    pub l2_decay: f64,
    /// Hard cap on `|alpha|` per coordinate.
    pub alpha_cap: f64,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            ascent_lr: 0.001,
            l2_decay: 0.01,
            alpha_cap: 10.0,
        }
    }
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ascent_lr.is_finite() && self.ascent_lr > 0.0) {
            return Err(Error::validation("ascent_lr must be positive"));
        }
        if !(self.l2_decay.is_finite() && self.l2_decay >= 0.0) {
            return Err(Error::validation("l2_decay must be nonnegative"));
        }
        if !(self.alpha_cap.is_finite() && self.alpha_cap > 0.0) {
            return Err(Error::validation("alpha_cap must be positive"));
        }
        Ok(())
    }
}

/// Coefficients `alpha`, the frozen embedding gap, and the feature map they
/// are expressed in.
#[derive(Clone, Debug)]
pub struct AdversaryState {
    alpha: Vec<f64>,
    frozen_gap: Vec<f64>,
    map: RandomFeatureMap,
    cfg: AdversaryConfig,
}

/// `mean_rows phi(prior) - mean_rows phi(generated)`, a vector of length
/// `2M`. Its Euclidean norm is at most 2, and its squared norm equals the
/// random-feature MMD^2 of the two batches.
pub fn embedding_gap(
    prior: &Matrix,
    generated: &Matrix,
    map: &RandomFeatureMap,
) -> Result<Vec<f64>> {
    if prior.rows() == 0 || generated.rows() == 0 {
        return Err(Error::validation("empty batch"));
    }
    if prior.cols() != map.input_dim() || generated.cols() != map.input_dim() {
        return Err(Error::shape(format!(
            "batches of dimension {} and {} against a map over dimension {}",
            prior.cols(),
            generated.cols(),
            map.input_dim()
        )));
    }
    let mu_p = map.features(prior)?.col_means();
    let mu_g = map.features(generated)?.col_means();
    Ok(mu_p.iter().zip(&mu_g).map(|(a, b)| a - b).collect())
}

impl AdversaryState {
    /// Fresh adversary: zero coefficients, zero frozen gap.
    pub fn new(map: RandomFeatureMap, cfg: AdversaryConfig) -> Result<AdversaryState> {
        cfg.validate()?;
        let dim = map.feature_dim();
        Ok(AdversaryState {
            alpha: vec![0.0; dim],
            frozen_gap: vec![0.0; dim],
            map,
            cfg,
        })
    }

    /// Rebuilds a state from checkpointed pieces.
    pub fn from_parts(
        map: RandomFeatureMap,
        cfg: AdversaryConfig,
        alpha: Vec<f64>,
        frozen_gap: Vec<f64>,
    ) -> Result<AdversaryState> {
        cfg.validate()?;
        let dim = map.feature_dim();
        if alpha.len() != dim || frozen_gap.len() != dim {
            return Err(Error::shape(format!(
                "alpha/gap of lengths {}/{} against feature dimension {dim}",
                alpha.len(),
                frozen_gap.len()
            )));
        }
        if !alpha.iter().chain(&frozen_gap).all(|v| v.is_finite()) {
            return Err(Error::validation("non-finite adversary state"));
        }
        Ok(AdversaryState {
            alpha,
            frozen_gap,
            map,
            cfg,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn frozen_gap(&self) -> &[f64] {
        &self.frozen_gap
    }

    pub fn map(&self) -> &RandomFeatureMap {
        &self.map
    }

    pub fn config(&self) -> AdversaryConfig {
        self.cfg
    }

    /// Swaps in freshly drawn frequencies of the same shape, keeping the
    /// coefficients. Used by the per-step resampling mode.
    pub fn replace_map(&mut self, map: RandomFeatureMap) -> Result<()> {
        if map.feature_dim() != self.map.feature_dim() || map.input_dim() != self.map.input_dim() {
            return Err(Error::shape(
                "replacement map must keep the feature and input dimensions".to_string(),
            ));
        }
        self.map = map;
        Ok(())
    }

    /// `f(z_j)` for every row of `z`.
    pub fn value(&self, z: &Matrix) -> Result<Vec<f64>> {
        if z.cols() != self.map.input_dim() {
            return Err(Error::shape(format!(
                "points of dimension {} against a map over dimension {}",
                z.cols(),
                self.map.input_dim()
            )));
        }
        let phi = self.map.features(z)?;
        let weights: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.frozen_gap)
            .map(|(a, d)| a * d)
            .collect();
        Ok((0..z.rows()).map(|j| dot(phi.row(j), &weights)).collect())
    }

    /// The minimax objective `D = mean f(prior) - mean f(generated)`.
    pub fn objective(&self, prior: &Matrix, generated: &Matrix) -> Result<f64> {
        let gap = embedding_gap(prior, generated, &self.map)?;
        Ok(self
            .alpha
            .iter()
            .zip(&self.frozen_gap)
            .zip(&gap)
            .map(|((a, d), g)| a * d * g)
            .sum())
    }

    /// One ascent step: recompute the gap, freeze it, then
    /// `alpha += ascent_lr * (gap^2 - l2_decay * alpha)`, clipped to the cap.
    pub fn ascend(&mut self, prior: &Matrix, generated: &Matrix) -> Result<()> {
        let gap = embedding_gap(prior, generated, &self.map)?;
        let cap = self.cfg.alpha_cap;
        let mut next = Vec::with_capacity(self.alpha.len());
        for (a, g) in self.alpha.iter().zip(&gap) {
            let v = a + self.cfg.ascent_lr * (g * g - self.cfg.l2_decay * a);
            if !v.is_finite() {
                return Err(Error::validation(
                    "non-finite adversary update, step aborted".to_string(),
                ));
            }
            next.push(v.clamp(-cap, cap));
        }
        self.alpha = next;
        self.frozen_gap = gap;
        Ok(())
    }

    /// Gradient of `-mean_j f(z_j)` with respect to every entry of `z`, with
    /// `alpha` and the frozen gap held fixed. This is the direction the
    /// generator descends.
    pub fn generator_grad(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.map.input_dim() {
            return Err(Error::shape(format!(
                "points of dimension {} against a map over dimension {}",
                z.cols(),
                self.map.input_dim()
            )));
        }
        let (n, d) = (z.rows(), z.cols());
        let m = self.map.num_features();
        let scale = 1.0 / (m as f64).sqrt();
        let inv_n = 1.0 / n as f64;
        // Per-frequency weights: c_f multiplies the cosine feature,
        // s_f the sine feature.
        let mut out = Matrix::zeros(n, d);
        for j in 0..n {
            let zj = z.row(j);
            let row = out.row_mut(j);
            for f in 0..m {
                let w = self.map.frequencies().row(f);
                let u = dot(w, zj);
                let c = self.alpha[2 * f] * self.frozen_gap[2 * f];
                let s = self.alpha[2 * f + 1] * self.frozen_gap[2 * f + 1];
                // d f / d z_j = (-c sin(u) + s cos(u)) * w / sqrt(M)
                let coeff = -inv_n * scale * (-c * u.sin() + s * u.cos());
                for (o, &wk) in row.iter_mut().zip(w) {
                    *o += coeff * wk;
                }
            }
        }
        Ok(out)
    }
}
