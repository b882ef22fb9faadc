//! Parzen-window log-likelihood scoring of generated samples.
//!
//! A model is a set of centers (generated samples) under an isotropic
//! Gaussian kernel. Log densities are computed with log-sum-exp, so even
//! points astronomically far from every center score finite.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

/// Row chunk processed at a time when scoring a large test set.
const EVAL_DEFAULT_BATCH: usize = 256;

/// Centers plus a bandwidth.
#[derive(Clone, Debug)]
pub struct ParzenModel {
    centers: Matrix,
    sigma: f64,
}

impl ParzenModel {
    pub fn new(centers: Matrix, sigma: f64) -> Result<ParzenModel> {
        if centers.rows() == 0 {
            return Err(Error::validation("Parzen model needs at least one center"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::validation(format!("bandwidth {sigma} must be positive")));
        }
        Ok(ParzenModel { centers, sigma })
    }

    pub fn num_centers(&self) -> usize {
        self.centers.rows()
    }

    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `log[(1/S) sum_s N(x; center_s, sigma^2 I)]`, evaluated stably.
pub fn parzen_log_density(model: &ParzenModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::shape(format!(
            "point of dimension {} against centers of dimension {}",
            x.len(),
            model.dim()
        )));
    }
    let inv_two_s2 = 0.5 / (model.sigma * model.sigma);
    let mut exponents = Vec::with_capacity(model.num_centers());
    for s in 0..model.num_centers() {
        exponents.push(-sq_dist(x, model.centers.row(s)) * inv_two_s2);
    }
    Ok(log_mean_exp(&exponents) + log_normalizer(model.dim(), model.sigma))
}

fn log_normalizer(dim: usize, sigma: f64) -> f64 {
    -(dim as f64) * 0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln()
}

/// `log((1/n) sum exp(e_i))` via the max-shift trick.
fn log_mean_exp(exponents: &[f64]) -> f64 {
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|&e| (e - max).exp()).sum();
    max + sum.ln() - (exponents.len() as f64).ln()
}

/// Per-example log densities over the rows of `test`, processed in row
/// chunks. Squared distances are computed once per chunk; scoring within a
/// chunk is parallel per row with a fixed reduction order.
fn log_densities(model: &ParzenModel, test: &Matrix, chunk_rows: usize) -> Result<Vec<f64>> {
    if test.cols() != model.dim() {
        return Err(Error::shape(format!(
            "test set of dimension {} against centers of dimension {}",
            test.cols(),
            model.dim()
        )));
    }
    let chunk_rows = chunk_rows.max(1);
    let inv_two_s2 = 0.5 / (model.sigma * model.sigma);
    let norm = log_normalizer(model.dim(), model.sigma);
    let s_count = model.num_centers();
    let mut out = Vec::with_capacity(test.rows());
    let mut start = 0;
    while start < test.rows() {
        let end = (start + chunk_rows).min(test.rows());
        let rows: Vec<f64> = (start..end)
            .into_par_iter()
            .map(|i| {
                let xi = test.row(i);
                let mut exps = Vec::with_capacity(s_count);
                for s in 0..s_count {
                    exps.push(-sq_dist(xi, model.centers.row(s)) * inv_two_s2);
                }
                log_mean_exp(&exps) + norm
            })
            .collect();
        out.extend(rows);
        start = end;
    }
    Ok(out)
}

/// Mean and standard error of per-example log densities over a test set.
///
/// The standard error is the sample standard deviation of per-example values
/// divided by `sqrt(test count)`; a single example scores stderr 0.
pub fn evaluate_loglik(model: &ParzenModel, test: &Matrix, batch: usize) -> Result<(f64, f64)> {
    if test.rows() == 0 {
        return Err(Error::validation("empty test set"));
    }
    let values = log_densities(model, test, if batch == 0 { EVAL_DEFAULT_BATCH } else { batch })?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok((mean, stderr))
}

/// Picks the grid bandwidth maximizing mean validation log density, ties
/// broken toward the smaller bandwidth.
pub fn select_bandwidth(centers: &Matrix, validation: &Matrix, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::validation("empty bandwidth grid"));
    }
    if validation.rows() == 0 || centers.rows() == 0 {
        return Err(Error::validation("empty validation or center set"));
    }
    if validation.cols() != centers.cols() {
        return Err(Error::shape(format!(
            "validation dimension {} vs centers dimension {}",
            validation.cols(),
            centers.cols()
        )));
    }
    if !grid.iter().all(|&s| s.is_finite() && s > 0.0) {
        return Err(Error::validation("grid bandwidths must be positive"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    // Squared distances depend only on the points, so compute them once per
    // validation chunk and reuse across the whole grid.
    let s_count = centers.rows();
    let chunk_rows = EVAL_DEFAULT_BATCH;
    let mut totals = vec![0.0f64; sorted.len()];
    let mut start = 0;
    while start < validation.rows() {
        let end = (start + chunk_rows).min(validation.rows());
        let dists: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let vi = validation.row(i);
                (0..s_count).map(|s| sq_dist(vi, centers.row(s))).collect()
            })
            .collect();
        for (gi, &sigma) in sorted.iter().enumerate() {
            let inv_two_s2 = 0.5 / (sigma * sigma);
            let norm = log_normalizer(centers.cols(), sigma);
            let part: Vec<f64> = dists
                .par_iter()
                .map(|row| {
                    let exps: Vec<f64> = row.iter().map(|&d2| -d2 * inv_two_s2).collect();
                    log_mean_exp(&exps) + norm
                })
                .collect();
            totals[gi] += part.iter().sum::<f64>();
        }
        start = end;
    }

    let mut best = sorted[0];
    let mut best_total = totals[0];
    for (gi, &sigma) in sorted.iter().enumerate().skip(1) {
        if totals[gi] > best_total {
            best_total = totals[gi];
            best = sigma;
        }
    }
    Ok(best)
}

/// Twenty log-spaced bandwidths spanning `[0.01, 1]`.
pub fn default_bandwidth_grid() -> Vec<f64> {
    let n = 20;
    let (lo, hi) = (0.01f64.ln(), 1.0f64.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
