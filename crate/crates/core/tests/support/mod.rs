//! Shared helpers for the integration suites: central finite differences and
//! small random fixtures. The finite-difference oracles here are the
//! independent reference every analytic gradient is checked against; they
//! never call the gradient code they verify.

#![allow(dead_code)]

use dsaae_core::{Activation, Matrix, MlpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const FD_STEP: f64 = 1e-5;

/// Relative error with an absolute guard for near-zero pairs.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central finite difference of `f` along coordinate `idx` of `x`.
pub fn central_diff_vec(x: &[f64], idx: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut plus = x.to_vec();
    plus[idx] += h;
    let mut minus = x.to_vec();
    minus[idx] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Checks an analytic gradient over every entry of a matrix argument.
pub fn assert_matrix_grad_matches_fd(
    point: &Matrix,
    analytic: &Matrix,
    tol: f64,
    mut loss: impl FnMut(&Matrix) -> f64,
    ctx: &str,
) {
    assert_eq!(point.shape(), analytic.shape(), "{ctx}: shape mismatch");
    for idx in 0..point.as_slice().len() {
        let mut plus = point.clone();
        plus.as_mut_slice()[idx] += FD_STEP;
        let mut minus = point.clone();
        minus.as_mut_slice()[idx] -= FD_STEP;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
        let a = analytic.as_slice()[idx];
        let e = rel_err(a, fd);
        assert!(
            e < tol,
            "{ctx}: entry {idx}: analytic {a} vs fd {fd} (rel err {e})"
        );
    }
}

/// Checks analytic parameter gradients (flattened tensor views, in
/// [`MlpParams::param_slices_mut`] order) against central differences of a
/// scalar loss over the parameters.
pub fn assert_param_grads_match_fd(
    params: &mut MlpParams,
    analytic: &[Vec<f64>],
    tol: f64,
    mut loss: impl FnMut(&MlpParams) -> f64,
    ctx: &str,
) {
    let lens: Vec<usize> = params.param_slices_mut().iter().map(|s| s.len()).collect();
    assert_eq!(lens.len(), analytic.len(), "{ctx}: tensor count mismatch");
    for (slot, len) in lens.iter().enumerate() {
        assert_eq!(*len, analytic[slot].len(), "{ctx}: tensor {slot} length");
        for i in 0..*len {
            params.param_slices_mut()[slot][i] += FD_STEP;
            let lp = loss(params);
            params.param_slices_mut()[slot][i] -= 2.0 * FD_STEP;
            let lm = loss(params);
            params.param_slices_mut()[slot][i] += FD_STEP;
            let fd = (lp - lm) / (2.0 * FD_STEP);
            let a = analytic[slot][i];
            let e = rel_err(a, fd);
            assert!(
                e < tol,
                "{ctx}: tensor {slot} entry {i}: analytic {a} vs fd {fd} (rel err {e})"
            );
        }
    }
}

/// Flattens [`dsaae_core::MlpGrads`] into per-tensor vectors matching
/// [`MlpParams::param_slices_mut`] order.
pub fn flatten_grads(grads: &dsaae_core::MlpGrads) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for layer in &grads.layers {
        out.push(layer.weight.as_slice().to_vec());
        out.push(layer.bias.clone());
    }
    out
}

/// Standard-normal matrix from a seeded stream.
pub fn randn_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Matrix with entries uniform in (lo, hi).
pub fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// A small random network: up to three layers, mixed activations.
pub fn random_small_mlp(
    input_dim: usize,
    dims: &[usize],
    last: Activation,
    rng: &mut ChaCha8Rng,
) -> MlpParams {
    let mut all = vec![input_dim];
    all.extend_from_slice(dims);
    let mut acts = vec![Activation::Relu; dims.len().saturating_sub(1)];
    acts.push(last);
    MlpParams::glorot(&all, &acts, rng).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// True when every ReLU pre-activation sits at least `margin` away from its
/// kink, so central differences with `FD_STEP` stay on one side of it.
pub fn relu_margin_ok(params: &MlpParams, x: &Matrix, margin: f64) -> bool {
    let (_, cache) = dsaae_core::mlp_forward_cached(params, x).unwrap();
    params
        .layers()
        .iter()
        .zip(cache.pre_activations())
        .all(|(layer, pre)| {
            layer.activation != Activation::Relu
                || pre.as_slice().iter().all(|z| z.abs() >= margin)
        })
}

/// Margin used with [`relu_margin_ok`]; generous relative to `FD_STEP`.
pub const RELU_MARGIN: f64 = 1e-3;
