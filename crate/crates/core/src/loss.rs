//! Reconstruction loss.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Clamp bound keeping `ln` away from zero.
pub const CE_EPSILON: f64 = 1e-7;

/// Bernoulli cross-entropy between predictions in (0,1) and targets in [0,1],
/// averaged over batch rows and summed over columns.
///
/// Predictions are clamped to `[1e-7, 1-1e-7]` before the logs; the returned
/// gradient is taken at the clamped values and carries the same `1/batch`
/// reduction as the loss.
pub fn bernoulli_cross_entropy(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "prediction {}x{} vs target {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    if pred.rows() == 0 {
        return Err(Error::validation("empty batch"));
    }
    pred.ensure_finite("predictions")?;
    if !target
        .as_slice()
        .iter()
        .all(|&t| t.is_finite() && (0.0..=1.0).contains(&t))
    {
        return Err(Error::validation("targets must lie in [0, 1]"));
    }

    let inv_n = 1.0 / pred.rows() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for (i, (p, t)) in pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .enumerate()
    {
        let p = p.clamp(CE_EPSILON, 1.0 - CE_EPSILON);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.as_mut_slice()[i] = (-t / p + (1.0 - t) / (1.0 - p)) * inv_n;
    }
    Ok((loss * inv_n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_on_binary_targets_is_zero() {
        let pred = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (loss, _) = bernoulli_cross_entropy(&pred, &pred.clone()).unwrap();
        // Clamping bounds the loss by ~4 * 1e-7 per pixel rather than exactly 0.
        assert!(loss.abs() < 1e-6, "loss {loss}");
    }

    #[test]
    fn uniform_half_prediction_is_ln_two() {
        let pred = Matrix::from_vec(1, 1, vec![0.5]).unwrap();
        let target = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let (loss, _) = bernoulli_cross_entropy(&pred, &target).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        // Any target gives the same value at p = 0.5.
        let target = Matrix::from_vec(1, 1, vec![0.25]).unwrap();
        let (loss, _) = bernoulli_cross_entropy(&pred, &target).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(
            bernoulli_cross_entropy(&a, &b),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn targets_outside_unit_interval_are_rejected() {
        let pred = Matrix::from_vec(1, 1, vec![0.5]).unwrap();
        let target = Matrix::from_vec(1, 1, vec![1.5]).unwrap();
        assert!(bernoulli_cross_entropy(&pred, &target).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pred = Matrix::from_vec(2, 3, vec![0.3, 0.6, 0.52, 0.81, 0.14, 0.47]).unwrap();
        let target = Matrix::from_vec(2, 3, vec![0.0, 1.0, 0.5, 0.9, 0.2, 0.0]).unwrap();
        let (_, grad) = bernoulli_cross_entropy(&pred, &target).unwrap();
        let h = 1e-6;
        for idx in 0..pred.as_slice().len() {
            let mut plus = pred.clone();
            plus.as_mut_slice()[idx] += h;
            let mut minus = pred.clone();
            minus.as_mut_slice()[idx] -= h;
            let (lp, _) = bernoulli_cross_entropy(&plus, &target).unwrap();
            let (lm, _) = bernoulli_cross_entropy(&minus, &target).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let g = grad.as_slice()[idx];
            let denom = g.abs().max(fd.abs()).max(1.0);
            assert!(
                ((g - fd) / denom).abs() < 1e-6,
                "index {idx}: analytic {g} vs fd {fd}"
            );
        }
    }
}
