//! Gaussian RBF kernels and closed-form squared maximum mean discrepancy.
//!
//! The workhorse estimator is the biased V-statistic
//!
//! ```text
//! MMD^2(X, Y) = 1/n^2 sum k(x_i, x_j) + 1/m^2 sum k(y_i, y_j)
//!             - 2/(n m) sum k(x_i, y_j)
//! ```
//!
//! summed over every bandwidth in the mixture. It is nonnegative, smooth in
//! the samples, and zero exactly when the two empirical feature means agree.
//! The unbiased U-statistic (diagonal terms removed) is exposed for
//! diagnostics; it can go negative.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

/// Minimum row count before pairwise accumulations go parallel.
const PAR_MIN_ROWS: usize = 64;

/// A Gaussian RBF kernel, or an unweighted sum of them over several
/// bandwidths.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    bandwidths: Vec<f64>,
}

impl KernelSpec {
    pub fn new(bandwidths: Vec<f64>) -> Result<KernelSpec> {
        if bandwidths.is_empty() {
            return Err(Error::validation("kernel needs at least one bandwidth"));
        }
        if !bandwidths.iter().all(|&s| s.is_finite() && s > 0.0) {
            return Err(Error::validation("bandwidths must be positive and finite"));
        }
        Ok(KernelSpec { bandwidths })
    }

    pub fn single(sigma: f64) -> Result<KernelSpec> {
        KernelSpec::new(vec![sigma])
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// Kernel value from a precomputed squared distance.
    fn eval_sq(&self, d2: f64) -> f64 {
        self.bandwidths
            .iter()
            .map(|&s| (-d2 / (2.0 * s * s)).exp())
            .sum()
    }
}

/// `exp(-||x - y||^2 / (2 sigma^2))`.
pub fn rbf_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "kernel arguments of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation(format!("bandwidth {sigma} must be positive")));
    }
    Ok((-sq_dist(x, y) / (2.0 * sigma * sigma)).exp())
}

fn check_pair(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::validation("empty sample set"));
    }
    if x.cols() != y.cols() {
        return Err(Error::shape(format!(
            "sample sets of dimension {} and {}",
            x.cols(),
            y.cols()
        )));
    }
    Ok(())
}

/// Mean of `spec`-kernel values over all ordered pairs (rows of `a`, rows of
/// `b`), diagonal included. Per-row partial sums are combined in row order.
fn mean_kernel_all_pairs(a: &Matrix, b: &Matrix, spec: &KernelSpec) -> f64 {
    let row_sum = |i: usize| -> f64 {
        let ai = a.row(i);
        let mut s = 0.0;
        for j in 0..b.rows() {
            s += spec.eval_sq(sq_dist(ai, b.row(j)));
        }
        s
    };
    let total: f64 = if a.rows() >= PAR_MIN_ROWS {
        let partials: Vec<f64> = (0..a.rows()).into_par_iter().map(row_sum).collect();
        partials.iter().sum()
    } else {
        (0..a.rows()).map(row_sum).sum()
    };
    total / (a.rows() as f64 * b.rows() as f64)
}

/// Biased (V-statistic) squared MMD between the rows of `x` and `y`.
pub fn mmd2_biased(x: &Matrix, y: &Matrix, spec: &KernelSpec) -> Result<f64> {
    check_pair(x, y)?;
    let kxx = mean_kernel_all_pairs(x, x, spec);
    let kyy = mean_kernel_all_pairs(y, y, spec);
    let kxy = mean_kernel_all_pairs(x, y, spec);
    Ok(kxx + kyy - 2.0 * kxy)
}

/// Unbiased (U-statistic) squared MMD; within-set diagonals are excluded.
/// Needs at least two rows per set and may be negative.
pub fn mmd2_unbiased(x: &Matrix, y: &Matrix, spec: &KernelSpec) -> Result<f64> {
    check_pair(x, y)?;
    let (n, m) = (x.rows(), y.rows());
    if n < 2 || m < 2 {
        return Err(Error::validation(
            "the unbiased estimator needs at least two rows per set",
        ));
    }
    let off_diag_mean = |a: &Matrix| -> f64 {
        let rows = a.rows();
        let row_sum = |i: usize| -> f64 {
            let ai = a.row(i);
            let mut s = 0.0;
            for j in 0..rows {
                if i != j {
                    s += spec.eval_sq(sq_dist(ai, a.row(j)));
                }
            }
            s
        };
        let total: f64 = if rows >= PAR_MIN_ROWS {
            let partials: Vec<f64> = (0..rows).into_par_iter().map(row_sum).collect();
            partials.iter().sum()
        } else {
            (0..rows).map(row_sum).sum()
        };
        total / (rows * (rows - 1)) as f64
    };
    let kxx = off_diag_mean(x);
    let kyy = off_diag_mean(y);
    let kxy = mean_kernel_all_pairs(x, y, spec);
    Ok(kxx + kyy - 2.0 * kxy)
}

/// Analytic gradient of [`mmd2_biased`] with respect to every entry of `y`.
///
/// For a single bandwidth, row `l` receives
/// `2/m^2 sum_j k(y_l, y_j) (y_j - y_l) / sigma^2` minus
/// `2/(n m) sum_i k(x_i, y_l) (x_i - y_l) / sigma^2`, and the mixture
/// gradient is the sum over bandwidths.
pub fn mmd2_biased_grad_wrt_y(x: &Matrix, y: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    check_pair(x, y)?;
    let (n, m, d) = (x.rows(), y.rows(), y.cols());
    let inv_m2 = 1.0 / (m as f64 * m as f64);
    let inv_nm = 1.0 / (n as f64 * m as f64);
    let mut out = Matrix::zeros(m, d);
    let fill_row = |l: usize, row: &mut [f64]| {
        let yl = y.row(l);
        for &sigma in spec.bandwidths() {
            let inv_s2 = 1.0 / (sigma * sigma);
            for j in 0..m {
                let yj = y.row(j);
                let k = (-sq_dist(yl, yj) * 0.5 * inv_s2).exp();
                let w = 2.0 * inv_m2 * k * inv_s2;
                for (o, (&a, &b)) in row.iter_mut().zip(yj.iter().zip(yl)) {
                    *o += w * (a - b);
                }
            }
            for i in 0..n {
                let xi = x.row(i);
                let k = (-sq_dist(xi, yl) * 0.5 * inv_s2).exp();
                let w = 2.0 * inv_nm * k * inv_s2;
                for (o, (&a, &b)) in row.iter_mut().zip(xi.iter().zip(yl)) {
                    *o -= w * (a - b);
                }
            }
        }
    };
    if m >= PAR_MIN_ROWS {
        out.as_mut_slice()
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(l, row)| fill_row(l, row));
    } else {
        for (l, row) in out.as_mut_slice().chunks_mut(d).enumerate() {
            fill_row(l, row);
        }
    }
    Ok(out)
}
