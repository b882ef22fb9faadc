//! Dense row-major `f64` matrices.
//!
//! Everything in this crate moves through [`Matrix`]: data batches, layer
//! weights, latent codes, prior samples. The type is deliberately small; it
//! provides exactly the products and reductions the rest of the crate needs.
//!
//! Parallel paths are used only where every output element keeps a fixed
//! sequential summation order, so results are bit-identical regardless of
//! thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Work threshold (in multiply-adds) below which products stay sequential.
const PAR_MIN_WORK: usize = 1 << 17;

/// Row-chunk size for the transposed-A product's partial accumulators.
const AT_CHUNK_ROWS: usize = 128;

/// Dense row-major matrix of 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a flat row-major buffer. Fails if the length is
    /// inconsistent or any entry is non-finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "buffer of length {} cannot form a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        let m = Matrix { rows, cols, data };
        m.ensure_finite("matrix data")?;
        Ok(m)
    }

    /// Builds a matrix from per-row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        if rows.is_empty() {
            return Err(Error::validation("from_rows: no rows given"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::shape(format!(
                    "row {} has length {}, expected {}",
                    i,
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::validation(format!("{what} contains non-finite values")))
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self (n x k) * b (k x m)`.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.rows {
            return Err(Error::shape(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, b.cols);
        let mut out = Matrix::zeros(n, m);
        let body = |i: usize, out_row: &mut [f64]| {
            let a_row = self.row(i);
            for (l, &a_il) in a_row.iter().enumerate() {
                if a_il == 0.0 {
                    continue;
                }
                let b_row = b.row(l);
                for (o, &b_lj) in out_row.iter_mut().zip(b_row) {
                    *o += a_il * b_lj;
                }
            }
        };
        if n * k * m >= PAR_MIN_WORK {
            out.data
                .par_chunks_mut(m)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
        } else {
            for (i, row) in out.data.chunks_mut(m).enumerate() {
                body(i, row);
            }
        }
        Ok(out)
    }

    /// `self (n x k) * b^T` where `b` is `m x k`. The forward-pass product:
    /// activations times a weight matrix stored as (out x in).
    pub fn matmul_bt(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.cols {
            return Err(Error::shape(format!(
                "matmul_bt: {}x{} * ({}x{})^T",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, b.rows);
        let mut out = Matrix::zeros(n, m);
        let body = |i: usize, out_row: &mut [f64]| {
            let a_row = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, b.row(j));
            }
        };
        if n * k * m >= PAR_MIN_WORK {
            out.data
                .par_chunks_mut(m)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
        } else {
            for (i, row) in out.data.chunks_mut(m).enumerate() {
                body(i, row);
            }
        }
        Ok(out)
    }

    /// `self^T (k x n) * b (n x m)` where `self` is `n x k`. The backward-pass
    /// product for weight gradients. Row blocks are accumulated into partial
    /// products and folded in index order, keeping the result independent of
    /// thread scheduling.
    pub fn matmul_at(&self, b: &Matrix) -> Result<Matrix> {
        if self.rows != b.rows {
            return Err(Error::shape(format!(
                "matmul_at: ({}x{})^T * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, b.cols);
        let partial = |range: std::ops::Range<usize>| -> Matrix {
            let mut acc = Matrix::zeros(k, m);
            for i in range {
                let a_row = self.row(i);
                let b_row = b.row(i);
                for (p, &a_ip) in a_row.iter().enumerate() {
                    if a_ip == 0.0 {
                        continue;
                    }
                    let acc_row = acc.row_mut(p);
                    for (o, &b_ij) in acc_row.iter_mut().zip(b_row) {
                        *o += a_ip * b_ij;
                    }
                }
            }
            acc
        };
        if n * k * m >= PAR_MIN_WORK && n > AT_CHUNK_ROWS {
            let ranges: Vec<_> = (0..n)
                .step_by(AT_CHUNK_ROWS)
                .map(|s| s..(s + AT_CHUNK_ROWS).min(n))
                .collect();
            let partials: Vec<Matrix> = ranges.into_par_iter().map(partial).collect();
            let mut out = Matrix::zeros(k, m);
            for p in &partials {
                for (o, &v) in out.data.iter_mut().zip(&p.data) {
                    *o += v;
                }
            }
            Ok(out)
        } else {
            Ok(partial(0..n))
        }
    }

    pub fn add(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, |x, y| x + y, "add")
    }

    pub fn sub(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, |x, y| x - y, "sub")
    }

    pub fn hadamard(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, |x, y| x * y, "hadamard")
    }

    fn zip_with(&self, b: &Matrix, f: impl Fn(f64, f64) -> f64, op: &str) -> Result<Matrix> {
        if self.shape() != b.shape() {
            return Err(Error::shape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&b.data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += alpha * other`, in place.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "axpy: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (o, &v) in self.data.iter_mut().zip(&other.data) {
            *o += alpha * v;
        }
        Ok(())
    }

    /// Adds `v` to every row.
    pub fn add_row_vector(&self, v: &[f64]) -> Result<Matrix> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "add_row_vector: vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..out.rows {
            for (o, &b) in out.row_mut(i).iter_mut().zip(v) {
                *o += b;
            }
        }
        Ok(out)
    }

    /// Column sums, accumulated row by row in index order.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Column means (empty matrix yields an empty vector).
    pub fn col_means(&self) -> Vec<f64> {
        if self.rows == 0 {
            return vec![0.0; self.cols];
        }
        let inv = 1.0 / self.rows as f64;
        self.col_sums().into_iter().map(|s| s * inv).collect()
    }

    /// Copies the listed rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::validation(format!(
                    "row index {} out of range for {} rows",
                    i, self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }
}

/// Plain sequential dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(matches!(
            Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_shape_error() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = Matrix::from_fn(7, 5, |i, j| (i * 31 + j * 7) as f64 * 0.01 - 1.0);
        let b = Matrix::from_fn(7, 4, |i, j| (i * 13 + j * 3) as f64 * 0.02 - 0.5);
        let direct = a.matmul_at(&b).unwrap();
        let explicit = a.transpose().matmul(&b).unwrap();
        for (x, y) in direct.as_slice().iter().zip(explicit.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }

        let c = Matrix::from_fn(6, 5, |i, j| (i + 2 * j) as f64 * 0.1);
        let bt = a.matmul_bt(&c).unwrap();
        let explicit = a.matmul(&c.transpose()).unwrap();
        for (x, y) in bt.as_slice().iter().zip(explicit.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_paths_match_sequential_bits() {
        // Force both paths over the same operands and compare exact bits.
        let a = Matrix::from_fn(200, 80, |i, j| ((i * 7 + j * 13) % 101) as f64 * 0.013 - 0.6);
        let b = Matrix::from_fn(80, 90, |i, j| ((i * 5 + j * 11) % 97) as f64 * 0.017 - 0.8);
        let big = a.matmul(&b).unwrap();
        // Sequential reference computed with the same inner loops.
        let mut seq = Matrix::zeros(200, 90);
        for i in 0..200 {
            for l in 0..80 {
                let a_il = a.get(i, l);
                if a_il == 0.0 {
                    continue;
                }
                for j in 0..90 {
                    let v = seq.get(i, j) + a_il * b.get(l, j);
                    seq.set(i, j, v);
                }
            }
        }
        assert_eq!(big.as_slice(), seq.as_slice());
    }

    #[test]
    fn col_sums_and_means() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.col_sums(), vec![5.0, 7.0, 9.0]);
        assert_eq!(a.col_means(), vec![2.5, 3.5, 4.5]);
    }

    #[test]
    fn select_rows_out_of_range() {
        let a = Matrix::zeros(3, 2);
        assert!(a.select_rows(&[0, 3]).is_err());
    }
}
