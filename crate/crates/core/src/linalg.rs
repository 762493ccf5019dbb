//! Dense row-major matrices and the kernels the rest of the crate is built
//! from: reference and block-tiled multiplication, element-wise spectral
//! division, and a direct Vandermonde solver.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::NumAssign;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel;

/// Largest interpolation system accepted by [`vandermonde_solve`].
pub const MAX_VANDERMONDE_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: left is {left:?}, right is {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix dimensions must be at least 1x1, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("block size must be at least 1x1, got {block_rows}x{block_cols}")]
    ZeroBlock {
        block_rows: usize,
        block_cols: usize,
    },

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("singular spectrum: denominator vanishes at ({row}, {col}); use a positive lambda")]
    SingularSpectrum { row: usize, col: usize },

    #[error("negative regularization lambda {0}")]
    NegativeLambda(f64),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("interpolation system of size {len} exceeds the limit of {max}")]
    DegreeLimit { len: usize, max: usize },

    #[error("{nodes} nodes but {values} values")]
    LengthMismatch { nodes: usize, values: usize },
}

/// Element types the matrix kernels operate on (`f64` and `Complex64`).
pub trait Scalar: NumAssign + Copy + Send + Sync + fmt::Debug + 'static {}

impl<T> Scalar for T where T: NumAssign + Copy + Send + Sync + fmt::Debug + 'static {}

/// Dense row-major matrix with at least one row and one column.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawMatrix<T>",
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

#[derive(Deserialize)]
struct RawMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> TryFrom<RawMatrix<T>> for Matrix<T> {
    type Error = LinalgError;

    fn try_from(raw: RawMatrix<T>) -> Result<Self, LinalgError> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows, self.cols)?;
        f.debug_list()
            .entries(self.data.chunks(self.cols.max(1)))
            .finish()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be nonzero");
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be nonzero");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    /// Matrix with a single one at `(row, col)`.
    pub fn delta(rows: usize, cols: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(row, col)] = T::one();
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|&v| v * factor)
    }

    /// Combines two equally shaped matrices element by element.
    pub fn zip_with(
        &self,
        other: &Self,
        mut f: impl FnMut(T, T) -> T,
    ) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Copies the rectangle starting at `(row, col)`.
    pub fn submatrix(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        assert!(row + rows <= self.rows && col + cols <= self.cols);
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            let src = &self.row(row + r)[col..col + cols];
            out.row_mut(r).copy_from_slice(src);
        }
        out
    }

    /// Writes `block` into `self` with its top-left corner at `(row, col)`.
    pub fn write_block(&mut self, row: usize, col: usize, block: &Self) {
        assert!(row + block.rows <= self.rows && col + block.cols <= self.cols);
        for r in 0..block.rows {
            self.row_mut(row + r)[col..col + block.cols].copy_from_slice(block.row(r));
        }
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl RealMatrix {
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        self.map(|&v| Complex64::new(v, 0.0))
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl ComplexMatrix {
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn re(&self) -> RealMatrix {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealMatrix {
        self.map(|v| v.im)
    }
}

/// Tile shape for [`block_matmul`].
///
/// `block_rows` splits the rows of the left operand; `block_cols` splits the
/// shared inner dimension and the columns of the right operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub block_rows: usize,
    pub block_cols: usize,
}

impl BlockSpec {
    pub fn new(block_rows: usize, block_cols: usize) -> Result<Self, LinalgError> {
        if block_rows == 0 || block_cols == 0 {
            return Err(LinalgError::ZeroBlock {
                block_rows,
                block_cols,
            });
        }
        Ok(Self {
            block_rows,
            block_cols,
        })
    }
}

fn check_conformable<T>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(), LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::ShapeMismatch {
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    Ok(())
}

/// Accumulates `a * b` into `out` in (i, k, j) order.
fn matmul_into<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &a_ik) in a_row.iter().enumerate() {
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                *o += a_ik * b_kj;
            }
        }
    }
}

/// Reference product with a fixed (i, k, j) accumulation order.
pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    check_conformable(a, b)?;
    let mut out = Matrix::zeros(a.rows, b.cols);
    matmul_into(a, b, &mut out);
    Ok(out)
}

/// Tiled product computed on `workers` threads.
///
/// Every (output tile, inner tile) pair is an independent task. Partial tiles
/// belonging to the same output tile are reduced with
/// [`parallel::cross_replica_sum`] in inner-tile order, so the result does not
/// depend on `workers`.
pub fn block_matmul<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    spec: BlockSpec,
    workers: usize,
) -> Result<Matrix<T>, LinalgError> {
    check_conformable(a, b)?;
    let spec = BlockSpec::new(spec.block_rows, spec.block_cols)?;
    if workers == 0 {
        return Err(LinalgError::ZeroWorkers);
    }

    let row_tiles = tile_bounds(a.rows, spec.block_rows);
    let inner_tiles = tile_bounds(a.cols, spec.block_cols);
    let col_tiles = tile_bounds(b.cols, spec.block_cols);

    let per_output = inner_tiles.len();
    let n_tasks = row_tiles.len() * col_tiles.len() * per_output;
    let partials = parallel::run_indexed(n_tasks, workers, |task| {
        let k = task % per_output;
        let out_tile = task / per_output;
        let (r0, rn) = row_tiles[out_tile / col_tiles.len()];
        let (c0, cn) = col_tiles[out_tile % col_tiles.len()];
        let (k0, kn) = inner_tiles[k];
        let a_tile = a.submatrix(r0, k0, rn, kn);
        let b_tile = b.submatrix(k0, c0, kn, cn);
        let mut partial = Matrix::zeros(rn, cn);
        matmul_into(&a_tile, &b_tile, &mut partial);
        partial
    });

    let mut out = Matrix::zeros(a.rows, b.cols);
    for (out_tile, group) in partials.chunks(per_output).enumerate() {
        let (r0, _) = row_tiles[out_tile / col_tiles.len()];
        let (c0, _) = col_tiles[out_tile % col_tiles.len()];
        let tile = parallel::cross_replica_sum(group).expect("partials of one tile share a shape");
        out.write_block(r0, c0, &tile);
    }
    Ok(out)
}

fn tile_bounds(total: usize, size: usize) -> Vec<(usize, usize)> {
    (0..total)
        .step_by(size)
        .map(|start| (start, size.min(total - start)))
        .collect()
}

/// Element-wise product.
pub fn hadamard<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    a.zip_with(b, |x, y| x * y)
}

/// Regularized element-wise division `num * conj(den) / (|den|^2 + lambda)`.
///
/// With `lambda == 0` this is exact complex division and fails on the first
/// (row-major) vanishing element of `den`.
pub fn hadamard_div(
    num: &ComplexMatrix,
    den: &ComplexMatrix,
    lambda: f64,
) -> Result<ComplexMatrix, LinalgError> {
    num.check_same_shape(den)?;
    // NaN fails this check too.
    if lambda.is_nan() || lambda < 0.0 {
        return Err(LinalgError::NegativeLambda(lambda));
    }
    if lambda == 0.0 {
        if let Some(idx) = den.data.iter().position(|d| d.norm_sqr() == 0.0) {
            return Err(LinalgError::SingularSpectrum {
                row: idx / den.cols,
                col: idx % den.cols,
            });
        }
        return num.zip_with(den, |n, d| n / d);
    }
    num.zip_with(den, |n, d| n * d.conj() / (d.norm_sqr() + lambda))
}

/// Default regularization for [`hadamard_div`]: `1e-9 * max |den|^2`.
pub fn default_lambda(den: &ComplexMatrix) -> f64 {
    1e-9 * den.data.iter().fold(0.0_f64, |m, d| m.max(d.norm_sqr()))
}

/// LU factorization (partial pivoting) of an explicitly formed Vandermonde
/// matrix, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct VandermondeSystem {
    nodes: Vec<f64>,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl VandermondeSystem {
    pub fn new(nodes: &[f64]) -> Result<Self, LinalgError> {
        let n = nodes.len();
        if n > MAX_VANDERMONDE_LEN {
            return Err(LinalgError::DegreeLimit {
                len: n,
                max: MAX_VANDERMONDE_LEN,
            });
        }
        if n == 0 {
            return Err(LinalgError::EmptyMatrix { rows: 0, cols: 0 });
        }
        for i in 0..n {
            for j in i + 1..n {
                if nodes[i] == nodes[j] {
                    return Err(LinalgError::SingularMatrix(format!(
                        "duplicate interpolation node {} at positions {i} and {j}",
                        nodes[i]
                    )));
                }
            }
        }

        // V[i][j] = nodes[i]^j
        let mut lu = vec![0.0; n * n];
        for (i, &x) in nodes.iter().enumerate() {
            let mut p = 1.0;
            for j in 0..n {
                lu[i * n + j] = p;
                p *= x;
            }
        }

        let mut pivots: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| lu[r * n + col].abs().total_cmp(&lu[s * n + col].abs()))
                .unwrap();
            if lu[pivot_row * n + col] == 0.0 {
                return Err(LinalgError::SingularMatrix(format!(
                    "zero pivot in column {col}"
                )));
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                pivots.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for j in col + 1..n {
                    lu[r * n + j] -= factor * lu[col * n + j];
                }
            }
        }

        Ok(Self {
            nodes: nodes.to_vec(),
            lu,
            pivots,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Coefficients `a_0..a_n` (ascending powers) interpolating `values`.
    ///
    /// One step of iterative refinement against the explicit matrix follows
    /// the LU solve; uniform nodes lose several digits past degree 10
    /// without it.
    pub fn solve(&self, values: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.nodes.len();
        if values.len() != n {
            return Err(LinalgError::LengthMismatch {
                nodes: n,
                values: values.len(),
            });
        }
        let mut coeffs = self.lu_solve(values);
        let residual: Vec<f64> = self
            .nodes
            .iter()
            .zip(values)
            .map(|(&x, &y)| y - poly_eval(&coeffs, x))
            .collect();
        for (c, d) in coeffs.iter_mut().zip(self.lu_solve(&residual)) {
            *c += d;
        }
        Ok(coeffs)
    }

    fn lu_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut x: Vec<f64> = self.pivots.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Polynomial interpolation through `(nodes[i], values[i])` by solving the
/// Vandermonde system directly.
pub fn vandermonde_solve(nodes: &[f64], values: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if nodes.len() != values.len() {
        return Err(LinalgError::LengthMismatch {
            nodes: nodes.len(),
            values: values.len(),
        });
    }
    VandermondeSystem::new(nodes)?.solve(values)
}

/// Horner evaluation of ascending-power coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        Matrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    // Independent (i, j, k) dot-product formulation.
    fn naive_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..a.cols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn deserialization_checks_invariants() {
        let ok: RealMatrix =
            serde_json::from_str(r#"{"rows":1,"cols":2,"data":[1.0,2.0]}"#).unwrap();
        assert_eq!(ok.shape(), (1, 2));
        assert!(serde_json::from_str::<RealMatrix>(r#"{"rows":2,"cols":2,"data":[1.0]}"#).is_err());
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(matches!(
            RealMatrix::new(0, 3, vec![]),
            Err(LinalgError::EmptyMatrix { .. })
        ));
        assert!(matches!(
            RealMatrix::new(2, 2, vec![1.0; 3]),
            Err(LinalgError::DataLength { len: 3, .. })
        ));
    }

    #[test]
    fn matmul_identity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_complex(&mut rng, 3, 3);
        assert_eq!(matmul(&ComplexMatrix::identity(3), &m).unwrap(), m);

        let b = random_complex(&mut rng, 3, 4);
        let z = matmul(&ComplexMatrix::zeros(2, 3), &b).unwrap();
        assert_eq!(z, ComplexMatrix::zeros(2, 4));
    }

    #[test]
    fn matmul_matches_naive_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex(&mut rng, 5, 4);
        let b = random_complex(&mut rng, 4, 6);
        // Both accumulate each entry over k in ascending order starting from 0.
        assert_eq!(matmul(&a, &b).unwrap(), naive_product(&a, &b));
    }

    #[test]
    fn matmul_shape_error_carries_both_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert_eq!(
            matmul(&a, &b).unwrap_err(),
            LinalgError::ShapeMismatch {
                left: (2, 3),
                right: (2, 3)
            }
        );
    }

    #[test]
    fn block_matmul_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_complex(&mut rng, 4, 4);
        let out = block_matmul(
            &ComplexMatrix::identity(4),
            &b,
            BlockSpec::new(2, 2).unwrap(),
            2,
        )
        .unwrap();
        assert!(out.sub(&b).unwrap().frobenius_norm() <= 1e-12);
    }

    #[test]
    fn block_matmul_non_divisible_tiling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_complex(&mut rng, 8, 8);
        let b = random_complex(&mut rng, 8, 8);
        let reference = naive_product(&a, &b);
        let tiled = block_matmul(
            &a,
            &b,
            BlockSpec {
                block_rows: 3,
                block_cols: 3,
            },
            4,
        )
        .unwrap();
        let err = tiled.sub(&reference).unwrap().frobenius_norm();
        assert!(
            err <= 1e-12 * (1.0 + reference.frobenius_norm()),
            "err = {err}"
        );
    }

    #[test]
    fn block_matmul_worker_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_complex(&mut rng, 13, 9);
        let b = random_complex(&mut rng, 9, 11);
        let spec = BlockSpec::new(4, 2).unwrap();
        let one = block_matmul(&a, &b, spec, 1).unwrap();
        let eight = block_matmul(&a, &b, spec, 8).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn block_matmul_errors() {
        let a = ComplexMatrix::zeros(2, 2);
        assert!(matches!(
            block_matmul(
                &a,
                &a,
                BlockSpec {
                    block_rows: 0,
                    block_cols: 1
                },
                1
            ),
            Err(LinalgError::ZeroBlock { .. })
        ));
        assert!(matches!(
            block_matmul(
                &a,
                &ComplexMatrix::zeros(3, 2),
                BlockSpec::new(1, 1).unwrap(),
                1
            ),
            Err(LinalgError::ShapeMismatch { .. })
        ));
        assert_eq!(
            block_matmul(&a, &a, BlockSpec::new(1, 1).unwrap(), 0),
            Err(LinalgError::ZeroWorkers)
        );
    }

    #[test]
    fn hadamard_div_self_is_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_complex(&mut rng, 3, 4);
        let q = hadamard_div(&m, &m, 0.0).unwrap();
        for v in q.data() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn hadamard_div_reports_zero_location() {
        let mut den = ComplexMatrix::from_fn(3, 4, |_, _| Complex64::new(1.0, 0.5));
        den[(1, 2)] = Complex64::new(0.0, 0.0);
        let num = ComplexMatrix::from_fn(3, 4, |_, _| Complex64::new(1.0, 0.0));
        assert_eq!(
            hadamard_div(&num, &den, 0.0).unwrap_err(),
            LinalgError::SingularSpectrum { row: 1, col: 2 }
        );
        // Any positive lambda makes the division total.
        let q = hadamard_div(&num, &den, 1e-3).unwrap();
        assert_eq!(q[(1, 2)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hadamard_div_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let num = random_complex(&mut rng, 5, 5);
        let den = random_complex(&mut rng, 5, 5);
        let back = hadamard(&hadamard_div(&num, &den, 0.0).unwrap(), &den).unwrap();
        let err = back.sub(&num).unwrap().frobenius_norm();
        assert!(err <= 1e-12 * num.frobenius_norm());
    }

    #[test]
    fn vandermonde_small_cases() {
        let c = vandermonde_solve(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        for (got, want) in c.iter().zip([1.0, 0.0, 0.0]) {
            assert!((got - want).abs() <= 1e-12);
        }
        let p = |x: f64| 2.0 + 3.0 * x - x * x;
        let c = vandermonde_solve(&[0.0, 1.0, 2.0], &[p(0.0), p(1.0), p(2.0)]).unwrap();
        for (got, want) in c.iter().zip([2.0, 3.0, -1.0]) {
            assert!((got - want).abs() <= 1e-10);
        }
    }

    // Gauss-Jordan elimination on the augmented matrix, no pivoting reuse.
    fn gauss_jordan(nodes: &[f64], values: &[f64]) -> Vec<f64> {
        let n = nodes.len();
        let mut m: Vec<Vec<f64>> = nodes
            .iter()
            .zip(values)
            .map(|(&x, &y)| {
                let mut row: Vec<f64> = (0..n).map(|j| x.powi(j as i32)).collect();
                row.push(y);
                row
            })
            .collect();
        for col in 0..n {
            let p = (col..n)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
                .unwrap();
            m.swap(col, p);
            let pivot = m[col][col];
            for v in m[col].iter_mut() {
                *v /= pivot;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r][col];
                    let pivot_row = m[col].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        m.into_iter().map(|row| row[n]).collect()
    }

    #[test]
    fn vandermonde_matches_second_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let nodes: Vec<f64> = (0..9)
            .map(|i| -1.0 + i as f64 / 4.0 + rng.gen_range(0.0..0.1))
            .collect();
        let values: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ours = vandermonde_solve(&nodes, &values).unwrap();
        let theirs = gauss_jordan(&nodes, &values);
        let diff = ours
            .iter()
            .zip(&theirs)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-8, "max coefficient difference {diff}");
    }

    #[test]
    fn vandermonde_errors() {
        assert!(matches!(
            vandermonde_solve(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(LinalgError::SingularMatrix(_))
        ));
        let nodes: Vec<f64> = (0..33).map(|i| i as f64).collect();
        assert!(matches!(
            vandermonde_solve(&nodes, &nodes),
            Err(LinalgError::DegreeLimit { len: 33, max: 32 })
        ));
        assert!(matches!(
            vandermonde_solve(&[0.0, 1.0], &[1.0]),
            Err(LinalgError::LengthMismatch { .. })
        ));
    }
}
