//! Unitary 1-D and 2-D discrete Fourier transforms in matrix form.
//!
//! Every transform here uses the `1/sqrt(M)` per-axis normalization, so the
//! 2-D transform carries `1/sqrt(MN)` overall and the decomposed form
//! `X = (W_M x) W_N` matches the direct double sum exactly. Under this
//! normalization the convolution theorem reads
//! `F(x (*) k) = sqrt(MN) * F(x) o F(k)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::parallel::{self, apply_along, Axis, ParallelError};
use crate::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("transform size must be at least 1")]
    EmptySize,

    #[error(transparent)]
    Parallel(#[from] ParallelError),
}

impl From<LinalgError> for FourierError {
    fn from(e: LinalgError) -> Self {
        FourierError::Parallel(ParallelError::Linalg(e))
    }
}

/// `exp(-j 2 pi p / n)` with `p` reduced modulo `n` first, which keeps the
/// angle small and the entries accurate for large sizes.
#[inline]
fn twiddle(p: usize, n: usize) -> Complex64 {
    let angle = -2.0 * PI * (p % n) as f64 / n as f64;
    Complex64::from_polar(1.0, angle)
}

/// The `M x M` unitary DFT matrix, `W[k, m] = exp(-j 2 pi m k / M) / sqrt(M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DftMatrix {
    size: usize,
    matrix: ComplexMatrix,
}

impl DftMatrix {
    pub fn new(size: usize) -> Result<Self, FourierError> {
        if size == 0 {
            return Err(FourierError::EmptySize);
        }
        let scale = 1.0 / (size as f64).sqrt();
        let matrix = ComplexMatrix::from_fn(size, size, |k, m| twiddle(m * k, size) * scale);
        Ok(Self { size, matrix })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `W^H`, which equals `conj(W)` because `W` is symmetric.
    pub fn inverse_matrix(&self) -> ComplexMatrix {
        self.matrix.conj()
    }
}

pub fn dft_matrix(m: usize) -> Result<DftMatrix, FourierError> {
    DftMatrix::new(m)
}

/// Direct quadruple-loop evaluation of the normalized 2-D DFT.
///
/// `O(M^2 N^2)`; used as the reference for [`dft2d_decomposed`].
pub fn dft2d_direct(x: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = x.shape();
    let scale = 1.0 / ((m * n) as f64).sqrt();
    ComplexMatrix::from_fn(m, n, |k, l| {
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..n {
            let mut inner = Complex64::new(0.0, 0.0);
            for row in 0..m {
                inner += x[(row, col)] * twiddle(row * k, m);
            }
            acc += inner * twiddle(col * l, n);
        }
        acc * scale
    })
}

/// Two-stage row/column transform with the given DFT matrices.
///
/// Stage one splits rows across workers and multiplies each row slice by
/// `w_n`; stage two splits the columns of the merged intermediate and
/// multiplies each column slice by `w_m` from the left.
fn two_stage(
    x: &ComplexMatrix,
    w_m: &ComplexMatrix,
    w_n: &ComplexMatrix,
    workers: usize,
) -> Result<ComplexMatrix, FourierError> {
    let (m, n) = x.shape();
    let row_plan = parallel::plan_partition(m, workers, Axis::Rows)?;
    let intermediate = parallel::execute_plan(x, &row_plan, |s| apply_along(s, Axis::Rows, w_n))?;
    let col_plan = parallel::plan_partition(n, workers, Axis::Cols)?;
    Ok(parallel::execute_plan(&intermediate, &col_plan, |s| {
        apply_along(s, Axis::Cols, w_m)
    })?)
}

/// 2-D DFT computed as `(W_M x) W_N` with rows, then columns, split across
/// `workers` threads. Bit-identical for any worker count.
pub fn dft2d_decomposed(x: &ComplexMatrix, workers: usize) -> Result<ComplexMatrix, FourierError> {
    let w_m = DftMatrix::new(x.rows())?;
    let w_n = DftMatrix::new(x.cols())?;
    two_stage(x, w_m.matrix(), w_n.matrix(), workers)
}

/// Inverse of [`dft2d_decomposed`], using the conjugated DFT matrices.
pub fn idft2d(x: &ComplexMatrix, workers: usize) -> Result<ComplexMatrix, FourierError> {
    let w_m = DftMatrix::new(x.rows())?.inverse_matrix();
    let w_n = DftMatrix::new(x.cols())?.inverse_matrix();
    two_stage(x, &w_m, &w_n, workers)
}
