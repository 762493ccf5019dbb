//! Closed-form distillation of a model into a single circular-convolution
//! kernel, plus block-wise contribution factors.
//!
//! Given training input `x` and target `y`, the kernel solving `x (*) k = y`
//! is `k = F^-1(F(y) / (sqrt(MN) F(x)))`, with the spectral division
//! regularized by `lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{dft2d_decomposed, idft2d, FourierError};
use crate::linalg::{default_lambda, hadamard, hadamard_div, LinalgError};
use crate::{ComplexMatrix, RealMatrix};

/// Imaginary residue above `IMAG_TOLERANCE * ||k||` is flagged on the kernel.
pub const IMAG_TOLERANCE: f64 = 1e-6;

/// With `lambda == 0`, spectrum entries at or below this fraction of the
/// largest magnitude count as vanishing.
pub const VANISHING_SPECTRUM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistillError {
    #[error("input is {x:?} but target is {y:?}")]
    ShapeMismatch {
        x: (usize, usize),
        y: (usize, usize),
    },

    #[error(
        "spectrum of the input vanishes at ({row}, {col}); pass a positive lambda to regularize"
    )]
    SingularSpectrum { row: usize, col: usize },

    #[error("block {block_rows}x{block_cols} does not fit a {rows}x{cols} input")]
    BlockSize {
        block_rows: usize,
        block_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("no training pairs")]
    NoPairs,

    #[error(transparent)]
    Linalg(LinalgError),

    #[error(transparent)]
    Fourier(#[from] FourierError),
}

impl From<LinalgError> for DistillError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::SingularSpectrum { row, col } => {
                DistillError::SingularSpectrum { row, col }
            }
            other => DistillError::Linalg(other),
        }
    }
}

/// Fitted surrogate kernel with its fit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistilledKernel {
    pub kernel: RealMatrix,
    pub lambda_used: f64,
    /// `||x (*) kernel - y||_F`.
    pub residual: f64,
    /// Frobenius norm of the discarded imaginary part of the inverse transform.
    pub imag_residue: f64,
    /// Whether `imag_residue` exceeded `IMAG_TOLERANCE * ||kernel||_F`.
    pub imag_residue_flagged: bool,
}

/// Block-wise contribution scores laid out on the block grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionMap {
    pub scores: RealMatrix,
    pub block_rows: usize,
    pub block_cols: usize,
}

fn check_shapes(x: &RealMatrix, y: &RealMatrix) -> Result<(), DistillError> {
    if x.shape() != y.shape() {
        return Err(DistillError::ShapeMismatch {
            x: x.shape(),
            y: y.shape(),
        });
    }
    Ok(())
}

/// 2-D circular convolution by direct double sum:
/// `(x (*) k)[i, j] = sum_{a,b} x[a, b] k[(i - a) mod M, (j - b) mod N]`.
pub fn circconv(x: &RealMatrix, k: &RealMatrix) -> Result<RealMatrix, DistillError> {
    check_shapes(x, k)?;
    let (m, n) = x.shape();
    let mut out = RealMatrix::zeros(m, n);
    for a in 0..m {
        for b in 0..n {
            let xv = x[(a, b)];
            if xv == 0.0 {
                continue;
            }
            for i in 0..m {
                let kr = k.row((i + m - a) % m);
                let out_row = out.row_mut(i);
                for (j, o) in out_row.iter_mut().enumerate() {
                    *o += xv * kr[(j + n - b) % n];
                }
            }
        }
    }
    Ok(out)
}

fn spectrum(x: &RealMatrix, workers: usize) -> Result<ComplexMatrix, DistillError> {
    Ok(dft2d_decomposed(&x.to_complex(), workers)?)
}

fn sqrt_mn(x: &RealMatrix) -> Complex64 {
    Complex64::new(((x.rows() * x.cols()) as f64).sqrt(), 0.0)
}

/// Convolves with a precomputed scaled kernel spectrum `sqrt(MN) F(k)`.
fn circconv_with_spectrum(
    x: &RealMatrix,
    scaled_kernel_spectrum: &ComplexMatrix,
    workers: usize,
) -> Result<RealMatrix, DistillError> {
    let product = hadamard(&spectrum(x, workers)?, scaled_kernel_spectrum)?;
    Ok(idft2d(&product, workers)?.re())
}

/// Circular convolution through the transform domain,
/// `F^-1(sqrt(MN) F(x) o F(k))`.
pub fn circconv_spectral(
    x: &RealMatrix,
    k: &RealMatrix,
    workers: usize,
) -> Result<RealMatrix, DistillError> {
    check_shapes(x, k)?;
    let fk = spectrum(k, workers)?.scale(sqrt_mn(k));
    circconv_with_spectrum(x, &fk, workers)
}

/// Solves `x (*) k = y` for `k` in the transform domain.
///
/// `lambda = None` uses `1e-9 * max |sqrt(MN) F(x)|^2`; `Some(0.0)` demands
/// exact division and fails on a vanishing spectrum.
pub fn fit_kernel(
    x: &RealMatrix,
    y: &RealMatrix,
    lambda: Option<f64>,
    workers: usize,
) -> Result<DistilledKernel, DistillError> {
    check_shapes(x, y)?;
    let scale = sqrt_mn(x);
    let fx = spectrum(x, workers)?.scale(scale);
    let fy = spectrum(y, workers)?;
    let lambda = lambda.unwrap_or_else(|| default_lambda(&fx));
    if lambda == 0.0 {
        let peak = fx.data().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        if let Some(idx) = fx
            .data()
            .iter()
            .position(|v| v.norm() <= VANISHING_SPECTRUM * peak)
        {
            return Err(DistillError::SingularSpectrum {
                row: idx / fx.cols(),
                col: idx % fx.cols(),
            });
        }
    }
    let quotient = hadamard_div(&fy, &fx, lambda)?;
    let k = idft2d(&quotient, workers)?;

    let kernel = k.re();
    let imag_residue = k.im().frobenius_norm();
    let imag_residue_flagged = imag_residue > IMAG_TOLERANCE * kernel.frobenius_norm();

    // Residual through the same spectral route: x (*) kernel - y.
    let fk = spectrum(&kernel, workers)?.scale(scale);
    let fitted = circconv_with_spectrum(x, &fk, workers)?;
    let residual = fitted.sub(y)?.frobenius_norm();

    Ok(DistilledKernel {
        kernel,
        lambda_used: lambda,
        residual,
        imag_residue,
        imag_residue_flagged,
    })
}

/// Fits every `(x, y)` pair independently and averages the kernels.
///
/// The reported residual is the largest per-pair residual of the averaged
/// kernel, and `lambda_used` the largest lambda any pair used.
pub fn fit_kernel_pairs(
    pairs: &[(RealMatrix, RealMatrix)],
    lambda: Option<f64>,
    workers: usize,
) -> Result<DistilledKernel, DistillError> {
    let (first_x, _) = pairs.first().ok_or(DistillError::NoPairs)?;
    let shape = first_x.shape();
    let mut sum = RealMatrix::zeros(shape.0, shape.1);
    let mut lambda_used = 0.0_f64;
    let mut imag_residue = 0.0_f64;
    let mut imag_residue_flagged = false;
    for (x, y) in pairs {
        check_shapes(first_x, x)?;
        let fit = fit_kernel(x, y, lambda, workers)?;
        sum = sum.add(&fit.kernel)?;
        lambda_used = lambda_used.max(fit.lambda_used);
        imag_residue = imag_residue.max(fit.imag_residue);
        imag_residue_flagged |= fit.imag_residue_flagged;
    }
    let kernel = sum.scale(1.0 / pairs.len() as f64);

    let fk = spectrum(&kernel, workers)?.scale(sqrt_mn(&kernel));
    let mut residual = 0.0_f64;
    for (x, y) in pairs {
        let r = circconv_with_spectrum(x, &fk, workers)?
            .sub(y)?
            .frobenius_norm();
        residual = residual.max(r);
    }
    Ok(DistilledKernel {
        kernel,
        lambda_used,
        residual,
        imag_residue,
        imag_residue_flagged,
    })
}

/// `(row, col, rows, cols)` of one block.
pub type BlockRect = (usize, usize, usize, usize);

/// Grid extent and row-major block rectangles tiling an `m x n` input.
pub fn block_grid(
    m: usize,
    n: usize,
    block_rows: usize,
    block_cols: usize,
) -> Result<(usize, usize, Vec<BlockRect>), DistillError> {
    if block_rows == 0 || block_cols == 0 || block_rows > m || block_cols > n {
        return Err(DistillError::BlockSize {
            block_rows,
            block_cols,
            rows: m,
            cols: n,
        });
    }
    let grid_rows = m.div_ceil(block_rows);
    let grid_cols = n.div_ceil(block_cols);
    let mut blocks = Vec::with_capacity(grid_rows * grid_cols);
    for br in 0..grid_rows {
        for bc in 0..grid_cols {
            let r0 = br * block_rows;
            let c0 = bc * block_cols;
            blocks.push((r0, c0, block_rows.min(m - r0), block_cols.min(n - c0)));
        }
    }
    Ok((grid_rows, grid_cols, blocks))
}

/// Contribution factor of each block: `||y - x' (*) k||_F` where `x'` is `x`
/// with that block zeroed.
///
/// A block that is already zero in `x` cannot be removed and scores exactly 0.
/// Trailing blocks may be smaller when the block size does not divide the
/// input.
pub fn contribution_map(
    x: &RealMatrix,
    y: &RealMatrix,
    kernel: &DistilledKernel,
    block_rows: usize,
    block_cols: usize,
    workers: usize,
) -> Result<ContributionMap, DistillError> {
    check_shapes(x, y)?;
    check_shapes(x, &kernel.kernel)?;
    let (m, n) = x.shape();
    let (grid_rows, grid_cols, blocks) = block_grid(m, n, block_rows, block_cols)?;
    let fk = spectrum(&kernel.kernel, workers)?.scale(sqrt_mn(x));

    let mut scores = RealMatrix::zeros(grid_rows, grid_cols);
    for (idx, &(r0, c0, rn, cn)) in blocks.iter().enumerate() {
        if x.submatrix(r0, c0, rn, cn).is_all_zero() {
            continue;
        }
        let mut masked = x.clone();
        masked.write_block(r0, c0, &RealMatrix::zeros(rn, cn));
        let perturbed = circconv_with_spectrum(&masked, &fk, workers)?;
        scores[(idx / grid_cols, idx % grid_cols)] = y.sub(&perturbed)?.frobenius_norm();
    }
    Ok(ContributionMap {
        scores,
        block_rows,
        block_cols,
    })
}

/// Top `top_k` blocks by descending score; ties go to the lower row-major
/// block index.
pub fn rank_features(map: &ContributionMap, top_k: usize) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = map.scores.data().iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_k.max(1).min(ranked.len()));
    ranked
}
