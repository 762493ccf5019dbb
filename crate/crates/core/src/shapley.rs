//! Exact Shapley values for coalition games stored as structure vectors.
//!
//! A game over `n` players is the table of `v(S)` for all `2^n` subsets,
//! indexed by bitmask (bit `i` set means player `i` is in `S`). Three
//! independent evaluations are provided:
//!
//! * [`shapley_permutation`]: average marginal contribution over all `n!`
//!   join orders.
//! * [`shapley_subset`]: the weighted sum over subsets
//!   `phi_i = sum_{S not containing i} |S|!(n-|S|-1)!/n! [v(S+i) - v(S)]`.
//! * [`shapley_matrix`]: the same sum written as one product `phi = A C_v`
//!   with an explicit `n x 2^n` weight matrix `A`, executed through
//!   [`block_matmul`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{block_matmul, BlockSpec, LinalgError};
use crate::models::{DifferentiableModel, ModelError};
use crate::RealMatrix;

/// Largest game accepted anywhere (structure vector of 2^20 entries).
pub const MAX_PLAYERS: usize = 20;

/// Largest game accepted by [`shapley_permutation`].
pub const MAX_PERMUTATION_PLAYERS: usize = 8;

/// Inner-dimension tile width used by [`shapley_matrix`]. Fixed so results
/// do not depend on the worker count.
const MATRIX_BLOCK_COLS: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapleyError {
    #[error("{n} players exceeds the limit of {max}{hint}")]
    TooManyPlayers {
        n: usize,
        max: usize,
        hint: &'static str,
    },

    #[error("games need at least one player")]
    NoPlayers,

    #[error("structure vector has {got} entries, expected 2^{n} = {expected}")]
    StructureLength {
        n: usize,
        expected: usize,
        got: usize,
    },

    #[error("structure vector entry {mask:#b} is not finite")]
    NonFinite { mask: usize },

    #[error("input has {x} features, baseline {baseline}, model arity {arity}")]
    Arity {
        x: usize,
        baseline: usize,
        arity: usize,
    },

    #[error("model evaluation failed for coalition {mask:#b}: {source}")]
    Model {
        mask: usize,
        #[source]
        source: ModelError,
    },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapleyForm {
    Permutation,
    Subset,
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalitionGame {
    n_players: usize,
    structure: Vec<f64>,
}

impl CoalitionGame {
    pub fn new(n_players: usize, structure: Vec<f64>) -> Result<Self, ShapleyError> {
        check_players(n_players, MAX_PLAYERS, "")?;
        let expected = 1usize << n_players;
        if structure.len() != expected {
            return Err(ShapleyError::StructureLength {
                n: n_players,
                expected,
                got: structure.len(),
            });
        }
        if let Some(mask) = structure.iter().position(|v| !v.is_finite()) {
            return Err(ShapleyError::NonFinite { mask });
        }
        Ok(Self {
            n_players,
            structure,
        })
    }

    pub fn from_fn(n_players: usize, f: impl FnMut(usize) -> f64) -> Result<Self, ShapleyError> {
        check_players(n_players, MAX_PLAYERS, "")?;
        Self::new(n_players, (0..1usize << n_players).map(f).collect())
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn structure_vector(&self) -> &[f64] {
        &self.structure
    }

    #[inline]
    pub fn value(&self, mask: usize) -> f64 {
        self.structure[mask]
    }

    fn grand_coalition(&self) -> usize {
        (1usize << self.n_players) - 1
    }

    fn finish(&self, phi: Vec<f64>) -> ShapleyVector {
        let total = self.value(self.grand_coalition()) - self.value(0);
        let efficiency_gap = (phi.iter().sum::<f64>() - total).abs();
        ShapleyVector {
            phi,
            efficiency_gap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    pub phi: Vec<f64>,
    /// `|sum phi - (v(N) - v(empty))|`.
    pub efficiency_gap: f64,
}

fn check_players(n: usize, max: usize, hint: &'static str) -> Result<(), ShapleyError> {
    if n == 0 {
        return Err(ShapleyError::NoPlayers);
    }
    if n > max {
        return Err(ShapleyError::TooManyPlayers { n, max, hint });
    }
    Ok(())
}

/// Marginal-contribution weight `s! (n - s - 1)! / n!` for every coalition
/// size `s < n`, computed as `1 / (n * C(n-1, s))`.
pub fn subset_weights(n: usize) -> Vec<f64> {
    let mut binom = 1.0_f64;
    (0..n)
        .map(|s| {
            if s > 0 {
                binom = binom * (n - s) as f64 / s as f64;
            }
            1.0 / (n as f64 * binom)
        })
        .collect()
}

/// Averages marginal contributions over every join order (Heap's algorithm).
pub fn shapley_permutation(game: &CoalitionGame) -> Result<ShapleyVector, ShapleyError> {
    let n = game.n_players;
    check_players(n, MAX_PERMUTATION_PLAYERS, "; use the subset form")?;

    let mut totals = vec![0.0; n];
    let mut count = 0usize;
    let mut visit = |order: &[usize]| {
        let mut mask = 0usize;
        for &player in order {
            let joined = mask | (1 << player);
            totals[player] += game.value(joined) - game.value(mask);
            mask = joined;
        }
        count += 1;
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&order);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let phi = totals.into_iter().map(|t| t / count as f64).collect();
    Ok(game.finish(phi))
}

/// Direct evaluation of the subset-weighted Shapley formula.
pub fn shapley_subset(game: &CoalitionGame) -> Result<ShapleyVector, ShapleyError> {
    let n = game.n_players;
    let weights = subset_weights(n);
    let phi = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = 0.0;
            for mask in 0..1usize << n {
                if mask & bit == 0 {
                    let s = mask.count_ones() as usize;
                    acc += weights[s] * (game.value(mask | bit) - game.value(mask));
                }
            }
            acc
        })
        .collect();
    Ok(game.finish(phi))
}

/// The `n x 2^n` attribution matrix with `phi = A C_v`:
/// `A[i, S] = w(|S| - 1)` if `i` is in `S`, else `-w(|S|)`.
pub fn attribution_matrix(n: usize) -> Result<RealMatrix, ShapleyError> {
    check_players(n, MAX_PLAYERS, "")?;
    let weights = subset_weights(n);
    Ok(RealMatrix::from_fn(n, 1 << n, |i, mask| {
        let s = mask.count_ones() as usize;
        if mask & (1 << i) != 0 {
            weights[s - 1]
        } else {
            -weights[s]
        }
    }))
}

/// Shapley values as one block-tiled matrix-vector product.
pub fn shapley_matrix(game: &CoalitionGame, workers: usize) -> Result<ShapleyVector, ShapleyError> {
    let n = game.n_players;
    let a = attribution_matrix(n)?;
    let cv = RealMatrix::new(1 << n, 1, game.structure.clone())?;
    let spec = BlockSpec::new(n, MATRIX_BLOCK_COLS)?;
    let phi = block_matmul(&a, &cv, spec, workers)?.into_vec();
    Ok(game.finish(phi))
}

pub fn shapley(
    game: &CoalitionGame,
    form: ShapleyForm,
    workers: usize,
) -> Result<ShapleyVector, ShapleyError> {
    match form {
        ShapleyForm::Permutation => shapley_permutation(game),
        ShapleyForm::Subset => shapley_subset(game),
        ShapleyForm::Matrix => shapley_matrix(game, workers),
    }
}

/// Game whose coalition value is the model output with absent features
/// replaced by the baseline: `v(S) = F(z_S)`.
pub fn game_from_model<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
) -> Result<CoalitionGame, ShapleyError> {
    let n = x.len();
    if baseline.len() != n || model.arity() != n {
        return Err(ShapleyError::Arity {
            x: n,
            baseline: baseline.len(),
            arity: model.arity(),
        });
    }
    check_players(n, MAX_PLAYERS, "")?;
    let mut z = baseline.to_vec();
    let structure = (0..1usize << n)
        .map(|mask| {
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = if mask & (1 << i) != 0 {
                    x[i]
                } else {
                    baseline[i]
                };
            }
            model
                .evaluate(&z)
                .map_err(|source| ShapleyError::Model { mask, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    CoalitionGame::new(n, structure)
}
