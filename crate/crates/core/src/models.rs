//! Toy differentiable models used as explanation subjects and fixture
//! generators. Every kind has an exact analytic gradient.
//!
//! Models serialize to JSON with a `kind` tag and flat weight arrays:
//!
//! ```json
//! {"kind": "linear", "weights": [1.0, 2.0], "bias": 0.0}
//! {"kind": "logistic", "weights": [0.5, -1.0], "bias": 0.1}
//! {"kind": "polynomial", "arity": 2, "terms": [{"coef": 1.0, "powers": [4, 0]}]}
//! {"kind": "conv2d-score", "rows": 2, "cols": 2, "kernel": [..4], "readout": [..4], "bias": 0.0}
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distill::circconv;
use crate::fourier::dft2d_decomposed;
use crate::RealMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model expects {expected} features, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid model parameters: {0}")]
    Invalid(String),

    #[error("non-finite model output")]
    NonFinite,
}

/// A scalar function of `arity` features with an exact gradient.
pub trait DifferentiableModel: Sync {
    fn arity(&self) -> usize;

    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError>;

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>, ModelError>;

    fn check_arity(&self, z: &[f64]) -> Result<(), ModelError> {
        if z.len() != self.arity() {
            return Err(ModelError::Arity {
                expected: self.arity(),
                got: z.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    /// `w . z + b`
    Linear {
        weights: Vec<f64>,
        #[serde(default)]
        bias: f64,
    },
    /// `sigmoid(w . z + b)`
    Logistic {
        weights: Vec<f64>,
        #[serde(default)]
        bias: f64,
    },
    /// Sum of monomials `coef * prod z_i^p_i`.
    Polynomial { arity: usize, terms: Vec<Monomial> },
    /// Input reshaped to `rows x cols`, circularly convolved with `kernel`,
    /// passed through `tanh`, then weighted by `readout`:
    /// `sum_ij readout[i,j] * tanh((z (*) kernel)[i,j]) + b`.
    #[serde(rename = "conv2d-score")]
    Conv2dScore {
        rows: usize,
        cols: usize,
        kernel: Vec<f64>,
        readout: Vec<f64>,
        #[serde(default)]
        bias: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Linear,
    Logistic,
    Polynomial,
    Conv2dScore,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear { .. } => ModelKind::Linear,
            Model::Logistic { .. } => ModelKind::Logistic,
            Model::Polynomial { .. } => ModelKind::Polynomial,
            Model::Conv2dScore { .. } => ModelKind::Conv2dScore,
        }
    }

    /// Checks the parameter shapes a deserialized model cannot guarantee.
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Model::Linear { weights, bias } | Model::Logistic { weights, bias } => {
                if weights.is_empty() {
                    return Err(ModelError::Invalid("weights must be nonempty".into()));
                }
                if !finite(weights) || !bias.is_finite() {
                    return Err(ModelError::Invalid("parameters must be finite".into()));
                }
            }
            Model::Polynomial { arity, terms } => {
                if *arity == 0 {
                    return Err(ModelError::Invalid("arity must be positive".into()));
                }
                for (i, t) in terms.iter().enumerate() {
                    if t.powers.len() != *arity {
                        return Err(ModelError::Invalid(format!(
                            "term {i} has {} powers, expected {arity}",
                            t.powers.len()
                        )));
                    }
                    if !t.coef.is_finite() {
                        return Err(ModelError::Invalid(format!("term {i} coefficient")));
                    }
                }
            }
            Model::Conv2dScore {
                rows,
                cols,
                kernel,
                readout,
                bias,
            } => {
                let n = rows * cols;
                if n == 0 || kernel.len() != n || readout.len() != n {
                    return Err(ModelError::Invalid(format!(
                        "conv2d-score needs {rows}x{cols} kernel and readout, got {} and {}",
                        kernel.len(),
                        readout.len()
                    )));
                }
                if !finite(kernel) || !finite(readout) || !bias.is_finite() {
                    return Err(ModelError::Invalid("parameters must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let model: Model =
            serde_json::from_str(s).map_err(|e| ModelError::Invalid(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    // Pre-activation conv map and the matrices involved.
    fn conv_parts(rows: usize, cols: usize, kernel: &[f64], z: &[f64]) -> (RealMatrix, RealMatrix) {
        let x = RealMatrix::new(rows, cols, z.to_vec()).expect("arity checked");
        let k = RealMatrix::new(rows, cols, kernel.to_vec()).expect("validated");
        let conv = circconv(&x, &k).expect("same shape");
        (conv, k)
    }
}

impl DifferentiableModel for Model {
    fn arity(&self) -> usize {
        match self {
            Model::Linear { weights, .. } | Model::Logistic { weights, .. } => weights.len(),
            Model::Polynomial { arity, .. } => *arity,
            Model::Conv2dScore { rows, cols, .. } => rows * cols,
        }
    }

    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError> {
        self.check_arity(z)?;
        let out = match self {
            Model::Linear { weights, bias } => dot(weights, z) + bias,
            Model::Logistic { weights, bias } => sigmoid(dot(weights, z) + bias),
            Model::Polynomial { terms, .. } => terms
                .iter()
                .map(|t| {
                    t.coef
                        * t.powers
                            .iter()
                            .zip(z)
                            .map(|(&p, &v)| v.powi(p as i32))
                            .product::<f64>()
                })
                .sum(),
            Model::Conv2dScore {
                rows,
                cols,
                kernel,
                readout,
                bias,
            } => {
                let (conv, _) = Self::conv_parts(*rows, *cols, kernel, z);
                conv.data()
                    .iter()
                    .zip(readout)
                    .map(|(c, r)| r * c.tanh())
                    .sum::<f64>()
                    + bias
            }
        };
        if !out.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok(out)
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_arity(z)?;
        Ok(match self {
            Model::Linear { weights, .. } => weights.clone(),
            Model::Logistic { weights, bias } => {
                let s = sigmoid(dot(weights, z) + bias);
                let ds = s * (1.0 - s);
                weights.iter().map(|w| w * ds).collect()
            }
            Model::Polynomial { arity, terms } => {
                let mut g = vec![0.0; *arity];
                for t in terms {
                    for (i, gi) in g.iter_mut().enumerate() {
                        let p = t.powers[i];
                        if p == 0 {
                            continue;
                        }
                        let rest: f64 = t
                            .powers
                            .iter()
                            .zip(z)
                            .enumerate()
                            .map(|(j, (&pj, &v))| {
                                if j == i {
                                    p as f64 * v.powi(p as i32 - 1)
                                } else {
                                    v.powi(pj as i32)
                                }
                            })
                            .product();
                        *gi += t.coef * rest;
                    }
                }
                g
            }
            Model::Conv2dScore {
                rows,
                cols,
                kernel,
                readout,
                ..
            } => {
                // d/dz[a,b] = sum_ij u[i,j] k[(i-a) mod R, (j-b) mod C],
                // u = readout * sech^2(conv).
                let (conv, k) = Self::conv_parts(*rows, *cols, kernel, z);
                let (r, c) = (*rows, *cols);
                let u: Vec<f64> = conv
                    .data()
                    .iter()
                    .zip(readout)
                    .map(|(v, w)| {
                        let t = v.tanh();
                        w * (1.0 - t * t)
                    })
                    .collect();
                let mut g = vec![0.0; r * c];
                for a in 0..r {
                    for b in 0..c {
                        let mut acc = 0.0;
                        for i in 0..r {
                            for j in 0..c {
                                acc += u[i * c + j] * k[((i + r - a) % r, (j + c - b) % c)];
                            }
                        }
                        g[a * c + b] = acc;
                    }
                }
                g
            }
        })
    }
}

/// Model fixture with input, baseline and closed-form attributions where
/// they exist.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFixture {
    pub model: Model,
    pub x: Vec<f64>,
    pub baseline: Vec<f64>,
    /// Known Shapley values (linear models under baseline masking).
    pub expected_shapley: Option<Vec<f64>>,
    /// Known integrated gradients (linear models).
    pub expected_ig: Option<Vec<f64>>,
}

/// Distillation triple `y = x (*) kernel` with `|F(x)| >= MIN_SPECTRUM`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistillFixture {
    pub x: RealMatrix,
    pub kernel: RealMatrix,
    pub y: RealMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Fixture {
    Model(ModelFixture),
    Distill(DistillFixture),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    Model(ModelKind),
    Distill,
}

/// Lower bound on the unitary spectrum magnitude of distillation inputs.
pub const MIN_SPECTRUM: f64 = 0.1;

const MAX_SPECTRUM_ATTEMPTS: usize = 100_000;

/// Seeded, reproducible fixture.
///
/// `shape` is `(rows, cols)`; model kinds other than `conv2d-score` use
/// `rows * cols` features.
pub fn synth_fixture(
    kind: FixtureKind,
    seed: u64,
    shape: (usize, usize),
) -> Result<Fixture, ModelError> {
    match kind {
        FixtureKind::Model(k) => synth_model_fixture(k, seed, shape).map(Fixture::Model),
        FixtureKind::Distill => synth_distill_fixture(seed, shape.0, shape.1).map(Fixture::Distill),
    }
}

pub fn synth_model_fixture(
    kind: ModelKind,
    seed: u64,
    (rows, cols): (usize, usize),
) -> Result<ModelFixture, ModelError> {
    let n = rows * cols;
    if n == 0 {
        return Err(ModelError::Invalid("fixture shape must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize, scale: f64| -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
    };
    let x = draw(n, 1.0);
    let baseline = vec![0.0; n];
    let fixture = match kind {
        ModelKind::Linear => {
            let weights = draw(n, 2.0);
            let attributions: Vec<f64> = weights
                .iter()
                .zip(&x)
                .zip(&baseline)
                .map(|((w, xi), bi)| w * (xi - bi))
                .collect();
            ModelFixture {
                model: Model::Linear {
                    weights,
                    bias: draw(1, 1.0)[0],
                },
                x,
                baseline,
                expected_shapley: Some(attributions.clone()),
                expected_ig: Some(attributions),
            }
        }
        ModelKind::Logistic => ModelFixture {
            model: Model::Logistic {
                weights: draw(n, 1.0),
                bias: draw(1, 0.5)[0],
            },
            x,
            baseline,
            expected_shapley: None,
            expected_ig: None,
        },
        ModelKind::Polynomial => {
            // Up to 2n random monomials of total degree <= 6.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let terms = (0..2 * n)
                .map(|_| {
                    let mut powers = vec![0u32; n];
                    let degree = rng.gen_range(1..=6);
                    for _ in 0..degree {
                        powers[rng.gen_range(0..n)] += 1;
                    }
                    Monomial {
                        coef: rng.gen_range(-1.0..1.0),
                        powers,
                    }
                })
                .collect();
            ModelFixture {
                model: Model::Polynomial { arity: n, terms },
                x,
                baseline,
                expected_shapley: None,
                expected_ig: None,
            }
        }
        ModelKind::Conv2dScore => ModelFixture {
            model: Model::Conv2dScore {
                rows,
                cols,
                kernel: draw(n, 0.5),
                readout: draw(n, 1.0),
                bias: 0.0,
            },
            x,
            baseline,
            expected_shapley: None,
            expected_ig: None,
        },
    };
    Ok(fixture)
}

/// Draws `x` uniformly in `[-1, 1]` until every entry of its unitary 2-D
/// spectrum has magnitude at least [`MIN_SPECTRUM`].
pub fn synth_distill_fixture(
    seed: u64,
    rows: usize,
    cols: usize,
) -> Result<DistillFixture, ModelError> {
    if rows == 0 || cols == 0 {
        return Err(ModelError::Invalid("fixture shape must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = RealMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    for _ in 0..MAX_SPECTRUM_ATTEMPTS {
        let x = RealMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
        let spectrum = dft2d_decomposed(&x.to_complex(), 1).expect("nonempty");
        if spectrum.data().iter().all(|v| v.norm() >= MIN_SPECTRUM) {
            let y = circconv(&x, &kernel).expect("same shape");
            return Ok(DistillFixture { x, kernel, y });
        }
    }
    Err(ModelError::Invalid(format!(
        "no {rows}x{cols} input with spectrum >= {MIN_SPECTRUM} after {MAX_SPECTRUM_ATTEMPTS} draws"
    )))
}
