use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use matxai_core::distill::{contribution_map, fit_kernel, rank_features};
use matxai_core::intgrad::{ig_trapezoid, ig_vandermonde, IgMethod};
use matxai_core::models::DifferentiableModel;
use matxai_core::shapley::{game_from_model, shapley, ShapleyForm};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::io::{digest, parse_dims, parse_matrix, parse_model, read_bytes};
use crate::report::{nested_rows, Attributions, Method, RankedBlock, RunReport};

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Worker threads for the parallel kernels.
    #[arg(long, env = "XAI_WORKERS", default_value_t = 1,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct DistillArgs {
    /// Training input matrix (headerless CSV).
    #[arg(long)]
    pub input: PathBuf,

    /// Model output matrix for that input, same shape.
    #[arg(long)]
    pub output: PathBuf,

    /// Regularizer for the spectral division. Defaults to
    /// 1e-9 * max |sqrt(MN) F(x)|^2; 0 demands exact division.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Feature block size for contribution factors.
    #[arg(long, default_value = "1x1", value_parser = parse_dims)]
    pub block: (usize, usize),

    /// Number of ranked blocks to report.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Permutation,
    Subset,
    Matrix,
}

impl From<FormArg> for ShapleyForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Permutation => ShapleyForm::Permutation,
            FormArg::Subset => ShapleyForm::Subset,
            FormArg::Matrix => ShapleyForm::Matrix,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ModelInput {
    /// Model description (JSON).
    #[arg(long)]
    pub model: PathBuf,

    /// Input features (CSV, flattened row-major).
    #[arg(long)]
    pub input: PathBuf,

    /// Baseline features (CSV, flattened row-major). Defaults to zeros.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct ShapleyArgs {
    #[command(flatten)]
    pub model: ModelInput,

    #[arg(long, value_enum, default_value_t = FormArg::Matrix)]
    pub form: FormArg,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IgMethodArg {
    Trapezoid,
    Vandermonde,
}

#[derive(Args, Clone, Debug)]
pub struct IgArgs {
    #[command(flatten)]
    pub model: ModelInput,

    #[arg(long, value_enum, default_value_t = IgMethodArg::Trapezoid)]
    pub method: IgMethodArg,

    /// Trapezoid panels.
    #[arg(long, default_value_t = 50, conflicts_with = "degree")]
    pub steps: usize,

    /// Interpolation degree for the Vandermonde method.
    #[arg(long, default_value_t = 8)]
    pub degree: usize,

    #[command(flatten)]
    pub common: Common,
}

fn workers(common: &Common) -> usize {
    usize::try_from(common.workers).unwrap_or(usize::MAX)
}

pub fn cmd_distill(args: &DistillArgs) -> Result<RunReport, CliError> {
    let x_bytes = read_bytes(&args.input)?;
    let y_bytes = read_bytes(&args.output)?;
    let x = parse_matrix(&x_bytes, &args.input)?;
    let y = parse_matrix(&y_bytes, &args.output)?;
    if let Some(l) = args.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Invalid(format!("--lambda must be >= 0, got {l}")));
        }
    }
    let workers = workers(&args.common);
    let (block_rows, block_cols) = args.block;

    let start = Instant::now();
    let fit = fit_kernel(&x, &y, args.lambda, workers)?;
    let map = contribution_map(&x, &y, &fit, block_rows, block_cols, workers)?;
    let ranked = rank_features(&map, args.top_k);
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let grid_cols = map.scores.cols();
    let ranking = ranked
        .into_iter()
        .map(|(block, score)| RankedBlock {
            block,
            row: block / grid_cols,
            col: block % grid_cols,
            score,
        })
        .collect();
    let diagnostics = BTreeMap::from([
        ("residual".to_string(), json!(fit.residual)),
        ("lambda_used".to_string(), json!(fit.lambda_used)),
        ("imag_residue".to_string(), json!(fit.imag_residue)),
        (
            "imag_residue_flagged".to_string(),
            json!(fit.imag_residue_flagged),
        ),
        ("rows".to_string(), json!(x.rows())),
        ("cols".to_string(), json!(x.cols())),
    ]);
    Ok(RunReport {
        method: Method::Distill,
        input_digest: digest(&[&x_bytes, &y_bytes]),
        attributions: Attributions::Distill {
            kernel: nested_rows(&fit.kernel),
            block_rows,
            block_cols,
            contribution: nested_rows(&map.scores),
            ranking,
        },
        wall_time_seconds,
        workers,
        diagnostics,
    })
}

struct LoadedModel {
    model: matxai_core::Model,
    x: Vec<f64>,
    baseline: Vec<f64>,
    digest: String,
}

fn load_model_input(args: &ModelInput) -> Result<LoadedModel, CliError> {
    let model_bytes = read_bytes(&args.model)?;
    let x_bytes = read_bytes(&args.input)?;
    let model = parse_model(&model_bytes, &args.model)?;
    let x = parse_matrix(&x_bytes, &args.input)?.into_vec();
    let mut parts: Vec<&[u8]> = vec![&model_bytes, &x_bytes];
    let baseline_bytes;
    let baseline = match &args.baseline {
        Some(path) => {
            baseline_bytes = read_bytes(path)?;
            parts.push(&baseline_bytes);
            parse_matrix(&baseline_bytes, path)?.into_vec()
        }
        None => vec![0.0; x.len()],
    };
    if x.len() != model.arity() || baseline.len() != x.len() {
        return Err(CliError::Invalid(format!(
            "model takes {} features; input has {}, baseline {}",
            model.arity(),
            x.len(),
            baseline.len()
        )));
    }
    let digest = digest(&parts);
    Ok(LoadedModel {
        model,
        x,
        baseline,
        digest,
    })
}

pub fn cmd_shapley(args: &ShapleyArgs) -> Result<RunReport, CliError> {
    let loaded = load_model_input(&args.model)?;
    let workers = workers(&args.common);
    let form = ShapleyForm::from(args.form);
    let form_name = serde_json::to_value(form).expect("forms serialize");

    let start = Instant::now();
    let game = game_from_model(&loaded.model, &loaded.x, &loaded.baseline)?;
    let result = shapley(&game, form, workers)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let diagnostics = BTreeMap::from([
        ("efficiency_gap".to_string(), json!(result.efficiency_gap)),
        ("n_players".to_string(), json!(game.n_players())),
        ("form".to_string(), form_name.clone()),
    ]);
    Ok(RunReport {
        method: Method::Shapley,
        input_digest: loaded.digest,
        attributions: Attributions::Shapley {
            form: form_name.as_str().unwrap_or_default().to_string(),
            phi: result.phi,
        },
        wall_time_seconds,
        workers,
        diagnostics,
    })
}

pub fn cmd_ig(args: &IgArgs) -> Result<RunReport, CliError> {
    let loaded = load_model_input(&args.model)?;
    let workers = workers(&args.common);
    let (method, knob, value) = match args.method {
        IgMethodArg::Trapezoid => (IgMethod::Trapezoid, "steps", args.steps),
        IgMethodArg::Vandermonde => (IgMethod::Vandermonde, "degree", args.degree),
    };

    let start = Instant::now();
    let attr = match method {
        IgMethod::Trapezoid => ig_trapezoid(&loaded.model, &loaded.x, &loaded.baseline, value)?,
        IgMethod::Vandermonde => ig_vandermonde(&loaded.model, &loaded.x, &loaded.baseline, value)?,
    };
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let diagnostics = BTreeMap::from([
        ("completeness_gap".to_string(), json!(attr.completeness_gap)),
        (
            "method".to_string(),
            serde_json::to_value(method).expect("methods serialize"),
        ),
        (knob.to_string(), Value::from(value)),
    ]);
    Ok(RunReport {
        method: Method::Ig,
        input_digest: loaded.digest,
        attributions: Attributions::Ig {
            per_feature: attr.per_feature,
            baseline: attr.baseline,
        },
        wall_time_seconds,
        workers,
        diagnostics,
    })
}
