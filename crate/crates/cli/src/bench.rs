//! Timing grid: median wall time of one operation across problem sizes and
//! worker counts, with every timed output checked against the single-worker
//! output.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use matxai_core::distill::{circconv_spectral, contribution_map, fit_kernel};
use matxai_core::fourier::dft2d_decomposed;
use matxai_core::shapley::{shapley_matrix, CoalitionGame};
use matxai_core::{Complex64, RealMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::parse_dims;

pub const MIN_REPEATS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchOp {
    Dft2d,
    Distill,
    ShapleyMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchGrid {
    /// `(rows, cols)`; for `shapley-matrix` `rows` is the player count.
    pub sizes: Vec<(usize, usize)>,
    pub worker_counts: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
}

impl BenchGrid {
    /// Parses `key=value` tokens: `sizes=256,512x128 workers=1,2,4 repeats=5`.
    /// Sizes without `x` are square. Worker count 1 is always measured
    /// because it defines the speedup baseline.
    pub fn parse(tokens: &[String], seed: u64) -> Result<Self, String> {
        let mut sizes = vec![(256, 256)];
        let mut worker_counts = vec![1, 2, 4];
        let mut repeats = 5;
        for token in tokens.iter().flat_map(|t| t.split_whitespace()) {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {token:?}"))?;
            let list = || value.split(',').filter(|s| !s.is_empty());
            match key {
                "sizes" => {
                    sizes = list()
                        .map(|s| {
                            if s.contains(['x', 'X']) {
                                parse_dims(s)
                            } else {
                                parse_count(s).map(|n| (n, n))
                            }
                        })
                        .collect::<Result<_, _>>()?;
                }
                "workers" => worker_counts = list().map(parse_count).collect::<Result<_, _>>()?,
                "repeats" => repeats = parse_count(value)?,
                other => return Err(format!("unknown grid key {other:?}")),
            }
        }
        if sizes.is_empty() || worker_counts.is_empty() {
            return Err("grid needs at least one size and one worker count".into());
        }
        if repeats < MIN_REPEATS {
            return Err(format!(
                "repeats must be at least {MIN_REPEATS}, got {repeats}"
            ));
        }
        worker_counts.push(1);
        worker_counts.sort_unstable();
        worker_counts.dedup();
        Ok(Self {
            sizes,
            worker_counts,
            repeats,
            seed,
        })
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer, got {s:?}")),
        Ok(v) => Ok(v),
    }
}

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    /// Grid as key=value tokens, e.g. `sizes=256,512 workers=1,2,4 repeats=5`.
    #[arg(long, num_args = 1..)]
    pub grid: Vec<String>,

    #[arg(long, value_enum, default_value_t = BenchOp::Dft2d)]
    pub op: BenchOp,

    /// Seed for the random workloads.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub available_parallelism: usize,
    pub os: String,
    pub arch: String,
    pub version: String,
}

impl Machine {
    pub fn detect() -> Self {
        Self {
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub rows: usize,
    pub cols: usize,
    pub workers: usize,
    pub times_seconds: Vec<f64>,
    pub median_seconds: f64,
    /// Median at one worker divided by this cell's median.
    pub speedup: f64,
    /// Every timed output was bit-identical to the one-worker output.
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub op: BenchOp,
    pub grid: BenchGrid,
    pub machine: Machine,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "op",
            "rows",
            "cols",
            "workers",
            "median_seconds",
            "speedup",
            "correct",
        ])
        .expect("in-memory write");
        let op = serde_json::to_value(self.op).expect("ops serialize");
        for c in &self.cells {
            w.write_record([
                op.as_str().unwrap_or_default().to_string(),
                c.rows.to_string(),
                c.cols.to_string(),
                c.workers.to_string(),
                c.median_seconds.to_string(),
                c.speedup.to_string(),
                c.correct.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

pub fn median(times: &[f64]) -> f64 {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

enum Workload {
    Dft2d(matxai_core::ComplexMatrix),
    Distill {
        x: RealMatrix,
        y: RealMatrix,
        block: (usize, usize),
    },
    Shapley(CoalitionGame),
}

impl Workload {
    fn build(op: BenchOp, (rows, cols): (usize, usize), seed: u64) -> Result<Self, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
            RealMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
        };
        Ok(match op {
            BenchOp::Dft2d => {
                let re = real(rows, cols, &mut rng);
                let im = real(rows, cols, &mut rng);
                let data = re
                    .data()
                    .iter()
                    .zip(im.data())
                    .map(|(&a, &b)| Complex64::new(a, b))
                    .collect();
                Workload::Dft2d(matxai_core::ComplexMatrix::new(rows, cols, data).expect("sized"))
            }
            BenchOp::Distill => {
                let x = real(rows, cols, &mut rng);
                let k = real(rows, cols, &mut rng);
                let y = circconv_spectral(&x, &k, 1)?;
                let block = (rows.div_ceil(4), cols.div_ceil(4));
                Workload::Distill { x, y, block }
            }
            BenchOp::ShapleyMatrix => {
                let n = rows;
                let game = CoalitionGame::from_fn(n, |_| rng.gen_range(-1.0..1.0))?;
                Workload::Shapley(game)
            }
        })
    }

    /// Runs once; the output as raw bits for exact comparison.
    fn run(&self, workers: usize) -> Result<Vec<u64>, CliError> {
        Ok(match self {
            Workload::Dft2d(x) => dft2d_decomposed(x, workers)
                .map_err(|e| CliError::Invalid(e.to_string()))?
                .data()
                .iter()
                .flat_map(|c| [c.re.to_bits(), c.im.to_bits()])
                .collect(),
            Workload::Distill { x, y, block } => {
                let fit = fit_kernel(x, y, None, workers)?;
                let map = contribution_map(x, y, &fit, block.0, block.1, workers)?;
                fit.kernel
                    .data()
                    .iter()
                    .chain(map.scores.data())
                    .map(|v| v.to_bits())
                    .collect()
            }
            Workload::Shapley(game) => shapley_matrix(game, workers)?
                .phi
                .iter()
                .map(|v| v.to_bits())
                .collect(),
        })
    }
}

pub fn run_bench(op: BenchOp, grid: &BenchGrid) -> Result<BenchReport, CliError> {
    let mut cells = Vec::new();
    for (i, &size) in grid.sizes.iter().enumerate() {
        let workload = Workload::build(op, size, grid.seed.wrapping_add(i as u64))?;
        let reference = workload.run(1)?;
        let mut baseline = None;
        for &workers in &grid.worker_counts {
            let mut times = Vec::with_capacity(grid.repeats);
            let mut correct = true;
            for _ in 0..grid.repeats {
                let start = Instant::now();
                let out = workload.run(workers)?;
                times.push(start.elapsed().as_secs_f64());
                correct &= out == reference;
            }
            let median_seconds = median(&times);
            let base = *baseline.get_or_insert(median_seconds);
            let speedup = if workers == 1 {
                1.0
            } else if median_seconds > 0.0 {
                base / median_seconds
            } else {
                0.0
            };
            cells.push(BenchCell {
                rows: size.0,
                cols: size.1,
                workers,
                times_seconds: times,
                median_seconds,
                speedup,
                correct,
            });
        }
    }
    Ok(BenchReport {
        op,
        grid: grid.clone(),
        machine: Machine::detect(),
        cells,
    })
}
