//! Data-decomposition engine: partition plans (the tracking table used for
//! reassembly), per-slice execution on a fixed-size worker pool, a
//! deterministic cross-worker reduction and multi-input batching.
//!
//! Work is assigned to workers statically when a plan is built. Results are
//! always merged by slice index, never by completion order, so every output
//! is bit-identical across worker counts.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::DftMatrix;
use crate::linalg::{matmul, LinalgError, Matrix, Scalar};
use crate::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParallelError {
    #[error("cannot partition an empty extent")]
    EmptyInput,

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("plan covers {plan} {axis:?} but the input has {actual}")]
    PlanMismatch {
        axis: Axis,
        plan: usize,
        actual: usize,
    },

    #[error(
        "slice {slice} produced a {got:?} block, expected extent {expected} across the merge axis"
    )]
    Merge {
        slice: usize,
        expected: usize,
        got: (usize, usize),
    },

    #[error("cross-replica sum needs at least one partial")]
    NoPartials,

    #[error("batch job has no inputs")]
    EmptyBatch,

    #[error("input {input}, slice {slice}: {source}")]
    Slice {
        input: usize,
        slice: usize,
        #[source]
        source: Box<ParallelError>,
    },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Cols,
}

impl Axis {
    fn extent<T>(self, m: &Matrix<T>) -> usize
    where
        T: Scalar,
    {
        match self {
            Axis::Rows => m.rows(),
            Axis::Cols => m.cols(),
        }
    }
}

/// One contiguous run of rows or columns owned by a worker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub worker: usize,
    pub start: usize,
    pub len: usize,
}

/// Tracking table for one input: which worker owns which slice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub axis: Axis,
    pub total: usize,
    pub workers: usize,
    pub slices: Vec<Slice>,
}

/// Balanced contiguous partition of `total` items over `workers`.
///
/// The first `total % workers` slices get one extra item; with more workers
/// than items every item becomes its own slice.
pub fn plan_partition(
    total: usize,
    workers: usize,
    axis: Axis,
) -> Result<PartitionPlan, ParallelError> {
    if total == 0 {
        return Err(ParallelError::EmptyInput);
    }
    if workers == 0 {
        return Err(ParallelError::ZeroWorkers);
    }
    let used = workers.min(total);
    let base = total / used;
    let extra = total % used;
    let mut slices = Vec::with_capacity(used);
    let mut start = 0;
    for worker in 0..used {
        let len = base + usize::from(worker < extra);
        slices.push(Slice { worker, start, len });
        start += len;
    }
    debug_assert_eq!(start, total);
    Ok(PartitionPlan {
        axis,
        total,
        workers,
        slices,
    })
}

/// Runs `f(0..n_tasks)` on up to `workers` scoped threads and returns the
/// results in task order.
///
/// Task `t` is owned by worker `t % workers` and each worker runs its tasks
/// in ascending order.
pub fn run_indexed<R, F>(n_tasks: usize, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let workers = workers.max(1).min(n_tasks);
    if workers <= 1 {
        return (0..n_tasks).map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<R>> = (0..n_tasks).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..n_tasks)
                        .step_by(workers)
                        .map(|t| (t, f(t)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (t, r) in handle.join().expect("worker thread panicked") {
                slots[t] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every task runs exactly once"))
        .collect()
}

fn extract(x: &ComplexMatrix, axis: Axis, slice: &Slice) -> ComplexMatrix {
    match axis {
        Axis::Rows => x.submatrix(slice.start, 0, slice.len, x.cols()),
        Axis::Cols => x.submatrix(0, slice.start, x.rows(), slice.len),
    }
}

/// Stacks per-slice outputs along `axis` in slice order.
fn merge(axis: Axis, blocks: Vec<ComplexMatrix>) -> Result<ComplexMatrix, ParallelError> {
    let cross = match axis {
        Axis::Rows => blocks[0].cols(),
        Axis::Cols => blocks[0].rows(),
    };
    let mut along = 0;
    for (i, b) in blocks.iter().enumerate() {
        let (b_cross, b_along) = match axis {
            Axis::Rows => (b.cols(), b.rows()),
            Axis::Cols => (b.rows(), b.cols()),
        };
        if b_cross != cross {
            return Err(ParallelError::Merge {
                slice: i,
                expected: cross,
                got: b.shape(),
            });
        }
        along += b_along;
    }
    let mut out = match axis {
        Axis::Rows => ComplexMatrix::zeros(along, cross),
        Axis::Cols => ComplexMatrix::zeros(cross, along),
    };
    let mut offset = 0;
    for b in &blocks {
        match axis {
            Axis::Rows => {
                out.write_block(offset, 0, b);
                offset += b.rows();
            }
            Axis::Cols => {
                out.write_block(0, offset, b);
                offset += b.cols();
            }
        }
    }
    Ok(out)
}

fn check_plan(x: &ComplexMatrix, plan: &PartitionPlan) -> Result<(), ParallelError> {
    let actual = plan.axis.extent(x);
    if actual != plan.total {
        return Err(ParallelError::PlanMismatch {
            axis: plan.axis,
            plan: plan.total,
            actual,
        });
    }
    Ok(())
}

/// Applies `op` to every slice of `x` described by `plan` (one thread per
/// slice) and reassembles the outputs in slice order.
pub fn execute_plan<F>(
    x: &ComplexMatrix,
    plan: &PartitionPlan,
    op: F,
) -> Result<ComplexMatrix, ParallelError>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix, ParallelError> + Sync,
{
    check_plan(x, plan)?;
    let outputs = run_indexed(plan.slices.len(), plan.slices.len(), |i| {
        op(&extract(x, plan.axis, &plan.slices[i]))
    });
    let blocks = outputs
        .into_iter()
        .enumerate()
        .map(|(slice, r)| {
            r.map_err(|e| ParallelError::Slice {
                input: 0,
                slice,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    merge(plan.axis, blocks)
}

/// Element-wise sum of same-shaped partials, accumulated in ascending index
/// (worker id) order starting from zero.
pub fn cross_replica_sum<T: Scalar>(partials: &[Matrix<T>]) -> Result<Matrix<T>, ParallelError> {
    let first = partials.first().ok_or(ParallelError::NoPartials)?;
    let mut acc = Matrix::zeros(first.rows(), first.cols());
    for p in partials {
        acc = acc.add(p)?;
    }
    Ok(acc)
}

/// Named transforms a [`BatchJob`] can apply to each slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceOp {
    Identity,
    Scale(Complex64),
    /// Unitary 1-D DFT of every row (row slices) or every column (column
    /// slices).
    Dft,
    /// Inverse of [`SliceOp::Dft`].
    InverseDft,
}

impl SliceOp {
    /// Length of the 1-D transform this op needs for slices of `x` cut along
    /// `axis`, if any.
    fn transform_len(self, x: &ComplexMatrix, axis: Axis) -> Option<usize> {
        match self {
            SliceOp::Dft | SliceOp::InverseDft => Some(match axis {
                Axis::Rows => x.cols(),
                Axis::Cols => x.rows(),
            }),
            _ => None,
        }
    }

    fn apply(
        self,
        slice: &ComplexMatrix,
        axis: Axis,
        dft: Option<&DftMatrix>,
    ) -> Result<ComplexMatrix, ParallelError> {
        Ok(match self {
            SliceOp::Identity => slice.clone(),
            SliceOp::Scale(c) => slice.scale(c),
            SliceOp::Dft | SliceOp::InverseDft => {
                let w = dft.expect("transform matrix prepared for this length");
                let w = if self == SliceOp::Dft {
                    w.matrix().clone()
                } else {
                    w.inverse_matrix()
                };
                apply_along(slice, axis, &w)?
            }
        })
    }
}

/// Transforms every row (`Axis::Rows`, `slice * W`) or every column
/// (`Axis::Cols`, `W * slice`) of `slice` with the symmetric matrix `w`.
pub fn apply_along(
    slice: &ComplexMatrix,
    axis: Axis,
    w: &ComplexMatrix,
) -> Result<ComplexMatrix, ParallelError> {
    Ok(match axis {
        Axis::Rows => matmul(slice, w)?,
        Axis::Cols => matmul(w, slice)?,
    })
}

/// Several inputs processed by one slice transform over a shared worker pool.
#[derive(Clone, Debug)]
pub struct BatchJob {
    pub inputs: Vec<ComplexMatrix>,
    pub op: SliceOp,
    pub axis: Axis,
    pub workers: usize,
}

/// Entry of the batch tracking table: slice `slice` of input `input` runs on
/// `worker`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchTask {
    pub input: usize,
    pub slice: usize,
    pub worker: usize,
}

/// Per-input plans plus the flattened FIFO task pool for `job`.
pub fn plan_batch(job: &BatchJob) -> Result<(Vec<PartitionPlan>, Vec<BatchTask>), ParallelError> {
    if job.inputs.is_empty() {
        return Err(ParallelError::EmptyBatch);
    }
    if job.workers == 0 {
        return Err(ParallelError::ZeroWorkers);
    }
    let plans = job
        .inputs
        .iter()
        .map(|x| plan_partition(job.axis.extent(x), job.workers, job.axis))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tasks = Vec::new();
    for (input, plan) in plans.iter().enumerate() {
        for slice in 0..plan.slices.len() {
            let worker = tasks.len() % job.workers;
            tasks.push(BatchTask {
                input,
                slice,
                worker,
            });
        }
    }
    Ok((plans, tasks))
}

/// Runs `job.op` over the slices of every input as a single task pool and
/// reassembles each input's output from the tracking table.
pub fn execute_batch(job: &BatchJob) -> Result<Vec<ComplexMatrix>, ParallelError> {
    let (plans, tasks) = plan_batch(job)?;

    let mut dfts: BTreeMap<usize, DftMatrix> = BTreeMap::new();
    for x in &job.inputs {
        if let Some(n) = job.op.transform_len(x, job.axis) {
            dfts.entry(n)
                .or_insert_with(|| DftMatrix::new(n).expect("matrix extents are nonzero"));
        }
    }

    let outputs = run_indexed(tasks.len(), job.workers, |t| {
        let task = tasks[t];
        let x = &job.inputs[task.input];
        let slice = extract(x, job.axis, &plans[task.input].slices[task.slice]);
        let dft = job.op.transform_len(x, job.axis).and_then(|n| dfts.get(&n));
        job.op
            .apply(&slice, job.axis, dft)
            .map_err(|e| ParallelError::Slice {
                input: task.input,
                slice: task.slice,
                source: Box::new(e),
            })
    });

    let mut per_input: Vec<Vec<ComplexMatrix>> = plans
        .iter()
        .map(|p| Vec::with_capacity(p.slices.len()))
        .collect();
    for (task, out) in tasks.iter().zip(outputs) {
        // Tasks are laid out input-major, slice-minor, so pushes land in
        // slice order.
        per_input[task.input].push(out?);
    }
    per_input
        .into_iter()
        .enumerate()
        .map(|(input, blocks)| {
            merge(job.axis, blocks).map_err(|e| ParallelError::Slice {
                input,
                slice: 0,
                source: Box::new(e),
            })
        })
        .collect()
}
