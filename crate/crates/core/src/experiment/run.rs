use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomposition::{random_low_rank, RankVector};
use crate::error::{Error, Result};
use crate::experiment::config::{Ensemble, ExperimentSpec, Scheme, Structure};
use crate::measurement::{make_gaussian, make_sors_with, measure, MeasurementOperator};
use crate::par::{map_indexed, Execution};
use crate::rng::mix_seed;
use crate::tensor::{Matrix, ReshapePlan};
use crate::tiht::tiht_recover;

const STREAM_TRUTH: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_OPERATOR: u64 = 4;

/// Seed of the ground-truth tensor of trial `t`. Shared by every cell, so
/// cells are paired trial by trial.
pub fn truth_seed(master: u64, trial: usize) -> u64 {
    mix_seed(master, &[STREAM_TRUTH, trial as u64])
}

/// Seed of the TIHT starting point of trial `t`.
pub fn init_seed(master: u64, trial: usize) -> u64 {
    mix_seed(master, &[STREAM_INIT, trial as u64])
}

pub fn noise_seed(master: u64, trial: usize) -> u64 {
    mix_seed(master, &[STREAM_NOISE, trial as u64])
}

/// Seed of the measurement operator of trial `t`.
///
/// Independent of `m₀`: Gaussian and SORS draws are nested by prefix, so for
/// one trial the operator at a smaller `m₀` consists of (rescaled) leading
/// rows of the operator at a larger `m₀`.
pub fn operator_seed(master: u64, scheme: Scheme, m_intermediate: Option<usize>, trial: usize) -> u64 {
    mix_seed(
        master,
        &[
            STREAM_OPERATOR,
            scheme.tag(),
            m_intermediate.map_or(0, |m| m as u64 + 1),
            trial as u64,
        ],
    )
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub scheme: Scheme,
    pub m_intermediate: Option<usize>,
    pub m0: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub cell: Cell,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub success: bool,
    pub iterations: usize,
    pub final_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub scheme: Scheme,
    pub m_intermediate: Option<usize>,
    pub m0: usize,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
    /// Mean iteration count over successful trials only.
    pub mean_iters_success: Option<f64>,
    pub storage_entries: usize,
    /// Summed per-trial compute time.
    pub wall_time_s: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<CellRow>,
    pub skipped: Vec<SkippedCell>,
}

fn ensemble_matrix(spec: &ExperimentSpec, ensemble: Ensemble, rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    Ok(match ensemble {
        Ensemble::Gaussian => make_gaussian(rows, cols, seed),
        Ensemble::Sors => make_sors_with(rows, cols, seed, spec.sors_rows)?.to_matrix(),
    })
}

/// Builds the measurement operator of `cell` for the given seed.
pub fn build_operator(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> Result<MeasurementOperator> {
    let shape = spec.shape();
    let full: usize = shape.iter().product();
    match cell.scheme.structure {
        Structure::Vectorized => MeasurementOperator::vectorized(
            shape,
            ensemble_matrix(spec, cell.scheme.ensemble, cell.m0, full, seed)?,
        ),
        Structure::Modewise | Structure::TwoStage => {
            let m = cell
                .m_intermediate
                .ok_or_else(|| Error::invalid(format!("{} needs an intermediate dimension", cell.scheme)))?;
            let plan = ReshapePlan::new(&shape, spec.kappa)?;
            let matrices = plan
                .target_shape()
                .iter()
                .enumerate()
                .map(|(i, &cols)| ensemble_matrix(spec, cell.scheme.ensemble, m, cols, mix_seed(seed, &[i as u64])))
                .collect::<Result<Vec<_>>>()?;
            if cell.scheme.structure == Structure::Modewise {
                return MeasurementOperator::modewise(plan, matrices);
            }
            let inner: usize = matrices.iter().map(Matrix::rows).product();
            let second = ensemble_matrix(
                spec,
                cell.scheme.ensemble,
                cell.m0,
                inner,
                mix_seed(seed, &[plan.target_modes() as u64]),
            )?;
            MeasurementOperator::two_stage(plan, matrices, second)
        }
    }
}

/// Grid cells in report order, plus cells that cannot be run.
pub fn plan_cells(spec: &ExperimentSpec) -> (Vec<Cell>, Vec<SkippedCell>) {
    let d_prime = (spec.d / spec.kappa) as u32;
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &scheme in &spec.schemes {
        match scheme.structure {
            Structure::Vectorized => {
                cells.extend(spec.m0.iter().map(|&m0| Cell {
                    scheme,
                    m_intermediate: None,
                    m0,
                }));
            }
            Structure::Modewise => {
                cells.extend(spec.intermediate_m.iter().map(|&m| Cell {
                    scheme,
                    m_intermediate: Some(m),
                    m0: m.pow(d_prime),
                }));
            }
            Structure::TwoStage => {
                for &m in &spec.intermediate_m {
                    let capacity = m.pow(d_prime);
                    for &m0 in &spec.m0 {
                        let cell = Cell {
                            scheme,
                            m_intermediate: Some(m),
                            m0,
                        };
                        if m0 > capacity {
                            skipped.push(SkippedCell {
                                cell,
                                reason: format!(
                                    "m0={m0} exceeds the first-stage output length {capacity}"
                                ),
                            });
                        } else {
                            cells.push(cell);
                        }
                    }
                }
            }
        }
    }
    (cells, skipped)
}

/// Runs trial `trial` of `cell` with operator `op`.
pub fn run_trial(spec: &ExperimentSpec, op: &MeasurementOperator, trial: usize) -> Result<TrialOutcome> {
    let rank = RankVector::new(spec.rank.clone())?;
    let truth = random_low_rank(&spec.shape(), &rank, truth_seed(spec.seed, trial))?;
    let y = measure(op, &truth, spec.noise_norm, noise_seed(spec.seed, trial))?.y;
    let cfg = spec.tiht_config(init_seed(spec.seed, trial))?;
    let res = tiht_recover(op, &y, &cfg, Some(&truth))?;
    let last = *res.error_trace.last().expect("trace is never empty");
    Ok(TrialOutcome {
        trial,
        success: res.success,
        iterations: res.iterations_used,
        final_relative_error: last / res.error_trace[0],
    })
}

/// Runs all trials of one cell with operators supplied by `operator_for(trial)`.
pub fn run_cell_with<F>(
    spec: &ExperimentSpec,
    cell: &Cell,
    exec: Execution,
    keep_outcomes: bool,
    operator_for: F,
) -> Result<CellRow>
where
    F: Fn(usize) -> Result<MeasurementOperator> + Sync + Send,
{
    let results = map_indexed(exec, spec.trials, |t| -> Result<(TrialOutcome, usize, f64)> {
        let start = Instant::now();
        let op = operator_for(t)?;
        let storage = op.storage_footprint();
        let outcome = run_trial(spec, &op, t)?;
        Ok((outcome, storage, start.elapsed().as_secs_f64()))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let storage_entries = results[0].1;
    if results.iter().any(|r| r.1 != storage_entries) {
        return Err(Error::Degenerate(format!("operators of cell {cell:?} differ in size")));
    }
    let successes: Vec<&TrialOutcome> = results.iter().map(|r| &r.0).filter(|o| o.success).collect();
    let mean_iters_success = (!successes.is_empty()).then(|| {
        successes.iter().map(|o| o.iterations as f64).sum::<f64>() / successes.len() as f64
    });
    Ok(CellRow {
        scheme: cell.scheme,
        m_intermediate: cell.m_intermediate,
        m0: cell.m0,
        trials: spec.trials,
        successes: successes.len(),
        fraction: successes.len() as f64 / spec.trials as f64,
        mean_iters_success,
        storage_entries,
        wall_time_s: results.iter().map(|r| r.2).sum(),
        seed: spec.seed,
        outcomes: if keep_outcomes {
            results.into_iter().map(|r| r.0).collect()
        } else {
            Vec::new()
        },
    })
}

pub fn run_cell(spec: &ExperimentSpec, cell: &Cell, exec: Execution, keep_outcomes: bool) -> Result<CellRow> {
    run_cell_with(spec, cell, exec, keep_outcomes, |t| {
        build_operator(spec, cell, operator_seed(spec.seed, cell.scheme, cell.m_intermediate, t))
    })
}

/// Runs the whole grid. Rows follow [`plan_cells`] order regardless of `exec`.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    run_experiment_with_progress(spec, exec, false, |_| {})
}

/// Like [`run_experiment`], calling `progress` after each finished cell and
/// optionally keeping per-trial outcomes.
pub fn run_experiment_with_progress(
    spec: &ExperimentSpec,
    exec: Execution,
    keep_outcomes: bool,
    mut progress: impl FnMut(&CellRow),
) -> Result<ExperimentReport> {
    let mut spec = spec.clone();
    spec.validate()?;
    let (cells, skipped) = plan_cells(&spec);
    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        let row = run_cell(&spec, cell, exec, keep_outcomes)?;
        progress(&row);
        rows.push(row);
    }
    Ok(ExperimentReport { spec, rows, skipped })
}
