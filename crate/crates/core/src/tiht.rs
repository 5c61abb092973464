//! Classical tensor iterative hard thresholding.
//!
//! ```text
//! Y^j     = X^j + μ L*(y − L(X^j))
//! X^{j+1} = H_r(Y^j)
//! ```
//!
//! with `μ = 1` by default and `X^0` a seeded random unit-norm rank-`r` tensor.

use serde::{Deserialize, Serialize};

use crate::decomposition::{random_low_rank, truncate_rank, RankVector};
use crate::error::{Error, Result};
use crate::measurement::MeasurementOperator;
use crate::tensor::{norm2, DenseTensor};

/// Iterates whose error exceeds this multiple of the initial error abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TihtConfig {
    pub rank: RankVector,
    pub max_iterations: usize,
    pub success_factor: f64,
    pub step_size: f64,
    /// Seed of the random initial iterate.
    pub seed: u64,
}

impl TihtConfig {
    pub fn new(rank: RankVector) -> Self {
        Self {
            rank,
            max_iterations: 1000,
            success_factor: 1e-3,
            step_size: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.success_factor > 0.0 && self.success_factor < 1.0) {
            return Err(Error::invalid(format!(
                "success_factor must lie in (0, 1), got {}",
                self.success_factor
            )));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid(format!("step size must be positive, got {}", self.step_size)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TihtResult {
    pub estimate: DenseTensor,
    /// `‖X^j − X‖_F` when the truth was supplied, else `‖y − L(X^j)‖₂`.
    /// Has `iterations_used + 1` entries.
    pub error_trace: Vec<f64>,
    pub iterations_used: usize,
    pub success: bool,
    /// Whether `error_trace` measures distance to the truth.
    pub truth_relative: bool,
    pub diverged: bool,
    /// `‖Y^j − X^{j+1}‖ / ‖Y^j − X‖` per iteration (truth mode only).
    pub threshold_ratios: Vec<f64>,
}

/// Runs TIHT on measurements `y` of an unknown tensor.
///
/// With `truth`, a run succeeds once `‖X^j − X‖ ≤ success_factor · ‖X^0 − X‖`.
/// Without it, once `‖y − L(X^j)‖ ≤ success_factor · ‖y‖`.
pub fn tiht_recover(
    op: &MeasurementOperator,
    y: &[f64],
    cfg: &TihtConfig,
    truth: Option<&DenseTensor>,
) -> Result<TihtResult> {
    cfg.validate()?;
    if y.len() != op.output_length() {
        return Err(Error::shape(format!(
            "measurement has length {}, operator produces {}",
            y.len(),
            op.output_length()
        )));
    }
    cfg.rank.check_fits(op.input_shape())?;
    if let Some(t) = truth {
        if t.shape() != op.input_shape() {
            return Err(Error::shape(format!(
                "truth has shape {:?}, operator expects {:?}",
                t.shape(),
                op.input_shape()
            )));
        }
    }

    let residual_of = |x: &DenseTensor| -> Result<Vec<f64>> {
        let lx = op.apply(x)?;
        Ok(y.iter().zip(lx).map(|(a, b)| a - b).collect())
    };
    let error_of = |x: &DenseTensor, residual: &[f64]| -> Result<f64> {
        match truth {
            Some(t) => Ok(x.sub(t)?.norm()),
            None => Ok(norm2(residual)),
        }
    };

    let mut x = random_low_rank(op.input_shape(), &cfg.rank, cfg.seed)?;
    let mut residual = residual_of(&x)?;
    let initial = error_of(&x, &residual)?;
    let target = match truth {
        Some(_) => cfg.success_factor * initial,
        None => cfg.success_factor * norm2(y),
    };

    let mut trace = vec![initial];
    let mut ratios = Vec::new();
    let mut success = initial <= target && truth.is_none();
    let mut diverged = false;
    let mut iterations = 0;

    while !success && iterations < cfg.max_iterations {
        let mut step = op.adjoint(&residual)?;
        step.data_mut().iter_mut().for_each(|v| *v *= cfg.step_size);
        let y_j = x.add(&step)?;
        let next = truncate_rank(&y_j, &cfg.rank)?;
        if let Some(t) = truth {
            let denom = y_j.sub(t)?.norm();
            let num = y_j.sub(&next)?.norm();
            ratios.push(if denom > 0.0 { num / denom } else { 0.0 });
        }
        x = next;
        residual = residual_of(&x)?;
        let err = error_of(&x, &residual)?;
        trace.push(err);
        iterations += 1;
        if !err.is_finite() || err > DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE) {
            diverged = true;
            break;
        }
        success = err <= target;
    }

    Ok(TihtResult {
        estimate: x,
        error_trace: trace,
        iterations_used: iterations,
        success: success && !diverged,
        truth_relative: truth.is_some(),
        diverged,
        threshold_ratios: ratios,
    })
}

/// Post-hoc comparison of an error trace with the geometric envelope
/// `a^j ‖X^0 − X‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub a: f64,
    /// Largest `J` such that the envelope holds for all `j ≤ J`.
    pub holds_through: usize,
    pub holds_for_full_trace: bool,
    pub first_violation: Option<usize>,
    /// Smallest rate whose envelope dominates the whole trace:
    /// `max_j (e_j / e_0)^{1/j}`.
    pub fitted_rate: f64,
    pub operator_norm: f64,
    /// `a² / (17 (1 + √(1 + δ)) ‖L‖)` evaluated with `δ = 0`.
    pub xi_a: f64,
    /// Fraction of iterations where `‖Y^j − X^{j+1}‖ ≤ (1 + ξ_a) ‖Y^j − X‖`.
    pub threshold_condition_fraction: f64,
}

pub fn check_contraction_certificate(
    result: &TihtResult,
    op: &MeasurementOperator,
    a: f64,
) -> Result<ContractionCertificate> {
    if !result.truth_relative {
        return Err(Error::Unavailable(
            "contraction certificate needs a run with known truth".into(),
        ));
    }
    if !(a > 0.0) {
        return Err(Error::invalid(format!("rate a must be positive, got {a}")));
    }
    let trace = &result.error_trace;
    let e0 = trace[0];
    let slack = |bound: f64| bound * (1.0 + 1e-12) + 1e-300;
    let first_violation = (0..trace.len()).find(|&j| trace[j] > slack(a.powi(j as i32) * e0));
    let holds_through = match first_violation {
        Some(0) | None => trace.len().saturating_sub(1),
        Some(j) => j - 1,
    };
    let fitted_rate = if e0 > 0.0 {
        (1..trace.len())
            .map(|j| (trace[j] / e0).powf(1.0 / j as f64))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let operator_norm = op.operator_norm_estimate(50, 0x5eed)?;
    let xi_a = if operator_norm > 0.0 {
        a * a / (17.0 * (1.0 + 2f64.sqrt()) * operator_norm)
    } else {
        f64::INFINITY
    };
    let threshold_condition_fraction = if result.threshold_ratios.is_empty() {
        1.0
    } else {
        let ok = result
            .threshold_ratios
            .iter()
            .filter(|&&r| r <= 1.0 + xi_a)
            .count();
        ok as f64 / result.threshold_ratios.len() as f64
    };
    Ok(ContractionCertificate {
        a,
        holds_through,
        holds_for_full_trace: first_violation.is_none(),
        first_violation,
        fitted_rate,
        operator_norm,
        xi_a,
        threshold_condition_fraction,
    })
}
