//! Sufficient embedding dimensions for modewise TRIP.
//!
//! All four formulas are evaluated in log-space, so parameters for which
//! `r^{2d}` overflows still produce a finite `ln_m_bound`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    #[serde(rename = "subgaussian_1stage")]
    SubgaussianOneStage,
    #[serde(rename = "sors_1stage")]
    SorsOneStage,
    #[serde(rename = "subgaussian_2stage")]
    SubgaussianTwoStage,
    #[serde(rename = "sors_2stage")]
    SorsTwoStage,
}

impl BoundFormula {
    pub const ALL: [BoundFormula; 4] = [
        BoundFormula::SubgaussianOneStage,
        BoundFormula::SorsOneStage,
        BoundFormula::SubgaussianTwoStage,
        BoundFormula::SorsTwoStage,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BoundFormula::SubgaussianOneStage => "subgaussian_1stage",
            BoundFormula::SorsOneStage => "sors_1stage",
            BoundFormula::SubgaussianTwoStage => "subgaussian_2stage",
            BoundFormula::SorsTwoStage => "sors_2stage",
        }
    }

    fn is_two_stage(self) -> bool {
        matches!(self, BoundFormula::SubgaussianTwoStage | BoundFormula::SorsTwoStage)
    }
}

impl fmt::Display for BoundFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BoundFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundFormula::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bound formula `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta: f64,
    pub r: u32,
    pub d: u32,
    pub n: u32,
    pub kappa: u32,
    pub eta: f64,
    /// Intermediate dimension fed to the second-stage formulas. When absent the
    /// first-stage bound is used.
    pub m: Option<f64>,
}

/// Unspecified absolute constants; every report echoes the values used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `C` of the sub-gaussian bounds and of the second-stage SORS bound.
    pub c: f64,
    /// `C₁`, leading constant of the first-stage SORS bound.
    pub c1: f64,
    /// `C₂`, inside the squared logarithm of the first-stage SORS bound.
    pub c2: f64,
    /// `c₁`, inside the squared logarithm of the second-stage SORS bound.
    pub c_log: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c: 1.0,
            c1: 1.0,
            c2: 1.0,
            c_log: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: BoundFormula,
    pub inputs: BoundInputs,
    pub constants: BoundConstants,
    /// First-stage (intermediate) dimension `m`.
    pub m_bound: f64,
    pub ln_m_bound: f64,
    /// Final dimension `m_2nd` for the two-stage formulas.
    pub m2nd_bound: Option<f64>,
    pub ln_m2nd_bound: Option<f64>,
    pub m_used_for_second_stage: Option<f64>,
    pub note: String,
}

fn logsumexp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^x)`
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn validate(inputs: &BoundInputs, k: &BoundConstants) -> Result<()> {
    let BoundInputs {
        delta, r, d, n, kappa, eta, m,
    } = *inputs;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    if r < 2 {
        return Err(Error::invalid(format!("r must be at least 2, got {r}")));
    }
    if n < 1 || d < 1 {
        return Err(Error::invalid("n and d must be positive"));
    }
    if kappa < 2 || d % kappa != 0 {
        return Err(Error::invalid(format!(
            "kappa must be at least 2 and divide d, got kappa={kappa}, d={d}"
        )));
    }
    if let Some(m) = m {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::invalid(format!("m must be positive, got {m}")));
        }
    }
    for (name, v) in [("C", k.c), ("C1", k.c1), ("C2", k.c2), ("c_log", k.c_log)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("constant {name} must be positive, got {v}")));
        }
    }
    Ok(())
}

struct Logs {
    ln_delta: f64,
    ln_r: f64,
    d: f64,
    n: f64,
    kappa: f64,
    eta: f64,
}

impl Logs {
    /// `ln(δ⁻² r^{2d})`
    fn ln_delta_rank(&self) -> f64 {
        -2.0 * self.ln_delta + 2.0 * self.d * self.ln_r
    }

    /// `ln(n d² ln κ / κ)`
    fn ln_n_term(&self) -> f64 {
        self.n.ln() + 2.0 * self.d.ln() + self.kappa.ln().ln() - self.kappa.ln()
    }

    /// `ln(d² / κ² · ln(c · d / (κ η)))`
    fn ln_failure_term(&self, c: f64) -> f64 {
        2.0 * (self.d / self.kappa).ln() + (c * self.d / (self.kappa * self.eta)).ln().ln()
    }

    /// `ln L` for the first-stage SORS factor.
    fn ln_sors_first_log_factor(&self, c2: f64) -> f64 {
        let (d, k, eta) = (self.d, self.kappa, self.eta);
        let log_fail = (2.0 * d / (k * eta)).ln();
        // ln(2 e n^κ d / (κ η))
        let log_rows = 2f64.ln() + 1.0 + k * self.n.ln() + d.ln() - k.ln() - eta.ln();
        let inner = c2.ln() + self.ln_delta_rank() + self.ln_n_term() + log_fail.ln();
        log_fail.ln() + log_rows.ln() + 2.0 * inner.abs().ln()
    }

    fn ln_first_stage(&self, formula: BoundFormula, k: &BoundConstants) -> f64 {
        match formula {
            BoundFormula::SubgaussianOneStage => {
                k.c.ln() + self.ln_delta_rank() + self.ln_n_term().max(self.ln_failure_term(1.0))
            }
            BoundFormula::SubgaussianTwoStage => {
                k.c.ln() + self.ln_delta_rank() + self.ln_n_term().max(self.ln_failure_term(2.0))
            }
            BoundFormula::SorsOneStage | BoundFormula::SorsTwoStage => {
                k.c1.ln() + self.ln_delta_rank() + self.ln_n_term() + self.ln_sors_first_log_factor(k.c2)
            }
        }
    }

    /// `ln T` where
    /// `T = (r^d κ + d m r^κ)/κ · ln(d/κ + 1) + (d m r^κ / κ) ln(1 + δ r^d) + d² m r^κ δ / κ²`.
    fn ln_second_stage_core(&self, m: f64) -> f64 {
        let (d, k) = (self.d, self.kappa);
        let ln_dmrk = d.ln() + m.ln() + k * self.ln_r - k.ln();
        let t1 = logsumexp(&[d * self.ln_r, ln_dmrk]) + (d / k + 1.0).ln().ln();
        let t2 = ln_dmrk + softplus(self.ln_delta + d * self.ln_r).ln();
        let t3 = ln_dmrk + d.ln() + self.ln_delta - k.ln();
        logsumexp(&[t1, t2, t3])
    }

    fn ln_second_stage(&self, formula: BoundFormula, k: &BoundConstants, m: f64) -> f64 {
        let ln_t = self.ln_second_stage_core(m);
        let eta = self.eta;
        match formula {
            BoundFormula::SubgaussianTwoStage => {
                k.c.ln() - 2.0 * self.ln_delta + ln_t.max((2.0 / eta).ln().ln())
            }
            BoundFormula::SorsTwoStage => {
                let ln4 = (4.0 / eta).ln();
                let inner = k.c_log.ln() - 2.0 * self.ln_delta + ln4.ln() + ln_t;
                let ln_l = 2.0 * inner.abs().ln() + ln4.ln() + (4.0 * std::f64::consts::E * m / eta).ln().ln();
                k.c.ln() - 2.0 * self.ln_delta + ln_t + ln_l
            }
            _ => unreachable!("first-stage formula has no second stage"),
        }
    }
}

/// Evaluates one of the embedding-dimension bounds with the given constants.
pub fn eval_m_bound(
    formula: BoundFormula,
    inputs: &BoundInputs,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    validate(inputs, constants)?;
    let logs = Logs {
        ln_delta: inputs.delta.ln(),
        ln_r: f64::from(inputs.r).ln(),
        d: f64::from(inputs.d),
        n: f64::from(inputs.n),
        kappa: f64::from(inputs.kappa),
        eta: inputs.eta,
    };
    let ln_m = logs.ln_first_stage(formula, constants);
    let m_bound = ln_m.exp();
    let (m_used, ln_m2) = if formula.is_two_stage() {
        let m = inputs.m.unwrap_or(m_bound);
        (Some(m), Some(logs.ln_second_stage(formula, constants, m)))
    } else {
        (None, None)
    };
    Ok(BoundReport {
        formula,
        inputs: inputs.clone(),
        constants: constants.clone(),
        m_bound,
        ln_m_bound: ln_m,
        m2nd_bound: ln_m2.map(f64::exp),
        ln_m2nd_bound: ln_m2,
        m_used_for_second_stage: m_used,
        note: "absolute constants are unspecified; values scale with the constants echoed here".into(),
    })
}
