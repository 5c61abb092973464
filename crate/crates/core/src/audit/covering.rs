//! Covering-number upper bounds and the Dudley-type entropy integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum CoveringSet {
    /// Normalized differences and sums of orthogonal rank-one pairs in
    /// `R^{n^κ}`; bound `((6κ/t)^{κn} + 1)²`.
    S12 { n: u32, kappa: u32 },
    /// Nearly orthogonal low-rank tensors with core norm at most `radius` and
    /// factor coherence `mu`.
    FancyB {
        r: u32,
        d: u32,
        n: u32,
        radius: f64,
        mu: f64,
    },
    /// Simplified bound `(3(d+1)/t)^{r^d + dnr}` for exactly orthonormal
    /// factors and unit core.
    FancyBOrthonormal { r: u32, d: u32, n: u32 },
}

impl CoveringSet {
    fn validate(&self) -> Result<()> {
        match *self {
            CoveringSet::S12 { n, kappa } => {
                if n == 0 || kappa == 0 {
                    return Err(Error::invalid("S12 needs n, kappa >= 1"));
                }
            }
            CoveringSet::FancyB { r, d, n, radius, mu } => {
                if r == 0 || d == 0 || n == 0 || r > n {
                    return Err(Error::invalid(format!("invalid r={r}, d={d}, n={n}")));
                }
                if !(radius >= 1.0) || !radius.is_finite() {
                    return Err(Error::invalid(format!("radius must be >= 1, got {radius}")));
                }
                if !(0.0..1.0).contains(&mu) {
                    return Err(Error::invalid(format!("mu must lie in [0, 1), got {mu}")));
                }
            }
            CoveringSet::FancyBOrthonormal { r, d, n } => {
                if r == 0 || d == 0 || n == 0 || r > n {
                    return Err(Error::invalid(format!("invalid r={r}, d={d}, n={n}")));
                }
            }
        }
        Ok(())
    }

    /// Radius beyond which a single point covers the set.
    fn trivial_radius(&self) -> Option<f64> {
        match *self {
            CoveringSet::S12 { kappa, .. } => Some(6.0 * f64::from(kappa)),
            _ => None,
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Natural log of the covering-number upper bound at radius `t`.
pub fn eval_covering_bound(set: &CoveringSet, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("covering radius must be positive, got {t}")));
    }
    set.validate()?;
    Ok(match *set {
        CoveringSet::S12 { n, kappa } => {
            let k = f64::from(kappa);
            2.0 * softplus(k * f64::from(n) * (6.0 * k / t).ln())
        }
        CoveringSet::FancyB { r, d, n, radius, mu } => {
            let (r, d, n) = (f64::from(r), f64::from(d), f64::from(n));
            let rd = r.powf(d);
            let r2 = radius * radius;
            (rd + r * n * d) * (6.0 * (d + 1.0) / t).ln()
                + rd * d / 2.0 * (r2 + mu * r).ln()
                + d * n * r / 2.0 * (r2 + mu * rd).ln()
                + (d - 1.0) * d * n * r * radius.ln()
        }
        CoveringSet::FancyBOrthonormal { r, d, n } => {
            let (r, d, n) = (f64::from(r), f64::from(d), f64::from(n));
            (r.powf(d) + d * n * r) * (3.0 * (d + 1.0) / t).ln()
        }
    })
}

/// `√(ln N(t))`, clamped at zero, and exactly zero once one point covers the set.
pub fn dudley_integrand(set: &CoveringSet, t: f64) -> Result<f64> {
    if set.trivial_radius().is_some_and(|r| t >= r) {
        set.validate()?;
        return Ok(0.0);
    }
    Ok(eval_covering_bound(set, t)?.max(0.0).sqrt())
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `∫₀¹ √(ln N(t)) dt` to absolute tolerance 1e-6.
///
/// The substitution `t = s²` removes the logarithmic blow-up at the origin.
pub fn dudley_estimate(set: &CoveringSet) -> Result<f64> {
    set.validate()?;
    let g = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            2.0 * s * dudley_integrand(set, s * s).expect("validated set, positive radius")
        }
    };
    Ok(adaptive_simpson(&g, 0.0, 1.0, 1e-6))
}
