use serde::{Deserialize, Serialize};

use crate::decomposition::{random_low_rank, RankVector};
use crate::error::{Error, Result};
use crate::measurement::MeasurementOperator;
use crate::par::{self, Execution};
use crate::rng::{mix_seed, rng_from_seed, unit_sphere, SeededRng};
use crate::tensor::{dot, kronecker_all, norm2, DenseTensor, Matrix};

pub const SAMPLED_LOWER_BOUND_NOTE: &str =
    "delta_hat is a maximum over random samples and only lower-bounds the true isometry constant";

/// Set from which audit samples are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleSet {
    /// Unit-norm random tensors of multilinear rank `r` in the operator's input space.
    LowRank(RankVector),
    /// Kronecker products of `kappa` unit vectors in `R^n`.
    S1 { n: usize, kappa: usize },
    /// Normalized sums of two orthogonal `S1` elements.
    S2 { n: usize, kappa: usize },
}

impl SampleSet {
    pub fn label(&self) -> String {
        match self {
            SampleSet::LowRank(r) => format!("low_rank{:?}", r.as_slice()),
            SampleSet::S1 { n, kappa } => format!("S1(n={n},kappa={kappa})"),
            SampleSet::S2 { n, kappa } => format!("S2(n={n},kappa={kappa})"),
        }
    }
}

fn s1_from(rng: &mut SeededRng, n: usize, kappa: usize) -> Vec<Vec<f64>> {
    (0..kappa).map(|_| unit_sphere(rng, n)).collect()
}

fn kron_of(factors: &[Vec<f64>]) -> Vec<f64> {
    let refs: Vec<&[f64]> = factors.iter().map(|v| v.as_slice()).collect();
    kronecker_all(&refs)
}

/// Unit vector `u¹ ⊗ … ⊗ u^κ` with each `uⁱ` uniform on the sphere in `R^n`.
pub fn sample_s1(n: usize, kappa: usize, seed: u64) -> Vec<f64> {
    assert!(n >= 1 && kappa >= 1, "n and kappa must be positive");
    kron_of(&s1_from(&mut rng_from_seed(seed), n, kappa))
}

/// Orthogonal pair `(x, y)` of `S1` elements and their normalized sum.
///
/// Orthogonality is obtained by projecting the first factor of `y` off the
/// first factor of `x`, which makes `⟨x, y⟩ = ∏ ⟨uⁱ, vⁱ⟩` vanish. For `n = 1`
/// no orthogonal pair exists and an error is returned.
pub fn sample_s2_pair(n: usize, kappa: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if n < 2 || kappa < 1 {
        return Err(Error::invalid(format!(
            "S2 needs n ≥ 2 and kappa ≥ 1, got n={n}, kappa={kappa}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let us = s1_from(&mut rng, n, kappa);
    let mut vs = s1_from(&mut rng, n, kappa);
    loop {
        let c = dot(&us[0], &vs[0]);
        let mut v: Vec<f64> = vs[0].iter().zip(&us[0]).map(|(a, b)| a - c * b).collect();
        let c2 = dot(&us[0], &v);
        v.iter_mut().zip(&us[0]).for_each(|(a, b)| *a -= c2 * b);
        let nv = norm2(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|a| *a /= nv);
            vs[0] = v;
            break;
        }
        vs[0] = unit_sphere(&mut rng, n);
    }
    let x = kron_of(&us);
    let y = kron_of(&vs);
    let mut z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let nz = norm2(&z);
    z.iter_mut().for_each(|a| *a /= nz);
    Ok((x, y, z))
}

pub fn sample_s2(n: usize, kappa: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_s2_pair(n, kappa, seed)?.2)
}

/// `|‖L(x)‖² − ‖x‖²| / ‖x‖²`
pub fn relative_distortion(op: &MeasurementOperator, x: &DenseTensor) -> Result<f64> {
    let nx = x.norm().powi(2);
    if nx == 0.0 {
        return Err(Error::Degenerate("distortion of the zero tensor".into()));
    }
    let lx = op.apply(x)?;
    Ok((dot(&lx, &lx) - nx).abs() / nx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionEstimate {
    pub delta_hat: f64,
    pub sample_count: usize,
    pub set_label: String,
    pub seed: u64,
    pub note: String,
}

/// Maximum relative distortion of `op` over `samples` draws from `set`.
///
/// Sample `i` is generated from `mix_seed(seed, [i])`, so a larger sample
/// count extends the sample set and can only increase `delta_hat`.
pub fn estimate_distortion(
    op: &MeasurementOperator,
    set: &SampleSet,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<DistortionEstimate> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let shape = op.input_shape().to_vec();
    let input_len: usize = shape.iter().product();
    match set {
        SampleSet::LowRank(r) => r.check_fits(&shape)?,
        SampleSet::S1 { n, kappa } | SampleSet::S2 { n, kappa } => {
            let len = n.checked_pow(*kappa as u32).unwrap_or(usize::MAX);
            if len != input_len {
                return Err(Error::shape(format!(
                    "{} has vectors of length {len}, operator input has {input_len} entries",
                    set.label()
                )));
            }
        }
    }
    let draw = |i: usize| -> Result<f64> {
        let s = mix_seed(seed, &[i as u64]);
        let x = match set {
            SampleSet::LowRank(r) => random_low_rank(&shape, r, s)?,
            SampleSet::S1 { n, kappa } => DenseTensor::new(shape.clone(), sample_s1(*n, *kappa, s))?,
            SampleSet::S2 { n, kappa } => DenseTensor::new(shape.clone(), sample_s2(*n, *kappa, s)?)?,
        };
        relative_distortion(op, &x)
    };
    let values = par::map_indexed(exec, samples, draw);
    let mut delta_hat = 0.0f64;
    for v in values {
        delta_hat = delta_hat.max(v?);
    }
    Ok(DistortionEstimate {
        delta_hat,
        sample_count: samples,
        set_label: set.label(),
        seed,
        note: SAMPLED_LOWER_BOUND_NOTE.to_string(),
    })
}

fn check_orthonormal(a: &Matrix, vectors: &[Vec<f64>]) -> Result<()> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != a.cols() {
            return Err(Error::shape(format!(
                "vector {i} has length {}, matrix has {} columns",
                v.len(),
                a.cols()
            )));
        }
        if (dot(v, v) - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("vector {i} is not unit norm")));
        }
        for (j, w) in vectors[..i].iter().enumerate() {
            if dot(v, w).abs() > 1e-10 {
                return Err(Error::invalid(format!("vectors {j} and {i} are not orthogonal")));
            }
        }
    }
    Ok(())
}

/// `max_{i≠j} |⟨A vᵢ, A vⱼ⟩|` for an orthonormal family.
pub fn max_coherence(a: &Matrix, vectors: &[Vec<f64>]) -> Result<f64> {
    check_orthonormal(a, vectors)?;
    let images = vectors
        .iter()
        .map(|v| a.matvec(v))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..images.len() {
        for j in 0..i {
            worst = worst.max(dot(&images[i], &images[j]).abs());
        }
    }
    Ok(worst)
}

/// True iff the images of an orthonormal family are `eps`-coherent.
pub fn coherence_check(a: &Matrix, vectors: &[Vec<f64>], eps: f64) -> Result<bool> {
    Ok(max_coherence(a, vectors)? <= eps)
}

/// Smallest `ε` for which `A` is an `ε`-isometry on all `vᵢ ± vⱼ`, `i ≠ j`.
pub fn pairwise_distortion(a: &Matrix, vectors: &[Vec<f64>]) -> Result<f64> {
    check_orthonormal(a, vectors)?;
    let mut worst = 0.0f64;
    for i in 0..vectors.len() {
        for j in 0..i {
            for sign in [1.0, -1.0] {
                let w: Vec<f64> = vectors[i].iter().zip(&vectors[j]).map(|(p, q)| p + sign * q).collect();
                let aw = a.matvec(&w)?;
                let nw = dot(&w, &w);
                worst = worst.max((dot(&aw, &aw) - nw).abs() / nw);
            }
        }
    }
    Ok(worst)
}
