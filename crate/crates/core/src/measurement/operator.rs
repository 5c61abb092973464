use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, unit_sphere};
use crate::tensor::{DenseTensor, Matrix, ReshapePlan};

/// Linear map from tensors of `input_shape` to `R^output_length`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasurementOperator {
    /// `x ↦ A vect(x)`
    Vectorized { input_shape: Vec<usize>, matrix: Matrix },
    /// `x ↦ vect(R(x) ×_1 A_1 … ×_{d'} A_{d'})`
    Modewise { plan: ReshapePlan, matrices: Vec<Matrix> },
    /// `x ↦ A_2nd vect(R(x) ×_1 A_1 … ×_{d'} A_{d'})`
    TwoStage {
        plan: ReshapePlan,
        matrices: Vec<Matrix>,
        second: Matrix,
    },
}

fn check_modewise(plan: &ReshapePlan, matrices: &[Matrix]) -> Result<usize> {
    if matrices.len() != plan.target_modes() {
        return Err(Error::shape(format!(
            "reshaped tensor has {} modes but {} matrices were given",
            plan.target_modes(),
            matrices.len()
        )));
    }
    for (i, (a, &n)) in matrices.iter().zip(plan.target_shape()).enumerate() {
        if a.cols() != n {
            return Err(Error::shape(format!(
                "matrix {i} has {} columns, reshaped mode length is {n}",
                a.cols()
            )));
        }
    }
    Ok(matrices.iter().map(Matrix::rows).product())
}

impl MeasurementOperator {
    pub fn vectorized(input_shape: Vec<usize>, matrix: Matrix) -> Result<Self> {
        let len: usize = input_shape.iter().product();
        if input_shape.is_empty() || len == 0 {
            return Err(Error::shape(format!("invalid input shape {input_shape:?}")));
        }
        if matrix.cols() != len {
            return Err(Error::shape(format!(
                "vectorized operator: matrix has {} columns, tensor has {len} entries",
                matrix.cols()
            )));
        }
        Ok(Self::Vectorized { input_shape, matrix })
    }

    pub fn modewise(plan: ReshapePlan, matrices: Vec<Matrix>) -> Result<Self> {
        check_modewise(&plan, &matrices)?;
        Ok(Self::Modewise { plan, matrices })
    }

    pub fn two_stage(plan: ReshapePlan, matrices: Vec<Matrix>, second: Matrix) -> Result<Self> {
        let inner = check_modewise(&plan, &matrices)?;
        if second.cols() != inner {
            return Err(Error::shape(format!(
                "second-stage matrix has {} columns, first stage produces {inner}",
                second.cols()
            )));
        }
        Ok(Self::TwoStage {
            plan,
            matrices,
            second,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        match self {
            Self::Vectorized { input_shape, .. } => input_shape,
            Self::Modewise { plan, .. } | Self::TwoStage { plan, .. } => plan.source_shape(),
        }
    }

    pub fn output_length(&self) -> usize {
        match self {
            Self::Vectorized { matrix, .. } => matrix.rows(),
            Self::Modewise { matrices, .. } => matrices.iter().map(Matrix::rows).product(),
            Self::TwoStage { second, .. } => second.rows(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Vectorized { .. } => "vectorized",
            Self::Modewise { .. } => "modewise",
            Self::TwoStage { .. } => "two_stage",
        }
    }

    /// Number of stored matrix entries.
    pub fn storage_footprint(&self) -> usize {
        let size = |m: &Matrix| m.rows() * m.cols();
        match self {
            Self::Vectorized { matrix, .. } => size(matrix),
            Self::Modewise { matrices, .. } => matrices.iter().map(size).sum(),
            Self::TwoStage {
                matrices, second, ..
            } => matrices.iter().map(size).sum::<usize>() + size(second),
        }
    }

    fn check_input(&self, x: &DenseTensor) -> Result<()> {
        if x.shape() != self.input_shape() {
            return Err(Error::shape(format!(
                "operator expects input of shape {:?}, got {:?}",
                self.input_shape(),
                x.shape()
            )));
        }
        Ok(())
    }

    fn apply_modewise(plan: &ReshapePlan, matrices: &[Matrix], x: &DenseTensor) -> Result<Vec<f64>> {
        let y = matrices
            .iter()
            .enumerate()
            .try_fold(plan.flatten(x)?, |acc, (i, a)| acc.mode_product(a, i))?;
        Ok(y.into_data())
    }

    fn adjoint_modewise(plan: &ReshapePlan, matrices: &[Matrix], y: Vec<f64>) -> Result<DenseTensor> {
        let shape = matrices.iter().map(Matrix::rows).collect();
        let t = matrices
            .iter()
            .enumerate()
            .try_fold(DenseTensor::new(shape, y)?, |acc, (i, a)| {
                acc.mode_product_transposed(a, i)
            })?;
        plan.unflatten(&t)
    }

    /// `L(x)`
    pub fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match self {
            Self::Vectorized { matrix, .. } => matrix.matvec(x.data()),
            Self::Modewise { plan, matrices } => Self::apply_modewise(plan, matrices, x),
            Self::TwoStage {
                plan,
                matrices,
                second,
            } => second.matvec(&Self::apply_modewise(plan, matrices, x)?),
        }
    }

    /// `L*(y)`, satisfying `⟨L(x), y⟩ = ⟨x, L*(y)⟩`.
    pub fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        if y.len() != self.output_length() {
            return Err(Error::shape(format!(
                "adjoint expects a vector of length {}, got {}",
                self.output_length(),
                y.len()
            )));
        }
        match self {
            Self::Vectorized {
                input_shape,
                matrix,
            } => DenseTensor::new(input_shape.clone(), matrix.matvec_transposed(y)?),
            Self::Modewise { plan, matrices } => Self::adjoint_modewise(plan, matrices, y.to_vec()),
            Self::TwoStage {
                plan,
                matrices,
                second,
            } => Self::adjoint_modewise(plan, matrices, second.matvec_transposed(y)?),
        }
    }

    /// Largest singular value of `L`, estimated by power iteration on `L*L`.
    pub fn operator_norm_estimate(&self, iterations: usize, seed: u64) -> Result<f64> {
        let len: usize = self.input_shape().iter().product();
        let mut x = DenseTensor::new(
            self.input_shape().to_vec(),
            unit_sphere(&mut rng_from_seed(seed), len),
        )?;
        let mut sigma = 0.0;
        for _ in 0..iterations.max(1) {
            let lx = self.apply(&x)?;
            sigma = crate::tensor::norm2(&lx);
            let back = self.adjoint(&lx)?;
            let n = back.norm();
            if n == 0.0 {
                return Ok(0.0);
            }
            x = back.scaled(1.0 / n);
        }
        Ok(sigma)
    }
}

/// `y = L(x) + e` together with the noise level used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyMeasurement {
    pub y: Vec<f64>,
    pub noise_norm: f64,
}

/// Measures `x` and adds noise of Euclidean norm `noise_norm` in a uniformly
/// random direction.
pub fn measure(
    op: &MeasurementOperator,
    x: &DenseTensor,
    noise_norm: f64,
    seed: u64,
) -> Result<NoisyMeasurement> {
    if !(noise_norm >= 0.0) || !noise_norm.is_finite() {
        return Err(Error::invalid(format!("noise norm must be finite and ≥ 0, got {noise_norm}")));
    }
    let mut y = op.apply(x)?;
    if noise_norm > 0.0 {
        let dir = unit_sphere(&mut rng_from_seed(seed), y.len());
        y.iter_mut().zip(dir).for_each(|(v, e)| *v += noise_norm * e);
    }
    Ok(NoisyMeasurement { y, noise_norm })
}
