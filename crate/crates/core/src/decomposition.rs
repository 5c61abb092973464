//! HOSVD, rank truncation and random low-rank tensors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, standard_normals};
use crate::tensor::{dot, DenseTensor, Matrix};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Multilinear (HOSVD) rank `(r_1, …, r_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(Error::invalid(format!("ranks must be positive, got {ranks:?}")));
        }
        Ok(Self(ranks))
    }

    /// `(r, r, …, r)` with `d` entries.
    pub fn uniform(r: usize, d: usize) -> Result<Self> {
        Self::new(vec![r; d])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks `r_i ≤ n_i` componentwise.
    pub fn check_fits(&self, shape: &[usize]) -> Result<()> {
        if self.0.len() != shape.len() {
            return Err(Error::invalid(format!(
                "rank {:?} has {} entries but the tensor has {} modes",
                self.0,
                self.0.len(),
                shape.len()
            )));
        }
        if let Some(i) = (0..shape.len()).find(|&i| self.0[i] > shape[i]) {
            return Err(Error::invalid(format!(
                "rank {} exceeds mode length {} in mode {i}",
                self.0[i], shape[i]
            )));
        }
        Ok(())
    }
}

/// `X = C ×_1 U¹ ×_2 … ×_d U^d` with orthonormal factor columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuckerDecomposition {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerDecomposition {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        self.factors
            .iter()
            .enumerate()
            .try_fold(self.core.clone(), |acc, (i, u)| acc.mode_product(u, i))
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }
}

/// Left singular vectors and singular values of `m`, ordered by decreasing
/// singular value. Each vector is sign-fixed so that its largest-magnitude
/// entry is positive.
pub fn left_singular(m: &Matrix) -> (Matrix, Vec<f64>) {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let svd = dm.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let s = svd.singular_values;
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let values = order.iter().map(|&i| s[i]).collect();
    let mut out = Matrix::zeros(m.rows(), k);
    for (col, &src) in order.iter().enumerate() {
        let mut best = 0usize;
        for i in 0..m.rows() {
            if u[(i, src)].abs() > u[(best, src)].abs() {
                best = i;
            }
        }
        let sign = if u[(best, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m.rows() {
            out.set(i, col, sign * u[(i, src)]);
        }
    }
    (out, values)
}

/// Singular values of the mode-`j` unfolding, largest first.
pub fn unfolding_spectrum(x: &DenseTensor, j: usize) -> Result<Vec<f64>> {
    let m = x.unfold(j)?;
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let mut s: Vec<f64> = dm.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn numerical_rank(spectrum: &[f64], rel_tol: f64) -> usize {
    match spectrum.first() {
        Some(&s1) if s1 > 0.0 => spectrum.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Multilinear rank measured from the unfolding spectra.
pub fn multilinear_rank(x: &DenseTensor, rel_tol: f64) -> Result<Vec<usize>> {
    (0..x.ndim())
        .map(|j| Ok(numerical_rank(&unfolding_spectrum(x, j)?, rel_tol)))
        .collect()
}

fn leading_columns(u: &Matrix, k: usize) -> Matrix {
    Matrix::from_fn(u.rows(), k, |i, j| u.get(i, j))
}

fn project_core(x: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    factors
        .iter()
        .enumerate()
        .try_fold(x.clone(), |acc, (i, u)| acc.mode_product_transposed(u, i))
}

/// Higher-order SVD at numerical multilinear rank.
///
/// Factor `i` holds the left singular vectors of the mode-`i` unfolding whose
/// singular values exceed [`RANK_TOLERANCE`]` · σ₁`; the core is
/// `X ×_1 U¹ᵀ … ×_d U^dᵀ`.
pub fn hosvd(x: &DenseTensor) -> Result<TuckerDecomposition> {
    if x.data().iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("HOSVD of the zero tensor".into()));
    }
    let factors = (0..x.ndim())
        .map(|j| {
            let (u, s) = left_singular(&x.unfold(j)?);
            let r = numerical_rank(&s, RANK_TOLERANCE).max(1);
            Ok(leading_columns(&u, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let core = project_core(x, &factors)?;
    Ok(TuckerDecomposition { core, factors })
}

/// Truncated HOSVD: projects every mode onto its top-`r_i` left singular
/// subspace. This is the thresholding operator `H_r` used by TIHT.
pub fn truncate_rank(z: &DenseTensor, r: &RankVector) -> Result<DenseTensor> {
    r.check_fits(z.shape())?;
    if z.data().iter().all(|&v| v == 0.0) {
        return Ok(z.clone());
    }
    let factors = (0..z.ndim())
        .map(|j| {
            let (u, _) = left_singular(&z.unfold(j)?);
            Ok(leading_columns(&u, r.as_slice()[j].min(u.cols())))
        })
        .collect::<Result<Vec<_>>>()?;
    let core = project_core(z, &factors)?;
    TuckerDecomposition { core, factors }.reconstruct()
}

/// Orthonormalizes the columns of `m` (modified Gram–Schmidt, two passes).
pub fn orthonormalize_columns(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = (m.rows(), m.cols());
    if cols > rows {
        return Err(Error::invalid(format!("cannot orthonormalize {cols} columns in R^{rows}")));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = m.column(j);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = dot(&v, &v).sqrt();
        if n <= 1e-12 {
            return Err(Error::Degenerate(format!("column {j} is linearly dependent")));
        }
        v.iter_mut().for_each(|a| *a /= n);
        basis.push(v);
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| basis[j][i]))
}

/// Random tensor of multilinear rank `r`: Gaussian core, orthonormalized
/// Gaussian factors, scaled to unit Frobenius norm.
pub fn random_low_rank(shape: &[usize], r: &RankVector, seed: u64) -> Result<DenseTensor> {
    r.check_fits(shape)?;
    let mut rng = rng_from_seed(seed);
    let core_len = r.as_slice().iter().product();
    let core = DenseTensor::new(r.as_slice().to_vec(), standard_normals(&mut rng, core_len))?;
    let factors = shape
        .iter()
        .zip(r.as_slice())
        .map(|(&n, &k)| {
            let g = Matrix::new(n, k, standard_normals(&mut rng, n * k))?;
            orthonormalize_columns(&g)
        })
        .collect::<Result<Vec<_>>>()?;
    let x = TuckerDecomposition { core, factors }.reconstruct()?;
    let norm = x.norm();
    Ok(x.scaled(1.0 / norm))
}

/// True iff, for every mode, distinct slices of `c` are orthogonal:
/// `|⟨C_{k_i=p}, C_{k_i=q}⟩| ≤ tol · ‖C‖²` for all `p ≠ q`.
pub fn check_orthogonal_subtensors(c: &DenseTensor, tol: f64) -> bool {
    let scale = c.norm().powi(2);
    if scale == 0.0 {
        return true;
    }
    (0..c.ndim()).all(|i| {
        let g = c.unfold(i).expect("mode in range").gram_rows();
        (0..g.rows()).all(|p| (0..p).all(|q| g.get(p, q).abs() <= tol * scale))
    })
}
