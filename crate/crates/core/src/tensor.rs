//! Dense tensors and matrices.
//!
//! Entries are stored row-major over multi-indices (the last index varies
//! fastest). With this linearization the vectorization of an outer product is
//! the Kronecker product of its factors, and merging consecutive modes is a
//! relabeling of the shape that leaves the data untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Kronecker product of two vectors: `(u ⊗ v)[i * |v| + j] = u[i] * v[j]`.
pub fn kronecker(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for &a in u {
        out.extend(v.iter().map(|&b| a * b));
    }
    out
}

/// Kronecker product of a list of vectors, left to right.
pub fn kronecker_all(vectors: &[&[f64]]) -> Vec<f64> {
    vectors.iter().fold(vec![1.0], |acc, v| kronecker(&acc, v))
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::shape(format!(
                "matvec: matrix has {} columns, vector has length {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`
    pub fn matvec_transposed(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::shape(format!(
                "transposed matvec: matrix has {} rows, vector has length {}",
                self.rows,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `A Aᵀ`
    pub fn gram_rows(&self) -> Matrix {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Largest entry of `|AᵀA - I|`, the deviation from orthonormal columns.
    pub fn column_orthonormality_defect(&self) -> f64 {
        let at = self.transpose();
        let g = at.gram_rows();
        let mut worst = 0.0f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Dense real d-mode tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::shape("a tensor needs at least one mode"));
    }
    if let Some(pos) = shape.iter().position(|&n| n == 0) {
        return Err(Error::shape(format!("mode {pos} has length 0")));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// One-mode tensor.
    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    /// Two-mode tensor holding a copy of `m`.
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Linear offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                debug_assert!(i < n);
                acc * n + i
            })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Same entries under a new shape with the same total length.
    pub fn reshaped(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    fn check_same_shape(&self, other: &DenseTensor, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Trace inner product.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other, "inner product")?;
        Ok(dot(&self.data, &other.data))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn scaled(&self, c: f64) -> DenseTensor {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy_assign(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }

    /// Splits the shape around mode `j` into `(left, n_j, right)` block sizes.
    fn blocks(&self, j: usize) -> (usize, usize, usize) {
        let left = self.shape[..j].iter().product();
        let right = self.shape[j + 1..].iter().product();
        (left, self.shape[j], right)
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.shape.len() {
            return Err(Error::invalid(format!(
                "mode index {j} out of range for a {}-mode tensor",
                self.shape.len()
            )));
        }
        Ok(())
    }

    /// The j-mode product `X ×_j U` for `U` of shape `m × n_j`.
    pub fn mode_product(&self, u: &Matrix, j: usize) -> Result<DenseTensor> {
        self.check_mode(j)?;
        let (left, nj, right) = self.blocks(j);
        if u.cols() != nj {
            return Err(Error::shape(format!(
                "mode-{j} product: matrix has {} columns but mode length is {nj}",
                u.cols()
            )));
        }
        let m = u.rows();
        let mut out = vec![0.0; left * m * right];
        for l in 0..left {
            let src = &self.data[l * nj * right..(l + 1) * nj * right];
            let dst = &mut out[l * m * right..(l + 1) * m * right];
            if right == 1 {
                for (a, d) in dst.iter_mut().enumerate() {
                    *d = dot(u.row(a), src);
                }
            } else {
                for a in 0..m {
                    let d = &mut dst[a * right..(a + 1) * right];
                    for (k, &coef) in u.row(a).iter().enumerate() {
                        if coef != 0.0 {
                            axpy(coef, &src[k * right..(k + 1) * right], d);
                        }
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[j] = m;
        Ok(Self { shape, data: out })
    }

    /// `X ×_j Uᵀ` without forming the transpose; `U` has shape `n_j × m`.
    pub fn mode_product_transposed(&self, u: &Matrix, j: usize) -> Result<DenseTensor> {
        self.check_mode(j)?;
        let (left, nj, right) = self.blocks(j);
        if u.rows() != nj {
            return Err(Error::shape(format!(
                "transposed mode-{j} product: matrix has {} rows but mode length is {nj}",
                u.rows()
            )));
        }
        let m = u.cols();
        let mut out = vec![0.0; left * m * right];
        for l in 0..left {
            let src = &self.data[l * nj * right..(l + 1) * nj * right];
            let dst = &mut out[l * m * right..(l + 1) * m * right];
            if right == 1 {
                for (a, &s) in src.iter().enumerate() {
                    if s != 0.0 {
                        axpy(s, u.row(a), dst);
                    }
                }
            } else {
                for a in 0..nj {
                    let s = &src[a * right..(a + 1) * right];
                    for (k, &coef) in u.row(a).iter().enumerate() {
                        if coef != 0.0 {
                            axpy(coef, s, &mut dst[k * right..(k + 1) * right]);
                        }
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[j] = m;
        Ok(Self { shape, data: out })
    }

    /// Mode-j matricization: `n_j × ∏_{i≠j} n_i`, remaining modes in natural
    /// order with the last one fastest.
    pub fn unfold(&self, j: usize) -> Result<Matrix> {
        self.check_mode(j)?;
        let (left, nj, right) = self.blocks(j);
        let cols = left * right;
        let mut out = vec![0.0; nj * cols];
        for l in 0..left {
            for k in 0..nj {
                let src = &self.data[(l * nj + k) * right..(l * nj + k + 1) * right];
                out[k * cols + l * right..k * cols + (l + 1) * right].copy_from_slice(src);
            }
        }
        Matrix::new(nj, cols, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, j: usize, shape: &[usize]) -> Result<DenseTensor> {
        let len = check_shape(shape)?;
        if j >= shape.len() {
            return Err(Error::invalid(format!("mode index {j} out of range")));
        }
        if m.rows() != shape[j] || m.rows() * m.cols() != len {
            return Err(Error::shape(format!(
                "cannot fold a {}x{} matrix along mode {j} into {shape:?}",
                m.rows(),
                m.cols()
            )));
        }
        let nj = shape[j];
        let left: usize = shape[..j].iter().product();
        let right: usize = shape[j + 1..].iter().product();
        let cols = left * right;
        let mut data = vec![0.0; len];
        for l in 0..left {
            for k in 0..nj {
                data[(l * nj + k) * right..(l * nj + k + 1) * right]
                    .copy_from_slice(&m.data()[k * cols + l * right..k * cols + (l + 1) * right]);
            }
        }
        DenseTensor::new(shape.to_vec(), data)
    }
}

/// Outer product `v¹ ∘ … ∘ v^d`.
pub fn outer_product(vectors: &[&[f64]]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(Error::invalid("outer product of an empty list"));
    }
    if vectors.iter().any(|v| v.is_empty()) {
        return Err(Error::invalid("outer product factor is empty"));
    }
    let shape = vectors.iter().map(|v| v.len()).collect();
    DenseTensor::new(shape, kronecker_all(vectors))
}

/// Grouping of every `kappa` consecutive modes into one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReshapePlan {
    kappa: usize,
    source_shape: Vec<usize>,
    target_shape: Vec<usize>,
}

impl ReshapePlan {
    pub fn new(source_shape: &[usize], kappa: usize) -> Result<Self> {
        check_shape(source_shape)?;
        let d = source_shape.len();
        if kappa == 0 || !d.is_multiple_of(kappa) {
            return Err(Error::invalid(format!(
                "grouping factor kappa={kappa} must divide the mode count d={d}"
            )));
        }
        let target_shape = source_shape
            .chunks(kappa)
            .map(|c| c.iter().product())
            .collect();
        Ok(Self {
            kappa,
            source_shape: source_shape.to_vec(),
            target_shape,
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn source_shape(&self) -> &[usize] {
        &self.source_shape
    }

    pub fn target_shape(&self) -> &[usize] {
        &self.target_shape
    }

    /// Number of modes after reshaping, `d / kappa`.
    pub fn target_modes(&self) -> usize {
        self.target_shape.len()
    }

    pub fn flatten(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.shape() != self.source_shape.as_slice() {
            return Err(Error::shape(format!(
                "reshape expects {:?}, got {:?}",
                self.source_shape,
                x.shape()
            )));
        }
        // Row-major grouping of consecutive modes keeps the linear order.
        x.clone().reshaped(self.target_shape.clone())
    }

    pub fn unflatten(&self, y: &DenseTensor) -> Result<DenseTensor> {
        if y.shape() != self.target_shape.as_slice() {
            return Err(Error::shape(format!(
                "unflatten expects {:?}, got {:?}",
                self.target_shape,
                y.shape()
            )));
        }
        y.clone().reshaped(self.source_shape.clone())
    }
}
