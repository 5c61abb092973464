use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, standard_normals};
use crate::tensor::Matrix;

/// Entry bound constant of the orthonormal DCT-II basis:
/// `max |F_ij| ≤ SORS_DELTA / √n`.
pub const SORS_DELTA: f64 = SQRT_2;

/// `m × n` matrix with i.i.d. `N(0, 1/m)` entries.
///
/// Entries are drawn row by row, so for a fixed seed the first `m'` rows of a
/// larger draw equal (up to the `1/√m` scale) the rows of the smaller one.
pub fn make_gaussian(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data = standard_normals(&mut rng, m * n)
        .into_iter()
        .map(|v| v * scale)
        .collect();
    Matrix::new(m, n, data).expect("dimensions are positive")
}

/// Entry `(k, j)` of the orthonormal type-II DCT matrix of size `n`.
#[inline]
pub fn dct_entry(n: usize, k: usize, j: usize) -> f64 {
    let nf = n as f64;
    let c = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
    c * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
}

pub fn dct_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |k, j| dct_entry(n, k, j))
}

/// How SORS rows are drawn from the basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSampling {
    /// i.i.d. uniform with replacement; rows may repeat.
    #[default]
    Iid,
    /// Uniform without replacement; needs `m ≤ n`.
    Distinct,
}

/// Subsampled orthogonal ensemble with random signs, `A = √(n/m) H D`.
///
/// `F` is the orthonormal DCT-II; it is never stored, only the sampled row
/// indices of `H` and the diagonal of `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SorsEnsemble {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub sampling: RowSampling,
    /// Row of `F` used for each of the `m` output rows.
    pub row_sample: Vec<usize>,
    pub signs: Vec<f64>,
    pub delta: f64,
}

impl SorsEnsemble {
    /// `m > n` is allowed for i.i.d. rows but oversamples the basis.
    pub fn is_oversampled(&self) -> bool {
        self.m > self.n
    }

    pub fn scale(&self) -> f64 {
        (self.n as f64 / self.m as f64).sqrt()
    }

    /// Dense `m × n` matrix `√(n/m) H D`.
    pub fn to_matrix(&self) -> Matrix {
        let scale = self.scale();
        let mut data = Vec::with_capacity(self.m * self.n);
        for &k in &self.row_sample {
            data.extend((0..self.n).map(|j| scale * dct_entry(self.n, k, j) * self.signs[j]));
        }
        Matrix::new(self.m, self.n, data).expect("dimensions are positive")
    }
}

/// Draws a SORS ensemble with i.i.d. rows.
pub fn make_sors(m: usize, n: usize, seed: u64) -> SorsEnsemble {
    make_sors_with(m, n, seed, RowSampling::Iid).expect("i.i.d. rows accept any m")
}

/// Draws a SORS ensemble. Signs are drawn before rows, and distinct rows come
/// from a partial Fisher-Yates shuffle, so for a fixed seed a smaller `m` gives
/// a prefix of the row sample of a larger `m` under either rule.
pub fn make_sors_with(m: usize, n: usize, seed: u64, sampling: RowSampling) -> Result<SorsEnsemble> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("SORS dimensions must be positive, got {m}x{n}")));
    }
    if sampling == RowSampling::Distinct && m > n {
        return Err(Error::invalid(format!("cannot draw {m} distinct rows out of {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let signs = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let row_sample = match sampling {
        RowSampling::Iid => (0..m).map(|_| rng.random_range(0..n)).collect(),
        RowSampling::Distinct => {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..m {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            idx.truncate(m);
            idx
        }
    };
    Ok(SorsEnsemble {
        m,
        n,
        seed,
        sampling,
        row_sample,
        signs,
        delta: SORS_DELTA,
    })
}
