//! Modewise measurement operators for low-rank tensors and their recovery by
//! tensor iterative hard thresholding (TIHT).
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense d-mode tensors, matrices, mode products, unfoldings and
//!   the reshaping operator that merges groups of modes.
//! * [`decomposition`]: HOSVD, the rank truncation operator `H_r` and random
//!   low-rank tensor generation.
//! * [`measurement`]: Gaussian and SORS ensembles and the vectorized, modewise
//!   and two-stage measurement operators with their adjoints.
//! * [`tiht`]: the classical TIHT solver.
//! * [`audit`]: empirical restricted-isometry estimates and numeric evaluators
//!   for the embedding-dimension and covering-number bounds.
//! * [`experiment`]: seeded recovery sweeps and CSV/JSON reports.
//!
//! Mode indices are zero-based throughout the API.

pub mod audit;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod measurement;
pub mod par;
pub mod rng;
pub mod tensor;
pub mod tiht;

pub use decomposition::{hosvd, random_low_rank, truncate_rank, RankVector, TuckerDecomposition};
pub use error::{Error, Result};
pub use measurement::{MeasurementOperator, NoisyMeasurement, SorsEnsemble};
pub use par::Execution;
pub use tensor::{DenseTensor, Matrix, ReshapePlan};
pub use tiht::{tiht_recover, TihtConfig, TihtResult};
