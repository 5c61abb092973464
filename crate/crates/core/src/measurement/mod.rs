//! Random measurement ensembles and the linear measurement operators built
//! from them.

mod ensemble;
mod operator;
mod sidecar;

pub use ensemble::{
    dct_entry, dct_matrix, make_gaussian, make_sors, make_sors_with, RowSampling, SorsEnsemble, SORS_DELTA,
};
pub use operator::{measure, MeasurementOperator, NoisyMeasurement};
pub use sidecar::{read_operator, write_operator, SIDECAR_MAGIC, SIDECAR_VERSION};
