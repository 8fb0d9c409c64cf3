//! Dense optical flow: field storage, the interchange file format, and a
//! coarse-to-fine variational estimator.

mod field;
mod flo;
mod solver;

pub use field::FlowField;
pub use flo::{parse_flo, read_flo, write_flo, FLO_MAGIC};
pub use solver::{
    estimate_flow, estimator_by_name, FlowEstimator, FlowParams, VariationalFlow,
};
