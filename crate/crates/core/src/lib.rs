//! Regression with fixed-weight sigmoid networks whose output layer is a
//! ridge solve, the projection-pursuit variant with random direction search,
//! baseline estimators and a simulation benchmark.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod baselines;
pub mod batch;
pub mod data;
pub mod error;
pub mod estimators;
pub mod features;
pub mod linalg;
pub mod netblocks;
pub mod ridge;
pub mod rng;
pub mod scalar;
pub mod simbench;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type BlockParamsF64 = netblocks::BlockParams<f64>;
pub type BlockParamsF32 = netblocks::BlockParams<f32>;
pub type FeatureDescriptorF64 = features::FeatureDescriptor<f64>;
pub type FeatureDescriptorF32 = features::FeatureDescriptor<f32>;
pub type DesignMatrixF64 = ridge::DesignMatrix<f64>;
pub type DesignMatrixF32 = ridge::DesignMatrix<f32>;
pub type RidgeSolutionF64 = ridge::RidgeSolution<f64>;
pub type RidgeSolutionF32 = ridge::RidgeSolution<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
