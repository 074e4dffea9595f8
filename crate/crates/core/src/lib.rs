//! Multivariate regular variation on the sphere: spectral measures, the
//! models that produce them, their transforms and tail estimators.

// Checks such as `!(x > 0.0)` are written to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod measure;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod transforms;
