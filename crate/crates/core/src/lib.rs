//! Pre-publication news popularity forecasting.
//!
//! The numeric kernels ([`linalg`], [`regression`], [`svr`], [`metrics`])
//! are generic over [`Scalar`] (`f32` or `f64`); the pipeline modules work
//! in `f64`.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose, and the
// numeric kernels index several arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod articlepred;
pub mod corpus;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod metrics;
pub mod regression;
pub mod scalar;
pub mod svr;
pub mod textproc;
pub mod topics;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Scalar;

pub type Regression = regression::LinearRegression<f64>;
pub type Svr = svr::LinearSvr<f64>;
pub type SvrParams = svr::SvrParams<f64>;
pub type Standardizer = regression::Standardizer<f64>;
