//! Polynomial homotopy continuation with an adaptive predictor-corrector path tracker.
//!
//! The numerical core is generic over the real scalar type ([`Scalar`], `f32` or `f64`);
//! the aliases below fix it to `f64`.

pub mod algebra;
pub mod corrector;
pub mod homotopy;
pub mod linalg;
pub mod predictor;
pub mod projective;
pub mod scalar;
pub mod stepcontrol;
pub mod tracker;

pub use scalar::{Scalar, C};

pub type Complex64 = C<f64>;
pub type System = algebra::PolynomialSystem<f64>;
pub type Poly = algebra::Polynomial<f64>;
pub type Homotopy = homotopy::Homotopy<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type CorrectorOptions = corrector::CorrectorOptions<f64>;
pub type CorrectorResult = corrector::CorrectorResult<f64>;
pub type TrackerOptions = tracker::TrackerOptions<f64>;
pub type PathResult = tracker::PathResult<f64>;
pub type SolveOptions = tracker::SolveOptions<f64>;
pub type SolveReport = tracker::SolveReport<f64>;
pub type ControllerParams = stepcontrol::ControllerParams<f64>;
