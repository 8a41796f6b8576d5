// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod diagrams;
mod error;
pub mod hilbert;
mod linalg;
pub mod master;
pub mod model;
pub mod quadrature;
mod serde_nan;
pub mod sweep;

pub use error::{Error, Result};
pub use hilbert::{FockBasis, OperatorMatrix, SuperOperator};
pub use master::{DensityMatrix, FloquetSolution};
pub use model::{Direction, EffectiveHamiltonian, GreenMatrix, SystemConfig};
pub use num_complex::Complex64 as C64;
pub use sweep::{ScanResult, ScanSpec};
