//! Certify or refute form boundedness of second-order operators with
//! grid-sampled coefficients on the periodic torus.

pub mod calculus;
pub mod capacity;
pub mod error;
pub mod fbf;
pub mod fft;
pub mod form_norm;
pub mod field;
pub mod grid;
pub mod hodge;
pub mod measure;
pub mod oscillation;
pub mod presets;
pub mod verdict;
pub mod random;
pub mod report;

pub use error::{Error, Result};
pub use field::{Field, MatrixField, ScalarField, VectorField};
pub use grid::Grid;
