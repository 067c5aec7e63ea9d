pub mod coefficients;
pub mod combinatorics;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod scenario;
pub mod theory_checks;

pub use error::{LandauError, Result};
