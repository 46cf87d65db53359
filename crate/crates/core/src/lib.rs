//! Numerical laboratory for boundary behaviour of symmetric nonlocal
//! elliptic operators with rough Lévy kernels.

pub mod boundary;
pub mod error;
pub mod interp;
pub mod io;
pub mod kernels;
pub mod montecarlo;
pub mod quadrature;
pub mod reproduce;
pub mod scenario;
pub mod solver;
pub mod symbol;
pub mod wiener_hopf;

pub use error::{Error, Result};
