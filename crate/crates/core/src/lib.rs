// Comparisons such as `!(x > 0.0)` are written negated on purpose so that
// NaN is rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use kernel::{
    Kernel, KernelFamily, KernelProfile, Normalization, PositivityCertificate, Verdict,
};
