//! Static analysis of floating-point simulation programs with the
//! floating-point slopes abstract domain.
//!
//! The crate is organised bottom-up:
//!
//! - [`float`] and [`profile`]: directed rounding and format constants,
//! - [`interval`]: outward-rounded intervals,
//! - [`slope`]: the floating-point slopes values and their lattice,
//! - [`ir`], [`frontend`]: the program representation and the block-diagram
//!   model language that lowers to it,
//! - [`analyzer`]: the abstract simulation loop,
//! - [`oracle`]: concrete execution and soundness fuzzing.

pub mod analyzer;
pub mod domain;
pub mod float;
pub mod frontend;
pub mod interval;
pub mod ir;
pub mod oracle;
pub mod profile;
pub mod slope;

pub use interval::{DomainError, Interval, Thresholds};
pub use profile::{Precision, PrecisionProfile};
