//! Real solutions of random homogeneous polynomial systems on the unit sphere.
//!
//! Two solvers are provided: [`hessdesc`] (Hessian Descent, for
//! under-determined systems in many variables) and [`mss`] (Multi-Scale
//! Search, for square systems in few variables). [`driver`] picks between
//! them; [`newton`] certifies their output; [`verify`] holds independent
//! brute-force oracles.

// `!(a > b)` comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod error;
pub mod hessdesc;
pub mod linalg;
pub mod mss;
pub mod newton;
pub mod polysys;
pub mod spectral;
pub mod verify;

pub use driver::{regime, solve_generated, solve_given, Regime, RunReport, SolverConfig};
pub use error::{Error, Result};
pub use hessdesc::{hd_run, HDConfig, HDResult};
pub use mss::{mss_params, mss_run, MSSConfig, MSSParams, MSSResult};
pub use newton::{certify, newton_step, CertConfig, CertMode, CertReport};
pub use polysys::{PolynomialSystem, SpherePoint};
