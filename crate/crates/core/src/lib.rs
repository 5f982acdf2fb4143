//! Random shifts of finite type on `Z^d`.
//!
//! Every `F_n`-pattern over a finite alphabet is kept independently with
//! probability `alpha`; the kept patterns define the shift `X_omega` of
//! configurations all of whose `n`-windows are kept. The crate samples such
//! shifts, decides or certifies emptiness, counts periodic orbits of the full
//! shift, evaluates truncated zeta products, bounds entropy from both sides,
//! builds repeat covers of patterns, and runs reproducible Monte Carlo
//! experiments over the ensemble.

pub mod analysis;
mod bigcount;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod orbits;
pub mod patterns;
pub mod repeatcover;
pub mod zeta;

pub use error::{Result, SftError};
