//! Demand-curve fitting and dynamic pricing for hotel revenue management.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the numerical side of
//! the system:
//!
//! - [`domain`]: rate ladders, booking horizons, demand scenarios and
//!   choice-set cumulation
//! - [`lp`]: a dense bounded-variable simplex solver
//! - [`spline`]: cubic smoothing splines posed as linear programs, with
//!   nonnegativity and rate-ordering constraints
//! - [`dp`]: the finite-horizon capacity-control dynamic program
//! - [`sim`]: controlled-environment demand simulation and studies
//! - [`metrics`]: WAPE, revenue change and nearest-date selection
//! - [`pipeline`]: per-target backtesting over an in-memory history
//!
//! File formats, ingestion, the CLI and the HTTP service live in the
//! `rmcurve` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod domain;
pub mod lp;
pub mod metrics;
pub mod pipeline;
pub mod sim;
pub mod dp;
pub mod spline;
