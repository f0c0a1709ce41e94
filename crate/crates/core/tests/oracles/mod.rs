//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the code under test.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod dp;
pub mod lp;
