//! Shared bodies of the randomized suites, so the acceptance target can run
//! the same checks the dedicated test targets do.
#![allow(dead_code)]

pub mod props;
pub mod unif;
