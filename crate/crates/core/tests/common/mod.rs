//! Helpers shared by integration tests.
#![allow(dead_code)]

pub mod charts;
pub mod criteria;
pub mod oracles;
