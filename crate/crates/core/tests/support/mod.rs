//! Fixtures shared by several test targets; each target uses a subset.
#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;
pub mod overfit;
pub mod pipeline;
