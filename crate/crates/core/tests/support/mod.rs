//! Independent oracles shared by the integration tests. Nothing here calls
//! the crate's loss or gradient code.
#![allow(dead_code)]

pub mod literal;
pub mod naive;
pub mod oracles;
pub mod tape;
