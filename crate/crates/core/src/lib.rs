pub mod cli;
pub mod error;
pub mod gusts;
pub mod mrac;
pub mod numerics;
pub mod plantio;
pub mod plant3dof;
pub mod romgen;
pub mod sim;

pub use error::{Error, Result};
