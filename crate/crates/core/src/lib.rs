#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod fem;
pub mod flow;
pub mod math;
pub mod control;
pub mod mesh;
pub mod report;
pub mod sparse;
pub mod thermal;

pub use error::{Error, Result};
