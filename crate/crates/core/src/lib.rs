pub mod catalog;
pub mod characteristics;
pub mod energy;
pub mod error;
pub mod lagrangian;
pub mod nonlinearity;
pub mod numerics;
pub mod pde;
pub mod verify;

pub use error::{Error, Result};
