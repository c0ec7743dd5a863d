pub mod ddrom;
pub mod dg;
pub mod error;
pub mod fs_models;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod rom;

pub use error::{Error, Result};
