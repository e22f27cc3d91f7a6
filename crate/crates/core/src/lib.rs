pub mod acceptance;
pub mod cli;
pub mod czindex;
pub mod error;
pub mod hormander;
pub mod orbits;
pub mod rfhcomplex;
pub mod symlin;
pub mod tentacular;

pub use error::{Error, ErrorClass, Result};
