pub mod error;
pub mod farey;
pub mod field;
pub mod kernel;
pub mod lattice;
pub mod quad_count;
pub mod quadrature;
pub mod rational;
pub mod space;
pub mod spherical;
pub mod strichartz;

pub use error::{Error, Result};
