pub mod dynamics;
pub mod error;
pub mod fock;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod special;

pub use error::{Error, Result};
