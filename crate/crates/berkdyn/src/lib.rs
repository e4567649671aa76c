//! Exact computation of the dynamics of tame polynomials on the Berkovich
//! affine line over exactly representable non-Archimedean fields.

pub mod error;
pub mod valued_field;
pub mod berkovich;
pub mod polynomial;
pub mod escape;
pub mod boettcher;
pub mod core_tree;
pub mod conjugacy;
pub mod hensel;
pub mod families;
pub mod cli;
pub mod codec;

pub use error::{Error, Result};
pub use valued_field::{Backend, Rat, Scalar, Val};
