//! bubblespectra: a numerical laboratory for the Morse index and nullity of
//! harmonic maps, diagonalizing the second variation of the Dirichlet energy
//! against a map-dependent scalar product, with neck-estimate and
//! bubbling-sequence verification experiments at desk scale.

pub mod error;
pub mod forms;
pub mod linalg;
pub mod manifold;
pub mod maps;
pub mod mesh;
pub mod sparse;

pub use error::{Error, Result};
