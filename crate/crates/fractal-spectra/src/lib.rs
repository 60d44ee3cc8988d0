//! Spectra and renormalisation maps of finitely ramified self-similar lattices.
//!
//! The crate builds level-n lattices from a finite self-similar structure,
//! assembles their networks and measures, computes Neumann, Dirichlet and
//! Neumann-Dirichlet spectra, and implements the renormalisation map at three
//! levels: Schur complements of symmetric matrices, symplectic reduction of
//! Lagrangian frames, and its lift to the even Grassmann algebra.

pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod network;
pub mod par;
pub mod renorm;
pub mod spectra;
pub mod structure;
pub mod symplectic;

pub use error::{Error, Result};
pub use linalg::{SymMatrix, C64};
