//! Finite-difference laboratory for wall-bounded ideal MHD in the
//! low-Mach regime: the symmetrized compressible system, its
//! incompressible limit, the anisotropic boundary norms that measure the
//! convergence between the two, and the acoustic machinery behind the
//! initial layer.
//!
//! Geometry is a planar slab: two perfectly conducting walls in the normal
//! direction, periodic tangentially, fields carrying all seven components
//! but no dependence on the third coordinate.

pub mod acoustic;
pub mod checkpoint;
pub mod error;
pub mod field;
pub mod flux;
pub mod grid;
pub mod helmholtz;
pub mod incompressible;
pub mod norms;
pub mod solver;
mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use grid::{build_grid, Grid};
pub use state::{MaterialLaw, StateField};
