//! Quasi-morphisms on the group of area-preserving diffeomorphisms of the
//! unit disk: the `tau` and `sigma` functionals and their homogenizations,
//! the Calabi invariant and real flux, boundary translation numbers, and the
//! path functionals `R` and `S`, together with numerical checks of the
//! identities relating them.

pub mod circle;
pub mod compute;
pub mod config;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod hamiltonian;
pub mod isotopy;
pub mod jet;
pub mod linalg;
pub mod par;
pub mod quasimorphism;
pub mod spec;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use forms::{DiskPath, PrimitiveOneForm, Quadrature};
pub use geometry::{Generator, Letter, MapWord, Mat2, Point, RadialProfile, Tri};
pub use isotopy::{IdentityReport, Isotopy};
pub use quasimorphism::QmEstimate;
