//! Molecular shape descriptors from Kähler quantization.
//!
//! A molecule is approximated by a union of spheres (one per heavy atom,
//! one per ring), flattened onto the complex plane through stereographic
//! charts glued by Möbius maps, and integrated against its Kähler
//! potential to produce a Hermitian moment matrix. Matrices of the same
//! size are compared by a Möbius-invariant distance, which in turn scores
//! molecular similarity.

pub mod chart_fit;
pub mod descriptor_distance;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod kahler_potential;
pub mod linalg;
pub mod mobius;
pub mod mol_ingest;
pub mod optim;
pub mod pipeline;
pub mod planar_domain;
pub mod quantizer;
pub mod similarity;
pub mod surface_model;

pub use error::{Error, Result};
