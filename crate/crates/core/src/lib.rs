//! One-dimensional micromagnetic domain-wall laboratory: the reduced energy
//! with Dzyaloshinskii–Moriya interaction, its closed-form walls, the
//! Landau–Lifshitz–Gilbert flow, gauge modulation and the spectral theory of
//! the linearised operator.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod llg;
pub mod modulation;
pub mod spectral;
pub mod stencil;
pub mod walls;
pub mod vec3;

pub use error::{DmiError, Result};
pub use field::{MagnetizationField, TangentField, VectorField};
pub use grid::Grid;
pub use vec3::Vec3;
