//! Conforming higher-order meshes from implicit geometry and plane-strain elasticity on them.

pub mod elements;
pub mod geometry;
pub mod cutcell;
pub mod refine;
pub mod meshbuild;
pub mod elasticity;
pub mod config;
pub mod pipeline;
pub mod verify;
