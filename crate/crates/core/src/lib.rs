//! Hand-object interaction simulation and synthetic dataset generation.
//!
//! The crate is organized bottom-up: [`geometry`] supplies transforms, meshes
//! and spatial queries; [`hand`] is the rigged hand; [`engine`] runs the
//! fixed-step grasping world; [`session`] records and replays it; [`render`]
//! ray-casts camera views; [`export`] turns renders into COCO/BOP/hand
//! annotations and distribution statistics.

pub mod error;
pub mod geometry;
pub mod hand;
pub mod engine;
pub mod session;
pub mod render;
pub mod export;

pub use error::{Error, ErrorKind, Result};
