//! Reef survey mapping for camera-equipped AUVs.
//!
//! - [`geom`]: vectors, poses, triangle meshes and regular 2D grids.
//! - [`ingest`]: PLY/OBJ meshes, pose trajectory CSV and YOLO label files.
//! - [`rugosity`]: per-cell ratio of true to planar surface area.
//! - [`eval`]: IoU matching, precision-recall curves and mAP.
//! - [`hotspot`]: pose-localized fish abundance maps, peaks and correlation.
//! - [`survey`]: lawnmower planning and a seeded synthetic reef simulator.
//! - [`gridio`]: grid CSV read/write.
//! - [`cli`]: the `reefmap` command line.

pub mod cli;
pub mod error;
pub mod eval;
pub mod geom;
pub mod gridio;
pub mod hotspot;
pub mod ingest;
pub mod rugosity;
pub mod survey;

pub use error::{Error, Location, Result};
