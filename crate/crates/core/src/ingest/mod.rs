//! Readers and writers for the survey products the pipeline consumes:
//! photogrammetry meshes (PLY, OBJ), camera trajectories (CSV) and per-frame
//! detector output (YOLO txt).
//!
//! All parsers are pure functions of their input and take a display name used
//! in error messages. Number parsing never depends on the process locale.

mod obj;
mod ply;
mod pose;
mod yolo;

use std::path::Path;

pub use obj::parse_obj;
pub use ply::{parse_ply, write_ply, PlyFormat};
pub use pose::{parse_pose_trajectory, write_pose_trajectory, FramePose, POSE_CSV_HEADER};
pub use yolo::{
    parse_yolo_detections, parse_yolo_file, read_yolo_dir, write_yolo_dir, write_yolo_file,
    Detection, DetectionSet, COORD_SLACK,
};

use crate::error::{Error, Result};
use crate::geom::TriangleMesh;

/// Reads a mesh, choosing the parser by extension (`.ply` or `.obj`).
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "obj" => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format {
                file: name.clone(),
                at: crate::error::Location::Line(1),
                msg: "OBJ file is not valid UTF-8".into(),
            })?;
            parse_obj(&text, &name)
        }
        _ => parse_ply(&bytes, &name),
    }
}

pub fn read_pose_trajectory(path: &Path) -> Result<Vec<FramePose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pose_trajectory(&text, &path.display().to_string())
}
