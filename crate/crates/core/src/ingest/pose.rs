//! Camera trajectory CSV: `frame_id,timestamp,tx,ty,tz,qw,qx,qy,qz`.
//!
//! Poses are camera-to-world, so the translation is the camera position in
//! the world frame. Lines starting with `#` are comments.

use std::collections::HashSet;
use std::fmt::Write;

use crate::error::{Error, Location, Result};
use crate::geom::{PoseSE3, UnitQuaternion, Vec3};

pub const POSE_CSV_HEADER: &str = "frame_id,timestamp,tx,ty,tz,qw,qx,qy,qz";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePose {
    pub frame_id: u64,
    /// Seconds.
    pub timestamp: f64,
    pub pose: PoseSE3,
}

/// Parses a trajectory and returns it sorted by `frame_id`.
pub fn parse_pose_trajectory(text: &str, file: &str) -> Result<Vec<FramePose>> {
    let fmt = |line: usize, msg: String| Error::Format {
        file: file.to_string(),
        at: Location::Line(line),
        msg,
    };
    let mut header_seen = false;
    let mut seen = HashSet::new();
    let mut rows: Vec<(usize, FramePose)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != POSE_CSV_HEADER {
                return Err(fmt(line_no, format!("expected header `{POSE_CSV_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(fmt(line_no, format!("expected 9 columns, found {}", fields.len())));
        }
        let frame_id: u64 = fields[0]
            .parse()
            .map_err(|_| fmt(line_no, format!("frame_id `{}` is not a non-negative integer", fields[0])))?;
        let mut nums = [0.0f64; 8];
        for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fmt(line_no, format!("`{f}` is not a finite number")))?;
        }
        let [timestamp, tx, ty, tz, qw, qx, qy, qz] = nums;
        let rotation = UnitQuaternion::from_wxyz(qw, qx, qy, qz).map_err(|norm| Error::Pose {
            file: file.to_string(),
            at: Location::Line(line_no),
            frame_id,
            norm,
        })?;
        if !seen.insert(frame_id) {
            return Err(Error::Duplicate {
                file: file.to_string(),
                at: Location::Line(line_no),
                frame_id,
            });
        }
        rows.push((
            line_no,
            FramePose {
                frame_id,
                timestamp,
                pose: PoseSE3::new(Vec3::new(tx, ty, tz), rotation),
            },
        ));
    }
    if !header_seen {
        return Err(fmt(1, format!("missing header `{POSE_CSV_HEADER}`")));
    }
    rows.sort_by_key(|(_, p)| p.frame_id);
    for w in rows.windows(2) {
        if w[1].1.timestamp < w[0].1.timestamp {
            return Err(fmt(
                w[1].0,
                format!(
                    "timestamp {} of frame {} precedes frame {} at {}",
                    w[1].1.timestamp, w[1].1.frame_id, w[0].1.frame_id, w[0].1.timestamp
                ),
            ));
        }
    }
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}

/// Writes a trajectory with shortest round-trip float formatting.
pub fn write_pose_trajectory(poses: &[FramePose]) -> String {
    let mut s = String::with_capacity(64 * (poses.len() + 1));
    s.push_str(POSE_CSV_HEADER);
    s.push('\n');
    for p in poses {
        let t = p.pose.translation;
        let [qw, qx, qy, qz] = p.pose.rotation.wxyz();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.frame_id, p.timestamp, t.x, t.y, t.z, qw, qx, qy, qz
        );
    }
    s
}
