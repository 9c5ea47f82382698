//! Wavefront OBJ reader. Only `v` and `f` records are honored.

use crate::error::{Error, Location, Result};
use crate::geom::{TriangleMesh, Vec3};

/// Parses OBJ text into a triangle mesh.
///
/// Face entries may be `i`, `i/j`, `i//k` or `i/j/k`; only the position index
/// is used. Negative indices count back from the most recent vertex.
pub fn parse_obj(text: &str, file: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut face_no = 0usize;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        let fmt = |msg: String| Error::Format {
            file: file.to_string(),
            at: Location::Line(line_no),
            msg,
        };
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for (axis, slot) in c.iter_mut().enumerate() {
                    let t = tok
                        .next()
                        .ok_or_else(|| fmt(format!("vertex record has {axis} coordinates, need 3")))?;
                    *slot = t
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| fmt(format!("`{t}` is not a finite number")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = vertices.len();
                let mut idx = Vec::new();
                for t in tok {
                    let head = t.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| fmt(format!("`{t}` is not a face index")))?;
                    let resolved = if raw > 0 { raw - 1 } else { n as i64 + raw };
                    if raw == 0 || resolved < 0 || resolved >= n as i64 {
                        return Err(Error::Index {
                            file: file.to_string(),
                            at: Location::Line(line_no),
                            face: face_no,
                            index: raw,
                            count: n,
                        });
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(fmt(format!("face has {} vertices, need at least 3", idx.len())));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
                face_no += 1;
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces).map_err(|e| Error::Format {
        file: file.to_string(),
        at: Location::Line(1),
        msg: e.to_string(),
    })
}
