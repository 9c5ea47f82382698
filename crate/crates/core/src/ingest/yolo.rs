//! YOLO label files: one `<frame_id>.txt` per frame, one detection per line,
//! `class cx cy w h [conf]` in normalized image coordinates.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Location, Result};

/// Slack allowed on normalized coordinates before a range error.
pub const COORD_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// 0 is fish.
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    /// Ground-truth boxes carry 1.0.
    pub confidence: f64,
}

impl Detection {
    pub fn fish(cx: f64, cy: f64, w: f64, h: f64, confidence: f64) -> Self {
        Self {
            class_id: 0,
            cx,
            cy,
            w,
            h,
            confidence,
        }
    }

    /// Corner form `(x0, y0, x1, y1)`.
    pub fn xyxy(&self) -> [f64; 4] {
        [
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        ]
    }
}

/// Detections keyed by frame id. A frame mapped to an empty list was
/// observed and had no detections; a missing frame was not observed.
pub type DetectionSet = BTreeMap<u64, Vec<Detection>>;

/// Parses one label file's text.
pub fn parse_yolo_file(text: &str, file: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fmt = |msg: String| Error::Format {
            file: file.to_string(),
            at: Location::Line(line_no),
            msg,
        };
        let range = |msg: String| Error::Range {
            file: file.to_string(),
            at: Location::Line(line_no),
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(fmt(format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| fmt(format!("class `{}` is not a non-negative integer", fields[0])))?;
        let mut v = [0.0f64; 5];
        v[4] = 1.0;
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| fmt(format!("`{f}` is not a finite number")))?;
        }
        let names = ["cx", "cy", "w", "h", "confidence"];
        for (k, &x) in v.iter().enumerate() {
            if x < -COORD_SLACK || x > 1.0 + COORD_SLACK {
                return Err(range(format!("{} = {x} is outside [0, 1]", names[k])));
            }
        }
        if v[2] <= 0.0 || v[3] <= 0.0 {
            return Err(range(format!("box size {} x {} must be positive", v[2], v[3])));
        }
        let c = |x: f64| x.clamp(0.0, 1.0);
        out.push(Detection {
            class_id,
            cx: c(v[0]),
            cy: c(v[1]),
            w: c(v[2]),
            h: c(v[3]),
            confidence: c(v[4]),
        });
    }
    Ok(out)
}

/// Builds a detection set from `(file name, text)` pairs. File stems must be
/// integer frame ids; other names are ignored.
pub fn parse_yolo_detections<'a, I>(files: I) -> Result<DetectionSet>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut set = DetectionSet::new();
    for (name, text) in files {
        let Some(frame_id) = frame_id_from_name(name) else {
            continue;
        };
        let dets = parse_yolo_file(text, name)?;
        if set.insert(frame_id, dets).is_some() {
            return Err(Error::Duplicate {
                file: name.to_string(),
                at: Location::Line(1),
                frame_id,
            });
        }
    }
    Ok(set)
}

fn frame_id_from_name(name: &str) -> Option<u64> {
    let base = Path::new(name).file_name()?.to_str()?;
    let stem = base.strip_suffix(".txt")?;
    if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok()
}

/// Reads every `<frame_id>.txt` in a directory (non-recursive).
pub fn read_yolo_dir(dir: &Path) -> Result<DetectionSet> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if frame_id_from_name(name).is_none() || !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        files.push((path.display().to_string(), text));
    }
    files.sort();
    parse_yolo_detections(files.iter().map(|(n, t)| (n.as_str(), t.as_str())))
}

/// Serializes one frame. Confidence is omitted when `with_confidence` is false
/// (ground-truth style).
pub fn write_yolo_file(dets: &[Detection], with_confidence: bool) -> String {
    let mut s = String::new();
    for d in dets {
        let _ = write!(s, "{} {:.6} {:.6} {:.6} {:.6}", d.class_id, d.cx, d.cy, d.w, d.h);
        if with_confidence {
            let _ = write!(s, " {:.6}", d.confidence);
        }
        s.push('\n');
    }
    s
}

/// Writes `<frame_id>.txt` for every frame in the set, including empty ones.
pub fn write_yolo_dir(dir: &Path, set: &DetectionSet, with_confidence: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (frame, dets) in set {
        let path = dir.join(format!("{frame}.txt"));
        std::fs::write(&path, write_yolo_file(dets, with_confidence)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
