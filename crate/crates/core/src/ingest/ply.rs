//! PLY mesh reader/writer (ascii 1.0 and binary_little_endian 1.0).

use crate::error::{Error, Location, Result};
use crate::geom::{TriangleMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
    line: usize,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn format_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        file: file.to_string(),
        at: Location::Line(line),
        msg: msg.into(),
    }
}

fn parse_header(bytes: &[u8], file: &str) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(format_err(file, line_no + 1, "header is missing `end_header`"));
        };
        line_no += 1;
        let raw = &bytes[pos..pos + nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| format_err(file, line_no, "header is not valid UTF-8"))?
            .trim_end_matches('\r')
            .trim();
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or("");
        if line_no == 1 {
            if line != "ply" {
                return Err(format_err(file, 1, "missing `ply` magic"));
            }
            continue;
        }
        match key {
            "" | "comment" | "obj_info" => {}
            "format" => {
                let kind = tok.next().unwrap_or("");
                let version = tok.next().unwrap_or("");
                if version != "1.0" {
                    return Err(format_err(file, line_no, format!("unsupported version `{version}`")));
                }
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => {
                        return Err(format_err(file, line_no, format!("unsupported format `{other}`")))
                    }
                });
            }
            "element" => {
                let name = tok
                    .next()
                    .ok_or_else(|| format_err(file, line_no, "element without a name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| format_err(file, line_no, "element count is not a non-negative integer"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                    line: line_no,
                });
            }
            "property" => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| format_err(file, line_no, "property before any element"))?;
                let first = tok.next().unwrap_or("");
                let prop = if first == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    let name = tok.next();
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) if count.is_integer() => Property::List {
                            name: name.to_string(),
                            count,
                            item,
                        },
                        _ => return Err(format_err(file, line_no, "malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(first)
                        .ok_or_else(|| format_err(file, line_no, format!("unknown property type `{first}`")))?;
                    let name = tok
                        .next()
                        .ok_or_else(|| format_err(file, line_no, "property without a name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                elem.props.push(prop);
            }
            "end_header" => break,
            other => return Err(format_err(file, line_no, format!("unexpected header keyword `{other}`"))),
        }
    }
    let format = format.ok_or_else(|| format_err(file, line_no, "header has no `format` line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: pos,
        body_line: line_no + 1,
    })
}

struct VertexLayout {
    xyz: [usize; 3],
}

fn vertex_layout(e: &Element, file: &str) -> Result<VertexLayout> {
    let find = |axis: &str| {
        e.props
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
            .ok_or_else(|| format_err(file, e.line, format!("vertex element has no scalar `{axis}` property")))
    };
    Ok(VertexLayout {
        xyz: [find("x")?, find("y")?, find("z")?],
    })
}

fn face_list_index(e: &Element, file: &str) -> Result<usize> {
    let lists: Vec<usize> = e
        .props
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p, Property::List { .. }))
        .map(|(k, _)| k)
        .collect();
    lists
        .iter()
        .copied()
        .find(|&k| matches!(e.props[k].name(), "vertex_indices" | "vertex_index"))
        .or_else(|| lists.first().copied())
        .ok_or_else(|| format_err(file, e.line, "face element has no vertex-index list"))
}

/// Collects a polygon and fan-triangulates it into `faces`.
fn push_polygon(
    faces: &mut Vec<[u32; 3]>,
    poly: &[f64],
    vertex_count: usize,
    face_no: usize,
    file: &str,
    at: Location,
) -> Result<()> {
    let mut idx = Vec::with_capacity(poly.len());
    for &v in poly {
        if v < 0.0 || v.fract() != 0.0 || v >= vertex_count as f64 {
            return Err(Error::Index {
                file: file.to_string(),
                at,
                face: face_no,
                index: v as i64,
                count: vertex_count,
            });
        }
        idx.push(v as u32);
    }
    for k in 1..idx.len().saturating_sub(1) {
        faces.push([idx[0], idx[k], idx[k + 1]]);
    }
    Ok(())
}

/// Parses a PLY mesh. `file` names the input in error messages.
///
/// Polygons with more than three vertices are fan-triangulated from their
/// first vertex; properties other than x/y/z and the index list are skipped.
pub fn parse_ply(bytes: &[u8], file: &str) -> Result<TriangleMesh> {
    let header = parse_header(bytes, file)?;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut seen_vertex = false;
    let body = &bytes[header.body_offset..];

    match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| format_err(file, header.body_line, "ascii body is not valid UTF-8"))?;
            let mut lines = text
                .lines()
                .enumerate()
                .map(|(k, l)| (header.body_line + k, l.trim()))
                .filter(|(_, l)| !l.is_empty());
            for e in &header.elements {
                let is_vertex = e.name == "vertex";
                let layout = if is_vertex { Some(vertex_layout(e, file)?) } else { None };
                let face_list = if e.name == "face" { Some(face_list_index(e, file)?) } else { None };
                if is_vertex {
                    seen_vertex = true;
                    vertices.reserve(e.count);
                }
                for n in 0..e.count {
                    let (line_no, line) = lines.next().ok_or_else(|| {
                        format_err(file, header.body_line, format!("expected {} `{}` rows, found {n}", e.count, e.name))
                    })?;
                    let mut tokens = line.split_whitespace();
                    let mut next_num = |what: &str| -> Result<f64> {
                        let t = tokens
                            .next()
                            .ok_or_else(|| format_err(file, line_no, format!("missing value for `{what}`")))?;
                        t.parse::<f64>()
                            .map_err(|_| format_err(file, line_no, format!("`{t}` is not a number")))
                    };
                    let mut scalars = Vec::with_capacity(e.props.len());
                    let mut list: Vec<f64> = Vec::new();
                    for (k, p) in e.props.iter().enumerate() {
                        match p {
                            Property::Scalar { name, .. } => scalars.push(next_num(name)?),
                            Property::List { name, .. } => {
                                scalars.push(f64::NAN);
                                let c = next_num(name)?;
                                if c < 0.0 || c.fract() != 0.0 {
                                    return Err(format_err(file, line_no, "list count is not a non-negative integer"));
                                }
                                let mut items = Vec::with_capacity(c as usize);
                                for _ in 0..c as usize {
                                    items.push(next_num(name)?);
                                }
                                if Some(k) == face_list {
                                    list = items;
                                }
                            }
                        }
                    }
                    if let Some(l) = &layout {
                        let v = Vec3::new(scalars[l.xyz[0]], scalars[l.xyz[1]], scalars[l.xyz[2]]);
                        if !v.is_finite() {
                            return Err(format_err(file, line_no, "non-finite vertex coordinate"));
                        }
                        vertices.push(v);
                    } else if face_list.is_some() {
                        if !seen_vertex {
                            return Err(format_err(file, e.line, "face element precedes vertex element"));
                        }
                        push_polygon(&mut faces, &list, vertices.len(), n, file, Location::Line(line_no))?;
                    }
                }
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut off = 0usize;
            let base = header.body_offset as u64;
            let take = |off: &mut usize, n: usize, what: &str| -> Result<&[u8]> {
                if body.len() - *off < n {
                    return Err(Error::Truncated {
                        file: file.to_string(),
                        at: Location::Byte(base + *off as u64),
                        msg: format!("need {n} more bytes for {what}, {} remain", body.len() - *off),
                    });
                }
                let s = &body[*off..*off + n];
                *off += n;
                Ok(s)
            };
            for e in &header.elements {
                let is_vertex = e.name == "vertex";
                let layout = if is_vertex { Some(vertex_layout(e, file)?) } else { None };
                let face_list = if e.name == "face" { Some(face_list_index(e, file)?) } else { None };
                if is_vertex {
                    seen_vertex = true;
                    vertices.reserve(e.count);
                }
                if face_list.is_some() && !seen_vertex {
                    return Err(format_err(file, e.line, "face element precedes vertex element"));
                }
                let mut scalars = vec![0.0f64; e.props.len()];
                let mut list: Vec<f64> = Vec::new();
                for n in 0..e.count {
                    let start = base + off as u64;
                    for (k, p) in e.props.iter().enumerate() {
                        match *p {
                            Property::Scalar { ty, .. } => {
                                scalars[k] = ty.read_le(take(&mut off, ty.size(), &e.name)?);
                            }
                            Property::List { count, item, .. } => {
                                let c = count.read_le(take(&mut off, count.size(), &e.name)?);
                                if c < 0.0 {
                                    return Err(Error::Format {
                                        file: file.to_string(),
                                        at: Location::Byte(start),
                                        msg: "negative list count".into(),
                                    });
                                }
                                let raw = take(&mut off, c as usize * item.size(), &e.name)?;
                                if Some(k) == face_list {
                                    list.clear();
                                    list.extend(raw.chunks_exact(item.size()).map(|b| item.read_le(b)));
                                }
                            }
                        }
                    }
                    if let Some(l) = &layout {
                        let v = Vec3::new(scalars[l.xyz[0]], scalars[l.xyz[1]], scalars[l.xyz[2]]);
                        if !v.is_finite() {
                            return Err(Error::Format {
                                file: file.to_string(),
                                at: Location::Byte(start),
                                msg: "non-finite vertex coordinate".into(),
                            });
                        }
                        vertices.push(v);
                    } else if face_list.is_some() {
                        push_polygon(&mut faces, &list, vertices.len(), n, file, Location::Byte(start))?;
                    }
                }
            }
        }
    }
    if !seen_vertex {
        return Err(format_err(file, 1, "no `vertex` element"));
    }
    TriangleMesh::new(vertices, faces).map_err(|e| format_err(file, 1, e.to_string()))
}

/// Formats with 9 significant digits, trimming trailing zeros.
fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// Serializes a mesh. Binary output stores float64 coordinates and int32
/// indices, so it round-trips bit-exactly.
pub fn write_ply(mesh: &TriangleMesh, format: PlyFormat) -> Vec<u8> {
    let fmt_name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut out = format!(
        "ply\nformat {fmt_name} 1.0\ncomment written by reefmap\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices().len(),
        mesh.faces().len()
    )
    .into_bytes();
    match format {
        PlyFormat::Ascii => {
            use std::fmt::Write;
            let mut s = String::new();
            for v in mesh.vertices() {
                let _ = writeln!(s, "{} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z));
            }
            for f in mesh.faces() {
                let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
            }
            out.extend_from_slice(s.as_bytes());
        }
        PlyFormat::BinaryLittleEndian => {
            out.reserve(mesh.vertices().len() * 24 + mesh.faces().len() * 13);
            for v in mesh.vertices() {
                for c in [v.x, v.y, v.z] {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            for f in mesh.faces() {
                out.push(3);
                for &i in f {
                    let i = i32::try_from(i).expect("vertex index exceeds int32 range");
                    out.extend_from_slice(&i.to_le_bytes());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::mesh_surface_area;

    const SQUARE: &str = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\n\
        property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n\
        0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";

    #[test]
    fn ascii_quad_is_fan_triangulated() {
        let m = parse_ply(SQUARE.as_bytes(), "sq.ply").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(mesh_surface_area(&m), 1.0);
    }

    #[test]
    fn bad_index_is_reported() {
        let bad = SQUARE.replace("4 0 1 2 3", "3 0 1 9");
        match parse_ply(bad.as_bytes(), "bad.ply") {
            Err(Error::Index { face, index, count, at, .. }) => {
                assert_eq!((face, index, count), (0, 9, 4));
                assert_eq!(at, Location::Line(14));
            }
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn extra_properties_are_skipped() {
        let src = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\n\
            property uchar red\nproperty float y\nproperty float z\nproperty float nx\n\
            element face 1\nproperty uchar flags\nproperty list uchar uint vertex_indices\nend_header\n\
            0 255 0 0 1\n1 0 0 0 1\n0 7 1 0 1\n9 3 0 1 2\n";
        let m = parse_ply(src.as_bytes(), "x.ply").unwrap();
        assert_eq!(m.vertices()[2], Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_header_names_line() {
        let src = "ply\nformat ascii 1.0\nelement vertex many\nend_header\n";
        match parse_ply(src.as_bytes(), "h.ply") {
            Err(Error::Format { at, file, .. }) => {
                assert_eq!(at, Location::Line(3));
                assert_eq!(file, "h.ply");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_ply(b"ply\nformat binary_big_endian 1.0\nend_header\n", "be.ply"),
            Err(Error::Format { .. })
        ));
        assert!(matches!(parse_ply(b"obj\n", "m.ply"), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_binary_is_reported() {
        let m = parse_ply(SQUARE.as_bytes(), "sq.ply").unwrap();
        let bytes = write_ply(&m, PlyFormat::BinaryLittleEndian);
        let cut = &bytes[..bytes.len() - 5];
        assert!(matches!(parse_ply(cut, "t.ply"), Err(Error::Truncated { .. })));
    }

    #[test]
    fn binary_float32_and_short_indices() {
        let mut b = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\n\
            property float y\nproperty float z\nelement face 1\nproperty list uchar ushort vertex_indices\nend_header\n"
            .to_vec();
        for v in [[0f32, 0., 0.], [2., 0., 0.], [0., 1., 0.]] {
            for c in v {
                b.extend_from_slice(&c.to_le_bytes());
            }
        }
        b.push(3);
        for i in [0u16, 1, 2] {
            b.extend_from_slice(&i.to_le_bytes());
        }
        let m = parse_ply(&b, "f.ply").unwrap();
        assert_eq!(mesh_surface_area(&m), 1.0);
    }

    #[test]
    fn empty_mesh_writes_valid_ply() {
        for fmt in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let bytes = write_ply(&TriangleMesh::default(), fmt);
            let m = parse_ply(&bytes, "e.ply").unwrap();
            assert!(m.vertices().is_empty() && m.faces().is_empty());
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(-2.0), "-2");
        assert_eq!(fmt_sig9(123.456789012), "123.456789");
        assert_eq!(fmt_sig9(1e-9).parse::<f64>().unwrap(), 1e-9);
    }
}
