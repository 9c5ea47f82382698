//! Geometric primitives shared by every stage of the pipeline.
//!
//! The world frame is Z-up; rugosity and abundance grids live in the XY
//! plane. Inputs reconstructed with Z pointing down must be flipped before
//! they reach this crate. Quaternions are scalar-first `(w, x, y, z)`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A point or vector in world coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Unchecked constructor; use [`Vec3::try_new`] for untrusted data.
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidInput(format!(
                "non-finite coordinate ({x}, {y}, {z})"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion, scalar first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Inputs whose norm is within this of 1 are renormalized; others are rejected.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a unit quaternion from raw components, renormalizing when the
    /// norm is within [`QUATERNION_NORM_TOLERANCE`] of 1. Returns the offending
    /// norm otherwise.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> std::result::Result<Self, f64> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(n);
        }
        Ok(Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis * (1.0 / axis.norm());
        let (s, c) = (angle * 0.5).sin_cos();
        Self {
            w: c,
            x: a.x * s,
            y: a.y * s,
            z: a.z * s,
        }
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Hamilton product `self * o` (apply `o` first, then `self`).
    pub fn compose(&self, o: &UnitQuaternion) -> UnitQuaternion {
        let (a, b) = (self, o);
        UnitQuaternion {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let UnitQuaternion { w, x, y, z } = *self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    pub fn rotate(&self, p: Vec3) -> Vec3 {
        let m = self.to_matrix();
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }
}

/// Rigid transform `p -> R p + t`. For camera poses this maps camera
/// coordinates to world coordinates, so `translation` is the camera position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    pub translation: Vec3,
    pub rotation: UnitQuaternion,
}

impl PoseSE3 {
    pub const IDENTITY: PoseSE3 = PoseSE3 {
        translation: Vec3::ZERO,
        rotation: UnitQuaternion::IDENTITY,
    };

    pub fn new(translation: Vec3, rotation: UnitQuaternion) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }
}

/// Free-function form of [`PoseSE3::apply`].
pub fn pose_apply(pose: &PoseSE3, p: Vec3) -> Vec3 {
    pose.apply(p)
}

/// Half the magnitude of the edge cross product. Degenerate triangles give 0.
pub fn triangle_area_3d(v0: Vec3, v1: Vec3, v2: Vec3) -> f64 {
    0.5 * (v1 - v0).cross(v2 - v0).norm()
}

/// Signed area of the XY projection (counter-clockwise positive).
pub(crate) fn signed_area_xy(v0: Vec3, v1: Vec3, v2: Vec3) -> f64 {
    0.5 * ((v1.x - v0.x) * (v2.y - v0.y) - (v2.x - v0.x) * (v1.y - v0.y))
}

/// Indexed triangle surface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Validates that every coordinate is finite and every index is in range.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if let Some((k, v)) = vertices.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "vertex {k} has a non-finite coordinate ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidInput(format!(
                    "face {fi} references vertex {bad} but only {n} vertices exist"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.faces.len()).map(move |i| self.triangle(i))
    }

    /// XY bounding box of the vertices referenced by faces, or `None` when
    /// there are no faces.
    pub fn xy_bounds(&self) -> Option<Aabb2> {
        let mut it = self.faces.iter().flatten().map(|&i| self.vertices[i as usize]);
        let first = it.next()?;
        let mut b = Aabb2 {
            min: [first.x, first.y],
            max: [first.x, first.y],
        };
        for v in it {
            b.min[0] = b.min[0].min(v.x);
            b.min[1] = b.min[1].min(v.y);
            b.max[0] = b.max[0].max(v.x);
            b.max[1] = b.max[1].max(v.y);
        }
        Some(b)
    }

    /// Applies a rigid transform to every vertex.
    pub fn transformed(&self, pose: &PoseSE3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| pose.apply(v)).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Sum of triangle areas over all faces.
pub fn mesh_surface_area(mesh: &TriangleMesh) -> f64 {
    mesh.triangles()
        .map(|[a, b, c]| triangle_area_3d(a, b, c))
        .sum()
}

/// Axis-aligned rectangle in the XY plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Aabb2 {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let finite = min.iter().chain(max.iter()).all(|v| v.is_finite());
        if !finite || min[0] > max[0] || min[1] > max[1] {
            return Err(Error::InvalidInput(format!(
                "invalid box min={min:?} max={max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    /// Closed containment test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

/// Axis-aligned XY raster with a validity mask.
///
/// Cell `(i, j)` spans `[x0 + i·cs, x0 + (i+1)·cs) × [y0 + j·cs, y0 + (j+1)·cs)`.
/// Storage is row-major with `j` as the row: index `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    origin: [f64; 2],
    cell_size: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl Grid2D {
    /// All-invalid grid of zeros.
    pub fn new(origin: [f64; 2], cell_size: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::InvalidInput("non-finite grid origin".into()));
        }
        Ok(Self {
            origin,
            cell_size,
            nx,
            ny,
            values: vec![0.0; nx * ny],
            valid: vec![false; nx * ny],
        })
    }

    /// Smallest grid with the given cell size whose extent covers `region`
    /// (at least one cell per axis).
    pub fn covering(region: &Aabb2, cell_size: f64) -> Result<Self> {
        let count = |extent: f64| ((extent / cell_size) - 1e-9).ceil().max(1.0) as usize;
        Self::new(
            region.min,
            cell_size,
            count(region.width()),
            count(region.height()),
        )
    }

    pub fn from_parts(
        origin: [f64; 2],
        cell_size: f64,
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let mut g = Self::new(origin, cell_size, nx, ny)?;
        if values.len() != nx * ny || valid.len() != nx * ny {
            return Err(Error::InvalidInput(format!(
                "grid of {nx}x{ny} needs {} values, got {} values and {} flags",
                nx * ny,
                values.len(),
                valid.len()
            )));
        }
        g.values = values;
        g.valid = valid;
        Ok(g)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Value of a valid cell, `None` for no-data.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.index(i, j);
        self.valid[k].then(|| self.values[k])
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.values[k] = value;
        self.valid[k] = true;
    }

    pub fn invalidate(&mut self, i: usize, j: usize) {
        let k = self.index(i, j);
        self.values[k] = 0.0;
        self.valid[k] = false;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// `(i, j, value)` for every valid cell, row-major.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len())
            .filter(|&k| self.valid[k])
            .map(|k| (k % self.nx, k / self.nx, self.values[k]))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell_size,
            self.origin[1] + (j as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Aabb2 {
        let x0 = self.origin[0] + i as f64 * self.cell_size;
        let y0 = self.origin[1] + j as f64 * self.cell_size;
        Aabb2 {
            min: [x0, y0],
            max: [x0 + self.cell_size, y0 + self.cell_size],
        }
    }

    pub fn extent(&self) -> Aabb2 {
        Aabb2 {
            min: self.origin,
            max: [
                self.origin[0] + self.nx as f64 * self.cell_size,
                self.origin[1] + self.ny as f64 * self.cell_size,
            ],
        }
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.cell_size == other.cell_size
            && self.origin == other.origin
    }

    /// Containing cell under the half-open convention, or `None` outside.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.origin[0]) / self.cell_size).floor();
        let fj = ((y - self.origin[1]) / self.cell_size).floor();
        if !(fi >= 0.0 && fj >= 0.0) || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

/// Free-function form of [`Grid2D::locate`].
pub fn grid_index(grid: &Grid2D, x: f64, y: f64) -> Option<(usize, usize)> {
    grid.locate(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heron(a: Vec3, b: Vec3, c: Vec3) -> f64 {
        let (la, lb, lc) = ((b - c).norm(), (a - c).norm(), (a - b).norm());
        let s = 0.5 * (la + lb + lc);
        (s * (s - la) * (s - lb) * (s - lc)).sqrt()
    }

    #[test]
    fn triangle_area_examples() {
        let o = Vec3::ZERO;
        assert_eq!(
            triangle_area_3d(o, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            0.5
        );
        assert_eq!(
            triangle_area_3d(o, Vec3::new(1.0, 1.0, 1.0), Vec3::new(2.0, 2.0, 2.0)),
            0.0
        );
        let (b, c) = (Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 4.0, 5.0));
        let expected = heron(o, b, c);
        let got = triangle_area_3d(o, b, c);
        assert!(((got - expected) / expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn pose_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(pose_apply(&PoseSE3::IDENTITY, p), p);
        let t = PoseSE3::new(Vec3::new(5.0, 0.0, 0.0), UnitQuaternion::IDENTITY);
        assert_eq!(pose_apply(&t, p), Vec3::new(6.0, 2.0, 3.0));
        let rz = PoseSE3::new(
            Vec3::ZERO,
            UnitQuaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2),
        );
        let q = pose_apply(&rz, Vec3::new(1.0, 0.0, 0.0));
        assert!((q - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12, "{q:?}");
    }

    #[test]
    fn quaternion_tolerance() {
        let q = UnitQuaternion::from_wxyz(0.9999, 0.0, 0.0, 0.0).unwrap();
        assert!((q.norm() - 1.0).abs() < 1e-12);
        assert_eq!(UnitQuaternion::from_wxyz(0.5, 0.0, 0.0, 0.0), Err(0.5));
        assert!(UnitQuaternion::from_wxyz(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn grid_index_examples() {
        let g = Grid2D::new([0.0, 0.0], 0.5, 24, 24).unwrap();
        assert_eq!(grid_index(&g, 0.0, 0.0), Some((0, 0)));
        assert_eq!(grid_index(&g, 0.5, 0.0), Some((1, 0)));
        assert_eq!(grid_index(&g, 12.0, 3.0), None);
        assert_eq!(grid_index(&g, -1e-12, 3.0), None);
        assert_eq!(grid_index(&g, f64::NAN, 3.0), None);
    }

    #[test]
    fn covering_counts_cells() {
        let r = Aabb2::new([0.0, 0.0], [12.0, 3.1]).unwrap();
        let g = Grid2D::covering(&r, 0.5).unwrap();
        assert_eq!((g.nx(), g.ny()), (24, 7));
        let point = Aabb2::new([1.0, 1.0], [1.0, 1.0]).unwrap();
        let g = Grid2D::covering(&point, 0.5).unwrap();
        assert_eq!((g.nx(), g.ny()), (1, 1));
    }

    #[test]
    fn mesh_area_examples() {
        assert_eq!(mesh_surface_area(&TriangleMesh::default()), 0.0);
        let sq = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(mesh_surface_area(&sq), 1.0);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(TriangleMesh::new(vec![Vec3::new(f64::INFINITY, 0.0, 0.0)], vec![]).is_err());
        assert!(TriangleMesh::new(vec![Vec3::ZERO], vec![[0, 0, 1]]).is_err());
        assert!(Grid2D::new([0.0, 0.0], 0.0, 1, 1).is_err());
        assert!(Aabb2::new([1.0, 0.0], [0.0, 1.0]).is_err());
    }
}
