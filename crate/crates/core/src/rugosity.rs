//! Per-cell rugosity: true 3D surface area inside each grid cell divided by
//! the cell's planar area.
//!
//! Every mesh triangle is clipped exactly against the cells its XY footprint
//! touches (Sutherland–Hodgman in XY, Z recovered on the triangle's plane).
//! Because the cells partition the plane, the clipped areas of all cells sum
//! to the mesh surface area. Several surface sheets stacked over one cell
//! (overhangs) all count toward that cell.
//!
//! Triangles standing vertical in XY have no projected footprint to clip;
//! their whole area goes to the cell containing their XY centroid.

use rayon::prelude::*;

use crate::error::Result;
use crate::geom::{signed_area_xy, triangle_area_3d, Aabb2, Grid2D, TriangleMesh, Vec3};

/// Projected-to-true area ratio below which a triangle counts as vertical.
const VERTICAL_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RugosityConfig {
    /// Cell edge length in meters.
    pub cell_size: f64,
    /// Grid extent; defaults to the mesh XY bounding box.
    pub region: Option<Aabb2>,
    /// Cells whose projected mesh coverage is below this fraction of the cell
    /// area are marked no-data.
    pub min_coverage_fraction: f64,
}

impl Default for RugosityConfig {
    fn default() -> Self {
        Self {
            cell_size: 0.5,
            region: None,
            min_coverage_fraction: 0.5,
        }
    }
}

/// Clips the XY projection of a triangle to `rect`, returning a planar 3D
/// polygon (empty when there is no overlap, at most 7 vertices).
pub fn clip_triangle_to_rect(tri: [Vec3; 3], rect: &Aabb2) -> Vec<Vec3> {
    let mut poly: Vec<Vec3> = tri.to_vec();
    let mut scratch = Vec::with_capacity(8);
    // (axis, bound, keep >= bound)
    let planes = [
        (0, rect.min[0], true),
        (0, rect.max[0], false),
        (1, rect.min[1], true),
        (1, rect.max[1], false),
    ];
    for (axis, bound, keep_above) in planes {
        if poly.is_empty() {
            break;
        }
        let coord = |p: &Vec3| if axis == 0 { p.x } else { p.y };
        let inside = |p: &Vec3| {
            if keep_above {
                coord(p) >= bound
            } else {
                coord(p) <= bound
            }
        };
        scratch.clear();
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            let (ina, inb) = (inside(&a), inside(&b));
            if ina {
                scratch.push(a);
            }
            if ina != inb {
                let t = (bound - coord(&a)) / (coord(&b) - coord(&a));
                let mut p = a + (b - a) * t;
                if axis == 0 {
                    p.x = bound;
                } else {
                    p.y = bound;
                }
                scratch.push(p);
            }
        }
        std::mem::swap(&mut poly, &mut scratch);
    }
    if poly.len() < 3 {
        return Vec::new();
    }
    let area = signed_area_xy(tri[0], tri[1], tri[2]);
    if area.abs() > 0.0 {
        // Re-derive Z from the triangle's plane so every vertex lies on it.
        for p in &mut poly {
            let l1 = signed_area_xy(tri[0], *p, tri[2]) / area;
            let l2 = signed_area_xy(tri[0], tri[1], *p) / area;
            let l0 = 1.0 - l1 - l2;
            p.z = l0 * tri[0].z + l1 * tri[1].z + l2 * tri[2].z;
        }
    }
    poly
}

/// Fan-triangulated area of a planar polygon; 0 for fewer than 3 vertices.
pub fn polygon_area_3d(poly: &[Vec3]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    (1..poly.len() - 1)
        .map(|k| triangle_area_3d(poly[0], poly[k], poly[k + 1]))
        .sum()
}

fn polygon_area_xy(poly: &[Vec3]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    (1..poly.len() - 1)
        .map(|k| signed_area_xy(poly[0], poly[k], poly[k + 1]))
        .sum::<f64>()
        .abs()
}

/// Per-cell area sums over a grid, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAreas {
    /// True 3D area clipped to each cell, row-major like [`Grid2D`].
    pub surface: Vec<f64>,
    /// Projected (XY) area clipped to each cell.
    pub projected: Vec<f64>,
}

impl CellAreas {
    pub fn total_surface(&self) -> f64 {
        self.surface.iter().sum()
    }
}

struct Contribution {
    cell: usize,
    surface: f64,
    projected: f64,
}

fn triangle_contributions(tri: [Vec3; 3], grid: &Grid2D) -> Vec<Contribution> {
    let surface = triangle_area_3d(tri[0], tri[1], tri[2]);
    if surface == 0.0 {
        return Vec::new();
    }
    let projected = signed_area_xy(tri[0], tri[1], tri[2]).abs();
    if projected <= VERTICAL_RATIO * surface {
        let cx = (tri[0].x + tri[1].x + tri[2].x) / 3.0;
        let cy = (tri[0].y + tri[1].y + tri[2].y) / 3.0;
        return grid
            .locate(cx, cy)
            .map(|(i, j)| {
                vec![Contribution {
                    cell: grid.index(i, j),
                    surface,
                    projected: 0.0,
                }]
            })
            .unwrap_or_default();
    }

    let ext = grid.extent();
    let xmin = tri.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let xmax = tri.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let ymin = tri.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let ymax = tri.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    if xmax < ext.min[0] || xmin > ext.max[0] || ymax < ext.min[1] || ymin > ext.max[1] {
        return Vec::new();
    }
    let cs = grid.cell_size();
    let span = |lo: f64, hi: f64, origin: f64, n: usize| {
        let a = ((lo - origin) / cs).floor().max(0.0) as usize;
        let b = (((hi - origin) / cs).floor().max(0.0) as usize).min(n - 1);
        (a.min(n - 1), b)
    };
    let (i0, i1) = span(xmin, xmax, grid.origin()[0], grid.nx());
    let (j0, j1) = span(ymin, ymax, grid.origin()[1], grid.ny());

    let mut out = Vec::new();
    if i0 == i1 && j0 == j1 {
        let rect = grid.cell_rect(i0, j0);
        if rect.contains(xmin, ymin) && rect.contains(xmax, ymax) {
            out.push(Contribution {
                cell: grid.index(i0, j0),
                surface,
                projected,
            });
            return out;
        }
    }
    for j in j0..=j1 {
        for i in i0..=i1 {
            let poly = clip_triangle_to_rect(tri, &grid.cell_rect(i, j));
            if poly.len() < 3 {
                continue;
            }
            let s = polygon_area_3d(&poly);
            if s > 0.0 {
                out.push(Contribution {
                    cell: grid.index(i, j),
                    surface: s,
                    projected: polygon_area_xy(&poly),
                });
            }
        }
    }
    out
}

/// Clipped surface and projected areas for every cell of `grid` (whose values
/// are ignored). Sums are accumulated in triangle-index order, so the result
/// does not depend on the number of worker threads.
pub fn cell_areas(mesh: &TriangleMesh, grid: &Grid2D) -> CellAreas {
    let per_triangle: Vec<Vec<Contribution>> = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| triangle_contributions(mesh.triangle(f), grid))
        .collect();
    let mut areas = CellAreas {
        surface: vec![0.0; grid.len()],
        projected: vec![0.0; grid.len()],
    };
    for c in per_triangle.iter().flatten() {
        areas.surface[c.cell] += c.surface;
        areas.projected[c.cell] += c.projected;
    }
    areas
}

/// Rugosity grid: clipped surface area per cell over `cell_size²`, with
/// under-covered cells marked no-data.
pub fn rugosity_grid(mesh: &TriangleMesh, cfg: &RugosityConfig) -> Result<Grid2D> {
    let region = match (cfg.region, mesh.xy_bounds()) {
        (Some(r), _) => r,
        (None, Some(b)) => b,
        (None, None) => Aabb2 {
            min: [0.0, 0.0],
            max: [0.0, 0.0],
        },
    };
    let mut grid = Grid2D::covering(&region, cfg.cell_size)?;
    let areas = cell_areas(mesh, &grid);
    let cell_area = cfg.cell_size * cfg.cell_size;
    let needed = cfg.min_coverage_fraction * cell_area * (1.0 - 1e-9);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.index(i, j);
            if areas.projected[k] > 0.0 && areas.projected[k] >= needed {
                grid.set(i, j, areas.surface[k] / cell_area);
            }
        }
    }
    Ok(grid)
}

/// Summary over valid cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Statistics over valid cells, or `None` when no cell is valid.
pub fn rugosity_stats(grid: &Grid2D) -> Option<GridStats> {
    let mut count = 0usize;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (_, _, v) in grid.iter_valid() {
        count += 1;
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    (count > 0).then(|| GridStats {
        count,
        min,
        max,
        mean: sum / count as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Aabb2 {
        Aabb2::new([x0, y0], [x1, y1]).unwrap()
    }

    #[test]
    fn clip_inside_and_outside() {
        let tri = [v(0.1, 0.1, 1.0), v(0.9, 0.1, 2.0), v(0.1, 0.9, 3.0)];
        let poly = clip_triangle_to_rect(tri, &rect(0.0, 0.0, 1.0, 1.0));
        assert_eq!(poly, tri.to_vec());
        assert!(clip_triangle_to_rect(tri, &rect(2.0, 2.0, 3.0, 3.0)).is_empty());
    }

    #[test]
    fn clipped_vertices_stay_on_the_plane() {
        let tri = [v(-1.0, -0.5, 0.0), v(2.5, 0.2, 1.0), v(0.3, 2.0, -2.0)];
        let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
        let poly = clip_triangle_to_rect(tri, &rect(0.0, 0.0, 1.0, 1.0));
        assert!(poly.len() >= 3 && poly.len() <= 7);
        for p in &poly {
            assert!((*p - tri[0]).dot(n).abs() < 1e-12);
        }
    }

    #[test]
    fn polygon_area_examples() {
        let sq = [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(1.0, 1.0, 0.0), v(0.0, 1.0, 0.0)];
        assert_eq!(polygon_area_3d(&sq), 1.0);
        assert_eq!(polygon_area_3d(&sq[..2]), 0.0);
    }

    #[test]
    fn stats_examples() {
        let empty = Grid2D::new([0.0, 0.0], 0.5, 3, 3).unwrap();
        assert_eq!(rugosity_stats(&empty), None);

        let mut g = Grid2D::new([0.0, 0.0], 0.5, 2, 2).unwrap();
        g.set(0, 0, 1.0);
        g.set(1, 0, 2.0);
        g.set(0, 1, 3.0);
        let s = rugosity_stats(&g).unwrap();
        assert_eq!((s.mean, s.count, s.min, s.max), (2.0, 3, 1.0, 3.0));

        let mut u = Grid2D::new([0.0, 0.0], 0.5, 2, 2).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            u.set(i, j, 2.0);
        }
        let s = rugosity_stats(&u).unwrap();
        assert_eq!((s.min, s.max, s.mean), (2.0, 2.0, 2.0));
    }

    #[test]
    fn empty_mesh_gives_all_invalid_grid() {
        let g = rugosity_grid(&TriangleMesh::default(), &RugosityConfig::default()).unwrap();
        assert_eq!(g.valid_count(), 0);
        let cfg = RugosityConfig {
            region: Some(rect(0.0, 0.0, 2.0, 2.0)),
            ..Default::default()
        };
        let g = rugosity_grid(&TriangleMesh::default(), &cfg).unwrap();
        assert_eq!((g.nx(), g.ny(), g.valid_count()), (4, 4, 0));
    }

    #[test]
    fn vertical_wall_goes_to_centroid_cell() {
        let mesh = TriangleMesh::new(
            vec![v(0.1, 0.25, 0.0), v(0.7, 0.25, 0.0), v(0.4, 0.25, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let grid = Grid2D::new([0.0, 0.0], 0.5, 2, 2).unwrap();
        let a = cell_areas(&mesh, &grid);
        assert!((a.surface[grid.index(0, 0)] - 0.3).abs() < 1e-12);
        assert_eq!(a.projected.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn overhang_sheets_add_up() {
        // two horizontal unit squares stacked over the same cell
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for z in [0.0, 1.0] {
            let b = verts.len() as u32;
            verts.extend([v(0.0, 0.0, z), v(0.5, 0.0, z), v(0.5, 0.5, z), v(0.0, 0.5, z)]);
            faces.extend([[b, b + 1, b + 2], [b, b + 2, b + 3]]);
        }
        let mesh = TriangleMesh::new(verts, faces).unwrap();
        let g = rugosity_grid(&mesh, &RugosityConfig::default()).unwrap();
        assert_eq!((g.nx(), g.ny()), (1, 1));
        assert!((g.get(0, 0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_cells_are_no_data() {
        // flat strip covering 1.0 x 0.6: second row of 0.5 cells is 20% covered
        let mesh = TriangleMesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(1.0, 0.6, 0.0), v(0.0, 0.6, 0.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let g = rugosity_grid(&mesh, &RugosityConfig::default()).unwrap();
        assert_eq!((g.nx(), g.ny()), (2, 2));
        assert!((g.get(0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.get(0, 1), None);
    }
}
