//! Reads a PLY or OBJ mesh and reports its size, footprint and surface area.
//!
//! Without an argument a small bumpy patch is written to a temporary PLY
//! first, so the example runs on its own.

use std::path::PathBuf;

use reefmap::geom::{mesh_surface_area, Aabb2};
use reefmap::ingest::{read_mesh, write_ply, PlyFormat};
use reefmap::rugosity::{rugosity_grid, rugosity_stats, RugosityConfig};
use reefmap::survey::{synth_reef, Bump, ReefScenario};

fn demo_mesh() -> reefmap::Result<PathBuf> {
    let mut scn = ReefScenario {
        seed: 0,
        region: Aabb2::new([0.0, 0.0], [4.0, 4.0])?,
        terrain: Default::default(),
        fish: Default::default(),
        noise: Default::default(),
    };
    scn.terrain.bumps.push(Bump {
        center: [2.0, 2.0],
        sigma: 0.7,
        height: 0.6,
    });
    let mesh = synth_reef(&scn, 0.1)?;
    let path = std::env::temp_dir().join("reefmap_demo_patch.ply");
    std::fs::write(&path, write_ply(&mesh, PlyFormat::BinaryLittleEndian)).map_err(|e| reefmap::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn main() -> reefmap::Result<()> {
    let path = match std::env::args_os().nth(1) {
        Some(p) => PathBuf::from(p),
        None => demo_mesh()?,
    };
    let mesh = match read_mesh(&path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    };
    println!("{}: {} vertices, {} triangles", path.display(), mesh.vertices().len(), mesh.faces().len());
    if let Some(b) = mesh.xy_bounds() {
        println!("xy extent {:.3} x {:.3} m", b.width(), b.height());
        let area = mesh_surface_area(&mesh);
        println!("surface area {area:.4} m^2, planar ratio {:.4}", area / (b.width() * b.height()));
    }
    let grid = rugosity_grid(&mesh, &RugosityConfig::default())?;
    if let Some(s) = rugosity_stats(&grid) {
        println!("rugosity over {} cells: min {:.4} mean {:.4} max {:.4}", s.count, s.min, s.mean, s.max);
    }
    Ok(())
}
