//! Rugosity of inclined planes: each cell should read 1 / cos(theta).

use reefmap::geom::{Aabb2, TriangleMesh, Vec3};
use reefmap::rugosity::{rugosity_grid, rugosity_stats, RugosityConfig};

fn tilted_plane(size: f64, theta_deg: f64) -> reefmap::Result<TriangleMesh> {
    let slope = theta_deg.to_radians().tan();
    let z = |x: f64| x * slope;
    let vertices = vec![
        Vec3::new(0.0, 0.0, z(0.0)),
        Vec3::new(size, 0.0, z(size)),
        Vec3::new(size, size, z(size)),
        Vec3::new(0.0, size, z(0.0)),
    ];
    TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]])
}

fn main() -> reefmap::Result<()> {
    let cfg = RugosityConfig {
        cell_size: 0.5,
        region: Some(Aabb2::new([0.0, 0.0], [12.0, 12.0])?),
        ..Default::default()
    };
    for theta in [0.0, 15.0, 30.0, 45.0, 60.0] {
        let grid = rugosity_grid(&tilted_plane(12.0, theta)?, &cfg)?;
        let s = rugosity_stats(&grid).expect("plane covers every cell");
        println!(
            "theta={theta:4.1}  cells={}  mean={:.9}  expected={:.9}  spread={:.1e}",
            s.count,
            s.mean,
            1.0 / theta.to_radians().cos(),
            s.max - s.min
        );
    }
    Ok(())
}
