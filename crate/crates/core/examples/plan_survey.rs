//! Lawnmower plan for a 12 x 12 m site with the default nadir camera.
//!
//! `cargo run --example plan_survey -- 0.5` sets the overlap fraction.

use reefmap::geom::Aabb2;
use reefmap::survey::{footprint_dims, plan_lawnmower, CameraGeometry, TravelAxis, DEFAULT_SPEED};

fn main() -> reefmap::Result<()> {
    let overlap: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let cam = CameraGeometry::default();
    let (w, l) = footprint_dims(&cam)?;
    println!("footprint {w:.3} x {l:.3} m at {} m altitude", cam.altitude);

    let site = Aabb2::new([0.0, 0.0], [12.0, 12.0])?;
    let plan = plan_lawnmower(&site, &cam, overlap, TravelAxis::Y, DEFAULT_SPEED)?;
    println!(
        "{} tracks, nominal spacing {:.3} m, path {:.1} m, {:.1} min at {} m/s",
        plan.tracks.len(),
        plan.track_spacing,
        plan.path_length(),
        plan.path_length() / plan.speed / 60.0,
        plan.speed
    );
    for (k, p) in plan.waypoints.iter().enumerate() {
        println!("  {k:2}: ({:6.3}, {:6.3}, {:6.3})", p.x, p.y, p.z);
    }
    println!("{} frames at {} fps", plan.frame_positions(cam.fps).len(), cam.fps);
    Ok(())
}
