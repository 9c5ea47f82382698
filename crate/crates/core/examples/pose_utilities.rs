//! Camera-to-world poses: composing rotations, moving points, and reading
//! a trajectory CSV.

use std::f64::consts::FRAC_PI_2;

use reefmap::geom::{PoseSE3, UnitQuaternion, Vec3};
use reefmap::ingest::{parse_pose_trajectory, write_pose_trajectory, FramePose};

fn main() -> reefmap::Result<()> {
    let down = UnitQuaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), std::f64::consts::PI);
    let yaw = UnitQuaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), FRAC_PI_2);
    let cam = PoseSE3::new(Vec3::new(3.0, 4.0, -8.0), yaw.compose(&down));

    // a point 2 m ahead of the lens along the optical axis
    let p = cam.apply(Vec3::new(0.0, 0.0, 2.0));
    println!("optical axis hits ({:.3}, {:.3}, {:.3})", p.x, p.y, p.z);

    let traj: Vec<FramePose> = (0..3)
        .map(|k| FramePose {
            frame_id: k,
            timestamp: k as f64 / 6.0,
            pose: PoseSE3::new(Vec3::new(3.0, 4.0 + 0.05 * k as f64, -8.0), cam.rotation),
        })
        .collect();
    let csv = write_pose_trajectory(&traj);
    print!("{csv}");
    assert_eq!(parse_pose_trajectory(&csv, "inline")?, traj);

    let bad = format!("{}\n0,0,0,0,0,0.5,0,0,0\n", reefmap::ingest::POSE_CSV_HEADER);
    match parse_pose_trajectory(&bad, "bad.csv") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
