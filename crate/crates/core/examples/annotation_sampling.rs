//! Which frames to hand-label: one every 20 s plus a frame 1 s either side.

use reefmap::eval::sample_annotation_frames;

fn main() -> reefmap::Result<()> {
    let (frames, fps) = (13236, 6.0);
    let picked = sample_annotation_frames(frames, fps, 20.0, 1.0)?;
    println!("{} of {frames} frames ({:.1}%)", picked.len(), 100.0 * picked.len() as f64 / frames as f64);
    println!("first: {:?}", &picked[..8]);
    println!("last:  {:?}", &picked[picked.len() - 3..]);
    Ok(())
}
