//! Simulates a survey over one planted fish hotspot, maps counts at the
//! camera positions and writes the log-abundance raster.

use reefmap::hotspot::{
    abundance_grid, hotspot_peaks, localize_counts, log_transform, render_raster, Colormap, HotspotConfig, Reducer,
};
use reefmap::survey::{parse_simulation_config, simulate_survey};

fn main() -> reefmap::Result<()> {
    let cfg = parse_simulation_config(include_str!("../scenarios/single_hotspot.toml"))?;
    let sim = simulate_survey(&cfg.plan()?, &cfg.camera, &cfg.scenario())?;
    let loc = localize_counts(&sim.trajectory, &sim.detections, 0.25)?;
    println!("{} frames localized", loc.samples.len());

    let planted = cfg.fish.hotspots[0].center;
    for reducer in [Reducer::Max, Reducer::Mean, Reducer::Sum] {
        let hc = HotspotConfig {
            reducer,
            ..Default::default()
        };
        let grid = log_transform(&abundance_grid(&loc.samples, &hc, &cfg.region)?.grid)?;
        let peaks = hotspot_peaks(&grid, &hc);
        let top = peaks[0];
        let off = ((top.x - planted[0]).powi(2) + (top.y - planted[1]).powi(2)).sqrt();
        println!(
            "{:>4}: top peak ({:.2}, {:.2}) log1p={:.3}, {off:.2} m from the planted center",
            reducer.name(),
            top.x,
            top.y,
            top.value
        );
        if reducer == Reducer::Max {
            let path = std::env::temp_dir().join("reefmap_hotspot.ppm");
            std::fs::write(&path, render_raster(&grid, &Colormap::default(), 8))
                .map_err(|e| reefmap::Error::Io { path: path.clone(), source: e })?;
            println!("      raster written to {}", path.display());
        }
    }
    Ok(())
}
