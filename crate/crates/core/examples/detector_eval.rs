//! Scores a noisy synthetic detector against its ground truth.

use reefmap::eval::{evaluate, EvalConfig};
use reefmap::geom::Aabb2;
use reefmap::survey::{
    plan_lawnmower, simulate_survey, CameraGeometry, FishField, NoiseModel, ReefScenario, TravelAxis,
};

fn main() -> reefmap::Result<()> {
    let scn = ReefScenario {
        seed: 42,
        region: Aabb2::new([0.0, 0.0], [12.0, 12.0])?,
        terrain: Default::default(),
        fish: FishField {
            base_density: 0.2,
            ..Default::default()
        },
        noise: NoiseModel {
            false_positive_rate: 0.3,
            miss_probability: 0.15,
        },
    };
    let cam = CameraGeometry::default();
    let plan = plan_lawnmower(&scn.region, &cam, 0.2, TravelAxis::Y, 0.3)?;
    let sim = simulate_survey(&plan, &cam, &scn)?;

    let report = evaluate(&sim.detections, &sim.ground_truth, &EvalConfig::default())?
        .expect("simulated sets share every frame");
    print!("{}", report.to_text());

    let knee = report
        .pr50
        .iter()
        .max_by(|a, b| (a.precision + a.recall).total_cmp(&(b.precision + b.recall)))
        .expect("non-empty curve");
    println!(
        "best P+R at IoU 0.5: confidence {:.3}, precision {:.3}, recall {:.3}",
        knee.confidence, knee.precision, knee.recall
    );
    Ok(())
}
