//! Survey planning and a synthetic reef used as end-to-end ground truth.
//!
//! The planner lays boustrophedon transects from the nadir camera footprint.
//! The simulator builds a heightfield reef with Gaussian bumps and an optional
//! pillar, a fish-density field with Gaussian hotspots (optionally driven by
//! local surface roughness), and a noisy detector that misses fish and
//! hallucinates spurious boxes. Every frame draws from its own seeded random
//! stream, so any frame can be regenerated alone and results do not depend
//! on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb2, Grid2D, PoseSE3, TriangleMesh, UnitQuaternion, Vec3};
use crate::hotspot::{
    abundance_grid, correlate_grids, hotspot_peaks, localize_counts, log_transform, Correlation,
    HotspotConfig, Peak,
};
use crate::ingest::{Detection, DetectionSet, FramePose};
use crate::rugosity::{rugosity_grid, RugosityConfig};

/// Nadir camera geometry. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraGeometry {
    pub altitude: f64,
    pub hfov: f64,
    pub vfov: f64,
    pub fps: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for CameraGeometry {
    /// 4K at 6 fps, 120°×58° field of view, 2 m altitude.
    fn default() -> Self {
        Self {
            altitude: 2.0,
            hfov: 120.0,
            vfov: 58.0,
            fps: 6.0,
            image_width: 3840,
            image_height: 2160,
        }
    }
}

impl CameraGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok_angle = |a: f64| a > 0.0 && a < 180.0;
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(Error::Precondition(format!("altitude must be positive, got {}", self.altitude)));
        }
        if !ok_angle(self.hfov) || !ok_angle(self.vfov) {
            return Err(Error::Precondition(format!(
                "field of view must be in (0, 180) degrees, got {}x{}",
                self.hfov, self.vfov
            )));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Precondition(format!("fps must be positive, got {}", self.fps)));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::Precondition("image size must be non-zero".into()));
        }
        Ok(())
    }
}

/// Flat-seafloor nadir footprint `(width, length)` in meters; width spans
/// the horizontal field of view.
pub fn footprint_dims(cam: &CameraGeometry) -> Result<(f64, f64)> {
    cam.validate()?;
    let half = |deg: f64| (deg.to_radians() * 0.5).tan();
    Ok((2.0 * cam.altitude * half(cam.hfov), 2.0 * cam.altitude * half(cam.vfov)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelAxis {
    X,
    #[default]
    Y,
}

impl std::str::FromStr for TravelAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(TravelAxis::X),
            "y" => Ok(TravelAxis::Y),
            other => Err(Error::InvalidInput(format!("travel axis must be x or y, got `{other}`"))),
        }
    }
}

/// Default cruise speed, m/s.
pub const DEFAULT_SPEED: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyPlan {
    /// Track ends in visiting order; consecutive pairs alternate between
    /// transects and cross-steps.
    pub waypoints: Vec<Vec3>,
    /// Nominal spacing from footprint width and overlap.
    pub track_spacing: f64,
    /// Across-track coordinate of each transect.
    pub tracks: Vec<f64>,
    pub travel_axis: TravelAxis,
    pub speed: f64,
    pub altitude: f64,
}

/// One camera exposure along the plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSample {
    pub time: f64,
    pub position: Vec3,
    /// Direction of travel, radians from +X.
    pub heading: f64,
}

impl SurveyPlan {
    pub fn path_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Camera positions every `speed / fps` meters along the path.
    pub fn frame_positions(&self, fps: f64) -> Vec<PlanSample> {
        let step = self.speed / fps;
        let total = self.path_length();
        if self.waypoints.is_empty() || !(step > 0.0) {
            return Vec::new();
        }
        let n = (total / step).floor() as usize + 1;
        let mut out = Vec::with_capacity(n);
        let mut seg = 0usize;
        let mut seg_start = 0.0;
        for k in 0..n {
            let s = k as f64 * step;
            while seg + 2 < self.waypoints.len()
                && s > seg_start + (self.waypoints[seg + 1] - self.waypoints[seg]).norm()
            {
                seg_start += (self.waypoints[seg + 1] - self.waypoints[seg]).norm();
                seg += 1;
            }
            let (a, b) = if self.waypoints.len() == 1 {
                (self.waypoints[0], self.waypoints[0])
            } else {
                (self.waypoints[seg], self.waypoints[seg + 1])
            };
            let d = b - a;
            let len = d.norm();
            let t = if len > 0.0 { ((s - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
            out.push(PlanSample {
                time: k as f64 / fps,
                position: a + d * t,
                heading: d.y.atan2(d.x),
            });
        }
        out
    }
}

/// Boustrophedon plan over `region` with the wide field of view across track.
///
/// `ceil(extent / spacing)` transects are spread evenly between the two
/// edges, each inset by half the nominal spacing, so the realized spacing
/// never exceeds the nominal one. A region narrower than one footprint gets
/// a single center transect.
pub fn plan_lawnmower(
    region: &Aabb2,
    cam: &CameraGeometry,
    overlap: f64,
    travel_axis: TravelAxis,
    speed: f64,
) -> Result<SurveyPlan> {
    if !(region.width() > 0.0 && region.height() > 0.0) {
        return Err(Error::Precondition("survey region must have positive area".into()));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Precondition(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::Precondition(format!("speed must be positive, got {speed}")));
    }
    let (width, _) = footprint_dims(cam)?;
    let spacing = width * (1.0 - overlap);
    let (across_min, across_max, along_min, along_max) = match travel_axis {
        TravelAxis::Y => (region.min[0], region.max[0], region.min[1], region.max[1]),
        TravelAxis::X => (region.min[1], region.max[1], region.min[0], region.max[0]),
    };
    let extent = across_max - across_min;
    let count = if width >= extent {
        1
    } else {
        ((extent / spacing) - 1e-9).ceil().max(1.0) as usize
    };
    let tracks: Vec<f64> = if count == 1 {
        vec![0.5 * (across_min + across_max)]
    } else {
        let inset = 0.5 * spacing;
        let gap = (extent - 2.0 * inset) / (count - 1) as f64;
        (0..count).map(|k| across_min + inset + gap * k as f64).collect()
    };
    let z = -cam.altitude;
    let point = |across: f64, along: f64| match travel_axis {
        TravelAxis::Y => Vec3::new(across, along, z),
        TravelAxis::X => Vec3::new(along, across, z),
    };
    let mut waypoints = Vec::with_capacity(2 * count);
    for (k, &c) in tracks.iter().enumerate() {
        let (from, to) = if k % 2 == 0 { (along_min, along_max) } else { (along_max, along_min) };
        waypoints.push(point(c, from));
        waypoints.push(point(c, to));
    }
    Ok(SurveyPlan {
        waypoints,
        track_spacing: spacing,
        tracks,
        travel_axis,
        speed,
        altitude: cam.altitude,
    })
}

/// Waypoint CSV `idx,x,y,z`.
pub fn plan_csv(plan: &SurveyPlan) -> String {
    use std::fmt::Write;
    let mut s = String::from("idx,x,y,z\n");
    for (k, w) in plan.waypoints.iter().enumerate() {
        let _ = writeln!(s, "{k},{:.6},{:.6},{:.6}", w.x, w.y, w.z);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub sigma: f64,
    pub height: f64,
}

/// Flat-topped column: `height · logistic((radius − r) / edge_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pillar {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
    #[serde(default = "default_edge_width")]
    pub edge_width: f64,
}

fn default_edge_width() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Terrain {
    /// Depth of the flat seafloor below the reference plane, meters.
    pub base_depth: f64,
    pub bumps: Vec<Bump>,
    pub pillar: Option<Pillar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FishHotspot {
    pub center: [f64; 2],
    pub sigma: f64,
    /// Added density at the center, fish/m².
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FishField {
    /// fish/m² everywhere.
    pub base_density: f64,
    pub hotspots: Vec<FishHotspot>,
    /// fish/m² per unit of local excess surface ratio `sqrt(1 + |∇z|²) − 1`.
    pub rugosity_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Mean spurious detections per frame.
    pub false_positive_rate: f64,
    /// Probability that a present fish is not detected.
    pub miss_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReefScenario {
    pub seed: u64,
    pub region: Aabb2,
    #[serde(default)]
    pub terrain: Terrain,
    #[serde(default)]
    pub fish: FishField,
    #[serde(default)]
    pub noise: NoiseModel,
}

fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

impl ReefScenario {
    /// Checks every field, naming the offending key path.
    pub fn validate(&self) -> Result<()> {
        let cfg = |path: String, msg: &str| Error::Config {
            path,
            msg: msg.to_string(),
        };
        let r = &self.region;
        let finite = r.min.iter().chain(&r.max).all(|v| v.is_finite());
        if !finite || !(r.max[0] > r.min[0] && r.max[1] > r.min[1]) {
            return Err(cfg("region".into(), "max must exceed min on both axes"));
        }
        if !self.terrain.base_depth.is_finite() {
            return Err(cfg("terrain.base_depth".into(), "must be finite"));
        }
        for (k, b) in self.terrain.bumps.iter().enumerate() {
            if !(b.sigma > 0.0) || !b.height.is_finite() || !b.center.iter().all(|c| c.is_finite()) {
                return Err(cfg(format!("terrain.bumps[{k}]"), "sigma must be positive, values finite"));
            }
        }
        if let Some(p) = &self.terrain.pillar {
            if !(p.radius > 0.0 && p.edge_width > 0.0) || !p.height.is_finite() {
                return Err(cfg("terrain.pillar".into(), "radius and edge_width must be positive"));
            }
        }
        if !(self.fish.base_density >= 0.0) {
            return Err(cfg("fish.base_density".into(), "must be non-negative"));
        }
        if !(self.fish.rugosity_gain >= 0.0) {
            return Err(cfg("fish.rugosity_gain".into(), "must be non-negative"));
        }
        for (k, h) in self.fish.hotspots.iter().enumerate() {
            if !(h.sigma > 0.0 && h.peak >= 0.0) {
                return Err(cfg(format!("fish.hotspots[{k}]"), "sigma must be positive and peak non-negative"));
            }
        }
        if !(self.noise.false_positive_rate >= 0.0 && self.noise.false_positive_rate.is_finite()) {
            return Err(cfg("noise.false_positive_rate".into(), "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.noise.miss_probability) {
            return Err(cfg("noise.miss_probability".into(), "must be in [0, 1]"));
        }
        Ok(())
    }

    /// Seafloor elevation (Z up).
    pub fn terrain_height(&self, x: f64, y: f64) -> f64 {
        let t = &self.terrain;
        let mut z = -t.base_depth;
        for b in &t.bumps {
            let r2 = (x - b.center[0]).powi(2) + (y - b.center[1]).powi(2);
            z += b.height * (-r2 / (2.0 * b.sigma * b.sigma)).exp();
        }
        if let Some(p) = &t.pillar {
            let r = ((x - p.center[0]).powi(2) + (y - p.center[1]).powi(2)).sqrt();
            z += p.height * logistic((p.radius - r) / p.edge_width);
        }
        z
    }

    /// Analytic `(∂z/∂x, ∂z/∂y)`.
    pub fn terrain_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let t = &self.terrain;
        let mut g = [0.0, 0.0];
        for b in &t.bumps {
            let (dx, dy) = (x - b.center[0], y - b.center[1]);
            let s2 = b.sigma * b.sigma;
            let e = b.height * (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
            g[0] -= e * dx / s2;
            g[1] -= e * dy / s2;
        }
        if let Some(p) = &t.pillar {
            let (dx, dy) = (x - p.center[0], y - p.center[1]);
            let r = (dx * dx + dy * dy).sqrt();
            if r > 0.0 {
                let s = logistic((p.radius - r) / p.edge_width);
                let dz_dr = -p.height * s * (1.0 - s) / p.edge_width;
                g[0] += dz_dr * dx / r;
                g[1] += dz_dr * dy / r;
            }
        }
        g
    }
}

/// Regular-grid heightfield mesh over the scenario region, two triangles per
/// quad. The realized spacing divides the region exactly and never exceeds
/// `vertex_spacing`.
pub fn synth_reef(scn: &ReefScenario, vertex_spacing: f64) -> Result<TriangleMesh> {
    if !(vertex_spacing > 0.0 && vertex_spacing.is_finite()) {
        return Err(Error::Precondition(format!("vertex spacing must be positive, got {vertex_spacing}")));
    }
    let r = &scn.region;
    let nx = ((r.width() / vertex_spacing) - 1e-9).ceil().max(1.0) as usize + 1;
    let ny = ((r.height() / vertex_spacing) - 1e-9).ceil().max(1.0) as usize + 1;
    if nx.saturating_mul(ny) > u32::MAX as usize {
        return Err(Error::Precondition("mesh would exceed 2^32 vertices".into()));
    }
    let xs: Vec<f64> = (0..nx)
        .map(|a| if a + 1 == nx { r.max[0] } else { r.min[0] + r.width() * a as f64 / (nx - 1) as f64 })
        .collect();
    let ys: Vec<f64> = (0..ny)
        .map(|b| if b + 1 == ny { r.max[1] } else { r.min[1] + r.height() * b as f64 / (ny - 1) as f64 })
        .collect();
    let vertices: Vec<Vec3> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (xs[k % nx], ys[k / nx]);
            Vec3::new(x, y, scn.terrain_height(x, y))
        })
        .collect();
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for b in 0..ny - 1 {
        for a in 0..nx - 1 {
            let v00 = (b * nx + a) as u32;
            let v10 = v00 + 1;
            let v01 = v00 + nx as u32;
            let v11 = v01 + 1;
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Fish per square meter at `(x, y)`.
pub fn fish_density(scn: &ReefScenario, x: f64, y: f64) -> f64 {
    let f = &scn.fish;
    let mut d = f.base_density;
    for h in &f.hotspots {
        let r2 = (x - h.center[0]).powi(2) + (y - h.center[1]).powi(2);
        d += h.peak * (-r2 / (2.0 * h.sigma * h.sigma)).exp();
    }
    if f.rugosity_gain > 0.0 {
        let [gx, gy] = scn.terrain_gradient(x, y);
        d += f.rugosity_gain * ((1.0 + gx * gx + gy * gy).sqrt() - 1.0);
    }
    d
}

/// Simulator output for one survey.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSurvey {
    pub trajectory: Vec<FramePose>,
    /// Noisy detector output, with confidences.
    pub detections: DetectionSet,
    /// Every fish present in each frame, detected or not.
    pub ground_truth: DetectionSet,
}

struct FrameDraw {
    detections: Vec<Detection>,
    truth: Vec<Detection>,
}

// Confidence shapes: true fish score high, spurious boxes low.
const TRUE_CONF: (f64, f64) = (8.0, 2.0);
const FALSE_CONF: (f64, f64) = (2.0, 5.0);

/// Random generator for one frame: the scenario seed selects the key and the
/// frame id selects an independent ChaCha stream.
pub fn frame_rng(seed: u64, frame_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_id);
    rng
}

fn draw_frame(
    rng: &mut ChaCha8Rng,
    expected: f64,
    noise: &NoiseModel,
    aspect: f64,
) -> FrameDraw {
    let poisson = |rng: &mut ChaCha8Rng, mean: f64| -> u64 {
        if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
        } else {
            0
        }
    };
    let true_conf = Beta::new(TRUE_CONF.0, TRUE_CONF.1).expect("valid beta");
    let false_conf = Beta::new(FALSE_CONF.0, FALSE_CONF.1).expect("valid beta");
    let random_box = |rng: &mut ChaCha8Rng| {
        let w: f64 = rng.random_range(0.02..0.06);
        let h = (w * aspect).min(1.0);
        Detection::fish(rng.random::<f64>(), rng.random::<f64>(), w, h, 1.0)
    };

    let n_true = poisson(rng, expected);
    let truth: Vec<Detection> = (0..n_true).map(|_| random_box(rng)).collect();
    let mut detections = Vec::new();
    let keep = 1.0 - noise.miss_probability;
    let n_kept = if n_true == 0 || keep <= 0.0 {
        0
    } else if keep >= 1.0 {
        n_true
    } else {
        Binomial::new(n_true, keep).map(|b| b.sample(rng)).unwrap_or(0)
    };
    // truth boxes are exchangeable, so the first n_kept are the detected ones
    for t in truth.iter().take(n_kept as usize) {
        let jx = rng.random_range(-0.1..0.1) * t.w;
        let jy = rng.random_range(-0.1..0.1) * t.h;
        detections.push(Detection {
            cx: (t.cx + jx).clamp(0.0, 1.0),
            cy: (t.cy + jy).clamp(0.0, 1.0),
            confidence: true_conf.sample(rng),
            ..*t
        });
    }
    for _ in 0..poisson(rng, noise.false_positive_rate) {
        let mut b = random_box(rng);
        b.confidence = false_conf.sample(rng);
        detections.push(b);
    }
    FrameDraw { detections, truth }
}

/// Camera-to-world rotation for a nadir camera: optical axis down, image x
/// across track (to the right of travel).
pub fn nadir_rotation(heading: f64) -> UnitQuaternion {
    let flip = UnitQuaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), std::f64::consts::PI);
    let yaw = UnitQuaternion::from_axis_angle(
        Vec3::new(0.0, 0.0, 1.0),
        heading - std::f64::consts::FRAC_PI_2,
    );
    yaw.compose(&flip)
}

/// Flies the plan over the scenario. The camera sits `altitude` above the
/// flat seafloor; each frame's true fish count is Poisson with mean
/// `fish_density(camera xy) × footprint area`.
pub fn simulate_survey(plan: &SurveyPlan, cam: &CameraGeometry, scn: &ReefScenario) -> Result<SimulatedSurvey> {
    scn.validate()?;
    let (fw, fl) = footprint_dims(cam)?;
    let area = fw * fl;
    let aspect = cam.image_width as f64 / cam.image_height as f64;
    let z = -scn.terrain.base_depth + cam.altitude;
    let samples = plan.frame_positions(cam.fps);
    let frames: Vec<(FramePose, FrameDraw)> = samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let frame_id = k as u64;
            let mut rng = frame_rng(scn.seed, frame_id);
            let expected = fish_density(scn, s.position.x, s.position.y) * area;
            let draw = draw_frame(&mut rng, expected, &scn.noise, aspect);
            let pose = FramePose {
                frame_id,
                timestamp: s.time,
                pose: PoseSE3::new(
                    Vec3::new(s.position.x, s.position.y, z),
                    nadir_rotation(s.heading),
                ),
            };
            (pose, draw)
        })
        .collect();
    let mut out = SimulatedSurvey {
        trajectory: Vec::with_capacity(frames.len()),
        detections: DetectionSet::new(),
        ground_truth: DetectionSet::new(),
    };
    for (pose, draw) in frames {
        out.detections.insert(pose.frame_id, draw.detections);
        out.ground_truth.insert(pose.frame_id, draw.truth);
        out.trajectory.push(pose);
    }
    Ok(out)
}

/// Planted structure as CSV `kind,x,y,sigma,value` (value is peak density for
/// fish hotspots, height for bumps and the pillar; the pillar's sigma column
/// holds its radius).
pub fn truth_csv(scn: &ReefScenario) -> String {
    use std::fmt::Write;
    let mut s = String::from("kind,x,y,sigma,value\n");
    for h in &scn.fish.hotspots {
        let _ = writeln!(s, "fish_hotspot,{},{},{},{}", h.center[0], h.center[1], h.sigma, h.peak);
    }
    for b in &scn.terrain.bumps {
        let _ = writeln!(s, "bump,{},{},{},{}", b.center[0], b.center[1], b.sigma, b.height);
    }
    if let Some(p) = &scn.terrain.pillar {
        let _ = writeln!(s, "pillar,{},{},{},{}", p.center[0], p.center[1], p.radius, p.height);
    }
    let _ = writeln!(s, "base_density,,,,{}", scn.fish.base_density);
    s
}

/// Knobs for [`run_end_to_end`] beyond the scenario and camera.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndOptions {
    pub travel_axis: TravelAxis,
    pub speed: f64,
    pub conf_threshold: f64,
    pub hotspot: HotspotConfig,
    pub vertex_spacing: f64,
    pub rugosity: RugosityConfig,
}

impl Default for EndToEndOptions {
    fn default() -> Self {
        Self {
            travel_axis: TravelAxis::Y,
            speed: DEFAULT_SPEED,
            conf_threshold: crate::eval::DEFAULT_COUNT_THRESHOLD,
            hotspot: HotspotConfig::default(),
            vertex_spacing: 0.1,
            rugosity: RugosityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndReport {
    pub plan: SurveyPlan,
    pub frames: usize,
    pub abundance: Grid2D,
    pub log_abundance: Grid2D,
    pub rugosity: Grid2D,
    pub peaks: Vec<Peak>,
    /// For each planted fish hotspot, distance to the nearest recovered peak.
    pub planted_offsets: Vec<Option<f64>>,
    /// Distance from the top recovered peak to the nearest planted hotspot.
    pub top_peak_offset: Option<f64>,
    pub correlation: Correlation,
}

/// Plan, simulate, map abundance, find peaks, and correlate with the
/// rugosity of the synthetic mesh, all on one grid over the scenario region.
pub fn run_end_to_end(
    scn: &ReefScenario,
    cam: &CameraGeometry,
    overlap: f64,
    opts: &EndToEndOptions,
) -> Result<EndToEndReport> {
    scn.validate()?;
    let plan = plan_lawnmower(&scn.region, cam, overlap, opts.travel_axis, opts.speed)?;
    let sim = simulate_survey(&plan, cam, scn)?;
    let loc = localize_counts(&sim.trajectory, &sim.detections, opts.conf_threshold)?;
    let abundance = abundance_grid(&loc.samples, &opts.hotspot, &scn.region)?.grid;
    let log_abundance = log_transform(&abundance)?;
    let peaks = hotspot_peaks(&log_abundance, &opts.hotspot);

    let mesh = synth_reef(scn, opts.vertex_spacing)?;
    let rcfg = RugosityConfig {
        cell_size: opts.hotspot.cell_size,
        region: Some(scn.region),
        ..opts.rugosity.clone()
    };
    let rugosity = rugosity_grid(&mesh, &rcfg)?;
    let correlation = correlate_grids(&rugosity, &abundance)?;

    let dist = |a: [f64; 2], p: &Peak| ((a[0] - p.x).powi(2) + (a[1] - p.y).powi(2)).sqrt();
    let planted_offsets = scn
        .fish
        .hotspots
        .iter()
        .map(|h| peaks.iter().map(|p| dist(h.center, p)).min_by(f64::total_cmp))
        .collect();
    let top_peak_offset = peaks.first().and_then(|top| {
        scn.fish
            .hotspots
            .iter()
            .map(|h| dist(h.center, top))
            .min_by(f64::total_cmp)
    });
    Ok(EndToEndReport {
        frames: sim.trajectory.len(),
        plan,
        abundance,
        log_abundance,
        rugosity,
        peaks,
        planted_offsets,
        top_peak_offset,
        correlation,
    })
}

/// `[survey]` table of a simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveySettings {
    pub overlap: f64,
    pub speed: f64,
    pub travel_axis: TravelAxis,
}

impl Default for SurveySettings {
    fn default() -> Self {
        Self {
            overlap: 0.2,
            speed: DEFAULT_SPEED,
            travel_axis: TravelAxis::Y,
        }
    }
}

/// `[mesh]` table of a simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSettings {
    pub vertex_spacing: f64,
}

impl Default for MeshSettings {
    fn default() -> Self {
        Self { vertex_spacing: 0.1 }
    }
}

/// A complete simulation description as stored in a TOML file: the reef
/// scenario at top level plus `[camera]`, `[survey]` and `[mesh]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub region: Aabb2,
    #[serde(default)]
    pub terrain: Terrain,
    #[serde(default)]
    pub fish: FishField,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub camera: CameraGeometry,
    #[serde(default)]
    pub survey: SurveySettings,
    #[serde(default)]
    pub mesh: MeshSettings,
}

impl SimulationConfig {
    pub fn scenario(&self) -> ReefScenario {
        ReefScenario {
            seed: self.seed,
            region: self.region,
            terrain: self.terrain.clone(),
            fish: self.fish.clone(),
            noise: self.noise.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        let cfg = |path: &str, e: Error| Error::Config {
            path: path.into(),
            msg: e.to_string(),
        };
        self.camera.validate().map_err(|e| cfg("camera", e))?;
        if !(0.0..1.0).contains(&self.survey.overlap) {
            return Err(Error::Config {
                path: "survey.overlap".into(),
                msg: "must be in [0, 1)".into(),
            });
        }
        if !(self.survey.speed > 0.0 && self.survey.speed.is_finite()) {
            return Err(Error::Config {
                path: "survey.speed".into(),
                msg: "must be positive".into(),
            });
        }
        if !(self.mesh.vertex_spacing > 0.0 && self.mesh.vertex_spacing.is_finite()) {
            return Err(Error::Config {
                path: "mesh.vertex_spacing".into(),
                msg: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<SurveyPlan> {
        plan_lawnmower(
            &self.region,
            &self.camera,
            self.survey.overlap,
            self.survey.travel_axis,
            self.survey.speed,
        )
    }
}

/// Parses and validates a TOML simulation config. Schema errors name the
/// failing key path.
pub fn parse_simulation_config(text: &str) -> Result<SimulationConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
        path: String::new(),
        msg: e.to_string(),
    })?;
    let cfg: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        msg: e.inner().message().trim().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_simulation_config(path: &std::path::Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_simulation_config(&text).map_err(|e| match e {
        Error::Config { path: key, msg } => Error::Config {
            path: if key.is_empty() || key == "." {
                path.display().to_string()
            } else {
                format!("{}: {key}", path.display())
            },
            msg,
        },
        other => other,
    })
}
