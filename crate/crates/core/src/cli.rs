//! The `reefmap` command line: one subcommand per pipeline stage.
//!
//! Standard output carries `key=value` lines only; diagnostics go to standard
//! error. Every run that gets past argument parsing writes a JSON manifest
//! with input and output digests, the effective configuration and stage
//! timings, including runs that fail.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 unreadable or malformed
//! input, 4 inputs that parse but do not fit together.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::eval::{coco_thresholds, evaluate, EvalConfig, DEFAULT_COUNT_THRESHOLD};
use crate::geom::Aabb2;
use crate::gridio::{parse_grid_csv, write_grid_csv};
use crate::hotspot::{
    abundance_grid, correlate_grids, hotspot_peaks, localize_counts, log_transform, peaks_csv, render_raster,
    sample_region, world_file, Colormap, HotspotConfig, Reducer,
};
use crate::ingest::{read_mesh, read_pose_trajectory, read_yolo_dir, write_ply, write_pose_trajectory, write_yolo_file, PlyFormat};
use crate::rugosity::{rugosity_grid, rugosity_stats, RugosityConfig};
use crate::survey::{
    footprint_dims, plan_csv, plan_lawnmower, read_simulation_config, simulate_survey, synth_reef, truth_csv,
    CameraGeometry, TravelAxis, DEFAULT_SPEED,
};

// Ignores write failures so a closed pipe (`| head`) cannot abort a run.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "reefmap", version, about = "AUV reef survey mapping toolkit")]
pub struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Overrides the scenario seed in `simulate`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lay out lawnmower transects over a region.
    Plan(PlanArgs),
    /// Per-cell rugosity of a reef mesh.
    Rugosity(RugosityArgs),
    /// Fish abundance map and hotspot peaks from poses and detections.
    Hotspot(HotspotArgs),
    /// Detector precision metrics against ground-truth labels.
    Eval(EvalArgs),
    /// Generate a synthetic survey data set from a scenario file.
    Simulate(SimulateArgs),
    /// Correlation between two grids of the same shape.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanArgs {
    /// `WxH` from the origin, or `x0,y0,x1,y1`.
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub altitude: Option<f64>,
    #[arg(long)]
    pub hfov: Option<f64>,
    #[arg(long)]
    pub vfov: Option<f64>,
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub speed: Option<f64>,
    /// `x` or `y`.
    #[arg(long)]
    pub travel_axis: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RugosityArgs {
    /// PLY or OBJ mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub min_coverage: Option<f64>,
    #[arg(long)]
    pub upscale: Option<usize>,
    /// Output path prefix; files are `<prefix>_rugosity.*`.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotArgs {
    /// Pose trajectory CSV.
    #[arg(long)]
    pub poses: Option<PathBuf>,
    /// Directory of `<frame_id>.txt` detection files.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long)]
    pub conf_threshold: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// `max`, `mean` or `sum`.
    #[arg(long)]
    pub reducer: Option<String>,
    #[arg(long)]
    pub peaks: Option<usize>,
    #[arg(long)]
    pub min_separation: Option<f64>,
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub upscale: Option<usize>,
    /// Output path prefix; files are `<prefix>_abundance.*`, `<prefix>_peaks.csv`.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// Prediction label directory.
    #[arg(long)]
    pub preds: Option<PathBuf>,
    /// Ground-truth label directory.
    #[arg(long)]
    pub gts: Option<PathBuf>,
    /// Comma-separated IoU thresholds, or `coco` for 0.50:0.05:0.95.
    #[arg(long)]
    pub iou_thresholds: Option<String>,
    /// Confidence cut for the TP/FP/FN counts.
    #[arg(long)]
    pub conf_threshold: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateArgs {
    /// First grid CSV.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Second grid CSV.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub plan: PlanArgs,
    pub rugosity: RugosityArgs,
    pub hotspot: HotspotArgs,
    pub eval: EvalArgs,
    pub simulate: SimulateArgs,
    pub correlate: CorrelateArgs,
}

macro_rules! overlay {
    ($ty:ident { $($f:ident),* $(,)? }) => {
        impl $ty {
            /// Fills every unset flag from `file`.
            pub fn or(self, file: $ty) -> $ty {
                $ty { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

overlay!(PlanArgs { region, altitude, hfov, vfov, overlap, speed, travel_axis, out_dir });
overlay!(RugosityArgs { mesh, cell_size, region, min_coverage, upscale, out_prefix });
overlay!(HotspotArgs {
    poses,
    detections,
    conf_threshold,
    cell_size,
    reducer,
    peaks,
    min_separation,
    region,
    upscale,
    out_prefix
});
overlay!(EvalArgs { preds, gts, iou_thresholds, conf_threshold, out_dir });
overlay!(SimulateArgs { scenario, out_dir });
overlay!(CorrelateArgs { a, b, out_dir });

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Precondition(_) | Error::Domain(_) => EXIT_USAGE,
        Error::ShapeMismatch(_) | Error::OrphanFrames(_) | Error::NoCommonFrames => EXIT_MISMATCH,
        _ => EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage_err(e: Error) -> CliError {
    CliError::usage(e.to_string())
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("missing required option --{flag} (flag or config file)")))
}

/// `WxH` anchored at the origin, or `x0,y0,x1,y1`.
pub fn parse_region(s: &str) -> Result<Aabb2, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}` in region `{s}`"));
    let (min, max) = if let Some((w, h)) = s.split_once(['x', 'X']) {
        ([0.0, 0.0], [num(w)?, num(h)?])
    } else {
        let v: Vec<f64> = s.split(',').map(num).collect::<Result<_, _>>()?;
        if v.len() != 4 {
            return Err(format!("region `{s}` must be WxH or x0,y0,x1,y1"));
        }
        ([v[0], v[1]], [v[2], v[3]])
    };
    let r = Aabb2::new(min, max).map_err(|e| e.to_string())?;
    if !(r.width() > 0.0 && r.height() > 0.0) {
        return Err(format!("region `{s}` has no area"));
    }
    Ok(r)
}

fn region_arg(s: Option<&String>) -> CliResult<Option<Aabb2>> {
    s.map(|s| parse_region(s).map_err(CliError::usage)).transpose()
}

/// Parses `0.5,0.75` style lists; `coco` gives 0.50:0.05:0.95.
pub fn parse_thresholds(s: &str) -> Result<Vec<f64>, String> {
    if s.trim() == "coco" {
        return Ok(coco_thresholds());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad IoU threshold `{t}`")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub threads: usize,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub config: serde_json::Value,
    pub outputs: Vec<FileDigest>,
    pub timings: Vec<StageTiming>,
    pub exit_code: i32,
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Run {
    manifest: RunManifest,
    manifest_path: Option<PathBuf>,
    clock: Instant,
}

impl Run {
    fn new(command: &str, threads: usize, seed: Option<u64>) -> Self {
        Self {
            manifest: RunManifest {
                tool: "reefmap".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                threads,
                seed,
                inputs: Vec::new(),
                config: serde_json::Value::Null,
                outputs: Vec::new(),
                timings: Vec::new(),
                exit_code: EXIT_OK,
                error: None,
            },
            manifest_path: None,
            clock: Instant::now(),
        }
    }

    fn config(&mut self, cfg: &impl Serialize) {
        self.manifest.config = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    }

    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.manifest.timings.push(StageTiming {
            stage: name.into(),
            ms: (now - self.clock).as_secs_f64() * 1e3,
        });
        self.clock = now;
    }

    /// Records a file, or every regular file directly inside a directory.
    fn input(&mut self, path: &Path) {
        let mut files = Vec::new();
        if path.is_dir() {
            if let Ok(rd) = std::fs::read_dir(path) {
                files.extend(rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()));
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        for f in files {
            if let Ok(bytes) = std::fs::read(&f) {
                self.manifest.inputs.push(FileDigest {
                    path: f.display().to_string(),
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                });
            }
        }
    }

    fn output(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::from(Error::io(dir, e)))?;
        }
        std::fs::write(path, bytes).map_err(|e| CliError::from(Error::io(path, e)))?;
        self.manifest.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn finish(mut self, result: CliResult<()>) -> i32 {
        let code = match result {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {}", e.msg);
                self.manifest.error = Some(e.msg);
                e.code
            }
        };
        self.manifest.exit_code = code;
        if let Some(path) = &self.manifest_path {
            let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
            let written = path
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .map_or(Ok(()), std::fs::create_dir_all)
                .and_then(|_| std::fs::write(path, json + "\n"));
            if let Err(e) = written {
                eprintln!("warning: could not write manifest {}: {e}", path.display());
            }
        }
        code
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn cmd_plan(args: PlanArgs, run: &mut Run) -> CliResult<()> {
    let out_dir = args.out_dir.clone().unwrap_or_else(|| ".".into());
    run.manifest_path = Some(out_dir.join("plan.manifest.json"));
    run.config(&args);
    let region = required(region_arg(args.region.as_ref())?, "region")?;
    let defaults = CameraGeometry::default();
    let cam = CameraGeometry {
        altitude: args.altitude.unwrap_or(defaults.altitude),
        hfov: args.hfov.unwrap_or(defaults.hfov),
        vfov: args.vfov.unwrap_or(defaults.vfov),
        ..defaults
    };
    let axis: TravelAxis = args.travel_axis.as_deref().unwrap_or("y").parse().map_err(usage_err)?;
    let overlap = args.overlap.unwrap_or(0.2);
    let plan = plan_lawnmower(&region, &cam, overlap, axis, args.speed.unwrap_or(DEFAULT_SPEED))?;
    let (fw, fl) = footprint_dims(&cam)?;
    run.stage("plan");
    run.output(&out_dir.join("plan.csv"), plan_csv(&plan).as_bytes())?;
    run.stage("write");
    out!("tracks={}", plan.tracks.len());
    out!("spacing={}", f6(plan.track_spacing));
    out!("footprint_width={}", f6(fw));
    out!("footprint_length={}", f6(fl));
    out!("path_length={}", f6(plan.path_length()));
    out!("duration_s={}", f6(plan.path_length() / plan.speed));
    Ok(())
}

fn cmd_rugosity(args: RugosityArgs, run: &mut Run) -> CliResult<()> {
    let prefix = args.out_prefix.clone().unwrap_or_else(|| "reef".into());
    run.manifest_path = Some(with_suffix(&prefix, "_rugosity.manifest.json"));
    run.config(&args);
    let mesh_path = required(args.mesh.clone(), "mesh")?;
    let defaults = RugosityConfig::default();
    let cfg = RugosityConfig {
        cell_size: args.cell_size.unwrap_or(defaults.cell_size),
        region: region_arg(args.region.as_ref())?,
        min_coverage_fraction: args.min_coverage.unwrap_or(defaults.min_coverage_fraction),
    };
    if !(cfg.cell_size > 0.0 && cfg.cell_size.is_finite()) {
        return Err(CliError::usage(format!("--cell-size must be positive, got {}", cfg.cell_size)));
    }
    if !(0.0..=1.0).contains(&cfg.min_coverage_fraction) {
        return Err(CliError::usage("--min-coverage must be in [0, 1]"));
    }
    run.input(&mesh_path);
    let mesh = read_mesh(&mesh_path)?;
    run.stage("parse");
    let grid = rugosity_grid(&mesh, &cfg)?;
    run.stage("rugosity");
    let up = args.upscale.unwrap_or(1);
    run.output(&with_suffix(&prefix, "_rugosity.csv"), write_grid_csv(&grid).as_bytes())?;
    run.output(&with_suffix(&prefix, "_rugosity.ppm"), &render_raster(&grid, &Colormap::default(), up))?;
    run.output(&with_suffix(&prefix, "_rugosity.wld"), world_file(&grid, up).as_bytes())?;
    run.stage("write");
    out!("triangles={}", mesh.faces().len());
    out!("cells={}", grid.len());
    match rugosity_stats(&grid) {
        Some(s) => {
            out!("valid_cells={}", s.count);
            out!("min={}", f6(s.min));
            out!("max={}", f6(s.max));
            out!("mean={}", f6(s.mean));
        }
        None => {
            out!("valid_cells=0");
            out!("mean=undefined");
        }
    }
    Ok(())
}

fn cmd_hotspot(args: HotspotArgs, run: &mut Run) -> CliResult<()> {
    let prefix = args.out_prefix.clone().unwrap_or_else(|| "reef".into());
    run.manifest_path = Some(with_suffix(&prefix, "_hotspot.manifest.json"));
    run.config(&args);
    let poses_path = required(args.poses.clone(), "poses")?;
    let det_dir = required(args.detections.clone(), "detections")?;
    let defaults = HotspotConfig::default();
    let cfg = HotspotConfig {
        cell_size: args.cell_size.unwrap_or(defaults.cell_size),
        reducer: match &args.reducer {
            Some(r) => r.parse::<Reducer>().map_err(usage_err)?,
            None => defaults.reducer,
        },
        peak_count: args.peaks.unwrap_or(defaults.peak_count),
        peak_min_separation: args.min_separation.unwrap_or(defaults.peak_min_separation),
    };
    cfg.validate().map_err(usage_err)?;
    let conf = args.conf_threshold.unwrap_or(DEFAULT_COUNT_THRESHOLD);
    if !(0.0..=1.0).contains(&conf) {
        return Err(CliError::usage("--conf-threshold must be in [0, 1]"));
    }
    let region = region_arg(args.region.as_ref())?;

    run.input(&poses_path);
    run.input(&det_dir);
    let traj = read_pose_trajectory(&poses_path)?;
    let dets = read_yolo_dir(&det_dir)?;
    run.stage("parse");
    let loc = localize_counts(&traj, &dets, conf)?;
    let region = match region {
        Some(r) => r,
        None => {
            let from_traj: Vec<_> = traj
                .iter()
                .map(|p| crate::hotspot::CountSample {
                    frame_id: p.frame_id,
                    x: p.pose.translation.x,
                    y: p.pose.translation.y,
                    count: 0,
                })
                .collect();
            let pts = if loc.samples.is_empty() { &from_traj } else { &loc.samples };
            sample_region(pts, cfg.cell_size)
                .ok_or_else(|| CliError::from(Error::InvalidInput("trajectory has no poses".into())))?
        }
    };
    let ab = abundance_grid(&loc.samples, &cfg, &region)?;
    let logged = log_transform(&ab.grid)?;
    let peaks = hotspot_peaks(&logged, &cfg);
    run.stage("hotspot");
    let up = args.upscale.unwrap_or(1);
    run.output(&with_suffix(&prefix, "_abundance.csv"), write_grid_csv(&ab.grid).as_bytes())?;
    run.output(&with_suffix(&prefix, "_abundance_log.ppm"), &render_raster(&logged, &Colormap::default(), up))?;
    run.output(&with_suffix(&prefix, "_abundance_log.wld"), world_file(&logged, up).as_bytes())?;
    run.output(&with_suffix(&prefix, "_peaks.csv"), peaks_csv(&peaks).as_bytes())?;
    run.stage("write");
    if !loc.unobserved.is_empty() {
        eprintln!("note: {} trajectory frame(s) have no detection file and were skipped", loc.unobserved.len());
    }
    out!("frames={}", loc.samples.len());
    out!("unobserved_frames={}", loc.unobserved.len());
    out!("outside_region={}", ab.outside);
    out!("observed_cells={}", ab.grid.valid_count());
    out!("reducer={}", cfg.reducer.name());
    for (k, p) in peaks.iter().enumerate() {
        out!("peak{}={},{},{}", k + 1, f6(p.x), f6(p.y), f6(p.value));
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, run: &mut Run) -> CliResult<()> {
    let out_dir = args.out_dir.clone().unwrap_or_else(|| ".".into());
    run.manifest_path = Some(out_dir.join("eval.manifest.json"));
    run.config(&args);
    let preds_dir = required(args.preds.clone(), "preds")?;
    let gts_dir = required(args.gts.clone(), "gts")?;
    let cfg = EvalConfig {
        iou_thresholds: match &args.iou_thresholds {
            Some(s) => parse_thresholds(s).map_err(CliError::usage)?,
            None => coco_thresholds(),
        },
        confidence_threshold_for_counting: args.conf_threshold.unwrap_or(DEFAULT_COUNT_THRESHOLD),
    };
    cfg.validate().map_err(usage_err)?;
    run.input(&preds_dir);
    run.input(&gts_dir);
    let preds = read_yolo_dir(&preds_dir)?;
    let gts = read_yolo_dir(&gts_dir)?;
    run.stage("parse");
    let report = evaluate(&preds, &gts, &cfg)?.ok_or_else(|| CliError::from(Error::NoCommonFrames))?;
    run.stage("evaluate");
    run.output(&out_dir.join("eval_pr50.csv"), report.pr_csv().as_bytes())?;
    run.output(&out_dir.join("eval_report.txt"), report.to_text().as_bytes())?;
    run.stage("write");
    out!("{}", report.to_text().trim_end());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, seed: Option<u64>, run: &mut Run) -> CliResult<()> {
    let out_dir = args.out_dir.clone().unwrap_or_else(|| "sim".into());
    run.manifest_path = Some(out_dir.join("simulate.manifest.json"));
    run.config(&args);
    let scenario_path = required(args.scenario.clone(), "scenario")?;
    run.input(&scenario_path);
    let mut cfg = match read_simulation_config(&scenario_path) {
        Ok(c) => c,
        Err(e @ Error::Io { .. }) => return Err(e.into()),
        Err(e) => return Err(usage_err(e)),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    run.config(&serde_json::json!({ "args": &args, "scenario": &cfg }));
    run.stage("config");
    let plan = cfg.plan()?;
    let scn = cfg.scenario();
    let sim = simulate_survey(&plan, &cfg.camera, &scn)?;
    run.stage("simulate");
    let mesh = synth_reef(&scn, cfg.mesh.vertex_spacing)?;
    run.stage("mesh");
    run.output(&out_dir.join("reef.ply"), &write_ply(&mesh, PlyFormat::BinaryLittleEndian))?;
    run.output(&out_dir.join("poses.csv"), write_pose_trajectory(&sim.trajectory).as_bytes())?;
    run.output(&out_dir.join("plan.csv"), plan_csv(&plan).as_bytes())?;
    for (frame, dets) in &sim.detections {
        run.output(&out_dir.join("detections").join(format!("{frame}.txt")), write_yolo_file(dets, true).as_bytes())?;
    }
    for (frame, gts) in &sim.ground_truth {
        run.output(&out_dir.join("labels").join(format!("{frame}.txt")), write_yolo_file(gts, false).as_bytes())?;
    }
    run.output(&out_dir.join("truth.csv"), truth_csv(&scn).as_bytes())?;
    run.stage("write");
    let n_det: usize = sim.detections.values().map(Vec::len).sum();
    let n_gt: usize = sim.ground_truth.values().map(Vec::len).sum();
    out!("seed={}", cfg.seed);
    out!("frames={}", sim.trajectory.len());
    out!("tracks={}", plan.tracks.len());
    out!("triangles={}", mesh.faces().len());
    out!("detections={n_det}");
    out!("ground_truth={n_gt}");
    Ok(())
}

fn cmd_correlate(args: CorrelateArgs, run: &mut Run) -> CliResult<()> {
    let out_dir = args.out_dir.clone().unwrap_or_else(|| ".".into());
    run.manifest_path = Some(out_dir.join("correlate.manifest.json"));
    run.config(&args);
    let a_path = required(args.a.clone(), "a")?;
    let b_path = required(args.b.clone(), "b")?;
    run.input(&a_path);
    run.input(&b_path);
    let read = |p: &Path| -> CliResult<crate::geom::Grid2D> {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::from(Error::io(p, e)))?;
        Ok(parse_grid_csv(&text, &p.display().to_string())?)
    };
    let a = read(&a_path)?;
    let b = read(&b_path)?;
    run.stage("parse");
    let c = correlate_grids(&a, &b)?;
    run.stage("correlate");
    let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), f6);
    let mut out = String::new();
    let _ = writeln!(out, "n={}", c.n);
    let _ = writeln!(out, "pearson={}", show(c.pearson));
    let _ = writeln!(out, "spearman={}", show(c.spearman));
    out!("{}", out.trim_end());
    Ok(())
}

fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let de = toml::Deserializer::parse(&text)
        .map_err(|e| CliError::usage(format!("config error in {}: {}", path.display(), e.to_string().trim())))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::usage(format!(
            "config error in {} at `{}`: {}",
            path.display(),
            e.path(),
            e.inner().message().trim()
        ))
    })
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let file = match cli.config.as_deref().map(load_file_config).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            return e.code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    let name = match &cli.command {
        Command::Plan(_) => "plan",
        Command::Rugosity(_) => "rugosity",
        Command::Hotspot(_) => "hotspot",
        Command::Eval(_) => "eval",
        Command::Simulate(_) => "simulate",
        Command::Correlate(_) => "correlate",
    };
    let mut run = Run::new(name, cli.threads, cli.seed);
    let result = pool.install(|| match cli.command {
        Command::Plan(a) => cmd_plan(a.or(file.plan), &mut run),
        Command::Rugosity(a) => cmd_rugosity(a.or(file.rugosity), &mut run),
        Command::Hotspot(a) => cmd_hotspot(a.or(file.hotspot), &mut run),
        Command::Eval(a) => cmd_eval(a.or(file.eval), &mut run),
        Command::Simulate(a) => cmd_simulate(a.or(file.simulate), cli.seed, &mut run),
        Command::Correlate(a) => cmd_correlate(a.or(file.correlate), &mut run),
    });
    let code = run.finish(result);
    if code == EXIT_USAGE {
        eprintln!("see `reefmap {name} --help`");
    }
    code
}

/// Parses `args` (including the program name) and runs them.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}
