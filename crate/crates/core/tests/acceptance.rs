//! Acceptance criteria, one line of output per criterion.
//!
//! Runs without the libtest harness so every verdict is printed even when
//! an earlier one fails; the process exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use reefmap::error::Error;
use reefmap::eval::{evaluate, sample_annotation_frames, EvalConfig};
use reefmap::geom::{mesh_surface_area, Aabb2, Grid2D};
use reefmap::ingest::{parse_ply, parse_pose_trajectory, parse_yolo_file, write_ply, PlyFormat, POSE_CSV_HEADER};
use reefmap::rugosity::{cell_areas, rugosity_grid, RugosityConfig};
use reefmap::survey::{
    footprint_dims, parse_simulation_config, plan_lawnmower, run_end_to_end, CameraGeometry, EndToEndOptions,
    SimulationConfig, TravelAxis, DEFAULT_SPEED,
};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tilt_law() -> Verdict {
    let region = Aabb2::new([0.0, 0.0], [12.0, 12.0]).unwrap();
    let cfg = RugosityConfig {
        cell_size: 0.5,
        region: Some(region),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for theta in [15.0f64, 30.0, 45.0, 60.0] {
        let t = Instant::now();
        let mesh = common::tilted_plane(0.0, 0.0, 12.0, 12.0, theta, 37);
        let grid = rugosity_grid(&mesh, &cfg).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        let expected = 1.0 / theta.to_radians().cos();
        let mut interior = 0;
        for j in 1..grid.ny() - 1 {
            for i in 1..grid.nx() - 1 {
                let v = grid.get(i, j).ok_or(format!("theta {theta}: interior cell ({i},{j}) invalid"))?;
                worst = worst.max((v - expected).abs());
                interior += 1;
            }
        }
        if interior != 22 * 22 {
            return Err(format!("theta {theta}: {interior} interior cells"));
        }
    }
    check(
        worst <= 1e-6 && slowest < Duration::from_secs(5),
        format!("max |r - 1/cos| = {worst:.1e} over 4 angles, slowest {slowest:.2?}"),
    )
}

fn area_conservation() -> Verdict {
    let mut rng = common::rng(2024);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut largest = 0;
    for _ in 0..50 {
        let mesh = common::random_reef(&mut rng, 100_000);
        largest = largest.max(mesh.faces().len());
        if mesh.faces().len() > 100_000 {
            return Err(format!("fixture has {} triangles", mesh.faces().len()));
        }
        let t = Instant::now();
        let b = mesh.xy_bounds().unwrap();
        let cs = rng.random_range(0.1..1.5);
        // shift the grid so cell edges do not line up with the mesh bounds
        let pad = rng.random_range(0.0..cs);
        let region = Aabb2::new([b.min[0] - pad, b.min[1] - pad], [b.max[0] + cs, b.max[1] + cs]).unwrap();
        let grid = Grid2D::covering(&region, cs).unwrap();
        let total = cell_areas(&mesh, &grid).total_surface();
        slowest = slowest.max(t.elapsed());
        let exact = mesh_surface_area(&mesh);
        worst = worst.max((total - exact).abs() / exact);
    }
    check(
        worst <= 1e-6 && slowest < Duration::from_secs(10),
        format!("50 meshes (largest {largest} triangles), max relative error {worst:.1e}, slowest {slowest:.2?}"),
    )
}

fn round6(v: f64) -> String {
    format!("{v:.6}")
}

fn map_oracle() -> Verdict {
    let mut rng = common::rng(7);
    let cfg = EvalConfig::default();
    let mut done = 0;
    let mut tried = 0;
    while done < 500 {
        tried += 1;
        let (preds, gts) = common::random_eval_instance(&mut rng, 4, 6);
        let report = evaluate(&preds, &gts, &cfg).map_err(|e| e.to_string())?;
        let Some(report) = report else {
            if gts.keys().any(|k| preds.contains_key(k)) {
                return Err("evaluate found no common frame where there is one".into());
            }
            continue;
        };
        let oracle: Vec<f64> = cfg.iou_thresholds.iter().map(|&t| common::oracle_ap(&preds, &gts, t)).collect();
        for ((t, ap), o) in report.per_threshold.iter().zip(&oracle) {
            if round6(*ap) != round6(*o) {
                return Err(format!("instance {done}: AP@{t} = {ap} but oracle {o}"));
            }
        }
        let mean = oracle.iter().sum::<f64>() / oracle.len() as f64;
        if round6(report.map50) != round6(oracle[0]) || round6(report.map50_95) != round6(mean) {
            return Err(format!("instance {done}: mAP summary differs from oracle"));
        }
        done += 1;
    }
    Ok(format!("500 instances agree at 6 decimals on all 10 thresholds ({} skipped without common frames)", tried - done))
}

fn footprint() -> Verdict {
    let cam = CameraGeometry::default();
    let (w, l) = footprint_dims(&cam).map_err(|e| e.to_string())?;
    let site = Aabb2::new([0.0, 0.0], [12.0, 12.0]).unwrap();
    let plan = plan_lawnmower(&site, &cam, 0.2, TravelAxis::Y, DEFAULT_SPEED).map_err(|e| e.to_string())?;
    check(
        (w - 6.928).abs() <= 1e-3 && (l - 2.217).abs() <= 1e-3 && plan.tracks.len() == 3,
        format!("footprint ({w:.4}, {l:.4}) m, {} tracks", plan.tracks.len()),
    )
}

fn scenario(name: &str) -> SimulationConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    parse_simulation_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn options(cfg: &SimulationConfig) -> EndToEndOptions {
    EndToEndOptions {
        travel_axis: cfg.survey.travel_axis,
        speed: cfg.survey.speed,
        vertex_spacing: cfg.mesh.vertex_spacing,
        ..Default::default()
    }
}

fn hotspot_recovery() -> Verdict {
    let cfg = scenario("single_hotspot");
    let h = &cfg.fish.hotspots;
    let fixture_ok = h.len() == 1
        && h[0].sigma == 1.0
        && h[0].peak == 3.0
        && cfg.fish.base_density == 0.05
        && cfg.noise.miss_probability == 0.2
        && cfg.noise.false_positive_rate == 0.2;
    if !fixture_ok {
        return Err("single_hotspot scenario does not match the required parameters".into());
    }
    let t = Instant::now();
    let mut offsets = Vec::new();
    for seed in 1..=5 {
        let mut scn = cfg.scenario();
        scn.seed = seed;
        let r = run_end_to_end(&scn, &cfg.camera, cfg.survey.overlap, &options(&cfg)).map_err(|e| e.to_string())?;
        offsets.push(r.top_peak_offset.ok_or(format!("seed {seed}: no peak"))?);
    }
    let elapsed = t.elapsed();
    let worst = offsets.iter().copied().fold(0.0, f64::max);
    check(
        worst <= 1.0 && elapsed < Duration::from_secs(60),
        format!(
            "top-peak offsets {:?} m, worst {worst:.3} m, {elapsed:.2?}",
            offsets.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn rugosity_correlation() -> Verdict {
    let cfg = scenario("rugosity_driven");
    let mut rhos = Vec::new();
    for seed in 1..=3 {
        let mut scn = cfg.scenario();
        scn.seed = seed;
        let r = run_end_to_end(&scn, &cfg.camera, cfg.survey.overlap, &options(&cfg)).map_err(|e| e.to_string())?;
        rhos.push(r.correlation.spearman.ok_or(format!("seed {seed}: spearman undefined"))?);
    }
    check(
        rhos.iter().all(|&r| r > 0.5),
        format!("spearman {:?}", rhos.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()),
    )
}

fn parser_round_trips() -> Verdict {
    let mut rng = common::rng(99);
    let mut worst_ascii = 0.0f64;
    for k in 0..100 {
        let nv = rng.random_range(3..200);
        let nf = rng.random_range(0..300);
        let mesh = common::random_soup(&mut rng, nv, nf);
        let bin = parse_ply(&write_ply(&mesh, PlyFormat::BinaryLittleEndian), "bin.ply").map_err(|e| e.to_string())?;
        let same_bits = bin.faces() == mesh.faces()
            && bin.vertices().iter().zip(mesh.vertices()).all(|(a, b)| {
                a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits() && a.z.to_bits() == b.z.to_bits()
            })
            && bin.vertices().len() == mesh.vertices().len();
        if !same_bits {
            return Err(format!("mesh {k}: binary round trip not bit-exact"));
        }
        let asc = parse_ply(&write_ply(&mesh, PlyFormat::Ascii), "ascii.ply").map_err(|e| e.to_string())?;
        if asc.faces() != mesh.faces() {
            return Err(format!("mesh {k}: ascii faces differ"));
        }
        for (a, b) in asc.vertices().iter().zip(mesh.vertices()) {
            for (x, y) in [(a.x, b.x), (a.y, b.y), (a.z, b.z)] {
                // nine significant digits
                let tol = 5.000001e-9 * y.abs();
                worst_ascii = worst_ascii.max((x - y).abs() / y.abs().max(1e-300));
                if (x - y).abs() > tol {
                    return Err(format!("mesh {k}: ascii vertex {y} read back as {x}"));
                }
            }
        }
    }

    let bad_index = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
                     element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
    let mut truncated = write_ply(&common::tilted_plane(0.0, 0.0, 1.0, 1.0, 10.0, 2), PlyFormat::BinaryLittleEndian);
    truncated.truncate(truncated.len() - 5);
    let bad_quat = format!("{POSE_CSV_HEADER}\n0,0.0,1,2,3,0.5,0,0,0\n");
    let classes = [
        ("bad index", matches!(parse_ply(bad_index.as_bytes(), "f.ply"), Err(Error::Index { .. }))),
        ("truncated binary", matches!(parse_ply(&truncated, "t.ply"), Err(Error::Truncated { .. }))),
        ("quaternion norm 0.5", matches!(parse_pose_trajectory(&bad_quat, "p.csv"), Err(Error::Pose { .. }))),
        ("coordinate 1.2", matches!(parse_yolo_file("0 1.2 0.5 0.1 0.1 0.9\n", "7.txt"), Err(Error::Range { .. }))),
    ];
    if let Some((name, _)) = classes.iter().find(|(_, ok)| !ok) {
        return Err(format!("{name} fixture produced the wrong error class"));
    }
    Ok(format!(
        "100 meshes: binary bit-exact, ascii max relative error {worst_ascii:.1e}; 4 malformed fixtures classified"
    ))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with("manifest.json") {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn reefmap_cli(args: &[&str]) -> i32 {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_reefmap"))
        .args(args)
        .output()
        .expect("run reefmap");
    out.status.code().unwrap_or(-1)
}

fn thread_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/rugosity_driven.toml");
    let mut snaps = Vec::new();
    for threads in [1, 2, 8] {
        let dir = tmp.path().join(format!("t{threads}"));
        let sim = dir.join("sim");
        let t = threads.to_string();
        let code = reefmap_cli(&[
            "--threads", &t, "simulate", "--scenario", scenario.to_str().unwrap(), "--out-dir",
            sim.to_str().unwrap(),
        ]);
        if code != 0 {
            return Err(format!("simulate exited {code} at {threads} threads"));
        }
        let code = reefmap_cli(&[
            "--threads", &t, "rugosity", "--mesh", sim.join("reef.ply").to_str().unwrap(), "--cell-size",
            "0.25", "--out-prefix", dir.join("out/site").to_str().unwrap(),
        ]);
        if code != 0 {
            return Err(format!("rugosity exited {code} at {threads} threads"));
        }
        snaps.push(snapshot(&dir));
    }
    let files = snaps[0].len();
    check(
        files > 0 && snaps.iter().all(|s| *s == snaps[0]),
        format!("{files} output files byte-identical at 1, 2 and 8 threads"),
    )
}

fn annotation_sampling() -> Verdict {
    let (n, fps, interval, bracket) = (13236usize, 6.0, 20.0, 1.0);
    let got = sample_annotation_frames(n, fps, interval, bracket).map_err(|e| e.to_string())?;
    // direct enumeration on integer frames: anchors every 120, brackets +-6
    let step = (interval * fps) as i64;
    let off = (bracket * fps) as i64;
    let mut expected = std::collections::BTreeSet::new();
    let mut a = 0i64;
    while a < n as i64 {
        for f in [a - off, a, a + off] {
            if (0..n as i64).contains(&f) {
                expected.insert(f as usize);
            }
        }
        a += step;
    }
    let expected: Vec<usize> = expected.into_iter().collect();
    check(
        got == expected && got[..5] == [0, 6, 114, 120, 126],
        format!("{} indices (oracle {}), first {:?}", got.len(), expected.len(), &got[..5.min(got.len())]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("rugosity tilt law", tilt_law),
        ("area conservation", area_conservation),
        ("mAP oracle equivalence", map_oracle),
        ("footprint geometry", footprint),
        ("end-to-end hotspot recovery", hotspot_recovery),
        ("rugosity-abundance correlation", rugosity_correlation),
        ("parser round-trips", parser_round_trips),
        ("determinism under parallelism", thread_determinism),
        ("annotation sampling", annotation_sampling),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name}: {detail} ({:.2?})", k + 1, t.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
