//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reefmap::geom::{Aabb2, TriangleMesh, Vec3};
use reefmap::ingest::{Detection, DetectionSet};
use reefmap::survey::{synth_reef, Bump, Pillar, ReefScenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plane through the origin inclined by `theta_deg` about the Y axis,
/// covering `[x0, x1] x [y0, y1]`, split into `n x n` quads.
pub fn tilted_plane(x0: f64, y0: f64, x1: f64, y1: f64, theta_deg: f64, n: usize) -> TriangleMesh {
    let slope = theta_deg.to_radians().tan();
    let mut v = Vec::new();
    for b in 0..=n {
        for a in 0..=n {
            let x = x0 + (x1 - x0) * a as f64 / n as f64;
            let y = y0 + (y1 - y0) * b as f64 / n as f64;
            v.push(Vec3::new(x, y, slope * x));
        }
    }
    let mut f = Vec::new();
    let w = (n + 1) as u32;
    for b in 0..n as u32 {
        for a in 0..n as u32 {
            let p = b * w + a;
            f.push([p, p + 1, p + w + 1]);
            f.push([p, p + w + 1, p + w]);
        }
    }
    TriangleMesh::new(v, f).unwrap()
}

/// Bumpy heightfield with random bumps, an optional pillar, an off-grid
/// origin and XY-jittered vertices so triangles are irregular.
pub fn random_reef(rng: &mut ChaCha8Rng, max_triangles: usize) -> TriangleMesh {
    let ox = rng.random_range(-20.0..20.0);
    let oy = rng.random_range(-20.0..20.0);
    let w = rng.random_range(2.0..14.0);
    let h = rng.random_range(2.0..14.0);
    let mut scn = ReefScenario {
        seed: 0,
        region: Aabb2::new([ox, oy], [ox + w, oy + h]).unwrap(),
        terrain: Default::default(),
        fish: Default::default(),
        noise: Default::default(),
    };
    scn.terrain.base_depth = rng.random_range(0.0..30.0);
    for _ in 0..rng.random_range(0..6) {
        scn.terrain.bumps.push(Bump {
            center: [ox + rng.random_range(0.0..w), oy + rng.random_range(0.0..h)],
            sigma: rng.random_range(0.2..2.0),
            height: rng.random_range(-1.0..2.0),
        });
    }
    if rng.random_bool(0.5) {
        scn.terrain.pillar = Some(Pillar {
            center: [ox + rng.random_range(0.0..w), oy + rng.random_range(0.0..h)],
            radius: rng.random_range(0.2..1.5),
            height: rng.random_range(0.5..3.0),
            edge_width: rng.random_range(0.02..0.3),
        });
    }
    // keep within the triangle budget: 2 (w/s)(h/s) <= max
    let min_spacing = (2.0 * w * h / max_triangles as f64).sqrt() * 1.05;
    let spacing = rng.random_range(min_spacing.max(0.03)..min_spacing.max(0.03) * 4.0 + 0.2);
    let base = synth_reef(&scn, spacing).unwrap();
    let jitter = 0.3 * spacing;
    let region = scn.region;
    let verts: Vec<Vec3> = base
        .vertices()
        .iter()
        .map(|p| {
            let interior = p.x > region.min[0] && p.x < region.max[0] && p.y > region.min[1] && p.y < region.max[1];
            if interior {
                let x = p.x + rng.random_range(-jitter..jitter);
                let y = p.y + rng.random_range(-jitter..jitter);
                Vec3::new(x, y, scn.terrain_height(x, y))
            } else {
                *p
            }
        })
        .collect();
    TriangleMesh::new(verts, base.faces().to_vec()).unwrap()
}

/// Arbitrary triangle soup with occasional degenerate and vertical faces.
pub fn random_soup(rng: &mut ChaCha8Rng, n_vertices: usize, n_faces: usize) -> TriangleMesh {
    let mut v: Vec<Vec3> = (0..n_vertices)
        .map(|_| {
            Vec3::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-5.0..5.0),
            )
        })
        .collect();
    if n_vertices >= 2 && rng.random_bool(0.3) {
        v[1] = Vec3::new(v[0].x, v[0].y, v[0].z + 1.0);
    }
    let f = (0..n_faces)
        .map(|_| {
            let mut face = [0u32; 3];
            for k in &mut face {
                *k = rng.random_range(0..n_vertices as u32);
            }
            face
        })
        .collect();
    TriangleMesh::new(v, f).unwrap()
}

fn corners(d: &Detection) -> (f64, f64, f64, f64) {
    (d.cx - d.w / 2.0, d.cy - d.h / 2.0, d.cx + d.w / 2.0, d.cy + d.h / 2.0)
}

pub fn oracle_iou(a: &Detection, b: &Detection) -> f64 {
    let (ax0, ay0, ax1, ay1) = corners(a);
    let (bx0, by0, bx1, by1) = corners(b);
    let ix = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let iy = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    inter / ((ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter)
}

/// Brute-force AP: greedy matching written from scratch, then for every
/// rank where recall rises, the recall gain times the best precision at any
/// rank with equal or higher recall.
pub fn oracle_ap(preds: &DetectionSet, gts: &DetectionSet, thresh: f64) -> f64 {
    let mut scored: Vec<(f64, bool)> = Vec::new();
    let mut total_gt = 0;
    for (frame, g) in gts {
        let g: Vec<&Detection> = g.iter().filter(|d| d.class_id == 0).collect();
        total_gt += g.len();
        let empty = Vec::new();
        let p: Vec<&Detection> = preds.get(frame).unwrap_or(&empty).iter().filter(|d| d.class_id == 0).collect();
        let mut idx: Vec<usize> = (0..p.len()).collect();
        // insertion sort keeps equal confidences in input order
        for a in 1..idx.len() {
            let mut b = a;
            while b > 0 && p[idx[b - 1]].confidence < p[idx[b]].confidence {
                idx.swap(b - 1, b);
                b -= 1;
            }
        }
        let mut used = vec![false; g.len()];
        for &k in &idx {
            let mut pick: Option<usize> = None;
            let mut best = -1.0;
            for (j, gt) in g.iter().enumerate() {
                let o = oracle_iou(p[k], gt);
                if !used[j] && o >= thresh && o > best {
                    best = o;
                    pick = Some(j);
                }
            }
            if let Some(j) = pick {
                used[j] = true;
            }
            scored.push((p[k].confidence, pick.is_some()));
        }
    }
    if total_gt == 0 {
        return if scored.is_empty() { 1.0 } else { 0.0 };
    }
    for a in 1..scored.len() {
        let mut b = a;
        while b > 0 && scored[b - 1].0 < scored[b].0 {
            scored.swap(b - 1, b);
            b -= 1;
        }
    }
    let n = scored.len();
    let mut prec = vec![0.0; n];
    let mut rec = vec![0.0; n];
    let mut tp = 0usize;
    for k in 0..n {
        tp += scored[k].1 as usize;
        prec[k] = tp as f64 / (k + 1) as f64;
        rec[k] = tp as f64 / total_gt as f64;
    }
    let mut ap = 0.0;
    let mut last = 0.0;
    for k in 0..n {
        if rec[k] > last {
            let best = (k..n).filter(|&j| rec[j] >= rec[k]).map(|j| prec[j]).fold(0.0, f64::max);
            ap += (rec[k] - last) * best;
            last = rec[k];
        }
    }
    ap
}

/// Small evaluation instance: up to `max_frames` frames, up to `max_boxes`
/// boxes per frame on a coarse lattice so overlaps and ties are common.
pub fn random_eval_instance(rng: &mut ChaCha8Rng, max_frames: u64, max_boxes: usize) -> (DetectionSet, DetectionSet) {
    let lattice = |rng: &mut ChaCha8Rng| -> Detection {
        let w = [0.1, 0.2, 0.3][rng.random_range(0..3)];
        let h = [0.1, 0.2, 0.3][rng.random_range(0..3)];
        let cx = 0.15 + 0.05 * rng.random_range(0..15) as f64;
        let cy = 0.15 + 0.05 * rng.random_range(0..15) as f64;
        Detection::fish(cx, cy, w, h, 1.0)
    };
    let n_frames = rng.random_range(1..=max_frames);
    let mut gts = DetectionSet::new();
    let mut preds = DetectionSet::new();
    for f in 0..n_frames {
        let g: Vec<Detection> = (0..rng.random_range(0..=max_boxes)).map(|_| lattice(rng)).collect();
        let mut p = Vec::new();
        for _ in 0..rng.random_range(0..=max_boxes) {
            let mut d = if !g.is_empty() && rng.random_bool(0.6) {
                let src = g[rng.random_range(0..g.len())];
                let dx = 0.02 * rng.random_range(-2..=2) as f64;
                let dy = 0.02 * rng.random_range(-2..=2) as f64;
                Detection::fish(src.cx + dx, src.cy + dy, src.w, src.h, 1.0)
            } else {
                lattice(rng)
            };
            d.confidence = 0.1 * rng.random_range(1..10) as f64;
            if rng.random_bool(0.05) {
                d.class_id = 1;
            }
            p.push(d);
        }
        gts.insert(f, g);
        if rng.random_bool(0.9) {
            preds.insert(f, p);
        }
    }
    (preds, gts)
}
