//! Fish-abundance hotspot maps.
//!
//! Each frame's fish count is pinned to the camera's XY position (the camera
//! looks straight down, so its footprint is centered there). Counts are binned
//! into a grid, log-scaled for display, searched for peaks and compared
//! against rugosity.

use std::collections::HashSet;
use std::fmt::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::count_fish;
use crate::geom::{Aabb2, Grid2D};
use crate::ingest::{DetectionSet, FramePose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSample {
    pub frame_id: u64,
    pub x: f64,
    pub y: f64,
    pub count: usize,
}

/// How several frames landing in one cell are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reducer {
    /// Largest single-frame count. Never adds up the same fish seen in
    /// overlapping frames.
    #[default]
    Max,
    Mean,
    Sum,
}

impl FromStr for Reducer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Reducer::Max),
            "mean" => Ok(Reducer::Mean),
            "sum" => Ok(Reducer::Sum),
            other => Err(Error::InvalidInput(format!(
                "unknown reducer `{other}` (expected max, mean or sum)"
            ))),
        }
    }
}

impl Reducer {
    pub fn name(self) -> &'static str {
        match self {
            Reducer::Max => "max",
            Reducer::Mean => "mean",
            Reducer::Sum => "sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotspotConfig {
    pub cell_size: f64,
    pub reducer: Reducer,
    pub peak_count: usize,
    /// Minimum center distance between reported peaks, meters.
    pub peak_min_separation: f64,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        Self {
            cell_size: 0.5,
            reducer: Reducer::Max,
            peak_count: 5,
            peak_min_separation: 2.0,
        }
    }
}

impl HotspotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {}", self.cell_size)));
        }
        if !(self.peak_min_separation >= 0.0) {
            return Err(Error::InvalidInput("peak separation must be non-negative".into()));
        }
        Ok(())
    }
}

/// Samples placed on the map plus the trajectory frames that had no
/// detection file and were therefore left out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Localized {
    pub samples: Vec<CountSample>,
    pub unobserved: Vec<u64>,
}

/// Pins each observed frame's fish count to its camera position.
///
/// Every detection frame must have a pose; frames with an empty detection
/// list yield a zero-count sample; trajectory frames missing from
/// `detections` are reported in [`Localized::unobserved`].
pub fn localize_counts(
    trajectory: &[FramePose],
    detections: &DetectionSet,
    conf_threshold: f64,
) -> Result<Localized> {
    let known: HashSet<u64> = trajectory.iter().map(|p| p.frame_id).collect();
    let orphans: Vec<u64> = detections.keys().copied().filter(|k| !known.contains(k)).collect();
    if !orphans.is_empty() {
        return Err(Error::OrphanFrames(orphans));
    }
    let mut out = Localized::default();
    for p in trajectory {
        match detections.get(&p.frame_id) {
            Some(frame) => out.samples.push(CountSample {
                frame_id: p.frame_id,
                x: p.pose.translation.x,
                y: p.pose.translation.y,
                count: count_fish(frame, conf_threshold),
            }),
            None => out.unobserved.push(p.frame_id),
        }
    }
    Ok(out)
}

/// Cell-aligned region (multiples of `cell_size` from the world origin) that
/// contains every sample under the half-open cell convention.
pub fn sample_region(samples: &[CountSample], cell_size: f64) -> Option<Aabb2> {
    let first = samples.first()?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for s in samples {
        x0 = x0.min(s.x);
        y0 = y0.min(s.y);
        x1 = x1.max(s.x);
        y1 = y1.max(s.y);
    }
    let lo = |v: f64| (v / cell_size).floor() * cell_size;
    let hi = |v: f64| ((v / cell_size).floor() + 1.0) * cell_size;
    Some(Aabb2 {
        min: [lo(x0), lo(y0)],
        max: [hi(x1), hi(y1)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceGrid {
    pub grid: Grid2D,
    /// Samples that fell outside the region.
    pub outside: usize,
}

/// Bins samples into cells and reduces each cell. Unvisited cells are no-data.
pub fn abundance_grid(samples: &[CountSample], cfg: &HotspotConfig, region: &Aabb2) -> Result<AbundanceGrid> {
    cfg.validate()?;
    let mut grid = Grid2D::covering(region, cfg.cell_size)?;
    let mut acc = vec![(0.0f64, 0usize); grid.len()];
    let mut outside = 0;
    for s in samples {
        let Some((i, j)) = grid.locate(s.x, s.y) else {
            outside += 1;
            continue;
        };
        let (v, n) = &mut acc[grid.index(i, j)];
        let c = s.count as f64;
        *v = match cfg.reducer {
            Reducer::Max if *n > 0 => v.max(c),
            Reducer::Max => c,
            Reducer::Mean | Reducer::Sum => *v + c,
        };
        *n += 1;
    }
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (v, n) = acc[grid.index(i, j)];
            if n > 0 {
                let value = if cfg.reducer == Reducer::Mean { v / n as f64 } else { v };
                grid.set(i, j, value);
            }
        }
    }
    Ok(AbundanceGrid { grid, outside })
}

/// `ln(1 + v)` on valid cells.
pub fn log_transform(grid: &Grid2D) -> Result<Grid2D> {
    let mut out = grid.clone();
    for (i, j, v) in grid.iter_valid() {
        if v < 0.0 {
            return Err(Error::Domain(format!("cell ({i}, {j}) holds negative value {v}")));
        }
        out.set(i, j, v.ln_1p());
    }
    Ok(out)
}

/// Five-anchor linear color ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Colormap {
    pub anchors: [[u8; 3]; 5],
}

pub const NO_DATA_RGB: [u8; 3] = [128, 128, 128];

impl Default for Colormap {
    /// Dark blue through green to yellow.
    fn default() -> Self {
        Self {
            anchors: [
                [68, 1, 84],
                [59, 82, 139],
                [33, 145, 140],
                [94, 201, 98],
                [253, 231, 37],
            ],
        }
    }
}

impl Colormap {
    /// Color for `t` in [0, 1].
    pub fn sample(&self, t: f64) -> [u8; 3] {
        let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
        let pos = t * 4.0;
        let k = (pos.floor() as usize).min(3);
        let f = pos - k as f64;
        let (a, b) = (self.anchors[k], self.anchors[k + 1]);
        let mut rgb = [0u8; 3];
        for c in 0..3 {
            rgb[c] = (a[c] as f64 + (b[c] as f64 - a[c] as f64) * f).round() as u8;
        }
        rgb
    }
}

/// Binary PPM (P6), one `upscale`×`upscale` block per cell, north up (the
/// first pixel row is the highest `j`). Values are min-max normalized over
/// valid cells; no-data cells are mid-gray.
pub fn render_raster(grid: &Grid2D, colormap: &Colormap, upscale: usize) -> Vec<u8> {
    let up = upscale.max(1);
    let (w, h) = (grid.nx() * up, grid.ny() * up);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v) in grid.iter_valid() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for row in 0..grid.ny() {
        let j = grid.ny() - 1 - row;
        let line: Vec<u8> = (0..grid.nx())
            .flat_map(|i| {
                let rgb = match grid.get(i, j) {
                    Some(v) => {
                        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                        colormap.sample(t)
                    }
                    None => NO_DATA_RGB,
                };
                std::iter::repeat_n(rgb, up).flatten()
            })
            .collect();
        for _ in 0..up {
            out.extend_from_slice(&line);
        }
    }
    out
}

/// Sidecar text mapping raster pixels back to world coordinates.
pub fn world_file(grid: &Grid2D, upscale: usize) -> String {
    let up = upscale.max(1);
    format!(
        "cell_size={}\norigin_x={}\norigin_y={}\nnx={}\nny={}\nupscale={}\nrow_order=north_up\n",
        grid.cell_size(),
        grid.origin()[0],
        grid.origin()[1],
        grid.nx(),
        grid.ny(),
        up
    )
}

/// Decoded P6 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ppm {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    pub pixels: Vec<[u8; 3]>,
}

/// Minimal P6 reader for 8-bit images (no comments).
pub fn parse_ppm(bytes: &[u8]) -> Result<Ppm> {
    let bad = |m: &str| Error::InvalidInput(format!("PPM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P6" {
        return Err(bad("not a P6 file"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, max_value) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max_value == 0 || max_value > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let data = &bytes[pos + 1..];
    if data.len() != width * height * 3 {
        return Err(bad("pixel payload size mismatch"));
    }
    Ok(Ppm {
        width,
        height,
        max_value: max_value as u16,
        pixels: data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

/// Pearson and Spearman coefficients over cells valid in both grids.
/// Coefficients are `None` when fewer than 3 cells qualify or either side is
/// constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub n: usize,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && xs[order[end]] == xs[order[k]] {
            end += 1;
        }
        let avg = (k + 1 + end) as f64 / 2.0;
        for &idx in &order[k..end] {
            ranks[idx] = avg;
        }
        k = end;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

pub fn correlate_grids(a: &Grid2D, b: &Grid2D) -> Result<Correlation> {
    if a.nx() != b.nx() || a.ny() != b.ny() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.nx(),
            a.ny(),
            b.nx(),
            b.ny()
        )));
    }
    let tol = 1e-9 * a.cell_size().max(b.cell_size());
    let close = |p: f64, q: f64| (p - q).abs() <= tol;
    if !close(a.cell_size(), b.cell_size())
        || !close(a.origin()[0], b.origin()[0])
        || !close(a.origin()[1], b.origin()[1])
    {
        return Err(Error::ShapeMismatch(format!(
            "origin/cell size differ: ({:?}, {}) vs ({:?}, {})",
            a.origin(),
            a.cell_size(),
            b.origin(),
            b.cell_size()
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..a.ny() {
        for i in 0..a.nx() {
            if let (Some(x), Some(y)) = (a.get(i, j), b.get(i, j)) {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let n = xs.len();
    if n < 3 {
        return Ok(Correlation {
            pearson: None,
            spearman: None,
            n,
        });
    }
    Ok(Correlation {
        pearson: pearson(&xs, &ys),
        spearman: spearman(&xs, &ys),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Greedy non-maximum suppression: highest valid cells first (ties by `(i, j)`),
/// skipping any cell closer than `peak_min_separation` to a chosen peak.
pub fn hotspot_peaks(grid: &Grid2D, cfg: &HotspotConfig) -> Vec<Peak> {
    let mut cells: Vec<(usize, usize, f64)> = grid.iter_valid().collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut peaks: Vec<Peak> = Vec::new();
    for (i, j, value) in cells {
        if peaks.len() >= cfg.peak_count {
            break;
        }
        let [x, y] = grid.cell_center(i, j);
        let crowded = peaks
            .iter()
            .any(|p| ((p.x - x).powi(2) + (p.y - y).powi(2)).sqrt() < cfg.peak_min_separation);
        if !crowded {
            peaks.push(Peak { i, j, x, y, value });
        }
    }
    peaks
}

pub fn peaks_csv(peaks: &[Peak]) -> String {
    let mut s = String::from("rank,x,y,value\n");
    for (k, p) in peaks.iter().enumerate() {
        let _ = writeln!(s, "{},{:.6},{:.6},{:.6}", k + 1, p.x, p.y, p.value);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PoseSE3, UnitQuaternion, Vec3};
    use crate::ingest::Detection;

    fn sample(x: f64, y: f64, count: usize) -> CountSample {
        CountSample {
            frame_id: 0,
            x,
            y,
            count,
        }
    }

    fn pose(frame_id: u64, x: f64, y: f64) -> FramePose {
        FramePose {
            frame_id,
            timestamp: frame_id as f64,
            pose: PoseSE3::new(Vec3::new(x, y, -2.0), UnitQuaternion::IDENTITY),
        }
    }

    #[test]
    fn localize_examples() {
        let traj = vec![pose(0, 3.0, -7.0), pose(1, 4.0, -7.0), pose(2, 5.0, -7.0)];
        let mut dets = DetectionSet::new();
        dets.insert(0, vec![Detection::fish(0.5, 0.5, 0.05, 0.05, 0.9); 4]);
        dets.insert(1, vec![]);
        let loc = localize_counts(&traj, &dets, 0.25).unwrap();
        assert_eq!(loc.samples.len(), 2);
        assert_eq!((loc.samples[0].x, loc.samples[0].y, loc.samples[0].count), (3.0, -7.0, 4));
        assert_eq!(loc.samples[1].count, 0);
        assert_eq!(loc.unobserved, vec![2]);

        dets.insert(9, vec![]);
        assert!(matches!(localize_counts(&traj, &dets, 0.25), Err(Error::OrphanFrames(ref o)) if o == &vec![9]));
        assert_eq!(localize_counts(&[], &DetectionSet::new(), 0.25).unwrap(), Localized::default());
    }

    #[test]
    fn abundance_examples() {
        let region = Aabb2::new([0.0, 0.0], [2.0, 2.0]).unwrap();
        let cfg = HotspotConfig::default();
        let g = abundance_grid(&[sample(0.1, 0.1, 7)], &cfg, &region).unwrap().grid;
        assert_eq!(g.get(0, 0), Some(7.0));
        assert_eq!(g.valid_count(), 1);

        let two = [sample(0.1, 0.1, 3), sample(0.2, 0.3, 5)];
        for (reducer, want) in [(Reducer::Max, 5.0), (Reducer::Mean, 4.0), (Reducer::Sum, 8.0)] {
            let cfg = HotspotConfig { reducer, ..Default::default() };
            assert_eq!(abundance_grid(&two, &cfg, &region).unwrap().grid.get(0, 0), Some(want));
        }

        let out = abundance_grid(&[sample(5.0, 5.0, 1)], &cfg, &region).unwrap();
        assert_eq!((out.outside, out.grid.valid_count()), (1, 0));
    }

    #[test]
    fn sample_region_is_cell_aligned() {
        let r = sample_region(&[sample(-3.3, 1.0, 0), sample(2.0, 1.2, 0)], 0.5).unwrap();
        assert_eq!(r.min, [-3.5, 1.0]);
        assert_eq!(r.max, [2.5, 1.5]);
        assert_eq!(sample_region(&[], 0.5), None);
    }

    #[test]
    fn log_examples() {
        let mut g = Grid2D::new([0.0, 0.0], 1.0, 3, 1).unwrap();
        g.set(0, 0, 0.0);
        g.set(1, 0, std::f64::consts::E - 1.0);
        let l = log_transform(&g).unwrap();
        assert_eq!(l.get(0, 0), Some(0.0));
        assert!((l.get(1, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(l.get(2, 0), None);
        g.set(2, 0, -1.0);
        assert!(matches!(log_transform(&g), Err(Error::Domain(_))));
    }

    #[test]
    fn raster_examples() {
        let cmap = Colormap::default();
        let mut g = Grid2D::new([0.0, 0.0], 1.0, 2, 1).unwrap();
        g.set(0, 0, 0.0);
        g.set(1, 0, 1.0);
        let img = parse_ppm(&render_raster(&g, &cmap, 1)).unwrap();
        assert_eq!((img.width, img.height, img.max_value), (2, 1, 255));
        assert_eq!(img.pixels, vec![cmap.anchors[0], cmap.anchors[4]]);

        let mut u = Grid2D::new([0.0, 0.0], 1.0, 2, 2).unwrap();
        u.set(0, 0, 3.0);
        u.set(1, 1, 3.0);
        let img = parse_ppm(&render_raster(&u, &cmap, 2)).unwrap();
        assert_eq!((img.width, img.height), (4, 4));
        // north-up: top-left block is cell (0, 1), no-data
        assert_eq!(img.pixels[0], NO_DATA_RGB);
        assert_eq!(img.pixels[2], cmap.anchors[0]);
        assert_eq!(img.pixels[15], NO_DATA_RGB);
        assert_eq!(img.pixels[12], cmap.anchors[0]);

        let empty = Grid2D::new([0.0, 0.0], 1.0, 2, 2).unwrap();
        let img = parse_ppm(&render_raster(&empty, &cmap, 1)).unwrap();
        assert!(img.pixels.iter().all(|p| *p == NO_DATA_RGB));
    }

    #[test]
    fn colormap_midpoints() {
        let c = Colormap::default();
        assert_eq!(c.sample(0.25), c.anchors[1]);
        assert_eq!(c.sample(1.0), c.anchors[4]);
        assert_eq!(c.sample(f64::NAN), c.anchors[0]);
    }

    #[test]
    fn correlation_examples() {
        let mut a = Grid2D::new([0.0, 0.0], 0.5, 3, 2).unwrap();
        let mut neg = a.clone();
        for (k, v) in [1.0, 4.0, 2.0, 8.0, 3.0].iter().enumerate() {
            a.set(k % 3, k / 3, *v);
            neg.set(k % 3, k / 3, -v);
        }
        let c = correlate_grids(&a, &a).unwrap();
        assert_eq!((c.pearson, c.spearman, c.n), (Some(1.0), Some(1.0), 5));
        let c = correlate_grids(&a, &neg).unwrap();
        assert_eq!((c.pearson, c.spearman), (Some(-1.0), Some(-1.0)));

        let small = Grid2D::new([0.0, 0.0], 0.5, 2, 1).unwrap();
        assert!(matches!(correlate_grids(&a, &small), Err(Error::ShapeMismatch(_))));
        let shifted = Grid2D::new([1.0, 0.0], 0.5, 3, 2).unwrap();
        assert!(matches!(correlate_grids(&a, &shifted), Err(Error::ShapeMismatch(_))));

        let mut few = Grid2D::new([0.0, 0.0], 0.5, 3, 2).unwrap();
        few.set(0, 0, 1.0);
        few.set(1, 0, 2.0);
        let c = correlate_grids(&few, &a).unwrap();
        assert_eq!((c.n, c.pearson, c.spearman), (2, None, None));
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn peak_examples() {
        let mut g = Grid2D::new([0.0, 0.0], 0.5, 30, 4).unwrap();
        for j in 0..4 {
            for i in 0..30 {
                g.set(i, j, 0.0);
            }
        }
        g.set(3, 1, 2.0);
        let cfg = HotspotConfig::default();
        let p = hotspot_peaks(&g, &HotspotConfig { peak_count: 1, ..cfg.clone() });
        assert_eq!((p[0].x, p[0].y, p[0].value), (1.75, 0.75, 2.0));

        // two equal maxima 10 m apart
        g.set(3, 1, 9.0);
        g.set(23, 1, 9.0);
        let p = hotspot_peaks(&g, &HotspotConfig { peak_count: 2, ..cfg.clone() });
        assert_eq!(p.len(), 2);
        assert_eq!(((p[0].i, p[0].j), (p[1].i, p[1].j)), ((3, 1), (23, 1)));

        // a neighbour of the first peak is suppressed
        g.set(4, 1, 8.0);
        let p = hotspot_peaks(&g, &HotspotConfig { peak_count: 3, ..cfg });
        assert!(p.iter().all(|q| (q.i, q.j) != (4, 1)));
        assert!(peaks_csv(&p).starts_with("rank,x,y,value\n1,1.750000,0.750000,9.000000\n"));
    }
}
