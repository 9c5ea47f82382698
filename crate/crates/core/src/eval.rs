//! Fish counting and single-class detector evaluation.
//!
//! AP uses all-point interpolation: the area under the precision envelope,
//! where precision at a recall level is the best precision reached at that
//! recall or higher. Predictions are matched greedily per frame in descending
//! confidence order, then pooled over all frames for one PR curve.
//! Confidence ties keep input order (frame id, then line order).

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ingest::{Detection, DetectionSet};

pub const FISH_CLASS: u32 = 0;

/// Default confidence gate for counting fish in a frame.
pub const DEFAULT_COUNT_THRESHOLD: f64 = 0.25;

/// Number of class-0 detections with confidence at or above `conf_threshold`.
pub fn count_fish(frame: &[Detection], conf_threshold: f64) -> usize {
    frame
        .iter()
        .filter(|d| d.class_id == FISH_CLASS && d.confidence >= conf_threshold)
        .count()
}

/// Frames to hand-annotate: every `interval_s` seconds, plus the frames
/// `bracket_s` before and after each anchor. Sorted, unique, within
/// `[0, num_frames)`.
pub fn sample_annotation_frames(
    num_frames: usize,
    fps: f64,
    interval_s: f64,
    bracket_s: f64,
) -> Result<Vec<usize>> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::Precondition(format!("fps must be positive, got {fps}")));
    }
    if !(bracket_s > 0.0 && interval_s > bracket_s && interval_s.is_finite()) {
        return Err(Error::Precondition(format!(
            "need interval_s > bracket_s > 0, got interval {interval_s}, bracket {bracket_s}"
        )));
    }
    let mut out = Vec::new();
    let frame_at = |t: f64| (t * fps).round();
    let n = num_frames as f64;
    for k in 0u64.. {
        let t = k as f64 * interval_s;
        if frame_at(t) >= n {
            break;
        }
        for f in [frame_at(t - bracket_s), frame_at(t), frame_at(t + bracket_s)] {
            if f >= 0.0 && f < n {
                out.push(f as usize);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Intersection over union of two boxes in normalized image coordinates.
pub fn iou(a: &Detection, b: &Detection) -> f64 {
    let [ax0, ay0, ax1, ay1] = a.xyxy();
    let [bx0, by0, bx1, by1] = b.xyxy();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// A scored prediction after matching: its confidence and whether it hit a
/// ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub confidence: f64,
    pub true_positive: bool,
}

/// Greedy matching within one frame. Returns predictions in the order they
/// were matched (descending confidence, stable).
pub fn match_frame(preds: &[Detection], gts: &[Detection], iou_thresh: f64) -> Vec<Match> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    let mut taken = vec![false; gts.len()];
    order
        .into_iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if taken[g] {
                    continue;
                }
                let o = iou(&preds[p], gt);
                if o >= iou_thresh && best.is_none_or(|(_, b)| o > b) {
                    best = Some((g, o));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            Match {
                confidence: preds[p].confidence,
                true_positive: best.is_some(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub confidence: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Cumulative precision/recall after each prediction of an already sorted
/// match sequence.
pub fn pr_curve(sorted: &[Match], num_gt: usize) -> Vec<PrPoint> {
    let mut tp = 0usize;
    sorted
        .iter()
        .enumerate()
        .map(|(k, m)| {
            tp += m.true_positive as usize;
            PrPoint {
                confidence: m.confidence,
                precision: tp as f64 / (k + 1) as f64,
                recall: if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 },
            }
        })
        .collect()
}

/// Area under the precision envelope of a sorted match sequence.
pub fn ap_from_matches(sorted: &[Match], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return if sorted.is_empty() { 1.0 } else { 0.0 };
    }
    let curve = pr_curve(sorted, num_gt);
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for k in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, env) in curve.iter().zip(&envelope) {
        if p.recall > prev_recall {
            ap += (p.recall - prev_recall) * env;
            prev_recall = p.recall;
        }
    }
    ap
}

fn fish_only(dets: &[Detection]) -> Vec<Detection> {
    dets.iter().copied().filter(|d| d.class_id == FISH_CLASS).collect()
}

/// Average precision for a single frame's predictions and ground truths.
pub fn average_precision(preds: &[Detection], gts: &[Detection], iou_thresh: f64) -> f64 {
    let (preds, gts) = (fish_only(preds), fish_only(gts));
    ap_from_matches(&match_frame(&preds, &gts, iou_thresh), gts.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Strictly increasing, each in (0, 1). `mAP50_95` is the mean AP over
    /// these; the default is 0.50, 0.55, ..., 0.95.
    pub iou_thresholds: Vec<f64>,
    pub confidence_threshold_for_counting: f64,
}

/// 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: coco_thresholds(),
            confidence_threshold_for_counting: DEFAULT_COUNT_THRESHOLD,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::InvalidInput("at least one IoU threshold is required".into()));
        }
        if let Some(t) = self.iou_thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidInput(format!("IoU threshold {t} is outside (0, 1)")));
        }
        if self.iou_thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("IoU thresholds must be strictly increasing".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold_for_counting) {
            return Err(Error::InvalidInput("counting threshold must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub frames: usize,
    pub num_gt: usize,
    pub num_pred: usize,
    /// `(iou threshold, AP)` for each configured threshold.
    pub per_threshold: Vec<(f64, f64)>,
    pub map50: f64,
    /// Mean of `per_threshold` APs.
    pub map50_95: f64,
    /// AP at IoU 0.95 alone, the other reading of a "mAP95" column.
    pub ap95: f64,
    pub count_threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// PR curve at IoU 0.5.
    pub pr50: Vec<PrPoint>,
}

struct Pooled {
    matches: Vec<Match>,
    num_gt: usize,
}

fn pooled_matches(frames: &[(&[Detection], &[Detection])], iou_thresh: f64) -> Pooled {
    let mut matches = Vec::new();
    let mut num_gt = 0;
    for (p, g) in frames {
        num_gt += g.len();
        matches.extend(match_frame(p, g, iou_thresh));
    }
    // stable: equal confidences keep frame order, then within-frame order
    matches.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    Pooled { matches, num_gt }
}

/// Evaluates predictions against ground truth over the ground-truth frames.
/// Frames absent from `preds` count as having no predictions. Returns `None`
/// when the two sets share no frame.
pub fn evaluate(preds: &DetectionSet, gts: &DetectionSet, cfg: &EvalConfig) -> Result<Option<EvalReport>> {
    cfg.validate()?;
    if !gts.keys().any(|k| preds.contains_key(k)) {
        return Ok(None);
    }
    let owned: Vec<(Vec<Detection>, Vec<Detection>)> = gts
        .iter()
        .map(|(id, g)| {
            let p = preds.get(id).map(|p| fish_only(p)).unwrap_or_default();
            (p, fish_only(g))
        })
        .collect();
    let frames: Vec<(&[Detection], &[Detection])> =
        owned.iter().map(|(p, g)| (p.as_slice(), g.as_slice())).collect();

    let ap_at = |t: f64| {
        let pooled = pooled_matches(&frames, t);
        ap_from_matches(&pooled.matches, pooled.num_gt)
    };
    let per_threshold: Vec<(f64, f64)> = cfg.iou_thresholds.iter().map(|&t| (t, ap_at(t))).collect();
    let map50_95 = per_threshold.iter().map(|(_, ap)| ap).sum::<f64>() / per_threshold.len() as f64;
    let lookup = |t: f64| {
        per_threshold
            .iter()
            .find(|(x, _)| (x - t).abs() < 1e-12)
            .map(|(_, ap)| *ap)
            .unwrap_or_else(|| ap_at(t))
    };
    let map50 = lookup(0.5);
    let ap95 = lookup(0.95);

    let pooled50 = pooled_matches(&frames, 0.5);
    let pr50 = pr_curve(&pooled50.matches, pooled50.num_gt);

    let ct = cfg.confidence_threshold_for_counting;
    let (mut tp, mut fp, mut num_gt, mut num_pred) = (0, 0, 0, 0);
    for (p, g) in &frames {
        num_gt += g.len();
        num_pred += p.len();
        let kept: Vec<Detection> = p.iter().copied().filter(|d| d.confidence >= ct).collect();
        let m = match_frame(&kept, g, 0.5);
        let hits = m.iter().filter(|m| m.true_positive).count();
        tp += hits;
        fp += m.len() - hits;
    }
    Ok(Some(EvalReport {
        frames: frames.len(),
        num_gt,
        num_pred,
        per_threshold,
        map50,
        map50_95,
        ap95,
        count_threshold: ct,
        true_positives: tp,
        false_positives: fp,
        false_negatives: num_gt - tp,
        pr50,
    }))
}

impl EvalReport {
    /// `key=value` lines with six-decimal metrics.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "interpolation=all_point");
        let _ = writeln!(s, "frames={}", self.frames);
        let _ = writeln!(s, "gt={}", self.num_gt);
        let _ = writeln!(s, "pred={}", self.num_pred);
        let _ = writeln!(s, "mAP50={:.6}", self.map50);
        let _ = writeln!(s, "mAP50_95={:.6}", self.map50_95);
        let _ = writeln!(s, "AP@0.95={:.6}", self.ap95);
        for (t, ap) in &self.per_threshold {
            if (t - 0.95).abs() > 1e-12 {
                let _ = writeln!(s, "AP@{t:.2}={ap:.6}");
            }
        }
        let _ = writeln!(s, "count_threshold={:.6}", self.count_threshold);
        let _ = writeln!(s, "tp={}", self.true_positives);
        let _ = writeln!(s, "fp={}", self.false_positives);
        let _ = writeln!(s, "fn={}", self.false_negatives);
        s
    }

    pub fn pr_csv(&self) -> String {
        let mut s = String::from("confidence,precision,recall\n");
        for p in &self.pr50 {
            let _ = writeln!(s, "{:.6},{:.6},{:.6}", p.confidence, p.precision, p.recall);
        }
        s
    }
}
