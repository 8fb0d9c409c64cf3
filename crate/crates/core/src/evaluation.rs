//! Mask scoring, report assembly, and the post-processing/training ablation
//! grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use crate::motion::FlowMaskMode;
use crate::object::{nimply, postprocess, PostProcessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskMetrics {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Pixel tallies that pool across frames before any ratio is taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PixelCounts {
    pub tp: u64,
    pub pred: u64,
    pub gt: u64,
}

impl PixelCounts {
    pub fn add_pair(&mut self, pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
        if pred.width() != gt.width() || pred.height() != gt.height() {
            return Err(Error::DimensionMismatch(
                pred.width(),
                pred.height(),
                gt.width(),
                gt.height(),
            ));
        }
        for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
            self.tp += (p & g) as u64;
            self.pred += p as u64;
            self.gt += g as u64;
        }
        Ok(())
    }

    /// Ratios with empty-denominator conventions: an empty prediction has
    /// perfect precision, an empty ground truth perfect recall, and two
    /// empty masks match perfectly.
    pub fn metrics(&self) -> MaskMetrics {
        let union = self.pred + self.gt - self.tp;
        let iou = if union == 0 {
            1.0
        } else {
            self.tp as f64 / union as f64
        };
        let precision = if self.pred == 0 {
            1.0
        } else {
            self.tp as f64 / self.pred as f64
        };
        let recall = if self.gt == 0 {
            1.0
        } else {
            self.tp as f64 / self.gt as f64
        };
        MaskMetrics {
            iou,
            precision,
            recall,
        }
    }
}

pub fn mask_metrics(pred: &BinaryMask, gt: &BinaryMask) -> Result<MaskMetrics> {
    let mut counts = PixelCounts::default();
    counts.add_pair(pred, gt)?;
    Ok(counts.metrics())
}

/// Micro-averaged metrics over a sequence: counts pool across frames first.
pub fn evaluate_sequence(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<MaskMetrics> {
    if preds.len() != gts.len() {
        return Err(Error::Data(format!(
            "{} predictions vs {} ground-truth masks",
            preds.len(),
            gts.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Data("nothing to evaluate".to_string()));
    }
    let mut counts = PixelCounts::default();
    for (p, g) in preds.iter().zip(gts) {
        counts.add_pair(p, g)?;
    }
    Ok(counts.metrics())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub frames: usize,
    pub metrics: MaskMetrics,
}

/// Per-class scores plus their unweighted mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classes: Vec<ClassReport>,
    pub mean: MaskMetrics,
}

impl EvaluationReport {
    pub fn from_classes(classes: Vec<ClassReport>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Data("report needs at least one class".to_string()));
        }
        let n = classes.len() as f64;
        let mean = MaskMetrics {
            iou: classes.iter().map(|c| c.metrics.iou).sum::<f64>() / n,
            precision: classes.iter().map(|c| c.metrics.precision).sum::<f64>() / n,
            recall: classes.iter().map(|c| c.metrics.recall).sum::<f64>() / n,
        };
        Ok(Self { classes, mean })
    }

    /// Fixed-width table, one row per class plus the mean.
    pub fn text_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.class.len())
            .chain(std::iter::once(4))
            .max()
            .expect("nonempty")
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>7}  {:>9}  {:>7}  {:>6}\n",
            "class", "iou", "precision", "recall", "frames"
        );
        for c in &self.classes {
            out.push_str(&format!(
                "{:<width$}  {:>7.4}  {:>9.4}  {:>7.4}  {:>6}\n",
                c.class, c.metrics.iou, c.metrics.precision, c.metrics.recall, c.frames
            ));
        }
        out.push_str(&format!(
            "{:<width$}  {:>7.4}  {:>9.4}  {:>7.4}\n",
            "mean", self.mean.iou, self.mean.precision, self.mean.recall
        ));
        out
    }
}

/// Labels for the cumulative ablation rows, in evaluation order. Rows 1-3
/// peel post-processing stages off the full method back to front; rows 4-5
/// additionally degrade the appearance fit.
pub const ABLATION_ROWS: [&str; 6] = [
    "full",
    "no_min_area",
    "no_min_area_no_grip_dist",
    "no_postprocessing",
    "no_gripper_weighting",
    "no_occluder_pasting",
];

/// Index of the fit variant each ablation row uses: 0 full fit, 1 without
/// gripper weighting, 2 plain fit without occluders or weighting.
const ROW_FIT: [usize; 6] = [0, 0, 0, 0, 1, 2];

fn row_post(row: usize, base: &PostProcessConfig) -> PostProcessConfig {
    match row {
        0 => base.clone(),
        1 => PostProcessConfig {
            min_area: 0.0,
            ..base.clone()
        },
        2 => PostProcessConfig {
            min_area: 0.0,
            gripper_max_dist: f64::INFINITY,
            ..base.clone()
        },
        _ => PostProcessConfig::disabled(),
    }
}

/// Per-frame inputs the ablation grid needs. Flow masks are the thresholded
/// per-direction masks so every fusion mode can be formed; the robot masks
/// come from the three fit variants.
#[derive(Debug, Clone)]
pub struct AblationFrame {
    pub forward: Option<BinaryMask>,
    pub backward: Option<BinaryMask>,
    /// Robot predictions by fit variant: [full, no weighting, plain].
    pub robot: [BinaryMask; 3],
    pub gt_object: BinaryMask,
    pub spot_center: (f64, f64),
}

impl AblationFrame {
    fn fused(&self, mode: FlowMaskMode) -> Result<BinaryMask> {
        match (&self.forward, &self.backward) {
            (Some(f), None) => Ok(f.clone()),
            (None, Some(b)) => Ok(b.clone()),
            (Some(f), Some(b)) => match mode {
                FlowMaskMode::ForwardOnly => Ok(f.clone()),
                FlowMaskMode::Intersection => f.intersection(b),
                FlowMaskMode::Union => f.union(b),
            },
            (None, None) => Err(Error::Data("frame has no flow masks".to_string())),
        }
    }
}

/// One ablation row: mean IoU per fusion mode, averaged over objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    /// Indexed like `FlowMaskMode::ALL`: forward-only, intersection, union.
    pub miou: [f64; 3],
}

/// Streams objects through the ablation grid so only one object's frames
/// are alive at a time.
#[derive(Debug, Default)]
pub struct AblationAccumulator {
    /// per_row_mode[row][mode] -> per-object pooled IoU values.
    per_row_mode: Vec<[Vec<f64>; 3]>,
    post: PostProcessConfig,
}

impl AblationAccumulator {
    pub fn new(post: PostProcessConfig) -> Self {
        Self {
            per_row_mode: (0..ABLATION_ROWS.len())
                .map(|_| [Vec::new(), Vec::new(), Vec::new()])
                .collect(),
            post,
        }
    }

    /// Score one object's frames against every row and fusion mode.
    pub fn add_object(&mut self, frames: &[AblationFrame]) -> Result<()> {
        if frames.is_empty() {
            return Err(Error::Data("object without frames".to_string()));
        }
        for (mode_idx, &mode) in FlowMaskMode::ALL.iter().enumerate() {
            let fused: Vec<BinaryMask> = frames
                .iter()
                .map(|f| f.fused(mode))
                .collect::<Result<_>>()?;
            for row in 0..ABLATION_ROWS.len() {
                let cfg = row_post(row, &self.post);
                let mut counts = PixelCounts::default();
                for (frame, motion) in frames.iter().zip(&fused) {
                    let raw = nimply(motion, &frame.robot[ROW_FIT[row]])?;
                    let pred = postprocess(&raw, frame.spot_center, &cfg);
                    counts.add_pair(&pred, &frame.gt_object)?;
                }
                self.per_row_mode[row][mode_idx].push(counts.metrics().iou);
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<AblationRow>> {
        if self.per_row_mode[0][0].is_empty() {
            return Err(Error::Data("no objects were added".to_string()));
        }
        Ok(ABLATION_ROWS
            .iter()
            .enumerate()
            .map(|(row, &label)| {
                let mut miou = [0.0; 3];
                for (m, slot) in miou.iter_mut().enumerate() {
                    let vals = &self.per_row_mode[row][m];
                    *slot = vals.iter().sum::<f64>() / vals.len() as f64;
                }
                AblationRow {
                    label: label.to_string(),
                    miou,
                }
            })
            .collect())
    }
}

/// Convenience wrapper over the accumulator for in-memory inputs.
pub fn run_ablation(
    objects: &[Vec<AblationFrame>],
    post: &PostProcessConfig,
) -> Result<Vec<AblationRow>> {
    let mut acc = AblationAccumulator::new(post.clone());
    for frames in objects {
        acc.add_object(frames)?;
    }
    acc.finish()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("row,forward_only,intersection,union\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            row.label, row.miou[0], row.miou[1], row.miou[2]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_with(w: u32, h: u32, set: &[(u32, u32)]) -> BinaryMask {
        let mut m = BinaryMask::new(w, h).unwrap();
        for &(r, c) in set {
            m.set(r, c, true);
        }
        m
    }

    #[test]
    fn hand_counted_example() {
        // 4x4: pred has 6 pixels, gt has 5, overlap 3.
        let pred = mask_with(4, 4, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (3, 3)]);
        let gt = mask_with(4, 4, &[(0, 0), (0, 1), (1, 1), (2, 3), (3, 0)]);
        let m = mask_metrics(&pred, &gt).unwrap();
        assert!((m.iou - 3.0 / 8.0).abs() < 1e-12);
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_conventions() {
        let empty = BinaryMask::new(4, 4).unwrap();
        let some = mask_with(4, 4, &[(1, 1)]);
        let both = mask_metrics(&empty, &empty).unwrap();
        assert_eq!((both.iou, both.precision, both.recall), (1.0, 1.0, 1.0));
        let pred_empty = mask_metrics(&empty, &some).unwrap();
        assert_eq!(pred_empty.iou, 0.0);
        assert_eq!(pred_empty.precision, 1.0);
        assert_eq!(pred_empty.recall, 0.0);
        let gt_empty = mask_metrics(&some, &empty).unwrap();
        assert_eq!(gt_empty.iou, 0.0);
        assert_eq!(gt_empty.precision, 0.0);
        assert_eq!(gt_empty.recall, 1.0);
    }

    #[test]
    fn iou_bounded_by_precision_and_recall() {
        let mut state = 0x853c49e6748fea9bu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..500 {
            let bits_a: Vec<bool> = (0..64).map(|_| next() % 2 == 0).collect();
            let bits_b: Vec<bool> = (0..64).map(|_| next() % 3 == 0).collect();
            let a = BinaryMask::from_bits(8, 8, bits_a).unwrap();
            let b = BinaryMask::from_bits(8, 8, bits_b).unwrap();
            let m = mask_metrics(&a, &b).unwrap();
            assert!(m.iou <= m.precision + 1e-12);
            assert!(m.iou <= m.recall + 1e-12);
        }
    }

    #[test]
    fn sequence_pooling_is_micro_average() {
        // Frame 1: pred misses everything (0/8); frame 2: perfect (8/8).
        // Micro average pools counts: tp=8, pred=8, gt=16 -> recall 0.5,
        // not the 0.5/1.0 frame mean by accident; iou = 8/16.
        let w = 4;
        let gt: Vec<BinaryMask> = (0..2)
            .map(|_| {
                mask_with(
                    w,
                    4,
                    &[
                        (0, 0),
                        (0, 1),
                        (1, 0),
                        (1, 1),
                        (2, 2),
                        (2, 3),
                        (3, 2),
                        (3, 3),
                    ],
                )
            })
            .collect();
        let preds = vec![BinaryMask::new(w, 4).unwrap(), gt[1].clone()];
        let m = evaluate_sequence(&preds, &gt).unwrap();
        assert!((m.iou - 0.5).abs() < 1e-12);
        assert!((m.recall - 0.5).abs() < 1e-12);
        assert!((m.precision - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_mean_is_unweighted() {
        let report = EvaluationReport::from_classes(vec![
            ClassReport {
                class: "arm".to_string(),
                frames: 100,
                metrics: MaskMetrics {
                    iou: 0.8,
                    precision: 0.9,
                    recall: 0.7,
                },
            },
            ClassReport {
                class: "object".to_string(),
                frames: 10,
                metrics: MaskMetrics {
                    iou: 0.4,
                    precision: 0.5,
                    recall: 0.3,
                },
            },
        ])
        .unwrap();
        assert!((report.mean.iou - 0.6).abs() < 1e-12);
        assert!((report.mean.precision - 0.7).abs() < 1e-12);
        assert!((report.mean.recall - 0.5).abs() < 1e-12);
        let table = report.text_table();
        assert!(table.contains("arm"));
        assert!(table.lines().count() == 4);
    }

    #[test]
    fn ablation_rows_order_and_csv() {
        let w = 32;
        // Build one object with 2 frames: motion covers object plus a border
        // smudge; robot masks empty so rows differ only via post-processing.
        let mut motion = BinaryMask::new(w, w).unwrap();
        for r in 10..20 {
            for c in 10..20 {
                motion.set(r, c, true);
            }
        }
        motion.set(0, 0, true); // border speckle
        let gt = {
            let mut m = BinaryMask::new(w, w).unwrap();
            for r in 10..20 {
                for c in 10..20 {
                    m.set(r, c, true);
                }
            }
            m
        };
        let empty = BinaryMask::new(w, w).unwrap();
        let frame = AblationFrame {
            forward: Some(motion.clone()),
            backward: Some(motion.clone()),
            robot: [empty.clone(), empty.clone(), empty.clone()],
            gt_object: gt,
            spot_center: (15.0, 15.0),
        };
        let post = PostProcessConfig {
            border_deletion: true,
            gripper_max_dist: f64::INFINITY,
            min_area: 0.0,
            keep_closest_always: false,
        };
        let rows = run_ablation(&[vec![frame.clone(), frame]], &post).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].label, "full");
        // Full config deletes the border speckle: perfect IoU. The
        // no-postprocessing rows keep it: IoU below 1.
        assert!((rows[0].miou[2] - 1.0).abs() < 1e-12);
        assert!(rows[3].miou[2] < 1.0);
        let csv = ablation_csv(&rows);
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("row,forward_only,intersection,union\n"));
        assert!(csv.contains("no_occluder_pasting"));
    }
}
