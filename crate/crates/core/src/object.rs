//! Grasped-object extraction: moving pixels that are not robot, cleaned by
//! component-level filters.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{FlowEstimator, FlowParams, VariationalFlow};
use crate::imaging::{connected_components, BinaryMask, Frame};
use crate::motion::{segment_motion, FlowMaskMode};
use crate::robot::{ArmAppearanceModel, GripperSpot};

/// Image area the distance and area thresholds are calibrated at. Other
/// resolutions scale area thresholds by the area ratio and distances by its
/// square root.
pub const REFERENCE_AREA: f64 = 414.0 * 736.0;

/// Component filters applied to the raw object mask, in fixed order:
/// border deletion, gripper distance, minimum area.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PostProcessConfig {
    /// Delete components touching the image border.
    pub border_deletion: bool,
    /// Remove components whose nearest pixel lies further than this from
    /// the gripper spot center, in pixels at the reference area. Infinity
    /// disables the stage.
    pub gripper_max_dist: f64,
    /// Remove components smaller than this, in pixels at the reference
    /// area. Zero disables the stage.
    pub min_area: f64,
    /// Keep the component closest to the spot even when it fails the
    /// distance bound.
    pub keep_closest_always: bool,
}

impl Default for PostProcessConfig {
    fn default() -> Self {
        Self {
            border_deletion: true,
            gripper_max_dist: 100.0,
            min_area: 2500.0,
            keep_closest_always: false,
        }
    }
}

impl PostProcessConfig {
    /// Identity configuration: every stage disabled.
    pub fn disabled() -> Self {
        Self {
            border_deletion: false,
            gripper_max_dist: f64::INFINITY,
            min_area: 0.0,
            keep_closest_always: false,
        }
    }
}

/// Everything needed to turn a frame triple into an object mask.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationConfig {
    pub flow: FlowParams,
    pub flow_mode: FlowMaskMode,
    pub post: PostProcessConfig,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            flow: FlowParams::default(),
            flow_mode: FlowMaskMode::Union,
            post: PostProcessConfig::default(),
        }
    }
}

/// Moving pixels that are not robot: motion AND NOT robot.
pub fn nimply(motion: &BinaryMask, robot: &BinaryMask) -> Result<BinaryMask> {
    motion.difference(robot)
}

/// Counts reported alongside a post-processed mask.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PostProcessStats {
    pub raw_components: usize,
    pub after_border: usize,
    pub after_distance: usize,
    pub after_area: usize,
    pub final_area: usize,
}

pub fn postprocess(
    mask: &BinaryMask,
    spot_center: (f64, f64),
    config: &PostProcessConfig,
) -> BinaryMask {
    postprocess_with_stats(mask, spot_center, config).0
}

/// Apply the filters and report how many components each stage kept.
pub fn postprocess_with_stats(
    mask: &BinaryMask,
    spot_center: (f64, f64),
    config: &PostProcessConfig,
) -> (BinaryMask, PostProcessStats) {
    let area_ratio = mask.width() as f64 * mask.height() as f64 / REFERENCE_AREA;
    let eff_max_dist = config.gripper_max_dist * area_ratio.sqrt();
    let eff_min_area = config.min_area * area_ratio;

    let mut stats = PostProcessStats::default();
    let mut survivors = connected_components(mask);
    stats.raw_components = survivors.len();

    if config.border_deletion {
        survivors.retain(|c| !c.touches_border);
    }
    stats.after_border = survivors.len();

    if eff_max_dist.is_finite() {
        let distances: Vec<f64> = survivors
            .iter()
            .map(|c| c.min_distance_to(spot_center))
            .collect();
        let closest = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("distances are finite"))
            .map(|(i, _)| i);
        let keep: Vec<bool> = distances
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                d <= eff_max_dist || (config.keep_closest_always && Some(i) == closest)
            })
            .collect();
        let mut it = keep.iter();
        survivors.retain(|_| *it.next().expect("one flag per component"));
    }
    stats.after_distance = survivors.len();

    if eff_min_area > 0.0 {
        survivors.retain(|c| c.area() as f64 >= eff_min_area);
    }
    stats.after_area = survivors.len();

    let mut out = BinaryMask::new(mask.width(), mask.height()).expect("nonempty mask dims");
    for comp in &survivors {
        for &(r, c) in &comp.pixels {
            out.set(r, c, true);
        }
    }
    stats.final_area = out.area();
    (out, stats)
}

/// Segment the held object in `current` using its two neighbors: fuse both
/// flow directions into a motion mask, subtract the predicted robot pixels,
/// and post-process. Forward-only mode skips the backward estimate.
pub fn segment_object(
    previous: &Frame,
    current: &Frame,
    next: &Frame,
    model: &ArmAppearanceModel,
    spot: &GripperSpot,
    config: &SegmentationConfig,
) -> Result<BinaryMask> {
    let estimator = VariationalFlow::new(config.flow.clone())?;
    let forward = estimator.estimate(current, next)?;
    let backward = match config.flow_mode {
        FlowMaskMode::ForwardOnly => None,
        _ => Some(estimator.estimate(current, previous)?),
    };
    let motion = segment_motion(&forward, backward.as_ref(), config.flow_mode)?;
    let robot = model.predict_robot_mask(current);
    let raw = nimply(&motion, &robot)?;
    Ok(postprocess(&raw, spot.center, &config.post))
}
