use crate::error::{Error, Result};
use crate::flow::{estimate_flow, FlowParams};
use crate::imaging::{connected_components, BinaryMask, Frame};
use crate::motion::{motion_mask, sequence_motion_masks, FlowMaskMode};

/// Frames whose motion mask covers less than this fraction of the image are
/// dropped from training: the arm barely moved or flow failed.
pub const MIN_ARM_FRACTION: f64 = 0.01;

/// Jaw region found by wiggling the gripper at a fixed pose.
#[derive(Debug, Clone)]
pub struct GripperSpot {
    /// Index of the trajectory pose the open/close pair was captured at.
    pub pose_index: usize,
    /// Centroid (row, col) of the jaw motion mask.
    pub center: (f64, f64),
    pub mask: BinaryMask,
}

/// One self-labeled training frame from an arm-only sequence.
#[derive(Debug, Clone)]
pub struct ArmSample {
    /// Position of the frame in the source sequence, kept so callers can
    /// recover per-frame metadata (e.g. which trajectory stop it was at).
    pub frame_index: usize,
    pub frame: Frame,
    pub mask: BinaryMask,
}

/// Self-labeled arm masks from an arm-only sequence: union-fused motion
/// masks per frame, endpoints falling back to their single direction.
/// Frames with hardly any motion are discarded.
pub fn harvest_arm_masks(frames: &[Frame], params: &FlowParams) -> Result<Vec<ArmSample>> {
    if frames.len() < 3 {
        return Err(Error::SequenceTooShort {
            got: frames.len(),
            need: 3,
        });
    }
    let masks = sequence_motion_masks(frames, params)?;
    let min_area = (frames[0].width() as f64 * frames[0].height() as f64 * MIN_ARM_FRACTION)
        .ceil() as usize;
    let mut out = Vec::new();
    for (t, frame) in frames.iter().enumerate() {
        let mask = masks.fused(t, FlowMaskMode::Union)?;
        if mask.area() >= min_area {
            out.push(ArmSample {
                frame_index: t,
                frame: frame.clone(),
                mask,
            });
        }
    }
    Ok(out)
}

/// Locate the jaws: flow between the open and closed renders of the same
/// pose, thresholded, keeping every component at least half as large as the
/// biggest one. Their union is the spot; its centroid the reference point.
pub fn detect_gripper_spot(
    open: &Frame,
    closed: &Frame,
    params: &FlowParams,
) -> Result<GripperSpot> {
    let flow = estimate_flow(open, closed, params)?;
    let mask = motion_mask(&flow.magnitude());
    let comps = connected_components(&mask);
    if comps.is_empty() {
        return Err(Error::NoJawMotion);
    }
    let max_area = comps.iter().map(|c| c.area()).max().expect("nonempty");
    let mut spot = BinaryMask::new(mask.width(), mask.height())?;
    for comp in comps.iter().filter(|c| c.area() * 2 >= max_area) {
        for &(r, c) in &comp.pixels {
            spot.set(r, c, true);
        }
    }
    let n = spot.area() as f64;
    let (sr, sc) = spot
        .iter_set()
        .fold((0.0, 0.0), |(ar, ac), (r, c)| (ar + r as f64, ac + c as f64));
    Ok(GripperSpot {
        pose_index: 0,
        center: (sr / n, sc / n),
        mask: spot,
    })
}
