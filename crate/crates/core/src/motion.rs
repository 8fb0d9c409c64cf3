//! Motion masks from flow magnitude: per-frame rescale, histogram threshold,
//! and fusion of the forward and backward directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::imaging::{bin_for, otsu_threshold, BinaryMask, Histogram, ScalarField};

/// How the forward and backward motion masks combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMaskMode {
    ForwardOnly,
    Intersection,
    Union,
}

impl FlowMaskMode {
    pub const ALL: [FlowMaskMode; 3] = [
        FlowMaskMode::ForwardOnly,
        FlowMaskMode::Intersection,
        FlowMaskMode::Union,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlowMaskMode::ForwardOnly => "forward_only",
            FlowMaskMode::Intersection => "intersection",
            FlowMaskMode::Union => "union",
        }
    }
}

/// Threshold a magnitude field: rescale by the frame maximum into 256 bins,
/// pick the split with the histogram criterion, and keep pixels whose bin
/// lies strictly above it. A frame with no motion at all comes back empty.
pub fn motion_mask(magnitude: &ScalarField) -> BinaryMask {
    let (hist, max) = Histogram::from_scalar_field(magnitude);
    let t = otsu_threshold(&hist).expect("field is nonempty, so the histogram has counts") as usize;
    let bits = magnitude
        .values()
        .iter()
        .map(|&v| bin_for(v, max) > t)
        .collect();
    BinaryMask::from_bits(magnitude.width(), magnitude.height(), bits)
        .expect("magnitude dimensions are valid")
}

/// Fuse forward and backward flow into one motion mask. The backward field
/// is required for every mode except `ForwardOnly`.
pub fn segment_motion(
    forward: &FlowField,
    backward: Option<&FlowField>,
    mode: FlowMaskMode,
) -> Result<BinaryMask> {
    if let Some(b) = backward {
        if b.width() != forward.width() || b.height() != forward.height() {
            return Err(Error::DimensionMismatch(
                forward.width(),
                forward.height(),
                b.width(),
                b.height(),
            ));
        }
    }
    let fwd_mask = motion_mask(&forward.magnitude());
    match mode {
        FlowMaskMode::ForwardOnly => Ok(fwd_mask),
        FlowMaskMode::Intersection => {
            let b = backward.ok_or(Error::MissingBackwardFlow("intersection"))?;
            fwd_mask.intersection(&motion_mask(&b.magnitude()))
        }
        FlowMaskMode::Union => {
            let b = backward.ok_or(Error::MissingBackwardFlow("union"))?;
            fwd_mask.union(&motion_mask(&b.magnitude()))
        }
    }
}

/// Per-frame thresholded motion masks for a whole sequence. Frame t has a
/// forward mask from flow t -> t+1 (absent on the last frame) and a backward
/// mask from flow t -> t-1 (absent on the first).
#[derive(Debug, Clone)]
pub struct SequenceMotionMasks {
    pub forward: Vec<Option<BinaryMask>>,
    pub backward: Vec<Option<BinaryMask>>,
}

impl SequenceMotionMasks {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Fused mask for frame t. Endpoints fall back to whichever direction
    /// exists; interior frames combine per `mode`.
    pub fn fused(&self, t: usize, mode: FlowMaskMode) -> Result<BinaryMask> {
        match (&self.forward[t], &self.backward[t]) {
            (Some(f), None) => Ok(f.clone()),
            (None, Some(b)) => Ok(b.clone()),
            (Some(f), Some(b)) => match mode {
                FlowMaskMode::ForwardOnly => Ok(f.clone()),
                FlowMaskMode::Intersection => f.intersection(b),
                FlowMaskMode::Union => f.union(b),
            },
            (None, None) => Err(Error::Data(format!(
                "frame {t} has no flow in either direction"
            ))),
        }
    }
}

/// Estimate both flow directions across consecutive pairs and keep only the
/// thresholded masks. Needs at least two frames; costs 2(n-1) estimates.
pub fn sequence_motion_masks(
    frames: &[crate::imaging::Frame],
    params: &crate::flow::FlowParams,
) -> Result<SequenceMotionMasks> {
    if frames.len() < 2 {
        return Err(Error::SequenceTooShort {
            got: frames.len(),
            need: 2,
        });
    }
    let estimator = crate::flow::VariationalFlow::new(params.clone())?;
    let n = frames.len();
    let mut forward: Vec<Option<BinaryMask>> = vec![None; n];
    let mut backward: Vec<Option<BinaryMask>> = vec![None; n];
    for t in 0..n - 1 {
        use crate::flow::FlowEstimator;
        let fwd = estimator.estimate(&frames[t], &frames[t + 1])?;
        forward[t] = Some(motion_mask(&fwd.magnitude()));
        let bwd = estimator.estimate(&frames[t + 1], &frames[t])?;
        backward[t + 1] = Some(motion_mask(&bwd.magnitude()));
    }
    Ok(SequenceMotionMasks { forward, backward })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Field with a moving block of the given magnitude on a still
    /// background.
    fn block_flow(w: u32, h: u32, mag: f32, r0: u32, r1: u32, c0: u32, c1: u32) -> FlowField {
        let mut f = FlowField::zeros(w, h).unwrap();
        for r in r0..r1 {
            for c in c0..c1 {
                f.set(r, c, mag, 0.0);
            }
        }
        f
    }

    #[test]
    fn still_field_yields_empty_mask() {
        let f = FlowField::zeros(16, 12).unwrap();
        let m = segment_motion(&f, None, FlowMaskMode::ForwardOnly).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn moving_block_is_recovered() {
        let f = block_flow(20, 20, 6.0, 5, 10, 5, 10);
        let m = segment_motion(&f, None, FlowMaskMode::ForwardOnly).unwrap();
        assert_eq!(m.area(), 25);
        assert!(m.get(7, 7));
        assert!(!m.get(0, 0));
    }

    #[test]
    fn fusion_modes_nest() {
        let fwd = block_flow(20, 20, 6.0, 5, 10, 5, 10);
        let bwd = block_flow(20, 20, 6.0, 7, 12, 5, 10);
        let fo = segment_motion(&fwd, Some(&bwd), FlowMaskMode::ForwardOnly).unwrap();
        let inter = segment_motion(&fwd, Some(&bwd), FlowMaskMode::Intersection).unwrap();
        let union = segment_motion(&fwd, Some(&bwd), FlowMaskMode::Union).unwrap();
        assert!(inter.is_subset_of(&fo).unwrap());
        assert!(fo.is_subset_of(&union).unwrap());
        assert_eq!(inter.area(), 15);
        assert_eq!(union.area(), 35);
    }

    #[test]
    fn missing_backward_flow_is_an_error_outside_forward_mode() {
        let f = block_flow(8, 8, 3.0, 2, 4, 2, 4);
        assert!(segment_motion(&f, None, FlowMaskMode::Union).is_err());
        assert!(segment_motion(&f, None, FlowMaskMode::Intersection).is_err());
        assert!(segment_motion(&f, None, FlowMaskMode::ForwardOnly).is_ok());
    }

    #[test]
    fn mismatched_backward_dimensions_error() {
        let fwd = FlowField::zeros(8, 8).unwrap();
        let bwd = FlowField::zeros(9, 8).unwrap();
        assert!(segment_motion(&fwd, Some(&bwd), FlowMaskMode::Union).is_err());
    }

    #[test]
    fn sequence_masks_fall_back_at_endpoints() {
        let masks = SequenceMotionMasks {
            forward: vec![
                Some(block_mask(8, 8, 0, 2)),
                Some(block_mask(8, 8, 2, 4)),
                None,
            ],
            backward: vec![
                None,
                Some(block_mask(8, 8, 3, 5)),
                Some(block_mask(8, 8, 4, 6)),
            ],
        };
        // First frame: forward only, regardless of mode.
        let first = masks.fused(0, FlowMaskMode::Intersection).unwrap();
        assert_eq!(first, block_mask(8, 8, 0, 2));
        // Last frame: backward only.
        let last = masks.fused(2, FlowMaskMode::Union).unwrap();
        assert_eq!(last, block_mask(8, 8, 4, 6));
        // Interior frame honors the mode.
        let mid_union = masks.fused(1, FlowMaskMode::Union).unwrap();
        let mid_inter = masks.fused(1, FlowMaskMode::Intersection).unwrap();
        assert_eq!(mid_union, block_mask(8, 8, 2, 5));
        assert_eq!(mid_inter, block_mask(8, 8, 3, 4));
    }

    fn block_mask(w: u32, h: u32, r0: u32, r1: u32) -> BinaryMask {
        let mut m = BinaryMask::new(w, h).unwrap();
        for r in r0..r1 {
            for c in 0..w {
                m.set(r, c, true);
            }
        }
        m
    }

    #[test]
    fn single_frame_sequence_is_too_short() {
        let frames = vec![crate::imaging::Frame::filled(8, 8, [0, 0, 0]).unwrap()];
        assert!(matches!(
            sequence_motion_masks(&frames, &crate::flow::FlowParams::default()),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn threshold_is_binning_consistent() {
        // Values straddling the rescale boundary: with max = 10 the bins are
        // floor(v * 25.6); a value in the same bin as the threshold must be
        // excluded, one bin higher included.
        let f = ScalarField::from_values(3, 1, vec![0.0, 0.0, 10.0]).unwrap();
        let m = motion_mask(&f);
        assert!(!m.get(0, 0));
        assert!(m.get(0, 2));
    }
}
