//! Scene descriptions for the procedural benchmark renderer.
//!
//! Everything here is serializable so a benchmark run can be reproduced from
//! its resolved configuration alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaletteEntry {
    pub color: [u8; 3],
    pub weight: u32,
}

impl Default for PaletteEntry {
    fn default() -> Self {
        Self {
            color: [0, 0, 0],
            weight: 1,
        }
    }
}

/// Static table surface: hash-picked palette cells plus per-pixel jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSpec {
    pub palette: Vec<PaletteEntry>,
    /// Cell edge in pixels.
    pub cell: u32,
    /// Per-pixel brightness jitter, applied to all channels.
    pub jitter: i32,
    /// Additional brightness octaves as (cell_edge, amplitude) pairs.
    /// Coarse octaves keep the backdrop textured even after heavy
    /// downscaling, which anchors optical flow at every pyramid level.
    pub octaves: Vec<(f64, i32)>,
    pub seed: u64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        let muted = [
            [96, 108, 96],
            [88, 100, 92],
            [104, 112, 100],
            [92, 96, 88],
            [100, 104, 104],
            [84, 92, 84],
        ];
        let mut palette: Vec<PaletteEntry> = muted
            .iter()
            .map(|&color| PaletteEntry { color, weight: 24 })
            .collect();
        // A rare light-gray cell close to the gripper color. It puts the
        // gripper bins in genuine contention so the fit options that weight
        // evidence near the gripper have something to win.
        palette.push(PaletteEntry {
            color: [185, 180, 170],
            weight: 1,
        });
        Self {
            palette,
            cell: 6,
            jitter: 5,
            octaves: vec![(33.0, 26), (9.0, 18), (3.0, 13)],
            seed: 7,
        }
    }
}

/// Two-link cartoon arm drawn as capsules, plus a wrist block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmSpec {
    /// Shoulder anchor in image coordinates (x right, y down). May sit
    /// outside the frame.
    pub base_anchor: [f64; 2],
    /// Fraction of the end-effector displacement the shoulder follows.
    pub follow: f64,
    /// Sideways elbow offset as a fraction of the shoulder-wrist distance.
    pub bend: f64,
    pub upper_width: f64,
    pub upper_color: [u8; 3],
    pub fore_width: f64,
    pub fore_color: [u8; 3],
    pub wrist_size: f64,
    pub wrist_color: [u8; 3],
    pub texture_cell: f64,
    pub texture_amp: i32,
}

impl Default for ArmSpec {
    fn default() -> Self {
        Self {
            base_anchor: [-46.0, 212.0],
            follow: 0.0,
            bend: 0.18,
            upper_width: 16.0,
            upper_color: [200, 96, 40],
            fore_width: 12.0,
            fore_color: [52, 88, 168],
            wrist_size: 10.0,
            wrist_color: [70, 70, 76],
            // Dense high-contrast texture pins the data term on every link
            // section; weakly textured capsules let the fast forearm's flow
            // diffuse down to the near-static shoulder and past the border.
            texture_cell: 2.5,
            texture_amp: 26,
        }
    }
}

/// Parallel-jaw gripper. Lengths along the approach direction foreshorten
/// with the out-of-plane tilt of the pose; widths do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperSpec {
    pub finger_len: f64,
    pub finger_width: f64,
    /// Palm bar thickness along the approach direction.
    pub palm_len: f64,
    /// Inner jaw separation when empty.
    pub closed_gap: f64,
    /// Extra separation of the open calibration posture.
    pub open_extra: f64,
    /// Jaws close to this fraction of the held object's minor diameter.
    pub grip_factor: f64,
    pub grip_pad: f64,
    pub color: [u8; 3],
    pub texture_cell: f64,
    pub texture_amp: i32,
}

impl Default for GripperSpec {
    fn default() -> Self {
        Self {
            finger_len: 16.0,
            finger_width: 5.0,
            palm_len: 6.0,
            closed_gap: 6.0,
            open_extra: 8.0,
            grip_factor: 0.9,
            grip_pad: 2.0,
            color: [185, 180, 170],
            texture_cell: 5.0,
            texture_amp: 6,
        }
    }
}

/// Wobbly-ellipse sprite used both for held objects and for the occluder
/// sprites pasted during appearance training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectSpec {
    pub radius: f64,
    /// Minor over major axis.
    pub aspect: f64,
    /// Relative boundary modulation amplitude.
    pub wobble: f64,
    pub color: [u8; 3],
    pub texture_cell: f64,
    pub texture_amp: i32,
    /// Drives the wobble phases and the texture pattern.
    pub seed: u64,
}

impl Default for ObjectSpec {
    fn default() -> Self {
        Self {
            radius: 34.0,
            aspect: 1.0,
            wobble: 0.05,
            color: [210, 60, 170],
            texture_cell: 2.5,
            texture_amp: 26,
            seed: 1,
        }
    }
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter(
                "object radius must be positive".to_string(),
            ));
        }
        if !(self.aspect > 0.0 && self.aspect <= 1.0) {
            return Err(Error::InvalidParameter(
                "object aspect must be in (0, 1]".to_string(),
            ));
        }
        if !(self.wobble >= 0.0 && self.wobble < 0.5) {
            return Err(Error::InvalidParameter(
                "object wobble must be in [0, 0.5)".to_string(),
            ));
        }
        if !(self.texture_cell > 0.0) || self.texture_amp < 0 {
            return Err(Error::InvalidParameter(
                "object texture parameters out of range".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub pixels_per_meter: f64,
    /// Per-frame additive Gaussian sensor noise.
    pub noise_sigma: f64,
    pub background: BackgroundSpec,
    pub arm: ArmSpec,
    pub gripper: GripperSpec,
    pub texture_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            pixels_per_meter: 400.0,
            noise_sigma: 2.0,
            background: BackgroundSpec::default(),
            arm: ArmSpec::default(),
            gripper: GripperSpec::default(),
            texture_seed: 11,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter(
                "scene dimensions must be positive".to_string(),
            ));
        }
        if !(self.pixels_per_meter > 0.0) {
            return Err(Error::InvalidParameter(
                "pixels_per_meter must be positive".to_string(),
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise_sigma must be nonnegative".to_string(),
            ));
        }
        if self.background.palette.is_empty()
            || self.background.palette.iter().all(|p| p.weight == 0)
        {
            return Err(Error::InvalidParameter(
                "background palette needs a positively weighted entry".to_string(),
            ));
        }
        if self.background.cell == 0 || self.background.jitter < 0 {
            return Err(Error::InvalidParameter(
                "background cell/jitter out of range".to_string(),
            ));
        }
        for &(cell, amp) in &self.background.octaves {
            if !(cell >= 1.0) || amp < 0 {
                return Err(Error::InvalidParameter(
                    "background octave cell/amplitude out of range".to_string(),
                ));
            }
        }
        if !(self.arm.follow >= 0.0 && self.arm.follow <= 1.0) {
            return Err(Error::InvalidParameter(
                "arm follow must be in [0, 1]".to_string(),
            ));
        }
        for (name, v) in [
            ("upper_width", self.arm.upper_width),
            ("fore_width", self.arm.fore_width),
            ("wrist_size", self.arm.wrist_size),
            ("texture_cell", self.arm.texture_cell),
            ("finger_len", self.gripper.finger_len),
            ("finger_width", self.gripper.finger_width),
            ("palm_len", self.gripper.palm_len),
            ("gripper texture_cell", self.gripper.texture_cell),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive"
                )));
            }
        }
        if self.gripper.closed_gap < 0.0
            || self.gripper.open_extra < 0.0
            || self.gripper.grip_pad < 0.0
            || !(self.gripper.grip_factor > 0.0)
        {
            return Err(Error::InvalidParameter(
                "gripper gap parameters out of range".to_string(),
            ));
        }
        if self.arm.texture_amp < 0 || self.gripper.texture_amp < 0 {
            return Err(Error::InvalidParameter(
                "texture amplitudes must be nonnegative".to_string(),
            ));
        }
        Ok(())
    }
}
