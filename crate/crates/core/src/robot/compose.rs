use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{connected_components, BinaryMask, Frame, ScalarField};
use crate::robot::appearance::gripper_weight;
use crate::robot::GripperSpot;

pub const LABEL_BACKGROUND: u8 = 0;
pub const LABEL_ROBOT: u8 = 1;
pub const LABEL_IGNORE: u8 = 2;

/// Per-pixel class raster for exported training samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    width: u32,
    height: u32,
    classes: Vec<u8>,
}

impl LabelRaster {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        Ok(Self {
            width,
            height,
            classes: vec![LABEL_BACKGROUND; width as usize * height as usize],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> u8 {
        self.classes[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, label: u8) {
        self.classes[row as usize * self.width as usize + col as usize] = label;
    }

    pub fn count(&self, label: u8) -> usize {
        self.classes.iter().filter(|&&l| l == label).count()
    }

    /// Export encoding: background 0, ignore 128, robot 255.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        self.classes
            .iter()
            .map(|&l| match l {
                LABEL_ROBOT => 255,
                LABEL_IGNORE => 128,
                _ => 0,
            })
            .collect()
    }

    pub fn from_pgm_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        let expected = width as usize * height as usize;
        if bytes.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                got: bytes.len(),
            });
        }
        let classes = bytes
            .iter()
            .map(|&b| match b {
                0..=63 => LABEL_BACKGROUND,
                64..=191 => LABEL_IGNORE,
                _ => LABEL_ROBOT,
            })
            .collect();
        Ok(Self {
            width,
            height,
            classes,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ComposeParams {
    /// Uniform scale applied to the harvested arm crop.
    pub scale_range: (f64, f64),
    /// Horizontal shift as a fraction of frame width, drawn from +-.
    pub max_shift_frac: f64,
    /// Per-channel multiplicative jitter for the occluder colors.
    pub color_jitter_range: (f64, f64),
    pub weight_sigma: f64,
    pub weight_peak: f64,
    pub placement_tries: u32,
}

impl Default for ComposeParams {
    fn default() -> Self {
        Self {
            scale_range: (0.8, 1.2),
            max_shift_frac: 0.10,
            color_jitter_range: (0.7, 1.3),
            weight_sigma: 50.0,
            weight_peak: 3.0,
            placement_tries: 10,
        }
    }
}

/// One synthesized training image with robot labels and loss weights.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub composite: Frame,
    pub labels: LabelRaster,
    pub weights: ScalarField,
    /// Gripper spot center after the arm transform, (row, col).
    pub spot_center: (f64, f64),
}

/// Paste a harvested arm onto a new background with random scale and
/// horizontal shift, drop an occluder sprite on the gripper spot, and emit
/// labels plus gripper-centered loss weights. Deterministic in `seed`.
///
/// When the transformed spot splits into exactly two components (open jaws),
/// the occluder goes over the smaller one and the larger jaw is repainted on
/// top, imitating a held object. Otherwise the occluder lands on a random
/// spot pixel. Placement keeps the sprite fully inside the frame, resampling
/// up to `placement_tries` times.
pub fn compose_training_sample(
    arm_frame: &Frame,
    arm_mask: &BinaryMask,
    background: &Frame,
    occluder_frame: &Frame,
    occluder_mask: &BinaryMask,
    spot: &GripperSpot,
    seed: u64,
    params: &ComposeParams,
) -> Result<TrainingSample> {
    let (w, h) = (arm_frame.width(), arm_frame.height());
    if arm_mask.width() != w || arm_mask.height() != h {
        return Err(Error::DimensionMismatch(
            w,
            h,
            arm_mask.width(),
            arm_mask.height(),
        ));
    }
    if spot.mask.width() != w || spot.mask.height() != h {
        return Err(Error::DimensionMismatch(
            w,
            h,
            spot.mask.width(),
            spot.mask.height(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = rng.gen_range(params.scale_range.0..=params.scale_range.1);
    let max_shift = params.max_shift_frac * w as f64;
    let shift = rng.gen_range(-max_shift..=max_shift);

    // Arm paste: inverse-map each canvas pixel through shift then scale
    // about the image center.
    let cy = (h - 1) as f64 / 2.0;
    let cx = (w - 1) as f64 / 2.0;
    let mut composite = background.resize(w, h)?;
    let mut labels = LabelRaster::new(w, h)?;
    let src_of = |r: u32, c: u32| -> (f64, f64) {
        (
            (r as f64 - cy) / scale + cy,
            (c as f64 - cx - shift) / scale + cx,
        )
    };
    let in_arm = |sr: f64, sc: f64| -> bool {
        let rr = sr.round();
        let cc = sc.round();
        rr >= 0.0 && cc >= 0.0 && (rr as u32) < h && (cc as u32) < w
            && arm_mask.get(rr as u32, cc as u32)
    };
    for r in 0..h {
        for c in 0..w {
            let (sr, sc) = src_of(r, c);
            if in_arm(sr, sc) {
                composite.set(r, c, arm_frame.sample_bilinear(sr, sc));
                labels.set(r, c, LABEL_ROBOT);
            }
        }
    }

    // Forward transform for the spot: scale about center, then shift.
    let fwd = |sr: f64, sc: f64| -> (f64, f64) {
        (cy + scale * (sr - cy), cx + scale * (sc - cx) + shift)
    };
    let spot_center = fwd(spot.center.0, spot.center.1);
    let mut spot_mask = BinaryMask::new(w, h)?;
    for r in 0..h {
        for c in 0..w {
            let (sr, sc) = src_of(r, c);
            let rr = sr.round();
            let cc = sc.round();
            if rr >= 0.0 && cc >= 0.0 && (rr as u32) < h && (cc as u32) < w
                && spot.mask.get(rr as u32, cc as u32)
            {
                spot_mask.set(r, c, true);
            }
        }
    }
    if spot_mask.is_empty() {
        return Err(Error::Data(
            "gripper spot vanished under the arm transform".to_string(),
        ));
    }

    // Occluder sprite in tight-bbox coordinates.
    let sprite: Vec<(i64, i64, [u8; 3])> = occluder_mask
        .iter_set()
        .map(|(r, c)| (r as i64, c as i64, occluder_frame.get(r, c)))
        .collect();
    if sprite.is_empty() {
        return Err(Error::Data("occluder mask is empty".to_string()));
    }
    let min_r = sprite.iter().map(|&(r, _, _)| r).min().expect("nonempty");
    let max_r = sprite.iter().map(|&(r, _, _)| r).max().expect("nonempty");
    let min_c = sprite.iter().map(|&(_, c, _)| c).min().expect("nonempty");
    let max_c = sprite.iter().map(|&(_, c, _)| c).max().expect("nonempty");
    let (half_h, half_w) = ((max_r - min_r) / 2, (max_c - min_c) / 2);
    let sprite_h = max_r - min_r;
    let sprite_w = max_c - min_c;

    let jitter: [f64; 3] = [
        rng.gen_range(params.color_jitter_range.0..=params.color_jitter_range.1),
        rng.gen_range(params.color_jitter_range.0..=params.color_jitter_range.1),
        rng.gen_range(params.color_jitter_range.0..=params.color_jitter_range.1),
    ];

    let comps = connected_components(&spot_mask);
    let jaw_pair = if comps.len() == 2 {
        let (small, large) = if comps[0].area() <= comps[1].area() {
            (&comps[0], &comps[1])
        } else {
            (&comps[1], &comps[0])
        };
        Some((small.centroid(), large.pixels.clone()))
    } else {
        None
    };
    let spot_pixels: Vec<(u32, u32)> = spot_mask.iter_set().collect();

    let fits = |pr: i64, pc: i64| -> bool {
        pr - half_h >= 0
            && pc - half_w >= 0
            && pr - half_h + sprite_h < h as i64
            && pc - half_w + sprite_w < w as i64
    };
    let mut position: Option<(i64, i64)> = None;
    for attempt in 0..params.placement_tries {
        let (pr, pc) = match (&jaw_pair, attempt) {
            // First try: centered on the smaller jaw component.
            (Some(((sr, sc), _)), 0) => (sr.round() as i64, sc.round() as i64),
            _ => {
                let &(r, c) = &spot_pixels[rng.gen_range(0..spot_pixels.len())];
                (r as i64, c as i64)
            }
        };
        if fits(pr, pc) {
            position = Some((pr, pc));
            break;
        }
    }
    let (pr, pc) = position.ok_or(Error::PlacementFailed(params.placement_tries))?;

    // Paint the occluder; its pixels are background by definition.
    for &(r, c, color) in &sprite {
        let dr = pr + (r - min_r) - half_h;
        let dc = pc + (c - min_c) - half_w;
        if dr < 0 || dc < 0 || dr >= h as i64 || dc >= w as i64 {
            continue;
        }
        let jittered = [
            (color[0] as f64 * jitter[0]).round().clamp(0.0, 255.0) as u8,
            (color[1] as f64 * jitter[1]).round().clamp(0.0, 255.0) as u8,
            (color[2] as f64 * jitter[2]).round().clamp(0.0, 255.0) as u8,
        ];
        composite.set(dr as u32, dc as u32, jittered);
        labels.set(dr as u32, dc as u32, LABEL_BACKGROUND);
    }

    // Two-jaw case: the larger jaw overlays the occluder, so the sprite
    // reads as held between the fingers.
    if let Some((_, large_pixels)) = &jaw_pair {
        for &(r, c) in large_pixels {
            let (sr, sc) = src_of(r, c);
            if in_arm(sr, sc) {
                composite.set(r, c, arm_frame.sample_bilinear(sr, sc));
                labels.set(r, c, LABEL_ROBOT);
            }
        }
    }

    let mut weights = ScalarField::zeros(w, h)?;
    for r in 0..h {
        for c in 0..w {
            let dr = r as f64 - spot_center.0;
            let dc = c as f64 - spot_center.1;
            weights.set(
                r,
                c,
                gripper_weight(
                    (dr * dr + dc * dc).sqrt(),
                    params.weight_sigma,
                    params.weight_peak,
                ),
            );
        }
    }

    Ok(TrainingSample {
        composite,
        labels,
        weights,
        spot_center,
    })
}

/// Little-endian weight map file: u32 width, u32 height, then f32 values
/// row-major.
pub fn write_weight_map(weights: &ScalarField, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + weights.values().len() * 4);
    bytes.extend_from_slice(&weights.width().to_le_bytes());
    bytes.extend_from_slice(&weights.height().to_le_bytes());
    for &v in weights.values() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_weight_map(path: &Path) -> Result<ScalarField> {
    let data = std::fs::read(path)?;
    if data.len() < 8 {
        return Err(Error::Parse {
            offset: data.len() as u64,
            message: "truncated weight map header".to_string(),
        });
    }
    let width = u32::from_le_bytes(data[0..4].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(data[4..8].try_into().expect("4 bytes"));
    let expected = 8 + width as usize * height as usize * 4;
    if data.len() < expected {
        return Err(Error::Parse {
            offset: data.len() as u64,
            message: format!("truncated weight map, expected {expected} bytes"),
        });
    }
    let values = data[8..expected]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    ScalarField::from_values(width, height, values)
}
