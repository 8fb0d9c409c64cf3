//! Change-detection baselines: direct RGB differencing against an
//! object-free reference, and flow-mask differencing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{morph_open_close, threshold_above, BinaryMask, Frame, ScalarField};
use crate::object::{postprocess, PostProcessConfig};

/// RGB change detection parameters. The threshold defaults to 1/25 of the
/// pixel range, i.e. 10.2 for 8-bit images.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CdRgbConfig {
    pub threshold: f64,
    pub morph_radius: u32,
}

impl Default for CdRgbConfig {
    fn default() -> Self {
        Self::from_pixel_range(255.0)
    }
}

impl CdRgbConfig {
    pub fn from_pixel_range(range: f64) -> Self {
        Self {
            threshold: range / 25.0,
            morph_radius: 1,
        }
    }
}

/// Pixels whose max-over-channels absolute difference exceeds the threshold,
/// cleaned with open-then-close morphology. No component filtering: the raw
/// change mask is the output.
pub fn cd_rgb(with: &Frame, without: &Frame, config: &CdRgbConfig) -> Result<BinaryMask> {
    if with.width() != without.width() || with.height() != without.height() {
        return Err(Error::DimensionMismatch(
            with.width(),
            with.height(),
            without.width(),
            without.height(),
        ));
    }
    let values: Vec<f64> = with
        .pixels()
        .chunks_exact(3)
        .zip(without.pixels().chunks_exact(3))
        .map(|(a, b)| {
            (0..3)
                .map(|ch| (a[ch] as f64 - b[ch] as f64).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    let diff = ScalarField::from_values(with.width(), with.height(), values)
        .expect("frame dimensions are valid");
    Ok(morph_open_close(
        &threshold_above(&diff, config.threshold),
        config.morph_radius,
    ))
}

/// Flow-mask change detection: pixels moving while grasping that did not
/// move in the object-free scan, then the full component post-processing.
pub fn cd_of(
    with_mask: &BinaryMask,
    without_mask: &BinaryMask,
    spot_center: (f64, f64),
    config: &PostProcessConfig,
) -> Result<BinaryMask> {
    let raw = with_mask.difference(without_mask)?;
    Ok(postprocess(&raw, spot_center, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_threshold_is_range_over_25() {
        // 255/25 = 10.2.
        let c = CdRgbConfig::default();
        assert!((c.threshold - 10.2).abs() < 1e-12);
        assert_eq!(c.morph_radius, 1);
    }

    #[test]
    fn changed_region_is_detected_by_max_channel() {
        let mut with = Frame::filled(20, 20, [100, 100, 100]).unwrap();
        let without = Frame::filled(20, 20, [100, 100, 100]).unwrap();
        // Change only the blue channel, above threshold, in a block.
        for r in 5..12 {
            for c in 5..12 {
                with.set(r, c, [100, 100, 140]);
            }
        }
        let out = cd_rgb(&with, &without, &CdRgbConfig::default()).unwrap();
        assert_eq!(out.area(), 49);
        assert!(out.get(8, 8));
    }

    #[test]
    fn subthreshold_changes_are_ignored() {
        let with = Frame::filled(16, 16, [105, 105, 105]).unwrap();
        let without = Frame::filled(16, 16, [100, 100, 100]).unwrap();
        let out = cd_rgb(&with, &without, &CdRgbConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn speckle_noise_is_morphed_away() {
        let mut with = Frame::filled(20, 20, [50, 50, 50]).unwrap();
        let without = Frame::filled(20, 20, [50, 50, 50]).unwrap();
        with.set(3, 3, [250, 50, 50]);
        with.set(15, 7, [50, 250, 50]);
        let out = cd_rgb(&with, &without, &CdRgbConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn flow_difference_applies_component_filters() {
        let (w, h) = (736u32, 414u32);
        let mut with_mask = BinaryMask::new(w, h).unwrap();
        let mut without_mask = BinaryMask::new(w, h).unwrap();
        // Object region moves only with the object grasped.
        for r in 150..210 {
            for c in 300..360 {
                with_mask.set(r, c, true);
            }
        }
        // Arm-ish band moves in both scans and must cancel.
        for r in 0..414 {
            for c in 100..130 {
                with_mask.set(r, c, true);
                without_mask.set(r, c, true);
            }
        }
        // Far-away flicker moves only with the object but fails the
        // distance bound.
        for r in 300..360 {
            for c in 650..710 {
                with_mask.set(r, c, true);
            }
        }
        let out = cd_of(
            &with_mask,
            &without_mask,
            (180.0, 330.0),
            &PostProcessConfig::default(),
        )
        .unwrap();
        assert_eq!(out.area(), 3600);
        assert!(out.get(180, 330));
        assert!(!out.get(330, 680));
        assert!(!out.get(200, 110));
    }
}
