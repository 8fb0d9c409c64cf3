use crate::error::{Error, Result};
use crate::imaging::{morph_open_close, threshold_above, BinaryMask, Frame, ScalarField};

pub const COLOR_BINS_PER_CHANNEL: usize = 16;
pub const COLOR_BINS: usize =
    COLOR_BINS_PER_CHANNEL * COLOR_BINS_PER_CHANNEL * COLOR_BINS_PER_CHANNEL;

/// RGB quantized to 16 levels per channel.
#[inline]
pub fn color_bin(rgb: [u8; 3]) -> usize {
    (((rgb[0] >> 4) as usize) << 8) | (((rgb[1] >> 4) as usize) << 4) | ((rgb[2] >> 4) as usize)
}

/// Options for fitting the color model from motion-harvested arm masks.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Paste occluder sprites over the gripper spot and count their pixels
    /// as background, so colors later hidden by a held object are never
    /// mistaken for arm.
    pub occluder_aware: bool,
    /// Weight pixels near the gripper spot more heavily.
    pub gripper_weighting: bool,
    pub weight_sigma: f64,
    pub weight_peak: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            occluder_aware: false,
            gripper_weighting: false,
            weight_sigma: 50.0,
            weight_peak: 3.0,
        }
    }
}

/// Gaussian emphasis around a point: 1 away from it, `peak` on it.
pub fn gripper_weight(distance: f64, sigma: f64, peak: f64) -> f64 {
    1.0 + (peak - 1.0) * (-(distance * distance) / (2.0 * sigma * sigma)).exp()
}

/// Histogram Bayes classifier for robot pixels: smoothed color likelihoods
/// for arm and background plus a pixel-fraction prior.
#[derive(Debug, Clone)]
pub struct ArmAppearanceModel {
    fg: Vec<f64>,
    bg: Vec<f64>,
    prior: f64,
    training_frames: usize,
}

impl ArmAppearanceModel {
    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn training_frames(&self) -> usize {
        self.training_frames
    }

    /// P(arm | color) by Bayes over the smoothed likelihoods.
    pub fn posterior_for_color(&self, rgb: [u8; 3]) -> f64 {
        let b = color_bin(rgb);
        let pf = self.fg[b] * self.prior;
        let pb = self.bg[b] * (1.0 - self.prior);
        pf / (pf + pb)
    }

    pub fn posterior(&self, frame: &Frame) -> ScalarField {
        let values = frame
            .pixels()
            .chunks_exact(3)
            .map(|px| self.posterior_for_color([px[0], px[1], px[2]]))
            .collect();
        ScalarField::from_values(frame.width(), frame.height(), values)
            .expect("frame dimensions are valid")
    }

    /// Pixels with posterior above 1/2, cleaned with radius-1 morphology.
    pub fn predict_robot_mask(&self, frame: &Frame) -> BinaryMask {
        morph_open_close(&threshold_above(&self.posterior(frame), 0.5), 1)
    }
}

/// Plain fit: no occluders, no spatial weighting.
pub fn fit_appearance(samples: &[(Frame, BinaryMask)]) -> Result<ArmAppearanceModel> {
    fit_appearance_with(samples, &FitOptions::default(), &[], &[])
}

/// Fit with optional occluder pasting and gripper-distance weighting. Both
/// extensions need one gripper spot center per sample, since the gripper
/// sits somewhere else in every training frame; occluder sprites cycle over
/// samples.
pub fn fit_appearance_with(
    samples: &[(Frame, BinaryMask)],
    options: &FitOptions,
    spot_centers: &[(f64, f64)],
    occluders: &[(Frame, BinaryMask)],
) -> Result<ArmAppearanceModel> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "appearance fit needs at least one sample".to_string(),
        ));
    }
    if (options.occluder_aware || options.gripper_weighting)
        && spot_centers.len() != samples.len()
    {
        return Err(Error::InvalidParameter(format!(
            "occluder pasting and gripper weighting need a spot center per sample \
             ({} samples, {} centers)",
            samples.len(),
            spot_centers.len()
        )));
    }
    if options.occluder_aware && occluders.is_empty() {
        return Err(Error::InvalidParameter(
            "occluder-aware fit needs at least one occluder sprite".to_string(),
        ));
    }
    if samples.iter().all(|(_, mask)| mask.is_empty()) {
        return Err(Error::Data("all training masks are empty".to_string()));
    }

    let mut fg = vec![0.0f64; COLOR_BINS];
    let mut bg = vec![0.0f64; COLOR_BINS];
    let mut fg_total = 0.0f64;
    let mut bg_total = 0.0f64;

    for (sample_idx, (frame, mask)) in samples.iter().enumerate() {
        if frame.width() != mask.width() || frame.height() != mask.height() {
            return Err(Error::DimensionMismatch(
                frame.width(),
                frame.height(),
                mask.width(),
                mask.height(),
            ));
        }
        let overlay = if options.occluder_aware {
            let (occ_frame, occ_mask) = &occluders[sample_idx % occluders.len()];
            Some(occluder_overlay(
                frame.width(),
                frame.height(),
                occ_frame,
                occ_mask,
                spot_centers[sample_idx],
            ))
        } else {
            None
        };
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                let w = if options.gripper_weighting {
                    let (sr, sc) = spot_centers[sample_idx];
                    let dr = r as f64 - sr;
                    let dc = c as f64 - sc;
                    gripper_weight(
                        (dr * dr + dc * dc).sqrt(),
                        options.weight_sigma,
                        options.weight_peak,
                    )
                } else {
                    1.0
                };
                let idx = r as usize * frame.width() as usize + c as usize;
                let occluded = overlay.as_ref().and_then(|o| o[idx]);
                match occluded {
                    // Occluder pixels replace whatever they cover and always
                    // count as background.
                    Some(color) => {
                        bg[color_bin(color)] += w;
                        bg_total += w;
                    }
                    None if mask.get(r, c) => {
                        fg[color_bin(frame.get(r, c))] += w;
                        fg_total += w;
                    }
                    None => {
                        bg[color_bin(frame.get(r, c))] += w;
                        bg_total += w;
                    }
                }
            }
        }
    }

    // Add-one smoothing keeps every color representable.
    for v in fg.iter_mut() {
        *v += 1.0;
    }
    for v in bg.iter_mut() {
        *v += 1.0;
    }
    let fg_norm = fg_total + COLOR_BINS as f64;
    let bg_norm = bg_total + COLOR_BINS as f64;
    for v in fg.iter_mut() {
        *v /= fg_norm;
    }
    for v in bg.iter_mut() {
        *v /= bg_norm;
    }
    let prior = (fg_total / (fg_total + bg_total)).clamp(1e-6, 1.0 - 1e-6);
    Ok(ArmAppearanceModel {
        fg,
        bg,
        prior,
        training_frames: samples.len(),
    })
}

/// Colors the occluder sprite contributes at each canvas pixel when its
/// mask centroid sits on the spot center. None where the sprite is absent.
fn occluder_overlay(
    width: u32,
    height: u32,
    occ_frame: &Frame,
    occ_mask: &BinaryMask,
    center: (f64, f64),
) -> Vec<Option<[u8; 3]>> {
    let mut overlay = vec![None; width as usize * height as usize];
    let set: Vec<(u32, u32)> = occ_mask.iter_set().collect();
    if set.is_empty() {
        return overlay;
    }
    let n = set.len() as f64;
    let (mr, mc) = set
        .iter()
        .fold((0.0, 0.0), |(ar, ac), &(r, c)| (ar + r as f64, ac + c as f64));
    let (mr, mc) = (mr / n, mc / n);
    for &(r, c) in &set {
        let dr = (center.0 + (r as f64 - mr)).round();
        let dc = (center.1 + (c as f64 - mc)).round();
        if dr >= 0.0 && dc >= 0.0 && (dr as u32) < height && (dc as u32) < width {
            overlay[dr as usize * width as usize + dc as usize] = Some(occ_frame.get(r, c));
        }
    }
    overlay
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid_sample(
        w: u32,
        h: u32,
        fg_color: [u8; 3],
        bg_color: [u8; 3],
        fg_rows: std::ops::Range<u32>,
    ) -> (Frame, BinaryMask) {
        let mut frame = Frame::filled(w, h, bg_color).unwrap();
        let mut mask = BinaryMask::new(w, h).unwrap();
        for r in fg_rows {
            for c in 0..w {
                frame.set(r, c, fg_color);
                mask.set(r, c, true);
            }
        }
        (frame, mask)
    }

    #[test]
    fn separable_colors_classify_cleanly() {
        // Large enough that counts dominate the add-one smoothing spread
        // across all 4096 bins.
        let (frame, mask) = solid_sample(64, 64, [220, 60, 20], [40, 160, 70], 16..40);
        let model = fit_appearance(&[(frame.clone(), mask.clone())]).unwrap();
        assert!(model.posterior_for_color([220, 60, 20]) > 0.99);
        assert!(model.posterior_for_color([40, 160, 70]) < 0.01);
        let pred = model.predict_robot_mask(&frame);
        assert_eq!(pred, mask);
    }

    #[test]
    fn identical_color_distributions_fall_back_to_prior() {
        // Foreground and background share one color and have equal pixel
        // counts, so the likelihoods cancel exactly.
        let (frame, mask) = solid_sample(16, 16, [90, 90, 90], [90, 90, 90], 0..8);
        let model = fit_appearance(&[(frame, mask)]).unwrap();
        let p = model.posterior_for_color([90, 90, 90]);
        assert!((p - model.prior()).abs() < 1e-12);
        assert!(model.prior() > 0.0 && model.prior() < 1.0);
    }

    #[test]
    fn prior_tracks_mask_fraction() {
        let (frame, mask) = solid_sample(16, 16, [220, 60, 20], [40, 160, 70], 0..4);
        let model = fit_appearance(&[(frame, mask)]).unwrap();
        assert!((model.prior() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn all_empty_masks_error() {
        let frame = Frame::filled(8, 8, [10, 10, 10]).unwrap();
        let mask = BinaryMask::new(8, 8).unwrap();
        assert!(matches!(
            fit_appearance(&[(frame, mask)]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn no_samples_is_invalid() {
        assert!(fit_appearance(&[]).is_err());
    }

    #[test]
    fn occluder_colors_become_background_evidence() {
        let (frame, mask) = solid_sample(32, 32, [220, 60, 20], [40, 160, 70], 8..24);
        let plain = fit_appearance(&[(frame.clone(), mask.clone())]).unwrap();
        // A color absent from training is nearly a coin flip under the
        // smoothed likelihoods.
        let unseen = [120, 40, 200];
        let occluder = (
            Frame::filled(6, 6, unseen).unwrap(),
            BinaryMask::from_bits(6, 6, vec![true; 36]).unwrap(),
        );
        let options = FitOptions {
            occluder_aware: true,
            ..FitOptions::default()
        };
        let aware =
            fit_appearance_with(&[(frame, mask)], &options, &[(16.0, 16.0)], &[occluder])
                .unwrap();
        assert!(aware.posterior_for_color(unseen) < 0.05);
        assert!(aware.posterior_for_color(unseen) < plain.posterior_for_color(unseen));
        // Arm color stays arm.
        assert!(aware.posterior_for_color([220, 60, 20]) > 0.9);
    }

    #[test]
    fn gripper_weighting_boosts_near_spot_evidence() {
        // Half the frame is arm. A contested color appears 8 times in the
        // arm half right on the spot and 8 times in the background half far
        // away, so without weighting the posterior is exactly the 0.5 prior.
        // Weighting the spot neighborhood must tip it toward the arm.
        let w = 64;
        let arm = [220, 60, 20];
        let bg = [40, 160, 70];
        let contested = [200, 200, 40];
        let mut frame = Frame::filled(w, w, bg).unwrap();
        let mut mask = BinaryMask::new(w, w).unwrap();
        for r in 0..32 {
            for c in 0..w {
                frame.set(r, c, arm);
                mask.set(r, c, true);
            }
        }
        for c in 0..8 {
            frame.set(1, c, contested);
            frame.set(62, 50 + c, contested);
        }
        let plain = fit_appearance(&[(frame.clone(), mask.clone())]).unwrap();
        assert!((plain.posterior_for_color(contested) - 0.5).abs() < 1e-12);
        let options = FitOptions {
            gripper_weighting: true,
            weight_sigma: 10.0,
            ..FitOptions::default()
        };
        let weighted =
            fit_appearance_with(&[(frame, mask)], &options, &[(1.0, 4.0)], &[]).unwrap();
        assert!(
            weighted.posterior_for_color(contested) > plain.posterior_for_color(contested)
        );
        assert!(weighted.posterior_for_color(contested) > 0.5);
    }

    #[test]
    fn weight_formula_bounds() {
        assert!((gripper_weight(0.0, 50.0, 3.0) - 3.0).abs() < 1e-12);
        assert!((gripper_weight(1e9, 50.0, 3.0) - 1.0).abs() < 1e-9);
        let mid = gripper_weight(50.0, 50.0, 3.0);
        assert!(mid > 1.0 && mid < 3.0);
        // One sigma out: 1 + 2*exp(-1/2).
        assert!((mid - (1.0 + 2.0 * (-0.5f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn options_requiring_spot_error_without_one() {
        let (frame, mask) = solid_sample(8, 8, [220, 60, 20], [40, 160, 70], 0..4);
        let options = FitOptions {
            gripper_weighting: true,
            ..FitOptions::default()
        };
        assert!(fit_appearance_with(&[(frame, mask)], &options, &[], &[]).is_err());
    }
}
