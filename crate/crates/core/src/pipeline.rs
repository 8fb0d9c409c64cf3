//! End-to-end benchmark: render a synthetic workcell, self-calibrate the
//! arm appearance model from motion, segment grasped objects, and score the
//! result against two change-detection baselines plus a component ablation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{cd_of, cd_rgb, CdRgbConfig};
use crate::dataset::{Bundle, GripperPairData, SequenceData, SequenceManifest};
use crate::error::{Error, Result};
use crate::evaluation::{
    AblationAccumulator, AblationFrame, AblationRow, MaskMetrics, PixelCounts,
};
use crate::flow::FlowParams;
use crate::imaging::{BinaryMask, Frame};
use crate::motion::{sequence_motion_masks, FlowMaskMode};
use crate::object::{nimply, postprocess, SegmentationConfig};
use crate::robot::{
    detect_gripper_spot, fit_appearance, fit_appearance_with, harvest_arm_masks,
    ArmAppearanceModel, ArmSample, FitOptions, GripperSpot,
};
use crate::sim::{
    jitter_trajectory, render_gripper_pair, render_occluder_sprite, render_sequence, splitmix64,
    GroundTruth, ObjectSpec, SceneSpec,
};
use crate::trajectory::{default_trajectory, EllipseSpec, TrajectoryPose, Vec3};

/// The simulated camera looks straight down the world z axis.
pub const CAMERA_DIR: Vec3 = [0.0, 0.0, 1.0];

// Seed salts for the independent random streams of one benchmark run. Kept
// apart so adding objects or pairs never perturbs the other streams.
const SEED_HARVEST: u64 = 0x11;
const SEED_REPOSE_JITTER: u64 = 0x22;
const SEED_REPOSE_NOISE: u64 = 0x33;
const SEED_PAIR_BASE: u64 = 0x100;
const SEED_OBJECT_BASE: u64 = 0x200;

/// Full description of a benchmark run. Serializable so a run can be
/// reproduced from its resolved config alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub scene: SceneSpec,
    /// Objects the gripper carries, one evaluation sequence each.
    pub objects: Vec<ObjectSpec>,
    /// Sprites pasted over the gripper spot while fitting the appearance
    /// model, standing in for the not-yet-seen objects.
    pub occluders: Vec<ObjectSpec>,
    /// Sphere directions; each is visited twice (plain and rolled 180).
    pub n_directions: usize,
    pub ellipse: EllipseSpec,
    /// Repositioning error between the two arm-only traversals, in pixels.
    pub repose_sigma_px: f64,
    /// Exposure gain of the second traversal relative to the first. Passes
    /// recorded minutes apart rarely share an exposure; plain color
    /// differencing is sensitive to this, flow magnitudes are not.
    pub repose_gain: f64,
    /// Shoulder follow fraction used only while collecting training
    /// frames. The training sweep moves the whole arm so every link shows
    /// up in the motion masks; evaluation passes keep the shoulder parked.
    pub harvest_follow: f64,
    pub seed: u64,
    pub segmentation: SegmentationConfig,
    pub cd_rgb: CdRgbConfig,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default(),
            objects: default_objects(),
            occluders: default_occluders(),
            n_directions: 30,
            // Arc-length stop spacing keeps the per-frame gripper step
            // uniform. Equal-angle stops cluster near the major axis ends;
            // the slow frames there depress the motion threshold enough
            // to pull boundary halos into the mask.
            ellipse: EllipseSpec {
                arc_length_spacing: true,
                ..EllipseSpec::default()
            },
            repose_sigma_px: 4.0,
            repose_gain: 1.075,
            harvest_follow: 1.0,
            seed: 2026,
            segmentation: SegmentationConfig::default(),
            cd_rgb: CdRgbConfig::default(),
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.ellipse.validate()?;
        if self.objects.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark needs at least one object".to_string(),
            ));
        }
        for obj in self.objects.iter().chain(self.occluders.iter()) {
            obj.validate()?;
        }
        if self.occluders.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark needs at least one occluder sprite".to_string(),
            ));
        }
        if self.n_directions == 0 {
            return Err(Error::InvalidParameter(
                "n_directions must be positive".to_string(),
            ));
        }
        if self.ellipse.n_points > 2 * self.n_directions {
            return Err(Error::InvalidParameter(
                "more ellipse stops than trajectory poses".to_string(),
            ));
        }
        if !(self.repose_sigma_px.is_finite() && self.repose_sigma_px >= 0.0) {
            return Err(Error::InvalidParameter(
                "repose_sigma_px must be finite and non-negative".to_string(),
            ));
        }
        if !(self.harvest_follow.is_finite() && (0.0..=2.0).contains(&self.harvest_follow)) {
            return Err(Error::InvalidParameter(
                "harvest_follow must lie in [0, 2]".to_string(),
            ));
        }
        if !(self.repose_gain.is_finite() && (0.5..=2.0).contains(&self.repose_gain)) {
            return Err(Error::InvalidParameter(
                "repose_gain must lie in [0.5, 2]".to_string(),
            ));
        }
        Ok(())
    }
}

/// Ten pick-up targets in colors well away from the workcell palette.
pub fn default_objects() -> Vec<ObjectSpec> {
    let colors: [[u8; 3]; 10] = [
        [210, 60, 170],
        [60, 180, 200],
        [150, 210, 60],
        [240, 200, 60],
        [140, 70, 230],
        [230, 80, 70],
        [70, 220, 140],
        [90, 130, 240],
        [240, 150, 190],
        [170, 160, 60],
    ];
    colors
        .iter()
        .enumerate()
        .map(|(k, &color)| ObjectSpec {
            color,
            seed: 1000 + k as u64,
            ..ObjectSpec::default()
        })
        .collect()
}

/// Five small colorful sprites; kept well under object size so they mask
/// the grasp region without eating too much of the jaws' own evidence.
pub fn default_occluders() -> Vec<ObjectSpec> {
    let colors: [[u8; 3]; 5] = [
        [220, 70, 120],
        [70, 200, 210],
        [200, 180, 70],
        [120, 90, 220],
        [220, 120, 60],
    ];
    colors
        .iter()
        .enumerate()
        .map(|(k, &color)| ObjectSpec {
            radius: 9.0,
            aspect: 0.9,
            wobble: 0.15,
            color,
            texture_cell: 3.0,
            texture_amp: 30,
            seed: 2000 + k as u64,
            ..ObjectSpec::default()
        })
        .collect()
}

/// The pose list every sequence of the run is rendered along.
pub fn benchmark_trajectory(spec: &BenchmarkSpec) -> Result<Vec<TrajectoryPose>> {
    default_trajectory(spec.n_directions, &spec.ellipse, CAMERA_DIR)
}

fn frames_only(seq: Vec<(Frame, GroundTruth)>) -> Vec<Frame> {
    seq.into_iter().map(|(f, _)| f).collect()
}

/// Scales every channel by `gain`, saturating at the byte range.
fn expose_frame(frame: &Frame, gain: f64) -> Result<Frame> {
    if (gain - 1.0).abs() < 1e-12 {
        return Ok(frame.clone());
    }
    let px = frame
        .pixels()
        .iter()
        .map(|&p| (p as f64 * gain).round().clamp(0.0, 255.0) as u8)
        .collect();
    Frame::new(frame.width(), frame.height(), px)
}

fn render_pairs(spec: &BenchmarkSpec, poses: &[TrajectoryPose]) -> Result<Vec<GripperPairData>> {
    let mut pairs = Vec::with_capacity(spec.ellipse.n_points);
    for j in 0..spec.ellipse.n_points {
        let pair = render_gripper_pair(
            &spec.scene,
            &poses[j],
            splitmix64(spec.seed ^ (SEED_PAIR_BASE + j as u64)),
        )?;
        pairs.push(GripperPairData {
            stop: j,
            open: pair.open,
            closed: pair.closed,
            jaws: Some(pair.jaws),
        });
    }
    Ok(pairs)
}

/// Render the whole dataset of one run into memory. `run_benchmark` does
/// not go through this (it streams object sequences instead); this is for
/// writing a dataset to disk and re-running parts of it later.
pub fn simulate_bundle(spec: &BenchmarkSpec) -> Result<Bundle> {
    spec.validate()?;
    let poses = benchmark_trajectory(spec)?;
    let scene = &spec.scene;

    let sequence_data = |pairs: Vec<(Frame, GroundTruth)>, object: Option<&ObjectSpec>| {
        let manifest = SequenceManifest {
            kind: "sequence".to_string(),
            width: scene.width,
            height: scene.height,
            count: pairs.len(),
            grasped: object.is_some(),
            object: object.cloned(),
        };
        let (frames, gt): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        SequenceData {
            frames,
            gt: Some(gt),
            manifest,
        }
    };

    let mut harvest_scene = scene.clone();
    harvest_scene.arm.follow = spec.harvest_follow;
    let no_object = sequence_data(
        render_sequence(
            &harvest_scene,
            &poses,
            None,
            splitmix64(spec.seed ^ SEED_HARVEST),
        )?,
        None,
    );
    let repose_poses = jitter_trajectory(
        &poses,
        spec.repose_sigma_px,
        scene.pixels_per_meter,
        splitmix64(spec.seed ^ SEED_REPOSE_JITTER),
    );
    let no_object_repose = sequence_data(
        render_sequence(
            scene,
            &repose_poses,
            None,
            splitmix64(spec.seed ^ SEED_REPOSE_NOISE),
        )?
        .into_iter()
        .map(|(f, gt)| Ok((expose_frame(&f, spec.repose_gain)?, gt)))
        .collect::<Result<Vec<_>>>()?,
        None,
    );
    let mut objects = Vec::with_capacity(spec.objects.len());
    for (k, obj) in spec.objects.iter().enumerate() {
        objects.push(sequence_data(
            render_sequence(
                scene,
                &poses,
                Some(obj),
                splitmix64(spec.seed ^ (SEED_OBJECT_BASE + k as u64)),
            )?,
            Some(obj),
        ));
    }
    let pairs = render_pairs(spec, &poses)?;
    let occluders = spec
        .occluders
        .iter()
        .map(render_occluder_sprite)
        .collect::<Result<Vec<_>>>()?;
    Ok(Bundle {
        scene: scene.clone(),
        no_object,
        no_object_repose: Some(no_object_repose),
        objects,
        pairs,
        occluders,
    })
}

pub fn simulate_bundle_to_dir(spec: &BenchmarkSpec, dir: &Path) -> Result<()> {
    simulate_bundle(spec)?.save(dir)
}

/// One jaw detection per calibration pair. The result is indexed by stop:
/// `spots[j]` belongs to ellipse stop `j`, and frame `t` of a traversal uses
/// `spots[t % spots.len()]`.
pub fn detect_spots(pairs: &[GripperPairData], params: &FlowParams) -> Result<Vec<GripperSpot>> {
    let mut spots = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mut spot = detect_gripper_spot(&pair.open, &pair.closed, params)?;
        spot.pose_index = pair.stop;
        spots.push(spot);
    }
    spots.sort_by_key(|s| s.pose_index);
    for (j, spot) in spots.iter().enumerate() {
        if spot.pose_index != j {
            return Err(Error::Data(format!(
                "gripper pairs must cover stops 0..{} exactly, found stop {}",
                spots.len(),
                spot.pose_index
            )));
        }
    }
    if spots.is_empty() {
        return Err(Error::Data("no gripper pairs to detect spots from".into()));
    }
    Ok(spots)
}

/// The three appearance fits compared by the ablation, strongest first.
#[derive(Debug, Clone)]
pub struct AppearanceFits {
    /// Occluder pasting plus gripper-distance weighting.
    pub full: ArmAppearanceModel,
    /// Occluder pasting only.
    pub no_weighting: ArmAppearanceModel,
    /// Raw motion-harvested masks.
    pub plain: ArmAppearanceModel,
}

fn spot_centers_for(samples: &[ArmSample], spots: &[GripperSpot]) -> Vec<(f64, f64)> {
    samples
        .iter()
        .map(|s| spots[s.frame_index % spots.len()].center)
        .collect()
}

pub fn fit_models(
    samples: &[ArmSample],
    spots: &[GripperSpot],
    occluders: &[(Frame, BinaryMask)],
) -> Result<AppearanceFits> {
    if spots.is_empty() {
        return Err(Error::InvalidParameter(
            "appearance fitting needs at least one gripper spot".to_string(),
        ));
    }
    let pairs: Vec<(Frame, BinaryMask)> = samples
        .iter()
        .map(|s| (s.frame.clone(), s.mask.clone()))
        .collect();
    let centers = spot_centers_for(samples, spots);
    let full = fit_appearance_with(
        &pairs,
        &FitOptions {
            occluder_aware: true,
            gripper_weighting: true,
            ..FitOptions::default()
        },
        &centers,
        occluders,
    )?;
    let no_weighting = fit_appearance_with(
        &pairs,
        &FitOptions {
            occluder_aware: true,
            gripper_weighting: false,
            ..FitOptions::default()
        },
        &centers,
        occluders,
    )?;
    let plain = fit_appearance(&pairs)?;
    Ok(AppearanceFits {
        full,
        no_weighting,
        plain,
    })
}

/// Segment every frame of a grasping traversal with an already-fitted model.
/// Frame `t` is matched to `spots[t % spots.len()]`, which assumes the
/// traversal visits the ellipse stops in order, as built trajectories do.
pub fn segment_sequence(
    frames: &[Frame],
    model: &ArmAppearanceModel,
    spots: &[GripperSpot],
    config: &SegmentationConfig,
) -> Result<Vec<BinaryMask>> {
    if spots.is_empty() {
        return Err(Error::InvalidParameter(
            "segmentation needs at least one gripper spot".to_string(),
        ));
    }
    let motion = sequence_motion_masks(frames, &config.flow)?;
    let mut out = Vec::with_capacity(frames.len());
    for (t, frame) in frames.iter().enumerate() {
        let fused = motion.fused(t, config.flow_mode)?;
        let robot = model.predict_robot_mask(frame);
        let raw = nimply(&fused, &robot)?;
        out.push(postprocess(
            &raw,
            spots[t % spots.len()].center,
            &config.post,
        ));
    }
    Ok(out)
}

/// Scores of one object sequence under the three methods.
#[derive(Debug, Clone, Serialize)]
pub struct ObjectScore {
    pub label: String,
    pub ours: MaskMetrics,
    pub cd_of: MaskMetrics,
    pub cd_rgb: MaskMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkOutcome {
    pub per_object: Vec<ObjectScore>,
    pub mean_iou_ours: f64,
    pub mean_iou_cd_of: f64,
    pub mean_iou_cd_rgb: f64,
    /// Full-fit robot prediction scored against the true robot pixels,
    /// pooled over every grasping frame.
    pub arm: MaskMetrics,
    /// Fraction of true object pixels the robot model claims.
    pub object_marked_robot: f64,
    pub ablation: Vec<AblationRow>,
    /// Intersection fused masks stayed inside forward-only, and those inside
    /// union, on every frame of every object sequence.
    pub fusion_containment_ok: bool,
    /// Training frames that survived the minimum-motion filter.
    pub harvest_samples: usize,
}

pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkOutcome> {
    run_benchmark_with(spec, &mut |_| {})
}

/// `progress` is called with a short label as each expensive phase starts.
pub fn run_benchmark_with(
    spec: &BenchmarkSpec,
    progress: &mut dyn FnMut(&str),
) -> Result<BenchmarkOutcome> {
    spec.validate()?;
    let poses = benchmark_trajectory(spec)?;
    let scene = &spec.scene;
    let flow = &spec.segmentation.flow;
    let mode = spec.segmentation.flow_mode;
    let post = &spec.segmentation.post;

    progress("rendering arm-only traversals");
    let mut harvest_scene = scene.clone();
    harvest_scene.arm.follow = spec.harvest_follow;
    let harvest_frames = frames_only(render_sequence(
        &harvest_scene,
        &poses,
        None,
        splitmix64(spec.seed ^ SEED_HARVEST),
    )?);
    let repose_poses = jitter_trajectory(
        &poses,
        spec.repose_sigma_px,
        scene.pixels_per_meter,
        splitmix64(spec.seed ^ SEED_REPOSE_JITTER),
    );
    let repose_frames = frames_only(render_sequence(
        scene,
        &repose_poses,
        None,
        splitmix64(spec.seed ^ SEED_REPOSE_NOISE),
    )?)
    .iter()
    .map(|f| expose_frame(f, spec.repose_gain))
    .collect::<Result<Vec<_>>>()?;

    progress("detecting gripper spots");
    let pairs = render_pairs(spec, &poses)?;
    let spots = detect_spots(&pairs, flow)?;
    drop(pairs);

    progress("harvesting training masks");
    let samples = harvest_arm_masks(&harvest_frames, flow)?;
    let harvest_samples = samples.len();
    drop(harvest_frames);

    progress("fitting appearance models");
    let occluders = spec
        .occluders
        .iter()
        .map(render_occluder_sprite)
        .collect::<Result<Vec<_>>>()?;
    let fits = fit_models(&samples, &spots, &occluders)?;
    drop(samples);

    progress("reference motion masks");
    let ref_motion = sequence_motion_masks(&repose_frames, flow)?;
    let ref_fused = (0..repose_frames.len())
        .map(|t| ref_motion.fused(t, mode))
        .collect::<Result<Vec<_>>>()?;
    drop(ref_motion);

    let mut acc = AblationAccumulator::new(post.clone());
    let mut per_object = Vec::with_capacity(spec.objects.len());
    let mut arm_counts = PixelCounts::default();
    let mut object_overlap: u64 = 0;
    let mut object_total: u64 = 0;
    let mut containment = true;

    for (k, obj) in spec.objects.iter().enumerate() {
        progress(&format!("object {k:02}"));
        let seq = render_sequence(
            scene,
            &poses,
            Some(obj),
            splitmix64(spec.seed ^ (SEED_OBJECT_BASE + k as u64)),
        )?;
        let (frames, gts): (Vec<Frame>, Vec<GroundTruth>) = seq.into_iter().unzip();
        let motion = sequence_motion_masks(&frames, flow)?;

        let mut ours = PixelCounts::default();
        let mut of_counts = PixelCounts::default();
        let mut rgb_counts = PixelCounts::default();
        let mut ablation_frames = Vec::with_capacity(frames.len());

        for t in 0..frames.len() {
            let spot = &spots[t % spots.len()];
            let gt = &gts[t];
            let robot_full = fits.full.predict_robot_mask(&frames[t]);
            let robot_nw = fits.no_weighting.predict_robot_mask(&frames[t]);
            let robot_plain = fits.plain.predict_robot_mask(&frames[t]);

            let fwd_only = motion.fused(t, FlowMaskMode::ForwardOnly)?;
            let inter = motion.fused(t, FlowMaskMode::Intersection)?;
            let uni = motion.fused(t, FlowMaskMode::Union)?;
            containment &= inter.is_subset_of(&fwd_only)? && fwd_only.is_subset_of(&uni)?;
            let fused = match mode {
                FlowMaskMode::ForwardOnly => &fwd_only,
                FlowMaskMode::Intersection => &inter,
                FlowMaskMode::Union => &uni,
            };

            let pred = postprocess(&nimply(fused, &robot_full)?, spot.center, post);
            ours.add_pair(&pred, &gt.object)?;
            let pred_of = cd_of(fused, &ref_fused[t], spot.center, post)?;
            of_counts.add_pair(&pred_of, &gt.object)?;
            let pred_rgb = cd_rgb(&frames[t], &repose_frames[t], &spec.cd_rgb)?;
            rgb_counts.add_pair(&pred_rgb, &gt.object)?;

            arm_counts.add_pair(&robot_full, &gt.arm)?;
            object_overlap += robot_full.intersection(&gt.object)?.area() as u64;
            object_total += gt.object.area() as u64;

            ablation_frames.push(AblationFrame {
                forward: motion.forward[t].clone(),
                backward: motion.backward[t].clone(),
                robot: [robot_full, robot_nw, robot_plain],
                gt_object: gt.object.clone(),
                spot_center: spot.center,
            });
        }
        acc.add_object(&ablation_frames)?;
        per_object.push(ObjectScore {
            label: format!("obj{k:02}"),
            ours: ours.metrics(),
            cd_of: of_counts.metrics(),
            cd_rgb: rgb_counts.metrics(),
        });
    }

    let n = per_object.len() as f64;
    let mean_iou_ours = per_object.iter().map(|s| s.ours.iou).sum::<f64>() / n;
    let mean_iou_cd_of = per_object.iter().map(|s| s.cd_of.iou).sum::<f64>() / n;
    let mean_iou_cd_rgb = per_object.iter().map(|s| s.cd_rgb.iou).sum::<f64>() / n;
    let object_marked_robot = if object_total == 0 {
        0.0
    } else {
        object_overlap as f64 / object_total as f64
    };

    Ok(BenchmarkOutcome {
        per_object,
        mean_iou_ours,
        mean_iou_cd_of,
        mean_iou_cd_rgb,
        arm: arm_counts.metrics(),
        object_marked_robot,
        ablation: acc.finish()?,
        fusion_containment_ok: containment,
        harvest_samples,
    })
}
