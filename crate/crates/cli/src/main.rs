//! Command-line surface over the segmentation library: render synthetic
//! datasets, segment them with the self-supervised method or the
//! change-detection baselines, score predictions, run the ablation grid,
//! export trajectories and composite training samples.
//!
//! Every command writes a resolved-config JSON next to its outputs with every
//! parameter it actually used; `graspseg rerun <that file>` replays the run
//! and reproduces the outputs bit for bit. Exit codes: 0 success, 2 usage or
//! configuration error, 3 data error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use graspseg::baselines::{cd_of, cd_rgb, CdRgbConfig};
use graspseg::dataset::{read_gripper_pairs, write_masks, write_sequence, Bundle};
use graspseg::evaluation::{
    ablation_csv, evaluate_sequence, run_ablation, AblationFrame, ClassReport, EvaluationReport,
};
use graspseg::flow::FlowParams;
use graspseg::imaging::io::write_pgm;
use graspseg::imaging::{load_frame_png, mask_from_pgm, BinaryMask, Frame};
use graspseg::motion::{sequence_motion_masks, FlowMaskMode};
use graspseg::object::{PostProcessConfig, SegmentationConfig};
use graspseg::pipeline::{
    detect_spots, fit_models, segment_sequence, simulate_bundle_to_dir, BenchmarkSpec, CAMERA_DIR,
};
use graspseg::robot::{
    compose_training_sample, fit_appearance, harvest_arm_masks, write_weight_map, ComposeParams,
};
use graspseg::sim::{render_sequence, splitmix64, ObjectSpec, SceneSpec};
use graspseg::trajectory::{
    default_trajectory, trajectory_to_json, EllipseSpec, Vec3, DEFAULT_ELLIPSE_POINTS,
    DEFAULT_SPHERE_POINTS,
};

#[derive(Parser)]
#[command(name = "graspseg", version, about = "Self-supervised grasped-object segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic traversal with exact ground-truth masks.
    Simulate(SimulateArgs),
    /// Segment the grasped-object sequences of a dataset bundle.
    Segment(SegmentConfig),
    /// Score prediction masks against ground truth.
    Evaluate(EvaluateConfig),
    /// Cumulative-drop ablation over a dataset bundle, CSV output.
    Ablate(AblateConfig),
    /// Export the sphere-plus-ellipse scanning trajectory as JSON.
    Trajectory(TrajectoryArgs),
    /// Composite training samples from harvested arm masks.
    Compose(ComposeConfig),
    /// Replay a resolved-config JSON written by a previous run.
    Rerun(RerunArgs),
}

/// Errors split by exit code: configuration mistakes exit 2, broken or
/// missing data exits 3.
enum CmdError {
    Config(String),
    Data(String),
}

type CmdResult<T> = Result<T, CmdError>;

impl From<graspseg::Error> for CmdError {
    fn from(e: graspseg::Error) -> Self {
        CmdError::Data(e.to_string())
    }
}

fn config_err<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(CmdError::Config(msg.into()))
}

fn data_err<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(CmdError::Data(msg.into()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CmdResult<()> {
    match cli.command {
        Command::Simulate(args) => exec_simulate(&args.into_config()?),
        Command::Segment(cfg) => exec_segment(&cfg),
        Command::Evaluate(cfg) => exec_evaluate(&cfg),
        Command::Ablate(cfg) => exec_ablate(&cfg),
        Command::Trajectory(args) => exec_trajectory(&args.into_config()?),
        Command::Compose(cfg) => exec_compose(&cfg),
        Command::Rerun(args) => exec_rerun(&args),
    }
}

// ------------------------------------------------------------ shared plumbing

/// Full parameter set of a finished run, written next to the outputs and
/// replayable with `rerun`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "snake_case")]
enum ResolvedConfig {
    Simulate(SimulateConfig),
    Segment(SegmentConfig),
    Evaluate(EvaluateConfig),
    Ablate(AblateConfig),
    Trajectory(TrajectoryConfig),
    Compose(ComposeConfig),
}

impl ResolvedConfig {
    fn redirect_output(&mut self, out: PathBuf) {
        match self {
            ResolvedConfig::Simulate(c) => c.out = out,
            ResolvedConfig::Segment(c) => c.out = out,
            ResolvedConfig::Evaluate(c) => c.report = out,
            ResolvedConfig::Ablate(c) => c.out = out,
            ResolvedConfig::Trajectory(c) => c.out = out,
            ResolvedConfig::Compose(c) => c.out = out,
        }
    }
}

fn read_config_json<T: DeserializeOwned>(path: &Path, what: &str) -> CmdResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::Config(format!("{what} {}: {e}", path.display())))
}

fn write_output_file(path: &Path, contents: &[u8]) -> CmdResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CmdError::Data(format!("creating {}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CmdError::Data(format!("writing {}: {e}", path.display())))
}

fn write_output_json<T: Serialize>(value: &T, path: &Path) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Data(format!("serializing {}: {e}", path.display())))?;
    write_output_file(path, text.as_bytes())
}

/// Directory outputs get `resolved_config.json` inside; file outputs get a
/// `<stem>.resolved_config.json` sibling.
fn write_resolved(cfg: &ResolvedConfig, output: &Path, output_is_dir: bool) -> CmdResult<()> {
    let path = if output_is_dir {
        output.join("resolved_config.json")
    } else {
        let stem = output
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("run");
        output.with_file_name(format!("{stem}.resolved_config.json"))
    };
    write_output_json(cfg, &path)
}

/// PGM file names in `dir`, sorted; empty when the directory cannot be read.
fn pgm_names(dir: &Path) -> Vec<String> {
    files_with_extension(dir, "pgm")
}

fn files_with_extension(dir: &Path, ext: &str) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.path().extension().and_then(|x| x.to_str()) == Some(ext))
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .collect();
    names.sort();
    names
}

fn exec_rerun(args: &RerunArgs) -> CmdResult<()> {
    let mut cfg: ResolvedConfig = read_config_json(&args.config, "resolved config")?;
    if let Some(out) = &args.out {
        cfg.redirect_output(out.clone());
    }
    match cfg {
        ResolvedConfig::Simulate(c) => exec_simulate(&c),
        ResolvedConfig::Segment(c) => exec_segment(&c),
        ResolvedConfig::Evaluate(c) => exec_evaluate(&c),
        ResolvedConfig::Ablate(c) => exec_ablate(&c),
        ResolvedConfig::Trajectory(c) => exec_trajectory(&c),
        ResolvedConfig::Compose(c) => exec_compose(&c),
    }
}

#[derive(Args)]
struct RerunArgs {
    /// Resolved-config JSON written by a previous run.
    config: PathBuf,
    /// Redirect the run's output directory or file.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ------------------------------------------------------------------- simulate

#[derive(Args)]
struct SimulateArgs {
    /// Scene description JSON (unknown keys rejected).
    scene: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Trajectory poses to render (default one frame per pose).
    #[arg(long, default_value_t = 60)]
    poses: usize,
    /// Master RNG seed.
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Held-object JSON; omitted renders the arm alone.
    #[arg(long)]
    object: Option<PathBuf>,
}

/// The simulate parameters after resolving file references, so a rerun does
/// not depend on the original scene file still existing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    scene: SceneSpec,
    object: Option<ObjectSpec>,
    poses: usize,
    seed: u64,
    out: PathBuf,
}

impl SimulateArgs {
    fn into_config(self) -> CmdResult<SimulateConfig> {
        let scene: SceneSpec = read_config_json(&self.scene, "scene file")?;
        let object: Option<ObjectSpec> = match &self.object {
            Some(path) => Some(read_config_json(path, "object file")?),
            None => None,
        };
        Ok(SimulateConfig {
            scene,
            object,
            poses: self.poses,
            seed: self.seed,
            out: self.out,
        })
    }
}

fn exec_simulate(cfg: &SimulateConfig) -> CmdResult<()> {
    if cfg.poses == 0 {
        return config_err("--poses must be at least 1");
    }
    cfg.scene
        .validate()
        .map_err(|e| CmdError::Config(format!("invalid scene: {e}")))?;
    if let Some(obj) = &cfg.object {
        obj.validate()
            .map_err(|e| CmdError::Config(format!("invalid object: {e}")))?;
    }
    // Two passes per direction, so poses/2 directions rounded up covers any
    // requested length. Stop spacing matches the benchmark default.
    let ellipse = EllipseSpec {
        arc_length_spacing: true,
        ..EllipseSpec::default()
    };
    let trajectory = default_trajectory(cfg.poses.div_ceil(2), &ellipse, CAMERA_DIR)?;
    let seq = render_sequence(
        &cfg.scene,
        &trajectory[..cfg.poses],
        cfg.object.as_ref(),
        splitmix64(cfg.seed),
    )?;
    write_sequence(&cfg.out, &seq, cfg.object.as_ref())?;
    write_resolved(&ResolvedConfig::Simulate(cfg.clone()), &cfg.out, true)?;
    println!(
        "wrote {} frames with ground truth to {}",
        cfg.poses,
        cfg.out.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- segment

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    /// Motion mask minus the appearance-model robot mask, post-processed.
    Ours,
    /// Color differencing against the reposed arm-only traversal.
    #[value(name = "cd_rgb")]
    CdRgb,
    /// Flow-mask differencing against the reposed arm-only traversal.
    #[value(name = "cd_of")]
    CdOf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FlowModeArg {
    Forward,
    Intersection,
    Union,
}

impl From<FlowModeArg> for FlowMaskMode {
    fn from(m: FlowModeArg) -> Self {
        match m {
            FlowModeArg::Forward => FlowMaskMode::ForwardOnly,
            FlowModeArg::Intersection => FlowMaskMode::Intersection,
            FlowModeArg::Union => FlowMaskMode::Union,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentConfig {
    /// Dataset bundle directory (as written by `simulate` bundles).
    #[arg(long)]
    dataset: PathBuf,
    /// Segmentation method.
    #[arg(long, value_enum, default_value_t = Method::Ours)]
    method: Method,
    /// Fusion of the forward and backward flow masks.
    #[arg(long, value_enum, default_value_t = FlowModeArg::Union)]
    flow_mode: FlowModeArg,
    /// Keep components that touch the frame border.
    #[arg(long)]
    #[serde(default)]
    no_border_del: bool,
    /// Max component-to-gripper distance in px at reference resolution.
    #[arg(long, default_value_t = 100.0)]
    grip_dist: f64,
    /// Min component area in px at reference resolution.
    #[arg(long, default_value_t = 2500.0)]
    min_area: f64,
    /// Output directory, one subdirectory per object sequence.
    #[arg(long)]
    out: PathBuf,
}

/// Per-frame companion to each written mask.
#[derive(Serialize)]
struct MaskSidecar {
    frame: usize,
    area: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spot_center: Option<(f64, f64)>,
}

fn write_mask_outputs(
    dir: &Path,
    masks: &[BinaryMask],
    spots: impl Fn(usize) -> Option<(f64, f64)>,
) -> CmdResult<()> {
    write_masks(dir, masks)?;
    for (i, mask) in masks.iter().enumerate() {
        let sidecar = MaskSidecar {
            frame: i,
            area: mask.area(),
            spot_center: spots(i),
        };
        write_output_json(&sidecar, &dir.join(format!("{i:06}.json")))?;
    }
    Ok(())
}

fn exec_segment(cfg: &SegmentConfig) -> CmdResult<()> {
    if !(cfg.grip_dist >= 0.0 && cfg.grip_dist.is_finite()) {
        return config_err("--grip-dist must be finite and nonnegative");
    }
    if !(cfg.min_area >= 0.0 && cfg.min_area.is_finite()) {
        return config_err("--min-area must be finite and nonnegative");
    }
    let bundle = Bundle::load(&cfg.dataset)
        .map_err(|e| CmdError::Data(format!("dataset {}: {e}", cfg.dataset.display())))?;
    if bundle.objects.is_empty() {
        return data_err("dataset has no grasped-object sequences to segment");
    }
    let flow = FlowParams::default();
    let post = PostProcessConfig {
        border_deletion: !cfg.no_border_del,
        gripper_max_dist: cfg.grip_dist,
        min_area: cfg.min_area,
        keep_closest_always: false,
    };
    let mode = FlowMaskMode::from(cfg.flow_mode);

    match cfg.method {
        Method::Ours => {
            if bundle.no_object.frames.len() < 3 {
                return data_err(
                    "method ours needs an arm-only sequence of at least 3 frames \
                     to fit the appearance model",
                );
            }
            let spots = detect_spots(&bundle.pairs, &flow)?;
            let samples = harvest_arm_masks(&bundle.no_object.frames, &flow)?;
            // Occluder-aware fitting when the bundle ships sprites; plain
            // motion-mask fit otherwise.
            let model = if bundle.occluders.is_empty() {
                let pairs: Vec<(Frame, BinaryMask)> = samples
                    .iter()
                    .map(|s| (s.frame.clone(), s.mask.clone()))
                    .collect();
                fit_appearance(&pairs)?
            } else {
                fit_models(&samples, &spots, &bundle.occluders)?.full
            };
            let seg = SegmentationConfig {
                flow: flow.clone(),
                flow_mode: mode,
                post: post.clone(),
            };
            for (k, seq) in bundle.objects.iter().enumerate() {
                let masks = segment_sequence(&seq.frames, &model, &spots, &seg)?;
                write_mask_outputs(&cfg.out.join(format!("obj{k:02}")), &masks, |i| {
                    Some(spots[i % spots.len()].center)
                })?;
            }
        }
        Method::CdRgb => {
            let reference = require_repose(&bundle, "cd_rgb")?;
            let rgb_cfg = CdRgbConfig::default();
            for (k, seq) in bundle.objects.iter().enumerate() {
                check_paired_length(seq.frames.len(), reference.len(), k)?;
                let masks = seq
                    .frames
                    .iter()
                    .zip(reference)
                    .map(|(with, without)| cd_rgb(with, without, &rgb_cfg))
                    .collect::<Result<Vec<_>, _>>()?;
                write_mask_outputs(&cfg.out.join(format!("obj{k:02}")), &masks, |_| None)?;
            }
        }
        Method::CdOf => {
            let reference = require_repose(&bundle, "cd_of")?;
            let spots = detect_spots(&bundle.pairs, &flow)?;
            let ref_motion = sequence_motion_masks(reference, &flow)?;
            let ref_fused = (0..reference.len())
                .map(|t| ref_motion.fused(t, mode))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, seq) in bundle.objects.iter().enumerate() {
                check_paired_length(seq.frames.len(), reference.len(), k)?;
                let motion = sequence_motion_masks(&seq.frames, &flow)?;
                let mut masks = Vec::with_capacity(seq.frames.len());
                for t in 0..seq.frames.len() {
                    let fused = motion.fused(t, mode)?;
                    let spot = spots[t % spots.len()].center;
                    masks.push(cd_of(&fused, &ref_fused[t], spot, &post)?);
                }
                write_mask_outputs(&cfg.out.join(format!("obj{k:02}")), &masks, |i| {
                    Some(spots[i % spots.len()].center)
                })?;
            }
        }
    }
    write_resolved(&ResolvedConfig::Segment(cfg.clone()), &cfg.out, true)?;
    println!(
        "segmented {} sequences into {}",
        bundle.objects.len(),
        cfg.out.display()
    );
    Ok(())
}

fn require_repose<'a>(bundle: &'a Bundle, method: &str) -> CmdResult<&'a [Frame]> {
    match &bundle.no_object_repose {
        Some(seq) => Ok(&seq.frames),
        None => data_err(format!(
            "method {method} needs the paired object-free traversal \
             (no_object_repose/) and this dataset has none"
        )),
    }
}

fn check_paired_length(frames: usize, reference: usize, object: usize) -> CmdResult<()> {
    if frames > reference {
        return data_err(format!(
            "object sequence {object:02} has {frames} frames but the object-free \
             reference has only {reference}"
        ));
    }
    Ok(())
}

// ------------------------------------------------------------------- evaluate

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateConfig {
    /// Prediction masks: a directory of PGMs, or one subdirectory per class.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth masks, laid out like --pred. Sequence directories are
    /// accepted; their gt_object/ masks are used.
    #[arg(long)]
    gt: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    report: PathBuf,
}

/// A sequence directory scores against its object masks; anything else is a
/// flat mask directory.
fn gt_mask_dir(base: &Path) -> PathBuf {
    let nested = base.join("gt_object");
    if nested.is_dir() {
        nested
    } else {
        base.to_path_buf()
    }
}

fn evaluate_class(name: &str, pred_dir: &Path, gt_base: &Path) -> CmdResult<ClassReport> {
    let names = pgm_names(pred_dir);
    if names.is_empty() {
        return data_err(format!(
            "no prediction masks (*.pgm) in {}",
            pred_dir.display()
        ));
    }
    let gt_dir = gt_mask_dir(gt_base);
    let mut preds = Vec::with_capacity(names.len());
    let mut gts = Vec::with_capacity(names.len());
    for file in &names {
        preds.push(mask_from_pgm(&pred_dir.join(file))?);
        let gt_path = gt_dir.join(file);
        if !gt_path.is_file() {
            return data_err(format!("missing ground truth {}", gt_path.display()));
        }
        gts.push(mask_from_pgm(&gt_path)?);
    }
    Ok(ClassReport {
        class: name.to_string(),
        frames: names.len(),
        metrics: evaluate_sequence(&preds, &gts)?,
    })
}

fn exec_evaluate(cfg: &EvaluateConfig) -> CmdResult<()> {
    if !cfg.pred.is_dir() {
        return data_err(format!("prediction dir {} not found", cfg.pred.display()));
    }
    let mut classes = Vec::new();
    if pgm_names(&cfg.pred).is_empty() {
        // Class mode: one subdirectory of masks per class, matched by name
        // under --gt.
        let mut subdirs: Vec<String> = fs::read_dir(&cfg.pred)
            .map_err(|e| CmdError::Data(format!("{}: {e}", cfg.pred.display())))?
            .flatten()
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().to_str().map(String::from))
            .collect();
        subdirs.sort();
        if subdirs.is_empty() {
            return data_err(format!(
                "{} holds neither masks nor class subdirectories",
                cfg.pred.display()
            ));
        }
        for sub in subdirs {
            classes.push(evaluate_class(
                &sub,
                &cfg.pred.join(&sub),
                &cfg.gt.join(&sub),
            )?);
        }
    } else {
        let name = cfg
            .pred
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("masks");
        classes.push(evaluate_class(name, &cfg.pred, &cfg.gt)?);
    }
    let report = EvaluationReport::from_classes(classes)?;
    print!("{}", report.text_table());
    write_output_json(&report, &cfg.report)?;
    write_resolved(&ResolvedConfig::Evaluate(cfg.clone()), &cfg.report, false)?;
    Ok(())
}

// --------------------------------------------------------------------- ablate

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AblateConfig {
    /// Dataset bundle directory with ground truth.
    #[arg(long)]
    dataset: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn exec_ablate(cfg: &AblateConfig) -> CmdResult<()> {
    let bundle = Bundle::load(&cfg.dataset)
        .map_err(|e| CmdError::Data(format!("dataset {}: {e}", cfg.dataset.display())))?;
    if bundle.occluders.is_empty() {
        return data_err("the ablation grid needs occluder sprites (occluders/) in the bundle");
    }
    let flow = FlowParams::default();
    let post = PostProcessConfig::default();
    let spots = detect_spots(&bundle.pairs, &flow)?;
    let samples = harvest_arm_masks(&bundle.no_object.frames, &flow)?;
    let fits = fit_models(&samples, &spots, &bundle.occluders)?;

    let mut objects = Vec::with_capacity(bundle.objects.len());
    for (k, seq) in bundle.objects.iter().enumerate() {
        let gts = seq.gt.as_ref().ok_or_else(|| {
            CmdError::Data(format!("object sequence {k:02} has no ground-truth masks"))
        })?;
        let motion = sequence_motion_masks(&seq.frames, &flow)?;
        let mut frames = Vec::with_capacity(seq.frames.len());
        for (t, frame) in seq.frames.iter().enumerate() {
            frames.push(AblationFrame {
                forward: motion.forward[t].clone(),
                backward: motion.backward[t].clone(),
                robot: [
                    fits.full.predict_robot_mask(frame),
                    fits.no_weighting.predict_robot_mask(frame),
                    fits.plain.predict_robot_mask(frame),
                ],
                gt_object: gts[t].object.clone(),
                spot_center: spots[t % spots.len()].center,
            });
        }
        objects.push(frames);
    }
    let rows = run_ablation(&objects, &post)?;
    let csv = ablation_csv(&rows);
    print!("{csv}");
    write_output_file(&cfg.out, csv.as_bytes())?;
    write_resolved(&ResolvedConfig::Ablate(cfg.clone()), &cfg.out, false)?;
    Ok(())
}

// ----------------------------------------------------------------- trajectory

#[derive(Args)]
struct TrajectoryArgs {
    /// Sphere directions.
    #[arg(long, default_value_t = DEFAULT_SPHERE_POINTS)]
    n: usize,
    /// Ellipse stops per revolution.
    #[arg(long, default_value_t = DEFAULT_ELLIPSE_POINTS)]
    ne: usize,
    /// Camera viewing direction as x,y,z.
    #[arg(long, default_value = "0,0,1")]
    camera_dir: String,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryConfig {
    n: usize,
    ne: usize,
    camera_dir: Vec3,
    out: PathBuf,
}

impl TrajectoryArgs {
    fn into_config(self) -> CmdResult<TrajectoryConfig> {
        let parts: Vec<f64> = self
            .camera_dir
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CmdError::Config(format!("--camera-dir {:?}: {e}", self.camera_dir)))?;
        if parts.len() != 3 {
            return config_err(format!(
                "--camera-dir needs three comma-separated numbers, got {:?}",
                self.camera_dir
            ));
        }
        Ok(TrajectoryConfig {
            n: self.n,
            ne: self.ne,
            camera_dir: [parts[0], parts[1], parts[2]],
            out: self.out,
        })
    }
}

fn exec_trajectory(cfg: &TrajectoryConfig) -> CmdResult<()> {
    if cfg.n == 0 {
        return config_err("--n must be at least 1");
    }
    if cfg.ne == 0 {
        return config_err("--ne must be at least 1");
    }
    let norm2: f64 = cfg.camera_dir.iter().map(|v| v * v).sum();
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return config_err("--camera-dir must be a finite nonzero vector");
    }
    let ellipse = EllipseSpec {
        n_points: cfg.ne,
        ..EllipseSpec::default()
    };
    let poses = default_trajectory(cfg.n, &ellipse, cfg.camera_dir)?;
    write_output_file(&cfg.out, trajectory_to_json(&poses)?.as_bytes())?;
    write_resolved(&ResolvedConfig::Trajectory(cfg.clone()), &cfg.out, false)?;
    println!(
        "wrote {} poses ({} directions x 2 passes) to {}",
        poses.len(),
        cfg.n,
        cfg.out.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- compose

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeConfig {
    /// Harvested arm samples: NNNNNN.png frames with NNNNNN.pgm masks.
    #[arg(long)]
    arm_masks: PathBuf,
    /// Background images (*.png), cycled over samples.
    #[arg(long)]
    backgrounds: PathBuf,
    /// Occluder sprites: X.png with X_mask.pgm.
    #[arg(long)]
    occluders: PathBuf,
    /// Gripper calibration pairs directory, for locating the gripper spot.
    #[arg(long)]
    pairs: PathBuf,
    /// Samples to synthesize.
    #[arg(long)]
    count: usize,
    /// Master RNG seed.
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Output directory for image + label + weight triples.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ComposeManifest {
    kind: String,
    count: usize,
    arm_samples: usize,
    backgrounds: usize,
    occluders: usize,
}

/// PNG frames with their mask siblings, `<stem><suffix>.pgm`.
fn load_frame_mask_pairs(
    dir: &Path,
    mask_suffix: &str,
    what: &str,
) -> CmdResult<Vec<(usize, Frame, BinaryMask)>> {
    let mut out = Vec::new();
    for (i, name) in files_with_extension(dir, "png").iter().enumerate() {
        let stem = name.trim_end_matches(".png");
        let mask_path = dir.join(format!("{stem}{mask_suffix}.pgm"));
        if !mask_path.is_file() {
            return data_err(format!(
                "{what} {} has no mask {}",
                dir.join(name).display(),
                mask_path.display()
            ));
        }
        // Numeric stems keep their frame index so spots stay aligned.
        let index = stem.parse::<usize>().unwrap_or(i);
        out.push((
            index,
            load_frame_png(&dir.join(name))?,
            mask_from_pgm(&mask_path)?,
        ));
    }
    if out.is_empty() {
        return data_err(format!("no {what} (*.png) in {}", dir.display()));
    }
    Ok(out)
}

fn exec_compose(cfg: &ComposeConfig) -> CmdResult<()> {
    if cfg.count == 0 {
        return config_err("--count must be at least 1");
    }
    let arms = load_frame_mask_pairs(&cfg.arm_masks, "", "arm sample")?;
    let occluders = load_frame_mask_pairs(&cfg.occluders, "_mask", "occluder")?;
    let bg_names = files_with_extension(&cfg.backgrounds, "png");
    if bg_names.is_empty() {
        return data_err(format!("no backgrounds (*.png) in {}", cfg.backgrounds.display()));
    }
    let backgrounds = bg_names
        .iter()
        .map(|n| load_frame_png(&cfg.backgrounds.join(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs = read_gripper_pairs(&cfg.pairs)
        .map_err(|e| CmdError::Data(format!("gripper pairs {}: {e}", cfg.pairs.display())))?;
    let spots = detect_spots(&pairs, &FlowParams::default())?;

    fs::create_dir_all(&cfg.out)
        .map_err(|e| CmdError::Data(format!("creating {}: {e}", cfg.out.display())))?;
    let params = ComposeParams::default();
    for i in 0..cfg.count {
        let (frame_idx, arm_frame, arm_mask) = &arms[i % arms.len()];
        let background = &backgrounds[i % backgrounds.len()];
        let (_, occ_frame, occ_mask) = &occluders[i % occluders.len()];
        let spot = &spots[frame_idx % spots.len()];
        let sample = compose_training_sample(
            arm_frame,
            arm_mask,
            background,
            occ_frame,
            occ_mask,
            spot,
            splitmix64(cfg.seed ^ i as u64),
            &params,
        )?;
        graspseg::imaging::save_frame_png(&sample.composite, &cfg.out.join(format!("{i:06}.png")))?;
        write_pgm(
            sample.labels.width(),
            sample.labels.height(),
            &sample.labels.to_pgm_bytes(),
            &cfg.out.join(format!("{i:06}_labels.pgm")),
        )?;
        write_weight_map(&sample.weights, &cfg.out.join(format!("{i:06}_weights.wmap")))?;
    }
    let manifest = ComposeManifest {
        kind: "training_set".into(),
        count: cfg.count,
        arm_samples: arms.len(),
        backgrounds: backgrounds.len(),
        occluders: occluders.len(),
    };
    write_output_json(&manifest, &cfg.out.join("manifest.json"))?;
    write_resolved(&ResolvedConfig::Compose(cfg.clone()), &cfg.out, true)?;
    println!("wrote {} training triples to {}", cfg.count, cfg.out.display());
    Ok(())
}
