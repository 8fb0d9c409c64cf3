//! Per-frame motion mask diagnostics on the benchmark's first object
//! sequence. Tuning aid, not part of the test suite. Env overrides:
//! FRAMES, ITERS, FOLLOW, OBJ_R, OBJ_ASPECT, SEMI_A, SEMI_B, N_POINTS,
//! BG_CELL, BG_JITTER, VERBOSE.

use graspseg::evaluation::{mask_metrics, PixelCounts};
use graspseg::flow::estimate_flow;
use graspseg::imaging::Histogram;
use graspseg::motion::{sequence_motion_masks, FlowMaskMode};
use graspseg::object::{nimply, postprocess};
use graspseg::pipeline::{benchmark_trajectory, BenchmarkSpec};
use graspseg::sim::{render_sequence, splitmix64};

fn env_f64(name: &str, default: f64) -> f64 {
    std::env::var(name)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let mut spec = BenchmarkSpec::default();
    let idx = env_f64("OBJ_IDX", 0.0) as usize;
    spec.objects[0] = spec.objects[idx].clone();
    spec.segmentation.flow.iterations_per_level =
        env_f64("ITERS", spec.segmentation.flow.iterations_per_level as f64) as u32;
    spec.scene.arm.follow = env_f64("FOLLOW", spec.scene.arm.follow);
    spec.objects[0].radius = env_f64("OBJ_R", spec.objects[0].radius);
    spec.objects[0].aspect = env_f64("OBJ_ASPECT", spec.objects[0].aspect);
    spec.objects[0].wobble = env_f64("OBJ_WOBBLE", spec.objects[0].wobble);
    spec.objects[0].texture_cell = env_f64("OBJ_CELL", spec.objects[0].texture_cell);
    spec.objects[0].texture_amp = env_f64("OBJ_AMP", spec.objects[0].texture_amp as f64) as i32;
    spec.scene.gripper.finger_len = env_f64("FINGER_LEN", spec.scene.gripper.finger_len);
    spec.scene.noise_sigma = env_f64("NOISE", spec.scene.noise_sigma);
    spec.scene.arm.base_anchor[0] = env_f64("BASE_X", spec.scene.arm.base_anchor[0]);
    spec.scene.arm.base_anchor[1] = env_f64("BASE_Y", spec.scene.arm.base_anchor[1]);
    spec.scene.arm.upper_width = env_f64("UPPER_W", spec.scene.arm.upper_width);
    spec.scene.arm.fore_width = env_f64("FORE_W", spec.scene.arm.fore_width);
    spec.ellipse.semi_axes.0 = env_f64("SEMI_A", spec.ellipse.semi_axes.0);
    spec.ellipse.semi_axes.1 = env_f64("SEMI_B", spec.ellipse.semi_axes.1);
    spec.ellipse.n_points = env_f64("N_POINTS", spec.ellipse.n_points as f64) as usize;
    spec.scene.background.cell = env_f64("BG_CELL", spec.scene.background.cell as f64) as u32;
    spec.scene.background.jitter = env_f64("BG_JITTER", spec.scene.background.jitter as f64) as i32;
    let n_frames = env_f64("FRAMES", 12.0) as usize;
    let verbose = std::env::var("VERBOSE").is_ok();
    let armonly = std::env::var("ARM_ONLY").is_ok();

    let poses = benchmark_trajectory(&spec).unwrap();
    let object = if armonly { None } else { Some(&spec.objects[0]) };
    let seq = render_sequence(
        &spec.scene,
        &poses[..n_frames.min(poses.len())],
        object,
        splitmix64(spec.seed ^ 0x200),
    )
    .unwrap();
    let (frames, gts): (Vec<_>, Vec<_>) = seq.into_iter().unzip();

    let motion = sequence_motion_masks(&frames, &spec.segmentation.flow).unwrap();
    let mut pooled = PixelCounts::default();
    let (mut mp, mut mr, mut oi, mut min_oi) = (0.0, 0.0, 0.0, f64::INFINITY);
    let mut wiped = 0;
    if verbose {
        println!("frame  union%  m_vs_movers(p/r)  obj_pred(iou/p/r)");
    }
    for t in 0..frames.len() {
        let fused = motion.fused(t, FlowMaskMode::Union).unwrap();
        let movers = gts[t].arm.union(&gts[t].object).unwrap();
        let m = mask_metrics(&fused, &movers).unwrap();
        let g = &gts[t].gripper;
        let n = g.area().max(1) as f64;
        let (sr, sc) = g
            .iter_set()
            .fold((0.0, 0.0), |(ar, ac), (r, c)| (ar + r as f64, ac + c as f64));
        let spot = (sr / n, sc / n);
        let raw = nimply(&fused, &gts[t].arm).unwrap();
        let pred = postprocess(&raw, spot, &spec.segmentation.post);
        let o = mask_metrics(&pred, &gts[t].object).unwrap();
        pooled.add_pair(&pred, &gts[t].object).unwrap();
        mp += m.precision;
        mr += m.recall;
        oi += o.iou;
        min_oi = min_oi.min(o.iou);
        if pred.is_empty() {
            wiped += 1;
        }
        if verbose {
            let total = (spec.scene.width * spec.scene.height) as f64;
            println!(
                "{t:5}  {:5.1}   {:.2}/{:.2}         {:.2}/{:.2}/{:.2}",
                100.0 * fused.area() as f64 / total,
                m.precision,
                m.recall,
                o.iou,
                o.precision,
                o.recall
            );
        }
    }
    let n = frames.len() as f64;
    println!(
        "motion p/r {:.3}/{:.3}  obj mean {:.3} min {:.3} pooled {:.3}  wiped {}/{}",
        mp / n,
        mr / n,
        oi / n,
        min_oi,
        pooled.metrics().iou,
        wiped,
        frames.len()
    );

    if std::env::var("GTSHIFT").is_ok() {
        println!("frame  gripper_c        object_c         arm_px  arm_xor_prev");
        let centroid = |m: &graspseg::imaging::BinaryMask| {
            let n = m.area().max(1) as f64;
            let (sr, sc) = m
                .iter_set()
                .fold((0.0, 0.0), |(ar, ac), (r, c)| (ar + r as f64, ac + c as f64));
            (sr / n, sc / n)
        };
        for t in 0..gts.len() {
            let g = centroid(&gts[t].gripper);
            let o = centroid(&gts[t].object);
            let xor = if t > 0 {
                gts[t]
                    .arm
                    .iter_set()
                    .filter(|&(r, c)| !gts[t - 1].arm.get(r, c))
                    .count()
                    + gts[t - 1]
                        .arm
                        .iter_set()
                        .filter(|&(r, c)| !gts[t].arm.get(r, c))
                        .count()
            } else {
                0
            };
            println!(
                "{t:5}  ({:6.1},{:6.1})  ({:6.1},{:6.1})  {:6}  {xor:6}",
                g.0,
                g.1,
                o.0,
                o.1,
                gts[t].arm.area()
            );
        }
    }

    if let Ok(t) = std::env::var("MAGROW").map(|s| s.parse::<usize>().unwrap_or(1)) {
        let row = env_f64("ROW", 212.0) as u32;
        let fwd = estimate_flow(&frames[t], &frames[t + 1], &spec.segmentation.flow).unwrap();
        let mag = fwd.magnitude();
        let (hist, max) = Histogram::from_scalar_field(&mag);
        let bin = graspseg::imaging::otsu_threshold(&hist).unwrap() as f64;
        // Pixels survive when bin > t, i.e. magnitude > (bin+1)/256 * max.
        println!(
            "frame {t}: max {max:.2}px  otsu cut {:.2}px",
            (bin + 1.0) / 256.0 * max
        );
        for r in [row, row.saturating_sub(16), row + 16] {
            let vals: Vec<String> = (0..25)
                .map(|i| format!("{:4.1}", mag.get(r, i * 4)))
                .collect();
            println!("y={r:3} x=0..100 step4: {}", vals.join(" "));
        }
    }

    if let Ok(t) = std::env::var("DRAW").map(|s| s.parse::<usize>().unwrap_or(1)) {
        let fused = motion.fused(t, FlowMaskMode::Union).unwrap();
        let movers = gts[t].arm.union(&gts[t].object).unwrap();
        let (w, h) = (fused.width() as usize, fused.height() as usize);
        let (cw, ch) = (4usize, 4usize);
        println!("frame {t}: '#' hit, '+' extra, 'o' missed (4x4 blocks, majority)");
        for by in 0..h / ch {
            let mut line = String::new();
            for bx in 0..w / cw {
                let (mut hit, mut extra, mut miss) = (0, 0, 0);
                for y in by * ch..(by + 1) * ch {
                    for x in bx * cw..(bx + 1) * cw {
                        let p = fused.get(y as u32, x as u32);
                        let g = movers.get(y as u32, x as u32);
                        match (p, g) {
                            (true, true) => hit += 1,
                            (true, false) => extra += 1,
                            (false, true) => miss += 1,
                            _ => {}
                        }
                    }
                }
                let c = if hit >= extra && hit >= miss && hit > 0 {
                    '#'
                } else if extra >= miss && extra > 0 {
                    '+'
                } else if miss > 0 {
                    'o'
                } else {
                    '.'
                };
                line.push(c);
            }
            println!("{line}");
        }
    }
}
