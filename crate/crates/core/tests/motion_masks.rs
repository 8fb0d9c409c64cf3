//! Motion-mask quality on a cooperative arm-only sequence: the fused union
//! mask must overlap the true moving pixels with IoU at least 0.7.

use graspseg::evaluation::PixelCounts;
use graspseg::motion::{sequence_motion_masks, FlowMaskMode};
use graspseg::pipeline::{benchmark_trajectory, BenchmarkSpec};
use graspseg::sim::{render_sequence, splitmix64};

#[test]
fn union_masks_cover_the_moving_arm() {
    let mut spec = BenchmarkSpec::default();
    // A cooperative subject: the whole arm sweeps (training-style follow)
    // and the links are wide enough that boundary halos stay a small
    // fraction of the true motion area.
    spec.scene.arm.follow = 1.0;
    spec.scene.arm.upper_width = 32.0;
    spec.scene.arm.fore_width = 24.0;

    let poses = benchmark_trajectory(&spec).expect("trajectory builds");
    let seq = render_sequence(&spec.scene, &poses[..6], None, splitmix64(spec.seed ^ 0x77))
        .expect("sequence renders");
    let (frames, gts): (Vec<_>, Vec<_>) = seq.into_iter().unzip();

    let motion = sequence_motion_masks(&frames, &spec.segmentation.flow).expect("flow runs");
    let mut pooled = PixelCounts::default();
    for (t, gt) in gts.iter().enumerate() {
        let fused = motion.fused(t, FlowMaskMode::Union).expect("fused mask");
        pooled.add_pair(&fused, &gt.arm).expect("same dims");
    }
    let m = pooled.metrics();
    assert!(
        m.iou >= 0.7,
        "pooled union-vs-movers IoU {:.3} (precision {:.3}, recall {:.3})",
        m.iou,
        m.precision,
        m.recall
    );
}
