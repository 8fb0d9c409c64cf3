//! Runs the benchmark end to end and dumps every score. Tuning aid, not
//! part of the test suite. Set PROBE_OBJECTS to limit the object count.

use std::time::Instant;

use graspseg::evaluation::ablation_csv;
use graspseg::pipeline::{run_benchmark_with, BenchmarkSpec};

fn main() {
    let mut spec = BenchmarkSpec::default();
    if let Ok(n) = std::env::var("PROBE_OBJECTS") {
        let n: usize = n.parse().expect("PROBE_OBJECTS must be a number");
        spec.objects.truncate(n.max(1));
    }
    let start = Instant::now();
    let out = run_benchmark_with(&spec, &mut |phase| {
        eprintln!("[{:7.1}s] {phase}", start.elapsed().as_secs_f64());
    })
    .expect("benchmark failed");
    let elapsed = start.elapsed().as_secs_f64();

    println!("object   ours_iou  cd_of_iou  cd_rgb_iou");
    for s in &out.per_object {
        println!(
            "{}    {:.4}    {:.4}     {:.4}",
            s.label, s.ours.iou, s.cd_of.iou, s.cd_rgb.iou
        );
    }
    println!(
        "means    {:.4}    {:.4}     {:.4}",
        out.mean_iou_ours, out.mean_iou_cd_of, out.mean_iou_cd_rgb
    );
    println!(
        "arm: iou {:.4} precision {:.4} recall {:.4}",
        out.arm.iou, out.arm.precision, out.arm.recall
    );
    println!("object_marked_robot: {:.4}", out.object_marked_robot);
    println!("containment_ok: {}", out.fusion_containment_ok);
    println!("harvest_samples: {}", out.harvest_samples);
    println!("{}", ablation_csv(&out.ablation));
    println!("elapsed: {elapsed:.1}s");
}
