//! End-to-end behavior of the variational flow estimator on synthetic
//! textures with known ground-truth motion.

use graspseg::flow::{estimate_flow, read_flo, write_flo, FlowField, FlowParams, VariationalFlow};
use graspseg::imaging::Frame;

/// Band-limited random texture: white noise smoothed twice with a 3x3 box,
/// stretched to full 8-bit range. Deterministic in the seed.
fn textured_image(width: u32, height: u32, seed: u64) -> Vec<f64> {
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let w = width as usize;
    let h = height as usize;
    let mut img: Vec<f64> = (0..w * h).map(|_| (next() % 1000) as f64).collect();
    for _ in 0..2 {
        let mut out = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                let mut n = 0.0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let rr = r as i64 + dr;
                        let cc = c as i64 + dc;
                        if rr >= 0 && cc >= 0 && rr < h as i64 && cc < w as i64 {
                            acc += img[rr as usize * w + cc as usize];
                            n += 1.0;
                        }
                    }
                }
                out[r * w + c] = acc / n;
            }
        }
        img = out;
    }
    let lo = img.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    img.iter().map(|v| (v - lo) / (hi - lo) * 255.0).collect()
}

fn gray_frame(width: u32, height: u32, values: &[f64]) -> Frame {
    let mut pixels = Vec::with_capacity(values.len() * 3);
    for &v in values {
        let g = v.round().clamp(0.0, 255.0) as u8;
        pixels.extend_from_slice(&[g, g, g]);
    }
    Frame::new(width, height, pixels).unwrap()
}

/// Crop two windows of a larger texture so the second frame shows the same
/// content displaced by (dx, dy) with no occlusion at the borders.
fn shifted_pair(size: u32, dx: i64, dy: i64, seed: u64) -> (Frame, Frame) {
    let margin = 8u32;
    let big = textured_image(size + 2 * margin, size + 2 * margin, seed);
    let bw = (size + 2 * margin) as usize;
    let crop = |or: i64, oc: i64| -> Frame {
        let mut vals = Vec::with_capacity((size * size) as usize);
        for r in 0..size as i64 {
            for c in 0..size as i64 {
                vals.push(big[((r + or) * bw as i64 + c + oc) as usize]);
            }
        }
        gray_frame(size, size, &vals)
    };
    let m = margin as i64;
    (crop(m, m), crop(m - dy, m - dx))
}

fn median_epe(flow: &FlowField, dx: f64, dy: f64) -> f64 {
    let mut errs: Vec<f64> = flow
        .data()
        .chunks_exact(2)
        .map(|uv| {
            let eu = uv[0] as f64 - dx;
            let ev = uv[1] as f64 - dy;
            (eu * eu + ev * ev).sqrt()
        })
        .collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    errs[errs.len() / 2]
}

#[test]
fn identical_frames_give_zero_flow() {
    let values = textured_image(128, 96, 11);
    let f = gray_frame(128, 96, &values);
    let flow = estimate_flow(&f, &f, &FlowParams::default()).unwrap();
    let max_mag = flow.magnitude().max();
    assert!(max_mag < 1e-3, "max magnitude {max_mag}");
}

#[test]
fn integer_shifts_are_recovered() {
    for (dx, dy, seed) in [(1i64, 0i64, 21u64), (3, -2, 22), (4, 4, 23)] {
        let (a, b) = shifted_pair(256, dx, dy, seed);
        let flow = estimate_flow(&a, &b, &FlowParams::default()).unwrap();
        let epe = median_epe(&flow, dx as f64, dy as f64);
        assert!(
            epe < 0.5,
            "shift ({dx},{dy}): median endpoint error {epe:.3}"
        );
    }
}

#[test]
fn estimates_are_deterministic() {
    let (a, b) = shifted_pair(96, 2, 1, 99);
    let f1 = estimate_flow(&a, &b, &FlowParams::default()).unwrap();
    let f2 = estimate_flow(&a, &b, &FlowParams::default()).unwrap();
    assert_eq!(f1.data(), f2.data());
}

#[test]
fn energies_decrease_at_full_resolution() {
    let (a, b) = shifted_pair(96, 2, -1, 5);
    let (_, energies) = VariationalFlow::new(FlowParams::default())
        .unwrap()
        .estimate_with_energies(&a, &b)
        .unwrap();
    assert_eq!(energies.len(), 100);
    for pair in energies.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
    }
    assert!(energies.last().unwrap() < energies.first().unwrap());
}

#[test]
fn estimated_flow_survives_file_round_trip() {
    let (a, b) = shifted_pair(64, 1, 1, 7);
    let flow = estimate_flow(&a, &b, &FlowParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("est.flo");
    write_flo(&flow, &path).unwrap();
    let back = read_flo(&path).unwrap();
    assert_eq!(flow.data(), back.data());
}
