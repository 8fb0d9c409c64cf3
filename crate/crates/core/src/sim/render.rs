//! Deterministic rasterizer for the benchmark scenes.
//!
//! A frame is painted back to front into a color-plus-layer canvas; ground
//! truth falls out of the topmost layer at each pixel, so occlusion is exact
//! by construction. All randomness is hash- or seed-derived: the same spec
//! and seed render the same bytes on every run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, Frame};
use crate::sim::scene::{ObjectSpec, SceneSpec};
use crate::trajectory::TrajectoryPose;

pub const LAYER_BACKGROUND: u8 = 0;
pub const LAYER_UPPER_ARM: u8 = 1;
pub const LAYER_FOREARM: u8 = 2;
pub const LAYER_WRIST: u8 = 3;
pub const LAYER_PALM: u8 = 4;
pub const LAYER_FAR_JAW: u8 = 5;
pub const LAYER_OBJECT: u8 = 6;
pub const LAYER_NEAR_JAW: u8 = 7;

/// Per-pixel class masks derived from the topmost painted layer.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Every robot pixel: both links, wrist, palm, and jaws.
    pub arm: BinaryMask,
    /// Jaw pixels only.
    pub gripper: BinaryMask,
    pub object: BinaryMask,
}

/// What the gripper holds while a frame renders.
#[derive(Debug, Clone, Copy)]
pub enum HandState<'a> {
    Empty { gap: f64 },
    Holding(&'a ObjectSpec),
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn hash2(salt: u64, a: i64, b: i64) -> u64 {
    splitmix64(splitmix64(splitmix64(salt) ^ a as u64) ^ b as u64)
}

fn tex_offset(salt: u64, s: f64, t: f64, cell: f64, amp: i32) -> i32 {
    if amp == 0 {
        return 0;
    }
    let h = hash2(salt, (s / cell).floor() as i64, (t / cell).floor() as i64);
    (h % (2 * amp as u64 + 1)) as i32 - amp
}

fn shade(base: [u8; 3], off: i32) -> [u8; 3] {
    [
        (base[0] as i32 + off).clamp(0, 255) as u8,
        (base[1] as i32 + off).clamp(0, 255) as u8,
        (base[2] as i32 + off).clamp(0, 255) as u8,
    ]
}

type P2 = (f64, f64);

fn sub(a: P2, b: P2) -> P2 {
    (a.0 - b.0, a.1 - b.1)
}

fn madd(a: P2, d: P2, s: f64) -> P2 {
    (a.0 + d.0 * s, a.1 + d.1 * s)
}

fn dot2(a: P2, b: P2) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

struct Canvas {
    w: u32,
    h: u32,
    color: Vec<[u8; 3]>,
    layer: Vec<u8>,
}

impl Canvas {
    fn new(w: u32, h: u32) -> Self {
        Self {
            w,
            h,
            color: vec![[0, 0, 0]; (w * h) as usize],
            layer: vec![LAYER_BACKGROUND; (w * h) as usize],
        }
    }

    fn paint(&mut self, x: u32, y: u32, color: [u8; 3], layer: u8) {
        let i = (y * self.w + x) as usize;
        self.color[i] = color;
        self.layer[i] = layer;
    }
}

struct Texture {
    salt: u64,
    cell: f64,
    amp: i32,
}

/// Paints the capsule around segment a-b. Texture coordinates ride with the
/// segment so the pattern translates rigidly with the limb.
fn paint_capsule(
    canvas: &mut Canvas,
    a: P2,
    b: P2,
    halfwidth: f64,
    color: [u8; 3],
    layer: u8,
    tex: &Texture,
) {
    let ab = sub(b, a);
    let len2 = dot2(ab, ab);
    let len = len2.sqrt();
    let u = if len > 1e-12 {
        (ab.0 / len, ab.1 / len)
    } else {
        (1.0, 0.0)
    };
    let x0 = (a.0.min(b.0) - halfwidth - 1.0).floor().max(0.0) as u32;
    let y0 = (a.1.min(b.1) - halfwidth - 1.0).floor().max(0.0) as u32;
    let x1 = (a.0.max(b.0) + halfwidth + 1.0).ceil() as i64;
    let y1 = (a.1.max(b.1) + halfwidth + 1.0).ceil() as i64;
    if x1 < 0 || y1 < 0 {
        return;
    }
    let x1 = (x1 as u32).min(canvas.w);
    let y1 = (y1 as u32).min(canvas.h);
    for y in y0..y1 {
        for x in x0..x1 {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let ap = sub(p, a);
            let s = dot2(ap, u).clamp(0.0, len);
            let q = madd(a, u, s);
            let dq = sub(p, q);
            if dot2(dq, dq) <= halfwidth * halfwidth {
                // Signed cross-axis coordinate for the texture lattice.
                let t = ap.1 * u.0 - ap.0 * u.1;
                let off = tex_offset(tex.salt, s, t, tex.cell, tex.amp);
                canvas.paint(x, y, shade(color, off), layer);
            }
        }
    }
}

/// Wobbly ellipse with major axis along `axis`.
fn paint_sprite(canvas: &mut Canvas, center: P2, axis: P2, spec: &ObjectSpec, layer: u8) {
    let perp = (-axis.1, axis.0);
    let a = spec.radius;
    let b = spec.radius * spec.aspect;
    let phi0 = std::f64::consts::TAU * (splitmix64(spec.seed ^ 0x51) % 4096) as f64 / 4096.0;
    let phi1 = std::f64::consts::TAU * (splitmix64(spec.seed ^ 0x52) % 4096) as f64 / 4096.0;
    let reach = a * (1.0 + spec.wobble) + 1.0;
    let x0 = (center.0 - reach).floor().max(0.0) as u32;
    let y0 = (center.1 - reach).floor().max(0.0) as u32;
    let x1 = ((center.0 + reach).ceil().max(0.0) as u32).min(canvas.w);
    let y1 = ((center.1 + reach).ceil().max(0.0) as u32).min(canvas.h);
    let tex_salt = splitmix64(spec.seed ^ 0xA5);
    for y in y0..y1 {
        for x in x0..x1 {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let cp = sub(p, center);
            let s = dot2(cp, axis);
            let t = dot2(cp, perp);
            let u = s / a;
            let v = t / b;
            let rho = (u * u + v * v).sqrt();
            let phi = v.atan2(u);
            let boundary = 1.0
                + spec.wobble * (0.6 * (2.0 * phi + phi0).sin() + 0.4 * (3.0 * phi + phi1).sin());
            if rho <= boundary {
                let off = tex_offset(tex_salt, s, t, spec.texture_cell, spec.texture_amp);
                canvas.paint(x, y, shade(spec.color, off), layer);
            }
        }
    }
}

fn paint_background(canvas: &mut Canvas, scene: &SceneSpec) {
    let bg = &scene.background;
    let total: u64 = bg.palette.iter().map(|p| p.weight as u64).sum();
    for y in 0..canvas.h {
        for x in 0..canvas.w {
            let h = hash2(bg.seed, (x / bg.cell) as i64, (y / bg.cell) as i64);
            let mut pick = h % total;
            let mut color = bg.palette[0].color;
            for entry in &bg.palette {
                if pick < entry.weight as u64 {
                    color = entry.color;
                    break;
                }
                pick -= entry.weight as u64;
            }
            let j = bg.jitter;
            let mut off = if j == 0 {
                0
            } else {
                (hash2(bg.seed ^ 0x77, x as i64, y as i64) % (2 * j as u64 + 1)) as i32 - j
            };
            for (k, &(cell, amp)) in bg.octaves.iter().enumerate() {
                off += tex_offset(
                    splitmix64(bg.seed ^ (0x71 + k as u64)),
                    x as f64,
                    y as f64,
                    cell,
                    amp,
                );
            }
            canvas.paint(x, y, shade(color, off), LAYER_BACKGROUND);
        }
    }
}

/// In-image gripper frame for a trajectory pose.
struct ImagePose {
    ee: P2,
    /// Unit approach direction in the image, palm toward fingertips.
    d: P2,
    perp: P2,
    /// Foreshortening of lengths along `d`.
    sigma: f64,
    /// Which side of `perp` is closer to the camera.
    near_sign: f64,
}

fn project_pose(scene: &SceneSpec, pose: &TrajectoryPose) -> Result<ImagePose> {
    let cx = scene.width as f64 / 2.0;
    let cy = scene.height as f64 / 2.0;
    let ppm = scene.pixels_per_meter;
    let ee = (cx + ppm * pose.position[0], cy - ppm * pose.position[1]);
    if ee.0 < 0.0 || ee.0 >= scene.width as f64 || ee.1 < 0.0 || ee.1 >= scene.height as f64 {
        return Err(Error::PoseOutsideFrame(pose.index));
    }
    let f = pose.forward();
    // The camera looks down the world z axis, so the in-image approach is
    // the projected forward direction pointing from the viewpoint in.
    let mut d = (-f[0], f[1]);
    let n = (d.0 * d.0 + d.1 * d.1).sqrt();
    if n > 1e-6 {
        d = (d.0 / n, d.1 / n);
    } else {
        d = (1.0, 0.0);
    }
    let sigma = (1.0 - f[2] * f[2]).max(0.0).sqrt().max(0.3);
    let perp = (-d.1, d.0);
    let r = pose.right();
    let rp = (r[0], -r[1]);
    let near_sign = if (dot2(rp, perp) >= 0.0) == (r[2] >= 0.0) {
        1.0
    } else {
        -1.0
    };
    Ok(ImagePose {
        ee,
        d,
        perp,
        sigma,
        near_sign,
    })
}

/// Inner jaw separation while holding `obj`.
pub fn grasp_gap(scene: &SceneSpec, obj: &ObjectSpec) -> f64 {
    2.0 * obj.radius * obj.aspect * scene.gripper.grip_factor + scene.gripper.grip_pad
}

pub fn render_frame(
    scene: &SceneSpec,
    pose: &TrajectoryPose,
    hand: HandState<'_>,
    noise_salt: u64,
) -> Result<(Frame, GroundTruth)> {
    scene.validate()?;
    let ip = project_pose(scene, pose)?;
    let (gap, object) = match hand {
        HandState::Empty { gap } => (gap, None),
        HandState::Holding(obj) => {
            obj.validate()?;
            (grasp_gap(scene, obj), Some(obj))
        }
    };
    let g = &scene.gripper;
    let arm = &scene.arm;
    let finger_len = g.finger_len * ip.sigma;
    // The trajectory point is the tool center: fingertips reach past it.
    let palm_end = madd(ip.ee, ip.d, -0.55 * finger_len);
    let palm_center = madd(palm_end, ip.d, -0.5 * g.palm_len * ip.sigma);
    let palm_span = gap / 2.0 + g.finger_width + 2.0;
    let wrist_front = madd(palm_end, ip.d, -g.palm_len * ip.sigma);
    let base = (
        arm.base_anchor[0] + arm.follow * (ip.ee.0 - scene.width as f64 / 2.0),
        arm.base_anchor[1] + arm.follow * (ip.ee.1 - scene.height as f64 / 2.0),
    );
    // The forearm meets the hand at a point bearing toward the shoulder, not
    // behind the palm: the wrist joint absorbs tool reorientation. Hanging
    // the forearm off the palm instead makes the whole arm orbit the tool
    // center once per pose and sweep most of the frame.
    let eb = sub(base, ip.ee);
    let eb_len = dot2(eb, eb).sqrt().max(1e-9);
    let toward_base = (eb.0 / eb_len, eb.1 / eb_len);
    let attach = madd(
        ip.ee,
        toward_base,
        0.55 * finger_len + g.palm_len * ip.sigma + arm.wrist_size,
    );
    let bw = sub(attach, base);
    let bw_len = dot2(bw, bw).sqrt().max(1e-9);
    // Elbow sits under halfway up the shoulder-wrist line, so sections near
    // the (static) shoulder barely move and never drag flow to the border.
    let bend_perp = (-bw.1 / bw_len, bw.0 / bw_len);
    let elbow = madd(madd(base, bw, 0.45), bend_perp, arm.bend * bw_len);

    let mut canvas = Canvas::new(scene.width, scene.height);
    paint_background(&mut canvas, scene);
    let ts = scene.texture_seed;
    paint_capsule(
        &mut canvas,
        base,
        elbow,
        arm.upper_width / 2.0,
        arm.upper_color,
        LAYER_UPPER_ARM,
        &Texture {
            salt: ts ^ 0xE1,
            cell: arm.texture_cell,
            amp: arm.texture_amp,
        },
    );
    paint_capsule(
        &mut canvas,
        elbow,
        attach,
        arm.fore_width / 2.0,
        arm.fore_color,
        LAYER_FOREARM,
        &Texture {
            salt: ts ^ 0xE2,
            cell: arm.texture_cell,
            amp: arm.texture_amp,
        },
    );
    paint_capsule(
        &mut canvas,
        attach,
        wrist_front,
        arm.wrist_size / 2.0,
        arm.wrist_color,
        LAYER_WRIST,
        &Texture {
            salt: ts ^ 0xE3,
            cell: arm.texture_cell,
            amp: arm.texture_amp,
        },
    );
    paint_capsule(
        &mut canvas,
        madd(palm_center, ip.perp, -palm_span),
        madd(palm_center, ip.perp, palm_span),
        g.palm_len * ip.sigma / 2.0,
        g.color,
        LAYER_PALM,
        &Texture {
            salt: ts ^ 0xE4,
            cell: g.texture_cell,
            amp: g.texture_amp,
        },
    );
    // Far jaw under the object, near jaw over it.
    let jaw_off = gap / 2.0 + g.finger_width / 2.0;
    let paint_jaw = |canvas: &mut Canvas, side: f64, layer: u8, salt: u64| {
        let root = madd(palm_end, ip.perp, side * jaw_off);
        paint_capsule(
            canvas,
            root,
            madd(root, ip.d, finger_len),
            g.finger_width / 2.0,
            g.color,
            layer,
            &Texture {
                salt,
                cell: g.texture_cell,
                amp: g.texture_amp,
            },
        );
    };
    paint_jaw(&mut canvas, -ip.near_sign, LAYER_FAR_JAW, ts ^ 0xE5);
    if let Some(obj) = object {
        paint_sprite(&mut canvas, ip.ee, ip.d, obj, LAYER_OBJECT);
    }
    paint_jaw(&mut canvas, ip.near_sign, LAYER_NEAR_JAW, ts ^ 0xE6);

    let mut pixels = Vec::with_capacity(canvas.color.len() * 3);
    if scene.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_salt);
        let mut gauss = GaussianStream::new(&mut rng);
        for c in &canvas.color {
            for &ch in c {
                let v = ch as f64 + scene.noise_sigma * gauss.next();
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    } else {
        for c in &canvas.color {
            pixels.extend_from_slice(c);
        }
    }
    let frame = Frame::new(scene.width, scene.height, pixels)?;

    let n = canvas.layer.len();
    let mut arm_bits = vec![false; n];
    let mut grip_bits = vec![false; n];
    let mut obj_bits = vec![false; n];
    for (i, &l) in canvas.layer.iter().enumerate() {
        arm_bits[i] = l != LAYER_BACKGROUND && l != LAYER_OBJECT;
        grip_bits[i] = l == LAYER_FAR_JAW || l == LAYER_NEAR_JAW;
        obj_bits[i] = l == LAYER_OBJECT;
    }
    let gt = GroundTruth {
        arm: BinaryMask::from_bits(scene.width, scene.height, arm_bits)?,
        gripper: BinaryMask::from_bits(scene.width, scene.height, grip_bits)?,
        object: BinaryMask::from_bits(scene.width, scene.height, obj_bits)?,
    };
    Ok((frame, gt))
}

/// Renders an object spec as a standalone sprite on a tight black canvas,
/// major axis horizontal, plus its coverage mask. Used for the occluder
/// sprites the appearance fit pastes during training.
pub fn render_occluder_sprite(spec: &ObjectSpec) -> Result<(Frame, BinaryMask)> {
    spec.validate()?;
    let reach = spec.radius * (1.0 + spec.wobble) + 2.0;
    let side = (2.0 * reach).ceil() as u32;
    let mut canvas = Canvas::new(side, side);
    let c = side as f64 / 2.0;
    paint_sprite(&mut canvas, (c, c), (1.0, 0.0), spec, LAYER_OBJECT);
    let mut pixels = Vec::with_capacity(canvas.color.len() * 3);
    for px in &canvas.color {
        pixels.extend_from_slice(px);
    }
    let bits = canvas.layer.iter().map(|&l| l == LAYER_OBJECT).collect();
    Ok((
        Frame::new(side, side, pixels)?,
        BinaryMask::from_bits(side, side, bits)?,
    ))
}

/// Box-Muller pairs over ChaCha-derived uniforms.
struct GaussianStream<'a> {
    rng: &'a mut ChaCha8Rng,
    spare: Option<f64>,
}

impl<'a> GaussianStream<'a> {
    fn new(rng: &'a mut ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
        let u2 = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Renders every pose with the same hand state. Per-frame noise comes from
/// `seed` mixed with the frame index.
pub fn render_sequence(
    scene: &SceneSpec,
    poses: &[TrajectoryPose],
    object: Option<&ObjectSpec>,
    seed: u64,
) -> Result<Vec<(Frame, GroundTruth)>> {
    let mut out = Vec::with_capacity(poses.len());
    for (t, pose) in poses.iter().enumerate() {
        let hand = match object {
            Some(obj) => HandState::Holding(obj),
            None => HandState::Empty {
                gap: scene.gripper.closed_gap,
            },
        };
        let salt = splitmix64(seed ^ splitmix64(t as u64));
        out.push(render_frame(scene, pose, hand, salt)?);
    }
    Ok(out)
}

/// Open/closed calibration renders at one pose plus the union of the jaw
/// pixels of both.
#[derive(Debug, Clone)]
pub struct GripperPair {
    pub open: Frame,
    pub closed: Frame,
    pub jaws: BinaryMask,
}

pub fn render_gripper_pair(
    scene: &SceneSpec,
    pose: &TrajectoryPose,
    seed: u64,
) -> Result<GripperPair> {
    let g = &scene.gripper;
    let (open, gt_open) = render_frame(
        scene,
        pose,
        HandState::Empty {
            gap: g.closed_gap + g.open_extra,
        },
        splitmix64(seed ^ 0x0BEA),
    )?;
    let (closed, gt_closed) = render_frame(
        scene,
        pose,
        HandState::Empty { gap: g.closed_gap },
        splitmix64(seed ^ 0xC105),
    )?;
    let jaws = gt_open.gripper.union(&gt_closed.gripper)?;
    Ok(GripperPair { open, closed, jaws })
}

/// Copies the poses with Gaussian position noise of `sigma_px` pixels in the
/// image plane. Models imperfect repositioning between recording runs.
pub fn jitter_trajectory(
    poses: &[TrajectoryPose],
    sigma_px: f64,
    pixels_per_meter: f64,
    seed: u64,
) -> Vec<TrajectoryPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = GaussianStream::new(&mut rng);
    let sigma_m = sigma_px / pixels_per_meter;
    poses
        .iter()
        .map(|p| {
            let mut out = p.clone();
            out.position[0] += sigma_m * gauss.next();
            out.position[1] += sigma_m * gauss.next();
            out
        })
        .collect()
}
