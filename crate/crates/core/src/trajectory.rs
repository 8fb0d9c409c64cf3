//! Scan trajectories: a low-discrepancy covering of viewing directions on
//! the sphere paired with a closed translation loop, so that consecutive
//! frames always move while the full sweep covers orientation space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Default viewing-direction count for a full scan.
pub const DEFAULT_SPHERE_POINTS: usize = 301;
/// Default number of stops on the translation ellipse.
pub const DEFAULT_ELLIPSE_POINTS: usize = 20;
/// Hint used to complete viewing directions into full rotations.
pub const DEFAULT_UP_HINT: Vec3 = [0.0, 0.0, 1.0];

/// Unit-square lattice ((i + 0.5)/n, frac(i/phi)) with phi the golden ratio.
/// Consecutive indices land far apart while the whole set covers the square
/// evenly.
pub fn fibonacci_lattice(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "lattice needs at least one point".to_string(),
        ));
    }
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    Ok((0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            let y = (i as f64 / phi).fract();
            (x, y)
        })
        .collect())
}

/// Equal-area map from the unit square to the sphere: x picks the latitude
/// via acos(2x - 1) - pi/2, y the azimuth via 2*pi*y.
pub fn lattice_to_sphere(points: &[(f64, f64)]) -> Vec<Vec3> {
    points
        .iter()
        .map(|&(x, y)| {
            let lat = (2.0 * x - 1.0).clamp(-1.0, 1.0).acos() - std::f64::consts::FRAC_PI_2;
            let az = 2.0 * std::f64::consts::PI * y;
            [lat.cos() * az.cos(), lat.cos() * az.sin(), lat.sin()]
        })
        .collect()
}

/// Complete a unit viewing direction into a right-handed orthonormal frame.
/// Columns are (right, up, forward) with forward = p. When `up_hint` is
/// parallel to p the fallback hint (0, 1, 0) takes over.
pub fn pose_rotation(p: Vec3, up_hint: Vec3) -> [[f64; 3]; 3] {
    let mut r = cross(up_hint, p);
    if norm(r) < 1e-9 {
        r = cross([0.0, 1.0, 0.0], p);
    }
    let right = normalize(r);
    let up = cross(p, right);
    // Column-major axes packed into a row-major matrix: m[i][j] = axis_j[i].
    [
        [right[0], up[0], p[0]],
        [right[1], up[1], p[1]],
        [right[2], up[2], p[2]],
    ]
}

/// Reflect directions with a negative component along `camera_dir` across
/// the plane orthogonal to it, so every direction faces the camera.
pub fn mirror_to_camera_hemisphere(points: &[Vec3], camera_dir: Vec3) -> Vec<Vec3> {
    let c = normalize(camera_dir);
    points
        .iter()
        .map(|&p| {
            let d = dot(p, c);
            if d < 0.0 {
                add(p, scale(c, -2.0 * d))
            } else {
                p
            }
        })
        .collect()
}

/// Planar ellipse for the translation loop.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EllipseSpec {
    pub center: Vec3,
    /// Semi-axis lengths (a, b) in meters.
    pub semi_axes: (f64, f64),
    pub normal: Vec3,
    pub n_points: usize,
    /// Equal arc-length spacing instead of equal parameter angles.
    pub arc_length_spacing: bool,
}

impl Default for EllipseSpec {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0, 0.0],
            semi_axes: (0.038, 0.026),
            normal: [0.0, 0.0, 1.0],
            n_points: DEFAULT_ELLIPSE_POINTS,
            arc_length_spacing: false,
        }
    }
}

impl EllipseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::InvalidParameter(
                "ellipse needs at least one point".to_string(),
            ));
        }
        if !(self.semi_axes.0 > 0.0 && self.semi_axes.1 > 0.0) {
            return Err(Error::InvalidParameter(
                "ellipse semi-axes must be positive".to_string(),
            ));
        }
        if norm(self.normal) < 1e-12 {
            return Err(Error::InvalidParameter(
                "ellipse normal must be nonzero".to_string(),
            ));
        }
        Ok(())
    }

    /// Orthonormal in-plane basis (e1, e2).
    fn basis(&self) -> (Vec3, Vec3) {
        let n = normalize(self.normal);
        let h = if dot(n, [0.0, 0.0, 1.0]).abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let e1 = normalize(cross(h, n));
        let e2 = normalize(cross(n, e1));
        (e1, e2)
    }

    fn point_at(&self, t: f64, e1: Vec3, e2: Vec3) -> Vec3 {
        let (a, b) = self.semi_axes;
        add(
            self.center,
            add(scale(e1, a * t.cos()), scale(e2, b * t.sin())),
        )
    }
}

/// Stops along the ellipse. Default spacing uses equal parameter angles
/// 2*pi*k/n; arc-length mode redistributes the angles by inverting the
/// cumulative arc length from a dense quadrature.
pub fn ellipse_points(spec: &EllipseSpec) -> Result<Vec<Vec3>> {
    spec.validate()?;
    let (e1, e2) = spec.basis();
    let n = spec.n_points;
    let tau = 2.0 * std::f64::consts::PI;
    if !spec.arc_length_spacing {
        return Ok((0..n)
            .map(|k| spec.point_at(tau * k as f64 / n as f64, e1, e2))
            .collect());
    }
    // Cumulative arc length over a fine angular grid, then equal-length
    // fractions mapped back to angles by linear interpolation.
    const STEPS: usize = 8192;
    let (a, b) = spec.semi_axes;
    let mut cumulative = Vec::with_capacity(STEPS + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for s in 0..STEPS {
        let t = tau * (s as f64 + 0.5) / STEPS as f64;
        let speed = ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
        acc += speed * tau / STEPS as f64;
        cumulative.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while seg + 1 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let lo = cumulative[seg];
        let hi = cumulative[seg + 1];
        let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
        let t = tau * (seg as f64 + frac) / STEPS as f64;
        out.push(spec.point_at(t, e1, e2));
    }
    Ok(out)
}

/// One stop of a scan: translation from the ellipse, orientation from the
/// sphere covering. `pass` 1 repeats the sweep with the gripper rolled 180
/// degrees about its forward axis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryPose {
    pub pass: u8,
    pub index: usize,
    pub position: Vec3,
    /// Row-major rotation whose columns are (right, up, forward).
    pub rotation: [[f64; 3]; 3],
}

impl TrajectoryPose {
    pub fn forward(&self) -> Vec3 {
        [self.rotation[0][2], self.rotation[1][2], self.rotation[2][2]]
    }

    pub fn right(&self) -> Vec3 {
        [self.rotation[0][0], self.rotation[1][0], self.rotation[2][0]]
    }
}

/// Pair sphere directions with ellipse stops: pose i of each pass sits at
/// ellipse stop i mod n_e and looks along sphere direction i. The second
/// pass flips right and up, a 180-degree roll about forward.
pub fn build_trajectory(
    directions: &[Vec3],
    ellipse: &EllipseSpec,
    up_hint: Vec3,
) -> Result<Vec<TrajectoryPose>> {
    if directions.is_empty() {
        return Err(Error::InvalidParameter(
            "trajectory needs at least one direction".to_string(),
        ));
    }
    let stops = ellipse_points(ellipse)?;
    let mut poses = Vec::with_capacity(directions.len() * 2);
    for pass in 0..2u8 {
        for (i, &p) in directions.iter().enumerate() {
            let mut rotation = pose_rotation(p, up_hint);
            if pass == 1 {
                for row in rotation.iter_mut() {
                    row[0] = -row[0];
                    row[1] = -row[1];
                }
            }
            // The ellipse loops continuously across passes, so pose k of the
            // whole trajectory always sits at stop k % n_stops.
            let k = pass as usize * directions.len() + i;
            poses.push(TrajectoryPose {
                pass,
                index: i,
                position: stops[k % stops.len()],
                rotation,
            });
        }
    }
    Ok(poses)
}

/// Full default scan: mirrored sphere covering plus the default ellipse.
pub fn default_trajectory(
    n_directions: usize,
    ellipse: &EllipseSpec,
    camera_dir: Vec3,
) -> Result<Vec<TrajectoryPose>> {
    let lattice = fibonacci_lattice(n_directions)?;
    let sphere = lattice_to_sphere(&lattice);
    let mirrored = mirror_to_camera_hemisphere(&sphere, camera_dir);
    build_trajectory(&mirrored, ellipse, DEFAULT_UP_HINT)
}

pub fn trajectory_to_json(poses: &[TrajectoryPose]) -> Result<String> {
    Ok(serde_json::to_string_pretty(poses)?)
}

/// CSV with one row per pose: pass, index, position, rotation in row-major
/// order.
pub fn trajectory_to_csv(poses: &[TrajectoryPose]) -> String {
    let mut out = String::from(
        "pass,index,px,py,pz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n",
    );
    for p in poses {
        out.push_str(&format!("{},{}", p.pass, p.index));
        for v in p.position {
            out.push_str(&format!(",{v}"));
        }
        for row in p.rotation {
            for v in row {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_matches_closed_form() {
        let pts = fibonacci_lattice(10).unwrap();
        assert_eq!(pts.len(), 10);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((pts[0].0 - 0.05).abs() < 1e-15);
        assert!((pts[0].1 - 0.0).abs() < 1e-15);
        assert!((pts[2].0 - 0.25).abs() < 1e-15);
        assert!((pts[2].1 - (2.0 / phi - 1.0)).abs() < 1e-12);
        assert!(pts.iter().all(|&(x, y)| (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)));
    }

    #[test]
    fn zero_points_is_an_error() {
        assert!(fibonacci_lattice(0).is_err());
    }

    #[test]
    fn sphere_points_are_unit_norm() {
        let pts = lattice_to_sphere(&fibonacci_lattice(97).unwrap());
        for p in pts {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_extremes_map_to_poles() {
        // acos(2x - 1) - pi/2 sends x = 0 to latitude +pi/2 and x = 1 to
        // -pi/2.
        let north = lattice_to_sphere(&[(0.0, 0.0)])[0];
        let south = lattice_to_sphere(&[(1.0, 0.0)])[0];
        assert!((north[2] - 1.0).abs() < 1e-12);
        assert!((south[2] + 1.0).abs() < 1e-12);
        let equator = lattice_to_sphere(&[(0.5, 0.0)])[0];
        assert!(equator[2].abs() < 1e-12);
        assert!((equator[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_are_orthonormal_right_handed() {
        let pts = lattice_to_sphere(&fibonacci_lattice(50).unwrap());
        for p in pts {
            let m = pose_rotation(p, DEFAULT_UP_HINT);
            assert_rotation_valid(&m);
            // Forward column is the input direction.
            for i in 0..3 {
                assert!((m[i][2] - p[i]).abs() < 1e-12);
            }
        }
    }

    fn assert_rotation_valid(m: &[[f64; 3]; 3]) {
        let col = |j: usize| [m[0][j], m[1][j], m[2][j]];
        for j in 0..3 {
            assert!((norm(col(j)) - 1.0).abs() < 1e-9, "column {j} not unit");
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(dot(col(a), col(b)).abs() < 1e-9, "columns {a},{b} not orthogonal");
        }
        let det = dot(col(0), cross(col(1), col(2)));
        assert!((det - 1.0).abs() < 1e-9, "det = {det}");
    }

    #[test]
    fn polar_directions_use_fallback_hint() {
        for p in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            let m = pose_rotation(p, DEFAULT_UP_HINT);
            assert_rotation_valid(&m);
        }
    }

    #[test]
    fn mirroring_clears_negative_components() {
        let cam = [0.0, 0.0, 1.0];
        let pts = lattice_to_sphere(&fibonacci_lattice(64).unwrap());
        let mirrored = mirror_to_camera_hemisphere(&pts, cam);
        for (orig, m) in pts.iter().zip(&mirrored) {
            assert!(dot(*m, cam) >= 0.0);
            assert!((norm(*m) - 1.0).abs() < 1e-12);
            // Mirroring only flips the component along the camera axis.
            assert!((orig[0] - m[0]).abs() < 1e-15);
            assert!((orig[1] - m[1]).abs() < 1e-15);
            assert!((orig[2].abs() - m[2].abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_angle_ellipse_hits_axis_points() {
        let spec = EllipseSpec {
            n_points: 4,
            ..EllipseSpec::default()
        };
        let pts = ellipse_points(&spec).unwrap();
        assert_eq!(pts.len(), 4);
        let (a, b) = spec.semi_axes;
        // Normal +z with hint fallback (0,1,0): e1 = x, e2 = y.
        assert!((pts[0][0] - a).abs() < 1e-12 && pts[0][1].abs() < 1e-12);
        assert!((pts[1][1] - b).abs() < 1e-12 && pts[1][0].abs() < 1e-12);
        assert!((pts[2][0] + a).abs() < 1e-12);
        assert!((pts[3][1] + b).abs() < 1e-12);
    }

    #[test]
    fn arc_length_spacing_equalizes_segment_lengths() {
        let base = EllipseSpec {
            semi_axes: (0.2, 0.05),
            n_points: 32,
            ..EllipseSpec::default()
        };
        let segment_spread = |pts: &[Vec3]| {
            let mut lens = Vec::new();
            for i in 0..pts.len() {
                let d = add(pts[(i + 1) % pts.len()], scale(pts[i], -1.0));
                lens.push(norm(d));
            }
            let mean = lens.iter().sum::<f64>() / lens.len() as f64;
            let max_dev = lens
                .iter()
                .map(|l| (l - mean).abs() / mean)
                .fold(0.0f64, f64::max);
            max_dev
        };
        let uniform_angles = ellipse_points(&base).unwrap();
        let spec = EllipseSpec {
            arc_length_spacing: true,
            ..base
        };
        let arc = ellipse_points(&spec).unwrap();
        // A 4:1 ellipse has wildly uneven chords at equal angles; arc-length
        // spacing must even them out.
        assert!(segment_spread(&uniform_angles) > 0.5);
        assert!(segment_spread(&arc) < 0.05);
    }

    #[test]
    fn trajectory_pairs_translation_and_orientation() {
        let ellipse = EllipseSpec {
            n_points: 5,
            ..EllipseSpec::default()
        };
        let poses = default_trajectory(15, &ellipse, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(poses.len(), 30);
        // Translation loops with period n_e while orientation keeps moving.
        assert_eq!(poses[0].position, poses[5].position);
        assert_ne!(poses[0].rotation, poses[5].rotation);
        assert_eq!(poses[14].position, poses[19].position);
        // Second pass: same direction revisited with right/up negated; the
        // stop index keeps counting across the pass boundary.
        let (a, b) = (&poses[3], &poses[18]);
        assert_eq!(b.pass, 1);
        assert_eq!(a.position, b.position);
        for i in 0..3 {
            assert!((a.rotation[i][2] - b.rotation[i][2]).abs() < 1e-15);
            assert!((a.rotation[i][0] + b.rotation[i][0]).abs() < 1e-15);
            assert!((a.rotation[i][1] + b.rotation[i][1]).abs() < 1e-15);
        }
    }

    #[test]
    fn consecutive_poses_within_a_pass_always_move() {
        let poses = default_trajectory(
            DEFAULT_SPHERE_POINTS,
            &EllipseSpec::default(),
            [0.0, 0.0, 1.0],
        )
        .unwrap();
        for pair in poses.windows(2) {
            if pair[0].pass != pair[1].pass {
                continue; // the roll flip provides the motion at the seam
            }
            let d = norm(add(pair[1].position, scale(pair[0].position, -1.0)));
            assert!(d > 1e-3, "stalled at pass {} index {}", pair[1].pass, pair[1].index);
        }
    }

    #[test]
    fn csv_has_one_row_per_pose_plus_header() {
        let poses = default_trajectory(7, &EllipseSpec::default(), [0.0, 0.0, 1.0]).unwrap();
        let csv = trajectory_to_csv(&poses);
        assert_eq!(csv.lines().count(), 15);
        assert!(csv.starts_with("pass,index,px,py,pz,r00"));
    }
}
