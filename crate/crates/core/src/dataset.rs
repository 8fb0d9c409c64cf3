//! On-disk layout for recorded sequences and benchmark bundles.
//!
//! A sequence directory holds `frames/%06d.png` plus optional ground-truth
//! mask directories (`gt_arm`, `gt_gripper`, `gt_object`, PGM files) and a
//! `manifest.json`. A bundle groups everything one benchmark needs: an
//! arm-only harvest sequence, an optional reposed arm-only sequence for
//! change-detection references, per-object grasp sequences, open/closed
//! gripper calibration pairs, occluder sprites, and the scene description.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    load_frame_png, mask_from_pgm, mask_to_pgm, save_frame_png, BinaryMask, Frame,
};
use crate::sim::{GripperPair, GroundTruth, ObjectSpec, SceneSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub kind: String,
    pub width: u32,
    pub height: u32,
    pub count: usize,
    /// Whether the gripper holds an object in these frames.
    pub grasped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectSpec>,
}

#[derive(Debug, Clone)]
pub struct SequenceData {
    pub frames: Vec<Frame>,
    pub gt: Option<Vec<GroundTruth>>,
    pub manifest: SequenceManifest,
}

fn frame_name(i: usize) -> String {
    format!("{i:06}.png")
}

fn mask_name(i: usize) -> String {
    format!("{i:06}.pgm")
}

pub fn write_sequence(
    dir: &Path,
    frames: &[(Frame, GroundTruth)],
    object: Option<&ObjectSpec>,
) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::Data("refusing to write an empty sequence".into()));
    }
    let (w, h) = (frames[0].0.width(), frames[0].0.height());
    fs::create_dir_all(dir.join("frames"))?;
    for gt_dir in ["gt_arm", "gt_gripper", "gt_object"] {
        fs::create_dir_all(dir.join(gt_dir))?;
    }
    for (i, (frame, gt)) in frames.iter().enumerate() {
        save_frame_png(frame, &dir.join("frames").join(frame_name(i)))?;
        mask_to_pgm(&gt.arm, &dir.join("gt_arm").join(mask_name(i)))?;
        mask_to_pgm(&gt.gripper, &dir.join("gt_gripper").join(mask_name(i)))?;
        mask_to_pgm(&gt.object, &dir.join("gt_object").join(mask_name(i)))?;
    }
    let manifest = SequenceManifest {
        kind: "sequence".into(),
        width: w,
        height: h,
        count: frames.len(),
        grasped: object.is_some(),
        object: object.cloned(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn read_sequence(dir: &Path) -> Result<SequenceData> {
    let manifest: SequenceManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.kind != "sequence" {
        return Err(Error::Data(format!(
            "{}: expected kind \"sequence\", found {:?}",
            dir.display(),
            manifest.kind
        )));
    }
    let mut frames = Vec::with_capacity(manifest.count);
    for i in 0..manifest.count {
        let frame = load_frame_png(&dir.join("frames").join(frame_name(i)))?;
        if frame.width() != manifest.width || frame.height() != manifest.height {
            return Err(Error::Data(format!(
                "frame {i} is {}x{} but the manifest says {}x{}",
                frame.width(),
                frame.height(),
                manifest.width,
                manifest.height
            )));
        }
        frames.push(frame);
    }
    let gt = if dir.join("gt_arm").is_dir() {
        let mut gts = Vec::with_capacity(manifest.count);
        for i in 0..manifest.count {
            gts.push(GroundTruth {
                arm: mask_from_pgm(&dir.join("gt_arm").join(mask_name(i)))?,
                gripper: mask_from_pgm(&dir.join("gt_gripper").join(mask_name(i)))?,
                object: mask_from_pgm(&dir.join("gt_object").join(mask_name(i)))?,
            });
        }
        Some(gts)
    } else {
        None
    };
    Ok(SequenceData {
        frames,
        gt,
        manifest,
    })
}

/// Plain directory of prediction masks, one PGM per frame.
pub fn write_masks(dir: &Path, masks: &[BinaryMask]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, m) in masks.iter().enumerate() {
        mask_to_pgm(m, &dir.join(mask_name(i)))?;
    }
    Ok(())
}

pub fn read_masks(dir: &Path, count: usize) -> Result<Vec<BinaryMask>> {
    (0..count)
        .map(|i| mask_from_pgm(&dir.join(mask_name(i))))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairsIndex {
    /// Ellipse stop index of each calibration pair.
    stops: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GripperPairData {
    pub stop: usize,
    pub open: Frame,
    pub closed: Frame,
    pub jaws: Option<BinaryMask>,
}

pub fn write_gripper_pairs(dir: &Path, pairs: &[(usize, GripperPair)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, (_, pair)) in pairs.iter().enumerate() {
        save_frame_png(&pair.open, &dir.join(format!("open_{i:02}.png")))?;
        save_frame_png(&pair.closed, &dir.join(format!("closed_{i:02}.png")))?;
        mask_to_pgm(&pair.jaws, &dir.join(format!("gt_jaw_{i:02}.pgm")))?;
    }
    let index = PairsIndex {
        stops: pairs.iter().map(|(stop, _)| *stop).collect(),
    };
    fs::write(
        dir.join("pairs.json"),
        serde_json::to_string_pretty(&index)?,
    )?;
    Ok(())
}

pub fn read_gripper_pairs(dir: &Path) -> Result<Vec<GripperPairData>> {
    let index: PairsIndex = serde_json::from_str(&fs::read_to_string(dir.join("pairs.json"))?)?;
    let mut out = Vec::with_capacity(index.stops.len());
    for (i, &stop) in index.stops.iter().enumerate() {
        let jaw_path = dir.join(format!("gt_jaw_{i:02}.pgm"));
        out.push(GripperPairData {
            stop,
            open: load_frame_png(&dir.join(format!("open_{i:02}.png")))?,
            closed: load_frame_png(&dir.join(format!("closed_{i:02}.png")))?,
            jaws: if jaw_path.exists() {
                Some(mask_from_pgm(&jaw_path)?)
            } else {
                None
            },
        });
    }
    Ok(out)
}

pub fn write_occluders(dir: &Path, occluders: &[(Frame, BinaryMask)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, (frame, mask)) in occluders.iter().enumerate() {
        save_frame_png(frame, &dir.join(format!("occ{i:02}.png")))?;
        mask_to_pgm(mask, &dir.join(format!("occ{i:02}_mask.pgm")))?;
    }
    Ok(())
}

pub fn read_occluders(dir: &Path, count: usize) -> Result<Vec<(Frame, BinaryMask)>> {
    (0..count)
        .map(|i| {
            Ok((
                load_frame_png(&dir.join(format!("occ{i:02}.png")))?,
                mask_from_pgm(&dir.join(format!("occ{i:02}_mask.pgm")))?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub kind: String,
    pub object_count: usize,
    pub pair_count: usize,
    pub occluder_count: usize,
    pub has_repose: bool,
}

/// Everything one benchmark run consumes, in memory.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub scene: SceneSpec,
    /// Arm-only traversal used to harvest appearance training masks.
    pub no_object: SequenceData,
    /// Arm-only re-traversal with repositioning error; reference footage
    /// for the change-detection baselines.
    pub no_object_repose: Option<SequenceData>,
    pub objects: Vec<SequenceData>,
    pub pairs: Vec<GripperPairData>,
    pub occluders: Vec<(Frame, BinaryMask)>,
}

impl Bundle {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("scene.json"),
            serde_json::to_string_pretty(&self.scene)?,
        )?;
        let seq_pairs = |data: &SequenceData| -> Result<Vec<(Frame, GroundTruth)>> {
            let gts = data.gt.as_ref().ok_or_else(|| {
                Error::Data("bundle sequences need ground truth to be saved".into())
            })?;
            Ok(data
                .frames
                .iter()
                .cloned()
                .zip(gts.iter().cloned())
                .collect())
        };
        write_sequence(&dir.join("no_object"), &seq_pairs(&self.no_object)?, None)?;
        if let Some(repose) = &self.no_object_repose {
            write_sequence(&dir.join("no_object_repose"), &seq_pairs(repose)?, None)?;
        }
        for (i, obj_seq) in self.objects.iter().enumerate() {
            write_sequence(
                &dir.join("objects").join(format!("obj{i:02}")),
                &seq_pairs(obj_seq)?,
                obj_seq.manifest.object.as_ref(),
            )?;
        }
        let pairs: Vec<(usize, GripperPair)> = self
            .pairs
            .iter()
            .map(|p| {
                let jaws = p.jaws.clone().ok_or_else(|| {
                    Error::Data("bundle gripper pairs need jaw masks to be saved".into())
                })?;
                Ok((
                    p.stop,
                    GripperPair {
                        open: p.open.clone(),
                        closed: p.closed.clone(),
                        jaws,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        write_gripper_pairs(&dir.join("gripper_pairs"), &pairs)?;
        write_occluders(&dir.join("occluders"), &self.occluders)?;
        let manifest = BundleManifest {
            kind: "bundle".into(),
            object_count: self.objects.len(),
            pair_count: self.pairs.len(),
            occluder_count: self.occluders.len(),
            has_repose: self.no_object_repose.is_some(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Bundle> {
        let manifest: BundleManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.kind != "bundle" {
            return Err(Error::Data(format!(
                "{}: expected kind \"bundle\", found {:?}",
                dir.display(),
                manifest.kind
            )));
        }
        let scene: SceneSpec = serde_json::from_str(&fs::read_to_string(dir.join("scene.json"))?)?;
        let objects = (0..manifest.object_count)
            .map(|i| read_sequence(&dir.join("objects").join(format!("obj{i:02}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Bundle {
            scene,
            no_object: read_sequence(&dir.join("no_object"))?,
            no_object_repose: if manifest.has_repose {
                Some(read_sequence(&dir.join("no_object_repose"))?)
            } else {
                None
            },
            objects,
            pairs: read_gripper_pairs(&dir.join("gripper_pairs"))?,
            occluders: read_occluders(&dir.join("occluders"), manifest.occluder_count)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_frame(w: u32, h: u32, seed: u8) -> Frame {
        let mut f = Frame::filled(w, h, [seed, 10, 200]).unwrap();
        f.set(0, 0, [seed.wrapping_add(7), 0, 0]);
        f
    }

    fn tiny_gt(w: u32, h: u32) -> GroundTruth {
        let mut arm = BinaryMask::new(w, h).unwrap();
        arm.set(1, 1, true);
        arm.set(1, 2, true);
        let mut gripper = BinaryMask::new(w, h).unwrap();
        gripper.set(1, 2, true);
        let mut object = BinaryMask::new(w, h).unwrap();
        object.set(2, 2, true);
        GroundTruth {
            arm,
            gripper,
            object,
        }
    }

    #[test]
    fn sequence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<(Frame, GroundTruth)> = (0..3)
            .map(|i| (tiny_frame(6, 5, i as u8 * 3), tiny_gt(6, 5)))
            .collect();
        let obj = ObjectSpec::default();
        write_sequence(dir.path(), &frames, Some(&obj)).unwrap();
        let back = read_sequence(dir.path()).unwrap();
        assert_eq!(back.manifest.count, 3);
        assert!(back.manifest.grasped);
        assert_eq!(back.manifest.object.as_ref(), Some(&obj));
        for (i, frame) in back.frames.iter().enumerate() {
            assert_eq!(frame.pixels(), frames[i].0.pixels());
        }
        let gts = back.gt.unwrap();
        assert_eq!(gts[1].arm, frames[1].1.arm);
        assert_eq!(gts[2].object, frames[2].1.object);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![(tiny_frame(4, 4, 0), tiny_gt(4, 4))];
        write_sequence(dir.path(), &frames, None).unwrap();
        let path = dir.path().join("manifest.json");
        let mangled = fs::read_to_string(&path)
            .unwrap()
            .replace("\"sequence\"", "\"bundle\"");
        fs::write(&path, mangled).unwrap();
        assert!(matches!(read_sequence(dir.path()), Err(Error::Data(_))));
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = |n: usize, grasped: Option<&ObjectSpec>| SequenceData {
            frames: (0..n).map(|i| tiny_frame(6, 5, i as u8)).collect(),
            gt: Some((0..n).map(|_| tiny_gt(6, 5)).collect()),
            manifest: SequenceManifest {
                kind: "sequence".into(),
                width: 6,
                height: 5,
                count: n,
                grasped: grasped.is_some(),
                object: grasped.cloned(),
            },
        };
        let obj = ObjectSpec::default();
        let mut jaws = BinaryMask::new(6, 5).unwrap();
        jaws.set(3, 3, true);
        let bundle = Bundle {
            scene: SceneSpec::default(),
            no_object: seq(3, None),
            no_object_repose: Some(seq(3, None)),
            objects: vec![seq(4, Some(&obj))],
            pairs: vec![GripperPairData {
                stop: 2,
                open: tiny_frame(6, 5, 50),
                closed: tiny_frame(6, 5, 60),
                jaws: Some(jaws.clone()),
            }],
            occluders: vec![(tiny_frame(6, 5, 70), jaws.clone())],
        };
        bundle.save(dir.path()).unwrap();
        let back = Bundle::load(dir.path()).unwrap();
        assert_eq!(back.scene, bundle.scene);
        assert_eq!(back.objects.len(), 1);
        assert_eq!(back.objects[0].frames.len(), 4);
        assert_eq!(back.objects[0].manifest.object.as_ref(), Some(&obj));
        assert_eq!(back.pairs.len(), 1);
        assert_eq!(back.pairs[0].stop, 2);
        assert_eq!(back.pairs[0].jaws.as_ref(), Some(&jaws));
        assert_eq!(back.occluders.len(), 1);
        assert_eq!(
            back.no_object_repose.unwrap().frames[2].pixels(),
            bundle.no_object_repose.unwrap().frames[2].pixels()
        );
    }

    #[test]
    fn mask_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let masks: Vec<BinaryMask> = (0..3)
            .map(|i| {
                let mut m = BinaryMask::new(5, 4).unwrap();
                m.set(i, i, true);
                m
            })
            .collect();
        write_masks(dir.path(), &masks).unwrap();
        let back = read_masks(dir.path(), 3).unwrap();
        assert_eq!(back, masks);
    }
}
