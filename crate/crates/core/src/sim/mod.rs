//! Procedural scene simulator with exact ground truth.

pub mod render;
pub mod scene;

pub use render::{
    grasp_gap, jitter_trajectory, render_frame, render_gripper_pair, render_occluder_sprite,
    render_sequence, splitmix64, GripperPair, GroundTruth, HandState,
};
pub use scene::{ArmSpec, BackgroundSpec, GripperSpec, ObjectSpec, PaletteEntry, SceneSpec};
