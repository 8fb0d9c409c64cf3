//! Robot-specific self-supervision: motion-harvested arm masks, the gripper
//! spot, a color appearance model, and training-sample composition.

pub mod appearance;
mod compose;
mod harvest;

pub use appearance::{
    color_bin, fit_appearance, fit_appearance_with, gripper_weight, ArmAppearanceModel,
    FitOptions, COLOR_BINS, COLOR_BINS_PER_CHANNEL,
};
pub use compose::{
    compose_training_sample, read_weight_map, write_weight_map, ComposeParams, LabelRaster,
    TrainingSample, LABEL_BACKGROUND, LABEL_IGNORE, LABEL_ROBOT,
};
pub use harvest::{detect_gripper_spot, harvest_arm_masks, ArmSample, GripperSpot, MIN_ARM_FRACTION};
