//! Self-supervised segmentation of objects held by a robot arm.
//!
//! The pipeline takes short videos of an arm moving along a repeatable
//! trajectory, isolates moving pixels with variational optical flow and a
//! histogram threshold, removes the arm with a color appearance model fit on
//! arm-only footage, and cleans the remainder with component-level filters.
//! A small procedural simulator renders benchmark scenes with exact ground
//! truth so every stage can be scored end to end.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod flow;
pub mod imaging;
pub mod motion;
pub mod object;
pub mod pipeline;
pub mod robot;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
