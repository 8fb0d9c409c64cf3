//! Raster primitives: frames, masks, scalar fields, histogram thresholding,
//! connected components and binary morphology.

mod components;
mod frame;
mod histogram;
pub mod io;
mod mask;
mod morphology;
mod scalar;

pub use components::{connected_components, Bbox, Component};
pub use frame::Frame;
pub use io::{load_frame_png, mask_from_pgm, mask_to_pgm, save_frame_png};
pub use histogram::{bin_for, otsu_threshold, Histogram, HISTOGRAM_BINS};
pub use mask::BinaryMask;
pub use morphology::{close, dilate, erode, morph_open_close, open};
pub use scalar::{threshold_above, ScalarField};
