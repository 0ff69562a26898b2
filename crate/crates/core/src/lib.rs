//! Adaptive screen-space meshing and integration of normal maps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod diffgeo;
pub mod error;
pub mod eval;
pub mod export;
pub mod halfedge;
pub mod image_io;
pub mod integrate;
pub mod remesh;
pub mod synthetic;

pub use camera::CameraModel;
pub use error::{Error, Result};
pub use image_io::{DepthMap, NormalMap};
