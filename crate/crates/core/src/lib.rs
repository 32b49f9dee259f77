//! Tangential traces of bounded curl-measure fields on sets of finite
//! perimeter, estimated numerically and checked against closed forms.

pub mod config;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod measure;
pub mod mollify;
pub mod trace;
pub mod verify;
pub mod sampling;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::{Mat3, Vec3};
