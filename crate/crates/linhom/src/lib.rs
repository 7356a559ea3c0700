//! Numerical kernel for homogeneous structures of linear type on
//! ε-Kähler and ε-quaternion Kähler model spaces.

pub mod checks;
pub mod curvature;
pub mod error;
pub mod geodesics;
pub mod linalg;
pub mod hypercomplex;
pub mod lineartype;
pub mod nomizu;
pub mod pseudolinear;
pub mod structures;

pub use error::{Error, Result};
