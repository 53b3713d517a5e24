//! Dual-pixel facial geometry toolkit.
//!
//! The crate covers the non-learned pipeline around dual-pixel (DP) depth:
//! forward simulation of DP pairs from depth ([`dpsim`]), the affine
//! inverse-depth/disparity calibration ([`dpcalib`]), structured-light depth
//! capture ([`slight`]), photometric-stereo normals ([`photostereo`]),
//! multi-view filtering and normal-guided depth refinement ([`refine`]), a
//! classical sub-pixel cost-volume matcher ([`matcher`]) and the evaluation
//! metrics ([`metrics`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod dpcalib;
pub mod dpsim;
pub mod geom;
pub mod matcher;
pub mod metrics;
pub mod photostereo;
pub mod pipeline;
pub mod refine;
pub mod slight;

pub use error::{Error, Result};
