#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod calibration;
pub mod cli;
pub mod duality;
pub mod error;
pub mod fd;
pub mod fundamental;
pub mod io;
pub mod model;
pub mod numerics;
pub mod pricing;

pub use error::{Error, Result};
pub use model::{
    dual_params, make_volatility, validate_hvol, working_domain, CurveSpec, FamilyTag, ModelParams,
    RationalBoundaryParams, VolatilityCurve,
};
