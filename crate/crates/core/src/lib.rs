//! Edge-length and dihedral-angle coordinates for triangle meshes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod forward;
pub mod generators;
pub mod hyperdual;
pub mod integrability;
pub mod io;
pub mod mesh;
pub mod objectives;
pub mod optim;
pub mod quaternion;
pub mod reconstruction;
pub mod sparse;
pub mod tangent;

pub use error::{Error, Result, TopologyError};

/// Value standing in for `+∞` when an energy or constraint is evaluated outside its domain.
pub const INFEASIBLE: f64 = 1e300;
