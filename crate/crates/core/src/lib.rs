//! Exact computation of genus-0 real (Welschinger-type) invariants of P² and
//! its real blowups from three WDVV-type relations.
//!
//! The pipeline is: a [`lattice::SurfaceModel`] fixes the curve-class lattice,
//! a [`complex_gw::ComplexProvider`] supplies complex invariants,
//! [`relations`] instantiates every applicable relation as an explicit
//! equation, and [`solver::solve`] runs staged exact elimination over the
//! resulting overdetermined system. [`verify`] cross-checks the output.

pub mod complex_gw;
pub mod config;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod relations;
pub mod solver;
pub mod table_io;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{CurveClass, DivisorClass, DivisorTriple, SurfaceModel};
pub use relations::{RealKey, RelationInstance, RelationKind};
pub use solver::{InvariantTable, KeyStatus, Seeds, SolveReport};
