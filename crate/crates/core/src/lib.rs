//! Numerical laboratory for Bel-Robinson energies of vacuum spacetimes in
//! constant-mean-curvature gauge on the flat 3-torus.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod grid;
pub mod kasner;
pub mod lapse;
pub mod point;
pub mod runner;
pub mod snapshot;
pub mod tensor;

pub use error::{BrError, Result};
pub use evolution::{EvolutionConfig, RescaleFactor, SliceState};
pub use grid::{Field, GridSpec, ScalarField, SymTensorField, VectorField};
pub use kasner::{KasnerOracle, KasnerParams};
pub use point::{Sym3, Vec3};
