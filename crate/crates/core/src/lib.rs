//! Cubic stochastic matrices, Maksimov multiplications and quadratic
//! stochastic processes.
//!
//! - [`algebra`]: cubic and square matrices, the `*_0` and `*_a` products,
//!   binary operations on the index set.
//! - [`stochasticity`]: the stochasticity kinds and random samplers.
//! - [`families`]: closed-form two-time families.
//! - [`kce`]: Kolmogorov-Chapman checks on time grids.
//! - [`dynamics`]: evolution of type distributions.
//! - [`fnexpr`]: expressions in `t` for family parameters.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod fnexpr;
pub mod kce;
pub mod stochasticity;

pub use algebra::{BinaryOp, CubicMatrix, OpAnalysis, OpName, SquareMatrix};
pub use error::{Error, Result};
pub use families::{FamilyId, FamilyValue, MatrixFamily, ParamFn};
pub use stochasticity::StochKind;
