//! Rank-one convexity laboratory for isotropic energies built from the
//! logarithmic strain measures `‖log U‖²` and `‖dev_n log U‖²`.
//!
//! The crate is organised bottom-up: [`tensor`] holds small dense linear
//! algebra, [`strain`] the strain measures and invariants, [`energy`] energy
//! families, [`lab`] line probes and inequality checks, and [`cases`] the
//! explicit counterexample lines.

pub mod cases;
pub mod energy;
pub mod error;
pub mod field;
pub mod lab;
pub mod strain;
pub mod tensor;

pub use energy::{EnergyDefinition, ScalarProfile};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use strain::StrainMeasure;
pub use tensor::{SquareMatrix, SymmetricTensor, UnitVector, Vector};
