//! Numerical laboratory for discrete Schrödinger operators `-Δ - αV` on Z^d.
//!
//! The numerical core is generic over the scalar (`f32` or `f64`) through
//! [`scalar::Real`]; the aliases below fix the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod birman_schwinger;
pub mod error;
pub mod estimates;
pub mod example52;
pub mod green;
pub mod hardy;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod report;
pub mod scalar;
pub mod sparse;

pub use birman_schwinger::{BsMethod, BsSpectrum, DualityOptions};
pub use error::{Error, Result};
pub use green::GreenTable;
pub use hardy::{CellForms, HardyEstimate};
pub use lattice::{BoxDomain, LatticePoint, Potential, WeightFamily};
pub use linalg::{BandedSym, Inertia, Matrix, SymMatrix};
pub use operator::{CountRoute, Hamiltonian};
pub use report::{BoundReport, Verdict};
pub use scalar::Real;

pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Potential64 = Potential<f64>;
pub type Potential32 = Potential<f32>;
pub type GreenTable64 = GreenTable<f64>;
pub type GreenTable32 = GreenTable<f32>;
pub type BsSpectrum64 = BsSpectrum<f64>;
pub type BsSpectrum32 = BsSpectrum<f32>;
pub type Hamiltonian64 = Hamiltonian<f64>;
pub type CellForms64 = CellForms<f64>;
pub type WeightFamily64 = WeightFamily<f64>;
