//! Numerical toolkit for nilpotent completely positive maps on `B(C^n)`.
//!
//! Maps are stored in Kraus form `α(X) = Σ L_i* X L_i` ([`cpmap::KrausMap`]).
//! Every dimension or rank reported by the crate is decided by a certified
//! singular-value split (see [`numerics`]); an ambiguous split is an error.

pub mod cpmap;
pub mod ensemble;
pub mod error;
pub mod json;
pub mod majorization;
pub mod nilpotency;
pub mod numerics;
pub mod roots;
pub mod verify;

pub use cpmap::{ChoiMatrix, KrausMap, Superoperator};
pub use error::{Error, Result};
pub use nilpotency::{CPNilpotentType, FlagDecomposition, LinearNilpotentType};
pub use numerics::{ComplexMatrix, Subspace, Tolerance, C64};
