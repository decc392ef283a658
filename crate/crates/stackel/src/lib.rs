//! Symbolic-numeric toolkit for generalized Stäckel systems.
//!
//! The crate builds orthogonal separable systems from a Stäckel matrix whose
//! trailing columns may depend on all coordinates, verifies the separability
//! conditions that govern such systems (both at the Hamilton-Jacobi and the
//! Helmholtz/Schrödinger level, including the side conditions that constrain
//! nonregular separation), and constructs and verifies separated solutions.
//!
//! The main entry points:
//!
//! * [`expr::Expr`] — immutable symbolic expressions with exact
//!   differentiation and pointwise evaluation;
//! * [`matrix::GeneralizedStackelMatrix`] — the defining matrix of a system,
//!   with structural validation, inversion, and derived quantities;
//! * [`check`] — the separability condition checkers;
//! * [`solve`] — separated-solution construction and residual verification;
//! * [`gallery`] — a catalog of worked systems with frozen reference data;
//! * [`sysdef`] — a plain-text definition format with exact round-trips.

pub mod bracket;
pub mod check;
pub mod driver;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod matrix;
pub mod quadform;
pub mod report;
pub mod sample;
pub mod solve;
pub mod sysdef;

pub use driver::{applicable_modes, default_tolerance, run_check, CheckSettings, CHECK_MODES};
pub use error::{CheckError, GalleryError, SolveError, StackelError, SysDefError};
pub use expr::{Binding, EvalError, Expr, ParseError};
pub use gallery::GalleryEntry;
pub use matrix::{GeneralizedStackelMatrix, OrthogonalMetric};
pub use quadform::{PhasePoint, QuadraticForm};
pub use report::{CheckReport, Verdict};
pub use sample::DomainBox;
pub use sysdef::{SystemDefinition, VectorPotentialData};
