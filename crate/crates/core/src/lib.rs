//! Positive ω-periodic solutions of periodic predator–prey systems of
//! Leslie–Gower (S1), Holling–Tanner (S2) and type-3-response (S3) type.
//!
//! Two independent routes are provided:
//!
//! * [`operator`]: the cone fixed-point formulation `X = T(X)` built on the
//!   Green kernel of the periodic linear problem ([`kernel`]), with the cone
//!   radii and shell inequalities in [`bounds`];
//! * [`shooting`]: adaptive Dormand–Prince integration of the original system
//!   and Newton iteration on the period map.

// NaN must fail every positivity test, hence `!(v > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coeff;
pub mod error;
pub mod examples;
pub mod expr;
pub mod grid;
pub mod integrate;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod shooting;

pub use bounds::{check_proof_steps, choose_radii, ConeDomain, ProofStepReport};
pub use coeff::{Coefficient, CoefficientSet, Delays, HypothesisReport, SystemVariant};
pub use error::{Error, Result};
pub use expr::PeriodicExpr;
pub use grid::GridFunction;
pub use kernel::{CumulativeIntegral, NodalKernel, PanelLayout};
pub use operator::{IterationTrace, OperatorContext, SystemGrid};
pub use shooting::{OrbitResult, ShootingOptions, State};
