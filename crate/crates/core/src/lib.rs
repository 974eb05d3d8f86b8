//! Concentration bounds for finite-alphabet sequences with causal dependence.
//!
//! A process is described step by step: each step's kernel reads a declared
//! subset of the past. From the kernels we compute the interdependence
//! matrix `H` (worst-case total-variation influence of one coordinate on a
//! later kernel), its resolvent `Γ = (I − H)⁻¹`, and the sub-Gaussian
//! variance proxy `‖Γc‖₂²` for a target with bounded differences `c`.
//! Classical bounds are computed alongside for comparison, and coupling and
//! Monte Carlo machinery checks the inequalities on concrete instances.

pub mod bounds;
pub mod coupling;
pub mod dependency;
pub mod error;
pub mod montecarlo;
pub mod process;
pub mod report;
pub mod resolvent;
pub mod sampling;
pub mod synth;
pub mod target;

pub use bounds::{compare_bounds, Applicability, BoundKind, BoundReport, TailBound};
pub use coupling::{CouplingTrace, DiscrepancyEstimate, MaximalCoupling};
pub use dependency::{compute_h_exact, tv_distance, InterdependenceMatrix};
pub use error::{MdcError, Result};
pub use montecarlo::TailEstimate;
pub use process::{Alphabet, Budget, Family, ProcessSpec, StepKernel, Symbol};
pub use report::{VerificationRecord, VerificationReport};
pub use resolvent::{resolvent, variance_proxy, Resolvent};
pub use target::{lipschitz_vector_oracle, SensitivityVector, TargetFunction};
