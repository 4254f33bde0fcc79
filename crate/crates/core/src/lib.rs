//! Steady 2D Euler flows of perturbation type by the vorticity method.
//!
//! The crate maximizes the penalized energy
//! `𝓔(ω) = ½∫∫G ωω + ∫qω − Λ∫F(ω/Λ)` over vorticities with
//! `0 ≤ ω ≤ Λ(κ)` and `∫ω = κ` on a lattice domain, and measures how the
//! maximizers behave as the circulation `κ` shrinks.
//!
//! * [`domain`]: lattice domains (rectangle, unit disk) and vortex sites.
//! * [`elliptic`]: Green operator, harmonic extension, background flow.
//! * [`profiles`]: profile functions, strength schedules, hypothesis checks.
//! * [`variational`]: functionals, the multiplier problem and the solvers.
//! * [`diagnostics`]: weak residual, support metrics, κ sweeps.
//! * [`io`]: field files, solution sidecars and sweep CSV.

pub mod diagnostics;
pub mod domain;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod field;
pub mod io;
pub mod profiles;
pub mod variational;

pub use domain::{Domain, DomainSpec, Point, VortexSite};
pub use elliptic::{Background, Backend, BoundaryFlux, GreenOperator};
pub use error::{Error, Result};
pub use exec::Exec;
pub use field::ScalarField;
pub use profiles::{Profile, StrengthSchedule};
