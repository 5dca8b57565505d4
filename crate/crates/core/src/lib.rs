//! Simulation and verification toolkit for the mediated-entanglement witness
//! of non-classicality.
//!
//! Two quantum probes `A` and `B` interact only through a mediator `M`. If a
//! protocol restricted to `A⊕M` and `M⊕B` steps leaves the probes entangled,
//! the mediator must possess a second variable that does not commute with its
//! classical observable. This crate makes every ingredient of that argument
//! executable at desk scale:
//!
//! - [`pauli`] / [`dense`] — exact sparse Pauli-string algebra plus a dense
//!   Hermitian backend (Jacobi eigensolver, matrix exponential, trace norms).
//! - [`descriptors`] — Heisenberg-picture descriptor sets, support tracking,
//!   microcausality and locality audits.
//! - [`states`] — density states, product initializations, partial trace and
//!   the Bloch-style decomposition of the probe⊕mediator state.
//! - [`witness`] — negativity, PPT verdicts, trace distance, separability
//!   sweeps and the no-signalling audit.
//! - [`mediators`] — the step/gate library, classical-compatibility checks,
//!   named demonstration protocols and random protocol families.
//! - [`protocol`] — staged execution in both pictures plus the final verdict.
//! - [`nonclassicality`] — information variables, superinformation media and
//!   observable-algebra closure.
//! - [`scenario`] — scenario files, reports and deterministic sweeps backing
//!   the command-line interface.

pub mod dense;
pub mod descriptors;
pub mod error;
pub mod mediators;
pub mod nonclassicality;
pub mod pauli;
pub mod protocol;
pub mod rng;
pub mod scenario;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
