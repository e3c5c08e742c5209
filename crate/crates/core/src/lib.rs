//! Simulation and semidefinite certification of EPR steering with hybrid
//! discrete/continuous-variable entangled light.
//!
//! The crate is organized bottom-up:
//!
//! - [`fock`]: truncated Fock-space states, loss and phase channels, fidelity,
//!   negativity and Wigner functions.
//! - [`homodyne`]: quadrature wavefunctions, sign-binned POVMs with phase noise,
//!   and quadrature sampling.
//! - [`photonics`]: the experiment configuration, the two-mode hybrid state in two
//!   model tiers, and the loss budget.
//! - [`assemblage`]: conditional states of Bob's mode and the non-signaling check.
//! - [`sdp`] and [`steering`]: a primal-dual interior-point solver and the
//!   steering-inequality problems built on it.
//! - [`tomography`]: binned homodyne records, maximum-likelihood reconstruction and
//!   Metropolis-Hastings error bars.
//! - [`pipeline`]: synthetic records and the reconstruct/certify/error-bar chain.
//! - [`io`]: JSON and CSV file formats.
//! - [`seed`]: per-stage seed derivation.

pub mod assemblage;
pub use assemblage::{compute_assemblage, ideal_assemblage, nonsignaling_report, Assemblage, NonSignalingReport};
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod io;
pub mod linalg;
pub mod photonics;
pub mod pipeline;
pub use photonics::{ExperimentConfig, ModelTier};
pub mod quadrature;
pub mod sdp;
pub mod seed;
pub mod steering;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, StateVector};



