//! Simulation toolkit for certification experiments that drop the
//! independent-and-identically-distributed assumption.
//!
//! The crate covers the pieces needed to exhibit, by exact enumeration, linear
//! programming and Monte Carlo, what adversarial devices with memory can do
//! against hypothesis tests:
//!
//! * [`correlations`]: behaviors `P(a|x)`, transcripts, frequency estimates,
//!   distances and linear witnesses.
//! * [`devices`]: iid, clock, shared-sequence, fixed-strategy and
//!   triangle-local devices.
//! * [`hypothesis`]: general binary hypothesis tests, their exact and Monte
//!   Carlo acceptance probabilities, the K-sigma frequency test and an
//!   Azuma–Hoeffding martingale test.
//! * [`convexity`]: convex-hull membership with decomposition or separation
//!   certificates, backed by the simplex solver in [`lp`].
//! * [`selftest`]: the two-copy witness `W_ρ` and its exposedness scan.
//! * [`triangle`]: triangle-network assets and memory-attack demonstrations.

pub mod convexity;
pub mod correlations;
pub mod devices;
pub mod hypothesis;
pub mod lp;
pub mod rng;
pub mod scalar;
pub mod selftest;
pub mod triangle;

pub use correlations::{Alphabet, Behavior, FrequencyTable, LinearWitness, Transcript};
pub use devices::{DeviceModel, DeterministicStrategy, PartyStructure, TriangleLocalModel};
