//! Quantum mechanics in terms of worlds: a world is an ordered orthonormal
//! basis, observables are relative to a world, and states live on the
//! diagonal algebra of a world.
//!
//! Module map:
//! - [`hilbert`]: complex linear algebra substrate.
//! - [`worlds`]: worlds, phase identification, evolution, product worlds.
//! - [`observables`]: observables diagonal in a world.
//! - [`states`]: diagonal states, Born rule, Markovian updates.
//! - [`banach`]: Banach limits on almost-convergent sequences.
//! - [`extension`]: upper/lower extension envelopes as convex optimization.
//! - [`bell`]: the CHSH experiment.
//! - [`cli`]: configuration and record output for the `qworlds` binary.

pub mod banach;
pub mod bell;
pub mod cli;
pub mod error;
pub mod extension;
pub mod hilbert;
pub mod observables;
pub mod states;
pub mod worlds;

pub use error::{Error, Result};
