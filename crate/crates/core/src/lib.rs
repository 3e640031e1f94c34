//! Periodic data and conjugacy rigidity for expanding circle maps and Anosov
//! diffeomorphisms of tori.
//!
//! The crate computes periodic orbits and their Lyapunov exponents, decides
//! whether the periodic data is constant, builds the conjugacy to the linear
//! model, grades its regularity, and checks the entropy and exponent
//! identities that tie these together.
//!
//! - [`circle`]: expanding maps of `S^1`, the Ulam transfer operator, symbolic
//!   and ODE conjugacies.
//! - [`torus`]: hyperbolic toral automorphisms and their perturbations,
//!   periodic orbit continuation, the Franks conjugacy, unstable volume growth.
//! - [`experiment`]: configuration files, pipelines and the verdict report
//!   behind the `rigidity` binary.

pub mod circle;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod torus;

pub use error::{Error, Result};
