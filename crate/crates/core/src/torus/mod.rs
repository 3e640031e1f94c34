//! Anosov diffeomorphisms of `T^d` homotopic to hyperbolic automorphisms:
//! periodic data, invariant flags, unstable volume growth and the Franks
//! conjugacy to the linear model.

pub mod conjugacy;
pub mod dynamics;
pub mod entropy;
pub mod frames;
pub mod lattice;
pub mod periodic;

pub use dynamics::{
    cone_certify, eigen_split, ConeReport, ConjugateToral, EigenSplit, IntAutomorphism, ToralMap, TorusDiffeo,
    TorusMap, TrigField, TrigMode,
};
