//! Expanding maps of the circle: dynamics, periodic data, invariant densities
//! and conjugacies to the linear model `E_d(x) = d x mod 1`.

pub mod conjugacy;
pub mod dynamics;
pub mod periodic;
pub mod transfer;

pub use conjugacy::{
    bilipschitz_certificate, holder_exponent, ode_conjugacy, symbolic_conjugacy, ConjugacyApprox, HolderFit,
};
pub use dynamics::{
    anchor_fixed_point, check_expanding, distortion_constant, CircleDiffeo, CircleLift, CircleMap,
    ExpansionCertificate, SmoothConjugate, TrigSeries, TrigTerm,
};
pub use periodic::{
    anchored_partition, constant_data_statistic, injectivity_partition, periodic_points, periodic_points_up_to,
    inequality_report, ConstantDataStatistic, InjectivityPartition, PeriodicOrbit,
};
pub use transfer::{acim_exponent, invariant_density, ulam_matrix, DensityApprox, DensityOptions, UlamMatrix};
