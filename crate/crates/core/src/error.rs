use thiserror::Error;

/// Errors raised by the numerical pipelines.
///
/// Every variant is a signal that the input map left the regime in which the
/// corresponding construction is valid, or that an iterative solver did not
/// converge within its budget.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("map is not expanding: certified lower bound on F' is {bound} (<= 1)")]
    NotExpanding { bound: f64 },

    #[error("map is not orientation preserving or not a diffeomorphism: minimum derivative {min_derivative}")]
    NotDiffeomorphism { min_derivative: f64 },

    #[error("requested {requested} items exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("root bracketing failed for branch {branch} at period {period}")]
    RootBracketFailure { period: usize, branch: i64 },

    #[error("periodic data is not constant: exponents range over [{min_exponent}, {max_exponent}]")]
    ConstantDataViolated { min_exponent: f64, max_exponent: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant density is not unique: restarts differ by {l1_gap} in L1")]
    NonUniqueDensity { l1_gap: f64 },

    #[error("density drops to {value} at {at}, below the admissible floor")]
    DensityVanishes { at: f64, value: f64 },

    #[error("conjugacy has wrong degree: h(1) - h(0) = {increment}")]
    EndpointMismatch { increment: f64 },

    #[error("matrix is not hyperbolic: eigenvalue modulus {modulus} is within tolerance of 1")]
    NotHyperbolic { modulus: f64 },

    #[error("matrix is not an automorphism of the torus: det = {det}")]
    NotAutomorphism { det: i128 },

    #[error("spectrum is not real and simple")]
    NotSimpleSpectrum,

    #[error("cone condition violated at {point:?} (margin {margin})")]
    ConeViolation { point: Vec<f64>, margin: f64 },

    #[error("Newton iteration diverged from seed {seed:?} at period {period}")]
    NewtonDiverged { seed: Vec<f64>, period: usize },

    #[error("seeds {first} and {second} converge to the same orbit")]
    DuplicateOrbit { first: usize, second: usize },

    #[error("exponent signature of orbit at {point:?} does not match the linearization")]
    SignatureMismatch { point: Vec<f64> },

    #[error("inversion of the map failed at {point:?}")]
    InversionFailure { point: Vec<f64> },

    #[error("polyline resolution exhausted: {points} points exceed the limit of {max_points}")]
    ResolutionExhausted { points: usize, max_points: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
