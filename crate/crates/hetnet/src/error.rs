//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong when building models, integrating
/// trajectories, or classifying invariant sets.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is too small; at least 3 coordinates are required")]
    DimensionTooSmall(usize),

    #[error("coefficient matrix must be {n}x{n}, row {row} has length {len}")]
    NonSquareMatrix { n: usize, row: usize, len: usize },

    #[error("diagonal coefficient a[{index}][{index}] = {value} must be exactly zero")]
    DiagonalNonzero { index: usize, value: f64 },

    #[error("parameter {name} = {value} must be strictly positive")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("coordinate x[{index}] = {value} is negative but the phase space is the nonnegative orthant")]
    NegativeCoordinate { index: usize, value: f64 },

    #[error("model is already in Lotka-Volterra form")]
    AlreadyLotkaVolterra,

    #[error("Lotka-Volterra models are restricted to the nonnegative orthant")]
    UnrestrictedLotkaVolterra,

    #[error("axis index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("initial condition inadmissible: {0}")]
    InadmissibleInitialCondition(String),

    #[error("no heteroclinic connection from {from} to {to}: {reason}")]
    NoConnection {
        from: String,
        to: String,
        reason: String,
    },

    #[error("trajectory carries no equilibrium events")]
    NoEvents,

    #[error("itinerary has too few episodes ({found}) for residence statistics")]
    TooFewEpisodes { found: usize },

    #[error("operation requires dimension {expected}, model has dimension {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("inputs must be strictly positive: {0}")]
    NonPositiveInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
