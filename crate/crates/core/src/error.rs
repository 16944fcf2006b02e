use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of blocks, profiles or regularizers do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    /// The game does not satisfy `A^{ji} = -(A^{ij})^T` / `A^{ii} = 0`.
    #[error("game is not zero-sum: {violations} violating block pair(s), max deviation {max_deviation:e}")]
    NotZeroSum { violations: usize, max_deviation: f64 },

    #[error("strategy of agent {agent} is not fully mixed: coordinate {coord} = {value:e}")]
    NotFullyMixed { agent: usize, coord: usize, value: f64 },

    #[error("strategy of agent {agent} is not on the simplex: sum = {sum}")]
    NotOnSimplex { agent: usize, sum: f64 },

    #[error("no fully-mixed equilibrium found: {0}")]
    NoEquilibrium(String),

    #[error("equilibrium not interior: agent {agent}, coordinate {coord} = {value:e}")]
    EquilibriumNotInterior { agent: usize, coord: usize, value: f64 },

    /// A regularizer was evaluated outside its validity region.
    #[error("regularizer domain error at coordinate {coord}: value {value:e}")]
    Domain { coord: usize, value: f64 },

    /// The implicit optimistic system could not be solved reliably.
    #[error("implicit system not solvable for alpha = {alpha}: {reason}")]
    Singular { alpha: f64, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Failure while integrating; carries the time of the failing step.
    #[error("integration failed at t = {time}: {source}")]
    Integration {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step size underflow at t = {time}: dt = {dt:e} (system too stiff)")]
    StepUnderflow { time: f64, dt: f64 },

    #[error("unknown preset `{name}`; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },

    #[error("invalid game json: {0}")]
    GameFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
