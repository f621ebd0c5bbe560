//! Error types shared across the solver crates.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value (grid size, parameter range, initial data).
    #[error("configuration error: {0}")]
    Config(String),

    /// Density reached the vacuum guard.
    #[error("vacuum: min rho = {min_rho:.6e} fell below floor {floor:.6e} at t = {time:.6e}")]
    Vacuum { min_rho: f64, floor: f64, time: f64 },

    /// The per-step fixed-point loop failed to reach tolerance.
    #[error("picard loop did not converge: {iters} iterations, last relative change {last_delta:.3e}")]
    PicardDiverged { iters: usize, last_delta: f64 },

    /// A banded linear system was numerically singular.
    #[error("singular banded system (pivot {pivot:.3e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    /// Residual of a banded solve exceeded the contract bound.
    #[error("banded solve residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    /// Argument outside a function's mathematical domain (e.g. rho <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// Least-squares fit attempted on degenerate data.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Time stepping aborted after exhausting the retry budget.
    #[error("run aborted at t = {time:.6e} after {retries} dt-halvings: {source}")]
    RunAborted {
        time: f64,
        retries: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
