use thiserror::Error;

/// Errors surfaced by the library. Refusals (caps, supercriticality,
/// missing fixed points) are ordinary values of this type so callers can
/// report them instead of guessing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance too large: {what} = {got}, cap = {cap}")]
    CapExceeded { what: &'static str, got: usize, cap: usize },

    #[error("no fixed point of q ↦ (1-exp(-dq/(k-1)))^(k-1) in [2/3,1] at k={k}, d={d} (iterate left the interval at q={q_exit:.6})")]
    NoFixedPoint { k: usize, d: f64, q_exit: f64 },

    #[error("branching process supercritical at k={k}, d={d}: mean-offspring spectral radius {rho:.6} >= 1")]
    Supercritical { k: usize, d: f64, rho: f64 },

    #[error("sampled tree exceeded hard cap of {cap} vertices (supercritical parameters or bad q table)")]
    TreeTooLarge { cap: usize },

    #[error("bracketing failed for Sigma_k at k={k}: Sigma({d_lo:.6}) = {s_lo:.6} +- {se_lo:.6}, Sigma({d_hi:.6}) = {s_hi:.6} +- {se_hi:.6} (need opposite signs with 3-sigma margin)")]
    NoSignChange { k: usize, d_lo: f64, s_lo: f64, se_lo: f64, d_hi: f64, s_hi: f64, se_hi: f64 },

    #[error("inconsistent Bethe term: {0}")]
    BetheInconsistent(String),

    #[error("decorated tree has no legal coloring")]
    NoLegalColoring,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
