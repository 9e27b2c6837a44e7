use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is out of range: {allowed}")]
    OutOfRange {
        what: &'static str,
        value: String,
        allowed: &'static str,
    },

    #[error("product rule with {nodes} nodes exceeds the node budget of {budget}")]
    NodeBudget { nodes: u128, budget: usize },

    #[error("index {index} out of bounds for {len} quadrature nodes")]
    NodeIndex { index: usize, len: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid response for {family}: {detail}")]
    InvalidResponse {
        family: &'static str,
        detail: String,
    },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("mode search did not converge after {iterations} iterations (|grad|_inf = {grad_norm:e}, last iterate {last:?})")]
    InnerNonConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    #[error("non-finite log-likelihood at quadrature node {node}")]
    NonFinite { node: usize },

    #[error("group {index} ({id}): {source}")]
    Group {
        index: usize,
        id: String,
        source: Box<Error>,
    },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("standard errors are unavailable for this fit")]
    MissingStdErrors,

    #[error("oracle tolerances disagree at m = {m}: {coarse} vs {fine}")]
    OracleInconsistent { m: usize, coarse: f64, fine: f64 },

    #[error("rate unidentifiable: approximation error is at rounding level (max median error {max_error:e})")]
    RateUnidentifiable { max_error: f64 },
}

impl Error {
    pub(crate) fn range(
        what: &'static str,
        value: impl core::fmt::Display,
        allowed: &'static str,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: alloc::format!("{value}"),
            allowed,
        }
    }

    pub(crate) fn in_group(self, index: usize, id: &str) -> Self {
        match self {
            e @ Error::Group { .. } => e,
            e => Error::Group {
                index,
                id: String::from(id),
                source: Box::new(e),
            },
        }
    }
}
