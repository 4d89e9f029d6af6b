use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The series parameters violate the convergence condition
    /// b1 + b2 - a1 - a2 - a3 > 0, so the sum diverges.
    #[error("series diverges: convergence margin {margin} is not positive")]
    SeriesDivergent { margin: f64 },

    /// A series term overflowed f64 range before the sum could settle.
    #[error("series evaluation failed: term overflow after {terms} terms")]
    SeriesOverflow { terms: u64 },

    /// A sampler exceeded its redraw budget without producing a
    /// representable value (only reachable for pathological shapes).
    #[error("sampler gave up after {attempts} redraws")]
    RedrawBudgetExhausted { attempts: u32 },

    /// Input data cannot be fit (infeasible moments, zero variance, ...).
    #[error("infeasible data: {0}")]
    Infeasible(String),

    /// An index addressed a dimension or pair that does not exist.
    #[error("index error: {0}")]
    Index(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
