use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("cell {index} holds color {value}, outside [0, {colors})")]
    CellOutOfRange { index: usize, value: u64, colors: u64 },

    #[error("work budget exceeded: {required} units required, budget is {budget}")]
    WorkBudgetExceeded { required: u128, budget: u64 },

    #[error("index out of range: {what} = {index}, limit {limit}")]
    IndexOutOfRange { what: &'static str, index: u64, limit: u64 },

    #[error("no balanced table found after {attempts} attempts")]
    NotFound { attempts: u64 },

    #[error("no good seed for row {row}")]
    NoGoodSeed { row: u32 },

    #[error("premise does not hold: {0}")]
    InfeasiblePremise(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("no design with {sets} sets fits in {budget} seed positions")]
    BudgetTooSmall { sets: usize, budget: usize },

    #[error("no two-source table passed verification within {attempts} attempts")]
    NoBalancedTable { attempts: u64 },
}

impl Error {
    /// Errors that reflect the outcome of a computation rather than bad input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::NotFound { .. }
                | Error::NoGoodSeed { .. }
                | Error::InfeasiblePremise(_)
                | Error::NoBalancedTable { .. }
                | Error::BudgetTooSmall { .. }
                | Error::WorkBudgetExceeded { .. }
        )
    }
}
