use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("power exponent must be at least 1")]
    ZeroExponent,

    #[error("result length {len} exceeds the size cap {cap}")]
    SizeCap { len: u128, cap: usize },

    #[error("basis indices start at 1, got 0")]
    ZeroIndex,

    #[error("support length {len} exceeds the window cap {cap}")]
    WindowExceeded { len: usize, cap: usize },

    #[error("malformed descriptor `{text}`: {reason}")]
    Parse { text: String, reason: String },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("exact dual norm is not available for {0}")]
    NoExactDual(String),

    #[error("enumeration needs {needed} items but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("norming set exceeded {cap} functionals")]
    FunctionalCap { cap: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("{0}")]
    Invalid(String),
}
