use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("'{text}' is not {period}-periodic: worst mismatch {gap:.3e} at t = {t}")]
    NotPeriodic { text: String, period: f64, t: f64, gap: f64 },
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },
    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("spec file line {line}: {msg}")]
    SpecFile { line: usize, msg: String },
    #[error("period integral of the kernel coefficient must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("kernel arguments ({t}, {s}) lie outside the strip t <= s <= t + omega")]
    OutsideStrip { t: f64, s: f64 },
    #[error("quadrature tolerance {tol:e} not reached (last change {change:e})")]
    QuadratureBudget { tol: f64, change: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operator input is identically zero")]
    ZeroInput,
    #[error("nonpositive value {value} at grid node {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("nonpositive denominator {0}")]
    NonPositiveDenominator(f64),
    #[error("bisection failed: {0}")]
    Bisection(String),
    #[error("Picard iterate left the admissible norm range: {norm} not in [{lo}, {hi}] at step {step}")]
    Divergence { norm: f64, lo: f64, hi: f64, step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("state left the positive quadrant at t = {t}")]
    PositivityLoss { t: f64 },
    #[error("Newton iteration failed: {0}")]
    Newton(String),
}

pub type Result<T> = std::result::Result<T, Error>;
