use thiserror::Error;

use crate::spectral::EquilibriumKind;
use crate::sysdef::State;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("nonlinearity term of degree {0}: degrees must be at least 2")]
    DegreeTooLow(u32),
    #[error("nonlinearity degrees must be strictly increasing ({0} followed by {1})")]
    DegreesNotIncreasing(u32, u32),
    #[error("nonlinearity coefficient of degree {0} is not finite")]
    NonFiniteCoefficient(u32),
    #[error("parameters must be finite (a = {a}, b = {b})")]
    NonFiniteParams { a: f64, b: f64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrateError {
    #[error("step size {h:e} fell below h_min at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64, last: State },
    #[error("state became non-finite after t = {t}")]
    NonFiniteState { t: f64, last: State },
    #[error("invalid step control: {0}")]
    InvalidControl(&'static str),
    #[error("time span [{0}, {1}] is degenerate")]
    DegenerateSpan(f64, f64),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HomoclinicError {
    #[error("equilibrium is {0:?}, not a saddle-center")]
    NotSaddleCenter(EquilibriumKind),
    #[error("invalid shot configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("bracket [{a_lo}, {a_hi}] does not hold a sign change of crossing {k}")]
    BracketInvalid { a_lo: f64, a_hi: f64, k: usize },
    #[error("crossing {k} is not continuous on [{a_lo}, {a_hi}]; split the bracket")]
    CrossingIndexJumped { a_lo: f64, a_hi: f64, k: usize },
    #[error("miss {miss:e} at crossing {k} is above the reconstruction gate")]
    MissTooLarge { miss: f64, k: usize },
    #[error("shot reached fewer than {k} crossings")]
    CrossingAbsent { k: usize },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScanError {
    #[error("grid has {0} cells, above the limit of 10^7")]
    GridTooLarge(u64),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error(transparent)]
    Homoclinic(#[from] HomoclinicError),
}
