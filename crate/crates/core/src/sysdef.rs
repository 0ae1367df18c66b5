//! The model family `u'''' + a u'' - u + f(u, b) = 0` written as a first-order
//! Hamiltonian system in `(u, v, p_u, p_v)`:
//!
//! ```text
//! u'   = v
//! v'   = p_v
//! p_u' = -u + f(u, b)
//! p_v' = -p_u - a v
//! ```
//!
//! with `H = p_u v + p_v^2/2 + a v^2/2 + u^2/2 - F(u, b)` and the reversal
//! `Q(u, v, p_u, p_v) = (u, -v, -p_u, p_v)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// One monomial `coeff * u^degree` of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub degree: u32,
    pub coeff: f64,
}

/// `f(u, b) = b * sum_k coeff_k u^k`, every degree at least 2.
///
/// Serialized as `{"terms": [{"degree": 3, "coeff": 11.0}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSpec")]
pub struct NonlinearitySpec {
    terms: Vec<Term>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    terms: Vec<Term>,
}

impl TryFrom<RawSpec> for NonlinearitySpec {
    type Error = ModelError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        NonlinearitySpec::new(raw.terms)
    }
}

impl NonlinearitySpec {
    pub fn new(terms: Vec<Term>) -> Result<Self, ModelError> {
        let mut prev: Option<u32> = None;
        for t in &terms {
            if t.degree < 2 {
                return Err(ModelError::DegreeTooLow(t.degree));
            }
            if !t.coeff.is_finite() {
                return Err(ModelError::NonFiniteCoefficient(t.degree));
            }
            if let Some(p) = prev {
                if t.degree <= p {
                    return Err(ModelError::DegreesNotIncreasing(p, t.degree));
                }
            }
            prev = Some(t.degree);
        }
        Ok(Self { terms })
    }

    /// Convenience constructor from `(degree, coeff)` pairs.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self, ModelError> {
        Self::new(
            pairs
                .iter()
                .map(|&(degree, coeff)| Term { degree, coeff })
                .collect(),
        )
    }

    /// `b (11 u^3 - 12 u^5)`, the family built around a `sech` profile.
    pub fn sech_family() -> Self {
        Self {
            terms: vec![
                Term { degree: 3, coeff: 11.0 },
                Term { degree: 5, coeff: -12.0 },
            ],
        }
    }

    /// `b (65/2 u^2 - 40 u^3)`, the family built around a `sech^2` profile.
    pub fn sech2_family() -> Self {
        Self {
            terms: vec![
                Term { degree: 2, coeff: 32.5 },
                Term { degree: 3, coeff: -40.0 },
            ],
        }
    }

    /// `b u^2`, the surface-tension water-wave model.
    pub fn quadratic() -> Self {
        Self {
            terms: vec![Term { degree: 2, coeff: 1.0 }],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `f(u, b)`.
    pub fn eval_f(&self, u: f64, b: f64) -> f64 {
        b * self
            .terms
            .iter()
            .map(|t| t.coeff * u.powi(t.degree as i32))
            .sum::<f64>()
    }

    /// The primitive `F(u, b)` normalized by `F(0, b) = 0`.
    pub fn eval_primitive(&self, u: f64, b: f64) -> f64 {
        b * self
            .terms
            .iter()
            .map(|t| t.coeff * u.powi(t.degree as i32 + 1) / f64::from(t.degree + 1))
            .sum::<f64>()
    }

    /// `df/du (u, b)`.
    pub fn eval_df(&self, u: f64, b: f64) -> f64 {
        b * self
            .terms
            .iter()
            .map(|t| t.coeff * f64::from(t.degree) * u.powi(t.degree as i32 - 1))
            .sum::<f64>()
    }
}

/// Parameters of one member of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub nonlinearity: NonlinearitySpec,
}

impl Params {
    pub fn new(a: f64, b: f64, nonlinearity: NonlinearitySpec) -> Result<Self, ModelError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(ModelError::NonFiniteParams { a, b });
        }
        Ok(Self { a, b, nonlinearity })
    }

    /// Same nonlinearity and `b`, different `a`.
    pub fn with_a(&self, a: f64) -> Self {
        Self {
            a,
            b: self.b,
            nonlinearity: self.nonlinearity.clone(),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        self.nonlinearity.eval_f(u, self.b)
    }

    pub fn primitive(&self, u: f64) -> f64 {
        self.nonlinearity.eval_primitive(u, self.b)
    }

    /// Linearization constant `c = 1 - df/du(0, b)` of `p_u' = -c u + ...`.
    pub fn linear_coefficient(&self) -> f64 {
        1.0 - self.nonlinearity.eval_df(0.0, self.b)
    }
}

/// A point `(u, v, p_u, p_v)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub u: f64,
    pub v: f64,
    pub p_u: f64,
    pub p_v: f64,
}

impl State {
    pub const ORIGIN: State = State {
        u: 0.0,
        v: 0.0,
        p_u: 0.0,
        p_v: 0.0,
    };

    pub const fn new(u: f64, v: f64, p_u: f64, p_v: f64) -> Self {
        Self { u, v, p_u, p_v }
    }

    pub const fn from_array(x: [f64; 4]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.p_u, self.p_v]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        (*self - *other)
            .to_array()
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Add for State {
    type Output = State;
    fn add(self, o: State) -> State {
        State::new(self.u + o.u, self.v + o.v, self.p_u + o.p_u, self.p_v + o.p_v)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, o: State) -> State {
        State::new(self.u - o.u, self.v - o.v, self.p_u - o.p_u, self.p_v - o.p_v)
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, s: State) -> State {
        State::new(self * s.u, self * s.v, self * s.p_u, self * s.p_v)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State::new(-self.u, -self.v, -self.p_u, -self.p_v)
    }
}

/// Time derivative of `s`.
pub fn vector_field(s: &State, p: &Params) -> State {
    State::new(s.v, s.p_v, -s.u + p.f(s.u), -s.p_u - p.a * s.v)
}

pub(crate) fn vector_field_array(x: &[f64; 4], p: &Params) -> [f64; 4] {
    [x[1], x[3], -x[0] + p.f(x[0]), -x[2] - p.a * x[1]]
}

pub fn hamiltonian(s: &State, p: &Params) -> f64 {
    s.p_u * s.v + 0.5 * s.p_v * s.p_v + 0.5 * p.a * s.v * s.v + 0.5 * s.u * s.u
        - p.primitive(s.u)
}

/// The reversal `Q`, an anticanonical involution.
pub fn reversal(s: &State) -> State {
    State::new(s.u, -s.v, -s.p_u, s.p_v)
}

/// `(v, p_u)`: zero exactly on the fixed-point set of [`reversal`].
pub fn chi_residual(s: &State) -> (f64, f64) {
    (s.v, s.p_u)
}
