//! Linearization at the origin.
//!
//! The Jacobian of the vector field at `0` has characteristic polynomial
//! `lambda^4 + a lambda^2 - c` with `c = 1 - df/du(0, b)`. It is solved as a
//! quadratic in `mu = lambda^2`; the signs of the two `mu` roots classify the
//! equilibrium.

use serde::{Deserialize, Serialize};

use crate::error::HomoclinicError;
use crate::sysdef::{Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    /// One real pair `±lambda`, one imaginary pair `±i omega`.
    SaddleCenter,
    /// Two real pairs.
    SaddleSaddle,
    /// Two imaginary pairs.
    CenterCenter,
    /// A complex quartet `±alpha ± i beta` (negative discriminant in `mu`).
    SaddleFocus,
    /// A zero eigenvalue.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSpectrum {
    pub kind: EquilibriumKind,
    pub a: f64,
    pub c: f64,
    pub lambda: Option<f64>,
    pub omega: Option<f64>,
    pub unstable_eigvec: Option<State>,
}

/// Roots of `mu^2 + a mu - c = 0`, larger first. `None` when complex.
fn mu_roots(a: f64, c: f64) -> Option<(f64, f64)> {
    let disc = a * a + 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // q carries the root that does not cancel; the other follows from mu1 mu2 = -c.
    let q = -0.5 * (a + a.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        // a = 0 and c = 0
        (0.0, 0.0)
    } else {
        (q, -c / q)
    };
    Some(if r1 >= r2 { (r1, r2) } else { (r2, r1) })
}

/// Unit eigenvector of the Jacobian for the real eigenvalue `lambda`,
/// proportional to `(1, lambda, -c/lambda, lambda^2)`.
fn eigvec(lambda: f64, c: f64) -> State {
    let e = State::new(1.0, lambda, -c / lambda, lambda * lambda);
    (1.0 / e.norm()) * e
}

/// Classifies the origin for the linear part `(a, c)`.
pub fn classify_linear(a: f64, c: f64) -> EquilibriumSpectrum {
    let mut out = EquilibriumSpectrum {
        kind: EquilibriumKind::Degenerate,
        a,
        c,
        lambda: None,
        omega: None,
        unstable_eigvec: None,
    };
    let Some((mu_hi, mu_lo)) = mu_roots(a, c) else {
        out.kind = EquilibriumKind::SaddleFocus;
        return out;
    };
    if mu_hi == 0.0 || mu_lo == 0.0 {
        return out;
    }
    if mu_hi > 0.0 {
        let lambda = mu_hi.sqrt();
        out.lambda = Some(lambda);
        out.unstable_eigvec = Some(eigvec(lambda, c));
    }
    if mu_lo < 0.0 {
        out.omega = Some((-mu_lo).sqrt());
    }
    out.kind = match (mu_hi > 0.0, mu_lo > 0.0) {
        (true, false) => EquilibriumKind::SaddleCenter,
        (true, true) => EquilibriumKind::SaddleSaddle,
        (false, false) => EquilibriumKind::CenterCenter,
        (false, true) => unreachable!("roots are ordered"),
    };
    if out.kind == EquilibriumKind::CenterCenter {
        out.omega = Some((-mu_lo).sqrt().max((-mu_hi).sqrt()));
    }
    out
}

pub fn classify(p: &Params) -> EquilibriumSpectrum {
    classify_linear(p.a, p.linear_coefficient())
}

/// The unstable eigenvalue and its unit eigenvector (positive `u` component).
pub fn unstable_eigenpair(p: &Params) -> Result<(f64, State), HomoclinicError> {
    let spec = classify(p);
    match (spec.kind, spec.lambda, spec.unstable_eigvec) {
        (EquilibriumKind::SaddleCenter, Some(l), Some(e)) => Ok((l, e)),
        (kind, _, _) => Err(HomoclinicError::NotSaddleCenter(kind)),
    }
}

/// Jacobian of the vector field at the origin, row-major in `(u, v, p_u, p_v)`.
pub fn jacobian_at_origin(a: f64, c: f64) -> [[f64; 4]; 4] {
    [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-c, 0.0, 0.0, 0.0],
        [0.0, -a, -1.0, 0.0],
    ]
}
