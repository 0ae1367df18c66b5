//! Closed-form homoclinic solutions used as ground truth.
//!
//! With `w = sech(alpha x)` and `t = tanh(alpha x)`:
//!
//! * `u = w`:   `u'' = alpha^2 (w - 2 w^3)`,  `u'''' = alpha^4 (w - 20 w^3 + 24 w^5)`;
//!   matching `u'''' + a u'' - u + b (11 u^3 - 12 u^5)` term by term forces
//!   `alpha^4 = 1/2`, `a = sqrt(2)/2`, `b = 1`.
//! * `u = w^2`: `u'' = alpha^2 (4u - 6u^2)`, `u'''' = alpha^4 (16u - 120u^2 + 120u^3)`;
//!   with `alpha = 1` the equation with `f = b (65/2 u^2 - 40 u^3)` closes at
//!   `a = -15/4`, `b = 3`.

use crate::sysdef::{NonlinearitySpec, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Zero,
    Sech,
    Sech2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution {
    pub name: &'static str,
    pub profile: Profile,
    /// Argument scaling: the profile is evaluated at `alpha x`.
    pub alpha: f64,
    /// The parameters at which the profile is an exact solution.
    pub params_star: Params,
}

/// `sech(y)` without overflowing `cosh` for large `|y|`.
fn sech(y: f64) -> f64 {
    let e = (-y.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

impl KnownSolution {
    /// `u(x) = sech(2^(-1/4) x)` at `(a, b) = (sqrt(2)/2, 1)`.
    pub fn sech() -> Self {
        Self {
            name: "sech",
            profile: Profile::Sech,
            alpha: 2f64.powf(-0.25),
            params_star: Params {
                a: std::f64::consts::FRAC_1_SQRT_2,
                b: 1.0,
                nonlinearity: NonlinearitySpec::sech_family(),
            },
        }
    }

    /// `u(x) = sech^2(x)` at `(a, b) = (-15/4, 3)`.
    pub fn sech2() -> Self {
        Self {
            name: "sech2",
            profile: Profile::Sech2,
            alpha: 1.0,
            params_star: Params {
                a: -3.75,
                b: 3.0,
                nonlinearity: NonlinearitySpec::sech2_family(),
            },
        }
    }

    /// The trivial solution `u = 0`, valid for any parameters.
    pub fn zero(params: Params) -> Self {
        Self {
            name: "zero",
            profile: Profile::Zero,
            alpha: 1.0,
            params_star: params,
        }
    }

    pub fn registry() -> Vec<KnownSolution> {
        vec![Self::sech(), Self::sech2()]
    }

    /// `[u, u', u'', u''', u'''']` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        let al = self.alpha;
        let y = al * x;
        let w = sech(y);
        let t = y.tanh();
        let (a2, a3, a4) = (al * al, al * al * al, al * al * al * al);
        match self.profile {
            Profile::Zero => [0.0; 5],
            Profile::Sech => {
                let w2 = w * w;
                [
                    w,
                    -al * w * t,
                    a2 * (w - 2.0 * w * w2),
                    a3 * w * t * (6.0 * w2 - 1.0),
                    a4 * (w - 20.0 * w * w2 + 24.0 * w * w2 * w2),
                ]
            }
            Profile::Sech2 => {
                let u = w * w;
                [
                    u,
                    -2.0 * al * u * t,
                    a2 * (4.0 * u - 6.0 * u * u),
                    a3 * 8.0 * u * t * (3.0 * u - 1.0),
                    a4 * (16.0 * u - 120.0 * u * u + 120.0 * u * u * u),
                ]
            }
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    /// Phase-space point of the solution at `x`: `(u, u', -u''' - a u', u'')`.
    pub fn state(&self, x: f64) -> State {
        let d = self.derivatives(x);
        State::new(d[0], d[1], -d[3] - self.params_star.a * d[1], d[2])
    }
}

/// Max over `x_grid` of `|u'''' + a u'' - u + f(u, b)|` at the solution's parameters.
pub fn closed_form_residual(ks: &KnownSolution, x_grid: &[f64]) -> f64 {
    let p = &ks.params_star;
    x_grid
        .iter()
        .map(|&x| {
            let d = ks.derivatives(x);
            (d[4] + p.a * d[2] - d[0] + p.f(d[0])).abs()
        })
        .fold(0.0, f64::max)
}

/// `n + 1` evenly spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        uniform_grid(-10.0, 10.0, 2000)
    }

    #[test]
    fn residuals_vanish() {
        assert!(closed_form_residual(&KnownSolution::sech2(), &grid()) < 1e-8);
        assert!(closed_form_residual(&KnownSolution::sech(), &grid()) < 1e-8);
        let z = KnownSolution::zero(KnownSolution::sech().params_star);
        assert_eq!(closed_form_residual(&z, &grid()), 0.0);
    }

    #[test]
    fn unscaled_sech_is_not_a_solution() {
        let mut ks = KnownSolution::sech();
        ks.alpha = 1.0;
        assert!(closed_form_residual(&ks, &grid()) > 1e-2);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for ks in KnownSolution::registry() {
            let h = 1e-4;
            for i in 0..40 {
                let x = -4.0 + 0.2 * i as f64 + 0.013;
                let d = ks.derivatives(x);
                let (up, down) = (ks.derivatives(x + h), ks.derivatives(x - h));
                for k in 1..5 {
                    let fd = (up[k - 1] - down[k - 1]) / (2.0 * h);
                    assert!((fd - d[k]).abs() < 1e-6, "{} k={k} x={x}", ks.name);
                }
            }
        }
    }

    #[test]
    fn sech_overflow_safe() {
        assert!(sech(800.0) >= 0.0 && sech(800.0) < 1e-300);
        assert_eq!(sech(0.0), 1.0);
    }
}
