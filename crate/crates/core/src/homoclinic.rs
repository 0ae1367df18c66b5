//! Shooting along the one-dimensional unstable manifold of the origin.
//!
//! An orbit leaving the origin that reaches the fixed-point set of the
//! reversal `Q` (`v = p_u = 0`) is homoclinic: by `psi_t Q = Q psi_{-t}` its
//! continuation past the hit is the `Q`-image of its own past. The scalar
//! miss function is `v` at the k-th crossing of `{p_u = 0}`; its zeros in
//! `a` (at fixed `b`) are the homoclinic parameter values.

use serde::{Deserialize, Serialize};

use crate::error::{HomoclinicError, IntegrateError};
use crate::integrate::{integrate, integrate_with, CrossingRecord, Flow, StepControl, Trajectory};
use crate::spectral::unstable_eigenpair;
use crate::sysdef::{reversal, NonlinearitySpec, Params, State};

/// Bisection stops once the bracket is this narrow.
pub const ROOT_A_TOL: f64 = 1e-10;
/// A refined root must reproduce a miss at most this large.
pub const CERTIFY_TOL: f64 = 1e-7;
/// `reconstruct_orbit` refuses locus points whose miss exceeds this.
pub const RECONSTRUCT_GATE: f64 = 1e-8;
/// Crossing times at the two ends of a converged bracket must agree this well.
const ROOT_T_GAP: f64 = 1e-3;

/// Branch of the unstable manifold: `+e` or `-e` with `e` the eigenvector
/// whose `u` component is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    Minus,
    Plus,
}

impl Sigma {
    pub const BOTH: [Sigma; 2] = [Sigma::Plus, Sigma::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Sigma::Plus => 1.0,
            Sigma::Minus => -1.0,
        }
    }

    /// `+1` / `-1`, as written to CSV.
    pub fn as_int(self) -> i32 {
        self.sign() as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotConfig {
    pub epsilon: f64,
    pub sigma: Sigma,
    pub t_max: f64,
    pub r_max: f64,
    pub k_max: usize,
    pub ctrl: StepControl,
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-7,
            sigma: Sigma::Plus,
            t_max: 200.0,
            r_max: 10.0,
            k_max: 8,
            ctrl: StepControl::default(),
        }
    }
}

impl ShotConfig {
    pub fn with_sigma(&self, sigma: Sigma) -> Self {
        Self { sigma, ..*self }
    }

    pub fn validate(&self) -> Result<(), HomoclinicError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-3) {
            return Err(HomoclinicError::InvalidConfig("epsilon must lie in (0, 1e-3]"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(HomoclinicError::InvalidConfig("t_max must be positive"));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(HomoclinicError::InvalidConfig("r_max must be positive"));
        }
        if self.k_max < 1 {
            return Err(HomoclinicError::InvalidConfig("k_max must be at least 1"));
        }
        self.ctrl.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// `k_max` crossings were collected.
    Crossed,
    /// The orbit left the ball of radius `r_max`.
    Escaped,
    /// `t_max` was reached.
    TimedOut,
    IntegratorFailed,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Crossed => "crossed",
            Outcome::Escaped => "escaped",
            Outcome::TimedOut => "timed_out",
            Outcome::IntegratorFailed => "integrator_failed",
        }
    }
}

/// Result of one shot: the crossings of `{p_u = 0}` along the manifold branch.
#[derive(Debug, Clone, PartialEq)]
pub struct MissProfile {
    pub params: Params,
    pub sigma: Sigma,
    pub crossings: Vec<CrossingRecord>,
    pub outcome: Outcome,
    pub failure: Option<IntegrateError>,
}

impl MissProfile {
    /// The k-th crossing (1-based).
    pub fn crossing(&self, k: usize) -> Option<&CrossingRecord> {
        k.checked_sub(1).and_then(|i| self.crossings.get(i))
    }

    /// `v` at the k-th crossing.
    pub fn miss(&self, k: usize) -> Option<f64> {
        self.crossing(k).map(|c| c.s.v)
    }
}

/// A refined homoclinic parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    pub a_star: f64,
    pub b: f64,
    pub sigma: Sigma,
    pub k: usize,
    pub miss_residual: f64,
    pub lambda: f64,
}

/// `sigma * epsilon * e_u`.
pub fn seed_unstable(p: &Params, cfg: &ShotConfig) -> Result<State, HomoclinicError> {
    let (_, e) = unstable_eigenpair(p)?;
    Ok((cfg.sigma.sign() * cfg.epsilon) * e)
}

/// Integrates the manifold branch until `k_max` crossings, escape, or `t_max`.
pub fn shoot(p: &Params, cfg: &ShotConfig) -> Result<MissProfile, HomoclinicError> {
    Ok(shoot_path(p, cfg)?.0)
}

/// [`shoot`] that also returns the integrated path (`None` when the
/// integrator failed part way).
pub fn shoot_path(
    p: &Params,
    cfg: &ShotConfig,
) -> Result<(MissProfile, Option<Trajectory>), HomoclinicError> {
    cfg.validate()?;
    let seed = seed_unstable(p, cfg)?;
    let mut crossings = Vec::with_capacity(cfg.k_max);
    let mut outcome = Outcome::TimedOut;
    let result = integrate_with(seed, p, (0.0, cfg.t_max), &cfg.ctrl, |seg, ev| {
        if let Some(ev) = ev {
            crossings.push(*ev);
            if crossings.len() >= cfg.k_max {
                outcome = Outcome::Crossed;
                return Flow::Stop;
            }
        }
        if State::from_array(seg.y1).norm() > cfg.r_max {
            outcome = Outcome::Escaped;
            return Flow::Stop;
        }
        Flow::Continue
    });
    let (path, failure) = match result {
        Ok(tr) => (Some(tr), None),
        Err(e) => {
            outcome = Outcome::IntegratorFailed;
            (None, Some(e))
        }
    };
    let profile = MissProfile {
        params: p.clone(),
        sigma: cfg.sigma,
        crossings,
        outcome,
        failure,
    };
    Ok((profile, path))
}

/// `v` at the k-th crossing, `None` if the shot produced fewer than `k`.
pub fn miss(p: &Params, cfg: &ShotConfig, k: usize) -> Result<Option<f64>, HomoclinicError> {
    Ok(shoot(p, cfg)?.miss(k))
}

/// Bisection in `a` on a sign change of the k-th miss at fixed `b`.
pub fn refine_root(
    b: f64,
    spec: &NonlinearitySpec,
    bracket: (f64, f64),
    cfg: &ShotConfig,
    k: usize,
) -> Result<LocusPoint, HomoclinicError> {
    let (mut lo, mut hi) = bracket;
    let invalid = HomoclinicError::BracketInvalid {
        a_lo: bracket.0,
        a_hi: bracket.1,
        k,
    };
    let jumped = HomoclinicError::CrossingIndexJumped {
        a_lo: bracket.0,
        a_hi: bracket.1,
        k,
    };
    let base = Params::new(lo, b, spec.clone()).map_err(|_| invalid.clone())?;
    if !hi.is_finite() || lo == hi {
        return Err(invalid);
    }
    let at = |a: f64| -> Result<Option<CrossingRecord>, HomoclinicError> {
        Ok(shoot(&base.with_a(a), cfg)?.crossing(k).copied())
    };
    let (Some(mut c_lo), Some(mut c_hi)) = (at(lo)?, at(hi)?) else {
        return Err(invalid);
    };
    if c_lo.s.v.signum() == c_hi.s.v.signum() && c_lo.s.v != 0.0 && c_hi.s.v != 0.0 {
        return Err(invalid);
    }
    if c_lo.direction != c_hi.direction {
        return Err(jumped);
    }
    let dir = c_lo.direction;

    if c_lo.s.v == 0.0 {
        hi = lo;
        c_hi = c_lo;
    } else if c_hi.s.v == 0.0 {
        lo = hi;
        c_lo = c_hi;
    }
    while (hi - lo).abs() > ROOT_A_TOL {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let c_mid = at(mid)?.ok_or_else(|| jumped.clone())?;
        if c_mid.direction != dir {
            return Err(jumped);
        }
        if c_mid.s.v == 0.0 {
            lo = mid;
            hi = mid;
            c_lo = c_mid;
            c_hi = c_mid;
            break;
        }
        if c_mid.s.v.signum() == c_lo.s.v.signum() {
            lo = mid;
            c_lo = c_mid;
        } else {
            hi = mid;
            c_hi = c_mid;
        }
    }
    if (c_lo.t - c_hi.t).abs() > ROOT_T_GAP {
        return Err(jumped);
    }
    let a_star = 0.5 * (lo + hi);
    let p_star = base.with_a(a_star);
    let c_star = shoot(&p_star, cfg)?
        .crossing(k)
        .copied()
        .ok_or_else(|| jumped.clone())?;
    if c_star.s.v.abs() > CERTIFY_TOL {
        return Err(jumped);
    }
    let (lambda, _) = unstable_eigenpair(&p_star)?;
    Ok(LocusPoint {
        a_star,
        b,
        sigma: cfg.sigma,
        k,
        miss_residual: c_star.s.v,
        lambda,
    })
}

/// Sign-change brackets `(i, i + 1, k)` of the k-th miss between consecutive
/// profiles of one branch, ordered by increasing `a`.
pub fn sign_change_brackets(profiles: &[&MissProfile], k_max: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, w) in profiles.windows(2).enumerate() {
        for k in 1..=k_max {
            let (Some(c0), Some(c1)) = (w[0].crossing(k), w[1].crossing(k)) else {
                break;
            };
            if c0.direction != c1.direction {
                continue;
            }
            let (v0, v1) = (c0.s.v, c1.s.v);
            if v0 == 0.0 || (v0 < 0.0) != (v1 < 0.0) {
                out.push((i, i + 1, k));
            }
        }
    }
    out
}

/// Searches `[a_lo, a_hi]` at fixed `b` for homoclinic values on both
/// branches and every crossing index up to `k_max`, sampling the interval
/// at `subdivisions` cells. Results are sorted by `|miss_residual|`.
pub fn find_homoclinic(
    b: f64,
    spec: &NonlinearitySpec,
    bracket: (f64, f64),
    cfg: &ShotConfig,
    subdivisions: usize,
) -> Result<Vec<LocusPoint>, HomoclinicError> {
    let n = subdivisions.max(1);
    let (a_lo, a_hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let base = Params::new(a_lo, b, spec.clone())
        .map_err(|_| HomoclinicError::InvalidConfig("bracket and b must be finite"))?;
    let a_values: Vec<f64> = (0..=n)
        .map(|i| if i == n { a_hi } else { a_lo + (a_hi - a_lo) * i as f64 / n as f64 })
        .collect();
    let mut found = Vec::new();
    for sigma in Sigma::BOTH {
        let cfg = cfg.with_sigma(sigma);
        let profiles = a_values
            .iter()
            .map(|&a| shoot(&base.with_a(a), &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&MissProfile> = profiles.iter().collect();
        for (i, j, k) in sign_change_brackets(&refs, cfg.k_max) {
            match refine_root(b, spec, (a_values[i], a_values[j]), &cfg, k) {
                Ok(lp) => found.push(lp),
                Err(e) => log::debug!("bracket [{}, {}] k={k}: {e}", a_values[i], a_values[j]),
            }
        }
    }
    found.sort_by(|x, y| x.miss_residual.abs().total_cmp(&y.miss_residual.abs()));
    Ok(found)
}

/// Homoclinic orbit through a locus point: the shot up to its hit of the
/// fixed-point set, followed by the `Q`-image of that half run backwards.
pub fn reconstruct_orbit(
    lp: &LocusPoint,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
) -> Result<Trajectory, HomoclinicError> {
    let cfg = cfg.with_sigma(lp.sigma);
    let p = Params::new(lp.a_star, lp.b, spec.clone())
        .map_err(|_| HomoclinicError::InvalidConfig("locus point must be finite"))?;
    let profile = shoot(&p, &cfg)?;
    let hit = *profile
        .crossing(lp.k)
        .ok_or(HomoclinicError::CrossingAbsent { k: lp.k })?;
    if hit.s.v.abs() > RECONSTRUCT_GATE {
        return Err(HomoclinicError::MissTooLarge {
            miss: hit.s.v,
            k: lp.k,
        });
    }
    let t_star = hit.t;
    let seed = seed_unstable(&p, &cfg)?;
    let half = integrate(seed, &p, (0.0, t_star), &cfg.ctrl)?;

    let mut nodes = half.nodes().to_vec();
    let mut segments = half.segments().to_vec();
    // the junction is the polished crossing state
    if let (Some(last_node), Some(last_seg)) = (nodes.last_mut(), segments.last_mut()) {
        last_node.1 = hit.s;
        last_seg.y1 = hit.s.to_array();
    }
    let mirrored: Vec<_> = segments
        .iter()
        .rev()
        .map(|seg| seg.mirrored(t_star, |s| reversal(&s)))
        .collect();
    for seg in &mirrored {
        nodes.push((seg.t1, State::from_array(seg.y1)));
    }
    segments.extend(mirrored);
    let mut tr = Trajectory::from_parts(nodes, segments, Vec::new());
    tr.events = crate::integrate::find_crossings(&tr, usize::MAX);
    Ok(tr)
}

/// Time of the junction of a reconstructed orbit (its midpoint in time).
pub fn junction_time(tr: &Trajectory) -> Option<f64> {
    Some(0.5 * (tr.first()?.0 + tr.last()?.0))
}

/// Least-squares slope of `ln |s(t)|` over the final stretch of `tr` where
/// `floor <= |s| <= 10 floor`.
pub fn tail_decay_rate(tr: &Trajectory, floor: f64) -> Option<f64> {
    let nodes = tr.nodes();
    let end = nodes.len();
    let mut start = end;
    while start > 0 && nodes[start - 1].1.norm() <= 10.0 * floor {
        start -= 1;
    }
    let pts: Vec<(f64, f64)> = nodes[start..end]
        .iter()
        .filter(|(_, s)| s.norm() >= floor)
        .map(|(t, s)| (*t, s.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(sxy / sxx)
}

/// `|psi_t(Q s) - Q psi_{-t}(s)|`.
pub fn verify_reversibility(
    p: &Params,
    s: &State,
    t: f64,
    ctrl: &StepControl,
) -> Result<f64, HomoclinicError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let fwd = integrate(reversal(s), p, (0.0, t), ctrl)?;
    let back = integrate(*s, p, (0.0, -t), ctrl)?;
    let lhs = fwd.last().expect("non-empty").1;
    let rhs = reversal(&back.last().expect("non-empty").1);
    Ok((lhs - rhs).norm())
}
