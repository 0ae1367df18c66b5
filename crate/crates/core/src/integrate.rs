//! Adaptive Dormand–Prince 5(4) propagation with continuous output, plus
//! detection of crossings through the section `{p_u = 0}`.

use serde::{Deserialize, Serialize};

use crate::error::IntegrateError;
use crate::sysdef::{vector_field_array, Params, State};

/// Events closer than this in time are merged into one.
pub const EVENT_MERGE_DT: f64 = 1e-9;
/// Bisection cap when polishing an event on the interpolant.
pub const EVENT_MAX_ITER: usize = 64;
/// Target for `|p_u|` at a polished event.
pub const EVENT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.1,
        }
    }
}

impl StepControl {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let all_finite = [self.rel_tol, self.abs_tol, self.h_init, self.h_min, self.h_max]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(IntegrateError::InvalidControl("values must be finite"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(IntegrateError::InvalidControl("tolerances must be positive"));
        }
        if !(0.0 < self.h_min && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(IntegrateError::InvalidControl(
                "need 0 < h_min <= h_init <= h_max",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    PuIncreasing,
    PuDecreasing,
}

/// One transversal passage through `{p_u = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub t: f64,
    pub s: State,
    /// 1-based ordinal among the crossings of the trajectory.
    pub index: usize,
    pub direction: Direction,
}

/// Continuous extension of one accepted step:
/// `y(theta) = y0 + theta (dy + (1 - theta) (r3 + theta (r4 + (1 - theta) r5)))`
/// with `theta = (t - t0) / (t1 - t0)` and `dy = y1 - y0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; 4],
    pub y1: [f64; 4],
    r3: [f64; 4],
    r4: [f64; 4],
    r5: [f64; 4],
}

impl DenseSegment {
    pub fn eval_theta(&self, theta: f64) -> State {
        if theta == 0.0 {
            return State::from_array(self.y0);
        }
        if theta == 1.0 {
            return State::from_array(self.y1);
        }
        let th1 = 1.0 - theta;
        let out = std::array::from_fn(|i| {
            let dy = self.y1[i] - self.y0[i];
            self.y0[i] + theta * (dy + th1 * (self.r3[i] + theta * (self.r4[i] + th1 * self.r5[i])))
        });
        State::from_array(out)
    }

    pub fn eval(&self, t: f64) -> State {
        if t == self.t0 {
            return State::from_array(self.y0);
        }
        if t == self.t1 {
            return State::from_array(self.y1);
        }
        self.eval_theta((t - self.t0) / (self.t1 - self.t0))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 {
            (self.t0, self.t1)
        } else {
            (self.t1, self.t0)
        };
        lo <= t && t <= hi
    }

    /// The same curve traversed backwards in time about `pivot` and mapped by
    /// the linear map `m`: `t -> 2 pivot - t`, `y -> m(y)`.
    pub fn mirrored(&self, pivot: f64, m: impl Fn(State) -> State) -> DenseSegment {
        let map = |x: [f64; 4]| m(State::from_array(x)).to_array();
        let mut r3 = [0.0; 4];
        let mut r4 = [0.0; 4];
        for i in 0..4 {
            r3[i] = self.r3[i] + self.r4[i];
            r4[i] = -self.r4[i];
        }
        DenseSegment {
            t0: 2.0 * pivot - self.t1,
            t1: 2.0 * pivot - self.t0,
            y0: map(self.y1),
            y1: map(self.y0),
            r3: map(r3),
            r4: map(r4),
            r5: map(self.r5),
        }
    }

    /// Cubic Hermite segment from endpoint values and derivatives.
    pub fn hermite(t0: f64, y0: State, f0: State, t1: f64, y1: State, f1: State) -> DenseSegment {
        let h = t1 - t0;
        let (y0, y1, f0, f1) = (y0.to_array(), y1.to_array(), f0.to_array(), f1.to_array());
        let mut r3 = [0.0; 4];
        let mut r4 = [0.0; 4];
        for i in 0..4 {
            let dy = y1[i] - y0[i];
            r3[i] = h * f0[i] - dy;
            r4[i] = dy - h * f1[i] - r3[i];
        }
        DenseSegment {
            t0,
            t1,
            y0,
            y1,
            r3,
            r4,
            r5: [0.0; 4],
        }
    }
}

/// A numerically integrated solution segment. Nodes are stored in the order
/// of integration, so times are strictly monotone (increasing for forward runs).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    nodes: Vec<(f64, State)>,
    segments: Vec<DenseSegment>,
    pub events: Vec<CrossingRecord>,
}

impl Trajectory {
    pub fn from_parts(
        nodes: Vec<(f64, State)>,
        segments: Vec<DenseSegment>,
        events: Vec<CrossingRecord>,
    ) -> Self {
        debug_assert!(segments.len() + 1 == nodes.len() || (nodes.is_empty() && segments.is_empty()));
        Self {
            nodes,
            segments,
            events,
        }
    }

    /// Piecewise cubic Hermite trajectory through exact samples of a solution.
    pub fn from_samples(samples: &[(f64, State)], p: &Params) -> Self {
        let segments = samples
            .windows(2)
            .map(|w| {
                let (t0, y0) = w[0];
                let (t1, y1) = w[1];
                DenseSegment::hermite(
                    t0,
                    y0,
                    crate::sysdef::vector_field(&y0, p),
                    t1,
                    y1,
                    crate::sysdef::vector_field(&y1, p),
                )
            })
            .collect::<Vec<_>>();
        let mut tr = Self {
            nodes: samples.to_vec(),
            segments,
            events: Vec::new(),
        };
        tr.events = find_crossings(&tr, usize::MAX);
        tr
    }

    pub fn nodes(&self) -> &[(f64, State)] {
        &self.nodes
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> Option<(f64, State)> {
        self.nodes.first().copied()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        self.nodes.last().copied()
    }

    /// Dense evaluation at `t`; `None` outside the covered span.
    pub fn eval(&self, t: f64) -> Option<State> {
        if self.segments.is_empty() {
            return self
                .nodes
                .first()
                .filter(|(t0, _)| *t0 == t)
                .map(|(_, s)| *s);
        }
        let forward = self.segments[0].t1 > self.segments[0].t0;
        // first segment whose far end reaches t
        let idx = self.segments.partition_point(|seg| {
            if forward {
                seg.t1 < t
            } else {
                seg.t1 > t
            }
        });
        let seg = self.segments.get(idx)?;
        seg.contains(t).then(|| seg.eval(t))
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type V4 = [f64; 4];

#[inline]
fn comb(y: &V4, h: f64, terms: &[(f64, &V4)]) -> V4 {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct StepOutput {
    y1: V4,
    k7: V4,
    err: f64,
    seg_r: (V4, V4, V4),
}

fn dopri_step(y: &V4, k1: &V4, h: f64, p: &Params, ctrl: &StepControl) -> StepOutput {
    let f = |x: &V4| vector_field_array(x, p);
    let k2 = f(&comb(y, h, &[(A21, k1)]));
    let k3 = f(&comb(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(&comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(&comb(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y1 = comb(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(&y1);

    let mut sq = 0.0;
    for i in 0..4 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = ctrl.abs_tol + ctrl.rel_tol * y[i].abs().max(y1[i].abs());
        sq += (e / sk) * (e / sk);
    }
    let err = (sq / 4.0).sqrt();

    let mut r3 = [0.0; 4];
    let mut r4 = [0.0; 4];
    let mut r5 = [0.0; 4];
    for i in 0..4 {
        let dy = y1[i] - y[i];
        r3[i] = h * k1[i] - dy;
        r4[i] = dy - h * k7[i] - r3[i];
        r5[i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    StepOutput {
        y1,
        k7,
        err,
        seg_r: (r3, r4, r5),
    }
}

/// Returned by integration observers after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Integrates from `start` at `t_span.0` to `t_span.1` (either direction).
/// Every crossing of `{p_u = 0}` is recorded in `events`.
pub fn integrate(
    start: State,
    p: &Params,
    t_span: (f64, f64),
    ctrl: &StepControl,
) -> Result<Trajectory, IntegrateError> {
    integrate_with(start, p, t_span, ctrl, |_, _| Flow::Continue)
}

/// Like [`integrate`], but calls `observer` after every accepted step with the
/// new segment and any crossing found in it; integration halts on
/// [`Flow::Stop`]. On error the partial trajectory is dropped; observers that
/// need partial results should accumulate them.
pub fn integrate_with<F>(
    start: State,
    p: &Params,
    t_span: (f64, f64),
    ctrl: &StepControl,
    mut observer: F,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(&DenseSegment, Option<&CrossingRecord>) -> Flow,
{
    ctrl.validate()?;
    let (t0, t_end) = t_span;
    if !(t0.is_finite() && t_end.is_finite()) || t0 == t_end {
        return Err(IntegrateError::DegenerateSpan(t0, t_end));
    }
    if !start.is_finite() {
        return Err(IntegrateError::NonFiniteState { t: t0, last: start });
    }
    let dir = (t_end - t0).signum();
    let mut t = t0;
    let mut y = start.to_array();
    let mut k1 = vector_field_array(&y, p);
    let mut h = ctrl.h_init.min((t_end - t0).abs()) * dir;
    let mut rejected_last = false;

    let mut tr = Trajectory {
        nodes: vec![(t0, start)],
        segments: Vec::new(),
        events: Vec::new(),
    };
    let mut detector = CrossingDetector::new();

    loop {
        let remaining = t_end - t;
        let clipped = h.abs() >= remaining.abs();
        let h_try = if clipped { remaining } else { h };

        let out = dopri_step(&y, &k1, h_try, p, ctrl);
        let finite = out.y1.iter().all(|x| x.is_finite()) && out.err.is_finite();

        if finite && out.err <= 1.0 {
            let t_new = if clipped { t_end } else { t + h_try };
            let (r3, r4, r5) = out.seg_r;
            let seg = DenseSegment {
                t0: t,
                t1: t_new,
                y0: y,
                y1: out.y1,
                r3,
                r4,
                r5,
            };
            tr.nodes.push((t_new, State::from_array(out.y1)));
            tr.segments.push(seg);
            let ev = detector.observe(&seg);
            if let Some(ev) = ev {
                tr.events.push(ev);
            }
            t = t_new;
            y = out.y1;
            k1 = out.k7;
            if observer(&seg, ev.as_ref()) == Flow::Stop || clipped {
                return Ok(tr);
            }
            let fac = if out.err == 0.0 {
                5.0
            } else {
                (0.9 * out.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // no growth right after a rejection
            let fac = if rejected_last { fac.min(1.0) } else { fac };
            rejected_last = false;
            // keep the controller's step, not the clipped one
            h = (h.abs() * fac).min(ctrl.h_max) * dir;
        } else {
            let fac = if finite {
                (0.9 * out.err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.25
            };
            rejected_last = true;
            h = h_try * fac;
            if h.abs() < ctrl.h_min {
                let last = State::from_array(y);
                return Err(if finite {
                    IntegrateError::StepSizeUnderflow { t, h: h.abs(), last }
                } else {
                    IntegrateError::NonFiniteState { t, last }
                });
            }
        }
    }
}

/// Classical fixed-step Dormand–Prince propagation (no error control).
pub fn integrate_fixed(start: State, p: &Params, t_span: (f64, f64), steps: usize) -> State {
    let h = (t_span.1 - t_span.0) / steps as f64;
    let ctrl = StepControl::default();
    let mut y = start.to_array();
    let mut k1 = vector_field_array(&y, p);
    for _ in 0..steps {
        let out = dopri_step(&y, &k1, h, p, &ctrl);
        y = out.y1;
        k1 = out.k7;
    }
    State::from_array(y)
}

/// Streaming sign-change detector for `p_u` over consecutive segments.
#[derive(Debug, Clone, Default)]
pub struct CrossingDetector {
    last_sign: f64,
    count: usize,
    last_t: Option<f64>,
}

impl CrossingDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Inspects one segment, returning the crossing it contains, if any.
    pub fn observe(&mut self, seg: &DenseSegment) -> Option<CrossingRecord> {
        let p0 = seg.y0[2];
        let p1 = seg.y1[2];
        if self.last_sign == 0.0 && p0 != 0.0 {
            self.last_sign = p0.signum();
        }
        if p1 == 0.0 || self.last_sign == 0.0 || p1.signum() == self.last_sign {
            return None;
        }
        let before = self.last_sign;
        self.last_sign = p1.signum();
        let (t, s) = polish(seg, before);
        if let Some(prev) = self.last_t {
            if (t - prev).abs() <= EVENT_MERGE_DT {
                return None;
            }
        }
        self.last_t = Some(t);
        self.count += 1;
        let forward = seg.t1 > seg.t0;
        // sign of dp_u/dt, not of dp_u/dtheta
        let increasing = (before < 0.0) == forward;
        Some(CrossingRecord {
            t,
            s,
            index: self.count,
            direction: if increasing {
                Direction::PuIncreasing
            } else {
                Direction::PuDecreasing
            },
        })
    }
}

/// Bisection in the step fraction for the zero of `p_u` on the interpolant.
/// `before` is the sign of `p_u` preceding the change.
fn polish(seg: &DenseSegment, before: f64) -> (f64, State) {
    let at = |theta: f64| {
        let t = if theta == 1.0 {
            seg.t1
        } else {
            seg.t0 + theta * (seg.t1 - seg.t0)
        };
        (t, seg.eval(t))
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (t_lo, s_lo) = at(lo);
    if s_lo.p_u == 0.0 {
        return (t_lo, s_lo);
    }
    let mut best = at(hi);
    for _ in 0..EVENT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (t, s) = at(mid);
        if s.p_u.abs() < best.1.p_u.abs() {
            best = (t, s);
        }
        if s.p_u == 0.0 {
            break;
        }
        if s.p_u.signum() == before {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t_lo, s_lo) = at(lo);
    if s_lo.p_u.abs() < best.1.p_u.abs() {
        best = (t_lo, s_lo);
    }
    best
}

/// The first `max_count` crossings of `{p_u = 0}` along `tr`.
pub fn find_crossings(tr: &Trajectory, max_count: usize) -> Vec<CrossingRecord> {
    let mut det = CrossingDetector::new();
    let mut out = Vec::new();
    for seg in &tr.segments {
        if out.len() >= max_count {
            break;
        }
        if let Some(ev) = det.observe(seg) {
            out.push(ev);
        }
    }
    out
}
