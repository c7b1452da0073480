//! Hybrid systems with flow/jump guards and a deterministic fixed-step solver.
//!
//! A system flows along `q̇ = F(q)` while its flow guard is non-positive and
//! jumps through `q⁺ = G(q)` as soon as its jump guard becomes non-negative.
//! Flow is integrated with classical RK4 at a fixed step; guard crossings
//! inside a step are localized by bisection, re-integrating from the left
//! end of the step on every probe, so an arc is a pure function of its
//! inputs.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Sizes of the three blocks of a hybrid state `q = (x, e, η)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct StateDims {
    pub n_x: usize,
    pub n_e: usize,
    pub n_eta: usize,
}

impl StateDims {
    pub const fn new(n_x: usize, n_e: usize, n_eta: usize) -> Self {
        Self { n_x, n_e, n_eta }
    }

    pub const fn total(&self) -> usize {
        self.n_x + self.n_e + self.n_eta
    }
}

/// Plant/controller state, sampling-induced error and auxiliary variables,
/// stored contiguously as `[x | e | η]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    dims: StateDims,
    data: Vec<f64>,
}

impl HybridState {
    pub fn new(x: &[f64], e: &[f64], eta: &[f64]) -> Self {
        let mut data = Vec::with_capacity(x.len() + e.len() + eta.len());
        data.extend_from_slice(x);
        data.extend_from_slice(e);
        data.extend_from_slice(eta);
        Self {
            dims: StateDims::new(x.len(), e.len(), eta.len()),
            data,
        }
    }

    /// A one-dimensional state with only an `x` block; handy for plain ODEs.
    pub fn scalar(x: f64) -> Self {
        Self::new(&[x], &[], &[])
    }

    /// Builds a state from a flat `[x | e | η]` buffer.
    ///
    /// Panics if `data.len()` does not match `dims.total()`.
    pub fn from_flat(dims: StateDims, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            dims.total(),
            "flat state length does not match its dimensions"
        );
        Self { dims, data }
    }

    pub fn dims(&self) -> StateDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn x(&self) -> &[f64] {
        &self.data[..self.dims.n_x]
    }

    pub fn e(&self) -> &[f64] {
        &self.data[self.dims.n_x..self.dims.n_x + self.dims.n_e]
    }

    pub fn eta(&self) -> &[f64] {
        &self.data[self.dims.n_x + self.dims.n_e..]
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        let n = self.dims.n_x;
        &mut self.data[..n]
    }

    pub fn e_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.dims.n_x, self.dims.n_x + self.dims.n_e);
        &mut self.data[a..b]
    }

    pub fn eta_mut(&mut self) -> &mut [f64] {
        let a = self.dims.n_x + self.dims.n_e;
        &mut self.data[a..]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + h · dir`, with `dir` laid out like the state.
    pub fn offset(&self, h: f64, dir: &[f64]) -> Self {
        debug_assert_eq!(dir.len(), self.data.len());
        let data = self
            .data
            .iter()
            .zip(dir)
            .map(|(q, d)| q + h * d)
            .collect();
        Self {
            dims: self.dims,
            data,
        }
    }
}

/// A point `(t, j)` of a hybrid time domain.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct HybridTime {
    pub t: f64,
    pub j: usize,
}

/// The closed interval `[t_start, t_end]` on which the arc flows with jump count `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainInterval {
    pub j: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct HybridTimeDomain {
    pub intervals: Vec<DomainInterval>,
}

impl HybridTimeDomain {
    /// Checks that intervals are indexed `0, 1, …`, start at `t = 0`, have
    /// nondecreasing endpoints and share endpoints with their successors.
    pub fn is_well_formed(&self) -> bool {
        let Some(first) = self.intervals.first() else {
            return false;
        };
        if first.t_start != 0.0 {
            return false;
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if iv.j != k || !(iv.t_start <= iv.t_end) {
                return false;
            }
        }
        self.intervals
            .windows(2)
            .all(|w| w[0].t_end == w[1].t_start)
    }

    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().skip(1).map(|iv| iv.t_start)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub q: HybridState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub t: f64,
    /// Jump count before the jump.
    pub j: usize,
    pub before: HybridState,
    pub after: HybridState,
    /// Jump guard evaluated at `before`.
    pub guard: f64,
}

/// A solution on a hybrid time domain.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct HybridArc {
    pub domain: HybridTimeDomain,
    /// `samples[j]` holds the integrator points of interval `j`, the
    /// post-jump state first.
    pub samples: Vec<Vec<FlowSample>>,
    pub jumps: Vec<JumpRecord>,
}

impl HybridArc {
    pub fn executions(&self) -> usize {
        self.jumps.len()
    }

    pub fn initial_state(&self) -> &HybridState {
        &self.samples[0][0].q
    }

    pub fn final_state(&self) -> &HybridState {
        let last = self.samples.last().expect("arc has at least one interval");
        &last.last().expect("interval has at least one sample").q
    }

    /// Smallest gap between consecutive jump times, `None` with fewer than two jumps.
    pub fn min_dwell(&self) -> Option<f64> {
        self.jumps
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .reduce(f64::min)
    }

    /// Every stored point in hybrid-time order.
    pub fn points(&self) -> impl Iterator<Item = (HybridTime, &HybridState)> + '_ {
        self.samples.iter().enumerate().flat_map(|(j, seg)| {
            seg.iter().map(move |s| (HybridTime { t: s.t, j }, &s.q))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Fixed integrator step, seconds.
    pub h: f64,
    /// Width of the time bracket around a located event, seconds.
    pub event_tol: f64,
    pub t_end: f64,
    pub max_jumps: usize,
    /// Absolute slack on guard sign tests.
    pub guard_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            event_tol: 1e-9,
            t_end: 20.0,
            max_jumps: 100_000,
            guard_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |why: &str| Err(SolverError::InvalidConfig(why.to_string()));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("h must be positive and finite");
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.h) {
            return bad("event_tol must lie in (0, h)");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if self.max_jumps == 0 {
            return bad("max_jumps must be at least 1");
        }
        if !(self.guard_tol >= 0.0 && self.guard_tol.is_finite()) {
            return bad("guard_tol must be non-negative and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-finite flow value at stage state {state:?}")]
    NonFiniteDynamics { state: HybridState },
    #[error("no jump-guard sign change in [{t_left}, {t_right}] (guard {guard_left} -> {guard_right})")]
    BracketError {
        t_left: f64,
        t_right: f64,
        guard_left: f64,
        guard_right: f64,
    },
    #[error("more than {max_jumps} jumps before t = {t}")]
    MaxJumpsExceeded { max_jumps: usize, t: f64 },
    #[error("state at t = {t} is in neither the flow set (guard {flow_guard}) nor the jump set (guard {jump_guard})")]
    DeadState {
        t: f64,
        state: HybridState,
        flow_guard: f64,
        jump_guard: f64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Flow map, jump map and the two guards of a hybrid system.
///
/// `flow_guard(q) ≤ 0` means `q ∈ C`; `jump_guard(q) ≥ 0` means `q ∈ D`.
pub trait HybridSystem {
    fn dims(&self) -> StateDims;
    fn flow_map(&self, q: &HybridState) -> Vec<f64>;
    fn jump_map(&self, q: &HybridState) -> HybridState;
    fn flow_guard(&self, q: &HybridState) -> f64;
    fn jump_guard(&self, q: &HybridState) -> f64;
}

type FlowFn = Box<dyn Fn(&HybridState) -> Vec<f64> + Send + Sync>;
type JumpFn = Box<dyn Fn(&HybridState) -> HybridState + Send + Sync>;
type GuardFn = Box<dyn Fn(&HybridState) -> f64 + Send + Sync>;

/// A hybrid system assembled from closures.
pub struct HybridSystemDef {
    pub dims: StateDims,
    pub flow_map: FlowFn,
    pub jump_map: JumpFn,
    pub flow_guard: GuardFn,
    pub jump_guard: GuardFn,
}

impl HybridSystemDef {
    /// A system with an empty jump set: flows everywhere with the given field.
    pub fn flow_only(
        dims: StateDims,
        flow: impl Fn(&HybridState) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dims,
            flow_map: Box::new(flow),
            jump_map: Box::new(|q| q.clone()),
            flow_guard: Box::new(|_| -1.0),
            jump_guard: Box::new(|_| -1.0),
        }
    }
}

impl fmt::Debug for HybridSystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystemDef")
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

impl HybridSystem for HybridSystemDef {
    fn dims(&self) -> StateDims {
        self.dims
    }
    fn flow_map(&self, q: &HybridState) -> Vec<f64> {
        (self.flow_map)(q)
    }
    fn jump_map(&self, q: &HybridState) -> HybridState {
        (self.jump_map)(q)
    }
    fn flow_guard(&self, q: &HybridState) -> f64 {
        (self.flow_guard)(q)
    }
    fn jump_guard(&self, q: &HybridState) -> f64 {
        (self.jump_guard)(q)
    }
}

fn checked_eval<F>(flow: &F, q: &HybridState) -> Result<Vec<f64>, SolverError>
where
    F: Fn(&HybridState) -> Vec<f64> + ?Sized,
{
    let k = flow(q);
    if k.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(SolverError::NonFiniteDynamics { state: q.clone() })
    }
}

/// One classical fourth-order Runge–Kutta step of length `h`.
pub fn rk4_step<F>(flow: &F, q: &HybridState, h: f64) -> Result<HybridState, SolverError>
where
    F: Fn(&HybridState) -> Vec<f64> + ?Sized,
{
    let k1 = checked_eval(flow, q)?;
    let s2 = q.offset(0.5 * h, &k1);
    let k2 = checked_eval(flow, &s2)?;
    let s3 = q.offset(0.5 * h, &k2);
    let k3 = checked_eval(flow, &s3)?;
    let s4 = q.offset(h, &k3);
    let k4 = checked_eval(flow, &s4)?;

    let sixth = h / 6.0;
    let data = q
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| v + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let next = HybridState::from_flat(q.dims(), data);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SolverError::NonFiniteDynamics { state: next })
    }
}

/// Longest single RK4 step used while localizing an event.
pub const PROBE_SUBSTEP: f64 = 1e-3;

fn advance<F>(flow: &F, q: &HybridState, len: f64) -> Result<HybridState, SolverError>
where
    F: Fn(&HybridState) -> Vec<f64> + ?Sized,
{
    let n = (len / PROBE_SUBSTEP).ceil().max(1.0) as usize;
    let sub = len / n as f64;
    let mut q = q.clone();
    for _ in 0..n {
        q = rk4_step(flow, &q, sub)?;
    }
    Ok(q)
}

/// Localizes the first time in `[t_left, t_left + h]` at which the jump guard
/// becomes non-negative.
///
/// Each probe re-integrates from `q_left` in equal RK4 substeps no longer
/// than [`PROBE_SUBSTEP`]. The bracket is halved until it cannot be split in
/// floating point, which is far below `event_tol`; stopping there rather than
/// at `event_tol` keeps the guard overshoot at rounding level whatever the
/// scale of the guard. The returned state is the right end of the final
/// bracket, so its guard is non-negative.
pub fn locate_event<F, G>(
    flow: &F,
    jump_guard: &G,
    q_left: &HybridState,
    t_left: f64,
    h: f64,
    event_tol: f64,
) -> Result<(f64, HybridState), SolverError>
where
    F: Fn(&HybridState) -> Vec<f64> + ?Sized,
    G: Fn(&HybridState) -> f64 + ?Sized,
{
    let g_left = jump_guard(q_left);
    let q_right = advance(flow, q_left, h)?;
    let g_right = jump_guard(&q_right);
    if !(g_left < 0.0 && g_right >= 0.0) {
        return Err(SolverError::BracketError {
            t_left,
            t_right: t_left + h,
            guard_left: g_left,
            guard_right: g_right,
        });
    }

    let (mut lo, mut hi) = (0.0_f64, h);
    let mut q_hi = q_right;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let q_mid = advance(flow, q_left, mid)?;
        if jump_guard(&q_mid) >= 0.0 {
            hi = mid;
            q_hi = q_mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(hi - lo <= event_tol.max(f64::EPSILON * h));
    Ok((t_left + hi, q_hi))
}

/// Simulates `sys` from `q0` until `cfg.t_end`.
///
/// A state in both `C` and `D` jumps. Consecutive jumps at the same instant
/// are allowed and each one counts toward `cfg.max_jumps`.
pub fn solve<S>(sys: &S, q0: &HybridState, cfg: &SolverConfig) -> Result<HybridArc, SolverError>
where
    S: HybridSystem + ?Sized,
{
    cfg.validate()?;
    let flow = |q: &HybridState| sys.flow_map(q);
    let guard = |q: &HybridState| sys.jump_guard(q);

    let mut arc = HybridArc::default();
    let mut t = 0.0_f64;
    let mut q = q0.clone();
    let mut segment = vec![FlowSample { t, q: q.clone() }];
    let mut seg_start = 0.0_f64;

    loop {
        let g = sys.jump_guard(&q);
        if g >= 0.0 {
            if arc.jumps.len() >= cfg.max_jumps {
                return Err(SolverError::MaxJumpsExceeded {
                    max_jumps: cfg.max_jumps,
                    t,
                });
            }
            let after = sys.jump_map(&q);
            let j = arc.jumps.len();
            arc.domain.intervals.push(DomainInterval {
                j,
                t_start: seg_start,
                t_end: t,
            });
            arc.samples.push(std::mem::take(&mut segment));
            arc.jumps.push(JumpRecord {
                t,
                j,
                before: q,
                after: after.clone(),
                guard: g,
            });
            q = after;
            seg_start = t;
            segment.push(FlowSample { t, q: q.clone() });
            continue;
        }

        let fg = sys.flow_guard(&q);
        if fg > cfg.guard_tol {
            return Err(SolverError::DeadState {
                t,
                state: q,
                flow_guard: fg,
                jump_guard: g,
            });
        }
        if t >= cfg.t_end {
            break;
        }

        let t_next = (t + cfg.h).min(cfg.t_end);
        let step = t_next - t;
        let q_next = rk4_step(&flow, &q, step)?;
        if guard(&q_next) >= 0.0 {
            match locate_event(&flow, &guard, &q, t, step, cfg.event_tol) {
                Ok((t_hit, q_hit)) => {
                    t = t_hit;
                    q = q_hit;
                }
                // Only for h > PROBE_SUBSTEP: the finer integration finds no
                // crossing inside the step, so the jump happens at its end.
                Err(SolverError::BracketError { guard_right, .. }) if guard_right < 0.0 => {
                    t = t_next;
                    q = q_next;
                }
                Err(e) => return Err(e),
            }
        } else {
            t = t_next;
            q = q_next;
        }
        segment.push(FlowSample { t, q: q.clone() });
    }

    arc.domain.intervals.push(DomainInterval {
        j: arc.jumps.len(),
        t_start: seg_start,
        t_end: t,
    });
    arc.samples.push(segment);
    Ok(arc)
}

pub const TRAJECTORY_HEADER: &str = "t,j,phase,x,e,eta,V,R";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

// Scalar blocks print as one number, empty blocks as an empty field and
// vector blocks as space-separated components.
fn fmt_block(block: &[f64]) -> String {
    block.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes an arc as trajectory CSV (`t,j,phase,x,e,eta,V,R`).
///
/// Every stored flow sample becomes a `flow` row; each jump adds a
/// `jump_pre` row (pre-jump `j`) and a `jump_post` row (`j + 1`).
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    arc: &HybridArc,
    lyapunov: &dyn Fn(&HybridState) -> Option<f64>,
    composite: &dyn Fn(&HybridState) -> Option<f64>,
) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let mut row = |t: f64, j: usize, phase: &str, q: &HybridState| {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(t),
            j,
            phase,
            fmt_block(q.x()),
            fmt_block(q.e()),
            fmt_block(q.eta()),
            fmt_opt(lyapunov(q)),
            fmt_opt(composite(q)),
        )
    };
    for (j, seg) in arc.samples.iter().enumerate() {
        for s in seg {
            row(s.t, j, "flow", &s.q)?;
        }
        if let Some(jump) = arc.jumps.get(j) {
            row(jump.t, jump.j, "jump_pre", &jump.before)?;
            row(jump.t, jump.j + 1, "jump_post", &jump.after)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(q: &HybridState) -> Vec<f64> {
        q.as_slice().iter().map(|v| -v).collect()
    }

    #[test]
    fn rk4_matches_exponential() {
        let q = rk4_step(&decay, &HybridState::scalar(1.0), 0.1).unwrap();
        assert!((q.x()[0] - 0.904837418).abs() < 1e-7);
        assert!((q.x()[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_zero_and_constant_fields_are_exact() {
        let zero = |q: &HybridState| vec![0.0; q.as_slice().len()];
        let q = rk4_step(&zero, &HybridState::scalar(3.2), 0.37).unwrap();
        assert_eq!(q.x()[0], 3.2);

        let one = |q: &HybridState| vec![1.0; q.as_slice().len()];
        let q = rk4_step(&one, &HybridState::scalar(0.0), 0.5).unwrap();
        assert_eq!(q.x()[0], 0.5);
    }

    #[test]
    fn rk4_reports_non_finite_stage() {
        // Finite at the start point, NaN once a stage passes x = 1.02.
        let blowup = |q: &HybridState| vec![if q.x()[0] > 1.02 { f64::NAN } else { 1.0 }];
        let err = rk4_step(&blowup, &HybridState::scalar(1.0), 0.1).unwrap_err();
        match err {
            SolverError::NonFiniteDynamics { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
        let nan = |_: &HybridState| vec![f64::NAN];
        let err = rk4_step(&nan, &HybridState::scalar(0.0), 0.1).unwrap_err();
        assert_eq!(
            err,
            SolverError::NonFiniteDynamics {
                state: HybridState::scalar(0.0)
            }
        );
    }

    #[test]
    fn locate_linear_crossing() {
        let one = |_: &HybridState| vec![1.0];
        let guard = |q: &HybridState| q.x()[0] - 1.0;
        let (t, q) =
            locate_event(&one, &guard, &HybridState::scalar(0.0), 0.0, 2.0, 1e-9).unwrap();
        assert!((t - 1.0).abs() <= 1e-9);
        assert!(guard(&q) >= 0.0);
    }

    #[test]
    fn locate_exponential_crossing() {
        let guard = |q: &HybridState| 0.5 - q.x()[0];
        let (t, q) =
            locate_event(&decay, &guard, &HybridState::scalar(1.0), 0.0, 1.0, 1e-9).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-4);
        assert!(guard(&q) >= -1e-9);
    }

    #[test]
    fn locate_rejects_missing_bracket() {
        let one = |_: &HybridState| vec![1.0];
        let guard = |q: &HybridState| q.x()[0] - 1.0;
        let err = locate_event(&one, &guard, &HybridState::scalar(1.5), 0.0, 1.0, 1e-9)
            .unwrap_err();
        assert!(matches!(err, SolverError::BracketError { .. }));
        let err = locate_event(&one, &guard, &HybridState::scalar(-5.0), 0.0, 1.0, 1e-9)
            .unwrap_err();
        assert!(matches!(err, SolverError::BracketError { .. }));
    }

    #[test]
    fn solve_pure_flow() {
        let sys = HybridSystemDef::flow_only(StateDims::new(1, 0, 0), decay);
        let cfg = SolverConfig {
            t_end: 1.0,
            ..SolverConfig::default()
        };
        let arc = solve(&sys, &HybridState::scalar(1.0), &cfg).unwrap();
        assert_eq!(arc.executions(), 0);
        assert!((arc.final_state().x()[0] - (-1f64).exp()).abs() < 1e-6);
        assert!(arc.domain.is_well_formed());
        assert_eq!(arc.domain.intervals.len(), 1);
        assert_eq!(arc.domain.intervals[0].t_end, 1.0);
    }

    #[test]
    fn solve_jumps_immediately_when_starting_in_jump_set() {
        // x counts down; a jump fires whenever x ≥ 1 and resets it to 0.
        let sys = HybridSystemDef {
            dims: StateDims::new(1, 0, 0),
            flow_map: Box::new(|_| vec![1.0]),
            jump_map: Box::new(|_| HybridState::scalar(0.0)),
            flow_guard: Box::new(|q| q.x()[0] - 1.0),
            jump_guard: Box::new(|q| q.x()[0] - 1.0),
        };
        let cfg = SolverConfig {
            t_end: 0.5,
            ..SolverConfig::default()
        };
        let arc = solve(&sys, &HybridState::scalar(2.0), &cfg).unwrap();
        assert_eq!(arc.jumps[0].t, 0.0);
        assert_eq!(arc.executions(), 1);
        assert!(arc.domain.is_well_formed());
    }

    #[test]
    fn solve_caps_jumps() {
        // Zeno-like: the jump map keeps the state in D.
        let sys = HybridSystemDef {
            dims: StateDims::new(1, 0, 0),
            flow_map: Box::new(|_| vec![0.0]),
            jump_map: Box::new(|q| q.clone()),
            flow_guard: Box::new(|_| 0.0),
            jump_guard: Box::new(|_| 0.0),
        };
        let cfg = SolverConfig {
            max_jumps: 7,
            ..SolverConfig::default()
        };
        let err = solve(&sys, &HybridState::scalar(0.0), &cfg).unwrap_err();
        assert_eq!(err, SolverError::MaxJumpsExceeded { max_jumps: 7, t: 0.0 });
    }

    #[test]
    fn solve_detects_dead_state() {
        let sys = HybridSystemDef {
            dims: StateDims::new(1, 0, 0),
            flow_map: Box::new(|_| vec![0.0]),
            jump_map: Box::new(|q| q.clone()),
            flow_guard: Box::new(|_| 1.0),
            jump_guard: Box::new(|_| -1.0),
        };
        let err = solve(&sys, &HybridState::scalar(0.0), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::DeadState { t, .. } if t == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig { h: 0.0, ..Default::default() },
            SolverConfig { event_tol: 1e-2, ..Default::default() },
            SolverConfig { t_end: -1.0, ..Default::default() },
            SolverConfig { max_jumps: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(SolverError::InvalidConfig(_))));
        }
    }

    #[test]
    fn state_blocks() {
        let mut q = HybridState::new(&[1.0, 2.0], &[3.0], &[4.0, 5.0]);
        assert_eq!(q.dims(), StateDims::new(2, 1, 2));
        assert_eq!(q.x(), &[1.0, 2.0]);
        assert_eq!(q.e(), &[3.0]);
        assert_eq!(q.eta(), &[4.0, 5.0]);
        q.e_mut()[0] = 0.0;
        assert_eq!(q.as_slice(), &[1.0, 2.0, 0.0, 4.0, 5.0]);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
