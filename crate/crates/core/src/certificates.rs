//! ISS-Lyapunov certificates and the numeric checks built on them.
//!
//! An [`IssCertificate`] carries a Lyapunov function `V` for the loop in the
//! absence of sampling together with comparison functions such that
//! `α_V(|x|) ≤ V(x) ≤ ᾱ_V(|x|)` and `∇V·f(x, e) ≤ −α(V(x)) + γ(|e|)`.
//! Everything here is evaluated on grids or along simulated arcs: grid
//! maxima are lower bounds of the true suprema, so they certify nothing
//! beyond the sampled points.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::classk::ClassK;
use crate::hybrid::{HybridArc, HybridState, HybridTime};
use crate::systems::{SampledLoop, SystemError};

pub type LyapunovFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Step of the central difference used when a certificate has no gradient.
pub const GRADIENT_FD_STEP: f64 = 1e-6;
/// Relative tolerance for Clarke active branches.
pub const DEFAULT_ACT_TOL: f64 = 1e-9;
/// Ratios above this make [`estimate_lipschitz`] fail.
pub const MAX_LIPSCHITZ_RATIO: f64 = 1e12;
/// Shortest time span over which [`monitor_decrease`] forms a flow slope.
pub const MIN_SLOPE_SPAN: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("sigma must lie in (0, 1), got {0}")]
    InvalidSigma(f64),
    #[error("rate function is not positive at s = {at} (value {value}); the comparison time is infinite")]
    DivergentIntegral { at: f64, value: f64 },
    #[error("dwell interval requires b > a >= 0, got a = {a}, b = {b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("ratio {ratio} exceeds the bound at x = {x:?}, e = {e:?}")]
    UnboundedRatio { ratio: f64, x: Vec<f64>, e: Vec<f64> },
    #[error(transparent)]
    System(#[from] SystemError),
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Clone)]
pub struct IssCertificate {
    pub lyapunov: LyapunovFn,
    pub gradient: Option<GradientFn>,
    pub lower: ClassK,
    pub upper: ClassK,
    pub alpha: ClassK,
    pub gamma: ClassK,
    pub sigma: f64,
}

impl fmt::Debug for IssCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssCertificate")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl IssCertificate {
    pub fn new(
        lyapunov: LyapunovFn,
        gradient: Option<GradientFn>,
        lower: ClassK,
        upper: ClassK,
        alpha: ClassK,
        gamma: ClassK,
        sigma: f64,
    ) -> Result<Self, CertificateError> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(CertificateError::InvalidSigma(sigma));
        }
        Ok(Self {
            lyapunov,
            gradient,
            lower,
            upper,
            alpha,
            gamma,
            sigma,
        })
    }

    /// `V(x) = |x|²/2`, `α_V = ᾱ_V = s²/2`, `α(s) = 0.84 s`, `γ(s) = 2.66 s²`
    /// for the scalar benchmark plant.
    pub fn example_vi(sigma: f64) -> Result<Self, CertificateError> {
        Self::new(
            Arc::new(|x: &[f64]| 0.5 * dot(x, x)),
            Some(Arc::new(|x: &[f64]| x.to_vec())),
            ClassK::power(0.5, 2.0),
            ClassK::power(0.5, 2.0),
            ClassK::linear(0.84),
            ClassK::power(2.66, 2.0),
            sigma,
        )
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self, CertificateError> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(CertificateError::InvalidSigma(sigma));
        }
        Ok(Self {
            sigma,
            ..self.clone()
        })
    }

    /// Multiplies `V`, its bounds and `γ` by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let v = self.lyapunov.clone();
        let gradient = self.gradient.clone().map(|g| -> GradientFn {
            Arc::new(move |x: &[f64]| g(x).into_iter().map(|a| c * a).collect())
        });
        Self {
            lyapunov: Arc::new(move |x: &[f64]| c * v(x)),
            gradient,
            lower: self.lower.scaled(c),
            upper: self.upper.scaled(c),
            alpha: self.alpha.clone(),
            gamma: self.gamma.scaled(c),
            sigma: self.sigma,
        }
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        (self.lyapunov)(x)
    }

    pub fn grad_v(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                let orig = probe[i];
                probe[i] = orig + GRADIENT_FD_STEP;
                let hi = self.v(&probe);
                probe[i] = orig - GRADIENT_FD_STEP;
                let lo = self.v(&probe);
                probe[i] = orig;
                (hi - lo) / (2.0 * GRADIENT_FD_STEP)
            })
            .collect()
    }

    /// `∇V(x) · v`
    pub fn lie_derivative(&self, x: &[f64], v: &[f64]) -> f64 {
        dot(&self.grad_v(x), v)
    }

    /// `γ̃(s) = α⁻¹(γ(s)/σ)`, the trigger level of the ISS rule.
    pub fn gamma_tilde(&self, s: f64) -> f64 {
        self.alpha.inverse(self.gamma.eval(s) / self.sigma)
    }

    pub fn gamma_tilde_derivative(&self, s: f64) -> f64 {
        let g = self.gamma.eval(s) / self.sigma;
        let inner = self.gamma.derivative(s) / self.sigma;
        if inner == 0.0 {
            return 0.0;
        }
        let a = self.alpha.inverse(g);
        inner / self.alpha.derivative(a)
    }

    /// `W(e) = γ̃(|e|)`
    pub fn w(&self, e: &[f64]) -> f64 {
        self.gamma_tilde(norm(e))
    }
}

/// Axis-aligned box in `(x, e)` space.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBox {
    pub x: Vec<(f64, f64)>,
    pub e: Vec<(f64, f64)>,
}

impl GridBox {
    pub fn scalar(x: (f64, f64), e: (f64, f64)) -> Self {
        Self {
            x: vec![x],
            e: vec![e],
        }
    }

    pub fn symmetric(x_half: f64, e_half: f64) -> Self {
        Self::scalar((-x_half, x_half), (-e_half, e_half))
    }

    fn axes(&self) -> Vec<(f64, f64)> {
        self.x.iter().chain(&self.e).copied().collect()
    }
}

/// Evenly spaced values `lo, …, hi` (a single `lo` when `n == 1`).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Sampled parameter interval, e.g. the range of the benchmark's `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ParamRange {
    pub fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v, n: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

// Calls `visit` on every grid point of `axes`, split by the first axis so
// rows can run in parallel. Results come back in row order.
fn grid_rows<T, F>(axes: &[(f64, f64)], n: usize, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
    T: Fold,
{
    let ticks: Vec<Vec<f64>> = axes.iter().map(|&(lo, hi)| linspace(lo, hi, n)).collect();
    let first = ticks.first().cloned().unwrap_or_default();
    first
        .par_iter()
        .map(|&v0| {
            let mut acc = T::empty();
            let mut idx = vec![0usize; axes.len()];
            let mut point = vec![0.0; axes.len()];
            point[0] = v0;
            loop {
                for k in 1..axes.len() {
                    point[k] = ticks[k][idx[k]];
                }
                acc = acc.fold(visit(&point));
                // odometer over axes 1..
                let mut k = axes.len();
                loop {
                    if k <= 1 {
                        return acc;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect()
}

trait Fold: Sized {
    fn empty() -> Self;
    fn fold(self, other: Self) -> Self;
}

/// A running maximum with the point where it was attained.
#[derive(Clone, Debug, PartialEq)]
pub struct Worst {
    pub value: f64,
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub param: Option<f64>,
}

impl Fold for Worst {
    fn empty() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            x: Vec::new(),
            e: Vec::new(),
            param: None,
        }
    }
    fn fold(self, other: Self) -> Self {
        // NaN counts as the worst possible value.
        let other_value = if other.value.is_nan() {
            f64::INFINITY
        } else {
            other.value
        };
        if other_value > self.value {
            Self {
                value: other_value,
                ..other
            }
        } else {
            self
        }
    }
}

impl Worst {
    pub fn location(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|a| format!("{a}"))
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut s = format!("x={}", fmt(&self.x));
        if !self.e.is_empty() {
            s.push_str(&format!(",e={}", fmt(&self.e)));
        }
        if let Some(p) = self.param {
            s.push_str(&format!(",d={p}"));
        }
        s
    }
}

/// Largest value of `∇V·f(x, e) + α(V(x)) − γ(|e|)` over the grid and the
/// sampled parameter values. Non-positive means the dissipation inequality
/// holds at every sampled point; non-finite values count as `+∞`.
pub fn verify_iss<L>(
    cert: &IssCertificate,
    family: L,
    region: &GridBox,
    params: &ParamRange,
    grid_n: usize,
) -> Result<Worst, CertificateError>
where
    L: Fn(f64) -> Result<SampledLoop, SystemError>,
{
    let nx = region.x.len();
    let axes = region.axes();
    let mut worst = Worst::empty();
    for d in params.values() {
        let lp = family(d)?;
        if lp.n_x() != nx || lp.n_e() != region.e.len() {
            return Err(SystemError::Dimension {
                what: "grid box",
                got: axes.len(),
                expected: lp.n_x() + lp.n_e(),
            }
            .into());
        }
        let rows = grid_rows(&axes, grid_n, |p| {
            let (x, e) = p.split_at(nx);
            let value = match lp.composed_flow(x, e) {
                Ok((xdot, _)) => {
                    let v = cert.lie_derivative(x, &xdot) + cert.alpha.eval(cert.v(x))
                        - cert.gamma.eval(norm(e));
                    if v.is_finite() {
                        v
                    } else {
                        f64::INFINITY
                    }
                }
                Err(_) => f64::INFINITY,
            };
            Worst {
                value,
                x: x.to_vec(),
                e: e.to_vec(),
                param: Some(d),
            }
        });
        worst = rows.into_iter().fold(worst, Fold::fold);
    }
    Ok(worst)
}

/// Largest violation of `α_V(|x|) ≤ V(x) ≤ ᾱ_V(|x|)` over the x-grid.
pub fn verify_sandwich(cert: &IssCertificate, x_box: &[(f64, f64)], grid_n: usize) -> Worst {
    grid_rows(x_box, grid_n, |x| {
        let v = cert.v(x);
        let r = norm(x);
        let value = (cert.lower.eval(r) - v).max(v - cert.upper.eval(r));
        Worst {
            value: if value.is_finite() { value } else { f64::INFINITY },
            x: x.to_vec(),
            e: Vec::new(),
            param: None,
        }
    })
    .into_iter()
    .fold(Worst::empty(), Fold::fold)
}

/// Which pointwise maximum of smooth branches forms the hybrid Lyapunov function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompositeKind {
    /// `max{V(x), γ̃(|e|)}`
    IssMax,
    /// `max{V(x), η·V(x + e)}`
    WlMax,
    /// `max{V(x), W(e), η}`
    EtaMax,
}

#[derive(Clone, Debug)]
pub struct CompositeLyapunov {
    pub kind: CompositeKind,
    pub cert: IssCertificate,
}

impl CompositeLyapunov {
    pub fn new(kind: CompositeKind, cert: IssCertificate) -> Self {
        Self { kind, cert }
    }

    fn xe_sum(q: &HybridState) -> Vec<f64> {
        q.x().iter().zip(q.e()).map(|(a, b)| a + b).collect()
    }

    /// Values of the smooth branches at `q`.
    pub fn branches(&self, q: &HybridState) -> Vec<f64> {
        let v = self.cert.v(q.x());
        match self.kind {
            CompositeKind::IssMax => vec![v, self.cert.w(q.e())],
            CompositeKind::WlMax => vec![v, q.eta()[0] * self.cert.v(&Self::xe_sum(q))],
            CompositeKind::EtaMax => vec![v, self.cert.w(q.e()), q.eta()[0]],
        }
    }

    pub fn value(&self, q: &HybridState) -> f64 {
        self.branches(q)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn w_gradient(&self, e: &[f64]) -> Vec<f64> {
        let r = norm(e);
        if r == 0.0 {
            return vec![0.0; e.len()];
        }
        let k = self.cert.gamma_tilde_derivative(r) / r;
        e.iter().map(|a| k * a).collect()
    }

    /// Gradients of the branches with respect to the flat state `[x | e | η]`.
    pub fn branch_gradients(&self, q: &HybridState) -> Vec<Vec<f64>> {
        let dims = q.dims();
        let n = dims.total();
        let (ox, oe, oeta) = (0, dims.n_x, dims.n_x + dims.n_e);
        let mut grad_v = vec![0.0; n];
        grad_v[ox..oe].copy_from_slice(&self.cert.grad_v(q.x()));
        let mut grad_w = vec![0.0; n];
        grad_w[oe..oeta].copy_from_slice(&self.w_gradient(q.e()));
        match self.kind {
            CompositeKind::IssMax => vec![grad_v, grad_w],
            CompositeKind::WlMax => {
                let eta = q.eta()[0];
                let s = Self::xe_sum(q);
                let gs = self.cert.grad_v(&s);
                let mut g = vec![0.0; n];
                for i in 0..dims.n_x {
                    g[ox + i] = eta * gs[i];
                    g[oe + i] = eta * gs[i];
                }
                g[oeta] = self.cert.v(&s);
                vec![grad_v, g]
            }
            CompositeKind::EtaMax => {
                let mut g = vec![0.0; n];
                g[oeta] = 1.0;
                vec![grad_v, grad_w, g]
            }
        }
    }

    /// Clarke generalized directional derivative `R°(q; v)`: the largest
    /// directional derivative among branches within `act_tol · R(q)` of the max.
    pub fn clarke_dd(&self, q: &HybridState, v: &[f64], act_tol: f64) -> f64 {
        let vals = self.branches(q);
        let r = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cutoff = r - act_tol * r.abs();
        self.branch_gradients(q)
            .iter()
            .zip(&vals)
            .filter(|(_, &b)| b >= cutoff)
            .map(|(g, _)| dot(g, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of checking the flow decrease and jump non-increase of `R` along an arc.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreaseReport {
    /// Largest `ΔR/Δt + α_R(R(t_end))` over flow slopes.
    pub max_flow_violation: f64,
    pub flow_violation_at: Option<HybridTime>,
    /// Largest `R(q⁺) − R(q)` over jumps.
    pub max_jump_increase: f64,
    pub jump_increase_at: Option<HybridTime>,
    pub max_value: f64,
}

impl DecreaseReport {
    pub fn passes(&self, flow_tol: f64, jump_tol: f64) -> bool {
        self.max_flow_violation <= flow_tol && self.max_jump_increase <= jump_tol
    }
}

/// Monitors `R°(q; F(q)) ≤ −α_R(R(q))` on flows and `R(G(q)) ≤ R(q)` at jumps.
///
/// Flow slopes are finite differences between a sample and the latest
/// earlier sample of the same interval at least [`MIN_SLOPE_SPAN`] away, and
/// are compared against `−α_R` at the later point. Since `R` decreases and
/// `α_R` increases, `R(b) − R(a) ≤ −(b − a)·α_R(R(b))` follows from the
/// differential inequality, so the check has no discretization bias.
pub fn monitor_decrease(
    r: &CompositeLyapunov,
    arc: &HybridArc,
    alpha_r: &ClassK,
    tol: f64,
) -> DecreaseReport {
    monitor_decrease_with_span(r, arc, alpha_r, tol, MIN_SLOPE_SPAN)
}

pub fn monitor_decrease_with_span(
    r: &CompositeLyapunov,
    arc: &HybridArc,
    alpha_r: &ClassK,
    _tol: f64,
    min_span: f64,
) -> DecreaseReport {
    let mut report = DecreaseReport {
        max_flow_violation: f64::NEG_INFINITY,
        flow_violation_at: None,
        max_jump_increase: f64::NEG_INFINITY,
        jump_increase_at: None,
        max_value: f64::NEG_INFINITY,
    };
    for (j, seg) in arc.samples.iter().enumerate() {
        let values: Vec<f64> = seg.iter().map(|s| r.value(&s.q)).collect();
        for &v in &values {
            report.max_value = report.max_value.max(v);
        }
        let mut anchor = 0usize;
        for m in 1..seg.len() {
            while anchor + 1 < m && seg[m].t - seg[anchor + 1].t >= min_span {
                anchor += 1;
            }
            let span = seg[m].t - seg[anchor].t;
            if span < min_span {
                continue;
            }
            let slope = (values[m] - values[anchor]) / span;
            let violation = slope + alpha_r.eval(values[m]);
            let violation = if violation.is_nan() { f64::INFINITY } else { violation };
            if violation > report.max_flow_violation {
                report.max_flow_violation = violation;
                report.flow_violation_at = Some(HybridTime { t: seg[m].t, j });
            }
        }
    }
    for jump in &arc.jumps {
        let inc = r.value(&jump.after) - r.value(&jump.before);
        if inc > report.max_jump_increase {
            report.max_jump_increase = inc;
            report.jump_increase_at = Some(HybridTime {
                t: jump.t,
                j: jump.j,
            });
        }
    }
    report
}

/// Largest `R(t, j) − R(0, 0)·e^{−ρt}` along the arc.
pub fn envelope_violation(r: &CompositeLyapunov, arc: &HybridArc, rho: f64) -> f64 {
    let r0 = r.value(arc.initial_state());
    arc.points()
        .map(|(ht, q)| r.value(q) - r0 * (-rho * ht.t).exp())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid estimates of the growth constants `|f| ≤ L1(|x| + |e|)`,
/// `α_V⁻¹(γ̃(|e|)) ≤ L2|e|` and `|g| ≤ L3(|x| + |e|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimates {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub region: GridBox,
    pub grid_n: usize,
}

impl LipschitzEstimates {
    /// Componentwise maximum, e.g. across parameter values.
    pub fn max(&self, other: &Self) -> Self {
        Self {
            l1: self.l1.max(other.l1),
            l2: self.l2.max(other.l2),
            l3: self.l3.max(other.l3),
            region: self.region.clone(),
            grid_n: self.grid_n,
        }
    }

    pub fn inflated(&self, factor: f64) -> Self {
        Self {
            l1: self.l1 * factor,
            l2: self.l2 * factor,
            l3: self.l3 * factor,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
struct Ratios {
    l1: f64,
    l3: f64,
    /// Largest single ratio and where it occurred.
    peak: f64,
    at: Vec<f64>,
}

impl Fold for Ratios {
    fn empty() -> Self {
        Self {
            l1: 0.0,
            l3: 0.0,
            peak: f64::NEG_INFINITY,
            at: Vec::new(),
        }
    }
    fn fold(self, other: Self) -> Self {
        let (peak, at) = if other.peak > self.peak {
            (other.peak, other.at)
        } else {
            (self.peak, self.at)
        };
        Self {
            l1: self.l1.max(other.l1),
            l3: self.l3.max(other.l3),
            peak,
            at,
        }
    }
}

pub fn estimate_lipschitz(
    lp: &SampledLoop,
    cert: &IssCertificate,
    region: &GridBox,
    grid_n: usize,
) -> Result<LipschitzEstimates, CertificateError> {
    let nx = region.x.len();
    let axes = region.axes();
    let rows = grid_rows(&axes, grid_n, |p| {
        let (x, e) = p.split_at(nx);
        let scale = norm(x) + norm(e);
        if scale == 0.0 {
            return Ratios::empty();
        }
        let (r1, r3) = match lp.composed_flow(x, e) {
            Ok((f, g)) => (norm(&f) / scale, norm(&g) / scale),
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
        let peak = if r1.is_nan() || r3.is_nan() {
            f64::INFINITY
        } else {
            r1.max(r3)
        };
        Ratios {
            l1: r1,
            l3: r3,
            peak,
            at: p.to_vec(),
        }
    });
    let ratios = rows.into_iter().fold(Ratios::empty(), Fold::fold);
    if ratios.peak > MAX_LIPSCHITZ_RATIO {
        let (x, e) = ratios.at.split_at(nx);
        return Err(CertificateError::UnboundedRatio {
            ratio: ratios.peak,
            x: x.to_vec(),
            e: e.to_vec(),
        });
    }

    let mut l2 = 0.0_f64;
    let e_ticks: Vec<Vec<f64>> = region
        .e
        .iter()
        .map(|&(lo, hi)| linspace(lo, hi, grid_n))
        .collect();
    let mut idx = vec![0usize; region.e.len()];
    'outer: loop {
        let e: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| e_ticks[k][i]).collect();
        let r = norm(&e);
        if r > 0.0 {
            let ratio = cert.lower.inverse(cert.gamma_tilde(r)) / r;
            if !(ratio <= MAX_LIPSCHITZ_RATIO) {
                return Err(CertificateError::UnboundedRatio {
                    ratio,
                    x: Vec::new(),
                    e,
                });
            }
            l2 = l2.max(ratio);
        }
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < grid_n {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }

    Ok(LipschitzEstimates {
        l1: ratios.l1,
        l2,
        l3: ratios.l3,
        region: region.clone(),
        grid_n,
    })
}

/// A comparison time `τ = ∫_a^b ds/λ(s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellTimeBound {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl DwellTimeBound {
    pub fn compute<F: Fn(f64) -> f64>(rate: F, a: f64, b: f64) -> Result<Self, CertificateError> {
        Ok(Self {
            a,
            b,
            tau: dwell_lower_bound(rate, a, b)?,
        })
    }
}

const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_MAX_DEPTH: u32 = 50;
const RATE_SCAN_POINTS: usize = 1025;

/// Time for `θ̇ = λ(θ)` to travel from `a` to `b`, by adaptive Simpson
/// quadrature of `1/λ` to relative accuracy 1e-9.
pub fn dwell_lower_bound<F: Fn(f64) -> f64>(rate: F, a: f64, b: f64) -> Result<f64, CertificateError> {
    if !(b > a && a >= 0.0 && b.is_finite()) {
        return Err(CertificateError::InvalidInterval { a, b });
    }
    for s in linspace(a, b, RATE_SCAN_POINTS) {
        let v = rate(s);
        if !(v > 0.0) {
            return Err(CertificateError::DivergentIntegral { at: s, value: v });
        }
    }
    let inv = |s: f64| -> Result<f64, CertificateError> {
        let v = rate(s);
        if v > 0.0 {
            Ok(1.0 / v)
        } else {
            Err(CertificateError::DivergentIntegral { at: s, value: v })
        }
    };
    let (fa, fb) = (inv(a)?, inv(b)?);
    let m = 0.5 * (a + b);
    let fm = inv(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&inv, a, b, fa, fm, fb, whole, QUAD_REL_TOL * whole.abs(), QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, CertificateError>
where
    F: Fn(f64) -> Result<f64, CertificateError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Comparison rate for the decreasing-Lyapunov-threshold rule:
/// `s ↦ max{L1·L2·(1 + s/L2)², σ̄ᾱ/(1 − ε)}`, to be integrated over `[0, 1]`.
pub fn theorem2_lambda(
    l: &LipschitzEstimates,
    sigma_bar: f64,
    alpha_bar: f64,
    epsilon: f64,
) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let (l1, l2) = (l.l1, l.l2);
    let clock = sigma_bar * alpha_bar / (1.0 - epsilon);
    move |s: f64| {
        let r = 1.0 + s / l2;
        (l1 * l2 * r * r).max(clock)
    }
}

/// Comparison rate for the η-threshold rule: `s ↦ L3 + (L1 + L3)s + L1 s²`,
/// to be integrated over `[0, 1/L2]`.
pub fn theorem3_lambda(l: &LipschitzEstimates) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let (l1, l3) = (l.l1, l.l3);
    move |s: f64| l3 + (l1 + l3) * s + l1 * s * s
}

/// Comparison rate of the static ISS rule under zero-order hold:
/// `s ↦ L1(1 + s)²`, to be integrated over `[0, 1/L2]`.
pub fn iss_lambda(l: &LipschitzEstimates) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let l1 = l.l1;
    move |s: f64| l1 * (1.0 + s) * (1.0 + s)
}
