//! Transmission policies as flow/jump sets of the closed loop.
//!
//! Every policy fixes the auxiliary variable `η` (its flow `η̇`, its reset
//! `η⁺` and its initial value) and two scalar guards. Unions of sets are
//! composed with `max` of their guards and intersections with `min`, so each
//! set stays closed and the solver only ever tests one sign.

use thiserror::Error;

use crate::certificates::{CompositeKind, CompositeLyapunov, IssCertificate};
use crate::classk::ClassK;
use crate::hybrid::{HybridState, HybridSystem, StateDims};
use crate::systems::{SampledLoop, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("the decreasing-threshold rule needs a linear decay rate α(s) = ᾱs, got {0}")]
    NonlinearAlpha(String),
    #[error("invalid policy parameter {name} = {value}: {why}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        why: &'static str,
    },
    #[error(transparent)]
    System(#[from] SystemError),
}

fn param(name: &'static str, value: f64, ok: bool, why: &'static str) -> Result<(), PolicyError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PolicyError::InvalidParameter { name, value, why })
    }
}

/// The relative ISS rule: transmit once `γ̃(|e|) ≥ V(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IssPolicyParams {
    pub sigma: f64,
}

/// Decreasing threshold `V(x) ≤ η·V(x + e)` with `η̇ = −σ̄ᾱ`, `η⁺ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WlPolicyParams {
    pub sigma_bar: f64,
    pub alpha_bar: f64,
    pub epsilon: f64,
}

impl WlPolicyParams {
    /// Takes `ᾱ` from the certificate's linear decay rate.
    pub fn for_certificate(
        cert: &IssCertificate,
        sigma_bar: f64,
        epsilon: f64,
    ) -> Result<Self, PolicyError> {
        let alpha_bar = cert
            .alpha
            .linear_gain()
            .ok_or_else(|| PolicyError::NonlinearAlpha(format!("{:?}", cert.alpha)))?;
        Ok(Self {
            sigma_bar,
            alpha_bar,
            epsilon,
        })
    }

    pub fn decay(&self) -> f64 {
        self.sigma_bar * self.alpha_bar
    }
}

/// Threshold on `W(e) = γ̃(|e|)` with `η̇ = −δ(η)`, `η⁺ = W(e)`.
#[derive(Clone, Debug)]
pub struct EtaPolicyParams {
    pub delta: ClassK,
    pub eta0: f64,
}

#[derive(Clone, Debug)]
pub enum PolicyKind {
    Iss(IssPolicyParams),
    WangLemmon(WlPolicyParams),
    EtaThreshold(EtaPolicyParams),
    Periodic { period: f64 },
}

#[derive(Clone, Debug)]
pub struct TriggerPolicy {
    pub kind: PolicyKind,
    cert: Option<IssCertificate>,
}

pub fn iss_policy(cert: &IssCertificate) -> TriggerPolicy {
    TriggerPolicy {
        kind: PolicyKind::Iss(IssPolicyParams { sigma: cert.sigma }),
        cert: Some(cert.clone()),
    }
}

pub fn wl_policy(cert: &IssCertificate, p: WlPolicyParams) -> Result<TriggerPolicy, PolicyError> {
    let gain = cert
        .alpha
        .linear_gain()
        .ok_or_else(|| PolicyError::NonlinearAlpha(format!("{:?}", cert.alpha)))?;
    param(
        "sigma_bar",
        p.sigma_bar,
        p.sigma_bar > 0.0 && p.sigma_bar < 1.0,
        "must lie in (0, 1)",
    )?;
    param(
        "epsilon",
        p.epsilon,
        p.epsilon > 0.0 && p.epsilon < 1.0,
        "must lie in (0, 1)",
    )?;
    // Any smaller linear rate also satisfies the dissipation inequality.
    param(
        "alpha_bar",
        p.alpha_bar,
        p.alpha_bar > 0.0 && p.alpha_bar <= gain,
        "must lie in (0, certificate gain]",
    )?;
    Ok(TriggerPolicy {
        kind: PolicyKind::WangLemmon(p),
        cert: Some(cert.clone()),
    })
}

pub fn eta_policy(cert: &IssCertificate, p: EtaPolicyParams) -> Result<TriggerPolicy, PolicyError> {
    param("eta0", p.eta0, p.eta0 >= 0.0, "must be non-negative")?;
    if p.delta.eval(0.0) != 0.0 || !(p.delta.eval(1.0) > 0.0) {
        return Err(PolicyError::InvalidParameter {
            name: "delta",
            value: p.delta.eval(1.0),
            why: "must vanish at 0 and be positive elsewhere",
        });
    }
    Ok(TriggerPolicy {
        kind: PolicyKind::EtaThreshold(p),
        cert: Some(cert.clone()),
    })
}

pub fn periodic_policy(period: f64) -> Result<TriggerPolicy, PolicyError> {
    param("period", period, period > 0.0, "must be positive")?;
    Ok(TriggerPolicy {
        kind: PolicyKind::Periodic { period },
        cert: None,
    })
}

fn xe_sum(q: &HybridState) -> Vec<f64> {
    q.x().iter().zip(q.e()).map(|(a, b)| a + b).collect()
}

impl TriggerPolicy {
    pub fn n_eta(&self) -> usize {
        match self.kind {
            PolicyKind::Iss(_) => 0,
            _ => 1,
        }
    }

    pub fn certificate(&self) -> Option<&IssCertificate> {
        self.cert.as_ref()
    }

    fn cert(&self) -> &IssCertificate {
        self.cert
            .as_ref()
            .expect("Lyapunov-based policies carry a certificate")
    }

    /// Short name used in reports and CSV files.
    pub fn name(&self) -> &'static str {
        match self.kind {
            PolicyKind::Iss(_) => "iss",
            PolicyKind::WangLemmon(_) => "wl",
            PolicyKind::EtaThreshold(_) => "eta_threshold",
            PolicyKind::Periodic { .. } => "periodic",
        }
    }

    /// The policy's headline parameter (σ, σ̄, η(0,0) or T).
    pub fn headline_param(&self) -> f64 {
        match &self.kind {
            PolicyKind::Iss(p) => p.sigma,
            PolicyKind::WangLemmon(p) => p.sigma_bar,
            PolicyKind::EtaThreshold(p) => p.eta0,
            PolicyKind::Periodic { period } => *period,
        }
    }

    /// `η(0, 0)`
    pub fn initial_eta(&self) -> Vec<f64> {
        match &self.kind {
            PolicyKind::Iss(_) => Vec::new(),
            PolicyKind::WangLemmon(_) => vec![1.0],
            PolicyKind::EtaThreshold(p) => vec![p.eta0],
            PolicyKind::Periodic { .. } => vec![0.0],
        }
    }

    /// `η̇` on flows.
    pub fn eta_flow(&self, q: &HybridState) -> Vec<f64> {
        match &self.kind {
            PolicyKind::Iss(_) => Vec::new(),
            PolicyKind::WangLemmon(p) => vec![-p.decay()],
            PolicyKind::EtaThreshold(p) => vec![-p.delta.eval(q.eta()[0])],
            PolicyKind::Periodic { .. } => vec![1.0],
        }
    }

    /// `η⁺`, evaluated at the pre-jump state.
    pub fn eta_jump(&self, q: &HybridState) -> Vec<f64> {
        match &self.kind {
            PolicyKind::Iss(_) => Vec::new(),
            PolicyKind::WangLemmon(_) => vec![1.0],
            PolicyKind::EtaThreshold(_) => vec![self.cert().w(q.e())],
            PolicyKind::Periodic { .. } => vec![0.0],
        }
    }

    /// Non-positive exactly on the flow set. `xdot` supplies `f(x, e)`.
    pub fn flow_guard(&self, q: &HybridState, xdot: &dyn Fn() -> Vec<f64>) -> f64 {
        let _ = xdot;
        match &self.kind {
            PolicyKind::Iss(_) => {
                let c = self.cert();
                c.w(q.e()) - c.v(q.x())
            }
            PolicyKind::WangLemmon(p) => {
                let c = self.cert();
                let eta = q.eta()[0];
                let threshold = c.v(q.x()) - eta * c.v(&xe_sum(q));
                threshold.max(eta - 1.0).max(p.epsilon - eta)
            }
            PolicyKind::EtaThreshold(_) => {
                let c = self.cert();
                let eta = q.eta()[0];
                (c.w(q.e()) - c.v(q.x()).max(eta)).max(-eta)
            }
            PolicyKind::Periodic { period } => q.eta()[0] - period,
        }
    }

    /// Non-negative exactly on the jump set. `xdot` supplies `f(x, e)`.
    pub fn jump_guard(&self, q: &HybridState, xdot: &dyn Fn() -> Vec<f64>) -> f64 {
        match &self.kind {
            PolicyKind::Iss(_) => {
                let c = self.cert();
                c.w(q.e()) - c.v(q.x())
            }
            PolicyKind::WangLemmon(p) => {
                let c = self.cert();
                let eta = q.eta()[0];
                let vx = c.v(q.x());
                let threshold = vx - eta * c.v(&xe_sum(q));
                let slow_decay = c.lie_derivative(q.x(), &xdot()) + p.decay() * vx;
                threshold.min(slow_decay).max(p.epsilon - eta)
            }
            PolicyKind::EtaThreshold(_) => {
                let c = self.cert();
                let eta = q.eta()[0];
                (c.w(q.e()) - c.v(q.x()).max(eta)).min(eta)
            }
            PolicyKind::Periodic { period } => q.eta()[0] - period,
        }
    }

    /// The hybrid Lyapunov function matching this policy, if any.
    pub fn composite(&self) -> Option<CompositeLyapunov> {
        let kind = match self.kind {
            PolicyKind::Iss(_) => CompositeKind::IssMax,
            PolicyKind::WangLemmon(_) => CompositeKind::WlMax,
            PolicyKind::EtaThreshold(_) => CompositeKind::EtaMax,
            PolicyKind::Periodic { .. } => return None,
        };
        Some(CompositeLyapunov::new(kind, self.cert().clone()))
    }

    /// Guaranteed flow decay `α_R` of [`Self::composite`].
    pub fn decrease_rate(&self) -> Option<ClassK> {
        match &self.kind {
            PolicyKind::Iss(p) => Some(self.cert().alpha.scaled(1.0 - p.sigma)),
            PolicyKind::WangLemmon(p) => Some(ClassK::linear(p.decay())),
            PolicyKind::EtaThreshold(p) => {
                let c = self.cert();
                Some(ClassK::min(&c.alpha.scaled(1.0 - c.sigma), &p.delta))
            }
            PolicyKind::Periodic { .. } => None,
        }
    }
}

/// A sampled loop closed through a transmission policy.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub plant_loop: SampledLoop,
    pub policy: TriggerPolicy,
    dims: StateDims,
}

impl ClosedLoop {
    pub fn new(plant_loop: SampledLoop, policy: TriggerPolicy) -> Self {
        let dims = StateDims::new(plant_loop.n_x(), plant_loop.n_e(), policy.n_eta());
        Self {
            plant_loop,
            policy,
            dims,
        }
    }

    /// `(x0, 0, η(0, 0))`: the first sample is available at `t = 0`.
    pub fn initial_state(&self, x0: &[f64]) -> Result<HybridState, PolicyError> {
        if x0.len() != self.dims.n_x {
            return Err(SystemError::Dimension {
                what: "x0",
                got: x0.len(),
                expected: self.dims.n_x,
            }
            .into());
        }
        Ok(HybridState::new(
            x0,
            &vec![0.0; self.dims.n_e],
            &self.policy.initial_eta(),
        ))
    }

    fn xdot(&self, q: &HybridState) -> Vec<f64> {
        self.plant_loop
            .composed_flow(q.x(), q.e())
            .map(|(f, _)| f)
            .unwrap_or_else(|_| vec![f64::NAN; self.dims.n_x])
    }
}

impl HybridSystem for ClosedLoop {
    fn dims(&self) -> StateDims {
        self.dims
    }

    fn flow_map(&self, q: &HybridState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dims.total());
        match self.plant_loop.composed_flow(q.x(), q.e()) {
            Ok((f, g)) => {
                out.extend(f);
                out.extend(g);
            }
            Err(_) => out.resize(self.dims.n_x + self.dims.n_e, f64::NAN),
        }
        out.extend(self.policy.eta_flow(q));
        out
    }

    fn jump_map(&self, q: &HybridState) -> HybridState {
        HybridState::new(q.x(), &vec![0.0; self.dims.n_e], &self.policy.eta_jump(q))
    }

    fn flow_guard(&self, q: &HybridState) -> f64 {
        self.policy.flow_guard(q, &|| self.xdot(q))
    }

    fn jump_guard(&self, q: &HybridState) -> f64 {
        self.policy.jump_guard(q, &|| self.xdot(q))
    }
}
