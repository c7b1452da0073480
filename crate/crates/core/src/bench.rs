//! Seeded Monte-Carlo comparison of transmission policies on the scalar
//! benchmark plant.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::certificates::{envelope_violation, monitor_decrease, CertificateError, IssCertificate};
use crate::classk::ClassK;
use crate::hybrid::{fmt_f64, solve, HybridArc, SolverConfig, SolverError};
use crate::policies::{
    eta_policy, iss_policy, periodic_policy, wl_policy, ClosedLoop, EtaPolicyParams, PolicyError,
    TriggerPolicy, WlPolicyParams,
};
use crate::systems::example_vi_loop;

pub const SUMMARY_HEADER: &str =
    "policy,param,avg_executions,min_dwell,max_flow_violation,max_jump_violation,max_final_abs_x";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step: returns `(value, new_state)`.
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let s = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = s;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31), s)
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let (v, s) = splitmix64_next(self.state);
        self.state = s;
        v
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A policy column of the benchmark.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    Iss,
    Wl { sigma_bar: f64, epsilon: f64 },
    Eta { eta0: f64, delta_gain: f64 },
    Periodic { period: f64 },
}

impl PolicySpec {
    pub fn build(&self, cert: &IssCertificate) -> Result<TriggerPolicy, PolicyError> {
        match *self {
            Self::Iss => Ok(iss_policy(cert)),
            Self::Wl { sigma_bar, epsilon } => {
                let p = WlPolicyParams::for_certificate(cert, sigma_bar, epsilon)?;
                wl_policy(cert, p)
            }
            Self::Eta { eta0, delta_gain } => eta_policy(
                cert,
                EtaPolicyParams {
                    delta: ClassK::linear(delta_gain),
                    eta0,
                },
            ),
            Self::Periodic { period } => periodic_policy(period),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Iss => "iss",
            Self::Wl { .. } => "wl",
            Self::Eta { .. } => "eta_threshold",
            Self::Periodic { .. } => "periodic",
        }
    }

    /// The value printed in the `param` column.
    pub fn param(&self, sigma: f64) -> f64 {
        match *self {
            Self::Iss => sigma,
            Self::Wl { sigma_bar, .. } => sigma_bar,
            Self::Eta { eta0, .. } => eta0,
            Self::Periodic { period } => period,
        }
    }

    /// Periodic, the decreasing-threshold rule and three initial thresholds
    /// of the η rule.
    pub fn table1() -> Vec<Self> {
        let mut set = vec![
            Self::Periodic { period: 0.368 },
            Self::Wl {
                sigma_bar: 1e-3,
                epsilon: 1e-6,
            },
        ];
        for eta0 in [0.1, 1.0, 2.0] {
            set.push(Self::Eta {
                eta0,
                delta_gain: 0.5,
            });
        }
        set
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n_runs: usize,
    pub seed: u64,
    pub x0_range: (f64, f64),
    pub d_range: (f64, f64),
    /// ISS gain inside `γ̃`.
    pub sigma: f64,
    pub policy_set: Vec<PolicySpec>,
    /// Integrator settings; `t_end` is the horizon of every run.
    pub solver: SolverConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_runs: 200,
            seed: 42,
            x0_range: (-1.0, 1.0),
            d_range: (0.0, 1.0),
            sigma: 0.5,
            policy_set: PolicySpec::table1(),
            solver: SolverConfig {
                t_end: 20.0,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("run {run_index} ({policy}, x0 = {x0}, d = {d}) failed: {source}\nconfig: {config:?}")]
    Run {
        policy: &'static str,
        run_index: usize,
        x0: f64,
        d: f64,
        config: Box<BenchConfig>,
        source: SolverError,
    },
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.n_runs == 0 {
            return bad("n_runs must be at least 1");
        }
        for (name, (lo, hi)) in [("x0", self.x0_range), ("d", self.d_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(&format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if self.policy_set.is_empty() {
            return bad("policy set is empty");
        }
        self.solver
            .validate()
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))
    }

    /// The paired `(x0, d)` stream: run `i` takes draws `2i` and `2i + 1`.
    pub fn draws(&self) -> Vec<(f64, f64)> {
        let mut rng = SplitMix64::new(self.seed);
        (0..self.n_runs)
            .map(|_| {
                let x0 = rng.uniform(self.x0_range.0, self.x0_range.1);
                let d = rng.uniform(self.d_range.0, self.d_range.1);
                (x0, d)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run_index: usize,
    pub x0: f64,
    pub d: f64,
    pub executions: usize,
    /// `None` with fewer than two transmissions.
    pub min_dwell: Option<f64>,
    pub final_abs_x: f64,
    /// NaN for policies without a Lyapunov certificate.
    pub max_flow_violation: f64,
    pub max_jump_violation: f64,
    /// `max_t R(t, j) − R(0, 0)e^{−ρt}` with `ρ` the decay rate of `R`.
    pub envelope_violation: f64,
    /// Largest `|x|` and `|e|` visited.
    pub max_abs_x: f64,
    pub max_abs_e: f64,
    /// Largest `|e|` right after a jump; zero when every reset is exact.
    pub max_post_jump_abs_e: f64,
}

/// Closes the benchmark loop for one `(d, policy)` pair and simulates it.
pub fn simulate_example(
    policy: &TriggerPolicy,
    x0: f64,
    d: f64,
    solver: &SolverConfig,
) -> Result<(ClosedLoop, HybridArc), SolverError> {
    let plant = example_vi_loop(d).map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
    let sys = ClosedLoop::new(plant, policy.clone());
    let q0 = sys
        .initial_state(&[x0])
        .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
    let arc = solve(&sys, &q0, solver)?;
    Ok((sys, arc))
}

/// Per-run statistics of a solved arc.
pub fn record_run(policy: &TriggerPolicy, arc: &HybridArc, run_index: usize, x0: f64, d: f64) -> RunRecord {
    let (mut max_abs_x, mut max_abs_e) = (0.0_f64, 0.0_f64);
    for (_, q) in arc.points() {
        max_abs_x = max_abs_x.max(q.x()[0].abs());
        max_abs_e = max_abs_e.max(q.e()[0].abs());
    }
    let (flow, jump, envelope) = match (policy.composite(), policy.decrease_rate()) {
        (Some(r), Some(alpha_r)) => {
            let report = monitor_decrease(&r, arc, &alpha_r, 0.0);
            let rho = alpha_r.linear_gain().unwrap_or(f64::NAN);
            (
                report.max_flow_violation,
                report.max_jump_increase,
                envelope_violation(&r, arc, rho),
            )
        }
        _ => (f64::NAN, f64::NAN, f64::NAN),
    };
    RunRecord {
        run_index,
        x0,
        d,
        executions: arc.executions(),
        min_dwell: arc.min_dwell(),
        final_abs_x: arc.final_state().x()[0].abs(),
        max_flow_violation: flow,
        max_jump_violation: jump,
        envelope_violation: envelope,
        max_abs_x,
        max_abs_e,
        max_post_jump_abs_e: arc
            .jumps
            .iter()
            .flat_map(|j| j.after.e().iter().map(|v| v.abs()))
            .fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySummary {
    pub spec: PolicySpec,
    pub param: f64,
    pub avg_executions: f64,
    /// `+∞` when no run transmitted twice.
    pub min_dwell: f64,
    pub max_flow_violation: f64,
    pub max_jump_violation: f64,
    pub max_final_abs_x: f64,
    pub runs: Vec<RunRecord>,
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

impl PolicySummary {
    fn from_runs(spec: PolicySpec, param: f64, runs: Vec<RunRecord>) -> Self {
        // Sequential folds in run order keep the means bit-stable.
        let total: usize = runs.iter().map(|r| r.executions).sum();
        let fold = |f: fn(&RunRecord) -> f64| {
            runs.iter()
                .map(f)
                .fold(f64::NEG_INFINITY, nan_max)
        };
        Self {
            avg_executions: total as f64 / runs.len() as f64,
            min_dwell: runs
                .iter()
                .filter_map(|r| r.min_dwell)
                .fold(f64::INFINITY, f64::min),
            max_flow_violation: fold(|r| r.max_flow_violation),
            max_jump_violation: fold(|r| r.max_jump_violation),
            max_final_abs_x: fold(|r| r.final_abs_x),
            spec,
            param,
            runs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSummary {
    pub config: BenchConfig,
    pub policies: Vec<PolicySummary>,
}

impl BenchSummary {
    /// Configuration echo as `#` comments, the header, then one row per policy.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# seed={} n_runs={} t_end={}", c.seed, c.n_runs, fmt_f64(c.solver.t_end));
        let _ = writeln!(
            out,
            "# x0_range=[{}, {}] d_range=[{}, {}] sigma={}",
            fmt_f64(c.x0_range.0),
            fmt_f64(c.x0_range.1),
            fmt_f64(c.d_range.0),
            fmt_f64(c.d_range.1),
            fmt_f64(c.sigma)
        );
        let _ = writeln!(
            out,
            "# h={} event_tol={} max_jumps={}",
            fmt_f64(c.solver.h),
            fmt_f64(c.solver.event_tol),
            c.solver.max_jumps
        );
        out + &self.table_csv()
    }

    /// Header and one row per policy, without the configuration echo.
    pub fn table_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for p in &self.policies {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.spec.name(),
                fmt_f64(p.param),
                fmt_f64(p.avg_executions),
                fmt_f64(p.min_dwell),
                fmt_f64(p.max_flow_violation),
                fmt_f64(p.max_jump_violation),
                fmt_f64(p.max_final_abs_x)
            );
        }
        out
    }

    pub fn policy(&self, spec: &PolicySpec) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| &p.spec == spec)
    }
}

/// Runs every policy of `cfg.policy_set` on the shared `(x0, d)` stream.
pub fn run_table1(cfg: &BenchConfig) -> Result<BenchSummary, BenchError> {
    cfg.validate()?;
    let cert = IssCertificate::example_vi(cfg.sigma)?;
    let draws = cfg.draws();
    let mut policies = Vec::with_capacity(cfg.policy_set.len());
    for spec in &cfg.policy_set {
        let policy = spec.build(&cert)?;
        let runs = draws
            .par_iter()
            .enumerate()
            .map(|(i, &(x0, d))| {
                let (_, arc) =
                    simulate_example(&policy, x0, d, &cfg.solver).map_err(|source| BenchError::Run {
                        policy: spec.name(),
                        run_index: i,
                        x0,
                        d,
                        config: Box::new(cfg.clone()),
                        source,
                    })?;
                Ok(record_run(&policy, &arc, i, x0, d))
            })
            .collect::<Result<Vec<_>, BenchError>>()?;
        log::info!(
            "{} ({}): {} runs done",
            spec.name(),
            spec.param(cfg.sigma),
            runs.len()
        );
        policies.push(PolicySummary::from_runs(spec.clone(), spec.param(cfg.sigma), runs));
    }
    Ok(BenchSummary {
        config: cfg.clone(),
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        let (v, s) = splitmix64_next(0);
        assert_eq!(v, 0xE220_A839_7B1D_CDAF);
        assert_eq!(s, GOLDEN_GAMMA);
        let (w, _) = splitmix64_next(s);
        assert_ne!(v, w);
    }

    #[test]
    fn uniform_range() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
            let x = rng.uniform(-1.0, 1.0);
            assert!((-1.0..1.0).contains(&x));
        }
    }

    #[test]
    fn draws_are_interleaved() {
        let cfg = BenchConfig {
            n_runs: 3,
            ..BenchConfig::default()
        };
        let mut rng = SplitMix64::new(42);
        for (x0, d) in cfg.draws() {
            assert_eq!(x0, -1.0 + 2.0 * rng.next_f64());
            assert_eq!(d, rng.next_f64());
        }
    }

    #[test]
    fn periodic_single_run() {
        let cfg = BenchConfig {
            n_runs: 1,
            x0_range: (0.5, 0.5),
            d_range: (0.5, 0.5),
            policy_set: vec![PolicySpec::Periodic { period: 0.368 }],
            ..BenchConfig::default()
        };
        let s = run_table1(&cfg).unwrap();
        assert_eq!(s.policies[0].runs[0].executions, 54);
        assert!(s.policies[0].max_flow_violation.is_nan());
    }

    #[test]
    fn validation() {
        let mut cfg = BenchConfig {
            n_runs: 0,
            ..BenchConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.n_runs = 1;
        cfg.d_range = (1.0, 0.0);
        assert!(cfg.validate().is_err());
        cfg.d_range = (0.0, 1.0);
        cfg.policy_set.clear();
        assert!(matches!(run_table1(&cfg), Err(BenchError::InvalidConfig(_))));
    }
}
