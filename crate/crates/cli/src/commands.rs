use std::fmt::Write as _;

use etc_core::bench::{run_table1, simulate_example, BenchError, PolicySpec};
use etc_core::certificates::{
    dwell_lower_bound, envelope_violation, estimate_lipschitz, iss_lambda, linspace,
    monitor_decrease, theorem2_lambda, theorem3_lambda, verify_iss, verify_sandwich,
    CertificateError, GridBox, IssCertificate, LipschitzEstimates, ParamRange,
};
use etc_core::hybrid::{fmt_f64, write_trajectory_csv, HybridState, SolverError};
use etc_core::policies::PolicyError;
use etc_core::systems::{example_vi_loop, SystemError};
use thiserror::Error;

use crate::config::{Config, ConfigError};

/// Half-width of the `(x, e)` box on which `certify` checks the certificate.
pub const CERTIFY_HALF_WIDTH: f64 = 2.0;
pub const CERTIFY_GRID: usize = 201;
pub const D_SAMPLES: usize = 11;
pub const FLOW_TOL: f64 = 1e-4;
pub const JUMP_TOL: f64 = 1e-9;
pub const ENVELOPE_TOL: f64 = 1e-6;
/// Safety factor applied to grid-estimated growth constants.
pub const LIPSCHITZ_INFLATION: f64 = 1.1;
const LIPSCHITZ_GRID: usize = 201;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("simulation failed: {0}")]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{0}")]
    Invalid(String),
}

fn certificate(cfg: &Config) -> Result<IssCertificate, CommandError> {
    Ok(IssCertificate::example_vi(cfg.policy.sigma)?)
}

fn d_range(cfg: &Config) -> Result<ParamRange, CommandError> {
    let (lo, hi) = (cfg.bench.d_min, cfg.bench.d_max);
    if lo > hi {
        return Err(CommandError::Invalid(format!("d range [{lo}, {hi}] is empty")));
    }
    let n = if lo == hi { 1 } else { D_SAMPLES };
    Ok(ParamRange { lo, hi, n })
}

/// Trajectory CSV of the configured run, preceded by the config echo.
pub fn simulate(cfg: &Config) -> Result<String, CommandError> {
    let cert = certificate(cfg)?;
    let policy = cfg.policy_spec().build(&cert)?;
    let (_, arc) = simulate_example(&policy, cfg.system.x0, cfg.system.d, &cfg.solver())?;
    let composite = policy.composite();
    let mut out = cfg.comment_block().into_bytes();
    write_trajectory_csv(
        &mut out,
        &arc,
        &|q: &HybridState| Some(cert.v(q.x())),
        &|q: &HybridState| composite.as_ref().map(|r| r.value(q)),
    )
    .expect("writing to memory cannot fail");
    Ok(String::from_utf8(out).expect("CSV is ASCII"))
}

/// Summary CSV of the Monte-Carlo comparison, preceded by the config echo.
pub fn bench(cfg: &Config) -> Result<String, CommandError> {
    let summary = run_table1(&cfg.bench_config())?;
    Ok(cfg.comment_block() + &summary.table_csv())
}

/// One `certify` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub worst: f64,
    pub location: String,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {} {} {}",
            self.name,
            if self.pass { "pass" } else { "fail" },
            fmt_f64(self.worst),
            if self.location.is_empty() { "-" } else { &self.location }
        )
    }
}

/// Certificate checks on the grid plus Lyapunov monitors along the
/// configured run. Policies without a Lyapunov function get only the former.
pub fn certify(cfg: &Config) -> Result<Vec<Check>, CommandError> {
    let cert = certificate(cfg)?;
    let region = GridBox::symmetric(CERTIFY_HALF_WIDTH, CERTIFY_HALF_WIDTH);
    let mut checks = Vec::new();

    let w = verify_iss(&cert, example_vi_loop, &region, &d_range(cfg)?, CERTIFY_GRID)?;
    checks.push(Check {
        name: "iss_dissipation",
        pass: w.value <= 0.0,
        worst: w.value,
        location: w.location(),
    });
    let w = verify_sandwich(&cert, &region.x, CERTIFY_GRID);
    checks.push(Check {
        name: "lyapunov_bounds",
        pass: w.value <= 0.0,
        worst: w.value,
        location: w.location(),
    });

    let policy = cfg.policy_spec().build(&cert)?;
    if let (Some(r), Some(alpha_r)) = (policy.composite(), policy.decrease_rate()) {
        let (_, arc) = simulate_example(&policy, cfg.system.x0, cfg.system.d, &cfg.solver())?;
        let report = monitor_decrease(&r, &arc, &alpha_r, FLOW_TOL);
        let at = |h: Option<etc_core::hybrid::HybridTime>| {
            h.map(|h| format!("t={},j={}", h.t, h.j)).unwrap_or_default()
        };
        checks.push(Check {
            name: "flow_decrease",
            pass: report.max_flow_violation <= FLOW_TOL,
            worst: report.max_flow_violation,
            location: at(report.flow_violation_at),
        });
        checks.push(Check {
            name: "jump_nonincrease",
            pass: report.max_jump_increase <= JUMP_TOL,
            worst: report.max_jump_increase,
            location: at(report.jump_increase_at),
        });
        if let Some(rho) = alpha_r.linear_gain() {
            let v = envelope_violation(&r, &arc, rho);
            checks.push(Check {
                name: "exponential_envelope",
                pass: v <= ENVELOPE_TOL,
                worst: v,
                location: format!("rho={rho}"),
            });
        }
    }
    Ok(checks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DwellReport {
    pub policy: &'static str,
    pub estimates: Option<LipschitzEstimates>,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl DwellReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "policy {}", self.policy);
        if let Some(l) = &self.estimates {
            let _ = writeln!(out, "L1 {}", fmt_f64(l.l1));
            let _ = writeln!(out, "L2 {}", fmt_f64(l.l2));
            let _ = writeln!(out, "L3 {}", fmt_f64(l.l3));
        }
        let _ = writeln!(out, "interval {} {}", fmt_f64(self.a), fmt_f64(self.b));
        let _ = writeln!(out, "tau {} s", fmt_f64(self.tau));
        out
    }
}

/// Lower bound on the inter-transmission time of the configured policy.
///
/// Growth constants are grid maxima over `|x| ≤ X`, `|e| ≤ 2X` with `X` the
/// largest configured initial condition and over the configured `d` range,
/// inflated by [`LIPSCHITZ_INFLATION`].
pub fn dwell(cfg: &Config) -> Result<DwellReport, CommandError> {
    let spec = cfg.policy_spec();
    let cert = certificate(cfg)?;
    spec.build(&cert)?;
    if let PolicySpec::Periodic { period } = spec {
        return Ok(DwellReport {
            policy: spec.name(),
            estimates: None,
            a: 0.0,
            b: period,
            tau: period,
        });
    }

    let b = &cfg.bench;
    let x_half = b.x0_min.abs().max(b.x0_max.abs()).max(cfg.system.x0.abs());
    if !(x_half > 0.0) {
        return Err(CommandError::Invalid(
            "initial conditions are all zero; no region to estimate growth constants on".into(),
        ));
    }
    let region = GridBox::symmetric(x_half, 2.0 * x_half);
    // The decreasing-threshold rule uses the gain with σ = 1 − σ̄.
    let l2_cert = match spec {
        PolicySpec::Wl { sigma_bar, .. } => cert.with_sigma(1.0 - sigma_bar)?,
        _ => cert.clone(),
    };
    let mut est: Option<LipschitzEstimates> = None;
    for d in linspace(b.d_min, b.d_max, d_range(cfg)?.n) {
        let l = estimate_lipschitz(&example_vi_loop(d)?, &l2_cert, &region, LIPSCHITZ_GRID)?;
        est = Some(match est {
            Some(prev) => prev.max(&l),
            None => l,
        });
    }
    let l = est.expect("at least one d sample").inflated(LIPSCHITZ_INFLATION);

    let (a, b_end, tau) = match spec {
        PolicySpec::Wl {
            sigma_bar, epsilon, ..
        } => {
            let alpha_bar = cert
                .alpha
                .linear_gain()
                .ok_or_else(|| CommandError::Invalid("decay rate α is not linear".into()))?;
            let rate = theorem2_lambda(&l, sigma_bar, alpha_bar, epsilon);
            (0.0, 1.0, dwell_lower_bound(rate, 0.0, 1.0)?)
        }
        PolicySpec::Eta { .. } => {
            let end = 1.0 / l.l2;
            (0.0, end, dwell_lower_bound(theorem3_lambda(&l), 0.0, end)?)
        }
        PolicySpec::Iss => {
            let end = 1.0 / l.l2;
            (0.0, end, dwell_lower_bound(iss_lambda(&l), 0.0, end)?)
        }
        PolicySpec::Periodic { .. } => unreachable!("handled above"),
    };
    Ok(DwellReport {
        policy: spec.name(),
        estimates: Some(l),
        a,
        b: b_end,
        tau,
    })
}
