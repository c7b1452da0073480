//! Fixtures shared by the criterion benchmarks.

use etc_core::bench::{BenchConfig, PolicySpec};
use etc_core::hybrid::SolverConfig;
use etc_core::{ClosedLoop, HybridState, IssCertificate};

/// Gain used by every fixture.
pub const SIGMA: f64 = 0.5;

pub fn certificate() -> IssCertificate {
    IssCertificate::example_vi(SIGMA).expect("fixture gain is valid")
}

/// The decreasing-threshold rule with `η(0) = 1`.
pub fn eta_spec() -> PolicySpec {
    PolicySpec::Eta {
        eta0: 1.0,
        delta_gain: 0.5,
    }
}

/// Closed loop of the example plant under `spec`, with its initial state.
pub fn closed_loop(spec: &PolicySpec, x0: f64, d: f64) -> (ClosedLoop, HybridState) {
    let policy = spec.build(&certificate()).expect("fixture policy is valid");
    let plant = etc_core::example_vi_loop(d).expect("fixture d is valid");
    let cl = ClosedLoop::new(plant, policy);
    let q0 = cl.initial_state(&[x0]).expect("fixture state is valid");
    (cl, q0)
}

pub fn solver(t_end: f64) -> SolverConfig {
    SolverConfig {
        t_end,
        ..SolverConfig::default()
    }
}

/// Default comparison with fewer runs and a shorter horizon.
pub fn small_bench(n_runs: usize, t_end: f64) -> BenchConfig {
    BenchConfig {
        n_runs,
        solver: solver(t_end),
        ..BenchConfig::default()
    }
}
