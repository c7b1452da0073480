//! Event-triggered control of sampled nonlinear systems, modelled as hybrid
//! systems `q̇ = F(q)` on `C`, `q⁺ = G(q)` on `D` with `q = (x, e, η)`.
//!
//! * [`hybrid`]: states, hybrid arcs and the event-locating RK4 solver.
//! * [`systems`]: plant/controller/hold compositions and the scalar benchmark.
//! * [`policies`]: transmission rules as flow and jump sets.
//! * [`certificates`]: ISS-Lyapunov certificates, composite Lyapunov
//!   functions, runtime monitors and dwell-time bounds.
//! * [`bench`]: the seeded Monte-Carlo comparison.

pub mod bench;
pub mod certificates;
pub mod classk;
pub mod hybrid;
pub mod policies;
pub mod systems;

pub use bench::{run_table1, BenchConfig, BenchError, BenchSummary, PolicySpec, RunRecord};
pub use certificates::{
    dwell_lower_bound, estimate_lipschitz, CertificateError, CompositeKind, CompositeLyapunov,
    DwellTimeBound, GridBox, IssCertificate, LipschitzEstimates,
};
pub use classk::ClassK;
pub use hybrid::{solve, HybridArc, HybridState, HybridSystem, SolverConfig, SolverError, StateDims};
pub use policies::{ClosedLoop, PolicyError, TriggerPolicy};
pub use systems::{example_vi_loop, SampledLoop, SystemError};
