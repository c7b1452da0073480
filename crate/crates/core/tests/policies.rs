use etc_core::bench::{simulate_example, PolicySpec};
use etc_core::hybrid::{SolverConfig, SolverError};
use etc_core::IssCertificate;
use proptest::prelude::*;

const EPS: f64 = 1e-6;

fn cfg(t_end: f64) -> SolverConfig {
    SolverConfig {
        t_end,
        ..SolverConfig::default()
    }
}

fn cert() -> IssCertificate {
    IssCertificate::example_vi(0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn iss_rule_keeps_v_decreasing(x0 in -1.0..1.0f64, d in 0.0..1.0f64) {
        let c = cert();
        let policy = PolicySpec::Iss.build(&c).unwrap();
        let cfg = cfg(5.0);
        let (_, arc) = simulate_example(&policy, x0, d, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for (_, q) in arc.points() {
            let v = c.v(q.x());
            prop_assert!(v <= prev + 1e-6);
            prev = v;
        }
        // Slopes over spans of at least 1e-4 s, compared at the later point.
        for seg in &arc.samples {
            let mut anchor = 0;
            for m in 1..seg.len() {
                while anchor + 1 < m && seg[m].t - seg[anchor + 1].t >= 1e-4 {
                    anchor += 1;
                }
                let span = seg[m].t - seg[anchor].t;
                if span < 1e-4 {
                    continue;
                }
                let (va, vb) = (c.v(seg[anchor].q.x()), c.v(seg[m].q.x()));
                let slope = (vb - va) / span;
                prop_assert!(slope <= -(1.0 - 0.5) * 0.84 * vb + 1e-6, "t = {}", seg[m].t);
            }
        }
    }

    #[test]
    fn wl_threshold_invariants(x0 in -1.0..1.0f64, d in 0.0..1.0f64) {
        prop_assume!(x0 != 0.0);
        let c = cert();
        let policy = PolicySpec::Wl { sigma_bar: 1e-3, epsilon: EPS }.build(&c).unwrap();
        let cfg = cfg(5.0);
        let (_, arc) = simulate_example(&policy, x0, d, &cfg).unwrap();
        for seg in &arc.samples {
            for s in seg {
                let eta = s.q.eta()[0];
                prop_assert!((EPS..=1.0).contains(&eta));
                let xe = s.q.x()[0] + s.q.e()[0];
                prop_assert!(c.v(s.q.x()) <= eta * c.v(&[xe]) + cfg.guard_tol);
            }
        }
        for j in &arc.jumps {
            prop_assert_eq!(j.after.eta()[0], 1.0);
        }
    }

    #[test]
    fn eta_threshold_invariants(x0 in -1.0..1.0f64, d in 0.0..1.0f64, eta0 in 0.0..2.5f64) {
        let c = cert();
        let policy = PolicySpec::Eta { eta0, delta_gain: 0.5 }.build(&c).unwrap();
        let cfg = cfg(5.0);
        let (_, arc) = simulate_example(&policy, x0, d, &cfg).unwrap();
        for seg in &arc.samples {
            for s in seg {
                let eta = s.q.eta()[0];
                prop_assert!(eta >= 0.0);
                prop_assert!(c.w(s.q.e()) <= c.v(s.q.x()).max(eta) + cfg.guard_tol);
            }
        }
        for j in &arc.jumps {
            prop_assert_eq!(j.after.eta()[0], c.w(j.before.e()));
        }
    }
}

#[test]
fn eta_rule_transmits_less_often_than_periodic() {
    let c = cert();
    let cfg = cfg(20.0);
    let periodic = PolicySpec::Periodic { period: 0.368 }.build(&c).unwrap();
    let eta = PolicySpec::Eta {
        eta0: 1.0,
        delta_gain: 0.5,
    }
    .build(&c)
    .unwrap();
    for (x0, d) in [(0.9, 0.1), (-0.6, 0.8), (0.2, 0.5)] {
        let (_, a) = simulate_example(&periodic, x0, d, &cfg).unwrap();
        let (_, b) = simulate_example(&eta, x0, d, &cfg).unwrap();
        assert!(b.executions() < a.executions());
    }
}

#[test]
fn origin_lies_in_every_jump_set() {
    // At (x, e) = 0 each closed trigger condition holds with equality, so a
    // solution started on the attractor keeps jumping at t = 0.
    let c = cert();
    let cfg = SolverConfig {
        t_end: 1.0,
        max_jumps: 50,
        ..SolverConfig::default()
    };
    for spec in [
        PolicySpec::Iss,
        PolicySpec::Wl {
            sigma_bar: 1e-3,
            epsilon: EPS,
        },
        PolicySpec::Eta {
            eta0: 0.0,
            delta_gain: 0.5,
        },
    ] {
        let policy = spec.build(&c).unwrap();
        let err = simulate_example(&policy, 0.0, 0.5, &cfg).unwrap_err();
        assert_eq!(
            err,
            SolverError::MaxJumpsExceeded {
                max_jumps: 50,
                t: 0.0
            }
        );
    }
}
