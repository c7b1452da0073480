use approx::assert_relative_eq;
use etc_core::bench::{simulate_example, PolicySpec};
use etc_core::certificates::{
    dwell_lower_bound, estimate_lipschitz, monitor_decrease, theorem2_lambda, theorem3_lambda,
    verify_sandwich, CompositeKind, CompositeLyapunov, GridBox, IssCertificate, LipschitzEstimates,
    DEFAULT_ACT_TOL,
};
use etc_core::hybrid::{HybridState, HybridSystem, SolverConfig};
use etc_core::policies::ClosedLoop;
use etc_core::systems::example_vi_loop;
use proptest::prelude::*;

fn cert() -> IssCertificate {
    IssCertificate::example_vi(0.5).unwrap()
}

fn closed(spec: &PolicySpec, d: f64) -> ClosedLoop {
    ClosedLoop::new(example_vi_loop(d).unwrap(), spec.build(&cert()).unwrap())
}

fn wl() -> PolicySpec {
    PolicySpec::Wl {
        sigma_bar: 1e-3,
        epsilon: 1e-6,
    }
}

fn eta(eta0: f64) -> PolicySpec {
    PolicySpec::Eta {
        eta0,
        delta_gain: 0.5,
    }
}

fn estimates(l1: f64, l2: f64, l3: f64) -> LipschitzEstimates {
    LipschitzEstimates {
        l1,
        l2,
        l3,
        region: GridBox::symmetric(1.0, 1.0),
        grid_n: 2,
    }
}

#[test]
fn clarke_single_branch_iss() {
    let sys = closed(&PolicySpec::Iss, 0.5);
    let r = sys.policy.composite().unwrap();
    let q = HybridState::new(&[1.0], &[0.05], &[]);
    let v = sys.flow_map(&q);
    let f = v[0];
    assert_eq!(r.clarke_dd(&q, &v, DEFAULT_ACT_TOL), 1.0 * f);
}

#[test]
fn clarke_tied_branches_wl() {
    let sys = closed(&wl(), 0.5);
    let r = sys.policy.composite().unwrap();
    // Right after a transmission both branches equal V(x).
    let q = HybridState::new(&[0.8], &[0.0], &[1.0]);
    let v = sys.flow_map(&q);
    let dd = r.clarke_dd(&q, &v, DEFAULT_ACT_TOL);
    assert_relative_eq!(dd, -1e-3 * 0.84 * 0.32, max_relative = 1e-12);
}

#[test]
fn clarke_threshold_branch_eta() {
    let sys = closed(&eta(1.5), 0.5);
    let r = sys.policy.composite().unwrap();
    let q = HybridState::new(&[0.3], &[0.1], &[1.5]);
    let v = sys.flow_map(&q);
    assert_eq!(r.clarke_dd(&q, &v, DEFAULT_ACT_TOL), -0.75);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clarke_matches_finite_difference_off_ties(
        which in 0usize..3,
        x in -1.5..1.5f64,
        e in -1.0..1.0f64,
        n in 1e-3..2.0f64,
        d in 0.0..1.0f64,
    ) {
        let (spec, eta) = match which {
            0 => (PolicySpec::Iss, vec![]),
            1 => (wl(), vec![n.min(1.0)]),
            _ => (eta(1.0), vec![n]),
        };
        let sys = closed(&spec, d);
        let r = sys.policy.composite().unwrap();
        let q = HybridState::new(&[x], &[e], &eta);
        let mut b = r.branches(&q);
        b.sort_by(|p, q| q.partial_cmp(p).unwrap());
        prop_assume!(b[0] - b[1] > 1e-3 * b[0].abs());

        let v = sys.flow_map(&q);
        let dd = r.clarke_dd(&q, &v, DEFAULT_ACT_TOL);
        let h = 1e-6;
        let fd = (r.value(&q.offset(h, &v)) - r.value(&q.offset(-h, &v))) / (2.0 * h);
        prop_assert!((dd - fd).abs() <= 1e-5 * dd.abs().max(1e-2), "dd {} fd {}", dd, fd);
    }
}

#[test]
fn jump_increments_on_arcs() {
    let cfg = SolverConfig {
        t_end: 10.0,
        ..SolverConfig::default()
    };
    for spec in [PolicySpec::Iss, eta(0.1), eta(2.0)] {
        let policy = spec.build(&cert()).unwrap();
        let (_, arc) = simulate_example(&policy, -0.7, 0.4, &cfg).unwrap();
        assert!(arc.executions() > 0);
        let r = policy.composite().unwrap();
        let report = monitor_decrease(&r, &arc, &policy.decrease_rate().unwrap(), 1e-4);
        match spec {
            PolicySpec::Iss => assert!(report.max_jump_increase <= 0.0),
            _ => assert_eq!(report.max_jump_increase, 0.0),
        }
        assert!(report.passes(1e-4, 1e-9), "{report:?}");
    }
}

#[test]
fn lipschitz_constants_of_benchmark() {
    let region = GridBox::symmetric(2.0, 2.0);
    let l = estimate_lipschitz(&example_vi_loop(1.0).unwrap(), &cert(), &region, 101).unwrap();
    assert_eq!(l.l1, l.l3);
    assert!(l.l1 >= 4.0);
    assert_relative_eq!(l.l2, (2.0f64 * 2.66 / 0.42).sqrt(), max_relative = 1e-12);
    let wider = l.inflated(1.1);
    assert_relative_eq!(wider.l1, 1.1 * l.l1);
}

#[test]
fn dwell_oracles() {
    let tau = dwell_lower_bound(|_| 4.0, 0.0, 1.0).unwrap();
    assert_relative_eq!(tau, 0.25, max_relative = 1e-12);
    let tau = dwell_lower_bound(theorem3_lambda(&estimates(1.0, 1.0, 1.0)), 0.0, 1.0).unwrap();
    assert!((tau - 0.5).abs() <= 1e-9);

    let rate = theorem2_lambda(&estimates(1.0, 1.0, 1.0), 1e-3, 0.84, 1e-6);
    assert_eq!(rate(0.0), 1.0);
    assert_relative_eq!(rate(0.5), 2.25, max_relative = 1e-15);
    let slow = theorem2_lambda(&estimates(1e-6, 1.0, 1.0), 1e-3, 0.84, 1e-6);
    assert_relative_eq!(slow(0.0), 8.4e-4 / (1.0 - 1e-6), max_relative = 1e-15);

    // The closed form for ∫ ds / (L1·L2·(1 + s/L2)²) over [0, 1].
    let (l1, l2) = (4.0, 3.5);
    let tau = dwell_lower_bound(theorem2_lambda(&estimates(l1, l2, l1), 1e-3, 0.84, 1e-6), 0.0, 1.0)
        .unwrap();
    assert_relative_eq!(tau, 1.0 / (l1 * (l2 + 1.0)), max_relative = 1e-9);
}

#[test]
fn certificate_bounds() {
    let c = cert();
    assert_eq!(c.v(&[0.0]), 0.0);
    assert!(verify_sandwich(&c, &[(-3.0, 3.0)], 301).value <= 0.0);
}

#[test]
fn scaled_certificate_gives_same_jump_times() {
    // Scaling by a power of two is exact, so the guards agree bit for bit.
    let c = cert();
    let cfg = SolverConfig {
        t_end: 20.0,
        ..SolverConfig::default()
    };
    let a = PolicySpec::Iss.build(&c).unwrap();
    let b = PolicySpec::Iss.build(&c.scaled(4.0)).unwrap();
    let (_, arc_a) = simulate_example(&a, 0.83, 0.61, &cfg).unwrap();
    let (_, arc_b) = simulate_example(&b, 0.83, 0.61, &cfg).unwrap();
    assert!(arc_a.executions() > 5);
    let ta: Vec<f64> = arc_a.jumps.iter().map(|j| j.t).collect();
    let tb: Vec<f64> = arc_b.jumps.iter().map(|j| j.t).collect();
    assert_eq!(ta, tb);
}

#[test]
fn composite_vanishes_only_at_target() {
    let c = cert();
    let wl_r = CompositeLyapunov::new(CompositeKind::WlMax, c.clone());
    assert_eq!(wl_r.value(&HybridState::new(&[0.0], &[0.0], &[0.5])), 0.0);
    assert!(wl_r.value(&HybridState::new(&[0.0], &[0.1], &[0.5])) > 0.0);
    let eta_r = CompositeLyapunov::new(CompositeKind::EtaMax, c);
    assert_eq!(eta_r.value(&HybridState::new(&[0.0], &[0.0], &[0.0])), 0.0);
    assert!(eta_r.value(&HybridState::new(&[0.0], &[0.0], &[1e-3])) > 0.0);
}
