use etc_cli::{parse_config, Config, ConfigError, PolicyName};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = Option<PolicyName>> {
    prop_oneof![
        Just(None),
        Just(Some(PolicyName::Iss)),
        Just(Some(PolicyName::Wl)),
        Just(Some(PolicyName::EtaThreshold)),
        Just(Some(PolicyName::Periodic)),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, 1e-12..1e-3f64, Just(0.0), Just(-0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_round_trips(
        kind in kind(),
        floats in proptest::collection::vec(finite(), 16),
        max_jumps in 0usize..1_000_000,
        n_runs in 0usize..10_000,
        seed in any::<u64>(),
    ) {
        let mut cfg = Config::default();
        cfg.system.d = floats[0];
        cfg.system.x0 = floats[1];
        cfg.policy.kind = kind;
        cfg.policy.sigma = floats[2];
        cfg.policy.sigma_bar = floats[3];
        cfg.policy.epsilon = floats[4];
        cfg.policy.eta0 = floats[5];
        cfg.policy.delta_gain = floats[6];
        cfg.policy.period = floats[7];
        cfg.sim.t_end = floats[8];
        cfg.sim.h = floats[9];
        cfg.sim.event_tol = floats[10];
        cfg.sim.max_jumps = max_jumps;
        cfg.bench.n_runs = n_runs;
        cfg.bench.seed = seed;
        cfg.bench.x0_min = floats[11];
        cfg.bench.x0_max = floats[12];
        cfg.bench.d_min = floats[13];
        cfg.bench.d_max = floats[14];
        let back = parse_config(&cfg.serialize()).unwrap();
        prop_assert_eq!(&back, &cfg);
        // Comment echo is ignored by the parser.
        let echoed = cfg.comment_block() + &cfg.serialize();
        prop_assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }
}

#[test]
fn partial_config_keeps_other_defaults() {
    let cfg = parse_config("[policy]\nkind = wl\nsigma_bar = 0.002\n").unwrap();
    assert_eq!(cfg.policy.kind, Some(PolicyName::Wl));
    assert_eq!(cfg.policy.sigma_bar, 0.002);
    assert_eq!(cfg.sim, Config::default().sim);
}

#[test]
fn errors_carry_line_numbers() {
    let err = parse_config("[sim]\n\nh = fast\n").unwrap_err();
    assert!(matches!(err, ConfigError::Type { line: 3, .. }), "{err:?}");

    let err = parse_config("[sim]\nstep = 0.1\n").unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }), "{err:?}");

    let err = parse_config("[plant]\n").unwrap_err();
    assert!(matches!(err, ConfigError::Parse { line: 1, .. }), "{err:?}");

    let err = parse_config("h = 0.1\n").unwrap_err();
    assert!(matches!(err, ConfigError::Parse { line: 1, .. }), "{err:?}");

    let err = parse_config("[sim]\nh = 0.1\nh = 0.2\n").unwrap_err();
    assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err:?}");

    let err = parse_config("[sim]\nmax_jumps = -1\n").unwrap_err();
    assert!(matches!(err, ConfigError::Type { line: 2, .. }), "{err:?}");

    let err = parse_config("[sim]\nh = nan\n").unwrap_err();
    assert!(matches!(err, ConfigError::Type { line: 2, .. }), "{err:?}");

    let err = parse_config("[policy]\nkind = sometimes\n").unwrap_err();
    assert!(matches!(err, ConfigError::Type { line: 2, .. }), "{err:?}");
}
