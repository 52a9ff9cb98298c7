use levy_attention::attention_flow::build_network;
use levy_attention::empirical::{
    parse_events, session_to_events, sessionize, write_events_csv, DEFAULT_SESSION_GAP,
};
use levy_attention::simulation::{run_session, simulate_lifetimes, SimConfig};

#[test]
fn diversity_equals_active_sites() {
    for seed in 0..5 {
        let cfg = SimConfig::new(60, 0.5, 2.0, seed).unwrap();
        let res = run_session(&cfg).unwrap();
        assert!(!res.truncated);
        let m = build_network(&res.trajectories).metrics(cfg.n_walkers);
        assert_eq!(m.diversity as usize, res.space.n_active());
    }
}

#[test]
fn event_log_round_trip_preserves_metrics() {
    for (seed, p, lambda) in [(1, 0.5, 2.0), (2, 0.8, 1.5), (3, 0.3, 2.7)] {
        let cfg = SimConfig::new(80, p, lambda, seed).unwrap();
        let res = run_session(&cfg).unwrap();
        let direct = build_network(&res.trajectories).metrics(cfg.n_walkers);

        let mut csv = Vec::new();
        write_events_csv(&session_to_events(&res, 1e7), &mut csv).unwrap();
        let events = parse_events(csv.as_slice()).unwrap();
        let sessions = sessionize(&events, DEFAULT_SESSION_GAP).unwrap();
        let walks: Vec<Vec<String>> = sessions.into_iter().map(|s| s.resources).collect();
        let reingested = build_network(&walks).metrics(cfg.n_walkers);
        assert_eq!(
            (direct.activity, direct.diversity, direct.edges),
            (reingested.activity, reingested.diversity, reingested.edges),
            "seed {seed}"
        );
    }
}

#[test]
fn truncated_session_is_flow_balanced() {
    let mut cfg = SimConfig::new(5, 1.0, 2.0, 9).unwrap();
    cfg.max_ticks = 50;
    let res = run_session(&cfg).unwrap();
    assert!(res.truncated);
    assert_eq!(res.t_end, 50);
    let net = build_network(&res.trajectories);
    assert!(net.check_flow_balance());
    assert_eq!(net.source_efflux(), 5);
}

#[test]
fn no_resources_means_immediate_exit() {
    let mut cfg = SimConfig::new(10, 0.0, 2.0, 0).unwrap();
    cfg.seed_origin = false;
    let res = run_session(&cfg).unwrap();
    assert_eq!(res.t_end, 0);
    assert!(res.trajectories.iter().all(|t| t.is_empty()));
}

#[test]
fn company_extends_lifetime() {
    let template = SimConfig::new(1, 0.3, 2.0, 5).unwrap();
    let stats = simulate_lifetimes(&template, &[1, 256], 40).unwrap();
    assert!(stats[1].mean_t_end > stats[0].mean_t_end);
}
