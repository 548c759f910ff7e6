use mallows_lcs::experiment::{
    derive_seed, lis_band_check, records_csv, report_json, run_trials, sub_permutation_band_check, CloudKind,
    ExperimentConfig, SubBandConfig, Target,
};
use mallows_lcs::{jbar_closed, run_experiment};

fn mean(cfg: &ExperimentConfig) -> f64 {
    let records = run_trials(cfg).unwrap();
    records.iter().map(|r| r.lcs_scaled).sum::<f64>() / records.len() as f64
}

#[test]
fn trials_do_not_depend_on_thread_count() {
    let base = ExperimentConfig::new(300, 1.5, -0.5, 40, 99).with_rectangle([0.0, 0.5, 0.25, 1.0]);
    let mut one = base.clone();
    one.threads = Some(1);
    let mut many = base.clone();
    many.threads = Some(8);
    let (a, b, c) = (run_trials(&one).unwrap(), run_trials(&many).unwrap(), run_trials(&base).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(records_csv(&one, &a), records_csv(&many, &b));
    for (i, r) in a.iter().enumerate() {
        assert_eq!((r.trial_index, r.seed_used), (i, derive_seed(99, i)));
    }
}

#[test]
fn uniform_lcs_sits_below_two() {
    let m = mean(&ExperimentConfig::new(1000, 0.0, 0.0, 100, 1));
    assert!(m > 1.75 && m < 2.0, "mean {m}");
}

#[test]
fn concentrated_permutations_share_more() {
    let flat = mean(&ExperimentConfig::new(1000, 0.0, 0.0, 100, 2));
    let peaked = mean(&ExperimentConfig::new(1000, 2.0, 2.0, 100, 3));
    assert!(peaked > flat, "{peaked} vs {flat}");
}

#[test]
fn oracle_verification_passes() {
    let mut cfg = ExperimentConfig::new(400, 3.0, -2.0, 12, 5);
    cfg.verify_oracle = true;
    assert_eq!(run_trials(&cfg).unwrap().len(), 12);
}

#[test]
fn quadrants_account_for_every_point() {
    let mut cfg = ExperimentConfig::new(250, 1.0, 2.0, 10, 8)
        .with_rectangle([0.0, 0.3, 0.0, 0.6])
        .with_rectangle([0.3, 1.0, 0.0, 0.6])
        .with_rectangle([0.0, 0.3, 0.6, 1.0])
        .with_rectangle([0.3, 1.0, 0.6, 1.0]);
    for cloud in [CloudKind::Inverse, CloudKind::Direct] {
        cfg.cloud = cloud;
        for r in run_trials(&cfg).unwrap() {
            assert_eq!(r.rect_counts.iter().sum::<usize>(), 250);
            assert!(r.rect_lis.iter().zip(&r.rect_counts).all(|(l, c)| l <= c));
            assert!(r.rect_lis.iter().all(|&l| l <= r.lcs_value) || cloud == CloudKind::Direct);
        }
    }
}

#[test]
fn report_targets_and_bands() {
    let cfg = ExperimentConfig::new(1000, 1.0, 1.0, 30, 4).with_rectangle([0.0, 0.25, 0.0, 0.25]);
    let (records, report) = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 30);
    match report.target {
        Target::ClosedForm { value } => assert!((value - 2.0 * jbar_closed(1.0)).abs() < 1e-12),
        other => panic!("expected a closed form, got {other:?}"),
    }
    assert!(report.stderr > 0.0 && report.stderr < 0.1);
    let bands = lis_band_check(&cfg, &records).unwrap();
    assert_eq!(bands, report.band_pass_rates);
    assert!(!bands[0].guard_violated && bands[0].lower < 2.0 && bands[0].upper > 2.0);
    let json: serde_json::Value = serde_json::from_str(&report_json(&report)).unwrap();
    assert!(json["generator"].as_str().unwrap().contains("ChaCha8"));

    let asym = ExperimentConfig::new(200, 1.0, -1.0, 3, 4);
    assert!(matches!(Target::for_config(&asym).unwrap(), Target::Bracket { .. }));
}

#[test]
fn config_round_trips_through_json() {
    let mut cfg = ExperimentConfig::new(500, 0.5, 1.25, 7, 42).with_rectangle([0.1, 0.2, 0.3, 0.45]);
    cfg.cloud = CloudKind::Direct;
    cfg.epsilon = 0.1;
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    assert!(ExperimentConfig::from_json(r#"{"n": 10, "beta": 0, "gamma": 0, "trials": 1, "seed": 0, "bogus": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"n": 2, "beta": 3, "gamma": 0, "trials": 1, "seed": 0}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"n": 9, "beta": 0, "gamma": 0, "trials": 1, "seed": 0, "rectangles": [[0.5, 0.2, 0, 1]]}"#).is_err());
}

fn outside(n: usize, beta: f64, k: usize, seed: u64) -> f64 {
    let cfg = SubBandConfig { n, beta, k, samples: 200, epsilon: 0.3, seed };
    sub_permutation_band_check(&cfg).unwrap().outside_frequency
}

#[test]
fn uniform_sub_permutations_fall_in_band() {
    assert!(outside(1000, 0.0, 1000, 1) < 0.1);
}

#[test]
fn sub_permutation_band_tightens_with_n() {
    // k = n/4 keeps the density of chosen indices fixed
    let small = outside(500, 0.5, 125, 2);
    let large = outside(2000, 0.5, 500, 3);
    assert!(large < small, "{large} vs {small}");
    assert!(large < 0.2, "{large}");
}

#[test]
fn sub_permutation_band_rejects_large_beta() {
    let cfg = SubBandConfig { n: 100, beta: 1.0, k: 50, samples: 5, epsilon: 0.3, seed: 0 };
    assert!(sub_permutation_band_check(&cfg).is_err());
    let cfg = SubBandConfig { n: 100, beta: -3.0, k: 50, samples: 5, epsilon: 0.3, seed: 0 };
    assert!(sub_permutation_band_check(&cfg).is_ok());
}
