use thinsets::experiments::{
    run_experiment, run_thm31, run_thm41, ExperimentConfig, ExperimentKind, Status,
};
use thinsets::spectra::SelectorSchedule;

fn config(kind: ExperimentKind, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, 0);
    cfg.output_dir = Some(dir.to_path_buf());
    cfg
}

#[test]
fn empty_selector_aborts_at_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Thm31, dir.path());
    cfg.schedule = Some(
        SelectorSchedule::constant(0.0)
            .unwrap()
            .with_k_min(1)
            .unwrap(),
    );
    let m = run_thm31(&cfg).unwrap();
    assert!(!m.passed);
    assert_eq!(m.aborted_at.as_deref(), Some("blocks"));
    assert!(dir.path().join("thm31_manifest.json").exists());
}

#[test]
fn thm41_singleton_range_skips_fits() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Thm41, dir.path());
    cfg.n_range = Some((4, 4));
    cfg.trials = Some(2);
    let m = run_thm41(&cfg).unwrap();
    for name in [
        "count_exponent_total",
        "count_exponent_block",
        "alpha_contrast",
    ] {
        assert_eq!(m.assertion(name).unwrap().status, Status::Skipped, "{name}");
    }
}

#[test]
fn wrong_kind_is_rejected() {
    let cfg = ExperimentConfig::new(ExperimentKind::Thm41, 0);
    assert!(run_thm31(&cfg).is_err());
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Kt, 9);
    cfg.n_list = Some(vec![16, 32]);
    cfg.trials = Some(3);
    let path = dir.path().join("kt.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let back = ExperimentConfig::load(&path).unwrap();
    assert_eq!(back.seed, 9);
    assert_eq!(back.n_list, Some(vec![16, 32]));
}

#[test]
fn small_experiments_produce_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let mut lemma43 = config(ExperimentKind::Lemma43, dir.path());
    lemma43.alpha = Some(1.5);
    lemma43.beta = Some(1.7);
    let m = run_experiment(&lemma43).unwrap();
    assert!(m.aborted_at.is_none());
    let mut lemma32 = config(ExperimentKind::Lemma32, dir.path());
    lemma32.n_list = Some(vec![16, 64]);
    let m = run_experiment(&lemma32).unwrap();
    assert!(m.passed, "{:?}", m.failures());
    assert!(dir.path().join("lemma32_manifest.json").exists());
}
