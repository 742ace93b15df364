mod common;

use common::{cfg, set};
use hspline::driver::{run, sample_grid, verify, AuditLevel, RunConfig, RunStatus, SplineDoc, Strategy};
use hspline::hierarchy::{lineage_to_json, validate_lineage, Lineage};
use hspline::refinement::ga_refine;
use hspline::Error;

fn config(m: i64, n: i64, d: usize, g: u32, iterations: Option<usize>, strategy: Strategy) -> RunConfig {
    RunConfig { m, n, d, g, max_level: None, iterations, strategy, audit: AuditLevel::Fast, record_timing: false }
}

#[test]
fn zero_iterations() {
    let log = run(&config(2, 2, 1, 1, Some(0), Strategy::RandomK { k: 1, seed: 1 })).unwrap();
    assert_eq!(log.steps.len(), 1);
    assert_eq!(log.summary.status, RunStatus::Completed);
    assert_eq!(log.summary.initial_size, 2);
    assert_eq!(log.summary.final_size, 2);
    assert!(log.summary.complexity.passed);
}

#[test]
fn scripted_single_step() {
    let strategy = Strategy::Scripted { steps: vec![vec![SplineDoc { level: 0, index: vec![0] }]] };
    let log = run(&config(2, 2, 1, 1, None, strategy)).unwrap();
    assert_eq!(log.lineage.refined(), &set(&[(0, -1), (0, 0)]));
    assert_eq!(log.lineage.generator().set(), &set(&[(1, -1), (1, 0), (1, 1)]));
    let last = log.steps.last().unwrap();
    assert_eq!((last.marked_count, last.refiner_count, last.new_count, last.generator_size), (1, 2, 3, 3));
    assert!(last.audit.as_ref().unwrap().passed);
    assert_eq!(log.to_jsonl().lines().count(), 2);
}

#[test]
fn random_run_passes_audit() {
    let c = config(3, 2, 2, 1, Some(20), Strategy::RandomK { k: 3, seed: 42 });
    let log = run(&c).unwrap();
    assert_eq!(log.summary.status, RunStatus::Completed);
    assert_eq!(log.summary.iterations_completed, 20);
    assert!(log.steps.iter().skip(1).all(|st| st.audit.as_ref().unwrap().passed));
    assert!(log.summary.complexity.passed);
    assert!(log.steps.iter().all(|st| st.max_gap.unwrap() <= 1));
    let again = run(&c).unwrap();
    assert_eq!(log.to_jsonl(), again.to_jsonl());
    assert_eq!(log.summary_json(), again.summary_json());
}

#[test]
fn oracle_audited_run() {
    let mut c = config(2, 2, 1, 2, Some(6), Strategy::RandomK { k: 2, seed: 7 });
    c.audit = AuditLevel::Oracle;
    let log = run(&c).unwrap();
    assert_eq!(log.summary.status, RunStatus::Completed);
    assert!(log.steps.iter().skip(1).all(|st| st.audit.as_ref().unwrap().passed));
}

#[test]
fn greedy_run_and_depth_cap() {
    let mut c = config(2, 2, 1, 1, Some(50), Strategy::GreedySupport { k: 2 });
    c.max_level = Some(3);
    let log = run(&c).unwrap();
    assert_eq!(log.summary.status, RunStatus::DepthCap);
    assert!(log.summary.iterations_completed < 50);
    assert!(log.lineage.depth() <= 3);
    assert!(verify(&log.lineage, AuditLevel::Oracle).unwrap().passed);
}

#[test]
fn config_errors() {
    let bad = [
        r#"{"m":1,"n":2,"d":1,"g":1,"iterations":1,"strategy":{"kind":"random_k","k":1,"seed":0}}"#,
        r#"{"m":2,"n":2,"d":1,"g":1,"strategy":{"kind":"random_k","k":1,"seed":0}}"#,
        r#"{"m":2,"n":2,"d":1,"g":1,"iterations":1,"strategy":{"kind":"random_k","k":0,"seed":0}}"#,
        r#"{"m":2,"n":2,"d":1,"g":1,"iterations":3,"strategy":{"kind":"scripted","steps":[[]]}}"#,
        r#"{"m":2,"n":2,"d":1,"g":1,"iterations":1,"colour":1,"strategy":{"kind":"greedy_support","k":1}}"#,
        r#"{"m":2,"n":2,"d":1,"g":1,"iterations":1,"strategy":{"kind":"greedy_support","k":1},"audit":"full"}"#,
    ];
    for text in bad {
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
    }
    let ok = RunConfig::from_json(r#"{"m":2,"n":2,"d":1,"g":1,"strategy":{"kind":"scripted","steps":[[{"level":0,"index":[0]}]]}}"#).unwrap();
    assert_eq!(ok.steps().unwrap(), 1);
    assert_eq!(ok.audit, AuditLevel::Fast);

    let strategy = Strategy::Scripted { steps: vec![vec![SplineDoc { level: 1, index: vec![0] }]] };
    assert!(matches!(run(&config(2, 2, 1, 1, None, strategy)), Err(Error::Config(_))));
}

#[test]
fn sample_grid_examples() {
    let lin = Lineage::new(cfg(2, 2, 1, 1));
    let csv = sample_grid(&lin, 11).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "x1,unity,active");
    assert_eq!(rows.len(), 12);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert!((f[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{row}");
        let x: f64 = f[0].parse().unwrap();
        assert_eq!(f[2], if x == 0.0 || x == 1.0 { "1" } else { "2" }, "{row}");
    }
    assert!(matches!(sample_grid(&lin, 0), Err(Error::Config(_))));

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(31);
    let abs = common::random_absorbing(cfg(3, 2, 2, 1), &mut rng, 5, 2);
    let csv = sample_grid(&abs, 9).unwrap();
    assert_eq!(csv.lines().count(), 82);
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{row}");
        assert!(f[3].parse::<usize>().unwrap() >= 1);
    }
}

#[test]
fn verify_examples() {
    let empty = Lineage::new(cfg(2, 2, 1, 1));
    assert!(verify(&empty, AuditLevel::Fast).unwrap().passed);
    assert!(verify(&empty, AuditLevel::Oracle).unwrap().passed);

    let dep = validate_lineage(&cfg(3, 2, 1, 1), &set(&[(0, -2), (0, 0)])).unwrap();
    let fast = verify(&dep, AuditLevel::Fast).unwrap();
    assert!(!fast.passed);
    let names: Vec<(&str, bool)> = fast.checks.iter().map(|c| (c.name.as_str(), c.passed)).collect();
    assert!(names.contains(&("absorbing", false)));
    assert!(names.contains(&("reconstruction", true)));
    let oracle = verify(&dep, AuditLevel::Oracle).unwrap();
    assert!(oracle.checks.iter().any(|c| c.name == "linear_independence" && !c.passed));

    let mut ga = Lineage::new(cfg(2, 2, 2, 1));
    ga_refine(&mut ga, &[common::s2(0, 0, 0)]).unwrap();
    ga_refine(&mut ga, &[common::s2(1, 1, 1)]).unwrap();
    let v = verify(&ga, AuditLevel::Oracle).unwrap();
    assert!(v.passed, "{v:?}");

    let back = hspline::driver::load_lineage(&lineage_to_json(&ga)).unwrap();
    assert_eq!(back.refined(), ga.refined());
}
