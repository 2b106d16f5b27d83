//! Round trips and replay through the public interface.

use aomp_core::experiments::{run_batch, BatchSetup, KmaxRule, SolverSpec, TrialBatchResult};
use aomp_core::rip::{RicTable, RipReport};
use aomp_core::signal::{gen_instance, gen_matrix, InstanceRecord};
use aomp_core::{aomp_recover, AompConfig, BaselineConfig, Ensemble, Error, TerminationReason};

#[test]
fn instance_json_replays_exactly() {
    for ensemble in Ensemble::ALL {
        let phi = gen_matrix(40, 90, 12).unwrap().phi;
        let inst = gen_instance(90, 7, ensemble, 12, &phi).unwrap();
        let json = serde_json::to_string(&inst.record()).unwrap();
        let record: InstanceRecord = serde_json::from_str(&json).unwrap();
        let again = record
            .to_instance(&gen_matrix(record.m, record.n, record.seed).unwrap().phi)
            .unwrap();
        assert_eq!(again.x, inst.x);
        assert_eq!(again.y, inst.y);
        assert_eq!(again.support, inst.support);
    }
}

#[test]
fn record_against_the_wrong_matrix_is_refused() {
    let phi = gen_matrix(20, 50, 1).unwrap().phi;
    let record = gen_instance(50, 4, Ensemble::Cars, 1, &phi)
        .unwrap()
        .record();
    let other = gen_matrix(21, 50, 1).unwrap().phi;
    assert!(matches!(record.to_instance(&other), Err(Error::Input(_))));
}

#[test]
fn search_config_toml_round_trip() {
    let cfg = AompConfig::mul_e(40).with_shape(2, 3, 50).with_audit(true);
    let text = cfg.to_toml_string();
    assert_eq!(AompConfig::from_toml_str(&text).unwrap(), cfg);
    // partial files fill in defaults
    let partial = AompConfig::from_toml_str("kmax = 12\nbranching = 4\n").unwrap();
    assert_eq!(partial.kmax, 12);
    assert_eq!(partial.branching, 4);
    assert_eq!(partial.initial_paths, AompConfig::default().initial_paths);
    assert!(AompConfig::from_toml_str("branching = 0").is_err());
    assert!(AompConfig::from_toml_str("paths = 3").is_err());
}

#[test]
fn solver_specs_serialize() {
    let specs = vec![
        SolverSpec::aomp(AompConfig::amul_e(30)),
        SolverSpec::mul_k(),
        SolverSpec::Hybrid {
            config: AompConfig::amul_e(1),
            kmax: KmaxRule::RhoMax,
        },
        SolverSpec::baseline(BaselineConfig::fbp()),
        SolverSpec::baseline(BaselineConfig::mmp_df()),
    ];
    let json = serde_json::to_string(&specs).unwrap();
    let back: Vec<SolverSpec> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, specs);
}

#[test]
fn rip_report_json_round_trip() {
    let phi = gen_matrix(8, 12, 3).unwrap().phi;
    let table = RicTable::compute(&phi, 5).unwrap();
    let report = RipReport::evaluate(table.clone(), 2, 1, 3);
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["M"], 8);
    assert_eq!(json["deltas"].as_object().unwrap().len(), 5);
    assert!(!json["checks"].as_array().unwrap().is_empty());
    let back: RipReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.table(), table);
}

fn strip_times(mut r: TrialBatchResult) -> TrialBatchResult {
    for rec in &mut r.records {
        rec.time_ms = 0.0;
    }
    for a in &mut r.aggregates {
        a.mean_time_ms = 0.0;
    }
    r.setup.jobs = None;
    r
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let solvers = [
        SolverSpec::aomp(AompConfig::amul_e(20)),
        SolverSpec::baseline(BaselineConfig::omp()),
        SolverSpec::baseline(BaselineConfig::iht()),
    ];
    let setup = BatchSetup::new(64, 32, 9, Ensemble::Uniform, 12, 99);
    let one = run_batch(&solvers, &setup.clone().with_jobs(1)).unwrap();
    let four = run_batch(&solvers, &setup.with_jobs(4)).unwrap();
    assert_eq!(strip_times(one), strip_times(four));
}

#[test]
fn batch_files_are_written() {
    let setup = BatchSetup::new(32, 16, 3, Ensemble::Gaussian, 4, 5);
    let result = run_batch(&[SolverSpec::baseline(BaselineConfig::sp())], &setup).unwrap();
    let mut csv = Vec::new();
    result.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("solver,seed,N,M,K,ensemble,exact,rel_err,time_ms"));
    assert_eq!(csv.lines().count(), 5);
    let mut jsonl = Vec::new();
    result.write_jsonl(&mut jsonl).unwrap();
    assert_eq!(String::from_utf8(jsonl).unwrap().lines().count(), 4);
}

#[test]
fn public_search_recovers_a_small_instance() {
    let phi = gen_matrix(32, 64, 8).unwrap().phi;
    let inst = gen_instance(64, 6, Ensemble::Gaussian, 8, &phi).unwrap();
    let out = aomp_recover(&phi, &inst.y, &AompConfig::amul_e(20)).unwrap();
    assert_eq!(out.reason, TerminationReason::ResidueMet);
    assert_eq!(out.sorted_support(), inst.support);
    assert!((out.estimate() - &inst.x).norm() < 1e-9 * inst.x.norm());
}
