use herald_core::bell::BellLabel;
use herald_core::config::{parse_config, FIG3_CFG, FIG4_RECOMBINE_CFG};
use herald_core::runner::{patterns_table, run, sweep, sweep_csv, SWEEP_CSV_HEADER};
use herald_core::source::Sector;
use herald_core::Error;

#[test]
fn run_is_deterministic() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    assert_eq!(run(&cfg).unwrap().to_json(), run(&cfg).unwrap().to_json());
}

#[test]
fn fig3_report_contents() {
    let report = run(&parse_config(FIG3_CFG).unwrap()).unwrap();
    assert!(!report.table_mismatch);
    let pp = report.pair_pair.as_ref().unwrap();
    let accepted: Vec<_> = pp.patterns.iter().filter(|p| p.accepted).collect();
    assert_eq!(accepted.len(), 4);
    for row in accepted {
        assert!((row.probability - 0.125).abs() < 1e-12);
        assert!((row.table_fidelity.unwrap() - 1.0).abs() < 1e-9);
        assert!(row.pure);
    }
    let dl = report.sector(Sector::DoubleLeft).unwrap();
    assert!((dl.accept_probability - 1.0 / 3.0).abs() < 1e-12);
    assert!(!dl.excluded);
    assert!(report.sectors.iter().all(|s| s.oracle_deviation < 1e-12));
    assert!(report.sector(Sector::Vacuum).unwrap().excluded);
}

#[test]
fn fig4_recombine_excludes_doubles_but_loses_the_table() {
    let report = run(&parse_config(FIG4_RECOMBINE_CFG).unwrap()).unwrap();
    for sector in [Sector::DoubleLeft, Sector::DoubleRight] {
        assert!(report.sector(sector).unwrap().excluded);
    }
    assert!(report.table_mismatch);
    let pp = report.pair_pair.unwrap();
    for row in pp.patterns.iter().filter(|p| p.accepted) {
        assert!(row.table_fidelity.unwrap() < 1.0 - 1e-6);
    }
}

#[test]
fn zero_lambda_never_heralds() {
    let mut cfg = parse_config(FIG3_CFG).unwrap();
    cfg.source.lambda = 0.0;
    let report = run(&cfg).unwrap();
    assert_eq!(report.full_source.herald_probability, 0.0);
    assert!(report.sectors.iter().all(|s| s.absolute_herald_probability == 0.0));
}

#[test]
fn efficiency_sweep_is_non_decreasing() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    let values: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let reports = sweep(&cfg, "detectors.model.efficiency", &values).unwrap();
    let p: Vec<f64> = reports.iter().map(|r| r.full_source.herald_probability).collect();
    assert!(p.windows(2).all(|w| w[1] + 1e-15 >= w[0]), "{p:?}");
}

#[test]
fn lambda_sweep_follows_fourth_power() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    let reports = sweep(&cfg, "source.lambda", &[0.01, 0.02]).unwrap();
    let abs: Vec<f64> = reports
        .iter()
        .map(|r| r.sector(Sector::PairPair).unwrap().absolute_herald_probability)
        .collect();
    assert!((abs[1] / abs[0] - 16.0).abs() < 1e-6);
}

#[test]
fn empty_sweep_is_empty() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    let reports = sweep(&cfg, "source.lambda", &[]).unwrap();
    assert!(reports.is_empty());
    assert_eq!(sweep_csv(&[], &reports).trim(), SWEEP_CSV_HEADER);
}

#[test]
fn unknown_sweep_path_is_a_config_error() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    let err = sweep(&cfg, "source.nonexistent", &[0.1]).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn out_of_range_sweep_value_is_rejected() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    assert!(sweep(&cfg, "source.lambda", &[1.5]).is_err());
}

#[test]
fn patterns_table_lists_bell_labels() {
    let report = run(&parse_config(FIG3_CFG).unwrap()).unwrap();
    let table = patterns_table(&report);
    assert!(table.contains("D1+D3"));
    assert!(table.contains(&BellLabel::PhiMinus.to_string()));
}
