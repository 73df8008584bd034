use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use herald_core::detect::herald;
use herald_core::fock::{Ket, Occupation};
use herald_core::config::{parse_config, FIG3_CFG};
use herald_core::optics::{apply_circuit, Circuit};
use herald_core::oracle::{dense_check, DEFAULT_N_MAX};
use herald_core::random::random_instance;
use herald_core::source::{source_term, two_pair, Sector, SourceSpec};
use herald_core::verify::{check_oracle, check_two_pair, check_unitarity, report_deviation, verify};

#[test]
fn every_check_passes() {
    for r in verify() {
        assert!(r.passed, "criterion {} failed: {}", r.id, r.detail);
    }
}

#[test]
fn two_pair_check_rejects_wrong_sign() {
    let good = two_pair("1", "4").unwrap();
    let flipped = good
        .clone()
        .add_term(
            Occupation::beam("1", 1, 1).merge(&Occupation::beam("4", 1, 1)),
            2.0 / 3f64.sqrt(),
        )
        .unwrap();
    assert!(!check_two_pair(&flipped).unwrap().0);
    let unnormalized = good.scale(2.0);
    assert!(!check_two_pair(&unnormalized).unwrap().0);
}

#[test]
fn oracle_detects_a_missing_element() {
    let cfg = parse_config(FIG3_CFG).unwrap();
    let ket = source_term(&SourceSpec::new(0.1, 2), Sector::PairPair).unwrap();
    let without_hadamards = Circuit::new(
        cfg.circuit
            .elements()
            .iter()
            .filter(|e| !e.label().starts_with("hadamard"))
            .cloned()
            .collect(),
    );
    assert!(without_hadamards.len() < cfg.circuit.len());
    let sparse = herald(&apply_circuit(&ket, &without_hadamards).unwrap(), &cfg.bank, &cfg.rule).unwrap();
    let dense = dense_check(&ket, &cfg.circuit, &cfg.bank, &cfg.rule, DEFAULT_N_MAX).unwrap();
    assert!(report_deviation(&sparse, &dense, None).unwrap() > 1e-3);
}

#[test]
fn oracle_check_is_seed_independent() {
    for seed in [1, 2, 3] {
        assert!(check_oracle(25, seed).unwrap().0);
    }
}

#[test]
fn unitarity_holds_for_any_reflection_phase() {
    for phase in [0.0, 0.5, std::f64::consts::PI, 4.0] {
        assert!(check_unitarity(phase, 20, 5).unwrap().0);
    }
}

#[test]
fn vacuum_matches_oracle() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(4), 2);
    let vac = Ket::vacuum(inst.ket.registry().iter().cloned()).unwrap();
    let dense = dense_check(&vac, &inst.circuit, &inst.bank, &inst.rule, DEFAULT_N_MAX).unwrap();
    let sparse = herald(&apply_circuit(&vac, &inst.circuit).unwrap(), &inst.bank, &inst.rule).unwrap();
    assert!((dense.herald_probability - sparse.herald_probability).abs() < 1e-12);
}
