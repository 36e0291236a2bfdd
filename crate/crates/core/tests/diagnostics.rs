use qht_core::diagnostics::*;
use qht_core::*;

#[test]
fn lemma_chains_hold_for_builtin_pairs() {
    let states = builtin_states();
    for eta in [0.9, 0.95] {
        let nm = NoiseModel::new(eta).unwrap();
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let ch = hellinger_chain(&states[i], &states[j], &nm, 0.7);
                assert!(ch.holds(), "{} vs {} at eta {eta}: {:?}", states[i].label(), states[j].label(), ch.slacks());
            }
        }
    }
}

#[test]
fn noise_contracts_hellinger() {
    let (a, b) = (WaveFunction::cat(2.0), WaveFunction::Fock2);
    let clean = hellinger(&a, &b, None);
    let mut last = clean;
    for eta in [0.95, 0.8, 0.5] {
        let h = hellinger(&a, &b, Some(&NoiseModel::new(eta).unwrap()));
        assert!(h < last, "eta {eta}: {h} >= {last}");
        last = h;
    }
}

#[test]
fn class_norm_grows_with_beta() {
    let f = WaveFunction::Fock2;
    let lo = class_norm(&f, &SmoothnessClass::vacuum(0.5, 0.5, 1.0).unwrap()).unwrap();
    let hi = class_norm(&f, &SmoothnessClass::vacuum(1.0, 0.5, 1.0).unwrap()).unwrap();
    assert!(lo <= hi);
}

#[test]
fn heavy_weight_is_reported_as_diverging() {
    let cls = SmoothnessClass::vacuum(20.0, 0.95, 1.0).unwrap();
    assert!(matches!(class_norm(&WaveFunction::Vacuum, &cls), Err(Error::Diverging { .. })));
}

#[test]
fn class_validation() {
    assert!(SmoothnessClass::vacuum(1.0, 1.0, 1.0).is_err());
    assert!(SmoothnessClass::vacuum(0.0, 0.5, 1.0).is_err());
    assert!(SmoothnessClass::vacuum(1.0, 0.5, -1.0).is_err());
}

#[test]
fn fourier_decay_bounded_by_class_norm() {
    let cls = SmoothnessClass::vacuum(1.0, 0.5, 1.0).unwrap();
    for s in [WaveFunction::Vacuum, WaveFunction::Fock2] {
        let l = class_norm(&s, &cls).unwrap();
        assert!(wigner_fourier_decay(&s, &cls).unwrap() <= l * l + 1e-6);
    }
}

#[test]
fn tail_mass_decreases_in_n() {
    let nm = NoiseModel::new(0.95).unwrap();
    let cls = tail_class();
    let m: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&n| tail_mass(&WaveFunction::Fock2, &nm, n, &cls).unwrap())
        .collect();
    assert!(m[0] > m[1] && m[1] > m[2] && m[2] > 0.0, "{m:?}");
    assert!(tail_mass(&WaveFunction::Fock2, &nm, 1.0, &cls).is_err());
}

#[test]
fn ideal_tail_of_vacuum() {
    let cls = SmoothnessClass::vacuum(4.0, 0.9, 1.0).unwrap();
    let d = cls.d_n(10.0);
    let got = tail_mass(&WaveFunction::Vacuum, &NoiseModel::ideal(), 10.0, &cls).unwrap();
    assert!((got - vacuum_tail_mass(&NoiseModel::ideal(), d)).abs() < 1e-6);
}

#[test]
fn wrong_vacuum_constant_fails_the_suite() {
    let opts = CheckOptions {
        vacuum_constant: 2f64.powf(-0.25),
        ..CheckOptions::default()
    };
    let report = run_checks(&opts).unwrap();
    let mut ids: Vec<&str> = report.checks.iter().map(|c| c.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert!(ids.len() >= 12);
    let failed: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
    assert_eq!(failed, ["vacuum_normalization"]);
    let json = serde_json::to_string(&report).unwrap();
    let back: CheckReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.checks, report.checks);
}
