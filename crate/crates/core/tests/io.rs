mod common;

use proptest::prelude::*;
use seqmps::io::{mps_from_json, mps_to_json, protocol_from_json, protocol_to_json, SCHEMA};
use seqmps::seqgen::{cnot, GeneratorModel};
use seqmps::states::{make_target, TargetSpec};

fn model(i: usize) -> GeneratorModel {
    [GeneratorModel::xy(), GeneratorModel::xxz(), GeneratorModel::ion_xy(), GeneratorModel::full_pauli(2).unwrap()][i]
}

#[test]
fn documents_carry_the_schema() {
    let m = make_target(&TargetSpec::w(3)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&mps_to_json(&m).unwrap()).unwrap();
    assert_eq!(v["schema"], SCHEMA);
    assert_eq!(v["bond_dims"], serde_json::json!([1, 2, 2, 1]));
}

#[test]
fn inconsistent_documents_are_rejected() {
    let m = make_target(&TargetSpec::ghz(3)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&mps_to_json(&m).unwrap()).unwrap();
    v["bond_dims"] = serde_json::json!([1, 3, 2, 1]);
    assert!(mps_from_json(&v.to_string()).is_err());
    let p = common::random_protocol(GeneratorModel::xy(), 3, &mut common::rng(0));
    let mut v: serde_json::Value = serde_json::from_str(&protocol_to_json(&p).unwrap()).unwrap();
    v["couplings"] = serde_json::json!([[0.1], [0.2]]);
    assert!(protocol_from_json(&v.to_string()).is_err());
    assert!(mps_from_json("{\"schema\": \"other/9\"}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mps_round_trip(n in 2usize..9, bond in 1usize..7, seed in any::<u64>()) {
        let m = make_target(&TargetSpec::random_mps(n, bond, seed)).unwrap();
        let text = mps_to_json(&m).unwrap();
        let back = mps_from_json(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(mps_to_json(&back).unwrap(), text);
    }

    #[test]
    fn raw_mps_round_trip(n in 2usize..7, d in 1usize..4, seed in any::<u64>()) {
        let m = common::raw_random_mps(n, d, &mut common::rng(seed));
        prop_assert_eq!(mps_from_json(&mps_to_json(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn protocol_round_trip(n in 1usize..7, seed in any::<u64>(), which in 0usize..4, gate in any::<bool>()) {
        let mut p = common::random_protocol(model(which), n, &mut common::rng(seed));
        if gate && which != 3 {
            p = p.with_fixed_gate(cnot(seed % 2 == 0)).unwrap();
        }
        let text = protocol_to_json(&p).unwrap();
        let back = protocol_from_json(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(protocol_to_json(&back).unwrap(), text);
    }
}
