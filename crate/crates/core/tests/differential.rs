use proptest::prelude::*;
use rbmc_core::oracle::generate::instance_seed;
use rbmc_core::{
    fuzz, label, label_i, parse_allocation, parse_formula, ral_check, random_model, FormulaGen, FuzzConfig, GameModel,
    GenParams, Mutation, Oracle, Semantics, StateSet,
};

fn model(json: &str) -> GameModel {
    GameModel::from_json(json).unwrap()
}

fn names(m: &GameModel, set: &StateSet) -> Vec<String> {
    set.iter().map(|s| m.state_name(s).to_string()).collect()
}

const M2: &str = r#"{
    "agents": ["1"], "resources": ["time"], "states": ["s0", "s1"],
    "propositions": {"p": ["s0"]},
    "actions": {"s0": {"1": ["go"]}, "s1": {"1": ["go"]}},
    "costs": {"s0": {"go": [-2]}, "s1": {"go": [-2]}},
    "transitions": {"s0": {"go": "s1"}, "s1": {"go": "s1"}}
}"#;

#[test]
fn release_is_not_monotone() {
    let m = model(M2);
    for (b, expected) in [(1, vec!["s0"]), (2, vec![])] {
        let f = parse_formula(&format!("<{{1}}:[1=({b})]> (false R p)")).unwrap();
        assert_eq!(names(&m, label(&m, &f).unwrap().root().unwrap()), expected);
        assert_eq!(
            names(&m, &Oracle::new(&m, Semantics::Perfect).satisfying(&f, None).unwrap()),
            expected
        );
    }
}

#[test]
fn fuzz_batch_is_clean_and_deterministic() {
    let config = FuzzConfig::new(
        GenParams {
            seed: 99,
            ..GenParams::default()
        },
        60,
    );
    let a = fuzz(&config);
    assert!(a.clean(), "{:?}", a.disagreements);
    assert_eq!(a.instances, 60);
    assert_eq!(a.manifest_tsv(), fuzz(&config).manifest_tsv());
}

#[test]
fn mutation_is_detected() {
    let mut config = FuzzConfig::new(GenParams::default(), 60);
    config.mutation = Some(Mutation::SkipReleaseRunOut);
    let report = fuzz(&config);
    assert!(!report.disagreements.is_empty());
    assert!(report.disagreements.iter().all(|d| d.formula.contains(" R ")));
}

#[test]
fn ral_reduces_to_bounded_on_fresh_endowments() {
    let m = model(M2);
    let bounded = parse_formula("<{1}:[1=(3)]> (p U !p)").unwrap();
    let fresh = parse_formula("<{1}|{} eta=[1=(3)]> (p U !p)").unwrap();
    let eta = parse_allocation("[1=(0)]").unwrap();
    assert_eq!(
        label(&m, &bounded).unwrap().root().unwrap(),
        &ral_check(&m, &fresh, &eta).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_agree_with_oracle(seed in any::<u64>(), nested in 0usize..=2) {
        let params = GenParams { seed, ..GenParams::default() };
        let m = random_model(&params);
        let mut gen = FormulaGen::new(&m, params.max_bound, instance_seed(seed, 1));
        let phi = gen.formula(nested, false);
        let perfect = label(&m, &phi).unwrap().root().unwrap().clone();
        prop_assert_eq!(&perfect, &Oracle::new(&m, Semantics::Perfect).satisfying(&phi, None).unwrap());
        let uniform = label_i(&m, &phi).unwrap().root().unwrap().clone();
        prop_assert_eq!(&uniform, &Oracle::new(&m, Semantics::Uniform).satisfying(&phi, None).unwrap());
        prop_assert!(uniform.is_subset(&perfect));
        let identity = m.with_identity_indist();
        let reduced = label_i(&identity, &phi).unwrap();
        prop_assert_eq!(reduced.root().unwrap(), &perfect);
    }

    #[test]
    fn ral_engine_agrees_with_oracle(seed in any::<u64>()) {
        let params = GenParams { seed, ..GenParams::default() };
        let m = random_model(&params);
        let mut gen = FormulaGen::new(&m, params.max_bound, instance_seed(seed, 2));
        let phi = gen.query(2, true);
        let eta = gen.endowment();
        let engine = ral_check(&m, &phi, &eta).unwrap();
        prop_assert_eq!(engine, Oracle::new(&m, Semantics::Resource).satisfying(&phi, Some(&eta)).unwrap());
    }
}
