//! Inputs shared by the benchmarks.

use rbmc_core::oracle::generate::instance_seed;
use rbmc_core::{random_model, Endowment, Formula, FormulaGen, GameModel, GenParams};

/// A generated model with one bounded query and one endowed query.
pub struct Case {
    pub model: GameModel,
    pub bounded: Formula,
    pub endowed: Formula,
    pub endowment: Endowment,
}

pub fn corpus(seed: u64, n: u64) -> Vec<Case> {
    (0..n)
        .map(|i| {
            let params = GenParams {
                seed: instance_seed(seed, i),
                ..GenParams::default()
            };
            let model = random_model(&params);
            let mut gen = FormulaGen::new(&model, params.max_bound, params.seed);
            let bounded = gen.query(2, false);
            let endowed = gen.query(2, true);
            let endowment = gen.endowment();
            Case {
                model,
                bounded,
                endowed,
                endowment,
            }
        })
        .collect()
}

/// `n` states in a ring with two agents; agent 1 moves forward or stays and
/// agent 2 may push it one extra step. `p` marks the last state.
pub fn ring(n: usize) -> GameModel {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut actions = serde_json::Map::new();
    let mut costs = serde_json::Map::new();
    let mut transitions = serde_json::Map::new();
    for (i, s) in states.iter().enumerate() {
        actions.insert(
            s.clone(),
            serde_json::json!({"1": ["fwd", "stay"], "2": ["idle", "push"]}),
        );
        costs.insert(
            s.clone(),
            serde_json::json!({"fwd": [-1], "stay": [-1], "idle": [-1], "push": [-1]}),
        );
        let at = |k: usize| states[(i + k) % n].clone();
        transitions.insert(
            s.clone(),
            serde_json::json!({"fwd,idle": at(1), "fwd,push": at(2), "stay,idle": at(0), "stay,push": at(1)}),
        );
    }
    let doc = serde_json::json!({
        "agents": ["1", "2"],
        "resources": ["time"],
        "states": states,
        "propositions": {"p": [states[n - 1].clone()]},
        "actions": actions,
        "costs": costs,
        "transitions": transitions,
    });
    GameModel::from_json(&doc.to_string()).expect("ring model is well formed")
}
