//! Seeded random models and formulas for differential testing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Allocation, Formula, Mode, Temporal};
use crate::model::{GameModel, ModelFile, ResourceVector};

/// Size limits for generated instances. Every limit is at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub seed: u64,
    pub max_states: usize,
    pub max_agents: usize,
    pub max_actions_per_agent: usize,
    pub max_resources: usize,
    pub max_cost_magnitude: i64,
    pub max_bound: i64,
    /// Force at least one cost with a positive component (needs two resources).
    pub ensure_production: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            seed: 0,
            max_states: 4,
            max_agents: 2,
            max_actions_per_agent: 2,
            max_resources: 2,
            max_cost_magnitude: 2,
            max_bound: 3,
            ensure_production: false,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), String> {
        let limits = [
            ("max_states", self.max_states as i64),
            ("max_agents", self.max_agents as i64),
            ("max_actions_per_agent", self.max_actions_per_agent as i64),
            ("max_resources", self.max_resources as i64),
            ("max_cost_magnitude", self.max_cost_magnitude),
            ("max_bound", self.max_bound),
        ];
        for (name, v) in limits {
            if v < 1 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if self.max_actions_per_agent > 26 {
            return Err("max_actions_per_agent must be at most 26".into());
        }
        Ok(())
    }

    /// Compact `key=value` rendering for manifests.
    pub fn summary(&self) -> String {
        format!(
            "states={},agents={},actions={},resources={},cost={},bound={}",
            self.max_states,
            self.max_agents,
            self.max_actions_per_agent,
            self.max_resources,
            self.max_cost_magnitude,
            self.max_bound
        )
    }
}

fn action_name(agent: usize, k: usize) -> String {
    format!("{}{}", (b'a' + k as u8) as char, agent + 1)
}

/// A random partition of `n` items, as a class index per item.
fn partition(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    if rng.gen_bool(0.5) {
        return (0..n).collect();
    }
    let classes = rng.gen_range(1..=n);
    (0..n).map(|_| rng.gen_range(0..classes)).collect()
}

/// A random validated model. Agents that cannot tell two states apart are
/// offered the same actions in both.
pub fn random_model(params: &GenParams) -> GameModel {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_states = rng.gen_range(1..=params.max_states);
    let n_agents = rng.gen_range(1..=params.max_agents);
    let min_res = if params.ensure_production {
        2.min(params.max_resources)
    } else {
        1
    };
    let n_res = rng.gen_range(min_res..=params.max_resources);
    let m = params.max_cost_magnitude;

    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let agents: Vec<String> = (1..=n_agents).map(|i| i.to_string()).collect();
    let resources: Vec<String> = std::iter::once("time".to_string())
        .chain((1..n_res).map(|i| format!("r{i}")))
        .collect();

    let classes: Vec<Vec<usize>> = (0..n_agents).map(|_| partition(&mut rng, n_states)).collect();
    let mut counts: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n_agents];
    for (a, cls) in classes.iter().enumerate() {
        for &c in cls {
            let k = rng.gen_range(1..=params.max_actions_per_agent);
            counts[a].entry(c).or_insert(k);
        }
    }
    let avail =
        |a: usize, s: usize| -> Vec<String> { (0..counts[a][&classes[a][s]]).map(|k| action_name(a, k)).collect() };

    let mut actions = BTreeMap::new();
    let mut costs = BTreeMap::new();
    let mut transitions = BTreeMap::new();
    for (si, s) in states.iter().enumerate() {
        let per_agent: Vec<Vec<String>> = (0..n_agents).map(|a| avail(a, si)).collect();
        let mut cost_row = BTreeMap::new();
        for acts in &per_agent {
            for x in acts {
                let mut c = vec![rng.gen_range(-m..=-1)];
                c.extend((1..n_res).map(|_| rng.gen_range(-m..=m)));
                cost_row.insert(x.clone(), c);
            }
        }
        let mut table = BTreeMap::new();
        let mut profiles: Vec<Vec<String>> = vec![vec![]];
        for acts in &per_agent {
            profiles = profiles
                .into_iter()
                .flat_map(|p| {
                    acts.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(x.clone());
                        q
                    })
                })
                .collect();
        }
        for p in profiles {
            table.insert(p.join(","), states[rng.gen_range(0..n_states)].clone());
        }
        actions.insert(
            s.clone(),
            agents.iter().cloned().zip(per_agent).collect::<BTreeMap<_, _>>(),
        );
        costs.insert(s.clone(), cost_row);
        transitions.insert(s.clone(), table);
    }
    if params.ensure_production && n_res >= 2 {
        let row = costs.get_mut(&states[0]).expect("at least one state");
        let first = row.values_mut().next().expect("at least one action");
        first[1] = rng.gen_range(1..=m);
    }

    let mut propositions = BTreeMap::new();
    for p in ["p", "q"] {
        let set: Vec<String> = states.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        propositions.insert(p.to_string(), set);
    }

    let mut indist = BTreeMap::new();
    for (a, cls) in classes.iter().enumerate() {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (si, &c) in cls.iter().enumerate() {
            groups.entry(c).or_default().push(states[si].clone());
        }
        if groups.len() < n_states {
            indist.insert(agents[a].clone(), groups.into_values().collect());
        }
    }

    let file = ModelFile {
        agents,
        resources,
        states,
        propositions,
        actions,
        costs,
        transitions,
        indist: if indist.is_empty() { None } else { Some(indist) },
    };
    GameModel::from_file(file).expect("generated models are well formed")
}

/// Draws random formulas over a model's vocabulary.
pub struct FormulaGen<'m> {
    model: &'m GameModel,
    max_bound: i64,
    rng: ChaCha8Rng,
}

impl<'m> FormulaGen<'m> {
    pub fn new(model: &'m GameModel, max_bound: i64, seed: u64) -> Self {
        Self {
            model,
            max_bound,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn atom(&mut self) -> Formula {
        match self.rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            2 => Formula::not(Formula::prop("p")),
            3..=6 => Formula::prop("p"),
            _ => Formula::prop("q"),
        }
    }

    fn subset(&mut self, allow_empty: bool) -> Vec<String> {
        let names = self.model.agent_names();
        loop {
            let pick: Vec<String> = names.iter().filter(|_| self.rng.gen_bool(0.5)).cloned().collect();
            if allow_empty || !pick.is_empty() {
                return pick;
            }
        }
    }

    fn vector(&mut self, zero: bool) -> ResourceVector {
        let r = self.model.n_resources();
        if zero {
            return ResourceVector::zeros(r);
        }
        ResourceVector((0..r).map(|_| self.rng.gen_range(0..=self.max_bound)).collect())
    }

    /// An endowment covering every agent.
    pub fn endowment(&mut self) -> Allocation {
        let names = self.model.agent_names().to_vec();
        Allocation(names.into_iter().map(|a| (a, self.vector(false))).collect())
    }

    fn path(&mut self, depth: usize, endowed: bool) -> Temporal {
        let sub = |g: &mut Self| g.formula(depth - 1, endowed);
        match self.rng.gen_range(0..3) {
            0 => Temporal::Next(Box::new(sub(self))),
            1 => Temporal::Until(Box::new(sub(self)), Box::new(sub(self))),
            _ => Temporal::Release(Box::new(sub(self)), Box::new(sub(self))),
        }
    }

    /// A bounded modality with random coalition and bound.
    pub fn modality(&mut self, depth: usize, zero_bound: bool) -> Formula {
        let coalition = self.subset(false);
        let bound = Allocation(coalition.iter().map(|a| (a.clone(), self.vector(zero_bound))).collect());
        Formula::Coalition {
            coalition,
            bound,
            path: self.path(depth, false),
        }
    }

    /// A resource modality with random proponents, opponents and mode.
    pub fn resource_modality(&mut self, depth: usize) -> Formula {
        let proponents = self.subset(false);
        let opponents = if self.rng.gen_bool(0.5) {
            self.subset(true)
        } else {
            vec![]
        };
        let mode = if self.rng.gen_bool(0.5) {
            Mode::Down
        } else {
            Mode::Fresh(self.endowment())
        };
        Formula::Resource {
            proponents,
            opponents,
            mode,
            path: self.path(depth, true),
        }
    }

    /// A formula of modal depth at most `depth`.
    pub fn formula(&mut self, depth: usize, endowed: bool) -> Formula {
        let roll = self.rng.gen_range(0..10);
        if depth == 0 || roll < 4 {
            return self.atom();
        }
        match roll {
            4 => Formula::not(self.formula(depth, endowed)),
            5 => {
                let l = self.formula(depth, endowed);
                let r = self.atom();
                if self.rng.gen_bool(0.5) {
                    Formula::and(l, r)
                } else {
                    Formula::or(l, r)
                }
            }
            _ if endowed => self.resource_modality(depth),
            _ => self.modality(depth, false),
        }
    }

    /// A top-level query: a modality whose operands may nest one more.
    pub fn query(&mut self, depth: usize, endowed: bool) -> Formula {
        if endowed {
            self.resource_modality(depth)
        } else {
            self.modality(depth, false)
        }
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("non-empty choice")
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Seed of instance `index` in a batch started from `base`.
pub fn instance_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn same_seed_same_model() {
        let p = GenParams {
            seed: 1,
            ..GenParams::default()
        };
        assert_eq!(
            random_model(&p).to_file().to_json(),
            random_model(&p).to_file().to_json()
        );
    }

    #[test]
    fn generated_models_validate() {
        for seed in 0..200 {
            let p = GenParams {
                seed,
                ..GenParams::default()
            };
            let m = random_model(&p);
            assert!(validate_model(&m.to_file()).is_empty());
            assert!(m.n_states() <= 4 && m.n_agents() <= 2 && m.n_resources() <= 2);
        }
    }

    #[test]
    fn single_resource_costs() {
        for seed in 0..50 {
            let p = GenParams {
                seed,
                max_resources: 1,
                ..GenParams::default()
            };
            let f = random_model(&p).to_file();
            for row in f.costs.values() {
                for c in row.values() {
                    assert_eq!(c.len(), 1);
                    assert!(c[0] <= -1 && c[0] >= -2);
                }
            }
        }
    }

    #[test]
    fn production_is_forced_on_request() {
        for seed in 0..50 {
            let p = GenParams {
                seed,
                ensure_production: true,
                ..GenParams::default()
            };
            let f = random_model(&p).to_file();
            assert!(f
                .costs
                .values()
                .flat_map(|r| r.values())
                .any(|c| c[1..].iter().any(|&x| x > 0)));
        }
    }

    #[test]
    fn indistinguishable_states_offer_the_same_actions() {
        for seed in 0..100 {
            let m = random_model(&GenParams {
                seed,
                ..GenParams::default()
            });
            for a in m.agent_ids() {
                for s in m.state_ids() {
                    for t in m.state_ids() {
                        if m.indistinguishable(a, s, t) {
                            assert_eq!(m.available(s, a), m.available(t, a));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn formulas_respect_nesting() {
        let m = random_model(&GenParams {
            seed: 3,
            ..GenParams::default()
        });
        let mut g = FormulaGen::new(&m, 3, 9);
        for _ in 0..200 {
            assert!(g.query(2, false).modal_depth() <= 2);
            assert!(g.query(2, true).modal_depth() <= 2);
        }
    }
}
