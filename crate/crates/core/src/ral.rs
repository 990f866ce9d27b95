//! Resource agent logic engine.
//!
//! Truth depends on a state and the endowment of every agent, so there is no
//! global labelling: each query walks the formula top-down, threading the
//! current endowment into nested `down` modalities.

use crate::formula::{validate_endowment, Endowment, Family, Formula, Mode, Temporal};
use crate::model::{joint_actions, AgentId, GameModel, JointAction, ResourceVector, StateId, StateSet};
use crate::search::{ensure_checkable, resolve_agents, CheckError, SearchStats};

/// Endowment of every agent, indexed by agent id.
pub type Holdings = Vec<ResourceVector>;

/// Node of a temporal search: a state, its depth below the modality's root and
/// what every agent holds there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RalNode {
    pub state: StateId,
    pub depth: usize,
    pub avail: Holdings,
}

/// Proponents, opponents and depth limit of the modality being searched.
struct Level {
    proponents: Vec<AgentId>,
    opponents: Vec<AgentId>,
    /// Membership in `A ∪ B`, indexed by agent id.
    bounded: Vec<bool>,
    limit: usize,
}

impl Level {
    fn new(model: &GameModel, proponents: Vec<AgentId>, opponents: Vec<AgentId>, root: &Holdings) -> Self {
        let mut bounded = vec![false; model.n_agents()];
        for &a in proponents.iter().chain(&opponents) {
            bounded[a.0] = true;
        }
        let limit = model
            .agent_ids()
            .filter(|a| bounded[a.0])
            .map(|a| root[a.0].first().max(0) as usize)
            .min()
            .unwrap_or(0)
            + 1;
        Self {
            proponents,
            opponents,
            bounded,
            limit,
        }
    }
}

pub struct RalChecker<'m> {
    model: &'m GameModel,
    stats: SearchStats,
}

impl<'m> RalChecker<'m> {
    pub fn new(model: &'m GameModel) -> Self {
        Self {
            model,
            stats: SearchStats::default(),
        }
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// States where `phi` holds under the endowment `eta`.
    pub fn check(&mut self, phi: &Formula, eta: &Endowment) -> Result<StateSet, CheckError> {
        ensure_checkable("ral", phi, self.model, Family::Endowed)?;
        let diags = validate_endowment(eta, self.model);
        if !diags.is_empty() {
            return Err(CheckError::Invalid(diags));
        }
        let eta = holdings(self.model, eta);
        let mut out = StateSet::empty(self.model.n_states());
        for q in self.model.state_ids() {
            if self.strategy(q, &eta, phi) {
                out.insert(q);
            }
        }
        Ok(out)
    }

    /// Whether `phi` holds at `s` when agents hold `avail`.
    pub fn strategy(&mut self, s: StateId, avail: &Holdings, phi: &Formula) -> bool {
        match phi {
            Formula::True => true,
            Formula::False => false,
            Formula::Prop(p) => self.model.proposition(p).is_some_and(|set| set.contains(s)),
            Formula::Not(g) => !self.strategy(s, avail, g),
            Formula::And(l, r) => self.strategy(s, avail, l) && self.strategy(s, avail, r),
            Formula::Or(l, r) => self.strategy(s, avail, l) || self.strategy(s, avail, r),
            Formula::Resource {
                proponents,
                opponents,
                mode,
                path,
            } => {
                let root_avail = match mode {
                    Mode::Down => avail.clone(),
                    Mode::Fresh(zeta) => holdings(self.model, zeta),
                };
                let level = Level::new(
                    self.model,
                    resolve_agents(self.model, proponents),
                    resolve_agents(self.model, opponents),
                    &root_avail,
                );
                let root = RalNode {
                    state: s,
                    depth: 1,
                    avail: root_avail,
                };
                match path {
                    Temporal::Next(g) => self.next(&level, &root, g),
                    Temporal::Until(l, r) => self.until(&level, &root, l, r),
                    Temporal::Release(l, r) => self.release(&level, &root, l, r),
                }
            }
            Formula::Coalition { .. } => unreachable!("family checked before evaluation"),
        }
    }

    fn visit(&mut self, level: &Level, node: &RalNode) {
        debug_assert!(level
            .bounded
            .iter()
            .zip(&node.avail)
            .all(|(&b, e)| !b || e.is_non_negative()));
        self.stats.nodes_expanded += 1;
        self.stats.saw_depth(node.depth);
        if node.depth > level.limit {
            self.stats.depth_violations += 1;
        }
    }

    fn proponents_afford(&self, node: &RalNode, sigma: &JointAction) -> bool {
        sigma
            .agents
            .iter()
            .zip(&sigma.actions)
            .all(|(&a, &x)| self.model.affordable(node.state, x, &node.avail[a.0]))
    }

    /// Successor nodes over every completion of `sigma` that the opponents can
    /// pay for. Agents outside `A ∪ B` keep their endowment.
    fn completions(&self, level: &Level, node: &RalNode, sigma: &JointAction) -> Vec<RalNode> {
        let m = self.model;
        let s = node.state;
        m.completions_of(s, &level.proponents, &sigma.actions)
            .into_iter()
            .filter(|profile| {
                level
                    .opponents
                    .iter()
                    .all(|&b| m.affordable(s, profile[b.0], &node.avail[b.0]))
            })
            .map(|profile| {
                let avail = node
                    .avail
                    .iter()
                    .enumerate()
                    .map(|(a, e)| {
                        if level.bounded[a] {
                            m.update(s, profile[a], e)
                        } else {
                            e.clone()
                        }
                    })
                    .collect();
                RalNode {
                    state: m.successor(s, &profile),
                    depth: node.depth + 1,
                    avail,
                }
            })
            .collect()
    }

    /// Tries affordable proponent actions in declared order. A choice whose
    /// completion set is empty ends the computation at `node` and counts as
    /// `on_empty`.
    fn expand(
        &mut self,
        level: &Level,
        node: &RalNode,
        on_empty: bool,
        mut recurse: impl FnMut(&mut Self, &RalNode) -> bool,
    ) -> bool {
        for sigma in joint_actions(self.model, node.state, &level.proponents).expect("validated coalition") {
            if !self.proponents_afford(node, &sigma) {
                continue;
            }
            let children = self.completions(level, node, &sigma);
            let ok = if children.is_empty() {
                on_empty
            } else {
                children.iter().all(|c| recurse(self, c))
            };
            if ok {
                return true;
            }
        }
        false
    }

    fn next(&mut self, level: &Level, node: &RalNode, phi: &Formula) -> bool {
        self.visit(level, node);
        self.expand(level, node, false, |this, child| {
            this.visit(level, child);
            this.strategy(child.state, &child.avail, phi)
        })
    }

    fn until(&mut self, level: &Level, node: &RalNode, phi: &Formula, psi: &Formula) -> bool {
        self.visit(level, node);
        if self.strategy(node.state, &node.avail, psi) {
            return true;
        }
        if !self.strategy(node.state, &node.avail, phi) {
            return false;
        }
        self.expand(level, node, false, |this, child| this.until(level, child, phi, psi))
    }

    fn release(&mut self, level: &Level, node: &RalNode, phi: &Formula, psi: &Formula) -> bool {
        self.visit(level, node);
        if !self.strategy(node.state, &node.avail, psi) {
            return false;
        }
        if self.strategy(node.state, &node.avail, phi) {
            return true;
        }
        let run_out = joint_actions(self.model, node.state, &level.proponents)
            .expect("validated coalition")
            .iter()
            .any(|sigma| !self.proponents_afford(node, sigma));
        if run_out {
            return true;
        }
        self.expand(level, node, true, |this, child| this.release(level, child, phi, psi))
    }
}

/// Per-agent vectors of a validated total endowment.
pub fn holdings(model: &GameModel, eta: &Endowment) -> Holdings {
    model
        .agent_names()
        .iter()
        .map(|a| eta.get(a).cloned().expect("endowment covers every agent"))
        .collect()
}

/// States where `phi` holds under `eta`.
pub fn ral_check(model: &GameModel, phi: &Formula, eta: &Endowment) -> Result<StateSet, CheckError> {
    RalChecker::new(model).check(phi, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_allocation, parse_formula};
    use crate::model::fixtures::{file, m1};
    use crate::perfect;
    use serde_json::json;

    fn chain() -> GameModel {
        GameModel::from_file(file(json!({
            "agents": ["1"], "resources": ["time"], "states": ["s0", "s1", "s2"],
            "propositions": {"p": ["s2"]},
            "actions": {"s0": {"1": ["go"]}, "s1": {"1": ["go"]}, "s2": {"1": ["go"]}},
            "costs": {"s0": {"go": [-1]}, "s1": {"go": [-1]}, "s2": {"go": [-1]}},
            "transitions": {"s0": {"go": "s1"}, "s1": {"go": "s2"}, "s2": {"go": "s2"}}
        })))
        .unwrap()
    }

    /// Agent 2's only action costs two units of its second resource.
    fn expensive_opponent() -> GameModel {
        GameModel::from_file(file(json!({
            "agents": ["1", "2"], "resources": ["time", "gold"], "states": ["s0", "s1"],
            "propositions": {"p": ["s1"]},
            "actions": {"s0": {"1": ["go"], "2": ["pay"]}, "s1": {"1": ["go"], "2": ["pay"]}},
            "costs": {
                "s0": {"go": [-1, 0], "pay": [-1, -2]},
                "s1": {"go": [-1, 0], "pay": [-1, -2]}
            },
            "transitions": {"s0": {"go,pay": "s1"}, "s1": {"go,pay": "s1"}}
        })))
        .unwrap()
    }

    fn run(m: &GameModel, f: &str, eta: &str) -> Vec<String> {
        let set = ral_check(m, &parse_formula(f).unwrap(), &parse_allocation(eta).unwrap()).unwrap();
        set.iter().map(|s| m.state_name(s).to_string()).collect()
    }

    #[test]
    fn propositions_ignore_endowment() {
        assert_eq!(run(&m1(), "p", "[1=(0)]"), ["s1"]);
        assert_eq!(run(&m1(), "!p", "[1=(5)]"), ["s0"]);
    }

    #[test]
    fn fresh_until_on_m1() {
        assert_eq!(run(&m1(), "<{1}|{} eta=[1=(2)]> (q U p)", "[1=(0)]"), ["s0", "s1"]);
    }

    #[test]
    fn down_next_without_resources() {
        assert!(run(&m1(), "<{1}|{} down> X p", "[1=(0)]").is_empty());
    }

    #[test]
    fn nested_down_threads_the_endowment() {
        let m = chain();
        let f = "<{1}|{} down> X <{1}|{} down> X p";
        assert!(run(&m, f, "[1=(2)]").contains(&"s0".to_string()));
        assert!(!run(&m, f, "[1=(1)]").contains(&"s0".to_string()));
    }

    #[test]
    fn top_level_down_equals_fresh() {
        let m = chain();
        for eta in ["[1=(0)]", "[1=(1)]", "[1=(2)]"] {
            let down = run(&m, "<{1}|{} down> X p", eta);
            let fresh = run(&m, &format!("<{{1}}|{{}} eta={eta}> X p"), "[1=(0)]");
            assert_eq!(down, fresh);
        }
    }

    #[test]
    fn empty_completion_set() {
        let m = expensive_opponent();
        let eta = "[1=(3,0),2=(3,1)]";
        assert!(run(&m, "<{1}|{2} down> X p", eta).is_empty());
        assert!(run(&m, "<{1}|{2} down> (true U p)", eta) == ["s1"]);
        assert_eq!(run(&m, "<{1}|{2} down> (false R !p)", eta), ["s0"]);
        // Without the opponent constraint agent 2 is unbounded.
        assert_eq!(run(&m, "<{1}|{} down> X p", eta), ["s0", "s1"]);
    }

    #[test]
    fn release_runs_out_when_broke() {
        assert_eq!(run(&m1(), "<{1}|{} down> (false R q)", "[1=(0)]"), ["s0", "s1"]);
    }

    #[test]
    fn fragment_matches_perfect_engine() {
        let m = perfect::tests::m2();
        for (bounded, fresh) in [
            ("<{1}:[1=(1)]> (false R p)", "<{1}|{} eta=[1=(1)]> (false R p)"),
            ("<{1}:[1=(2)]> (false R p)", "<{1}|{} eta=[1=(2)]> (false R p)"),
        ] {
            let b = perfect::label(&m, &parse_formula(bounded).unwrap()).unwrap();
            let r = ral_check(
                &m,
                &parse_formula(fresh).unwrap(),
                &parse_allocation("[1=(0)]").unwrap(),
            )
            .unwrap();
            assert_eq!(b.root().unwrap(), &r);
        }
    }

    #[test]
    fn depth_respects_endowment() {
        let m = chain();
        let mut c = RalChecker::new(&m);
        c.check(
            &parse_formula("<{1}|{} down> (true U false)").unwrap(),
            &parse_allocation("[1=(2)]").unwrap(),
        )
        .unwrap();
        assert_eq!(c.stats().max_depth, 3);
        assert_eq!(c.stats().depth_violations, 0);
    }

    #[test]
    fn rejects_bounded_formulas_and_partial_endowments() {
        let m = m1();
        let eta = parse_allocation("[1=(1)]").unwrap();
        assert!(matches!(
            ral_check(&m, &parse_formula("<{1}:[1=(1)]> X p").unwrap(), &eta),
            Err(CheckError::FamilyMismatch { .. })
        ));
        let short = parse_allocation("[1=(1,1)]").unwrap();
        assert!(matches!(
            ral_check(&m, &parse_formula("p").unwrap(), &short),
            Err(CheckError::Invalid(_))
        ));
    }
}
