//! Perfect-information engine: global bottom-up labelling, with depth-first
//! and-or search for Until and Release.

use crate::formula::{subformulas, Family, Formula, Temporal};
use crate::model::{joint_actions, outcomes, pre, AgentId, GameModel, StateSet};
use crate::search::{
    ensure_checkable, horizon, resolve_agents, resolve_budget, CheckError, LabelMap, SearchNode, SearchStats,
};

/// Deliberate defects used to check that the differential tests notice them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Never accept Release by running out of resources.
    SkipReleaseRunOut,
}

pub struct PerfectChecker<'m> {
    model: &'m GameModel,
    stats: SearchStats,
    mutation: Option<Mutation>,
    search_depth: usize,
}

impl<'m> PerfectChecker<'m> {
    pub fn new(model: &'m GameModel) -> Self {
        Self {
            model,
            stats: SearchStats::default(),
            mutation: None,
            search_depth: 0,
        }
    }

    #[doc(hidden)]
    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// Labels every subformula of `phi` with the states satisfying it.
    pub fn label(&mut self, phi: &Formula) -> Result<LabelMap, CheckError> {
        ensure_checkable("perfect", phi, self.model, Family::Bounded)?;
        let mut labels = LabelMap::default();
        for sub in subformulas(phi) {
            let set = self.label_one(sub, &labels);
            labels.insert(sub.clone(), set);
        }
        Ok(labels)
    }

    fn label_one(&mut self, f: &Formula, labels: &LabelMap) -> StateSet {
        let m = self.model;
        let n = m.n_states();
        let get = |g: &Formula| labels.get(g).expect("subformulas labelled bottom-up");
        match f {
            Formula::True => StateSet::full(n),
            Formula::False => StateSet::empty(n),
            Formula::Prop(p) => m.proposition(p).cloned().expect("validated proposition"),
            Formula::Not(g) => get(g).complement(),
            Formula::And(l, r) => get(l).intersection(get(r)),
            Formula::Or(l, r) => get(l).union(get(r)),
            Formula::Coalition { coalition, bound, path } => {
                let agents = resolve_agents(m, coalition);
                let budget = resolve_budget(m, &agents, bound);
                match path {
                    Temporal::Next(g) => {
                        let reach = if horizon(&budget) >= 1 { 2 } else { 1 };
                        self.stats.saw_depth(reach);
                        self.stats.nodes_expanded += n as u64;
                        pre(m, &agents, get(g), &budget).expect("validated coalition")
                    }
                    Temporal::Until(l, r) | Temporal::Release(l, r) => {
                        let until = matches!(path, Temporal::Until(..));
                        let (left, right) = (get(l), get(r));
                        let mut out = StateSet::empty(n);
                        for s in m.state_ids() {
                            let root = SearchNode::root(s, budget.clone());
                            self.search_depth = 0;
                            let ok = if until {
                                self.until_strategy(&root, &agents, left, right)
                            } else {
                                self.release_strategy(&root, &agents, left, right)
                            };
                            if self.search_depth > horizon(&budget) + 1 {
                                self.stats.depth_violations += 1;
                            }
                            if ok {
                                out.insert(s);
                            }
                        }
                        out
                    }
                }
            }
            Formula::Resource { .. } => unreachable!("family checked before labelling"),
        }
    }

    fn visit(&mut self, node: &SearchNode) {
        debug_assert!(node.avail.iter().all(|e| e.is_non_negative()));
        self.stats.nodes_expanded += 1;
        self.stats.saw_depth(node.depth());
        self.search_depth = self.search_depth.max(node.depth());
    }

    /// Whether the coalition can force `right` while `left` holds, within the
    /// resources held at `node`.
    pub fn until_strategy(
        &mut self,
        node: &SearchNode,
        coalition: &[AgentId],
        left: &StateSet,
        right: &StateSet,
    ) -> bool {
        self.visit(node);
        let s = node.state;
        if right.contains(s) {
            return true;
        }
        if !left.contains(s) {
            return false;
        }
        self.expand(node, coalition, |this, child| {
            this.until_strategy(child, coalition, left, right)
        })
    }

    /// Whether the coalition can maintain `right` until `left ∧ right`, or until
    /// it runs out of resources, starting at `node`.
    pub fn release_strategy(
        &mut self,
        node: &SearchNode,
        coalition: &[AgentId],
        left: &StateSet,
        right: &StateSet,
    ) -> bool {
        self.visit(node);
        let m = self.model;
        let s = node.state;
        if right.contains(s) && left.contains(s) {
            return true;
        }
        if right.contains(s) && self.mutation != Some(Mutation::SkipReleaseRunOut) {
            let run_out = joint_actions(m, s, coalition)
                .expect("validated coalition")
                .iter()
                .any(|sigma| !node.affords(m, sigma));
            if run_out {
                return true;
            }
        }
        if !right.contains(s) {
            return false;
        }
        self.expand(node, coalition, |this, child| {
            this.release_strategy(child, coalition, left, right)
        })
    }

    /// Tries affordable joint actions in declared order; succeeds on the first
    /// one for which every outcome satisfies `recurse`.
    fn expand(
        &mut self,
        node: &SearchNode,
        coalition: &[AgentId],
        mut recurse: impl FnMut(&mut Self, &SearchNode) -> bool,
    ) -> bool {
        let m = self.model;
        for sigma in joint_actions(m, node.state, coalition).expect("validated coalition") {
            if !node.affords(m, &sigma) {
                continue;
            }
            let succ = outcomes(m, node.state, &sigma).expect("joint action from D_A");
            if succ.iter().all(|&t| recurse(self, &node.child(m, &sigma, t))) {
                return true;
            }
        }
        false
    }
}

/// Labels `phi` on `model` and returns the label map.
pub fn label(model: &GameModel, phi: &Formula) -> Result<LabelMap, CheckError> {
    PerfectChecker::new(model).label(phi)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::model::fixtures::{file, m1};
    use crate::model::{ResourceVector, StateId};
    use serde_json::json;

    /// One state-changing action costing two units; `p` only at s0.
    pub fn m2() -> GameModel {
        GameModel::from_file(file(json!({
            "agents": ["1"], "resources": ["time"], "states": ["s0", "s1"],
            "propositions": {"p": ["s0"]},
            "actions": {"s0": {"1": ["go"]}, "s1": {"1": ["go"]}},
            "costs": {"s0": {"go": [-2]}, "s1": {"go": [-2]}},
            "transitions": {"s0": {"go": "s1"}, "s1": {"go": "s1"}}
        })))
        .unwrap()
    }

    fn states(m: &GameModel, f: &str) -> Vec<String> {
        let labels = label(m, &parse_formula(f).unwrap()).unwrap();
        labels
            .root()
            .unwrap()
            .iter()
            .map(|s| m.state_name(s).to_string())
            .collect()
    }

    #[test]
    fn until_on_m1() {
        assert_eq!(states(&m1(), "<{1}:[1=(2)]> (q U p)"), ["s0", "s1"]);
    }

    #[test]
    fn next_with_zero_budget() {
        assert!(states(&m1(), "<{1}:[1=(0)]> X p").is_empty());
    }

    #[test]
    fn literals() {
        assert_eq!(states(&m1(), "true"), ["s0", "s1"]);
        assert!(states(&m1(), "false").is_empty());
    }

    #[test]
    fn boolean_connectives() {
        let m = m1();
        assert_eq!(states(&m, "!p"), ["s0"]);
        assert_eq!(states(&m, "(p | !q)"), ["s1"]);
        assert_eq!(states(&m, "(p & q)"), ["s1"]);
    }

    #[test]
    fn until_strategy_base_cases() {
        let m = m1();
        let mut c = PerfectChecker::new(&m);
        let a = [AgentId(0)];
        let p = StateSet::from_states(2, [StateId(1)]);
        let none = StateSet::empty(2);
        let zero = SearchNode::root(StateId(1), vec![ResourceVector(vec![0])]);
        assert!(c.until_strategy(&zero, &a, &none, &p));
        let at_s0 = SearchNode::root(StateId(0), vec![ResourceVector(vec![0])]);
        assert!(!c.until_strategy(&at_s0, &a, &none, &p));
        let one = SearchNode::root(StateId(0), vec![ResourceVector(vec![1])]);
        assert!(c.until_strategy(&one, &a, &StateSet::full(2), &p));
    }

    #[test]
    fn release_strategy_base_cases() {
        let m = m1();
        let mut c = PerfectChecker::new(&m);
        let a = [AgentId(0)];
        let p = StateSet::from_states(2, [StateId(1)]);
        let none = StateSet::empty(2);
        let broke = SearchNode::root(StateId(1), vec![ResourceVector(vec![0])]);
        assert!(c.release_strategy(&broke, &a, &none, &p));
        let outside = SearchNode::root(StateId(0), vec![ResourceVector(vec![3])]);
        assert!(!c.release_strategy(&outside, &a, &none, &p));
    }

    #[test]
    fn release_is_not_monotone_in_the_bound() {
        let m = m2();
        assert_eq!(states(&m, "<{1}:[1=(1)]> (false R p)"), ["s0"]);
        assert!(states(&m, "<{1}:[1=(2)]> (false R p)").is_empty());
    }

    #[test]
    fn mutation_breaks_run_out() {
        let m = m2();
        let f = parse_formula("<{1}:[1=(1)]> (false R p)").unwrap();
        let labels = PerfectChecker::new(&m)
            .with_mutation(Some(Mutation::SkipReleaseRunOut))
            .label(&f)
            .unwrap();
        assert!(labels.root().unwrap().is_empty());
    }

    #[test]
    fn depth_stays_within_budget() {
        let m = m1();
        let mut c = PerfectChecker::new(&m);
        c.label(&parse_formula("<{1}:[1=(3)]> (true U false)").unwrap())
            .unwrap();
        assert_eq!(c.stats().max_depth, 4);
        assert_eq!(c.stats().depth_violations, 0);
    }

    #[test]
    fn rejects_other_family() {
        let m = m1();
        let err = label(&m, &parse_formula("<{1}|{} down> X p").unwrap()).unwrap_err();
        assert!(matches!(err, CheckError::FamilyMismatch { .. }));
    }

    #[test]
    fn nested_modalities_use_inner_labels() {
        // s1 can reach p in one step (stay); s0 needs two.
        let m = m1();
        assert_eq!(states(&m, "<{1}:[1=(1)]> X <{1}:[1=(1)]> X p"), ["s0", "s1"]);
        assert_eq!(states(&m, "<{1}:[1=(1)]> X <{1}:[1=(0)]> X p"), Vec::<String>::new());
    }
}
