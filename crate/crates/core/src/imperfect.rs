//! Imperfect-information engine with perfect recall and strongly uniform
//! strategies.
//!
//! Each modality is decided by a depth-first search over an open list of
//! pending nodes and a closed list of finished branches. A branch is closed
//! when its objective is met or when the coalition deliberately runs out of
//! resources; the closed list fixes the actions taken along every branch, and
//! later choices must agree with them on indistinguishable histories.

use std::collections::HashMap;

use crate::formula::{subformulas, Family, Formula, Temporal};
use crate::model::{joint_actions, outcomes, AgentId, GameModel, JointAction, StateId, StateSet};
use crate::search::{
    ensure_checkable, horizon, resolve_agents, resolve_budget, CheckError, LabelMap, SearchNode, SearchStats,
};

/// A finished branch: the states along it and the coalition action taken at
/// each of them except the last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedEntry {
    pub states: Vec<StateId>,
    pub actions: Vec<JointAction>,
}

impl ClosedEntry {
    fn of(node: &SearchNode) -> Self {
        let actions = node
            .path
            .iter()
            .skip(1)
            .map(|p| p.incoming.clone())
            .chain(std::iter::once(node.incoming.clone()))
            .flatten()
            .collect();
        Self {
            states: node.history(),
            actions,
        }
    }
}

/// Whether two state sequences have equal length and are statewise
/// indistinguishable for `a`.
pub fn seq_indist(model: &GameModel, left: &[StateId], right: &[StateId], a: AgentId) -> bool {
    left.len() == right.len() && left.iter().zip(right).all(|(&s, &t)| model.indistinguishable(a, s, t))
}

/// `{ s' | s' ~_a s for some a in A }` in declared state order.
pub fn initial_states(model: &GameModel, coalition: &[AgentId], s: StateId) -> Vec<StateId> {
    model
        .state_ids()
        .filter(|&t| coalition.iter().any(|&a| model.indistinguishable(a, s, t)))
        .collect()
}

#[derive(Clone, Copy)]
enum Goal<'a> {
    Next(&'a StateSet),
    Until(&'a StateSet, &'a StateSet),
    Release(&'a StateSet, &'a StateSet),
}

pub struct ImperfectChecker<'m> {
    model: &'m GameModel,
    stats: SearchStats,
    search_depth: usize,
}

impl<'m> ImperfectChecker<'m> {
    pub fn new(model: &'m GameModel) -> Self {
        Self {
            model,
            stats: SearchStats::default(),
            search_depth: 0,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// Labels every subformula of `phi` with the states satisfying it.
    pub fn label(&mut self, phi: &Formula) -> Result<LabelMap, CheckError> {
        ensure_checkable("imperfect", phi, self.model, Family::Bounded)?;
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
                let goal = match path {
                    Temporal::Next(g) => Goal::Next(get(g)),
                    Temporal::Until(l, r) => Goal::Until(get(l), get(r)),
                    Temporal::Release(l, r) => Goal::Release(get(l), get(r)),
                };
                let k = horizon(&budget);
                let closed_cap = (n as u128).checked_pow(k as u32 + 1);
                let mut memo: HashMap<Vec<StateId>, bool> = HashMap::new();
                let mut out = StateSet::empty(n);
                for s in m.state_ids() {
                    let roots = initial_states(m, &agents, s);
                    if let Some(&ok) = memo.get(&roots) {
                        if ok {
                            out.insert(s);
                        }
                        continue;
                    }
                    let open: Vec<SearchNode> = roots
                        .iter()
                        .rev()
                        .map(|&r| SearchNode::root(r, budget.clone()))
                        .collect();
                    let mut closed = Vec::new();
                    self.search_depth = 0;
                    let ok = self.search(open, &mut closed, &agents, goal);
                    if self.search_depth > k + 1 {
                        self.stats.depth_violations += 1;
                    }
                    if ok {
                        self.audit(&closed, &agents, closed_cap);
                        out.insert(s);
                    }
                    memo.insert(roots, ok);
                }
                out
            }
            Formula::Resource { .. } => unreachable!("family checked before labelling"),
        }
    }

    /// Checks the closed list of an accepting run for uniformity and size.
    fn audit(&mut self, closed: &[ClosedEntry], coalition: &[AgentId], cap: Option<u128>) {
        self.stats.max_closed = self.stats.max_closed.max(closed.len());
        if cap.is_some_and(|c| closed.len() as u128 > c) {
            self.stats.closed_violations += 1;
        }
        for (i, x) in closed.iter().enumerate() {
            for y in &closed[i + 1..] {
                for j in 0..x.actions.len().min(y.actions.len()) {
                    for (ai, &a) in coalition.iter().enumerate() {
                        if seq_indist(self.model, &x.states[..=j], &y.states[..=j], a)
                            && x.actions[j].actions[ai] != y.actions[j].actions[ai]
                        {
                            self.stats.uniformity_violations += 1;
                        }
                    }
                }
            }
        }
    }

    fn visit(&mut self, node: &SearchNode) {
        self.stats.nodes_expanded += 1;
        self.stats.saw_depth(node.depth());
        self.search_depth = self.search_depth.max(node.depth());
    }

    /// Whether `sigma` agrees, for every coalition member, with the actions
    /// already committed after indistinguishable histories in `closed`.
    fn compatible(
        &self,
        node: &SearchNode,
        sigma: &JointAction,
        closed: &[ClosedEntry],
        coalition: &[AgentId],
    ) -> bool {
        let history = node.history();
        let m = history.len();
        closed.iter().filter(|e| e.actions.len() >= m).all(|e| {
            coalition.iter().enumerate().all(|(ai, &a)| {
                !seq_indist(self.model, &e.states[..m], &history, a)
                    || e.actions[m - 1].actions[ai] == sigma.actions[ai]
            })
        })
    }

    /// Processes the open list, head last. On failure `closed` is left as it
    /// was on entry.
    fn search(
        &mut self,
        mut open: Vec<SearchNode>,
        closed: &mut Vec<ClosedEntry>,
        coalition: &[AgentId],
        goal: Goal,
    ) -> bool {
        let Some(node) = open.pop() else {
            return true;
        };
        self.visit(&node);
        let m = self.model;
        let s = node.state;
        let mark = closed.len();
        match goal {
            Goal::Until(_, right) if right.contains(s) => {
                closed.push(ClosedEntry::of(&node));
                return self.search(open, closed, coalition, goal) || {
                    closed.truncate(mark);
                    false
                };
            }
            Goal::Until(left, _) if !left.contains(s) => return false,
            Goal::Release(left, right) if right.contains(s) && left.contains(s) => {
                closed.push(ClosedEntry::of(&node));
                return self.search(open, closed, coalition, goal) || {
                    closed.truncate(mark);
                    false
                };
            }
            Goal::Release(_, right) if !right.contains(s) => return false,
            _ => {}
        }
        for sigma in joint_actions(m, s, coalition).expect("validated coalition") {
            if !self.compatible(&node, &sigma, closed, coalition) {
                continue;
            }
            let affordable = node.affords(m, &sigma);
            let succ = outcomes(m, s, &sigma).expect("joint action from D_A");
            let ok = match goal {
                Goal::Next(target) => {
                    if !affordable || !succ.iter().all(|&t| target.contains(t)) {
                        continue;
                    }
                    let child = node.child(m, &sigma, succ[0]);
                    self.stats.saw_depth(child.depth());
                    self.search_depth = self.search_depth.max(child.depth());
                    closed.push(ClosedEntry::of(&child));
                    self.search(open.clone(), closed, coalition, goal)
                }
                Goal::Release(..) if !affordable => {
                    closed.push(ClosedEntry::of(&node.child(m, &sigma, succ[0])));
                    self.search(open.clone(), closed, coalition, goal)
                }
                _ if !affordable => continue,
                _ => {
                    let mut next = open.clone();
                    next.extend(succ.iter().rev().map(|&t| node.child(m, &sigma, t)));
                    self.search(next, closed, coalition, goal)
                }
            };
            if ok {
                return true;
            }
            closed.truncate(mark);
        }
        false
    }
}

/// Labels `phi` on `model` under strongly uniform strategies.
pub fn label_i(model: &GameModel, phi: &Formula) -> Result<LabelMap, CheckError> {
    ImperfectChecker::new(model).label(phi)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::model::fixtures::{file, m1};
    use crate::perfect;
    use serde_json::json;

    /// `s0 ~1 s0'`; `alpha` leads from s0 to good and from s0' to bad, `beta`
    /// the other way round. With `alpha_everywhere`, alpha reaches good from both.
    pub fn m3(alpha_everywhere: bool) -> GameModel {
        let from_s0p = if alpha_everywhere { "good" } else { "bad" };
        let beta_s0p = if alpha_everywhere { "bad" } else { "good" };
        GameModel::from_file(file(json!({
            "agents": ["1"], "resources": ["time"], "states": ["s0", "s0'", "good", "bad"],
            "propositions": {"p": ["good"]},
            "actions": {
                "s0": {"1": ["alpha", "beta"]}, "s0'": {"1": ["alpha", "beta"]},
                "good": {"1": ["stay"]}, "bad": {"1": ["stay"]}
            },
            "costs": {
                "s0": {"alpha": [-1], "beta": [-1]}, "s0'": {"alpha": [-1], "beta": [-1]},
                "good": {"stay": [-1]}, "bad": {"stay": [-1]}
            },
            "transitions": {
                "s0": {"alpha": "good", "beta": "bad"},
                "s0'": {"alpha": from_s0p, "beta": beta_s0p},
                "good": {"stay": "good"}, "bad": {"stay": "bad"}
            },
            "indist": {"1": [["s0", "s0'"], ["good"], ["bad"]]}
        })))
        .unwrap()
    }

    /// Two steps: s0 and s0' move to m and m' (indistinguishable), where the
    /// action reaching p differs.
    pub fn m3_two_step() -> GameModel {
        GameModel::from_file(file(json!({
            "agents": ["1"], "resources": ["time"],
            "states": ["s0", "s0'", "m", "m'", "good", "bad"],
            "propositions": {"p": ["good"]},
            "actions": {
                "s0": {"1": ["go"]}, "s0'": {"1": ["go"]},
                "m": {"1": ["alpha", "beta"]}, "m'": {"1": ["alpha", "beta"]},
                "good": {"1": ["stay"]}, "bad": {"1": ["stay"]}
            },
            "costs": {
                "s0": {"go": [-1]}, "s0'": {"go": [-1]},
                "m": {"alpha": [-1], "beta": [-1]}, "m'": {"alpha": [-1], "beta": [-1]},
                "good": {"stay": [-1]}, "bad": {"stay": [-1]}
            },
            "transitions": {
                "s0": {"go": "m"}, "s0'": {"go": "m'"},
                "m": {"alpha": "good", "beta": "bad"}, "m'": {"alpha": "bad", "beta": "good"},
                "good": {"stay": "good"}, "bad": {"stay": "bad"}
            },
            "indist": {"1": [["s0", "s0'"], ["m", "m'"], ["good"], ["bad"]]}
        })))
        .unwrap()
    }

    fn states(m: &GameModel, f: &str) -> Vec<String> {
        let labels = label_i(m, &parse_formula(f).unwrap()).unwrap();
        labels
            .root()
            .unwrap()
            .iter()
            .map(|s| m.state_name(s).to_string())
            .collect()
    }

    #[test]
    fn seq_indist_cases() {
        let m = m3(false);
        let a = AgentId(0);
        let (s0, s0p, good) = (StateId(0), StateId(1), StateId(2));
        assert!(seq_indist(&m, &[s0, good], &[s0, good], a));
        assert!(!seq_indist(&m, &[s0, good], &[s0, good, good], a));
        assert!(seq_indist(&m, &[s0], &[s0p], a));
        assert!(!seq_indist(&m, &[good], &[s0], a));
    }

    #[test]
    fn m3_next_is_not_uniformly_enforceable() {
        let m = m3(false);
        assert_eq!(states(&m, "<{1}:[1=(1)]> X p"), ["good"]);
        let perfect = perfect::label(&m, &parse_formula("<{1}:[1=(1)]> X p").unwrap()).unwrap();
        assert!(perfect.root().unwrap().contains(StateId(0)));
        assert!(perfect.root().unwrap().contains(StateId(1)));
    }

    #[test]
    fn m3_variant_with_shared_action() {
        let m = m3(true);
        assert_eq!(states(&m, "<{1}:[1=(1)]> X p"), ["s0", "s0'", "good"]);
    }

    #[test]
    fn m3_two_step_until() {
        let m = m3_two_step();
        let f = "<{1}:[1=(2)]> (true U p)";
        assert!(!states(&m, f).contains(&"s0".to_string()));
        assert!(!states(&m, f).contains(&"s0'".to_string()));
        let perfect = perfect::label(&m, &parse_formula(f).unwrap()).unwrap();
        assert!(perfect.root().unwrap().contains(StateId(0)));
        assert!(perfect.root().unwrap().contains(StateId(1)));
    }

    #[test]
    fn identity_relations_match_perfect_engine() {
        let m = m1();
        for f in [
            "<{1}:[1=(2)]> (q U p)",
            "<{1}:[1=(0)]> X p",
            "<{1}:[1=(1)]> (p R q)",
            "<{1}:[1=(1)]> X !p",
        ] {
            let phi = parse_formula(f).unwrap();
            let a = label_i(&m, &phi).unwrap();
            let b = perfect::label(&m, &phi).unwrap();
            assert_eq!(a.root(), b.root(), "{f}");
        }
    }

    #[test]
    fn release_with_zero_budget_runs_out() {
        let m = m1();
        assert_eq!(states(&m, "<{1}:[1=(0)]> (false R p)"), ["s1"]);
        assert!(!states(&m, "<{1}:[1=(3)]> (false R p)").contains(&"s0".to_string()));
    }

    #[test]
    fn release_matches_perfect_on_m2() {
        let m = perfect::tests::m2();
        assert_eq!(states(&m, "<{1}:[1=(1)]> (false R p)"), ["s0"]);
        assert!(states(&m, "<{1}:[1=(2)]> (false R p)").is_empty());
    }

    #[test]
    fn accepting_runs_are_uniform_and_bounded() {
        let m = m3(true);
        let mut c = ImperfectChecker::new(&m);
        c.label(&parse_formula("<{1}:[1=(3)]> (true U p)").unwrap()).unwrap();
        c.label(&parse_formula("<{1}:[1=(2)]> (!p R true)").unwrap()).unwrap();
        assert_eq!(c.stats().uniformity_violations, 0);
        assert_eq!(c.stats().closed_violations, 0);
        assert_eq!(c.stats().depth_violations, 0);
    }

    #[test]
    fn empty_open_list_succeeds() {
        let m = m1();
        let mut c = ImperfectChecker::new(&m);
        let target = StateSet::full(2);
        assert!(c.search(vec![], &mut vec![], &[AgentId(0)], Goal::Next(&target)));
    }

    #[test]
    fn initial_states_cover_the_class() {
        let m = m3(false);
        assert_eq!(initial_states(&m, &[AgentId(0)], StateId(1)), [StateId(0), StateId(1)]);
        assert_eq!(initial_states(&m, &[AgentId(0)], StateId(2)), [StateId(2)]);
    }
}
