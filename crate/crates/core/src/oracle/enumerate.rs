//! Strategy trees, their maximal computations and the cross-root join used
//! for strong uniformity.

use std::collections::{BTreeMap, HashMap};

use super::{Game, Holdings, OracleError};
use crate::model::{ActionId, GameModel, JointAction, ResourceVector, StateId};

/// What the coalition does after one history.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Choice {
    Act(JointAction),
    /// Some action the coalition cannot carry out here; every such action ends
    /// the computation in the same way.
    Stop,
    /// Nothing is affordable here, so the action only matters for uniformity
    /// and may be anything.
    Any,
}

/// Coalition choices at every history reachable under the tree.
pub type StrategyTree = HashMap<Vec<StateId>, Choice>;

/// Actions a uniform tree commits to, keyed by coalition member and the
/// member's view of the history. Sorted by key.
pub(crate) type Commitments = Vec<((usize, Vec<usize>), ActionId)>;

/// A history still waiting for a choice, with every endowment it can be
/// reached with.
struct Pending {
    history: Vec<StateId>,
    variants: Vec<Holdings>,
}

fn pays(model: &GameModel, s: StateId, x: ActionId, held: &ResourceVector) -> bool {
    let c = model.cost(s, x).expect("available actions are costed");
    held.0.iter().zip(&c.0).all(|(h, c)| h + c.min(&0) >= 0)
}

fn after(model: &GameModel, s: StateId, x: ActionId, held: &ResourceVector) -> ResourceVector {
    let c = model.cost(s, x).expect("available actions are costed");
    ResourceVector(held.0.iter().zip(&c.0).map(|(h, c)| h + c).collect())
}

/// Every joint action of the proponents at `s`.
pub(crate) fn coalition_actions(model: &GameModel, game: &Game, s: StateId) -> Vec<JointAction> {
    let mut out = vec![vec![]];
    for &a in &game.proponents {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<ActionId>| {
                model.available(s, a).iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|actions| JointAction {
            agents: game.proponents.clone(),
            actions,
        })
        .collect()
}

/// Successors when the proponents choose `sigma` at `s` holding `avail`, or
/// `None` when the computation ends there.
fn step(
    model: &GameModel,
    game: &Game,
    s: StateId,
    sigma: &JointAction,
    avail: &Holdings,
) -> Option<Vec<(StateId, Holdings)>> {
    if !sigma
        .agents
        .iter()
        .zip(&sigma.actions)
        .all(|(a, &x)| pays(model, s, x, &avail[a.0]))
    {
        return None;
    }
    let mut out: Vec<(StateId, Holdings)> = model
        .profiles(s)
        .into_iter()
        .filter(|p| sigma.agents.iter().zip(&sigma.actions).all(|(a, x)| p[a.0] == *x))
        .filter(|p| game.opponents.iter().all(|b| pays(model, s, p[b.0], &avail[b.0])))
        .map(|p| {
            let next = avail
                .iter()
                .enumerate()
                .map(|(a, e)| {
                    if game.bounded[a] {
                        after(model, s, p[a], e)
                    } else {
                        e.clone()
                    }
                })
                .collect();
            (model.successor(s, &p), next)
        })
        .collect();
    out.sort();
    out.dedup();
    (!out.is_empty()).then_some(out)
}

/// Choices open at `p`, each with the histories it leads to.
fn options(model: &GameModel, game: &Game, p: &Pending) -> Vec<(Choice, Vec<Pending>)> {
    let s = *p.history.last().expect("histories are non-empty");
    let mut live = Vec::new();
    let mut dead = Vec::new();
    for sigma in coalition_actions(model, game, s) {
        let mut children: BTreeMap<StateId, Vec<Holdings>> = BTreeMap::new();
        let mut moved = false;
        for v in &p.variants {
            if let Some(succ) = step(model, game, s, &sigma, v) {
                moved = true;
                for (t, e) in succ {
                    let slot = children.entry(t).or_default();
                    if !slot.contains(&e) {
                        slot.push(e);
                    }
                }
            }
        }
        if moved {
            let pending = children
                .into_iter()
                .map(|(t, variants)| {
                    let mut history = p.history.clone();
                    history.push(t);
                    Pending { history, variants }
                })
                .collect();
            live.push((Choice::Act(sigma), pending));
        } else {
            dead.push(sigma);
        }
    }
    if game.uniform {
        if live.is_empty() {
            return vec![(Choice::Any, vec![])];
        }
        live.extend(dead.into_iter().map(|d| (Choice::Act(d), vec![])));
    } else if !dead.is_empty() {
        live.push((Choice::Stop, vec![]));
    }
    live
}

fn root_pending(s: StateId, avail: &Holdings) -> Pending {
    Pending {
        history: vec![s],
        variants: vec![avail.clone()],
    }
}

fn count_from(model: &GameModel, game: &Game, p: &Pending) -> u128 {
    options(model, game, p)
        .iter()
        .map(|(_, children)| {
            children
                .iter()
                .fold(1u128, |acc, c| acc.saturating_mul(count_from(model, game, c)))
        })
        .fold(0u128, |acc, n| acc.saturating_add(n))
}

/// Number of strategy trees from `s`, before any uniformity filtering.
pub(crate) fn count_trees(model: &GameModel, game: &Game, s: StateId, avail: &Holdings) -> u128 {
    count_from(model, game, &root_pending(s, avail))
}

/// Class of `s` for agent `a`, named by its first member.
fn class_of(model: &GameModel, a: crate::model::AgentId, s: StateId) -> usize {
    model
        .state_ids()
        .find(|&t| model.indistinguishable(a, s, t))
        .map_or(s.0, |t| t.0)
}

fn view(model: &GameModel, a: crate::model::AgentId, history: &[StateId]) -> Vec<usize> {
    history.iter().map(|&s| class_of(model, a, s)).collect()
}

type Visitor<'a> = dyn FnMut(&StrategyTree) -> Result<bool, OracleError> + 'a;

struct Walk<'a> {
    model: &'a GameModel,
    game: &'a Game,
    tree: StrategyTree,
    /// Per-tree uniformity bookkeeping: committed action and reference count.
    keys: HashMap<(usize, Vec<usize>), (ActionId, usize)>,
}

impl Walk<'_> {
    fn extend(&mut self, frontier: &mut Vec<Pending>, visit: &mut Visitor<'_>) -> Result<bool, OracleError> {
        let Some(p) = frontier.pop() else {
            return visit(&self.tree);
        };
        for (choice, children) in options(self.model, self.game, &p) {
            let keys = match &choice {
                Choice::Act(sigma) if self.game.uniform => {
                    let keys: Vec<_> = sigma
                        .agents
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| ((i, view(self.model, a, &p.history)), sigma.actions[i]))
                        .collect();
                    if keys.iter().any(|(k, x)| self.keys.get(k).is_some_and(|(y, _)| y != x)) {
                        continue;
                    }
                    keys
                }
                _ => vec![],
            };
            for (k, x) in &keys {
                self.keys.entry(k.clone()).or_insert((*x, 0)).1 += 1;
            }
            self.tree.insert(p.history.clone(), choice);
            let mark = frontier.len();
            frontier.extend(children);
            let stop = self.extend(frontier, visit);
            frontier.truncate(mark);
            self.tree.remove(&p.history);
            for (k, _) in &keys {
                let entry = self.keys.get_mut(k).expect("key added above");
                entry.1 -= 1;
                if entry.1 == 0 {
                    self.keys.remove(k);
                }
            }
            if stop? {
                frontier.push(p);
                return Ok(true);
            }
        }
        frontier.push(p);
        Ok(false)
    }
}

/// Calls `visit` on every strategy tree from `s` (uniform within the tree
/// when the game asks for it) until it returns `true`.
pub(crate) fn for_each_tree(
    model: &GameModel,
    game: &Game,
    s: StateId,
    avail: &Holdings,
    visit: &mut Visitor<'_>,
) -> Result<bool, OracleError> {
    let mut walk = Walk {
        model,
        game,
        tree: StrategyTree::new(),
        keys: HashMap::new(),
    };
    walk.extend(&mut vec![root_pending(s, avail)], visit)
}

/// Every maximal computation of `tree` from `s`, with the endowment held at
/// each position.
pub(crate) fn computations(
    model: &GameModel,
    game: &Game,
    tree: &StrategyTree,
    s: StateId,
    avail: &Holdings,
) -> Vec<Vec<(StateId, Holdings)>> {
    fn walk(
        model: &GameModel,
        game: &Game,
        tree: &StrategyTree,
        history: &mut Vec<StateId>,
        run: &mut Vec<(StateId, Holdings)>,
        out: &mut Vec<Vec<(StateId, Holdings)>>,
    ) {
        let (s, e) = run.last().cloned().expect("runs are non-empty");
        let next = match tree.get(history.as_slice()) {
            Some(Choice::Act(sigma)) => step(model, game, s, sigma, &e),
            Some(Choice::Stop | Choice::Any) => None,
            None => panic!("strategy tree misses a reachable history"),
        };
        match next {
            None => out.push(run.clone()),
            Some(succ) => {
                for (t, e) in succ {
                    history.push(t);
                    run.push((t, e));
                    walk(model, game, tree, history, run, out);
                    run.pop();
                    history.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(model, game, tree, &mut vec![s], &mut vec![(s, avail.clone())], &mut out);
    out
}

/// The actions `tree` commits each coalition member to, by the member's view.
pub(crate) fn commitments(model: &GameModel, game: &Game, tree: &StrategyTree) -> Commitments {
    let mut out: Commitments = tree
        .iter()
        .filter_map(|(h, c)| match c {
            Choice::Act(sigma) => Some((h, sigma)),
            _ => None,
        })
        .flat_map(|(h, sigma)| {
            game.proponents
                .iter()
                .enumerate()
                .map(move |(i, &a)| ((i, view(model, a, h)), sigma.actions[i]))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn compatible(x: &Commitments, y: &Commitments) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if x[i].1 != y[j].1 {
                    return false;
                }
                i += 1;
                j += 1;
            }
        }
    }
    true
}

/// Whether one candidate per root can be picked so that all picks agree on
/// every shared view.
pub(crate) fn join(mut domains: Vec<Vec<Commitments>>) -> bool {
    fn go(domains: &[Vec<&Commitments>]) -> bool {
        let Some((first, rest)) = domains.split_first() else {
            return true;
        };
        first.iter().any(|c| {
            let narrowed: Vec<Vec<&Commitments>> = rest
                .iter()
                .map(|d| d.iter().copied().filter(|x| compatible(c, x)).collect())
                .collect();
            narrowed.iter().all(|d| !d.is_empty()) && go(&narrowed)
        })
    }
    domains.sort_by_key(|d| d.len());
    let refs: Vec<Vec<&Commitments>> = domains.iter().map(|d| d.iter().collect()).collect();
    go(&refs)
}

/// Every state sequence from `s` of length at most `cap` that follows some
/// transition of the model, in breadth-first order.
pub(crate) fn graph_histories(model: &GameModel, s: StateId, cap: usize) -> Vec<Vec<StateId>> {
    let mut out = vec![vec![s]];
    let mut i = 0;
    while i < out.len() {
        let h = out[i].clone();
        i += 1;
        if h.len() >= cap {
            continue;
        }
        let last = *h.last().expect("non-empty");
        let mut next: Vec<StateId> = model.profiles(last).iter().map(|p| model.successor(last, p)).collect();
        next.sort();
        next.dedup();
        for t in next {
            let mut g = h.clone();
            g.push(t);
            out.push(g);
        }
    }
    out
}
