//! Brute-force evaluators of the satisfaction relations.
//!
//! A modality is decided by enumerating every strategy tree of the coalition
//! (one action per reachable history), generating all maximal computations of
//! each tree, and testing the path condition on them literally. Nothing here
//! shares code with the engines beyond the model accessors.

mod enumerate;
pub mod fuzz;
pub mod generate;

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{validate_endowment, Endowment, Family, Formula, Mode, Temporal};
use crate::model::{AgentId, GameModel, ResourceVector, StateId, StateSet};
use crate::search::{ensure_checkable, CheckError};

pub use enumerate::{Choice, StrategyTree};

/// Largest number of strategy candidates a single query may enumerate.
pub const DEFAULT_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {candidates} strategy candidates (limit {limit})")]
    TooLarge { candidates: u128, limit: u128 },
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Which satisfaction relation the coalition modalities follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Perfect,
    Uniform,
    Resource,
}

/// Counters describing the enumeration work done by an [`Oracle`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub trees: u64,
    pub computations: u64,
    /// Longest computation generated, in states.
    pub max_length: usize,
    /// Computations longer than the smallest first-resource budget plus one.
    pub length_violations: u64,
}

/// Endowment of every agent, indexed by agent id.
pub(crate) type Holdings = Vec<ResourceVector>;

/// Coalitions of the modality being enumerated.
pub(crate) struct Game {
    pub proponents: Vec<AgentId>,
    pub opponents: Vec<AgentId>,
    /// Agents whose resources are tracked, indexed by agent id.
    pub bounded: Vec<bool>,
    pub uniform: bool,
}

impl Game {
    fn new(model: &GameModel, proponents: Vec<AgentId>, opponents: Vec<AgentId>, uniform: bool) -> Self {
        let mut bounded = vec![false; model.n_agents()];
        for a in proponents.iter().chain(&opponents) {
            bounded[a.0] = true;
        }
        Self {
            proponents,
            opponents,
            bounded,
            uniform,
        }
    }

    /// Maximal computation length from a root holding `avail`.
    fn length_cap(&self, avail: &Holdings) -> usize {
        self.bounded
            .iter()
            .zip(avail)
            .filter(|(&b, _)| b)
            .map(|(_, e)| e.0[0].max(0) as usize)
            .min()
            .unwrap_or(0)
            + 1
    }
}

type MemoKey = (Formula, StateId, Option<Holdings>);

pub struct Oracle<'m> {
    pub(crate) model: &'m GameModel,
    semantics: Semantics,
    limit: u128,
    memo: RefCell<HashMap<MemoKey, bool>>,
    stats: RefCell<OracleStats>,
    largest: Cell<u128>,
}

impl<'m> Oracle<'m> {
    pub fn new(model: &'m GameModel, semantics: Semantics) -> Self {
        Self {
            model,
            semantics,
            limit: DEFAULT_LIMIT,
            memo: RefCell::new(HashMap::new()),
            stats: RefCell::new(OracleStats::default()),
            largest: Cell::new(0),
        }
    }

    pub fn with_limit(mut self, limit: u128) -> Self {
        self.limit = limit;
        self
    }

    pub fn stats(&self) -> OracleStats {
        self.stats.borrow().clone()
    }

    /// Largest candidate count met by any modality so far.
    pub fn largest_candidate_count(&self) -> u128 {
        self.largest.get()
    }

    /// States satisfying `phi`; `eta` is required for resource formulas.
    pub fn satisfying(&self, phi: &Formula, eta: Option<&Endowment>) -> Result<StateSet, OracleError> {
        let (engine, family) = match self.semantics {
            Semantics::Perfect => ("oracle-perfect", Family::Bounded),
            Semantics::Uniform => ("oracle-imperfect", Family::Bounded),
            Semantics::Resource => ("oracle-ral", Family::Endowed),
        };
        ensure_checkable(engine, phi, self.model, family)?;
        let holdings = match (self.semantics, eta) {
            (Semantics::Resource, Some(eta)) => {
                let diags = validate_endowment(eta, self.model);
                if !diags.is_empty() {
                    return Err(CheckError::Invalid(diags).into());
                }
                Some(self.holdings_of(eta))
            }
            (Semantics::Resource, None) => {
                let zero = ResourceVector::zeros(self.model.n_resources());
                Some(vec![zero; self.model.n_agents()])
            }
            _ => None,
        };
        let mut out = StateSet::empty(self.model.n_states());
        for s in self.model.state_ids() {
            if self.holds(phi, s, holdings.as_ref())? {
                out.insert(s);
            }
        }
        Ok(out)
    }

    fn holdings_of(&self, eta: &Endowment) -> Holdings {
        self.model
            .agent_names()
            .iter()
            .map(|a| eta.get(a).cloned().expect("validated endowment"))
            .collect()
    }

    fn agents(&self, names: &[String]) -> Vec<AgentId> {
        names
            .iter()
            .map(|n| self.model.agent_id(n).expect("validated agent"))
            .collect()
    }

    /// Truth of `phi` at `s`; `avail` is the current endowment for resource
    /// formulas and `None` otherwise.
    pub(crate) fn holds(&self, phi: &Formula, s: StateId, avail: Option<&Holdings>) -> Result<bool, OracleError> {
        let value = match phi {
            Formula::True => return Ok(true),
            Formula::False => return Ok(false),
            Formula::Prop(p) => return Ok(self.model.proposition(p).is_some_and(|set| set.contains(s))),
            Formula::Not(g) => return Ok(!self.holds(g, s, avail)?),
            Formula::And(l, r) => return Ok(self.holds(l, s, avail)? && self.holds(r, s, avail)?),
            Formula::Or(l, r) => return Ok(self.holds(l, s, avail)? || self.holds(r, s, avail)?),
            Formula::Coalition { .. } | Formula::Resource { .. } => {
                let key = (phi.clone(), s, avail.cloned());
                if let Some(&v) = self.memo.borrow().get(&key) {
                    return Ok(v);
                }
                let v = self.modality(phi, s, avail)?;
                self.memo.borrow_mut().insert(key, v);
                v
            }
        };
        Ok(value)
    }

    fn modality(&self, phi: &Formula, s: StateId, avail: Option<&Holdings>) -> Result<bool, OracleError> {
        let m = self.model;
        match phi {
            Formula::Coalition { coalition, bound, path } => {
                let agents = self.agents(coalition);
                let mut root = vec![ResourceVector::zeros(m.n_resources()); m.n_agents()];
                for &a in &agents {
                    root[a.0] = bound.get(m.agent_name(a)).cloned().expect("validated bound");
                }
                let uniform = self.semantics == Semantics::Uniform;
                let game = Game::new(m, agents, vec![], uniform);
                if uniform {
                    self.exists_uniform(&game, s, &root, path)
                } else {
                    self.exists_tree(&game, s, &root, path)
                }
            }
            Formula::Resource {
                proponents,
                opponents,
                mode,
                path,
            } => {
                let root = match mode {
                    Mode::Down => avail.cloned().expect("resource formulas carry an endowment"),
                    Mode::Fresh(zeta) => self.holdings_of(zeta),
                };
                let game = Game::new(m, self.agents(proponents), self.agents(opponents), false);
                self.exists_tree(&game, s, &root, path)
            }
            _ => unreachable!("modalities only"),
        }
    }

    /// Path condition of `path` on one maximal computation.
    fn path_holds(&self, path: &Temporal, run: &[(StateId, Holdings)]) -> Result<bool, OracleError> {
        let at = |f: &Formula, i: usize| -> Result<bool, OracleError> {
            let (s, e) = &run[i];
            let e = (self.semantics == Semantics::Resource).then_some(e);
            self.holds(f, *s, e)
        };
        match path {
            Temporal::Next(f) => Ok(run.len() >= 2 && at(f, 1)?),
            Temporal::Until(phi, psi) => {
                for i in 0..run.len() {
                    if at(psi, i)? {
                        return Ok(true);
                    }
                    if !at(phi, i)? {
                        return Ok(false);
                    }
                }
                Ok(false)
            }
            Temporal::Release(phi, psi) => {
                for i in 0..run.len() {
                    if !at(psi, i)? {
                        return Ok(false);
                    }
                    if at(phi, i)? {
                        return Ok(true);
                    }
                }
                Ok(true)
            }
        }
    }

    fn record(&self, game: &Game, root: &Holdings, runs: &[Vec<(StateId, Holdings)>]) {
        let cap = game.length_cap(root);
        let mut st = self.stats.borrow_mut();
        st.trees += 1;
        for r in runs {
            st.computations += 1;
            st.max_length = st.max_length.max(r.len());
            if r.len() > cap {
                st.length_violations += 1;
            }
        }
    }

    fn guard(&self, candidates: u128) -> Result<(), OracleError> {
        self.largest.set(self.largest.get().max(candidates));
        if candidates > self.limit {
            return Err(OracleError::TooLarge {
                candidates,
                limit: self.limit,
            });
        }
        Ok(())
    }

    /// Whether some strategy tree from `s` satisfies `path` on all of its
    /// maximal computations.
    fn exists_tree(&self, game: &Game, s: StateId, root: &Holdings, path: &Temporal) -> Result<bool, OracleError> {
        self.guard(enumerate::count_trees(self.model, game, s, root))?;
        let mut found = false;
        enumerate::for_each_tree(self.model, game, s, root, &mut |tree| {
            let runs = enumerate::computations(self.model, game, tree, s, root);
            self.record(game, root, &runs);
            for r in &runs {
                if !self.path_holds(path, r)? {
                    return Ok(false);
                }
            }
            found = true;
            Ok(true)
        })?;
        Ok(found)
    }

    /// Strong uniformity: one uniform strategy must work from every state
    /// some coalition member cannot tell apart from `s`.
    fn exists_uniform(&self, game: &Game, s: StateId, root: &Holdings, path: &Temporal) -> Result<bool, OracleError> {
        let m = self.model;
        let roots: Vec<StateId> = m
            .state_ids()
            .filter(|&t| game.proponents.iter().any(|&a| m.indistinguishable(a, s, t)))
            .collect();
        let total: u128 = roots.iter().map(|&r| enumerate::count_trees(m, game, r, root)).sum();
        self.guard(total)?;
        let mut per_root: Vec<Vec<enumerate::Commitments>> = Vec::new();
        for &r in &roots {
            let mut good = Vec::new();
            enumerate::for_each_tree(m, game, r, root, &mut |tree| {
                let runs = enumerate::computations(m, game, tree, r, root);
                self.record(game, root, &runs);
                for run in &runs {
                    if !self.path_holds(path, run)? {
                        return Ok(false);
                    }
                }
                good.push(enumerate::commitments(m, game, tree));
                Ok(false)
            })?;
            if good.is_empty() {
                return Ok(false);
            }
            good.sort();
            good.dedup();
            per_root.push(good);
        }
        Ok(enumerate::join(per_root))
    }

    /// Enumerates full strategies over every history of length at most the
    /// budget horizon plus one, without merging equivalent choices. Only for
    /// micro instances; returns the verdict and the number of strategies.
    pub fn holds_literal(&self, phi: &Formula, s: StateId) -> Result<(bool, u128), OracleError> {
        let Formula::Coalition { coalition, bound, path } = phi else {
            return Ok((self.holds(phi, s, None)?, 0));
        };
        let m = self.model;
        let agents = self.agents(coalition);
        let mut root = vec![ResourceVector::zeros(m.n_resources()); m.n_agents()];
        for &a in &agents {
            root[a.0] = bound.get(m.agent_name(a)).cloned().expect("validated bound");
        }
        let game = Game::new(m, agents, vec![], false);
        let histories = enumerate::graph_histories(m, s, game.length_cap(&root));
        let options: Vec<Vec<crate::model::JointAction>> = histories
            .iter()
            .map(|h| enumerate::coalition_actions(m, &game, *h.last().unwrap()))
            .collect();
        let count = options.iter().fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128));
        self.guard(count)?;
        let mut digits = vec![0usize; histories.len()];
        let mut found = false;
        'outer: loop {
            let tree: StrategyTree = histories
                .iter()
                .zip(&digits)
                .zip(&options)
                .map(|((h, &d), o)| (h.clone(), Choice::Act(o[d].clone())))
                .collect();
            let runs = enumerate::computations(m, &game, &tree, s, &root);
            self.record(&game, &root, &runs);
            let mut ok = true;
            for r in &runs {
                if !self.path_holds(path, r)? {
                    ok = false;
                    break;
                }
            }
            found |= ok;
            for (d, o) in digits.iter_mut().zip(&options) {
                *d += 1;
                if *d < o.len() {
                    continue 'outer;
                }
                *d = 0;
            }
            break;
        }
        Ok((found, count))
    }
}

/// Perfect-information truth of `phi` at `s`.
pub fn holds_semantics(model: &GameModel, s: StateId, phi: &Formula) -> Result<bool, OracleError> {
    ensure_checkable("oracle-perfect", phi, model, Family::Bounded)?;
    Oracle::new(model, Semantics::Perfect).holds(phi, s, None)
}

/// Truth of `phi` at `s` under strongly uniform strategies.
pub fn holds_semantics_uniform(model: &GameModel, s: StateId, phi: &Formula) -> Result<bool, OracleError> {
    ensure_checkable("oracle-imperfect", phi, model, Family::Bounded)?;
    Oracle::new(model, Semantics::Uniform).holds(phi, s, None)
}

/// Resource agent logic truth of `phi` at `s` under the endowment `eta`.
pub fn holds_semantics_ral(model: &GameModel, s: StateId, eta: &Endowment, phi: &Formula) -> Result<bool, OracleError> {
    let o = Oracle::new(model, Semantics::Resource);
    Ok(o.satisfying(phi, Some(eta))?.contains(s))
}
