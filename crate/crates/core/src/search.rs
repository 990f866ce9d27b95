//! Search-tree nodes and bookkeeping shared by the and-or search engines.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{validate_formula, Allocation, Family, Formula};
use crate::model::{AgentId, Diagnostic, GameModel, JointAction, ModelError, ResourceVector, StateId, StateSet};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("invalid formula:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("the {engine} engine cannot check {family:?} formulas")]
    FamilyMismatch { engine: &'static str, family: Family },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub(crate) fn ensure_checkable(
    engine: &'static str,
    phi: &Formula,
    model: &GameModel,
    accepted: Family,
) -> Result<(), CheckError> {
    let diags = validate_formula(phi, model);
    if !diags.is_empty() {
        return Err(CheckError::Invalid(diags));
    }
    let family = phi.family();
    if family != Family::Propositional && family != accepted {
        return Err(CheckError::FamilyMismatch { engine, family });
    }
    Ok(())
}

/// A state on the way to a search node, with the joint action that reached it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub state: StateId,
    pub incoming: Option<JointAction>,
}

/// Node of an and-or search tree: a state, the path leading to it, the joint
/// action taken on its incoming edge and what each coalition member still holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchNode {
    pub state: StateId,
    pub path: Vec<PathStep>,
    pub incoming: Option<JointAction>,
    /// Indexed like the coalition being searched for.
    pub avail: Vec<ResourceVector>,
}

impl SearchNode {
    pub fn root(state: StateId, budget: Vec<ResourceVector>) -> Self {
        Self {
            state,
            path: Vec::new(),
            incoming: None,
            avail: budget,
        }
    }

    /// The node reached from `self` by `sigma` when the system moves to `next`.
    pub fn child(&self, model: &GameModel, sigma: &JointAction, next: StateId) -> Self {
        let avail = sigma
            .actions
            .iter()
            .zip(&self.avail)
            .map(|(&x, e)| model.update(self.state, x, e))
            .collect();
        let mut path = self.path.clone();
        path.push(PathStep {
            state: self.state,
            incoming: self.incoming.clone(),
        });
        Self {
            state: next,
            path,
            incoming: Some(sigma.clone()),
            avail,
        }
    }

    /// Number of nodes from the root to this one, inclusive.
    pub fn depth(&self) -> usize {
        self.path.len() + 1
    }

    /// States from the root to this node.
    pub fn history(&self) -> Vec<StateId> {
        self.path
            .iter()
            .map(|p| p.state)
            .chain(std::iter::once(self.state))
            .collect()
    }

    /// Whether every coalition member can pay for its part of `sigma`.
    pub fn affords(&self, model: &GameModel, sigma: &JointAction) -> bool {
        crate::model::coalition_affords(model, self.state, sigma, &self.avail)
    }
}

/// Instrumentation collected while labelling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Deepest node created, counting the root as depth 1.
    pub max_depth: usize,
    pub nodes_expanded: u64,
    /// Searches whose depth exceeded the smallest first-resource budget plus one.
    pub depth_violations: u64,
    /// Largest closed set seen by the imperfect-information engine.
    pub max_closed: usize,
    /// Closed sets larger than `|S|^(k+1)`.
    pub closed_violations: u64,
    /// Accepting runs whose closed set assigns different actions to
    /// indistinguishable histories.
    pub uniformity_violations: u64,
}

impl SearchStats {
    pub(crate) fn saw_depth(&mut self, depth: usize) {
        self.max_depth = self.max_depth.max(depth);
    }
}

/// `[φ]` for every subformula that has been labelled so far, in labelling order.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    order: Vec<Formula>,
    sets: HashMap<Formula, StateSet>,
}

impl LabelMap {
    pub fn insert(&mut self, f: Formula, set: StateSet) {
        if self.sets.insert(f.clone(), set).is_none() {
            self.order.push(f);
        }
    }

    pub fn get(&self, f: &Formula) -> Option<&StateSet> {
        self.sets.get(f)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Formula, &StateSet)> {
        self.order.iter().map(|f| (f, &self.sets[f]))
    }

    /// The label of the last (outermost) formula.
    pub fn root(&self) -> Option<&StateSet> {
        self.order.last().map(|f| &self.sets[f])
    }
}

pub(crate) fn resolve_agents(model: &GameModel, names: &[String]) -> Vec<AgentId> {
    names
        .iter()
        .map(|n| model.agent_id(n).expect("formula validated against model"))
        .collect()
}

/// Bound vectors aligned with `coalition`.
pub(crate) fn resolve_budget(model: &GameModel, coalition: &[AgentId], bound: &Allocation) -> Vec<ResourceVector> {
    coalition
        .iter()
        .map(|&a| bound.get(model.agent_name(a)).cloned().expect("bound covers coalition"))
        .collect()
}

/// Smallest first-resource amount, the horizon of any search under `budget`.
pub(crate) fn horizon(budget: &[ResourceVector]) -> usize {
    budget.iter().map(|v| v.first().max(0) as usize).min().unwrap_or(0)
}
