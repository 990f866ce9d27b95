//! Resource-bounded concurrent game structures with a diminishing resource.
//!
//! A [`GameModel`] is built from a [`ModelFile`] (the JSON exchange format) and is
//! immutable afterwards. All identifiers are interned into dense indices in
//! declaration order, so every enumeration below is deterministic.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("empty coalition rejected")]
    EmptyCoalition,
    #[error("unknown action cost at ({state}, {action})")]
    UnknownActionCost { state: String, action: String },
    #[error("action unavailable at {state}")]
    ActionUnavailable { state: String },
}

/// A single model or formula well-formedness violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
}

impl Diagnostic {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Integer vector over the resource types, compared and added pointwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ResourceVector(pub Vec<i64>);

impl ResourceVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Pointwise `<=` and not equal.
    pub fn lt(&self, other: &Self) -> bool {
        self.le(other) && self != other
    }

    pub fn is_non_negative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0)
    }

    /// The diminishing resource component.
    pub fn first(&self) -> i64 {
        self.0[0]
    }
}

impl Add for &ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: &ResourceVector) -> ResourceVector {
        ResourceVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &ResourceVector {
    type Output = ResourceVector;

    fn sub(self, rhs: &ResourceVector) -> ResourceVector {
        ResourceVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<i64>> for ResourceVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Set of states as a dense membership vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet(Vec<bool>);

impl StateSet {
    pub fn empty(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn from_states(n: usize, states: impl IntoIterator<Item = StateId>) -> Self {
        let mut set = Self::empty(n);
        for s in states {
            set.insert(s);
        }
        set
    }

    pub fn universe_len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.0[s.0]
    }

    pub fn insert(&mut self, s: StateId) {
        self.0[s.0] = true;
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| StateId(i))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&m| m)
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|m| !m).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| !*a || *b)
    }
}

/// Joint action of an ordered coalition; `actions[i]` belongs to `agents[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    pub agents: Vec<AgentId>,
    pub actions: Vec<ActionId>,
}

impl JointAction {
    pub fn action_of(&self, agent: AgentId) -> Option<ActionId> {
        self.agents.iter().position(|&a| a == agent).map(|i| self.actions[i])
    }
}

/// JSON exchange format for models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    pub states: Vec<String>,
    #[serde(default)]
    pub propositions: BTreeMap<String, Vec<String>>,
    pub actions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub costs: BTreeMap<String, BTreeMap<String, Vec<i64>>>,
    pub transitions: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indist: Option<BTreeMap<String, Vec<Vec<String>>>>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }
}

#[derive(Debug, Clone)]
struct Cost {
    raw: ResourceVector,
    cons: ResourceVector,
    prod: ResourceVector,
}

/// A validated resource-bounded concurrent game structure.
#[derive(Debug, Clone)]
pub struct GameModel {
    agents: Vec<String>,
    resources: Vec<String>,
    states: Vec<String>,
    actions: Vec<String>,
    propositions: BTreeMap<String, StateSet>,
    available: Vec<Vec<Vec<ActionId>>>,
    costs: Vec<Vec<Option<Cost>>>,
    // Indexed by the mixed-radix position of the full profile, agent 0 most significant.
    transitions: Vec<Vec<StateId>>,
    // indist[agent][state] is the equivalence class of the state for that agent.
    indist: Vec<Vec<usize>>,
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

fn duplicates(names: &[String]) -> Vec<&str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for n in names {
        if !seen.insert(n.as_str()) && !dups.contains(&n.as_str()) {
            dups.push(n.as_str());
        }
    }
    dups
}

/// Checks every structural invariant of a raw model file and reports one
/// diagnostic per violation. An empty result means [`GameModel::from_file`]
/// will succeed.
pub fn validate_model(raw: &ModelFile) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |m: String| diags.push(Diagnostic::new(m));

    for (kind, names) in [
        ("agent", &raw.agents),
        ("resource", &raw.resources),
        ("state", &raw.states),
    ] {
        if names.is_empty() {
            push(format!("model declares no {kind}s"));
        }
        for d in duplicates(names) {
            push(format!("duplicate {kind} {d:?}"));
        }
    }
    let state_ix = index_of(&raw.states);
    let agent_ix = index_of(&raw.agents);
    let r = raw.resources.len();

    for (p, states) in &raw.propositions {
        for s in states {
            if !state_ix.contains_key(s.as_str()) {
                push(format!("proposition {p:?} refers to unknown state {s:?}"));
            }
        }
    }

    for s in raw.actions.keys() {
        if !state_ix.contains_key(s.as_str()) {
            push(format!("actions declared for unknown state {s:?}"));
        }
    }
    for s in raw.costs.keys() {
        if !state_ix.contains_key(s.as_str()) {
            push(format!("costs declared for unknown state {s:?}"));
        }
    }
    for s in raw.transitions.keys() {
        if !state_ix.contains_key(s.as_str()) {
            push(format!("transitions declared for unknown state {s:?}"));
        }
    }

    for s in &raw.states {
        let per_agent = raw.actions.get(s);
        if let Some(per_agent) = per_agent {
            for a in per_agent.keys() {
                if !agent_ix.contains_key(a.as_str()) {
                    push(format!("actions declared for unknown agent {a:?} at {s}"));
                }
            }
        }
        let mut complete = true;
        let mut lists: Vec<&[String]> = Vec::new();
        for a in &raw.agents {
            match per_agent.and_then(|m| m.get(a)) {
                Some(acts) if !acts.is_empty() => {
                    for d in duplicates(acts) {
                        push(format!("duplicate action {d:?} for agent {a} at {s}"));
                    }
                    lists.push(acts);
                }
                _ => {
                    push(format!("empty action set for agent {a} at {s}"));
                    complete = false;
                }
            }
        }

        let costs = raw.costs.get(s);
        if let Some(costs) = costs {
            for (act, c) in costs {
                if c.len() != r {
                    push(format!(
                        "cost vector at ({s}, {act}) has length {} but the model has {r} resources",
                        c.len()
                    ));
                }
                if c.first().is_some_and(|&v| v > -1) {
                    push(format!("diminishing component must be <= -1 at ({s}, {act})"));
                }
            }
        }
        let mut used: Vec<&String> = lists.iter().flat_map(|l| l.iter()).collect();
        used.sort();
        used.dedup();
        for act in used {
            if costs.and_then(|c| c.get(act)).is_none() {
                push(format!("missing cost for ({s}, {act})"));
            }
        }

        let trans = raw.transitions.get(s);
        if complete {
            let mut expected = HashSet::new();
            for profile in cartesian(&lists) {
                let key = profile.join(",");
                match trans.and_then(|t| t.get(&key)) {
                    None => push(format!("missing transition at {s} for joint action ({key})")),
                    Some(target) if !state_ix.contains_key(target.as_str()) => push(format!(
                        "transition at {s} for ({key}) targets unknown state {target:?}"
                    )),
                    Some(_) => {}
                }
                expected.insert(key);
            }
            if let Some(trans) = trans {
                for key in trans.keys() {
                    if !expected.contains(key) {
                        push(format!("transition at {s} for ({key}) is not a joint action in D({s})"));
                    }
                }
            }
        }
    }

    if let Some(indist) = &raw.indist {
        for (a, classes) in indist {
            if !agent_ix.contains_key(a.as_str()) {
                push(format!("indistinguishability given for unknown agent {a:?}"));
                continue;
            }
            let mut seen: HashMap<&str, usize> = HashMap::new();
            for class in classes {
                if class.is_empty() {
                    push(format!("empty indistinguishability class for agent {a}"));
                }
                for s in class {
                    if !state_ix.contains_key(s.as_str()) {
                        push(format!("indistinguishability for agent {a} names unknown state {s:?}"));
                    }
                    *seen.entry(s.as_str()).or_default() += 1;
                }
            }
            for s in &raw.states {
                match seen.get(s.as_str()).copied().unwrap_or(0) {
                    0 => push(format!(
                        "indistinguishability for agent {a} is not a partition: {s} missing"
                    )),
                    1 => {}
                    _ => push(format!(
                        "indistinguishability for agent {a} is not a partition: {s} in several classes"
                    )),
                }
            }
        }
    }

    diags
}

/// Cartesian product of name lists, first list most significant.
fn cartesian<'a>(lists: &[&'a [String]]) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&str>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for item in list.iter() {
                let mut p = prefix.clone();
                p.push(item.as_str());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl GameModel {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_file(ModelFile::from_json(text)?)
    }

    pub fn from_file(raw: ModelFile) -> Result<Self, ModelError> {
        let diags = validate_model(&raw);
        if !diags.is_empty() {
            return Err(ModelError::Invalid(diags));
        }
        let state_ix = index_of(&raw.states);
        let n = raw.states.len();

        let mut actions: Vec<String> = Vec::new();
        let mut action_ix: HashMap<String, usize> = HashMap::new();
        let mut available = Vec::with_capacity(n);
        for s in &raw.states {
            let per_agent = &raw.actions[s];
            let mut row = Vec::with_capacity(raw.agents.len());
            for a in &raw.agents {
                let ids = per_agent[a]
                    .iter()
                    .map(|name| {
                        let next = actions.len();
                        let id = *action_ix.entry(name.clone()).or_insert(next);
                        if id == next {
                            actions.push(name.clone());
                        }
                        ActionId(id)
                    })
                    .collect();
                row.push(ids);
            }
            available.push(row);
        }
        // Actions that only appear in cost tables still get ids so they can be costed.
        for per_state in raw.costs.values() {
            for name in per_state.keys() {
                if !action_ix.contains_key(name) {
                    action_ix.insert(name.clone(), actions.len());
                    actions.push(name.clone());
                }
            }
        }

        let mut costs = vec![vec![None; actions.len()]; n];
        for (s, per_state) in &raw.costs {
            let si = state_ix[s.as_str()];
            for (name, c) in per_state {
                let raw_vec = ResourceVector(c.clone());
                let cons = ResourceVector(c.iter().map(|&v| (-v).max(0)).collect());
                let prod = ResourceVector(c.iter().map(|&v| v.max(0)).collect());
                costs[si][action_ix[name]] = Some(Cost {
                    raw: raw_vec,
                    cons,
                    prod,
                });
            }
        }

        let mut transitions = Vec::with_capacity(n);
        for (si, s) in raw.states.iter().enumerate() {
            let lists: Vec<&[String]> = raw.agents.iter().map(|a| raw.actions[s][a].as_slice()).collect();
            let table = &raw.transitions[s];
            let row: Vec<StateId> = cartesian(&lists)
                .into_iter()
                .map(|p| StateId(state_ix[table[&p.join(",")].as_str()]))
                .collect();
            debug_assert_eq!(row.len(), available[si].iter().map(Vec::len).product::<usize>());
            transitions.push(row);
        }

        let propositions = raw
            .propositions
            .iter()
            .map(|(p, ss)| {
                (
                    p.clone(),
                    StateSet::from_states(n, ss.iter().map(|s| StateId(state_ix[s.as_str()]))),
                )
            })
            .collect();

        let mut indist: Vec<Vec<usize>> = (0..raw.agents.len()).map(|_| (0..n).collect()).collect();
        if let Some(parts) = &raw.indist {
            for (ai, a) in raw.agents.iter().enumerate() {
                if let Some(classes) = parts.get(a) {
                    for (ci, class) in classes.iter().enumerate() {
                        for s in class {
                            indist[ai][state_ix[s.as_str()]] = ci;
                        }
                    }
                }
            }
        }

        Ok(Self {
            agents: raw.agents,
            resources: raw.resources,
            states: raw.states,
            actions,
            propositions,
            available,
            costs,
            transitions,
            indist,
        })
    }

    /// Serializes back into the exchange format. Indistinguishability is
    /// emitted only for agents whose relation is not the identity.
    pub fn to_file(&self) -> ModelFile {
        let mut actions = BTreeMap::new();
        let mut costs = BTreeMap::new();
        let mut transitions = BTreeMap::new();
        for s in self.state_ids() {
            let sname = self.state_name(s).to_string();
            let mut per_agent = BTreeMap::new();
            let mut per_action = BTreeMap::new();
            for a in self.agent_ids() {
                let names: Vec<String> = self
                    .available(s, a)
                    .iter()
                    .map(|&x| self.action_name(x).to_string())
                    .collect();
                per_agent.insert(self.agent_name(a).to_string(), names);
            }
            for (ai, c) in self.costs[s.0].iter().enumerate() {
                if let Some(c) = c {
                    per_action.insert(self.actions[ai].clone(), c.raw.0.clone());
                }
            }
            let mut table = BTreeMap::new();
            for profile in self.profiles(s) {
                let key: Vec<&str> = profile.iter().map(|&x| self.action_name(x)).collect();
                let target = self.successor(s, &profile);
                table.insert(key.join(","), self.state_name(target).to_string());
            }
            actions.insert(sname.clone(), per_agent);
            costs.insert(sname.clone(), per_action);
            transitions.insert(sname, table);
        }
        let mut indist = BTreeMap::new();
        for a in self.agent_ids() {
            let classes = &self.indist[a.0];
            if classes.iter().enumerate().all(|(i, &c)| i == c) {
                continue;
            }
            let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for (si, &c) in classes.iter().enumerate() {
                groups.entry(c).or_default().push(self.states[si].clone());
            }
            indist.insert(self.agent_name(a).to_string(), groups.into_values().collect());
        }
        ModelFile {
            agents: self.agents.clone(),
            resources: self.resources.clone(),
            states: self.states.clone(),
            propositions: self
                .propositions
                .iter()
                .map(|(p, set)| (p.clone(), set.iter().map(|s| self.states[s.0].clone()).collect()))
                .collect(),
            actions,
            costs,
            transitions,
            indist: if indist.is_empty() { None } else { Some(indist) },
        }
    }

    /// Same model with every indistinguishability relation replaced by identity.
    pub fn with_identity_indist(&self) -> Self {
        let mut m = self.clone();
        let n = m.states.len();
        for rel in &mut m.indist {
            *rel = (0..n).collect();
        }
        m
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn resource_names(&self) -> &[String] {
        &self.resources
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0]
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn action_name(&self, x: ActionId) -> &str {
        &self.actions[x.0]
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name).map(AgentId)
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name).map(ActionId)
    }

    pub fn proposition(&self, name: &str) -> Option<&StateSet> {
        self.propositions.get(name)
    }

    pub fn proposition_names(&self) -> impl Iterator<Item = &str> {
        self.propositions.keys().map(String::as_str)
    }

    /// `d(s, a)` in declared order.
    pub fn available(&self, s: StateId, a: AgentId) -> &[ActionId] {
        &self.available[s.0][a.0]
    }

    pub fn cost(&self, s: StateId, x: ActionId) -> Option<&ResourceVector> {
        self.cost_entry(s, x).map(|c| &c.raw)
    }

    fn cost_entry(&self, s: StateId, x: ActionId) -> Option<&Cost> {
        self.costs
            .get(s.0)
            .and_then(|row| row.get(x.0))
            .and_then(Option::as_ref)
    }

    /// Consumption part of `c(s, x)`. Panics for actions without a cost,
    /// which validation rules out for every available action.
    pub fn cons(&self, s: StateId, x: ActionId) -> &ResourceVector {
        &self.cost_entry(s, x).expect("available actions are costed").cons
    }

    /// Production part of `c(s, x)`.
    pub fn prod(&self, s: StateId, x: ActionId) -> &ResourceVector {
        &self.cost_entry(s, x).expect("available actions are costed").prod
    }

    /// `avail + prod(s, x) - cons(s, x)`.
    pub fn update(&self, s: StateId, x: ActionId, avail: &ResourceVector) -> ResourceVector {
        let c = self.cost_entry(s, x).expect("available actions are costed");
        &(avail + &c.prod) - &c.cons
    }

    pub fn affordable(&self, s: StateId, x: ActionId, avail: &ResourceVector) -> bool {
        self.cons(s, x).le(avail)
    }

    /// `δ(s, σ)` for a full profile listed in agent order.
    pub fn successor(&self, s: StateId, profile: &[ActionId]) -> StateId {
        let mut index = 0;
        for (ai, x) in profile.iter().enumerate() {
            let acts = &self.available[s.0][ai];
            let pos = acts.iter().position(|y| y == x).expect("profile action available");
            index = index * acts.len() + pos;
        }
        self.transitions[s.0][index]
    }

    /// All full profiles `D(s)` in lexicographic declared order.
    pub fn profiles(&self, s: StateId) -> Vec<Vec<ActionId>> {
        self.completions_of(s, &[], &[])
    }

    /// Full profiles at `s` that agree with `fixed` on `agents`.
    pub fn completions_of(&self, s: StateId, agents: &[AgentId], fixed: &[ActionId]) -> Vec<Vec<ActionId>> {
        let mut out: Vec<Vec<ActionId>> = vec![Vec::with_capacity(self.agents.len())];
        for a in self.agent_ids() {
            let choices: &[ActionId] = match agents.iter().position(|&b| b == a) {
                Some(i) => std::slice::from_ref(&fixed[i]),
                None => self.available(s, a),
            };
            let mut next = Vec::with_capacity(out.len() * choices.len());
            for prefix in &out {
                for &x in choices {
                    let mut p = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// Whether agent `a` cannot tell `s` from `t`.
    pub fn indistinguishable(&self, a: AgentId, s: StateId, t: StateId) -> bool {
        self.indist[a.0][s.0] == self.indist[a.0][t.0]
    }

    /// Whether the model has any non-identity indistinguishability relation.
    pub fn has_imperfect_information(&self) -> bool {
        self.indist
            .iter()
            .any(|rel| rel.iter().enumerate().any(|(i, &c)| i != c))
    }
}

/// Splits `c(s, x)` into its consumed and produced parts.
pub fn decompose_cost(
    model: &GameModel,
    s: StateId,
    x: ActionId,
) -> Result<(ResourceVector, ResourceVector), ModelError> {
    model
        .cost_entry(s, x)
        .map(|c| (c.cons.clone(), c.prod.clone()))
        .ok_or_else(|| ModelError::UnknownActionCost {
            state: model.states.get(s.0).cloned().unwrap_or_else(|| format!("#{}", s.0)),
            action: model.actions.get(x.0).cloned().unwrap_or_else(|| format!("#{}", x.0)),
        })
}

/// `D_A(s)`: every joint action of the coalition, lexicographic over the
/// declared action order with the first coalition member most significant.
pub fn joint_actions(model: &GameModel, s: StateId, coalition: &[AgentId]) -> Result<Vec<JointAction>, ModelError> {
    if coalition.is_empty() {
        return Err(ModelError::EmptyCoalition);
    }
    let mut out = vec![Vec::with_capacity(coalition.len())];
    for &a in coalition {
        let acts = model.available(s, a);
        let mut next = Vec::with_capacity(out.len() * acts.len());
        for prefix in &out {
            for &x in acts {
                let mut p: Vec<ActionId> = prefix.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out
        .into_iter()
        .map(|actions| JointAction {
            agents: coalition.to_vec(),
            actions,
        })
        .collect())
}

/// `out(s, σ)`: successor states over all completions of `σ`, ascending by
/// declared state order.
pub fn outcomes(model: &GameModel, s: StateId, sigma: &JointAction) -> Result<Vec<StateId>, ModelError> {
    let usable = sigma.agents.len() == sigma.actions.len()
        && sigma
            .agents
            .iter()
            .zip(&sigma.actions)
            .all(|(&a, x)| a.0 < model.n_agents() && model.available(s, a).contains(x));
    if !usable {
        return Err(ModelError::ActionUnavailable {
            state: model.state_name(s).to_string(),
        });
    }
    let mut succ: Vec<StateId> = model
        .completions_of(s, &sigma.agents, &sigma.actions)
        .iter()
        .map(|p| model.successor(s, p))
        .collect();
    succ.sort();
    succ.dedup();
    Ok(succ)
}

/// Whether every coalition member can pay for its part of `σ` from `avail`
/// (indexed like `σ.agents`).
pub fn coalition_affords(model: &GameModel, s: StateId, sigma: &JointAction, avail: &[ResourceVector]) -> bool {
    sigma.actions.iter().zip(avail).all(|(&x, e)| model.affordable(s, x, e))
}

/// States where the coalition has an affordable joint action all of whose
/// outcomes lie in `target`. `budget` is indexed like `coalition`.
pub fn pre(
    model: &GameModel,
    coalition: &[AgentId],
    target: &StateSet,
    budget: &[ResourceVector],
) -> Result<StateSet, ModelError> {
    let mut result = StateSet::empty(model.n_states());
    for s in model.state_ids() {
        for sigma in joint_actions(model, s, coalition)? {
            if !coalition_affords(model, s, &sigma, budget) {
                continue;
            }
            if outcomes(model, s, &sigma)?.iter().all(|&t| target.contains(t)) {
                result.insert(s);
                break;
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn file(json: serde_json::Value) -> ModelFile {
        serde_json::from_value(json).unwrap()
    }

    /// Two states, one agent, `go` switches state, `stay` loops; all costs (-1).
    pub fn m1() -> GameModel {
        GameModel::from_file(file(serde_json::json!({
            "agents": ["1"],
            "resources": ["time"],
            "states": ["s0", "s1"],
            "propositions": {"q": ["s0", "s1"], "p": ["s1"]},
            "actions": {"s0": {"1": ["go", "stay"]}, "s1": {"1": ["go", "stay"]}},
            "costs": {"s0": {"go": [-1], "stay": [-1]}, "s1": {"go": [-1], "stay": [-1]}},
            "transitions": {"s0": {"go": "s1", "stay": "s0"}, "s1": {"go": "s0", "stay": "s1"}}
        })))
        .unwrap()
    }

    /// Agent 1 picks `go`; agent 2's `u`/`v` decide between s1 and s2.
    pub fn two_agents() -> GameModel {
        GameModel::from_file(file(serde_json::json!({
            "agents": ["1", "2"],
            "resources": ["time", "gold", "oil"],
            "states": ["s0", "s1", "s2"],
            "propositions": {},
            "actions": {
                "s0": {"1": ["go", "wait"], "2": ["u", "v"]},
                "s1": {"1": ["wait"], "2": ["u"]},
                "s2": {"1": ["wait"], "2": ["u"]}
            },
            "costs": {
                "s0": {"go": [-1, 2, -3], "wait": [-1, 0, 0], "u": [-2, 0, 0], "v": [-1, 0, 0]},
                "s1": {"wait": [-1, 0, 0], "u": [-1, 0, 0]},
                "s2": {"wait": [-1, 0, 0], "u": [-1, 0, 0]}
            },
            "transitions": {
                "s0": {"go,u": "s1", "go,v": "s2", "wait,u": "s0", "wait,v": "s0"},
                "s1": {"wait,u": "s1"},
                "s2": {"wait,u": "s2"}
            }
        })))
        .unwrap_or_else(|e| panic!("{e}"))
    }
}
