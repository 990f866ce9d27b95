//! Formula syntax shared by the coalition logic with resource bounds and the
//! resource agent logic with endowments.
//!
//! The concrete syntax is fully parenthesised:
//!
//! ```text
//! <{1}:[1=(2)]> X p
//! <{1,2}:[1=(3,0),2=(1,1)]> (q U p)
//! <{1}|{2} down> (false R p)
//! <{1}|{} eta=[1=(2),2=(0)]> X !p
//! ```

mod parse;

use std::collections::HashSet;
use std::fmt;

use crate::model::{Diagnostic, GameModel, ResourceVector};

pub use parse::{parse_allocation, parse_formula, ParseError};

/// Per-agent resource amounts, in written order.
///
/// Annotating a coalition modality it is a bound covering exactly the
/// coalition; as an endowment it covers every agent of the model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Allocation(pub Vec<(String, ResourceVector)>);

pub type Bound = Allocation;
pub type Endowment = Allocation;

impl Allocation {
    pub fn get(&self, agent: &str) -> Option<&ResourceVector> {
        self.0.iter().find(|(a, _)| a == agent).map(|(_, v)| v)
    }

    pub fn agents(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(a, _)| a.as_str())
    }

    /// All-zero allocation for the given agents.
    pub fn zeros<'a>(agents: impl IntoIterator<Item = &'a str>, resources: usize) -> Self {
        Self(
            agents
                .into_iter()
                .map(|a| (a.to_string(), ResourceVector::zeros(resources)))
                .collect(),
        )
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (a, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}={v}")?;
        }
        f.write_str("]")
    }
}

/// Which endowment a resource-agent modality starts from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The resources currently held.
    Down,
    /// A fresh endowment for every agent.
    Fresh(Endowment),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Temporal {
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
}

impl Temporal {
    pub fn operands(&self) -> Vec<&Formula> {
        match self {
            Temporal::Next(f) => vec![f],
            Temporal::Until(l, r) | Temporal::Release(l, r) => vec![l, r],
        }
    }

    fn map(&self, f: impl Fn(&Formula) -> Formula) -> Temporal {
        match self {
            Temporal::Next(x) => Temporal::Next(Box::new(f(x))),
            Temporal::Until(l, r) => Temporal::Until(Box::new(f(l)), Box::new(f(r))),
            Temporal::Release(l, r) => Temporal::Release(Box::new(f(l)), Box::new(f(r))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `<A:b> path`: coalition `A` under bound `b`.
    Coalition {
        coalition: Vec<String>,
        bound: Bound,
        path: Temporal,
    },
    /// `<A|B mode> path`: proponents `A` against resource-bounded opponents `B`.
    Resource {
        proponents: Vec<String>,
        opponents: Vec<String>,
        mode: Mode,
        path: Temporal,
    },
}

/// Which engine family a formula belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Propositional,
    Bounded,
    Endowed,
    Mixed,
}

impl Family {
    fn join(self, other: Family) -> Family {
        use Family::*;
        match (self, other) {
            (Propositional, x) | (x, Propositional) => x,
            (Bounded, Bounded) => Bounded,
            (Endowed, Endowed) => Endowed,
            _ => Mixed,
        }
    }
}

impl Formula {
    pub fn prop(name: &str) -> Self {
        Formula::Prop(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => vec![],
            Formula::Not(f) => vec![f],
            Formula::And(l, r) | Formula::Or(l, r) => vec![l, r],
            Formula::Coalition { path, .. } | Formula::Resource { path, .. } => path.operands(),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Maximum nesting depth of modalities.
    pub fn modal_depth(&self) -> usize {
        let inner = self.children().iter().map(|c| c.modal_depth()).max().unwrap_or(0);
        match self {
            Formula::Coalition { .. } | Formula::Resource { .. } => inner + 1,
            _ => inner,
        }
    }

    pub fn family(&self) -> Family {
        let own = match self {
            Formula::Coalition { .. } => Family::Bounded,
            Formula::Resource { .. } => Family::Endowed,
            _ => Family::Propositional,
        };
        self.children().iter().fold(own, |acc, c| acc.join(c.family()))
    }

    /// Proponents and opponents of the outermost modality, empty otherwise.
    pub fn outer_coalitions(&self) -> (&[String], &[String]) {
        match self {
            Formula::Resource {
                proponents, opponents, ..
            } => (proponents, opponents),
            Formula::Coalition { coalition, .. } => (coalition, &[]),
            _ => (&[], &[]),
        }
    }

    /// Rewrites every bounded modality `<A:b>` as `<A|{} eta=ζ>`, where `ζ`
    /// extends `b` with `filler` for agents outside `A`.
    pub fn to_fresh_endowment(&self, agents: &[String], filler: &ResourceVector) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.to_fresh_endowment(agents, filler)),
            Formula::And(l, r) => Formula::and(
                l.to_fresh_endowment(agents, filler),
                r.to_fresh_endowment(agents, filler),
            ),
            Formula::Or(l, r) => Formula::or(
                l.to_fresh_endowment(agents, filler),
                r.to_fresh_endowment(agents, filler),
            ),
            Formula::Coalition { coalition, bound, path } => {
                let zeta = Allocation(
                    agents
                        .iter()
                        .map(|a| (a.clone(), bound.get(a).cloned().unwrap_or_else(|| filler.clone())))
                        .collect(),
                );
                Formula::Resource {
                    proponents: coalition.clone(),
                    opponents: vec![],
                    mode: Mode::Fresh(zeta),
                    path: path.map(|f| f.to_fresh_endowment(agents, filler)),
                }
            }
            Formula::Resource {
                proponents,
                opponents,
                mode,
                path,
            } => Formula::Resource {
                proponents: proponents.clone(),
                opponents: opponents.clone(),
                mode: mode.clone(),
                path: path.map(|f| f.to_fresh_endowment(agents, filler)),
            },
        }
    }
}

fn write_coalition(f: &mut fmt::Formatter<'_>, agents: &[String]) -> fmt::Result {
    write!(f, "{{{}}}", agents.join(","))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(p) => f.write_str(p),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::Coalition { coalition, bound, path } => {
                f.write_str("<")?;
                write_coalition(f, coalition)?;
                write!(f, ":{bound}> {path}")
            }
            Formula::Resource {
                proponents,
                opponents,
                mode,
                path,
            } => {
                f.write_str("<")?;
                write_coalition(f, proponents)?;
                f.write_str("|")?;
                write_coalition(f, opponents)?;
                match mode {
                    Mode::Down => f.write_str(" down")?,
                    Mode::Fresh(e) => write!(f, " eta={e}")?,
                }
                write!(f, "> {path}")
            }
        }
    }
}

impl fmt::Display for Temporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temporal::Next(x) => write!(f, "X {x}"),
            Temporal::Until(l, r) => write!(f, "({l} U {r})"),
            Temporal::Release(l, r) => write!(f, "({l} R {r})"),
        }
    }
}

/// Every distinct subformula, each listed after all of its proper subformulas.
pub fn subformulas(phi: &Formula) -> Vec<&Formula> {
    fn visit<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>, out: &mut Vec<&'a Formula>) {
        if seen.contains(f) {
            return;
        }
        for c in f.children() {
            visit(c, seen, out);
        }
        seen.insert(f);
        out.push(f);
    }
    let mut out = Vec::new();
    visit(phi, &mut HashSet::new(), &mut out);
    out
}

/// Checks a formula against a model's vocabulary. An empty result means the
/// formula can be handed to the engine of its family.
pub fn validate_formula(phi: &Formula, model: &GameModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if phi.family() == Family::Mixed {
        diags.push(Diagnostic::new(
            "mixed logic families: bounded <A:b> and endowed <A|B ...> modalities cannot be combined",
        ));
    }
    check(phi, model, &mut diags);
    diags
}

fn check_agents(kind: &str, agents: &[String], model: &GameModel, allow_empty: bool, diags: &mut Vec<Diagnostic>) {
    if agents.is_empty() && !allow_empty {
        diags.push(Diagnostic::new(format!("empty {kind} coalition rejected")));
    }
    let mut seen = HashSet::new();
    for a in agents {
        if model.agent_id(a).is_none() {
            diags.push(Diagnostic::new(format!("unknown agent {a:?} in {kind} coalition")));
        }
        if !seen.insert(a) {
            diags.push(Diagnostic::new(format!("agent {a:?} listed twice in {kind} coalition")));
        }
    }
}

fn check_allocation(
    kind: &str,
    alloc: &Allocation,
    expected: &[String],
    model: &GameModel,
    diags: &mut Vec<Diagnostic>,
) {
    let r = model.n_resources();
    for (a, v) in &alloc.0 {
        if !expected.contains(a) {
            diags.push(Diagnostic::new(format!(
                "{kind} mentions agent {a:?} outside its domain"
            )));
        }
        if v.len() != r {
            diags.push(Diagnostic::new(format!(
                "{kind} for agent {a:?} has length {} but the model has {r} resources",
                v.len()
            )));
        }
        if !v.is_non_negative() {
            diags.push(Diagnostic::new(format!("{kind} for agent {a:?} has a negative amount")));
        }
    }
    for a in expected {
        match alloc.0.iter().filter(|(b, _)| b == a).count() {
            0 => diags.push(Diagnostic::new(format!("{kind} does not cover agent {a:?}"))),
            1 => {}
            _ => diags.push(Diagnostic::new(format!("{kind} lists agent {a:?} twice"))),
        }
    }
}

fn check(phi: &Formula, model: &GameModel, diags: &mut Vec<Diagnostic>) {
    match phi {
        Formula::Prop(p) if model.proposition(p).is_none() => {
            diags.push(Diagnostic::new(format!("undeclared proposition {p:?}")));
        }
        Formula::Coalition { coalition, bound, .. } => {
            check_agents("proponent", coalition, model, false, diags);
            check_allocation("bound", bound, coalition, model, diags);
        }
        Formula::Resource {
            proponents,
            opponents,
            mode,
            ..
        } => {
            check_agents("proponent", proponents, model, false, diags);
            check_agents("opponent", opponents, model, true, diags);
            if let Mode::Fresh(e) = mode {
                check_allocation("endowment", e, model.agent_names(), model, diags);
            }
        }
        _ => {}
    }
    for c in phi.children() {
        check(c, model, diags);
    }
}

/// Checks an endowment given outside a formula (e.g. on the command line).
pub fn validate_endowment(eta: &Endowment, model: &GameModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    check_allocation("endowment", eta, model.agent_names(), model, &mut diags);
    diags
}
