//! Model checking for resource logics over concurrent game structures in
//! which every action consumes at least one unit of a diminishing resource.
//!
//! Three engines are provided:
//!
//! * [`perfect`]: coalition modalities with resource bounds under perfect information;
//! * [`imperfect`]: the same logic with imperfect information, perfect recall and
//!   strongly uniform strategies;
//! * [`ral`]: resource agent logic, where modalities either start from a fresh
//!   endowment or continue with the resources currently held.
//!
//! [`oracle`] holds brute-force evaluators of the satisfaction relations used to
//! cross-check the engines, plus the random instance generator and fuzz driver.

pub mod formula;
pub mod imperfect;
pub mod model;
pub mod oracle;
pub mod perfect;
pub mod ral;
pub mod search;

pub use formula::{
    parse_allocation, parse_formula, subformulas, validate_endowment, validate_formula, Allocation, Bound, Endowment,
    Family, Formula, Mode, ParseError, Temporal,
};
pub use imperfect::{label_i, ImperfectChecker};
pub use model::{
    decompose_cost, joint_actions, outcomes, pre, validate_model, ActionId, AgentId, Diagnostic, GameModel,
    JointAction, ModelError, ModelFile, ResourceVector, StateId, StateSet,
};
pub use oracle::fuzz::{fuzz, monotonicity, FuzzConfig, FuzzReport};
pub use oracle::generate::{random_model, FormulaGen, GenParams};
pub use oracle::{
    holds_semantics, holds_semantics_ral, holds_semantics_uniform, Oracle, OracleError, OracleStats, Semantics,
};
pub use perfect::{label, Mutation, PerfectChecker};
pub use ral::{ral_check, RalChecker};
pub use search::{CheckError, LabelMap, SearchStats};
