//! Differential fuzzing of the engines against the oracle.

use rand::Rng;
use rayon::prelude::*;

use super::generate::{instance_seed, random_model, FormulaGen, GenParams};
use super::{Oracle, OracleError, Semantics};
use crate::formula::{Allocation, Formula, Temporal};
use crate::imperfect::{initial_states, ImperfectChecker};
use crate::model::{GameModel, ResourceVector, StateSet};
use crate::perfect::{Mutation, PerfectChecker};
use crate::ral::RalChecker;
use crate::search::resolve_agents;

/// Modal nesting of generated queries.
pub const NESTING: usize = 2;

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    /// `params.seed` is the batch seed.
    pub params: GenParams,
    pub count: u64,
    pub mutation: Option<Mutation>,
    pub oracle_limit: u128,
}

impl FuzzConfig {
    pub fn new(params: GenParams, count: u64) -> Self {
        Self {
            params,
            count,
            mutation: None,
            oracle_limit: super::DEFAULT_LIMIT,
        }
    }
}

/// A state on which an engine and its reference disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub index: u64,
    pub seed: u64,
    pub check: &'static str,
    pub formula: String,
    pub state: String,
    pub engine: bool,
    pub reference: bool,
}

/// One manifest row: a query, and the satisfying sets found by the engine
/// and by its reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestLine {
    pub index: u64,
    pub seed: u64,
    pub check: &'static str,
    pub formula: String,
    pub engine: String,
    pub reference: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub instances: u64,
    pub queries: u64,
    pub params: String,
    /// Engine/oracle disagreements (perfect, imperfect and resource engines).
    pub disagreements: Vec<Disagreement>,
    /// Imperfect engine on identity relations against the perfect engine.
    pub identity_mismatches: Vec<Disagreement>,
    /// Fresh-endowment translation against the perfect engine.
    pub fragment_mismatches: Vec<Disagreement>,
    /// Zero-bound Next that holds somewhere, or zero-bound Release that
    /// differs from its right operand.
    pub degenerate_violations: Vec<Disagreement>,
    pub depth_violations: u64,
    pub closed_violations: u64,
    pub uniformity_violations: u64,
    pub length_violations: u64,
    pub refusals: Vec<String>,
    pub max_depth: usize,
    pub manifest: Vec<ManifestLine>,
}

impl FuzzReport {
    pub fn clean(&self) -> bool {
        self.disagreements.is_empty()
            && self.identity_mismatches.is_empty()
            && self.fragment_mismatches.is_empty()
            && self.degenerate_violations.is_empty()
            && self.depth_violations == 0
            && self.closed_violations == 0
            && self.uniformity_violations == 0
            && self.length_violations == 0
            && self.refusals.is_empty()
    }

    fn merge(&mut self, other: FuzzReport) {
        self.instances += other.instances;
        self.queries += other.queries;
        self.disagreements.extend(other.disagreements);
        self.identity_mismatches.extend(other.identity_mismatches);
        self.fragment_mismatches.extend(other.fragment_mismatches);
        self.degenerate_violations.extend(other.degenerate_violations);
        self.depth_violations += other.depth_violations;
        self.closed_violations += other.closed_violations;
        self.uniformity_violations += other.uniformity_violations;
        self.length_violations += other.length_violations;
        self.refusals.extend(other.refusals);
        self.max_depth = self.max_depth.max(other.max_depth);
        self.manifest.extend(other.manifest);
    }

    /// Tab-separated manifest with a header row.
    pub fn manifest_tsv(&self) -> String {
        let mut out = String::from("index\tseed\tparams\tcheck\tformula\tengine\treference\n");
        for l in &self.manifest {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                l.index, l.seed, self.params, l.check, l.formula, l.engine, l.reference
            ));
        }
        out
    }
}

fn names(model: &GameModel, set: &StateSet) -> String {
    set.iter().map(|s| model.state_name(s)).collect::<Vec<_>>().join(",")
}

struct Instance<'a> {
    index: u64,
    seed: u64,
    model: &'a GameModel,
    report: FuzzReport,
}

impl Instance<'_> {
    fn compare(
        &mut self,
        check: &'static str,
        formula: &Formula,
        engine: &StateSet,
        reference: &StateSet,
    ) -> Vec<Disagreement> {
        self.report.queries += 1;
        self.report.manifest.push(ManifestLine {
            index: self.index,
            seed: self.seed,
            check,
            formula: formula.to_string(),
            engine: names(self.model, engine),
            reference: names(self.model, reference),
        });
        self.model
            .state_ids()
            .filter(|&s| engine.contains(s) != reference.contains(s))
            .map(|s| Disagreement {
                index: self.index,
                seed: self.seed,
                check,
                formula: formula.to_string(),
                state: self.model.state_name(s).to_string(),
                engine: engine.contains(s),
                reference: reference.contains(s),
            })
            .collect()
    }

    fn oracle(
        &mut self,
        semantics: Semantics,
        limit: u128,
        phi: &Formula,
        eta: Option<&Allocation>,
    ) -> Option<StateSet> {
        let o = Oracle::new(self.model, semantics).with_limit(limit);
        let result = o.satisfying(phi, eta);
        self.report.length_violations += o.stats().length_violations;
        match result {
            Ok(set) => Some(set),
            Err(OracleError::TooLarge { candidates, .. }) => {
                self.report
                    .refusals
                    .push(format!("instance {} ({phi}): {candidates} candidates", self.index));
                None
            }
            Err(e) => panic!("generated query rejected: {e}"),
        }
    }
}

fn with_zero_bound(model: &GameModel, coalition: &[String], path: Temporal) -> Formula {
    Formula::Coalition {
        coalition: coalition.to_vec(),
        bound: Allocation::zeros(coalition.iter().map(String::as_str), model.n_resources()),
        path,
    }
}

fn run_instance(config: &FuzzConfig, index: u64) -> FuzzReport {
    let seed = instance_seed(config.params.seed, index);
    let params = GenParams {
        seed,
        ensure_production: index.is_multiple_of(10),
        ..config.params.clone()
    };
    let model = random_model(&params);
    let mut gen = FormulaGen::new(&model, config.params.max_bound, seed ^ 0x5eed);
    let mut inst = Instance {
        index,
        seed,
        model: &model,
        report: FuzzReport {
            instances: 1,
            ..Default::default()
        },
    };
    let limit = config.oracle_limit;

    // Every fifth instance gets an all-zero outer bound so that run-out
    // branches are exercised.
    let phi = if index.is_multiple_of(5) {
        gen.modality(NESTING, true)
    } else {
        gen.query(NESTING, false)
    };

    let mut perfect = PerfectChecker::new(&model).with_mutation(config.mutation);
    let labels = perfect.label(&phi).expect("generated formulas validate");
    let p_set = labels.root().expect("non-empty").clone();
    inst.report.depth_violations += perfect.stats().depth_violations;
    inst.report.max_depth = inst.report.max_depth.max(perfect.stats().max_depth);
    if let Some(o) = inst.oracle(Semantics::Perfect, limit, &phi, None) {
        let d = inst.compare("perfect", &phi, &p_set, &o);
        inst.report.disagreements.extend(d);
    }

    let mut imperfect = ImperfectChecker::new(&model);
    let i_set = imperfect
        .label(&phi)
        .expect("generated formulas validate")
        .root()
        .expect("non-empty")
        .clone();
    let st = imperfect.stats();
    inst.report.depth_violations += st.depth_violations;
    inst.report.closed_violations += st.closed_violations;
    inst.report.uniformity_violations += st.uniformity_violations;
    if let Some(o) = inst.oracle(Semantics::Uniform, limit, &phi, None) {
        let d = inst.compare("imperfect", &phi, &i_set, &o);
        inst.report.disagreements.extend(d);
    }

    let identity = model.with_identity_indist();
    let mut id_checker = ImperfectChecker::new(&identity);
    let id_set = id_checker
        .label(&phi)
        .expect("generated formulas validate")
        .root()
        .expect("non-empty")
        .clone();
    inst.report.depth_violations += id_checker.stats().depth_violations;
    let d = inst.compare("identity", &phi, &id_set, &p_set);
    inst.report.identity_mismatches.extend(d);

    let filler = ResourceVector::zeros(model.n_resources());
    let translated = phi.to_fresh_endowment(model.agent_names(), &filler);
    let eta = gen.endowment();
    let mut ral = RalChecker::new(&model);
    let f_set = ral.check(&translated, &eta).expect("translated formulas validate");
    inst.report.depth_violations += ral.stats().depth_violations;
    let d = inst.compare("fragment", &translated, &f_set, &p_set);
    inst.report.fragment_mismatches.extend(d);

    let psi = gen.query(NESTING, true);
    let eta = gen.endowment();
    let mut ral = RalChecker::new(&model);
    let r_set = ral.check(&psi, &eta).expect("generated formulas validate");
    inst.report.depth_violations += ral.stats().depth_violations;
    inst.report.max_depth = inst.report.max_depth.max(ral.stats().max_depth);
    if let Some(o) = inst.oracle(Semantics::Resource, limit, &psi, Some(&eta)) {
        let d = inst.compare("ral", &psi, &r_set, &o);
        inst.report.disagreements.extend(d);
    }

    degenerate(&mut inst, &mut gen, config, limit);
    inst.report
}

/// Zero-bound laws on every state of the instance.
fn degenerate(inst: &mut Instance<'_>, gen: &mut FormulaGen<'_>, config: &FuzzConfig, limit: u128) {
    let model = inst.model;
    let agents: Vec<String> = model
        .agent_names()
        .iter()
        .filter(|_| gen.rng().gen_bool(0.5))
        .cloned()
        .collect();
    let coalition = if agents.is_empty() {
        vec![model.agent_names()[0].clone()]
    } else {
        agents
    };
    let phi = gen.formula(1, false);
    let psi = gen.formula(1, false);
    let next = with_zero_bound(model, &coalition, Temporal::Next(Box::new(phi.clone())));
    let release = with_zero_bound(
        model,
        &coalition,
        Temporal::Release(Box::new(phi), Box::new(psi.clone())),
    );
    let ids = resolve_agents(model, &coalition);

    let label = |f: &Formula| -> (StateSet, StateSet) {
        let mut p = PerfectChecker::new(model).with_mutation(config.mutation);
        let mut i = ImperfectChecker::new(model);
        let perfect = p.label(f).expect("valid").root().expect("non-empty").clone();
        let imperfect = i.label(f).expect("valid").root().expect("non-empty").clone();
        (perfect, imperfect)
    };

    let empty = StateSet::empty(model.n_states());
    let (p_next, i_next) = label(&next);
    let o_next = inst
        .oracle(Semantics::Perfect, limit, &next, None)
        .unwrap_or_else(|| empty.clone());
    for (set, check) in [
        (&p_next, "degenerate-next-perfect"),
        (&i_next, "degenerate-next-imperfect"),
        (&o_next, "degenerate-next-oracle"),
    ] {
        let d = inst.compare(check, &next, set, &empty);
        inst.report.degenerate_violations.extend(d);
    }

    let (p_rel, i_rel) = label(&release);
    let (psi_set, psi_uniform) = label(&psi);
    let o_rel = inst
        .oracle(Semantics::Perfect, limit, &release, None)
        .unwrap_or_else(|| psi_set.clone());
    for (set, check) in [
        (&p_rel, "degenerate-release-perfect"),
        (&o_rel, "degenerate-release-oracle"),
    ] {
        let d = inst.compare(check, &release, set, &psi_set);
        inst.report.degenerate_violations.extend(d);
    }
    // Under strong uniformity the run must start from every indistinguishable
    // state, so the operand has to hold on all of them.
    let mut widened = StateSet::empty(model.n_states());
    for s in model.state_ids() {
        if initial_states(model, &ids, s).iter().all(|&t| psi_uniform.contains(t)) {
            widened.insert(s);
        }
    }
    let d = inst.compare("degenerate-release-imperfect", &release, &i_rel, &widened);
    inst.report.degenerate_violations.extend(d);
}

/// Runs `config.count` instances in parallel; the report lists them in
/// instance order.
pub fn fuzz(config: &FuzzConfig) -> FuzzReport {
    let parts: Vec<FuzzReport> = (0..config.count)
        .into_par_iter()
        .map(|i| run_instance(config, i))
        .collect();
    let mut report = FuzzReport {
        params: config.params.summary(),
        ..Default::default()
    };
    for p in parts {
        report.merge(p);
    }
    report
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonotonicityReport {
    pub checked: u64,
    /// `(seed, formula at b, formula at b')` where a state lost the property.
    pub violations: Vec<(u64, String, String)>,
}

/// Samples `(instance, formula, b <= b')` triples for Next and Until and
/// checks that raising the bound never removes a satisfying state, for both
/// the perfect engine and the oracle.
pub fn monotonicity(params: &GenParams, samples: u64) -> MonotonicityReport {
    let results: Vec<Option<(u64, String, String)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = instance_seed(params.seed ^ 0x6d6f_6e6f, i);
            let model = random_model(&GenParams { seed, ..params.clone() });
            let mut gen = FormulaGen::new(&model, params.max_bound, seed);
            let coalition: Vec<String> = {
                let pick: Vec<String> = model
                    .agent_names()
                    .iter()
                    .filter(|_| gen.rng().gen_bool(0.5))
                    .cloned()
                    .collect();
                if pick.is_empty() {
                    vec![model.agent_names()[0].clone()]
                } else {
                    pick
                }
            };
            let path = if i % 2 == 0 {
                Temporal::Next(Box::new(gen.formula(1, false)))
            } else {
                Temporal::Until(Box::new(gen.formula(1, false)), Box::new(gen.formula(1, false)))
            };
            let r = model.n_resources();
            let mut low = Vec::new();
            let mut high = Vec::new();
            for a in &coalition {
                let b: Vec<i64> = (0..r).map(|_| gen.rng().gen_range(0..=params.max_bound)).collect();
                let b2: Vec<i64> = b
                    .iter()
                    .map(|&x| x + gen.rng().gen_range(0..=params.max_bound - x.min(params.max_bound)))
                    .collect();
                low.push((a.clone(), ResourceVector(b)));
                high.push((a.clone(), ResourceVector(b2)));
            }
            let f = |bound: Vec<(String, ResourceVector)>| Formula::Coalition {
                coalition: coalition.clone(),
                bound: Allocation(bound),
                path: path.clone(),
            };
            let (f_low, f_high) = (f(low), f(high));
            let engine = |g: &Formula| {
                PerfectChecker::new(&model)
                    .label(g)
                    .expect("valid")
                    .root()
                    .expect("non-empty")
                    .clone()
            };
            let oracle = |g: &Formula| {
                Oracle::new(&model, Semantics::Perfect)
                    .satisfying(g, None)
                    .expect("small instance")
            };
            let ok = engine(&f_low).is_subset(&engine(&f_high)) && oracle(&f_low).is_subset(&oracle(&f_high));
            (!ok).then(|| (seed, f_low.to_string(), f_high.to_string()))
        })
        .collect();
    MonotonicityReport {
        checked: samples,
        violations: results.into_iter().flatten().collect(),
    }
}
