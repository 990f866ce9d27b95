use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use rbmc_core::{
    fuzz, parse_allocation, parse_formula, subformulas, validate_model, CheckError, Endowment, Formula, FuzzConfig,
    GameModel, GenParams, ImperfectChecker, ModelError, ModelFile, Mutation, Oracle, OracleError, PerfectChecker,
    RalChecker, Semantics, StateSet,
};

#[derive(Parser)]
#[command(
    name = "rbmc",
    version,
    about = "Model checker for resource-bounded coalition logics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file for well-formedness.
    Validate { model: PathBuf },
    /// Label a formula with one of the engines.
    Check(Request),
    /// Evaluate a formula by brute-force strategy enumeration.
    Oracle(Request),
    /// Compare the engines with the oracle on random instances.
    Fuzz(FuzzArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Perfect,
    Imperfect,
    Ral,
}

#[derive(Args)]
struct Request {
    #[arg(long)]
    model: PathBuf,
    /// Formula text, or `@path` to read it from a file.
    #[arg(long)]
    formula: String,
    #[arg(long, value_enum)]
    engine: Engine,
    /// Initial endowment of every agent (resource agent logic only).
    #[arg(long)]
    endowment: Option<String>,
    /// Print one JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    ReleaseRunout,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    count: u64,
    #[arg(long, default_value_t = 4)]
    max_states: usize,
    #[arg(long, default_value_t = 2)]
    max_agents: usize,
    #[arg(long, default_value_t = 2)]
    max_actions: usize,
    #[arg(long, default_value_t = 2)]
    max_resources: usize,
    #[arg(long, default_value_t = 2)]
    max_cost: i64,
    #[arg(long, default_value_t = 3)]
    max_bound: i64,
    /// Write a tab-separated record of every query to this file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    mutate: Option<MutationArg>,
}

/// A failed command: exit status and message for stderr.
struct Failure(u8, String);

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        Failure(2, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => Failure(4, e.to_string()),
            OracleError::Check(c) => c.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(3, format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<GameModel, Failure> {
    let raw = ModelFile::from_json(&read(path)?).map_err(|e| Failure(3, format!("{}: {e}", path.display())))?;
    GameModel::from_file(raw).map_err(|e| match e {
        ModelError::Json(_) => Failure(3, e.to_string()),
        _ => Failure(2, e.to_string()),
    })
}

fn validate(path: &Path) -> Result<u8, Failure> {
    let raw = ModelFile::from_json(&read(path)?).map_err(|e| Failure(3, format!("{}: {e}", path.display())))?;
    let diags = validate_model(&raw);
    for d in &diags {
        println!("{d}");
    }
    Ok(if diags.is_empty() { 0 } else { 2 })
}

struct Outcome {
    engine: &'static str,
    formula: Formula,
    satisfying: StateSet,
    per_subformula: Option<Vec<(String, StateSet)>>,
    max_depth: usize,
    nodes_expanded: u64,
}

fn parse_request(req: &Request) -> Result<(GameModel, Formula, Option<Endowment>), Failure> {
    let model = load_model(&req.model)?;
    let text = match req.formula.strip_prefix('@') {
        Some(path) => read(Path::new(path))?,
        None => req.formula.clone(),
    };
    let formula = parse_formula(&text).map_err(|e| Failure(2, format!("formula: {e}")))?;
    let endowment = match (req.engine, &req.endowment) {
        (Engine::Ral, None) => return Err(Failure(2, "the ral engine needs --endowment".into())),
        (Engine::Ral, Some(t)) => Some(parse_allocation(t).map_err(|e| Failure(2, format!("endowment: {e}")))?),
        (_, Some(_)) => return Err(Failure(2, "--endowment applies to the ral engine only".into())),
        (_, None) => None,
    };
    Ok((model, formula, endowment))
}

fn run_check(req: &Request) -> Result<(GameModel, Outcome), Failure> {
    let (model, formula, eta) = parse_request(req)?;
    let outcome = match req.engine {
        Engine::Perfect | Engine::Imperfect => {
            let (labels, stats, engine) = if matches!(req.engine, Engine::Perfect) {
                let mut c = PerfectChecker::new(&model);
                let labels = c.label(&formula)?;
                (labels, c.stats().clone(), "perfect")
            } else {
                let mut c = ImperfectChecker::new(&model);
                let labels = c.label(&formula)?;
                (labels, c.stats().clone(), "imperfect")
            };
            Outcome {
                engine,
                satisfying: labels.get(&formula).expect("root is labelled").clone(),
                per_subformula: Some(labels.iter().map(|(f, s)| (f.to_string(), s.clone())).collect()),
                formula,
                max_depth: stats.max_depth,
                nodes_expanded: stats.nodes_expanded,
            }
        }
        Engine::Ral => {
            let mut c = RalChecker::new(&model);
            let satisfying = c.check(&formula, eta.as_ref().expect("checked above"))?;
            let stats = c.stats().clone();
            Outcome {
                engine: "ral",
                formula,
                satisfying,
                per_subformula: None,
                max_depth: stats.max_depth,
                nodes_expanded: stats.nodes_expanded,
            }
        }
    };
    Ok((model, outcome))
}

fn run_oracle(req: &Request) -> Result<(GameModel, Outcome), Failure> {
    let (model, formula, eta) = parse_request(req)?;
    let (semantics, engine) = match req.engine {
        Engine::Perfect => (Semantics::Perfect, "oracle-perfect"),
        Engine::Imperfect => (Semantics::Uniform, "oracle-imperfect"),
        Engine::Ral => (Semantics::Resource, "oracle-ral"),
    };
    let oracle = Oracle::new(&model, semantics);
    let satisfying = oracle.satisfying(&formula, eta.as_ref())?;
    let per_subformula = match req.engine {
        Engine::Ral => None,
        _ => {
            let mut rows = Vec::new();
            for f in subformulas(&formula) {
                rows.push((f.to_string(), oracle.satisfying(f, None)?));
            }
            Some(rows)
        }
    };
    let stats = oracle.stats();
    let outcome = Outcome {
        engine,
        formula,
        satisfying,
        per_subformula,
        max_depth: stats.max_length,
        nodes_expanded: stats.trees,
    };
    Ok((model, outcome))
}

fn names(model: &GameModel, set: &StateSet) -> Vec<String> {
    let mut v: Vec<String> = set.iter().map(|s| model.state_name(s).to_string()).collect();
    v.sort();
    v
}

fn render(model: &GameModel, o: &Outcome, as_json: bool) -> String {
    let states = names(model, &o.satisfying);
    if !as_json {
        let mut out = format!("{}: {}\n", o.engine, o.formula);
        out.push_str(&format!("satisfying states: {{{}}}\n", states.join(", ")));
        if let Some(rows) = &o.per_subformula {
            for (f, set) in rows {
                out.push_str(&format!("  {f}: {{{}}}\n", names(model, set).join(", ")));
            }
        }
        out.push_str(&format!(
            "max depth {}, nodes expanded {}\n",
            o.max_depth, o.nodes_expanded
        ));
        return out;
    }
    let mut doc = Map::new();
    doc.insert("formula".into(), json!(o.formula.to_string()));
    doc.insert("engine".into(), json!(o.engine));
    doc.insert("satisfying_states".into(), json!(states));
    if let Some(rows) = &o.per_subformula {
        let per: Map<String, Value> = rows
            .iter()
            .map(|(f, set)| (f.clone(), json!(names(model, set))))
            .collect();
        doc.insert("per_subformula".into(), Value::Object(per));
    }
    doc.insert(
        "stats".into(),
        json!({"max_depth": o.max_depth, "nodes_expanded": o.nodes_expanded}),
    );
    format!("{}\n", Value::Object(doc))
}

fn evaluate(req: &Request, oracle: bool) -> Result<u8, Failure> {
    let (model, outcome) = if oracle { run_oracle(req)? } else { run_check(req)? };
    print!("{}", render(&model, &outcome, req.json));
    Ok(if outcome.satisfying.is_empty() { 1 } else { 0 })
}

fn run_fuzz(args: &FuzzArgs) -> Result<u8, Failure> {
    if args.count == 0 {
        return Err(Failure(2, "--count must be at least 1".into()));
    }
    let params = GenParams {
        seed: args.seed,
        max_states: args.max_states,
        max_agents: args.max_agents,
        max_actions_per_agent: args.max_actions,
        max_resources: args.max_resources,
        max_cost_magnitude: args.max_cost,
        max_bound: args.max_bound,
        ensure_production: false,
    };
    params.validate().map_err(|e| Failure(2, e))?;
    let mut config = FuzzConfig::new(params, args.count);
    config.mutation = args
        .mutate
        .map(|MutationArg::ReleaseRunout| Mutation::SkipReleaseRunOut);
    let report = fuzz(&config);
    if let Some(path) = &args.manifest {
        fs::write(path, report.manifest_tsv()).map_err(|e| Failure(3, format!("{}: {e}", path.display())))?;
    }
    println!(
        "instances {} queries {} max depth {}",
        report.instances, report.queries, report.max_depth
    );
    let groups = [
        ("disagreements", "disagreement", &report.disagreements),
        ("identity mismatches", "identity mismatch", &report.identity_mismatches),
        ("fragment mismatches", "fragment mismatch", &report.fragment_mismatches),
        (
            "degenerate-law violations",
            "degenerate-law violation",
            &report.degenerate_violations,
        ),
    ];
    for (heading, label, list) in groups {
        println!("{heading} {}", list.len());
        for d in list {
            println!(
                "  {label}: instance {} seed {} [{}] {} at {}: engine {} reference {}",
                d.index, d.seed, d.check, d.formula, d.state, d.engine, d.reference
            );
        }
    }
    println!(
        "depth violations {} closed-list violations {} uniformity violations {} length violations {}",
        report.depth_violations, report.closed_violations, report.uniformity_violations, report.length_violations
    );
    println!("oracle refusals {}", report.refusals.len());
    for r in &report.refusals {
        println!("  refusal: {r}");
    }
    Ok(if report.clean() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { model } => validate(model),
        Command::Check(req) => evaluate(req, false),
        Command::Oracle(req) => evaluate(req, true),
        Command::Fuzz(args) => run_fuzz(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
