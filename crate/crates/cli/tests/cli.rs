use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn rbmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn states(out: &Output) -> Vec<String> {
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
    serde_json::from_value(doc["satisfying_states"].clone()).unwrap()
}

fn check(cmd: &str, model: &str, formula: &str, engine: &str, extra: &[&str]) -> Output {
    let model = data(model);
    let mut args = vec![
        cmd,
        "--model",
        &model,
        "--formula",
        formula,
        "--engine",
        engine,
        "--json",
    ];
    args.extend_from_slice(extra);
    rbmc(&args)
}

#[test]
fn validate_exit_codes() {
    let ok = rbmc(&["validate", &data("m1.json")]);
    assert_eq!(code(&ok), 0);
    assert!(ok.stdout.is_empty());

    let bad = rbmc(&["validate", &data("zero_cost.json")]);
    assert_eq!(code(&bad), 2);
    assert!(stdout(&bad).contains("diminishing"));

    assert_eq!(code(&rbmc(&["validate", &data("missing.json")])), 3);
}

#[test]
fn malformed_json_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"agents\": [").unwrap();
    assert_eq!(code(&rbmc(&["validate", path.to_str().unwrap()])), 3);
    let out = rbmc(&[
        "check",
        "--model",
        path.to_str().unwrap(),
        "--formula",
        "p",
        "--engine",
        "perfect",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn check_until_on_m1() {
    let out = check("check", "m1.json", "<{1}:[1=(2)]> (q U p)", "perfect", &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(states(&out), ["s0", "s1"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["engine"], "perfect");
    assert_eq!(doc["per_subformula"]["p"], serde_json::json!(["s1"]));
    assert!(doc["stats"]["max_depth"].as_u64().unwrap() <= 3);
}

#[test]
fn empty_result_exits_one() {
    let out = check("check", "m1.json", "<{1}:[1=(0)]> X p", "perfect", &[]);
    assert_eq!(code(&out), 1);
    assert!(states(&out).is_empty());
}

#[test]
fn request_errors_exit_two() {
    let m1 = data("m1.json");
    let ral = rbmc(&[
        "check",
        "--model",
        &m1,
        "--formula",
        "<{1}|{} down> X p",
        "--engine",
        "ral",
    ]);
    assert_eq!(code(&ral), 2);
    let stray = check(
        "check",
        "m1.json",
        "<{1}:[1=(1)]> X p",
        "perfect",
        &["--endowment", "[1=(1)]"],
    );
    assert_eq!(code(&stray), 2);
    let family = check("check", "m1.json", "<{1}|{} down> X p", "perfect", &[]);
    assert_eq!(code(&family), 2);
    let syntax = check("check", "m1.json", "<{1}:[1=(1)] X p", "perfect", &[]);
    assert_eq!(code(&syntax), 2);
    let unknown = check("check", "m1.json", "<{1}:[1=(1)]> X r", "perfect", &[]);
    assert_eq!(code(&unknown), 2);
}

#[test]
fn formula_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.txt");
    std::fs::write(&path, "<{1}:[1=(2)]> (q U p)\n").unwrap();
    let arg = format!("@{}", path.display());
    let out = check("check", "m1.json", &arg, "perfect", &[]);
    assert_eq!(states(&out), ["s0", "s1"]);
    assert_eq!(
        code(&check("check", "m1.json", "@/nonexistent/q.txt", "perfect", &[])),
        3
    );
}

#[test]
fn ral_engine_output_has_no_label_map() {
    let out = check(
        "check",
        "m1.json",
        "<{1}|{} down> X p",
        "ral",
        &["--endowment", "[1=(1)]"],
    );
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc.get("per_subformula").is_none());
    assert_eq!(doc["engine"], "ral");
}

#[test]
fn oracle_matches_check_on_m1() {
    let f = "<{1}:[1=(2)]> (q U p)";
    let engine = check("check", "m1.json", f, "perfect", &[]);
    let oracle = check("oracle", "m1.json", f, "perfect", &[]);
    assert_eq!(states(&engine), states(&oracle));
    let doc: serde_json::Value = serde_json::from_slice(&oracle.stdout).unwrap();
    assert_eq!(doc["engine"], "oracle-perfect");
}

#[test]
fn oracle_release_on_m2() {
    let out = check("oracle", "m2.json", "<{1}:[1=(1)]> (false R p)", "perfect", &[]);
    assert_eq!(states(&out), ["s0"]);
    let out = check("oracle", "m2.json", "<{1}:[1=(2)]> (false R p)", "perfect", &[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn oracle_refuses_large_instances() {
    let out = check("oracle", "wide.json", "<{1}:[1=(6)]> (true U p)", "perfect", &[]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategy candidates"));
}

#[test]
fn text_output() {
    let out = rbmc(&[
        "check",
        "--model",
        &data("m1.json"),
        "--formula",
        "<{1}:[1=(2)]> (q U p)",
        "--engine",
        "perfect",
    ]);
    let text = stdout(&out);
    assert!(text.contains("satisfying states: {s0, s1}"));
}

#[test]
fn fuzz_requires_instances() {
    assert_eq!(code(&rbmc(&["fuzz", "--count", "0"])), 2);
    assert_eq!(code(&rbmc(&["fuzz", "--count", "5", "--max-states", "0"])), 2);
}

#[test]
fn fuzz_healthy_build() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.tsv");
    let out = rbmc(&[
        "fuzz",
        "--seed",
        "7",
        "--count",
        "100",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let tsv = std::fs::read_to_string(&manifest).unwrap();
    assert!(tsv.starts_with("index\tseed\tparams\tcheck\tformula\tengine\treference\n"));
    assert_eq!(tsv.lines().count(), 1 + 100 * 11);
}

#[test]
fn fuzz_catches_broken_release_run_out() {
    let out = rbmc(&["fuzz", "--seed", "0", "--count", "100", "--mutate", "release-runout"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    let witness = text
        .lines()
        .find(|l| l.starts_with("  disagreement:"))
        .expect("a witness is listed");
    assert!(witness.contains(" R "), "{witness}");
    assert!(witness.contains("seed "));
}

#[test]
fn opponent_endowments_split_state_histories() {
    // The opponent can end up at s1 either short of gold or short of oil, and
    // the winning move at s1 depends on which. The search adapts per node; a
    // strategy over state histories cannot.
    let f = "<{1}|{2} down> (true U p)";
    let eta = ["--endowment", "[1=(5,0,0),2=(5,1,1)]"];
    assert_eq!(
        states(&check("check", "split_opponent.json", f, "ral", &eta)),
        ["good", "s0"]
    );
    assert_eq!(
        states(&check("oracle", "split_opponent.json", f, "ral", &eta)),
        ["good"]
    );
}
