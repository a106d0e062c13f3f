use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rtlopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtlopt"))
        .args(args)
        .env_remove("RTLOPT_MODEL_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHIFTABLE: &str = "module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule\n";
const SHIFTED: &str = "module m(input [7:0] x, output [9:0] y); assign y = x << 2; endmodule\n";
const WRONG: &str = "module m(input [7:0] x, output [9:0] y); assign y = x << 1; endmodule\n";

#[test]
fn parse_prints_canonical_source() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let o = rtlopt(&["parse", s(&f)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("assign y = x * 4;"));
    let again = write(dir.path(), "b.v", &text);
    assert_eq!(stdout(&rtlopt(&["parse", s(&again)])), text);
    let json: serde_json::Value = serde_json::from_str(&stdout(&rtlopt(&["parse", "--json", s(&f)]))).unwrap();
    assert_eq!(json[0]["name"], "m");
}

#[test]
fn unparsable_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", "module m(input a output y); endmodule");
    assert_eq!(code(&rtlopt(&["parse", s(&f)])), 1);
}

#[test]
fn analyze_reports_stable_fields() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let v: serde_json::Value = serde_json::from_str(&stdout(&rtlopt(&["analyze", s(&f)]))).unwrap();
    for k in ["patterns", "sub_hints", "verification_pattern", "advisories"] {
        assert!(v[0].get(k).is_some(), "{k}");
    }
    assert!(v[0]["sub_hints"].as_array().unwrap().iter().any(|h| h == "strength-reduction"));
}

#[test]
fn partition_emits_plan() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "h.v",
        "module leaf(input [3:0] a, output [3:0] y); assign y = a + 4'd1; endmodule
         module top(input [3:0] a, b, output [3:0] p, q); leaf u0 (.a(a), .y(p)); leaf u1 (.a(b), .y(q)); endmodule",
    );
    let o = rtlopt(&["partition", s(&f), "--n-max", "2", "--workers", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["top"], "top");
    assert_eq!(v["tree"]["nodes"].as_array().unwrap().len(), 3);
    assert!(v["plan"]["groups"].is_array());
}

#[test]
fn optimize_writes_outputs_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let out = dir.path().join("out");
    let o = rtlopt(&["optimize", s(&f), "--output-dir", s(&out), "--max-iterations", "12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["status"], "optimized");
    assert_eq!(v[0]["patches"][0]["rule_id"], "strength-reduce");
    assert!(v[0].get("timings").is_none());
    let text = std::fs::read_to_string(out.join("a.v")).unwrap();
    assert!(text.contains("<<"));
    let trace = std::fs::read_to_string(out.join("a.m.trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert!(first.get("q_updates").is_some());
}

#[test]
fn optimize_timings_flag() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&rtlopt(&["optimize", s(&f), "--timings"]))).unwrap();
    assert!(v[0]["timings"]["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn per_case_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.v", SHIFTABLE);
    write(dir.path(), "b.v", "module broken(");
    let o = rtlopt(&["optimize", s(dir.path())]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["status"], "optimized");
    assert_eq!(v[1]["status"], "failed");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let bad = write(dir.path(), "c.json", r#"{"search": {"nope": 1}}"#);
    assert_eq!(code(&rtlopt(&["optimize", s(&f), "--config", s(&bad)])), 2);
    assert_eq!(code(&rtlopt(&["optimize", s(&f), "--workers", "0"])), 2);
    assert_eq!(code(&rtlopt(&["bench", s(dir.path())])), 2);
    assert_eq!(code(&rtlopt(&["frobnicate"])), 2);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.v", SHIFTABLE);
    let cfg = write(dir.path(), "c.json", r#"{"search": {"branching": 0}}"#);
    // branching 0 is rejected; the flag fixes it.
    assert_eq!(code(&rtlopt(&["optimize", s(&f), "--config", s(&cfg)])), 2);
    assert_eq!(code(&rtlopt(&["optimize", s(&f), "--config", s(&cfg), "--branching", "2"])), 0);
}

#[test]
fn verify_modes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.v", SHIFTABLE);
    let c = write(dir.path(), "c.v", SHIFTED);
    let w = write(dir.path(), "w.v", WRONG);
    for mode in ["auto", "exhaustive", "fuzz"] {
        let o = rtlopt(&["verify", "--golden", s(&g), "--candidate", s(&c), "--mode", mode]);
        assert_eq!(code(&o), 0, "{mode}");
        let o = rtlopt(&["verify", "--golden", s(&g), "--candidate", s(&w), "--mode", mode]);
        assert_eq!(code(&o), 1, "{mode}");
    }
    let o = rtlopt(&["verify", "--golden", s(&g), "--candidate", s(&c), "--mode", "exhaustive"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "equivalent");
    assert_eq!(v["vectors_checked"], 256);
}

#[test]
fn verify_sequential_mode() {
    let dir = tempfile::tempdir().unwrap();
    let a = "module r(input clk, input [3:0] d, output reg [3:0] q); always @(posedge clk) q <= d + 4'd1; endmodule";
    let b = "module r(input clk, input [3:0] d, output reg [3:0] q); always @(posedge clk) q <= 4'd1 + d; endmodule";
    let g = write(dir.path(), "g.v", a);
    let c = write(dir.path(), "c.v", b);
    let o = rtlopt(&["verify", "--golden", s(&g), "--candidate", s(&c), "--mode", "seq", "--cycles", "16"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "inconclusive");
}

#[test]
fn retrieve_returns_k_hits() {
    let o = rtlopt(&["retrieve", "--query", "assign y = x * 4;", "--k", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let hits = v["hits"].as_array().unwrap();
    assert_eq!(hits.len(), 2);
    assert_eq!(hits[0]["rank"], 1);
    let o = rtlopt(&["retrieve", "--query", "mux select", "--join", "algorithm", "--k", "3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["hits"].as_array().unwrap().iter().all(|h| h["type"] == "algorithm"));
    assert_eq!(code(&rtlopt(&["retrieve", "--query", "x", "--type", "poem"])), 2);
}

#[test]
fn retrieve_eval_scores_queries() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(
        dir.path(),
        "q.jsonl",
        "{\"text\": \"multiply by a power of two becomes a shift\", \"doc_type\": \"instruction\", \"category\": \"strength-reduction\"}\n",
    );
    let o = rtlopt(&["retrieve", "--eval", s(&q), "--k", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["queries"], 1);
    assert!(v["hit_ratio"].as_f64().unwrap() >= 0.0);
}

#[test]
fn empty_corpus_bench_is_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = rtlopt(&["bench", s(dir.path()), "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn bench_json_is_reproducible_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    std::fs::create_dir(&corpus).unwrap();
    write(&corpus, "a.v", SHIFTABLE);
    write(
        &corpus,
        "b.v",
        "module x(input s, input [3:0] a, b, c, output [3:0] y); assign y = s ? a + c : b + c; endmodule",
    );
    let j1 = dir.path().join("1.json");
    let j2 = dir.path().join("2.json");
    let o = rtlopt(&["bench", s(&corpus), "--seed", "5", "--json", s(&j1)]);
    assert_eq!(code(&o), 0);
    rtlopt(&["bench", s(&corpus), "--seed", "5", "--json", s(&j2)]);
    assert_eq!(std::fs::read(&j1).unwrap(), std::fs::read(&j2).unwrap());
    let table = stdout(&o);
    let r = rtlopt(&["report", s(&j1)]);
    assert_eq!(code(&r), 0);
    assert_eq!(stdout(&r), table);
    let long = stdout(&rtlopt(&["report", s(&j1), "--style", "long"]));
    assert!(long.contains("Area") && long.contains("Delay"));
    let ratio = table.lines().find(|l| l.starts_with("Ratio")).unwrap();
    let cells: f64 = ratio.split_whitespace().last().unwrap().parse().unwrap();
    assert!(cells < 1.0);
}
