//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rtlopt_core::analysis::{EdgeKind, FsmControl, FsmSpec, InstanceTree};
use rtlopt_core::analysis::emit_fsm_module;
use rtlopt_core::cost::{estimate, CostReport, CostWeights};
use rtlopt_core::frontend::{
    parse_module, BinaryOp, DesignAst, Direction, Edge, EdgeEvent, Expr, Item, ModuleAst, Port,
    Sensitivity, UnaryOp,
};
use rtlopt_core::partition::partition;
use rtlopt_core::pipeline::{bench, PipelineConfig};
use rtlopt_core::retrieval::{hit_and_map, DocType, Document, EmbeddingPair, KnowledgeBase};
use rtlopt_core::rewrite::{apply_rule, minimize_fsm};
use rtlopt_core::search::{
    balance_weight, reward, run_search, uncertainty, Candidate, ContentSet, CostModel, Proposer,
    ProposerError, RetrievalResults, SearchAction, SearchConfig, SearchContext, Verifier,
};
use rtlopt_core::verify::{
    check_equivalence, data_input_bits, first_difference, fuzz_filter, simulate, FuzzOutcome,
    Method, SimTrace, Stimulus, EXHAUSTIVE_MAX_BITS, SEQ_RUNS,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn module(src: &str) -> ModuleAst {
    parse_module(src, "fixture").expect("fixture parses")
}

fn cells(m: &ModuleAst) -> u64 {
    estimate(&DesignAst::from_modules(vec![m.clone()]), &CostWeights::default()).cells
}

// ---------------------------------------------------------------- 1

struct Pair {
    name: &'static str,
    rule: &'static str,
    src: &'static str,
    /// Cells may stay equal (encoding-only rules).
    allow_equal: bool,
}

const REDUNDANT_FSM: &str = "module f(input clk, input rst, input x, output reg y);
    localparam S0 = 2'd0, S1 = 2'd1, S2 = 2'd2, S3 = 2'd3;
    reg [1:0] st, nx;
    always @(posedge clk) if (rst) st <= S0; else st <= nx;
    always @* begin
        nx = st;
        case (st)
            S0: if (x) nx = S1; else nx = S0;
            S1: if (x) nx = S2; else nx = S3;
            S2: if (x) nx = S0; else nx = S1;
            S3: if (x) nx = S0; else nx = S1;
        endcase
    end
    always @* begin y = 1'b0; case (st) S2: y = 1'b1; S3: y = 1'b1; endcase end
endmodule";

const SPARSE_FSM: &str = "module f(input clk, input rst, input x, output y);
    reg [2:0] st, nx;
    always @(posedge clk) if (rst) st <= 3'd5; else st <= nx;
    always @* begin
        nx = st;
        case (st)
            3'd5: if (x) nx = 3'd6;
            3'd6: nx = 3'd3;
            3'd3: if (x) nx = 3'd5;
        endcase
    end
    assign y = st == 3'd3;
endmodule";

fn example_pairs() -> Vec<Pair> {
    vec![
        Pair {
            name: "resource sharing",
            rule: "resource-share",
            src: "module r(input s, input [3:0] a, b, c, d, output reg [3:0] y);
                always @* if (s) y = a + b; else y = c + d;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "common subexpression",
            rule: "cse",
            src: "module s(input [3:0] a, b, c, d, output [3:0] y1, y2);
                assign y1 = (a + b) + c; assign y2 = (a + b) + d;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "multiple constant multiplication",
            rule: "mcm",
            src: "module m(input [7:0] x, output [11:0] a, b, c);
                assign a = x * 3; assign b = x * 5; assign c = x * 9;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "constant propagation",
            rule: "const-prop",
            src: "module c(input [7:0] a, output [7:0] y, z);
                wire [7:0] x; assign x = 5; assign y = x + 10; assign z = a + x;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "dead code elimination",
            rule: "dce",
            src: "module d(input [3:0] a, b, output [3:0] y);
                wire [3:0] t; assign t = a * b; assign y = a | b;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "strength: multiply by power of two",
            rule: "strength-reduce",
            src: "module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule",
            allow_equal: false,
        },
        Pair {
            name: "strength: divide by power of two",
            rule: "strength-reduce",
            src: "module m(input [7:0] x, output [7:0] y); assign y = x / 8; endmodule",
            allow_equal: false,
        },
        Pair {
            name: "strength: multiply by constant",
            rule: "strength-reduce",
            src: "module m(input [7:0] x, output [11:0] y); assign y = x * 10; endmodule",
            allow_equal: false,
        },
        Pair {
            name: "strength: boolean identities",
            rule: "strength-reduce",
            src: "module m(input [3:0] a, b, output [3:0] y, z);
                assign y = (a & a) | (b ^ b); assign z = a | (a & b);
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "strength: combined operations",
            rule: "strength-reduce",
            src: "module m(input [3:0] x, output [6:0] y); assign y = (x + x) << 1; endmodule",
            allow_equal: false,
        },
        Pair {
            name: "mux reduction",
            rule: "mux-reduce",
            src: "module x(input s, input [3:0] a, b, c, output [3:0] y);
                assign y = s ? a + c : b + c;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "mux restructuring",
            rule: "mux-restructure",
            src: "module x(input [1:0] sel, input [3:0] a, b, c, d, output reg [3:0] y);
                always @* if (sel == 2'd0) y = a; else if (sel == 2'd1) y = b;
                    else if (sel == 2'd2) y = c; else if (sel == 2'd3) y = d; else y = 4'd0;
            endmodule",
            allow_equal: false,
        },
        Pair {
            name: "fsm state reduction",
            rule: "fsm-minimize",
            src: REDUNDANT_FSM,
            allow_equal: false,
        },
        Pair {
            name: "fsm state assignment",
            rule: "fsm-assign",
            src: SPARSE_FSM,
            allow_equal: true,
        },
    ]
}

fn criterion_1() -> Check {
    let pairs = example_pairs();
    for p in &pairs {
        let m = module(p.src);
        let out = apply_rule(&m, p.rule)
            .map_err(|e| format!("{}: {e}", p.name))?
            .ok_or_else(|| format!("{}: {} did not apply", p.name, p.rule))?
            .new_module;
        let bits = data_input_bits(&m);
        ensure(bits <= EXHAUSTIVE_MAX_BITS, || format!("{}: {bits} input bits", p.name))?;
        let seq = m.items.iter().any(|i| matches!(i, Item::Always(a) if a.is_edge_triggered()));
        // Sequential pairs: every reachable behaviour within the bound,
        // from reset, over all runs.
        let (method, budget) = if seq { (Method::BoundedSequential, 64) } else { (Method::Exhaustive, 0) };
        let v = check_equivalence(&m, &out, method, budget, 1).map_err(|e| format!("{}: {e}", p.name))?;
        ensure(v.passed(), || format!("{}: not equivalent: {v:?}", p.name))?;
        let (a, b) = (cells(&m), cells(&out));
        let ok = if p.allow_equal { b <= a } else { b < a };
        ensure(ok, || format!("{}: cells {a} -> {b}", p.name))?;
    }
    Ok(format!("{} pairs", pairs.len()))
}

// ---------------------------------------------------------------- 2

fn driver(m: &ModuleAst, target: &str) -> Option<Expr> {
    m.items.iter().find_map(|i| match i {
        Item::Assign(a) if a.lhs.whole_ident() == Some(target) => Some(a.rhs.clone()),
        _ => None,
    })
}

fn criterion_2() -> Check {
    let m = module("module c(output [7:0] y); wire [7:0] x; assign x = 5; assign y = x + 10; endmodule");
    let out = apply_rule(&m, "const-prop").map_err(|e| e.to_string())?.ok_or("no change")?.new_module;
    let rhs = driver(&out, "y").ok_or("y has no driver")?;
    match rhs {
        Expr::Literal(l) if l.value == 15 => Ok("y = 15".into()),
        other => Err(format!("y = {other:?}")),
    }
}

// ---------------------------------------------------------------- 3

fn count_shifts(m: &ModuleAst) -> usize {
    let mut n = 0;
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            if matches!(e, Expr::Binary { op: BinaryOp::Shl, .. }) {
                n += 1;
            }
        })
    });
    n
}

fn criterion_3() -> Check {
    let m = module(
        "module m(input [7:0] x, output [11:0] a, b, c); assign a = x * 3; assign b = x * 5; assign c = x * 9; endmodule",
    );
    let out = apply_rule(&m, "mcm").map_err(|e| e.to_string())?.ok_or("no change")?.new_module;
    let shifts = count_shifts(&out);
    ensure(shifts <= 4, || format!("{shifts} shift nodes"))?;
    let v = check_equivalence(&m, &out, Method::Exhaustive, 0, 1).map_err(|e| e.to_string())?;
    ensure(v.passed() && v.vectors_checked == 256, || format!("{v:?}"))?;
    Ok(format!("{shifts} shift nodes, 256 vectors equal"))
}

// ---------------------------------------------------------------- 4

fn random_fsm(rng: &mut ChaCha8Rng) -> FsmSpec {
    let n = rng.random_range(1..=8u64);
    let bits = rng.random_range(0..=2u32);
    let alphabet = 1u64 << bits;
    // Few distinct outputs and successors so that merges are common.
    let outs = rng.random_range(1..=3u64);
    let next: Vec<u64> = (0..n * alphabet).map(|_| rng.random_range(0..n)).collect();
    let out: Vec<u64> = (0..n * alphabet).map(|_| rng.random_range(0..outs)).collect();
    let width = (64 - (n - 1).leading_zeros()).max(1);
    let inputs: Vec<(String, u32)> = (0..bits).map(|i| (format!("i{i}"), 1)).collect();
    let port = |name: &str, direction, width| Port {
        name: name.into(),
        direction,
        width,
        is_reg: false,
    };
    let mut ports = vec![port("clk", Direction::Input, 1), port("rst", Direction::Input, 1)];
    ports.extend(inputs.iter().map(|(n, w)| port(n, Direction::Input, *w)));
    ports.push(port("y", Direction::Output, 2));
    FsmSpec::from_tables(
        "f",
        ports,
        "st",
        width,
        (0..n).collect(),
        inputs,
        vec![("y".into(), 2)],
        &|s, v| next[(s * alphabet + v) as usize],
        &|s, v| vec![out[(s * alphabet + v) as usize]],
        Some(0),
        FsmControl {
            sensitivity: Sensitivity::Edges(vec![EdgeEvent {
                edge: Edge::Posedge,
                signal: "clk".into(),
            }]),
            reset_cond: Some(Expr::ident("rst")),
        },
    )
}

/// Classes of reachable states no input word separates, by pairwise
/// refinement to a fixpoint.
fn nerode_classes(f: &FsmSpec) -> usize {
    let mut reach = BTreeSet::new();
    let mut stack = vec![0u64];
    while let Some(s) = stack.pop() {
        if reach.insert(s) {
            stack.extend((0..f.alphabet()).map(|v| f.next(s, v)));
        }
    }
    let states: Vec<u64> = reach.into_iter().collect();
    let n = states.len();
    let at = |s: u64| states.iter().position(|x| *x == s).expect("reachable");
    let mut apart = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            apart[i][j] = (0..f.alphabet()).any(|v| f.output(states[i], v) != f.output(states[j], v));
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if !apart[i][j]
                    && (0..f.alphabet()).any(|v| apart[at(f.next(states[i], v))][at(f.next(states[j], v))])
                {
                    apart[i][j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut classes = 0;
    let mut seen = vec![false; n];
    for i in 0..n {
        if !seen[i] {
            classes += 1;
            for j in 0..n {
                if !apart[i][j] {
                    seen[j] = true;
                }
            }
        }
    }
    classes
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut merged = 0;
    for case in 0..200 {
        let f = random_fsm(&mut rng);
        let min = minimize_fsm(&f);
        let want = nerode_classes(&f);
        ensure(min.states.len() == want, || {
            format!("case {case}: {} states, oracle {want}", min.states.len())
        })?;
        if want < f.states.len() {
            merged += 1;
        }
        let a = emit_fsm_module(&f);
        let b = emit_fsm_module(&min);
        let v = check_equivalence(&a, &b, Method::BoundedSequential, 64, case)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure(v.passed(), || format!("case {case}: co-simulation differs"))?;
    }
    Ok(format!("200 machines ({merged} reducible), {SEQ_RUNS} runs x 64 cycles each"))
}

// ---------------------------------------------------------------- 5

const VOCAB: [&str; 12] = [
    "adder", "mux", "shift", "state", "register", "constant", "fold", "share", "case", "wire", "logic", "select",
];

fn cos_sparse(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

fn cos_dense(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

fn sim(a: &EmbeddingPair, b: &EmbeddingPair, lambda: f64) -> f64 {
    lambda * cos_sparse(&a.keyword, &b.keyword) + (1.0 - lambda) * cos_dense(&a.semantic, &b.semantic) + 1.0
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=6);
    (0..n).map(|_| *VOCAB.choose(rng).expect("vocab")).collect::<Vec<_>>().join(" ")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let n = rng.random_range(1..=10usize);
        let k = rng.random_range(1..=4usize).min(n);
        let lambda = rng.random_range(0..=4) as f64 / 4.0;
        let docs: Vec<Document> = (0..n)
            .map(|i| Document {
                id: format!("d{i:02}"),
                doc_type: DocType::Code,
                text: random_text(&mut rng),
                category: "c".into(),
                links: Vec::new(),
            })
            .collect();
        let kb = KnowledgeBase::new(docs).map_err(|e| e.to_string())?;
        let query = random_text(&mut rng);
        let q = kb.embed_query(&query).map_err(|e| e.to_string())?;
        let emb = |id: &str| kb.embedding(id).expect("indexed").clone();

        let mut expect: Vec<(String, f64)> =
            kb.docs().iter().map(|d| (d.id.clone(), sim(&q, &emb(&d.id), lambda))).collect();
        expect.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let got = kb.rank_stage1(&query, DocType::Code, lambda, n).map_err(|e| e.to_string())?;
        let got_ids: Vec<&str> = got.iter().map(|h| h.id.as_str()).collect();
        let want_ids: Vec<&str> = expect.iter().map(|h| h.0.as_str()).collect();
        ensure(got_ids == want_ids, || format!("case {case}: order {got_ids:?} vs {want_ids:?}"))?;
        for (h, (_, s)) in got.iter().zip(&expect) {
            ensure(close(h.score, *s), || format!("case {case}: score {} vs {s}", h.score))?;
        }

        // Brute force over every k-subset by bitmask.
        let ids: Vec<String> = got.iter().map(|h| h.id.clone()).collect();
        let rel: Vec<f64> = got.iter().map(|h| h.score).collect();
        let pair: Vec<Vec<f64>> =
            ids.iter().map(|a| ids.iter().map(|b| sim(&emb(a), &emb(b), lambda)).collect()).collect();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let mut total: f64 = set.iter().map(|&i| rel[i]).sum();
            for &i in &set {
                let d = set.iter().filter(|&&j| j != i).map(|&j| 2.0 - pair[i][j]).fold(f64::INFINITY, f64::min);
                total += if d.is_finite() { d } else { 0.0 } / k as f64;
            }
            best = best.max(total);
        }
        let sel = kb.rank_stage2(&got, lambda, k);
        ensure(sel.exact && sel.hits.len() == k, || format!("case {case}: inexact selection"))?;
        ensure(close(sel.objective, best), || format!("case {case}: objective {} vs {best}", sel.objective))?;
    }
    Ok("50 corpora".into())
}

// ---------------------------------------------------------------- 6

/// Per query: hit ratio = correct / k, average precision = sum of
/// precision@j over correct positions j, divided by k.
fn direct_metrics(rows: &[Vec<bool>], k: usize) -> (f64, f64) {
    let mut h = 0.0;
    let mut ap = 0.0;
    for row in rows {
        let top: Vec<bool> = (0..k).map(|j| row.get(j).copied().unwrap_or(false)).collect();
        h += top.iter().filter(|x| **x).count() as f64 / k as f64;
        let mut s = 0.0;
        for j in 0..k {
            if top[j] {
                let p = top[..=j].iter().filter(|x| **x).count() as f64 / (j + 1) as f64;
                s += p;
            }
        }
        ap += s / k as f64;
    }
    (h / rows.len() as f64, ap / rows.len() as f64)
}

fn criterion_6() -> Check {
    let t = true;
    let f = false;
    let patterns: Vec<(Vec<Vec<bool>>, usize)> = vec![
        (vec![vec![t, t, t]], 3),
        (vec![vec![f, f, f]], 3),
        (vec![vec![t, f, t]], 3),
        (vec![vec![f, t, t]], 3),
        (vec![vec![t, t, f]], 3),
        (vec![vec![f, f, t]], 3),
        (vec![vec![t]], 1),
        (vec![vec![f]], 1),
        (vec![vec![t, f], vec![f, t]], 2),
        (vec![vec![t, t], vec![f, f]], 2),
        (vec![vec![t, f, f, t, t]], 5),
        (vec![vec![f, t, f, t, f]], 5),
        (vec![vec![t, t, t, t, t]], 5),
        (vec![vec![t, f, t], vec![t, t, t], vec![f, f, f]], 3),
        (vec![vec![t, t]], 3),
        (vec![vec![]], 2),
        (vec![vec![t, f, t, f]], 4),
        (vec![vec![f, t], vec![t, f], vec![t, t], vec![f, f]], 2),
        (vec![vec![t, t, f, t]], 4),
        (vec![vec![f, f, f, t]], 4),
    ];
    for (i, (rows, k)) in patterns.iter().enumerate() {
        let got = hit_and_map(rows, *k);
        let want = direct_metrics(rows, *k);
        ensure((got.0 - want.0).abs() <= 1e-12 && (got.1 - want.1).abs() <= 1e-12, || {
            format!("pattern {i}: {got:?} vs {want:?}")
        })?;
    }
    let optimal = hit_and_map(&[vec![true; 5], vec![true; 5]], 5);
    ensure(optimal == (1.0, 1.0), || format!("all-correct gives {optimal:?}"))?;
    Ok(format!("{} patterns, all-correct = 1.00/1.00", patterns.len()))
}

// ---------------------------------------------------------------- 7

struct Rigged {
    rng: ChaCha8Rng,
    n: usize,
}

fn with_net(m: &ModuleAst, name: String) -> ModuleAst {
    let mut m = m.clone();
    m.nets.push(rtlopt_core::frontend::Net {
        name,
        kind: rtlopt_core::frontend::NetKind::Wire,
        width: 1,
        depth: None,
    });
    m
}

impl Proposer for Rigged {
    fn next_action(&mut self, _: &SearchContext) -> SearchAction {
        SearchAction::Rewrite
    }

    /// Only the algorithms-only state can produce an improvement.
    fn propose(&mut self, ctx: &mut SearchContext, _: SearchAction) -> Result<Vec<Candidate>, ProposerError> {
        self.n += 1;
        let m = if ctx.content == ContentSet::ALGORITHMS {
            if self.rng.random_bool(0.9) {
                with_net(&ctx.module, format!("good{}", self.n))
            } else {
                ctx.module.clone()
            }
        } else if self.rng.random_bool(0.5) {
            ctx.module.clone()
        } else {
            with_net(&ctx.module, format!("bad{}", self.n))
        };
        Ok(vec![Candidate {
            module: m,
            label: "rigged".into(),
        }])
    }
}

struct RejectBad;

impl Verifier for RejectBad {
    fn passes(&self, _: &ModuleAst, c: &ModuleAst) -> bool {
        !c.nets.iter().any(|n| n.name.starts_with("bad"))
    }
}

struct GoodIsCheaper;

impl CostModel for GoodIsCheaper {
    fn report(&self, m: &ModuleAst) -> CostReport {
        CostReport {
            cells: 1000 - m.nets.iter().filter(|n| n.name.starts_with("good")).count() as u64,
            ..Default::default()
        }
    }
}

fn criterion_7() -> Check {
    let u = uncertainty(8, 2);
    let want = (2.0 * 8f64.ln() / 2.0).sqrt();
    ensure((u - want).abs() <= 1e-12, || format!("U(8,2) = {u}, expected {want}"))?;
    let k = 0.37;
    ensure(balance_weight(k, k) == 0.5, || format!("w(k) = {}", balance_weight(k, k)))?;
    let base = CostReport { cells: 10, ..Default::default() };
    let better = CostReport { cells: 9, ..Default::default() };
    ensure(reward(false, &base, &better) == 0.0, || "fail must map to 0".into())?;
    ensure(reward(true, &base, &base) == 0.5, || "equal must map to 0.5".into())?;
    ensure(reward(true, &base, &better) == 1.0, || "improved must map to 1".into())?;

    let m = module("module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule");
    let cfg = SearchConfig {
        max_iterations: 50,
        ..SearchConfig::default()
    };
    let mut wins = 0;
    for seed in 0..100 {
        let mut p = Rigged {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n: 0,
        };
        let out = run_search(&m, &mut p, &RejectBad, &GoodIsCheaper, &RetrievalResults::default(), &cfg)
            .map_err(|e| e.to_string())?;
        let best = out.most_visited();
        let above = out
            .tree
            .root()
            .children
            .iter()
            .filter(|&&c| c != best.id)
            .all(|&c| out.tree.nodes[c].q() < best.q());
        if best.content == ContentSet::ALGORITHMS && above && out.patches.iter().all(|p| p.rule_id == "rigged") && !out.patches.is_empty() {
            wins += 1;
        }
    }
    ensure(wins >= 95, || format!("good arm chosen in {wins}/100 runs"))?;
    Ok(format!("U(8,2) = {u:.5}, good arm {wins}/100"))
}

// ---------------------------------------------------------------- 8

fn random_tree(rng: &mut ChaCha8Rng) -> InstanceTree {
    let n = rng.random_range(1..=12usize);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(1..=20) as f64 / 2.0).collect();
    let kinds = [EdgeKind::Direct, EdgeKind::Combinational, EdgeKind::Sequential];
    let edges: Vec<(usize, usize, EdgeKind, f64)> = (1..n)
        .map(|c| {
            let kind = *kinds.choose(rng).expect("kinds");
            (rng.random_range(0..c), c, kind, rng.random_range(1..=10) as f64 / 10.0)
        })
        .collect();
    InstanceTree::from_parts(&weights, &edges)
}

/// Makespan of first-fit-decreasing onto the least-loaded worker.
fn ffd(mut times: Vec<f64>, workers: usize) -> f64 {
    times.sort_by(|a, b| b.total_cmp(a));
    let mut loads = vec![0.0; workers];
    for t in times {
        let mut i = 0;
        for j in 1..workers {
            if loads[j] < loads[i] {
                i = j;
            }
        }
        loads[i] += t;
    }
    loads.into_iter().fold(0.0, f64::max)
}

fn cut_cost(tree: &InstanceTree, cut: &[usize], lambda: f64, workers: usize) -> f64 {
    // Union-find over the uncut edges.
    let n = tree.nodes.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        if root[x] != x {
            let r = find(root, root[x]);
            root[x] = r;
        }
        root[x]
    }
    for (i, e) in tree.edges.iter().enumerate() {
        if !cut.contains(&i) {
            let (a, b) = (find(&mut root, e.parent), find(&mut root, e.child));
            root[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, f64> = BTreeMap::new();
    for v in 0..n {
        *groups.entry(find(&mut root, v)).or_default() += tree.nodes[v].weight;
    }
    let e: f64 = cut.iter().map(|&i| tree.edges[i].weight).sum();
    ffd(groups.into_values().collect(), workers) + lambda * e
}

fn best_cut_cost(tree: &InstanceTree, lambda: f64, workers: usize) -> f64 {
    let m = tree.edges.len();
    let mut best = cut_cost(tree, &[], lambda, workers);
    for a in 0..m {
        best = best.min(cut_cost(tree, &[a], lambda, workers));
        for b in a + 1..m {
            best = best.min(cut_cost(tree, &[a, b], lambda, workers));
            for c in b + 1..m {
                best = best.min(cut_cost(tree, &[a, b, c], lambda, workers));
            }
        }
    }
    best
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 1.0;
    for case in 0..100 {
        let tree = random_tree(&mut rng);
        let lambda = rng.random_range(0..=8) as f64 / 4.0;
        let workers = rng.random_range(1..=4usize);
        let plan = partition(&tree, lambda, 0, 3, workers).map_err(|e| format!("case {case}: {e}"))?;
        let opt = best_cut_cost(&tree, lambda, workers);
        ensure(plan.cost <= 1.5 * opt + 1e-9, || {
            let w: Vec<f64> = tree.nodes.iter().map(|n| n.weight).collect();
            let e: Vec<(usize, usize, f64)> = tree.edges.iter().map(|e| (e.parent, e.child, e.weight)).collect();
            format!("case {case}: C {} vs optimum {opt}; lambda {lambda} workers {workers} {w:?} {e:?}", plan.cost)
        })?;
        worst = worst.max(plan.cost / opt);

        let total: f64 = tree.nodes.iter().map(|n| n.weight).sum();
        let single = partition(&tree, 0.0, 0, tree.edges.len().min(3), 1).map_err(|e| e.to_string())?;
        ensure(single.cost == total, || format!("case {case}: one worker C {} vs {total}", single.cost))?;
    }
    Ok(format!("100 trees, worst ratio {worst:.3}"))
}

// ---------------------------------------------------------------- 9

const FAULT_BASES: [&str; 5] = [
    "module a(input [3:0] a, b, c, output [3:0] y, z); assign y = (a + b) ^ c; assign z = (a & b) | (c - 4'd3); endmodule",
    "module m(input s, input [3:0] a, b, output [3:0] y); assign y = s ? a + b : a - b; endmodule",
    "module k(input [1:0] sel, input [2:0] a, b, c, d, output reg [2:0] y);
        always @* case (sel) 2'd0: y = a; 2'd1: y = b + 3'd1; 2'd2: y = c ^ d; default: y = ~d; endcase
     endmodule",
    "module c(input [3:0] a, b, output y, output [4:0] s); assign y = a < b; assign s = a + b; endmodule",
    "module h(input [3:0] x, input [1:0] n, output [7:0] y); assign y = (x << n) + (x * 3); endmodule",
];

fn swap_op(op: BinaryOp, rng: &mut ChaCha8Rng) -> BinaryOp {
    use BinaryOp::*;
    let class: &[BinaryOp] = match op {
        Add | Sub | Mul | And | Or | Xor => &[Add, Sub, Mul, And, Or, Xor],
        Lt | Le | Gt | Ge | Eq | Ne => &[Lt, Le, Gt, Ge, Eq, Ne],
        Shl | Shr => &[Shl, Shr],
        other => return if other == LogicAnd { LogicOr } else { LogicAnd },
    };
    **class.iter().filter(|o| **o != op).collect::<Vec<_>>().choose(rng).expect("alternatives")
}

/// Mutate the `target`-th expression node in pre-order.
fn mutate(e: &mut Expr, counter: &mut usize, target: usize, inputs: &[String], rng: &mut ChaCha8Rng) -> bool {
    if *counter == target {
        *counter += 1;
        match e {
            Expr::Binary { op, .. } => *op = swap_op(*op, rng),
            Expr::Literal(l) => l.value ^= 1,
            Expr::Ident(name) => {
                let others: Vec<&String> = inputs.iter().filter(|i| *i != name).collect();
                match others.choose(rng) {
                    Some(o) => *name = (*o).clone(),
                    None => return false,
                }
            }
            Expr::Ternary { then_expr, else_expr, .. } => std::mem::swap(then_expr, else_expr),
            Expr::Unary { op: UnaryOp::Not, operand } => *e = (**operand).clone(),
            _ => return false,
        }
        return true;
    }
    *counter += 1;
    match e {
        Expr::Binary { lhs, rhs, .. } => {
            mutate(lhs, counter, target, inputs, rng) || mutate(rhs, counter, target, inputs, rng)
        }
        Expr::Unary { operand, .. } => mutate(operand, counter, target, inputs, rng),
        Expr::Ternary { cond, then_expr, else_expr } => {
            mutate(cond, counter, target, inputs, rng)
                || mutate(then_expr, counter, target, inputs, rng)
                || mutate(else_expr, counter, target, inputs, rng)
        }
        Expr::Index { base, index } => {
            mutate(base, counter, target, inputs, rng) || mutate(index, counter, target, inputs, rng)
        }
        Expr::Slice { base, .. } => mutate(base, counter, target, inputs, rng),
        Expr::Concat(parts) | Expr::Repeat { parts, .. } => {
            parts.iter_mut().any(|p| mutate(p, counter, target, inputs, rng))
        }
        _ => false,
    }
}

fn node_count(m: &ModuleAst) -> usize {
    let mut n = 0;
    m.for_each_expr(&mut |root| root.walk(&mut |_| n += 1));
    n
}

fn single_mutation(m: &ModuleAst, rng: &mut ChaCha8Rng) -> Option<ModuleAst> {
    let inputs: Vec<String> = m.inputs().map(|p| p.name.clone()).collect();
    let target = rng.random_range(0..node_count(m));
    let mut out = m.clone();
    let mut counter = 0;
    let mut done = false;
    out.for_each_expr_mut(&mut |root| {
        if !done {
            done = mutate(root, &mut counter, target, &inputs, rng);
        }
    });
    done.then_some(out)
}

/// Every input valuation, one per cycle.
fn all_vectors(m: &ModuleAst) -> Stimulus {
    let ports: Vec<(String, u32)> = m.inputs().map(|p| (p.name.clone(), p.width)).collect();
    let bits: u32 = ports.iter().map(|p| p.1).sum();
    let total = 1usize << bits;
    let mut inputs: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for v in 0..total as u64 {
        let mut shift = 0;
        for (name, w) in &ports {
            inputs.entry(name.clone()).or_default().push((v >> shift) & ((1 << w) - 1));
            shift += w;
        }
    }
    Stimulus {
        inputs,
        cycles: total,
        clock: None,
        reset: None,
    }
}

fn traces_differ(a: &SimTrace, b: &SimTrace) -> bool {
    a.outputs != b.outputs
}

fn criterion_9() -> Check {
    let bases: Vec<ModuleAst> = FAULT_BASES.iter().map(|s| module(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut faults = 0;
    let mut by_fuzz = 0;
    let mut attempts = 0;
    while faults < 100 {
        attempts += 1;
        ensure(attempts < 10_000, || "could not generate enough faults".into())?;
        let base = &bases[rng.random_range(0..bases.len())];
        let Some(mutant) = single_mutation(base, &mut rng) else { continue };
        // Oracle: does the mutation change any output on any input?
        let stim = all_vectors(base);
        let (Ok(ta), Ok(tb)) = (simulate(base, &stim), simulate(&mutant, &stim)) else { continue };
        if !traces_differ(&ta, &tb) {
            continue;
        }
        faults += 1;
        let seed = rng.random::<u64>();
        let outcome = fuzz_filter(base, &mutant, 1000, seed).map_err(|e| e.to_string())?;
        let cex = match outcome {
            FuzzOutcome::Fail { counterexample, .. } => {
                by_fuzz += 1;
                counterexample
            }
            FuzzOutcome::Pass { .. } => {
                let v = check_equivalence(base, &mutant, Method::Exhaustive, 0, seed).map_err(|e| e.to_string())?;
                v.counterexample().cloned().ok_or_else(|| format!("fault {faults} accepted"))?
            }
        };
        let (ra, rb) = (simulate(base, &cex).map_err(|e| e.to_string())?, simulate(&mutant, &cex).map_err(|e| e.to_string())?);
        ensure(first_difference(&ra, &rb).is_some(), || format!("fault {faults}: counterexample does not replay"))?;
    }
    Ok(format!("100 faults rejected ({by_fuzz} by fuzzing), all counterexamples replay"))
}

// ---------------------------------------------------------------- 10

fn desk_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/desk")
}

fn criterion_10() -> Check {
    let dir = desk_corpus();
    let mut cfg = PipelineConfig::default();
    cfg.verify.seed = 2024;
    let a = bench(&dir, &cfg).map_err(|e| e.to_string())?;
    let b = bench(&dir, &cfg).map_err(|e| e.to_string())?;
    ensure(a.rows.len() == 14, || format!("{} cases in the desk corpus", a.rows.len()))?;
    let (ja, jb) = (a.to_json(), b.to_json());
    ensure(ja == jb, || "JSON differs between runs".into())?;
    let ratio = a.aggregate.ok_or("no aggregate")?.ratio.cells;
    ensure(ratio < 1.0, || format!("cells ratio {ratio:.3}"))?;
    Ok(format!("identical JSON ({} bytes), cells ratio {ratio:.2}", ja.len()))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("example-pair suite", criterion_1, Duration::from_secs(10)),
        ("constant propagation folds to 15", criterion_2, Duration::from_secs(1)),
        ("shared shifts for {3,5,9}", criterion_3, Duration::from_secs(1)),
        ("state minimization oracle", criterion_4, Duration::from_secs(30)),
        ("two-stage ranking oracle", criterion_5, Duration::from_secs(5)),
        ("hit ratio and MAP formulas", criterion_6, Duration::from_secs(1)),
        ("search formulas and rigged arm", criterion_7, Duration::from_secs(10)),
        ("partition oracle", criterion_8, Duration::from_secs(10)),
        ("seeded faults rejected", criterion_9, Duration::from_secs(30)),
        ("bench determinism", criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = t.elapsed();
        let result = match result {
            Ok(msg) if took > *limit => Err(format!("{msg}; took {took:.2?}, limit {limit:?}")),
            r => r,
        };
        match result {
            Ok(msg) => println!("PASS  {:>2}  {name}: {msg} ({took:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {msg} ({took:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
