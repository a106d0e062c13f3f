use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::analysis::{extract_fsm, is_sequential, FsmControl, FsmSpec};
use crate::cost::{estimate_module, CostWeights};
use crate::frontend::{
    parse_module, print_module, Direction, Edge, EdgeEvent, Port, Sensitivity,
};
use crate::testgen::{expr, module_with};
use crate::verify::{check_equivalence, select_method};

fn module(src: &str) -> ModuleAst {
    parse_module(src, "t.v").unwrap()
}

fn assert_equiv(a: &ModuleAst, b: &ModuleAst) {
    let bits: u32 = a.inputs().map(|p| p.width).sum();
    let method = select_method(is_sequential(a) || is_sequential(b), bits);
    let v = check_equivalence(a, b, method, 300, 7).unwrap();
    assert!(v.passed(), "{}\n---\n{}\n{:?}", print_module(a), print_module(b), v);
}

fn applied(m: &ModuleAst, rule: &str) -> ModuleAst {
    let p = apply_rule(m, rule).unwrap().unwrap_or_else(|| panic!("{rule} did not apply"));
    assert_equiv(m, &p.new_module);
    assert_eq!(m.ports, p.new_module.ports);
    p.new_module
}

fn count_ops(m: &ModuleAst, op: BinaryOp) -> usize {
    let mut n = 0;
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            if matches!(e, Expr::Binary { op: o, .. } if *o == op) {
                n += 1;
            }
        })
    });
    n
}

fn cells(m: &ModuleAst) -> u64 {
    estimate_module(m, &CostWeights::default()).cells
}

fn rhs_of(m: &ModuleAst, target: &str) -> Expr {
    let mut found = None;
    for it in &m.items {
        match it {
            Item::Assign(a) if a.lhs.whole_ident() == Some(target) => found = Some(a.rhs.clone()),
            Item::Always(a) => a.body.walk(&mut |s| {
                if let Stmt::Assign { lhs, rhs, .. } = s {
                    if lhs.whole_ident() == Some(target) {
                        found = Some(rhs.clone());
                    }
                }
            }),
            _ => {}
        }
    }
    found.unwrap_or_else(|| panic!("no driver for {target}"))
}

fn parse_expr(src: &str, decls: &str) -> Expr {
    let m = module(&format!("module e({decls}, output [63:0] z); assign z = {src}; endmodule"));
    rhs_of(&m, "z")
}

#[test]
fn propagated_constant_folds_into_sum() {
    let m = module("module c(output [7:0] y); wire [7:0] x; assign x = 5; assign y = x + 10; endmodule");
    let out = applied(&m, "const-prop");
    assert_eq!(rhs_of(&out, "y"), Expr::lit(15));
}

#[test]
fn input_driven_net_is_not_constant() {
    let m = module("module c(input [7:0] a, output [7:0] y); wire [7:0] x; assign x = a; assign y = x + 1; endmodule");
    assert!(constant_propagate(&m).is_none());
    assert_eq!(ConstAnalysis::analyze(&m).values["x"], Lattice::Bottom);
}

#[test]
fn constant_false_branch_is_pruned() {
    let m = module(
        "module c(input [3:0] b, output reg [3:0] a); always @* if (1'b0) a = 4'd3; else a = b; endmodule",
    );
    let out = applied(&m, "const-prop");
    let Item::Always(blk) = &out.items[0] else { panic!() };
    assert!(matches!(&blk.body, Stmt::Assign { rhs, .. } if *rhs == Expr::ident("b")));
}

#[test]
fn lattice_meet() {
    use Lattice::*;
    assert_eq!(Const(3).meet(Const(3)), Const(3));
    assert_eq!(Const(3).meet(Const(4)), Bottom);
    assert_eq!(Top.meet(Const(1)), Const(1));
    assert_eq!(Bottom.meet(Top), Bottom);
}

#[test]
fn unread_net_is_removed() {
    let m = module(
        "module d(input [3:0] a, b, output [3:0] y); wire [3:0] t; assign t = a & b; assign y = a | b; endmodule",
    );
    let out = applied(&m, "dce");
    assert!(out.net("t").is_none());
    assert_eq!(out.items.len(), 1);
}

#[test]
fn fully_live_logic_is_kept() {
    let m = module(
        "module d(input [3:0] a, b, output [3:0] y); wire [3:0] t; assign t = a & b; assign y = t | b; endmodule",
    );
    assert!(eliminate_dead_code(&m).is_none());
}

#[test]
fn unreachable_case_arm_goes_after_propagation() {
    let m = module(
        "module d(input [3:0] a, b, output reg [3:0] y);
            wire [1:0] k;
            assign k = 2'd1;
            always @* case (k) 2'd0: y = a + b; 2'd1: y = a - b; default: y = a * b; endcase
        endmodule",
    );
    let p = applied(&m, "const-prop");
    let d = apply_rule(&p, "dce").unwrap().map(|x| x.new_module).unwrap_or(p);
    assert_equiv(&m, &d);
    assert!(d.net("k").is_none());
    assert!(cells(&d) < cells(&m));
}

#[test]
fn shared_sum_is_hoisted() {
    let m = module(
        "module s(input [3:0] a, b, c, d, output [3:0] y1, y2); assign y1 = (a + b) + c; assign y2 = (a + b) + d; endmodule",
    );
    assert_eq!(count_ops(&m, BinaryOp::Add), 4);
    let out = applied(&m, "cse");
    assert_eq!(count_ops(&out, BinaryOp::Add), 3);
    assert!(out.net("_rwcse0").is_some());
}

#[test]
fn nothing_repeated_nothing_hoisted() {
    let m = module("module s(input [3:0] a, b, output [3:0] y1, y2); assign y1 = a + b; assign y2 = a - b; endmodule");
    assert!(eliminate_subexpressions(&m).is_none());
}

#[test]
fn repeat_across_blocks_hoisted_once() {
    let m = module(
        "module s(input [3:0] a, b, c, output reg [3:0] y1, y2);
            always @* y1 = (a ^ b) + c;
            always @* y2 = (a ^ b) - c;
        endmodule",
    );
    let out = applied(&m, "cse");
    assert_eq!(count_ops(&out, BinaryOp::Xor), 1);
    assert!(eliminate_subexpressions(&out).is_none());
}

#[test]
fn multiply_by_four_is_a_shift() {
    let m = module("module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule");
    let out = applied(&m, "strength-reduce");
    assert_eq!(rhs_of(&out, "y"), parse_expr("x << 2", "input [7:0] x"));
    assert!(cells(&out) < cells(&m));
}

#[test]
fn divide_by_eight_is_a_shift() {
    let m = module("module m(input [7:0] x, output [7:0] y); assign y = x / 8; endmodule");
    let out = applied(&m, "strength-reduce");
    assert_eq!(rhs_of(&out, "y"), parse_expr("x >> 3", "input [7:0] x"));
}

#[test]
fn multiply_by_ten_is_shift_add() {
    let m = module("module m(input [7:0] x, output [11:0] y); assign y = x * 10; endmodule");
    let out = applied(&m, "strength-reduce");
    assert_eq!(rhs_of(&out, "y"), parse_expr("(x << 3) + (x << 1)", "input [7:0] x"));
}

#[test]
fn boolean_identities() {
    let m = module(
        "module b(input [3:0] a, b, output [3:0] y0, y1, y2, y3, y4, y5);
            assign y0 = a & a;
            assign y1 = a | ~a;
            assign y2 = a ^ a;
            assign y3 = ~~b;
            assign y4 = a | (a & b);
            assign y5 = (a & b) | (a & ~b);
        endmodule",
    );
    let out = applied(&m, "strength-reduce");
    assert_eq!(rhs_of(&out, "y0"), Expr::ident("a"));
    assert_eq!(rhs_of(&out, "y3"), Expr::ident("b"));
    assert_eq!(rhs_of(&out, "y4"), Expr::ident("a"));
    assert_eq!(rhs_of(&out, "y5"), Expr::ident("a"));
    assert_eq!(reduce_strength(&out), None);
}

/// Shift amounts and per-product term counts of the hoisted network.
fn mcm_shape(m: &ModuleAst) -> (BTreeSet<u64>, Vec<usize>) {
    let mut shifts = BTreeSet::new();
    let mut adds = Vec::new();
    for it in &m.items {
        if let Item::Assign(a) = it {
            let name = a.lhs.whole_ident().unwrap();
            if name.starts_with("_rwmcm") {
                shifts.insert(match &a.rhs {
                    Expr::Binary { rhs, .. } => rhs.as_literal().unwrap().value,
                    _ => 0,
                });
            } else {
                adds.push(count_ops_expr(&a.rhs, BinaryOp::Add));
            }
        }
    }
    (shifts, adds)
}

fn count_ops_expr(e: &Expr, op: BinaryOp) -> usize {
    let mut n = 0;
    e.walk(&mut |x| n += matches!(x, Expr::Binary { op: o, .. } if *o == op) as usize);
    n
}

#[test]
fn mcm_three_five_nine() {
    let m = module(
        "module m(input [7:0] x, output [11:0] a, b, c); assign a = x * 3; assign b = x * 5; assign c = x * 9; endmodule",
    );
    let out = applied(&m, "mcm");
    let (shifts, adds) = mcm_shape(&out);
    assert_eq!(shifts, BTreeSet::from([0, 1, 2, 3]));
    assert_eq!(adds, vec![1, 1, 1]);
    assert_eq!(count_ops(&out, BinaryOp::Mul), 0);
    assert!(cells(&out) < cells(&m));
}

#[test]
fn mcm_three_and_six_share_a_shift() {
    let m = module("module m(input [7:0] x, output [10:0] a, b); assign a = x * 3; assign b = x * 6; endmodule");
    let out = applied(&m, "mcm");
    // 3 = 2 + 1 and 6 = 4 + 2 by hand: shifts {0, 1, 2}.
    assert_eq!(mcm_shape(&out).0, BTreeSet::from([0, 1, 2]));
}

#[test]
fn single_multiply_is_not_mcm() {
    let m = module("module m(input [7:0] x, output [10:0] a); assign a = x * 3; endmodule");
    assert!(matches!(optimize_mcm(&m), Err(RewriteError::NotApplicable { .. })));
}

#[test]
fn a_operation_normalizes_to_odd() {
    let op = AOperation { l1: 2, l2: 0, r: 0, s: false };
    assert_eq!(op.apply(1, 1), 5);
    let op = AOperation { l1: 1, l2: 1, r: 0, s: false }.normalized(3, 1);
    assert_eq!(op.r, 3);
    assert_eq!(op.apply(3, 1), 1);
    let sub = AOperation { l1: 0, l2: 2, r: 0, s: true };
    assert_eq!(sub.apply(1, 1), 3);
    assert_eq!(decompose(10), vec![1, 3]);
}

#[test]
fn common_operand_leaves_the_mux() {
    let m = module(
        "module x(input s, input [3:0] a, b, c, output [3:0] y); assign y = s ? a + c : b + c; endmodule",
    );
    let out = applied(&m, "mux-reduce");
    assert_eq!(count_ops(&out, BinaryOp::Add), 1);
    assert_eq!(rhs_of(&out, "y"), parse_expr("(s ? a : b) + c", "input s, input [3:0] a, b, c"));
    assert!(cells(&out) < cells(&m));
}

#[test]
fn identical_arms_and_nested_selects() {
    let m = module(
        "module x(input s, input [3:0] a, b, c, output [3:0] y, z); assign y = s ? a : a; assign z = s ? (s ? a : b) : c; endmodule",
    );
    let out = applied(&m, "mux-reduce");
    assert_eq!(rhs_of(&out, "y"), Expr::ident("a"));
    assert_eq!(rhs_of(&out, "z"), parse_expr("s ? a : c", "input s, input [3:0] a, c"));
}

#[test]
fn if_chain_becomes_case() {
    let m = module(
        "module x(input [1:0] sel, input [3:0] a, b, c, d, output reg [3:0] y);
            always @* if (sel == 2'd0) y = a; else if (sel == 2'd1) y = b; else if (sel == 2'd2) y = c; else if (sel == 2'd3) y = d; else y = 4'd0;
        endmodule",
    );
    let out = applied(&m, "mux-restructure");
    let Item::Always(blk) = &out.items[0] else { panic!() };
    let Stmt::Case(c) = &blk.body else { panic!("{}", print_module(&out)) };
    assert_eq!(c.items.len(), 4);
    assert!(cells(&out) < cells(&m));
}

#[test]
fn wide_case_splits_into_two_levels() {
    let arms: String = (0..16).map(|i| format!("4'd{i}: y = a + 4'd{i};\n")).collect();
    let m = module(&format!(
        "module x(input [3:0] sel, input [3:0] a, output reg [3:0] y); always @* case (sel)\n{arms} endcase endmodule"
    ));
    let out = applied(&m, "mux-restructure");
    let Item::Always(blk) = &out.items[0] else { panic!() };
    let Stmt::Case(top) = &blk.body else { panic!() };
    assert_eq!(top.items.len(), 4);
    for it in &top.items {
        let Stmt::Case(inner) = &it.body else { panic!() };
        assert_eq!(inner.items.len(), 4);
    }
}

#[test]
fn small_case_is_left_alone() {
    let m = module(
        "module x(input s, input [3:0] a, b, output reg [3:0] y); always @* case (s) 1'b0: y = a; 1'b1: y = b; endcase endmodule",
    );
    assert!(restructure_mux(&m).is_none());
}

#[test]
fn exclusive_adders_share_one() {
    let m = module(
        "module r(input s, input [3:0] a, b, c, d, output reg [3:0] y); always @* if (s) y = a + b; else y = c + d; endmodule",
    );
    let out = applied(&m, "resource-share");
    assert_eq!(count_ops(&out, BinaryOp::Add), 1);
    assert_eq!(rhs_of(&out, "y"), parse_expr("(s ? a : c) + (s ? b : d)", "input s, input [3:0] a, b, c, d"));
}

#[test]
fn concurrent_adders_are_not_shared() {
    let m = module(
        "module r(input [3:0] a, b, c, d, output [3:0] y, z); assign y = a + b; assign z = c + d; endmodule",
    );
    assert!(share_resources(&m).is_none());
}

#[test]
fn three_arm_case_shares_a_subtractor() {
    let m = module(
        "module r(input [1:0] k, input [3:0] a, b, c, output reg [3:0] y);
            always @* case (k) 2'd0: y = a - b; 2'd1: y = b - c; default: y = c - a; endcase
        endmodule",
    );
    let out = applied(&m, "resource-share");
    assert_eq!(count_ops(&out, BinaryOp::Sub), 1);
    assert!(cells(&out) < cells(&m));
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

#[test]
fn equivalent_states_merge() {
    let m = module(REDUNDANT_FSM);
    let spec = &extract_fsm(&m)[0];
    assert_eq!(minimize_fsm(spec).states, vec![0, 1, 2]);
    let out = applied(&m, "fsm-minimize");
    assert_eq!(extract_fsm(&out)[0].states.len(), 3);
}

#[test]
fn unreachable_state_dropped() {
    let m = module(
        "module f(input clk, input rst, input x, output y);
            reg [1:0] st;
            always @(posedge clk) if (rst) st <= 2'd0; else case (st) 2'd0: st <= x ? 2'd1 : 2'd0; 2'd1: st <= 2'd0; 2'd2: st <= 2'd1; default: st <= 2'd0; endcase
            assign y = st == 2'd1;
        endmodule",
    );
    let specs = extract_fsm(&m);
    if let Some(spec) = specs.first() {
        let min = minimize_fsm(spec);
        assert!(!min.states.contains(&2));
        assert!(min.states.len() < spec.states.len());
    }
}

#[test]
fn toggle_is_already_minimal() {
    let m = module(
        "module t(input clk, input rst, output y); reg s; reg n;
            always @(posedge clk) if (rst) s <= 1'b0; else s <= n;
            always @* begin n = s; case (s) 1'b0: n = 1'b1; 1'b1: n = 1'b0; endcase end
            assign y = s;
        endmodule",
    );
    let specs = extract_fsm(&m);
    assert_eq!(minimize_fsm(&specs[0]).states.len(), 2);
    assert!(apply_rule(&m, "fsm-minimize").unwrap().is_none());
}

fn table_fsm(n: u64, bits: u32, next: &dyn Fn(u64, u64) -> u64, out: &dyn Fn(u64, u64) -> u64, reset: Option<u64>) -> FsmSpec {
    let inputs: Vec<(String, u32)> = (0..bits).map(|i| (format!("i{i}"), 1)).collect();
    let mut ports = vec![
        Port { name: "clk".into(), direction: Direction::Input, width: 1, is_reg: false },
        Port { name: "rst".into(), direction: Direction::Input, width: 1, is_reg: false },
    ];
    ports.extend(inputs.iter().map(|(n, w)| Port { name: n.clone(), direction: Direction::Input, width: *w, is_reg: false }));
    ports.push(Port { name: "y".into(), direction: Direction::Output, width: 1, is_reg: false });
    FsmSpec::from_tables(
        "f",
        ports,
        "st",
        crate::analysis::code_width(n as usize),
        (0..n).collect(),
        inputs,
        vec![("y".into(), 1)],
        next,
        &|s, v| vec![out(s, v)],
        reset,
        FsmControl {
            sensitivity: Sensitivity::Edges(vec![EdgeEvent { edge: Edge::Posedge, signal: "clk".into() }]),
            reset_cond: reset.map(|_| Expr::ident("rst")),
        },
    )
}

#[test]
fn two_states_any_style() {
    let f = table_fsm(2, 1, &|s, v| s ^ v, &|s, _| s, Some(0));
    for style in [StateStyle::Frequency, StateStyle::Binary, StateStyle::Gray] {
        let codes: BTreeSet<u64> = assign_states(&f, style).into_values().collect();
        assert_eq!(codes, BTreeSet::from([0, 1]));
    }
    let codes: BTreeSet<u64> = assign_states(&f, StateStyle::Onehot).into_values().collect();
    assert_eq!(codes, BTreeSet::from([1, 2]));
}

#[test]
fn frequency_assignment_by_hand() {
    // A=2, B=0, C=1; A->B on 3 of 4 valuations, B->C on one.
    let next = |s: u64, v: u64| match (s, v) {
        (2, 0) => 2,
        (2, _) => 0,
        (0, 3) => 1,
        (0, _) => 0,
        _ => 1,
    };
    let f = table_fsm(3, 2, &next, &|s, _| (s == 1) as u64, Some(2));
    // Traced by hand: (A,B) x3 first, then (B,C) x1.
    let map = assign_states(&f, StateStyle::Frequency);
    assert_eq!(map, BTreeMap::from([(2, 0), (0, 1), (1, 2)]));
}

#[test]
fn gray_codes_change_one_bit() {
    let f = table_fsm(4, 1, &|s, v| (s + v) % 4, &|s, _| s & 1, Some(0));
    let map = assign_states(&f, StateStyle::Gray);
    let codes: Vec<u64> = f.states.iter().map(|s| map[s]).collect();
    for w in codes.windows(2) {
        assert_eq!((w[0] ^ w[1]).count_ones(), 1);
    }
}

#[test]
fn sparse_codes_get_narrower() {
    let m = module(
        "module f(input clk, input rst, input x, output y);
            reg [2:0] st, nx;
            always @(posedge clk) if (rst) st <= 3'd5; else st <= nx;
            always @* begin nx = st; case (st) 3'd5: if (x) nx = 3'd6; 3'd6: nx = 3'd3; 3'd3: if (x) nx = 3'd5; endcase end
            assign y = st == 3'd3;
        endmodule",
    );
    let out = applied(&m, "fsm-assign");
    assert_eq!(extract_fsm(&out)[0].state_width, 2);
    assert!(cells(&out) < cells(&m));
}

#[test]
fn dispatch() {
    let m = module("module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule");
    assert_eq!(apply_rule(&m, "strength-reduce").unwrap(), reduce_strength(&m));
    assert!(matches!(apply_rule(&m, "bogus"), Err(RewriteError::UnknownRule(_))));
    assert!(apply_rule(&m, "fsm-minimize").unwrap().is_none());
}

#[test]
fn patch_log_entry_json() {
    let m = module("module m(input [7:0] x, output [9:0] y); assign y = x * 4; endmodule");
    let p = reduce_strength(&m).unwrap();
    assert_ne!(p.before_hash, p.after_hash);
    let v = serde_json::to_value(PatchLogEntry::from(&p)).unwrap();
    for k in ["rule_id", "module", "before_hash", "after_hash", "delta"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert!(p.predicted_delta.cells < 0);
}

/// Number of classes of reachable states that no input word tells apart,
/// by pairwise table filling.
fn brute_force_classes(f: &FsmSpec) -> usize {
    let reach: Vec<u64> = f.reachable().into_iter().collect();
    let n = reach.len();
    let idx = |s: u64| reach.iter().position(|x| *x == s).unwrap();
    let mut distinct = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            distinct[i][j] = (0..f.alphabet()).any(|v| f.output(reach[i], v) != f.output(reach[j], v));
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if !distinct[i][j]
                    && (0..f.alphabet()).any(|v| distinct[idx(f.next(reach[i], v))][idx(f.next(reach[j], v))])
                {
                    distinct[i][j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..n {
        if !reps.iter().any(|&r| !distinct[r][i]) {
            reps.push(i);
        }
    }
    reps.len()
}

fn random_fsm() -> impl Strategy<Value = FsmSpec> {
    (2u64..9, 0u32..3).prop_flat_map(|(n, bits)| {
        let a = 1usize << bits;
        (
            Just((n, bits)),
            prop::collection::vec(0..n, n as usize * a),
            prop::collection::vec(0u64..2, n as usize),
            any::<bool>(),
        )
    })
    .prop_map(|((n, bits), next, out, reset)| {
        let a = 1u64 << bits;
        table_fsm(
            n,
            bits,
            &|s, v| next[(s * a + v) as usize],
            &|s, _| out[s as usize],
            reset.then_some(0),
        )
    })
}

/// Modules whose every rule can be checked exhaustively.
fn random_module() -> impl Strategy<Value = ModuleAst> {
    (expr(), expr(), 0u8..3).prop_map(|(e1, e2, shape)| {
        let mut m = module_with(e1.clone());
        match shape {
            0 => {}
            1 => {
                // Same subexpression feeding a second output.
                m.ports.push(Port { name: "z".into(), direction: Direction::Output, width: 6, is_reg: false });
                m.items.push(Item::Assign(crate::frontend::ContinuousAssign {
                    lhs: crate::frontend::LValue::ident("z"),
                    rhs: Expr::binary(BinaryOp::Add, e1, e2),
                }));
            }
            _ => {
                m.ports.push(Port { name: "z".into(), direction: Direction::Output, width: 5, is_reg: true });
                m.items.push(Item::Always(crate::frontend::AlwaysBlock {
                    sensitivity: Sensitivity::Star,
                    body: Stmt::If {
                        cond: Expr::ident("s"),
                        then_branch: Box::new(Stmt::assign(
                            crate::frontend::LValue::ident("z"),
                            Expr::binary(BinaryOp::Mul, e2.clone(), Expr::ident("a")),
                            true,
                        )),
                        else_branch: Some(Box::new(Stmt::assign(
                            crate::frontend::LValue::ident("z"),
                            Expr::binary(BinaryOp::Mul, e2, Expr::lit(6)),
                            true,
                        ))),
                    },
                }));
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_rule_preserves_semantics_and_ports(m in random_module()) {
        for rule in RULE_IDS {
            if let Ok(Some(p)) = apply_rule(&m, rule) {
                prop_assert_eq!(&p.new_module.ports, &m.ports, "{}", rule);
                prop_assert_ne!(&p.before_hash, &p.after_hash);
                let v = check_equivalence(&m, &p.new_module, crate::verify::Method::Exhaustive, 0, 0).unwrap();
                prop_assert!(v.passed(), "{}:\n{}\n---\n{}", rule, print_module(&m), print_module(&p.new_module));
            }
        }
    }

    #[test]
    fn rules_settle_without_oscillating(m in random_module()) {
        for rule in RULE_IDS {
            let mut cur = m.clone();
            for i in 0..5 {
                match apply_rule(&cur, rule) {
                    Ok(Some(p)) => {
                        if i > 0 {
                            prop_assert!(cells(&p.new_module) < cells(&cur), "{} oscillates:\n{}", rule, print_module(&cur));
                        }
                        cur = p.new_module;
                    }
                    _ => break,
                }
            }
        }
    }

    #[test]
    fn hopcroft_matches_pairwise_oracle(f in random_fsm()) {
        let min = minimize_fsm(&f);
        prop_assert_eq!(min.states.len(), brute_force_classes(&f));
        prop_assert_eq!(brute_force_classes(&min), min.states.len());
    }

    #[test]
    fn minimized_module_is_equivalent(f in random_fsm()) {
        let orig = crate::analysis::emit_fsm_module(&f);
        let min = crate::analysis::emit_fsm_module(&minimize_fsm(&f));
        let v = check_equivalence(&orig, &min, crate::verify::Method::BoundedSequential, 64, 3).unwrap();
        prop_assert!(v.passed(), "{}\n---\n{}", print_module(&orig), print_module(&min));
    }
}
