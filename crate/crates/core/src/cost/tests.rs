use proptest::prelude::*;

use super::*;
use crate::frontend::{parse, parse_module, Literal};
use crate::testgen::{expr, module_with};

fn cost(src: &str) -> CostReport {
    estimate(&parse(src, "t.v").unwrap(), &CostWeights::default())
}

fn report(cells: u64, area: f64, delay: f64) -> CostReport {
    CostReport {
        cells,
        area,
        delay,
        ..Default::default()
    }
}

#[test]
fn empty_module_costs_nothing() {
    let r = cost("module m; endmodule");
    assert_eq!((r.wires, r.cells, r.area, r.delay), (0, 0, 0.0, 0.0));
}

#[test]
fn shared_adder_saves_one_adder() {
    let a = cost("module m(input sel, input [3:0] a, b, c, output [4:0] y); assign y = sel ? a + c : b + c; endmodule");
    let b = cost("module m(input sel, input [3:0] a, b, c, output [4:0] y); assign y = (sel ? a : b) + c; endmodule");
    let w = CostWeights::default();
    // 5-bit adder in a 5-bit context.
    let adder = w.add.cells_for(5) * 5;
    assert_eq!(a.cells - b.cells, adder);
}

#[test]
fn hand_counted_cells() {
    // 8-bit a & b: 8 logic cells; == against 8'd3: 8 compare cells;
    // 1-bit mux on y.
    let r = cost("module m(input [7:0] a, b, output y); assign y = (a & b) == 8'd3 ? 1'b1 : 1'b0; endmodule");
    assert_eq!(r.cells, 8 + 8 + 1);
    assert_eq!(r.wires, 3 + 3);
    let w = CostWeights::default();
    let area = 8.0 * w.logic.area + 8.0 * w.compare.area + 1.0 * w.mux.area;
    assert!((r.area - area).abs() < 1e-9);
    // logic 1 level, compare log2(8)+1 = 4 levels, mux 1 level.
    assert!((r.delay - 6.0).abs() < 1e-9);
}

#[test]
fn registers_count_per_bit() {
    let r = cost("module m(input clk, input [3:0] d, output reg [3:0] q); always @(posedge clk) q <= d; endmodule");
    assert_eq!(r.cells, 4);
    assert_eq!(r.delay, 0.0);
}

#[test]
fn instances_multiply_submodule_cost() {
    let leaf = "module add(input [3:0] a, b, output [3:0] s); assign s = a + b; endmodule";
    let one = cost(leaf);
    let two = cost(&format!(
        "{leaf} module top(input [3:0] x, y, output [3:0] p, q); add u0 (x, y, p); add u1 (y, x, q); endmodule"
    ));
    assert_eq!(two.cells, 2 * one.cells);
    let sum: u64 = two.modules.iter().map(|m| m.cells).sum();
    assert_eq!(sum, two.cells);
}

#[test]
fn compare_policy() {
    assert_eq!(compare(&report(10, 1.0, 1.0), &report(9, 5.0, 5.0)).overall, Trend::Improved);
    assert_eq!(compare(&report(10, 1.0, 1.0), &report(10, 1.0, 1.0)).overall, Trend::Equal);
    assert_eq!(compare(&report(10, 1.0, 2.0), &report(10, 1.0, 1.0)).overall, Trend::Improved);
    assert_eq!(compare(&report(10, 1.0, 1.0), &report(10, 2.0, 0.0)).overall, Trend::Worse);
}

#[test]
fn geomean_and_ratio() {
    assert!((geomean(&[4.0, 9.0]) - 6.0).abs() < 1e-12);
    let m = |c: f64| Metrics {
        wires: c,
        cells: c,
        area: c,
        delay: c,
    };
    let base = vec![m(10.0), m(20.0), m(7.0)];
    let same = aggregate(&base, &base).unwrap();
    assert!((same.ratio.cells - 1.0).abs() < 1e-12);
    let half: Vec<Metrics> = base.iter().map(|x| m(x.cells * 0.5)).collect();
    assert!((aggregate(&half, &base).unwrap().ratio.cells - 0.5).abs() < 1e-12);
    assert!(matches!(
        aggregate(&half[..1], &base),
        Err(CostError::LengthMismatch { .. })
    ));
}

#[test]
fn weights_json_roundtrip_and_validation() {
    let w = CostWeights::default();
    let text = serde_json::to_string(&w).unwrap();
    assert_eq!(CostWeights::from_json(&text).unwrap(), w);
    assert!(CostWeights::from_json(r#"{"add": {"cells": [0,1,1,1], "area": 1.0, "delay": 1.0}}"#).is_err());
    assert!(CostWeights::from_json(r#"{"adder": {}}"#).is_err());
    let partial = CostWeights::from_json(r#"{"mux": {"cells": [3,3,3,3], "area": 1.0, "delay": 2.0}}"#).unwrap();
    assert_eq!(partial.mux.cells, [3; 4]);
    assert_eq!(partial.add, w.add);
}

fn weight() -> impl Strategy<Value = OpWeight> {
    (1u64..40, 0.1f64..5.0, 0.1f64..5.0).prop_map(|(c, a, d)| OpWeight {
        cells: [c; 4],
        area: a,
        delay: d,
    })
}

/// Replace the `k`-th operator node (pre-order) with a literal of the same
/// effective width, dropping its whole subtree.
fn delete_operator(m: &mut ModuleAst, k: usize) -> bool {
    let scope = crate::frontend::width::ModuleScope::new(m);
    let mut seen = 0usize;
    let mut done = false;
    fn go(
        e: &mut Expr,
        k: usize,
        seen: &mut usize,
        done: &mut bool,
        scope: &crate::frontend::width::ModuleScope,
    ) {
        if *done {
            return;
        }
        if e.is_operator() {
            if *seen == k {
                let w = crate::frontend::width::effective_width(e, scope);
                *e = Expr::Literal(Literal::sized(w, 0));
                *done = true;
                return;
            }
            *seen += 1;
        }
        for c in e.children_mut() {
            go(c, k, seen, done, scope);
        }
    }
    m.for_each_expr_mut(&mut |e| go(e, k, &mut seen, &mut done, &scope));
    done
}

proptest! {
    #[test]
    fn shift_beats_multiply(mul in weight(), shift in weight(), bits in 3u32..16) {
        prop_assume!(mul.cells[0] > shift.cells[0]);
        let w = CostWeights { mul, shift, ..CostWeights::default() };
        let a = parse_module(&format!("module m(input [{}:0] x, output [{}:0] y); assign y = x * 4; endmodule", bits - 1, bits + 1), "t.v").unwrap();
        let b = parse_module(&format!("module m(input [{}:0] x, output [{}:0] y); assign y = x << 2; endmodule", bits - 1, bits + 1), "t.v").unwrap();
        let ca = estimate_module(&a, &w);
        let cb = estimate_module(&b, &w);
        prop_assert!(cb.cells < ca.cells);
        prop_assert!(cb.area < ca.area);
    }

    #[test]
    fn deleting_an_operator_never_costs_more(e in expr(), k in 0usize..8) {
        let m = module_with(e);
        let mut d = m.clone();
        prop_assume!(delete_operator(&mut d, k));
        let w = CostWeights::default();
        let before = estimate_module(&m, &w);
        let after = estimate_module(&d, &w);
        prop_assert!(after.wires <= before.wires);
        prop_assert!(after.cells <= before.cells);
        prop_assert!(after.area <= before.area + 1e-9);
        prop_assert!(after.delay <= before.delay + 1e-9);
    }

    #[test]
    fn ratio_is_scale_invariant(xs in prop::collection::vec((1.0f64..100.0, 1.0f64..100.0), 1..8), c in 0.1f64..10.0) {
        let m = |v: f64| Metrics { wires: v, cells: v, area: v, delay: v };
        let ours: Vec<Metrics> = xs.iter().map(|p| m(p.0)).collect();
        let base: Vec<Metrics> = xs.iter().map(|p| m(p.1)).collect();
        let r1 = aggregate(&ours, &base).unwrap().ratio.cells;
        let so: Vec<Metrics> = xs.iter().map(|p| m(p.0 * c)).collect();
        let sb: Vec<Metrics> = xs.iter().map(|p| m(p.1 * c)).collect();
        let r2 = aggregate(&so, &sb).unwrap().ratio.cells;
        prop_assert!((r1 - r2).abs() < 1e-9 * r1.max(1.0));
    }

    #[test]
    fn compare_is_antisymmetric(a in (0u64..20, 0u32..4, 0u32..4), b in (0u64..20, 0u32..4, 0u32..4)) {
        let ra = report(a.0, a.1 as f64, a.2 as f64);
        let rb = report(b.0, b.1 as f64, b.2 as f64);
        let ab = compare(&ra, &rb).overall;
        let ba = compare(&rb, &ra).overall;
        let flipped = match ab { Trend::Improved => Trend::Worse, Trend::Worse => Trend::Improved, Trend::Equal => Trend::Equal };
        prop_assert_eq!(ba, flipped);
        prop_assert_eq!(ab == Trend::Equal, (a.0, a.1, a.2) == (b.0, b.1, b.2));
    }
}
