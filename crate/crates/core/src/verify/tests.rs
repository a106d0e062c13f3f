use super::*;
use crate::frontend::{parse, parse_module};

fn m(src: &str) -> ModuleAst {
    parse_module(src, "t.v").unwrap()
}

#[test]
fn identical_modules_pass_fuzz() {
    let a = m("module m(input [7:0] a, b, output [8:0] y); assign y = a + b; endmodule");
    assert!(fuzz_filter(&a, &a, 200, 1).unwrap().passed());
}

#[test]
fn inverted_output_fails_and_replays() {
    let a = m("module m(input [3:0] a, output [3:0] y); assign y = a; endmodule");
    let b = m("module m(input [3:0] a, output [3:0] y); assign y = ~a; endmodule");
    let FuzzOutcome::Fail {
        counterexample,
        difference,
    } = fuzz_filter(&a, &b, 100, 7).unwrap()
    else {
        panic!("expected failure");
    };
    let ta = simulate(&a, &counterexample).unwrap();
    let tb = simulate(&b, &counterexample).unwrap();
    assert_eq!(first_difference(&ta, &tb), Some(difference));
}

#[test]
fn times_ten_is_two_shifts() {
    let a = m("module m(input [7:0] x, output [11:0] y); assign y = x * 10; endmodule");
    let b = m("module m(input [7:0] x, output [11:0] y); assign y = (x << 3) + (x << 1); endmodule");
    assert!(fuzz_filter(&a, &b, 1000, 3).unwrap().passed());
}

#[test]
fn port_mismatch() {
    let a = m("module m(input [3:0] a, output y); assign y = |a; endmodule");
    let b = m("module m(input [4:0] a, output y); assign y = |a; endmodule");
    assert!(matches!(
        fuzz_filter(&a, &b, 10, 0),
        Err(VerifyError::PortMismatch(_))
    ));
}

#[test]
fn method_dispatch() {
    assert_eq!(select_method(false, 16), Method::Exhaustive);
    assert_eq!(select_method(false, 64), Method::FuzzOnly);
    assert_eq!(select_method(true, 2), Method::BoundedSequential);
}

#[test]
fn shared_adder_exhaustive() {
    let a = m("module m(input sel, input [3:0] a, b, c, output [4:0] y); assign y = sel ? a + c : b + c; endmodule");
    let b = m("module m(input sel, input [3:0] a, b, c, output [4:0] y); assign y = (sel ? a : b) + c; endmodule");
    let v = check_equivalence(&a, &b, Method::Exhaustive, 0, 0).unwrap();
    assert_eq!(v.status, Status::Equivalent);
    assert_eq!(v.vectors_checked, 1 << 13);
}

#[test]
fn swapped_case_arm_is_inequivalent() {
    let a = m("module m(input [1:0] s, output reg [1:0] y);
        always @* case (s) 2'd0: y = 2'd1; 2'd1: y = 2'd2; default: y = 2'd0; endcase endmodule");
    let b = m("module m(input [1:0] s, output reg [1:0] y);
        always @* case (s) 2'd0: y = 2'd2; 2'd1: y = 2'd1; default: y = 2'd0; endcase endmodule");
    let v = check_equivalence(&a, &b, Method::Exhaustive, 0, 0).unwrap();
    let cex = v.counterexample().expect("counterexample");
    assert_eq!(cex.inputs["s"], vec![0]);
    assert_eq!(v.vectors_checked, 1);
}

#[test]
fn sequential_counter_cosim() {
    let src = "module c(input clk, input rst, input en, output reg [3:0] q);
        always @(posedge clk) if (rst) q <= 4'd0; else if (en) q <= q + 4'd1; endmodule";
    let a = m(src);
    let b = m(&src.replace("q + 4'd1", "4'd1 + q"));
    let v = check_equivalence(&a, &b, Method::BoundedSequential, 64, 5).unwrap();
    assert_eq!(v.status, Status::Inconclusive { budget: 64 });
    assert_eq!(v.vectors_checked, 64 * SEQ_RUNS);

    let bad = m(&src.replace("q + 4'd1", "q + 4'd2"));
    let v = check_equivalence(&a, &bad, Method::BoundedSequential, 64, 5).unwrap();
    let cex = v.counterexample().unwrap();
    let d = first_difference(&simulate(&a, cex).unwrap(), &simulate(&bad, cex).unwrap());
    assert!(d.is_some());
}

#[test]
fn flatten_and_simulate_hierarchy() {
    let d = parse(
        "module add(input [3:0] a, b, output [4:0] s); assign s = a + b; endmodule
         module top(input [3:0] x, y, output [4:0] z); add u (.a(x), .b(y), .s(z)); endmodule",
        "t.v",
    )
    .unwrap();
    let flat = flatten(&d, "top").unwrap();
    let stim = Stimulus {
        inputs: [("x".to_string(), vec![9]), ("y".to_string(), vec![8])]
            .into_iter()
            .collect(),
        cycles: 1,
        ..Default::default()
    };
    assert_eq!(simulate(&flat, &stim).unwrap().outputs["z"], vec![17]);
}

#[test]
fn fuzz_is_prefix_monotone() {
    let a = m("module m(input [7:0] a, output y); assign y = a == 8'd77; endmodule");
    let b = m("module m(input [7:0] a, output y); assign y = 1'b0; endmodule");
    let mut first_fail = None;
    for n in [10u64, 100, 1000, 5000] {
        let f = fuzz_filter(&a, &b, n, 11).unwrap();
        if first_fail.is_some() {
            assert!(!f.passed());
        }
        if !f.passed() && first_fail.is_none() {
            first_fail = Some(n);
        }
    }
    assert!(first_fail.is_some());
}
