use super::*;

fn one(src: &str) -> ModuleAst {
    parse_module(src, "t.v").unwrap()
}

fn roundtrip(src: &str) {
    let a = parse(src, "a.v").unwrap();
    let printed = print(&a);
    let b = parse(&printed, "b.v").unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert!(structural_eq(&a, &b), "round-trip mismatch:\n{printed}");
}

#[test]
fn minimal_module() {
    let d = parse("module m(input a, output b); assign b = a; endmodule", "t.v").unwrap();
    assert_eq!(d.modules.len(), 1);
    assert_eq!(d.modules[0].ports.len(), 2);
    assert_eq!(d.modules[0].items.len(), 1);
    assert!(matches!(d.modules[0].items[0], Item::Assign(_)));
}

#[test]
fn initial_is_unsupported() {
    let e = parse("module m; initial $display(); endmodule", "t.v").unwrap_err();
    assert_eq!(e.unsupported.as_deref(), Some("initial"));
    assert!(e.to_string().starts_with("t.v:1:11: "), "{e}");
    assert!(e.to_string().contains("initial"));
}

#[test]
fn unsupported_constructs_are_named() {
    let cases = [
        ("module m; generate endgenerate endmodule", "generate"),
        ("module m; function f; endfunction endmodule", "function"),
        ("module m; task t; endtask endmodule", "task"),
        ("module m(input a, output reg b); always @* b = #1 a; endmodule", "delay"),
        ("module m; integer i; endmodule", "integer"),
        ("module m(output [3:0] y); assign y = 4'bx0z1; endmodule", "x/z literal"),
    ];
    for (src, construct) in cases {
        let e = parse(src, "t.v").unwrap_err();
        assert_eq!(e.unsupported.as_deref(), Some(construct), "{src}: {e}");
    }
}

#[test]
fn errors_carry_expected_tokens() {
    let e = parse("module m(input a output b); endmodule", "x.v").unwrap_err();
    assert_eq!((e.line, e.column), (1, 18));
    assert!(!e.expected.is_empty());
    assert!(e.to_string().starts_with("x.v:1:18:"));
}

#[test]
fn undeclared_identifier_rejected() {
    let e = parse("module m(output y); assign y = q; endmodule", "t.v").unwrap_err();
    assert!(e.message.contains("undeclared identifier `q`"), "{e}");
}

#[test]
fn empty_module_prints_compactly() {
    let d = parse("module m; endmodule", "t.v").unwrap();
    assert_eq!(print(&d), "module m;\nendmodule\n");
}

#[test]
fn ternary_printing_respects_precedence() {
    let m = one(
        "module m(input s, input [3:0] a, b, c, output [3:0] y);
         assign y = (s ? a : b) + c; endmodule",
    );
    let Item::Assign(a) = &m.items[0] else { panic!() };
    assert_eq!(print_expr(&a.rhs), "(s ? a : b) + c");
    let m = one(
        "module m(input s, input [3:0] a, b, c, output [3:0] y);
         assign y = s ? a + c : b + c; endmodule",
    );
    let Item::Assign(a) = &m.items[0] else { panic!() };
    assert_eq!(print_expr(&a.rhs), "s ? a + c : b + c");
}

#[test]
fn binary_associativity_kept() {
    let m = one("module m(input [3:0] a, b, c, output [3:0] y); assign y = a - (b - c); endmodule");
    let Item::Assign(a) = &m.items[0] else { panic!() };
    assert_eq!(print_expr(&a.rhs), "a - (b - c)");
    let m = one("module m(input [3:0] a, b, c, output [3:0] y); assign y = a - b - c; endmodule");
    let Item::Assign(a) = &m.items[0] else { panic!() };
    assert_eq!(print_expr(&a.rhs), "a - b - c");
}

#[test]
fn structural_eq_cases() {
    let src = "module m(input [3:0] a, output [3:0] y); assign y = a + 4; endmodule";
    let a = parse(src, "one.v").unwrap();
    let b = parse(src, "two.v").unwrap();
    assert!(structural_eq(&a, &a));
    assert!(structural_eq(&a, &b));
    let c = parse(&src.replace("a + 4", "a + 5"), "one.v").unwrap();
    assert!(!structural_eq(&a, &c));
}

#[test]
fn params_fold_into_ranges() {
    let m = one(
        "module m #(parameter W = 8) (input [W-1:0] a, output [W-1:0] y);
         localparam H = W / 2;
         wire [H-1:0] t;
         assign t = a[H-1:0];
         assign y = {t, t};
         endmodule",
    );
    assert_eq!(m.ports[0].width, 8);
    assert_eq!(m.net("t").unwrap().width, 4);
    assert_eq!(m.param("H").unwrap().value.value, 4);
}

#[test]
fn non_ansi_ports() {
    let m = one(
        "module m(clk, d, q);
           input clk; input [3:0] d; output [3:0] q; reg [3:0] q;
           always @(posedge clk) q <= d;
         endmodule",
    );
    assert_eq!(m.ports[2].width, 4);
    assert!(m.ports[2].is_reg);
    assert_eq!(m.ports[2].direction, Direction::Output);
}

#[test]
fn wire_initializer_becomes_assign() {
    let m = one("module m(input a, output y); wire t = ~a; assign y = t; endmodule");
    assert_eq!(m.nets.len(), 1);
    assert_eq!(m.items.len(), 2);
}

#[test]
fn level_sensitivity_is_star() {
    let m = one("module m(input a, b, output reg y); always @(a or b) y = a & b; endmodule");
    let Item::Always(a) = &m.items[0] else { panic!() };
    assert_eq!(a.sensitivity, Sensitivity::Star);
}

#[test]
fn source_map_is_dense() {
    let d = parse(
        "module a(input x, output y); assign y = x; endmodule\nmodule b(input x, output y); a u(.x(x), .y(y)); endmodule",
        "t.v",
    )
    .unwrap();
    assert_eq!(d.source_map.positions.len(), 4);
    assert_eq!(d.source_map.item_pos(1, 0).unwrap().line, 2);
}

#[test]
fn external_modules_flagged() {
    let d = parse(
        "module top(input x, output y); blackbox u(.i(x), .o(y)); endmodule",
        "t.v",
    )
    .unwrap();
    assert_eq!(d.external_modules(), vec!["blackbox".to_string()]);
}

#[test]
fn roundtrip_rich_module() {
    roundtrip(
        "module fsm(input clk, input rst, input [1:0] in, output reg [3:0] out, output z);
           localparam S0 = 2'd0, S1 = 2'd1, S2 = 2'b10;
           reg [1:0] state, next_state;
           reg [7:0] mem [0:15];
           wire [3:0] w = {in, in} ^ 4'hA;
           assign z = &state | ^w[2:1] | ~|in;
           always @(posedge clk or posedge rst)
             if (rst) state <= S0;
             else state <= next_state;
           always @(*) begin
             next_state = state;
             out = 4'd0;
             case (state)
               S0: if (in == 2'd1) next_state = S1; else if (in[1]) next_state = S2;
               S1, S2: begin out = {2{in}}; next_state = S0; end
               default: ;
             endcase
           end
           always @(posedge clk) begin
             mem[in] <= {4'd0, out};
             if (in[0]) if (in[1]) out <= 4'd1; else out <= 4'd2;
           end
         endmodule",
    );
}

#[test]
fn roundtrip_casez_and_instances() {
    roundtrip(
        "module leaf(input [3:0] a, output [3:0] b); assign b = -a; endmodule
         module top(input [3:0] x, output [3:0] y, output reg p);
           wire [3:0] t;
           leaf u0(.a(x), .b(t));
           leaf u1(t, y);
           always @* casez (x) 4'b1???: p = 1'b1; default: p = 1'b0; endcase
         endmodule",
    );
}

#[test]
fn dangling_else_survives_printing() {
    let src = "module m(input a, b, output reg y);
      always @* if (a) begin if (b) y = 1'b1; end else y = 1'b0;
    endmodule";
    roundtrip(src);
    let m = one(src);
    let Item::Always(al) = &m.items[0] else { panic!() };
    let Stmt::If { else_branch, .. } = &al.body else { panic!() };
    assert!(else_branch.is_some());
}

#[test]
fn literal_forms() {
    roundtrip(
        "module m(output [63:0] y); assign y = 64'hFFFF_FFFF_FFFF_FFFF + 'h10 + 8'o17 + 3'b101 + 12; endmodule",
    );
    assert!(parse("module m(output [7:0] y); assign y = 65'd1; endmodule", "t.v").is_err());
}

#[test]
fn width_limit_enforced() {
    let e = parse(
        "module m(input [63:0] a, output [63:0] y); assign y = {a, a}; endmodule",
        "t.v",
    )
    .unwrap_err();
    assert!(e.message.contains("64"));
}

#[test]
fn reduction_nand_keeps_width() {
    let m = one("module m(input [3:0] a, output [3:0] y); assign y = ~&a; endmodule");
    let Item::Assign(a) = &m.items[0] else { panic!() };
    assert_eq!(print_expr(&a.rhs), "!(&a)");
}

mod props {
    use super::super::*;
    use proptest::prelude::*;

    use crate::testgen::{expr, module_with};

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in expr()) {
            let m = module_with(e);
            let d = DesignAst::from_modules(vec![m]);
            let text = print(&d);
            if let Ok(back) = parse(&text, "p.v") {
                prop_assert!(structural_eq(&d, &back), "{}", text);
            } else {
                // Only concatenations wider than 64 bits may be rejected.
                let err = parse(&text, "p.v").unwrap_err();
                prop_assert!(err.message.contains("64"), "{}: {}", err, text);
            }
        }

        #[test]
        fn parse_is_deterministic(e in expr()) {
            let text = print(&DesignAst::from_modules(vec![module_with(e)]));
            let a = parse(&text, "p.v");
            let b = parse(&text, "p.v");
            prop_assert_eq!(format!("{:?}", a), format!("{:?}", b));
        }
    }
}
