use super::{DocType, Document};

struct Entry {
    category: &'static str,
    instruction: &'static str,
    code: &'static str,
    algorithm: &'static str,
    diagram: Option<&'static str>,
}

const ENTRIES: &[Entry] = &[
    Entry {
        category: "constant-folding",
        instruction: "Evaluate operators whose operands are all literals or parameters at compile time and replace them with a single sized literal.",
        code: "module f(input [7:0] a, output [7:0] y); localparam K = 3; assign y = a + (K * 4 - 2); endmodule // becomes assign y = a + 10;",
        algorithm: "Bottom-up tree walk: if every child of an operator node is a literal, compute the value at the node width and substitute a literal; apply algebraic identities x+0, x*1, x&0.",
        diagram: None,
    },
    Entry {
        category: "constant-propagation",
        instruction: "Find wires that always carry the same constant value and substitute that value into every reader, then fold the resulting expressions.",
        code: "module p(input [7:0] a, output [7:0] y); wire [7:0] x = 5; wire [7:0] t = x + 10; assign y = a + t; endmodule // t folds to 15",
        algorithm: "Worklist dataflow over the def-use graph with the lattice top, constant, bottom; meet of two different constants is bottom; iterate until no value changes, then rewrite constant uses.",
        diagram: Some("Dataflow graph where a constant source node feeds an adder chain that collapses to one literal node."),
    },
    Entry {
        category: "copy-propagation",
        instruction: "Replace uses of a wire that is only a plain copy of another signal with the original signal and drop the copy.",
        code: "module c(input [3:0] a, output [3:0] y); wire [3:0] t; assign t = a; assign y = t ^ 4'd5; endmodule // y = a ^ 4'd5",
        algorithm: "For each single-driver assignment t = s of equal width, rename every read of t to s and remove the assignment when t is not a port.",
        diagram: None,
    },
    Entry {
        category: "subexpression-elimination",
        instruction: "Compute a repeated expression such as a + b once into a shared wire and reuse it instead of instantiating duplicate adders.",
        code: "module s(input [7:0] a, b, c, output [7:0] x, y); assign x = (a + b) & c; assign y = (a + b) | c; endmodule // wire t = a + b; reused twice",
        algorithm: "Hash every expression subtree by structure, count occurrences with equal evaluation width, hoist the largest repeated subtree into a fresh wire and substitute all occurrences.",
        diagram: Some("Two adders with identical inputs merged into a single adder whose output fans out to both consumers."),
    },
    Entry {
        category: "dead-code-elimination",
        instruction: "Remove assignments and nets whose values never reach an output port, a register that is observed, or an instance connection.",
        code: "module d(input [7:0] a, output [7:0] y); wire [7:0] unused = a * a; assign y = a + 1; endmodule // the multiplier is removed",
        algorithm: "Mark live signals backwards from output ports through data and control dependencies, then delete every assignment whose target is not marked and every undriven unreferenced net.",
        diagram: None,
    },
    Entry {
        category: "strength-reduction",
        instruction: "Replace a multiplication or division by a power of two with a shift, and a multiplication by a constant with few set bits with a sum of shifts.",
        code: "module m(input [7:0] x, output [15:0] y); assign y = x * 4; endmodule // becomes assign y = x << 2; x * 10 becomes (x << 3) + (x << 1)",
        algorithm: "Inspect constant operands: power of two gives a shift by log2 of the constant; otherwise decompose the constant into set bits and emit one shifted term per bit when the popcount is small.",
        diagram: Some("A multiplier block replaced by wiring that shifts the operand left by two bit positions."),
    },
    Entry {
        category: "multiple-constant-multiplication",
        instruction: "When one signal is multiplied by several constants, build shared shifted copies of the signal once and form every product as a sum of those shared terms.",
        code: "module mc(input [7:0] x, output [15:0] a, b, c); assign a = x * 3; assign b = x * 5; assign c = x * 9; endmodule // share x<<1, x<<2, x<<3",
        algorithm: "Adder graph synthesis: decompose each constant into fundamentals reachable by A-operations |2^l1 u + (-1)^s 2^l2 v| >> r; reuse fundamentals across constants to minimize adders.",
        diagram: Some("Adder graph with one input signal, shared shift nodes and three product outputs."),
    },
    Entry {
        category: "mux-reduction",
        instruction: "Simplify multiplexers whose inputs are equal, nested multiplexers on the same select, and multiplexers that choose between two operations with a common operand.",
        code: "module r(input s, input [7:0] a, b, c, output [7:0] y); assign y = s ? a + c : b + c; endmodule // becomes (s ? a : b) + c",
        algorithm: "Pattern match ternary nodes: c ? x : x gives x; c ? (c ? p : q) : r gives c ? p : r; c ? f(a, z) : f(b, z) gives f(c ? a : b, z).",
        diagram: None,
    },
    Entry {
        category: "mux-restructuring",
        instruction: "Convert priority if-else chains comparing one selector against constants into a parallel case statement and split very wide case statements into a two level tree.",
        code: "module rs(input [1:0] s, input [7:0] a, b, c, d, output reg [7:0] y); always @(*) if (s == 0) y = a; else if (s == 1) y = b; else if (s == 2) y = c; else y = d; endmodule",
        algorithm: "Walk the else chain collecting selector equality tests with constant labels; emit a case with the final else as default; for more arms than a threshold, group labels by their high selector bits.",
        diagram: Some("Priority chain of two-input multiplexers redrawn as one balanced multiplexer tree driven by a decoder."),
    },
    Entry {
        category: "resource-sharing",
        instruction: "Use a single adder or multiplier for mutually exclusive branches by multiplexing its operands rather than its results.",
        code: "module rsh(input s, input [7:0] a, b, c, d, output reg [7:0] y); always @(*) if (s) y = a + b; else y = c + d; endmodule // y = (s ? a : c) + (s ? b : d)",
        algorithm: "For an if-else or case whose branches each assign the same target with the same operator, select each operand with the branch condition and apply the operator once.",
        diagram: Some("Two adders feeding an output multiplexer replaced by operand multiplexers feeding one adder."),
    },
    Entry {
        category: "state-minimization",
        instruction: "Merge finite state machine states that produce identical outputs and transition to equivalent states for every input, and drop unreachable states.",
        code: "module fsm(input clk, rst, in, output reg out); reg [1:0] st; always @(posedge clk) if (rst) st <= 0; else case (st) 0: st <= in ? 1 : 2; 1: st <= 0; 2: st <= 0; endcase endmodule",
        algorithm: "Hopcroft partition refinement: start from blocks of states with equal output rows, split blocks by predecessor sets of a splitter block under each input symbol until stable.",
        diagram: Some("State transition graph where two states with identical outputs and successors collapse into one node."),
    },
    Entry {
        category: "state-assignment",
        instruction: "Choose state register encodings so that frequent transitions change few bits and the state register uses the minimum width.",
        code: "module enc(input clk, rst, go, output reg busy); localparam IDLE = 4, RUN = 9; reg [3:0] st; always @(posedge clk) if (rst) st <= IDLE; else st <= go ? RUN : IDLE; endmodule",
        algorithm: "Count state-changing transitions between each pair of states, order states by descending pair frequency and assign consecutive binary codes, yielding a compact register.",
        diagram: None,
    },
];

/// Instruction, code and algorithm documents for every rewrite family,
/// with captions for some diagrams. Links run diagram -> instruction,
/// diagram -> code, instruction -> code, code -> algorithm and
/// instruction -> algorithm.
pub fn builtin_documents() -> Vec<Document> {
    let mut docs = Vec::new();
    for e in ENTRIES {
        let id = |prefix: &str| format!("{prefix}-{}", e.category);
        let doc = |ty: DocType, prefix: &str, text: &str, links: Vec<String>| Document {
            id: id(prefix),
            doc_type: ty,
            text: text.to_string(),
            category: e.category.to_string(),
            links,
        };
        docs.push(doc(
            DocType::Instruction,
            "instr",
            e.instruction,
            vec![id("code"), id("algo")],
        ));
        docs.push(doc(DocType::Code, "code", e.code, vec![id("algo")]));
        docs.push(doc(DocType::Algorithm, "algo", e.algorithm, Vec::new()));
        if let Some(d) = e.diagram {
            docs.push(doc(DocType::Diagram, "diag", d, vec![id("instr"), id("code")]));
        }
    }
    docs
}
