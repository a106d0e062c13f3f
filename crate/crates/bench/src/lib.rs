//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use rtlopt_core::analysis::{EdgeKind, InstanceTree};

pub const DATAPATH: &str = "module d(input s, input [7:0] x, input [3:0] a, b, c,
    output [11:0] p, q, r, output [3:0] y);
    wire [7:0] k; assign k = 5;
    assign p = x * 3; assign q = x * 5 + k; assign r = x * 9;
    assign y = s ? a + c : b + c;
endmodule";

pub const SHIFTED: &str = "module d(input s, input [7:0] x, input [3:0] a, b, c,
    output [11:0] p, q, r, output [3:0] y);
    wire [11:0] x4; assign x4 = x << 2;
    assign p = (x << 1) + x; assign q = x4 + x + 5; assign r = (x4 << 1) + x;
    assign y = (s ? a : b) + c;
endmodule";

pub fn desk_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/desk")
}

/// A balanced binary instance tree with deterministic weights.
pub fn binary_tree(nodes: usize) -> InstanceTree {
    let weights: Vec<f64> = (0..nodes).map(|i| 1.0 + (i * 7 % 11) as f64).collect();
    let edges: Vec<(usize, usize, EdgeKind, f64)> = (1..nodes)
        .map(|c| ((c - 1) / 2, c, EdgeKind::Direct, 0.1 + (c % 5) as f64 / 10.0))
        .collect();
    InstanceTree::from_parts(&weights, &edges)
}
