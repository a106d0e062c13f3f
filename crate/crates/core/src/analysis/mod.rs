//! Structural analyses: instance tree, def-use chains, state machines and
//! optimization/verification pattern recognition.

mod defuse;
mod fsm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::frontend::{BinaryOp, Expr, Item, ModuleAst, NetKind, Stmt, UnaryOp};

pub use defuse::{
    build_def_use, build_def_use_with, DefKind, DefSite, DefUseGraph, PortResolver, UseSite,
};
pub use fsm::{
    code_width, emit_fsm_module, extract_fsm, FsmControl, FsmSpec, OutputRow, Transition,
    MAX_ALPHABET_BITS, MAX_STATES,
};
pub use tree::{
    build_instance_tree, build_instance_tree_with, EdgeKind, EdgeWeights, InstanceTree, TreeEdge,
    TreeError, TreeNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Datapath,
    Mux,
    Fsm,
    Memory,
    Basic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationPattern {
    Combinational,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub module: String,
    pub patterns: Vec<Pattern>,
    pub sub_hints: Vec<String>,
    pub verification_pattern: VerificationPattern,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub fsm_extractions: Vec<FsmSpec>,
    pub advisories: Vec<String>,
}

impl AnalysisResult {
    pub fn has(&self, p: Pattern) -> bool {
        self.patterns.contains(&p)
    }
}

/// Hint name advertised for each rewrite rule.
pub fn hint_for_rule(rule: &str) -> Option<&'static str> {
    Some(match rule {
        "const-fold" => "constant-folding",
        "const-prop" => "constant-propagation",
        "copy-prop" => "copy-propagation",
        "cse" => "subexpression-elimination",
        "dce" => "dead-code-elimination",
        "strength-reduce" => "strength-reduction",
        "mcm" => "multiple-constant-multiplication",
        "mux-reduce" => "mux-reduction",
        "mux-restructure" => "mux-restructuring",
        "resource-share" => "resource-sharing",
        "fsm-minimize" => "state-minimization",
        "fsm-assign" => "state-assignment",
        _ => return None,
    })
}

pub fn rule_for_hint(hint: &str) -> Option<&'static str> {
    crate::rewrite::RULE_IDS
        .iter()
        .copied()
        .find(|r| hint_for_rule(r) == Some(hint))
}

/// True iff the module has an edge-triggered block or a non-blocking
/// assignment.
pub fn is_sequential(m: &ModuleAst) -> bool {
    m.items.iter().any(|it| match it {
        Item::Always(a) => {
            let mut nb = false;
            a.body.walk(&mut |s| {
                nb |= matches!(s, Stmt::Assign { blocking: false, .. });
            });
            a.is_edge_triggered() || nb
        }
        _ => false,
    })
}

fn is_data(e: &Expr) -> bool {
    !matches!(e, Expr::Literal(l) if l.value <= 1)
}

fn has_mux(m: &ModuleAst) -> bool {
    let mut found = false;
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            if let Expr::Ternary {
                then_expr,
                else_expr,
                ..
            } = e
            {
                found |= is_data(then_expr) || is_data(else_expr);
            }
        })
    });
    for item in &m.items {
        if let Item::Always(a) = item {
            a.body.walk(&mut |s| {
                if let Stmt::Case(c) = s {
                    let mut data = false;
                    for it in &c.items {
                        it.body.walk(&mut |b| {
                            if let Stmt::Assign { rhs, .. } = b {
                                data |= !matches!(rhs, Expr::Literal(_));
                            }
                        });
                    }
                    found |= data;
                }
            });
        }
    }
    found
}

fn has_arith(m: &ModuleAst) -> bool {
    let mut found = false;
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            found |= match e {
                Expr::Binary { op, .. } => matches!(
                    op,
                    BinaryOp::Add
                        | BinaryOp::Sub
                        | BinaryOp::Mul
                        | BinaryOp::Div
                        | BinaryOp::Mod
                        | BinaryOp::Shl
                        | BinaryOp::Shr
                ),
                Expr::Unary { op, .. } => *op == UnaryOp::Neg,
                _ => false,
            }
        })
    });
    found
}

/// Arrays with an addressed access, and memory-class suggestions for them.
fn memory_advisories(m: &ModuleAst) -> Vec<String> {
    let mut out = Vec::new();
    for n in m.nets.iter().filter(|n| n.kind == NetKind::RegArray) {
        let (mut reads, mut writes) = (0usize, 0usize);
        m.for_each_expr(&mut |root| {
            root.walk(&mut |e| {
                if let Expr::Index { base, .. } = e {
                    if base.as_ident() == Some(n.name.as_str()) {
                        reads += 1;
                    }
                }
            })
        });
        for item in &m.items {
            if let Item::Always(a) = item {
                a.body.walk(&mut |s| {
                    if let Stmt::Assign { lhs, .. } = s {
                        if lhs.targets().contains(&n.name.as_str()) {
                            writes += 1;
                        }
                    }
                });
            }
        }
        if reads + writes == 0 {
            continue;
        }
        let depth = n.depth.unwrap_or(0);
        out.push(format!(
            "memory `{}` ({} x {} bits, {} read and {} write ports): consider sharing one physical array between accesses that never overlap in time",
            n.name, depth, n.width, reads, writes
        ));
        if depth >= 4 && n.width <= 16 {
            out.push(format!(
                "memory `{}`: folding pairs of narrow words into one wider word halves the address decoder",
                n.name
            ));
        }
        if reads > 1 {
            out.push(format!(
                "memory `{}`: {} concurrent reads; banking the array by low address bits avoids port replication",
                n.name, reads
            ));
        }
    }
    out
}

/// Recognize patterns and applicable rewrites in `module`.
pub fn analyze(module: &ModuleAst) -> AnalysisResult {
    let fsms = extract_fsm(module);
    let advisories = memory_advisories(module);
    let mut patterns = Vec::new();
    if has_arith(module) {
        patterns.push(Pattern::Datapath);
    }
    if has_mux(module) {
        patterns.push(Pattern::Mux);
    }
    if !fsms.is_empty() {
        patterns.push(Pattern::Fsm);
    }
    if !advisories.is_empty() {
        patterns.push(Pattern::Memory);
    }
    if patterns.is_empty() {
        patterns.push(Pattern::Basic);
    }
    let sub_hints = crate::rewrite::applicable_rules(module)
        .into_iter()
        .filter_map(hint_for_rule)
        .map(str::to_string)
        .collect();
    AnalysisResult {
        module: module.name.clone(),
        patterns,
        sub_hints,
        verification_pattern: if is_sequential(module) {
            VerificationPattern::Sequential
        } else {
            VerificationPattern::Combinational
        },
        fsm_extractions: fsms,
        advisories,
    }
}
