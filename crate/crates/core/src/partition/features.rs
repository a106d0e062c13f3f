use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::width::{effective_width, ModuleScope};
use crate::frontend::{BinaryOp, Expr, ModuleAst, UnaryOp};

pub const BUCKETS: [&str; 4] = ["1-4", "5-16", "17-64", "65+"];

pub fn width_bucket(width: u32) -> usize {
    match width {
        0..=4 => 0,
        5..=16 => 1,
        17..=64 => 2,
        _ => 3,
    }
}

/// Operator kind counted by the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureOp {
    Unary(UnaryOp),
    Binary(BinaryOp),
    /// Bit, element or part select.
    Select,
    Conditional,
}

impl FeatureOp {
    pub fn name(self) -> &'static str {
        match self {
            FeatureOp::Unary(op) => match op {
                UnaryOp::Not => "not",
                UnaryOp::LogicNot => "lnot",
                UnaryOp::RedAnd => "redand",
                UnaryOp::RedOr => "redor",
                UnaryOp::RedXor => "redxor",
                UnaryOp::Neg => "neg",
            },
            FeatureOp::Binary(op) => match op {
                BinaryOp::Add => "add",
                BinaryOp::Sub => "sub",
                BinaryOp::Mul => "mul",
                BinaryOp::Div => "div",
                BinaryOp::Mod => "mod",
                BinaryOp::Shl => "shl",
                BinaryOp::Shr => "shr",
                BinaryOp::And => "and",
                BinaryOp::Or => "or",
                BinaryOp::Xor => "xor",
                BinaryOp::LogicAnd => "land",
                BinaryOp::LogicOr => "lor",
                BinaryOp::Eq => "eq",
                BinaryOp::Ne => "ne",
                BinaryOp::Lt => "lt",
                BinaryOp::Le => "le",
                BinaryOp::Gt => "gt",
                BinaryOp::Ge => "ge",
            },
            FeatureOp::Select => "select",
            FeatureOp::Conditional => "cond",
        }
    }
}

/// Feature key, rendered as `op@bucket` (e.g. `add@5-16`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureKey {
    pub op: FeatureOp,
    pub bucket: usize,
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.op.name(), BUCKETS[self.bucket])
    }
}

/// Operator counts keyed by `op@bucket`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    pub counts: BTreeMap<String, u64>,
}

impl FeatureVector {
    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn add(&mut self, key: FeatureKey, n: u64) {
        *self.counts.entry(key.to_string()).or_insert(0) += n;
    }

    pub fn scaled(&self, k: u64) -> FeatureVector {
        FeatureVector {
            counts: self.counts.iter().map(|(a, b)| (a.clone(), b * k)).collect(),
        }
    }
}

/// Count every operator node of `module` by kind and operand width.
pub fn extract_features(module: &ModuleAst) -> FeatureVector {
    let scope = ModuleScope::new(module);
    let mut v = FeatureVector::default();
    module.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            let w = |x: &Expr| effective_width(x, &scope);
            let (op, width) = match e {
                Expr::Unary { op, operand } => (FeatureOp::Unary(*op), w(operand)),
                Expr::Binary { op, lhs, rhs } => (FeatureOp::Binary(*op), w(lhs).max(w(rhs))),
                Expr::Ternary {
                    then_expr,
                    else_expr,
                    ..
                } => (FeatureOp::Conditional, w(then_expr).max(w(else_expr))),
                Expr::Index { .. } | Expr::Slice { .. } => (FeatureOp::Select, w(e)),
                _ => return,
            };
            v.add(
                FeatureKey {
                    op,
                    bucket: width_bucket(width),
                },
                1,
            );
        })
    });
    v
}
