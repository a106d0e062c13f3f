//! Semantics-preserving rewrite rules over module ASTs.
//!
//! Every rule takes a module and returns either a [`RewritePatch`] holding
//! the rewritten module or `None` when nothing applies. Rules never touch
//! the port list.

mod cse;
mod dce;
mod fold;
mod fsm;
mod mcm;
mod mux;
mod share;
mod strength;
#[cfg(test)]
mod tests;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{estimate_module, CostWeights};
use crate::frontend::width::{rewrite_with_width, self_width, ModuleScope, Site};
use crate::frontend::{
    BinaryOp, Expr, Item, LValue, ModuleAst, Net, NetKind, Stmt, UnaryOp,
};

pub use cse::eliminate_subexpressions;
pub use dce::eliminate_dead_code;
pub use fold::{const_fold, constant_propagate, copy_propagate, ConstAnalysis, Lattice};
pub use fsm::{assign_states, minimize_fsm, remap_states, StateStyle};
pub use mcm::{decompose, optimize_mcm, AOperation};
pub use mux::{reduce_mux, restructure_mux, restructure_mux_with, DEFAULT_SPLIT_ARMS};
pub use share::share_resources;
pub use strength::reduce_strength;

pub const RULE_IDS: [&str; 12] = [
    "const-fold",
    "const-prop",
    "copy-prop",
    "cse",
    "dce",
    "strength-reduce",
    "mcm",
    "mux-reduce",
    "mux-restructure",
    "resource-share",
    "fsm-minimize",
    "fsm-assign",
];

/// Order of one fixpoint pass: enabling transforms first.
pub const PASS_ORDER: [&str; 11] = [
    "const-prop",
    "copy-prop",
    "dce",
    "strength-reduce",
    "cse",
    "mcm",
    "mux-reduce",
    "mux-restructure",
    "resource-share",
    "fsm-minimize",
    "fsm-assign",
];

pub const MAX_PASSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("{rule} does not apply: {reason}")]
    NotApplicable { rule: String, reason: String },
}

/// Cost of the new module minus the cost of the old one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostDelta {
    pub wires: i64,
    pub cells: i64,
    pub area: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewritePatch {
    pub rule_id: String,
    pub target_module: String,
    pub before_hash: String,
    pub after_hash: String,
    pub new_module: ModuleAst,
    pub predicted_delta: CostDelta,
}

/// One line of the patch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchLogEntry {
    pub rule_id: String,
    pub module: String,
    pub before_hash: String,
    pub after_hash: String,
    pub delta: CostDelta,
}

impl From<&RewritePatch> for PatchLogEntry {
    fn from(p: &RewritePatch) -> Self {
        PatchLogEntry {
            rule_id: p.rule_id.clone(),
            module: p.target_module.clone(),
            before_hash: p.before_hash.clone(),
            after_hash: p.after_hash.clone(),
            delta: p.predicted_delta,
        }
    }
}

pub type RuleResult = Result<Option<RewritePatch>, RewriteError>;

/// SHA-256 of the canonical JSON form of a module.
pub fn module_hash(m: &ModuleAst) -> String {
    let bytes = serde_json::to_vec(m).expect("serializable");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Wrap a rewritten module as a patch, or `None` if it did not change.
pub(crate) fn patch(rule: &str, before: &ModuleAst, after: ModuleAst) -> Option<RewritePatch> {
    debug_assert_eq!(before.ports, after.ports, "{rule} changed ports");
    let before_hash = module_hash(before);
    let after_hash = module_hash(&after);
    if before_hash == after_hash {
        return None;
    }
    let w = CostWeights::default();
    let a = estimate_module(before, &w);
    let b = estimate_module(&after, &w);
    Some(RewritePatch {
        rule_id: rule.to_string(),
        target_module: before.name.clone(),
        before_hash,
        after_hash,
        new_module: after,
        predicted_delta: CostDelta {
            wires: b.wires as i64 - a.wires as i64,
            cells: b.cells as i64 - a.cells as i64,
            area: b.area - a.area,
            delay: b.delay - a.delay,
        },
    })
}

pub fn apply_rule(module: &ModuleAst, rule_id: &str) -> RuleResult {
    Ok(match rule_id {
        "const-fold" => const_fold(module),
        "const-prop" => constant_propagate(module),
        "copy-prop" => copy_propagate(module),
        "cse" => eliminate_subexpressions(module),
        "dce" => eliminate_dead_code(module),
        "strength-reduce" => reduce_strength(module),
        "mcm" => return optimize_mcm(module),
        "mux-reduce" => reduce_mux(module),
        "mux-restructure" => restructure_mux(module),
        "resource-share" => share_resources(module),
        "fsm-minimize" => fsm::fsm_minimize_rule(module),
        "fsm-assign" => fsm::fsm_assign_rule(module),
        other => return Err(RewriteError::UnknownRule(other.to_string())),
    })
}

/// Rules that produce a patch on `module`.
pub fn applicable_rules(module: &ModuleAst) -> Vec<&'static str> {
    RULE_IDS
        .iter()
        .copied()
        .filter(|r| matches!(apply_rule(module, r), Ok(Some(_))))
        .collect()
}

/// Apply `rules` in order, repeatedly, until a whole pass changes nothing
/// or `max_passes` passes ran. `accept` may veto a patch (e.g. after a
/// failed equivalence check).
pub fn run_to_fixpoint(
    module: &ModuleAst,
    rules: &[&str],
    max_passes: usize,
    accept: &mut dyn FnMut(&ModuleAst, &RewritePatch) -> bool,
) -> Result<(ModuleAst, Vec<RewritePatch>), RewriteError> {
    let mut cur = module.clone();
    let mut log = Vec::new();
    for _ in 0..max_passes {
        let mut changed = false;
        for r in rules {
            if let Some(p) = apply_rule(&cur, r).or_else(|e| match e {
                RewriteError::NotApplicable { .. } => Ok(None),
                e => Err(e),
            })? {
                if accept(&cur, &p) {
                    cur = p.new_module.clone();
                    log.push(p);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok((cur, log))
}

/// Fresh identifiers `_rw<rule><n>` that do not collide with anything
/// declared in the module.
pub(crate) struct Namer {
    prefix: String,
    taken: HashSet<String>,
    next: usize,
}

impl Namer {
    pub fn new(m: &ModuleAst, rule: &str) -> Self {
        Namer {
            prefix: format!("_rw{}", rule.replace('-', "")),
            taken: m.declared_names().map(str::to_string).collect(),
            next: 0,
        }
    }

    pub fn fresh(&mut self) -> String {
        loop {
            let n = format!("{}{}", self.prefix, self.next);
            self.next += 1;
            if self.taken.insert(n.clone()) {
                return n;
            }
        }
    }
}

pub(crate) fn add_wire(m: &mut ModuleAst, name: &str, width: u32, rhs: Expr) {
    m.nets.push(Net {
        name: name.to_string(),
        kind: NetKind::Wire,
        width,
        depth: None,
    });
    m.items.push(Item::Assign(crate::frontend::ContinuousAssign {
        lhs: LValue::ident(name),
        rhs,
    }));
}

pub(crate) fn lvalue_width(l: &LValue, scope: &ModuleScope) -> u32 {
    use crate::frontend::width::WidthEnv;
    match l {
        LValue::Ident(n) => scope.width_of(n).unwrap_or(1),
        LValue::Index { name, .. } => {
            if scope.is_array(name) {
                scope.width_of(name).unwrap_or(1)
            } else {
                1
            }
        }
        LValue::Slice { msb, lsb, .. } => msb - lsb + 1,
        LValue::Concat(parts) => parts.iter().map(|p| lvalue_width(p, scope)).sum(),
    }
}

/// Position of an expression root: its context width and, for assignment
/// right-hand sides, the number of observable low bits.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub ctx: u32,
    pub low_bits: Option<u32>,
}

fn case_width(c: &crate::frontend::CaseStmt, scope: &ModuleScope) -> u32 {
    c.items
        .iter()
        .flat_map(|it| it.labels.iter())
        .map(|l| self_width(l, scope))
        .fold(self_width(&c.selector, scope), u32::max)
}

fn stmt_roots(s: &mut Stmt, scope: &ModuleScope, f: &mut dyn FnMut(&mut Expr, Root)) {
    match s {
        Stmt::Block(ss) => ss.iter_mut().for_each(|s| stmt_roots(s, scope, f)),
        Stmt::Assign { lhs, rhs, .. } => {
            lhs.for_each_index_mut(&mut |e| f(e, Root { ctx: 0, low_bits: None }));
            let w = lvalue_width(lhs, scope);
            f(rhs, Root { ctx: w, low_bits: Some(w) });
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            f(cond, Root { ctx: 0, low_bits: None });
            stmt_roots(then_branch, scope, f);
            if let Some(e) = else_branch {
                stmt_roots(e, scope, f);
            }
        }
        Stmt::Case(c) => {
            let w = case_width(c, scope);
            f(&mut c.selector, Root { ctx: w, low_bits: None });
            for it in &mut c.items {
                for l in &mut it.labels {
                    f(l, Root { ctx: w, low_bits: None });
                }
                stmt_roots(&mut it.body, scope, f);
            }
            if let Some(d) = &mut c.default {
                stmt_roots(d, scope, f);
            }
        }
        Stmt::Null => {}
    }
}

/// Every expression root of the module outside instance connections,
/// which keep their port-width context and are never rewritten.
pub(crate) fn for_each_root_mut(m: &mut ModuleAst, f: &mut dyn FnMut(&mut Expr, Root, usize)) {
    let scope = ModuleScope::new(m);
    for (i, item) in m.items.iter_mut().enumerate() {
        match item {
            Item::Assign(a) => {
                a.lhs.for_each_index_mut(&mut |e| f(e, Root { ctx: 0, low_bits: None }, i));
                let w = lvalue_width(&a.lhs, &scope);
                f(&mut a.rhs, Root { ctx: w, low_bits: Some(w) }, i);
            }
            Item::Always(a) => stmt_roots(&mut a.body, &scope, &mut |e, r| f(e, r, i)),
            Item::Instance(_) => {}
        }
    }
}

/// Where a node sits during [`rewrite_nodes`].
pub(crate) struct NodeCtx<'a> {
    pub site: Site,
    /// Every node of the enclosing root yields the same low bits at any
    /// evaluation width.
    pub root_low_safe: bool,
    pub scope: &'a ModuleScope,
    pub item: usize,
    /// The node is a whole root whose value does not depend on its
    /// evaluation width.
    pub exact_root: bool,
}

impl NodeCtx<'_> {
    /// Whether `new` may replace the node, given it has the same value
    /// at the node's evaluation width.
    pub fn accepts(&self, new: &Expr) -> bool {
        let w = self_width(new, self.scope);
        (self.site.self_width <= w && w <= self.site.width)
            || (self.site.low_bits.is_some() && self.root_low_safe && low_safe(new))
            || (self.exact_root && exact(new))
    }
}

/// Bottom-up rewrite of every node of every root. `f` returns the
/// replacement, which must have the same value at the node's evaluation
/// width; it is installed only if [`NodeCtx::accepts`] it.
pub(crate) fn rewrite_nodes(
    m: &mut ModuleAst,
    f: &mut dyn FnMut(&Expr, &NodeCtx<'_>) -> Option<Expr>,
) -> bool {
    let scope = ModuleScope::new(m);
    let mut changed = false;
    for_each_root_mut(m, &mut |root, r, item| {
        let root_low_safe = low_safe(root);
        // The root is the last node visited.
        let total = root.size();
        let mut seen = 0;
        rewrite_with_width(root, r.ctx, r.low_bits, &scope, &mut |e, site| {
            seen += 1;
            let ctx = NodeCtx {
                site,
                root_low_safe,
                scope: &scope,
                item,
                exact_root: seen == total && exact(e),
            };
            if let Some(new) = f(e, &ctx) {
                if new != *e && ctx.accepts(&new) {
                    *e = new;
                    changed = true;
                }
            }
        });
    });
    changed
}

/// The low `n` bits of the value do not depend on the evaluation width,
/// for any `n` not above that width.
pub fn low_safe(e: &Expr) -> bool {
    match e {
        Expr::Ident(_)
        | Expr::Literal(_)
        | Expr::Index { .. }
        | Expr::Slice { .. }
        | Expr::Concat(_)
        | Expr::Repeat { .. } => true,
        Expr::Unary { op, operand } => match op {
            UnaryOp::Not | UnaryOp::Neg => low_safe(operand),
            _ => true,
        },
        Expr::Binary { op, lhs, rhs } => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::And | BinaryOp::Or | BinaryOp::Xor => {
                low_safe(lhs) && low_safe(rhs)
            }
            BinaryOp::Shl => low_safe(lhs),
            BinaryOp::Shr | BinaryOp::Div | BinaryOp::Mod => false,
            _ => true,
        },
        Expr::Ternary {
            then_expr,
            else_expr,
            ..
        } => low_safe(then_expr) && low_safe(else_expr),
    }
}

/// The value is the same at every evaluation width not below the self
/// width: nothing overflows or gets extended.
pub fn exact(e: &Expr) -> bool {
    match e {
        Expr::Ident(_) | Expr::Index { .. } | Expr::Slice { .. } | Expr::Concat(_) | Expr::Repeat { .. } => true,
        Expr::Literal(l) => l.dont_care == 0,
        Expr::Unary { op, .. } => !matches!(op, UnaryOp::Not | UnaryOp::Neg),
        Expr::Binary { op, lhs, rhs } => match op {
            BinaryOp::And | BinaryOp::Or | BinaryOp::Xor => exact(lhs) && exact(rhs),
            BinaryOp::Shr => exact(lhs),
            BinaryOp::Div | BinaryOp::Mod => {
                exact(lhs) && exact(rhs) && rhs.as_literal().is_some_and(|l| l.value != 0)
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Shl => false,
            _ => true,
        },
        Expr::Ternary {
            then_expr,
            else_expr,
            ..
        } => exact(then_expr) && exact(else_expr),
    }
}

/// Remove `Null` statements and empty blocks, collapse single-statement
/// blocks and drop always blocks with nothing left.
pub(crate) fn tidy(m: &mut ModuleAst) {
    fn go(s: &mut Stmt) {
        match s {
            Stmt::Block(ss) => {
                ss.iter_mut().for_each(go);
                ss.retain(|s| !s.is_empty());
                if ss.len() == 1 {
                    *s = ss.pop().expect("one");
                } else if ss.is_empty() {
                    *s = Stmt::Null;
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                go(then_branch);
                if let Some(e) = else_branch {
                    go(e);
                    if e.is_empty() {
                        *else_branch = None;
                    }
                }
                if then_branch.is_empty() && else_branch.is_none() {
                    *s = Stmt::Null;
                } else if then_branch.is_empty() {
                    let e = else_branch.take().expect("else");
                    *s = Stmt::If {
                        cond: Expr::unary(UnaryOp::LogicNot, cond.clone()),
                        then_branch: e,
                        else_branch: None,
                    };
                }
            }
            Stmt::Case(c) => {
                c.items.iter_mut().for_each(|it| go(&mut it.body));
                if let Some(d) = &mut c.default {
                    go(d);
                    if d.is_empty() {
                        c.default = None;
                    }
                }
                // Trailing empty arms only fall through to the (now empty)
                // default; earlier ones shadow later labels.
                while c.default.is_none() && c.items.last().is_some_and(|it| it.body.is_empty()) {
                    c.items.pop();
                }
                if c.items.is_empty() && c.default.is_none() {
                    *s = Stmt::Null;
                }
            }
            Stmt::Assign { .. } | Stmt::Null => {}
        }
    }
    for it in &mut m.items {
        if let Item::Always(a) = it {
            go(&mut a.body);
        }
    }
    m.items.retain(|it| !matches!(it, Item::Always(a) if a.body.is_empty()));
}
