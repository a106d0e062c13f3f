//! Expression width inference (Verilog self/context-determined sizing).
//!
//! Widths are not stored on [`Expr`] nodes; they are a function of the
//! tree and the declarations in scope, so rewrites never leave stale sizes
//! behind.

use std::collections::HashMap;

use super::ast::{Expr, Literal, ModuleAst};

/// Declarations visible to an expression.
pub trait WidthEnv {
    /// Declared width of a signal or parameter (element width for arrays).
    fn width_of(&self, name: &str) -> Option<u32>;
    fn is_array(&self, _name: &str) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    Port { width: u32 },
    Net { width: u32, depth: Option<u32> },
    Param(Literal),
}

/// Name → declaration index for one module.
#[derive(Debug, Clone, Default)]
pub struct ModuleScope {
    symbols: HashMap<String, Symbol>,
}

impl ModuleScope {
    pub fn new(module: &ModuleAst) -> Self {
        let mut symbols = HashMap::new();
        for p in &module.params {
            symbols.insert(p.name.clone(), Symbol::Param(p.value));
        }
        for n in &module.nets {
            symbols.insert(
                n.name.clone(),
                Symbol::Net {
                    width: n.width,
                    depth: n.depth,
                },
            );
        }
        for p in &module.ports {
            symbols.insert(p.name.clone(), Symbol::Port { width: p.width });
        }
        ModuleScope { symbols }
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn param(&self, name: &str) -> Option<Literal> {
        match self.symbols.get(name) {
            Some(Symbol::Param(l)) => Some(*l),
            _ => None,
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, sym: Symbol) {
        self.symbols.insert(name.into(), sym);
    }
}

impl WidthEnv for ModuleScope {
    fn width_of(&self, name: &str) -> Option<u32> {
        self.symbols.get(name).map(|s| match s {
            Symbol::Port { width } | Symbol::Net { width, .. } => *width,
            Symbol::Param(l) => l.self_width(),
        })
    }

    fn is_array(&self, name: &str) -> bool {
        matches!(self.symbols.get(name), Some(Symbol::Net { depth: Some(_), .. }))
    }
}

impl<F: Fn(&str) -> Option<u32>> WidthEnv for F {
    fn width_of(&self, name: &str) -> Option<u32> {
        self(name)
    }
}

/// Self-determined width of `e`.
pub fn self_width(e: &Expr, env: &dyn WidthEnv) -> u32 {
    width_impl(e, env, false)
}

/// Like [`self_width`] but unsized literals count only their significant
/// bits. Used where `x + 1` should look like an `x`-wide adder rather than
/// a 32-bit one.
pub fn effective_width(e: &Expr, env: &dyn WidthEnv) -> u32 {
    width_impl(e, env, true)
}

fn width_impl(e: &Expr, env: &dyn WidthEnv, effective: bool) -> u32 {
    let w = |x: &Expr| width_impl(x, env, effective);
    match e {
        Expr::Ident(n) => env.width_of(n).unwrap_or(Literal::UNSIZED_WIDTH),
        Expr::Literal(l) => {
            if effective {
                l.effective_width()
            } else {
                l.self_width()
            }
        }
        Expr::Index { base, .. } => match base.as_ref() {
            Expr::Ident(n) if env.is_array(n) => env.width_of(n).unwrap_or(1),
            _ => 1,
        },
        Expr::Slice { msb, lsb, .. } => msb - lsb + 1,
        Expr::Concat(parts) => parts.iter().map(w).sum(),
        Expr::Repeat { count, parts } => count * parts.iter().map(w).sum::<u32>(),
        Expr::Unary { op, operand } => {
            if op.is_reduction() {
                1
            } else {
                w(operand)
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            if op.is_comparison() || op.is_logical() {
                1
            } else if op.is_shift() {
                w(lhs)
            } else {
                w(lhs).max(w(rhs))
            }
        }
        Expr::Ternary {
            then_expr,
            else_expr,
            ..
        } => w(then_expr).max(w(else_expr)),
    }
}

/// Whether the node's operands grow with the surrounding context.
pub fn is_context_determined(e: &Expr) -> bool {
    match e {
        Expr::Unary { op, .. } => !op.is_reduction(),
        Expr::Binary { op, .. } => !(op.is_comparison() || op.is_logical()),
        Expr::Ternary { .. } => true,
        _ => false,
    }
}

/// Width at which `e` is evaluated when it sits in a context of width
/// `ctx` (0 for a self-determined position).
pub fn eval_width(e: &Expr, ctx: u32, env: &dyn WidthEnv) -> u32 {
    let sw = self_width(e, env);
    if is_context_determined(e) {
        sw.max(ctx)
    } else {
        sw
    }
}

/// Context widths for each child of `e` (same order as [`Expr::children`]),
/// given that `e` itself is evaluated at width `w` (from [`eval_width`]).
pub fn child_contexts(e: &Expr, w: u32, env: &dyn WidthEnv) -> Vec<u32> {
    match e {
        Expr::Ident(_) | Expr::Literal(_) => Vec::new(),
        Expr::Index { .. } => vec![0, 0],
        Expr::Slice { .. } => vec![0],
        Expr::Concat(parts) | Expr::Repeat { parts, .. } => vec![0; parts.len()],
        Expr::Unary { op, .. } => {
            if op.is_reduction() {
                vec![0]
            } else {
                vec![w]
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            if op.is_comparison() {
                let ow = self_width(lhs, env).max(self_width(rhs, env));
                vec![ow, ow]
            } else if op.is_logical() {
                vec![0, 0]
            } else if op.is_shift() {
                vec![w, 0]
            } else {
                vec![w, w]
            }
        }
        Expr::Ternary { .. } => vec![0, w, w],
    }
}

/// Width at which the right-hand side of an assignment to a target of
/// width `lhs_width` is evaluated.
pub fn assign_width(rhs: &Expr, lhs_width: u32, env: &dyn WidthEnv) -> u32 {
    eval_width(rhs, lhs_width, env)
}

/// Where a node sits, as seen by a rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site {
    /// Width the node is evaluated at.
    pub width: u32,
    /// Self-determined width of the node before any rewrite.
    pub self_width: u32,
    /// `Some(n)` when only the low `n` bits of this node can influence the
    /// final value (every ancestor up to a truncating assignment is an
    /// operator whose low result bits depend only on low operand bits).
    pub low_bits: Option<u32>,
}

impl Site {
    /// Whether a replacement with self width `new_width` keeps every other
    /// node's evaluation width intact, given it computes the same value at
    /// `self.width`.
    pub fn width_compatible(&self, new_width: u32) -> bool {
        self.low_bits.is_some() || (self.self_width <= new_width && new_width <= self.width)
    }
}

fn passes_low_bits(e: &Expr, child: usize) -> bool {
    use super::ast::{BinaryOp as B, UnaryOp as U};
    match e {
        Expr::Unary { op, .. } => matches!(op, U::Not | U::Neg),
        Expr::Binary { op, .. } => match op {
            B::Add | B::Sub | B::Mul | B::And | B::Or | B::Xor => true,
            B::Shl => child == 0,
            _ => false,
        },
        Expr::Ternary { .. } => child > 0,
        _ => false,
    }
}

/// Rewrite an expression bottom-up while tracking where each node sits.
/// `f` receives each node (children already rewritten) and its [`Site`];
/// it may replace the node. `low_bits` describes the root position, e.g.
/// `Some(lhs_width)` for the right-hand side of an assignment.
pub fn rewrite_with_width(
    e: &mut Expr,
    ctx: u32,
    low_bits: Option<u32>,
    env: &dyn WidthEnv,
    f: &mut dyn FnMut(&mut Expr, Site),
) {
    let sw = self_width(e, env);
    let w = eval_width(e, ctx, env);
    let ctxs = child_contexts(e, w, env);
    let lows: Vec<Option<u32>> = (0..ctxs.len())
        .map(|i| low_bits.filter(|_| passes_low_bits(e, i)))
        .collect();
    for ((child, c), lb) in e.children_mut().into_iter().zip(ctxs).zip(lows) {
        rewrite_with_width(child, c, lb, env, f);
    }
    f(
        e,
        Site {
            width: w,
            self_width: sw,
            low_bits,
        },
    );
}

/// Visit every node with its evaluation width, pre-order.
pub fn visit_with_width(e: &Expr, ctx: u32, env: &dyn WidthEnv, f: &mut dyn FnMut(&Expr, u32)) {
    let w = eval_width(e, ctx, env);
    f(e, w);
    let ctxs = child_contexts(e, w, env);
    for (child, c) in e.children().into_iter().zip(ctxs) {
        visit_with_width(child, c, env, f);
    }
}
