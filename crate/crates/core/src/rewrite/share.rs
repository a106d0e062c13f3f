use std::collections::BTreeSet;

use super::{exact, low_safe, patch, rewrite_nodes, RewritePatch};
use crate::frontend::width::{self_width, ModuleScope};
use crate::frontend::{BinaryOp, CaseKind, CaseStmt, Expr, Item, LValue, ModuleAst, Stmt};

fn shareable(op: BinaryOp) -> bool {
    matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul)
}

/// Share one operator between mutually exclusive branches by selecting its
/// operands instead of its results.
pub fn share_resources(m: &ModuleAst) -> Option<RewritePatch> {
    let scope = ModuleScope::new(m);
    let mut out = m.clone();
    for it in &mut out.items {
        if let Item::Always(a) = it {
            a.body.walk_mut(&mut |s| {
                if let Some(n) = share_stmt(s, &scope) {
                    *s = n;
                }
            });
        }
    }
    rewrite_nodes(&mut out, &mut |e, _| share_ternary(e));
    patch("resource-share", m, out)
}

fn share_ternary(e: &Expr) -> Option<Expr> {
    let Expr::Ternary {
        cond,
        then_expr,
        else_expr,
    } = e
    else {
        return None;
    };
    let (
        Expr::Binary { op: o1, lhs: a, rhs: b },
        Expr::Binary { op: o2, lhs: c, rhs: d },
    ) = (then_expr.as_ref(), else_expr.as_ref())
    else {
        return None;
    };
    if o1 != o2 || !shareable(*o1) || (a == c && b == d) {
        return None;
    }
    let sel = |p: &Expr, q: &Expr| Expr::ternary((**cond).clone(), p.clone(), q.clone());
    Some(Expr::binary(*o1, sel(a, c), sel(b, d)))
}

/// A single assignment, seen through one-statement blocks.
fn single_assign(s: &Stmt) -> Option<(&LValue, BinaryOp, &Expr, &Expr, bool)> {
    match s {
        Stmt::Block(ss) if ss.len() == 1 => single_assign(&ss[0]),
        Stmt::Assign {
            lhs,
            rhs: Expr::Binary { op, lhs: a, rhs: b },
            blocking,
        } if shareable(*op) && low_safe(a) && low_safe(b) => Some((lhs, *op, a, b, *blocking)),
        _ => None,
    }
}

fn share_stmt(s: &Stmt, scope: &ModuleScope) -> Option<Stmt> {
    match s {
        Stmt::If {
            cond,
            then_branch,
            else_branch: Some(else_branch),
        } => {
            let (l1, o1, a, b, k1) = single_assign(then_branch)?;
            let (l2, o2, c, d, k2) = single_assign(else_branch)?;
            if l1 != l2 || o1 != o2 || k1 != k2 || l1.whole_ident().is_none() {
                return None;
            }
            let sel = |p: &Expr, q: &Expr| Expr::ternary(cond.clone(), p.clone(), q.clone());
            Some(Stmt::assign(l1.clone(), Expr::binary(o1, sel(a, c), sel(b, d)), k1))
        }
        Stmt::Case(c) => share_case(c, scope),
        _ => None,
    }
}

fn share_case(c: &CaseStmt, scope: &ModuleScope) -> Option<Stmt> {
    if c.kind != CaseKind::Case || c.items.len() < 2 || !exact(&c.selector) {
        return None;
    }
    let arms: Vec<_> = c
        .items
        .iter()
        .map(|it| single_assign(&it.body))
        .collect::<Option<_>>()?;
    let default = match &c.default {
        Some(d) => Some(single_assign(d)?),
        None => None,
    };
    let (lhs, op, _, _, blocking) = arms[0];
    let all = arms.iter().chain(default.iter());
    if lhs.whole_ident().is_none()
        || all.clone().any(|(l, o, _, _, k)| *l != lhs || *o != op || *k != blocking)
    {
        return None;
    }
    let labels: Vec<&Expr> = c.items.iter().flat_map(|it| it.labels.iter()).collect();
    if labels.iter().any(|l| !exact(l)) {
        return None;
    }
    if default.is_none() {
        // Without a default every selector value must hit a label.
        let w = self_width(&c.selector, scope);
        if w > 16 {
            return None;
        }
        let values: BTreeSet<u64> = labels
            .iter()
            .map(|l| l.as_literal().filter(|l| l.dont_care == 0).map(|l| l.value))
            .collect::<Option<_>>()?;
        if values.len() as u64 != 1 << w || values.iter().any(|v| v >> w != 0) {
            return None;
        }
    }
    let hit = |labels: &[Expr]| {
        labels
            .iter()
            .map(|l| Expr::binary(BinaryOp::Eq, c.selector.clone(), l.clone()))
            .reduce(|a, b| Expr::binary(BinaryOp::LogicOr, a, b))
            .expect("labels")
    };
    let chain = |pick: &dyn Fn(&(&LValue, BinaryOp, &Expr, &Expr, bool)) -> Expr| {
        let (mut acc, rest) = match &default {
            Some(d) => (pick(d), c.items.len()),
            None => (pick(&arms[arms.len() - 1]), c.items.len() - 1),
        };
        for i in (0..rest).rev() {
            acc = Expr::ternary(hit(&c.items[i].labels), pick(&arms[i]), acc);
        }
        acc
    };
    let x = chain(&|a| a.2.clone());
    let y = chain(&|a| a.3.clone());
    Some(Stmt::assign(lhs.clone(), Expr::binary(op, x, y), blocking))
}
