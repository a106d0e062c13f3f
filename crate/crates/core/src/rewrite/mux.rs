use std::collections::BTreeMap;

use super::{exact, patch, rewrite_nodes, RewritePatch};
use crate::frontend::width::{self_width, ModuleScope};
use crate::frontend::{
    BinaryOp, CaseItem, CaseKind, CaseStmt, Expr, Item, Literal, ModuleAst, Stmt,
};

/// Case statements with more arms than this are split into two levels.
pub const DEFAULT_SPLIT_ARMS: usize = 8;

/// Simplify ternaries: equal arms, a shared operand on both arms, and a
/// nested ternary on the same select.
pub fn reduce_mux(m: &ModuleAst) -> Option<RewritePatch> {
    let mut out = m.clone();
    for _ in 0..4 {
        if !rewrite_nodes(&mut out, &mut |e, _| reduce_node(e)) {
            break;
        }
    }
    patch("mux-reduce", m, out)
}

fn factorable(op: BinaryOp) -> bool {
    use BinaryOp as B;
    matches!(op, B::Add | B::Sub | B::Mul | B::And | B::Or | B::Xor)
}

fn reduce_node(e: &Expr) -> Option<Expr> {
    let Expr::Ternary {
        cond,
        then_expr,
        else_expr,
    } = e
    else {
        return None;
    };
    if then_expr == else_expr {
        return Some((**then_expr).clone());
    }
    // c ? (c ? a : _) : (c ? _ : b)  =>  c ? a : b
    let inner = |x: &Expr, take_then: bool| match x {
        Expr::Ternary {
            cond: c2,
            then_expr: a,
            else_expr: b,
        } if c2 == cond => Some(if take_then { (**a).clone() } else { (**b).clone() }),
        _ => None,
    };
    let t2 = inner(then_expr, true);
    let e2 = inner(else_expr, false);
    if t2.is_some() || e2.is_some() {
        return Some(Expr::ternary(
            (**cond).clone(),
            t2.unwrap_or_else(|| (**then_expr).clone()),
            e2.unwrap_or_else(|| (**else_expr).clone()),
        ));
    }
    let (
        Expr::Binary {
            op: o1,
            lhs: a,
            rhs: x,
        },
        Expr::Binary {
            op: o2,
            lhs: b,
            rhs: y,
        },
    ) = (then_expr.as_ref(), else_expr.as_ref())
    else {
        return None;
    };
    if o1 != o2 || !factorable(*o1) {
        return None;
    }
    let sel = |p: &Expr, q: &Expr| Expr::ternary((**cond).clone(), p.clone(), q.clone());
    let op = *o1;
    if x == y {
        return Some(Expr::binary(op, sel(a, b), (**x).clone()));
    }
    if a == b {
        return Some(Expr::binary(op, (**a).clone(), sel(x, y)));
    }
    if op.is_commutative() {
        if a == y {
            return Some(Expr::binary(op, (**a).clone(), sel(x, b)));
        }
        if x == b {
            return Some(Expr::binary(op, (**x).clone(), sel(a, y)));
        }
    }
    None
}

pub fn restructure_mux(m: &ModuleAst) -> Option<RewritePatch> {
    restructure_mux_with(m, DEFAULT_SPLIT_ARMS)
}

/// Turn `if (s == K0) .. else if (s == K1) ..` chains into a case, and
/// split cases with more than `split_arms` arms into a two-level tree on
/// the high and low halves of the selector.
pub fn restructure_mux_with(m: &ModuleAst, split_arms: usize) -> Option<RewritePatch> {
    let scope = ModuleScope::new(m);
    let mut out = m.clone();
    for it in &mut out.items {
        if let Item::Always(a) = it {
            a.body.walk_mut(&mut |s| {
                if let Some(c) = chain_to_case(s, &scope) {
                    *s = Stmt::Case(c);
                }
            });
            a.body.walk_mut(&mut |s| {
                if let Stmt::Case(c) = s {
                    if let Some(t) = split_case(c, split_arms, &scope) {
                        *s = t;
                    }
                }
            });
        }
    }
    patch("mux-restructure", m, out)
}

/// `(sel == K)` or `(K == sel)` with `K` a literal or parameter.
fn equality_test<'a>(cond: &'a Expr, scope: &ModuleScope) -> Option<(&'a Expr, &'a Expr)> {
    let Expr::Binary {
        op: BinaryOp::Eq,
        lhs,
        rhs,
    } = cond
    else {
        return None;
    };
    let is_const = |e: &Expr| match e {
        Expr::Literal(l) => l.dont_care == 0,
        Expr::Ident(n) => scope.param(n).is_some(),
        _ => false,
    };
    match (is_const(lhs), is_const(rhs)) {
        (false, true) => Some((lhs, rhs)),
        (true, false) => Some((rhs, lhs)),
        _ => None,
    }
}

fn chain_to_case(s: &Stmt, scope: &ModuleScope) -> Option<CaseStmt> {
    let mut items = Vec::new();
    let mut selector: Option<&Expr> = None;
    let mut cur = s;
    let default = loop {
        match cur {
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => match equality_test(cond, scope) {
                Some((sel, k)) if selector.is_none_or(|s0| s0 == sel) => {
                    selector = Some(sel);
                    items.push(CaseItem {
                        labels: vec![k.clone()],
                        body: (**then_branch).clone(),
                    });
                    match else_branch {
                        Some(e) => cur = e,
                        None => break None,
                    }
                }
                _ => break Some(cur.clone()),
            },
            other => break Some(other.clone()),
        }
    };
    let selector = selector?;
    if items.len() < 2 || !exact(selector) || selector.as_literal().is_some() {
        return None;
    }
    Some(CaseStmt {
        kind: CaseKind::Case,
        selector: selector.clone(),
        items,
        default: default.map(Box::new),
    })
}

fn split_case(c: &CaseStmt, split_arms: usize, scope: &ModuleScope) -> Option<Stmt> {
    if c.kind != CaseKind::Case || c.items.len() <= split_arms {
        return None;
    }
    let (name, base_lsb, sw) = match &c.selector {
        Expr::Ident(n) if scope.param(n).is_none() => (n.clone(), 0, self_width(&c.selector, scope)),
        Expr::Slice { base, msb, lsb } => (base.as_ident()?.to_string(), *lsb, msb - lsb + 1),
        _ => return None,
    };
    if sw < 2 || sw > 16 {
        return None;
    }
    let low = sw / 2;
    let mut labelled: Vec<(u64, Stmt)> = Vec::new();
    for it in &c.items {
        for l in &it.labels {
            let l = l.as_literal().filter(|l| l.dont_care == 0)?;
            if l.value >> sw == 0 {
                labelled.push((l.value, it.body.clone()));
            }
        }
    }
    // First label wins, as in the flat case.
    let mut groups: BTreeMap<u64, Vec<(u64, Stmt)>> = BTreeMap::new();
    for (v, body) in labelled {
        let g = groups.entry(v >> low).or_default();
        if !g.iter().any(|(u, _)| *u == v & ((1 << low) - 1)) {
            g.push((v & ((1 << low) - 1), body));
        }
    }
    let slice = |msb: u32, lsb: u32| Expr::Slice {
        base: Box::new(Expr::ident(&name)),
        msb: base_lsb + msb,
        lsb: base_lsb + lsb,
    };
    let hi_w = sw - low;
    let items = groups
        .into_iter()
        .map(|(h, arms)| CaseItem {
            labels: vec![Expr::Literal(Literal::sized(hi_w, h))],
            body: Stmt::Case(CaseStmt {
                kind: CaseKind::Case,
                selector: slice(low - 1, 0),
                items: arms
                    .into_iter()
                    .map(|(l, body)| CaseItem {
                        labels: vec![Expr::Literal(Literal::sized(low, l))],
                        body,
                    })
                    .collect(),
                default: c.default.clone(),
            }),
        })
        .collect();
    Some(Stmt::Case(CaseStmt {
        kind: CaseKind::Case,
        selector: slice(sw - 1, low),
        items,
        default: c.default.clone(),
    }))
}
