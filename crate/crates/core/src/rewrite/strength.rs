use std::collections::{BTreeSet, HashMap};

use super::{patch, rewrite_nodes, NodeCtx, RewritePatch};
use crate::frontend::{mask, BinaryOp, Expr, Literal, ModuleAst, UnaryOp};

/// Multipliers with at most this many set bits become shift-add chains.
const MAX_ADD_TERMS: u32 = 4;

pub fn reduce_strength(m: &ModuleAst) -> Option<RewritePatch> {
    let shared = mcm_candidates(m);
    let mut out = m.clone();
    rewrite_nodes(&mut out, &mut |e, ctx| {
        let mut cur = e.clone();
        let mut changed = false;
        for _ in 0..16 {
            match step(&cur, ctx, &shared) {
                Some(n) => {
                    cur = n;
                    changed = true;
                }
                None => break,
            }
        }
        changed.then_some(cur)
    });
    patch("strength-reduce", m, out)
}

/// Signals multiplied by two or more distinct constants; those are left to
/// the shared shift-add network.
pub(crate) fn mcm_candidates(m: &ModuleAst) -> BTreeSet<String> {
    let mut consts: HashMap<String, BTreeSet<u64>> = HashMap::new();
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            if let Some((x, c)) = const_product(e) {
                if c >= 2 {
                    consts.entry(x.to_string()).or_default().insert(c);
                }
            }
        })
    });
    consts
        .into_iter()
        .filter(|(_, cs)| cs.len() >= 2)
        .map(|(x, _)| x)
        .collect()
}

/// `x * c` or `c * x` with `x` an identifier.
pub(crate) fn const_product(e: &Expr) -> Option<(&str, u64)> {
    let Expr::Binary {
        op: BinaryOp::Mul,
        lhs,
        rhs,
    } = e
    else {
        return None;
    };
    let lit = |x: &Expr| x.as_literal().filter(|l| l.dont_care == 0).map(|l| l.value);
    match (lhs.as_ident(), lit(rhs), lit(lhs), rhs.as_ident()) {
        (Some(x), Some(c), _, _) | (_, _, Some(c), Some(x)) => Some((x, c)),
        _ => None,
    }
}

fn shift_amount(n: u32) -> Expr {
    Expr::Literal(Literal::plain(n as u64))
}

fn shl(x: Expr, n: u32) -> Expr {
    if n == 0 {
        x
    } else {
        Expr::binary(BinaryOp::Shl, x, shift_amount(n))
    }
}

/// `x * c` as a sum of shifted copies of `x`, highest term first.
pub(crate) fn shift_add(x: &Expr, c: u64) -> Expr {
    let mut bits: Vec<u32> = (0..64).filter(|b| c >> b & 1 == 1).collect();
    bits.reverse();
    let mut terms = bits.into_iter().map(|b| shl(x.clone(), b));
    let first = terms.next().expect("nonzero multiplier");
    terms.fold(first, |acc, t| Expr::binary(BinaryOp::Add, acc, t))
}

fn lit_value(e: &Expr) -> Option<u64> {
    e.as_literal().filter(|l| l.dont_care == 0).map(|l| l.value)
}

fn is_not_of(a: &Expr, b: &Expr) -> bool {
    matches!(a, Expr::Unary { op: UnaryOp::Not, operand } if **operand == *b)
}

fn step(e: &Expr, ctx: &NodeCtx<'_>, shared: &BTreeSet<String>) -> Option<Expr> {
    use BinaryOp as B;
    let w = ctx.site.width;
    match e {
        Expr::Binary { op, lhs, rhs } => {
            let (l, r) = (lhs.as_ref(), rhs.as_ref());
            match op {
                B::Mul => {
                    let (x, c) = match (lit_value(l), lit_value(r)) {
                        (None, Some(c)) => (l, c),
                        (Some(c), None) => (r, c),
                        _ => return None,
                    };
                    if c < 2 {
                        return None;
                    }
                    if c.is_power_of_two() {
                        return Some(shl(x.clone(), c.trailing_zeros()));
                    }
                    let left_for_mcm = x.as_ident().is_some_and(|n| shared.contains(n));
                    (c.count_ones() <= MAX_ADD_TERMS && !left_for_mcm).then(|| shift_add(x, c))
                }
                B::Div => {
                    let c = lit_value(r)?;
                    (c >= 2 && c.is_power_of_two() && lit_value(l).is_none()).then(|| {
                        Expr::binary(B::Shr, l.clone(), shift_amount(c.trailing_zeros()))
                    })
                }
                B::Shl | B::Shr => {
                    let b = lit_value(r)?;
                    match l {
                        Expr::Binary {
                            op: inner,
                            lhs: x,
                            rhs: a,
                        } if inner == op => {
                            let a = lit_value(a)?;
                            let n = a.saturating_add(b).min(u32::MAX as u64) as u32;
                            Some(Expr::binary(*op, (**x).clone(), shift_amount(n)))
                        }
                        _ => None,
                    }
                }
                B::Add if l == r && lit_value(l).is_none() => Some(shl(l.clone(), 1)),
                B::And | B::Or if l == r => Some(l.clone()),
                B::And if is_not_of(l, r) || is_not_of(r, l) => Some(Expr::sized(w, 0)),
                B::Or if is_not_of(l, r) || is_not_of(r, l) => Some(Expr::sized(w, mask(w))),
                B::Xor if l == r => Some(Expr::sized(w, 0)),
                B::Or | B::And => {
                    let dual = if *op == B::Or { B::And } else { B::Or };
                    // Absorption: a | (a & b) = a, a & (a | b) = a.
                    for (a, other) in [(l, r), (r, l)] {
                        if let Expr::Binary { op: o, lhs: x, rhs: y } = other {
                            if *o == dual && (**x == *a || **y == *a) {
                                return Some(a.clone());
                            }
                        }
                    }
                    // (a & b) | (a & ~b) = a, and its dual.
                    if let (
                        Expr::Binary { op: o1, lhs: a1, rhs: b1 },
                        Expr::Binary { op: o2, lhs: a2, rhs: b2 },
                    ) = (l, r)
                    {
                        if *o1 == dual && *o2 == dual {
                            let pairs = [(a1, b1, a2, b2), (a1, b1, b2, a2), (b1, a1, a2, b2), (b1, a1, b2, a2)];
                            for (p, q, s, t) in pairs {
                                if p == s && (is_not_of(q, t) || is_not_of(t, q)) {
                                    return Some((**p).clone());
                                }
                            }
                        }
                    }
                    None
                }
                _ => None,
            }
        }
        Expr::Unary {
            op: UnaryOp::Not,
            operand,
        } => match operand.as_ref() {
            Expr::Unary {
                op: UnaryOp::Not,
                operand: x,
            } => Some((**x).clone()),
            _ => None,
        },
        _ => None,
    }
}
