use std::collections::{HashMap, HashSet};

use super::{add_wire, for_each_root_mut, patch, rewrite_nodes, Namer, RewritePatch};
use crate::frontend::width::{rewrite_with_width, ModuleScope, WidthEnv};
use crate::frontend::{Expr, Item, ModuleAst, Stmt};

/// Upper bound on hoisted subexpressions per application.
const MAX_HOISTS: usize = 32;

/// Hoist repeated subexpressions into wires, largest first.
pub fn eliminate_subexpressions(m: &ModuleAst) -> Option<RewritePatch> {
    let mut out = m.clone();
    let mut namer = Namer::new(m, "cse");
    let mut rejected: Vec<(Expr, u32)> = Vec::new();
    for _ in 0..MAX_HOISTS {
        let Some((e, w)) = best_candidate(&out, &rejected) else {
            break;
        };
        let written = written_by_item(&out);
        let name = namer.fresh();
        let replacement = Expr::ident(&name);
        // Declared up front so the replacement's width is known.
        add_wire(&mut out, &name, w, e.clone());
        let wire_item = out.items.len() - 1;
        let mut trial = out.clone();
        let mut hits = 0;
        rewrite_nodes(&mut trial, &mut |node, ctx| {
            let stable = ctx.item != wire_item && !e.idents().iter().any(|n| written[ctx.item].contains(*n));
            let ok = stable && *node == e && ctx.site.width == w && ctx.accepts(&replacement);
            hits += ok as usize;
            ok.then(|| replacement.clone())
        });
        if hits >= 2 {
            out = trial;
        } else {
            out.items.pop();
            out.nets.pop();
            rejected.push((e, w));
        }
    }
    patch("cse", m, out)
}

/// Names each item assigns; reading a hoisted wire of those from inside
/// the same block would close a combinational loop.
fn written_by_item(m: &ModuleAst) -> Vec<HashSet<String>> {
    m.items
        .iter()
        .map(|it| {
            let mut set = HashSet::new();
            if let Item::Always(a) = it {
                a.body.walk(&mut |s| {
                    if let Stmt::Assign { lhs, .. } = s {
                        set.extend(lhs.targets().into_iter().map(str::to_string));
                    }
                });
            }
            set
        })
        .collect()
}

fn eligible(e: &Expr, scope: &ModuleScope) -> bool {
    let operator = match e {
        Expr::Unary { .. } | Expr::Binary { .. } | Expr::Ternary { .. } => true,
        Expr::Index { index, .. } => index.as_literal().is_none(),
        _ => false,
    };
    operator
        && e.idents().iter().any(|n| scope.param(n).is_none())
        && !e.idents().iter().any(|n| scope.is_array(n))
}

/// The largest subexpression occurring at least twice at one evaluation
/// width, first seen wins ties.
fn best_candidate(m: &ModuleAst, rejected: &[(Expr, u32)]) -> Option<(Expr, u32)> {
    let scope = ModuleScope::new(m);
    let written = written_by_item(m);
    let mut order: Vec<(Expr, u32)> = Vec::new();
    let mut counts: HashMap<(Expr, u32), usize> = HashMap::new();
    let mut probe = m.clone();
    for_each_root_mut(&mut probe, &mut |root, r, item| {
        rewrite_with_width(root, r.ctx, r.low_bits, &scope, &mut |e, site| {
            if !eligible(e, &scope) || e.idents().iter().any(|n| written[item].contains(*n)) {
                return;
            }
            let key = (e.clone(), site.width);
            let c = counts.entry(key.clone()).or_insert(0);
            if *c == 0 {
                order.push(key);
            }
            *c += 1;
        });
    });
    order
        .into_iter()
        .filter(|k| counts[k] >= 2 && !rejected.contains(k))
        .fold(None, |best: Option<(Expr, u32)>, k| match &best {
            Some(b) if b.0.size() >= k.0.size() => best,
            _ => Some(k),
        })
}
