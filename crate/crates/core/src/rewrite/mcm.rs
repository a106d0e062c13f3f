use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::strength::const_product;
use super::{
    add_wire, for_each_root_mut, low_safe, patch, rewrite_nodes, Namer, RewriteError, RuleResult,
};
use crate::frontend::width::{rewrite_with_width, ModuleScope};
use crate::frontend::{BinaryOp, Expr, Item, Literal, ModuleAst};

/// One adder-graph step: `|2^l1 * u + (-1)^s * 2^l2 * v| >> r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AOperation {
    pub l1: u32,
    pub l2: u32,
    pub r: u32,
    pub s: bool,
}

impl AOperation {
    pub fn apply(&self, u: u64, v: u64) -> u64 {
        let a = (u as i128) << self.l1;
        let b = (v as i128) << self.l2;
        let sum = if self.s { a - b } else { a + b };
        (sum.unsigned_abs() >> self.r) as u64
    }

    /// Shift right as far as possible so the result is odd.
    pub fn normalized(mut self, u: u64, v: u64) -> AOperation {
        self.r = 0;
        let x = self.apply(u, v);
        self.r = if x == 0 { 0 } else { x.trailing_zeros() };
        self
    }
}

/// Set bit positions of `c`, ascending.
pub fn decompose(c: u64) -> Vec<u32> {
    (0..64).filter(|b| c >> b & 1 == 1).collect()
}

/// Share shifted copies of a signal multiplied by several constants.
pub fn optimize_mcm(m: &ModuleAst) -> RuleResult {
    let mut groups: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    m.for_each_expr(&mut |root| {
        root.walk(&mut |e| {
            if let Some((x, c)) = const_product(e) {
                if c >= 2 {
                    groups.entry(x.to_string()).or_default().insert(c);
                }
            }
        })
    });
    let Some((x, consts)) = groups
        .into_iter()
        .filter(|(_, cs)| cs.len() >= 2)
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
    else {
        return Err(RewriteError::NotApplicable {
            rule: "mcm".into(),
            reason: "no signal is multiplied by two distinct constants".into(),
        });
    };

    // Widest demand among the products of `x`: only the low bits where
    // nothing above them is observed.
    let scope = ModuleScope::new(m);
    let mut width = 0;
    let mut probe = m.clone();
    for_each_root_mut(&mut probe, &mut |root, r, _| {
        let low = low_safe(root);
        rewrite_with_width(root, r.ctx, r.low_bits, &scope, &mut |e, site| {
            if const_product(e).is_some_and(|(y, c)| y == x && consts.contains(&c)) {
                let need = match site.low_bits {
                    Some(l) if low => l.min(site.width),
                    _ => site.width,
                };
                width = width.max(need);
            }
        })
    });

    let shifts: BTreeSet<u32> = consts.iter().flat_map(|c| decompose(*c)).collect();
    let mut namer = Namer::new(m, "mcm");
    let names: BTreeMap<u32, String> = shifts.iter().map(|s| (*s, namer.fresh())).collect();
    let sum = |c: u64| {
        let mut terms = decompose(c)
            .into_iter()
            .rev()
            .map(|b| Expr::ident(&names[&b]));
        let first = terms.next().expect("nonzero");
        terms.fold(first, |acc, t| Expr::binary(BinaryOp::Add, acc, t))
    };

    let mut out = m.clone();
    let first_new = out.items.len();
    for (s, name) in &names {
        let rhs = if *s == 0 {
            Expr::ident(&x)
        } else {
            Expr::binary(
                BinaryOp::Shl,
                Expr::ident(&x),
                Expr::Literal(Literal::plain(*s as u64)),
            )
        };
        add_wire(&mut out, name, width, rhs);
    }
    let mut used: BTreeSet<u32> = BTreeSet::new();
    rewrite_nodes(&mut out, &mut |e, ctx| {
        let (y, c) = const_product(e)?;
        if y != x || !consts.contains(&c) {
            return None;
        }
        let new = sum(c);
        ctx.accepts(&new).then(|| {
            used.extend(decompose(c));
            new
        })
    });
    let unused: BTreeSet<&String> = names
        .iter()
        .filter(|(s, _)| !used.contains(s))
        .map(|(_, n)| n)
        .collect();
    out.nets.retain(|n| !unused.contains(&n.name));
    let mut idx = 0;
    out.items.retain(|it| {
        idx += 1;
        !(idx > first_new
            && matches!(it, Item::Assign(a) if a.lhs.whole_ident().is_some_and(|n| unused.contains(&n.to_string()))))
    });
    Ok(patch("mcm", m, out))
}
