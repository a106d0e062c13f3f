use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{for_each_root_mut, patch, rewrite_nodes, tidy, NodeCtx, RewritePatch};
use crate::analysis::build_def_use;
use crate::frontend::eval::{eval, ValueEnv};
use crate::frontend::width::{ModuleScope, WidthEnv};
use crate::frontend::{
    mask, BinaryOp, CaseKind, Direction, Expr, Item, Literal, ModuleAst, NetKind, Stmt,
};

/// Constant lattice: `Top` is "no definition seen yet", `Bottom` is "not a
/// constant".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lattice {
    Top,
    Const(u64),
    Bottom,
}

impl Lattice {
    pub fn meet(self, other: Lattice) -> Lattice {
        match (self, other) {
            (Lattice::Top, x) | (x, Lattice::Top) => x,
            (Lattice::Const(a), Lattice::Const(b)) if a == b => Lattice::Const(a),
            _ => Lattice::Bottom,
        }
    }
}

/// Per-signal constant values of a module, found by iterating defs to a
/// fixpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstAnalysis {
    pub values: BTreeMap<String, Lattice>,
}

struct Def<'a> {
    target: String,
    rhs: &'a Expr,
    width: u32,
}

impl ConstAnalysis {
    pub fn analyze(m: &ModuleAst) -> ConstAnalysis {
        let scope = ModuleScope::new(m);
        let mut values: BTreeMap<String, Lattice> = BTreeMap::new();
        for p in &m.ports {
            let v = if p.direction == Direction::Output {
                Lattice::Top
            } else {
                Lattice::Bottom
            };
            values.insert(p.name.clone(), v);
        }
        for n in &m.nets {
            let v = if n.kind == NetKind::RegArray {
                Lattice::Bottom
            } else {
                Lattice::Top
            };
            values.insert(n.name.clone(), v);
        }

        let mut defs: Vec<Def<'_>> = Vec::new();
        let mut bottom: HashSet<String> = HashSet::new();
        let mut driver: HashMap<String, usize> = HashMap::new();
        let mut multi = |name: &str, item: usize, bottom: &mut HashSet<String>| {
            if *driver.entry(name.to_string()).or_insert(item) != item {
                bottom.insert(name.to_string());
            }
        };
        for (i, item) in m.items.iter().enumerate() {
            match item {
                Item::Assign(a) => {
                    for t in a.lhs.targets() {
                        multi(t, i, &mut bottom);
                    }
                    match a.lhs.whole_ident() {
                        Some(t) => defs.push(Def {
                            target: t.to_string(),
                            rhs: &a.rhs,
                            width: scope.width_of(t).unwrap_or(1),
                        }),
                        None => bottom.extend(a.lhs.targets().iter().map(|t| t.to_string())),
                    }
                }
                Item::Always(a) => {
                    let mut assigned: Vec<&crate::frontend::LValue> = Vec::new();
                    let mut read: HashSet<&str> = HashSet::new();
                    let mut local: Vec<(&str, &Expr)> = Vec::new();
                    a.body.walk(&mut |s| match s {
                        Stmt::Assign { lhs, rhs, .. } => {
                            assigned.push(lhs);
                            read.extend(rhs.idents());
                            for e in lhs.index_exprs() {
                                read.extend(e.idents());
                            }
                            if let Some(t) = lhs.whole_ident() {
                                local.push((t, rhs));
                            }
                        }
                        Stmt::If { cond, .. } => read.extend(cond.idents()),
                        Stmt::Case(c) => {
                            read.extend(c.selector.idents());
                            for it in &c.items {
                                for l in &it.labels {
                                    read.extend(l.idents());
                                }
                            }
                        }
                        _ => {}
                    });
                    let top_level: HashSet<&str> = top_level_targets(&a.body);
                    for l in &assigned {
                        for t in l.targets() {
                            multi(t, i, &mut bottom);
                            let ok = !a.is_edge_triggered()
                                && l.whole_ident().is_some()
                                && top_level.contains(t)
                                && !read.contains(t);
                            if !ok {
                                bottom.insert(t.to_string());
                            }
                        }
                    }
                    for (t, rhs) in local {
                        defs.push(Def {
                            target: t.to_string(),
                            rhs,
                            width: scope.width_of(t).unwrap_or(1),
                        });
                    }
                }
                Item::Instance(_) => {}
            }
        }
        // Anything an instance may drive is unknown.
        let g = build_def_use(m);
        for d in &g.defs {
            if matches!(d.kind, crate::analysis::DefKind::InstanceOutput) {
                bottom.insert(d.net.clone());
            }
        }
        for b in &bottom {
            values.insert(b.clone(), Lattice::Bottom);
        }

        let mut changed = true;
        while changed {
            changed = false;
            let mut next: BTreeMap<String, Lattice> = BTreeMap::new();
            for d in &defs {
                if values.get(&d.target) == Some(&Lattice::Bottom) {
                    continue;
                }
                let v = def_value(d, &scope, &values);
                let slot = next.entry(d.target.clone()).or_insert(Lattice::Top);
                *slot = slot.meet(v);
            }
            for (n, v) in next {
                let cur = values.get(&n).copied().unwrap_or(Lattice::Top);
                let new = cur.meet(v);
                // Values only move down; a changed constant means Bottom.
                let new = match (cur, new) {
                    (Lattice::Const(a), Lattice::Const(b)) if a != b => Lattice::Bottom,
                    _ => new,
                };
                if new != cur {
                    values.insert(n, new);
                    changed = true;
                }
            }
        }
        for v in values.values_mut() {
            if *v == Lattice::Top {
                *v = Lattice::Bottom;
            }
        }
        ConstAnalysis { values }
    }

    pub fn constant(&self, name: &str) -> Option<u64> {
        match self.values.get(name) {
            Some(Lattice::Const(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, u64)> {
        self.values.iter().filter_map(|(n, v)| match v {
            Lattice::Const(c) => Some((n.as_str(), *c)),
            _ => None,
        })
    }
}

/// Names assigned whole by a statement at the top level of the block (not
/// under any condition).
fn top_level_targets(body: &Stmt) -> HashSet<&str> {
    let stmts: Vec<&Stmt> = match body {
        Stmt::Block(ss) => ss.iter().collect(),
        s => vec![s],
    };
    stmts
        .into_iter()
        .filter_map(|s| match s {
            Stmt::Assign { lhs, .. } => lhs.whole_ident(),
            _ => None,
        })
        .collect()
}

fn def_value(d: &Def<'_>, scope: &ModuleScope, values: &BTreeMap<String, Lattice>) -> Lattice {
    let env = ConstEnv {
        scope,
        values: |n: &str| match values.get(n) {
            Some(Lattice::Const(c)) => Some(*c),
            _ => None,
        },
    };
    if let Some(v) = eval(d.rhs, d.width, &env) {
        return Lattice::Const(v & mask(d.width));
    }
    let pending = d
        .rhs
        .idents()
        .iter()
        .any(|n| values.get(*n) == Some(&Lattice::Top));
    if pending {
        Lattice::Top
    } else {
        Lattice::Bottom
    }
}

/// Widths from the module scope, values from a lookup plus parameters.
pub(crate) struct ConstEnv<'a, F: Fn(&str) -> Option<u64>> {
    pub scope: &'a ModuleScope,
    pub values: F,
}

impl<F: Fn(&str) -> Option<u64>> WidthEnv for ConstEnv<'_, F> {
    fn width_of(&self, name: &str) -> Option<u32> {
        self.scope.width_of(name)
    }

    fn is_array(&self, name: &str) -> bool {
        self.scope.is_array(name)
    }
}

impl<F: Fn(&str) -> Option<u64>> ValueEnv for ConstEnv<'_, F> {
    fn value_of(&self, name: &str) -> Option<u64> {
        self.scope
            .param(name)
            .map(|l| l.value)
            .or_else(|| (self.values)(name))
    }
}

fn has_dont_care(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| {
        if let Expr::Literal(l) = x {
            found |= l.dont_care != 0;
        }
    });
    found
}

fn is_zero(e: &Expr) -> bool {
    e.as_literal().is_some_and(|l| l.value == 0 && l.dont_care == 0)
}

fn is_one(e: &Expr) -> bool {
    e.as_literal().is_some_and(|l| l.value == 1 && l.dont_care == 0)
}

fn literal_for(width: u32, value: u64) -> Expr {
    if width == Literal::UNSIZED_WIDTH {
        Expr::Literal(Literal::plain(value & mask(width)))
    } else {
        Expr::Literal(Literal::sized(width, value))
    }
}

/// Folded form of one node, if any.
fn fold_node(e: &Expr, ctx: &NodeCtx<'_>) -> Option<Expr> {
    if matches!(e, Expr::Literal(_) | Expr::Ident(_)) || has_dont_care(e) {
        return None;
    }
    let env = ConstEnv {
        scope: ctx.scope,
        values: |_: &str| None,
    };
    let w = ctx.site.width;
    let params_only = e.idents().iter().all(|n| ctx.scope.param(n).is_some());
    if params_only {
        if let Some(v) = eval(e, w, &env) {
            return Some(literal_for(w, v));
        }
    }
    match e {
        Expr::Binary { op, lhs, rhs } => {
            use BinaryOp as B;
            match op {
                B::Add | B::Or | B::Xor if is_zero(rhs) => Some((**lhs).clone()),
                B::Add | B::Or | B::Xor if is_zero(lhs) => Some((**rhs).clone()),
                B::Sub | B::Shl | B::Shr if is_zero(rhs) => Some((**lhs).clone()),
                B::Mul if is_one(rhs) => Some((**lhs).clone()),
                B::Mul if is_one(lhs) => Some((**rhs).clone()),
                B::Div if is_one(rhs) => Some((**lhs).clone()),
                B::Mul | B::And if is_zero(lhs) || is_zero(rhs) => Some(literal_for(w, 0)),
                B::And => {
                    let ones = |x: &Expr| x.as_literal().is_some_and(|l| l.value == mask(w));
                    if ones(rhs) {
                        Some((**lhs).clone())
                    } else if ones(lhs) {
                        Some((**rhs).clone())
                    } else {
                        None
                    }
                }
                B::LogicAnd if lhs.as_literal().is_some_and(|l| l.value == 0) => {
                    Some(Expr::sized(1, 0))
                }
                B::LogicOr if lhs.as_literal().is_some_and(|l| l.value != 0) => {
                    Some(Expr::sized(1, 1))
                }
                _ => None,
            }
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            let c = cond.as_literal()?;
            Some(if c.value != 0 {
                (**then_expr).clone()
            } else {
                (**else_expr).clone()
            })
        }
        _ => None,
    }
}

/// Fold constant subtrees and algebraic identities everywhere.
pub(crate) fn fold_module(m: &mut ModuleAst) -> bool {
    let mut changed = false;
    // Folding can expose more folding one level up; nodes are visited
    // bottom-up so one sweep usually suffices.
    for _ in 0..4 {
        if !rewrite_nodes(m, &mut fold_node) {
            break;
        }
        changed = true;
    }
    changed
}

/// Does the literal label match the selector value at width `w`?
pub(crate) fn label_matches(kind: CaseKind, sel: u64, label: &Literal, w: u32) -> bool {
    let care = match kind {
        CaseKind::Casez => !label.dont_care,
        CaseKind::Case => u64::MAX,
    };
    (sel ^ label.value) & care & mask(w) == 0
}

/// Replace if/case statements whose condition or selector evaluates to a
/// constant under `env` by the branch taken.
pub(crate) fn prune_branches(m: &mut ModuleAst, known: &dyn Fn(&str) -> Option<u64>) -> bool {
    let scope = ModuleScope::new(m);
    let env = ConstEnv {
        scope: &scope,
        values: known,
    };
    let mut changed = false;
    for it in &mut m.items {
        if let Item::Always(a) = it {
            prune_stmt(&mut a.body, &env, &mut changed);
        }
    }
    changed
}

fn prune_stmt(s: &mut Stmt, env: &dyn ValueEnv, changed: &mut bool) {
    match s {
        Stmt::Block(ss) => ss.iter_mut().for_each(|s| prune_stmt(s, env, changed)),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            if let Some(c) = eval(cond, 0, env) {
                let taken = if c != 0 {
                    Some(std::mem::replace(then_branch.as_mut(), Stmt::Null))
                } else {
                    else_branch.take().map(|b| *b)
                };
                *s = taken.unwrap_or(Stmt::Null);
                *changed = true;
                prune_stmt(s, env, changed);
            } else {
                prune_stmt(then_branch, env, changed);
                if let Some(e) = else_branch {
                    prune_stmt(e, env, changed);
                }
            }
        }
        Stmt::Case(c) => {
            if let Some(taken) = case_branch(c, env) {
                *s = taken;
                *changed = true;
                prune_stmt(s, env, changed);
            } else {
                for it in &mut c.items {
                    prune_stmt(&mut it.body, env, changed);
                }
                if let Some(d) = &mut c.default {
                    prune_stmt(d, env, changed);
                }
            }
        }
        Stmt::Assign { .. } | Stmt::Null => {}
    }
}

/// The arm a case with a constant selector takes, when every label up to
/// the match is a literal.
fn case_branch(c: &mut crate::frontend::CaseStmt, env: &dyn ValueEnv) -> Option<Stmt> {
    use crate::frontend::width::self_width;
    let w = c
        .items
        .iter()
        .flat_map(|it| it.labels.iter())
        .map(|l| self_width(l, env))
        .fold(self_width(&c.selector, env), u32::max);
    let sel = eval(&c.selector, w, env)?;
    for it in &mut c.items {
        for l in &it.labels {
            let lit = match l {
                Expr::Literal(lit) => *lit,
                other => Literal::sized(w, eval(other, w, env)?),
            };
            if label_matches(c.kind, sel, &lit, w) {
                return Some(std::mem::replace(&mut it.body, Stmt::Null));
            }
        }
    }
    Some(c.default.take().map(|d| *d).unwrap_or(Stmt::Null))
}

pub fn const_fold(m: &ModuleAst) -> Option<RewritePatch> {
    let mut out = m.clone();
    fold_module(&mut out);
    prune_branches(&mut out, &|_| None);
    tidy(&mut out);
    patch("const-fold", m, out)
}

pub fn constant_propagate(m: &ModuleAst) -> Option<RewritePatch> {
    let consts = ConstAnalysis::analyze(m);
    let scope = ModuleScope::new(m);
    let mut out = m.clone();
    let subst = |e: &mut Expr| {
        e.walk_mut_post(&mut |x| {
            if let Expr::Ident(n) = x {
                if let Some(c) = consts.constant(n) {
                    let w = scope.width_of(n).unwrap_or(1);
                    *x = Expr::sized(w, c);
                } else if let Some(p) = scope.param(n) {
                    *x = Expr::Literal(p);
                }
            }
        })
    };
    for_each_root_mut(&mut out, &mut |e, _, _| subst(e));
    fold_module(&mut out);
    prune_branches(&mut out, &|_| None);
    tidy(&mut out);
    patch("const-prop", m, out)
}

/// Replace reads of `t` where `assign t = s;` is the only driver of a
/// same-width internal net.
pub fn copy_propagate(m: &ModuleAst) -> Option<RewritePatch> {
    let mut out = m.clone();
    for _ in 0..m.nets.len() {
        let Some((t, s)) = copy_candidate(&out) else {
            break;
        };
        for_each_root_mut(&mut out, &mut |e, _, _| e.rename(&t, &s));
        for it in &mut out.items {
            if let Item::Instance(inst) = it {
                match &mut inst.connections {
                    crate::frontend::Connections::Named(cs) => {
                        for c in cs.iter_mut().filter_map(|c| c.expr.as_mut()) {
                            c.rename(&t, &s);
                        }
                    }
                    crate::frontend::Connections::Positional(cs) => {
                        for c in cs.iter_mut().flatten() {
                            c.rename(&t, &s);
                        }
                    }
                }
            }
        }
    }
    patch("copy-prop", m, out)
}

fn copy_candidate(m: &ModuleAst) -> Option<(String, String)> {
    let g = build_def_use(m);
    let scope = ModuleScope::new(m);
    for n in m.nets.iter().filter(|n| n.kind != NetKind::RegArray) {
        let defs: Vec<_> = g.defs.iter().filter(|d| d.net == n.name).collect();
        if defs.len() != 1 || !g.uses.iter().any(|u| u.net == n.name) {
            continue;
        }
        let Some(Item::Assign(a)) = defs[0].item.map(|i| &m.items[i]) else {
            continue;
        };
        if a.lhs.whole_ident() != Some(n.name.as_str()) {
            continue;
        }
        let Some(s) = a.rhs.as_ident() else {
            continue;
        };
        if s == n.name || scope.param(s).is_some() || scope.is_array(s) {
            continue;
        }
        if scope.width_of(s) == Some(n.width) {
            return Some((n.name.clone(), s.to_string()));
        }
    }
    None
}
