use std::collections::HashSet;

use super::fold::{prune_branches, ConstAnalysis};
use super::{patch, tidy, RewritePatch};
use crate::frontend::{Connections, Direction, Expr, Item, ModuleAst, Sensitivity, Stmt};

/// Remove branches that constants make unreachable, then every assignment
/// and internal signal that cannot reach an output.
pub fn eliminate_dead_code(m: &ModuleAst) -> Option<RewritePatch> {
    let mut out = m.clone();
    let consts = ConstAnalysis::analyze(m);
    prune_branches(&mut out, &|n| consts.constant(n));
    tidy(&mut out);
    sweep(&mut out);
    tidy(&mut out);
    patch("dce", m, out)
}

/// A definition and the names it depends on: right-hand side, index
/// expressions and every enclosing condition.
struct Dep {
    targets: Vec<String>,
    reads: Vec<String>,
}

fn collect_deps(s: &Stmt, guards: &mut Vec<String>, out: &mut Vec<Dep>) {
    match s {
        Stmt::Block(ss) => ss.iter().for_each(|s| collect_deps(s, guards, out)),
        Stmt::Assign { lhs, rhs, .. } => {
            let mut reads: Vec<String> = guards.clone();
            reads.extend(rhs.idents().into_iter().map(str::to_string));
            for e in lhs.index_exprs() {
                reads.extend(e.idents().into_iter().map(str::to_string));
            }
            out.push(Dep {
                targets: lhs.targets().into_iter().map(str::to_string).collect(),
                reads,
            });
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let n = guards.len();
            guards.extend(cond.idents().into_iter().map(str::to_string));
            collect_deps(then_branch, guards, out);
            if let Some(e) = else_branch {
                collect_deps(e, guards, out);
            }
            guards.truncate(n);
        }
        Stmt::Case(c) => {
            let n = guards.len();
            guards.extend(c.selector.idents().into_iter().map(str::to_string));
            for it in &c.items {
                for l in &it.labels {
                    guards.extend(l.idents().into_iter().map(str::to_string));
                }
            }
            for it in &c.items {
                collect_deps(&it.body, guards, out);
            }
            if let Some(d) = &c.default {
                collect_deps(d, guards, out);
            }
            guards.truncate(n);
        }
        Stmt::Null => {}
    }
}

fn connection_exprs(c: &Connections) -> Vec<&Expr> {
    match c {
        Connections::Named(cs) => cs.iter().filter_map(|c| c.expr.as_ref()).collect(),
        Connections::Positional(cs) => cs.iter().flatten().collect(),
    }
}

fn live_set(m: &ModuleAst) -> HashSet<String> {
    let mut live: HashSet<String> = m
        .ports
        .iter()
        .filter(|p| p.direction != Direction::Input)
        .map(|p| p.name.clone())
        .collect();
    let mut deps = Vec::new();
    for item in &m.items {
        match item {
            Item::Assign(a) => {
                let mut reads: Vec<String> = a.rhs.idents().into_iter().map(str::to_string).collect();
                for e in a.lhs.index_exprs() {
                    reads.extend(e.idents().into_iter().map(str::to_string));
                }
                deps.push(Dep {
                    targets: a.lhs.targets().into_iter().map(str::to_string).collect(),
                    reads,
                });
            }
            Item::Always(a) => {
                if let Sensitivity::Edges(es) = &a.sensitivity {
                    live.extend(es.iter().map(|e| e.signal.clone()));
                }
                collect_deps(&a.body, &mut Vec::new(), &mut deps);
            }
            Item::Instance(inst) => {
                for e in connection_exprs(&inst.connections) {
                    live.extend(e.idents().into_iter().map(str::to_string));
                }
            }
        }
    }
    loop {
        let before = live.len();
        for d in &deps {
            if d.targets.iter().any(|t| live.contains(t)) {
                live.extend(d.reads.iter().cloned());
            }
        }
        if live.len() == before {
            return live;
        }
    }
}

fn sweep(m: &mut ModuleAst) {
    let live = live_set(m);
    let is_live = |l: &crate::frontend::LValue| l.targets().iter().any(|t| live.contains(*t));
    m.items.retain(|it| match it {
        Item::Assign(a) => is_live(&a.lhs),
        _ => true,
    });
    for it in &mut m.items {
        if let Item::Always(a) = it {
            a.body.walk_mut(&mut |s| {
                if let Stmt::Assign { lhs, .. } = s {
                    if !is_live(lhs) {
                        *s = Stmt::Null;
                    }
                }
            });
        }
    }
    tidy(m);
    let mut referenced: HashSet<String> = HashSet::new();
    for item in &m.items {
        match item {
            Item::Assign(a) => {
                referenced.extend(a.lhs.targets().into_iter().map(str::to_string));
            }
            Item::Always(a) => a.body.walk(&mut |s| {
                if let Stmt::Assign { lhs, .. } = s {
                    referenced.extend(lhs.targets().into_iter().map(str::to_string));
                }
            }),
            Item::Instance(_) => {}
        }
    }
    m.for_each_expr(&mut |e| referenced.extend(e.idents().into_iter().map(str::to_string)));
    m.nets
        .retain(|n| live.contains(&n.name) || referenced.contains(&n.name));
}
