//! Def-use chains with one join node per use site.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{Connections, Direction, Expr, Item, LValue, ModuleAst, Sensitivity, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefKind {
    /// Value supplied by the environment through an input port.
    Input,
    Continuous,
    Blocking,
    NonBlocking,
    InstanceOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefSite {
    pub id: usize,
    pub net: String,
    /// Module item holding the definition; `None` for input ports.
    pub item: Option<usize>,
    /// Child indices from the item's top statement down to the assignment.
    pub path: Vec<usize>,
    pub kind: DefKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseSite {
    pub id: usize,
    pub net: String,
    pub item: usize,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefUseGraph {
    pub module: String,
    pub defs: Vec<DefSite>,
    pub uses: Vec<UseSite>,
    /// (def id, use id): the def can reach the use.
    pub chains: Vec<(usize, usize)>,
    /// One join per use site; join `i` sits in front of use `i`.
    pub def_join_edges: Vec<(usize, usize)>,
    pub join_use_edges: Vec<(usize, usize)>,
    /// Declared signals (not inputs) that are never assigned.
    pub undriven: Vec<String>,
    /// Declared signals (not outputs) that are never read.
    pub unread: Vec<String>,
}

impl DefUseGraph {
    pub fn defs_of<'a>(&'a self, net: &'a str) -> impl Iterator<Item = &'a DefSite> + 'a {
        self.defs.iter().filter(move |d| d.net == net)
    }

    pub fn uses_of<'a>(&'a self, net: &'a str) -> impl Iterator<Item = &'a UseSite> + 'a {
        self.uses.iter().filter(move |u| u.net == net)
    }

    /// Uses reached from `def`.
    pub fn chains_from(&self, def: usize) -> impl Iterator<Item = usize> + '_ {
        self.chains.iter().filter(move |c| c.0 == def).map(|c| c.1)
    }
}

/// Port direction of an instantiated module, if known.
pub type PortResolver<'a> = &'a dyn Fn(&str, &str, usize) -> Option<Direction>;

pub fn build_def_use(module: &ModuleAst) -> DefUseGraph {
    build_def_use_with(module, &|_, _, _| None)
}

/// Like [`build_def_use`], resolving instance port directions through
/// `ports(module, port_name, position)`. Unresolved connections count as
/// both a use and, when assignable, a def.
pub fn build_def_use_with(module: &ModuleAst, ports: PortResolver<'_>) -> DefUseGraph {
    let mut g = DefUseGraph {
        module: module.name.clone(),
        ..Default::default()
    };
    let signals: HashSet<&str> = module
        .ports
        .iter()
        .map(|p| p.name.as_str())
        .chain(module.nets.iter().map(|n| n.name.as_str()))
        .collect();
    for p in module.inputs() {
        push_def(&mut g, &p.name, None, Vec::new(), DefKind::Input);
    }
    // Pass 1: every definition site.
    for (i, item) in module.items.iter().enumerate() {
        match item {
            Item::Assign(a) => {
                for t in a.lhs.targets() {
                    push_def(&mut g, t, Some(i), Vec::new(), DefKind::Continuous);
                }
            }
            Item::Always(a) => collect_stmt_defs(&a.body, i, &mut Vec::new(), &mut g),
            Item::Instance(inst) => {
                for (port, pos, e) in connections(&inst.connections) {
                    let dir = ports(&inst.module, port, pos);
                    if dir == Some(Direction::Input) {
                        continue;
                    }
                    if let Some(l) = as_lvalue_targets(e) {
                        for t in l {
                            push_def(&mut g, &t, Some(i), vec![pos], DefKind::InstanceOutput);
                        }
                    }
                }
            }
        }
    }
    // Pass 2: uses and the defs reaching each of them.
    let mut all_defs: HashMap<&str, Vec<usize>> = HashMap::new();
    for d in &g.defs {
        all_defs.entry(d.net.as_str()).or_default().push(d.id);
    }
    let all_defs: HashMap<String, Vec<usize>> =
        all_defs.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut uses: Vec<(UseSite, Vec<usize>)> = Vec::new();
    for (i, item) in module.items.iter().enumerate() {
        match item {
            Item::Assign(a) => {
                let mut names = Vec::new();
                expr_names(&a.rhs, &mut names);
                for e in a.lhs.index_exprs() {
                    expr_names(e, &mut names);
                }
                for n in names {
                    let reach = all_defs.get(&n).cloned().unwrap_or_default();
                    uses.push((use_site(n, i, Vec::new()), reach));
                }
            }
            Item::Always(a) => {
                let seq = matches!(a.sensitivity, Sensitivity::Edges(_));
                let own_blocking: HashSet<usize> = g
                    .defs
                    .iter()
                    .filter(|d| d.item == Some(i) && d.kind == DefKind::Blocking)
                    .map(|d| d.id)
                    .collect();
                let first_def = g.defs.iter().position(|d| d.item == Some(i) && d.kind != DefKind::InstanceOutput);
                let mut walker = BlockWalker {
                    item: i,
                    seq,
                    all_defs: &all_defs,
                    own_blocking: &own_blocking,
                    next_def: first_def.unwrap_or(usize::MAX),
                    defs: &g.defs,
                    uses: &mut uses,
                };
                let mut state = Reach::default();
                walker.stmt(&a.body, &mut Vec::new(), &mut state);
            }
            Item::Instance(inst) => {
                for (port, pos, e) in connections(&inst.connections) {
                    if ports(&inst.module, port, pos) == Some(Direction::Output) {
                        continue;
                    }
                    let mut names = Vec::new();
                    expr_names(e, &mut names);
                    for n in names {
                        let reach = all_defs.get(&n).cloned().unwrap_or_default();
                        uses.push((use_site(n, i, vec![pos]), reach));
                    }
                }
            }
        }
    }
    for (k, (mut u, reach)) in uses.into_iter().enumerate() {
        u.id = k;
        for d in reach {
            g.chains.push((d, k));
            g.def_join_edges.push((d, k));
        }
        g.join_use_edges.push((k, k));
        g.uses.push(u);
    }
    g.chains.sort_unstable();
    g.def_join_edges.sort_unstable();

    let defined: HashSet<&str> = g.defs.iter().map(|d| d.net.as_str()).collect();
    let read: HashSet<&str> = g.uses.iter().map(|u| u.net.as_str()).collect();
    let mut undriven = BTreeSet::new();
    let mut unread = BTreeSet::new();
    for s in &signals {
        let port = module.port(s);
        let is_input = port.is_some_and(|p| p.direction == Direction::Input);
        let is_output = port.is_some_and(|p| p.direction == Direction::Output);
        if !is_input && !defined.contains(s) {
            undriven.insert(s.to_string());
        }
        if !is_output && !read.contains(s) {
            unread.insert(s.to_string());
        }
    }
    g.undriven = undriven.into_iter().collect();
    g.unread = unread.into_iter().collect();
    g
}

fn push_def(g: &mut DefUseGraph, net: &str, item: Option<usize>, path: Vec<usize>, kind: DefKind) {
    let id = g.defs.len();
    g.defs.push(DefSite {
        id,
        net: net.to_string(),
        item,
        path,
        kind,
    });
}

fn use_site(net: String, item: usize, path: Vec<usize>) -> UseSite {
    UseSite {
        id: 0,
        net,
        item,
        path,
    }
}

fn connections(c: &Connections) -> Vec<(&str, usize, &Expr)> {
    match c {
        Connections::Named(cs) => cs
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.expr.as_ref().map(|e| (c.port.as_str(), i, e)))
            .collect(),
        Connections::Positional(cs) => cs
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| ("", i, e)))
            .collect(),
    }
}

fn as_lvalue_targets(e: &Expr) -> Option<Vec<String>> {
    match e {
        Expr::Ident(n) => Some(vec![n.clone()]),
        Expr::Index { base, .. } | Expr::Slice { base, .. } => match base.as_ref() {
            Expr::Ident(n) => Some(vec![n.clone()]),
            _ => None,
        },
        Expr::Concat(ps) => {
            let mut out = Vec::new();
            for p in ps {
                out.extend(as_lvalue_targets(p)?);
            }
            Some(out)
        }
        _ => None,
    }
}

/// Identifiers read by `e`, in pre-order, one entry per occurrence.
fn expr_names(e: &Expr, out: &mut Vec<String>) {
    e.walk(&mut |x| {
        if let Expr::Ident(n) = x {
            out.push(n.clone());
        }
    });
}

fn collect_stmt_defs(s: &Stmt, item: usize, path: &mut Vec<usize>, g: &mut DefUseGraph) {
    match s {
        Stmt::Assign { lhs, blocking, .. } => {
            let kind = if *blocking {
                DefKind::Blocking
            } else {
                DefKind::NonBlocking
            };
            for t in lhs.targets() {
                push_def(g, t, Some(item), path.clone(), kind);
            }
        }
        _ => {
            for (k, c) in children(s).into_iter().enumerate() {
                path.push(k);
                collect_stmt_defs(c, item, path, g);
                path.pop();
            }
        }
    }
}

fn children(s: &Stmt) -> Vec<&Stmt> {
    match s {
        Stmt::Block(ss) => ss.iter().collect(),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => {
            let mut v = vec![then_branch.as_ref()];
            if let Some(e) = else_branch {
                v.push(e.as_ref());
            }
            v
        }
        Stmt::Case(c) => {
            let mut v: Vec<&Stmt> = c.items.iter().map(|it| &it.body).collect();
            if let Some(d) = &c.default {
                v.push(d.as_ref());
            }
            v
        }
        Stmt::Assign { .. } | Stmt::Null => Vec::new(),
    }
}

/// Blocking definitions reaching the current point of a block.
#[derive(Debug, Clone, Default)]
struct Reach {
    local: HashMap<String, BTreeSet<usize>>,
    /// Nets assigned on every path so far.
    killed: HashSet<String>,
}

impl Reach {
    fn merge(branches: Vec<Reach>) -> Reach {
        let mut out = Reach::default();
        let mut killed: Option<HashSet<String>> = None;
        for b in branches {
            for (n, ds) in b.local {
                out.local.entry(n).or_default().extend(ds);
            }
            killed = Some(match killed {
                None => b.killed,
                Some(k) => k.intersection(&b.killed).cloned().collect(),
            });
        }
        out.killed = killed.unwrap_or_default();
        out
    }
}

struct BlockWalker<'a> {
    item: usize,
    seq: bool,
    all_defs: &'a HashMap<String, Vec<usize>>,
    own_blocking: &'a HashSet<usize>,
    next_def: usize,
    defs: &'a [DefSite],
    uses: &'a mut Vec<(UseSite, Vec<usize>)>,
}

impl BlockWalker<'_> {
    fn reaching(&self, net: &str, st: &Reach) -> Vec<usize> {
        let mut out: BTreeSet<usize> = st.local.get(net).cloned().unwrap_or_default();
        if !st.killed.contains(net) {
            for &d in self.all_defs.get(net).map(Vec::as_slice).unwrap_or(&[]) {
                // Earlier writes from this block only reach a read at the
                // top of the block through the state held between runs.
                if !self.own_blocking.contains(&d) || self.seq {
                    out.insert(d);
                }
            }
        }
        out.into_iter().collect()
    }

    fn read(&mut self, e: &Expr, path: &[usize], st: &Reach) {
        let mut names = Vec::new();
        expr_names(e, &mut names);
        for n in names {
            let r = self.reaching(&n, st);
            self.uses.push((use_site(n, self.item, path.to_vec()), r));
        }
    }

    fn stmt(&mut self, s: &Stmt, path: &mut Vec<usize>, st: &mut Reach) {
        match s {
            Stmt::Null => {}
            Stmt::Assign { lhs, rhs, blocking } => {
                self.read(rhs, path, st);
                for e in lhs.index_exprs() {
                    self.read(e, path, st);
                }
                for t in lhs.targets() {
                    let id = self.next_def;
                    debug_assert_eq!(self.defs[id].net, t);
                    self.next_def += 1;
                    if *blocking {
                        let whole = matches!(lhs, LValue::Ident(_));
                        let e = st.local.entry(t.to_string()).or_default();
                        if whole {
                            e.clear();
                            st.killed.insert(t.to_string());
                        }
                        e.insert(id);
                    }
                }
            }
            Stmt::Block(ss) => {
                for (k, c) in ss.iter().enumerate() {
                    path.push(k);
                    self.stmt(c, path, st);
                    path.pop();
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.read(cond, path, st);
                let mut t = st.clone();
                path.push(0);
                self.stmt(then_branch, path, &mut t);
                path.pop();
                let mut e = st.clone();
                if let Some(eb) = else_branch {
                    path.push(1);
                    self.stmt(eb, path, &mut e);
                    path.pop();
                }
                *st = Reach::merge(vec![t, e]);
            }
            Stmt::Case(c) => {
                self.read(&c.selector, path, st);
                for it in &c.items {
                    for l in &it.labels {
                        self.read(l, path, st);
                    }
                }
                let mut branches = Vec::new();
                for (k, it) in c.items.iter().enumerate() {
                    let mut b = st.clone();
                    path.push(k);
                    self.stmt(&it.body, path, &mut b);
                    path.pop();
                    branches.push(b);
                }
                let mut d = st.clone();
                if let Some(def) = &c.default {
                    path.push(c.items.len());
                    self.stmt(def, path, &mut d);
                    path.pop();
                }
                branches.push(d);
                *st = Reach::merge(branches);
            }
        }
    }
}
