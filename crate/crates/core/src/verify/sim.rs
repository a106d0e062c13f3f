//! Cycle-based two-state simulator for a flattened module.
//!
//! Expressions are compiled to slot-addressed trees with every width
//! resolved up front. Combinational processes run once per settle in
//! dependency order; every edge-triggered block fires once per cycle and
//! its non-blocking updates land after all blocks have run.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::frontend::ast::mask;
use crate::frontend::eval::{apply_binary, apply_unary};
use crate::frontend::width::{child_contexts, eval_width, self_width, ModuleScope, Symbol};
use crate::frontend::{
    BinaryOp, CaseKind, Direction, Expr, Item, LValue, ModuleAst, Sensitivity, Stmt, UnaryOp,
};

use super::{SimError, SimTrace, Stimulus};

#[derive(Debug, Clone)]
enum CExpr {
    Const(u64),
    Sig(usize),
    Elem {
        arr: usize,
        index: Box<CExpr>,
    },
    Bit {
        base: Box<CExpr>,
        index: Box<CExpr>,
    },
    Slice {
        base: Box<CExpr>,
        lsb: u32,
        mask: u64,
    },
    Concat(Vec<(CExpr, u32)>),
    Unary {
        op: UnaryOp,
        e: Box<CExpr>,
        ow: u32,
        w: u32,
    },
    Binary {
        op: BinaryOp,
        a: Box<CExpr>,
        b: Box<CExpr>,
        w: u32,
    },
    Ternary {
        c: Box<CExpr>,
        a: Box<CExpr>,
        b: Box<CExpr>,
    },
}

#[derive(Debug, Clone)]
enum CTarget {
    Whole { slot: usize, mask: u64 },
    Bits { slot: usize, lsb: u32, width: u32 },
    DynBit { slot: usize, index: CExpr, width: u32 },
    Elem { arr: usize, index: CExpr, mask: u64 },
    Concat(Vec<(CTarget, u32)>),
}

#[derive(Debug, Clone)]
enum CStmt {
    Assign {
        target: CTarget,
        rhs: CExpr,
        blocking: bool,
    },
    If {
        cond: CExpr,
        then: Vec<CStmt>,
        els: Vec<CStmt>,
    },
    Case {
        sel: CExpr,
        arms: Vec<(Vec<(u64, u64)>, Vec<CStmt>)>,
        /// Labels that are not constants, compared at run time.
        dyn_arms: Vec<(usize, CExpr)>,
        default: Vec<CStmt>,
        mask: u64,
    },
}

/// Location written by a deferred (non-blocking) update.
#[derive(Debug, Clone, Copy)]
enum Loc {
    Slot { slot: usize, mask: u64, shift: u32 },
    Elem { arr: usize, index: usize, mask: u64 },
}

#[derive(Debug, Clone)]
pub struct Simulator {
    names: Vec<String>,
    widths: Vec<u32>,
    slot_of: HashMap<String, usize>,
    arrays: Vec<(String, u32, Vec<u64>)>,
    values: Vec<u64>,
    comb: Vec<Vec<CStmt>>,
    seq: Vec<Vec<CStmt>>,
    inputs: Vec<(String, usize, u32)>,
    outputs: Vec<(String, usize, u32)>,
    clock: Option<String>,
    edge_signals: Vec<String>,
    nba: Vec<(Loc, u64)>,
}

struct Compiler<'a> {
    scope: ModuleScope,
    slot_of: &'a HashMap<String, usize>,
    arr_of: &'a HashMap<String, usize>,
}

impl Compiler<'_> {
    fn expr(&self, e: &Expr, ctx: u32) -> Result<CExpr, SimError> {
        let w = eval_width(e, ctx, &self.scope);
        let ctxs = child_contexts(e, w, &self.scope);
        Ok(match e {
            Expr::Ident(n) => match self.scope.get(n) {
                Some(Symbol::Param(l)) => CExpr::Const(l.value & mask(l.self_width())),
                Some(Symbol::Net { depth: Some(_), .. }) => {
                    return Err(SimError::Unsupported(format!("array `{n}` read without index")))
                }
                Some(_) => CExpr::Sig(self.slot(n)?),
                None => return Err(SimError::Unsupported(format!("undeclared `{n}`"))),
            },
            Expr::Literal(l) => CExpr::Const(l.value),
            Expr::Index { base, index } => {
                let index = Box::new(self.expr(index, ctxs[1])?);
                match base.as_ref() {
                    Expr::Ident(n) if self.arr_of.contains_key(n) => CExpr::Elem {
                        arr: self.arr_of[n],
                        index,
                    },
                    b => CExpr::Bit {
                        base: Box::new(self.expr(b, 0)?),
                        index,
                    },
                }
            }
            Expr::Slice { base, msb, lsb } => CExpr::Slice {
                base: Box::new(self.expr(base, 0)?),
                lsb: *lsb,
                mask: mask(msb - lsb + 1),
            },
            Expr::Concat(parts) => CExpr::Concat(
                parts
                    .iter()
                    .map(|p| Ok((self.expr(p, 0)?, self_width(p, &self.scope))))
                    .collect::<Result<_, SimError>>()?,
            ),
            Expr::Repeat { count, parts } => {
                let mut all = Vec::new();
                for _ in 0..*count {
                    for p in parts {
                        all.push((self.expr(p, 0)?, self_width(p, &self.scope)));
                    }
                }
                CExpr::Concat(all)
            }
            Expr::Unary { op, operand } => CExpr::Unary {
                op: *op,
                e: Box::new(self.expr(operand, ctxs[0])?),
                ow: eval_width(operand, ctxs[0], &self.scope),
                w,
            },
            Expr::Binary { op, lhs, rhs } => CExpr::Binary {
                op: *op,
                a: Box::new(self.expr(lhs, ctxs[0])?),
                b: Box::new(self.expr(rhs, ctxs[1])?),
                w,
            },
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
            } => CExpr::Ternary {
                c: Box::new(self.expr(cond, ctxs[0])?),
                a: Box::new(self.expr(then_expr, ctxs[1])?),
                b: Box::new(self.expr(else_expr, ctxs[2])?),
            },
        })
    }

    fn slot(&self, n: &str) -> Result<usize, SimError> {
        self.slot_of
            .get(n)
            .copied()
            .ok_or_else(|| SimError::Unsupported(format!("undeclared `{n}`")))
    }

    fn width(&self, n: &str) -> u32 {
        use crate::frontend::width::WidthEnv;
        self.scope.width_of(n).unwrap_or(1)
    }

    fn target_width(&self, l: &LValue) -> u32 {
        match l {
            LValue::Ident(n) => self.width(n),
            LValue::Index { name, .. } => {
                if self.arr_of.contains_key(name) {
                    self.width(name)
                } else {
                    1
                }
            }
            LValue::Slice { msb, lsb, .. } => msb - lsb + 1,
            LValue::Concat(ps) => ps.iter().map(|p| self.target_width(p)).sum(),
        }
    }

    fn target(&self, l: &LValue) -> Result<CTarget, SimError> {
        Ok(match l {
            LValue::Ident(n) => CTarget::Whole {
                slot: self.slot(n)?,
                mask: mask(self.width(n)),
            },
            LValue::Index { name, index } => {
                let ie = self.expr(index, 0)?;
                if let Some(&arr) = self.arr_of.get(name) {
                    CTarget::Elem {
                        arr,
                        index: ie,
                        mask: mask(self.width(name)),
                    }
                } else {
                    CTarget::DynBit {
                        slot: self.slot(name)?,
                        index: ie,
                        width: self.width(name),
                    }
                }
            }
            LValue::Slice { name, msb, lsb } => CTarget::Bits {
                slot: self.slot(name)?,
                lsb: *lsb,
                width: msb - lsb + 1,
            },
            LValue::Concat(ps) => CTarget::Concat(
                ps.iter()
                    .map(|p| Ok((self.target(p)?, self.target_width(p))))
                    .collect::<Result<_, SimError>>()?,
            ),
        })
    }

    fn stmt(&self, s: &Stmt, out: &mut Vec<CStmt>) -> Result<(), SimError> {
        match s {
            Stmt::Null => {}
            Stmt::Block(ss) => {
                for s in ss {
                    self.stmt(s, out)?;
                }
            }
            Stmt::Assign { lhs, rhs, blocking } => out.push(CStmt::Assign {
                target: self.target(lhs)?,
                rhs: self.expr(rhs, self.target_width(lhs))?,
                blocking: *blocking,
            }),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut then = Vec::new();
                self.stmt(then_branch, &mut then)?;
                let mut els = Vec::new();
                if let Some(e) = else_branch {
                    self.stmt(e, &mut els)?;
                }
                out.push(CStmt::If {
                    cond: self.expr(cond, 0)?,
                    then,
                    els,
                });
            }
            Stmt::Case(c) => {
                let mut w = self_width(&c.selector, &self.scope);
                for it in &c.items {
                    for l in &it.labels {
                        w = w.max(self_width(l, &self.scope));
                    }
                }
                let mut arms = Vec::new();
                let mut dyn_arms = Vec::new();
                for it in &c.items {
                    let mut labels = Vec::new();
                    for l in &it.labels {
                        match l {
                            Expr::Literal(lit) => {
                                let care = if c.kind == CaseKind::Casez {
                                    !lit.dont_care
                                } else {
                                    u64::MAX
                                };
                                labels.push((lit.value & care, care));
                            }
                            _ => dyn_arms.push((arms.len(), self.expr(l, w)?)),
                        }
                    }
                    let mut body = Vec::new();
                    self.stmt(&it.body, &mut body)?;
                    arms.push((labels, body));
                }
                let mut default = Vec::new();
                if let Some(d) = &c.default {
                    self.stmt(d, &mut default)?;
                }
                out.push(CStmt::Case {
                    sel: self.expr(&c.selector, w)?,
                    arms,
                    dyn_arms,
                    default,
                    mask: mask(w),
                });
            }
        }
        Ok(())
    }
}

fn stmt_reads(s: &Stmt, reads: &mut HashSet<String>) {
    s.walk(&mut |s| s.for_each_own_expr(&mut |e| collect_idents(e, reads)));
}

fn collect_idents(e: &Expr, out: &mut HashSet<String>) {
    for n in e.idents() {
        out.insert(n.to_string());
    }
}

fn stmt_writes(s: &Stmt, writes: &mut HashSet<String>) {
    s.walk(&mut |s| {
        if let Stmt::Assign { lhs, .. } = s {
            for t in lhs.targets() {
                writes.insert(t.to_string());
            }
        }
    });
}

impl Simulator {
    pub fn new(module: &ModuleAst) -> Result<Simulator, SimError> {
        let mut names = Vec::new();
        let mut widths = Vec::new();
        let mut slot_of = HashMap::new();
        let mut arrays = Vec::new();
        let mut arr_of = HashMap::new();
        for p in &module.ports {
            if p.direction == Direction::Inout {
                return Err(SimError::Unsupported("inout ports".into()));
            }
            slot_of.insert(p.name.clone(), names.len());
            names.push(p.name.clone());
            widths.push(p.width);
        }
        for n in &module.nets {
            if let Some(d) = n.depth {
                arr_of.insert(n.name.clone(), arrays.len());
                arrays.push((n.name.clone(), n.width, vec![0u64; d as usize]));
            } else {
                slot_of.insert(n.name.clone(), names.len());
                names.push(n.name.clone());
                widths.push(n.width);
            }
        }
        let compiler = Compiler {
            scope: ModuleScope::new(module),
            slot_of: &slot_of,
            arr_of: &arr_of,
        };

        struct Proc {
            body: Vec<CStmt>,
            reads: HashSet<String>,
            writes: HashSet<String>,
        }
        let mut comb_procs = Vec::new();
        let mut seq = Vec::new();
        let mut edge_signals: Vec<String> = Vec::new();
        for item in &module.items {
            match item {
                Item::Assign(a) => {
                    let mut reads = HashSet::new();
                    collect_idents(&a.rhs, &mut reads);
                    for e in a.lhs.index_exprs() {
                        collect_idents(e, &mut reads);
                    }
                    let writes = a.lhs.targets().into_iter().map(String::from).collect();
                    comb_procs.push(Proc {
                        body: vec![CStmt::Assign {
                            target: compiler.target(&a.lhs)?,
                            rhs: compiler.expr(&a.rhs, compiler.target_width(&a.lhs))?,
                            blocking: true,
                        }],
                        reads,
                        writes,
                    });
                }
                Item::Always(al) => {
                    let mut body = Vec::new();
                    compiler.stmt(&al.body, &mut body)?;
                    match &al.sensitivity {
                        Sensitivity::Star => {
                            let mut reads = HashSet::new();
                            stmt_reads(&al.body, &mut reads);
                            let mut writes = HashSet::new();
                            stmt_writes(&al.body, &mut writes);
                            comb_procs.push(Proc {
                                body,
                                reads,
                                writes,
                            });
                        }
                        Sensitivity::Edges(es) => {
                            for e in es {
                                if !edge_signals.contains(&e.signal) {
                                    edge_signals.push(e.signal.clone());
                                }
                            }
                            seq.push(body);
                        }
                    }
                }
                Item::Instance(i) => {
                    return Err(SimError::Unsupported(format!(
                        "instance `{}` must be flattened before simulation",
                        i.name
                    )))
                }
            }
        }

        // Order combinational processes so that every writer runs before
        // its readers.
        let n = comb_procs.len();
        let mut writers: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, p) in comb_procs.iter().enumerate() {
            for w in &p.writes {
                writers.entry(w.as_str()).or_default().push(i);
            }
        }
        let mut succ = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for (j, p) in comb_procs.iter().enumerate() {
            let mut preds: Vec<usize> = p
                .reads
                .iter()
                .flat_map(|r| writers.get(r.as_str()).cloned().unwrap_or_default())
                .filter(|&i| i != j)
                .collect();
            preds.sort_unstable();
            preds.dedup();
            for i in preds {
                succ[i].push(j);
                indeg[j] += 1;
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() < n {
            let mut stuck: Vec<String> = (0..n)
                .filter(|&i| indeg[i] > 0)
                .flat_map(|i| comb_procs[i].writes.iter().cloned())
                .collect();
            stuck.sort();
            stuck.dedup();
            return Err(SimError::CombinationalLoop(stuck));
        }
        let mut comb_slots: Vec<Option<Vec<CStmt>>> =
            comb_procs.into_iter().map(|p| Some(p.body)).collect();
        let comb = order
            .into_iter()
            .map(|i| comb_slots[i].take().expect("each process once"))
            .collect();

        let inputs = module
            .ports
            .iter()
            .filter(|p| p.direction == Direction::Input)
            .map(|p| (p.name.clone(), slot_of[&p.name], p.width))
            .collect();
        let outputs = module
            .ports
            .iter()
            .filter(|p| p.direction == Direction::Output)
            .map(|p| (p.name.clone(), slot_of[&p.name], p.width))
            .collect();
        let clock = edge_signals.first().cloned();
        let values = vec![0; names.len()];
        Ok(Simulator {
            names,
            widths,
            slot_of,
            arrays,
            values,
            comb,
            seq,
            inputs,
            outputs,
            clock,
            edge_signals,
            nba: Vec::new(),
        })
    }

    pub fn is_sequential(&self) -> bool {
        !self.seq.is_empty()
    }

    /// Clock signal: the first signal named in any edge list.
    pub fn clock(&self) -> Option<&str> {
        self.clock.as_deref()
    }

    pub fn edge_signals(&self) -> &[String] {
        &self.edge_signals
    }

    /// Input ports as `(name, width)`.
    pub fn inputs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.inputs.iter().map(|(n, _, w)| (n.as_str(), *w))
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.outputs.iter().map(|(n, _, w)| (n.as_str(), *w))
    }

    /// All registers and arrays back to zero.
    pub fn reset_state(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0);
        for (_, _, a) in &mut self.arrays {
            a.iter_mut().for_each(|v| *v = 0);
        }
        self.nba.clear();
    }

    pub fn set(&mut self, name: &str, value: u64) -> Result<(), SimError> {
        let slot = *self
            .slot_of
            .get(name)
            .ok_or_else(|| SimError::Unsupported(format!("no signal `{name}`")))?;
        if value & !mask(self.widths[slot]) != 0 {
            return Err(SimError::WidthMismatch(format!(
                "value {value:#x} does not fit `{name}` ({} bits)",
                self.widths[slot]
            )));
        }
        self.values[slot] = value;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.slot_of.get(name).map(|&s| self.values[s])
    }

    /// Set input `i` (in port order among inputs); value is masked.
    pub fn set_input_index(&mut self, i: usize, value: u64) {
        let (_, slot, w) = self.inputs[i];
        self.values[slot] = value & mask(w);
    }

    pub fn output_index(&self, i: usize) -> u64 {
        self.values[self.outputs[i].1]
    }

    /// Run every combinational process once in dependency order.
    pub fn settle(&mut self) {
        let comb = std::mem::take(&mut self.comb);
        for p in &comb {
            self.exec_all(p);
            self.commit();
        }
        self.comb = comb;
    }

    /// One clock edge: run every edge-triggered block, commit non-blocking
    /// updates, then settle combinational logic.
    pub fn tick(&mut self) {
        let seq = std::mem::take(&mut self.seq);
        for p in &seq {
            self.exec_all(p);
        }
        self.seq = seq;
        self.commit();
        self.settle();
    }

    fn commit(&mut self) {
        let nba = std::mem::take(&mut self.nba);
        for (loc, v) in &nba {
            self.store(*loc, *v);
        }
        self.nba = nba;
        self.nba.clear();
    }

    fn store(&mut self, loc: Loc, v: u64) {
        match loc {
            Loc::Slot { slot, mask, shift } => {
                let m = mask << shift;
                self.values[slot] = (self.values[slot] & !m) | ((v & mask) << shift);
            }
            Loc::Elem { arr, index, mask } => {
                if let Some(x) = self.arrays[arr].2.get_mut(index) {
                    *x = v & mask;
                }
            }
        }
    }

    fn exec_all(&mut self, stmts: &[CStmt]) {
        for s in stmts {
            self.exec(s);
        }
    }

    fn exec(&mut self, s: &CStmt) {
        match s {
            CStmt::Assign {
                target,
                rhs,
                blocking,
            } => {
                let v = self.eval(rhs);
                let mut locs = Vec::new();
                self.resolve(target, v, &mut locs);
                for (loc, v) in locs {
                    if *blocking {
                        self.store(loc, v);
                    } else {
                        self.nba.push((loc, v));
                    }
                }
            }
            CStmt::If { cond, then, els } => {
                let branch = if self.eval(cond) != 0 { then } else { els };
                for s in branch {
                    self.exec(s);
                }
            }
            CStmt::Case {
                sel,
                arms,
                dyn_arms,
                default,
                mask,
            } => {
                let v = self.eval(sel) & mask;
                let mut hit = None;
                for (i, (labels, _)) in arms.iter().enumerate() {
                    let stat = labels.iter().any(|&(l, care)| (v ^ l) & care & mask == 0);
                    let dynm = dyn_arms
                        .iter()
                        .any(|(a, e)| *a == i && (self.eval(e) & mask) == v);
                    if stat || dynm {
                        hit = Some(i);
                        break;
                    }
                }
                let body = match hit {
                    Some(i) => &arms[i].1,
                    None => default,
                };
                for s in body {
                    self.exec(s);
                }
            }
        }
    }

    fn resolve(&self, t: &CTarget, v: u64, out: &mut Vec<(Loc, u64)>) {
        match t {
            CTarget::Whole { slot, mask } => out.push((
                Loc::Slot {
                    slot: *slot,
                    mask: *mask,
                    shift: 0,
                },
                v,
            )),
            CTarget::Bits { slot, lsb, width } => out.push((
                Loc::Slot {
                    slot: *slot,
                    mask: mask(*width),
                    shift: *lsb,
                },
                v,
            )),
            CTarget::DynBit { slot, index, width } => {
                let i = self.eval(index);
                if i < *width as u64 {
                    out.push((
                        Loc::Slot {
                            slot: *slot,
                            mask: 1,
                            shift: i as u32,
                        },
                        v,
                    ));
                }
            }
            CTarget::Elem { arr, index, mask } => {
                let i = self.eval(index);
                if (i as usize) < self.arrays[*arr].2.len() {
                    out.push((
                        Loc::Elem {
                            arr: *arr,
                            index: i as usize,
                            mask: *mask,
                        },
                        v,
                    ));
                }
            }
            CTarget::Concat(parts) => {
                let mut shift = 0u32;
                for (p, w) in parts.iter().rev() {
                    let pv = if shift >= 64 { 0 } else { v >> shift };
                    self.resolve(p, pv & mask(*w), out);
                    shift += w;
                }
            }
        }
    }

    fn eval(&self, e: &CExpr) -> u64 {
        match e {
            CExpr::Const(v) => *v,
            CExpr::Sig(s) => self.values[*s],
            CExpr::Elem { arr, index } => {
                let i = self.eval(index);
                self.arrays[*arr].2.get(i as usize).copied().unwrap_or(0)
            }
            CExpr::Bit { base, index } => {
                let i = self.eval(index);
                if i >= 64 {
                    0
                } else {
                    (self.eval(base) >> i) & 1
                }
            }
            CExpr::Slice { base, lsb, mask } => (self.eval(base) >> lsb) & mask,
            CExpr::Concat(parts) => {
                let mut acc = 0u64;
                for (p, w) in parts {
                    acc = if *w >= 64 { 0 } else { acc << w };
                    acc |= self.eval(p);
                }
                acc
            }
            CExpr::Unary { op, e, ow, w } => apply_unary(*op, self.eval(e), *ow, *w),
            CExpr::Binary { op, a, b, w } => match op {
                BinaryOp::LogicAnd => (self.eval(a) != 0 && self.eval(b) != 0) as u64,
                BinaryOp::LogicOr => (self.eval(a) != 0 || self.eval(b) != 0) as u64,
                _ => apply_binary(*op, self.eval(a), self.eval(b), *w),
            },
            CExpr::Ternary { c, a, b } => {
                if self.eval(c) != 0 {
                    self.eval(a)
                } else {
                    self.eval(b)
                }
            }
        }
    }

    /// Run a stimulus from a cleared state. Combinational designs are
    /// settled once per cycle; sequential designs also take one clock
    /// edge per cycle and are sampled after it.
    pub fn run(&mut self, stim: &Stimulus) -> Result<SimTrace, SimError> {
        self.reset_state();
        let mut cols = Vec::with_capacity(self.inputs.len());
        for (name, _, w) in &self.inputs {
            if Some(name.as_str()) == self.clock.as_deref() && self.is_sequential() {
                cols.push(None);
                continue;
            }
            let col = stim
                .inputs
                .get(name)
                .ok_or_else(|| SimError::MissingInput(name.clone()))?;
            {
                if col.len() < stim.cycles {
                    return Err(SimError::WidthMismatch(format!(
                        "input `{name}` has {} values for {} cycles",
                        col.len(),
                        stim.cycles
                    )));
                }
                if let Some(v) = col.iter().find(|v| **v & !mask(*w) != 0) {
                    return Err(SimError::WidthMismatch(format!(
                        "value {v:#x} does not fit input `{name}` ({w} bits)"
                    )));
                }
            }
            cols.push(Some(col));
        }
        let mut trace = SimTrace {
            outputs: self
                .outputs
                .iter()
                .map(|(n, _, _)| (n.clone(), Vec::with_capacity(stim.cycles)))
                .collect::<BTreeMap<_, _>>(),
        };
        let seqd = self.is_sequential();
        for c in 0..stim.cycles {
            for (i, col) in cols.iter().enumerate() {
                let v = col.map(|col| col[c]).unwrap_or(0);
                self.set_input_index(i, v);
            }
            self.settle();
            if seqd {
                self.tick();
            }
            for (n, slot, _) in &self.outputs {
                trace
                    .outputs
                    .get_mut(n)
                    .expect("output column")
                    .push(self.values[*slot]);
            }
        }
        Ok(trace)
    }

    pub fn signal_names(&self) -> &[String] {
        &self.names
    }
}
