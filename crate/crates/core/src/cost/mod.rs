//! Synthesis-proxy cost model: wires, cells, area and delay estimates.
//!
//! Operator widths are the widths the hardware actually needs: unsized
//! literals count only their significant bits, so `x + 1` on an 8-bit `x`
//! is an 8-bit adder.

mod weights;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::frontend::width::{effective_width, is_context_determined, ModuleScope, Symbol};
use crate::frontend::{
    BinaryOp, DesignAst, Expr, Item, LValue, ModuleAst, Sensitivity, Stmt, UnaryOp,
};

pub use weights::{CostWeights, OpKind, OpWeight, WeightsError};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModuleCost {
    pub module: String,
    /// Number of instances of this module counted in the totals.
    pub instances: u64,
    pub wires: u64,
    pub cells: u64,
    pub area: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostReport {
    pub wires: u64,
    pub cells: u64,
    pub area: f64,
    /// Longest combinational path over all modules.
    pub delay: f64,
    pub modules: Vec<ModuleCost>,
}

/// Wires, cells, area and delay as plain numbers, for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub wires: f64,
    pub cells: f64,
    pub area: f64,
    pub delay: f64,
}

impl From<&CostReport> for Metrics {
    fn from(r: &CostReport) -> Self {
        Metrics {
            wires: r.wires as f64,
            cells: r.cells as f64,
            area: r.area,
            delay: r.delay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Improved,
    Equal,
    Worse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub wires: Trend,
    pub cells: Trend,
    pub area: Trend,
    pub delay: Trend,
    /// Lexicographic verdict over (cells, area, delay).
    pub overall: Trend,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("{ours} reports against {baseline} baseline reports")]
    LengthMismatch { ours: usize, baseline: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ours: Metrics,
    pub baseline: Metrics,
    pub ratio: Metrics,
}

const EPS: f64 = 1e-9;

fn trend_f(before: f64, after: f64) -> Trend {
    if after < before - EPS * before.abs().max(1.0) {
        Trend::Improved
    } else if after > before + EPS * before.abs().max(1.0) {
        Trend::Worse
    } else {
        Trend::Equal
    }
}

/// Per-metric trends plus the lexicographic (cells, area, delay) verdict.
pub fn compare(before: &CostReport, after: &CostReport) -> Comparison {
    let cells = trend_f(before.cells as f64, after.cells as f64);
    let area = trend_f(before.area, after.area);
    let delay = trend_f(before.delay, after.delay);
    let overall = [cells, area, delay]
        .into_iter()
        .find(|t| *t != Trend::Equal)
        .unwrap_or(Trend::Equal);
    Comparison {
        wires: trend_f(before.wires as f64, after.wires as f64),
        cells,
        area,
        delay,
        overall,
    }
}

/// Geometric mean; zeros count as 1.
pub fn geomean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 1.0;
    }
    let s: f64 = xs.iter().map(|x| if *x > 0.0 { x.ln() } else { 0.0 }).sum();
    (s / xs.len() as f64).exp()
}

fn metrics_geomean(ms: &[Metrics]) -> Metrics {
    let col = |f: fn(&Metrics) -> f64| geomean(&ms.iter().map(f).collect::<Vec<_>>());
    Metrics {
        wires: col(|m| m.wires),
        cells: col(|m| m.cells),
        area: col(|m| m.area),
        delay: col(|m| m.delay),
    }
}

/// Geometric means of both columns and their ratio (ours / baseline).
pub fn aggregate(reports: &[Metrics], baseline: &[Metrics]) -> Result<Aggregate, CostError> {
    if reports.len() != baseline.len() {
        return Err(CostError::LengthMismatch {
            ours: reports.len(),
            baseline: baseline.len(),
        });
    }
    let ours = metrics_geomean(reports);
    let base = metrics_geomean(baseline);
    Ok(Aggregate {
        ours,
        baseline: base,
        ratio: Metrics {
            wires: ours.wires / base.wires,
            cells: ours.cells / base.cells,
            area: ours.area / base.area,
            delay: ours.delay / base.delay,
        },
    })
}

/// Estimate a design. Modules reachable from the top candidates are
/// counted once per instance; with no instances every module counts once.
pub fn estimate(ast: &DesignAst, weights: &CostWeights) -> CostReport {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let tops = ast.top_candidates();
    fn visit<'a>(ast: &'a DesignAst, m: &'a str, n: u64, counts: &mut BTreeMap<&'a str, u64>, depth: usize) {
        if depth > ast.modules.len() {
            return;
        }
        *counts.entry(m).or_default() += n;
        if let Some(md) = ast.module(m) {
            for i in md.instances() {
                if ast.module(&i.module).is_some() {
                    visit(ast, &i.module, n, counts, depth + 1);
                }
            }
        }
    }
    for t in &tops {
        visit(ast, t, 1, &mut counts, 0);
    }
    let mut report = CostReport::default();
    for m in &ast.modules {
        let Some(&n) = counts.get(m.name.as_str()) else {
            continue;
        };
        let c = estimate_module(m, weights);
        report.wires += c.wires * n;
        report.cells += c.cells * n;
        report.area += c.area * n as f64;
        report.delay = report.delay.max(c.delay);
        report.modules.push(ModuleCost {
            module: m.name.clone(),
            instances: n,
            wires: c.wires * n,
            cells: c.cells * n,
            area: c.area * n as f64,
            delay: c.delay,
        });
    }
    report
}

/// Cost of a single module definition, ignoring what it instantiates.
pub fn estimate_module(m: &ModuleAst, weights: &CostWeights) -> ModuleCost {
    let mut est = Estimator::new(m, weights);
    est.run();
    ModuleCost {
        module: m.name.clone(),
        instances: 1,
        wires: (m.ports.len() + m.nets.len()) as u64 + est.op_nodes,
        cells: est.cells,
        area: est.area,
        delay: est.delay,
    }
}

fn clog2(w: u32) -> u32 {
    if w <= 1 {
        0
    } else {
        32 - (w - 1).leading_zeros()
    }
}

struct Estimator<'a> {
    m: &'a ModuleAst,
    scope: ModuleScope,
    weights: &'a CostWeights,
    cells: u64,
    area: f64,
    delay: f64,
    op_nodes: u64,
    /// Arrival time of each combinationally driven signal.
    arrival: HashMap<String, f64>,
    registers: HashSet<String>,
    counting: bool,
}

impl<'a> Estimator<'a> {
    fn new(m: &'a ModuleAst, weights: &'a CostWeights) -> Self {
        let mut registers = HashSet::new();
        for item in &m.items {
            if let Item::Always(a) = item {
                if matches!(a.sensitivity, Sensitivity::Edges(_)) {
                    a.body.walk(&mut |s| {
                        if let Stmt::Assign { lhs, .. } = s {
                            for t in lhs.targets() {
                                registers.insert(t.to_string());
                            }
                        }
                    });
                }
            }
        }
        Estimator {
            m,
            scope: ModuleScope::new(m),
            weights,
            cells: 0,
            area: 0.0,
            delay: 0.0,
            op_nodes: 0,
            arrival: HashMap::new(),
            registers,
            counting: true,
        }
    }

    fn charge(&mut self, kind: OpKind, width: u32, units: u64) {
        if !self.counting || units == 0 {
            return;
        }
        let w = self.weights.get(kind);
        let cells = w.cells_for(width) * units;
        self.cells += cells;
        self.area += cells as f64 * w.area;
    }

    fn levels(&self, kind: OpKind, levels: u32) -> f64 {
        self.weights.get(kind).delay * levels as f64
    }

    fn width(&self, name: &str) -> u32 {
        use crate::frontend::width::WidthEnv;
        self.scope.width_of(name).unwrap_or(1)
    }

    fn eff(&self, e: &Expr) -> u32 {
        effective_width(e, &self.scope)
    }

    fn ew(&self, e: &Expr, ctx: u32) -> u32 {
        let s = self.eff(e);
        if is_context_determined(e) {
            s.max(ctx)
        } else {
            s
        }
    }

    fn run(&mut self) {
        for r in self.registers.clone() {
            let depth = match self.scope.get(&r) {
                Some(Symbol::Net { depth: Some(d), .. }) => *d as u64,
                _ => 1,
            };
            let w = self.width(&r);
            self.charge(OpKind::Register, w, depth * w as u64);
        }
        // Arrival times only grow between passes; a bounded number of
        // passes reaches the fixpoint on acyclic logic.
        let passes = self.m.items.len() + 1;
        for pass in 0..passes {
            self.counting = pass == 0;
            let before = self.arrival.clone();
            for item in &self.m.items {
                self.item(item);
            }
            if pass > 0 && before == self.arrival {
                break;
            }
        }
        self.counting = true;
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Assign(a) => {
                let tw = self.lvalue_width(&a.lhs);
                let idx = self.lvalue_index_delay(&a.lhs);
                let d = self.expr(&a.rhs, tw).max(idx);
                self.arrive(&a.lhs, d);
            }
            Item::Always(a) => {
                let seq = matches!(a.sensitivity, Sensitivity::Edges(_));
                self.stmt(&a.body, 0.0, seq);
            }
            Item::Instance(i) => {
                let exprs: Vec<&Expr> = match &i.connections {
                    crate::frontend::Connections::Named(cs) => {
                        cs.iter().filter_map(|c| c.expr.as_ref()).collect()
                    }
                    crate::frontend::Connections::Positional(cs) => cs.iter().flatten().collect(),
                };
                for e in exprs {
                    let d = self.expr(e, 0);
                    self.delay = self.delay.max(d);
                }
            }
        }
    }

    fn arrive(&mut self, lhs: &LValue, d: f64) {
        self.delay = self.delay.max(d);
        for t in lhs.targets() {
            if self.registers.contains(t) {
                continue;
            }
            let a = self.arrival.entry(t.to_string()).or_insert(0.0);
            if d > *a {
                *a = d;
            }
        }
    }

    fn lvalue_width(&self, l: &LValue) -> u32 {
        match l {
            LValue::Ident(n) => self.width(n),
            LValue::Index { name, .. } => {
                if self.scope.is_array_name(name) {
                    self.width(name)
                } else {
                    1
                }
            }
            LValue::Slice { msb, lsb, .. } => msb - lsb + 1,
            LValue::Concat(ps) => ps.iter().map(|p| self.lvalue_width(p)).sum(),
        }
    }

    /// Dynamic write index: a decoder per addressed target.
    fn lvalue_index_delay(&mut self, l: &LValue) -> f64 {
        match l {
            LValue::Index { name, index } => {
                if index.as_literal().is_some() {
                    return 0.0;
                }
                let d = self.expr(index, 0);
                let n = match self.scope.get(name) {
                    Some(Symbol::Net { depth: Some(k), .. }) => *k,
                    _ => self.width(name),
                };
                self.charge(OpKind::Select, 1, n as u64);
                d + self.levels(OpKind::Select, clog2(n))
            }
            LValue::Concat(ps) => ps
                .iter()
                .map(|p| self.lvalue_index_delay(p))
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Walk a statement. `ctl` is the arrival of the controlling
    /// conditions so far.
    fn stmt(&mut self, s: &Stmt, ctl: f64, seq: bool) {
        match s {
            Stmt::Null => {}
            Stmt::Block(ss) => {
                for s in ss {
                    self.stmt(s, ctl, seq);
                }
            }
            Stmt::Assign { lhs, rhs, .. } => {
                let tw = self.lvalue_width(lhs);
                let idx = self.lvalue_index_delay(lhs);
                let d = self.expr(rhs, tw).max(ctl).max(idx);
                self.arrive(lhs, d);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cd = self.expr(cond, 0);
                let mux = self.levels(OpKind::Mux, 1);
                let c = ctl.max(cd) + mux;
                let mut targets = HashSet::new();
                assigned(then_branch, &mut targets);
                if let Some(e) = else_branch {
                    assigned(e, &mut targets);
                }
                for t in sorted(&targets) {
                    let w = self.width(t);
                    self.charge(OpKind::Mux, w, w as u64);
                }
                self.stmt(then_branch, c, seq);
                if let Some(e) = else_branch {
                    self.stmt(e, c, seq);
                }
            }
            Stmt::Case(cs) => {
                let sel_w = cs
                    .items
                    .iter()
                    .flat_map(|it| it.labels.iter())
                    .map(|l| self.eff(l))
                    .fold(self.eff(&cs.selector), u32::max);
                let sd = self.expr(&cs.selector, sel_w);
                let mut labels = 0u64;
                let mut ld = 0.0f64;
                for it in &cs.items {
                    for l in &it.labels {
                        labels += 1;
                        ld = ld.max(self.expr(l, sel_w));
                    }
                }
                let all_literal = cs.items.iter().flat_map(|it| &it.labels).all(|l| l.as_literal().is_some());
                // Literal labels share one decoder over the selector bits.
                let units = if all_literal && labels > 0 {
                    sel_w as u64 + labels * (sel_w as u64 - 1)
                } else {
                    labels * sel_w as u64
                };
                self.charge(OpKind::Compare, sel_w, units);
                let branches = cs.items.len() as u32 + 1;
                let decode = self.levels(OpKind::Compare, clog2(sel_w) + 1);
                let c = ctl.max(sd).max(ld) + decode + self.levels(OpKind::Mux, clog2(branches));
                let mut targets = HashSet::new();
                for it in &cs.items {
                    assigned(&it.body, &mut targets);
                }
                if let Some(d) = &cs.default {
                    assigned(d, &mut targets);
                }
                for t in sorted(&targets) {
                    let w = self.width(t);
                    self.charge(OpKind::Mux, w, (branches as u64 - 1) * w as u64);
                }
                for it in &cs.items {
                    self.stmt(&it.body, c, seq);
                }
                if let Some(d) = &cs.default {
                    self.stmt(d, c, seq);
                }
            }
        }
    }

    /// Charge the cells of `e` evaluated at context `ctx` and return its
    /// arrival time.
    fn expr(&mut self, e: &Expr, ctx: u32) -> f64 {
        let w = self.ew(e, ctx);
        if e.is_operator() {
            if self.counting {
                self.op_nodes += 1;
            }
        }
        match e {
            Expr::Ident(n) => {
                if self.registers.contains(n) {
                    0.0
                } else {
                    self.arrival.get(n).copied().unwrap_or(0.0)
                }
            }
            Expr::Literal(_) => 0.0,
            Expr::Index { base, index } => {
                let id = self.expr(index, 0);
                let constant = index.as_literal().is_some();
                let (n, bd) = match base.as_ref() {
                    Expr::Ident(name) if self.scope.is_array_name(name) => {
                        let depth = match self.scope.get(name) {
                            Some(Symbol::Net { depth: Some(d), .. }) => *d,
                            _ => 1,
                        };
                        (depth, self.expr(base, 0))
                    }
                    b => (self.eff(b), self.expr(b, 0)),
                };
                if constant {
                    return bd;
                }
                let ew = self.eff(e);
                self.charge(OpKind::Select, ew, (n.saturating_sub(1)) as u64 * ew as u64);
                bd.max(id) + self.levels(OpKind::Select, clog2(n))
            }
            Expr::Slice { base, .. } => self.expr(base, 0),
            Expr::Concat(parts) | Expr::Repeat { parts, .. } => parts
                .iter()
                .map(|p| self.expr(p, 0))
                .fold(0.0, f64::max),
            Expr::Unary { op, operand } => {
                if op.is_reduction() || *op == UnaryOp::LogicNot {
                    let ow = self.eff(operand);
                    let d = self.expr(operand, 0);
                    if *op == UnaryOp::LogicNot {
                        self.charge(OpKind::Reduce, ow, ow as u64);
                        return d + self.levels(OpKind::Reduce, clog2(ow).max(1));
                    }
                    self.charge(OpKind::Reduce, ow, ow.saturating_sub(1) as u64);
                    d + self.levels(OpKind::Reduce, clog2(ow))
                } else if *op == UnaryOp::Neg {
                    let d = self.expr(operand, w);
                    self.charge(OpKind::Add, w, w as u64);
                    d + self.levels(OpKind::Add, clog2(w) + 1)
                } else {
                    let d = self.expr(operand, w);
                    self.charge(OpKind::Logic, w, w as u64);
                    d + self.levels(OpKind::Logic, 1)
                }
            }
            Expr::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, w),
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
            } => {
                let c = self.expr(cond, 0);
                let a = self.expr(then_expr, w);
                let b = self.expr(else_expr, w);
                self.charge(OpKind::Mux, w, w as u64);
                c.max(a).max(b) + self.levels(OpKind::Mux, 1)
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr, w: u32) -> f64 {
        use BinaryOp as B;
        if op.is_comparison() {
            let ow = self.eff(lhs).max(self.eff(rhs));
            let d = self.expr(lhs, ow).max(self.expr(rhs, ow));
            let (kind, units, lv) = match op {
                B::Eq | B::Ne => (OpKind::Compare, ow as u64, clog2(ow) + 1),
                _ => (OpKind::Relational, ow as u64, clog2(ow) + 1),
            };
            self.charge(kind, ow, units);
            return d + self.levels(kind, lv);
        }
        if op.is_logical() {
            let d = self.expr(lhs, 0).max(self.expr(rhs, 0));
            let units = self.eff(lhs) as u64 + self.eff(rhs) as u64 - 1;
            self.charge(OpKind::Logic, 1, units);
            return d + self.levels(OpKind::Logic, 1);
        }
        if op.is_shift() {
            let d = self.expr(lhs, w);
            if rhs.as_literal().is_some() {
                // Constant shifts are wiring.
                return d;
            }
            let sd = self.expr(rhs, 0);
            let stages = clog2(w).max(1).min(self.eff(rhs));
            self.charge(OpKind::Shift, w, (w * stages) as u64);
            return d.max(sd) + self.levels(OpKind::Shift, stages);
        }
        let d = self.expr(lhs, w).max(self.expr(rhs, w));
        let (kind, lv) = match op {
            B::Add | B::Sub => (OpKind::Add, clog2(w) + 1),
            B::Mul => (OpKind::Mul, 2 * (clog2(w) + 1)),
            B::Div | B::Mod => (OpKind::Div, w.max(1) * (clog2(w) + 1)),
            _ => (OpKind::Logic, 1),
        };
        self.charge(kind, w, w as u64);
        d + self.levels(kind, lv)
    }
}

fn assigned<'s>(s: &'s Stmt, out: &mut HashSet<&'s str>) {
    s.walk(&mut |s| {
        if let Stmt::Assign { lhs, .. } = s {
            for t in lhs.targets() {
                out.insert(t);
            }
        }
    });
}

fn sorted<'s>(set: &HashSet<&'s str>) -> Vec<&'s str> {
    let mut v: Vec<&str> = set.iter().copied().collect();
    v.sort_unstable();
    v
}

trait ArrayNames {
    fn is_array_name(&self, name: &str) -> bool;
}

impl ArrayNames for ModuleScope {
    fn is_array_name(&self, name: &str) -> bool {
        matches!(self.get(name), Some(Symbol::Net { depth: Some(_), .. }))
    }
}

#[cfg(test)]
mod tests;
