//! Finite state machine recognition and re-emission.
//!
//! A state machine is a register assigned only constant codes (directly,
//! or through a combinational next-state net assigned only constants or
//! the register itself) and dispatched by a `case` on the register. Its
//! behaviour is tabulated by simulating one step from every state under
//! every input valuation.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{bit_length, mask};
use crate::frontend::{
    AlwaysBlock, BinaryOp, CaseItem, CaseKind, CaseStmt, ContinuousAssign, Direction, Expr, Item,
    LValue, ModuleAst, Net, NetKind, Port, Sensitivity, Stmt,
};
use crate::verify::{detect_clock, detect_reset, Simulator};

/// Largest input alphabet tabulated, in bits.
pub const MAX_ALPHABET_BITS: u32 = 8;
pub const MAX_STATES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: u64,
    /// Input valuation: the alphabet inputs concatenated, first input in
    /// the most significant bits.
    pub input: u64,
    pub guard: Expr,
    pub to: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRow {
    pub state: u64,
    pub input: u64,
    /// One value per entry of [`FsmSpec::outputs`].
    pub values: Vec<u64>,
}

/// Clocking of the state register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmControl {
    pub sensitivity: Sensitivity,
    /// Condition under which the register loads the reset state.
    pub reset_cond: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmSpec {
    pub module: String,
    pub ports: Vec<Port>,
    pub state_reg: String,
    pub state_width: u32,
    pub next_net: Option<String>,
    /// State codes, ascending.
    pub states: Vec<u64>,
    pub state_names: BTreeMap<u64, String>,
    pub inputs: Vec<(String, u32)>,
    pub outputs: Vec<(String, u32)>,
    /// One transition per (state, valuation), states in `states` order.
    pub transitions: Vec<Transition>,
    /// Same layout as `transitions`.
    pub output_table: Vec<OutputRow>,
    pub reset_state: Option<u64>,
    pub control: FsmControl,
    /// The state register is the only register and nothing else in the
    /// module is lost by regenerating it from this table.
    pub self_contained: bool,
}

impl FsmSpec {
    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|(_, w)| w).sum()
    }

    pub fn alphabet(&self) -> u64 {
        1u64 << self.input_bits()
    }

    pub fn state_index(&self, code: u64) -> Option<usize> {
        self.states.binary_search(&code).ok()
    }

    pub fn next(&self, state: u64, input: u64) -> u64 {
        let i = self.state_index(state).expect("known state");
        self.transitions[i * self.alphabet() as usize + input as usize].to
    }

    pub fn output(&self, state: u64, input: u64) -> &[u64] {
        let i = self.state_index(state).expect("known state");
        &self.output_table[i * self.alphabet() as usize + input as usize].values
    }

    /// State the machine is in after power-up and reset.
    pub fn initial_state(&self) -> u64 {
        self.reset_state.unwrap_or(0)
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> BTreeSet<u64> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.initial_state()];
        while let Some(s) = stack.pop() {
            if self.state_index(s).is_none() || !seen.insert(s) {
                continue;
            }
            for v in 0..self.alphabet() {
                stack.push(self.next(s, v));
            }
        }
        seen
    }

    /// Build a spec from explicit tables; guards are generated.
    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        module: &str,
        ports: Vec<Port>,
        state_reg: &str,
        state_width: u32,
        states: Vec<u64>,
        inputs: Vec<(String, u32)>,
        outputs: Vec<(String, u32)>,
        next: &dyn Fn(u64, u64) -> u64,
        out: &dyn Fn(u64, u64) -> Vec<u64>,
        reset_state: Option<u64>,
        control: FsmControl,
    ) -> FsmSpec {
        let mut states = states;
        states.sort_unstable();
        states.dedup();
        let bits: u32 = inputs.iter().map(|(_, w)| w).sum();
        let mut transitions = Vec::new();
        let mut output_table = Vec::new();
        for &s in &states {
            for v in 0..(1u64 << bits) {
                transitions.push(Transition {
                    from: s,
                    input: v,
                    guard: guard_expr(&inputs, v),
                    to: next(s, v),
                });
                output_table.push(OutputRow {
                    state: s,
                    input: v,
                    values: out(s, v),
                });
            }
        }
        FsmSpec {
            module: module.to_string(),
            ports,
            state_reg: state_reg.to_string(),
            state_width,
            next_net: None,
            states,
            state_names: BTreeMap::new(),
            inputs,
            outputs,
            transitions,
            output_table,
            reset_state,
            control,
            self_contained: true,
        }
    }
}

fn inputs_expr(inputs: &[(String, u32)]) -> Expr {
    if inputs.len() == 1 {
        Expr::ident(&inputs[0].0)
    } else {
        Expr::Concat(inputs.iter().map(|(n, _)| Expr::ident(n)).collect())
    }
}

fn guard_expr(inputs: &[(String, u32)], v: u64) -> Expr {
    if inputs.is_empty() {
        return Expr::sized(1, 1);
    }
    let bits = inputs.iter().map(|(_, w)| w).sum();
    Expr::binary(BinaryOp::Eq, inputs_expr(inputs), Expr::sized(bits, v))
}

fn const_value(m: &ModuleAst, e: &Expr) -> Option<u64> {
    match e {
        Expr::Literal(l) if l.dont_care == 0 => Some(l.value),
        Expr::Ident(n) => m.param(n).map(|p| p.value.value),
        _ => None,
    }
}

fn edge_registers(m: &ModuleAst) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (i, item) in m.items.iter().enumerate() {
        if let Item::Always(a) = item {
            if a.is_edge_triggered() {
                a.body.walk(&mut |s| {
                    if let Stmt::Assign { lhs, .. } = s {
                        for t in lhs.targets() {
                            out.entry(t.to_string()).or_insert(i);
                        }
                    }
                });
            }
        }
    }
    out
}

/// All (lvalue, rhs, item index, in edge block) assignments in `m`.
fn assignments(m: &ModuleAst) -> Vec<(&LValue, &Expr, usize, bool)> {
    let mut out = Vec::new();
    for (i, item) in m.items.iter().enumerate() {
        match item {
            Item::Assign(a) => out.push((&a.lhs, &a.rhs, i, false)),
            Item::Always(a) => {
                let seq = a.is_edge_triggered();
                a.body.walk(&mut |s| {
                    if let Stmt::Assign { lhs, rhs, .. } = s {
                        out.push((lhs, rhs, i, seq));
                    }
                });
            }
            Item::Instance(_) => {}
        }
    }
    out
}

fn case_labels_on(m: &ModuleAst, reg: &str) -> Option<Vec<u64>> {
    let mut found = None;
    for item in &m.items {
        if let Item::Always(a) = item {
            a.body.walk(&mut |s| {
                if let Stmt::Case(c) = s {
                    if c.selector.as_ident() == Some(reg) && c.kind == CaseKind::Case {
                        let labels = found.get_or_insert_with(Vec::new);
                        for it in &c.items {
                            for l in &it.labels {
                                if let Some(v) = const_value(m, l) {
                                    labels.push(v);
                                }
                            }
                        }
                    }
                }
            });
        }
    }
    found
}

/// Reset branch of the block driving `reg`: `if (cond) reg <= C; else ...`.
fn reset_branch(m: &ModuleAst, body: &Stmt, reg: &str, reset: Option<&str>) -> Option<(Expr, u64)> {
    let Stmt::If {
        cond, then_branch, ..
    } = body
    else {
        return None;
    };
    let reset = reset?;
    if !cond.mentions(reset) {
        return None;
    }
    let mut value = None;
    then_branch.walk(&mut |s| {
        if let Stmt::Assign { lhs, rhs, .. } = s {
            if lhs.whole_ident() == Some(reg) {
                value = const_value(m, rhs);
            }
        }
    });
    value.map(|v| (cond.clone(), v))
}

/// Recognize every state machine in `module`.
pub fn extract_fsm(module: &ModuleAst) -> Vec<FsmSpec> {
    if module.instances().next().is_some() {
        return Vec::new();
    }
    let regs = edge_registers(module);
    let asg = assignments(module);
    let mut out = Vec::new();
    for (reg, &block) in &regs {
        if module.port(reg).is_some() {
            continue;
        }
        if let Some(spec) = extract_one(module, reg, block, &regs, &asg) {
            out.push(spec);
        }
    }
    out
}

fn extract_one(
    m: &ModuleAst,
    reg: &str,
    block: usize,
    regs: &BTreeMap<String, usize>,
    asg: &[(&LValue, &Expr, usize, bool)],
) -> Option<FsmSpec> {
    let width = m.signal_width(reg)?;
    if m.net(reg)?.depth.is_some() {
        return None;
    }
    let mut codes = BTreeSet::new();
    let mut next_net: Option<String> = None;
    for (lhs, rhs, item, seq) in asg {
        if !lhs.targets().contains(&reg) {
            continue;
        }
        if lhs.whole_ident() != Some(reg) || !*seq || *item != block {
            return None;
        }
        if let Some(v) = const_value(m, rhs) {
            codes.insert(v);
        } else if let Some(n) = rhs.as_ident() {
            if next_net.as_deref().is_some_and(|x| x != n) || regs.contains_key(n) {
                return None;
            }
            next_net = Some(n.to_string());
        } else {
            return None;
        }
    }
    if let Some(n) = &next_net {
        m.net(n)?;
        for (lhs, rhs, _, seq) in asg {
            if !lhs.targets().contains(&n.as_str()) {
                continue;
            }
            if lhs.whole_ident() != Some(n) || *seq {
                return None;
            }
            match const_value(m, rhs) {
                Some(v) => {
                    codes.insert(v);
                }
                None if rhs.as_ident() == Some(reg) => {}
                None => return None,
            }
        }
    }
    let labels = case_labels_on(m, reg)?;
    codes.extend(labels);

    let Item::Always(AlwaysBlock { sensitivity, body }) = &m.items[block] else {
        return None;
    };
    let clock = detect_clock(m);
    let reset = detect_reset(m);
    let (reset_cond, reset_state) = match reset_branch(m, body, reg, reset.as_ref().map(|r| r.name.as_str())) {
        Some((c, v)) => (Some(c), Some(v)),
        None => (None, None),
    };
    if let Some(r) = reset_state {
        codes.insert(r);
    } else {
        codes.insert(0);
    }
    if codes.len() > MAX_STATES || codes.iter().any(|c| *c & !mask(width) != 0) {
        return None;
    }
    let inputs: Vec<(String, u32)> = m
        .inputs()
        .filter(|p| Some(&p.name) != clock.as_ref() && Some(&p.name) != reset.as_ref().map(|r| &r.name))
        .map(|p| (p.name.clone(), p.width))
        .collect();
    let bits: u32 = inputs.iter().map(|(_, w)| w).sum();
    if bits > MAX_ALPHABET_BITS {
        return None;
    }
    let outputs: Vec<(String, u32)> = m
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Output)
        .map(|p| (p.name.clone(), p.width))
        .collect();

    let mut sim = Simulator::new(m).ok()?;
    let in_index: Vec<usize> = {
        let names: Vec<&str> = sim.inputs().map(|(n, _)| n).collect();
        inputs
            .iter()
            .map(|(n, _)| names.iter().position(|x| x == n).expect("input"))
            .collect()
    };
    let reset_slot = reset.as_ref().and_then(|r| {
        sim.inputs()
            .position(|(n, _)| n == r.name)
            .map(|i| (i, r.value(false)))
    });
    let out_index: Vec<usize> = {
        let names: Vec<&str> = sim.outputs().map(|(n, _)| n).collect();
        outputs
            .iter()
            .map(|(n, _)| names.iter().position(|x| x == n).expect("output"))
            .collect()
    };
    let states: Vec<u64> = codes.into_iter().collect();
    let mut transitions = Vec::new();
    let mut output_table = Vec::new();
    for &s in &states {
        for v in 0..(1u64 << bits) {
            sim.reset_state();
            sim.set(reg, s).ok()?;
            if let Some((i, val)) = reset_slot {
                sim.set_input_index(i, val);
            }
            let mut shift = bits;
            for (k, (_, w)) in inputs.iter().enumerate() {
                shift -= w;
                sim.set_input_index(in_index[k], (v >> shift) & mask(*w));
            }
            sim.settle();
            let values: Vec<u64> = out_index.iter().map(|&i| sim.output_index(i)).collect();
            sim.tick();
            let to = sim.get(reg)?;
            if states.binary_search(&to).is_err() {
                return None;
            }
            transitions.push(Transition {
                from: s,
                input: v,
                guard: guard_expr(&inputs, v),
                to,
            });
            output_table.push(OutputRow {
                state: s,
                input: v,
                values,
            });
        }
    }
    let mut state_names = BTreeMap::new();
    for p in &m.params {
        if states.contains(&p.value.value) {
            state_names.entry(p.value.value).or_insert_with(|| p.name.clone());
        }
    }
    let control_names: Vec<&str> = clock
        .iter()
        .map(String::as_str)
        .chain(reset.as_ref().map(|r| r.name.as_str()))
        .collect();
    let mut control_elsewhere = false;
    let mut structural = false;
    for (i, item) in m.items.iter().enumerate() {
        if i == block {
            continue;
        }
        let mut probe = |e: &Expr| control_elsewhere |= control_names.iter().any(|c| e.mentions(c));
        match item {
            Item::Assign(a) => {
                probe(&a.rhs);
                a.lhs.index_exprs().into_iter().for_each(&mut probe);
            }
            Item::Always(a) => {
                structural |= matches!(a.sensitivity, Sensitivity::Edges(_));
                a.body.walk(&mut |s| match s {
                    Stmt::Assign { rhs, lhs, .. } => {
                        probe(rhs);
                        lhs.index_exprs().into_iter().for_each(&mut probe);
                    }
                    Stmt::If { cond, .. } => probe(cond),
                    Stmt::Case(c) => {
                        probe(&c.selector);
                        c.items.iter().flat_map(|it| &it.labels).for_each(&mut probe);
                    }
                    _ => {}
                });
            }
            Item::Instance(_) => structural = true,
        }
    }
    let self_contained = regs.len() == 1
        && !control_elsewhere
        && !structural
        && m.nets.iter().all(|n| n.depth.is_none())
        && outputs.iter().all(|(n, _)| n != reg);
    Some(FsmSpec {
        module: m.name.clone(),
        ports: m.ports.clone(),
        state_reg: reg.to_string(),
        state_width: width,
        next_net,
        states,
        state_names,
        inputs,
        outputs,
        transitions,
        output_table,
        reset_state,
        control: FsmControl {
            sensitivity: sensitivity.clone(),
            reset_cond,
        },
        self_contained,
    })
}

fn fresh(base: &str, taken: &HashSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded")
}

/// Value of one output column as a function of the input valuation:
/// the most common value becomes the fallback.
fn by_input(values: &[u64], inputs: &[(String, u32)], width: u32) -> Expr {
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (v, &x) in values.iter().enumerate() {
        groups.entry(x).or_default().push(v as u64);
    }
    if groups.len() == 1 {
        return Expr::sized(width, values[0]);
    }
    let fallback = *groups
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(k, _)| k)
        .expect("nonempty");
    let mut e = Expr::sized(width, fallback);
    for (val, ins) in groups.iter().rev() {
        if *val == fallback {
            continue;
        }
        let cond = ins
            .iter()
            .map(|&v| guard_expr(inputs, v))
            .reduce(|a, b| Expr::binary(BinaryOp::LogicOr, a, b))
            .expect("nonempty");
        e = Expr::ternary(cond, Expr::sized(width, *val), e);
    }
    e
}

/// Regenerate a module implementing `spec`: a state register, one
/// combinational next-state block and the output logic.
pub fn emit_fsm_module(spec: &FsmSpec) -> ModuleAst {
    let mut m = ModuleAst::new(&spec.module);
    m.ports = spec.ports.clone();
    let mut taken: HashSet<String> = m.ports.iter().map(|p| p.name.clone()).collect();
    taken.insert(spec.state_reg.clone());
    let next = spec
        .next_net
        .clone()
        .unwrap_or_else(|| fresh(&format!("{}_next", spec.state_reg), &taken));
    let w = spec.state_width;
    for n in [&spec.state_reg, &next] {
        m.nets.push(Net {
            name: n.clone(),
            kind: NetKind::Reg,
            width: w,
            depth: None,
        });
    }
    let reg = || LValue::ident(&spec.state_reg);
    let code = |c: u64| Expr::sized(w, c);

    let load = Stmt::assign(reg(), Expr::ident(&next), false);
    let seq_body = match (&spec.control.reset_cond, spec.reset_state) {
        (Some(c), Some(r)) => Stmt::If {
            cond: c.clone(),
            then_branch: Box::new(Stmt::assign(reg(), code(r), false)),
            else_branch: Some(Box::new(load)),
        },
        _ => load,
    };
    m.items.push(Item::Always(AlwaysBlock {
        sensitivity: spec.control.sensitivity.clone(),
        body: seq_body,
    }));

    let a = spec.alphabet();
    let sel = inputs_expr(&spec.inputs);
    let bits = spec.input_bits();
    let mut arms = Vec::new();
    for &s in &spec.states {
        let targets: Vec<u64> = (0..a).map(|v| spec.next(s, v)).collect();
        let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (v, t) in targets.iter().enumerate() {
            groups.entry(*t).or_default().push(v as u64);
        }
        let assign_to = |t: u64| Stmt::assign(LValue::ident(&next), code(t), true);
        let body = if groups.len() == 1 {
            assign_to(targets[0])
        } else {
            let fallback = *groups
                .iter()
                .max_by(|x, y| x.1.len().cmp(&y.1.len()).then(y.0.cmp(x.0)))
                .map(|(k, _)| k)
                .expect("nonempty");
            Stmt::Case(CaseStmt {
                kind: CaseKind::Case,
                selector: sel.clone(),
                items: groups
                    .iter()
                    .filter(|(t, _)| **t != fallback)
                    .map(|(t, vs)| CaseItem {
                        labels: vs.iter().map(|v| Expr::sized(bits, *v)).collect(),
                        body: assign_to(*t),
                    })
                    .collect(),
                default: Some(Box::new(assign_to(fallback))),
            })
        };
        arms.push(CaseItem {
            labels: vec![code(s)],
            body,
        });
    }
    m.items.push(Item::Always(AlwaysBlock {
        sensitivity: Sensitivity::Star,
        body: Stmt::Block(vec![
            Stmt::assign(LValue::ident(&next), Expr::ident(&spec.state_reg), true),
            Stmt::Case(CaseStmt {
                kind: CaseKind::Case,
                selector: Expr::ident(&spec.state_reg),
                items: arms,
                default: None,
            }),
        ]),
    }));

    // Output logic, one column per output.
    let mut reg_outputs = Vec::new();
    for (k, (name, ow)) in spec.outputs.iter().enumerate() {
        let per_state: Vec<(u64, Expr)> = spec
            .states
            .iter()
            .map(|&s| {
                let col: Vec<u64> = (0..a).map(|v| spec.output(s, v)[k]).collect();
                (s, by_input(&col, &spec.inputs, *ow))
            })
            .collect();
        let is_reg = spec.ports.iter().any(|p| p.name == *name && p.is_reg);
        if is_reg {
            reg_outputs.push((name.clone(), *ow, per_state));
            continue;
        }
        // Most common per-state expression is the fallback of a chain.
        let mut counts: Vec<(Expr, usize)> = Vec::new();
        for (_, e) in &per_state {
            match counts.iter_mut().find(|(x, _)| x == e) {
                Some(c) => c.1 += 1,
                None => counts.push((e.clone(), 1)),
            }
        }
        let fallback = counts
            .iter()
            .max_by_key(|(_, n)| *n)
            .map(|(e, _)| e.clone())
            .unwrap_or_else(|| Expr::sized(*ow, 0));
        let mut e = fallback.clone();
        for (s, x) in per_state.iter().rev() {
            if *x == fallback {
                continue;
            }
            let cond = Expr::binary(BinaryOp::Eq, Expr::ident(&spec.state_reg), code(*s));
            e = Expr::ternary(cond, x.clone(), e);
        }
        m.items.push(Item::Assign(ContinuousAssign {
            lhs: LValue::ident(name),
            rhs: e,
        }));
    }
    if !reg_outputs.is_empty() {
        let mut stmts: Vec<Stmt> = reg_outputs
            .iter()
            .map(|(n, ow, _)| Stmt::assign(LValue::ident(n), Expr::sized(*ow, 0), true))
            .collect();
        let items = spec
            .states
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| {
                let body: Vec<Stmt> = reg_outputs
                    .iter()
                    .filter(|(_, ow, col)| col[i].1 != Expr::sized(*ow, 0))
                    .map(|(n, _, col)| Stmt::assign(LValue::ident(n), col[i].1.clone(), true))
                    .collect();
                match body.len() {
                    0 => None,
                    1 => Some(CaseItem {
                        labels: vec![code(s)],
                        body: body.into_iter().next().expect("one"),
                    }),
                    _ => Some(CaseItem {
                        labels: vec![code(s)],
                        body: Stmt::Block(body),
                    }),
                }
            })
            .collect::<Vec<_>>();
        if !items.is_empty() {
            stmts.push(Stmt::Case(CaseStmt {
                kind: CaseKind::Case,
                selector: Expr::ident(&spec.state_reg),
                items,
                default: None,
            }));
        }
        m.items.push(Item::Always(AlwaysBlock {
            sensitivity: Sensitivity::Star,
            body: Stmt::Block(stmts),
        }));
    }
    m
}

/// Minimum register width for `n` distinct codes.
pub fn code_width(n: usize) -> u32 {
    bit_length(n.saturating_sub(1) as u64).max(1)
}
