use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{patch, RewritePatch};
use crate::analysis::{code_width, emit_fsm_module, extract_fsm, FsmSpec};
use crate::cost::{estimate_module, CostWeights};
use crate::frontend::ModuleAst;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateStyle {
    /// Consecutive codes in order of transition frequency.
    Frequency,
    Binary,
    Onehot,
    Gray,
}

/// Merge equivalent states and drop unreachable ones. Each merged block
/// keeps the code of the initial state if it holds it, else its smallest
/// code.
pub fn minimize_fsm(spec: &FsmSpec) -> FsmSpec {
    let reach = spec.reachable();
    let states: Vec<u64> = spec.states.iter().copied().filter(|s| reach.contains(s)).collect();
    let index: HashMap<u64, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let alphabet = spec.alphabet();
    let n = states.len();
    let delta: Vec<Vec<usize>> = states
        .iter()
        .map(|&s| (0..alphabet).map(|v| index[&spec.next(s, v)]).collect())
        .collect();

    // Initial partition by the whole output row of each state.
    let mut by_sig: BTreeMap<Vec<Vec<u64>>, Vec<usize>> = BTreeMap::new();
    for (i, &s) in states.iter().enumerate() {
        let sig = (0..alphabet).map(|v| spec.output(s, v).to_vec()).collect();
        by_sig.entry(sig).or_default().push(i);
    }
    let mut blocks: Vec<Vec<usize>> = by_sig.into_values().collect();
    blocks.sort();
    let mut block_of = vec![0usize; n];
    for (b, members) in blocks.iter().enumerate() {
        for &i in members {
            block_of[i] = b;
        }
    }
    let mut inverse = vec![vec![Vec::new(); n]; alphabet as usize];
    for p in 0..n {
        for v in 0..alphabet as usize {
            inverse[v][delta[p][v]].push(p);
        }
    }
    let mut work: Vec<usize> = (0..blocks.len()).collect();
    let mut in_work = vec![true; blocks.len()];
    while let Some(a) = work.pop() {
        in_work[a] = false;
        let splitter = blocks[a].clone();
        for inv in &inverse {
            let mut x = vec![false; n];
            for &q in &splitter {
                for &p in &inv[q] {
                    x[p] = true;
                }
            }
            let touched: Vec<usize> = {
                let mut t: Vec<usize> = (0..n).filter(|&p| x[p]).map(|p| block_of[p]).collect();
                t.sort_unstable();
                t.dedup();
                t
            };
            for y in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    blocks[y].iter().partition(|&&p| x[p]);
                if outside.is_empty() {
                    continue;
                }
                let new_id = blocks.len();
                let (keep, moved) = if inside.len() <= outside.len() {
                    (outside, inside)
                } else {
                    (inside, outside)
                };
                for &p in &moved {
                    block_of[p] = new_id;
                }
                blocks[y] = keep;
                blocks.push(moved);
                in_work.push(true);
                // The kept half stays queued if `y` was; otherwise the
                // smaller half suffices as a splitter.
                work.push(new_id);
            }
        }
    }

    let init = spec.initial_state();
    let rep_of_block: Vec<u64> = blocks
        .iter()
        .map(|members| {
            let codes: Vec<u64> = members.iter().map(|&i| states[i]).collect();
            if codes.contains(&init) {
                init
            } else {
                *codes.iter().min().expect("non-empty block")
            }
        })
        .collect();
    let rep = |s: u64| rep_of_block[block_of[index[&s]]];
    let mut kept: Vec<u64> = rep_of_block.clone();
    kept.sort_unstable();
    let mut out = FsmSpec::from_tables(
        &spec.module,
        spec.ports.clone(),
        &spec.state_reg,
        spec.state_width,
        kept.clone(),
        spec.inputs.clone(),
        spec.outputs.clone(),
        &|s, v| rep(spec.next(s, v)),
        &|s, v| spec.output(s, v).to_vec(),
        spec.reset_state.map(rep),
        spec.control.clone(),
    );
    out.next_net = spec.next_net.clone();
    out.state_names = spec
        .state_names
        .iter()
        .filter(|(c, _)| kept.contains(c))
        .map(|(c, n)| (*c, n.clone()))
        .collect();
    out.self_contained = spec.self_contained;
    out
}

/// New code for every state of `spec`.
pub fn assign_states(spec: &FsmSpec, style: StateStyle) -> BTreeMap<u64, u64> {
    let order: Vec<u64> = match style {
        StateStyle::Frequency => frequency_order(spec),
        _ => spec.states.clone(),
    };
    let mut map: BTreeMap<u64, u64> = order
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let i = i as u64;
            let code = match style {
                StateStyle::Frequency | StateStyle::Binary => i,
                StateStyle::Gray => i ^ (i >> 1),
                StateStyle::Onehot => 1 << i,
            };
            (s, code)
        })
        .collect();
    // Without a reset the power-up value 0 must keep meaning the same state.
    if spec.reset_state.is_none() && style != StateStyle::Onehot {
        if let Some(&z) = map.get(&0) {
            for c in map.values_mut() {
                *c ^= z;
            }
        }
    }
    map
}

/// Code width needed for `n` states under `style`.
pub fn style_width(style: StateStyle, n: usize) -> u32 {
    match style {
        StateStyle::Onehot => n.max(1) as u32,
        _ => code_width(n),
    }
}

/// States in order of how often they take part in a state-changing
/// transition, endpoints of the most frequent transitions first.
fn frequency_order(spec: &FsmSpec) -> Vec<u64> {
    let mut counts: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for t in spec.transitions.iter().filter(|t| t.from != t.to) {
        *counts.entry((t.from, t.to)).or_default() += 1;
    }
    let mut pairs: Vec<((u64, u64), usize)> = counts.into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut order = Vec::new();
    for ((f, t), _) in pairs {
        for s in [f, t] {
            if !order.contains(&s) {
                order.push(s);
            }
        }
    }
    for &s in &spec.states {
        if !order.contains(&s) {
            order.push(s);
        }
    }
    order
}

/// The same machine with states recoded through `map` into `width` bits.
pub fn remap_states(spec: &FsmSpec, map: &BTreeMap<u64, u64>, width: u32) -> FsmSpec {
    let back: HashMap<u64, u64> = map.iter().map(|(a, b)| (*b, *a)).collect();
    let mut out = FsmSpec::from_tables(
        &spec.module,
        spec.ports.clone(),
        &spec.state_reg,
        width,
        spec.states.iter().map(|s| map[s]).collect(),
        spec.inputs.clone(),
        spec.outputs.clone(),
        &|s, v| map[&spec.next(back[&s], v)],
        &|s, v| spec.output(back[&s], v).to_vec(),
        spec.reset_state.map(|r| map[&r]),
        spec.control.clone(),
    );
    out.next_net = spec.next_net.clone();
    out.state_names = spec
        .state_names
        .iter()
        .map(|(c, n)| (map[c], n.clone()))
        .collect();
    out.self_contained = spec.self_contained;
    out
}

fn target(m: &ModuleAst) -> Option<FsmSpec> {
    extract_fsm(m).into_iter().find(|s| s.self_contained)
}

pub(crate) fn fsm_minimize_rule(m: &ModuleAst) -> Option<RewritePatch> {
    let spec = target(m)?;
    let min = minimize_fsm(&spec);
    if min.states.len() == spec.states.len() {
        return None;
    }
    patch("fsm-minimize", m, emit_fsm_module(&min))
}

/// Recode states by transition frequency when that narrows the state
/// register or lowers the estimated cost.
pub(crate) fn fsm_assign_rule(m: &ModuleAst) -> Option<RewritePatch> {
    let spec = target(m)?;
    let map = assign_states(&spec, StateStyle::Frequency);
    let width = style_width(StateStyle::Frequency, spec.states.len());
    if width > spec.state_width || (width == spec.state_width && map.iter().all(|(a, b)| a == b)) {
        return None;
    }
    let new = emit_fsm_module(&remap_states(&spec, &map, width));
    if width == spec.state_width {
        let w = CostWeights::default();
        if estimate_module(&new, &w).cells >= estimate_module(m, &w).cells {
            return None;
        }
    }
    patch("fsm-assign", m, new)
}
