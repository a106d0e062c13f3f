//! Seeded stimulus generation and clock/reset conventions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::ast::mask;
use crate::frontend::{Direction, Edge, Item, ModuleAst, Sensitivity};

use super::Stimulus;

/// Cycles for which reset is held asserted at the start of every run.
pub const RESET_CYCLES: usize = 2;

const RESET_NAMES: [&str; 5] = ["rst", "reset", "rst_n", "reset_n", "rstn"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResetInfo {
    pub name: String,
    pub active_low: bool,
    pub cycles: usize,
}

impl ResetInfo {
    pub fn value(&self, asserted: bool) -> u64 {
        (asserted != self.active_low) as u64
    }
}

fn edge_signals(m: &ModuleAst) -> Vec<(String, Edge)> {
    let mut out: Vec<(String, Edge)> = Vec::new();
    for item in &m.items {
        if let Item::Always(a) = item {
            if let Sensitivity::Edges(es) = &a.sensitivity {
                for e in es {
                    if !out.iter().any(|(n, _)| *n == e.signal) {
                        out.push((e.signal.clone(), e.edge));
                    }
                }
            }
        }
    }
    out
}

/// Clock port: the first signal named in any edge list.
pub fn detect_clock(m: &ModuleAst) -> Option<String> {
    edge_signals(m).into_iter().next().map(|(n, _)| n)
}

/// Reset input: a non-clock edge signal, else a conventionally named
/// input port. Active low for a negedge trigger or an `n` suffix.
pub fn detect_reset(m: &ModuleAst) -> Option<ResetInfo> {
    let edges = edge_signals(m);
    let is_input = |n: &str| {
        m.port(n)
            .is_some_and(|p| p.direction == Direction::Input)
    };
    let low_name = |n: &str| {
        let l = n.to_ascii_lowercase();
        l.ends_with("_n") || l.ends_with("rstn") || l.ends_with("resetn")
    };
    if let Some((name, edge)) = edges.iter().skip(1).find(|(n, _)| is_input(n)) {
        return Some(ResetInfo {
            active_low: *edge == Edge::Negedge || low_name(name),
            name: name.clone(),
            cycles: RESET_CYCLES,
        });
    }
    m.inputs()
        .find(|p| RESET_NAMES.contains(&p.name.to_ascii_lowercase().as_str()))
        .map(|p| ResetInfo {
            active_low: low_name(&p.name),
            name: p.name.clone(),
            cycles: RESET_CYCLES,
        })
}

/// Uniform random values for every driven input over `cycles` cycles.
/// The clock is left out; reset follows its convention for the first
/// cycles and is then deasserted.
pub fn random_stimulus(
    inputs: &[(String, u32)],
    clock: Option<&str>,
    reset: Option<&ResetInfo>,
    cycles: usize,
    rng: &mut ChaCha8Rng,
) -> Stimulus {
    let mut stim = Stimulus {
        cycles,
        clock: clock.map(String::from),
        reset: reset.cloned(),
        ..Default::default()
    };
    for (name, w) in inputs {
        if Some(name.as_str()) == clock {
            continue;
        }
        let col = if let Some(r) = reset.filter(|r| r.name == *name) {
            (0..cycles).map(|c| r.value(c < r.cycles)).collect()
        } else {
            (0..cycles).map(|_| rng.random::<u64>() & mask(*w)).collect()
        };
        stim.inputs.insert(name.clone(), col);
    }
    stim
}

/// Stimulus where every non-clock, non-reset input holds `fill` masked to
/// its width.
pub fn constant_stimulus(
    inputs: &[(String, u32)],
    clock: Option<&str>,
    reset: Option<&ResetInfo>,
    cycles: usize,
    fill: u64,
) -> Stimulus {
    let mut stim = Stimulus {
        cycles,
        clock: clock.map(String::from),
        reset: reset.cloned(),
        ..Default::default()
    };
    for (name, w) in inputs {
        if Some(name.as_str()) == clock {
            continue;
        }
        let col = match reset.filter(|r| r.name == *name) {
            Some(r) => (0..cycles).map(|c| r.value(c < r.cycles)).collect(),
            None => vec![fill & mask(*w); cycles],
        };
        stim.inputs.insert(name.clone(), col);
    }
    stim
}
