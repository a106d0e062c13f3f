//! Fuzz filtering and equivalence checking between two flat modules.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frontend::ast::mask;
use crate::frontend::ModuleAst;

use super::stimulus::{constant_stimulus, detect_reset, random_stimulus, ResetInfo};
use super::{EquivalenceVerdict, Method, SimTrace, Simulator, Status, Stimulus, VerifyError};

/// Largest total input width enumerated exhaustively by default.
pub const EXHAUSTIVE_MAX_BITS: u32 = 20;
/// Hard ceiling for an explicitly requested exhaustive check.
const EXHAUSTIVE_HARD_LIMIT: u32 = 30;
/// Independent runs for bounded sequential co-simulation.
pub const SEQ_RUNS: u64 = 32;
/// Cycles per run when fuzzing a sequential design.
const SEQ_FUZZ_CYCLES: usize = 16;
const CHUNK: u64 = 4096;

/// First output sample that differs between two traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Difference {
    pub output: String,
    pub cycle: usize,
    pub original: u64,
    pub candidate: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum FuzzOutcome {
    Pass {
        vectors: u64,
    },
    Fail {
        counterexample: Stimulus,
        difference: Difference,
    },
}

impl FuzzOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, FuzzOutcome::Pass { .. })
    }
}

/// Earliest differing sample, by cycle and then output name.
pub fn first_difference(a: &SimTrace, b: &SimTrace) -> Option<Difference> {
    let cycles = a.outputs.values().map(Vec::len).max().unwrap_or(0);
    for c in 0..cycles {
        for (name, va) in &a.outputs {
            let (Some(x), Some(y)) = (va.get(c), b.outputs.get(name).and_then(|v| v.get(c))) else {
                continue;
            };
            if x != y {
                return Some(Difference {
                    output: name.clone(),
                    cycle: c,
                    original: *x,
                    candidate: *y,
                });
            }
        }
    }
    None
}

/// Exhaustive for small combinational designs, fuzz-only for wide ones,
/// bounded co-simulation for anything with state.
pub fn select_method(sequential: bool, input_bits: u32) -> Method {
    if sequential {
        Method::BoundedSequential
    } else if input_bits <= EXHAUSTIVE_MAX_BITS {
        Method::Exhaustive
    } else {
        Method::FuzzOnly
    }
}

/// Two compiled modules with matching interfaces.
struct Pair {
    a: Simulator,
    b: Simulator,
    /// Inputs in the original's port order, clock excluded.
    inputs: Vec<(String, u32)>,
    /// For each entry of `inputs`: (index in a's inputs, index in b's inputs).
    in_idx: Vec<(usize, usize)>,
    /// (name, index in a's outputs, index in b's outputs).
    out_idx: Vec<(String, usize, usize)>,
    clock: Option<String>,
    reset: Option<ResetInfo>,
    sequential: bool,
}

impl Pair {
    fn new(original: &ModuleAst, candidate: &ModuleAst) -> Result<Pair, VerifyError> {
        let a = Simulator::new(original)?;
        let b = Simulator::new(candidate)?;
        let sig = |s: &Simulator| {
            let mut i: Vec<(String, u32)> = s.inputs().map(|(n, w)| (n.to_string(), w)).collect();
            let mut o: Vec<(String, u32)> = s.outputs().map(|(n, w)| (n.to_string(), w)).collect();
            i.sort();
            o.sort();
            (i, o)
        };
        let (ia, oa) = sig(&a);
        let (ib, ob) = sig(&b);
        if ia != ib || oa != ob {
            return Err(VerifyError::PortMismatch(format!(
                "`{}` has inputs {:?} outputs {:?}; `{}` has inputs {:?} outputs {:?}",
                original.name, ia, oa, candidate.name, ib, ob
            )));
        }
        let sequential = a.is_sequential() || b.is_sequential();
        let clock = a
            .clock()
            .or(b.clock())
            .map(String::from)
            .filter(|_| sequential);
        let reset = detect_reset(original).or_else(|| detect_reset(candidate));
        let a_in: Vec<String> = a.inputs().map(|(n, _)| n.to_string()).collect();
        let b_in: Vec<String> = b.inputs().map(|(n, _)| n.to_string()).collect();
        let mut inputs = Vec::new();
        let mut in_idx = Vec::new();
        for (i, (n, w)) in a.inputs().enumerate() {
            if Some(n) == clock.as_deref() {
                continue;
            }
            inputs.push((n.to_string(), w));
            in_idx.push((i, b_in.iter().position(|x| x == n).expect("ports match")));
        }
        debug_assert_eq!(a_in.len(), b_in.len());
        let b_out: Vec<String> = b.outputs().map(|(n, _)| n.to_string()).collect();
        let out_idx = a
            .outputs()
            .enumerate()
            .map(|(i, (n, _))| {
                (
                    n.to_string(),
                    i,
                    b_out.iter().position(|x| x == n).expect("ports match"),
                )
            })
            .collect();
        Ok(Pair {
            a,
            b,
            inputs,
            in_idx,
            out_idx,
            clock,
            reset,
            sequential,
        })
    }

    fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|(_, w)| w).sum()
    }

    /// Settle one combinational vector from a cleared state in both
    /// simulators; returns the first differing output.
    fn comb_vector(a: &mut Simulator, b: &mut Simulator, p: &Pair, vals: &[u64]) -> Option<Difference> {
        a.reset_state();
        b.reset_state();
        for (k, &(ia, ib)) in p.in_idx.iter().enumerate() {
            a.set_input_index(ia, vals[k]);
            b.set_input_index(ib, vals[k]);
        }
        a.settle();
        b.settle();
        for (name, oa, ob) in &p.out_idx {
            let (x, y) = (a.output_index(*oa), b.output_index(*ob));
            if x != y {
                return Some(Difference {
                    output: name.clone(),
                    cycle: 0,
                    original: x,
                    candidate: y,
                });
            }
        }
        None
    }

    fn single_vector(&self, vals: &[u64]) -> Stimulus {
        Stimulus {
            inputs: self
                .inputs
                .iter()
                .zip(vals)
                .map(|((n, _), v)| (n.clone(), vec![*v]))
                .collect::<BTreeMap<_, _>>(),
            cycles: 1,
            clock: None,
            reset: None,
        }
    }

    fn unpack(&self, mut idx: u64) -> Vec<u64> {
        self.inputs
            .iter()
            .map(|(_, w)| {
                let v = idx & mask(*w);
                idx = if *w >= 64 { 0 } else { idx >> w };
                v
            })
            .collect()
    }

    fn boundary_or_random(&self, i: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
        self.inputs
            .iter()
            .map(|(_, w)| match i {
                0 => 0,
                1 => mask(*w),
                _ => rng.random::<u64>() & mask(*w),
            })
            .collect()
    }

    /// Random combinational vectors, boundary vectors first. Stops at the
    /// first difference.
    fn comb_fuzz(&self, n: u64, seed: u64) -> (u64, Option<(Stimulus, Difference)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for i in 0..n {
            let vals = self.boundary_or_random(i, &mut rng);
            if let Some(d) = Self::comb_vector(&mut a, &mut b, self, &vals) {
                return (i + 1, Some((self.single_vector(&vals), d)));
            }
        }
        (n, None)
    }

    fn run_pair(&self, stim: &Stimulus) -> Result<Option<Difference>, VerifyError> {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let ta = a.run(stim)?;
        let tb = b.run(stim)?;
        Ok(first_difference(&ta, &tb))
    }

    fn truncate(stim: &Stimulus, cycles: usize) -> Stimulus {
        let mut s = stim.clone();
        s.cycles = cycles;
        for col in s.inputs.values_mut() {
            col.truncate(cycles);
        }
        s
    }

    /// Sequential fuzzing: short runs from reset; the first two hold all
    /// data inputs at zero and all-ones.
    fn seq_fuzz(&self, n: u64, seed: u64) -> Result<(u64, Option<(Stimulus, Difference)>), VerifyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let runs = n.div_ceil(SEQ_FUZZ_CYCLES as u64).max(1);
        let clock = self.clock.as_deref();
        let reset = self.reset.as_ref();
        for r in 0..runs {
            let stim = match r {
                0 => constant_stimulus(&self.inputs, clock, reset, SEQ_FUZZ_CYCLES, 0),
                1 => constant_stimulus(&self.inputs, clock, reset, SEQ_FUZZ_CYCLES, u64::MAX),
                _ => random_stimulus(&self.inputs, clock, reset, SEQ_FUZZ_CYCLES, &mut rng),
            };
            if let Some(d) = self.run_pair(&stim)? {
                let checked = r * SEQ_FUZZ_CYCLES as u64 + d.cycle as u64 + 1;
                return Ok((checked, Some((Self::truncate(&stim, d.cycle + 1), d))));
            }
        }
        Ok((runs * SEQ_FUZZ_CYCLES as u64, None))
    }

    fn exhaustive(&self) -> (u64, Option<(Stimulus, Difference)>) {
        let total = 1u64 << self.input_bits();
        let chunks = total.div_ceil(CHUNK);
        let hit = (0..chunks).into_par_iter().find_map_first(|c| {
            let mut a = self.a.clone();
            let mut b = self.b.clone();
            let end = ((c + 1) * CHUNK).min(total);
            (c * CHUNK..end).find_map(|i| {
                let vals = self.unpack(i);
                Self::comb_vector(&mut a, &mut b, self, &vals).map(|d| (i, vals, d))
            })
        });
        match hit {
            Some((i, vals, d)) => (i + 1, Some((self.single_vector(&vals), d))),
            None => (total, None),
        }
    }

    fn bounded_seq(&self, cycles: usize, seed: u64) -> Result<(u64, Option<(Stimulus, Difference)>), VerifyError> {
        let clock = self.clock.as_deref();
        let reset = self.reset.as_ref();
        let found = (0..SEQ_RUNS)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r + 1);
                let stim = random_stimulus(&self.inputs, clock, reset, cycles, &mut rng);
                Ok(self.run_pair(&stim)?.map(|d| (r, stim, d)))
            })
            .collect::<Result<Vec<_>, VerifyError>>()?
            .into_iter()
            .flatten()
            .next();
        Ok(match found {
            Some((r, stim, d)) => (
                r * cycles as u64 + d.cycle as u64 + 1,
                Some((Self::truncate(&stim, d.cycle + 1), d)),
            ),
            None => (SEQ_RUNS * cycles as u64, None),
        })
    }
}

/// Co-simulate `n_vectors` seeded random vectors (cycles, for sequential
/// designs) and stop at the first output difference.
pub fn fuzz_filter(
    original: &ModuleAst,
    candidate: &ModuleAst,
    n_vectors: u64,
    seed: u64,
) -> Result<FuzzOutcome, VerifyError> {
    let pair = Pair::new(original, candidate)?;
    let (checked, fail) = if pair.sequential {
        pair.seq_fuzz(n_vectors, seed)?
    } else {
        pair.comb_fuzz(n_vectors, seed)
    };
    Ok(match fail {
        None => FuzzOutcome::Pass { vectors: checked },
        Some((counterexample, difference)) => FuzzOutcome::Fail {
            counterexample,
            difference,
        },
    })
}

/// Judge equivalence with `method`. `budget` is a vector count for
/// fuzz-only and a cycle count per run for bounded-sequential.
pub fn check_equivalence(
    original: &ModuleAst,
    candidate: &ModuleAst,
    method: Method,
    budget: usize,
    seed: u64,
) -> Result<EquivalenceVerdict, VerifyError> {
    let pair = Pair::new(original, candidate)?;
    let (checked, fail) = match method {
        Method::Exhaustive => {
            if pair.sequential {
                return Err(VerifyError::MethodNotApplicable {
                    method,
                    reason: "design has state".into(),
                });
            }
            if pair.input_bits() > EXHAUSTIVE_HARD_LIMIT {
                return Err(VerifyError::MethodNotApplicable {
                    method,
                    reason: format!("{} input bits", pair.input_bits()),
                });
            }
            pair.exhaustive()
        }
        Method::FuzzOnly if pair.sequential => pair.seq_fuzz(budget as u64, seed)?,
        Method::FuzzOnly => pair.comb_fuzz(budget as u64, seed),
        Method::BoundedSequential => pair.bounded_seq(budget.max(1), seed)?,
    };
    let status = match fail {
        Some((counterexample, _)) => Status::Inequivalent { counterexample },
        None if method == Method::Exhaustive => Status::Equivalent,
        None => Status::Inconclusive { budget },
    };
    Ok(EquivalenceVerdict {
        status,
        method,
        vectors_checked: checked,
        seed,
    })
}
