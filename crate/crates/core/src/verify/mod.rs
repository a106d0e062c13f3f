//! Two-state simulation and equivalence checking.
//!
//! Candidates are screened by [`fuzz_filter`] and then judged by
//! [`check_equivalence`] using the method picked by [`select_method`].

mod equiv;
mod flatten;
mod sim;
mod stimulus;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use equiv::{
    check_equivalence, first_difference, fuzz_filter, select_method, Difference, FuzzOutcome,
    EXHAUSTIVE_MAX_BITS, SEQ_RUNS,
};
pub use flatten::flatten;
pub use sim::Simulator;
pub use stimulus::{constant_stimulus, detect_clock, detect_reset, random_stimulus, ResetInfo, RESET_CYCLES};

use crate::analysis::{is_sequential, AnalysisResult, VerificationPattern};
use crate::frontend::ModuleAst;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("combinational loop through {}", .0.join(", "))]
    CombinationalLoop(Vec<String>),
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("unsupported for simulation: {0}")]
    Unsupported(String),
    #[error("no stimulus for input `{0}`")]
    MissingInput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("port lists differ: {0}")]
    PortMismatch(String),
    #[error("verification pattern differs: original is {original}, candidate is {candidate}")]
    PatternMismatch { original: String, candidate: String },
    #[error("method {method:?} cannot check this design: {reason}")]
    MethodNotApplicable { method: Method, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Input values per cycle. Combinational stimuli use one cycle per
/// vector; sequential stimuli take one clock edge per cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stimulus {
    pub inputs: BTreeMap<String, Vec<u64>>,
    pub cycles: usize,
    /// Clock port, driven implicitly once per cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset: Option<ResetInfo>,
}

/// Sampled outputs per cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub outputs: BTreeMap<String, Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    FuzzOnly,
    BoundedSequential,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Status {
    Equivalent,
    Inequivalent { counterexample: Stimulus },
    /// Nothing differed within the budget; not a proof.
    Inconclusive { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    #[serde(flatten)]
    pub status: Status,
    pub method: Method,
    pub vectors_checked: u64,
    pub seed: u64,
}

impl EquivalenceVerdict {
    /// Equivalent, or no difference found within budget.
    pub fn passed(&self) -> bool {
        !matches!(self.status, Status::Inequivalent { .. })
    }

    pub fn counterexample(&self) -> Option<&Stimulus> {
        match &self.status {
            Status::Inequivalent { counterexample } => Some(counterexample),
            _ => None,
        }
    }
}

/// Method for checking `candidate` against `original` from their
/// analyses. `input_bits` is the total data input width (clock excluded).
pub fn select_solver(
    original: &AnalysisResult,
    candidate: &AnalysisResult,
    input_bits: u32,
) -> Result<Method, VerifyError> {
    dispatch(original.verification_pattern, candidate.verification_pattern, input_bits)
}

fn dispatch(a: VerificationPattern, b: VerificationPattern, input_bits: u32) -> Result<Method, VerifyError> {
    if a != b {
        let name = |p: VerificationPattern| format!("{p:?}").to_lowercase();
        return Err(VerifyError::PatternMismatch {
            original: name(a),
            candidate: name(b),
        });
    }
    Ok(select_method(a == VerificationPattern::Sequential, input_bits))
}

fn pattern_of(m: &ModuleAst) -> VerificationPattern {
    if is_sequential(m) {
        VerificationPattern::Sequential
    } else {
        VerificationPattern::Combinational
    }
}

/// Total width of the data inputs of `m`, clock excluded.
pub fn data_input_bits(m: &ModuleAst) -> u32 {
    let clock = detect_clock(m);
    m.inputs()
        .filter(|p| Some(&p.name) != clock.as_ref())
        .map(|p| p.width)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Fuzz vectors, and the budget of a fuzz-only check.
    pub vectors: u64,
    /// Cycles per run of a bounded sequential check.
    pub cycles: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            vectors: 1000,
            cycles: 64,
            seed: 1,
        }
    }
}

/// Result of the full fuzz-then-check flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub fuzz: FuzzOutcome,
    /// Absent when the fuzz filter already rejected the candidate.
    pub verdict: Option<EquivalenceVerdict>,
}

impl CandidateCheck {
    pub fn passed(&self) -> bool {
        self.fuzz.passed() && self.verdict.as_ref().is_some_and(|v| v.passed())
    }
}

/// Fuzz filter first; only survivors reach the selected solver.
pub fn verify_candidate(
    original: &ModuleAst,
    candidate: &ModuleAst,
    cfg: &VerifyConfig,
) -> Result<CandidateCheck, VerifyError> {
    let fuzz = fuzz_filter(original, candidate, cfg.vectors, cfg.seed)?;
    if !fuzz.passed() {
        return Ok(CandidateCheck { fuzz, verdict: None });
    }
    let method = dispatch(pattern_of(original), pattern_of(candidate), data_input_bits(original))?;
    let budget = match method {
        Method::Exhaustive => 0,
        Method::FuzzOnly => cfg.vectors as usize,
        Method::BoundedSequential => cfg.cycles,
    };
    let verdict = check_equivalence(original, candidate, method, budget, cfg.seed)?;
    Ok(CandidateCheck {
        fuzz,
        verdict: Some(verdict),
    })
}

/// Simulate a flat module.
pub fn simulate(module: &ModuleAst, stim: &Stimulus) -> Result<SimTrace, SimError> {
    Simulator::new(module)?.run(stim)
}

#[cfg(test)]
mod tests;
