//! End-to-end flow: parse, partition, analyse, retrieve, search, verify
//! and report, plus the corpus benchmark.

mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, build_instance_tree, AnalysisResult};
use crate::cost::{compare, estimate, CostReport, CostWeights, Trend, WeightsError};
use crate::frontend::{parse, print, DesignAst};
use crate::partition::{partition, CostPredictor};
use crate::retrieval::{load_documents, KnowledgeBase, RetrievalParams};
use crate::rewrite::PatchLogEntry;
use crate::search::{
    resolve_endpoint, run_search, ExternalModelProposer, FastVerifier, Proposer, RetrievalResults,
    RuleProposer, SearchConfig, WeightedCost,
};
use crate::verify::{flatten, verify_candidate, CandidateCheck, VerifyConfig};

pub use report::{bench, bench_files, render_table, BenchReport, BenchRow, TableStyle};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionParams {
    pub lambda: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub workers: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams {
            lambda: 1.0,
            n_min: 0,
            n_max: 4,
            workers: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    /// Document directory; the built-in collection when absent.
    pub db: Option<PathBuf>,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let p = RetrievalParams::default();
        RetrievalConfig {
            db: None,
            lambda: p.lambda,
            n: p.n,
            k: p.k,
        }
    }
}

impl RetrievalConfig {
    pub fn params(&self) -> RetrievalParams {
        RetrievalParams {
            lambda: self.lambda,
            n: self.n,
            k: self.k,
        }
    }

    pub fn knowledge_base(&self) -> Result<KnowledgeBase, PipelineError> {
        Ok(match &self.db {
            Some(dir) => KnowledgeBase::new(load_documents(dir)?)?,
            None => KnowledgeBase::builtin(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Top module; inferred per design when absent.
    pub top: Option<String>,
    pub partition: PartitionParams,
    pub retrieval: RetrievalConfig,
    pub search: SearchConfig,
    pub verify: VerifyConfig,
    /// Cost weights file; built-in weights when absent.
    pub weights: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Cases processed at once.
    pub case_workers: usize,
    /// Include wall-clock timings in serialized results.
    pub report_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            top: None,
            partition: PartitionParams::default(),
            retrieval: RetrievalConfig::default(),
            search: SearchConfig::default(),
            verify: VerifyConfig::default(),
            weights: None,
            output_dir: None,
            case_workers: 4,
            report_timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig, PipelineError> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PipelineConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.search
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let p = &self.partition;
        if p.workers == 0 {
            return bad("partition.workers must be positive".into());
        }
        if p.n_min > p.n_max {
            return bad(format!("partition.n_min {} > n_max {}", p.n_min, p.n_max));
        }
        if !(p.lambda >= 0.0) {
            return bad("partition.lambda must be >= 0".into());
        }
        let r = &self.retrieval;
        if !(0.0..=1.0).contains(&r.lambda) || r.k == 0 {
            return bad("retrieval.lambda must lie in [0, 1] and k be positive".into());
        }
        if self.verify.vectors == 0 || self.verify.cycles == 0 {
            return bad("verify.vectors and verify.cycles must be positive".into());
        }
        if self.case_workers == 0 {
            return bad("case_workers must be positive".into());
        }
        Ok(())
    }

    pub fn cost_weights(&self) -> Result<CostWeights, PipelineError> {
        Ok(match &self.weights {
            Some(p) => CostWeights::load(p)?,
            None => CostWeights::default(),
        })
    }
}

/// One design to optimize.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseInput {
    pub id: String,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseStatus {
    Optimized,
    Unchanged,
    /// Patches failed the whole-design check and were dropped.
    Rejected,
    Failed,
}

/// Seconds spent per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub parse: f64,
    pub partition: f64,
    pub analyze: f64,
    pub retrieve: f64,
    pub search: f64,
    pub verify: f64,
    pub estimate: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.parse + self.partition + self.analyze + self.retrieve + self.search + self.verify + self.estimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: String,
    pub top: Option<String>,
    pub status: CaseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub before: CostReport,
    pub after: CostReport,
    pub patches: Vec<PatchLogEntry>,
    /// Whole-design check of the reassembled design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CandidateCheck>,
    pub groups: Vec<Vec<String>>,
    pub analyses: Vec<AnalysisResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
    /// Optimized source, present when patches were kept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimized: Option<String>,
    /// Search trace per optimized module, as JSON lines.
    #[serde(skip)]
    pub traces: Vec<(String, String)>,
}

impl CaseResult {
    /// Distinct rule ids over all kept patches.
    pub fn rule_ids(&self) -> BTreeSet<String> {
        self.patches
            .iter()
            .flat_map(|p| p.rule_id.split('+').map(str::to_string))
            .collect()
    }
}

struct Clock {
    t: Instant,
}

impl Clock {
    fn start() -> Clock {
        Clock { t: Instant::now() }
    }

    /// Seconds since the last lap.
    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let d = now.duration_since(self.t).as_secs_f64();
        self.t = now;
        d
    }
}

/// The configured top if defined, else the only uninstantiated module,
/// else the last-defined one.
pub fn pick_top(design: &DesignAst, wanted: Option<&str>) -> Result<String, String> {
    if let Some(t) = wanted {
        if design.modules.iter().any(|m| m.name == t) {
            return Ok(t.to_string());
        }
    }
    let mut tops = design.top_candidates();
    tops.sort_unstable();
    match tops.as_slice() {
        [] => Err("no top module".into()),
        [t] => Ok(t.to_string()),
        _ => Ok(design.modules.iter().rev().find(|m| tops.contains(&m.name.as_str())).expect("top").name.clone()),
    }
}

fn failed(case: &str, msg: String, report: CostReport, timings: StageTimings) -> CaseResult {
    CaseResult {
        case: case.to_string(),
        top: None,
        status: CaseStatus::Failed,
        error: Some(msg),
        before: report.clone(),
        after: report,
        patches: Vec::new(),
        check: None,
        groups: Vec::new(),
        analyses: Vec::new(),
        timings: Some(timings),
        optimized: None,
        traces: Vec::new(),
    }
}

/// Run the whole flow on one design. Errors are recorded in the result.
pub fn run_case(
    input: &CaseInput,
    cfg: &PipelineConfig,
    kb: &KnowledgeBase,
    weights: &CostWeights,
) -> CaseResult {
    let t0 = Instant::now();
    let mut clock = Clock::start();
    let mut tm = StageTimings::default();
    let design = match parse(&input.source, &input.id) {
        Ok(d) => d,
        Err(e) => {
            tm.parse = clock.lap();
            tm.total = t0.elapsed().as_secs_f64();
            return failed(&input.id, e.to_string(), CostReport::default(), tm);
        }
    };
    tm.parse = clock.lap();
    let before = estimate(&design, weights);
    tm.estimate += clock.lap();
    let fail = |msg: String, mut tm: StageTimings| {
        tm.total = t0.elapsed().as_secs_f64();
        failed(&input.id, msg, before.clone(), tm)
    };
    let top = match pick_top(&design, cfg.top.as_deref()) {
        Ok(t) => t,
        Err(e) => return fail(e, tm),
    };

    let tree = match build_instance_tree(&design, &top, &CostPredictor::default()) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string(), tm),
    };
    let p = &cfg.partition;
    let edges = tree.edges.len();
    let plan = match partition(&tree, p.lambda, p.n_min.min(edges), p.n_max.min(edges), p.workers) {
        Ok(plan) => plan,
        Err(e) => return fail(e.to_string(), tm),
    };
    // Each module definition is optimized once, in the first group that
    // instantiates it.
    let mut seen = BTreeSet::new();
    let groups: Vec<Vec<String>> = plan
        .groups
        .iter()
        .map(|g| {
            let mut names: Vec<String> = g
                .iter()
                .map(|&n| tree.nodes[n].module.clone())
                .filter(|m| design.module(m).is_some())
                .collect();
            names.sort();
            names.dedup();
            names.retain(|m| seen.insert(m.clone()));
            names
        })
        .collect();
    tm.partition = clock.lap();

    let endpoint = resolve_endpoint(cfg.search.model_endpoint.as_deref());
    let mut work = design.clone();
    let mut patches = Vec::new();
    let mut analyses = Vec::new();
    let mut traces = Vec::new();
    for name in groups.iter().flatten() {
        let module = work.module(name).expect("defined").clone();
        analyses.push(analyze(&module));
        tm.analyze += clock.lap();

        let code = print(&DesignAst::from_modules(vec![module.clone()]));
        let retrieved = match RetrievalResults::gather(kb, &code, &cfg.retrieval.params()) {
            Ok(r) => r,
            Err(e) => return fail(e.to_string(), tm),
        };
        tm.retrieve += clock.lap();

        let verifier = FastVerifier {
            config: cfg.verify,
            library: Some(work.clone()),
        };
        let local = RuleProposer::new(verifier.clone());
        let mut proposer: Box<dyn Proposer> = match &endpoint {
            Some(url) => Box::new(ExternalModelProposer::new(url.clone(), local)),
            None => Box::new(local),
        };
        let out = match run_search(
            &module,
            proposer.as_mut(),
            &verifier,
            &WeightedCost(weights.clone()),
            &retrieved,
            &cfg.search,
        ) {
            Ok(o) => o,
            Err(e) => return fail(e.to_string(), tm),
        };
        tm.search += clock.lap();
        traces.push((name.clone(), out.trace_jsonl()));
        if !out.patches.is_empty() {
            let slot = work.modules.iter_mut().find(|m| m.name == *name).expect("defined");
            *slot = out.module;
            patches.extend(out.patches.iter().map(PatchLogEntry::from));
        }
    }

    let mut status = if patches.is_empty() {
        CaseStatus::Unchanged
    } else {
        CaseStatus::Optimized
    };
    let mut check = None;
    if !patches.is_empty() {
        let verdict = flatten(&design, &top)
            .and_then(|a| Ok((a, flatten(&work, &top)?)))
            .map_err(|e| e.to_string())
            .and_then(|(a, b)| verify_candidate(&a, &b, &cfg.verify).map_err(|e| e.to_string()));
        match verdict {
            Ok(c) if c.passed() => check = Some(c),
            Ok(c) => {
                check = Some(c);
                status = CaseStatus::Rejected;
            }
            Err(e) => {
                log::warn!("{}: whole-design check failed to run: {e}", input.id);
                status = CaseStatus::Rejected;
            }
        }
        if status == CaseStatus::Rejected {
            patches.clear();
            work = design.clone();
        }
    }
    tm.verify = clock.lap();

    let after = estimate(&work, weights);
    if status == CaseStatus::Optimized && compare(&before, &after).overall == Trend::Worse {
        // Per-module gains must not turn into a whole-design loss.
        status = CaseStatus::Rejected;
        patches.clear();
        work = design.clone();
    }
    let after = if status == CaseStatus::Rejected {
        before.clone()
    } else {
        after
    };
    tm.estimate += clock.lap();
    tm.total = t0.elapsed().as_secs_f64();
    CaseResult {
        case: input.id.clone(),
        top: Some(top),
        status,
        error: None,
        before,
        after,
        optimized: (status == CaseStatus::Optimized).then(|| print(&work)),
        patches,
        check,
        groups,
        analyses,
        timings: Some(tm),
        traces,
    }
}

/// Run every case, up to `cfg.case_workers` at a time. Results keep the
/// input order.
pub fn run_pipeline(inputs: &[CaseInput], cfg: &PipelineConfig) -> Result<Vec<CaseResult>, PipelineError> {
    cfg.validate()?;
    let kb = cfg.retrieval.knowledge_base()?;
    let weights = cfg.cost_weights()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.case_workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut results: Vec<CaseResult> =
        pool.install(|| inputs.par_iter().map(|c| run_case(c, cfg, &kb, &weights)).collect());
    if !cfg.report_timings {
        for r in &mut results {
            r.timings = None;
        }
    }
    Ok(results)
}

/// `.v` files directly under `dir`, sorted by name.
pub fn collect_cases(dir: &Path) -> Result<Vec<CaseInput>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "v"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_case(p)).collect()
}

pub fn read_case(path: &Path) -> Result<CaseInput, PipelineError> {
    let source = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(CaseInput {
        id: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        source,
    })
}
