//! Cost-aware Monte Carlo tree search over retrieved-content states and
//! rewrite actions.

mod proposer;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{compare, estimate_module, CostReport, CostWeights, Trend};
use crate::frontend::{DesignAst, ModuleAst};
use crate::retrieval::{DocType, Document, KnowledgeBase, RetrievalError, RetrievalParams};
use crate::rewrite::{module_hash, CostDelta, RewritePatch};
use crate::verify::{flatten, verify_candidate, VerifyConfig};

pub use proposer::{
    default_action, resolve_endpoint, Candidate, ExternalModelProposer, Proposer, ProposerError,
    RuleProposer, ENDPOINT_ENV,
};

/// Upper bound on non-rewriting actions in one expansion.
const MAX_EXPANSION_STEPS: usize = 8;

/// A nonempty subset of {instructions, codes, algorithms}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentSet(u8);

impl ContentSet {
    pub const INSTRUCTIONS: ContentSet = ContentSet(1);
    pub const CODES: ContentSet = ContentSet(2);
    pub const ALGORITHMS: ContentSet = ContentSet(4);

    /// The seven nonempty subsets, in bitmask order.
    pub fn all() -> [ContentSet; 7] {
        [1, 2, 3, 4, 5, 6, 7].map(ContentSet)
    }

    pub fn union(self, other: ContentSet) -> ContentSet {
        ContentSet(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: ContentSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn names(self) -> Vec<&'static str> {
        [
            (ContentSet::INSTRUCTIONS, "instructions"),
            (ContentSet::CODES, "codes"),
            (ContentSet::ALGORITHMS, "algorithms"),
        ]
        .into_iter()
        .filter(|(c, _)| self.contains(*c))
        .map(|(_, n)| n)
        .collect()
    }
}

impl fmt::Display for ContentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join("+"))
    }
}

impl Serialize for ContentSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.names().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchAction {
    Rewrite,
    OptimizationAnalysis,
    ContinueOptimization,
    Reflection,
}

impl SearchAction {
    pub const ALL: [SearchAction; 4] = [
        SearchAction::Rewrite,
        SearchAction::OptimizationAnalysis,
        SearchAction::ContinueOptimization,
        SearchAction::Reflection,
    ];

    /// Whether the action yields candidate modules and ends an expansion.
    pub fn rewrites(self) -> bool {
        matches!(self, SearchAction::Rewrite | SearchAction::ContinueOptimization)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Exploration weight.
    pub lambda_u: f64,
    /// Weight of the success-rate term.
    pub gamma_c: f64,
    /// Midpoint of the value sigmoid.
    pub balance_k: f64,
    pub max_iterations: usize,
    /// Iterations without an accepted patch before stopping.
    pub patience: usize,
    pub samples_per_rewrite: usize,
    /// Children a node takes before selection descends through it.
    pub branching: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_endpoint: Option<String>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lambda_u: 1.0,
            gamma_c: 0.1,
            balance_k: 0.5,
            max_iterations: 40,
            patience: 24,
            samples_per_rewrite: 4,
            branching: 2,
            model_endpoint: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if !(self.lambda_u >= 0.0) {
            return bad("lambda_u must be >= 0");
        }
        if !(self.balance_k > 0.0 && self.balance_k < 1.0) {
            return bad("balance_k must lie in (0, 1)");
        }
        if !self.gamma_c.is_finite() {
            return bad("gamma_c must be finite");
        }
        if self.samples_per_rewrite == 0 || self.branching == 0 {
            return bad("samples_per_rewrite and branching must be positive");
        }
        Ok(())
    }
}

/// Retrieved documents per content type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResults {
    pub instructions: Vec<Document>,
    pub codes: Vec<Document>,
    pub algorithms: Vec<Document>,
}

impl RetrievalResults {
    /// Query `kb` with module source text: instructions and codes
    /// directly, algorithms by joining from codes.
    pub fn gather(
        kb: &KnowledgeBase,
        code: &str,
        params: &RetrievalParams,
    ) -> Result<RetrievalResults, RetrievalError> {
        let fetch = |ty| -> Result<Vec<Document>, RetrievalError> {
            Ok(kb
                .retrieve(code, ty, params)?
                .hits
                .iter()
                .filter_map(|h| kb.get(&h.id).cloned())
                .collect())
        };
        let algorithms = kb
            .join_query(code, &[DocType::Code, DocType::Algorithm], params.lambda, params.n)?
            .iter()
            .take(params.k)
            .filter_map(|h| kb.get(&h.id).cloned())
            .collect();
        Ok(RetrievalResults {
            instructions: fetch(DocType::Instruction)?,
            codes: fetch(DocType::Code)?,
            algorithms,
        })
    }

    pub fn select(&self, content: ContentSet) -> Vec<Document> {
        let mut out = Vec::new();
        for (c, docs) in [
            (ContentSet::INSTRUCTIONS, &self.instructions),
            (ContentSet::CODES, &self.codes),
            (ContentSet::ALGORITHMS, &self.algorithms),
        ] {
            if content.contains(c) {
                out.extend(docs.iter().cloned());
            }
        }
        out
    }
}

/// The most recent candidate seen along a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct LastCandidate {
    pub module: ModuleAst,
    pub passed: bool,
}

/// What a proposer sees: retrieved guidance, the module being improved
/// and the actions taken so far on this branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchContext {
    pub content: ContentSet,
    pub retrieved: Vec<Document>,
    pub module: ModuleAst,
    /// Rule ids in play, in library order.
    pub rules: Vec<String>,
    /// Hash of the module the last analysis ran on.
    pub analyzed: Option<String>,
    pub rewrites: usize,
    pub last_candidate: Option<LastCandidate>,
    pub transcript: Vec<SearchAction>,
}

impl SearchContext {
    pub fn new(content: ContentSet, retrieved: Vec<Document>, module: ModuleAst) -> SearchContext {
        let tags: Vec<&str> = retrieved.iter().map(|d| d.category.as_str()).collect();
        let rules = crate::rewrite::RULE_IDS
            .iter()
            .filter(|r| {
                crate::analysis::hint_for_rule(r).is_some_and(|h| tags.contains(&h))
            })
            .map(|r| r.to_string())
            .collect();
        SearchContext {
            content,
            retrieved,
            module,
            rules,
            analyzed: None,
            rewrites: 0,
            last_candidate: None,
            transcript: Vec::new(),
        }
    }

    pub fn is_analyzed(&self) -> bool {
        self.analyzed.as_deref() == Some(module_hash(&self.module).as_str())
    }
}

/// Judges whether a candidate matches the original.
pub trait Verifier: Sync {
    fn passes(&self, original: &ModuleAst, candidate: &ModuleAst) -> bool;
}

/// Scores a module.
pub trait CostModel: Sync {
    fn report(&self, module: &ModuleAst) -> CostReport;
}

/// Fuzz filter followed by the selected equivalence check. Modules with
/// instances are flattened against `library` first.
#[derive(Debug, Clone, Default)]
pub struct FastVerifier {
    pub config: VerifyConfig,
    pub library: Option<DesignAst>,
}

impl FastVerifier {
    pub fn new(config: VerifyConfig) -> FastVerifier {
        FastVerifier {
            config,
            library: None,
        }
    }

    fn flat(&self, m: &ModuleAst) -> Option<ModuleAst> {
        if m.instances().next().is_none() {
            return Some(m.clone());
        }
        let mut d = self.library.clone()?;
        d.modules.retain(|x| x.name != m.name);
        d.modules.push(m.clone());
        flatten(&d, &m.name).ok()
    }
}

impl Verifier for FastVerifier {
    fn passes(&self, original: &ModuleAst, candidate: &ModuleAst) -> bool {
        let (Some(a), Some(b)) = (self.flat(original), self.flat(candidate)) else {
            return false;
        };
        match verify_candidate(&a, &b, &self.config) {
            Ok(c) => c.passed(),
            Err(e) => {
                log::debug!("verification error: {e}");
                false
            }
        }
    }
}

/// The weighted per-module estimate.
#[derive(Debug, Clone, Default)]
pub struct WeightedCost(pub CostWeights);

impl CostModel for WeightedCost {
    fn report(&self, module: &ModuleAst) -> CostReport {
        module_report(module, &self.0)
    }
}

pub fn module_report(module: &ModuleAst, weights: &CostWeights) -> CostReport {
    let c = estimate_module(module, weights);
    CostReport {
        wires: c.wires,
        cells: c.cells,
        area: c.area,
        delay: c.delay,
        modules: vec![c],
    }
}

/// 0 when verification failed, 1 when the candidate is strictly cheaper,
/// 0.5 otherwise.
pub fn reward(passed: bool, before: &CostReport, after: &CostReport) -> f64 {
    if !passed {
        0.0
    } else if compare(before, after).overall == Trend::Improved {
        1.0
    } else {
        0.5
    }
}

/// Exploration bonus `sqrt(2 ln T / N)`; infinite for unvisited nodes.
pub fn uncertainty(total: u64, visits: u64) -> f64 {
    if visits == 0 {
        f64::INFINITY
    } else {
        (2.0 * (total.max(1) as f64).ln() / visits as f64).sqrt()
    }
}

/// `1 / (1 + exp(-10 (q - k)))`.
pub fn balance_weight(q: f64, k: f64) -> f64 {
    1.0 / (1.0 + (-10.0 * (q - k)).exp())
}

/// Success rate scaled by `1 + balance_weight(q, k)`.
pub fn success_term(n_success: u64, visits: u64, q: f64, k: f64) -> f64 {
    let v = if visits == 0 {
        0.0
    } else {
        n_success as f64 / visits as f64
    };
    v * (1.0 + balance_weight(q, k))
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub content: ContentSet,
    /// Actions taken by the expansion that created this node.
    pub actions: Vec<SearchAction>,
    /// Prior plus all rewards received.
    pub value_sum: f64,
    pub visits: u64,
    pub n_success: u64,
    pub children: Vec<usize>,
    pub best_patch: Option<RewritePatch>,
    pub context: SearchContext,
}

impl SearchNode {
    /// Running mean with the prior counted as one observation.
    pub fn q(&self) -> f64 {
        self.value_sum / (self.visits + 1) as f64
    }
}

/// Arena of search nodes; node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    /// Root with one child per content subset, valued `1 / |subset|`.
    pub fn init_root(module: &ModuleAst, retrieval: &RetrievalResults) -> SearchTree {
        let all = ContentSet(7);
        let mut nodes = vec![SearchNode {
            id: 0,
            parent: None,
            content: all,
            actions: Vec::new(),
            value_sum: 0.0,
            visits: 0,
            n_success: 0,
            children: Vec::new(),
            best_patch: None,
            context: SearchContext::new(all, retrieval.select(all), module.clone()),
        }];
        for c in ContentSet::all() {
            let id = nodes.len();
            nodes[0].children.push(id);
            nodes.push(SearchNode {
                id,
                parent: Some(0),
                content: c,
                actions: Vec::new(),
                value_sum: 1.0 / c.len() as f64,
                visits: 0,
                n_success: 0,
                children: Vec::new(),
                best_patch: None,
                context: SearchContext::new(c, retrieval.select(c), module.clone()),
            });
        }
        SearchTree { nodes }
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn score(&self, child: usize, total: u64, config: &SearchConfig) -> f64 {
        let n = &self.nodes[child];
        let q = n.q();
        let u = uncertainty(total, n.visits);
        let explore = if config.lambda_u == 0.0 { 0.0 } else { config.lambda_u * u };
        q + explore + config.gamma_c * success_term(n.n_success, n.visits, q, config.balance_k)
    }

    /// Highest-scoring child of `node`; unvisited children first, ties to
    /// the lowest id.
    pub fn select(&self, node: usize, config: &SearchConfig) -> usize {
        let parent = &self.nodes[node];
        let total = parent.visits;
        let mut best: Option<(usize, f64)> = None;
        for &c in &parent.children {
            let s = self.score(c, total, config);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.expect("node has children").0
    }

    /// Count one visit with `reward` on every node of `path`.
    pub fn backpropagate(&mut self, path: &[usize], reward: f64, success: bool) -> Vec<(usize, f64)> {
        path.iter()
            .map(|&i| {
                let n = &mut self.nodes[i];
                n.visits += 1;
                n.value_sum += reward;
                n.n_success += success as u64;
                (i, n.q())
            })
            .collect()
    }

    fn add_child(&mut self, parent: usize, actions: Vec<SearchAction>, context: SearchContext) -> usize {
        let id = self.nodes.len();
        let prior = self.nodes[parent].q();
        let content = self.nodes[parent].content;
        self.nodes[parent].children.push(id);
        self.nodes.push(SearchNode {
            id,
            parent: Some(parent),
            content,
            actions,
            value_sum: prior,
            visits: 0,
            n_success: 0,
            children: Vec::new(),
            best_patch: None,
            context,
        });
        id
    }
}

/// One line of the search trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub path: Vec<usize>,
    pub content: ContentSet,
    pub actions: Vec<SearchAction>,
    pub reward: f64,
    pub q_updates: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Accepted patches in order; each applies to the previous one's
    /// result.
    pub patches: Vec<RewritePatch>,
    pub module: ModuleAst,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub tree: SearchTree,
}

impl SearchOutcome {
    /// Root child with the most visits, ties to the lowest id.
    pub fn most_visited(&self) -> &SearchNode {
        let root = self.tree.root();
        let best = root
            .children
            .iter()
            .copied()
            .max_by(|&a, &b| {
                self.tree.nodes[a]
                    .visits
                    .cmp(&self.tree.nodes[b].visits)
                    .then(b.cmp(&a))
            })
            .expect("root children");
        &self.tree.nodes[best]
    }

    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

fn make_patch(label: &str, before: &ModuleAst, after: &ModuleAst, b: &CostReport, a: &CostReport) -> RewritePatch {
    RewritePatch {
        rule_id: label.to_string(),
        target_module: before.name.clone(),
        before_hash: module_hash(before),
        after_hash: module_hash(after),
        new_module: after.clone(),
        predicted_delta: CostDelta {
            wires: a.wires as i64 - b.wires as i64,
            cells: a.cells as i64 - b.cells as i64,
            area: a.area - b.area,
            delay: a.delay - b.delay,
        },
    }
}

fn cost_key(r: &CostReport) -> (u64, f64, f64) {
    (r.cells, r.area, r.delay)
}

/// Select, expand until a rewriting action, evaluate candidates and
/// back up the reward, until `max_iterations` or `patience` runs out.
pub fn run_search(
    module: &ModuleAst,
    proposer: &mut dyn Proposer,
    verifier: &dyn Verifier,
    cost: &dyn CostModel,
    retrieval: &RetrievalResults,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    let mut tree = SearchTree::init_root(module, retrieval);
    let mut current = module.clone();
    let mut current_cost = cost.report(&current);
    let mut patches = Vec::new();
    let mut trace = Vec::new();
    let mut stale = 0;
    let mut iterations = 0;

    for it in 0..config.max_iterations {
        iterations = it + 1;
        let mut path = vec![0];
        let mut node = 0;
        while node == 0 || tree.nodes[node].children.len() >= config.branching {
            node = tree.select(node, config);
            path.push(node);
        }

        let mut ctx = tree.nodes[node].context.clone();
        if ctx.module != current {
            ctx.module = current.clone();
        }
        let mut actions = Vec::new();
        let mut candidates = Vec::new();
        for _ in 0..MAX_EXPANSION_STEPS {
            let a = proposer.next_action(&ctx);
            actions.push(a);
            ctx.transcript.push(a);
            match proposer.propose(&mut ctx, a) {
                Ok(c) => candidates = c,
                Err(e) => {
                    log::warn!("proposer failed on {a:?}: {e}");
                    candidates.clear();
                }
            }
            if a.rewrites() {
                break;
            }
        }
        candidates.truncate(config.samples_per_rewrite);

        let results: Vec<(bool, CostReport)> = candidates
            .par_iter()
            .map(|c| (verifier.passes(&current, &c.module), cost.report(&c.module)))
            .collect();
        let rewards: Vec<f64> = results
            .iter()
            .map(|(ok, r)| reward(*ok, &current_cost, r))
            .collect();
        let r = rewards.iter().copied().fold(0.0, f64::max);
        let success = results.iter().any(|(ok, _)| *ok);
        ctx.last_candidate = match results.iter().position(|(ok, _)| !ok) {
            Some(i) => Some(LastCandidate {
                module: candidates[i].module.clone(),
                passed: false,
            }),
            None => candidates.first().map(|c| LastCandidate {
                module: c.module.clone(),
                passed: true,
            }),
        };

        let best = (0..candidates.len())
            .filter(|&i| rewards[i] == 1.0)
            .min_by(|&a, &b| {
                cost_key(&results[a].1)
                    .partial_cmp(&cost_key(&results[b].1))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
        let leaf = tree.add_child(node, actions.clone(), ctx);
        path.push(leaf);
        let mut accepted = None;
        if let Some(i) = best {
            let c = &candidates[i];
            let p = make_patch(&c.label, &current, &c.module, &current_cost, &results[i].1);
            accepted = Some(p.rule_id.clone());
            tree.nodes[leaf].best_patch = Some(p.clone());
            current = c.module.clone();
            current_cost = results[i].1.clone();
            patches.push(p);
            stale = 0;
        } else {
            stale += 1;
        }
        let q_updates = tree.backpropagate(&path, r, success);
        trace.push(TraceRecord {
            iteration: it,
            path,
            content: tree.nodes[node].content,
            actions,
            reward: r,
            q_updates,
            accepted,
        });
        if stale >= config.patience {
            break;
        }
    }

    Ok(SearchOutcome {
        patches,
        module: current,
        iterations,
        trace,
        tree,
    })
}
