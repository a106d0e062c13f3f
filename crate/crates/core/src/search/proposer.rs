use serde::{Deserialize, Serialize};

use super::{FastVerifier, SearchAction, SearchContext, Verifier};
use crate::analysis::{analyze, rule_for_hint};
use crate::frontend::{parse_module, print, DesignAst, ModuleAst};
use crate::rewrite::{apply_rule, module_hash, run_to_fixpoint, MAX_PASSES, RULE_IDS};

/// Environment variable that overrides the configured model endpoint.
pub const ENDPOINT_ENV: &str = "RTLOPT_MODEL_ENDPOINT";

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub module: ModuleAst,
    /// Rule ids that produced it, joined with `+`, or the proposer name.
    pub label: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ProposerError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint answered {0}")]
    Status(u16),
    #[error("bad response: {0}")]
    Decode(String),
}

pub trait Proposer {
    fn next_action(&mut self, ctx: &SearchContext) -> SearchAction;

    /// Carry out `action`, possibly updating `ctx`, and return candidate
    /// rewrites of `ctx.module`.
    fn propose(
        &mut self,
        ctx: &mut SearchContext,
        action: SearchAction,
    ) -> Result<Vec<Candidate>, ProposerError>;
}

/// Reflect on a failed candidate, analyse a module not yet analysed,
/// rewrite once, then keep optimizing.
pub fn default_action(ctx: &SearchContext) -> SearchAction {
    if ctx.last_candidate.as_ref().is_some_and(|c| !c.passed) {
        SearchAction::Reflection
    } else if !ctx.is_analyzed() {
        SearchAction::OptimizationAnalysis
    } else if ctx.rewrites == 0 {
        SearchAction::Rewrite
    } else {
        SearchAction::ContinueOptimization
    }
}

/// Proposes candidates by running the rule library.
#[derive(Debug, Clone, Default)]
pub struct RuleProposer {
    pub verifier: FastVerifier,
}

impl RuleProposer {
    pub fn new(verifier: FastVerifier) -> RuleProposer {
        RuleProposer { verifier }
    }

    fn analyse(ctx: &mut SearchContext) {
        let hinted: Vec<String> = analyze(&ctx.module)
            .sub_hints
            .iter()
            .filter_map(|h| rule_for_hint(h))
            .map(str::to_string)
            .collect();
        let both: Vec<String> = ctx.rules.iter().filter(|r| hinted.contains(r)).cloned().collect();
        ctx.rules = if both.is_empty() { hinted } else { both };
        ctx.analyzed = Some(module_hash(&ctx.module));
    }

    fn reflect(&self, ctx: &mut SearchContext) {
        if let Some(last) = &mut ctx.last_candidate {
            if self.verifier.passes(&ctx.module, &last.module) {
                last.passed = true;
            } else {
                ctx.last_candidate = None;
            }
        }
    }
}

fn library_order(rules: &[String]) -> Vec<&'static str> {
    RULE_IDS
        .iter()
        .copied()
        .filter(|r| rules.iter().any(|x| x == r))
        .collect()
}

impl Proposer for RuleProposer {
    fn next_action(&mut self, ctx: &SearchContext) -> SearchAction {
        default_action(ctx)
    }

    fn propose(
        &mut self,
        ctx: &mut SearchContext,
        action: SearchAction,
    ) -> Result<Vec<Candidate>, ProposerError> {
        match action {
            SearchAction::OptimizationAnalysis => {
                RuleProposer::analyse(ctx);
                Ok(Vec::new())
            }
            SearchAction::Reflection => {
                self.reflect(ctx);
                Ok(Vec::new())
            }
            SearchAction::Rewrite => {
                ctx.rewrites += 1;
                Ok(library_order(&ctx.rules)
                    .into_iter()
                    .filter_map(|r| apply_rule(&ctx.module, r).ok().flatten())
                    .map(|p| Candidate {
                        module: p.new_module,
                        label: p.rule_id,
                    })
                    .collect())
            }
            SearchAction::ContinueOptimization => {
                ctx.rewrites += 1;
                // Rewrites can expose patterns the first analysis could not
                // see, so re-analyse and widen the rule set until it settles.
                let mut rules = ctx.rules.clone();
                let mut m = ctx.module.clone();
                let mut log = Vec::new();
                for _ in 0..MAX_PASSES {
                    let order = library_order(&rules);
                    let (next, step) = run_to_fixpoint(&m, &order, MAX_PASSES, &mut |_, _| true)
                        .map_err(|e| ProposerError::Decode(e.to_string()))?;
                    let progressed = !step.is_empty();
                    m = next;
                    log.extend(step);
                    let before = rules.len();
                    for h in analyze(&m).sub_hints {
                        if let Some(r) = rule_for_hint(&h) {
                            if !rules.iter().any(|x| x == r) {
                                rules.push(r.to_string());
                            }
                        }
                    }
                    if !progressed || rules.len() == before {
                        break;
                    }
                }
                if log.is_empty() {
                    return Ok(Vec::new());
                }
                let mut ids: Vec<&str> = Vec::new();
                for p in &log {
                    if !ids.contains(&p.rule_id.as_str()) {
                        ids.push(&p.rule_id);
                    }
                }
                Ok(vec![Candidate {
                    module: m,
                    label: ids.join("+"),
                }])
            }
        }
    }
}

/// The environment override if set, else the configured endpoint.
pub fn resolve_endpoint(configured: Option<&str>) -> Option<String> {
    std::env::var(ENDPOINT_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .or_else(|| configured.map(str::to_string))
}

#[derive(Serialize)]
struct ModelRequest<'a> {
    code: String,
    retrieved_contents: Vec<&'a str>,
    action: SearchAction,
}

#[derive(Deserialize)]
struct ModelResponse {
    candidates: Vec<String>,
}

/// Sends rewriting actions to a model endpoint; other actions run
/// locally as in [`RuleProposer`].
#[derive(Debug, Clone)]
pub struct ExternalModelProposer {
    pub endpoint: String,
    pub local: RuleProposer,
}

impl ExternalModelProposer {
    pub fn new(endpoint: impl Into<String>, local: RuleProposer) -> ExternalModelProposer {
        ExternalModelProposer {
            endpoint: endpoint.into(),
            local,
        }
    }

    fn request(&self, ctx: &SearchContext, action: SearchAction) -> Result<Vec<String>, ProposerError> {
        let code = print(&DesignAst::from_modules(vec![ctx.module.clone()]));
        let body = ModelRequest {
            code,
            retrieved_contents: ctx.retrieved.iter().map(|d| d.text.as_str()).collect(),
            action,
        };
        let mut resp = ureq::post(&self.endpoint).send_json(&body).map_err(|e| match e {
            ureq::Error::StatusCode(s) => ProposerError::Status(s),
            e => ProposerError::Transport(e.to_string()),
        })?;
        let parsed: ModelResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProposerError::Decode(e.to_string()))?;
        Ok(parsed.candidates)
    }
}

/// Parse model output; anything that is not a single module with the
/// original's name and ports is dropped.
pub(crate) fn parse_candidates(original: &ModuleAst, texts: &[String]) -> Vec<Candidate> {
    texts
        .iter()
        .filter_map(|t| parse_module(t, "<model>").ok())
        .filter(|m| m.name == original.name && m.ports == original.ports)
        .map(|module| Candidate {
            module,
            label: "model".into(),
        })
        .collect()
}

impl Proposer for ExternalModelProposer {
    fn next_action(&mut self, ctx: &SearchContext) -> SearchAction {
        default_action(ctx)
    }

    fn propose(
        &mut self,
        ctx: &mut SearchContext,
        action: SearchAction,
    ) -> Result<Vec<Candidate>, ProposerError> {
        if !action.rewrites() {
            return self.local.propose(ctx, action);
        }
        ctx.rewrites += 1;
        let texts = self.request(ctx, action)?;
        Ok(parse_candidates(&ctx.module, &texts))
    }
}
