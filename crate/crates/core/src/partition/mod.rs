//! Synthesis-time prediction and instance-tree partitioning.
//!
//! A plan cuts tree edges; each connected component becomes a group
//! synthesized on its own. Plans are scored by `C = L + lambda * E`
//! where `L` is the first-fit-decreasing makespan of the group times and
//! `E` the total weight of the cut edges.

mod features;
mod predictor;

use serde::{Deserialize, Serialize};

use crate::analysis::InstanceTree;

pub use features::{extract_features, width_bucket, FeatureKey, FeatureOp, FeatureVector, BUCKETS};
pub use predictor::{fit_predictor, CostPredictor, RIDGE};

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("n_min = {n_min} exceeds the {edges} edges of the tree")]
    InfeasibleBounds { n_min: usize, edges: usize },
    #[error("n_min = {n_min} is greater than n_max = {n_max}")]
    InvalidBounds { n_min: usize, n_max: usize },
    #[error("at least one worker is required")]
    NoWorkers,
    #[error("no training samples")]
    NoSamples,
    #[error("least-squares solve failed: {0}")]
    Numeric(String),
    #[error("cannot read predictor: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid predictor: {0}")]
    Json(#[from] serde_json::Error),
}

/// Makespan of first-fit-decreasing onto the least-loaded of `workers`.
pub fn schedule_first_fit(group_times: &[f64], workers: usize) -> f64 {
    let workers = workers.max(1);
    let mut times = group_times.to_vec();
    times.sort_by(|a, b| b.total_cmp(a));
    let mut loads = vec![0.0f64; workers];
    for t in times {
        let (i, _) = loads
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("workers >= 1");
        loads[i] += t;
    }
    loads.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    /// Cut edges as (parent, child).
    pub cuts: Vec<(usize, usize)>,
    pub groups: Vec<Vec<usize>>,
    #[serde(rename = "L")]
    pub makespan: f64,
    #[serde(rename = "E")]
    pub cut_weight: f64,
    #[serde(rename = "C")]
    pub cost: f64,
    pub lambda: f64,
    pub workers: usize,
}

impl PartitionPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Evaluates cut sets on a fixed tree.
pub struct PlanEvaluator<'a> {
    tree: &'a InstanceTree,
    parent: Vec<Option<usize>>,
    /// Nodes in an order where parents precede children.
    order: Vec<usize>,
    lambda: f64,
    workers: usize,
}

impl<'a> PlanEvaluator<'a> {
    pub fn new(tree: &'a InstanceTree, lambda: f64, workers: usize) -> Self {
        let n = tree.nodes.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (i, e) in tree.edges.iter().enumerate() {
            parent[e.child] = Some(i);
            children[e.parent].push(e.child);
        }
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).rev().collect();
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().rev());
        }
        PlanEvaluator {
            tree,
            parent,
            order,
            lambda,
            workers,
        }
    }

    /// Group id of every node when the edges flagged in `cut` are removed.
    fn components(&self, cut: &[bool]) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.tree.nodes.len()];
        for &v in &self.order {
            comp[v] = match self.parent[v] {
                Some(e) if !cut[e] => comp[self.tree.edges[e].parent],
                _ => v,
            };
        }
        comp
    }

    fn group_times(&self, comp: &[usize]) -> Vec<(usize, f64)> {
        let mut t: std::collections::BTreeMap<usize, f64> = Default::default();
        for (v, c) in comp.iter().enumerate() {
            *t.entry(*c).or_insert(0.0) += self.tree.nodes[v].weight;
        }
        t.into_iter().collect()
    }

    /// `C` of the cut set given as edge indices.
    pub fn cost(&self, cut: &[bool]) -> f64 {
        let comp = self.components(cut);
        let times: Vec<f64> = self.group_times(&comp).into_iter().map(|g| g.1).collect();
        let l = schedule_first_fit(&times, self.workers);
        l + self.lambda * self.cut_weight(cut)
    }

    fn cut_weight(&self, cut: &[bool]) -> f64 {
        self.tree
            .edges
            .iter()
            .zip(cut)
            .filter(|(_, c)| **c)
            .map(|(e, _)| e.weight)
            .sum()
    }

    pub fn plan(&self, cut: &[bool]) -> PartitionPlan {
        let comp = self.components(cut);
        let times: Vec<f64> = self.group_times(&comp).into_iter().map(|g| g.1).collect();
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (v, c) in comp.iter().enumerate() {
            groups.entry(*c).or_default().push(v);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
        groups.sort();
        let makespan = schedule_first_fit(&times, self.workers);
        let cut_weight = self.cut_weight(cut);
        let mut cuts: Vec<(usize, usize)> = self
            .tree
            .edges
            .iter()
            .zip(cut)
            .filter(|(_, c)| **c)
            .map(|(e, _)| (e.parent, e.child))
            .collect();
        cuts.sort();
        PartitionPlan {
            cuts,
            groups,
            makespan,
            cut_weight,
            cost: makespan + self.lambda * cut_weight,
            lambda: self.lambda,
            workers: self.workers,
        }
    }
}

/// Cut sets kept per step of [`partition`]; 1 gives plain greedy.
pub const BEAM_WIDTH: usize = 8;

/// Greedy top-down partition, widened to a small beam.
///
/// Each step extends every kept cut set by one more uncut edge and keeps
/// the [`BEAM_WIDTH`] lowest-`C` results (ties to the lowest child ids).
/// Steps continue up to `n_max` cuts and the best plan with at least
/// `n_min` cuts is returned.
pub fn partition(
    tree: &InstanceTree,
    lambda: f64,
    n_min: usize,
    n_max: usize,
    workers: usize,
) -> Result<PartitionPlan, PartitionError> {
    if workers == 0 {
        return Err(PartitionError::NoWorkers);
    }
    if n_min > n_max {
        return Err(PartitionError::InvalidBounds { n_min, n_max });
    }
    let m = tree.edges.len();
    if n_min > m {
        return Err(PartitionError::InfeasibleBounds { n_min, edges: m });
    }
    let ev = PlanEvaluator::new(tree, lambda, workers);
    let key = |cut: &[bool]| -> Vec<usize> {
        let mut k: Vec<usize> = (0..m).filter(|&e| cut[e]).map(|e| tree.edges[e].child).collect();
        k.sort_unstable();
        k
    };
    let mut beam = vec![vec![false; m]];
    let mut best: Option<(f64, Vec<bool>)> = None;
    if n_min == 0 {
        best = Some((ev.cost(&beam[0]), beam[0].clone()));
    }
    for step in 1..=n_max.min(m) {
        let mut next: std::collections::BTreeMap<Vec<usize>, (f64, Vec<bool>)> = Default::default();
        for cut in &beam {
            for e in (0..m).filter(|&e| !cut[e]) {
                let mut c = cut.clone();
                c[e] = true;
                let k = key(&c);
                if !next.contains_key(&k) {
                    next.insert(k, (ev.cost(&c), c));
                }
            }
        }
        let mut ranked: Vec<(Vec<usize>, (f64, Vec<bool>))> = next.into_iter().collect();
        ranked.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(BEAM_WIDTH);
        let Some((_, (c, cut))) = ranked.first() else { break };
        // Ties go to the plan with more cuts.
        if step >= n_min && best.as_ref().is_none_or(|(bc, _)| *c <= bc + 1e-12) {
            best = Some((*c, cut.clone()));
        }
        beam = ranked.into_iter().map(|r| r.1 .1).collect();
    }
    let (_, cut) = best.expect("n_min <= edges guarantees a plan");
    Ok(ev.plan(&cut))
}
