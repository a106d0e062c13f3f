//! Optimization-knowledge database: hybrid keyword/semantic ranking,
//! diverse re-ranking, link-following join queries and retrieval metrics.

mod builtin;
mod embed;
mod metrics;
mod store;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use builtin::builtin_documents;
pub use embed::{
    cosine_dense, cosine_sparse, embed, similarity, tf_idf, tokenize, trigram_vector, CorpusStats,
    Embedder, EmbeddingPair, HttpEmbedder, TrigramEmbedder, SEMANTIC_DIM,
};
pub use metrics::{evaluate, hit_and_map, EvalQuery, RetrievalMetrics};
pub use store::{load_documents, save_documents};

/// Largest number of subsets scored exactly by the diverse re-ranker.
pub const EXACT_SUBSET_LIMIT: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("document `{from}` links to unknown id `{to}`")]
    DanglingLink { from: String, to: String },
    #[error("join path needs at least two document types")]
    EmptyPath,
    #[error("embedder: {0}")]
    Embedder(String),
    #[error("{path}: {message}")]
    Store { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Diagram,
    Code,
    Instruction,
    Algorithm,
}

impl DocType {
    pub const ALL: [DocType; 4] = [
        DocType::Diagram,
        DocType::Code,
        DocType::Instruction,
        DocType::Algorithm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DocType::Diagram => "diagram",
            DocType::Code => "code",
            DocType::Instruction => "instruction",
            DocType::Algorithm => "algorithm",
        }
    }

    pub fn from_name(s: &str) -> Option<DocType> {
        DocType::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub doc_type: DocType,
    /// Caption text for diagrams.
    pub text: String,
    /// Pattern class; ground truth for retrieval metrics.
    pub category: String,
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Result of the diverse re-ranking stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub hits: Vec<RankedHit>,
    pub objective: f64,
    /// Whether every subset was scored.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalParams {
    /// Weight of the keyword channel.
    pub lambda: f64,
    /// First-stage candidates.
    pub n: usize,
    /// Final hits.
    pub k: usize,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            lambda: 0.5,
            n: 8,
            k: 3,
        }
    }
}

/// Immutable, indexed document collection.
pub struct KnowledgeBase {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
    stats: CorpusStats,
    embeddings: Vec<EmbeddingPair>,
    /// Links followed in both directions.
    neighbors: Vec<Vec<usize>>,
    embedder: Arc<dyn Embedder>,
}

impl std::fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("docs", &self.docs.len())
            .finish()
    }
}

impl KnowledgeBase {
    pub fn new(docs: Vec<Document>) -> Result<KnowledgeBase, RetrievalError> {
        KnowledgeBase::with_embedder(docs, Arc::new(TrigramEmbedder))
    }

    pub fn builtin() -> KnowledgeBase {
        KnowledgeBase::new(builtin_documents()).expect("built-in documents are consistent")
    }

    pub fn with_embedder(
        docs: Vec<Document>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<KnowledgeBase, RetrievalError> {
        let mut index = HashMap::new();
        for (i, d) in docs.iter().enumerate() {
            if index.insert(d.id.clone(), i).is_some() {
                return Err(RetrievalError::DuplicateId(d.id.clone()));
            }
        }
        let mut neighbors = vec![Vec::new(); docs.len()];
        for (i, d) in docs.iter().enumerate() {
            for l in &d.links {
                let j = *index.get(l).ok_or_else(|| RetrievalError::DanglingLink {
                    from: d.id.clone(),
                    to: l.clone(),
                })?;
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        let stats = CorpusStats::build(docs.iter().map(|d| d.text.as_str()));
        let embeddings = docs
            .iter()
            .map(|d| {
                Ok(EmbeddingPair {
                    keyword: tf_idf(&d.text, &stats),
                    semantic: embedder.semantic(&d.text)?,
                })
            })
            .collect::<Result<_, RetrievalError>>()?;
        Ok(KnowledgeBase {
            docs,
            index,
            stats,
            embeddings,
            neighbors,
            embedder,
        })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn embedding(&self, id: &str) -> Option<&EmbeddingPair> {
        self.index.get(id).map(|&i| &self.embeddings[i])
    }

    pub fn embed_query(&self, text: &str) -> Result<EmbeddingPair, RetrievalError> {
        Ok(EmbeddingPair {
            keyword: tf_idf(text, &self.stats),
            semantic: self.embedder.semantic(text)?,
        })
    }

    fn hit_order(&self, a: &(usize, f64), b: &(usize, f64)) -> Ordering {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.docs[a.0].id.cmp(&self.docs[b.0].id))
    }

    fn ranked(&self, mut scored: Vec<(usize, f64)>, n: usize) -> Vec<RankedHit> {
        scored.sort_by(|a, b| self.hit_order(a, b));
        scored
            .into_iter()
            .take(n)
            .enumerate()
            .map(|(r, (i, s))| RankedHit {
                id: self.docs[i].id.clone(),
                score: s,
                rank: r + 1,
            })
            .collect()
    }

    /// The `n` documents of type `ty` most similar to `query`; ties go to
    /// the lower id.
    pub fn rank_stage1(
        &self,
        query: &str,
        ty: DocType,
        lambda: f64,
        n: usize,
    ) -> Result<Vec<RankedHit>, RetrievalError> {
        let q = self.embed_query(query)?;
        let scored = (0..self.docs.len())
            .filter(|&i| self.docs[i].doc_type == ty)
            .map(|i| (i, similarity(&q, &self.embeddings[i], lambda)))
            .collect();
        Ok(self.ranked(scored, n))
    }

    /// Pick `k` of the first-stage `candidates` balancing relevance and
    /// mutual diversity.
    pub fn rank_stage2(&self, candidates: &[RankedHit], lambda: f64, k: usize) -> Selection {
        let idx: Vec<usize> = candidates.iter().map(|h| self.index[&h.id]).collect();
        let rel: Vec<f64> = candidates.iter().map(|h| h.score).collect();
        let pair: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .map(|&j| similarity(&self.embeddings[i], &self.embeddings[j], lambda))
                    .collect()
            })
            .collect();
        let (chosen, objective, exact) = select_diverse(&rel, &pair, k);
        let mut picked: Vec<&RankedHit> = chosen.iter().map(|&c| &candidates[c]).collect();
        picked.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.id.cmp(&b.id))
        });
        Selection {
            hits: picked
                .into_iter()
                .enumerate()
                .map(|(r, h)| RankedHit {
                    id: h.id.clone(),
                    score: h.score,
                    rank: r + 1,
                })
                .collect(),
            objective,
            exact,
        }
    }

    /// Both stages for one document type.
    pub fn retrieve(
        &self,
        query: &str,
        ty: DocType,
        params: &RetrievalParams,
    ) -> Result<Selection, RetrievalError> {
        let first = self.rank_stage1(query, ty, params.lambda, params.n.max(params.k))?;
        Ok(self.rank_stage2(&first, params.lambda, params.k))
    }

    /// Rank `path[0]` directly, then follow links one type at a time. Each
    /// reached document keeps the best score among the hits it came from.
    pub fn join_query(
        &self,
        query: &str,
        path: &[DocType],
        lambda: f64,
        n: usize,
    ) -> Result<Vec<RankedHit>, RetrievalError> {
        if path.len() < 2 {
            return Err(RetrievalError::EmptyPath);
        }
        let first = self.rank_stage1(query, path[0], lambda, n)?;
        let mut frontier: Vec<(usize, f64)> =
            first.iter().map(|h| (self.index[&h.id], h.score)).collect();
        for &ty in &path[1..] {
            let mut next: BTreeMap<usize, f64> = BTreeMap::new();
            for &(i, s) in &frontier {
                for &j in &self.neighbors[i] {
                    if self.docs[j].doc_type == ty {
                        let e = next.entry(j).or_insert(s);
                        *e = e.max(s);
                    }
                }
            }
            frontier = next.into_iter().collect();
        }
        let len = frontier.len();
        Ok(self.ranked(frontier, len))
    }
}

/// `min over j in set, j != i, of (2 - pair[i][j])`, or 0 when `i` is
/// alone.
pub fn dissimilarity(pair: &[Vec<f64>], i: usize, set: &[usize]) -> f64 {
    set.iter()
        .filter(|&&j| j != i)
        .map(|&j| 2.0 - pair[i][j])
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
        .unwrap_or(0.0)
}

/// Total relevance plus `1/k` times the summed dissimilarity of each
/// member to the rest of `set`.
pub fn diverse_objective(rel: &[f64], pair: &[Vec<f64>], set: &[usize], k: usize) -> f64 {
    let r: f64 = set.iter().map(|&i| rel[i]).sum();
    let d: f64 = set.iter().map(|&i| dissimilarity(pair, i, set)).sum();
    r + d / k.max(1) as f64
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k.min(n));
    let mut c: u64 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u64) / (i + 1) as u64;
        if c > EXACT_SUBSET_LIMIT {
            return c;
        }
    }
    c
}

/// Best `k`-subset of candidates with relevance `rel` and pairwise
/// similarity `pair`: exact when there are few enough subsets, greedy
/// otherwise. Returns (members ascending, objective, exact).
pub fn select_diverse(rel: &[f64], pair: &[Vec<f64>], k: usize) -> (Vec<usize>, f64, bool) {
    let n = rel.len();
    let k = k.min(n);
    if k == 0 {
        return (Vec::new(), 0.0, true);
    }
    if binomial(n, k) <= EXACT_SUBSET_LIMIT {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let v = diverse_objective(rel, pair, &comb, k);
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((comb.clone(), v));
            }
            // Advance to the next combination in lexicographic order.
            let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
                break;
            };
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
        let (set, v) = best.expect("at least one subset");
        return (set, v, true);
    }
    let mut set: Vec<usize> = Vec::new();
    while set.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..n).filter(|c| !set.contains(c)) {
            let mut trial = set.clone();
            trial.push(c);
            let v = diverse_objective(rel, pair, &trial, k);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((c, v));
            }
        }
        set.push(best.expect("candidate left").0);
    }
    set.sort_unstable();
    let v = diverse_objective(rel, pair, &set, k);
    (set, v, false)
}
