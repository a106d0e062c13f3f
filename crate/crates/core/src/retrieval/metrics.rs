use serde::{Deserialize, Serialize};

use super::{DocType, KnowledgeBase, RetrievalError, RetrievalParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub text: String,
    pub doc_type: DocType,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub k: usize,
    pub queries: usize,
    pub hit_ratio: f64,
    pub map: f64,
}

/// Hit ratio and mean average precision at `k` from per-query
/// correctness of the ranked hits. Missing hits count as wrong.
pub fn hit_and_map(rows: &[Vec<bool>], k: usize) -> (f64, f64) {
    if rows.is_empty() || k == 0 {
        return (0.0, 0.0);
    }
    let mut h = 0.0;
    let mut map = 0.0;
    for row in rows {
        let mut correct = 0usize;
        let mut hq = 0.0;
        let mut mq = 0.0;
        for j in 1..=k {
            if row.get(j - 1).copied().unwrap_or(false) {
                correct += 1;
                hq += 1.0;
                mq += correct as f64 / j as f64;
            }
        }
        h += hq / k as f64;
        map += mq / k as f64;
    }
    (h / rows.len() as f64, map / rows.len() as f64)
}

/// Retrieve `params.k` hits per query and score them against the
/// query's category.
pub fn evaluate(
    kb: &KnowledgeBase,
    queries: &[EvalQuery],
    params: &RetrievalParams,
) -> Result<RetrievalMetrics, RetrievalError> {
    let rows = queries
        .iter()
        .map(|q| {
            let sel = kb.retrieve(&q.text, q.doc_type, params)?;
            Ok(sel
                .hits
                .iter()
                .map(|h| kb.get(&h.id).is_some_and(|d| d.category == q.category))
                .collect())
        })
        .collect::<Result<Vec<Vec<bool>>, RetrievalError>>()?;
    let (hit_ratio, map) = hit_and_map(&rows, params.k);
    Ok(RetrievalMetrics {
        k: params.k,
        queries: queries.len(),
        hit_ratio,
        map,
    })
}
