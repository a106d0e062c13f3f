use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// Dimension of the hashed character-trigram vector.
pub const SEMANTIC_DIM: usize = 256;

/// Identifier-like and numeric tokens, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Document frequencies over a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub df: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> CorpusStats {
        let mut stats = CorpusStats::default();
        for t in texts {
            stats.n_docs += 1;
            let mut toks = tokenize(t);
            toks.sort();
            toks.dedup();
            for tok in toks {
                *stats.df.entry(tok).or_default() += 1;
            }
        }
        stats
    }

    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0);
        ((1 + self.n_docs) as f64 / (1 + df) as f64).ln()
    }
}

/// Keyword (sparse TF-IDF) and semantic (dense) views of one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPair {
    pub keyword: BTreeMap<String, f64>,
    pub semantic: Vec<f64>,
}

pub fn tf_idf(text: &str, stats: &CorpusStats) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<String, f64> = BTreeMap::new();
    for tok in tokenize(text) {
        *tf.entry(tok).or_default() += 1.0;
    }
    tf.into_iter()
        .map(|(t, n)| {
            let w = n * stats.idf(&t);
            (t, w)
        })
        .filter(|(_, w)| *w != 0.0)
        .collect()
}

/// Source of the dense semantic vector.
pub trait Embedder: Send + Sync {
    fn semantic(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Normalized histogram of hashed character trigrams.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramEmbedder;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl Embedder for TrigramEmbedder {
    fn semantic(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        Ok(trigram_vector(text))
    }
}

pub fn trigram_vector(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut v = vec![0.0; SEMANTIC_DIM];
    let mut buf = String::new();
    for w in chars.windows(3) {
        buf.clear();
        buf.extend(w);
        v[(fnv1a(buf.as_bytes()) % SEMANTIC_DIM as u64) as usize] += 1.0;
    }
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Client for an embedding service: POST `{"text": ..}`, reply
/// `{"vector": [..]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: String,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

impl Embedder for HttpEmbedder {
    fn semantic(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut resp = ureq::post(&self.endpoint)
            .send_json(EmbedRequest { text })
            .map_err(|e| RetrievalError::Embedder(e.to_string()))?;
        let mut v = resp
            .body_mut()
            .read_json::<EmbedResponse>()
            .map_err(|e| RetrievalError::Embedder(e.to_string()))?
            .vector;
        normalize(&mut v);
        Ok(v)
    }
}

pub fn cosine_sparse(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

pub fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Embed with the built-in trigram embedder.
pub fn embed(text: &str, stats: &CorpusStats) -> EmbeddingPair {
    EmbeddingPair {
        keyword: tf_idf(text, stats),
        semantic: trigram_vector(text),
    }
}

/// `lambda * keyword cosine + (1 - lambda) * semantic cosine + 1`.
pub fn similarity(q: &EmbeddingPair, d: &EmbeddingPair, lambda: f64) -> f64 {
    lambda * cosine_sparse(&q.keyword, &d.keyword)
        + (1.0 - lambda) * cosine_dense(&q.semantic, &d.semantic)
        + 1.0
}
