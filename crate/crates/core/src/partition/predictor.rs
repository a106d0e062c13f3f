use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FeatureVector, PartitionError};

pub const RIDGE: f64 = 1e-6;

/// Linear model of synthesis time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPredictor {
    pub weights: BTreeMap<String, f64>,
    pub intercept: f64,
}

impl Default for CostPredictor {
    /// Untrained proxy: time grows with operator count, width and
    /// arithmetic complexity.
    fn default() -> Self {
        let mut weights = BTreeMap::new();
        for op in [
            "not", "lnot", "redand", "redor", "redxor", "neg", "add", "sub", "mul", "div", "mod",
            "shl", "shr", "and", "or", "xor", "land", "lor", "eq", "ne", "lt", "le", "gt", "ge",
            "select", "cond",
        ] {
            let factor = match op {
                "mul" => 8.0,
                "div" | "mod" => 12.0,
                "add" | "sub" | "neg" => 2.0,
                "lt" | "le" | "gt" | "ge" => 1.5,
                _ => 1.0,
            };
            for (b, name) in super::BUCKETS.iter().enumerate() {
                weights.insert(format!("{op}@{name}"), 1e-3 * factor * (b + 1) as f64);
            }
        }
        CostPredictor {
            weights,
            intercept: 0.01,
        }
    }
}

impl CostPredictor {
    pub fn constant(seconds: f64) -> Self {
        CostPredictor {
            weights: BTreeMap::new(),
            intercept: seconds,
        }
    }

    /// Predicted seconds, clamped at zero.
    pub fn predict(&self, v: &FeatureVector) -> f64 {
        let s: f64 = v
            .counts
            .iter()
            .map(|(k, n)| self.weights.get(k).copied().unwrap_or(0.0) * *n as f64)
            .sum();
        (self.intercept + s).max(0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, PartitionError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, PartitionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Least-squares fit with an unpenalized intercept and a small ridge term
/// on the feature weights. Features and targets are centered, so a single
/// sample or all-zero features give the constant mean predictor.
pub fn fit_predictor(samples: &[(FeatureVector, f64)]) -> Result<CostPredictor, PartitionError> {
    if samples.is_empty() {
        return Err(PartitionError::NoSamples);
    }
    let keys: Vec<&String> = samples
        .iter()
        .flat_map(|(v, _)| v.counts.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = samples.len();
    let k = keys.len();
    let y_mean = samples.iter().map(|s| s.1).sum::<f64>() / n as f64;
    if k == 0 {
        return Ok(CostPredictor::constant(y_mean));
    }
    let x = DMatrix::from_fn(n, k, |i, j| samples[i].0.get(keys[j]) as f64);
    let means: Vec<f64> = (0..k).map(|j| x.column(j).mean()).collect();
    let ridge = RIDGE.sqrt();
    let a = DMatrix::from_fn(n + k, k, |i, j| {
        if i < n {
            x[(i, j)] - means[j]
        } else if i - n == j {
            ridge
        } else {
            0.0
        }
    });
    let b = DVector::from_fn(n + k, |i, _| if i < n { samples[i].1 - y_mean } else { 0.0 });
    let w = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| PartitionError::Numeric(e.to_string()))?;
    let intercept = y_mean - (0..k).map(|j| w[j] * means[j]).sum::<f64>();
    Ok(CostPredictor {
        weights: keys.iter().enumerate().map(|(j, key)| ((*key).clone(), w[j])).collect(),
        intercept,
    })
}
