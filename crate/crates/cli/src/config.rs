use std::path::PathBuf;

use clap::Args;
use rtlopt_core::pipeline::PipelineConfig;

use crate::CliError;

/// Pipeline configuration: a JSON file plus per-field overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub top: Option<String>,
    /// Cost weights JSON file
    #[arg(long)]
    pub weights: Option<PathBuf>,

    #[arg(long, help_heading = "Partition")]
    pub partition_lambda: Option<f64>,
    #[arg(long, help_heading = "Partition")]
    pub n_min: Option<usize>,
    #[arg(long, help_heading = "Partition")]
    pub n_max: Option<usize>,
    #[arg(long, help_heading = "Partition")]
    pub workers: Option<usize>,

    /// Document directory (JSON lines per document type)
    #[arg(long, help_heading = "Retrieval")]
    pub db: Option<PathBuf>,
    #[arg(long, help_heading = "Retrieval")]
    pub retrieval_lambda: Option<f64>,
    /// First-stage candidate count
    #[arg(long, help_heading = "Retrieval")]
    pub retrieval_n: Option<usize>,
    /// Documents kept after re-ranking
    #[arg(long, help_heading = "Retrieval")]
    pub k: Option<usize>,

    #[arg(long, help_heading = "Search")]
    pub lambda_u: Option<f64>,
    #[arg(long, help_heading = "Search")]
    pub gamma_c: Option<f64>,
    #[arg(long, help_heading = "Search")]
    pub balance_k: Option<f64>,
    #[arg(long, help_heading = "Search")]
    pub max_iterations: Option<usize>,
    #[arg(long, help_heading = "Search")]
    pub patience: Option<usize>,
    #[arg(long, help_heading = "Search")]
    pub samples_per_rewrite: Option<usize>,
    #[arg(long, help_heading = "Search")]
    pub branching: Option<usize>,
    /// Rewrite model URL (also RTLOPT_MODEL_ENDPOINT)
    #[arg(long, help_heading = "Search")]
    pub model_endpoint: Option<String>,

    #[arg(long, help_heading = "Verify")]
    pub vectors: Option<u64>,
    #[arg(long, help_heading = "Verify")]
    pub cycles: Option<usize>,
    #[arg(long, help_heading = "Verify")]
    pub seed: Option<u64>,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Cases optimized concurrently
    #[arg(long)]
    pub case_workers: Option<usize>,
    /// Include per-stage wall-clock timings in results
    #[arg(long)]
    pub timings: bool,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

impl ConfigArgs {
    pub fn build(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            // Validated after the overrides are applied.
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => PipelineConfig::default(),
        };
        if self.top.is_some() {
            c.top = self.top.clone();
        }
        if self.weights.is_some() {
            c.weights = self.weights.clone();
        }
        set(&mut c.partition.lambda, &self.partition_lambda);
        set(&mut c.partition.n_min, &self.n_min);
        set(&mut c.partition.n_max, &self.n_max);
        set(&mut c.partition.workers, &self.workers);
        if self.db.is_some() {
            c.retrieval.db = self.db.clone();
        }
        set(&mut c.retrieval.lambda, &self.retrieval_lambda);
        set(&mut c.retrieval.n, &self.retrieval_n);
        set(&mut c.retrieval.k, &self.k);
        set(&mut c.search.lambda_u, &self.lambda_u);
        set(&mut c.search.gamma_c, &self.gamma_c);
        set(&mut c.search.balance_k, &self.balance_k);
        set(&mut c.search.max_iterations, &self.max_iterations);
        set(&mut c.search.patience, &self.patience);
        set(&mut c.search.samples_per_rewrite, &self.samples_per_rewrite);
        set(&mut c.search.branching, &self.branching);
        if self.model_endpoint.is_some() {
            c.search.model_endpoint = self.model_endpoint.clone();
        }
        set(&mut c.verify.vectors, &self.vectors);
        set(&mut c.verify.cycles, &self.cycles);
        set(&mut c.verify.seed, &self.seed);
        if self.output_dir.is_some() {
            c.output_dir = self.output_dir.clone();
        }
        set(&mut c.case_workers, &self.case_workers);
        c.report_timings |= self.timings;
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        c.cost_weights().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}
