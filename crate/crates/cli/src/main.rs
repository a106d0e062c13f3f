mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rtlopt_core::analysis::{analyze, build_instance_tree};
use rtlopt_core::frontend::{parse, print, DesignAst};
use rtlopt_core::partition::{partition, CostPredictor};
use rtlopt_core::pipeline::{
    bench_files, collect_cases, pick_top, read_case, render_table, run_pipeline, BenchReport,
    CaseInput, CaseStatus, TableStyle,
};
use rtlopt_core::retrieval::{evaluate, DocType, EvalQuery};
use rtlopt_core::verify::{
    check_equivalence, flatten, fuzz_filter, verify_candidate, Method, VerifyConfig,
};

use config::ConfigArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit code 2.
    Config(String),
    /// Input or per-case failure: exit code 1.
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "rtlopt", version, about = "Verilog RTL optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Short,
    Long,
}

impl From<Style> for TableStyle {
    fn from(s: Style) -> TableStyle {
        match s {
            Style::Short => TableStyle::Short,
            Style::Long => TableStyle::Long,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Exhaustive,
    Fuzz,
    Seq,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a design and print it back in canonical form
    Parse {
        file: PathBuf,
        /// Print the syntax tree as JSON
        #[arg(long)]
        json: bool,
    },
    /// Report optimization patterns for each module
    Analyze {
        file: PathBuf,
        /// Only this module
        #[arg(long)]
        module: Option<String>,
    },
    /// Build the instance tree and partition it
    Partition {
        file: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Query the knowledge base
    Retrieve {
        /// Query text
        #[arg(long, conflicts_with = "query_file")]
        query: Option<String>,
        /// Read the query text from a file
        #[arg(long)]
        query_file: Option<PathBuf>,
        /// Document type to rank
        #[arg(long = "type", default_value = "code")]
        doc_type: String,
        /// Follow links through these types after the first, e.g. code,algorithm
        #[arg(long, value_delimiter = ',')]
        join: Vec<String>,
        /// JSON-lines file of {text, doc_type, category}; prints H@k and MAP@k
        #[arg(long, conflicts_with_all = ["query", "query_file"])]
        eval: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the full optimization flow
    Optimize {
        /// Verilog files or directories of .v files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the JSON results here instead of stdout
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Check two designs for equivalence
    Verify {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        top: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        #[arg(long, default_value_t = 1000)]
        vectors: u64,
        #[arg(long, default_value_t = 64)]
        cycles: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Optimize a corpus and tabulate before/after metrics
    Bench {
        corpus: PathBuf,
        /// Write the JSON report here
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, value_enum, default_value = "short")]
        style: Style,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render a saved bench report as a table
    Report {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "short")]
        style: Style,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn load_design(path: &Path) -> Result<DesignAst, CliError> {
    parse(&read(path)?, &path.display().to_string()).map_err(|e| CliError::Failed(e.to_string()))
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failed(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn doc_type(name: &str) -> Result<DocType, CliError> {
    DocType::from_name(name).ok_or_else(|| CliError::Config(format!("unknown document type `{name}`")))
}

fn cmd_parse(file: &Path, json: bool) -> CliResult {
    let d = load_design(file)?;
    if json {
        emit(&d.modules);
    } else {
        print!("{}", print(&d));
    }
    Ok(())
}

fn cmd_analyze(file: &Path, module: Option<&str>) -> CliResult {
    let d = load_design(file)?;
    let picked: Vec<_> = d
        .modules
        .iter()
        .filter(|m| module.is_none_or(|n| m.name == n))
        .map(analyze)
        .collect();
    if picked.is_empty() {
        return Err(CliError::Failed(format!("no module `{}`", module.unwrap_or_default())));
    }
    emit(&picked);
    Ok(())
}

fn cmd_partition(file: &Path, cfg: &ConfigArgs) -> CliResult {
    let c = cfg.build()?;
    let d = load_design(file)?;
    let top = pick_top(&d, c.top.as_deref()).map_err(CliError::Failed)?;
    let tree = build_instance_tree(&d, &top, &CostPredictor::default())
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let p = &c.partition;
    let plan = partition(&tree, p.lambda, p.n_min, p.n_max, p.workers).map_err(|e| CliError::Config(e.to_string()))?;
    emit(&serde_json::json!({ "top": top, "tree": tree, "plan": plan }));
    Ok(())
}

fn cmd_retrieve(
    query: Option<&str>,
    query_file: Option<&Path>,
    ty: &str,
    join: &[String],
    eval: Option<&Path>,
    cfg: &ConfigArgs,
) -> CliResult {
    let c = cfg.build()?;
    let kb = c.retrieval.knowledge_base().map_err(|e| CliError::Config(e.to_string()))?;
    let params = c.retrieval.params();
    let failed = |e: rtlopt_core::retrieval::RetrievalError| CliError::Failed(e.to_string());
    if let Some(path) = eval {
        let queries = read(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<EvalQuery>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        emit(&evaluate(&kb, &queries, &params).map_err(failed)?);
        return Ok(());
    }
    let text = match (query, query_file) {
        (Some(q), _) => q.to_string(),
        (None, Some(p)) => read(p)?,
        (None, None) => return Err(CliError::Config("one of --query, --query-file or --eval is required".into())),
    };
    let first = doc_type(ty)?;
    let describe = |id: &str, score: f64, rank: usize| {
        let d = kb.get(id).expect("known id");
        serde_json::json!({
            "rank": rank, "id": id, "score": score,
            "type": d.doc_type.name(), "category": d.category, "text": d.text,
        })
    };
    if join.is_empty() {
        let sel = kb.retrieve(&text, first, &params).map_err(failed)?;
        let hits: Vec<_> = sel.hits.iter().map(|h| describe(&h.id, h.score, h.rank)).collect();
        emit(&serde_json::json!({ "objective": sel.objective, "exact": sel.exact, "hits": hits }));
    } else {
        let mut path = vec![first];
        for t in join {
            path.push(doc_type(t)?);
        }
        let hits = kb.join_query(&text, &path, params.lambda, params.n).map_err(failed)?;
        let hits: Vec<_> = hits.iter().take(params.k).map(|h| describe(&h.id, h.score, h.rank)).collect();
        emit(&serde_json::json!({ "hits": hits }));
    }
    Ok(())
}

fn gather_inputs(inputs: &[PathBuf]) -> Result<Vec<CaseInput>, CliError> {
    let mut cases = Vec::new();
    for p in inputs {
        let found = if p.is_dir() { collect_cases(p) } else { read_case(p).map(|c| vec![c]) };
        cases.extend(found.map_err(|e| CliError::Failed(e.to_string()))?);
    }
    Ok(cases)
}

fn cmd_optimize(inputs: &[PathBuf], json: Option<&Path>, cfg: &ConfigArgs) -> CliResult {
    let c = cfg.build()?;
    let cases = gather_inputs(inputs)?;
    let results = run_pipeline(&cases, &c).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(dir) = &c.output_dir {
        for r in &results {
            if let Some(text) = &r.optimized {
                write_file(&dir.join(format!("{}.v", r.case)), text)?;
            }
            for (module, trace) in &r.traces {
                write_file(&dir.join(format!("{}.{module}.trace.jsonl", r.case)), trace)?;
            }
        }
    }
    let text = serde_json::to_string_pretty(&results).expect("serializable");
    match json {
        Some(p) => write_file(p, &(text + "\n"))?,
        None => println!("{text}"),
    }
    for r in &results {
        log::info!("{}: {:?}, {} patches", r.case, r.status, r.patches.len());
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| r.status == CaseStatus::Failed)
        .map(|r| r.case.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("failed cases: {}", failed.join(", "))))
    }
}

fn cmd_verify(
    golden: &Path,
    candidate: &Path,
    top: Option<&str>,
    mode: Mode,
    cfg: VerifyConfig,
) -> CliResult {
    if cfg.vectors == 0 || cfg.cycles == 0 {
        return Err(CliError::Config("--vectors and --cycles must be positive".into()));
    }
    let a = load_design(golden)?;
    let b = load_design(candidate)?;
    let top = pick_top(&a, top).map_err(CliError::Failed)?;
    let fa = flatten(&a, &top).map_err(|e| CliError::Failed(e.to_string()))?;
    let fb = flatten(&b, &top).map_err(|e| CliError::Failed(e.to_string()))?;
    let failed = |e: rtlopt_core::verify::VerifyError| CliError::Failed(e.to_string());
    let (value, passed) = match mode {
        Mode::Auto => {
            let c = verify_candidate(&fa, &fb, &cfg).map_err(failed)?;
            (serde_json::to_value(&c), c.passed())
        }
        Mode::Fuzz => {
            let o = fuzz_filter(&fa, &fb, cfg.vectors, cfg.seed).map_err(failed)?;
            (serde_json::to_value(&o), o.passed())
        }
        Mode::Exhaustive | Mode::Seq => {
            let (method, budget) = match mode {
                Mode::Exhaustive => (Method::Exhaustive, 0),
                _ => (Method::BoundedSequential, cfg.cycles),
            };
            let v = check_equivalence(&fa, &fb, method, budget, cfg.seed).map_err(failed)?;
            (serde_json::to_value(&v), v.passed())
        }
    };
    emit(&value.expect("serializable"));
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed("designs differ".into()))
    }
}

fn cmd_bench(corpus: &Path, json: Option<&Path>, format: Format, style: Style, cfg: &ConfigArgs) -> CliResult {
    if cfg.seed.is_none() {
        return Err(CliError::Config("bench requires --seed".into()));
    }
    let c = cfg.build()?;
    let cases = collect_cases(corpus).map_err(|e| CliError::Config(e.to_string()))?;
    let report = bench_files(&cases, &c).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(p) = json {
        write_file(p, &(report.to_json() + "\n"))?;
    }
    match format {
        Format::Table => print!("{}", render_table(&report, style.into())),
        Format::Json => println!("{}", report.to_json()),
    }
    let failed = report.rows.iter().filter(|r| r.status == CaseStatus::Failed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failed} cases failed")))
    }
}

fn cmd_report(file: &Path, style: Style) -> CliResult {
    let report: BenchReport =
        serde_json::from_str(&read(file)?).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
    print!("{}", render_table(&report, style.into()));
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Parse { file, json } => cmd_parse(&file, json),
        Command::Analyze { file, module } => cmd_analyze(&file, module.as_deref()),
        Command::Partition { file, cfg } => cmd_partition(&file, &cfg),
        Command::Retrieve {
            query,
            query_file,
            doc_type,
            join,
            eval,
            cfg,
        } => cmd_retrieve(query.as_deref(), query_file.as_deref(), &doc_type, &join, eval.as_deref(), &cfg),
        Command::Optimize { inputs, json, cfg } => cmd_optimize(&inputs, json.as_deref(), &cfg),
        Command::Verify {
            golden,
            candidate,
            top,
            mode,
            vectors,
            cycles,
            seed,
        } => cmd_verify(&golden, &candidate, top.as_deref(), mode, VerifyConfig { vectors, cycles, seed }),
        Command::Bench {
            corpus,
            json,
            format,
            style,
            cfg,
        } => cmd_bench(&corpus, json.as_deref(), format, style, &cfg),
        Command::Report { file, style } => cmd_report(&file, style),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Config(m) | CliError::Failed(m)) = &e;
            eprintln!("rtlopt: {m}");
            ExitCode::from(e.code())
        }
    }
}
