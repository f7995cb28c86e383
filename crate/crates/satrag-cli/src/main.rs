//! Command-line front end: ingest documents into the normalized corpus,
//! lift them into the composite value index, answer questions with
//! provenance, score QA sets, and generate synthetic QA datasets.
//!
//! One TOML config file drives every subcommand; command-line flags
//! override file values. Exit codes: 0 success, 1 input/config error,
//! 2 provider error, 3 validation failure.

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use satrag::config::{AppConfig, ProviderMode};
use satrag::corpus::{save_cell_groups, Corpus};
use satrag::dataset_gen::{
    enrich_entity, generate_qa, paraphrase_leaky_passages, Association, DatasetGenError,
};
use satrag::eval::{
    chunk_prompt, load_qa, render_report, run_ablation_sweep, run_eval, EvalContext, MetricReport,
};
use satrag::fusion::{assemble_prompt, build_package, generate_answer, FusionConfig, FusionError};
use satrag::ids::qualified_passage_id;
use satrag::ingest::{parse_document, DocumentFormat};
use satrag::providers::{
    Completer, DefaultSubjectExtractor, EchoCompleter, Embedder, FormulaicValidator, MockEmbedder,
    PlaceholderEntityCompleter,
};
use satrag::retrieval::{retrieve, KeywordAnalyzer, Query, RetrievalConfig, RetrievalMode};
use satrag::sat_graph::{build_graph, lift_cell_group, load_graph, save_graph, validate_graph, LiftError};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_PROVIDER: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// An error carrying the process exit code it maps to.
struct CliError {
    code: u8,
    error: anyhow::Error,
}

impl CliError {
    fn input(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_INPUT, error: anyhow::anyhow!("{message}") }
    }

    fn provider(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_PROVIDER, error: anyhow::anyhow!("{message}") }
    }

    fn validation(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_VALIDATION, error: anyhow::anyhow!("{message}") }
    }
}

fn gen_error(e: DatasetGenError) -> CliError {
    match e {
        DatasetGenError::InsufficientCandidates { .. } => CliError::input(e.to_string()),
        _ => CliError::provider(e.to_string()),
    }
}

fn fusion_error(e: FusionError) -> CliError {
    match e {
        FusionError::Provider(p) => CliError::provider(p.to_string()),
        FusionError::EmptyEvidence => CliError::input(e.to_string()),
    }
}

/// Table-centric retrieval engine: normalize documents with tiered table
/// headers, index every cell under its subject/temporal/attribute
/// context, and answer value lookups with exact provenance.
#[derive(Parser)]
#[command(name = "satrag", version, about, propagate_version = true)]
struct Cli {
    /// TOML config file; `./satrag.toml` is used when present, built-in
    /// defaults otherwise.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Echo the effective config and per-stage diagnostics (repeatable).
    #[arg(long, short, global = true, action = ArgAction::Count)]
    verbose: u8,

    /// Seed override for dataset generation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Composite-graph navigation (the default engine).
    SatGraph,
    /// Dense similarity over passages and table rows.
    ChunkBaseline,
}

impl From<ModeArg> for RetrievalMode {
    fn from(m: ModeArg) -> RetrievalMode {
        match m {
            ModeArg::SatGraph => RetrievalMode::SatGraph,
            ModeArg::ChunkBaseline => RetrievalMode::ChunkBaseline,
        }
    }
}

/// Retrieval knobs shared by `query` and `eval`; every field of the
/// retrieval config is reachable here and overrides the file value.
#[derive(Args, Clone, Default)]
struct RetrievalFlags {
    /// Number of results to return.
    #[arg(long)]
    top_k: Option<usize>,

    /// Minimum cosine for a query hint to resolve to a node, in [0, 1].
    #[arg(long)]
    similarity_threshold: Option<f64>,

    /// Sibling reach of structural neighbor expansion.
    #[arg(long)]
    expansion_radius: Option<usize>,

    /// Disable structural neighbor expansion.
    #[arg(long)]
    no_sne: bool,

    /// Disable passage fusion (facts only in the evidence package).
    #[arg(long)]
    no_fusion: bool,

    /// Retrieval mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

impl RetrievalFlags {
    fn apply(&self, cfg: &mut RetrievalConfig) {
        if let Some(k) = self.top_k {
            cfg.top_k = k;
        }
        if let Some(t) = self.similarity_threshold {
            cfg.similarity_threshold = t;
        }
        if let Some(r) = self.expansion_radius {
            cfg.expansion_radius = r;
        }
        if self.no_sne {
            cfg.enable_sne = false;
        }
        if self.no_fusion {
            cfg.enable_fusion = false;
        }
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a directory of Markdown (.md) / grid-JSON (.json) documents
    /// into the corpus and cell-group stores.
    Ingest {
        /// Directory holding the source documents.
        input_dir: PathBuf,
    },

    /// Lift the ingested corpus into the composite graph, validate its
    /// invariants, and persist the index.
    Build,

    /// Answer one question against the built index.
    Query {
        /// The question text.
        question: String,

        /// Contextual flag: 0 = tables suffice, 1 = attach passages.
        #[arg(long, default_value_t = 0)]
        flag: u8,

        #[command(flatten)]
        retrieval: RetrievalFlags,
    },

    /// Score a QA set (line-delimited JSON records) against the index.
    Eval {
        /// QA set file.
        qa_file: PathBuf,

        /// Evaluate all four engine settings (full, w/o SAT, w/o SNE,
        /// w/o fusion) instead of one report.
        #[arg(long)]
        ablation: bool,

        /// Where to write the JSON report (defaults next to the QA file).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,

        /// Comma-separated ranking cutoffs, e.g. 1,3,5,10.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,

        /// Skip answer generation; report retrieval metrics only.
        #[arg(long)]
        no_generate: bool,

        #[command(flatten)]
        retrieval: RetrievalFlags,
    },

    /// Generate a synthetic QA dataset from the ingested corpus.
    GenQa {
        /// Output directory for the QA files and generation report.
        out_dir: PathBuf,

        /// Candidate-pair association rule: same-date, same-subject,
        /// same-entity, or random.
        #[arg(long)]
        association: Option<Association>,

        /// Number of candidate pairs to draw.
        #[arg(long)]
        n_pairs: Option<usize>,

        /// Cells per candidate pair (minimum 2).
        #[arg(long)]
        degree: Option<usize>,

        /// Passages attached to each context-required record.
        #[arg(long)]
        window: Option<usize>,

        /// Rewrite passages that quote table values verbatim before
        /// drawing pairs.
        #[arg(long)]
        paraphrase: bool,
    },
}

/// The model-facing backends a run uses, selected by provider mode.
struct Backends {
    embedder: Box<dyn Embedder>,
    /// Answers questions from the assembled evidence prompt.
    answerer: Option<Box<dyn Completer>>,
    /// Extracts the document entity at ingest time.
    enricher: Option<Box<dyn Completer>>,
    /// Judges candidate cell pairs during dataset generation.
    validator: Option<Box<dyn Completer>>,
}

fn build_backends(cfg: &AppConfig) -> Result<Backends, CliError> {
    match cfg.providers.mode {
        ProviderMode::Mock => Ok(Backends {
            embedder: Box::new(MockEmbedder::default()),
            answerer: Some(Box::new(EchoCompleter)),
            enricher: Some(Box::new(PlaceholderEntityCompleter)),
            validator: Some(Box::new(FormulaicValidator)),
        }),
        ProviderMode::Http => {
            let embedding = cfg.providers.embedding.as_ref().ok_or_else(|| {
                CliError::input("providers.mode = \"http\" requires a [providers.embedding] section")
            })?;
            let embedder = embedding
                .build()
                .map_err(|e| CliError::provider(e.to_string()))?;
            let mut completers: Vec<Option<Box<dyn Completer>>> = Vec::new();
            for _ in 0..3 {
                completers.push(match &cfg.providers.completion {
                    Some(settings) => Some(Box::new(
                        settings
                            .build()
                            .map_err(|e| CliError::provider(e.to_string()))?,
                    )),
                    None => None,
                });
            }
            let validator = completers.pop().expect("three built");
            let enricher = completers.pop().expect("two left");
            let answerer = completers.pop().expect("one left");
            Ok(Backends { embedder: Box::new(embedder), answerer, enricher, validator })
        }
    }
}

fn load_config(cli: &Cli) -> Result<AppConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => AppConfig::load(path).map_err(|e| CliError::input(e.to_string()))?,
        None => {
            let default_path = Path::new("satrag.toml");
            if default_path.exists() {
                AppConfig::load(default_path).map_err(|e| CliError::input(e.to_string()))?
            } else {
                AppConfig::default()
            }
        }
    };
    cfg.verbosity = cfg.verbosity.max(cli.verbose);
    if let Some(seed) = cli.seed {
        cfg.dataset_gen.seed = seed;
    }
    Ok(cfg)
}

/// Validate the post-override config, echo it in verbose mode, and
/// construct the provider backends.
fn finalize(cfg: &AppConfig) -> Result<Backends, CliError> {
    cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
    if cfg.verbosity >= 1 {
        match cfg.to_toml() {
            Ok(rendered) => eprintln!("effective configuration:\n{rendered}"),
            Err(e) => eprintln!("effective configuration unavailable: {e}"),
        }
    }
    build_backends(cfg)
}

fn ensure_parent_dir(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::input(format!("{}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Cmd::Ingest { ref input_dir } => {
            let backends = finalize(&cfg)?;
            cmd_ingest(&cfg, &backends, input_dir)
        }
        Cmd::Build => {
            let backends = finalize(&cfg)?;
            cmd_build(&cfg, &backends)
        }
        Cmd::Query { ref question, flag, ref retrieval } => {
            retrieval.apply(&mut cfg.retrieval);
            let backends = finalize(&cfg)?;
            cmd_query(&cfg, &backends, question, flag)
        }
        Cmd::Eval {
            ref qa_file,
            ablation,
            ref report,
            ref cutoffs,
            no_generate,
            ref retrieval,
        } => {
            retrieval.apply(&mut cfg.retrieval);
            if let Some(c) = cutoffs {
                cfg.eval.cutoffs = c.clone();
            }
            if no_generate {
                cfg.eval.generate = false;
            }
            let backends = finalize(&cfg)?;
            cmd_eval(&cfg, &backends, qa_file, ablation, report.as_deref())
        }
        Cmd::GenQa {
            ref out_dir,
            association,
            n_pairs,
            degree,
            window,
            paraphrase,
        } => {
            if let Some(a) = association {
                cfg.dataset_gen.association = a;
            }
            if let Some(n) = n_pairs {
                cfg.dataset_gen.n_pairs = n;
            }
            if let Some(d) = degree {
                cfg.dataset_gen.degree = d;
            }
            if let Some(w) = window {
                cfg.dataset_gen.window = w;
            }
            if paraphrase {
                cfg.dataset_gen.paraphrase = true;
            }
            let backends = finalize(&cfg)?;
            cmd_gen_qa(&cfg, &backends, out_dir)
        }
    }
}

fn cmd_ingest(cfg: &AppConfig, backends: &Backends, input_dir: &Path) -> Result<(), CliError> {
    let entries = std::fs::read_dir(input_dir)
        .map_err(|e| CliError::input(format!("{}: {e}", input_dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let mut corpus = Corpus::new();
    let mut failures: Vec<String> = Vec::new();
    let mut processed: Vec<String> = Vec::new();
    let mut eligible = 0usize;

    for path in &files {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        let format = match ext.as_deref() {
            Some("md") | Some("markdown") => DocumentFormat::Markdown,
            Some("json") => DocumentFormat::StructuredGrid,
            _ => continue,
        };
        eligible += 1;
        let raw = match std::fs::read_to_string(path) {
            Ok(raw) => raw,
            Err(e) => {
                failures.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let parsed = match parse_document(&raw, format) {
            Ok(parsed) => parsed,
            Err(e) => {
                failures.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        if cfg.verbosity >= 1 {
            for w in &parsed.warnings {
                eprintln!("warning: {}: {} ({})", path.display(), w.detail, w.context);
            }
        }
        let doc = parsed.document;
        let entity = match &backends.enricher {
            Some(llm) => Some(
                enrich_entity(&doc, llm.as_ref()).map_err(gen_error)?,
            ),
            None => None,
        };
        let doc_id = doc.doc_id.clone();
        match corpus.add_document(doc, entity.as_deref()) {
            Ok(()) => processed.push(doc_id),
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }

    if eligible == 0 {
        return Err(CliError::input(format!(
            "no inputs: {} contains no .md or .json files",
            input_dir.display()
        )));
    }

    let groups = corpus.cell_groups(cfg.snippet_budget);
    let mut cells_per_doc: BTreeMap<&str, usize> = BTreeMap::new();
    for cg in &groups {
        *cells_per_doc.entry(cg.doc_meta.doc_id.as_str()).or_default() += 1;
    }
    for doc_id in &processed {
        let doc = corpus.document(doc_id).expect("just inserted");
        let cells = cells_per_doc.get(doc_id.as_str()).copied().unwrap_or(0);
        match corpus.entity(doc_id) {
            Some(entity) => println!(
                "{doc_id}: {} tables, {cells} cells, entity {entity}",
                doc.tables.len()
            ),
            None => println!("{doc_id}: {} tables, {cells} cells", doc.tables.len()),
        }
    }

    if !corpus.is_empty() {
        ensure_parent_dir(&cfg.corpus_path)?;
        corpus
            .save(&cfg.corpus_path)
            .map_err(|e| CliError::input(e.to_string()))?;
        ensure_parent_dir(&cfg.cell_groups_path)?;
        save_cell_groups(&groups, &cfg.cell_groups_path)
            .map_err(|e| CliError::input(e.to_string()))?;
        println!(
            "ingested {} documents, {} tables, {} cells",
            corpus.len(),
            corpus.table_count(),
            groups.len()
        );
        println!("corpus -> {}", cfg.corpus_path.display());
        println!("cell groups -> {}", cfg.cell_groups_path.display());
    }

    if !failures.is_empty() {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        return Err(CliError::input(format!(
            "{} of {} input file(s) malformed, {} processed",
            failures.len(),
            eligible,
            processed.len()
        )));
    }
    Ok(())
}

fn cmd_build(cfg: &AppConfig, _backends: &Backends) -> Result<(), CliError> {
    let corpus = Corpus::load(&cfg.corpus_path).map_err(|e| {
        CliError::input(format!(
            "cannot load corpus {}: {e} (run `satrag ingest` first)",
            cfg.corpus_path.display()
        ))
    })?;
    let groups = corpus.cell_groups(cfg.snippet_budget);
    let extractor = DefaultSubjectExtractor;

    let mut facts = Vec::with_capacity(groups.len());
    let mut skipped = 0usize;
    for cg in &groups {
        match lift_cell_group(cg, &extractor) {
            Ok(fact) => facts.push(fact),
            Err(LiftError::NoAttribute(cell)) => {
                skipped += 1;
                if cfg.verbosity >= 1 {
                    eprintln!("no attribute label remains for cell {cell}; skipped");
                }
            }
            Err(LiftError::Provider(e)) => {
                return Err(CliError::provider(e.to_string()));
            }
        }
    }

    let graph = build_graph(&facts);
    let known_cells = corpus.cell_ids();
    let report = validate_graph(&graph, Some(&known_cells));
    if !report.is_clean() {
        eprintln!("{}", report.summary());
        return Err(CliError::validation(
            "graph failed validation; index not written",
        ));
    }

    ensure_parent_dir(&cfg.index_path)?;
    save_graph(&graph, &cfg.index_path).map_err(|e| CliError::input(e.to_string()))?;

    println!(
        "graph: {} subjects, {} temporals, {} attributes, {} leaves",
        graph.subjects.len(),
        graph.temporals.len(),
        graph.attributes.len(),
        graph.leaves.len()
    );
    if skipped > 0 {
        println!("skipped {skipped} cell(s) with no attribute label");
    }
    println!("validation: clean");
    println!("index -> {}", cfg.index_path.display());
    Ok(())
}

fn load_index(cfg: &AppConfig) -> Result<(satrag::SatGraph, Corpus), CliError> {
    let graph = load_graph(&cfg.index_path).map_err(|e| {
        CliError::input(format!(
            "cannot load index {}: {e} (run `satrag build` first)",
            cfg.index_path.display()
        ))
    })?;
    let corpus = Corpus::load(&cfg.corpus_path).map_err(|e| {
        CliError::input(format!(
            "cannot load corpus {}: {e} (run `satrag ingest` first)",
            cfg.corpus_path.display()
        ))
    })?;
    Ok((graph, corpus))
}

fn cmd_query(
    cfg: &AppConfig,
    backends: &Backends,
    question: &str,
    flag: u8,
) -> Result<(), CliError> {
    let (graph, corpus) = load_index(cfg)?;
    let query = Query { text: question.to_string(), contextual_flag: flag };
    let analyzer = KeywordAnalyzer;
    let result = retrieve(
        &graph,
        Some(&corpus),
        &query,
        &cfg.retrieval,
        backends.embedder.as_ref(),
        &analyzer,
    );

    if cfg.verbosity >= 1 {
        match serde_json::to_string_pretty(&result.diagnostics) {
            Ok(diag) => eprintln!("diagnostics:\n{diag}"),
            Err(e) => eprintln!("diagnostics unavailable: {e}"),
        }
    }

    if cfg.retrieval.mode == RetrievalMode::ChunkBaseline {
        if result.chunks.is_empty() {
            println!("no evidence retrieved");
            return Ok(());
        }
        for (i, chunk) in result.chunks.iter().enumerate() {
            println!("[F{}] {:.4}  {}  ({})", i + 1, chunk.score, chunk.text, chunk.chunk_id);
        }
        match &backends.answerer {
            Some(llm) => {
                let prompt = chunk_prompt(&result.chunks, &query);
                let response = llm
                    .complete(&prompt)
                    .map_err(|e| CliError::provider(e.to_string()))?;
                println!("\nanswer:\n{response}");
            }
            None => println!("\nno completion provider configured; the evidence above is the answer"),
        }
        return Ok(());
    }

    if result.evidence.is_empty() {
        for note in &result.diagnostics.notes {
            eprintln!("note: {note}");
        }
        println!("no evidence retrieved");
        return Ok(());
    }

    let fusion_cfg = FusionConfig {
        enabled: cfg.fusion.enabled && cfg.retrieval.enable_fusion,
        ..cfg.fusion.clone()
    };
    let pkg = build_package(
        &graph,
        Some(&corpus),
        &result.evidence,
        &query,
        &fusion_cfg,
        backends.embedder.as_ref(),
    );
    for (i, fact) in pkg.facts.iter().enumerate() {
        let hops = if fact.source.hops > 0 {
            format!(", {} hop(s) out", fact.source.hops)
        } else {
            String::new()
        };
        println!(
            "[F{}] {:.4}  {}  (cell {}{hops})",
            i + 1,
            fact.source.score,
            fact.statement,
            fact.source.cell_id,
        );
    }
    for (i, (passage, score)) in pkg.passages.iter().enumerate() {
        println!(
            "[P{}] {score:.4}  {}  (passage {})",
            i + 1,
            passage.text,
            qualified_passage_id(&passage.doc_id, &passage.passage_id),
        );
    }

    match &backends.answerer {
        Some(llm) => {
            let prompt = assemble_prompt(&pkg, fusion_cfg.prompt_budget).map_err(fusion_error)?;
            let generated = generate_answer(&pkg, &prompt, llm.as_ref()).map_err(fusion_error)?;
            println!("\nanswer:\n{}", generated.answer.text);
            if cfg.verbosity >= 1 {
                for d in &generated.diagnostics {
                    eprintln!("note: {d}");
                }
                if !generated.answer.cited_cell_ids.is_empty() {
                    eprintln!("cited cells: {:?}", generated.answer.cited_cell_ids);
                }
                if !generated.answer.cited_passage_ids.is_empty() {
                    eprintln!("cited passages: {:?}", generated.answer.cited_passage_ids);
                }
            }
        }
        None => println!("\nno completion provider configured; the evidence above is the answer"),
    }
    Ok(())
}

fn cmd_eval(
    cfg: &AppConfig,
    backends: &Backends,
    qa_file: &Path,
    ablation: bool,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let (graph, corpus) = load_index(cfg)?;
    let qa = load_qa(qa_file).map_err(|e| CliError::input(e.to_string()))?;
    if qa.is_empty() {
        return Err(CliError::input(format!(
            "{}: QA set holds no records",
            qa_file.display()
        )));
    }

    let analyzer = KeywordAnalyzer;
    let ctx = EvalContext {
        graph: &graph,
        corpus: Some(&corpus),
        embedder: backends.embedder.as_ref(),
        completer: backends.answerer.as_deref(),
        analyzer: &analyzer,
    };

    let (rendered, json, default_name) = if ablation {
        let sweep = run_ablation_sweep(&ctx, &qa, &cfg.retrieval, &cfg.fusion, &cfg.eval);
        let mut text = String::new();
        for (setting, report) in &sweep {
            text.push_str(&format!("== {} ==\n{}\n", setting.label(), render_report(report)));
        }
        let entries: Vec<serde_json::Value> = sweep
            .iter()
            .map(|(setting, report)| {
                serde_json::json!({ "setting": setting, "report": report })
            })
            .collect();
        (text, serde_json::json!(entries), "ablation.json")
    } else {
        let report: MetricReport = run_eval(&ctx, &qa, &cfg.retrieval, &cfg.fusion, &cfg.eval);
        let json = serde_json::to_value(&report)
            .map_err(|e| CliError::input(format!("cannot serialize report: {e}")))?;
        (render_report(&report), json, "report.json")
    };

    print!("{rendered}");

    let out_path: PathBuf = match report_path {
        Some(p) => p.to_path_buf(),
        None => qa_file.with_extension(default_name),
    };
    ensure_parent_dir(&out_path)?;
    let body = serde_json::to_string_pretty(&json)
        .map_err(|e| CliError::input(format!("cannot serialize report: {e}")))?;
    std::fs::write(&out_path, body)
        .map_err(|e| CliError::input(format!("{}: {e}", out_path.display())))?;
    println!("report -> {}", out_path.display());
    Ok(())
}

fn cmd_gen_qa(cfg: &AppConfig, backends: &Backends, out_dir: &Path) -> Result<(), CliError> {
    let corpus = Corpus::load(&cfg.corpus_path).map_err(|e| {
        CliError::input(format!(
            "cannot load corpus {}: {e} (run `satrag ingest` first)",
            cfg.corpus_path.display()
        ))
    })?;
    let validator = backends.validator.as_ref().ok_or_else(|| {
        CliError::input(
            "gen-qa needs a completion provider: configure [providers.completion] \
             or set providers.mode = \"mock\"",
        )
    })?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;

    let mut working = corpus;
    if cfg.dataset_gen.paraphrase {
        let llm = backends.answerer.as_ref().ok_or_else(|| {
            CliError::input("passage paraphrasing needs a completion provider")
        })?;
        let (rebuilt, rewritten) =
            paraphrase_leaky_passages(&working, llm.as_ref()).map_err(gen_error)?;
        working = rebuilt;
        let path = out_dir.join("corpus_paraphrased.jsonl");
        working
            .save(&path)
            .map_err(|e| CliError::input(e.to_string()))?;
        println!("paraphrased {rewritten} value-quoting passage(s) -> {}", path.display());
    }

    let outcome = generate_qa(&working, &cfg.dataset_gen, validator.as_ref()).map_err(gen_error)?;

    let f0_path = out_dir.join("qa_f0.jsonl");
    let f1_path = out_dir.join("qa_f1.jsonl");
    satrag::eval::save_qa(&outcome.f0, &f0_path).map_err(|e| CliError::input(e.to_string()))?;
    satrag::eval::save_qa(&outcome.f1, &f1_path).map_err(|e| CliError::input(e.to_string()))?;
    let report_path = out_dir.join("gen_report.json");
    let body = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| CliError::input(format!("cannot serialize report: {e}")))?;
    std::fs::write(&report_path, body)
        .map_err(|e| CliError::input(format!("{}: {e}", report_path.display())))?;

    let r = &outcome.report;
    println!(
        "requested {} pair(s): {} candidate(s) drawn, {} accepted, {} rejected, {} unparseable",
        r.requested, r.candidates, r.accepted, r.rejected, r.unparseable
    );
    for (reason, count) in &r.rejection_reasons {
        println!("  rejected {count}: {reason}");
    }
    println!("emitted {} record(s) per flag variant", r.emitted);
    println!("f0 -> {} ({} records)", f0_path.display(), outcome.f0.len());
    println!("f1 -> {} ({} records)", f1_path.display(), outcome.f1.len());
    println!("report -> {}", report_path.display());

    if r.accepted == 0 {
        return Err(CliError::validation(format!(
            "validator accepted zero pairs; see {}",
            report_path.display()
        )));
    }
    Ok(())
}
