//! End-to-end evaluation: run retrieval (and optionally generation) over
//! a QA set, aggregate ranked-retrieval and answer metrics, render the
//! per-k report table, and sweep the ablation settings.

use super::metrics::{
    cell_metrics_for_sets, claim_alignment, exact_value_recall, hit_at_k, precision_at_k,
    recall_at_k,
};
use super::QaRecord;
use crate::corpus::Corpus;
use crate::fusion::{assemble_prompt, build_package, generate_answer, Answer, FusionConfig};
use crate::ids::{parse_cell_id, qualified_passage_id, qualified_table_id};
use crate::providers::{Completer, Embedder};
use crate::retrieval::{
    retrieve, ChunkKind, Query, QueryAnalyzer, RetrievalConfig, RetrievalMode, ScoredChunk,
};
use crate::sat_graph::SatGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Evaluation knobs independent of retrieval behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Ranking cutoffs; empty selects the flag-dependent defaults
    /// ({1,3,5,10} for table-only sets, {4,12,20,40} for contextual).
    pub cutoffs: Vec<usize>,
    /// Cosine threshold for a claim to count as aligned.
    pub claim_threshold: f64,
    /// Run generation and answer metrics when a completer is available.
    pub generate: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cutoffs: Vec::new(),
            claim_threshold: 0.6,
            generate: true,
        }
    }
}

/// Default cutoffs for a QA set of the given contextual flag.
pub fn default_cutoffs(flag: u8) -> Vec<usize> {
    if flag == 1 {
        vec![4, 12, 20, 40]
    } else {
        vec![1, 3, 5, 10]
    }
}

/// Retrieval metrics at one cutoff.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    pub hit_rate: f64,
    pub recall: f64,
    pub precision: f64,
    pub cell_hit_rate: f64,
    pub cell_recall: f64,
    pub cell_precision: f64,
}

/// Aggregated evaluation outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_k: Vec<KMetrics>,
    /// Metrics at the engine's own return size (precision over what was
    /// actually returned rather than a fixed K).
    pub natural: KMetrics,
    pub value_accuracy_recall: f64,
    pub claim_precision: f64,
    pub claim_recall: f64,
    pub n_queries: usize,
    /// Records skipped for malformed gold data or provider failures.
    pub failures: usize,
    /// Queries that went through answer generation.
    pub generated: usize,
}

/// Everything the harness borrows to evaluate one QA set.
pub struct EvalContext<'a> {
    pub graph: &'a SatGraph,
    pub corpus: Option<&'a Corpus>,
    pub embedder: &'a dyn Embedder,
    pub completer: Option<&'a dyn Completer>,
    pub analyzer: &'a dyn QueryAnalyzer,
}

fn chunk_evidence_id(chunk: &ScoredChunk) -> String {
    match &chunk.kind {
        ChunkKind::Passage { doc_id, passage_id } => qualified_passage_id(doc_id, passage_id),
        ChunkKind::TableRow {
            doc_id, table_id, ..
        } => qualified_table_id(doc_id, table_id),
    }
}

/// Gold resolution targets at chunk granularity: the source-table id of
/// every gold cell plus the gold passage ids.
fn gold_evidence_ids(record: &QaRecord) -> BTreeSet<String> {
    let mut ids: BTreeSet<String> = record.gold_passage_ids.iter().cloned().collect();
    for cell in &record.gold_cell_ids {
        if let Some((doc, table, _, _)) = parse_cell_id(cell) {
            ids.insert(qualified_table_id(&doc, &table));
        }
    }
    ids
}

/// Prompt for the chunk baseline: retrieved chunk texts stand in for
/// linearized facts so the same completion contract applies.
pub fn chunk_prompt(chunks: &[ScoredChunk], query: &Query) -> String {
    let mut out = String::new();
    out.push_str(
        "Answer the question using only the evidence below. \
Cite evidence as [F#].\n\n",
    );
    out.push_str("Facts:\n");
    for (i, chunk) in chunks.iter().enumerate() {
        out.push_str(&format!("[F{}] {}\n", i + 1, chunk.text));
    }
    out.push('\n');
    out.push_str(&format!("Question: {}\n\n", query.text));
    out.push_str("State the answer value and cite the supporting evidence.");
    out
}

struct Accumulator {
    hit: f64,
    recall: f64,
    precision: f64,
    c_hr: f64,
    c_r: f64,
    c_p: f64,
}

impl Accumulator {
    fn zero() -> Accumulator {
        Accumulator {
            hit: 0.0,
            recall: 0.0,
            precision: 0.0,
            c_hr: 0.0,
            c_r: 0.0,
            c_p: 0.0,
        }
    }
}

/// Evaluate a QA set: per record run retrieval, measure ranked ids
/// against gold evidence at every cutoff (and at the natural return
/// size), then — when generation is on and a completer is available —
/// produce an answer and measure value recall and claim alignment.
/// Malformed gold or provider failures increment `failures` without
/// aborting the run.
pub fn run_eval(
    ctx: &EvalContext,
    qa: &[QaRecord],
    retrieval: &RetrievalConfig,
    fusion: &FusionConfig,
    cfg: &EvalConfig,
) -> MetricReport {
    let cutoffs = if cfg.cutoffs.is_empty() {
        let all_contextual = !qa.is_empty() && qa.iter().all(|r| r.flag == 1);
        default_cutoffs(if all_contextual { 1 } else { 0 })
    } else {
        cfg.cutoffs.clone()
    };
    let max_k = cutoffs.iter().copied().max().unwrap_or(1).max(retrieval.top_k);
    let run_cfg = RetrievalConfig {
        top_k: max_k,
        ..retrieval.clone()
    };
    let effective_fusion = FusionConfig {
        enabled: fusion.enabled && retrieval.enable_fusion,
        ..fusion.clone()
    };

    let mut per_k: Vec<Accumulator> = cutoffs.iter().map(|_| Accumulator::zero()).collect();
    let mut natural = Accumulator::zero();
    let mut n_queries = 0usize;
    let mut failures = 0usize;
    let mut generated = 0usize;
    let mut value_sum = 0.0;
    let mut value_n = 0usize;
    let mut claim_p_sum = 0.0;
    let mut claim_r_sum = 0.0;
    let mut claim_n = 0usize;

    for record in qa {
        let gold_ids = gold_evidence_ids(record);
        if gold_ids.is_empty() || record.gold_cell_ids.is_empty() {
            failures += 1;
            continue;
        }
        let query = Query {
            text: record.question.clone(),
            contextual_flag: record.flag,
        };
        let result = retrieve(
            ctx.graph,
            ctx.corpus,
            &query,
            &run_cfg,
            ctx.embedder,
            ctx.analyzer,
        );

        let (ranked_ids, cell_sets): (Vec<String>, Vec<Vec<String>>) =
            if retrieval.mode == RetrievalMode::ChunkBaseline {
                (
                    result.chunks.iter().map(chunk_evidence_id).collect(),
                    result.chunks.iter().map(|c| c.cell_ids.clone()).collect(),
                )
            } else {
                (
                    result
                        .evidence
                        .iter()
                        .map(|t| t.source_table.clone())
                        .collect(),
                    result
                        .evidence
                        .iter()
                        .map(|t| vec![t.cell_id.clone()])
                        .collect(),
                )
            };

        for (acc, &k) in per_k.iter_mut().zip(&cutoffs) {
            acc.hit += hit_at_k(&ranked_ids, &gold_ids, k).unwrap_or(0.0);
            acc.recall += recall_at_k(&ranked_ids, &gold_ids, k).unwrap_or(0.0);
            acc.precision += precision_at_k(&ranked_ids, &gold_ids, k);
            if let Ok((hr, r, p)) = cell_metrics_for_sets(&cell_sets, &record.gold_cell_ids, k)
            {
                acc.c_hr += hr;
                acc.c_r += r;
                acc.c_p += p;
            }
        }

        // Natural return size: the engine's own top_k, with precision
        // over what actually came back.
        let n_returned = ranked_ids.len().min(retrieval.top_k);
        natural.hit += hit_at_k(&ranked_ids, &gold_ids, retrieval.top_k).unwrap_or(0.0);
        natural.recall += recall_at_k(&ranked_ids, &gold_ids, retrieval.top_k).unwrap_or(0.0);
        natural.precision += if n_returned == 0 {
            0.0
        } else {
            precision_at_k(&ranked_ids, &gold_ids, n_returned)
        };
        if let Ok((hr, r, p)) =
            cell_metrics_for_sets(&cell_sets, &record.gold_cell_ids, n_returned)
        {
            natural.c_hr += hr;
            natural.c_r += r;
            natural.c_p += p;
        }

        if cfg.generate {
            if let Some(completer) = ctx.completer {
                let answer = if retrieval.mode == RetrievalMode::ChunkBaseline {
                    let prefix = &result.chunks[..result.chunks.len().min(retrieval.top_k)];
                    if prefix.is_empty() {
                        empty_answer()
                    } else {
                        match completer.complete(&chunk_prompt(prefix, &query)) {
                            Ok(text) => Answer {
                                text,
                                cited_cell_ids: BTreeSet::new(),
                                cited_passage_ids: BTreeSet::new(),
                            },
                            Err(_) => {
                                failures += 1;
                                empty_answer()
                            }
                        }
                    }
                } else {
                    let prefix =
                        &result.evidence[..result.evidence.len().min(retrieval.top_k)];
                    let pkg = build_package(
                        ctx.graph,
                        ctx.corpus,
                        prefix,
                        &query,
                        &effective_fusion,
                        ctx.embedder,
                    );
                    match assemble_prompt(&pkg, effective_fusion.prompt_budget) {
                        Ok(prompt) => match generate_answer(&pkg, &prompt, completer) {
                            Ok(out) => out.answer,
                            Err(_) => {
                                failures += 1;
                                empty_answer()
                            }
                        },
                        Err(_) => empty_answer(),
                    }
                };
                generated += 1;
                if !record.gold_values.is_empty() {
                    value_sum +=
                        exact_value_recall(&answer, &record.gold_values).unwrap_or(0.0);
                    value_n += 1;
                }
                if !record.gold_answer.trim().is_empty() {
                    let (p, r) = claim_alignment(
                        &answer,
                        &record.gold_answer,
                        ctx.embedder,
                        cfg.claim_threshold,
                    );
                    claim_p_sum += p;
                    claim_r_sum += r;
                    claim_n += 1;
                }
            }
        }

        n_queries += 1;
    }

    let n = n_queries.max(1) as f64;
    let finish = |acc: &Accumulator, k: usize| KMetrics {
        k,
        hit_rate: acc.hit / n,
        recall: acc.recall / n,
        precision: acc.precision / n,
        cell_hit_rate: acc.c_hr / n,
        cell_recall: acc.c_r / n,
        cell_precision: acc.c_p / n,
    };
    MetricReport {
        per_k: per_k
            .iter()
            .zip(&cutoffs)
            .map(|(acc, &k)| finish(acc, k))
            .collect(),
        natural: finish(&natural, retrieval.top_k),
        value_accuracy_recall: if value_n == 0 {
            0.0
        } else {
            value_sum / value_n as f64
        },
        claim_precision: if claim_n == 0 {
            0.0
        } else {
            claim_p_sum / claim_n as f64
        },
        claim_recall: if claim_n == 0 {
            0.0
        } else {
            claim_r_sum / claim_n as f64
        },
        n_queries,
        failures,
        generated,
    }
}

fn empty_answer() -> Answer {
    Answer {
        text: String::new(),
        cited_cell_ids: BTreeSet::new(),
        cited_passage_ids: BTreeSet::new(),
    }
}

/// Render the report as the standard table: one column per cutoff plus
/// the natural-return-size column; rows HR/R/P then C-HR/C-R/C-P.
pub fn render_report(report: &MetricReport) -> String {
    let mut out = String::new();
    let mut header = format!("{:<8}", "metric");
    for m in &report.per_k {
        header.push_str(&format!("{:>9}", format!("@{}", m.k)));
    }
    header.push_str(&format!("{:>9}", "natural"));
    out.push_str(&header);
    out.push('\n');

    let rows: [(&str, fn(&KMetrics) -> f64); 6] = [
        ("HR", |m| m.hit_rate),
        ("R", |m| m.recall),
        ("P", |m| m.precision),
        ("C-HR", |m| m.cell_hit_rate),
        ("C-R", |m| m.cell_recall),
        ("C-P", |m| m.cell_precision),
    ];
    for (label, get) in rows {
        let mut line = format!("{label:<8}");
        for m in &report.per_k {
            line.push_str(&format!("{:>9.4}", get(m)));
        }
        line.push_str(&format!("{:>9.4}", get(&report.natural)));
        out.push_str(&line);
        out.push('\n');
    }
    out.push('\n');
    out.push_str(&format!(
        "value-accuracy recall {:.4}\n",
        report.value_accuracy_recall
    ));
    out.push_str(&format!(
        "claim precision {:.4} | claim recall {:.4}\n",
        report.claim_precision, report.claim_recall
    ));
    out.push_str(&format!(
        "queries {} | failures {} | generated {}\n",
        report.n_queries, report.failures, report.generated
    ));
    out
}

/// The four ablation settings reported by the evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationSetting {
    Full,
    WithoutSat,
    WithoutSne,
    WithoutFusion,
}

impl AblationSetting {
    pub fn label(self) -> &'static str {
        match self {
            AblationSetting::Full => "full",
            AblationSetting::WithoutSat => "w/o SAT",
            AblationSetting::WithoutSne => "w/o SNE",
            AblationSetting::WithoutFusion => "w/o fusion",
        }
    }

    pub fn all() -> [AblationSetting; 4] {
        [
            AblationSetting::Full,
            AblationSetting::WithoutSat,
            AblationSetting::WithoutSne,
            AblationSetting::WithoutFusion,
        ]
    }

    /// Derive the configs this setting evaluates under.
    pub fn apply(
        self,
        retrieval: &RetrievalConfig,
        fusion: &FusionConfig,
    ) -> (RetrievalConfig, FusionConfig) {
        let mut r = retrieval.clone();
        let mut f = fusion.clone();
        match self {
            AblationSetting::Full => {}
            AblationSetting::WithoutSat => r.mode = RetrievalMode::ChunkBaseline,
            AblationSetting::WithoutSne => r.enable_sne = false,
            AblationSetting::WithoutFusion => {
                r.enable_fusion = false;
                f.enabled = false;
            }
        }
        (r, f)
    }
}

/// Evaluate the QA set under every ablation setting.
pub fn run_ablation_sweep(
    ctx: &EvalContext,
    qa: &[QaRecord],
    retrieval: &RetrievalConfig,
    fusion: &FusionConfig,
    cfg: &EvalConfig,
) -> Vec<(AblationSetting, MetricReport)> {
    AblationSetting::all()
        .into_iter()
        .map(|setting| {
            let (r, f) = setting.apply(retrieval, fusion);
            (setting, run_eval(ctx, qa, &r, &f, cfg))
        })
        .collect()
}
