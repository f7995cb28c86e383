//! Evaluation harness: QA set records, ranked-retrieval and answer
//! metrics, report aggregation/rendering, and the ablation sweep.

mod harness;
mod metrics;

pub use harness::{
    chunk_prompt, default_cutoffs, render_report, run_ablation_sweep, run_eval, AblationSetting,
    EvalConfig, EvalContext, KMetrics, MetricReport,
};
pub use metrics::{
    canonical_value, cell_metrics, cell_metrics_for_sets, claim_alignment, exact_value_recall,
    hit_at_k, normalize_value, precision_at_k, recall_at_k, split_claims, EvalError,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

/// One QA item with its gold evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub query_id: String,
    pub question: String,
    /// 0 = table-only, 1 = requires surrounding text.
    pub flag: u8,
    pub gold_cell_ids: BTreeSet<String>,
    #[serde(default)]
    pub gold_passage_ids: BTreeSet<String>,
    #[serde(default)]
    pub gold_answer: String,
    #[serde(default)]
    pub gold_values: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum QaSetError {
    #[error("qa set io failure: {0}")]
    IoFailure(String),
    #[error("qa set malformed: {0}")]
    Malformed(String),
}

/// Load a line-delimited QA set (one JSON record per line; blank lines
/// ignored).
pub fn load_qa(path: &Path) -> Result<Vec<QaRecord>, QaSetError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| QaSetError::IoFailure(format!("{}: {e}", path.display())))?;
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| QaSetError::Malformed(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Write a QA set as line-delimited JSON.
pub fn save_qa(records: &[QaRecord], path: &Path) -> Result<(), QaSetError> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| QaSetError::Malformed(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| QaSetError::IoFailure(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::fusion::FusionConfig;
    use crate::ingest::{parse_document, DocumentFormat};
    use crate::providers::{DefaultSubjectExtractor, EchoCompleter, MockEmbedder};
    use crate::retrieval::{KeywordAnalyzer, RetrievalConfig, RetrievalMode};
    use crate::sat_graph::{build_graph, lift_cell_group, SatGraph};

    fn corpus_and_graph() -> (Corpus, SatGraph) {
        let acme = "# Acme Annual\n\nAcme grew revenue on hardware strength.\n\n\
Costs held steady across the period.\n\n## Financials\n\n\
| Metric | 2018 | 2019 | 2020 |\n|---|---|---|---|\n\
| Revenue | 90 | 100 | 110 |\n| Costs | 35 | 40 | 45 |\n";
        let zen = "# Zenith Annual\n\nZenith expanded into two new regions.\n\n\
## Results\n\n| Metric | 2019 |\n|---|---|\n| Revenue | 55 |\n| Headcount | 12 |\n";
        let mut corpus = Corpus::default();
        let a = parse_document(acme, DocumentFormat::Markdown).unwrap();
        corpus
            .add_document(a.document.with_doc_id("acme"), Some("Acme"))
            .unwrap();
        let z = parse_document(zen, DocumentFormat::Markdown).unwrap();
        corpus
            .add_document(z.document.with_doc_id("zenith"), Some("Zenith"))
            .unwrap();
        let extractor = DefaultSubjectExtractor;
        let facts: Vec<_> = corpus
            .cell_groups(512)
            .iter()
            .filter_map(|cg| lift_cell_group(cg, &extractor).ok())
            .collect();
        let graph = build_graph(&facts);
        (corpus, graph)
    }

    fn record(id: &str, question: &str, cells: &[&str], values: &[&str], answer: &str) -> QaRecord {
        QaRecord {
            query_id: id.to_string(),
            question: question.to_string(),
            flag: 0,
            gold_cell_ids: cells.iter().map(|s| s.to_string()).collect(),
            gold_passage_ids: BTreeSet::new(),
            gold_answer: answer.to_string(),
            gold_values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn toy_qa() -> Vec<QaRecord> {
        vec![
            record(
                "q1",
                "What was Acme Revenue in 2019?",
                &["acme/t0/1/2"],
                &["100"],
                "Acme's Revenue is 100 at 2019.",
            ),
            record(
                "q2",
                "What was Acme Costs in 2020?",
                &["acme/t0/2/3"],
                &["45"],
                "Acme's Costs is 45 at 2020.",
            ),
            record(
                "q3",
                "What was Zenith Revenue in 2019?",
                &["zenith/t0/1/1"],
                &["55"],
                "Zenith's Revenue is 55 at 2019.",
            ),
            record(
                "q4",
                "What was Zenith Headcount in 2019?",
                &["zenith/t0/2/1"],
                &["12"],
                "Zenith's Headcount is 12 at 2019.",
            ),
        ]
    }

    #[test]
    fn run_eval_produces_bounded_metrics() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let completer = EchoCompleter;
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: Some(&completer),
            analyzer: &analyzer,
        };
        let report = run_eval(
            &ctx,
            &toy_qa(),
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        assert_eq!(report.n_queries, 4);
        assert_eq!(report.failures, 0);
        assert_eq!(report.generated, 4);
        assert_eq!(report.per_k.len(), 4); // default table-only cutoffs
        assert_eq!(report.per_k[0].k, 1);
        for m in report.per_k.iter().chain([&report.natural]) {
            for v in [
                m.hit_rate,
                m.recall,
                m.precision,
                m.cell_hit_rate,
                m.cell_recall,
                m.cell_precision,
            ] {
                assert!((0.0..=1.0).contains(&v), "metric out of range: {v}");
            }
        }
        assert!(report.value_accuracy_recall > 0.0);
        assert!(report.claim_recall > 0.0);
    }

    #[test]
    fn cutoffs_override_shapes_the_table() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: None,
            analyzer: &analyzer,
        };
        let cfg = EvalConfig {
            cutoffs: vec![1],
            ..EvalConfig::default()
        };
        let report = run_eval(
            &ctx,
            &toy_qa(),
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &cfg,
        );
        assert_eq!(report.per_k.len(), 1);
        assert_eq!(report.per_k[0].k, 1);
        assert_eq!(report.generated, 0);
    }

    #[test]
    fn eval_is_deterministic_with_doubles() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let completer = EchoCompleter;
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: Some(&completer),
            analyzer: &analyzer,
        };
        let run = || {
            run_eval(
                &ctx,
                &toy_qa(),
                &RetrievalConfig::default(),
                &FusionConfig::default(),
                &EvalConfig::default(),
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn malformed_gold_counts_as_failure() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: None,
            analyzer: &analyzer,
        };
        let mut qa = toy_qa();
        qa.push(record("bad", "Anything at all?", &[], &[], ""));
        let report = run_eval(
            &ctx,
            &qa,
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        assert_eq!(report.n_queries, 4);
        assert_eq!(report.failures, 1);
    }

    #[test]
    fn chunk_baseline_mode_evaluates_chunks() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let completer = EchoCompleter;
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: Some(&completer),
            analyzer: &analyzer,
        };
        let retrieval = RetrievalConfig {
            mode: RetrievalMode::ChunkBaseline,
            ..RetrievalConfig::default()
        };
        let report = run_eval(
            &ctx,
            &toy_qa(),
            &retrieval,
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        assert_eq!(report.n_queries, 4);
        // Row chunks resolve the right tables easily...
        assert!(report.natural.hit_rate > 0.0);
        // ...but carry bystander cells, so cell precision is diluted
        // below the (single-cell) graph tuples' ceiling.
        let graph_report = run_eval(
            &ctx,
            &toy_qa(),
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        assert!(report.natural.cell_precision <= graph_report.natural.cell_precision);
    }

    #[test]
    fn report_renders_standard_rows() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: None,
            analyzer: &analyzer,
        };
        let report = run_eval(
            &ctx,
            &toy_qa(),
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        let rendered = render_report(&report);
        for row in ["HR", "R", "P", "C-HR", "C-R", "C-P"] {
            assert!(
                rendered.lines().any(|l| l.starts_with(row)),
                "missing row {row} in:\n{rendered}"
            );
        }
        assert!(rendered.contains("@1"));
        assert!(rendered.contains("@10"));
        assert!(rendered.contains("natural"));
        assert!(rendered.contains("value-accuracy recall"));
    }

    #[test]
    fn ablation_sweep_covers_four_settings() {
        let (corpus, graph) = corpus_and_graph();
        let embedder = MockEmbedder::default();
        let completer = EchoCompleter;
        let analyzer = KeywordAnalyzer::default();
        let ctx = EvalContext {
            graph: &graph,
            corpus: Some(&corpus),
            embedder: &embedder,
            completer: Some(&completer),
            analyzer: &analyzer,
        };
        let reports = run_ablation_sweep(
            &ctx,
            &toy_qa(),
            &RetrievalConfig::default(),
            &FusionConfig::default(),
            &EvalConfig::default(),
        );
        let labels: Vec<&str> = reports.iter().map(|(s, _)| s.label()).collect();
        assert_eq!(labels, vec!["full", "w/o SAT", "w/o SNE", "w/o fusion"]);
        for (_, report) in &reports {
            assert_eq!(report.n_queries, 4);
        }
    }

    #[test]
    fn qa_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.jsonl");
        let records = toy_qa();
        save_qa(&records, &path).unwrap();
        let loaded = load_qa(&path).unwrap();
        assert_eq!(records, loaded);
    }

    #[test]
    fn qa_load_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.jsonl");
        std::fs::write(&path, "{\"not\": \"a record\"}\n").unwrap();
        assert!(matches!(load_qa(&path), Err(QaSetError::Malformed(_))));
        assert!(matches!(
            load_qa(&dir.path().join("missing.jsonl")),
            Err(QaSetError::IoFailure(_))
        ));
    }
}
