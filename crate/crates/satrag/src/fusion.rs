//! Phase-two augmentation: turn retrieved facts into natural-language
//! statements, attach scoped supporting passages, assemble a bounded
//! prompt, and parse the completion into a cited answer.

use crate::corpus::Corpus;
use crate::ids::{parse_cell_id, qualified_passage_id};
use crate::ingest::Passage;
use crate::providers::{cosine, Completer, Embedder, ProviderError};
use crate::retrieval::{EvidenceTuple, Query};
use crate::sat_graph::SatGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Marker appended to a passage whose tail was cut to fit the budget.
pub const TRUNCATION_MARKER: &str = "…[truncated]";

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("evidence package holds no facts and no passages")]
    EmptyEvidence,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Knobs for evidence packaging and prompt assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Passages fetched per fact from the fact's source document.
    pub context_per_fact: usize,
    /// Prompt character budget; passages are truncated last-first to fit,
    /// facts are never cut.
    pub prompt_budget: usize,
    /// When false the package carries facts only.
    pub enabled: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            context_per_fact: 2,
            prompt_budget: 8000,
            enabled: true,
        }
    }
}

/// A fact rendered through the statement template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedFact {
    pub statement: String,
    pub source: EvidenceTuple,
}

/// Everything handed to the generator for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidencePackage {
    pub facts: Vec<LinearizedFact>,
    pub passages: Vec<(Passage, f64)>,
    pub query: Query,
}

/// A generated answer with its parsed citations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub cited_cell_ids: BTreeSet<String>,
    pub cited_passage_ids: BTreeSet<String>,
}

/// Answer plus non-fatal parsing notes (dropped citations and the like).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedAnswer {
    pub answer: Answer,
    pub diagnostics: Vec<String>,
}

/// Render one evidence tuple as a declarative statement:
/// `<subject>'s <attribute> is <value> at <temporal>`, using the deepest
/// subject label and the temporal node's raw label.
pub fn linearize(g: &SatGraph, t: &EvidenceTuple) -> LinearizedFact {
    let subject = g
        .subjects
        .get(&t.subject)
        .map(|n| n.label.as_str())
        .unwrap_or_default();
    let attribute = g
        .attributes
        .get(&t.attribute)
        .map(|n| n.label.as_str())
        .unwrap_or_default();
    let temporal = g
        .temporals
        .get(&t.temporal)
        .map(|n| n.raw_label.as_str())
        .unwrap_or_default();
    LinearizedFact {
        statement: format!("{subject}'s {attribute} is {} at {temporal}", t.value),
        source: t.clone(),
    }
}

/// Retrieve supporting passages for one fact, drawn exclusively from the
/// document that contains the fact's source table. Ranked by cosine of
/// the fact statement to the passage text; ties break on passage
/// position ascending.
pub fn fetch_context(
    fact: &LinearizedFact,
    corpus: &Corpus,
    embedder: &dyn Embedder,
    k: usize,
) -> Vec<(Passage, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let Some((doc_id, _, _, _)) = parse_cell_id(&fact.source.cell_id) else {
        return Vec::new();
    };
    let Some(doc) = corpus.document(&doc_id) else {
        return Vec::new();
    };
    if doc.passages.is_empty() {
        return Vec::new();
    }
    let mut texts: Vec<String> = vec![fact.statement.clone()];
    texts.extend(doc.passages.iter().map(|p| p.text.clone()));
    let Ok(vectors) = embedder.embed(&texts) else {
        return Vec::new();
    };
    let (fact_vec, passage_vecs) = match vectors.split_first() {
        Some(split) => split,
        None => return Vec::new(),
    };
    let mut scored: Vec<(Passage, f64)> = doc
        .passages
        .iter()
        .zip(passage_vecs)
        .map(|(p, v)| (p.clone(), cosine(fact_vec, v)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.position.cmp(&b.0.position))
    });
    scored.truncate(k);
    scored
}

/// Build the evidence package for a query: linearize every tuple, and —
/// when fusion is enabled and the query is contextual — attach each
/// fact's top passages, deduplicated across facts (best score kept) and
/// ordered by (score desc, doc id, position).
pub fn build_package(
    g: &SatGraph,
    corpus: Option<&Corpus>,
    evidence: &[EvidenceTuple],
    query: &Query,
    cfg: &FusionConfig,
    embedder: &dyn Embedder,
) -> EvidencePackage {
    let facts: Vec<LinearizedFact> = evidence.iter().map(|t| linearize(g, t)).collect();
    let mut passages: Vec<(Passage, f64)> = Vec::new();
    if cfg.enabled && query.contextual_flag == 1 {
        if let Some(corpus) = corpus {
            let mut best: std::collections::BTreeMap<String, (Passage, f64)> =
                std::collections::BTreeMap::new();
            for fact in &facts {
                for (passage, score) in
                    fetch_context(fact, corpus, embedder, cfg.context_per_fact)
                {
                    let id = qualified_passage_id(&passage.doc_id, &passage.passage_id);
                    match best.get(&id) {
                        Some((_, cur)) if *cur >= score => {}
                        _ => {
                            best.insert(id, (passage, score));
                        }
                    }
                }
            }
            passages = best.into_values().collect();
            passages.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
                    .then_with(|| a.0.position.cmp(&b.0.position))
            });
        }
    }
    EvidencePackage {
        facts,
        passages,
        query: query.clone(),
    }
}

fn render_prompt(pkg: &EvidencePackage, passage_texts: &[String]) -> String {
    let mut out = String::new();
    out.push_str(
        "Answer the question using only the evidence below. \
Cite table facts as [F#] and passages as [P#].\n\n",
    );
    out.push_str("Facts:\n");
    for (i, fact) in pkg.facts.iter().enumerate() {
        out.push_str(&format!("[F{}] {}\n", i + 1, fact.statement));
    }
    out.push('\n');
    if !passage_texts.is_empty() {
        out.push_str("Passages:\n");
        for (i, text) in passage_texts.iter().enumerate() {
            out.push_str(&format!("[P{}] {}\n", i + 1, text));
        }
        out.push('\n');
    }
    out.push_str(&format!("Question: {}\n\n", pkg.query.text));
    out.push_str(
        "State the answer value and cite every supporting fact or passage \
with its [F#]/[P#] marker.",
    );
    out
}

/// Assemble the generation prompt: task instruction, numbered facts,
/// numbered passages (section omitted when there are none), the
/// question, and the answer-format instruction. When the rendered prompt
/// exceeds the budget, passages are truncated last-first (a cut passage
/// gets a marker; one too short to cut is dropped); facts are never cut.
pub fn assemble_prompt(pkg: &EvidencePackage, budget: usize) -> Result<String, FusionError> {
    if pkg.facts.is_empty() && pkg.passages.is_empty() {
        return Err(FusionError::EmptyEvidence);
    }
    let mut passage_texts: Vec<String> =
        pkg.passages.iter().map(|(p, _)| p.text.clone()).collect();
    loop {
        let prompt = render_prompt(pkg, &passage_texts);
        let len = prompt.chars().count();
        if len <= budget || passage_texts.is_empty() {
            return Ok(prompt);
        }
        let excess = len - budget;
        let marker_len = TRUNCATION_MARKER.chars().count();
        let last = passage_texts
            .last_mut()
            .expect("non-empty checked above");
        let text_len = last.chars().count();
        if text_len > excess + marker_len {
            let keep = text_len - excess - marker_len;
            let mut kept: String = last.chars().take(keep).collect();
            kept.push_str(TRUNCATION_MARKER);
            *last = kept;
        } else {
            passage_texts.pop();
        }
    }
}

/// Send the prompt to the completion provider and parse `[F#]`/`[P#]`
/// markers out of the response. Markers whose index is outside the
/// package are dropped and noted in the diagnostics.
pub fn generate_answer(
    pkg: &EvidencePackage,
    prompt: &str,
    llm: &dyn Completer,
) -> Result<GeneratedAnswer, FusionError> {
    let response = llm.complete(prompt)?;
    let marker = regex::Regex::new(r"\[([FP])(\d+)\]").expect("static pattern");
    let mut answer = Answer {
        text: response.clone(),
        cited_cell_ids: BTreeSet::new(),
        cited_passage_ids: BTreeSet::new(),
    };
    let mut diagnostics = Vec::new();
    for cap in marker.captures_iter(&response) {
        let kind = &cap[1];
        let Ok(index) = cap[2].parse::<usize>() else {
            diagnostics.push(format!("unparseable citation index in {}", &cap[0]));
            continue;
        };
        if index == 0 {
            diagnostics.push(format!("citation {} is zero-indexed; markers start at 1", &cap[0]));
            continue;
        }
        match kind {
            "F" => match pkg.facts.get(index - 1) {
                Some(fact) => {
                    answer.cited_cell_ids.insert(fact.source.cell_id.clone());
                }
                None => diagnostics.push(format!(
                    "citation {} out of range; {} fact(s) supplied",
                    &cap[0],
                    pkg.facts.len()
                )),
            },
            _ => match pkg.passages.get(index - 1) {
                Some((passage, _)) => {
                    answer
                        .cited_passage_ids
                        .insert(qualified_passage_id(&passage.doc_id, &passage.passage_id));
                }
                None => diagnostics.push(format!(
                    "citation {} out of range; {} passage(s) supplied",
                    &cap[0],
                    pkg.passages.len()
                )),
            },
        }
    }
    Ok(GeneratedAnswer {
        answer,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_document, DocumentFormat};
    use crate::providers::{EchoCompleter, MockEmbedder, ScriptedCompleter};
    use crate::sat_graph::{build_graph, FactTuple};

    fn fact(s: &[&str], t: &str, a: &str, v: &str, cell: &str) -> FactTuple {
        FactTuple {
            subject_path: s.iter().map(|x| x.to_string()).collect(),
            temporal_raw: t.to_string(),
            attribute: a.to_string(),
            value: v.to_string(),
            cell_id: cell.to_string(),
        }
    }

    fn graph_and_tuple(
        s: &[&str],
        t: &str,
        a: &str,
        v: &str,
        cell: &str,
    ) -> (SatGraph, EvidenceTuple) {
        let g = build_graph(&[fact(s, t, a, v, cell)]);
        let leaf = g.leaves.values().next().unwrap().clone();
        let tuple = EvidenceTuple {
            subject: leaf.key.subject,
            temporal: leaf.key.temporal,
            attribute: leaf.key.attribute,
            value: leaf.value.clone(),
            source_table: format!("{}/{}", leaf.provenance.doc_id, leaf.provenance.table_id),
            cell_id: leaf.provenance.cell_id.clone(),
            score: 1.0,
            hops: 0,
        };
        (g, tuple)
    }

    #[test]
    fn template_instantiation() {
        let (g, t) =
            graph_and_tuple(&["Morgan Stanley"], "2019", "Assets", "1,200", "d/t/1/1");
        let fact = linearize(&g, &t);
        assert_eq!(fact.statement, "Morgan Stanley's Assets is 1,200 at 2019");
    }

    #[test]
    fn deepest_subject_label_wins() {
        let (g, t) = graph_and_tuple(
            &["Alpha Corp", "Hardware Division"],
            "2020",
            "Revenue",
            "10",
            "d/t/2/2",
        );
        let fact = linearize(&g, &t);
        assert!(fact.statement.starts_with("Hardware Division's Revenue is 10"));
    }

    #[test]
    fn values_preserved_verbatim_and_deterministic() {
        let (g, t) = graph_and_tuple(&["X"], "2019", "Note", r#"said "stable""#, "d/t/1/1");
        let a = linearize(&g, &t);
        let b = linearize(&g, &t);
        assert_eq!(a.statement, b.statement);
        assert!(a.statement.contains(r#"said "stable""#));
    }

    fn corpus_with_passages() -> (Corpus, SatGraph, EvidenceTuple) {
        let md = "# Report\n\nAcme revenue grew on strong hardware sales.\n\n\
Costs held flat through the year.\n\nThe board approved a dividend.\n\n\
Margins improved in every region.\n\nStaff count reached two hundred.\n\n\
## Financials\n\n| Metric | 2019 |\n|---|---|\n| Revenue | 100 |\n";
        let parsed = parse_document(md, DocumentFormat::Markdown).unwrap();
        let mut corpus = Corpus::default();
        corpus
            .add_document(parsed.document.with_doc_id("acme"), Some("Acme"))
            .unwrap();
        let other = parse_document(
            "# Other\n\nAcme revenue grew on strong hardware sales.\n",
            DocumentFormat::Markdown,
        )
        .unwrap();
        corpus
            .add_document(other.document.with_doc_id("other"), None)
            .unwrap();
        let g = build_graph(&[fact(&["Acme"], "2019", "Revenue", "100", "acme/t0/1/1")]);
        let leaf = g.leaves.values().next().unwrap().clone();
        let tuple = EvidenceTuple {
            subject: leaf.key.subject,
            temporal: leaf.key.temporal,
            attribute: leaf.key.attribute,
            value: leaf.value.clone(),
            source_table: "acme/t0".into(),
            cell_id: leaf.provenance.cell_id.clone(),
            score: 1.0,
            hops: 0,
        };
        (corpus, g, tuple)
    }

    #[test]
    fn context_is_scoped_to_source_document() {
        let (corpus, g, tuple) = corpus_with_passages();
        let fact = linearize(&g, &tuple);
        let e = MockEmbedder::default();
        let hits = fetch_context(&fact, &corpus, &e, 2);
        assert_eq!(hits.len(), 2);
        for (p, _) in &hits {
            assert_eq!(p.doc_id, "acme");
        }
        // Oracle: exhaustive cosine over the 5 acme passages.
        let doc = corpus.document("acme").unwrap();
        assert_eq!(doc.passages.len(), 5);
        let mut oracle: Vec<(f64, usize)> = doc
            .passages
            .iter()
            .map(|p| {
                let vecs = e.embed(&[fact.statement.clone(), p.text.clone()]).unwrap();
                (cosine(&vecs[0], &vecs[1]), p.position)
            })
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let got: Vec<usize> = hits.iter().map(|(p, _)| p.position).collect();
        let want: Vec<usize> = oracle.iter().take(2).map(|(_, pos)| *pos).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn zero_k_or_missing_passages_yield_nothing() {
        let (corpus, g, tuple) = corpus_with_passages();
        let fact = linearize(&g, &tuple);
        let e = MockEmbedder::default();
        assert!(fetch_context(&fact, &corpus, &e, 0).is_empty());

        // A corpus whose only document has a table and no prose.
        let md = "| Metric | 2019 |\n|---|---|\n| Revenue | 100 |\n";
        let parsed = parse_document(md, DocumentFormat::Markdown).unwrap();
        let mut bare = Corpus::default();
        bare.add_document(parsed.document.with_doc_id("acme"), None)
            .unwrap();
        assert!(fetch_context(&fact, &bare, &e, 3).is_empty());
    }

    #[test]
    fn package_respects_contextual_flag() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let cfg = FusionConfig::default();
        let table_only = build_package(
            &g,
            Some(&corpus),
            &[tuple.clone()],
            &Query::new("Acme revenue in 2019"),
            &cfg,
            &e,
        );
        assert!(table_only.passages.is_empty());

        let mut contextual = Query::new("Acme revenue in 2019");
        contextual.contextual_flag = 1;
        let with_context = build_package(&g, Some(&corpus), &[tuple], &contextual, &cfg, &e);
        assert_eq!(with_context.passages.len(), 2);
        assert_eq!(table_only.facts, with_context.facts);
    }

    #[test]
    fn disabling_fusion_keeps_facts_drops_passages() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let mut q = Query::new("Acme revenue in 2019");
        q.contextual_flag = 1;
        let on = build_package(
            &g,
            Some(&corpus),
            &[tuple.clone()],
            &q,
            &FusionConfig::default(),
            &e,
        );
        let off_cfg = FusionConfig {
            enabled: false,
            ..FusionConfig::default()
        };
        let off = build_package(&g, Some(&corpus), &[tuple], &q, &off_cfg, &e);
        assert!(!on.passages.is_empty());
        assert!(off.passages.is_empty());
        assert_eq!(on.facts, off.facts);
    }

    #[test]
    fn prompt_sections_in_fixed_order() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let mut q = Query::new("What was Acme's revenue in 2019?");
        q.contextual_flag = 1;
        let pkg = build_package(&g, Some(&corpus), &[tuple], &q, &FusionConfig::default(), &e);
        let prompt = assemble_prompt(&pkg, 8000).unwrap();
        let facts_at = prompt.find("Facts:\n").unwrap();
        let passages_at = prompt.find("Passages:\n").unwrap();
        let question_at = prompt.find("Question: ").unwrap();
        assert!(facts_at < passages_at && passages_at < question_at);
        assert!(prompt.contains("[F1] Acme's Revenue is 100 at 2019"));
        assert!(prompt.contains("[P1] "));
        assert!(prompt.contains("What was Acme's revenue in 2019?"));
    }

    #[test]
    fn table_only_prompt_has_no_passages_section() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let pkg = build_package(
            &g,
            Some(&corpus),
            &[tuple],
            &Query::new("Acme revenue 2019"),
            &FusionConfig::default(),
            &e,
        );
        let prompt = assemble_prompt(&pkg, 8000).unwrap();
        assert!(!prompt.contains("Passages:"));
    }

    #[test]
    fn empty_package_is_an_error() {
        let pkg = EvidencePackage {
            facts: Vec::new(),
            passages: Vec::new(),
            query: Query::new("anything"),
        };
        assert!(matches!(
            assemble_prompt(&pkg, 8000),
            Err(FusionError::EmptyEvidence)
        ));
    }

    #[test]
    fn over_budget_truncates_last_passage_and_keeps_facts() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let mut q = Query::new("What was Acme's revenue in 2019?");
        q.contextual_flag = 1;
        let pkg = build_package(&g, Some(&corpus), &[tuple], &q, &FusionConfig::default(), &e);
        let full = assemble_prompt(&pkg, 100_000).unwrap();
        let budget = full.chars().count() - 10;
        let tight = assemble_prompt(&pkg, budget).unwrap();
        assert_eq!(tight.chars().count(), budget);
        assert!(tight.contains(TRUNCATION_MARKER));
        assert!(tight.contains("[F1] Acme's Revenue is 100 at 2019"));
        // The first passage stays whole; only the last is cut.
        let first_passage = &pkg.passages[0].0.text;
        assert!(tight.contains(first_passage.as_str()));
    }

    #[test]
    fn hopeless_budget_drops_passages_but_never_facts() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let mut q = Query::new("What was Acme's revenue in 2019?");
        q.contextual_flag = 1;
        let pkg = build_package(&g, Some(&corpus), &[tuple], &q, &FusionConfig::default(), &e);
        let tiny = assemble_prompt(&pkg, 1).unwrap();
        assert!(!tiny.contains("Passages:"));
        assert!(tiny.contains("[F1] Acme's Revenue is 100 at 2019"));
    }

    #[test]
    fn echo_round_trip_cites_the_fact() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let pkg = build_package(
            &g,
            Some(&corpus),
            &[tuple.clone()],
            &Query::new("Acme revenue 2019"),
            &FusionConfig::default(),
            &e,
        );
        let prompt = assemble_prompt(&pkg, 8000).unwrap();
        let out = generate_answer(&pkg, &prompt, &EchoCompleter::default()).unwrap();
        assert!(out.answer.text.contains("Acme's Revenue is 100 at 2019"));
        assert_eq!(
            out.answer.cited_cell_ids,
            BTreeSet::from(["acme/t0/1/1".to_string()])
        );
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn out_of_bounds_citations_dropped_with_diagnostic() {
        let (corpus, g, tuple) = corpus_with_passages();
        let e = MockEmbedder::default();
        let pkg = build_package(
            &g,
            Some(&corpus),
            &[tuple],
            &Query::new("Acme revenue 2019"),
            &FusionConfig::default(),
            &e,
        );
        let prompt = assemble_prompt(&pkg, 8000).unwrap();
        let llm = ScriptedCompleter::new(vec![
            "The value is 100 [F1], see also [F9] and [P3].".to_string()
        ]);
        let out = generate_answer(&pkg, &prompt, &llm).unwrap();
        assert_eq!(
            out.answer.cited_cell_ids,
            BTreeSet::from(["acme/t0/1/1".to_string()])
        );
        assert!(out.answer.cited_passage_ids.is_empty());
        assert_eq!(out.diagnostics.len(), 2);
    }

    #[test]
    fn template_injectivity_on_distinct_fields() {
        let g = build_graph(&[
            fact(&["A"], "2019", "Revenue", "1", "d/t/1/1"),
            fact(&["A"], "2020", "Revenue", "1", "d/t/1/2"),
            fact(&["B"], "2019", "Costs", "2", "d/t/2/1"),
        ]);
        let statements: BTreeSet<String> = g
            .leaves
            .values()
            .map(|leaf| {
                let t = EvidenceTuple {
                    subject: leaf.key.subject,
                    temporal: leaf.key.temporal,
                    attribute: leaf.key.attribute,
                    value: leaf.value.clone(),
                    source_table: "d/t".into(),
                    cell_id: leaf.provenance.cell_id.clone(),
                    score: 1.0,
                    hops: 0,
                };
                linearize(&g, &t).statement
            })
            .collect();
        assert_eq!(statements.len(), 3);
    }
}
