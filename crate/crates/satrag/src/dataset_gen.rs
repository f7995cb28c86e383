//! Synthetic QA dataset generation: entity enrichment, seeded field
//! association with rejection sampling, and emission of paired
//! table-only / context-required QA records.
//!
//! Pairing is purely combinatorial: cells are grouped by exact predicate
//! keys (dates, subjects, entities) after a seeded shuffle. No embedding
//! or vector-similarity provider is ever consulted, which keeps the
//! generated set free of semantic bias from the retrieval stack under
//! test. Validation calls are independent per pair and could be issued
//! concurrently; this implementation keeps them sequential so output
//! order is a pure function of (corpus, seed, config).

use crate::cellgroups::CellGroup;
use crate::corpus::Corpus;
use crate::eval::{canonical_value, normalize_value, QaRecord};
use crate::ids::{fnv1a64, parse_cell_id, qualified_passage_id};
use crate::ingest::Document;
use crate::providers::{Completer, ProviderError};
use crate::temporal::normalize_temporal;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Prompt for deriving a document's central entity; `{{title}}` and
/// `{{excerpt}}` are substituted per document.
pub const ENTITY_PROMPT_TEMPLATE: &str = include_str!("../templates/entity_prompt.txt");

/// Prompt for accept-or-reject validation of a candidate cell pair;
/// `{{cells}}` is substituted with the rendered cell contexts.
pub const QA_VALIDATOR_TEMPLATE: &str = include_str!("../templates/qa_validator_prompt.txt");

/// Prompt for rewriting a passage that quotes a table value verbatim;
/// `{{sentence}}` is substituted with the passage text.
pub const PARAPHRASE_PROMPT_TEMPLATE: &str = "Rewrite the text below so it keeps its \
meaning but does not state any exact numeric value verbatim. Respond with the \
rewritten text only.\n\nText: {{sentence}}\n\nRewritten:";

const EXCERPT_BUDGET: usize = 600;
const DEFAULT_SNIPPET_BUDGET: usize = 512;

/// How two (or more) cells must relate to form a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Association {
    /// Equal normalized temporal label.
    #[default]
    SameDate,
    /// Equal deepest subject label.
    SameSubject,
    /// Equal document entity.
    SameEntity,
    /// No constraint.
    Random,
}

impl Association {
    pub fn label(&self) -> &'static str {
        match self {
            Association::SameDate => "same-date",
            Association::SameSubject => "same-subject",
            Association::SameEntity => "same-entity",
            Association::Random => "random",
        }
    }
}

impl fmt::Display for Association {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Association {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "same-date" | "same_date" => Ok(Association::SameDate),
            "same-subject" | "same_subject" => Ok(Association::SameSubject),
            "same-entity" | "same_entity" => Ok(Association::SameEntity),
            "random" => Ok(Association::Random),
            other => Err(format!(
                "unknown association '{other}' (expected same-date, same-subject, \
                 same-entity, or random)"
            )),
        }
    }
}

/// A drawn group of cells satisfying one association predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePair {
    pub cells: Vec<CellGroup>,
    pub association: Association,
    pub seed: u64,
}

/// A validated question/answer over one candidate pair. Drafts are
/// emitted as both record variants, so the draft itself stays at the
/// table-only flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QAPairDraft {
    pub question: String,
    pub answer: String,
    pub source: CandidatePair,
    /// 0 = table-only, 1 = requires surrounding text.
    pub flag: u8,
}

/// Accept-or-reject result of validating one candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationOutcome {
    Accepted(QAPairDraft),
    Rejected { reason: String },
}

#[derive(Debug, Error)]
pub enum DatasetGenError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("entity extraction output not parseable: {0}")]
    UnparseableEntity(String),
    #[error("validator output not parseable: {0}")]
    UnparseableValidation(String),
    #[error("insufficient candidates: requested {requested} pairs, only {available} satisfiable")]
    InsufficientCandidates { requested: usize, available: usize },
}

/// Generation parameters; all fields feed the deterministic pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub association: Association,
    /// Number of candidate pairs to draw before validation.
    pub n_pairs: usize,
    /// Cells per pair (minimum 2).
    pub degree: usize,
    /// Passages nearest each source table attached to the f=1 record.
    pub window: usize,
    pub seed: u64,
    /// Character budget for the document context snippet carried by each
    /// decomposed cell.
    pub snippet_budget: usize,
    /// Rewrite passages that quote table values verbatim before
    /// generation (extra completion calls; off for offline runs).
    pub paraphrase: bool,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            association: Association::SameDate,
            n_pairs: 8,
            degree: 2,
            window: 2,
            seed: 7,
            snippet_budget: DEFAULT_SNIPPET_BUDGET,
            paraphrase: false,
        }
    }
}

/// Counters for one generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub requested: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Validator outputs that fit neither the accept nor the reject shape.
    pub unparseable: usize,
    /// Records per file after deduplication.
    pub emitted: usize,
    pub rejection_reasons: BTreeMap<String, usize>,
}

/// Everything one generation run produces: the table-only records, the
/// context-required records, and the counters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenOutcome {
    pub f0: Vec<QaRecord>,
    pub f1: Vec<QaRecord>,
    pub report: GenReport,
}

fn response_snippet(text: &str) -> String {
    let t = text.trim();
    if t.chars().count() <= 120 {
        t.to_string()
    } else {
        let head: String = t.chars().take(120).collect();
        format!("{head}…")
    }
}

/// Pull the first JSON object out of a completion, tolerating prose
/// around it.
fn extract_json_object(text: &str) -> Option<serde_json::Value> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(trimmed) {
        if v.is_object() {
            return Some(v);
        }
    }
    let start = trimmed.find('{')?;
    let end = trimmed.rfind('}')?;
    if end <= start {
        return None;
    }
    serde_json::from_str::<serde_json::Value>(&trimmed[start..=end])
        .ok()
        .filter(|v| v.is_object())
}

fn truncate_chars(text: &str, budget: usize) -> String {
    text.chars().take(budget).collect()
}

/// Render the entity prompt for a document.
pub fn render_entity_prompt(template: &str, doc: &Document) -> String {
    let excerpt = if doc.passages.is_empty() {
        doc.title.clone()
    } else {
        let joined = doc
            .passages
            .iter()
            .map(|p| p.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        truncate_chars(&joined, EXCERPT_BUDGET)
    };
    template
        .replace("{{title}}", doc.title.trim())
        .replace("{{excerpt}}", excerpt.trim())
}

/// Ask the completer for the document's central entity and parse the
/// `{"entity": ..., "type": ...}` body. The `type` field is accepted but
/// not used further.
pub fn enrich_entity(doc: &Document, llm: &dyn Completer) -> Result<String, DatasetGenError> {
    enrich_entity_with_template(doc, llm, ENTITY_PROMPT_TEMPLATE)
}

pub fn enrich_entity_with_template(
    doc: &Document,
    llm: &dyn Completer,
    template: &str,
) -> Result<String, DatasetGenError> {
    let prompt = render_entity_prompt(template, doc);
    let response = llm.complete(&prompt)?;
    let body = extract_json_object(&response)
        .ok_or_else(|| DatasetGenError::UnparseableEntity(response_snippet(&response)))?;
    match body.get("entity").and_then(|e| e.as_str()) {
        Some(entity) if !entity.trim().is_empty() => Ok(entity.trim().to_string()),
        _ => Err(DatasetGenError::UnparseableEntity(response_snippet(
            &response,
        ))),
    }
}

/// The cell's temporal label under the same slotting rule the graph
/// lift applies: the finest-granularity temporal header element wins,
/// ties going to the later path position.
fn temporal_key(cg: &CellGroup) -> Option<String> {
    cg.header_path
        .iter()
        .enumerate()
        .filter_map(|(i, el)| normalize_temporal(&el.label).map(|v| (i, v)))
        .max_by_key(|(i, v)| (v.granularity(), *i))
        .map(|(_, v)| v.canonical_label())
}

/// Deepest subject label under the default extraction rule: the
/// document entity, absent when no entity is known.
fn subject_key(cg: &CellGroup) -> Option<String> {
    let entity = cg.doc_meta.entity.trim();
    if entity.is_empty() {
        None
    } else {
        Some(entity.to_string())
    }
}

fn entity_key(cg: &CellGroup) -> Option<String> {
    subject_key(cg)
}

fn association_key(cg: &CellGroup, association: Association) -> Option<String> {
    match association {
        Association::SameDate => temporal_key(cg),
        Association::SameSubject => subject_key(cg),
        Association::SameEntity => entity_key(cg),
        Association::Random => Some(String::new()),
    }
}

/// Draw candidate pairs from a corpus (cells flattened corpus-wide).
pub fn pair_fields(
    corpus: &Corpus,
    association: Association,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<CandidatePair>, DatasetGenError> {
    pair_cells(
        &corpus.cell_groups(DEFAULT_SNIPPET_BUDGET),
        association,
        n_pairs,
        seed,
        2,
    )
}

/// Draw `n_pairs` groups of `degree` cells that satisfy the association
/// predicate: shuffle all cells with the seeded generator, bucket them
/// by exact predicate key, and take disjoint groups in stream order.
/// Cells whose predicate key is undefined (no temporal header for
/// same-date, no entity for same-subject/same-entity) are not
/// candidates.
pub fn pair_cells(
    cells: &[CellGroup],
    association: Association,
    n_pairs: usize,
    seed: u64,
    degree: usize,
) -> Result<Vec<CandidatePair>, DatasetGenError> {
    let degree = degree.max(2);
    let mut shuffled: Vec<&CellGroup> = cells.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    // Buckets in first-seen stream order, so the draw order follows the
    // shuffle rather than key sort order.
    let mut order: Vec<String> = Vec::new();
    let mut buckets: BTreeMap<String, Vec<&CellGroup>> = BTreeMap::new();
    for cell in shuffled {
        let Some(key) = association_key(cell, association) else {
            continue;
        };
        if !buckets.contains_key(&key) {
            order.push(key.clone());
        }
        buckets.entry(key).or_default().push(cell);
    }

    let available: usize = buckets.values().map(|b| b.len() / degree).sum();
    if available < n_pairs {
        return Err(DatasetGenError::InsufficientCandidates {
            requested: n_pairs,
            available,
        });
    }

    let mut pairs = Vec::with_capacity(n_pairs);
    'outer: for key in &order {
        for chunk in buckets[key].chunks_exact(degree) {
            pairs.push(CandidatePair {
                cells: chunk.iter().map(|c| (*c).clone()).collect(),
                association,
                seed,
            });
            if pairs.len() == n_pairs {
                break 'outer;
            }
        }
    }
    Ok(pairs)
}

fn render_cell_context(cg: &CellGroup) -> String {
    let headers = cg
        .header_path
        .iter()
        .map(|el| el.label.trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" > ");
    let date = temporal_key(cg).unwrap_or_else(|| "(none)".to_string());
    let entity = if cg.doc_meta.entity.trim().is_empty() {
        "(unknown)".to_string()
    } else {
        cg.doc_meta.entity.trim().to_string()
    };
    format!(
        "- value: {} | headers: {} | table: {} | document: {} | entity: {} | date: {}",
        cg.value.trim(),
        headers,
        cg.table_caption.trim(),
        cg.doc_meta.title.trim(),
        entity,
        date
    )
}

/// Render the validator prompt for a candidate pair.
pub fn render_validator_prompt(template: &str, pair: &CandidatePair) -> String {
    let cells = pair
        .cells
        .iter()
        .map(render_cell_context)
        .collect::<Vec<_>>()
        .join("\n");
    template.replace("{{cells}}", &cells)
}

/// Ask the completer to accept (question + answer) or reject (reason)
/// the candidate pair.
pub fn validate_pair(
    pair: &CandidatePair,
    llm: &dyn Completer,
) -> Result<ValidationOutcome, DatasetGenError> {
    validate_pair_with_template(pair, llm, QA_VALIDATOR_TEMPLATE)
}

pub fn validate_pair_with_template(
    pair: &CandidatePair,
    llm: &dyn Completer,
    template: &str,
) -> Result<ValidationOutcome, DatasetGenError> {
    let prompt = render_validator_prompt(template, pair);
    let response = llm.complete(&prompt)?;
    let body = extract_json_object(&response)
        .ok_or_else(|| DatasetGenError::UnparseableValidation(response_snippet(&response)))?;
    if body.get("reject").and_then(|b| b.as_bool()) == Some(true) {
        let reason = body
            .get("reason")
            .and_then(|r| r.as_str())
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .unwrap_or("unspecified")
            .to_string();
        return Ok(ValidationOutcome::Rejected { reason });
    }
    let question = body.get("question").and_then(|q| q.as_str());
    let answer = body.get("answer").and_then(|a| a.as_str());
    match (question, answer) {
        (Some(q), Some(a)) if !q.trim().is_empty() => Ok(ValidationOutcome::Accepted(QAPairDraft {
            question: q.trim().to_string(),
            answer: a.trim().to_string(),
            source: pair.clone(),
            flag: 0,
        })),
        _ => Err(DatasetGenError::UnparseableValidation(response_snippet(
            &response,
        ))),
    }
}

/// Qualified ids of the `window` passages nearest the table in reading
/// order. A passage `i` positions before the table is at distance
/// `p - i`; one after it at `i - p + 1`; ties prefer the earlier
/// passage.
fn nearest_passage_ids(doc: &Document, table_position: usize, window: usize) -> Vec<String> {
    let mut ranked: Vec<(usize, usize, &str)> = doc
        .passages
        .iter()
        .map(|p| {
            let d = if p.position < table_position {
                table_position - p.position
            } else {
                p.position - table_position + 1
            };
            (d, p.position, p.passage_id.as_str())
        })
        .collect();
    ranked.sort_unstable();
    ranked
        .into_iter()
        .take(window)
        .map(|(_, _, pid)| qualified_passage_id(&doc.doc_id, pid))
        .collect()
}

/// Expand validated drafts into QA records: each draft yields exactly
/// one table-only (f=0) record and one context-required (f=1) record
/// whose gold passages are the `window` passages nearest each source
/// table. Duplicate drafts (same sorted cell ids and question) are
/// dropped before emission.
pub fn emit_qa(
    drafts: &[QAPairDraft],
    corpus: &Corpus,
    window: usize,
) -> (Vec<QaRecord>, Vec<QaRecord>) {
    let mut seen: BTreeSet<(Vec<String>, u64)> = BTreeSet::new();
    let mut f0 = Vec::new();
    let mut f1 = Vec::new();
    for draft in drafts {
        let mut cell_ids: Vec<String> = draft
            .source
            .cells
            .iter()
            .map(|c| c.cell_id.clone())
            .collect();
        cell_ids.sort();
        cell_ids.dedup();
        if !seen.insert((cell_ids.clone(), fnv1a64(draft.question.as_bytes()))) {
            continue;
        }
        let index = f0.len() + 1;
        let gold_values: BTreeSet<String> = draft
            .source
            .cells
            .iter()
            .map(|c| canonical_value(&c.value))
            .collect();
        let base = QaRecord {
            query_id: format!("q{index:04}-f0"),
            question: draft.question.clone(),
            flag: 0,
            gold_cell_ids: cell_ids.iter().cloned().collect(),
            gold_passage_ids: BTreeSet::new(),
            gold_answer: draft.answer.clone(),
            gold_values,
        };
        let mut gold_passage_ids = BTreeSet::new();
        for cell in &draft.source.cells {
            let Some((doc_id, table_id, _, _)) = parse_cell_id(&cell.cell_id) else {
                continue;
            };
            let Some(doc) = corpus.document(&doc_id) else {
                continue;
            };
            if let Some(table) = doc.tables.iter().find(|t| t.table_id == table_id) {
                gold_passage_ids.extend(nearest_passage_ids(doc, table.position, window));
            }
        }
        let flagged = QaRecord {
            query_id: format!("q{index:04}-f1"),
            flag: 1,
            gold_passage_ids,
            ..base.clone()
        };
        f0.push(base);
        f1.push(flagged);
    }
    (f0, f1)
}

/// Rewrite passages that quote a numeric table value verbatim, returning
/// the rebuilt corpus and the number of passages rewritten. Values are
/// matched as exact substrings of passage text; only values that parse
/// as numbers count as leaks.
pub fn paraphrase_leaky_passages(
    corpus: &Corpus,
    llm: &dyn Completer,
) -> Result<(Corpus, usize), DatasetGenError> {
    let mut numeric_values: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for cg in corpus.cell_groups(0) {
        let value = cg.value.trim().to_string();
        if !value.is_empty() && normalize_value(&value).is_some() {
            numeric_values
                .entry(cg.doc_meta.doc_id.clone())
                .or_default()
                .insert(value);
        }
    }
    let mut rebuilt = Corpus::new();
    let mut rewritten = 0usize;
    for doc in corpus.documents() {
        let mut clone = doc.clone();
        let empty = BTreeSet::new();
        let values = numeric_values.get(&doc.doc_id).unwrap_or(&empty);
        for passage in &mut clone.passages {
            if values.iter().any(|v| passage.text.contains(v.as_str())) {
                let prompt = PARAPHRASE_PROMPT_TEMPLATE.replace("{{sentence}}", &passage.text);
                let response = llm.complete(&prompt)?;
                let replacement = response.trim();
                if !replacement.is_empty() {
                    passage.text = replacement.to_string();
                    rewritten += 1;
                }
            }
        }
        let entity = corpus.entity(&doc.doc_id).map(|e| e.to_string());
        rebuilt
            .add_document(clone, entity.as_deref())
            .expect("source corpus has unique document ids");
    }
    Ok((rebuilt, rewritten))
}

/// Run the full generation pipeline: draw candidate pairs, validate
/// each with the completer, and emit both record variants. Validator
/// outputs that fit neither shape are counted and treated as
/// rejections; provider failures abort the run.
pub fn generate_qa(
    corpus: &Corpus,
    cfg: &GenConfig,
    validator: &dyn Completer,
) -> Result<GenOutcome, DatasetGenError> {
    let cells = corpus.cell_groups(cfg.snippet_budget);
    let pairs = pair_cells(&cells, cfg.association, cfg.n_pairs, cfg.seed, cfg.degree)?;
    let mut report = GenReport {
        requested: cfg.n_pairs,
        candidates: pairs.len(),
        ..GenReport::default()
    };
    let mut drafts = Vec::new();
    for pair in &pairs {
        match validate_pair(pair, validator) {
            Ok(ValidationOutcome::Accepted(draft)) => {
                report.accepted += 1;
                drafts.push(draft);
            }
            Ok(ValidationOutcome::Rejected { reason }) => {
                report.rejected += 1;
                *report.rejection_reasons.entry(reason).or_default() += 1;
            }
            Err(DatasetGenError::UnparseableValidation(_)) => {
                report.unparseable += 1;
                *report
                    .rejection_reasons
                    .entry("unparseable validator output".to_string())
                    .or_default() += 1;
            }
            Err(other) => return Err(other),
        }
    }
    let (f0, f1) = emit_qa(&drafts, corpus, cfg.window);
    report.emitted = f0.len();
    Ok(GenOutcome { f0, f1, report })
}
