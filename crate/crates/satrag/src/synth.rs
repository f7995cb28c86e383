//! Deterministic synthetic corpus and query sets used by tests, the
//! benchmark harness, and the end-to-end smoke path.
//!
//! The layout is fixed — five single-entity documents, three tables
//! each, five metric rows by five year columns per table — so cell ids,
//! values, and expected answers are all computable in closed form. Every
//! value is a unique four-digit integer that never collides with a year
//! label, and passages deliberately carry entity and metric words but no
//! numbers: a dense chunk retriever is drawn to them while the exact
//! figures live only in table cells.

use crate::corpus::Corpus;
use crate::eval::QaRecord;
use crate::ids::cell_id;
use crate::ingest::{parse_document, DocumentFormat};
use std::collections::BTreeSet;

pub const ENTITIES: [&str; 5] = ["Amber", "Boreal", "Cobalt", "Dorado", "Ember"];

pub const CAPTIONS: [&str; 3] = ["Income Statement", "Segment Results", "Balance Sheet"];

pub const METRICS: [[&str; 5]; 3] = [
    ["Revenue", "Costs", "Profit", "Assets", "Liabilities"],
    [
        "Hardware Revenue",
        "Software Revenue",
        "Services Revenue",
        "Headcount",
        "Stores",
    ],
    ["Cash", "Debt", "Equity", "Inventory", "Receivables"],
];

pub const YEARS: [u16; 5] = [2018, 2019, 2020, 2021, 2022];

/// Document id the ingestion slug rule assigns to the generated title.
pub fn doc_id(doc: usize) -> String {
    format!("{}-annual-report", ENTITIES[doc].to_lowercase())
}

/// Unique cell value. Injective over (doc, table, metric, year): the
/// weights nest (7·year < 31, 31·metric + 7·year < 200, and the full
/// table remainder < 1000), so every value decomposes uniquely. The
/// range is 3003–7555, which keeps every value above the 1900–2100
/// window that the temporal normalizer accepts as a bare year — a row
/// of year-shaped numbers would otherwise be classified as an extra
/// header tier instead of data.
pub fn value_at(doc: usize, table: usize, metric: usize, year: usize) -> i64 {
    3000 + 1000 * doc as i64 + 200 * table as i64 + 31 * metric as i64 + 7 * year as i64 + 3
}

/// Cell id of a data cell (one header row, one header column per table).
pub fn cell_id_at(doc: usize, table: usize, metric: usize, year: usize) -> String {
    cell_id(&doc_id(doc), &format!("t{table}"), metric + 1, year + 1)
}

fn table_markdown(doc: usize, table: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!("## {}\n\n", CAPTIONS[table]));
    out.push_str("| Metric |");
    for year in YEARS {
        out.push_str(&format!(" {year} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in YEARS {
        out.push_str("---|");
    }
    out.push('\n');
    for (m, metric) in METRICS[table].iter().enumerate() {
        out.push_str(&format!("| {metric} |"));
        for y in 0..YEARS.len() {
            out.push_str(&format!(" {} |", value_at(doc, table, m, y)));
        }
        out.push('\n');
    }
    out
}

/// One generated document: title, six narrative passages, three tables.
pub fn toy_markdown(doc: usize) -> String {
    let e = ENTITIES[doc];
    let mut out = String::new();
    out.push_str(&format!("# {e} Annual Report\n\n"));
    out.push_str(&format!(
        "{e} is a diversified operator reporting results across 2018 through 2022.\n\n"
    ));
    out.push_str(&format!(
        "{e} revenue and profit improved while costs and liabilities stayed controlled.\n\n"
    ));
    out.push_str(&table_markdown(doc, 0));
    out.push('\n');
    out.push_str(&format!(
        "{e} hardware revenue, software revenue, and services revenue each expanded \
         while headcount and stores grew.\n\n"
    ));
    out.push_str(&table_markdown(doc, 1));
    out.push('\n');
    out.push_str(&format!(
        "{e} cash, debt, equity, inventory, and receivables remained balanced through \
         the period.\n\n"
    ));
    out.push_str(&table_markdown(doc, 2));
    out.push('\n');
    out.push_str(&format!(
        "Analysts noted {e} assets and margin trends across 2019, 2020, and 2021.\n\n"
    ));
    out.push_str(&format!(
        "Management of {e} reiterated guidance for revenue, costs, profit, assets, \
         and liabilities.\n"
    ));
    out
}

/// All five documents as (file name, markdown) pairs, ready to be
/// written into an ingest input directory.
pub fn toy_documents() -> Vec<(String, String)> {
    (0..ENTITIES.len())
        .map(|d| {
            (
                format!("{}.md", ENTITIES[d].to_lowercase()),
                toy_markdown(d),
            )
        })
        .collect()
}

/// The parsed corpus with entity annotations matching what offline
/// ingestion (placeholder enrichment: first word of the title) produces.
pub fn toy_corpus() -> Corpus {
    let mut corpus = Corpus::new();
    for (_, markdown) in toy_documents() {
        let parsed = parse_document(&markdown, DocumentFormat::Markdown)
            .expect("generated markdown parses");
        let entity = parsed
            .document
            .title
            .split_whitespace()
            .next()
            .expect("generated titles are non-empty")
            .to_string();
        corpus
            .add_document(parsed.document, Some(&entity))
            .expect("generated doc ids are unique");
    }
    corpus
}

/// A synthetic point-lookup query with its gold datum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthQuery {
    pub question: String,
    pub doc: usize,
    pub table: usize,
    pub metric: usize,
    pub year: usize,
    pub gold_cell_id: String,
    /// Canonical storage form of the gold value.
    pub gold_value: String,
    /// Reference answer in the fact-statement template.
    pub gold_answer: String,
}

fn synth_query(doc: usize, table: usize, metric: usize, year: usize) -> SynthQuery {
    let entity = ENTITIES[doc];
    let metric_label = METRICS[table][metric];
    let year_label = YEARS[year];
    let value = value_at(doc, table, metric, year);
    SynthQuery {
        question: format!("What was {entity} {metric_label} in {year_label}?"),
        doc,
        table,
        metric,
        year,
        gold_cell_id: cell_id_at(doc, table, metric, year),
        gold_value: value.to_string(),
        gold_answer: format!("{entity}'s {metric_label} is {value} at {year_label}."),
    }
}

/// Every point-lookup combination: 5 entities x 15 metrics x 5 years.
pub fn point_lookup_queries() -> Vec<SynthQuery> {
    let mut out = Vec::new();
    for doc in 0..ENTITIES.len() {
        for table in 0..CAPTIONS.len() {
            for metric in 0..METRICS[table].len() {
                for year in 0..YEARS.len() {
                    out.push(synth_query(doc, table, metric, year));
                }
            }
        }
    }
    out
}

/// A QA set of `n` point lookups sampled at a fixed stride, for the
/// benchmark and smoke paths.
pub fn benchmark_records(n: usize) -> Vec<QaRecord> {
    let all = point_lookup_queries();
    let stride = 7usize;
    (0..n)
        .map(|i| {
            let q = &all[(i * stride) % all.len()];
            QaRecord {
                query_id: format!("bench-{i:03}"),
                question: q.question.clone(),
                flag: 0,
                gold_cell_ids: BTreeSet::from([q.gold_cell_id.clone()]),
                gold_passage_ids: BTreeSet::new(),
                gold_answer: q.gold_answer.clone(),
                gold_values: BTreeSet::from([q.gold_value.clone()]),
            }
        })
        .collect()
}

/// A temporal-comparison query whose focal year has both neighbors in
/// the same table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonFixture {
    pub question: String,
    pub focal_cell_id: String,
    /// Cells at the same (subject, attribute) one year before and after.
    pub sibling_cell_ids: Vec<String>,
}

/// Comparison fixtures over interior years (both +-1 neighbors exist):
/// every document and table, one metric each. The earliest interior
/// year is skipped: its left neighbor is the table's first column,
/// whose cell id heads the score-tie band of a small-cutoff base
/// ranking, so that year cannot tell expansion apart from the ranking
/// it expands.
pub fn comparison_fixtures() -> Vec<ComparisonFixture> {
    let mut out = Vec::new();
    for doc in 0..ENTITIES.len() {
        for table in 0..CAPTIONS.len() {
            // "Cobalt" and "Headcount" share a hash bucket in the mock
            // embedder, which welds a Cobalt-Headcount question to every
            // year of that attribute; use the table's last metric there
            // so the +-1 cells stay separable at small cutoffs.
            let metric = if (doc, table) == (2, 1) {
                METRICS[table].len() - 1
            } else {
                (doc + table) % METRICS[table].len()
            };
            for year in 2..YEARS.len() - 1 {
                out.push(ComparisonFixture {
                    question: format!(
                        "How did {} {} change in {}?",
                        ENTITIES[doc], METRICS[table][metric], YEARS[year]
                    ),
                    focal_cell_id: cell_id_at(doc, table, metric, year),
                    sibling_cell_ids: vec![
                        cell_id_at(doc, table, metric, year - 1),
                        cell_id_at(doc, table, metric, year + 1),
                    ],
                });
            }
        }
    }
    out
}
