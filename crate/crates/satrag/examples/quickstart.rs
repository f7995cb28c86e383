//! End-to-end library walkthrough: parse one markdown document, build
//! the composite graph, validate it, and answer a question offline.
//!
//! Run with `cargo run -p satrag --example quickstart`.

use satrag::corpus::Corpus;
use satrag::ingest::{parse_document, DocumentFormat};
use satrag::providers::{DefaultSubjectExtractor, MockEmbedder};
use satrag::retrieval::{retrieve, KeywordAnalyzer, Query, RetrievalConfig};
use satrag::sat_graph::{build_graph, lift_cell_group, validate_graph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let markdown = "\
# Acme Corporation Annual Report

Acme manufactures industrial widgets across three regions.

## Financial Results

| Metric | 2019 | 2020 | 2021 |
| --- | --- | --- | --- |
| Revenue | 1,200 | 1,350 | 1,500 |
| Operating Cost | 800 | 900 | 950 |
";

    let mut corpus = Corpus::new();
    let doc = parse_document(markdown, DocumentFormat::Markdown)?
        .document
        .with_doc_id("acme");
    corpus.add_document(doc, Some("Acme Corporation"))?;

    let facts: Vec<_> = corpus
        .cell_groups(512)
        .iter()
        .map(|cg| lift_cell_group(cg, &DefaultSubjectExtractor))
        .collect::<Result<_, _>>()?;
    let graph = build_graph(&facts);
    assert!(validate_graph(&graph, Some(&corpus.cell_ids())).is_clean());

    let result = retrieve(
        &graph,
        Some(&corpus),
        &Query::new("What was Acme Revenue in 2020?"),
        &RetrievalConfig::default(),
        &MockEmbedder::default(),
        &KeywordAnalyzer,
    );
    for fact in &result.evidence {
        println!("{:.4}  {}", fact.score, fact.cell_id);
    }
    Ok(())
}
