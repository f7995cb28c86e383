//! Document ingestion: heterogeneous sources → normalized document model.
//!
//! Three source forms are understood: Markdown (prose paragraphs + pipe
//! tables), a structured-grid JSON schema (the corpus interchange format),
//! and HTML table markup (single tables). Parsed tables then go through
//! header classification, which marks tiered row/column headers and decides
//! the table's category.

mod grid;
mod headers;
mod html;
mod markdown;

pub use headers::{classify_headers, fallback_classification, is_numeric_cell, HeaderClassification};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("document contains no passages and no tables")]
    EmptyDocument,
    #[error("markup contains more than one table")]
    MultipleTables,
    #[error("no header row or column detectable")]
    HeaderDetectionAmbiguous,
}

/// Source format for whole documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Markdown,
    StructuredGrid,
}

/// Source format for single tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    HtmlTable,
}

/// Table layout taxonomy: one- vs two-dimensional, flat vs hierarchical
/// headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TableCategory {
    Flat1D,
    #[default]
    Flat2D,
    Hierarchical1D,
    Hierarchical2D,
}

/// One grid cell. Span-covered coordinates other than the anchor hold empty
/// content; the covering region is recorded in `Table::spans`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCell {
    pub row: usize,
    pub col: usize,
    pub content: String,
    #[serde(default)]
    pub is_header: bool,
}

/// A merged-cell region: anchor coordinate plus extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub row: usize,
    pub col: usize,
    #[serde(default = "default_span")]
    pub row_span: usize,
    #[serde(default = "default_span")]
    pub col_span: usize,
}

fn default_span() -> usize {
    1
}

impl Span {
    pub fn covers(&self, row: usize, col: usize) -> bool {
        row >= self.row
            && row < self.row + self.row_span
            && col >= self.col
            && col < self.col + self.col_span
    }
}

/// A prose passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub passage_id: String,
    pub text: String,
    /// Ordinal among the document's passages.
    pub position: usize,
}

/// A normalized table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub doc_id: String,
    pub table_id: String,
    pub caption: String,
    /// Rectangular grid; `grid[r][c].row == r`, `grid[r][c].col == c`.
    pub grid: Vec<Vec<RawCell>>,
    pub spans: Vec<Span>,
    #[serde(default)]
    pub category: TableCategory,
    /// Number of passages preceding this table in reading order.
    #[serde(default)]
    pub position: usize,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.grid.len()
    }

    pub fn n_cols(&self) -> usize {
        self.grid.first().map(|r| r.len()).unwrap_or(0)
    }

    /// Content at (row, col) with merged regions resolved: a coordinate
    /// covered by a span reads the span anchor's content.
    pub fn effective_content(&self, row: usize, col: usize) -> &str {
        for span in &self.spans {
            if span.covers(row, col) {
                return &self.grid[span.row][span.col].content;
            }
        }
        &self.grid[row][col].content
    }

    /// The span anchoring (row, col), if any.
    pub fn span_at(&self, row: usize, col: usize) -> Option<&Span> {
        self.spans.iter().find(|s| s.covers(row, col))
    }

    fn check_well_formed(&self) -> Result<(), IngestError> {
        let n_cols = self.n_cols();
        for (r, row) in self.grid.iter().enumerate() {
            if row.len() != n_cols {
                return Err(IngestError::MalformedInput(format!(
                    "table {}: row {} has {} columns, expected {}",
                    self.table_id,
                    r,
                    row.len(),
                    n_cols
                )));
            }
            for (c, cell) in row.iter().enumerate() {
                if cell.row != r || cell.col != c {
                    return Err(IngestError::MalformedInput(format!(
                        "table {}: cell at ({r},{c}) claims coordinate ({},{})",
                        self.table_id, cell.row, cell.col
                    )));
                }
            }
        }
        for (i, span) in self.spans.iter().enumerate() {
            if span.row_span == 0 || span.col_span == 0 {
                return Err(IngestError::MalformedInput(format!(
                    "table {}: span {} has zero extent",
                    self.table_id, i
                )));
            }
            if span.row + span.row_span > self.n_rows() || span.col + span.col_span > n_cols {
                return Err(IngestError::MalformedInput(format!(
                    "table {}: span at ({},{}) extends outside the {}x{} grid",
                    self.table_id,
                    span.row,
                    span.col,
                    self.n_rows(),
                    n_cols
                )));
            }
            for other in &self.spans[i + 1..] {
                let row_overlap =
                    span.row < other.row + other.row_span && other.row < span.row + span.row_span;
                let col_overlap =
                    span.col < other.col + other.col_span && other.col < span.col + span.col_span;
                if row_overlap && col_overlap {
                    return Err(IngestError::MalformedInput(format!(
                        "table {}: overlapping spans at ({},{}) and ({},{})",
                        self.table_id, span.row, span.col, other.row, other.col
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Which half of the grid a header annotation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderType {
    ColumnHeader,
    RowHeader,
}

/// Marks one coordinate as part of a header, with its nesting tier
/// (1 = outermost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderAnnotation {
    pub row: usize,
    pub col: usize,
    pub header_type: HeaderType,
    pub tier: usize,
}

/// A normalized document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub passages: Vec<Passage>,
    pub tables: Vec<Table>,
}

impl Document {
    /// Rewrite the document id, keeping the passage/table back-references
    /// consistent. Used when the caller names documents after their files.
    pub fn with_doc_id(mut self, doc_id: &str) -> Document {
        self.doc_id = doc_id.to_string();
        for p in &mut self.passages {
            p.doc_id = doc_id.to_string();
        }
        for t in &mut self.tables {
            t.doc_id = doc_id.to_string();
        }
        self
    }
}

/// Non-fatal observations made while parsing (ragged-row padding,
/// blanked span-covered content, skipped fragments).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub context: String,
    pub detail: String,
}

/// A parsed document plus its parse report.
#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub document: Document,
    pub warnings: Vec<ParseWarning>,
}

/// A parsed table plus its parse report.
#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub table: Table,
    pub warnings: Vec<ParseWarning>,
}

/// Parse one whole document.
///
/// Passages come back in reading order; each table's caption is bound to
/// the nearest preceding heading / bold line within two lines of the table.
/// Tables are header-classified (falling back to a single-tier default when
/// no header is detectable).
pub fn parse_document(raw: &str, format: DocumentFormat) -> Result<ParsedDocument, IngestError> {
    if raw.trim().is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    let mut parsed = match format {
        DocumentFormat::Markdown => markdown::parse_markdown_document(raw)?,
        DocumentFormat::StructuredGrid => grid::parse_grid_document(raw)?,
    };
    if parsed.document.passages.is_empty() && parsed.document.tables.is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    for table in &mut parsed.document.tables {
        table.check_well_formed()?;
        let classification =
            classify_headers(table).unwrap_or_else(|_| fallback_classification(table));
        classification.apply(table);
    }
    Ok(parsed)
}

/// Parse markup containing exactly one table. The table is classified the
/// same way `parse_document` classifies embedded tables.
pub fn parse_table(markup: &str, format: TableFormat) -> Result<ParsedTable, IngestError> {
    let mut parsed = match format {
        TableFormat::Markdown => markdown::parse_markdown_table(markup)?,
        TableFormat::HtmlTable => html::parse_html_table(markup)?,
    };
    parsed.table.check_well_formed()?;
    let classification =
        classify_headers(&parsed.table).unwrap_or_else(|_| fallback_classification(&parsed.table));
    classification.apply(&mut parsed.table);
    Ok(parsed)
}

/// Read a structured-grid interchange file (see `grid` schema) without
/// header classification. Exposed for tooling that wants the raw model.
pub fn parse_grid_raw(raw: &str) -> Result<ParsedDocument, IngestError> {
    let parsed = grid::parse_grid_document(raw)?;
    for table in &parsed.document.tables {
        table.check_well_formed()?;
    }
    Ok(parsed)
}

pub use grid::to_grid_json;

pub(crate) fn make_cell_grid(rows: Vec<Vec<String>>) -> Vec<Vec<RawCell>> {
    rows.into_iter()
        .enumerate()
        .map(|(r, row)| {
            row.into_iter()
                .enumerate()
                .map(|(c, content)| RawCell {
                    row: r,
                    col: c,
                    content,
                    is_header: false,
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markdown_document_counts_structures() {
        let raw = "\
# Annual Report

First paragraph about operations.

Second paragraph about liquidity.

| Item | 2019 |
|---|---|
| Assets | 1,200 |
";
        let parsed = parse_document(raw, DocumentFormat::Markdown).unwrap();
        assert_eq!(parsed.document.passages.len(), 2);
        assert_eq!(parsed.document.tables.len(), 1);
        assert_eq!(parsed.document.title, "Annual Report");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            parse_document("  \n ", DocumentFormat::Markdown),
            Err(IngestError::EmptyDocument)
        ));
    }

    #[test]
    fn with_doc_id_rewrites_back_references() {
        let raw = "Some text.\n\n| A | B |\n|---|---|\n| x | 1 |\n";
        let doc = parse_document(raw, DocumentFormat::Markdown)
            .unwrap()
            .document
            .with_doc_id("report-7");
        assert_eq!(doc.doc_id, "report-7");
        assert!(doc.passages.iter().all(|p| p.doc_id == "report-7"));
        assert!(doc.tables.iter().all(|t| t.doc_id == "report-7"));
    }

    #[test]
    fn span_bounds_are_enforced() {
        let mut table = Table {
            doc_id: "d".into(),
            table_id: "t".into(),
            caption: String::new(),
            grid: make_cell_grid(vec![
                vec!["a".into(), "b".into(), "c".into()],
                vec!["1".into(), "2".into(), "3".into()],
            ]),
            spans: vec![Span { row: 1, col: 2, row_span: 1, col_span: 2 }],
            category: TableCategory::Flat2D,
            position: 0,
        };
        assert!(matches!(
            table.check_well_formed(),
            Err(IngestError::MalformedInput(_))
        ));
        table.spans.clear();
        assert!(table.check_well_formed().is_ok());
    }

    #[test]
    fn overlapping_spans_are_rejected() {
        let table = Table {
            doc_id: "d".into(),
            table_id: "t".into(),
            caption: String::new(),
            grid: make_cell_grid(vec![
                vec!["a".into(), "".into(), "c".into()],
                vec!["1".into(), "2".into(), "3".into()],
            ]),
            spans: vec![
                Span { row: 0, col: 0, row_span: 1, col_span: 2 },
                Span { row: 0, col: 1, row_span: 2, col_span: 1 },
            ],
            category: TableCategory::Flat2D,
            position: 0,
        };
        assert!(matches!(
            table.check_well_formed(),
            Err(IngestError::MalformedInput(_))
        ));
    }

    #[test]
    fn effective_content_resolves_merged_regions() {
        let table = Table {
            doc_id: "d".into(),
            table_id: "t".into(),
            caption: String::new(),
            grid: make_cell_grid(vec![
                vec!["Fair Value".into(), "".into()],
                vec!["10".into(), "20".into()],
            ]),
            spans: vec![Span { row: 0, col: 0, row_span: 1, col_span: 2 }],
            category: TableCategory::Flat2D,
            position: 0,
        };
        assert_eq!(table.effective_content(0, 1), "Fair Value");
        assert_eq!(table.effective_content(1, 1), "20");
    }
}
