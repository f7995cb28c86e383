//! Header detection and table categorization.
//!
//! Heuristic: the topmost contiguous run of non-numeric rows becomes the
//! column-header band (tier = row offset + 1), and — judged over the
//! remaining data rows — the leftmost contiguous run of non-numeric columns
//! becomes the row-header band (tier = col offset + 1). "Numeric" means the
//! content parses as a number after stripping currency symbols, commas,
//! percent signs, and parentheses; temporal labels (bare years, quarters,
//! dates) are header vocabulary, never numeric data. Merged header cells
//! propagate their annotation to every coordinate they cover.

use super::{HeaderAnnotation, HeaderType, IngestError, Table, TableCategory};
use crate::temporal::normalize_temporal;

/// Does this content read as a numeric data value?
pub fn is_numeric_cell(content: &str) -> bool {
    let trimmed = content.trim();
    if trimmed.is_empty() {
        return false;
    }
    if normalize_temporal(trimmed).is_some() {
        return false;
    }
    let stripped: String = trimmed
        .chars()
        .filter(|c| !matches!(c, '$' | '€' | '£' | '¥' | ',' | '%' | '(' | ')' | ' '))
        .collect();
    !stripped.is_empty() && stripped.parse::<f64>().is_ok()
}

/// The classifier's verdict: annotations for every header coordinate plus
/// the table's category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderClassification {
    pub annotations: Vec<HeaderAnnotation>,
    pub category: TableCategory,
}

impl HeaderClassification {
    /// Stamp the verdict onto the table: category and per-cell header flags.
    pub fn apply(&self, table: &mut Table) {
        table.category = self.category;
        for row in table.grid.iter_mut() {
            for cell in row.iter_mut() {
                cell.is_header = false;
            }
        }
        for a in &self.annotations {
            table.grid[a.row][a.col].is_header = true;
        }
    }

    /// Count of column-header tiers (0 = none).
    pub fn column_tiers(&self) -> usize {
        self.annotations
            .iter()
            .filter(|a| a.header_type == HeaderType::ColumnHeader)
            .map(|a| a.tier)
            .max()
            .unwrap_or(0)
    }

    /// Count of row-header tiers (0 = none).
    pub fn row_tiers(&self) -> usize {
        self.annotations
            .iter()
            .filter(|a| a.header_type == HeaderType::RowHeader)
            .map(|a| a.tier)
            .max()
            .unwrap_or(0)
    }
}

fn row_is_header_like(table: &Table, row: usize) -> bool {
    let mut any_content = false;
    for col in 0..table.n_cols() {
        let content = table.effective_content(row, col);
        if !content.trim().is_empty() {
            any_content = true;
            if is_numeric_cell(content) {
                return false;
            }
        }
    }
    any_content
}

fn col_is_header_like(table: &Table, col: usize, data_row_start: usize) -> bool {
    let mut any_content = false;
    for row in data_row_start..table.n_rows() {
        let content = table.effective_content(row, col);
        if !content.trim().is_empty() {
            any_content = true;
            if is_numeric_cell(content) {
                return false;
            }
        }
    }
    any_content
}

fn build_classification(table: &Table, header_rows: usize, header_cols: usize) -> HeaderClassification {
    let mut annotations = Vec::new();
    for row in 0..header_rows {
        for col in 0..table.n_cols() {
            annotations.push(HeaderAnnotation {
                row,
                col,
                header_type: HeaderType::ColumnHeader,
                tier: row + 1,
            });
        }
    }
    for col in 0..header_cols {
        for row in header_rows..table.n_rows() {
            annotations.push(HeaderAnnotation {
                row,
                col,
                header_type: HeaderType::RowHeader,
                tier: col + 1,
            });
        }
    }

    let span_in_header_region = table.spans.iter().any(|s| {
        s.row < header_rows || s.col < header_cols
    });
    let hierarchical = header_rows >= 2 || header_cols >= 2 || span_in_header_region;
    let two_dimensional = header_rows >= 1;
    let category = match (hierarchical, two_dimensional) {
        (false, false) => TableCategory::Flat1D,
        (false, true) => TableCategory::Flat2D,
        (true, false) => TableCategory::Hierarchical1D,
        (true, true) => TableCategory::Hierarchical2D,
    };
    HeaderClassification { annotations, category }
}

/// Detect header rows/columns.
///
/// Errors with `HeaderDetectionAmbiguous` when neither a header row nor a
/// header column is detectable (e.g. an all-numeric grid); callers fall
/// back to [`fallback_classification`].
pub fn classify_headers(table: &Table) -> Result<HeaderClassification, IngestError> {
    let n_rows = table.n_rows();
    let n_cols = table.n_cols();
    if n_rows == 0 || n_cols == 0 {
        return Err(IngestError::HeaderDetectionAmbiguous);
    }

    // Topmost contiguous non-numeric rows, leaving at least one data row.
    let mut header_rows = 0;
    while header_rows < n_rows.saturating_sub(1) && row_is_header_like(table, header_rows) {
        header_rows += 1;
    }
    // Leftmost contiguous non-numeric columns over the data rows, leaving
    // at least one data column.
    let mut header_cols = 0;
    while header_cols < n_cols.saturating_sub(1)
        && col_is_header_like(table, header_cols, header_rows)
    {
        header_cols += 1;
    }

    if header_rows == 0 && header_cols == 0 {
        return Err(IngestError::HeaderDetectionAmbiguous);
    }
    Ok(build_classification(table, header_rows, header_cols))
}

/// Single-tier default for tables where detection is ambiguous: the first
/// row is taken as a flat column header (or, for single-row tables, the
/// first column as a flat row header).
pub fn fallback_classification(table: &Table) -> HeaderClassification {
    if table.n_rows() >= 2 {
        build_classification(table, 1, 0)
    } else if table.n_cols() >= 2 {
        build_classification(table, 0, 1)
    } else {
        build_classification(table, 0, 0)
    }
}
