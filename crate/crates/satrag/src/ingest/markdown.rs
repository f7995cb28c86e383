//! Markdown parsing: paragraphs become passages, pipe tables become tables.

use super::{
    make_cell_grid, Document, IngestError, ParseWarning, ParsedDocument, ParsedTable, Passage,
    Table, TableCategory,
};

fn is_pipe_row(line: &str) -> bool {
    line.trim_start().starts_with('|')
}

fn is_delimiter_row(cells: &[String]) -> bool {
    !cells.is_empty()
        && cells.iter().all(|c| {
            let t = c.trim();
            !t.is_empty()
                && t.chars().all(|ch| ch == '-' || ch == ':')
                && t.contains('-')
        })
}

fn split_pipe_row(line: &str) -> Vec<String> {
    let trimmed = line.trim();
    let mut inner = trimmed.strip_prefix('|').unwrap_or(trimmed);
    inner = inner.strip_suffix('|').unwrap_or(inner);
    inner.split('|').map(|c| c.trim().to_string()).collect()
}

fn heading_text(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    let hashes = trimmed.chars().take_while(|&c| c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &trimmed[hashes..];
    rest.strip_prefix(' ').map(|t| t.trim()).filter(|t| !t.is_empty())
}

fn bold_line_text(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix("**")
        .and_then(|t| t.strip_suffix("**"))
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

/// Parse a run of pipe rows into a table grid. Delimiter rows are dropped;
/// ragged rows are padded to the widest row and reported.
fn build_table_from_rows(
    table_id: &str,
    caption: String,
    position: usize,
    lines: &[&str],
    warnings: &mut Vec<ParseWarning>,
) -> Result<Table, IngestError> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut saw_delimiter = false;
    for line in lines {
        let cells = split_pipe_row(line);
        if is_delimiter_row(&cells) {
            saw_delimiter = true;
            continue;
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(IngestError::MalformedInput(format!(
            "table {table_id}: pipe-table markup with no content rows"
        )));
    }
    if !saw_delimiter && rows.len() < 2 {
        return Err(IngestError::MalformedInput(format!(
            "table {table_id}: single pipe row without a delimiter row"
        )));
    }
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    for (r, row) in rows.iter_mut().enumerate() {
        if row.len() < width {
            warnings.push(ParseWarning {
                context: format!("table {table_id}"),
                detail: format!(
                    "padded row {r} from {} to {width} columns",
                    row.len()
                ),
            });
            row.resize(width, String::new());
        }
    }
    Ok(Table {
        doc_id: String::new(),
        table_id: table_id.to_string(),
        caption,
        grid: make_cell_grid(rows),
        spans: Vec::new(),
        category: TableCategory::default(),
        position,
    })
}

fn slugify(text: &str) -> String {
    let mut out = String::new();
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

/// Blocks the line scanner recognizes.
enum Block {
    Paragraph(Vec<String>),
    TableRows(Vec<usize>),
}

pub(super) fn parse_markdown_document(raw: &str) -> Result<ParsedDocument, IngestError> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut warnings = Vec::new();

    // First pass: group lines into blocks, remembering line numbers so
    // caption binding can look back at the raw text.
    let mut blocks: Vec<(usize, Block)> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        if is_pipe_row(line) {
            let start = i;
            let mut row_lines = Vec::new();
            while i < lines.len() && is_pipe_row(lines[i]) {
                row_lines.push(i);
                i += 1;
            }
            // A lone pipe line with no delimiter reads as prose, not a table.
            let cells: Vec<Vec<String>> =
                row_lines.iter().map(|&l| split_pipe_row(lines[l])).collect();
            let has_delimiter = cells.iter().any(|c| is_delimiter_row(c));
            if row_lines.len() < 2 && !has_delimiter {
                blocks.push((start, Block::Paragraph(vec![lines[start].trim().to_string()])));
            } else {
                blocks.push((start, Block::TableRows(row_lines)));
            }
            continue;
        }
        if heading_text(line).is_some() || bold_line_text(line).is_some() {
            // Headings and bold-only lines are structural: title / caption
            // candidates, never passage prose.
            i += 1;
            continue;
        }
        let start = i;
        let mut para = Vec::new();
        while i < lines.len()
            && !lines[i].trim().is_empty()
            && !is_pipe_row(lines[i])
            && heading_text(lines[i]).is_none()
            && bold_line_text(lines[i]).is_none()
        {
            para.push(lines[i].trim().to_string());
            i += 1;
        }
        blocks.push((start, Block::Paragraph(para)));
    }

    let title = lines
        .iter()
        .find_map(|l| heading_text(l))
        .unwrap_or("")
        .to_string();

    // Caption binding: nearest preceding heading or bold line within two
    // lines of the table's first row.
    let caption_for = |table_start: usize| -> String {
        let low = table_start.saturating_sub(2);
        (low..table_start)
            .rev()
            .find_map(|l| {
                heading_text(lines[l])
                    .or_else(|| bold_line_text(lines[l]))
                    .map(str::to_string)
            })
            .unwrap_or_default()
    };

    let mut passages = Vec::new();
    let mut tables = Vec::new();
    for (start, block) in blocks {
        match block {
            Block::Paragraph(parts) => {
                let text = parts.join(" ");
                if !text.is_empty() {
                    passages.push(Passage {
                        doc_id: String::new(),
                        passage_id: format!("p{}", passages.len()),
                        text,
                        position: passages.len(),
                    });
                }
            }
            Block::TableRows(row_lines) => {
                let table_id = format!("t{}", tables.len());
                let row_strs: Vec<&str> = row_lines.iter().map(|&l| lines[l]).collect();
                let table = build_table_from_rows(
                    &table_id,
                    caption_for(start),
                    passages.len(),
                    &row_strs,
                    &mut warnings,
                )?;
                tables.push(table);
            }
        }
    }

    let doc_id = if title.is_empty() {
        "doc".to_string()
    } else {
        slugify(&title)
    };
    let mut document = Document {
        doc_id: String::new(),
        title,
        passages,
        tables,
    };
    document = document.with_doc_id(&doc_id);
    Ok(ParsedDocument { document, warnings })
}

pub(super) fn parse_markdown_table(markup: &str) -> Result<ParsedTable, IngestError> {
    let mut warnings = Vec::new();
    let mut runs: Vec<Vec<&str>> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in markup.lines() {
        if is_pipe_row(line) {
            current.push(line);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    match runs.len() {
        0 => Err(IngestError::MalformedInput(
            "no pipe-table markup found".to_string(),
        )),
        1 => {
            let table = build_table_from_rows("t0", String::new(), 0, &runs[0], &mut warnings)?;
            Ok(ParsedTable { table, warnings })
        }
        _ => Err(IngestError::MultipleTables),
    }
}
