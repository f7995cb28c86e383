//! HTML table parsing: `<table>` markup with rowspan/colspan support.
//!
//! This is a focused parser for table markup, not a general HTML engine:
//! it tokenizes `<table>`, `<caption>`, `<tr>`, `<td>`/`<th>` elements,
//! reads rowspan/colspan attributes, and lays cells out with the usual
//! occupancy algorithm so merged regions land on the right coordinates.

use super::{
    make_cell_grid, IngestError, ParseWarning, ParsedTable, Span, Table, TableCategory,
};

/// Decode the handful of entities that actually occur in table markup.
fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if ch != '&' {
            out.push(ch);
            continue;
        }
        let rest = &text[i..];
        let semi = rest.char_indices().take(12).find(|&(_, c)| c == ';');
        let Some((semi_off, _)) = semi else {
            out.push(ch);
            continue;
        };
        let entity = &rest[1..semi_off];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ => entity.strip_prefix('#').and_then(|num| {
                let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
                    u32::from_str_radix(hex, 16).ok()
                } else {
                    num.parse().ok()
                };
                code.and_then(char::from_u32)
            }),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                for _ in 0..semi_off {
                    chars.next();
                }
            }
            None => out.push(ch),
        }
    }
    out
}

/// Strip any nested tags and collapse whitespace.
fn inner_text(fragment: &str) -> String {
    let mut out = String::new();
    let mut in_tag = false;
    for ch in fragment.chars() {
        match ch {
            '<' => in_tag = true,
            '>' => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    decode_entities(&out).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-insensitive search for `<tag` at a tag boundary, returning the byte
/// offset of the '<'.
fn find_tag(haystack: &str, tag: &str, from: usize) -> Option<usize> {
    let lower = haystack.to_ascii_lowercase();
    let needle = format!("<{tag}");
    let mut at = from;
    while let Some(pos) = lower[at..].find(&needle) {
        let abs = at + pos;
        let after = abs + needle.len();
        let boundary = lower[after..]
            .chars()
            .next()
            .map(|c| c.is_whitespace() || c == '>' || c == '/')
            .unwrap_or(true);
        if boundary {
            return Some(abs);
        }
        at = after;
    }
    None
}

/// Extract the body between an opening tag at `open` and its closing tag;
/// returns (attributes, body, end offset past the close tag).
fn element_at<'a>(
    haystack: &'a str,
    tag: &str,
    open: usize,
) -> Result<(&'a str, &'a str, usize), IngestError> {
    let after_name = open + 1 + tag.len();
    let gt = haystack[after_name..]
        .find('>')
        .map(|p| after_name + p)
        .ok_or_else(|| IngestError::MalformedInput(format!("unclosed <{tag}> tag")))?;
    let attrs = &haystack[after_name..gt];
    if attrs.trim_end().ends_with('/') {
        // Self-closing; empty body.
        return Ok((attrs, "", gt + 1));
    }
    let close = format!("</{tag}");
    let lower = haystack.to_ascii_lowercase();
    let close_pos = lower[gt + 1..]
        .find(&close)
        .map(|p| gt + 1 + p)
        .ok_or_else(|| IngestError::MalformedInput(format!("missing </{tag}>")))?;
    let close_gt = haystack[close_pos..]
        .find('>')
        .map(|p| close_pos + p)
        .ok_or_else(|| IngestError::MalformedInput(format!("unclosed </{tag}>")))?;
    Ok((attrs, &haystack[gt + 1..close_pos], close_gt + 1))
}

/// Read an integer attribute like `rowspan="2"` / `colspan=2`.
fn int_attr(attrs: &str, name: &str) -> Option<usize> {
    let lower = attrs.to_ascii_lowercase();
    let pos = lower.find(name)?;
    let rest = &attrs[pos + name.len()..];
    let rest = rest.trim_start();
    let rest = rest.strip_prefix('=')?.trim_start();
    let rest = rest
        .strip_prefix('"')
        .or_else(|| rest.strip_prefix('\''))
        .unwrap_or(rest);
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

/// A cell as read from markup, before layout.
struct HtmlCell {
    content: String,
    row_span: usize,
    col_span: usize,
}

pub(super) fn parse_html_table(markup: &str) -> Result<ParsedTable, IngestError> {
    let first = find_tag(markup, "table", 0)
        .ok_or_else(|| IngestError::MalformedInput("no <table> element found".to_string()))?;
    if find_tag(markup, "table", first + 1).is_some() {
        return Err(IngestError::MultipleTables);
    }
    let (_, table_body, _) = element_at(markup, "table", first)?;

    let caption = match find_tag(table_body, "caption", 0) {
        Some(pos) => {
            let (_, body, _) = element_at(table_body, "caption", pos)?;
            inner_text(body)
        }
        None => String::new(),
    };

    // Collect rows across thead/tbody/tfoot transparently: <tr> elements in
    // order of appearance.
    let mut rows: Vec<Vec<HtmlCell>> = Vec::new();
    let mut cursor = 0;
    while let Some(tr_pos) = find_tag(table_body, "tr", cursor) {
        let (_, tr_body, tr_end) = element_at(table_body, "tr", tr_pos)?;
        let mut cells = Vec::new();
        let mut cell_cursor = 0;
        loop {
            let td = find_tag(tr_body, "td", cell_cursor);
            let th = find_tag(tr_body, "th", cell_cursor);
            let (tag, pos) = match (td, th) {
                (Some(a), Some(b)) if a < b => ("td", a),
                (Some(_), Some(b)) => ("th", b),
                (Some(a), None) => ("td", a),
                (None, Some(b)) => ("th", b),
                (None, None) => break,
            };
            let (attrs, body, end) = element_at(tr_body, tag, pos)?;
            cells.push(HtmlCell {
                content: inner_text(body),
                row_span: int_attr(attrs, "rowspan").unwrap_or(1).max(1),
                col_span: int_attr(attrs, "colspan").unwrap_or(1).max(1),
            });
            cell_cursor = end;
        }
        rows.push(cells);
        cursor = tr_end;
    }
    if rows.is_empty() {
        return Err(IngestError::MalformedInput(
            "table has no <tr> rows".to_string(),
        ));
    }

    // Occupancy layout: walk rows left to right, skipping slots claimed by
    // earlier rowspans; anchors keep content, covered slots stay empty.
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut occupied: Vec<Vec<bool>> = Vec::new();
    let mut spans: Vec<Span> = Vec::new();
    let ensure_size = |grid: &mut Vec<Vec<String>>,
                       occupied: &mut Vec<Vec<bool>>,
                       rows_needed: usize,
                       cols_needed: usize| {
        while grid.len() < rows_needed {
            grid.push(Vec::new());
            occupied.push(Vec::new());
        }
        for (g, o) in grid.iter_mut().zip(occupied.iter_mut()) {
            if g.len() < cols_needed {
                g.resize(cols_needed, String::new());
                o.resize(cols_needed, false);
            }
        }
    };

    for (r, cells) in rows.iter().enumerate() {
        ensure_size(&mut grid, &mut occupied, r + 1, 1);
        let mut c = 0;
        for cell in cells {
            while c < occupied[r].len() && occupied[r][c] {
                c += 1;
            }
            ensure_size(
                &mut grid,
                &mut occupied,
                r + cell.row_span,
                c + cell.col_span,
            );
            grid[r][c] = cell.content.clone();
            for rr in r..r + cell.row_span {
                for cc in c..c + cell.col_span {
                    occupied[rr][cc] = true;
                }
            }
            if cell.row_span > 1 || cell.col_span > 1 {
                spans.push(Span {
                    row: r,
                    col: c,
                    row_span: cell.row_span,
                    col_span: cell.col_span,
                });
            }
            c += cell.col_span;
        }
    }

    // Rectangularize to the widest row.
    let width = grid.iter().map(Vec::len).max().unwrap_or(0);
    let mut warnings = Vec::new();
    for (r, row) in grid.iter_mut().enumerate() {
        if row.len() < width {
            warnings.push(ParseWarning {
                context: "table t0".to_string(),
                detail: format!("padded row {r} from {} to {width} columns", row.len()),
            });
            row.resize(width, String::new());
        }
    }

    Ok(ParsedTable {
        table: Table {
            doc_id: String::new(),
            table_id: "t0".to_string(),
            caption,
            grid: make_cell_grid(grid),
            spans,
            category: TableCategory::default(),
            position: 0,
        },
        warnings,
    })
}
