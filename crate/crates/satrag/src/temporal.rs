//! Temporal label normalization.
//!
//! Header labels and query text carry time expressions in a handful of
//! surface forms; this module maps them onto a canonical value with
//! calendar-interval semantics so the graph can merge labels that mean the
//! same period and order siblings chronologically.
//!
//! Recognized patterns: bare 4-digit years, `Qn YYYY` / `YYYY Qn`,
//! English month names (`January 2019`, `Jan 2019`), ISO `YYYY-MM` /
//! `YYYY-MM-DD`, and fiscal-year labels (`FY 2019`, treated as the
//! calendar year). Anything else is simply not temporal — that is a normal
//! outcome, not an error.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::sync::LazyLock;

/// Years outside this range are treated as plain numbers: a bare "1200" in
/// a table is far more likely a quantity than the year 1200, and header
/// detection relies on that distinction.
pub const YEAR_MIN: i32 = 1900;
pub const YEAR_MAX: i32 = 2100;

/// A normalized temporal value. `Unbounded` is the open interval that
/// houses facts with no temporal header at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemporalValue {
    Year(i32),
    /// (year, quarter 1-4)
    Quarter(i32, u8),
    /// (year, month 1-12)
    Month(i32, u8),
    /// (year, month, day)
    Day(i32, u8, u8),
    Unbounded,
}

impl TemporalValue {
    /// Parent in the containment hierarchy: day → month → year,
    /// quarter → year.
    pub fn parent(&self) -> Option<TemporalValue> {
        match *self {
            TemporalValue::Day(y, m, _) => Some(TemporalValue::Month(y, m)),
            TemporalValue::Month(y, _) => Some(TemporalValue::Year(y)),
            TemporalValue::Quarter(y, _) => Some(TemporalValue::Year(y)),
            TemporalValue::Year(_) | TemporalValue::Unbounded => None,
        }
    }

    /// The value followed by its ancestors, most specific first.
    pub fn chain(&self) -> Vec<TemporalValue> {
        let mut out = vec![*self];
        let mut cur = *self;
        while let Some(p) = cur.parent() {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Finer granularity compares greater: day > month > quarter > year.
    pub fn granularity(&self) -> u8 {
        match self {
            TemporalValue::Unbounded => 0,
            TemporalValue::Year(_) => 1,
            TemporalValue::Quarter(_, _) => 2,
            TemporalValue::Month(_, _) => 3,
            TemporalValue::Day(_, _, _) => 4,
        }
    }

    /// Canonical rendering, used as the graph node label.
    pub fn canonical_label(&self) -> String {
        match *self {
            TemporalValue::Year(y) => format!("{y}"),
            TemporalValue::Quarter(y, q) => format!("Q{q} {y}"),
            TemporalValue::Month(y, m) => format!("{y}-{m:02}"),
            TemporalValue::Day(y, m, d) => format!("{y}-{m:02}-{d:02}"),
            TemporalValue::Unbounded => "undated".to_string(),
        }
    }

    /// Inclusive calendar interval as (start, end) date triples;
    /// `None` for the open interval.
    pub fn interval(&self) -> Option<((i32, u8, u8), (i32, u8, u8))> {
        match *self {
            TemporalValue::Year(y) => Some(((y, 1, 1), (y, 12, 31))),
            TemporalValue::Quarter(y, q) => {
                let start_month = (q - 1) * 3 + 1;
                let end_month = start_month + 2;
                Some((
                    (y, start_month, 1),
                    (y, end_month, last_day_of_month(y, end_month)),
                ))
            }
            TemporalValue::Month(y, m) => {
                Some(((y, m, 1), (y, m, last_day_of_month(y, m))))
            }
            TemporalValue::Day(y, m, d) => Some(((y, m, d), (y, m, d))),
            TemporalValue::Unbounded => None,
        }
    }

    /// Interval containment: does `self` cover all of `other`?
    /// The open interval covers everything; nothing bounded covers it.
    pub fn contains(&self, other: &TemporalValue) -> bool {
        match (self.interval(), other.interval()) {
            (None, _) => true,
            (_, None) => false,
            (Some((s1, e1)), Some((s2, e2))) => s1 <= s2 && e2 <= e1,
        }
    }

    /// Total chronological order for sibling sorting: by interval start,
    /// then end, then label; the open interval sorts first.
    pub fn chrono_cmp(&self, other: &TemporalValue) -> Ordering {
        match (self.interval(), other.interval()) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some((s1, e1)), Some((s2, e2))) => s1
                .cmp(&s2)
                .then(e1.cmp(&e2))
                .then_with(|| self.canonical_label().cmp(&other.canonical_label())),
        }
    }
}

fn is_leap_year(y: i32) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

/// Last day of `month` in `year` (month 1-12).
pub fn last_day_of_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if is_leap_year(year) {
                29
            } else {
                28
            }
        }
        _ => 30,
    }
}

const MONTH_NAMES: [(&str, u8); 24] = [
    ("january", 1),
    ("february", 2),
    ("march", 3),
    ("april", 4),
    ("may", 5),
    ("june", 6),
    ("july", 7),
    ("august", 8),
    ("september", 9),
    ("october", 10),
    ("november", 11),
    ("december", 12),
    ("jan", 1),
    ("feb", 2),
    ("mar", 3),
    ("apr", 4),
    ("may", 5),
    ("jun", 6),
    ("jul", 7),
    ("aug", 8),
    ("sep", 9),
    ("oct", 10),
    ("nov", 11),
    ("dec", 12),
];

fn month_number(name: &str) -> Option<u8> {
    let lowered = name.to_ascii_lowercase();
    let trimmed = lowered.trim_end_matches('.');
    MONTH_NAMES
        .iter()
        .find(|(n, _)| *n == trimmed)
        .map(|(_, m)| *m)
}

fn year_in_range(y: i32) -> bool {
    (YEAR_MIN..=YEAR_MAX).contains(&y)
}

// One alternation, most specific form first, so that scanning picks the
// longest reading at a given position ("2019-01-10" must not stop at "2019").
const MONTH_ALT: &str = "january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sep|oct|nov|dec";

static SCAN_RE: LazyLock<Regex> = LazyLock::new(|| {
    // Month and day sub-patterns are strict so that a year range like
    // "2018-2019" falls through to the bare-year alternative instead of
    // being consumed as a malformed ISO date.
    let pattern = format!(
        r"(?i)\b(?:(?P<iso>\d{{4}}-(?:0[1-9]|1[0-2])(?:-(?:0[1-9]|[12][0-9]|3[01]))?)|(?P<fy>(?:fy|fiscal\s+year)\s*\d{{4}})|(?P<qy>q[1-4][\s-]+\d{{4}})|(?P<yq>\d{{4}}[\s-]+q[1-4])|(?P<my>(?:{MONTH_ALT})\.?\s+\d{{4}})|(?P<y>\d{{4}}))\b"
    );
    Regex::new(&pattern).expect("temporal scan pattern compiles")
});

static DIGITS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\d+").expect("digit pattern compiles"));

fn parse_match(caps: &regex::Captures<'_>) -> Option<TemporalValue> {
    if let Some(m) = caps.name("iso") {
        let text = m.as_str();
        let parts: Vec<&str> = text.split('-').collect();
        let y: i32 = parts[0].parse().ok()?;
        let month: u8 = parts[1].parse().ok()?;
        if !year_in_range(y) || month == 0 || month > 12 {
            return None;
        }
        if parts.len() == 3 {
            let day: u8 = parts[2].parse().ok()?;
            if day == 0 || day > last_day_of_month(y, month) {
                return None;
            }
            return Some(TemporalValue::Day(y, month, day));
        }
        return Some(TemporalValue::Month(y, month));
    }
    if let Some(m) = caps.name("fy") {
        let y: i32 = DIGITS_RE.find(m.as_str())?.as_str().parse().ok()?;
        return year_in_range(y).then_some(TemporalValue::Year(y));
    }
    if let Some(m) = caps.name("qy").or_else(|| caps.name("yq")) {
        let text = m.as_str();
        let q_pos = text.to_ascii_lowercase().find('q')?;
        let q: u8 = text[q_pos + 1..q_pos + 2].parse().ok()?;
        let y: i32 = DIGITS_RE
            .find_iter(text)
            .map(|d| d.as_str())
            .find(|d| d.len() == 4)?
            .parse()
            .ok()?;
        return year_in_range(y).then_some(TemporalValue::Quarter(y, q));
    }
    if let Some(m) = caps.name("my") {
        let text = m.as_str();
        let (name, year) = text.rsplit_once(char::is_whitespace)?;
        let month = month_number(name.trim())?;
        let y: i32 = year.trim().parse().ok()?;
        return year_in_range(y).then_some(TemporalValue::Month(y, month));
    }
    if let Some(m) = caps.name("y") {
        let y: i32 = m.as_str().parse().ok()?;
        return year_in_range(y).then_some(TemporalValue::Year(y));
    }
    None
}

/// Normalize a whole label. The entire (trimmed) string must be one
/// temporal expression; `None` means "not temporal".
pub fn normalize_temporal(raw: &str) -> Option<TemporalValue> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    let caps = SCAN_RE.captures(trimmed)?;
    let whole = caps.get(0)?;
    if whole.start() != 0 || whole.end() != trimmed.len() {
        return None;
    }
    parse_match(&caps)
}

/// Find the first temporal expression inside free text, returning the
/// normalized value and the matched source slice.
pub fn find_first_temporal(text: &str) -> Option<(TemporalValue, &str)> {
    for caps in SCAN_RE.captures_iter(text) {
        if let Some(v) = parse_match(&caps) {
            let m = caps.get(0).expect("whole match");
            return Some((v, &text[m.range()]));
        }
    }
    None
}
