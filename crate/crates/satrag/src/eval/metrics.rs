//! Ranked-retrieval metrics at chunk and cell granularity, exact-value
//! recall over generated answers, and sentence-level claim alignment.

use crate::fusion::Answer;
use crate::providers::{cosine, Embedder};
use crate::retrieval::EvidenceTuple;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold set is empty")]
    EmptyGold,
}

fn distinct_prefix(retrieved: &[String], k: usize) -> BTreeSet<&str> {
    retrieved.iter().take(k).map(String::as_str).collect()
}

fn overlap(retrieved: &[String], gold: &BTreeSet<String>, k: usize) -> usize {
    distinct_prefix(retrieved, k)
        .into_iter()
        .filter(|id| gold.contains(*id))
        .count()
}

/// 1 when any of the top-k retrieved ids is gold, else 0.
pub fn hit_at_k(
    retrieved: &[String],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(if overlap(retrieved, gold, k) >= 1 { 1.0 } else { 0.0 })
}

/// Fraction of the gold set covered by the top-k retrieved ids.
pub fn recall_at_k(
    retrieved: &[String],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(overlap(retrieved, gold, k) as f64 / gold.len() as f64)
}

/// Gold hits among the top k, over a fixed denominator of k — an
/// under-filled result list is penalized, not excused.
pub fn precision_at_k(retrieved: &[String], gold: &BTreeSet<String>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    overlap(retrieved, gold, k) as f64 / k as f64
}

/// Cell-granularity metrics over per-item cell attributions: item i of
/// the ranking contributes `cell_sets[i]`. The precision denominator is
/// the larger of k and the number of distinct cells actually delivered,
/// so coarse items (whole rows) dilute precision while under-filled
/// lists still pay the k floor.
pub fn cell_metrics_for_sets(
    cell_sets: &[Vec<String>],
    gold_cells: &BTreeSet<String>,
    k: usize,
) -> Result<(f64, f64, f64), EvalError> {
    if gold_cells.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let delivered: BTreeSet<&str> = cell_sets
        .iter()
        .take(k)
        .flatten()
        .map(String::as_str)
        .collect();
    let hits = delivered
        .iter()
        .filter(|c| gold_cells.contains(**c))
        .count();
    let c_hr = if hits >= 1 { 1.0 } else { 0.0 };
    let c_r = hits as f64 / gold_cells.len() as f64;
    let denom = k.max(delivered.len());
    let c_p = if denom == 0 {
        0.0
    } else {
        hits as f64 / denom as f64
    };
    Ok((c_hr, c_r, c_p))
}

/// Cell metrics for graph retrieval, where each evidence tuple is
/// exactly one cell.
pub fn cell_metrics(
    retrieved: &[EvidenceTuple],
    gold_cells: &BTreeSet<String>,
    k: usize,
) -> Result<(f64, f64, f64), EvalError> {
    let sets: Vec<Vec<String>> = retrieved
        .iter()
        .map(|t| vec![t.cell_id.clone()])
        .collect();
    cell_metrics_for_sets(&sets, gold_cells, k)
}

/// Parse a value string to a number under the normalization rule:
/// surrounding parentheses mean negative, leading currency symbols and
/// thousands separators are stripped, a trailing percent sign is
/// dropped. `None` when what remains is not a number.
pub fn normalize_value(raw: &str) -> Option<f64> {
    let mut s = raw.trim();
    let mut negative = false;
    if s.len() >= 2 && s.starts_with('(') && s.ends_with(')') {
        negative = true;
        s = s[1..s.len() - 1].trim();
    }
    let mut t = s
        .trim_start_matches(|c| matches!(c, '$' | '€' | '£' | '¥'))
        .trim()
        .to_string();
    if let Some(stripped) = t.strip_suffix('%') {
        t = stripped.trim().to_string();
    }
    t = t.replace(',', "");
    if t.is_empty() {
        return None;
    }
    let v = t.parse::<f64>().ok()?;
    Some(if negative { -v.abs() } else { v })
}

/// Canonical storage form of a gold value: numbers re-rendered without
/// separators or decoration, everything else kept verbatim (trimmed).
pub fn canonical_value(raw: &str) -> String {
    match normalize_value(raw) {
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        Some(v) => format!("{v}"),
        None => raw.trim().to_string(),
    }
}

fn answer_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|tok| {
            tok.trim_matches(|c: char| matches!(c, '"' | '\'' | '“' | '”'))
                .trim_end_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '?'))
        })
        .filter(|tok| !tok.is_empty())
        .collect()
}

/// Fraction of gold values present in the answer: numeric values match
/// any answer token equal after normalization; non-numeric values match
/// as case-insensitive substrings.
pub fn exact_value_recall(
    answer: &Answer,
    gold_values: &BTreeSet<String>,
) -> Result<f64, EvalError> {
    if gold_values.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let tokens = answer_tokens(&answer.text);
    let numeric_tokens: Vec<f64> = tokens
        .iter()
        .filter_map(|t| normalize_value(t))
        .collect();
    let lower = answer.text.to_lowercase();
    let matched = gold_values
        .iter()
        .filter(|gold| match normalize_value(gold) {
            Some(target) => numeric_tokens.iter().any(|v| *v == target),
            None => lower.contains(&gold.trim().to_lowercase()),
        })
        .count();
    Ok(matched as f64 / gold_values.len() as f64)
}

/// Split text into claims at sentence boundaries.
pub fn split_claims(text: &str) -> Vec<String> {
    text.split(|c: char| matches!(c, '.' | '!' | '?'))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Sentence-level semantic alignment: a claim on one side matches when
/// its best cosine against the other side reaches `theta`. Returns
/// (precision over answer claims, recall over reference claims).
pub fn claim_alignment(
    answer: &Answer,
    reference: &str,
    embedder: &dyn Embedder,
    theta: f64,
) -> (f64, f64) {
    let answer_claims = split_claims(&answer.text);
    let reference_claims = split_claims(reference);
    if answer_claims.is_empty() || reference_claims.is_empty() {
        return (0.0, 0.0);
    }
    let mut texts = answer_claims.clone();
    texts.extend(reference_claims.iter().cloned());
    let Ok(vectors) = embedder.embed(&texts) else {
        return (0.0, 0.0);
    };
    let (answer_vecs, reference_vecs) = vectors.split_at(answer_claims.len());
    let matched_answer = answer_vecs
        .iter()
        .filter(|a| reference_vecs.iter().any(|r| cosine(a, r) >= theta))
        .count();
    let matched_reference = reference_vecs
        .iter()
        .filter(|r| answer_vecs.iter().any(|a| cosine(a, r) >= theta))
        .count();
    (
        matched_answer as f64 / answer_claims.len() as f64,
        matched_reference as f64 / reference_claims.len() as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::MockEmbedder;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn answer(text: &str) -> Answer {
        Answer {
            text: text.to_string(),
            cited_cell_ids: BTreeSet::new(),
            cited_passage_ids: BTreeSet::new(),
        }
    }

    #[test]
    fn hit_examples() {
        let r = ids(&["a", "b", "c"]);
        let g = set(&["c"]);
        assert_eq!(hit_at_k(&r, &g, 3).unwrap(), 1.0);
        assert_eq!(hit_at_k(&r, &g, 2).unwrap(), 0.0);
        assert_eq!(hit_at_k(&ids(&["c"]), &g, 1).unwrap(), 1.0);
        assert_eq!(hit_at_k(&r, &BTreeSet::new(), 1), Err(EvalError::EmptyGold));
    }

    #[test]
    fn recall_examples() {
        let g = set(&["a", "b", "c", "d"]);
        assert_eq!(recall_at_k(&ids(&["a", "x", "c"]), &g, 3).unwrap(), 0.5);
        assert_eq!(recall_at_k(&ids(&[]), &g, 5).unwrap(), 0.0);
        assert_eq!(
            recall_at_k(&ids(&["d", "c", "b", "a"]), &g, 4).unwrap(),
            1.0
        );
    }

    #[test]
    fn precision_examples() {
        let g = set(&["a"]);
        assert_eq!(precision_at_k(&ids(&["a", "x", "y", "z", "w"]), &g, 5), 0.2);
        // Fixed-K denominator even with only three items returned.
        let g3 = set(&["a", "b", "c"]);
        assert_eq!(precision_at_k(&ids(&["a", "b", "c"]), &g3, 5), 0.6);
        assert_eq!(precision_at_k(&ids(&["x", "y"]), &g, 2), 0.0);
    }

    #[test]
    fn precision_times_k_counts_hits() {
        let g = set(&["a", "c", "e"]);
        let r = ids(&["a", "b", "c", "d", "e", "f"]);
        for k in 1..=6 {
            let hits = overlap(&r, &g, k);
            let p = precision_at_k(&r, &g, k);
            assert!((p * k as f64 - hits as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn metrics_monotone_in_k() {
        let g = set(&["b", "e"]);
        let r = ids(&["a", "b", "c", "d", "e"]);
        let mut prev_hit = 0.0;
        let mut prev_recall = 0.0;
        for k in 1..=5 {
            let h = hit_at_k(&r, &g, k).unwrap();
            let rec = recall_at_k(&r, &g, k).unwrap();
            assert!(h >= prev_hit);
            assert!(rec >= prev_recall);
            prev_hit = h;
            prev_recall = rec;
        }
    }

    #[test]
    fn cell_metrics_exact_hit() {
        let sets = vec![vec!["d/t/1/1".to_string()]];
        let gold = set(&["d/t/1/1"]);
        assert_eq!(
            cell_metrics_for_sets(&sets, &gold, 1).unwrap(),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn cell_metrics_row_chunk_dilution() {
        // One chunk carrying the gold cell plus three bystanders.
        let sets = vec![vec![
            "d/t/1/1".to_string(),
            "d/t/1/2".to_string(),
            "d/t/1/3".to_string(),
            "d/t/1/4".to_string(),
        ]];
        let gold = set(&["d/t/1/2"]);
        let (c_hr, c_r, c_p) = cell_metrics_for_sets(&sets, &gold, 1).unwrap();
        assert_eq!(c_hr, 1.0);
        assert_eq!(c_r, 1.0);
        assert_eq!(c_p, 0.25);
    }

    #[test]
    fn cell_metrics_no_overlap() {
        let sets = vec![vec!["d/t/9/9".to_string()]];
        let gold = set(&["d/t/1/1"]);
        assert_eq!(
            cell_metrics_for_sets(&sets, &gold, 1).unwrap(),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn value_normalization_rules() {
        assert_eq!(normalize_value("1,200"), Some(1200.0));
        assert_eq!(normalize_value("$1,200"), Some(1200.0));
        assert_eq!(normalize_value("(5.2)"), Some(-5.2));
        assert_eq!(normalize_value("12.5%"), Some(12.5));
        assert_eq!(normalize_value("-3"), Some(-3.0));
        assert_eq!(normalize_value("Morgan Stanley"), None);
        assert_eq!(normalize_value(""), None);
        assert_eq!(canonical_value("1,200"), "1200");
        assert_eq!(canonical_value("(5.2)"), "-5.2");
        assert_eq!(canonical_value("Morgan Stanley "), "Morgan Stanley");
    }

    #[test]
    fn exact_value_recall_examples() {
        let gold = set(&["1200"]);
        assert_eq!(
            exact_value_recall(&answer("Revenue was 1,200."), &gold).unwrap(),
            1.0
        );
        let gold_neg = set(&["(5.2)"]);
        assert_eq!(
            exact_value_recall(&answer("The margin moved -5.2 points"), &gold_neg).unwrap(),
            1.0
        );
        let gold_many = set(&["100", "200"]);
        assert_eq!(
            exact_value_recall(&answer("Only 100 was reported"), &gold_many).unwrap(),
            0.5
        );
        assert_eq!(
            exact_value_recall(&answer("no numbers here"), &gold).unwrap(),
            0.0
        );
        let gold_entity = set(&["Morgan Stanley"]);
        assert_eq!(
            exact_value_recall(&answer("morgan stanley reported growth"), &gold_entity)
                .unwrap(),
            1.0
        );
        assert_eq!(
            exact_value_recall(&answer("anything"), &BTreeSet::new()),
            Err(EvalError::EmptyGold)
        );
    }

    #[test]
    fn claim_alignment_identity_and_dilution() {
        let e = MockEmbedder::default();
        let reference = "Revenue grew ten percent. Costs stayed flat.";
        let (p, r) = claim_alignment(&answer(reference), reference, &e, 0.6);
        assert_eq!((p, r), (1.0, 1.0));

        let diluted = format!("{reference} Quux zorp blee.");
        let (p2, r2) = claim_alignment(&answer(&diluted), reference, &e, 0.6);
        assert!(p2 < 1.0);
        assert!((p2 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r2, 1.0);

        let (p3, r3) = claim_alignment(&answer("   "), reference, &e, 0.6);
        assert_eq!((p3, r3), (0.0, 0.0));
    }
}
