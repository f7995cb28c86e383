//! Routing a decomposed cell into a fact: each header path element lands
//! in exactly one of the subject / temporal / attribute slots.

use super::FactTuple;
use crate::cellgroups::CellGroup;
use crate::providers::{ProviderError, SubjectExtractor};
use crate::temporal::normalize_temporal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiftError {
    /// Every header element was consumed by the temporal or subject slot;
    /// nothing remains to name the attribute. The fact is rejected.
    #[error("no attribute label remains for cell {0}")]
    NoAttribute(String),
    #[error("subject extraction failed: {0}")]
    Provider(#[from] ProviderError),
}

/// Classify the cell's header path and produce a fact tuple.
///
/// Rules: every element whose label parses as a temporal expression is
/// consumed by the temporal slot, with the finest-granularity element
/// winning the slot (ties go to the element later in path order); the
/// subject path is whatever the extractor derives from the document
/// metadata and global context; all remaining elements, ordered by
/// (header type, tier), are joined with " / " into the attribute label.
/// The value is copied verbatim.
pub fn lift_cell_group(
    cg: &CellGroup,
    extractor: &dyn SubjectExtractor,
) -> Result<FactTuple, LiftError> {
    let mut temporal_elements = Vec::new();
    for (i, el) in cg.header_path.iter().enumerate() {
        if let Some(value) = normalize_temporal(&el.label) {
            temporal_elements.push((i, value));
        }
    }
    let temporal_raw = temporal_elements
        .iter()
        .max_by_key(|(i, v)| (v.granularity(), *i))
        .map(|(i, _)| cg.header_path[*i].label.trim().to_string())
        .unwrap_or_default();

    let subject_path =
        extractor.extract_subject(&cg.doc_meta, &cg.doc_meta.context_snippet)?;

    let temporal_indices: Vec<usize> =
        temporal_elements.iter().map(|(i, _)| *i).collect();
    let mut remaining: Vec<&crate::cellgroups::HeaderPathElement> = cg
        .header_path
        .iter()
        .enumerate()
        .filter(|(i, _)| !temporal_indices.contains(i))
        .map(|(_, el)| el)
        .collect();
    remaining.sort_by_key(|el| (el.header_type, el.tier));
    let attribute = remaining
        .iter()
        .map(|el| el.label.as_str())
        .collect::<Vec<_>>()
        .join(" / ");

    if attribute.is_empty() {
        return Err(LiftError::NoAttribute(cg.cell_id.clone()));
    }

    Ok(FactTuple {
        subject_path,
        temporal_raw,
        attribute,
        value: cg.value.clone(),
        cell_id: cg.cell_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgroups::{DocumentMetadata, HeaderPathElement};
    use crate::ingest::HeaderType;
    use crate::providers::DefaultSubjectExtractor;

    fn meta(entity: &str) -> DocumentMetadata {
        DocumentMetadata {
            doc_id: "d".into(),
            title: "Annual Report".into(),
            entity: entity.into(),
            context_snippet: "Overview.".into(),
        }
    }

    fn el(label: &str, header_type: HeaderType, tier: usize) -> HeaderPathElement {
        HeaderPathElement {
            label: label.to_string(),
            header_type,
            tier,
            index: (0, 0),
        }
    }

    fn cg(entity: &str, path: Vec<HeaderPathElement>, value: &str) -> CellGroup {
        CellGroup {
            cell_id: "d/t0/2/1".into(),
            value: value.into(),
            doc_meta: meta(entity),
            table_caption: "Balances".into(),
            header_path: path,
            coordinate: (2, 1),
        }
    }

    #[test]
    fn year_column_and_label_row_route_to_temporal_and_attribute() {
        let group = cg(
            "Morgan Stanley",
            vec![
                el("2019", HeaderType::ColumnHeader, 1),
                el("Assets", HeaderType::RowHeader, 1),
            ],
            "1,200",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert_eq!(fact.subject_path, vec!["Morgan Stanley".to_string()]);
        assert_eq!(fact.temporal_raw, "2019");
        assert_eq!(fact.attribute, "Assets");
        assert_eq!(fact.value, "1,200");
        assert_eq!(fact.cell_id, "d/t0/2/1");
    }

    #[test]
    fn all_elements_temporal_leaves_no_attribute() {
        let group = cg("X", vec![el("2019", HeaderType::ColumnHeader, 1)], "5");
        assert!(matches!(
            lift_cell_group(&group, &DefaultSubjectExtractor),
            Err(LiftError::NoAttribute(_))
        ));
    }

    #[test]
    fn finest_granularity_wins_and_all_temporals_are_consumed() {
        // Both "2019" and "Q2 2019" normalize; the quarter is finer so it
        // takes the slot, and the year element is still consumed (it does
        // not leak into the attribute).
        let group = cg(
            "X",
            vec![
                el("2019", HeaderType::ColumnHeader, 1),
                el("Q2 2019", HeaderType::ColumnHeader, 2),
                el("Revenue", HeaderType::RowHeader, 1),
            ],
            "10",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert_eq!(fact.temporal_raw, "Q2 2019");
        assert_eq!(fact.attribute, "Revenue");
    }

    #[test]
    fn granularity_tie_goes_to_later_element() {
        let group = cg(
            "X",
            vec![
                el("2018", HeaderType::ColumnHeader, 1),
                el("2019", HeaderType::ColumnHeader, 2),
                el("Costs", HeaderType::RowHeader, 1),
            ],
            "7",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert_eq!(fact.temporal_raw, "2019");
    }

    #[test]
    fn no_temporal_element_leaves_raw_empty() {
        let group = cg(
            "X",
            vec![
                el("Category", HeaderType::ColumnHeader, 1),
                el("Hardware", HeaderType::RowHeader, 1),
            ],
            "3",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert_eq!(fact.temporal_raw, "");
        assert_eq!(fact.attribute, "Category / Hardware");
    }

    #[test]
    fn attribute_joins_column_then_row_elements() {
        let group = cg(
            "X",
            vec![
                el("Fair Value", HeaderType::ColumnHeader, 2),
                el("Assets", HeaderType::RowHeader, 1),
                el("2019", HeaderType::ColumnHeader, 1),
            ],
            "9",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert_eq!(fact.attribute, "Fair Value / Assets");
    }

    #[test]
    fn nested_extractor_output_is_used_verbatim() {
        struct Nested;
        impl SubjectExtractor for Nested {
            fn extract_subject(
                &self,
                _m: &DocumentMetadata,
                _c: &str,
            ) -> Result<Vec<String>, ProviderError> {
                Ok(vec!["Hardware".into(), "Laptop".into()])
            }
        }
        let group = cg(
            "ignored",
            vec![
                el("2019", HeaderType::ColumnHeader, 1),
                el("Units", HeaderType::RowHeader, 1),
            ],
            "42",
        );
        let fact = lift_cell_group(&group, &Nested).unwrap();
        assert_eq!(
            fact.subject_path,
            vec!["Hardware".to_string(), "Laptop".to_string()]
        );
    }

    #[test]
    fn empty_entity_gives_empty_subject_path() {
        let group = cg(
            "",
            vec![
                el("2019", HeaderType::ColumnHeader, 1),
                el("Assets", HeaderType::RowHeader, 1),
            ],
            "1",
        );
        let fact = lift_cell_group(&group, &DefaultSubjectExtractor).unwrap();
        assert!(fact.subject_path.is_empty());
    }
}
