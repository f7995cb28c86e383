//! Randomized invariants over the whole pipeline.
//!
//! A corpus generator produces small random document sets (markdown
//! prose plus metric-by-year tables); every corpus it can produce must
//! parse, lift, and build into a graph that passes all structural
//! checks, survive persistence byte-for-byte, and behave identically
//! regardless of fact order. On the retrieval side, rankings must be
//! stable under cutoff growth and expansion toggling, and total over
//! arbitrary query strings. Metric arithmetic and value normalization
//! are checked as pure functions.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use satrag::corpus::Corpus;
use satrag::dataset_gen::{pair_fields, Association};
use satrag::eval::{
    canonical_value, cell_metrics_for_sets, hit_at_k, normalize_value, precision_at_k,
    recall_at_k,
};
use satrag::ingest::{parse_document, DocumentFormat};
use satrag::providers::{DefaultSubjectExtractor, MockEmbedder};
use satrag::retrieval::{retrieve, KeywordAnalyzer, Query, RetrievalConfig, RetrievalResult};
use satrag::sat_graph::{
    build_graph, lift_cell_group, load_graph, save_graph, validate_graph, FactTuple, SatGraph,
};
use satrag::synth;

// ------------------------------------------------------- corpus generator

const ENTITY_POOL: [&str; 5] = [
    "Alpha Systems",
    "Beta Industrial",
    "Gamma Logistics",
    "Delta Foods",
    "Epsilon Mining",
];
const METRIC_POOL: [&str; 6] = [
    "Revenue",
    "Operating Cost",
    "Headcount",
    "Gross Margin",
    "Inventory",
    "Shipments",
];
const CAPTION_POOL: [&str; 4] = [
    "Financial Results",
    "Workforce",
    "Regional Sales",
    "Capital Assets",
];

/// One generated table: a slice of the metric pool crossed with a run of
/// consecutive years. Values start above 2100 so no data cell is
/// year-shaped, which keeps header classification unambiguous.
#[derive(Debug, Clone)]
struct TableSpec {
    caption: usize,
    metric_start: usize,
    metric_count: usize,
    year_start: i32,
    year_count: usize,
    values: Vec<u32>,
}

#[derive(Debug, Clone)]
struct CorpusSpec {
    entity_offset: usize,
    docs: Vec<Vec<TableSpec>>,
}

fn table_spec() -> impl Strategy<Value = TableSpec> {
    (
        0..CAPTION_POOL.len(),
        0..3usize,
        1..=4usize,
        2010..=2021i32,
        2..=4usize,
    )
        .prop_flat_map(|(caption, metric_start, metric_count, year_start, year_count)| {
            let cells = metric_count * year_count;
            proptest::collection::vec(2101u32..=99_999, cells).prop_map(move |values| {
                TableSpec {
                    caption,
                    metric_start,
                    metric_count,
                    year_start,
                    year_count,
                    values,
                }
            })
        })
}

fn corpus_spec() -> impl Strategy<Value = CorpusSpec> {
    (
        0..ENTITY_POOL.len(),
        proptest::collection::vec(proptest::collection::vec(table_spec(), 1..=3), 1..=3),
    )
        .prop_map(|(entity_offset, docs)| CorpusSpec { entity_offset, docs })
}

/// Group thousands with commas, exercising the value normalizer on the
/// way back in.
fn with_commas(v: i64) -> String {
    let digits = v.abs().to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if v < 0 {
        format!("-{out}")
    } else {
        out
    }
}

fn render_doc(entity: &str, tables: &[TableSpec]) -> String {
    let mut md = format!(
        "# {entity} Annual Report\n\nOverview paragraph for {entity} covering operations and outlook.\n"
    );
    for t in tables {
        md.push_str(&format!("\n## {}\n\n", CAPTION_POOL[t.caption]));
        md.push_str("| Metric |");
        for y in 0..t.year_count {
            md.push_str(&format!(" {} |", t.year_start + y as i32));
        }
        md.push('\n');
        md.push_str("| --- |");
        md.push_str(&" --- |".repeat(t.year_count));
        md.push('\n');
        for m in 0..t.metric_count {
            md.push_str(&format!("| {} |", METRIC_POOL[t.metric_start + m]));
            for y in 0..t.year_count {
                let v = t.values[m * t.year_count + y];
                // Alternate plain and comma-grouped renderings.
                if v % 2 == 0 {
                    md.push_str(&format!(" {} |", with_commas(v as i64)));
                } else {
                    md.push_str(&format!(" {v} |"));
                }
            }
            md.push('\n');
        }
        md.push_str(&format!(
            "\nThe {} figures above are discussed in the quarterly commentary.\n",
            CAPTION_POOL[t.caption]
        ));
    }
    md
}

fn build_corpus(spec: &CorpusSpec) -> Corpus {
    let mut corpus = Corpus::new();
    for (i, tables) in spec.docs.iter().enumerate() {
        let entity = ENTITY_POOL[(spec.entity_offset + i) % ENTITY_POOL.len()];
        let md = render_doc(entity, tables);
        let parsed = parse_document(&md, DocumentFormat::Markdown)
            .expect("generated markdown parses")
            .document
            .with_doc_id(&format!("doc-{i}"));
        corpus
            .add_document(parsed, Some(entity))
            .expect("doc ids are distinct");
    }
    corpus
}

fn lift_all(corpus: &Corpus) -> Vec<FactTuple> {
    corpus
        .cell_groups(256)
        .iter()
        .map(|cg| lift_cell_group(cg, &DefaultSubjectExtractor).expect("generated cells lift"))
        .collect()
}

// ------------------------------------------------------- shared fixtures

/// The deterministic five-document corpus and its graph, built once.
fn toy() -> &'static (Corpus, SatGraph) {
    static TOY: OnceLock<(Corpus, SatGraph)> = OnceLock::new();
    TOY.get_or_init(|| {
        let corpus = synth::toy_corpus();
        let facts = lift_all(&corpus);
        let graph = build_graph(&facts);
        (corpus, graph)
    })
}

fn run_query(question: &str, cfg: &RetrievalConfig) -> RetrievalResult {
    let (corpus, graph) = toy();
    retrieve(
        graph,
        Some(corpus),
        &Query::new(question),
        cfg,
        &MockEmbedder::default(),
        &KeywordAnalyzer,
    )
}

/// A question the toy graph can answer: either a point lookup or a
/// temporal comparison.
fn toy_question() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..375usize).prop_map(|i| synth::point_lookup_queries()[i].question.clone()),
        (0..30usize).prop_map(|i| synth::comparison_fixtures()[i].question.clone()),
    ]
}

// ------------------------------------------------------ pipeline properties

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every corpus the generator can produce builds a graph that passes
    /// all structural checks, including leaf provenance against the
    /// corpus cell inventory.
    #[test]
    fn random_corpora_build_clean_graphs(spec in corpus_spec()) {
        let corpus = build_corpus(&spec);
        let groups = corpus.cell_groups(256);
        prop_assert!(!groups.is_empty());
        let facts = lift_all(&corpus);
        prop_assert_eq!(facts.len(), groups.len());
        let graph = build_graph(&facts);
        let report = validate_graph(&graph, Some(&corpus.cell_ids()));
        prop_assert!(report.is_clean(), "{}", report.summary());
    }

    /// Graph construction is a pure function of the fact *set*: feeding
    /// the facts in any order yields an identical graph.
    #[test]
    fn fact_order_never_changes_the_graph(spec in corpus_spec(), seed in any::<u64>()) {
        let corpus = build_corpus(&spec);
        let facts = lift_all(&corpus);
        let reference = build_graph(&facts);
        let mut shuffled = facts;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(build_graph(&shuffled), reference);
    }

    /// Save/load is the identity on graphs, for any generated corpus.
    #[test]
    fn graph_persistence_round_trips(spec in corpus_spec()) {
        let corpus = build_corpus(&spec);
        let graph = build_graph(&lift_all(&corpus));
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("graph.json");
        save_graph(&graph, &path).expect("save");
        let loaded = load_graph(&path).expect("load");
        prop_assert_eq!(&loaded, &graph);
        prop_assert_eq!(
            validate_graph(&loaded, Some(&corpus.cell_ids())).summary(),
            validate_graph(&graph, Some(&corpus.cell_ids())).summary()
        );
    }

    /// Save/load is the identity on corpora: documents, entity
    /// annotations, content hash, and the derived cell groups all
    /// survive.
    #[test]
    fn corpus_persistence_round_trips(spec in corpus_spec()) {
        let corpus = build_corpus(&spec);
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("corpus.jsonl");
        corpus.save(&path).expect("save");
        let loaded = Corpus::load(&path).expect("load");
        prop_assert_eq!(&loaded, &corpus);
        prop_assert_eq!(loaded.corpus_hash(), corpus.corpus_hash());
        prop_assert_eq!(loaded.cell_groups(256), corpus.cell_groups(256));
    }

    /// Candidate pairing is a pure function of (corpus, association,
    /// count, seed), and drawn groups respect the requested association.
    #[test]
    fn candidate_pairing_is_seed_deterministic(
        spec in corpus_spec(),
        seed in any::<u64>(),
        n_pairs in 1..6usize,
        which in 0..4usize,
    ) {
        let association = [
            Association::SameDate,
            Association::SameSubject,
            Association::SameEntity,
            Association::Random,
        ][which];
        let corpus = build_corpus(&spec);
        let a = pair_fields(&corpus, association, n_pairs, seed);
        let b = pair_fields(&corpus, association, n_pairs, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                prop_assert!(a.len() <= n_pairs);
                for pair in &a {
                    prop_assert_eq!(pair.association, association);
                    prop_assert!(pair.cells.len() >= 2);
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "same seed diverged: {a:?} vs {b:?}"),
        }
    }
}

// ----------------------------------------------------- retrieval properties

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Raising the cutoff only extends the ranking: the evidence list at
    /// a smaller `top_k` is a prefix of the list at a larger one.
    #[test]
    fn deeper_cutoffs_extend_rankings_in_place(
        question in toy_question(),
        k in 1..=10usize,
        extra in 1..=6usize,
    ) {
        let cfg = RetrievalConfig {
            top_k: k,
            enable_fusion: false,
            ..RetrievalConfig::default()
        };
        let small = run_query(&question, &cfg);
        let large = run_query(&question, &RetrievalConfig { top_k: k + extra, ..cfg });
        prop_assert_eq!(small.evidence.len(), large.evidence.len().min(k));
        prop_assert!(
            large.evidence.starts_with(&small.evidence),
            "ranking reordered between k={} and k={}",
            k,
            k + extra
        );
    }

    /// Neighbor expansion only appends: with it disabled every tuple is
    /// direct (zero hops); enabling it never displaces the top result,
    /// and every expanded tuple sits at least one decay step below it.
    #[test]
    fn expansion_never_displaces_the_top_result(idx in 0..30usize) {
        let question = synth::comparison_fixtures()[idx].question.clone();
        let on_cfg = RetrievalConfig { enable_fusion: false, ..RetrievalConfig::default() };
        let off_cfg = RetrievalConfig { enable_sne: false, ..on_cfg.clone() };
        let on = run_query(&question, &on_cfg);
        let off = run_query(&question, &off_cfg);
        prop_assert!(off.evidence.iter().all(|e| e.hops == 0));
        let (Some(first_on), Some(first_off)) = (on.evidence.first(), off.evidence.first())
        else {
            return Ok(());
        };
        prop_assert_eq!(&first_on.cell_id, &first_off.cell_id);
        prop_assert_eq!(first_on.score, first_off.score);
        for e in &on.evidence {
            if e.hops > 0 {
                prop_assert!(
                    e.score <= 0.9 * first_on.score + 1e-12,
                    "expanded {} at {} outranks decay bound {}",
                    e.cell_id,
                    e.score,
                    0.9 * first_on.score
                );
            }
        }
    }

    /// Retrieval is total over arbitrary query strings: no panic, at
    /// most `top_k` tuples, scores in [0, 1], and the ranking ordered by
    /// score descending with ties broken by cell id ascending.
    #[test]
    fn retrieval_is_total_ordered_and_bounded(
        question in ".{0,60}",
        k in 1..=12usize,
        sne in any::<bool>(),
    ) {
        let cfg = RetrievalConfig {
            top_k: k,
            enable_sne: sne,
            enable_fusion: false,
            ..RetrievalConfig::default()
        };
        let result = run_query(&question, &cfg);
        prop_assert!(result.evidence.len() <= k);
        for e in &result.evidence {
            prop_assert!((0.0..=1.0).contains(&e.score), "score {} out of range", e.score);
        }
        for pair in result.evidence.windows(2) {
            let ordered = pair[0].score > pair[1].score
                || (pair[0].score == pair[1].score && pair[0].cell_id < pair[1].cell_id);
            prop_assert!(
                ordered,
                "ranking out of order: ({}, {}) before ({}, {})",
                pair[0].score,
                pair[0].cell_id,
                pair[1].score,
                pair[1].cell_id
            );
        }
    }
}

// -------------------------------------------------- pure-function properties

/// Strategy for plausible retrieved-id lists (with duplicates possible).
fn id_list(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec("[a-e]/t[0-3]/[1-4]/[1-4]", 0..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Rank metrics stay in [0, 1], grow with the cutoff, and agree on
    /// whether anything was found at all.
    #[test]
    fn rank_metrics_are_bounded_and_consistent(
        retrieved in id_list(14),
        gold in proptest::collection::btree_set("[a-e]/t[0-3]/[1-4]/[1-4]", 1..6),
        k in 1..=12usize,
        bump in 1..=6usize,
    ) {
        let hit = hit_at_k(&retrieved, &gold, k).expect("gold nonempty");
        let recall = recall_at_k(&retrieved, &gold, k).expect("gold nonempty");
        let precision = precision_at_k(&retrieved, &gold, k);
        prop_assert!(hit == 0.0 || hit == 1.0);
        prop_assert!((0.0..=1.0).contains(&recall));
        prop_assert!((0.0..=1.0).contains(&precision));
        prop_assert_eq!(recall > 0.0, hit == 1.0);
        prop_assert_eq!(precision > 0.0, hit == 1.0);

        let deeper_hit = hit_at_k(&retrieved, &gold, k + bump).expect("gold nonempty");
        let deeper_recall = recall_at_k(&retrieved, &gold, k + bump).expect("gold nonempty");
        prop_assert!(deeper_hit >= hit);
        prop_assert!(deeper_recall >= recall);

        prop_assert_eq!(precision_at_k(&retrieved, &gold, 0), 0.0);
    }

    /// Cell-level metrics over grouped deliveries: bounded, and the hit
    /// flag agrees with recall and precision being positive.
    #[test]
    fn cell_metrics_agree_on_emptiness(
        delivered in proptest::collection::vec(id_list(6), 0..5),
        gold in proptest::collection::btree_set("[a-e]/t[0-3]/[1-4]/[1-4]", 1..6),
        k in 1..=8usize,
    ) {
        let (c_hr, c_r, c_p) = cell_metrics_for_sets(&delivered, &gold, k).expect("gold nonempty");
        prop_assert!(c_hr == 0.0 || c_hr == 1.0);
        prop_assert!((0.0..=1.0).contains(&c_r));
        prop_assert!((0.0..=1.0).contains(&c_p));
        prop_assert_eq!(c_r > 0.0, c_hr == 1.0);
        prop_assert_eq!(c_p > 0.0, c_hr == 1.0);
    }

    /// Value normalization sees through thousands separators, currency
    /// prefixes, percent suffixes, and accounting-style negatives.
    #[test]
    fn numeric_normalization_is_decoration_blind(
        v in 0..10_000_000i64,
        currency in 0..4usize,
    ) {
        let plain = v.to_string();
        let grouped = with_commas(v);
        let symbol = ["$", "€", "£", "¥"][currency];
        prop_assert_eq!(normalize_value(&plain), Some(v as f64));
        prop_assert_eq!(normalize_value(&grouped), Some(v as f64));
        prop_assert_eq!(normalize_value(&format!("{symbol}{grouped}")), Some(v as f64));
        prop_assert_eq!(normalize_value(&format!("{grouped}%")), Some(v as f64));
        prop_assert_eq!(normalize_value(&format!("({grouped})")), Some(-(v as f64)));
        prop_assert_eq!(canonical_value(&format!("{symbol}{grouped}")), plain.clone());
        prop_assert_eq!(canonical_value(&format!("({grouped})")), (-v).to_string());
    }
}

// ------------------------------------------------------------- edge cases

#[test]
fn empty_gold_sets_are_rejected_not_divided_by() {
    let retrieved = vec!["d/t0/1/1".to_string()];
    let empty = BTreeSet::new();
    assert!(hit_at_k(&retrieved, &empty, 3).is_err());
    assert!(recall_at_k(&retrieved, &empty, 3).is_err());
    assert!(cell_metrics_for_sets(&[retrieved], &empty, 3).is_err());
}
