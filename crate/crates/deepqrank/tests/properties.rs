//! Property-based invariants over randomized inputs.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::oracle_dcg;
use deepqrank::letor::{
    generate_synthetic, parse_letor_line, serialize_record, split_dataset, Dataset,
    DocumentRecord, FEATURE_DIM,
};
use deepqrank::mdp::{sample_episode, RewardParams};
use deepqrank::metrics::{dcg_at_k, ndcg_at_k, GainMode};

/// Feature values on the 1e-6 grid, which the six-decimal canonical
/// serialization represents exactly.
fn arb_grid_features() -> impl Strategy<Value = [f64; FEATURE_DIM]> {
    prop::collection::vec(0..=1_000_000i64, FEATURE_DIM).prop_map(|v| {
        let mut features = [0.0; FEATURE_DIM];
        for (f, micros) in features.iter_mut().zip(v) {
            *f = micros as f64 / 1e6;
        }
        features
    })
}

fn arb_record() -> impl Strategy<Value = DocumentRecord> {
    ("[a-z0-9]{1,8}", 0u32..100, arb_grid_features(), 0usize..10_000).prop_map(
        |(query_id, rank_label, features, doc_index)| DocumentRecord {
            query_id,
            rank_label,
            features,
            doc_index,
        },
    )
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(record in arb_record()) {
        let line = serialize_record(&record);
        let parsed = parse_letor_line(&line, record.doc_index).unwrap();
        prop_assert_eq!(&parsed, &record);
        // canonical text is a fixed point
        prop_assert_eq!(serialize_record(&parsed), line);
    }

    #[test]
    fn splits_partition_queries(
        n_queries in 3usize..30,
        seed in any::<u64>(),
        cut_a in 0.1f64..0.8,
        cut_b in 0.1f64..0.8,
    ) {
        // turn two cut points into three positive fractions summing to 1
        let (lo, hi) = if cut_a <= cut_b { (cut_a, cut_b) } else { (cut_b, cut_a) };
        let fractions = (lo.max(0.05), (hi - lo).max(0.05), (1.0 - hi.max(lo + 0.05)).max(0.05));
        let total = fractions.0 + fractions.1 + fractions.2;
        let fractions = (fractions.0 / total, fractions.1 / total, fractions.2 / total);

        let ds = generate_synthetic(n_queries, 2, 0.0, seed).unwrap();
        let (a, b, c) = split_dataset(&ds, fractions, seed).unwrap();
        let mut ids: Vec<String> = a
            .query_ids()
            .chain(b.query_ids())
            .chain(c.query_ids())
            .map(str::to_owned)
            .collect();
        prop_assert_eq!(ids.len(), n_queries);
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), n_queries, "splits must be disjoint");
        prop_assert_eq!(
            a.num_documents() + b.num_documents() + c.num_documents(),
            ds.num_documents()
        );
    }

    #[test]
    fn synthetic_labels_are_exactly_one_to_n(
        queries in 1usize..6,
        docs in 2usize..9,
        noise in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let ds = generate_synthetic(queries, docs, noise, seed).unwrap();
        for group in ds.groups() {
            let mut labels: Vec<u32> = group.documents().iter().map(|d| d.rank_label).collect();
            labels.sort_unstable();
            let expected: Vec<u32> = (1..=docs as u32).collect();
            prop_assert_eq!(labels, expected);
        }
    }

    #[test]
    fn episodes_cover_the_group_exactly_once(
        docs in 1usize..12,
        seed in any::<u64>(),
    ) {
        let ds = if docs == 1 {
            Dataset::from_records(vec![DocumentRecord {
                query_id: "q".into(),
                rank_label: 1,
                features: [0.0; FEATURE_DIM],
                doc_index: 0,
            }], "mem").unwrap()
        } else {
            generate_synthetic(1, docs, 0.1, seed).unwrap()
        };
        let group = &ds.groups()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let episode = sample_episode(group, &RewardParams::default(), &mut rng);
        prop_assert_eq!(episode.len(), docs);
        let mut actions: Vec<usize> = episode.iter().map(|tr| tr.action.doc_index).collect();
        actions.sort_unstable();
        let mut members: Vec<usize> = group.documents().iter().map(|d| d.doc_index).collect();
        members.sort_unstable();
        prop_assert_eq!(actions, members);
        for (i, tr) in episode.iter().enumerate() {
            prop_assert_eq!(tr.state.t(), i);
            prop_assert_eq!(&tr.next_state, &tr.state.apply_action(tr.action).unwrap());
        }
        prop_assert!(episode.last().unwrap().next_state.is_terminal());
    }

    #[test]
    fn ndcg_is_bounded_and_descending_is_ideal(
        labels in prop::collection::vec(0u32..50, 1..12),
        k in 1usize..12,
    ) {
        let mode = GainMode::Linear;
        let got = ndcg_at_k(&labels, k, mode).unwrap();
        prop_assert!((0.0..=1.0).contains(&got));

        let mut descending = labels.clone();
        descending.sort_unstable_by(|a, b| b.cmp(a));
        let ideal = ndcg_at_k(&descending, k, mode).unwrap();
        prop_assert!(got <= ideal + 1e-12);
        if descending.iter().any(|&l| l > 0) {
            prop_assert_eq!(ideal, 1.0);
        }
    }

    #[test]
    fn dcg_matches_the_independent_oracle(
        labels in prop::collection::vec(0u32..40, 1..10),
        k in 1usize..10,
    ) {
        for mode in [GainMode::Linear, GainMode::Exponential] {
            let got = dcg_at_k(&labels, k, mode).unwrap();
            let oracle = oracle_dcg(&labels, k, mode);
            prop_assert!((got - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
        }
    }
}
