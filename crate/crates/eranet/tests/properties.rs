//! Property tests for the cross-module invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;

use eranet::chronology::{self, RepairPolicy};
use eranet::community::jaccard;
use eranet::influence;
use eranet::ingest::{impute_dates, Imputation, RawActorRecord};
use eranet::model::{validate_network, EraScheme, InfluenceNetwork, Scholar};
use eranet::slicing::{self, SliceKind};

fn record(birth: Option<i32>, death: Option<i32>) -> RawActorRecord {
    RawActorRecord { id: "r".into(), label: "R".into(), birth_year: birth, death_year: death }
}

proptest! {
    /// Imputation never emits a death year past the horizon and passes
    /// provided values through bit-exactly.
    #[test]
    fn imputation_respects_horizon_and_inputs(
        birth in prop::option::of(-1000i32..2020),
        death in prop::option::of(-1000i32..2020),
        span in 1i32..200,
    ) {
        match impute_dates(&record(birth, death), span, 2020) {
            Imputation::Resolved(s) => {
                if let Some(b) = birth {
                    prop_assert_eq!(s.birth_year, b);
                } else {
                    prop_assert!(s.birth_imputed);
                    prop_assert!(s.death_year <= 2020 || death == Some(s.death_year));
                }
                if let Some(d) = death {
                    prop_assert_eq!(s.death_year, d);
                } else {
                    prop_assert!(s.death_imputed);
                    prop_assert!(s.death_year <= 2020);
                }
            }
            Imputation::Unresolved(_) => {
                prop_assert!(birth.is_none() && death.is_none());
            }
        }
    }

    /// Jaccard is symmetric and equals 1 exactly when the sets are equal.
    #[test]
    fn jaccard_symmetry_and_identity(
        a in prop::collection::btree_set(0u16..50, 0..20),
        b in prop::collection::btree_set(0u16..50, 0..20),
    ) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let ab = jaccard(&a, &b).unwrap();
        let ba = jaccard(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if a == b {
            prop_assert_eq!(ab, 1.0);
        } else {
            prop_assert!(ab < 1.0);
        }
    }
}

/// Build a network from generated lifespans and edge index pairs.
fn build_network(lifespans: &[(i32, i32)], edges: &[(usize, usize)]) -> InfluenceNetwork {
    let mut network = InfluenceNetwork::new(EraScheme::default_scheme());
    for (i, &(birth, len)) in lifespans.iter().enumerate() {
        let death = (birth + len).min(2020);
        network.insert_scholar(Scholar::new(format!("s{i:03}"), format!("S{i}"), birth, death));
    }
    let n = lifespans.len();
    for &(s, t) in edges {
        let (s, t) = (s % n, t % n);
        if s != t {
            network.insert_edge(format!("s{s:03}"), format!("s{t:03}"));
        }
    }
    chronology::assign_all(&mut network, 20).unwrap();
    network
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Repair reaches a reverse-link-free fixpoint under every policy,
    /// within the move bound, keeping exactly one era per scholar.
    #[test]
    fn repair_reaches_fixpoint_under_all_policies(
        lifespans in prop::collection::vec((-800i32..1990, 1i32..90), 2..40),
        edges in prop::collection::vec((0usize..64, 0usize..64), 0..80),
        policy_index in 0usize..3,
    ) {
        let policy = [
            RepairPolicy::MinimalDisplacement,
            RepairPolicy::InfluencerBackward,
            RepairPolicy::InfluencedForward,
        ][policy_index];
        let network = build_network(&lifespans, &edges);
        let bound = network.edge_count() * network.era_scheme().len();
        let (repaired, trace) = chronology::repair_assignments(&network, policy).unwrap();
        prop_assert!(chronology::find_reverse_links(&repaired).unwrap().is_empty());
        prop_assert!(trace.moves.len() <= bound);
        let k = repaired.era_scheme().len();
        for scholar in repaired.scholars() {
            prop_assert!(matches!(scholar.era_index, Some(e) if e < k));
        }
    }

    /// Signature totals equal out-degrees, pattern fractions sum to one,
    /// and degree totals are conserved across the slice partition.
    #[test]
    fn signatures_and_slices_conserve_degrees(
        lifespans in prop::collection::vec((-800i32..1990, 1i32..90), 2..40),
        edges in prop::collection::vec((0usize..64, 0usize..64), 0..80),
    ) {
        let network = build_network(&lifespans, &edges);
        let (network, _) =
            chronology::repair_assignments(&network, RepairPolicy::MinimalDisplacement).unwrap();

        let signatures = influence::all_signatures(&network).unwrap();
        let total: u64 = signatures.iter().map(|s| s.total()).sum();
        prop_assert_eq!(total, network.edge_count() as u64);
        for sig in &signatures {
            let out_degree = network.edges().filter(|(s, _)| *s == sig.id).count() as u64;
            prop_assert_eq!(sig.total(), out_degree);
            prop_assert_eq!(sig.values.len(), network.era_scheme().len() - sig.own_era);
        }

        for era in 0..network.era_scheme().len() {
            let table = influence::pattern_frequencies(&network, era).unwrap();
            if !table.is_empty() {
                let sum: f64 = table.iter().map(|r| r.fraction).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }

        // The flat slices partition the edge set.
        let slices = slicing::all_flat_slices(&network).unwrap();
        let mut union = BTreeSet::new();
        let mut count = 0usize;
        for pn in &slices {
            count += pn.edge_count();
            union.extend(pn.edges.iter().cloned());
        }
        prop_assert_eq!(count, network.edge_count());
        prop_assert_eq!(union.len(), network.edge_count());
    }

    /// validate_network is pure: it leaves the network untouched and
    /// returns the same report when called twice.
    #[test]
    fn validation_is_idempotent(
        lifespans in prop::collection::vec((-800i32..1990, 1i32..90), 2..20),
        edges in prop::collection::vec((0usize..32, 0usize..32), 0..40),
    ) {
        let network = build_network(&lifespans, &edges);
        let snapshot = network.clone();
        let first = validate_network(&network);
        let second = validate_network(&network);
        prop_assert_eq!(&network, &snapshot);
        prop_assert_eq!(first, second);
    }

    /// Within-era participation is at most 1 relative to the era population.
    #[test]
    fn participation_ratio_is_bounded(
        lifespans in prop::collection::vec((-800i32..1990, 1i32..90), 2..40),
        edges in prop::collection::vec((0usize..64, 0usize..64), 0..80),
    ) {
        let network = build_network(&lifespans, &edges);
        let (network, _) =
            chronology::repair_assignments(&network, RepairPolicy::MinimalDisplacement).unwrap();
        let populations = network.era_populations();
        for era in 0..network.era_scheme().len() {
            let pn = slicing::slice(&network, SliceKind::Within(era)).unwrap();
            let m = eranet::metrics::unipartite_metrics(&pn, Some(populations[era])).unwrap();
            if let Some(ratio) = m.participation_ratio {
                prop_assert!(ratio <= 1.0 + 1e-12);
            }
        }
    }
}
