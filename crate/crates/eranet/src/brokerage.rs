//! Brokerage role counting over non-transitive two-paths, with eras as the
//! group partition.
//!
//! For every ordered edge pair A->B, B->C with A != C and no tie A->C, the
//! middle node B brokers between A and C. With era order enforced
//! (era(A) <= era(B) <= era(C)) exactly four roles are possible:
//! coordinator (all three eras equal), gatekeeper (A earlier), representative
//! (C later), and liaison (both different). The consultant role, where A and
//! C share an era that differs from B's, would require a reverse era link
//! and therefore never occurs on a repaired network.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::chronology::find_reverse_links;
use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::model::InfluenceNetwork;

/// Raw role counts of one scholar.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BrokerageScores {
    pub id: String,
    pub era: usize,
    pub coordinator: u64,
    pub gatekeeper: u64,
    pub representative: u64,
    pub liaison: u64,
    /// Impossible on a repaired network; kept to make the invariant visible.
    pub consultant: u64,
}

impl BrokerageScores {
    /// How many distinct roles the scholar holds (count >= 1 each).
    pub fn distinct_roles(&self) -> usize {
        [self.coordinator, self.gatekeeper, self.representative, self.liaison, self.consultant]
            .iter()
            .filter(|&&count| count > 0)
            .count()
    }

    pub fn total(&self) -> u64 {
        self.coordinator + self.gatekeeper + self.representative + self.liaison + self.consultant
    }
}

/// One of the four reachable Gould-Fernandez roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Coordinator,
    Gatekeeper,
    Representative,
    Liaison,
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coordinator" => Ok(Role::Coordinator),
            "gatekeeper" => Ok(Role::Gatekeeper),
            "representative" => Ok(Role::Representative),
            "liaison" => Ok(Role::Liaison),
            other => Err(Error::Config(format!("unknown brokerage role `{other}`"))),
        }
    }
}

/// Count every scholar's brokerage roles.
///
/// Errors if the network still has reverse era links. Enumeration runs per
/// middle node and parallelizes across them; counts are exact integers, so
/// the result does not depend on the thread count.
pub fn brokerage_scores(network: &InfluenceNetwork) -> Result<BTreeMap<String, BrokerageScores>> {
    if !find_reverse_links(network)?.is_empty() {
        return Err(Error::UnrepairedNetwork);
    }
    let nodes = network.scholars().map(|s| s.id.clone()).collect();
    let edges = network.edges().map(|(s, t)| (s.to_owned(), t.to_owned())).collect();
    let g = DiGraph::new(&nodes, &edges);
    let eras: Vec<usize> = network
        .scholars()
        .map(|s| s.era_index.ok_or_else(|| Error::MissingEra(s.id.clone())))
        .collect::<Result<_>>()?;

    let per_node: Vec<BrokerageScores> = (0..g.node_count())
        .into_par_iter()
        .map(|b| {
            let mut scores = BrokerageScores {
                id: g.ids[b].clone(),
                era: eras[b],
                ..BrokerageScores::default()
            };
            for &a in &g.incoming[b] {
                for &c in &g.out[b] {
                    if a == c || g.has_edge(a, c) {
                        continue;
                    }
                    match (eras[a] == eras[b], eras[b] == eras[c]) {
                        (true, true) => scores.coordinator += 1,
                        (false, true) => scores.gatekeeper += 1,
                        (true, false) => scores.representative += 1,
                        (false, false) => scores.liaison += 1,
                    }
                }
            }
            scores
        })
        .collect();

    Ok(per_node.into_iter().map(|s| (s.id.clone(), s)).collect())
}

/// Counts and fractions of scholars holding exactly 1..=4 distinct roles.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RoleBuckets {
    /// `counts[r-1]` is how many scholars hold exactly `r` distinct roles.
    pub counts: [usize; 4],
    /// Fractions over the full scholar population of the group.
    pub fractions: [f64; 4],
    pub population: usize,
}

impl RoleBuckets {
    fn tally(&mut self, distinct: usize) {
        if (1..=4).contains(&distinct) {
            self.counts[distinct - 1] += 1;
        }
    }

    fn finish(&mut self) {
        if self.population > 0 {
            for i in 0..4 {
                self.fractions[i] = self.counts[i] as f64 / self.population as f64;
            }
        }
    }
}

/// Role-count distribution per era plus the overall row, with fractions over
/// all scholars of the era (not just brokers).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoleDistribution {
    pub per_era: Vec<RoleBuckets>,
    pub overall: RoleBuckets,
}

pub fn role_count_distribution(
    scores: &BTreeMap<String, BrokerageScores>,
    network: &InfluenceNetwork,
) -> RoleDistribution {
    let k = network.era_scheme().len();
    let mut per_era = vec![RoleBuckets::default(); k];
    let mut overall = RoleBuckets::default();
    let populations = network.era_populations();
    for (era, bucket) in per_era.iter_mut().enumerate() {
        bucket.population = populations[era];
    }
    overall.population = populations.iter().sum();

    for score in scores.values() {
        let distinct = score.distinct_roles();
        if score.era < k {
            per_era[score.era].tally(distinct);
        }
        overall.tally(distinct);
    }
    for bucket in per_era.iter_mut() {
        bucket.finish();
    }
    overall.finish();
    RoleDistribution { per_era, overall }
}

/// Top-k scholars of one era by one role count, descending, ties broken
/// lexicographically by id.
pub fn top_brokers(
    scores: &BTreeMap<String, BrokerageScores>,
    role: Role,
    era: usize,
    k: usize,
) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = scores
        .values()
        .filter(|s| s.era == era)
        .map(|s| {
            let count = match role {
                Role::Coordinator => s.coordinator,
                Role::Gatekeeper => s.gatekeeper,
                Role::Representative => s.representative,
                Role::Liaison => s.liaison,
            };
            (s.id.clone(), count)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// CSV export: `id,era,coordinator,gatekeeper,representative,liaison`.
pub fn scores_csv(scores: &BTreeMap<String, BrokerageScores>) -> String {
    let mut out = String::from("id,era,coordinator,gatekeeper,representative,liaison\n");
    for s in scores.values() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.id, s.era, s.coordinator, s.gatekeeper, s.representative, s.liaison
        ));
    }
    out
}

/// CSV export of the role-count distribution table.
pub fn distribution_csv(distribution: &RoleDistribution, network: &InfluenceNetwork) -> String {
    let mut out = String::from("era,roles_1,frac_1,roles_2,frac_2,roles_3,frac_3,roles_4,frac_4\n");
    let mut push_row = |name: &str, bucket: &RoleBuckets| {
        out.push_str(name);
        for i in 0..4 {
            out.push_str(&format!(",{},{}", bucket.counts[i], bucket.fractions[i]));
        }
        out.push('\n');
    };
    for (era, bucket) in distribution.per_era.iter().enumerate() {
        push_row(network.era_scheme().name(era), bucket);
    }
    push_row("overall", &distribution.overall);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Era, EraScheme, InfluenceNetwork, Scholar};

    fn network(eras: &[(&str, usize)], edges: &[(&str, &str)]) -> InfluenceNetwork {
        let scheme = EraScheme::new(
            (0..6).map(|i| Era::new(format!("E{i}"), (i + 1) * 100)).collect(),
        )
        .unwrap();
        let mut n = InfluenceNetwork::new(scheme);
        for (id, era) in eras {
            let mut s = Scholar::new(*id, *id, 0, 50);
            s.era_index = Some(*era);
            n.insert_scholar(s);
        }
        for (s, t) in edges {
            n.insert_edge(*s, *t);
        }
        n
    }

    #[test]
    fn coordinator_within_one_era() {
        let n = network(&[("a", 1), ("b", 1), ("c", 1)], &[("a", "b"), ("b", "c")]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].coordinator, 1);
        assert_eq!(scores["b"].total(), 1);
    }

    #[test]
    fn gatekeeper_receives_from_an_earlier_era() {
        let n = network(&[("a", 0), ("b", 1), ("c", 1)], &[("a", "b"), ("b", "c")]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].gatekeeper, 1);
    }

    #[test]
    fn representative_passes_to_a_later_era() {
        let n = network(&[("a", 1), ("b", 1), ("c", 2)], &[("a", "b"), ("b", "c")]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].representative, 1);
    }

    #[test]
    fn liaison_spans_three_eras() {
        let n = network(&[("a", 0), ("b", 1), ("c", 2)], &[("a", "b"), ("b", "c")]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].liaison, 1);
    }

    #[test]
    fn transitive_triads_are_skipped() {
        let n = network(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b"), ("b", "c"), ("a", "c")],
        );
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].total(), 0);
    }

    #[test]
    fn mutual_dyads_do_not_count_as_two_paths() {
        // a->b, b->a gives the two-path a->b->a with A = C, which is excluded.
        let n = network(&[("a", 1), ("b", 1)], &[("a", "b"), ("b", "a")]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["a"].total(), 0);
        assert_eq!(scores["b"].total(), 0);
    }

    #[test]
    fn unrepaired_network_is_rejected() {
        let n = network(&[("late", 2), ("early", 0)], &[("late", "early")]);
        assert!(matches!(brokerage_scores(&n), Err(Error::UnrepairedNetwork)));
    }

    #[test]
    fn consultant_is_always_zero() {
        let n = network(
            &[("a", 0), ("b", 1), ("c", 2), ("d", 1), ("e", 1)],
            &[("a", "b"), ("b", "c"), ("d", "b"), ("b", "e"), ("a", "d"), ("e", "c")],
        );
        let scores = brokerage_scores(&n).unwrap();
        assert!(scores.values().all(|s| s.consultant == 0));
    }

    #[test]
    fn distribution_counts_distinct_roles() {
        // b: coordinator (a1->b->e) and representative (a1->b->c2) => 2 roles.
        let n = network(
            &[("a1", 1), ("b", 1), ("c2", 2), ("e", 1), ("lone", 0)],
            &[("a1", "b"), ("b", "c2"), ("b", "e")],
        );
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].distinct_roles(), 2);
        let distribution = role_count_distribution(&scores, &n);
        assert_eq!(distribution.per_era[1].counts, [0, 1, 0, 0]);
        assert_eq!(distribution.per_era[1].population, 3);
        assert_eq!(distribution.overall.counts, [0, 1, 0, 0]);
        assert!((distribution.per_era[1].fractions[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_role_scholar_lands_in_bucket_one() {
        let n = network(&[("a", 1), ("b", 1), ("c", 1), ("d", 1)], &[
            ("a", "b"),
            ("b", "c"),
            ("b", "d"),
        ]);
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].coordinator, 2);
        let distribution = role_count_distribution(&scores, &n);
        assert_eq!(distribution.per_era[1].counts[0], 1);
    }

    #[test]
    fn first_era_scholars_hold_at_most_two_roles() {
        // A first-era broker can only coordinate or represent.
        let n = network(
            &[("a", 0), ("b", 0), ("c", 0), ("d", 3), ("e", 2)],
            &[("a", "b"), ("b", "c"), ("b", "d"), ("b", "e")],
        );
        let scores = brokerage_scores(&n).unwrap();
        assert_eq!(scores["b"].gatekeeper, 0);
        assert_eq!(scores["b"].liaison, 0);
        assert!(scores["b"].distinct_roles() <= 2);
    }

    #[test]
    fn top_brokers_rank_with_lexicographic_ties() {
        let n = network(
            &[("p", 1), ("q", 1), ("x", 1), ("y", 1), ("z", 1), ("w", 1)],
            &[
                ("x", "p"), ("p", "y"), ("p", "z"),   // p: 2 coordinator paths
                ("x", "q"), ("q", "y"), ("q", "z"),   // q: 2 coordinator paths
                ("x", "w"),                            // w: none
            ],
        );
        let scores = brokerage_scores(&n).unwrap();
        let top = top_brokers(&scores, Role::Coordinator, 1, 2);
        assert_eq!(top, vec![("p".to_string(), 2), ("q".to_string(), 2)]);
    }

    #[test]
    fn score_sum_equals_two_path_count() {
        let n = network(
            &[("a", 0), ("b", 1), ("c", 2), ("d", 1)],
            &[("a", "b"), ("b", "c"), ("b", "d"), ("d", "c")],
        );
        let scores = brokerage_scores(&n).unwrap();
        // By hand: a->b->c (liaison for b), a->b->d (gatekeeper for b);
        // b->d->c is transitive because b->c exists.
        let total: u64 = scores.values().map(BrokerageScores::total).sum();
        assert_eq!(total, 2);
        assert_eq!(scores["b"].liaison, 1);
        assert_eq!(scores["b"].gatekeeper, 1);
        assert_eq!(scores["d"].total(), 0);
    }
}
