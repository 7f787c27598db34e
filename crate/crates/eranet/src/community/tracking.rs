//! Dynamic community tracking across era steps.
//!
//! Step communities from consecutive partitions are matched against the
//! fronts (most recent observations) of the dynamic communities tracked so
//! far. A pair matches when its Jaccard similarity strictly exceeds the
//! threshold theta; many-to-many matches are allowed, so merges and splits
//! can co-occur within one step. The life-cycle events are: continuation
//! (one-to-one match), merge (several fronts match one step community),
//! split (one front matches several step communities, branching a new
//! dynamic community that shares the old timeline), birth (a step community
//! with no matching front), and death (a front unmatched for at least
//! `death_window` consecutive steps).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::community::{diversity, jaccard, percentile, CommunityPartition};
use crate::error::{Error, Result};

/// Matching threshold and death window for a tracking run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct TrackingConfig {
    /// Jaccard similarity must strictly exceed this to match, in [0, 1].
    pub theta: f64,
    /// Consecutive unobserved steps after which a dynamic community dies.
    pub death_window: usize,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig { theta: 0.3, death_window: 1 }
    }
}

impl TrackingConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must be in [0, 1], got {}", self.theta)));
        }
        if self.death_window == 0 {
            return Err(Error::Config("death_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// A community tracked across steps: its timeline of step communities and
/// its front (the most recent member set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicCommunity {
    pub id: u32,
    /// `(step, step community id)` pairs, strictly increasing in step.
    pub timeline: Vec<(usize, u32)>,
    /// Member set of the most recent observation.
    pub front: BTreeSet<String>,
    pub dead: bool,
    pub steps_unobserved: usize,
    pub born_step: usize,
}

impl DynamicCommunity {
    /// Steps at which this community was observed.
    pub fn observed_steps(&self) -> Vec<usize> {
        self.timeline.iter().map(|&(step, _)| step).collect()
    }
}

/// Life-cycle event kinds, in the order they are reported within a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Continuation,
    Merge,
    Split,
    Birth,
    Death,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Continuation => "continuation",
            EventKind::Merge => "merge",
            EventKind::Split => "split",
            EventKind::Birth => "birth",
            EventKind::Death => "death",
        };
        f.write_str(s)
    }
}

/// One event in the tracking log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrackingEvent {
    pub step: usize,
    pub kind: EventKind,
    /// Dynamic communities involved: `[parent, child]` for splits, all
    /// merged ids for merges, a single id otherwise.
    pub dynamic_ids: Vec<u32>,
    /// The step community involved; absent for deaths.
    pub step_community: Option<u32>,
}

/// Outcome of a tracking run.
#[derive(Clone, Debug, Default)]
pub struct TrackingResult {
    /// Every dynamic community ever created, dead ones included, by id.
    pub communities: Vec<DynamicCommunity>,
    pub events: Vec<TrackingEvent>,
}

impl TrackingResult {
    /// CSV export: `step,event,dynamic_ids,step_community_id` with ids
    /// separated by `;`.
    pub fn events_csv(&self) -> String {
        let mut out = String::from("step,event,dynamic_ids,step_community_id\n");
        for event in &self.events {
            let ids: Vec<String> = event.dynamic_ids.iter().map(u32::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                event.step,
                event.kind,
                ids.join(";"),
                event.step_community.map(|c| c.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}

/// Track dynamic communities across an ordered sequence of partitions.
///
/// The first partition seeds one dynamic community per step community
/// (initialization, not logged as births). Each later step compares every
/// (step community, front) pair in ascending `(step community id, dynamic
/// id)` order and applies the event rules. Fully deterministic.
pub fn track(partitions: &[CommunityPartition], config: &TrackingConfig) -> Result<TrackingResult> {
    config.validate()?;
    let mut result = TrackingResult::default();
    let Some((first, rest)) = partitions.split_first() else {
        return Ok(result);
    };
    for window in partitions.windows(2) {
        if window[1].step <= window[0].step {
            return Err(Error::Config(format!(
                "partitions must have strictly increasing steps ({} then {})",
                window[0].step, window[1].step
            )));
        }
    }

    for (&community, members) in first.members().iter() {
        result.communities.push(DynamicCommunity {
            id: community,
            timeline: vec![(first.step, community)],
            front: members.clone(),
            dead: false,
            steps_unobserved: 0,
            born_step: first.step,
        });
    }

    for partition in rest {
        let step = partition.step;
        let step_members = partition.members();
        let active: Vec<u32> = result
            .communities
            .iter()
            .filter(|d| !d.dead)
            .map(|d| d.id)
            .collect();

        // All matching pairs, compared in (step community id, dynamic id)
        // ascending order.
        let mut matches_of_front: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let mut matches_of_comm: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (&community, members) in &step_members {
            for &dynamic_id in &active {
                let front = &result.communities[dynamic_id as usize].front;
                if members.is_empty() && front.is_empty() {
                    continue;
                }
                if jaccard(members, front)? > config.theta {
                    matches_of_front.entry(dynamic_id).or_default().push(community);
                    matches_of_comm.entry(community).or_default().push(dynamic_id);
                }
            }
        }

        // Timelines as of the previous step, for split branches.
        let prior: BTreeMap<u32, Vec<(usize, u32)>> = result
            .communities
            .iter()
            .map(|d| (d.id, d.timeline.clone()))
            .collect();

        let mut step_events = Vec::new();

        // First match continues the dynamic community; further matches
        // branch new ones sharing the prior timeline.
        let mut assigned: BTreeMap<u32, Vec<u32>> = BTreeMap::new(); // step comm -> dynamics
        let mut split_children: BTreeSet<u32> = BTreeSet::new();
        for (&dynamic_id, communities) in &matches_of_front {
            for (i, &community) in communities.iter().enumerate() {
                if i == 0 {
                    let d = &mut result.communities[dynamic_id as usize];
                    d.timeline.push((step, community));
                    d.steps_unobserved = 0;
                    assigned.entry(community).or_default().push(dynamic_id);
                } else {
                    let child_id = result.communities.len() as u32;
                    let mut timeline = prior[&dynamic_id].clone();
                    timeline.push((step, community));
                    result.communities.push(DynamicCommunity {
                        id: child_id,
                        timeline,
                        front: BTreeSet::new(), // set below from the step community
                        dead: false,
                        steps_unobserved: 0,
                        born_step: prior[&dynamic_id].first().map(|&(s, _)| s).unwrap_or(step),
                    });
                    step_events.push(TrackingEvent {
                        step,
                        kind: EventKind::Split,
                        dynamic_ids: vec![dynamic_id, child_id],
                        step_community: Some(community),
                    });
                    split_children.insert(child_id);
                    assigned.entry(community).or_default().push(child_id);
                }
            }
        }

        // Update fronts and emit continuation/merge events per step community.
        let mut continuations = Vec::new();
        let mut merges = Vec::new();
        for (&community, dynamics) in &assigned {
            let members = &step_members[&community];
            for &dynamic_id in dynamics {
                result.communities[dynamic_id as usize].front = members.clone();
            }
            if dynamics.len() > 1 {
                merges.push(TrackingEvent {
                    step,
                    kind: EventKind::Merge,
                    dynamic_ids: dynamics.clone(),
                    step_community: Some(community),
                });
            } else if !split_children.contains(&dynamics[0])
                && matches_of_front[&dynamics[0]].len() == 1
            {
                continuations.push(TrackingEvent {
                    step,
                    kind: EventKind::Continuation,
                    dynamic_ids: dynamics.clone(),
                    step_community: Some(community),
                });
            }
        }

        // Births: step communities that matched nothing.
        let mut births = Vec::new();
        for (&community, members) in &step_members {
            if matches_of_comm.contains_key(&community) {
                continue;
            }
            let new_id = result.communities.len() as u32;
            result.communities.push(DynamicCommunity {
                id: new_id,
                timeline: vec![(step, community)],
                front: members.clone(),
                dead: false,
                steps_unobserved: 0,
                born_step: step,
            });
            births.push(TrackingEvent {
                step,
                kind: EventKind::Birth,
                dynamic_ids: vec![new_id],
                step_community: Some(community),
            });
        }

        // Deaths: active fronts unmatched for death_window steps.
        let mut deaths = Vec::new();
        for &dynamic_id in &active {
            if matches_of_front.contains_key(&dynamic_id) {
                continue;
            }
            let d = &mut result.communities[dynamic_id as usize];
            d.steps_unobserved += 1;
            if d.steps_unobserved >= config.death_window {
                d.dead = true;
                deaths.push(TrackingEvent {
                    step,
                    kind: EventKind::Death,
                    dynamic_ids: vec![dynamic_id],
                    step_community: None,
                });
            }
        }

        result.events.extend(continuations);
        result.events.extend(merges);
        result.events.extend(step_events);
        result.events.extend(births);
        result.events.extend(deaths);
    }

    Ok(result)
}

/// Summary statistics used in the sweep table.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StatsSummary {
    pub mean: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

fn summarize(values: &[f64]) -> StatsSummary {
    if values.is_empty() {
        return StatsSummary::default();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    StatsSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: percentile(&sorted, 0.5),
        q75: percentile(&sorted, 0.75),
        max: *sorted.last().unwrap(),
    }
}

/// One row of the threshold sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    /// Dynamic communities created over the whole run.
    pub dynamic_count: usize,
    /// Dynamic communities involved in at least one continuation.
    pub continued_count: usize,
    /// Dynamic communities involved in at least one merge.
    pub merged_count: usize,
    /// Front sizes over all dynamic communities.
    pub member_stats: StatsSummary,
    /// Era diversity of the fronts.
    pub diversity_stats: StatsSummary,
}

/// Re-run tracking for each theta and summarize every run independently.
///
/// `eras` maps node ids to era indices for the diversity statistics.
pub fn theta_sweep(
    partitions: &[CommunityPartition],
    thetas: &[f64],
    death_window: usize,
    eras: &BTreeMap<String, usize>,
    era_count: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let result = track(partitions, &TrackingConfig { theta, death_window })?;
        let mut continued: BTreeSet<u32> = BTreeSet::new();
        let mut merged: BTreeSet<u32> = BTreeSet::new();
        for event in &result.events {
            match event.kind {
                EventKind::Continuation => continued.extend(&event.dynamic_ids),
                EventKind::Merge => merged.extend(&event.dynamic_ids),
                _ => {}
            }
        }
        let sizes: Vec<f64> = result.communities.iter().map(|d| d.front.len() as f64).collect();
        let mut diversities = Vec::with_capacity(result.communities.len());
        for community in &result.communities {
            let member_eras: Vec<usize> = community
                .front
                .iter()
                .map(|id| eras.get(id).copied().ok_or_else(|| Error::UnknownScholar(id.clone())))
                .collect::<Result<_>>()?;
            diversities.push(diversity(&member_eras, era_count)?);
        }
        rows.push(SweepRow {
            theta,
            dynamic_count: result.communities.len(),
            continued_count: continued.len(),
            merged_count: merged.len(),
            member_stats: summarize(&sizes),
            diversity_stats: summarize(&diversities),
        });
    }
    Ok(rows)
}

/// CSV export of a sweep table.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "theta,dynamic_count,continued_count,merged_count,\
         members_mean,members_median,members_q75,members_max,\
         diversity_mean,diversity_median,diversity_q75,diversity_max\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.theta,
            row.dynamic_count,
            row.continued_count,
            row.merged_count,
            row.member_stats.mean,
            row.member_stats.median,
            row.member_stats.q75,
            row.member_stats.max,
            row.diversity_stats.mean,
            row.diversity_stats.median,
            row.diversity_stats.q75,
            row.diversity_stats.max,
        ));
    }
    out
}

/// A presence pattern: which era steps a dynamic community was observed at.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PresencePattern {
    /// `marks[step]` is set when the pattern has an observation at that step.
    pub marks: Vec<bool>,
    pub count: usize,
    /// Mean front size of the communities sharing the pattern.
    pub avg_size: f64,
}

impl fmt::Display for PresencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &mark in &self.marks {
            f.write_str(if mark { "X" } else { "0" })?;
        }
        Ok(())
    }
}

/// Group dynamic communities by their presence pattern over `step_count`
/// steps, with counts and average front size. Sorted by first observed step,
/// then by pattern text.
pub fn era_presence_patterns(
    communities: &[DynamicCommunity],
    step_count: usize,
) -> Result<Vec<PresencePattern>> {
    let mut groups: BTreeMap<Vec<bool>, (usize, usize)> = BTreeMap::new();
    for community in communities {
        let mut marks = vec![false; step_count];
        for &(step, _) in &community.timeline {
            if step >= step_count {
                return Err(Error::Internal(format!(
                    "timeline step {step} out of range for {step_count} steps"
                )));
            }
            marks[step] = true;
        }
        let entry = groups.entry(marks).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += community.front.len();
    }
    let mut patterns: Vec<PresencePattern> = groups
        .into_iter()
        .map(|(marks, (count, size_sum))| PresencePattern {
            marks,
            count,
            avg_size: size_sum as f64 / count as f64,
        })
        .collect();
    patterns.sort_by_key(|p| {
        let first = p.marks.iter().position(|&m| m).unwrap_or(usize::MAX);
        (first, p.to_string())
    });
    Ok(patterns)
}
