//! Domain model: era schemes, scholars, influence edges, and the network
//! that ties them together.
//!
//! All types are immutable once built; analysis passes construct new values
//! instead of mutating shared state, so a network can be shared read-only
//! across worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One period of the periodization: a display name plus the last year it
/// covers. The lower bound is implied by the preceding era.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Era {
    pub name: String,
    pub upper_bound_year: i32,
}

impl Era {
    pub fn new(name: impl Into<String>, upper_bound_year: i32) -> Self {
        Era { name: name.into(), upper_bound_year }
    }
}

/// Ordered, contiguous periodization of history.
///
/// Era `i` covers the half-open interval `(upper_bound[i-1], upper_bound[i]]`:
/// a boundary year belongs to the *earlier* era, and the first era is
/// unbounded below. Years use astronomical numbering (BC years are negative).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EraSchemeConfig")]
pub struct EraScheme {
    eras: Vec<Era>,
}

/// Serialized form of an era scheme: an ordered list of eras.
#[derive(Deserialize)]
struct EraSchemeConfig {
    eras: Vec<Era>,
}

impl TryFrom<EraSchemeConfig> for EraScheme {
    type Error = Error;

    fn try_from(config: EraSchemeConfig) -> Result<Self> {
        EraScheme::new(config.eras)
    }
}

impl EraScheme {
    /// Build a scheme, checking that it has at least two eras and strictly
    /// increasing upper bounds.
    pub fn new(eras: Vec<Era>) -> Result<Self> {
        if eras.len() < 2 {
            return Err(Error::InvalidEraScheme(format!(
                "need at least 2 eras, got {}",
                eras.len()
            )));
        }
        for pair in eras.windows(2) {
            if pair[0].upper_bound_year >= pair[1].upper_bound_year {
                return Err(Error::InvalidEraScheme(format!(
                    "upper bounds must be strictly increasing: `{}` ({}) >= `{}` ({})",
                    pair[0].name, pair[0].upper_bound_year, pair[1].name, pair[1].upper_bound_year
                )));
            }
        }
        Ok(EraScheme { eras })
    }

    /// The six-era global periodization used as the default scheme.
    pub fn default_scheme() -> Self {
        EraScheme::new(vec![
            Era::new("Antiquity", 600),
            Era::new("MiddleAges", 1350),
            Era::new("EarlyModern", 1760),
            Era::new("Transition", 1870),
            Era::new("ModernAge", 1945),
            Era::new("Contemporary", 2020),
        ])
        .expect("default scheme is valid")
    }

    /// Parse a scheme from TOML: `eras = [{ name = "...", upper_bound_year = N }, ...]`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("era scheme: {e}")))
    }

    /// Load a scheme from a TOML config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Number of eras `K`.
    pub fn len(&self) -> usize {
        self.eras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eras.is_empty()
    }

    pub fn eras(&self) -> &[Era] {
        &self.eras
    }

    pub fn name(&self, index: usize) -> &str {
        &self.eras[index].name
    }

    /// The final upper bound; doubles as the default horizon year.
    pub fn horizon(&self) -> i32 {
        self.eras.last().expect("scheme has eras").upper_bound_year
    }

    /// The era containing `year`: the unique `i` with
    /// `upper_bound[i-1] < year <= upper_bound[i]`.
    pub fn era_of_year(&self, year: i32) -> Result<usize> {
        let bound = self.horizon();
        if year > bound {
            return Err(Error::YearOutOfRange { year, bound });
        }
        Ok(self.eras.partition_point(|e| e.upper_bound_year < year))
    }

    /// Interval covered by era `index` as `(lower, upper)` with the half-open
    /// convention `(lower, upper]`. The first era's lower bound is `i32::MIN`.
    pub fn bounds(&self, index: usize) -> (i32, i32) {
        let lower = if index == 0 {
            i32::MIN
        } else {
            self.eras[index - 1].upper_bound_year
        };
        (lower, self.eras[index].upper_bound_year)
    }
}

/// An actor with a lifespan, imputation flags, and (once assigned) an era.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scholar {
    pub id: String,
    pub label: String,
    /// Astronomical year numbering: BC years are negative.
    pub birth_year: i32,
    pub death_year: i32,
    pub birth_imputed: bool,
    pub death_imputed: bool,
    pub era_index: Option<usize>,
}

impl Scholar {
    pub fn new(id: impl Into<String>, label: impl Into<String>, birth_year: i32, death_year: i32) -> Self {
        Scholar {
            id: id.into(),
            label: label.into(),
            birth_year,
            death_year,
            birth_imputed: false,
            death_imputed: false,
            era_index: None,
        }
    }
}

/// A directed influence link between two scholars.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InfluenceEdge {
    pub source: String,
    pub target: String,
}

impl InfluenceEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        InfluenceEdge { source: source.into(), target: target.into() }
    }
}

/// Directed simple graph of influence links over scholars, together with the
/// era scheme the analysis runs against.
///
/// Construction is permissive: invalid states (self-loops, dangling edges,
/// inverted lifespans) are representable so that [`validate_network`] can
/// report them instead of the constructor rejecting the data outright.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfluenceNetwork {
    scheme: EraScheme,
    scholars: BTreeMap<String, Scholar>,
    edges: BTreeSet<(String, String)>,
}

impl InfluenceNetwork {
    pub fn new(scheme: EraScheme) -> Self {
        InfluenceNetwork { scheme, scholars: BTreeMap::new(), edges: BTreeSet::new() }
    }

    /// Insert or replace a scholar; returns the previous record if any.
    pub fn insert_scholar(&mut self, scholar: Scholar) -> Option<Scholar> {
        self.scholars.insert(scholar.id.clone(), scholar)
    }

    /// Insert an edge; returns false if the ordered pair was already present.
    pub fn insert_edge(&mut self, source: impl Into<String>, target: impl Into<String>) -> bool {
        self.edges.insert((source.into(), target.into()))
    }

    pub fn era_scheme(&self) -> &EraScheme {
        &self.scheme
    }

    pub fn scholar(&self, id: &str) -> Option<&Scholar> {
        self.scholars.get(id)
    }

    /// Scholars in ascending id order.
    pub fn scholars(&self) -> impl Iterator<Item = &Scholar> {
        self.scholars.values()
    }

    /// Edges in ascending `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(s, t)| (s.as_str(), t.as_str()))
    }

    pub fn node_count(&self) -> usize {
        self.scholars.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, source: &str, target: &str) -> bool {
        self.edges.contains(&(source.to_owned(), target.to_owned()))
    }

    /// Overwrite a scholar's era assignment.
    pub fn set_era_index(&mut self, id: &str, era_index: Option<usize>) -> Result<()> {
        match self.scholars.get_mut(id) {
            Some(s) => {
                s.era_index = era_index;
                Ok(())
            }
            None => Err(Error::UnknownScholar(id.to_owned())),
        }
    }

    /// Era of a scholar, erroring when the scholar is missing or unassigned.
    pub fn era_of(&self, id: &str) -> Result<usize> {
        let scholar = self.scholar(id).ok_or_else(|| Error::UnknownScholar(id.to_owned()))?;
        scholar.era_index.ok_or_else(|| Error::MissingEra(id.to_owned()))
    }

    /// Number of scholars assigned to each era.
    pub fn era_populations(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.scheme.len()];
        for s in self.scholars.values() {
            if let Some(e) = s.era_index {
                if e < counts.len() {
                    counts[e] += 1;
                }
            }
        }
        counts
    }
}

/// A broken invariant found by [`validate_network`]. Violations are data,
/// not failures: an empty list means the network is sound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    SelfLoop { id: String },
    BirthNotBeforeDeath { id: String, birth: i32, death: i32 },
    DeathBeyondHorizon { id: String, death: i32, horizon: i32 },
    EraIndexOutOfRange { id: String, era_index: usize, era_count: usize },
    MissingEndpoint { source: String, target: String, missing: String },
    ReverseEraLink { source: String, target: String, source_era: usize, target_era: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { id } => write!(f, "self-loop at {id}"),
            Violation::BirthNotBeforeDeath { id, birth, death } => {
                write!(f, "birth after death for {id}: {birth} >= {death}")
            }
            Violation::DeathBeyondHorizon { id, death, horizon } => {
                write!(f, "death year {death} of {id} beyond horizon {horizon}")
            }
            Violation::EraIndexOutOfRange { id, era_index, era_count } => {
                write!(f, "era index {era_index} of {id} out of range (eras: {era_count})")
            }
            Violation::MissingEndpoint { source, target, missing } => {
                write!(f, "edge {source} -> {target} references unknown scholar {missing}")
            }
            Violation::ReverseEraLink { source, target, source_era, target_era } => {
                write!(
                    f,
                    "reverse era link {source} (era {source_era}) -> {target} (era {target_era})"
                )
            }
        }
    }
}

/// Check every type invariant and return the violations found.
///
/// Reverse era links are reported only for edges whose both endpoints carry
/// an era assignment, so pre-assignment networks validate cleanly and the
/// post-repair guarantee can be re-checked with the same call. The function
/// is pure: calling it twice returns the same report.
pub fn validate_network(network: &InfluenceNetwork) -> Vec<Violation> {
    let mut violations = Vec::new();
    let horizon = network.scheme.horizon();
    let era_count = network.scheme.len();

    for scholar in network.scholars() {
        if scholar.birth_year >= scholar.death_year {
            violations.push(Violation::BirthNotBeforeDeath {
                id: scholar.id.clone(),
                birth: scholar.birth_year,
                death: scholar.death_year,
            });
        }
        if scholar.death_year > horizon {
            violations.push(Violation::DeathBeyondHorizon {
                id: scholar.id.clone(),
                death: scholar.death_year,
                horizon,
            });
        }
        if let Some(era) = scholar.era_index {
            if era >= era_count {
                violations.push(Violation::EraIndexOutOfRange {
                    id: scholar.id.clone(),
                    era_index: era,
                    era_count,
                });
            }
        }
    }

    for (source, target) in network.edges() {
        if source == target {
            violations.push(Violation::SelfLoop { id: source.to_owned() });
            continue;
        }
        let mut missing = false;
        for endpoint in [source, target] {
            if network.scholar(endpoint).is_none() {
                violations.push(Violation::MissingEndpoint {
                    source: source.to_owned(),
                    target: target.to_owned(),
                    missing: endpoint.to_owned(),
                });
                missing = true;
            }
        }
        if missing {
            continue;
        }
        let source_era = network.scholar(source).and_then(|s| s.era_index);
        let target_era = network.scholar(target).and_then(|s| s.era_index);
        if let (Some(se), Some(te)) = (source_era, target_era) {
            if se > te {
                violations.push(Violation::ReverseEraLink {
                    source: source.to_owned(),
                    target: target.to_owned(),
                    source_era: se,
                    target_era: te,
                });
            }
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scheme() -> EraScheme {
        EraScheme::default_scheme()
    }

    #[test]
    fn default_scheme_has_six_eras() {
        let s = scheme();
        assert_eq!(s.len(), 6);
        assert_eq!(s.name(0), "Antiquity");
        assert_eq!(s.horizon(), 2020);
    }

    #[test]
    fn era_of_year_boundary_belongs_to_earlier_era() {
        let s = scheme();
        assert_eq!(s.era_of_year(600).unwrap(), 0);
        assert_eq!(s.era_of_year(601).unwrap(), 1);
    }

    #[test]
    fn era_of_year_is_unbounded_below() {
        assert_eq!(scheme().era_of_year(-300).unwrap(), 0);
    }

    #[test]
    fn era_of_year_rejects_years_past_horizon() {
        match scheme().era_of_year(2021) {
            Err(Error::YearOutOfRange { year: 2021, bound: 2020 }) => {}
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn scheme_requires_two_eras() {
        assert!(EraScheme::new(vec![Era::new("only", 100)]).is_err());
    }

    #[test]
    fn scheme_requires_strictly_increasing_bounds() {
        assert!(EraScheme::new(vec![Era::new("a", 100), Era::new("b", 100)]).is_err());
        assert!(EraScheme::new(vec![Era::new("a", 100), Era::new("b", 50)]).is_err());
    }

    #[test]
    fn scheme_parses_from_toml() {
        let text = r#"
            eras = [
                { name = "Old", upper_bound_year = 1000 },
                { name = "New", upper_bound_year = 2000 },
            ]
        "#;
        let s = EraScheme::from_toml_str(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.era_of_year(1000).unwrap(), 0);
        assert_eq!(s.era_of_year(1001).unwrap(), 1);
    }

    #[test]
    fn bounds_cover_half_open_intervals() {
        let s = scheme();
        assert_eq!(s.bounds(0), (i32::MIN, 600));
        assert_eq!(s.bounds(1), (600, 1350));
    }

    #[test]
    fn validate_reports_self_loop() {
        let mut n = InfluenceNetwork::new(scheme());
        n.insert_scholar(Scholar::new("a", "A", 100, 160));
        n.insert_edge("a", "a");
        let report = validate_network(&n);
        assert_eq!(report, vec![Violation::SelfLoop { id: "a".into() }]);
        assert_eq!(report[0].to_string(), "self-loop at a");
    }

    #[test]
    fn validate_reports_inverted_lifespan() {
        let mut n = InfluenceNetwork::new(scheme());
        n.insert_scholar(Scholar::new("a", "A", 1800, 1700));
        let report = validate_network(&n);
        assert!(matches!(report[0], Violation::BirthNotBeforeDeath { .. }));
    }

    #[test]
    fn validate_accepts_forward_chain() {
        let mut n = InfluenceNetwork::new(scheme());
        for (id, era) in [("a", 0), ("b", 0), ("c", 1)] {
            let mut s = Scholar::new(id, id.to_uppercase(), 100, 180);
            s.era_index = Some(era);
            n.insert_scholar(s);
        }
        n.insert_edge("a", "b");
        n.insert_edge("b", "c");
        assert!(validate_network(&n).is_empty());
    }

    #[test]
    fn validate_reports_reverse_era_link_and_missing_endpoint() {
        let mut n = InfluenceNetwork::new(scheme());
        let mut a = Scholar::new("a", "A", 700, 780);
        a.era_index = Some(2);
        let mut b = Scholar::new("b", "B", 100, 180);
        b.era_index = Some(1);
        n.insert_scholar(a);
        n.insert_scholar(b);
        n.insert_edge("a", "b");
        n.insert_edge("a", "ghost");
        let report = validate_network(&n);
        assert!(report.iter().any(|v| matches!(v, Violation::ReverseEraLink { .. })));
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::MissingEndpoint { missing, .. } if missing == "ghost")));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let mut n = InfluenceNetwork::new(scheme());
        n.insert_scholar(Scholar::new("a", "A", 100, 160));
        n.insert_scholar(Scholar::new("b", "B", 100, 160));
        assert!(n.insert_edge("a", "b"));
        assert!(!n.insert_edge("a", "b"));
        assert_eq!(n.edge_count(), 1);
    }

    proptest! {
        // Partition property: every in-range year maps to exactly one era,
        // and the mapping is monotone non-decreasing in the year.
        #[test]
        fn era_of_year_partitions_years(year in -5000i32..=2020) {
            let s = scheme();
            let era = s.era_of_year(year).unwrap();
            let (lo, hi) = s.bounds(era);
            prop_assert!(lo < year && year <= hi);
            if year < 2020 {
                let next = s.era_of_year(year + 1).unwrap();
                prop_assert!(next >= era);
            }
        }
    }
}
