//! Influence signatures, longitudinal influence power, and binarized
//! influence patterns per era.
//!
//! A scholar's signature counts their outgoing links toward each era from
//! their own era through the last one; its mean is the longitudinal
//! influence power. Replacing positive entries with a mark gives the
//! influence pattern, which keeps the temporal spread of influence and
//! drops its intensity.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::InfluenceNetwork;

/// Outgoing link counts toward each era from the scholar's own era onward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InfluenceSignature {
    pub id: String,
    pub own_era: usize,
    /// Entry `j` counts links into era `own_era + j`; length is `K - own_era`.
    pub values: Vec<u64>,
}

impl InfluenceSignature {
    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }
}

/// Mean of the signature: total links over the number of eras from the
/// scholar's own era through the last, zero entries included.
pub fn influence_power(signature: &InfluenceSignature) -> f64 {
    signature.total() as f64 / signature.values.len() as f64
}

/// A signature with intensity dropped: `marks[j]` is set iff `values[j] > 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct InfluencePattern {
    pub own_era: usize,
    pub marks: Vec<bool>,
}

impl fmt::Display for InfluencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &mark in &self.marks {
            f.write_str(if mark { "X" } else { "0" })?;
        }
        Ok(())
    }
}

/// Binarize a signature into its pattern.
pub fn pattern(signature: &InfluenceSignature) -> InfluencePattern {
    InfluencePattern {
        own_era: signature.own_era,
        marks: signature.values.iter().map(|&v| v > 0).collect(),
    }
}

/// Build one scholar's influence signature from the repaired network.
pub fn signature(network: &InfluenceNetwork, id: &str) -> Result<InfluenceSignature> {
    let own_era = network.era_of(id)?;
    let k = network.era_scheme().len();
    let mut values = vec![0u64; k - own_era];
    for (source, target) in network.edges() {
        if source != id {
            continue;
        }
        let target_era = network.era_of(target)?;
        if target_era < own_era {
            return Err(Error::UnrepairedNetwork);
        }
        values[target_era - own_era] += 1;
    }
    Ok(InfluenceSignature { id: id.to_owned(), own_era, values })
}

/// Signatures for every scholar, in id order. One pass over the edges.
pub fn all_signatures(network: &InfluenceNetwork) -> Result<Vec<InfluenceSignature>> {
    let k = network.era_scheme().len();
    let mut signatures: BTreeMap<String, InfluenceSignature> = network
        .scholars()
        .map(|s| {
            let own_era = s.era_index.ok_or_else(|| Error::MissingEra(s.id.clone()))?;
            Ok((
                s.id.clone(),
                InfluenceSignature { id: s.id.clone(), own_era, values: vec![0; k - own_era] },
            ))
        })
        .collect::<Result<_>>()?;
    for (source, target) in network.edges() {
        let target_era = network.era_of(target)?;
        let sig = signatures.get_mut(source).ok_or_else(|| Error::UnknownScholar(source.to_owned()))?;
        if target_era < sig.own_era {
            return Err(Error::UnrepairedNetwork);
        }
        sig.values[target_era - sig.own_era] += 1;
    }
    Ok(signatures.into_values().collect())
}

/// One pattern's share among an era's scholars.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternFrequency {
    pub pattern: InfluencePattern,
    pub count: usize,
    pub fraction: f64,
}

/// Frequency table of influence patterns for one era, over the era's
/// scholars with at least one outgoing link. Sorted by fraction descending,
/// ties by pattern text ascending.
pub fn pattern_frequencies(network: &InfluenceNetwork, era: usize) -> Result<Vec<PatternFrequency>> {
    let mut counts: BTreeMap<InfluencePattern, usize> = BTreeMap::new();
    let mut total = 0usize;
    for sig in all_signatures(network)? {
        if sig.own_era != era || sig.total() == 0 {
            continue;
        }
        *counts.entry(pattern(&sig)).or_insert(0) += 1;
        total += 1;
    }
    let mut table: Vec<PatternFrequency> = counts
        .into_iter()
        .map(|(pattern, count)| PatternFrequency {
            pattern,
            count,
            fraction: count as f64 / total as f64,
        })
        .collect();
    table.sort_by(|a, b| {
        b.count.cmp(&a.count).then_with(|| a.pattern.to_string().cmp(&b.pattern.to_string()))
    });
    Ok(table)
}

/// CSV of all signatures: era columns are left empty before a scholar's own
/// era, and the power column keeps full precision.
pub fn signatures_csv(network: &InfluenceNetwork, signatures: &[InfluenceSignature]) -> String {
    let scheme = network.era_scheme();
    let mut out = String::from("id,era");
    for era in scheme.eras() {
        out.push(',');
        out.push_str(&era.name);
    }
    out.push_str(",power\n");
    for sig in signatures {
        out.push_str(&format!("{},{}", sig.id, sig.own_era));
        for era in 0..scheme.len() {
            out.push(',');
            if era >= sig.own_era {
                out.push_str(&sig.values[era - sig.own_era].to_string());
            }
        }
        out.push_str(&format!(",{}\n", influence_power(sig)));
    }
    out
}

/// CSV of per-era pattern tables: `era,pattern,count,fraction`.
pub fn pattern_table_csv(network: &InfluenceNetwork) -> Result<String> {
    let mut out = String::from("era,pattern,count,fraction\n");
    for era in 0..network.era_scheme().len() {
        for row in pattern_frequencies(network, era)? {
            out.push_str(&format!(
                "{},{},{},{}\n",
                network.era_scheme().name(era),
                row.pattern,
                row.count,
                row.fraction
            ));
        }
    }
    Ok(out)
}
