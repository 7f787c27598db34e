//! Batch pipeline: ingest, validate, assign and repair eras, slice, and run
//! every analysis, writing plain-file reports plus a run manifest.
//!
//! Stages compose through the filesystem, so each CLI subcommand can also
//! run its stage in isolation on prior-stage outputs. All randomness flows
//! from the single seed in the config; two runs over identical inputs and
//! config produce byte-identical reports (manifest timings aside).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::brokerage;
use crate::chronology::{self, RepairPolicy};
use crate::community::{self, TrackingConfig};
use crate::error::{Error, Result};
use crate::influence;
use crate::ingest::{self, sparql::SparqlClient, Imputation};
use crate::metrics::{self, DegreeDirection};
use crate::model::{EraScheme, InfluenceEdge, InfluenceNetwork, Scholar, Violation};
use crate::slicing::{self, SliceKind};

/// Full configuration of a pipeline run. Everything that influences an
/// output byte lives here, so the manifest's config snapshot pins the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Single seed for all randomness (community detection visit order).
    pub seed: u64,
    /// Latest death year admitted by imputation.
    pub horizon: i32,
    /// Span used to fill a missing date from the other one.
    pub imputation_span: i32,
    /// Years of age ignored when locating the activity midpoint.
    pub activity_offset: i32,
    pub repair_policy: RepairPolicy,
    /// Jaccard matching threshold for dynamic community tracking.
    pub theta: f64,
    /// Unobserved steps after which a dynamic community dies.
    pub death_window: usize,
    /// Worker threads for the parallel stages; 1 = fully sequential.
    pub threads: usize,
    /// Rows in top-degree rankings.
    pub top_k: usize,
    /// Periodization; the embedded six-era scheme when absent.
    pub era_scheme: Option<EraScheme>,
    /// SPARQL endpoint settings for the fetch subcommand.
    pub sparql: Option<SparqlClient>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            horizon: 2020,
            imputation_span: 60,
            activity_offset: chronology::DEFAULT_ACTIVITY_OFFSET,
            repair_policy: RepairPolicy::default(),
            theta: 0.3,
            death_window: 1,
            threads: 1,
            top_k: 5,
            era_scheme: None,
            sparql: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn scheme(&self) -> EraScheme {
        self.era_scheme.clone().unwrap_or_else(EraScheme::default_scheme)
    }
}

/// Input files of a run.
#[derive(Clone, Debug, Default)]
pub struct PipelineInputs {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub filters: Option<PathBuf>,
    pub corrections: Option<PathBuf>,
}

/// Wall-clock duration of one stage.
#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: u128,
}

/// Record of a pipeline run: config snapshot, input and output digests, and
/// per-stage timings. Given identical inputs, the manifest determines every
/// output byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    /// Input path -> SHA-256 of the file.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the output directory) -> SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: Vec<StageTiming>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct OutputWriter {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputWriter { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, content)?;
        self.digests.insert(name.to_owned(), sha256_hex(content.as_bytes()));
        Ok(())
    }
}

/// Outcome of the ingest stage, before era assignment.
pub struct Ingested {
    pub network: InfluenceNetwork,
    pub unresolved: Vec<ingest::RawActorRecord>,
    pub rejects: Vec<ingest::RejectedRow>,
    pub removals: Vec<ingest::Removal>,
    pub duplicate_edges: u64,
}

/// Parse, correct, impute, and filter the inputs into a network.
pub fn ingest_inputs(config: &PipelineConfig, inputs: &PipelineInputs) -> Result<Ingested> {
    let (mut records, mut edges, report) = ingest::parse_inputs(&inputs.nodes, &inputs.edges)?;

    if let Some(path) = &inputs.corrections {
        let corrections = ingest::parse_corrections(&std::fs::read_to_string(path)?)?;
        let unmatched = ingest::apply_corrections(&mut records, &mut edges, &corrections);
        if unmatched > 0 {
            log::warn!("{unmatched} correction(s) matched nothing");
        }
    }

    let mut scholars = Vec::with_capacity(records.len());
    let mut unresolved = Vec::new();
    for record in &records {
        match ingest::impute_dates(record, config.imputation_span, config.horizon) {
            Imputation::Resolved(s) => scholars.push(s),
            Imputation::Unresolved(r) => unresolved.push(r),
        }
    }

    let rules = match &inputs.filters {
        Some(path) => ingest::FilterRules::load(path)?,
        None => ingest::FilterRules::default(),
    };
    let resolved_records: Vec<ingest::RawActorRecord> = scholars
        .iter()
        .map(|s| ingest::RawActorRecord {
            id: s.id.clone(),
            label: s.label.clone(),
            birth_year: Some(s.birth_year),
            death_year: Some(s.death_year),
        })
        .collect();
    let (kept, kept_edges, removals) = ingest::apply_filters(resolved_records, edges, &rules);
    let kept_ids: std::collections::HashSet<&str> = kept.iter().map(|r| r.id.as_str()).collect();
    let unresolved_ids: std::collections::HashSet<&str> =
        unresolved.iter().map(|r| r.id.as_str()).collect();
    let scholars: Vec<Scholar> = scholars.into_iter().filter(|s| kept_ids.contains(s.id.as_str())).collect();
    // Edges touching unresolved actors cannot enter the network.
    let kept_edges: Vec<InfluenceEdge> = kept_edges
        .into_iter()
        .filter(|e| {
            !unresolved_ids.contains(e.source.as_str()) && !unresolved_ids.contains(e.target.as_str())
        })
        .collect();

    let network = ingest::build_network(config.scheme(), scholars, kept_edges)?;
    Ok(Ingested {
        network,
        unresolved,
        rejects: report.rejects,
        removals,
        duplicate_edges: report.duplicate_edges,
    })
}

/// Write the post-chronology scholar table: one row per scholar with its
/// final era. Labels go through a real CSV writer since they may contain
/// delimiters.
pub fn scholars_csv(network: &InfluenceNetwork) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["id", "label", "birth", "death", "birth_imputed", "death_imputed", "era"])
        .map_err(|e| Error::Internal(e.to_string()))?;
    for s in network.scholars() {
        let era = s.era_index.map(|e| e.to_string()).unwrap_or_default();
        writer
            .write_record([
                s.id.as_str(),
                s.label.as_str(),
                &s.birth_year.to_string(),
                &s.death_year.to_string(),
                if s.birth_imputed { "1" } else { "0" },
                if s.death_imputed { "1" } else { "0" },
                &era,
            ])
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    String::from_utf8(writer.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
        .map_err(|e| Error::Internal(e.to_string()))
}

/// Load a network from a scholars table (as written by [`scholars_csv`])
/// plus an edge file.
pub fn load_assigned_network(
    scheme: EraScheme,
    scholars_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<InfluenceNetwork> {
    let mut network = InfluenceNetwork::new(scheme);
    let scholars_path = scholars_path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .from_path(scholars_path)
        .map_err(|e| Error::Parse { file: scholars_path.display().to_string(), message: e.to_string() })?;
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            file: scholars_path.display().to_string(),
            message: e.to_string(),
        })?;
        let field = |i: usize| row.get(i).unwrap_or("").to_owned();
        let year = |i: usize| -> Result<i32> {
            row.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse {
                    file: scholars_path.display().to_string(),
                    message: format!("invalid year `{}`", field(i)),
                })
        };
        let era = match row.get(6).unwrap_or("") {
            "" => None,
            text => Some(text.parse::<usize>().map_err(|_| Error::Parse {
                file: scholars_path.display().to_string(),
                message: format!("invalid era `{text}`"),
            })?),
        };
        network.insert_scholar(Scholar {
            id: field(0),
            label: field(1),
            birth_year: year(2)?,
            death_year: year(3)?,
            birth_imputed: field(4) == "1",
            death_imputed: field(5) == "1",
            era_index: era,
        });
    }

    let edges_path = edges_path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .from_path(edges_path)
        .map_err(|e| Error::Parse { file: edges_path.display().to_string(), message: e.to_string() })?;
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            file: edges_path.display().to_string(),
            message: e.to_string(),
        })?;
        let (Some(s), Some(t)) = (row.get(0), row.get(1)) else { continue };
        for endpoint in [s, t] {
            if network.scholar(endpoint).is_none() {
                return Err(Error::UnknownScholar(endpoint.to_owned()));
            }
        }
        network.insert_edge(s, t);
    }
    Ok(network)
}

fn edges_csv(network: &InfluenceNetwork) -> String {
    let mut out = String::from("source,target\n");
    for (s, t) in network.edges() {
        out.push_str(&format!("{s},{t}\n"));
    }
    out
}

fn rejects_csv(rejects: &[ingest::RejectedRow]) -> String {
    let mut out = String::from("file,line,reason\n");
    let mut writer = csv::Writer::from_writer(Vec::new());
    for reject in rejects {
        let _ = writer.write_record([reject.file.as_str(), &reject.line.to_string(), &reject.reason]);
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap_or_default()).unwrap_or_default());
    out
}

fn violations_csv(violations: &[Violation]) -> String {
    let mut out = String::from("violation\n");
    let mut writer = csv::Writer::from_writer(Vec::new());
    for violation in violations {
        let _ = writer.write_record([violation.to_string()]);
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap_or_default()).unwrap_or_default());
    out
}

/// Formatted metric tables mirroring the within/inter/accumulated layouts.
pub fn within_metrics_csv(rows: &[(usize, metrics::UnipartiteMetrics)], scheme: &EraScheme) -> String {
    let mut out = String::from(
        "era,n,participation_ratio,e,density,avg_out_degree,max_in_degree,max_out_degree,\
         max_total_degree,wcc,largest_wcc,largest_wcc_fraction,scc,reciprocity,transitivity\n",
    );
    for (era, m) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            scheme.name(*era),
            m.n,
            m.participation_ratio.map(|r| r.to_string()).unwrap_or_default(),
            m.e,
            m.density,
            m.avg_out_degree,
            m.max_in_degree,
            m.max_out_degree,
            m.max_total_degree,
            m.wcc_count,
            m.largest_wcc_size,
            m.largest_wcc_fraction,
            m.scc_count,
            m.reciprocity,
            m.transitivity
        ));
    }
    out
}

pub fn inter_metrics_csv(
    rows: &[(usize, usize, metrics::BipartiteMetrics)],
    scheme: &EraScheme,
) -> String {
    let mut out = String::from(
        "source,target,n,e,n_s,n_t,density,avg_in_degree,max_in_degree,avg_out_degree,max_out_degree\n",
    );
    for (s, t, m) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            scheme.name(*s),
            scheme.name(*t),
            m.n,
            m.e,
            m.n_s,
            m.n_t,
            m.density,
            m.avg_in_degree,
            m.max_in_degree,
            m.avg_out_degree,
            m.max_out_degree
        ));
    }
    out
}

pub fn accumulated_metrics_csv(
    rows: &[(usize, metrics::UnipartiteMetrics)],
    scheme: &EraScheme,
) -> String {
    let mut out = String::from(
        "era,n,e,density,avg_out_degree,max_in_degree,max_out_degree,max_total_degree,\
         wcc,largest_wcc,largest_wcc_fraction,scc,reciprocity,transitivity\n",
    );
    for (era, m) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            scheme.name(*era),
            m.n,
            m.e,
            m.density,
            m.avg_out_degree,
            m.max_in_degree,
            m.max_out_degree,
            m.max_total_degree,
            m.wcc_count,
            m.largest_wcc_size,
            m.largest_wcc_fraction,
            m.scc_count,
            m.reciprocity,
            m.transitivity
        ));
    }
    out
}

/// Execute the full pipeline and write every report into `out_dir`.
///
/// The community sweep is not part of a standard run; it has its own
/// subcommand. Any stage failure aborts the run with an error naming the
/// stage.
pub fn run_pipeline(
    config: &PipelineConfig,
    inputs: &PipelineInputs,
    out_dir: &Path,
) -> Result<RunManifest> {
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config: config.clone(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
        timings_ms: Vec::new(),
    };
    for path in [Some(&inputs.nodes), Some(&inputs.edges), inputs.filters.as_ref(), inputs.corrections.as_ref()]
        .into_iter()
        .flatten()
    {
        let bytes = std::fs::read(path)?;
        manifest.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
    }
    let mut writer = OutputWriter::new(out_dir)?;
    let scheme = config.scheme();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;

    // ingest
    let started = Instant::now();
    let ingested = ingest_inputs(config, inputs).map_err(|e| e.in_stage("ingest"))?;
    writer.write("rejects.csv", &rejects_csv(&ingested.rejects)).map_err(|e| e.in_stage("ingest"))?;
    let mut unresolved_text = String::from("id,label\n");
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        for record in &ingested.unresolved {
            let _ = w.write_record([record.id.as_str(), record.label.as_str()]);
        }
        unresolved_text.push_str(&String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default());
    }
    writer.write("unresolved.csv", &unresolved_text).map_err(|e| e.in_stage("ingest"))?;
    let mut removals_text = String::from("id,reason\n");
    for removal in &ingested.removals {
        removals_text.push_str(&format!("{},{}\n", removal.id, removal.reason));
    }
    writer.write("removals.csv", &removals_text).map_err(|e| e.in_stage("ingest"))?;
    manifest.timings_ms.push(StageTiming { stage: "ingest".into(), millis: started.elapsed().as_millis() });

    // validate
    let started = Instant::now();
    let violations = crate::model::validate_network(&ingested.network);
    writer.write("violations.csv", &violations_csv(&violations)).map_err(|e| e.in_stage("validate"))?;
    if !violations.is_empty() {
        for violation in &violations {
            log::error!("validation: {violation}");
        }
        return Err(Error::Validation(violations.len()).in_stage("validate"));
    }
    manifest.timings_ms.push(StageTiming { stage: "validate".into(), millis: started.elapsed().as_millis() });

    // chronology
    let started = Instant::now();
    let mut network = ingested.network;
    chronology::assign_all(&mut network, config.activity_offset).map_err(|e| e.in_stage("chronology"))?;
    let (network, trace) =
        chronology::repair_assignments_with_offset(&network, config.repair_policy, config.activity_offset)
            .map_err(|e| e.in_stage("chronology"))?;
    if !chronology::find_reverse_links(&network).map_err(|e| e.in_stage("chronology"))?.is_empty() {
        return Err(Error::Internal("reverse links survived repair".into()).in_stage("chronology"));
    }
    writer
        .write("scholars.csv", &scholars_csv(&network).map_err(|e| e.in_stage("chronology"))?)
        .map_err(|e| e.in_stage("chronology"))?;
    writer.write("edges.csv", &edges_csv(&network)).map_err(|e| e.in_stage("chronology"))?;
    writer.write("trace.csv", &trace.to_csv()).map_err(|e| e.in_stage("chronology"))?;
    manifest.timings_ms.push(StageTiming { stage: "chronology".into(), millis: started.elapsed().as_millis() });

    // slicing
    let started = Instant::now();
    let matrix = slicing::link_matrix(&network).map_err(|e| e.in_stage("slicing"))?;
    writer.write("link_matrix.csv", &matrix.to_csv(&scheme)).map_err(|e| e.in_stage("slicing"))?;
    let percentages = slicing::received_percentages(&matrix);
    writer
        .write("received_percentages.csv", &percentages.to_csv(&scheme))
        .map_err(|e| e.in_stage("slicing"))?;
    let min_birth = network.scholars().map(|s| s.birth_year).min().unwrap_or(scheme.horizon());
    let series = slicing::alive_per_year(&network, min_birth.min(scheme.horizon())..=scheme.horizon());
    writer.write("alive_per_year.csv", &series.to_csv(&scheme)).map_err(|e| e.in_stage("slicing"))?;
    manifest.timings_ms.push(StageTiming { stage: "slicing".into(), millis: started.elapsed().as_millis() });

    // metrics
    let started = Instant::now();
    let k = scheme.len();
    let populations = network.era_populations();
    let stage_result: Result<()> = pool.install(|| {
        use rayon::prelude::*;
        let within: Vec<(usize, metrics::UnipartiteMetrics)> = (0..k)
            .into_par_iter()
            .map(|e| {
                let pn = slicing::slice(&network, SliceKind::Within(e))?;
                Ok((e, metrics::unipartite_metrics(&pn, Some(populations[e]))?))
            })
            .collect::<Result<_>>()?;
        let inter_pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|s| ((s + 1)..k).map(move |t| (s, t))).collect();
        let inter: Vec<(usize, usize, metrics::BipartiteMetrics)> = inter_pairs
            .into_par_iter()
            .map(|(s, t)| {
                let pn = slicing::slice(&network, SliceKind::Inter(s, t))?;
                Ok((s, t, metrics::bipartite_metrics(&pn)?))
            })
            .collect::<Result<_>>()?;
        let accumulated: Vec<(usize, metrics::UnipartiteMetrics)> = (0..k)
            .into_par_iter()
            .map(|e| {
                let pn = slicing::slice(&network, SliceKind::Accumulated(e))?;
                Ok((e, metrics::unipartite_metrics(&pn, None)?))
            })
            .collect::<Result<_>>()?;

        for (e, m) in &within {
            writer.write(
                &format!("metrics/within_{e}.json"),
                &serde_json::to_string_pretty(m).map_err(|err| Error::Internal(err.to_string()))?,
            )?;
        }
        for (s, t, m) in &inter {
            writer.write(
                &format!("metrics/inter_{s}_{t}.json"),
                &serde_json::to_string_pretty(m).map_err(|err| Error::Internal(err.to_string()))?,
            )?;
        }
        for (e, m) in &accumulated {
            writer.write(
                &format!("metrics/accumulated_{e}.json"),
                &serde_json::to_string_pretty(m).map_err(|err| Error::Internal(err.to_string()))?,
            )?;
        }
        writer.write("metrics_within.csv", &within_metrics_csv(&within, &scheme))?;
        writer.write("metrics_inter.csv", &inter_metrics_csv(&inter, &scheme))?;
        writer.write("metrics_accumulated.csv", &accumulated_metrics_csv(&accumulated, &scheme))?;

        let mut top = String::from("era,rank,id,out_degree\n");
        for e in 0..k {
            let pn = slicing::slice(&network, SliceKind::Within(e))?;
            for (rank, (id, degree)) in
                metrics::top_k_by_degree(&pn, DegreeDirection::Out, config.top_k).iter().enumerate()
            {
                top.push_str(&format!("{},{},{},{}\n", scheme.name(e), rank + 1, id, degree));
            }
        }
        writer.write("top_out_degree.csv", &top)?;
        Ok(())
    });
    stage_result.map_err(|e| e.in_stage("metrics"))?;
    manifest.timings_ms.push(StageTiming { stage: "metrics".into(), millis: started.elapsed().as_millis() });

    // influence
    let started = Instant::now();
    let signatures = influence::all_signatures(&network).map_err(|e| e.in_stage("influence"))?;
    writer
        .write("signatures.csv", &influence::signatures_csv(&network, &signatures))
        .map_err(|e| e.in_stage("influence"))?;
    writer
        .write("patterns.csv", &influence::pattern_table_csv(&network).map_err(|e| e.in_stage("influence"))?)
        .map_err(|e| e.in_stage("influence"))?;
    manifest.timings_ms.push(StageTiming { stage: "influence".into(), millis: started.elapsed().as_millis() });

    // brokerage
    let started = Instant::now();
    let scores = pool
        .install(|| brokerage::brokerage_scores(&network))
        .map_err(|e| e.in_stage("brokerage"))?;
    writer.write("brokerage.csv", &brokerage::scores_csv(&scores)).map_err(|e| e.in_stage("brokerage"))?;
    let distribution = brokerage::role_count_distribution(&scores, &network);
    writer
        .write("brokerage_distribution.csv", &brokerage::distribution_csv(&distribution, &network))
        .map_err(|e| e.in_stage("brokerage"))?;
    manifest.timings_ms.push(StageTiming { stage: "brokerage".into(), millis: started.elapsed().as_millis() });

    // community
    let started = Instant::now();
    let mut partitions = Vec::with_capacity(k);
    let mut stats_text = String::from(
        "step,communities,large_communities,lc1_nodes,lc1_edges,lc2_nodes,lc2_edges,lc3_nodes,lc3_edges,\
         members_mean,members_std,members_min,members_q25,members_median,members_q75,members_max\n",
    );
    let mut diversity_text = String::from("step,mean,std,q75,max\n");
    for e in 0..k {
        let pn = slicing::slice(&network, SliceKind::Accumulated(e)).map_err(|err| err.in_stage("community"))?;
        let partition = community::detect_communities(&pn, config.seed.wrapping_add(e as u64))
            .map_err(|err| err.in_stage("community"))?;
        writer
            .write(&format!("communities/step_{e}.csv"), &partition.to_csv())
            .map_err(|err| err.in_stage("community"))?;
        let stats = community::community_stats(&partition, &pn);
        let lc = |i: usize| -> (String, String) {
            stats
                .top3
                .get(i)
                .map(|c| (c.nodes.to_string(), c.edges.to_string()))
                .unwrap_or_default()
        };
        let (lc1n, lc1e) = lc(0);
        let (lc2n, lc2e) = lc(1);
        let (lc3n, lc3e) = lc(2);
        let ms = &stats.member_summary;
        stats_text.push_str(&format!(
            "{e},{},{},{lc1n},{lc1e},{lc2n},{lc2e},{lc3n},{lc3e},{},{},{},{},{},{},{}\n",
            stats.community_count,
            stats.large_count,
            ms.mean,
            ms.std,
            ms.min,
            ms.q25,
            ms.median,
            ms.q75,
            ms.max
        ));

        // Era diversity of each community at this step.
        let members = partition.members();
        let mut diversities = Vec::with_capacity(members.len());
        for community_members in members.values() {
            let eras: Vec<usize> = community_members
                .iter()
                .map(|id| network.era_of(id))
                .collect::<Result<_>>()
                .map_err(|err| err.in_stage("community"))?;
            diversities
                .push(community::diversity(&eras, k).map_err(|err| err.in_stage("community"))?);
        }
        let mean = if diversities.is_empty() {
            0.0
        } else {
            diversities.iter().sum::<f64>() / diversities.len() as f64
        };
        let std = if diversities.len() > 1 {
            (diversities.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
                / (diversities.len() as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        let mut sorted = diversities.clone();
        sorted.sort_by(f64::total_cmp);
        let q75 = community::percentile(&sorted, 0.75);
        let max = sorted.last().copied().unwrap_or(0.0);
        diversity_text.push_str(&format!("{e},{mean},{std},{q75},{max}\n"));

        partitions.push(partition);
    }
    writer.write("community_stats.csv", &stats_text).map_err(|e| e.in_stage("community"))?;
    writer.write("community_diversity.csv", &diversity_text).map_err(|e| e.in_stage("community"))?;

    let tracking = community::track(
        &partitions,
        &TrackingConfig { theta: config.theta, death_window: config.death_window },
    )
    .map_err(|e| e.in_stage("community"))?;
    writer.write("events.csv", &tracking.events_csv()).map_err(|e| e.in_stage("community"))?;
    let patterns = community::era_presence_patterns(&tracking.communities, k)
        .map_err(|e| e.in_stage("community"))?;
    let mut pattern_text = String::from("pattern,count,avg_size\n");
    for pattern in &patterns {
        pattern_text.push_str(&format!("{},{},{}\n", pattern, pattern.count, pattern.avg_size));
    }
    writer.write("presence_patterns.csv", &pattern_text).map_err(|e| e.in_stage("community"))?;
    manifest.timings_ms.push(StageTiming { stage: "community".into(), millis: started.elapsed().as_millis() });

    manifest.outputs = writer.digests.clone();
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), manifest_json)?;
    Ok(manifest)
}
