//! Batch front-end for the longitudinal influence network analysis.
//!
//! `eranet run` executes the whole pipeline; the other subcommands run one
//! stage in isolation on prior-stage outputs, so runs compose through the
//! filesystem. Exit codes: 2 for config/schema errors, 3 for data
//! validation failures, 4 for internal invariant breaches, 1 otherwise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eranet::chronology;
use eranet::community::{self, CommunityPartition, TrackingConfig};
use eranet::influence;
use eranet::ingest::sparql;
use eranet::metrics;
use eranet::model::validate_network;
use eranet::pipeline::{self, PipelineConfig, PipelineInputs};
use eranet::slicing::{self, SliceKind};
use eranet::{brokerage, Error};

#[derive(Parser)]
#[command(name = "eranet", version, about = "Longitudinal influence network analysis")]
struct Cli {
    /// TOML config file; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RawInputs {
    /// Node file: id,label,birth,death (CSV or TSV).
    #[arg(long)]
    nodes: PathBuf,
    /// Edge file: source,target.
    #[arg(long)]
    edges: PathBuf,
    /// Filter rules file: `<id-or-glob>,<reason>` lines.
    #[arg(long)]
    filters: Option<PathBuf>,
    /// Corrections file: `<id>,birth|death,<year>` or `flip,<s>,<t>` lines.
    #[arg(long)]
    corrections: Option<PathBuf>,
}

impl RawInputs {
    fn to_pipeline(&self) -> PipelineInputs {
        PipelineInputs {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            filters: self.filters.clone(),
            corrections: self.corrections.clone(),
        }
    }
}

#[derive(Args)]
struct AssignedInputs {
    /// Scholar table written by `run` or `assign-eras` (has the era column).
    #[arg(long)]
    scholars: PathBuf,
    /// Edge file: source,target.
    #[arg(long)]
    edges: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write every report plus a manifest.
    Run {
        #[command(flatten)]
        inputs: RawInputs,
        #[arg(long, default_value = "out")]
        output: PathBuf,
        /// Worker threads for the parallel stages.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed override for community detection.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate raw inputs and print the violation report.
    Validate {
        #[command(flatten)]
        inputs: RawInputs,
    },
    /// Assign and repair eras; write scholars.csv, edges.csv and trace.csv.
    AssignEras {
        #[command(flatten)]
        inputs: RawInputs,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Project one slice; write its edge list and optionally DOT.
    Slice {
        #[command(flatten)]
        inputs: AssignedInputs,
        /// within:E, inter:S:T, or accumulated:E.
        #[arg(long)]
        kind: SliceKind,
        #[arg(long, default_value = "out")]
        output: PathBuf,
        /// Also write a Graphviz rendering of the slice.
        #[arg(long)]
        dot: bool,
    },
    /// Compute the metric battery of one slice as JSON.
    Metrics {
        #[command(flatten)]
        inputs: AssignedInputs,
        /// within:E, inter:S:T, or accumulated:E.
        #[arg(long)]
        slice: SliceKind,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Export influence signatures with power scores.
    Signatures {
        #[command(flatten)]
        inputs: AssignedInputs,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Export per-era influence pattern frequency tables.
    Patterns {
        #[command(flatten)]
        inputs: AssignedInputs,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Count brokerage roles and the role-count distribution.
    Brokerage {
        #[command(flatten)]
        inputs: AssignedInputs,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Detect communities on every accumulated-era network.
    Communities {
        #[command(flatten)]
        inputs: AssignedInputs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Track dynamic communities across step partitions.
    Track {
        /// Directory holding step_<e>.csv partition files.
        #[arg(long)]
        partitions: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        death_window: Option<usize>,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Re-run tracking over a theta range and tabulate the results.
    Sweep {
        /// Directory holding step_<e>.csv partition files.
        #[arg(long)]
        partitions: PathBuf,
        #[command(flatten)]
        inputs: AssignedInputs,
        /// Theta range start:end:step (inclusive) or a single value.
        #[arg(long, default_value = "0:0.95:0.05")]
        theta: String,
        #[arg(long)]
        death_window: Option<usize>,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Fetch actors and influence triples from a SPARQL endpoint.
    Fetch {
        /// Endpoint URL; ERANET_SPARQL_ENDPOINT overrides this and the config.
        #[arg(long)]
        endpoint: Option<String>,
        /// Query template file with {limit} and {offset} placeholders.
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        page_size: Option<u32>,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(path) => PipelineConfig::load(path),
        None => Ok(PipelineConfig::default()),
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

/// Build the repaired network from raw inputs (used by subcommands that
/// start from node/edge files).
fn ingest_and_repair(
    config: &PipelineConfig,
    inputs: &RawInputs,
) -> Result<(eranet::InfluenceNetwork, chronology::AssignmentTrace), Error> {
    let ingested = pipeline::ingest_inputs(config, &inputs.to_pipeline())?;
    let violations = validate_network(&ingested.network);
    if !violations.is_empty() {
        for violation in &violations {
            eprintln!("violation: {violation}");
        }
        return Err(Error::Validation(violations.len()));
    }
    let mut network = ingested.network;
    chronology::assign_all(&mut network, config.activity_offset)?;
    chronology::repair_assignments_with_offset(&network, config.repair_policy, config.activity_offset)
}

fn load_assigned(
    config: &PipelineConfig,
    inputs: &AssignedInputs,
) -> Result<eranet::InfluenceNetwork, Error> {
    pipeline::load_assigned_network(config.scheme(), &inputs.scholars, &inputs.edges)
}

fn parse_theta_range(text: &str) -> Result<Vec<f64>, Error> {
    let bad = |msg: String| Error::Config(format!("--theta {text}: {msg}"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let v: f64 = single.parse().map_err(|_| bad("not a number".into()))?;
            Ok(vec![v])
        }
        [start, end, step] => {
            let start: f64 = start.parse().map_err(|_| bad("bad start".into()))?;
            let end: f64 = end.parse().map_err(|_| bad("bad end".into()))?;
            let step: f64 = step.parse().map_err(|_| bad("bad step".into()))?;
            if step <= 0.0 || end < start {
                return Err(bad("need start <= end and step > 0".into()));
            }
            let mut values = Vec::new();
            let mut i = 0u32;
            loop {
                let v = start + step * i as f64;
                if v > end + 1e-9 {
                    break;
                }
                values.push(v);
                i += 1;
            }
            Ok(values)
        }
        _ => Err(bad("expected a value or start:end:step".into())),
    }
}

/// Read step_<e>.csv partition files from a directory, ordered by step.
fn load_partitions(dir: &Path) -> Result<Vec<CommunityPartition>, Error> {
    let mut steps = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(step) = name.strip_prefix("step_").and_then(|n| n.strip_suffix(".csv")) {
            let step: usize = step.parse().map_err(|_| Error::Parse {
                file: name.clone(),
                message: "bad step number".into(),
            })?;
            steps.push((step, entry.path()));
        }
    }
    if steps.is_empty() {
        return Err(Error::Config(format!("no step_<e>.csv files in {}", dir.display())));
    }
    steps.sort();
    let mut partitions = Vec::with_capacity(steps.len());
    for (step, path) in steps {
        let text = std::fs::read_to_string(&path)?;
        let mut assignment = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.is_empty() {
                continue;
            }
            let (node, community) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
                file: path.display().to_string(),
                message: format!("line {}: expected node_id,community_id", i + 1),
            })?;
            let community: u32 = community.parse().map_err(|_| Error::Parse {
                file: path.display().to_string(),
                message: format!("line {}: bad community id", i + 1),
            })?;
            assignment.insert(node.to_owned(), community);
        }
        partitions.push(CommunityPartition { step, assignment });
    }
    Ok(partitions)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = load_config(&cli.config)?;
    match cli.command {
        Command::Run { inputs, output, threads, seed } => {
            if let Some(threads) = threads {
                config.threads = threads;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let manifest = pipeline::run_pipeline(&config, &inputs.to_pipeline(), &output)?;
            println!(
                "pipeline finished: {} outputs in {}",
                manifest.outputs.len(),
                output.display()
            );
            Ok(())
        }
        Command::Validate { inputs } => {
            let ingested = pipeline::ingest_inputs(&config, &inputs.to_pipeline())?;
            let violations = validate_network(&ingested.network);
            for violation in &violations {
                println!("violation: {violation}");
            }
            if violations.is_empty() {
                println!(
                    "ok: {} scholars, {} edges, {} rejected row(s), {} unresolved",
                    ingested.network.node_count(),
                    ingested.network.edge_count(),
                    ingested.rejects.len(),
                    ingested.unresolved.len()
                );
                Ok(())
            } else {
                Err(Error::Validation(violations.len()))
            }
        }
        Command::AssignEras { inputs, output } => {
            let (network, trace) = ingest_and_repair(&config, &inputs)?;
            write_file(&output, "scholars.csv", &pipeline::scholars_csv(&network)?)?;
            let mut edges = String::from("source,target\n");
            for (s, t) in network.edges() {
                edges.push_str(&format!("{s},{t}\n"));
            }
            write_file(&output, "edges.csv", &edges)?;
            write_file(&output, "trace.csv", &trace.to_csv())?;
            Ok(())
        }
        Command::Slice { inputs, kind, output, dot } => {
            let network = load_assigned(&config, &inputs)?;
            let pn = slicing::slice(&network, kind)?;
            let mut text = String::from("source,target\n");
            for (s, t) in &pn.edges {
                text.push_str(&format!("{s},{t}\n"));
            }
            let stem = kind.to_string().replace(':', "_");
            write_file(&output, &format!("slice_{stem}.csv"), &text)?;
            if dot {
                write_file(&output, &format!("slice_{stem}.dot"), &pn.to_dot(&network))?;
            }
            Ok(())
        }
        Command::Metrics { inputs, slice: kind, output } => {
            let network = load_assigned(&config, &inputs)?;
            let pn = slicing::slice(&network, kind)?;
            let json = match kind {
                SliceKind::Inter(..) => serde_json::to_string_pretty(&metrics::bipartite_metrics(&pn)?),
                SliceKind::Within(e) => {
                    let population = network.era_populations()[e];
                    serde_json::to_string_pretty(&metrics::unipartite_metrics(&pn, Some(population))?)
                }
                SliceKind::Accumulated(_) => {
                    serde_json::to_string_pretty(&metrics::unipartite_metrics(&pn, None)?)
                }
            }
            .map_err(|e| Error::Internal(e.to_string()))?;
            let stem = kind.to_string().replace(':', "_");
            write_file(&output, &format!("metrics_{stem}.json"), &json)?;
            Ok(())
        }
        Command::Signatures { inputs, output } => {
            let network = load_assigned(&config, &inputs)?;
            let signatures = influence::all_signatures(&network)?;
            write_file(&output, "signatures.csv", &influence::signatures_csv(&network, &signatures))?;
            Ok(())
        }
        Command::Patterns { inputs, output } => {
            let network = load_assigned(&config, &inputs)?;
            write_file(&output, "patterns.csv", &influence::pattern_table_csv(&network)?)?;
            Ok(())
        }
        Command::Brokerage { inputs, output } => {
            let network = load_assigned(&config, &inputs)?;
            let scores = brokerage::brokerage_scores(&network)?;
            write_file(&output, "brokerage.csv", &brokerage::scores_csv(&scores))?;
            let distribution = brokerage::role_count_distribution(&scores, &network);
            write_file(
                &output,
                "brokerage_distribution.csv",
                &brokerage::distribution_csv(&distribution, &network),
            )?;
            Ok(())
        }
        Command::Communities { inputs, seed, output } => {
            let network = load_assigned(&config, &inputs)?;
            let seed = seed.unwrap_or(config.seed);
            for e in 0..network.era_scheme().len() {
                let pn = slicing::slice(&network, SliceKind::Accumulated(e))?;
                let partition = community::detect_communities(&pn, seed.wrapping_add(e as u64))?;
                write_file(&output, &format!("step_{e}.csv"), &partition.to_csv())?;
            }
            Ok(())
        }
        Command::Track { partitions, theta, death_window, output } => {
            let partitions = load_partitions(&partitions)?;
            let tracking = community::track(
                &partitions,
                &TrackingConfig {
                    theta: theta.unwrap_or(config.theta),
                    death_window: death_window.unwrap_or(config.death_window),
                },
            )?;
            write_file(&output, "events.csv", &tracking.events_csv())?;
            Ok(())
        }
        Command::Sweep { partitions, inputs, theta, death_window, output } => {
            let partitions = load_partitions(&partitions)?;
            let network = load_assigned(&config, &inputs)?;
            let eras: BTreeMap<String, usize> = network
                .scholars()
                .filter_map(|s| s.era_index.map(|e| (s.id.clone(), e)))
                .collect();
            let thetas = parse_theta_range(&theta)?;
            let rows = community::theta_sweep(
                &partitions,
                &thetas,
                death_window.unwrap_or(config.death_window),
                &eras,
                network.era_scheme().len(),
            )?;
            write_file(&output, "sweep.csv", &community::sweep_csv(&rows))?;
            Ok(())
        }
        Command::Fetch { endpoint, template, page_size, output } => {
            let mut client = match (&config.sparql, endpoint) {
                (_, Some(endpoint)) => sparql::SparqlClient::new(endpoint),
                (Some(client), None) => client.clone(),
                (None, None) => {
                    return Err(Error::Config(
                        "no SPARQL endpoint: use --endpoint, config [sparql], or ERANET_SPARQL_ENDPOINT"
                            .into(),
                    ))
                }
            };
            if let Ok(endpoint) = std::env::var("ERANET_SPARQL_ENDPOINT") {
                client.endpoint = endpoint;
            }
            if let Some(page_size) = page_size {
                client.page_size = page_size;
            }
            let template = std::fs::read_to_string(&template)?;
            let fetch = sparql::fetch_sparql(&client, &template)?;
            let mut nodes = String::from("id,label,birth,death\n");
            for actor in &fetch.actors {
                nodes.push_str(&format!(
                    "{},{},{},{}\n",
                    actor.id,
                    actor.label,
                    actor.birth_year.map(|y| y.to_string()).unwrap_or_default(),
                    actor.death_year.map(|y| y.to_string()).unwrap_or_default()
                ));
            }
            write_file(&output, "nodes_fetched.csv", &nodes)?;
            let mut edges = String::from("source,target\n");
            for edge in &fetch.edges {
                edges.push_str(&format!("{},{}\n", edge.source, edge.target));
            }
            write_file(&output, "edges_fetched.csv", &edges)?;
            if !fetch.rejects.is_empty() {
                let mut rejects = String::from("file,line,reason\n");
                for reject in &fetch.rejects {
                    rejects.push_str(&format!("{},{},{}\n", reject.file, reject.line, reject.reason));
                }
                write_file(&output, "fetch_rejects.csv", &rejects)?;
            }
            println!(
                "fetched {} actors, {} edges over {} page(s)",
                fetch.actors.len(),
                fetch.edges.len(),
                fetch.pages
            );
            Ok(())
        }
    }
}
