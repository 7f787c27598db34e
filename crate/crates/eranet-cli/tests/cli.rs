//! End-to-end tests of the batch CLI: exit codes, file outputs, and stage
//! composition through the filesystem.

use std::path::Path;
use std::process::Command;

fn eranet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eranet"))
}

fn write_fixture(dir: &Path) {
    std::fs::write(
        dir.join("nodes.csv"),
        "id,label,birth,death\n\
         a,Alice of Miletus,-600,-520\n\
         b,Boethius,480,524\n\
         c,Cara Mundi,1200,1280\n\
         d,Descartes II,1600,1660\n\
         e,Eliza Modern,1900,1980\n\
         f,Fresh Voice,1950,\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("edges.csv"),
        "source,target\na,b\nb,c\nc,d\nd,e\ne,f\na,c\nb,d\n",
    )
    .unwrap();
}

#[test]
fn run_happy_path_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = dir.path().join("out");
    let status = eranet()
        .args(["run", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "scholars.csv",
        "edges.csv",
        "trace.csv",
        "link_matrix.csv",
        "received_percentages.csv",
        "alive_per_year.csv",
        "metrics_within.csv",
        "metrics_inter.csv",
        "metrics_accumulated.csv",
        "top_out_degree.csv",
        "signatures.csv",
        "patterns.csv",
        "brokerage.csv",
        "brokerage_distribution.csv",
        "community_stats.csv",
        "events.csv",
        "presence_patterns.csv",
        "manifest.json",
    ] {
        assert!(out.join(file).exists(), "missing report {file}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["outputs"].as_object().unwrap().len() > 40);
}

#[test]
fn unknown_edge_endpoint_exits_3_and_names_the_id() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    std::fs::write(dir.path().join("edges.csv"), "source,target\na,b\nb,phantom_scholar\n").unwrap();
    let output = eranet()
        .args(["run", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .arg("--output")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("phantom_scholar"), "stderr must name the id: {stderr}");
    assert!(stderr.contains("ingest"), "stderr must name the stage: {stderr}");
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    std::fs::write(dir.path().join("config.toml"), "seed = \"not a number\"\n").unwrap();
    let status = eranet()
        .args(["--config"])
        .arg(dir.path().join("config.toml"))
        .args(["validate", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn validate_reports_violations_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("nodes.csv"), "id,label,birth,death\nx,X,1900,1800\n").unwrap();
    std::fs::write(dir.path().join("edges.csv"), "source,target\n").unwrap();
    let output = eranet()
        .args(["validate", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stdout).contains("birth after death"));
}

#[test]
fn assign_eras_emits_trace() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = dir.path().join("stage");
    let status = eranet()
        .args(["assign-eras", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("id,initial_era,final_era,n_moves\n"));
    assert_eq!(trace.lines().count(), 7, "one row per scholar plus header");
}

/// Stage composition: assign-eras output feeds slice, metrics, signatures,
/// communities, track, and sweep.
#[test]
fn stages_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let stage = dir.path().join("stage");
    assert!(eranet()
        .args(["assign-eras", "--nodes"])
        .arg(dir.path().join("nodes.csv"))
        .arg("--edges")
        .arg(dir.path().join("edges.csv"))
        .arg("--output")
        .arg(&stage)
        .status()
        .unwrap()
        .success());

    let scholars = stage.join("scholars.csv");
    let edges = stage.join("edges.csv");

    // One metrics JSON for a within slice.
    let out = dir.path().join("metrics");
    assert!(eranet()
        .args(["metrics", "--scholars"])
        .arg(&scholars)
        .arg("--edges")
        .arg(&edges)
        .args(["--slice", "within:0", "--output"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics_within_0.json")).unwrap())
            .unwrap();
    assert!(json.get("density").is_some());

    // Slice DOT export.
    let out = dir.path().join("slices");
    assert!(eranet()
        .args(["slice", "--scholars"])
        .arg(&scholars)
        .arg("--edges")
        .arg(&edges)
        .args(["--kind", "accumulated:5", "--dot", "--output"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert!(std::fs::read_to_string(out.join("slice_accumulated_5.dot"))
        .unwrap()
        .starts_with("digraph"));

    // Communities -> track -> sweep.
    let parts = dir.path().join("parts");
    assert!(eranet()
        .args(["communities", "--scholars"])
        .arg(&scholars)
        .arg("--edges")
        .arg(&edges)
        .args(["--seed", "7", "--output"])
        .arg(&parts)
        .status()
        .unwrap()
        .success());
    assert!(parts.join("step_0.csv").exists() && parts.join("step_5.csv").exists());

    let out = dir.path().join("track");
    assert!(eranet()
        .args(["track", "--partitions"])
        .arg(&parts)
        .args(["--theta", "0.3", "--output"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert!(std::fs::read_to_string(out.join("events.csv"))
        .unwrap()
        .starts_with("step,event,dynamic_ids,step_community_id"));

    let out = dir.path().join("sweep");
    assert!(eranet()
        .args(["sweep", "--partitions"])
        .arg(&parts)
        .args(["--scholars"])
        .arg(&scholars)
        .arg("--edges")
        .arg(&edges)
        .args(["--theta", "0:0.95:0.05", "--output"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 21, "20 theta rows plus header");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let mut digests = Vec::new();
    for name in ["one", "two"] {
        let out = dir.path().join(name);
        assert!(eranet()
            .args(["run", "--seed", "99", "--nodes"])
            .arg(dir.path().join("nodes.csv"))
            .arg("--edges")
            .arg(dir.path().join("edges.csv"))
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap()
            .success());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
                .unwrap();
        digests.push(manifest["outputs"].clone());
    }
    assert_eq!(digests[0], digests[1]);
}
