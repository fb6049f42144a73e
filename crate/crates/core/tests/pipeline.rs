use std::path::Path;

use dualweb_core::pipeline::{cmd_reproduce, InputPaths, RunConfig};
use dualweb_core::synth::{write_dataset, SynthConfig};
use dualweb_core::Error;

fn small_synth() -> SynthConfig {
    SynthConfig {
        n_sites: 60,
        n_blocks: 3,
        n_global_sites: 4,
        n_users: 3000,
        ..SynthConfig::default()
    }
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig {
        synth: Some(small_synth()),
        seed: 9,
        ..RunConfig::default()
    };
    cfg.qap.n_permutations = 200;
    cfg.layout.iterations = 100;
    cfg
}

#[test]
fn synthetic_run_writes_every_artefact() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_reproduce(&small_config(), dir.path()).unwrap();
    for file in report.outputs.values() {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    for file in [
        "audience.svg",
        "hyperlink.svg",
        "report.json",
        "table.md",
        "data/nodes.csv",
    ] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let table = std::fs::read_to_string(dir.path().join("table.md")).unwrap();
    for row in [
        "Clustering Coefficient",
        "Network Centralization",
        "Density",
        "Ties",
        "Nodes",
    ] {
        assert!(table.contains(row), "{row}");
    }
    assert_eq!(report.audience.stats.n_nodes, 60);
    assert_eq!(report.hyperlink.stats.n_nodes, 60);
    assert_eq!(report.qap.n_permutations, 200);
    // the run seed reaches every seeded stage
    assert_eq!(report.qap.seed, 9);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(
        json["audience"]["communities"]["n_communities"],
        report.audience.communities.n_communities
    );
}

#[test]
fn user_inputs_reproduce_the_synthetic_run() {
    let dir = tempfile::tempdir().unwrap();
    let synth_report = cmd_reproduce(&small_config(), &dir.path().join("synth")).unwrap();

    let mut data_cfg = small_synth();
    data_cfg.seed = 9;
    let paths = write_dataset(&data_cfg, &dir.path().join("data")).unwrap();
    let cfg = RunConfig {
        synth: None,
        inputs: InputPaths {
            log: Some(paths.log),
            panel: Some(paths.panel),
            edges: Some(paths.edges),
            metadata: Some(paths.metadata),
        },
        ..small_config()
    };
    let user_report = cmd_reproduce(&cfg, &dir.path().join("user")).unwrap();
    assert_eq!(user_report.audience.stats, synth_report.audience.stats);
    assert_eq!(user_report.hyperlink.stats, synth_report.hyperlink.stats);
    assert_eq!(user_report.qap, synth_report.qap);
    // no planted blocks without a synthetic config
    assert_eq!(user_report.audience.planted_agreement, None);
}

#[test]
fn missing_metadata_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = RunConfig {
        synth: None,
        inputs: InputPaths {
            log: Some(dir.path().join("visits.csv")),
            panel: Some(dir.path().join("panel.json")),
            edges: Some(dir.path().join("edges.csv")),
            metadata: Some(dir.path().join("nodes.csv")),
        },
        ..RunConfig::default()
    };
    let err = cmd_reproduce(&cfg, &out).unwrap_err();
    match err {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "validate");
            assert!(matches!(*source, Error::MissingInput(ref p) if p.ends_with("nodes.csv")));
        }
        other => panic!("unexpected {other}"),
    }
    assert!(!out.exists());
}

#[test]
fn stage_failures_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut data_cfg = small_synth();
    data_cfg.seed = 1;
    let paths = write_dataset(&data_cfg, &dir.path().join("data")).unwrap();
    // a visit to a site missing from the metadata
    let mut log = std::fs::read_to_string(&paths.log).unwrap();
    log.push_str("u-extra,not-a-site\n");
    std::fs::write(&paths.log, log).unwrap();
    let cfg = RunConfig {
        synth: None,
        inputs: InputPaths {
            log: Some(paths.log),
            panel: Some(paths.panel),
            edges: Some(paths.edges),
            metadata: Some(paths.metadata),
        },
        ..small_config()
    };
    let err = cmd_reproduce(&cfg, &dir.path().join("out")).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Stage {
                stage: "build-audience",
                ..
            }
        ),
        "{err}"
    );
    assert!(err.to_string().contains("not-a-site"), "{err}");
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"seed": 7, "qap": {"n_permutations": 50}}"#).unwrap();
    let cfg = RunConfig::read_json(&path).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.qap.n_permutations, 50);
    assert_eq!(cfg.synth, Some(SynthConfig::default()));
    assert!(matches!(
        RunConfig::read_json(Path::new("/nonexistent/run.json")),
        Err(Error::MissingInput(_))
    ));
}
