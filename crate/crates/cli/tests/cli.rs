use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

fn dualweb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualweb"))
        .args(args)
        .current_dir(dir)
        .env_remove("DUALWEB_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = dualweb(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn subcommands_chain_over_a_synthetic_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("synth.json"),
        r#"{"n_sites": 40, "n_blocks": 2, "n_global_sites": 4, "n_users": 1500}"#,
    )
    .unwrap();
    ok(
        &["synth", "--config", "synth.json", "--out-dir", "data", "--seed", "5"],
        dir,
    );
    for f in ["nodes.csv", "visits.csv", "panel.json", "edges.csv"] {
        assert!(dir.join("data").join(f).is_file(), "{f}");
    }

    ok(
        &[
            "build-audience",
            "--log",
            "data/visits.csv",
            "--panel",
            "data/panel.json",
            "--meta",
            "data/nodes.csv",
            "--out",
            "aud.json",
            "--dup",
            "dup.json",
            "--edges",
            "aud_edges.csv",
        ],
        dir,
    );
    ok(
        &[
            "build-hyperlink",
            "--edges",
            "data/edges.csv",
            "--meta",
            "data/nodes.csv",
            "--symmetrize",
            "max",
            "--out",
            "hyp.json",
        ],
        dir,
    );
    let aud = json(&dir.join("aud.json"));
    assert_eq!(aud["nodes"].as_array().unwrap().len(), 40);
    assert_eq!(aud["weights"].as_array().unwrap().len(), 40);
    let edges = std::fs::read_to_string(dir.join("aud_edges.csv")).unwrap();
    assert!(edges.starts_with("src,dst,weight\n"));

    ok(
        &[
            "metrics",
            "--graph",
            "hyp.json",
            "--out",
            "stats.json",
            "--ccdf",
            "ccdf.csv",
            "--plot",
            "degree.svg",
            "--clustering",
            "transitivity",
        ],
        dir,
    );
    let stats = json(&dir.join("stats.json"));
    assert_eq!(stats["n_nodes"], 40);
    assert_eq!(stats["clustering_variant"], "transitivity");
    assert!(std::fs::read_to_string(dir.join("degree.svg"))
        .unwrap()
        .starts_with("<svg"));

    ok(
        &[
            "communities",
            "--graph",
            "aud.json",
            "--seed",
            "7",
            "--out",
            "part.json",
        ],
        dir,
    );
    let part = json(&dir.join("part.json"));
    assert_eq!(part["seed"], 7);
    assert!(part["q"].as_f64().unwrap() > 0.0);
    assert_eq!(part["assignment"].as_object().unwrap().len(), 40);

    ok(
        &[
            "qap", "--a", "aud.json", "--b", "hyp.json", "--perms", "99", "--seed", "42", "--out", "qap.json",
        ],
        dir,
    );
    let qap = json(&dir.join("qap.json"));
    assert_eq!(qap["n_permutations"], 99);
    assert_eq!(qap["tail"], "two_sided");
    let p = qap["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);

    ok(
        &[
            "layout",
            "--graph",
            "aud.json",
            "--seed",
            "3",
            "--iterations",
            "50",
            "--out",
            "pos.json",
        ],
        dir,
    );
    assert_eq!(json(&dir.join("pos.json"))["positions"].as_object().unwrap().len(), 40);
    ok(
        &[
            "render",
            "--graph",
            "aud.json",
            "--pos",
            "pos.json",
            "--partition",
            "part.json",
            "--meta",
            "data/nodes.csv",
            "--out",
            "map.svg",
        ],
        dir,
    );
    let svg = std::fs::read_to_string(dir.join("map.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 40);
}

#[test]
fn reproduce_takes_seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.json"),
        r#"{"synth": {"n_sites": 30, "n_blocks": 2, "n_global_sites": 2, "n_users": 800},
            "qap": {"n_permutations": 50}, "layout": {"iterations": 30}}"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dualweb"))
        .args(["reproduce", "--config", "run.json", "--out-dir", "out"])
        .current_dir(dir)
        .env("DUALWEB_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("| Density |"));
    let report = json(&dir.join("out/report.json"));
    assert_eq!(report["seed"], 11);
    assert_eq!(report["qap"]["seed"], 11);

    // an explicit flag wins over the environment
    let out = Command::new(env!("CARGO_BIN_EXE_dualweb"))
        .args(["reproduce", "--config", "run.json", "--out-dir", "out2", "--seed", "12"])
        .current_dir(dir)
        .env("DUALWEB_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&dir.join("out2/report.json"))["seed"], 12);
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dualweb(&["metrics", "--graph", "missing.json", "--out", "s.json"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    std::fs::write(tmp.path().join("run.json"), r#"{"synth": null}"#).unwrap();
    let out = dualweb(&["reproduce", "--config", "run.json", "--out-dir", "out"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("validate"));

    let out = dualweb(
        &[
            "qap", "--a", "a.json", "--b", "b.json", "--tail", "sideways", "--out", "q.json",
        ],
        tmp.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn crawl_writes_edges_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = format!(
        r#"{{"seeds": [{{"id": "a.example", "host_patterns": ["a.example"], "languages": [], "geography": "US"}}],
            "per_host_delay_ms": 0, "timeout_ms": 1000, "resolve": {{"a.example": "127.0.0.1:{port}"}}}}"#
    );
    std::fs::write(dir.join("crawl.json"), cfg).unwrap();
    ok(&["crawl", "--config", "crawl.json", "--out", "edges.csv"], dir);
    assert_eq!(
        std::fs::read_to_string(dir.join("edges.csv")).unwrap(),
        "src,dst,count\n"
    );
    let report = json(&dir.join("edges.report.json"));
    assert_eq!(report["fetched"], 0);
    assert_eq!(report["dropped_sites"][0], "a.example");
}
