use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus.jsonl");
const GOLDEN: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/corpus.graph.sha256"
);

fn wikinav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wikinav"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = wikinav(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn sha256(path: &Path) -> String {
    Sha256::digest(fs::read(path).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let g = dir.join("g.navg");
    ok(&[
        "build",
        "--synth",
        "--seed",
        "3",
        "--articles",
        "40",
        "--topics",
        "4",
        "--out",
        s(&g),
    ]);
    g
}

#[test]
fn fixture_build_matches_golden_hash() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("fixture.navg");
    let report = ok(&["build", "--corpus", FIXTURE, "--out", s(&g)]);
    assert!(report.contains("articles            3"), "{report}");
    let golden = fs::read_to_string(GOLDEN).unwrap();
    assert_eq!(sha256(&g), golden.trim());
    assert!(dir.path().join("fixture.navg.report.json").exists());
    let cfg = fs::read_to_string(dir.path().join("fixture.navg.config")).unwrap();
    assert!(cfg.contains("target_words = 100"), "{cfg}");
}

#[test]
fn synth_build_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.navg"), dir.path().join("b.navg"));
    for p in [&a, &b] {
        ok(&["build", "--synth", "--seed", "7", "--out", s(p)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = wikinav(&[
        "build",
        "--corpus",
        "/no/such/corpus.jsonl",
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(wikinav(&["train"]).status.code(), Some(2));
    assert_eq!(wikinav(&["frobnicate"]).status.code(), Some(2));
    let help = ok(&["--help"]);
    for cmd in ["build", "train", "eval", "retrieve", "stats"] {
        assert!(help.contains(cmd), "{help}");
    }
    assert!(ok(&["train", "--help"]).contains("--sampler"));
}

#[test]
fn every_sampler_is_accepted_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    for sampler in ["forward", "reverse", "shortest"] {
        let ck = dir.path().join(format!("{sampler}.ckpt"));
        ok(&[
            "train",
            "--graph",
            s(&g),
            "--sampler",
            sampler,
            "--steps",
            "37",
            "--dim",
            "32",
            "--out",
            s(&ck),
        ]);
        let log = fs::read_to_string(dir.path().join(format!("{sampler}.ckpt.log.csv"))).unwrap();
        let mut lines = log.lines();
        assert!(lines
            .next()
            .unwrap()
            .contains(&format!("sampler={sampler}")));
        assert_eq!(lines.next(), Some("step,loss,success_probe"));
        assert_eq!(lines.count(), 37);
        let cfg = fs::read_to_string(dir.path().join(format!("{sampler}.ckpt.config"))).unwrap();
        assert!(cfg.contains(&format!("sampler = {sampler}")));
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!("graph = {}\nsteps = 12\ndim = 16\nlr = 0.02\n", s(&g)),
    )
    .unwrap();
    let ck = dir.path().join("p.ckpt");
    ok(&[
        "--config",
        s(&conf),
        "train",
        "--steps",
        "9",
        "--out",
        s(&ck),
    ]);
    let log = fs::read_to_string(dir.path().join("p.ckpt.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2 + 9);
    let resolved = fs::read_to_string(dir.path().join("p.ckpt.config")).unwrap();
    assert!(
        resolved.contains("steps = 9")
            && resolved.contains("lr = 0.02")
            && resolved.contains("dim = 16")
    );
}

#[test]
fn agents_share_episodes_and_traces_use_paragraph_labels() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let out = dir.path().join("r.csv");
    let trace = dir.path().join("trace");
    ok(&[
        "eval",
        "--graph",
        s(&g),
        "--agents",
        "random,greedy",
        "--episodes",
        "30",
        "--seed",
        "4",
        "--out",
        s(&out),
        "--trace",
        s(&trace),
    ]);
    let report = fs::read_to_string(&out).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(report.starts_with("task,agent,T,B,episodes,success_rate,stderr"));
    let endpoints = |agent: &str| -> Vec<String> {
        fs::read_to_string(dir.path().join(format!("trace.{agent}")))
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("episode"))
            .map(|l| {
                l.split_once(" from ")
                    .unwrap()
                    .1
                    .rsplit_once(" in ")
                    .unwrap()
                    .0
                    .to_string()
            })
            .collect()
    };
    let (r, gr) = (endpoints("random"), endpoints("greedy"));
    assert_eq!(r.len(), 30);
    assert_eq!(r, gr);
    let label = regex_free_label(&fs::read_to_string(dir.path().join("trace.greedy")).unwrap());
    assert!(label, "trace lines should read `Title (k)`");
}

fn regex_free_label(trace: &str) -> bool {
    trace.lines().filter(|l| l.starts_with("  ")).all(|l| {
        let l = l.trim();
        l.ends_with(')')
            && l.rsplit_once(" (")
                .is_some_and(|(_, k)| k.trim_end_matches(')').parse::<u32>().is_ok())
    })
}

#[test]
fn unknown_agent_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let out = wikinav(&[
        "eval",
        "--graph",
        s(&g),
        "--agents",
        "random,teleport",
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for a in [
        "policy",
        "random",
        "greedy",
        "random_dfs",
        "greedy_dfs",
        "oracle",
    ] {
        assert!(err.contains(a), "{err}");
    }
}

#[test]
fn workers_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let ck = dir.path().join("p.ckpt");
    ok(&[
        "--workers",
        "1",
        "train",
        "--graph",
        s(&g),
        "--steps",
        "40",
        "--dim",
        "32",
        "--out",
        s(&ck),
    ]);
    let ck4 = dir.path().join("p4.ckpt");
    ok(&[
        "--workers",
        "4",
        "train",
        "--graph",
        s(&g),
        "--steps",
        "40",
        "--dim",
        "32",
        "--out",
        s(&ck4),
    ]);
    assert_eq!(fs::read(&ck).unwrap(), fs::read(&ck4).unwrap());
    let mut reports = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("r{w}.csv"));
        ok(&[
            "--workers",
            w,
            "eval",
            "--graph",
            s(&g),
            "--agents",
            "policy,random_dfs",
            "--checkpoint",
            s(&ck),
            "--dim",
            "32",
            "--episodes",
            "50",
            "--out",
            s(&out),
        ]);
        reports.push(fs::read_to_string(out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn retrieve_without_navigation_and_with_it() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let claims = dir.path().join("claims.jsonl");
    ok(&[
        "claims",
        "--graph",
        s(&g),
        "--n-claims",
        "8",
        "--hops",
        "2",
        "--out",
        s(&claims),
    ]);
    let res = dir.path().join("res.jsonl");
    ok(&[
        "retrieve",
        "--graph",
        s(&g),
        "--claims",
        s(&claims),
        "--nav-steps",
        "0",
        "--dim",
        "32",
        "--out",
        s(&res),
    ]);
    let metrics = fs::read_to_string(dir.path().join("res.jsonl.metrics.csv")).unwrap();
    assert_eq!(
        metrics.lines().next().unwrap(),
        "claims,P@5,R@5,F1@5,Recall@1,Recall@2,Recall@3,Recall@4,Recall@5"
    );
    let rows: Vec<serde_json::Value> = fs::read_to_string(&res)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        for e in r["evidence"].as_array().unwrap() {
            assert_eq!(
                e["path"].as_array().unwrap().len(),
                1,
                "no moves without navigation"
            );
        }
    }

    let ck = dir.path().join("p.ckpt");
    ok(&[
        "train",
        "--graph",
        s(&g),
        "--steps",
        "30",
        "--dim",
        "32",
        "--goal",
        "sentence",
        "--out",
        s(&ck),
    ]);
    let res = dir.path().join("nav.jsonl");
    ok(&[
        "retrieve",
        "--graph",
        s(&g),
        "--claims",
        s(&claims),
        "--checkpoint",
        s(&ck),
        "--dim",
        "32",
        "--nav-steps",
        "3",
        "--out",
        s(&res),
    ]);
    let row: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&res).unwrap().lines().next().unwrap()).unwrap();
    assert!(row["paths"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| !p.as_array().unwrap().is_empty()));
    let missing = wikinav(&[
        "retrieve",
        "--graph",
        s(&g),
        "--claims",
        s(&claims),
        "--out",
        s(&res),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn stats_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let out = dir.path().join("stats");
    ok(&[
        "stats",
        "--graph",
        s(&g),
        "--against",
        s(&g),
        "--sources",
        "20",
        "--out-dir",
        s(&out),
    ]);
    let graph = wikinav::graph::load(&g).unwrap();
    let degree_sum: u64 = fs::read_to_string(out.join("degree_out.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (b, c) = l.split_once(',').unwrap();
            b.parse::<u64>().unwrap() * c.parse::<u64>().unwrap()
        })
        .sum();
    assert_eq!(degree_sum as usize, graph.edge_count());
    let diff: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("diff.json")).unwrap()).unwrap();
    for k in [
        "articles_added",
        "articles_removed",
        "nodes_added",
        "nodes_removed",
        "nodes_changed",
    ] {
        assert_eq!(diff[k], 0, "{k}");
    }
    assert!(out.join("spl.csv").exists() && out.join("run.config").exists());
}
