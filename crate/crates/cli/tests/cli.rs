use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdpc_sim::{six_node_scenario, Mode};

fn sdpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdpc"))
        .args(args)
        .output()
        .expect("spawn sdpc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn scenario_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn workspace_scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_writes_parsable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sdpc(&[
        "run",
        "--scenario",
        &workspace_scenario("six_node.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["consumers"]["N_B"]["cache_hits"], 16);
    assert_eq!(report["consumers"]["N_B"]["decrypt_ok"], 16);
    for f in ["transcript.jsonl", "events.jsonl"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(!text.is_empty());
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap_or_else(|e| panic!("{f}: {e}: {line}"));
        }
    }
    let first = std::fs::read_to_string(out.join("transcript.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["time", "from", "to", "protocol", "msg_tag", "run_id", "byte_len"] {
        assert!(rec.get(key).is_some(), "transcript record lacks {key}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("N_B: requested 16 delivered 16"));
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = six_node_scenario(1, Mode::Sdpc);
    cfg.content[1].segment_size = 0;
    let bad = scenario_file(dir.path(), "bad.json", &serde_json::to_string(&cfg).unwrap());
    let o = sdpc(&[
        "run",
        "--scenario",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("content[1].segment_size"));

    let garbage = scenario_file(dir.path(), "g.toml", "seed = \"seven\"\n");
    let o = sdpc(&[
        "run",
        "--scenario",
        garbage.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = sdpc(&["validate", "--scenario", "/nonexistent/s.json"]);
    assert_eq!(code(&o), 2);
    let o = sdpc(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "missing --out is a usage error");
}

#[test]
fn seed_override_matches_seed_in_file() {
    let dir = tempfile::tempdir().unwrap();
    let in_file = scenario_file(
        dir.path(),
        "a.json",
        &serde_json::to_string(&six_node_scenario(99, Mode::Sdpc)).unwrap(),
    );
    let other = scenario_file(
        dir.path(),
        "b.json",
        &serde_json::to_string(&six_node_scenario(1, Mode::Sdpc)).unwrap(),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        code(&sdpc(&[
            "run",
            "--scenario",
            in_file.to_str().unwrap(),
            "--out",
            a.to_str().unwrap()
        ])),
        0
    );
    let o = sdpc(&[
        "run",
        "--scenario",
        other.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(code(&o), 0);
    for f in ["report.json", "transcript.jsonl", "events.jsonl"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn mode_override_switches_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = sdpc(&[
        "run",
        "--scenario",
        &workspace_scenario("six_node.toml"),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "baseline-enc",
    ]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mode"], "baseline_encrypted_meta");
    assert_eq!(report["cache_hit_ratio"], 0.0);
    assert_eq!(
        code(&sdpc(&["run", "--scenario", "x.toml", "--out", "o", "--mode", "plain"])),
        2
    );
}

#[test]
fn livelock_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = six_node_scenario(1, Mode::Sdpc);
    cfg.max_ticks = 50;
    let f = scenario_file(dir.path(), "short.json", &serde_json::to_string(&cfg).unwrap());
    let o = sdpc(&[
        "run",
        "--scenario",
        f.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_and_toml_scenarios_validate() {
    for f in ["six_node.toml", "six_node_clear_meta.json", "third_party.toml"] {
        let o = sdpc(&["validate", "--scenario", &workspace_scenario(f)]);
        assert_eq!(code(&o), 0, "{f}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = sdpc(&["validate", "--scenario", "scenario.yaml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn compare_prints_three_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdpc(&[
        "compare",
        "--scenario",
        &workspace_scenario("six_node.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    for m in ["sdpc", "baseline_clear_meta", "baseline_encrypted_meta"] {
        assert!(table.contains(m), "{table}");
    }
    let cmp: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["deltas"]["baseline_encrypted_meta"]["publisher_load"], 16);
}

#[test]
fn attack_exit_codes() {
    let o = sdpc(&["attack", "--suite", "all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("defeated").count(), 4);

    let o = sdpc(&["attack", "--suite", "replay", "--disable-nonce-registry"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ACCEPTED"));

    assert_eq!(code(&sdpc(&["attack", "--suite", "mitm"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("attacks.json");
    let o = sdpc(&["attack", "--suite", "stolen-ticket", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let reports: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    assert_eq!(reports[0]["kind"], "stolen_ticket");
    assert_eq!(reports[0]["verdict"], "defeated");
}

#[test]
fn demo_mpeg_reports_one_commitment() {
    let o = sdpc(&["demo-mpeg", "--gops", "100", "--seed", "4"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("keys derived: 100, commitments exchanged: 1"));
    let o = sdpc(&["demo-mpeg", "--gops", "1", "--seed", "4"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("keys derived: 1, commitments exchanged: 1"));
    assert_eq!(code(&sdpc(&["demo-mpeg", "--gops", "0", "--seed", "4"])), 2);
}

#[test]
fn bench_reports_time_and_stable_keys() {
    let a = sdpc(&["bench-keychain", "--length", "1"]);
    assert_eq!(code(&a), 0);
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.contains("wall time:") && text.contains("derivations: 2"), "{text}");
    let b = sdpc(&["bench-keychain", "--length", "1"]);
    let key = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("last key"))
            .unwrap()
            .to_owned()
    };
    assert_eq!(key(&a), key(&b));
    assert_eq!(code(&sdpc(&["bench-keychain", "--length", "0"])), 2);
}

#[test]
fn verbosity_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_sdpc"))
        .args(["attack", "--suite", "replay"])
        .env("SDPC_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("INFO"));
    let quiet = sdpc(&["attack", "--suite", "replay"]);
    assert!(!String::from_utf8_lossy(&quiet.stderr).contains("INFO"));
}
