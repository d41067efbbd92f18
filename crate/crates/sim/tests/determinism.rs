use sdpc_sim::attack::run_suite;
use sdpc_sim::{execute, six_node_scenario, AdversaryKind, Mode, ScenarioConfig};

fn artifacts(cfg: &ScenarioConfig) -> (String, String, String) {
    let run = execute(cfg).unwrap();
    (run.report_json(), run.transcript().to_jsonl(), run.fabric.log_jsonl())
}

#[test]
fn same_seed_gives_identical_bytes() {
    for mode in Mode::ALL {
        let cfg = six_node_scenario(42, mode);
        assert_eq!(artifacts(&cfg), artifacts(&cfg), "{mode:?}");
    }
}

#[test]
fn seed_changes_the_wire_but_not_the_message_schedule() {
    let a = execute(&six_node_scenario(1, Mode::Sdpc)).unwrap();
    let b = execute(&six_node_scenario(2, Mode::Sdpc)).unwrap();
    let tags = |r: &sdpc_sim::ScenarioRun| {
        r.transcript()
            .entries()
            .iter()
            .map(|e| (e.time, e.msg_tag.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(tags(&a), tags(&b));
    let wire = |r: &sdpc_sim::ScenarioRun| serde_json::to_string(r.fabric.wiretap()).unwrap();
    assert_ne!(wire(&a), wire(&b));
    assert_eq!(wire(&a), wire(&execute(&six_node_scenario(1, Mode::Sdpc)).unwrap()));
}

#[test]
fn transcript_survives_a_jsonl_roundtrip() {
    let run = execute(&six_node_scenario(5, Mode::Sdpc)).unwrap();
    let text = run.transcript().to_jsonl();
    let back = sdpc_core::protocol::Transcript::from_jsonl(&text).unwrap();
    assert_eq!(back.to_jsonl(), text);
    assert!(!back.is_empty());
}

#[test]
fn attack_reports_are_reproducible() {
    let kinds = AdversaryKind::ALL;
    assert_eq!(
        run_suite(&kinds, 8, false).unwrap(),
        run_suite(&kinds, 8, false).unwrap()
    );
}

#[test]
fn scenario_files_load_identically_from_json_and_toml() {
    let dir = std::env::temp_dir().join(format!("sdpc-sim-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = six_node_scenario(13, Mode::BaselineClearMeta);
    let json = dir.join("s.json");
    let toml_path = dir.join("s.toml");
    std::fs::write(&json, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    std::fs::write(&toml_path, toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(ScenarioConfig::load(&json).unwrap(), cfg);
    assert_eq!(ScenarioConfig::load(&toml_path).unwrap(), cfg);
    assert_eq!(artifacts(&ScenarioConfig::load(&toml_path).unwrap()), artifacts(&cfg));
    let yaml = dir.join("s.yaml");
    std::fs::write(&yaml, "seed: 1").unwrap();
    assert!(ScenarioConfig::load(&yaml).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
