use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use sdpc_core::protocol::Transcript;

use crate::config::{ConfigError, Mode, ScenarioConfig};
use crate::fabric::{Fabric, FabricConfig, FabricError};
use crate::metrics::MetricsReport;
use crate::world::World;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("invariant violated: {}", .0.join("; "))]
    Violations(Vec<String>),
}

/// Everything a finished scenario leaves behind.
pub struct ScenarioRun {
    pub report: MetricsReport,
    pub fabric: Fabric,
    pub world: World,
    pub violations: Vec<String>,
}

impl ScenarioRun {
    pub fn transcript(&self) -> &Transcript {
        self.world.transcript()
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes")
    }
}

/// Run the script to completion and collect metrics, without failing on
/// invariant violations (they are returned in `violations`).
pub fn execute(config: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    config.validate()?;
    let topology = config.topology()?;
    let (mut world, timers) = World::build(config).map_err(SimError::Setup)?;
    let mut fabric = Fabric::new(
        topology,
        FabricConfig {
            pit_lifetime: config.pit_lifetime,
            max_ticks: config.max_ticks,
        },
    );
    for t in timers {
        fabric.schedule_timer(&t.node, t.at, t.token)?;
    }
    let events = fabric.run_until_idle(&mut world)?;

    let mut violations = std::mem::take(&mut world.violations);
    for (id, m) in world.metrics.iter_mut() {
        m.finalize();
        if let Err(e) = m.check() {
            violations.push(format!("{id}: {e}"));
        }
    }
    let pit = fabric.pit_counters();
    if pit.registered != pit.satisfied + pit.expired + fabric.pending_faces() {
        violations.push(format!(
            "PIT conservation broken: {pit:?}, {} pending",
            fabric.pending_faces()
        ));
    }

    let mut report = MetricsReport {
        mode: config.mode,
        seed: config.seed,
        consumers: world.metrics.clone(),
        runs: world.runs.clone(),
        stolen_tickets: world.stolen.clone(),
        publisher_load: world.publisher_load.clone(),
        cache_hit_ratio: 0.0,
        mean_hops: 0.0,
        pit,
        final_tick: fabric.now(),
        events,
    };
    let totals = report.totals();
    if totals.segments_delivered > 0 {
        report.cache_hit_ratio = totals.cache_hits as f64 / totals.segments_delivered as f64;
    }
    report.mean_hops = totals.mean_hops;
    Ok(ScenarioRun {
        report,
        fabric,
        world,
        violations,
    })
}

/// Like [`execute`], but any invariant violation is an error.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    let run = execute(config)?;
    if !run.violations.is_empty() {
        return Err(SimError::Violations(run.violations));
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDelta {
    pub cache_hit_ratio: f64,
    pub publisher_load: i64,
    pub mean_hops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub reports: BTreeMap<Mode, MetricsReport>,
    /// Each baseline relative to sdpc (baseline minus sdpc).
    pub deltas: BTreeMap<Mode, ModeDelta>,
}

fn load(r: &MetricsReport) -> i64 {
    r.publisher_load.values().sum::<u64>() as i64
}

impl ModeComparison {
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<26}{:>12}{:>16}{:>12}{:>14}\n",
            "mode", "cache hits", "publisher load", "mean hops", "decrypted"
        );
        for (mode, r) in &self.reports {
            let t = r.totals();
            out.push_str(&format!(
                "{:<26}{:>12}{:>16}{:>12.3}{:>14}\n",
                mode.as_str(),
                t.cache_hits,
                load(r),
                r.mean_hops,
                format!("{}/{}", t.decrypt_ok, t.segments_delivered)
            ));
        }
        out
    }
}

/// Run the same script in all three modes.
pub fn compare_modes(config: &ScenarioConfig) -> Result<ModeComparison, SimError> {
    let mut reports = BTreeMap::new();
    for mode in Mode::ALL {
        let cfg = ScenarioConfig { mode, ..config.clone() };
        reports.insert(mode, run_scenario(&cfg)?.report);
    }
    let base = &reports[&Mode::Sdpc];
    let deltas = reports
        .iter()
        .filter(|(m, _)| **m != Mode::Sdpc)
        .map(|(m, r)| {
            (
                *m,
                ModeDelta {
                    cache_hit_ratio: r.cache_hit_ratio - base.cache_hit_ratio,
                    publisher_load: load(r) - load(base),
                    mean_hops: r.mean_hops - base.mean_hops,
                },
            )
        })
        .collect();
    Ok(ModeComparison { reports, deltas })
}
