use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use sdpc_core::crypto::{build_key_chain, hash};
use sdpc_sim::attack::{run_suite, Verdict};
use sdpc_sim::mpeg::run_mpeg_demo;
use sdpc_sim::{compare_modes, execute, AdversaryKind, Mode, ScenarioConfig, SimError};

const OK: u8 = 0;
const VIOLATION: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sdpc",
    version,
    about = "Secure delivery of protected content over a simulated ICN"
)]
struct Cli {
    /// Raise log verbosity (repeatable). SDPC_LOG overrides it.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sdpc,
    BaselineClear,
    BaselineEnc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sdpc => Mode::Sdpc,
            ModeArg::BaselineClear => Mode::BaselineClearMeta,
            ModeArg::BaselineEnc => Mode::BaselineEncryptedMeta,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    All,
    Replay,
    Eavesdrop,
    StolenTicket,
    Impersonate,
}

impl Suite {
    fn kinds(self) -> Vec<AdversaryKind> {
        match self {
            Suite::All => AdversaryKind::ALL.to_vec(),
            Suite::Replay => vec![AdversaryKind::Replay],
            Suite::Eavesdrop => vec![AdversaryKind::Eavesdrop],
            Suite::StolenTicket => vec![AdversaryKind::StolenTicket],
            Suite::Impersonate => vec![AdversaryKind::ImpersonatePublisher],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.json, transcript.jsonl and events.jsonl.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run a scenario in all three modes and print the comparison table.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write comparison.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run adversaries against the canonical network.
    Attack {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write the attack reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Turn off nonce registries before attacking.
        #[arg(long, hide = true)]
        disable_nonce_registry: bool,
    },
    /// Stream N selectively encrypted GOPs to one subscriber.
    DemoMpeg {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        gops: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time building a key chain of the given length.
    BenchKeychain {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        length: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SDPC_LOG", default)).init();
}

fn load(path: &Path, seed: Option<u64>, mode: Option<Mode>) -> Result<ScenarioConfig, u8> {
    let mut cfg = ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        USAGE
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate().map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        USAGE
    })?;
    Ok(cfg)
}

fn sim_failure(e: SimError) -> u8 {
    eprintln!("error: {e}");
    match e {
        SimError::Config(_) | SimError::Setup(_) => USAGE,
        SimError::Fabric(_) | SimError::Violations(_) => VIOLATION,
    }
}

fn write_outputs(out: &Path, run: &sdpc_sim::ScenarioRun) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), run.report_json() + "\n")?;
    fs::write(out.join("transcript.jsonl"), run.transcript().to_jsonl())?;
    fs::write(out.join("events.jsonl"), run.fabric.log_jsonl())?;
    Ok(())
}

fn cmd_run(scenario: &Path, out: &Path, seed: Option<u64>, mode: Option<Mode>) -> u8 {
    let cfg = match load(scenario, seed, mode) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let run = match execute(&cfg) {
        Ok(r) => r,
        Err(e) => return sim_failure(e),
    };
    if let Err(e) = write_outputs(out, &run) {
        eprintln!("error: {e:#}");
        return USAGE;
    }
    print!("{}", run.report.summary());
    if run.violations.is_empty() {
        OK
    } else {
        for v in &run.violations {
            eprintln!("violation: {v}");
        }
        VIOLATION
    }
}

fn cmd_compare(scenario: &Path, seed: Option<u64>, out: Option<&Path>) -> u8 {
    let cfg = match load(scenario, seed, None) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let cmp = match compare_modes(&cfg) {
        Ok(c) => c,
        Err(e) => return sim_failure(e),
    };
    print!("{}", cmp.table());
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
        if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("comparison.json"), json + "\n")) {
            eprintln!("error: {}: {e}", dir.display());
            return USAGE;
        }
    }
    OK
}

fn cmd_attack(suite: Suite, seed: u64, out: Option<&Path>, disable: bool) -> u8 {
    let reports = match run_suite(&suite.kinds(), seed, disable) {
        Ok(r) => r,
        Err(e) => return sim_failure(e),
    };
    let mut code = OK;
    for r in &reports {
        let verdict = match r.verdict {
            Verdict::Defeated => "defeated",
            Verdict::Succeeded => "SUCCEEDED",
        };
        println!(
            "{:<24}{:<12}{} attempts, {} accepted",
            r.kind.as_str(),
            verdict,
            r.attempts,
            r.accepted
        );
        if r.verdict == Verdict::Succeeded {
            code = VIOLATION;
            for line in r.evidence.iter().filter(|l| !l.starts_with("rejected")) {
                eprintln!("  {}: {line}", r.kind.as_str());
            }
        }
    }
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(&reports).expect("attack reports serialize");
        if let Err(e) = fs::write(path, json + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return USAGE;
        }
    }
    code
}

fn cmd_demo_mpeg(gops: u64, seed: u64) -> u8 {
    let report = match run_mpeg_demo(gops as usize, seed) {
        Ok(r) => r,
        Err(e) => return sim_failure(e),
    };
    println!(
        "keys derived: {}, commitments exchanged: {}",
        report.keys_derived, report.commitments_exchanged
    );
    println!(
        "I-frame envelopes: {}, modified P/B bytes: {}, I-frames decrypted: {}/{}",
        report.i_frame_envelopes, report.modified_dependent_bytes, report.decrypted_i_frames, report.gops
    );
    if report.fully_decrypted() && report.modified_dependent_bytes == 0 {
        OK
    } else {
        VIOLATION
    }
}

fn cmd_bench(length: u64, seed: u64) -> u8 {
    let commitment = hash(&seed.to_be_bytes());
    let publisher_key = hash(&[b"bench".as_slice(), &seed.to_be_bytes()].concat());
    let start = Instant::now();
    let chain = match build_key_chain(commitment, length as usize, publisher_key.as_bytes()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return USAGE;
        }
    };
    let elapsed = start.elapsed();
    let secs = elapsed.as_secs_f64();
    // Two hashes per position: the generator step and the segment key.
    let derivations = 2 * length;
    let rate = if secs > 0.0 {
        derivations as f64 / secs
    } else {
        f64::INFINITY
    };
    println!("length: {length}");
    println!("wall time: {:.3} ms", secs * 1e3);
    println!("derivations: {derivations} ({rate:.0}/s)");
    println!("last key: {}", chain.segment_keys.last().expect("non-empty chain"));
    OK
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let code = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            mode,
        } => cmd_run(&scenario, &out, seed, mode.map(Mode::from)),
        Command::Compare { scenario, seed, out } => cmd_compare(&scenario, seed, out.as_deref()),
        Command::Validate { scenario } => match load(&scenario, None, None) {
            Ok(_) => {
                println!("{}: ok", scenario.display());
                OK
            }
            Err(code) => code,
        },
        Command::Attack {
            suite,
            seed,
            out,
            disable_nonce_registry,
        } => cmd_attack(suite, seed, out.as_deref(), disable_nonce_registry),
        Command::DemoMpeg { gops, seed } => cmd_demo_mpeg(gops, seed),
        Command::BenchKeychain { length, seed } => cmd_bench(length, seed),
    };
    ExitCode::from(code)
}
