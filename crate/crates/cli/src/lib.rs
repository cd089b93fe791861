//! Library side of the `qlpay` binary: argument parsing and the three subcommands.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use qlpay_core::bridge::{
    self, split_denominations, verify_bridge_message, verify_bridge_note, BridgeLedger, Lamport, SignatureScheme,
};
use qlpay_core::harness::attacks::{attack_config, Attack, ATTACK_DELTA};
use qlpay_core::harness::games::{play, Game, GameConfig};
use qlpay_core::harness::{self, run, RunConfig, RunError, RunReport, Scenario, ScenarioError};
use qlpay_core::system::{seed_bytes, ConfigError, KeyMode};
use qlpay_core::{ql_setup, NetworkConfig, Pid, Scheduler, Variant};

pub const DEMOS: &[(&str, &str)] = &[
    ("mint-pay-redeem", include_str!("../demos/mint-pay-redeem.qls")),
    ("lost-claim", include_str!("../demos/lost-claim.qls")),
    ("challenge", include_str!("../demos/challenge.qls")),
    ("attack-i", include_str!("../demos/attack-i.qls")),
    ("attack-ii", include_str!("../demos/attack-ii.qls")),
    ("attack-iii", include_str!("../demos/attack-iii.qls")),
    ("merkle-split", ""),
];

#[derive(Debug, Parser)]
#[command(name = "qlpay", version, about = "Quantum-lightning payment simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Execute a scenario file (or `builtin:<name>`) and write its trace.
    Run {
        scenario: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Play the security games and report wins per game.
    Games {
        #[command(flatten)]
        config: ConfigArgs,
        /// Trials per game.
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        /// Play a single game instead of all six.
        #[arg(long)]
        game: Option<String>,
    },
    /// Print an annotated trace for one of the bundled demos.
    Demo {
        name: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// base, sig-gated or commit-reveal.
    #[arg(long, default_value = "base")]
    pub variant: Variant,
    /// Deposit required to file a lost-banknote claim.
    #[arg(long, default_value_t = 10)]
    pub d0: u64,
    /// Ticks a claim must stay unchallenged.
    #[arg(long, default_value_t = 100)]
    pub ttr: u64,
    /// Commit-reveal: reveal window after the commit.
    #[arg(long, default_value_t = 10)]
    pub t0: u64,
    /// Commit-reveal: settle delay after the reveal.
    #[arg(long, default_value_t = 10)]
    pub t1: u64,
    /// Bolts per signing half-bundle (8 for runs and games, 256 for demos).
    #[arg(long)]
    pub n: Option<usize>,
    /// fifo or reorder:<ticks>.
    #[arg(long, default_value = "fifo")]
    pub scheduler: Scheduler,
    /// Honest scan interval; defaults to ttr - 1.
    #[arg(long)]
    pub scan: Option<u64>,
    /// minimal or qlds.
    #[arg(long, default_value = "qlds", value_parser = parse_keys)]
    pub keys: KeyMode,
    /// Let bolts be cloned (negative control).
    #[arg(long)]
    pub unsound: bool,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_keys(s: &str) -> Result<KeyMode, String> {
    match s {
        "minimal" => Ok(KeyMode::Minimal),
        "qlds" => Ok(KeyMode::Qlds),
        other => Err(format!("unknown key mode `{other}`")),
    }
}

impl ConfigArgs {
    pub fn network(&self, default_n: usize) -> NetworkConfig {
        NetworkConfig {
            variant: self.variant,
            d0: self.d0,
            t_tr: self.ttr,
            t0: self.t0,
            t1: self.t1,
            n: self.n.unwrap_or(default_n),
            key_mode: self.keys,
            scan_interval: self.scan.unwrap_or(self.ttr.saturating_sub(1)),
            lambda: 128,
            sound: !self.unsound,
        }
    }

    pub fn run_config(&self, default_n: usize) -> RunConfig {
        RunConfig {
            network: self.network(default_n),
            scheduler: self.scheduler,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ScenarioError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown demo `{0}`")]
    UnknownDemo(String),
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("write failed: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn run_error(path: &str, e: RunError) -> CliError {
    match e {
        RunError::Config(c) => CliError::Config(c),
        RunError::Script(s) => CliError::Parse {
            path: path.to_owned(),
            source: s,
        },
    }
}

pub fn load_scenario(path: &str) -> Result<Scenario, CliError> {
    if let Some(name) = path.strip_prefix("builtin:") {
        return harness::builtin(name).ok_or_else(|| CliError::Io {
            path: path.to_owned(),
            source: io::Error::new(io::ErrorKind::NotFound, "no such built-in scenario"),
        });
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let name = Path::new(path)
        .file_stem()
        .map_or_else(|| path.to_owned(), |s| s.to_string_lossy().into_owned());
    Scenario::parse(&name, &text).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn summary(err: &mut dyn Write, r: &RunReport) -> io::Result<()> {
    writeln!(
        err,
        "{}: max_net={} violations={} writes={} coin_writes={} front_runs={} malicious_settles={}",
        r.name,
        r.value.max_net,
        r.violations.len(),
        r.stats.state_changes,
        r.stats.coin_moving,
        r.front_runs,
        r.malicious_settles
    )?;
    for v in &r.violations {
        writeln!(err, "violation: {v}")?;
    }
    Ok(())
}

pub fn cmd_run(path: &str, args: &ConfigArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let scenario = load_scenario(path)?;
    let report = run(&scenario, &args.run_config(8)).map_err(|e| run_error(path, e))?;
    emit(out, args.out.as_deref(), &report.trace.render())?;
    summary(err, &report)?;
    Ok(report.exit_code())
}

pub fn cmd_games(
    args: &ConfigArgs,
    trials: u32,
    game: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let games: Vec<Game> = match game {
        Some(g) => vec![Game::from_name(g).ok_or_else(|| CliError::UnknownGame(g.to_owned()))?],
        None => Game::ALL.to_vec(),
    };
    let cfg = GameConfig {
        trials,
        n: args.n.unwrap_or(8),
        lambda: 128,
        sound: !args.unsound,
        seed: args.seed,
    };
    let start = Instant::now();
    let mut text = format!("# trials={trials} n={} sound={} seed={}\n", cfg.n, cfg.sound, cfg.seed);
    let mut wins = 0;
    for g in games {
        let r = play(g, &cfg);
        wins += r.wins;
        text.push_str(&format!("{r}\n"));
        for s in &r.by_strategy {
            text.push_str(&format!("  {}\t{}/{}\n", s.strategy, s.wins, s.trials));
        }
    }
    emit(out, args.out.as_deref(), &text)?;
    writeln!(err, "games finished in {:.2?}", start.elapsed())?;
    Ok(if cfg.sound && wins > 0 { 1 } else { 0 })
}

/// Comment block directly above each script line, keyed by line number.
fn narration(script: &str) -> BTreeMap<usize, String> {
    let mut notes = BTreeMap::new();
    let mut pending: Vec<&str> = Vec::new();
    for (i, line) in script.lines().enumerate() {
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            pending.push(c.trim());
        } else if !t.is_empty() {
            if !pending.is_empty() {
                notes.insert(i + 1, pending.join(" "));
            }
            pending.clear();
        }
    }
    notes
}

fn annotate(report: &RunReport, notes: &BTreeMap<usize, String>) -> String {
    let mut out = String::new();
    for line in report.trace.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() > 3 && cols[1] == "script" && cols[2] == "step" {
            let n = cols[3].strip_prefix("line=").and_then(|n| n.parse().ok());
            if let Some(note) = n.and_then(|n: usize| notes.get(&n)) {
                out.push_str(&format!("\n-- {note}\n"));
            }
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn verdict(r: &RunReport) -> String {
    format!(
        "-- result: adversary max_net={} front_runs={} violations={}\n",
        r.value.max_net,
        r.front_runs,
        r.violations.len()
    )
}

pub fn cmd_demo(name: &str, args: &ConfigArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let script = DEMOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| CliError::UnknownDemo(name.to_owned()))?;
    let text = if name == "merkle-split" {
        merkle_demo(args)?
    } else {
        let scenario = Scenario::parse(name, script).map_err(|source| CliError::Parse {
            path: format!("demo:{name}"),
            source,
        })?;
        let notes = narration(script);
        let mut text = String::new();
        let attack = name.strip_prefix("attack-").and_then(Attack::from_name);
        let runs: Vec<RunConfig> = match attack {
            Some(a) => {
                let variants: &[Variant] = match a {
                    Attack::ClaimRace => &Variant::ALL,
                    _ => &[Variant::Base, Variant::SigGated],
                };
                variants
                    .iter()
                    .map(|&v| {
                        let mut c = attack_config(v, ATTACK_DELTA, args.seed);
                        c.network.n = args.n.unwrap_or(256);
                        c.network.sound = !args.unsound;
                        c
                    })
                    .collect()
            }
            None => vec![args.run_config(256)],
        };
        for cfg in runs {
            if let Some(a) = attack {
                let status = if a.mitigated_by(cfg.network.variant) {
                    "mitigated"
                } else {
                    "unmitigated"
                };
                text.push_str(&format!("== {a} against {} ({status})\n", cfg.network.variant));
            }
            let report = run(&scenario, &cfg).map_err(|e| run_error(name, e))?;
            text.push_str(&annotate(&report, &notes));
            text.push_str(&verdict(&report));
            summary(err, &report)?;
        }
        text
    };
    emit(out, args.out.as_deref(), &text)?;
    Ok(0)
}

fn merkle_demo(args: &ConfigArgs) -> Result<String, CliError> {
    let n = args.n.map_or(3, |n| n as u32);
    let y = 1024;
    let mut text = format!("-- split y={y} into 2^{n} notes under one signed Merkle root\n");
    let mut env = ql_setup(128, seed_bytes(args.seed, b"merkle-demo")).expect("lambda 128 is supported");
    let mut rng = ChaCha20Rng::from_seed(seed_bytes(args.seed, b"merkle-demo-key"));
    let (mut sk, vk) = Lamport.keygen(&mut rng);
    let owner = Pid::new("minter", 0);
    let mut chain = BridgeLedger::new();
    let split = match split_denominations(&mut env, &Lamport, &mut sk, &owner, y, n, &mut chain) {
        Ok(s) => s,
        Err(e) => return Ok(format!("{text}-- split failed: {e}\n")),
    };
    text.push_str(&format!("key\t{}\n", hex::encode(vk.fingerprint())));
    text.push_str(&format!("root\t{}\n", hex::encode(split.tree.root())));
    text.push_str(&format!(
        "chain\twrites={}\tbytes={}\tsignature_bytes={}\n",
        chain.writes(),
        chain.bytes(),
        Lamport.signature_bytes(&split.message.signature).len()
    ));
    let accepted = verify_bridge_message(&Lamport, &vk, &split.message, y + 1);
    text.push_str(&format!(
        "message\t{}\n",
        if accepted.is_ok() { "accepted" } else { "rejected" }
    ));
    for note in &split.notes {
        text.push_str(&format!(
            "note\tvalue={}\tserial={}\tpath={}\t{}\n",
            note.value,
            note.serial,
            note.path,
            if verify_bridge_note(&env, &split.message, note) {
                "valid"
            } else {
                "invalid"
            }
        ));
    }
    if let Some(note) = split.notes.first() {
        let mut leaf = note.serial.0;
        leaf[0] ^= 1;
        let (root, depth) = bridge::parse_root_payload(&split.message.payload).expect("split payload");
        let ok = bridge::merkle_verify(&root, depth, &leaf, &note.path);
        text.push_str(&format!(
            "-- tampered leaf: {}\n",
            if ok { "accepted" } else { "rejected" }
        ));
    }
    Ok(text)
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Cmd::Run { scenario, config } => cmd_run(scenario, config, out, err),
        Cmd::Games { config, trials, game } => cmd_games(config, *trials, game.as_deref(), out, err),
        Cmd::Demo { name, config } => cmd_demo(name, config, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
