//! A simulated network: one quantum environment, one ledger, a message
//! scheduler and the action trace shared by every participant.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::banknote::{PhiParams, Variant};
use crate::hashing::{sha256, Digest32};
use crate::ledger::{ContractView, Ledger, LedgerEvent, LedgerMessage, LedgerResponse, Ssid};
use crate::lightning::{LightningError, LightningParams, QuantumEnv};
use crate::pid::Pid;
use crate::qlds::{MAX_N, MIN_N};

pub type BanknoteLedger = Ledger<PhiParams>;
pub type Message = LedgerMessage<PhiParams>;
pub type Response = LedgerResponse<PhiParams>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyMode {
    /// One bolt per banknote.
    Minimal,
    /// A `2n`-bolt signing bundle per banknote.
    Qlds,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid contract parameters: {0}")]
    Phi(String),
    #[error("n must lie in {MIN_N}..={MAX_N}, got {0}")]
    N(usize),
    #[error("scan interval must lie in 1..=t_tr-1 ({max}), got {got}")]
    ScanInterval { got: u64, max: u64 },
    #[error("signature variants need signing keys")]
    KeyMode,
    #[error("bad scheduler `{0}`; expected fifo or reorder:<ticks>")]
    Scheduler(String),
    #[error(transparent)]
    Lightning(#[from] LightningError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub d0: u64,
    pub t_tr: u64,
    pub t0: u64,
    pub t1: u64,
    pub n: usize,
    pub key_mode: KeyMode,
    pub scan_interval: u64,
    pub lambda: u32,
    pub sound: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            variant: Variant::Base,
            d0: 10,
            t_tr: 100,
            t0: 10,
            t1: 10,
            n: 8,
            key_mode: KeyMode::Qlds,
            scan_interval: 99,
            lambda: 128,
            sound: true,
        }
    }
}

impl NetworkConfig {
    pub fn with_variant(variant: Variant) -> Self {
        NetworkConfig {
            variant,
            ..Self::default()
        }
    }

    pub fn phi(&self) -> PhiParams {
        let mut p = PhiParams::base(self.d0, self.t_tr);
        p.variant = self.variant;
        if self.variant == Variant::CommitReveal {
            p.t0 = self.t0;
            p.t1 = self.t1;
        }
        p
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let phi = self.phi();
        if !phi.is_valid() {
            return Err(ConfigError::Phi(phi.id()));
        }
        if !(MIN_N..=MAX_N).contains(&self.n) {
            return Err(ConfigError::N(self.n));
        }
        let max = self.t_tr.saturating_sub(1);
        if self.scan_interval == 0 || self.scan_interval > max {
            return Err(ConfigError::ScanInterval {
                got: self.scan_interval,
                max,
            });
        }
        if self.variant.uses_signatures() && self.key_mode != KeyMode::Qlds {
            return Err(ConfigError::KeyMode);
        }
        Ok(())
    }

    /// Interval at which honest holders scan. Commit-reveal claims can mature
    /// `t1` ticks after their reveal, so the interval is capped there.
    pub fn watchdog_interval(&self) -> u64 {
        if self.variant == Variant::CommitReveal {
            self.scan_interval.min(self.t1).max(1)
        } else {
            self.scan_interval
        }
    }

    /// `key=value` pairs echoed into trace headers.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("variant", self.variant.to_string()),
            ("d0", self.d0.to_string()),
            ("ttr", self.t_tr.to_string()),
            ("t0", self.t0.to_string()),
            ("t1", self.t1.to_string()),
            ("n", self.n.to_string()),
            (
                "keys",
                match self.key_mode {
                    KeyMode::Minimal => "minimal".into(),
                    KeyMode::Qlds => "qlds".into(),
                },
            ),
            ("scan", self.scan_interval.to_string()),
            ("lambda", self.lambda.to_string()),
            ("sound", self.sound.to_string()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheduler {
    #[default]
    Fifo,
    /// Honest `Trigger` messages are held back `delta` ticks; everything else,
    /// including adversarial messages, is processed immediately.
    Reorder { delta: u64 },
}

impl FromStr for Scheduler {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "fifo" {
            return Ok(Scheduler::Fifo);
        }
        s.strip_prefix("reorder:")
            .and_then(|d| d.parse().ok())
            .map(|delta| Scheduler::Reorder { delta })
            .ok_or_else(|| ConfigError::Scheduler(s.to_owned()))
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheduler::Fifo => f.write_str("fifo"),
            Scheduler::Reorder { delta } => write!(f, "reorder:{delta}"),
        }
    }
}

/// A message waiting in the mempool. Its contents are visible to the adversary.
#[derive(Clone, Debug)]
pub struct Queued {
    pub id: u64,
    pub sender: Pid,
    pub msg: Message,
    pub due: u64,
}

#[derive(Clone, Debug)]
pub struct Delivery {
    pub id: u64,
    pub sender: Pid,
    pub msg: Message,
    pub response: Response,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Receipt {
    Done(Response),
    Queued(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LedgerStats {
    /// Write messages that changed ledger state (ticks excluded).
    pub state_changes: u64,
    /// Write messages the ledger rejected or ignored.
    pub rejected_writes: u64,
    /// Accepted writes that moved coins between parties and contracts.
    pub coin_moving: u64,
    pub reads: u64,
    /// Total bytes of accepted write messages in their line encoding.
    pub write_bytes: u64,
}

/// Tick-stamped, tab-separated action log.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    lines: Vec<String>,
}

impl Trace {
    pub fn header(&mut self, line: String) {
        self.lines.push(format!("# {line}"));
    }

    pub fn push(&mut self, tick: u64, actor: &str, action: &str, fields: &[String]) {
        let mut line = format!("{tick}\t{actor}\t{action}");
        for f in fields {
            line.push('\t');
            line.push_str(f);
        }
        self.lines.push(line);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

pub struct System {
    pub env: QuantumEnv,
    pub ledger: BanknoteLedger,
    config: NetworkConfig,
    scheduler: Scheduler,
    mempool: Vec<Queued>,
    priority: BTreeSet<Pid>,
    next_id: u64,
    stats: LedgerStats,
    events: Vec<LedgerEvent>,
    trace: Trace,
    rng: ChaCha20Rng,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("config", &self.config)
            .field("scheduler", &self.scheduler)
            .field("time", &self.ledger.time())
            .finish()
    }
}

pub fn seed_bytes(seed: u64, label: &[u8]) -> [u8; 32] {
    sha256(&[label, &seed.to_be_bytes()])
}

impl System {
    pub fn new(config: NetworkConfig, scheduler: Scheduler, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut params = LightningParams::new(config.lambda);
        params.sound_mode = config.sound;
        let env = QuantumEnv::with_params(params, seed_bytes(seed, b"env"))?;
        Ok(System {
            env,
            ledger: Ledger::new(),
            config,
            scheduler,
            mempool: Vec::new(),
            priority: BTreeSet::new(),
            next_id: 1,
            stats: LedgerStats::default(),
            events: Vec::new(),
            trace: Trace::default(),
            rng: ChaCha20Rng::from_seed(seed_bytes(seed, b"system")),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn phi(&self) -> PhiParams {
        self.config.phi()
    }

    pub fn scheduler(&self) -> Scheduler {
        self.scheduler
    }

    pub fn time(&self) -> u64 {
        self.ledger.time()
    }

    pub fn stats(&self) -> LedgerStats {
        self.stats
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn trace_mut(&mut self) -> &mut Trace {
        &mut self.trace
    }

    pub fn log(&mut self, actor: &str, action: &str, fields: &[String]) {
        let t = self.ledger.time();
        self.trace.push(t, actor, action, fields);
    }

    /// Deterministic randomness for scripted participants (not the bolt generator).
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn read_party(&mut self, pid: &Pid) -> Option<u64> {
        self.stats.reads += 1;
        self.ledger.retrieve_party(pid)
    }

    pub fn read_contract(&mut self, ssid: Ssid) -> Option<ContractView<PhiParams>> {
        self.stats.reads += 1;
        self.ledger.retrieve_contract(ssid)
    }

    pub fn mempool(&self) -> &[Queued] {
        &self.mempool
    }

    pub fn drain_events(&mut self) -> Vec<LedgerEvent> {
        std::mem::take(&mut self.events)
    }

    /// Marks a sender whose messages skip the scheduler delay.
    pub fn set_priority(&mut self, pid: &Pid, on: bool) {
        if on {
            self.priority.insert(pid.clone());
        } else {
            self.priority.remove(pid);
        }
    }

    pub fn has_priority(&self, pid: &Pid) -> bool {
        self.priority.contains(pid)
    }

    /// Honest submission path; subject to the scheduler.
    pub fn submit(&mut self, sender: &Pid, msg: Message) -> Receipt {
        match self.scheduler {
            Scheduler::Reorder { delta }
                if delta > 0 && matches!(msg, LedgerMessage::Trigger { .. }) && !self.priority.contains(sender) =>
            {
                let id = self.next_id;
                self.next_id += 1;
                self.mempool.push(Queued {
                    id,
                    sender: sender.clone(),
                    msg,
                    due: self.ledger.time() + delta,
                });
                Receipt::Queued(id)
            }
            _ => Receipt::Done(self.deliver(sender, msg)),
        }
    }

    /// Immediate processing, used by the adversary to jump the queue.
    pub fn submit_now(&mut self, sender: &Pid, msg: Message) -> Response {
        self.deliver(sender, msg)
    }

    fn deliver(&mut self, sender: &Pid, msg: Message) -> Response {
        let is_read = msg.is_read();
        let is_tick = matches!(msg, LedgerMessage::Tick);
        let bytes = if is_read || is_tick { 0 } else { encoded_len(&msg) };
        let response = self.ledger.handle(sender, msg);
        let events = self.ledger.drain_events();
        if is_read {
            self.stats.reads += 1;
        } else if !is_tick {
            if response.accepted() {
                self.stats.state_changes += 1;
                self.stats.write_bytes += bytes;
                let moves = events.iter().any(|e| {
                    matches!(
                        e,
                        LedgerEvent::Executed { .. } | LedgerEvent::Deposit { .. } | LedgerEvent::Reward { .. }
                    )
                });
                if moves {
                    self.stats.coin_moving += 1;
                }
            } else {
                self.stats.rejected_writes += 1;
            }
        }
        self.events.extend(events);
        response
    }

    /// Advances time by one tick and delivers every queued message that is now due.
    pub fn tick(&mut self) -> Vec<Delivery> {
        self.ledger.tick();
        let now = self.ledger.time();
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.mempool)
            .into_iter()
            .partition(|q| q.due <= now);
        self.mempool = rest;
        due.into_iter()
            .map(|q| {
                let response = self.deliver(&q.sender, q.msg.clone());
                Delivery {
                    id: q.id,
                    sender: q.sender,
                    msg: q.msg,
                    response,
                }
            })
            .collect()
    }

    /// Digest of ledger state and bolt registry.
    pub fn digest(&self) -> Digest32 {
        sha256(&[&self.ledger.digest(), &self.env.registry_digest()])
    }
}

/// Size of a write message in the scenario line encoding.
pub fn encoded_len(msg: &Message) -> u64 {
    let fields: Vec<String> = match msg {
        LedgerMessage::AddParty => vec![],
        LedgerMessage::AddTransaction { payee, amount } => vec![payee.to_string(), amount.to_string()],
        LedgerMessage::AddSmartContract { params } | LedgerMessage::InitializeWithCoins { params, .. } => {
            let serial = params
                .initial_state
                .serial
                .as_ref()
                .map(hex::encode)
                .unwrap_or_default();
            let mut f: Vec<String> = params.deposits.iter().map(|(p, d)| format!("{p}={d}")).collect();
            f.push(params.circuit.id());
            f.push(serial);
            if let LedgerMessage::InitializeWithCoins { ssid, .. } = msg {
                f.push(ssid.to_string());
            }
            f
        }
        LedgerMessage::Trigger { ssid, witness, deposit } => {
            vec![ssid.to_string(), deposit.to_string(), witness.encode()]
        }
        LedgerMessage::Tick => vec![],
        LedgerMessage::RetrieveParty { .. }
        | LedgerMessage::RetrieveTransaction { .. }
        | LedgerMessage::RetrieveContract { .. } => vec![],
    };
    let body: usize = fields.iter().map(|f| f.len() + 1).sum();
    (msg.name().len() + body) as u64
}
