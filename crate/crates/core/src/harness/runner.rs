//! Executes scenarios against a simulated network with a corrupting adversary.

use std::collections::{BTreeMap, BTreeSet};

use crate::banknote::{BanknoteState, PhiParams, Witness};
use crate::hashing::{sha256, Digest32};
use crate::ledger::{ContractParams, LedgerEvent, LedgerMessage, LedgerResponse, Ssid};
use crate::pid::Pid;
use crate::system::{ConfigError, LedgerStats, NetworkConfig, Receipt, Response, Scheduler, System, Trace};
use crate::wallet::{pay, Banknote, NoteKey, OpKind, OpResult, PayOutcome, PayeePolicy, Posted, ProtocolError, Wallet};

use super::scenario::{Command, RawMessage, Scenario, ScenarioError, Step};
use super::value::ValueLedger;

/// Holder of banknotes taken from parties when they leave corruption.
pub const STASH_ID: &str = "adversary";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub scheduler: Scheduler,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkConfig::default(),
            scheduler: Scheduler::Fifo,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub name: String,
    pub trace: Trace,
    pub value: ValueLedger,
    pub stats: LedgerStats,
    pub violations: Vec<String>,
    /// Accepted corrupt-party settles on contracts whose banknote an honest party still held.
    pub malicious_settles: u64,
    pub front_runs: u64,
    pub balances: BTreeMap<String, u64>,
    pub holdings: BTreeMap<String, Vec<(Ssid, u64)>>,
    pub banknote_values: BTreeMap<String, u64>,
    /// Final coin balance of every contract that was recorded.
    pub contract_coins: BTreeMap<Ssid, u64>,
    pub corrupt: BTreeSet<String>,
    pub final_time: u64,
    pub digest: Digest32,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.value.max_net <= 0 && self.violations.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Script(#[from] ScenarioError),
}

struct World {
    sys: System,
    wallets: BTreeMap<String, Wallet>,
    corrupt: BTreeSet<String>,
    stash: Wallet,
    value: ValueLedger,
    logged: Option<ValueLedger>,
    front_runner: bool,
    malicious_settles: u64,
    front_runs: u64,
    genesis: u64,
    raw_contracts: BTreeMap<Ssid, ContractParams<PhiParams>>,
}

pub fn run(scenario: &Scenario, cfg: &RunConfig) -> Result<RunReport, RunError> {
    let mut sys = System::new(cfg.network, cfg.scheduler, cfg.seed)?;
    let trace = sys.trace_mut();
    trace.header(format!("scenario={}", scenario.name));
    trace.header(format!("seed={}", cfg.seed));
    trace.header(format!("scheduler={}", cfg.scheduler));
    let echo: Vec<String> = cfg
        .network
        .echo()
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    trace.header(echo.join(" "));
    let mut world = World {
        sys,
        wallets: BTreeMap::new(),
        corrupt: BTreeSet::new(),
        stash: Wallet::new(Pid::new(STASH_ID, 0)),
        value: ValueLedger::new(),
        logged: None,
        front_runner: matches!(cfg.scheduler, Scheduler::Reorder { delta } if delta > 0),
        malicious_settles: 0,
        front_runs: 0,
        genesis: 0,
        raw_contracts: BTreeMap::new(),
    };
    for step in &scenario.steps {
        world.sys.log(
            "script",
            "step",
            &[format!("line={}", step.line), step.command.to_string()],
        );
        world.exec(step)?;
        world.account();
    }
    Ok(world.finish(&scenario.name))
}

impl World {
    fn wallet_pid(&self, id: &str, line: usize) -> Result<Pid, ScenarioError> {
        self.wallets
            .get(id)
            .map(|w| w.pid().clone())
            .ok_or_else(|| ScenarioError::new(line, format!("unknown party `{id}`")))
    }

    fn is_corrupt(&self, id: &str) -> bool {
        self.corrupt.contains(id)
    }

    fn exec(&mut self, step: &Step) -> Result<(), ScenarioError> {
        let line = step.line;
        match &step.command {
            Command::Ledger(raw) => self.exec_raw(raw, line)?,
            Command::Tick(k) => {
                for _ in 0..*k {
                    self.advance();
                }
            }
            Command::Corrupt(id) => {
                let pid = self.wallet_pid(id, line)?;
                if !self.corrupt.insert(id.clone()) {
                    return Err(ScenarioError::new(line, format!("`{id}` is already corrupted")));
                }
                let coins = self.sys.ledger.retrieve_party(&pid).unwrap_or(0);
                let notes = self.wallets[id].banknote_value();
                self.value.on_corrupt(coins, notes);
                self.sys.set_priority(&pid, true);
                self.sys.log(
                    "harness",
                    "corrupt",
                    &[id.clone(), format!("coins={coins}"), format!("notes={notes}")],
                );
            }
            Command::Uncorrupt(id) => {
                let pid = self.wallet_pid(id, line)?;
                if !self.corrupt.remove(id) {
                    return Err(ScenarioError::new(line, format!("`{id}` is not corrupted")));
                }
                let coins = self.sys.ledger.retrieve_party(&pid).unwrap_or(0);
                self.value.on_uncorrupt(coins);
                self.sys.set_priority(&pid, false);
                let wallet = self.wallets.get_mut(id).expect("checked");
                let mut moved = 0;
                while let Some(ssid) = wallet.notes().first().map(|n| n.ssid) {
                    let note = wallet.take_note(ssid).expect("present");
                    stash_note(&mut self.sys, &mut self.stash, &pid, note);
                    moved += 1;
                }
                wallet.reset_banknote_value();
                self.sys.log(
                    "harness",
                    "uncorrupt",
                    &[id.clone(), format!("coins={coins}"), format!("stashed={moved}")],
                );
            }
            Command::Mint { party, value } => {
                self.wallet_pid(party, line)?;
                let sys = &mut self.sys;
                if let Err(e) = self.wallets.get_mut(party).expect("checked").mint_banknote(sys, *value) {
                    self.sys.log(party, "error", &[e.to_string()]);
                }
            }
            Command::Pay { payer, payee, ssid } => {
                self.wallet_pid(payer, line)?;
                self.wallet_pid(payee, line)?;
                if payer == payee {
                    return Err(ScenarioError::new(line, "payer and payee coincide"));
                }
                self.pull_from_stash(payer, *ssid);
                let payer_corrupt = self.is_corrupt(payer);
                let payee_corrupt = self.is_corrupt(payee);
                let policy = if payee_corrupt {
                    PayeePolicy::Keep
                } else {
                    PayeePolicy::Verify
                };
                let mut a = self.wallets.remove(payer).expect("checked");
                let mut b = self.wallets.remove(payee).expect("checked");
                let outcome = pay(&mut self.sys, &mut a, &mut b, *ssid, policy);
                self.wallets.insert(payer.clone(), a);
                self.wallets.insert(payee.clone(), b);
                match outcome {
                    PayOutcome::Accepted { value } | PayOutcome::Rejected { value, .. }
                        if !payer_corrupt && payee_corrupt =>
                    {
                        self.value.on_received(value);
                        self.sys
                            .log("harness", "value-in", &[format!("d={value}"), format!("from={payer}")]);
                    }
                    PayOutcome::Accepted { value } if payer_corrupt && !payee_corrupt => {
                        self.value.on_spent(value);
                        self.sys
                            .log("harness", "value-out", &[format!("d={value}"), format!("to={payee}")]);
                    }
                    _ => {}
                }
            }
            Command::Redeem { party, ssid } => {
                self.wallet_pid(party, line)?;
                self.pull_from_stash(party, *ssid);
                let sys = &mut self.sys;
                let r = self.wallets.get_mut(party).expect("checked").redeem(sys, *ssid);
                self.after_post(party, r);
            }
            Command::Lose { party, ssid } => {
                self.wallet_pid(party, line)?;
                let sys = &mut self.sys;
                if let Err(e) = self.wallets.get_mut(party).expect("checked").lose_note(sys, *ssid) {
                    self.sys.log(party, "error", &[e.to_string()]);
                }
            }
            Command::Claim { party, ssid } => {
                self.wallet_pid(party, line)?;
                let sys = &mut self.sys;
                let r = self
                    .wallets
                    .get_mut(party)
                    .expect("checked")
                    .file_lost_claim(sys, *ssid);
                self.after_post(party, r);
            }
            Command::Settle { party, ssid } => {
                self.wallet_pid(party, line)?;
                let sys = &mut self.sys;
                let r = self
                    .wallets
                    .get_mut(party)
                    .expect("checked")
                    .settle_unchallenged(sys, *ssid);
                self.after_post(party, r);
            }
            Command::Scan { party } => {
                self.wallet_pid(party, line)?;
                let sys = &mut self.sys;
                let results = self.wallets.get_mut(party).expect("checked").watchdog_scan(sys);
                for r in results {
                    self.after_post(party, r);
                }
            }
            Command::Clone { party, ssid } => {
                let pid = self.wallet_pid(party, line)?;
                self.pull_from_stash(party, *ssid);
                let wallet = self.wallets.get_mut(party).expect("checked");
                let Some(note) = wallet.take_note(*ssid) else {
                    self.sys
                        .log(party, "clone-failed", &[format!("ssid={ssid}"), "no-note".into()]);
                    return Ok(());
                };
                let copy = note.key.clone_attempt(&mut self.sys.env);
                let (serial, value) = (note.serial.clone(), note.value);
                wallet.adopt(note);
                match copy {
                    Some(key) => {
                        wallet.adopt(Banknote {
                            key,
                            serial,
                            ssid: *ssid,
                            value,
                        });
                        self.sys.log(pid.id(), "clone", &[format!("ssid={ssid}"), "ok".into()]);
                    }
                    None => self
                        .sys
                        .log(pid.id(), "clone", &[format!("ssid={ssid}"), "refused".into()]),
                }
            }
        }
        Ok(())
    }

    fn exec_raw(&mut self, raw: &RawMessage, line: usize) -> Result<(), ScenarioError> {
        let (sender, msg) = match raw {
            RawMessage::AddParty(pid) => {
                if pid.id() == STASH_ID {
                    return Err(ScenarioError::new(line, format!("party id `{STASH_ID}` is reserved")));
                }
                if !self.wallets.contains_key(pid.id()) {
                    self.wallets.insert(pid.id().to_owned(), Wallet::new(pid.clone()));
                    self.genesis += pid.initial_coins();
                }
                let sender = self.wallet_pid(pid.id(), line)?;
                (sender, LedgerMessage::AddParty)
            }
            RawMessage::RetrieveParty { sender, pid } => (
                self.wallet_pid(sender, line)?,
                LedgerMessage::RetrieveParty {
                    pid: self.wallet_pid(pid, line)?,
                },
            ),
            RawMessage::AddTransaction { payer, payee, amount } => (
                self.wallet_pid(payer, line)?,
                LedgerMessage::AddTransaction {
                    payee: self.wallet_pid(payee, line)?,
                    amount: *amount,
                },
            ),
            RawMessage::RetrieveTransaction { sender, tr_id } => (
                self.wallet_pid(sender, line)?,
                LedgerMessage::RetrieveTransaction { tr_id: *tr_id },
            ),
            RawMessage::AddSmartContract {
                creator,
                deposit,
                serial,
            } => {
                let pid = self.wallet_pid(creator, line)?;
                let params =
                    ContractParams::single(&pid, *deposit, self.sys.phi(), BanknoteState::fresh(serial.clone()));
                (pid, LedgerMessage::AddSmartContract { params })
            }
            RawMessage::InitializeWithCoins { pid, ssid } => {
                let params =
                    self.raw_contracts.get(ssid).cloned().ok_or_else(|| {
                        ScenarioError::new(line, format!("no contract {ssid} recorded by this script"))
                    })?;
                (
                    self.wallet_pid(pid, line)?,
                    LedgerMessage::InitializeWithCoins { ssid: *ssid, params },
                )
            }
            RawMessage::Trigger {
                pid,
                ssid,
                deposit,
                witness,
            } => (
                self.wallet_pid(pid, line)?,
                LedgerMessage::Trigger {
                    ssid: *ssid,
                    witness: witness.clone(),
                    deposit: *deposit,
                },
            ),
            RawMessage::RetrieveContract { sender, ssid } => (
                self.wallet_pid(sender, line)?,
                LedgerMessage::RetrieveContract { ssid: *ssid },
            ),
        };
        let name = msg.name();
        let recorded = match &msg {
            LedgerMessage::AddSmartContract { params } => Some(params.clone()),
            _ => None,
        };
        match self.sys.submit(&sender, msg) {
            Receipt::Done(resp) => {
                if let (Some(params), LedgerResponse::AddSmartContract(Some(ssid))) = (recorded, &resp) {
                    self.raw_contracts.insert(*ssid, params);
                }
                let summary = summarize(&resp);
                self.sys.log(sender.id(), "ledger", &[name.into(), summary]);
            }
            Receipt::Queued(id) => {
                self.sys
                    .log(sender.id(), "ledger", &[name.into(), format!("queued={id}")]);
                if !self.is_corrupt(sender.id()) {
                    self.front_run(id);
                }
            }
        }
        Ok(())
    }

    /// Moves a stashed banknote to a corrupted party that does not hold one for `ssid`.
    fn pull_from_stash(&mut self, id: &str, ssid: Ssid) {
        if !self.is_corrupt(id) {
            return;
        }
        let wallet = self.wallets.get_mut(id).expect("caller checked");
        if wallet.holds(ssid) {
            return;
        }
        if let Some(note) = self.stash.take_note(ssid) {
            let Banknote {
                key,
                serial,
                ssid,
                value,
            } = note;
            match key.transfer(&mut self.sys.env, self.stash.pid(), wallet.pid()) {
                Ok(key) => wallet.adopt(Banknote {
                    key,
                    serial,
                    ssid,
                    value,
                }),
                Err(key) => self.stash.adopt(Banknote {
                    key,
                    serial,
                    ssid,
                    value,
                }),
            }
        }
    }

    fn after_post<E: std::fmt::Display>(&mut self, actor: &str, posted: Result<Posted, E>) {
        match posted {
            Ok(Posted::Queued(id)) if !self.is_corrupt(actor) => self.front_run(id),
            Ok(Posted::Done(r)) => self.after_result(actor, r),
            Ok(Posted::Queued(_)) => {}
            Err(e) => self.sys.log(actor, "error", &[e.to_string()]),
        }
    }

    fn after_result(&mut self, actor: &str, r: OpResult) {
        if r.op == OpKind::Settle && r.accepted && self.is_corrupt(actor) {
            let victim = self
                .wallets
                .iter()
                .any(|(id, w)| !self.corrupt.contains(id) && w.holds(r.ssid));
            if victim {
                self.malicious_settles += 1;
                self.sys.log(
                    "harness",
                    "malicious-settle",
                    &[actor.into(), format!("ssid={}", r.ssid)],
                );
            }
        }
    }

    /// The reordering adversary reacts to an honest message sitting in the mempool.
    fn front_run(&mut self, queued: u64) {
        if !self.front_runner {
            return;
        }
        let Some(adv_id) = self.corrupt.iter().next().cloned() else {
            return;
        };
        let Some(q) = self.sys.mempool().iter().find(|q| q.id == queued).cloned() else {
            return;
        };
        let LedgerMessage::Trigger { ssid, witness, deposit } = q.msg else {
            return;
        };
        let mut adv = self.wallets.remove(&adv_id).expect("corrupt parties have wallets");
        let adv_pid = adv.pid().clone();
        let name = witness.name();
        let accepted = match witness {
            Witness::ChallengeClaim { cert, .. } => {
                let key = NoteKey::generate(&mut self.sys, &adv_pid);
                let new_serial = key.serial();
                let w = Witness::ChallengeClaim { cert, new_serial };
                take_over(&mut self.sys, &mut adv, ssid, w, key)
            }
            Witness::ChallengeClaimSig { sig, .. } => {
                let key = NoteKey::generate(&mut self.sys, &adv_pid);
                let new_serial = key.serial();
                let w = Witness::ChallengeClaimSig { sig, new_serial };
                take_over(&mut self.sys, &mut adv, ssid, w, key)
            }
            w @ (Witness::RecoverCoins { .. } | Witness::RecoverCoinsSig { .. }) => {
                let resp = self.sys.submit_now(
                    &adv_pid,
                    LedgerMessage::Trigger {
                        ssid,
                        witness: w,
                        deposit,
                    },
                );
                resp.accepted()
            }
            Witness::BanknoteLost | Witness::CommitLost { .. } => {
                matches!(
                    adv.file_lost_claim(&mut self.sys, ssid),
                    Ok(Posted::Done(OpResult { accepted: true, .. }))
                )
            }
            Witness::ClaimUnchallenged { .. } | Witness::RevealLost { .. } => {
                self.wallets.insert(adv_id, adv);
                return;
            }
        };
        self.front_runs += 1;
        self.sys.log(
            &adv_id,
            "frontrun",
            &[
                name.into(),
                format!("ssid={ssid}"),
                format!("victim={}", q.sender.id()),
                if accepted { "ok".into() } else { "rejected".into() },
            ],
        );
        self.wallets.insert(adv_id, adv);
    }

    fn advance(&mut self) {
        for d in self.sys.tick() {
            let id = d.sender.id().to_owned();
            let sys = &mut self.sys;
            let result = match self.wallets.get_mut(&id) {
                Some(w) => w.on_delivery(sys, &d),
                None => None,
            };
            if let Some(r) = result {
                self.after_result(&id, r);
            }
        }
        let ids: Vec<String> = self.wallets.keys().cloned().collect();
        for id in &ids {
            let sys = &mut self.sys;
            let posted = self.wallets.get_mut(id).expect("listed").advance_claims(sys);
            for p in posted {
                self.after_post::<ProtocolError>(id, Ok(p));
            }
        }
        let now = self.sys.time();
        if now.is_multiple_of(self.sys.config().watchdog_interval()) {
            for id in &ids {
                if self.is_corrupt(id) {
                    continue;
                }
                let sys = &mut self.sys;
                let results = self.wallets.get_mut(id).expect("listed").watchdog_scan(sys);
                for r in results {
                    self.after_post(id, r);
                }
            }
        }
        self.account();
    }

    /// Applies coin-payment events to the value ledger and records corrupted holdings.
    fn account(&mut self) {
        for e in self.sys.drain_events() {
            if let LedgerEvent::Executed {
                payer, payee, amount, ..
            } = e
            {
                match (self.is_corrupt(payer.id()), self.is_corrupt(payee.id())) {
                    (false, true) => {
                        self.value.on_received(amount);
                        self.sys.log(
                            "harness",
                            "value-in",
                            &[format!("d={amount}"), format!("from={}", payer.id())],
                        );
                    }
                    (true, false) => {
                        self.value.on_spent(amount);
                        self.sys.log(
                            "harness",
                            "value-out",
                            &[format!("d={amount}"), format!("to={}", payee.id())],
                        );
                    }
                    _ => {}
                }
            }
        }
        let live: u64 = self
            .corrupt
            .iter()
            .filter_map(|id| self.wallets.get(id))
            .filter_map(|w| self.sys.ledger.retrieve_party(w.pid()))
            .sum();
        self.value.observe(live);
        if self.logged != Some(self.value) {
            let v = self.value;
            self.sys.log(
                "harness",
                "value",
                &[
                    format!("received={}", v.received),
                    format!("spent={}", v.spent),
                    format!("live={}", v.live),
                    format!("net={}", v.net()),
                    format!("max={}", v.max_net),
                ],
            );
            self.logged = Some(v);
        }
    }

    fn finish(mut self, name: &str) -> RunReport {
        let mut violations: Vec<String> = self.sys.env.violations().iter().map(|v| v.to_string()).collect();
        let total = self.sys.ledger.total_coins();
        if total != self.genesis {
            violations.push(format!("coin conservation: total={total} genesis={}", self.genesis));
        }
        for v in &violations {
            self.sys.log("harness", "violation", std::slice::from_ref(v));
        }
        let mut balances = BTreeMap::new();
        let mut holdings = BTreeMap::new();
        let mut banknote_values = BTreeMap::new();
        for (id, w) in &self.wallets {
            balances.insert(id.clone(), self.sys.ledger.retrieve_party(w.pid()).unwrap_or(0));
            holdings.insert(id.clone(), w.notes().iter().map(|n| (n.ssid, n.value)).collect());
            banknote_values.insert(id.clone(), w.banknote_value());
        }
        let contract_coins = (1..=self.sys.ledger.contract_count() as Ssid)
            .filter_map(|ssid| self.sys.ledger.retrieve_contract(ssid).map(|v| (ssid, v.coins)))
            .collect();
        holdings.insert(
            STASH_ID.to_owned(),
            self.stash.notes().iter().map(|n| (n.ssid, n.value)).collect(),
        );
        let digest = sha256(&[&self.sys.digest(), self.sys.trace().render().as_bytes()]);
        RunReport {
            name: name.to_owned(),
            trace: self.sys.trace().clone(),
            value: self.value,
            stats: self.sys.stats(),
            violations,
            malicious_settles: self.malicious_settles,
            front_runs: self.front_runs,
            balances,
            holdings,
            banknote_values,
            contract_coins,
            corrupt: self.corrupt,
            final_time: self.sys.time(),
            digest,
        }
    }
}

fn stash_note(sys: &mut System, stash: &mut Wallet, from: &Pid, note: Banknote) {
    let Banknote {
        key,
        serial,
        ssid,
        value,
    } = note;
    match key.transfer(&mut sys.env, from, stash.pid()) {
        Ok(key) => stash.adopt(Banknote {
            key,
            serial,
            ssid,
            value,
        }),
        Err(key) => key.destroy(&mut sys.env),
    }
}

/// Submits a copied challenge bound to the adversary's own key and keeps the banknote on success.
fn take_over(sys: &mut System, adv: &mut Wallet, ssid: Ssid, witness: Witness, key: NoteKey) -> bool {
    let resp = sys.submit_now(
        adv.pid(),
        LedgerMessage::Trigger {
            ssid,
            witness,
            deposit: 0,
        },
    );
    if resp.accepted() {
        let value = sys.ledger.retrieve_contract(ssid).map(|v| v.coins).unwrap_or(0);
        let serial = key.serial();
        adv.adopt(Banknote {
            key,
            serial,
            ssid,
            value,
        });
        true
    } else {
        key.destroy(&mut sys.env);
        false
    }
}

fn summarize(resp: &Response) -> String {
    match resp {
        LedgerResponse::AddParty(o) => format!("{o:?}").to_lowercase(),
        LedgerResponse::RetrieveParty(pid, coins) => match coins {
            Some(c) => format!("{pid}={c}"),
            None => format!("{pid}=none"),
        },
        LedgerResponse::AddTransaction(r) => r.map_or("rejected".into(), |id| format!("trId={id}")),
        LedgerResponse::RetrieveTransaction(r) => r.as_ref().map_or("none".into(), |t| format!("{t:?}")),
        LedgerResponse::AddSmartContract(r) => r.map_or("rejected".into(), |s| format!("ssid={s}")),
        LedgerResponse::InitializeWithCoins(r) => r.map_or("rejected".into(), |o| format!("{o:?}").to_lowercase()),
        LedgerResponse::Trigger(r) => r.map_or("rejected".into(), |x| format!("reward={x}")),
        LedgerResponse::RetrieveContract(r) => r.as_ref().map_or("none".into(), |v| {
            format!("coins={} terminated={}", v.coins, v.terminated)
        }),
        LedgerResponse::Tick(t) => format!("time={t}"),
    }
}
