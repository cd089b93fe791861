//! Party-side protocols: mint, pay, lost-banknote claims, watchdog scans and redemption.

use std::fmt;

use thiserror::Error;

use crate::banknote::{
    challenge_message, commitment, is_banknote_contract, recover_message, BanknoteState, ClaimState, Variant, Witness,
    NONCE_LEN,
};
use crate::ledger::{ContractParams, InitOutcome, LedgerMessage, LedgerResponse, Ssid};
use crate::lightning::{BoltHandle, Certificate, LightningError, QuantumEnv, SerialNumber};
use crate::pid::Pid;
use crate::qlds::{gen_sig, qlds_gen, qlds_ver, QldsError, QldsKey, QldsParams, QldsSignature};
use crate::system::{Delivery, KeyMode, Receipt, Response, System};

/// The quantum part of a banknote.
#[derive(Debug)]
pub enum NoteKey {
    Single { bolt: BoltHandle, serial: SerialNumber },
    Qlds(QldsKey),
}

impl NoteKey {
    pub fn generate(sys: &mut System, owner: &Pid) -> NoteKey {
        let config = *sys.config();
        match config.key_mode {
            KeyMode::Minimal => {
                let (bolt, serial) = sys.env.gen_bolt(owner);
                NoteKey::Single { bolt, serial }
            }
            KeyMode::Qlds => {
                let params = QldsParams::new(config.n).expect("validated config");
                NoteKey::Qlds(qlds_gen(&mut sys.env, params, owner))
            }
        }
    }

    pub fn serial(&self) -> Vec<u8> {
        match self {
            NoteKey::Single { serial, .. } => serial.as_bytes().to_vec(),
            NoteKey::Qlds(k) => k.serial().to_vec(),
        }
    }

    /// Local, non-destructive verification against `serial`.
    pub fn verify(&self, env: &QuantumEnv, serial: &[u8]) -> bool {
        match self {
            NoteKey::Single { bolt, .. } => SerialNumber::from_slice(serial)
                .and_then(|s| env.verify_bolt(bolt, &s))
                .unwrap_or(false),
            NoteKey::Qlds(k) => qlds_ver(env, k, serial).unwrap_or(false),
        }
    }

    pub fn transfer(self, env: &mut QuantumEnv, from: &Pid, to: &Pid) -> Result<NoteKey, NoteKey> {
        match self {
            NoteKey::Single { bolt, serial } => match env.transfer_bolt(bolt, from, to) {
                Ok(bolt) => Ok(NoteKey::Single { bolt, serial }),
                Err(e) => Err(NoteKey::Single { bolt: e.handle, serial }),
            },
            NoteKey::Qlds(k) => k
                .transfer(env, from, to)
                .map(NoteKey::Qlds)
                .map_err(|(k, _)| NoteKey::Qlds(k)),
        }
    }

    /// Measures every component and concatenates the certificates.
    pub fn certificate(&self, env: &mut QuantumEnv) -> Result<Certificate, LightningError> {
        match self {
            NoteKey::Single { bolt, serial } => env.gen_certificate(bolt, serial),
            NoteKey::Qlds(k) => {
                let mut bytes = Vec::new();
                for (bolt, seg) in k.bolts().iter().zip(k.serial().chunks(crate::lightning::SERIAL_LEN)) {
                    let s = SerialNumber::from_slice(seg)?;
                    bytes.extend_from_slice(env.gen_certificate(bolt, &s)?.as_bytes());
                }
                Ok(Certificate::from_bytes(bytes))
            }
        }
    }

    pub fn sign(&self, env: &mut QuantumEnv, msg: &[u8]) -> Result<QldsSignature, QldsError> {
        match self {
            NoteKey::Single { .. } => Err(QldsError::Parse("single-bolt notes cannot sign".into())),
            NoteKey::Qlds(k) => gen_sig(env, k, k.serial(), msg),
        }
    }

    /// Negative control only: succeeds when the environment is unsound.
    pub fn clone_attempt(&self, env: &mut QuantumEnv) -> Option<NoteKey> {
        match self {
            NoteKey::Single { bolt, serial } => env
                .clone_attempt(bolt)
                .map(|bolt| NoteKey::Single { bolt, serial: *serial }),
            NoteKey::Qlds(k) => {
                let bolts = k
                    .bolts()
                    .iter()
                    .map(|b| env.clone_attempt(b))
                    .collect::<Option<Vec<_>>>()?;
                Some(NoteKey::Qlds(QldsKey::from_parts(bolts, k.serial().to_vec())))
            }
        }
    }

    pub fn destroy(self, env: &mut QuantumEnv) {
        match self {
            NoteKey::Single { bolt, .. } => {
                let _ = env.decohere(bolt);
            }
            NoteKey::Qlds(k) => {
                for b in k.into_parts().0 {
                    let _ = env.decohere(b);
                }
            }
        }
    }
}

#[derive(Debug)]
pub struct Banknote {
    pub key: NoteKey,
    pub serial: Vec<u8>,
    pub ssid: Ssid,
    pub value: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("balance {balance} does not exceed {needed}")]
    InsufficientBalance { balance: u64, needed: u64 },
    #[error("party is not registered")]
    Unregistered,
    #[error("no banknote for contract {0}")]
    NoSuchNote(Ssid),
    #[error("no claim in progress for contract {0}")]
    NoSuchClaim(Ssid),
    #[error("ledger rejected {0}")]
    Rejected(&'static str),
    #[error("could not produce proof: {0}")]
    Proof(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    UnknownContract,
    NotBanknoteContract,
    Terminated,
    SerialMismatch,
    ActiveClaim,
    BoltInvalid,
    TransferFailed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::UnknownContract => "unknown-contract",
            RejectReason::NotBanknoteContract => "not-banknote-contract",
            RejectReason::Terminated => "terminated",
            RejectReason::SerialMismatch => "serial-mismatch",
            RejectReason::ActiveClaim => "active-claim",
            RejectReason::BoltInvalid => "bolt-invalid",
            RejectReason::TransferFailed => "transfer-failed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayOutcome {
    Accepted { value: u64 },
    Rejected { value: u64, reason: RejectReason },
    NoNote,
}

/// How the receiving side treats an incoming banknote.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayeePolicy {
    /// Run the payee checks and send the banknote back on failure.
    Verify,
    /// Keep whatever arrives (a corrupted payee).
    Keep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpKind {
    Claim,
    Commit,
    Reveal,
    Settle,
    Challenge,
    Redeem,
}

impl OpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Claim => "claim",
            OpKind::Commit => "commit",
            OpKind::Reveal => "reveal",
            OpKind::Settle => "settle",
            OpKind::Challenge => "challenge",
            OpKind::Redeem => "redeem",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpResult {
    pub op: OpKind,
    pub ssid: Ssid,
    pub accepted: bool,
    pub reward: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Posted {
    Done(OpResult),
    Queued(u64),
}

#[derive(Debug)]
enum PendingOp {
    Claim { ssid: Ssid },
    Commit { ssid: Ssid, nonce: [u8; NONCE_LEN] },
    Reveal { ssid: Ssid },
    Settle { ssid: Ssid, key: NoteKey },
    Challenge { ssid: Ssid, key: NoteKey },
    Redeem { ssid: Ssid },
}

impl PendingOp {
    fn kind(&self) -> OpKind {
        match self {
            PendingOp::Claim { .. } => OpKind::Claim,
            PendingOp::Commit { .. } => OpKind::Commit,
            PendingOp::Reveal { .. } => OpKind::Reveal,
            PendingOp::Settle { .. } => OpKind::Settle,
            PendingOp::Challenge { .. } => OpKind::Challenge,
            PendingOp::Redeem { .. } => OpKind::Redeem,
        }
    }

    fn ssid(&self) -> Ssid {
        match self {
            PendingOp::Claim { ssid }
            | PendingOp::Commit { ssid, .. }
            | PendingOp::Reveal { ssid }
            | PendingOp::Settle { ssid, .. }
            | PendingOp::Challenge { ssid, .. }
            | PendingOp::Redeem { ssid } => *ssid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimStage {
    InFlight,
    Filed { at: u64 },
    Committed { nonce: [u8; NONCE_LEN], at: u64 },
    Revealed { at: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClaimProgress {
    pub ssid: Ssid,
    pub stage: ClaimStage,
}

#[derive(Debug)]
pub struct Wallet {
    pid: Pid,
    notes: Vec<Banknote>,
    banknote_value: u64,
    claims: Vec<ClaimProgress>,
    pending: Vec<(u64, PendingOp)>,
}

impl Wallet {
    pub fn new(pid: Pid) -> Self {
        Wallet {
            pid,
            notes: Vec::new(),
            banknote_value: 0,
            claims: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn pid(&self) -> &Pid {
        &self.pid
    }

    pub fn notes(&self) -> &[Banknote] {
        &self.notes
    }

    pub fn banknote_value(&self) -> u64 {
        self.banknote_value
    }

    pub fn reset_banknote_value(&mut self) {
        self.banknote_value = 0;
    }

    pub fn claims(&self) -> &[ClaimProgress] {
        &self.claims
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    pub fn holds(&self, ssid: Ssid) -> bool {
        self.notes.iter().any(|n| n.ssid == ssid)
    }

    /// Adds a banknote whose value has already been established.
    pub fn adopt(&mut self, note: Banknote) {
        self.banknote_value += note.value;
        self.notes.push(note);
    }

    /// Removes the first banknote backed by `ssid`.
    pub fn take_note(&mut self, ssid: Ssid) -> Option<Banknote> {
        let i = self.notes.iter().position(|n| n.ssid == ssid)?;
        let note = self.notes.remove(i);
        self.banknote_value = self.banknote_value.saturating_sub(note.value);
        Some(note)
    }

    fn log(&self, sys: &mut System, action: &str, fields: &[String]) {
        sys.log(self.pid.id(), action, fields);
    }

    fn balance(&self, sys: &mut System) -> Result<u64, ProtocolError> {
        sys.read_party(&self.pid).ok_or(ProtocolError::Unregistered)
    }

    /// Creates and funds a banknote-contract for a fresh key.
    pub fn mint_banknote(&mut self, sys: &mut System, d: u64) -> Result<Ssid, ProtocolError> {
        let balance = self.balance(sys)?;
        if balance <= d {
            self.log(sys, "mint-failed", &[format!("value={d}"), "insufficient".into()]);
            return Err(ProtocolError::InsufficientBalance { balance, needed: d });
        }
        let key = NoteKey::generate(sys, &self.pid);
        let serial = key.serial();
        let params = ContractParams::single(&self.pid, d, sys.phi(), BanknoteState::fresh(serial.clone()));
        let ssid = match sys.submit(&self.pid, LedgerMessage::AddSmartContract { params: params.clone() }) {
            Receipt::Done(LedgerResponse::AddSmartContract(Some(ssid))) => ssid,
            _ => {
                key.destroy(&mut sys.env);
                self.log(sys, "mint-failed", &[format!("value={d}"), "contract".into()]);
                return Err(ProtocolError::Rejected("AddSmartContract"));
            }
        };
        match sys.submit(&self.pid, LedgerMessage::InitializeWithCoins { ssid, params }) {
            Receipt::Done(LedgerResponse::InitializeWithCoins(Some(InitOutcome::Initialized))) => {}
            _ => {
                key.destroy(&mut sys.env);
                self.log(sys, "mint-failed", &[format!("value={d}"), "initialize".into()]);
                return Err(ProtocolError::Rejected("InitializeWithCoins"));
            }
        }
        self.log(
            sys,
            "mint",
            &[
                format!("ssid={ssid}"),
                format!("value={d}"),
                format!("serial={}", short(&serial)),
            ],
        );
        self.adopt(Banknote {
            key,
            serial,
            ssid,
            value: d,
        });
        Ok(ssid)
    }

    /// Payee-side checks. Returns the contract value on acceptance.
    pub fn check_incoming(&self, sys: &mut System, note: &Banknote) -> Result<u64, RejectReason> {
        let view = sys.read_contract(note.ssid).ok_or(RejectReason::UnknownContract)?;
        if !is_banknote_contract(&view.params, &sys.phi()) {
            return Err(RejectReason::NotBanknoteContract);
        }
        if view.terminated {
            return Err(RejectReason::Terminated);
        }
        let state = view.state.ok_or(RejectReason::Terminated)?;
        if state.serial.as_deref() != Some(note.serial.as_slice()) {
            return Err(RejectReason::SerialMismatch);
        }
        if state.claim != ClaimState::NoActiveClaim {
            return Err(RejectReason::ActiveClaim);
        }
        if !note.key.verify(&sys.env, &note.serial) {
            return Err(RejectReason::BoltInvalid);
        }
        Ok(view.coins)
    }

    /// Destroys a held banknote, modelling accidental loss.
    pub fn lose_note(&mut self, sys: &mut System, ssid: Ssid) -> Result<(), ProtocolError> {
        let note = self.take_note(ssid).ok_or(ProtocolError::NoSuchNote(ssid))?;
        note.key.destroy(&mut sys.env);
        self.log(sys, "lose", &[format!("ssid={ssid}")]);
        Ok(())
    }

    fn post(&mut self, sys: &mut System, witness: Witness, deposit: u64, op: PendingOp) -> Posted {
        let ssid = op.ssid();
        self.log(
            sys,
            "post",
            &[
                witness.name().into(),
                format!("ssid={ssid}"),
                format!("deposit={deposit}"),
            ],
        );
        match sys.submit(&self.pid, LedgerMessage::Trigger { ssid, witness, deposit }) {
            Receipt::Done(resp) => Posted::Done(self.finish(sys, op, &resp)),
            Receipt::Queued(id) => {
                self.pending.push((id, op));
                Posted::Queued(id)
            }
        }
    }

    /// Completes a queued operation once its message has been processed.
    pub fn on_delivery(&mut self, sys: &mut System, d: &Delivery) -> Option<OpResult> {
        let i = self.pending.iter().position(|(id, _)| *id == d.id)?;
        let (_, op) = self.pending.remove(i);
        Some(self.finish(sys, op, &d.response))
    }

    fn finish(&mut self, sys: &mut System, op: PendingOp, resp: &Response) -> OpResult {
        let kind = op.kind();
        let ssid = op.ssid();
        let reward = resp.reward();
        let accepted = reward.is_some();
        let now = sys.time();
        match op {
            PendingOp::Claim { .. } => self.set_stage(ssid, accepted.then_some(ClaimStage::Filed { at: now })),
            PendingOp::Commit { nonce, .. } => {
                self.set_stage(ssid, accepted.then_some(ClaimStage::Committed { nonce, at: now }))
            }
            PendingOp::Reveal { .. } => self.set_stage(ssid, accepted.then_some(ClaimStage::Revealed { at: now })),
            PendingOp::Settle { key, .. } | PendingOp::Challenge { key, .. } => {
                if kind == OpKind::Settle {
                    self.set_stage(ssid, None);
                }
                if accepted {
                    let value = sys.read_contract(ssid).map(|v| v.coins).unwrap_or(0);
                    let serial = key.serial();
                    self.adopt(Banknote {
                        key,
                        serial,
                        ssid,
                        value,
                    });
                } else {
                    key.destroy(&mut sys.env);
                }
            }
            PendingOp::Redeem { .. } => {}
        }
        let result = OpResult {
            op: kind,
            ssid,
            accepted,
            reward: reward.unwrap_or(0),
        };
        self.log(
            sys,
            kind.as_str(),
            &[
                format!("ssid={ssid}"),
                if accepted { "ok".into() } else { "rejected".into() },
                format!("reward={}", result.reward),
            ],
        );
        result
    }

    fn set_stage(&mut self, ssid: Ssid, stage: Option<ClaimStage>) {
        let i = self.claims.iter().position(|c| c.ssid == ssid);
        match (i, stage) {
            (Some(i), Some(stage)) => self.claims[i].stage = stage,
            (Some(i), None) => {
                self.claims.remove(i);
            }
            (None, Some(stage)) => self.claims.push(ClaimProgress { ssid, stage }),
            (None, None) => {}
        }
    }

    /// Files a lost-banknote claim (or, in the commit-reveal variant, its commitment).
    pub fn file_lost_claim(&mut self, sys: &mut System, ssid: Ssid) -> Result<Posted, ProtocolError> {
        let d0 = sys.config().d0;
        let balance = self.balance(sys)?;
        if balance <= d0 {
            return Err(ProtocolError::InsufficientBalance { balance, needed: d0 });
        }
        self.set_stage(ssid, Some(ClaimStage::InFlight));
        if sys.config().variant == Variant::CommitReveal {
            let nonce: [u8; NONCE_LEN] = sys.env.random_bytes(NONCE_LEN).try_into().expect("length");
            let h = commitment(&self.pid, ssid, &nonce);
            Ok(self.post(
                sys,
                Witness::CommitLost { commitment: h },
                d0,
                PendingOp::Commit { ssid, nonce },
            ))
        } else {
            Ok(self.post(sys, Witness::BanknoteLost, d0, PendingOp::Claim { ssid }))
        }
    }

    /// Rebinds a matured claim to a freshly generated key.
    pub fn settle_unchallenged(&mut self, sys: &mut System, ssid: Ssid) -> Result<Posted, ProtocolError> {
        let i = self
            .claims
            .iter()
            .position(|c| c.ssid == ssid && matches!(c.stage, ClaimStage::Filed { .. } | ClaimStage::Revealed { .. }))
            .ok_or(ProtocolError::NoSuchClaim(ssid))?;
        self.claims[i].stage = ClaimStage::InFlight;
        let key = NoteKey::generate(sys, &self.pid);
        let new_serial = key.serial();
        Ok(self.post(
            sys,
            Witness::ClaimUnchallenged { new_serial },
            0,
            PendingOp::Settle { ssid, key },
        ))
    }

    fn reveal(&mut self, sys: &mut System, ssid: Ssid, nonce: [u8; NONCE_LEN]) -> Posted {
        self.set_stage(ssid, Some(ClaimStage::InFlight));
        self.post(sys, Witness::RevealLost { nonce }, 0, PendingOp::Reveal { ssid })
    }

    /// Moves every claim pipeline forward as soon as its next step is allowed.
    pub fn advance_claims(&mut self, sys: &mut System) -> Vec<Posted> {
        let config = *sys.config();
        let now = sys.time();
        let mut out = Vec::new();
        for claim in self.claims.clone() {
            match claim.stage {
                ClaimStage::Filed { at } if now - at > config.t_tr => {
                    out.extend(self.settle_unchallenged(sys, claim.ssid).ok());
                }
                ClaimStage::Committed { nonce, at } => {
                    if now - at <= config.t0 {
                        out.push(self.reveal(sys, claim.ssid, nonce));
                    } else {
                        self.set_stage(claim.ssid, None);
                        self.log(sys, "claim-abandoned", &[format!("ssid={}", claim.ssid)]);
                    }
                }
                ClaimStage::Revealed { at } if now - at > config.t1 => {
                    out.extend(self.settle_unchallenged(sys, claim.ssid).ok());
                }
                _ => {}
            }
        }
        out
    }

    fn challenge_witness(
        &self,
        sys: &mut System,
        note: &Banknote,
        new_serial: Vec<u8>,
    ) -> Result<Witness, ProtocolError> {
        if sys.config().variant.uses_signatures() {
            let sig = note
                .key
                .sign(&mut sys.env, &challenge_message(&self.pid))
                .map_err(|e| ProtocolError::Proof(e.to_string()))?;
            Ok(Witness::ChallengeClaimSig { sig, new_serial })
        } else {
            let cert = note
                .key
                .certificate(&mut sys.env)
                .map_err(|e| ProtocolError::Proof(e.to_string()))?;
            Ok(Witness::ChallengeClaim { cert, new_serial })
        }
    }

    /// Challenges every foreign claim against a held banknote.
    pub fn watchdog_scan(&mut self, sys: &mut System) -> Vec<Result<Posted, ProtocolError>> {
        let targets: Vec<Ssid> = self
            .notes
            .iter()
            .map(|n| n.ssid)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut out = Vec::new();
        for ssid in targets {
            let Some(view) = sys.read_contract(ssid) else { continue };
            let Some(state) = view.state else { continue };
            let foreign = match &state.claim {
                ClaimState::ClaimBy { pid, .. } => pid != &self.pid,
                ClaimState::Commits(entries) => entries.iter().any(|e| e.pid != self.pid),
                _ => false,
            };
            if !foreign {
                continue;
            }
            let Some(i) = self
                .notes
                .iter()
                .position(|n| n.ssid == ssid && Some(&n.serial) == state.serial.as_ref())
            else {
                continue;
            };
            let note = self.notes.remove(i);
            self.banknote_value = self.banknote_value.saturating_sub(note.value);
            self.log(sys, "scan-detect", &[format!("ssid={ssid}")]);
            let key = NoteKey::generate(sys, &self.pid);
            let result = self.challenge_witness(sys, &note, key.serial());
            note.key.destroy(&mut sys.env);
            out.push(match result {
                Ok(w) => Ok(self.post(sys, w, 0, PendingOp::Challenge { ssid, key })),
                Err(e) => {
                    key.destroy(&mut sys.env);
                    Err(e)
                }
            });
        }
        out
    }

    /// Trades a held banknote for the coins of its contract.
    pub fn redeem(&mut self, sys: &mut System, ssid: Ssid) -> Result<Posted, ProtocolError> {
        let note = self.take_note(ssid).ok_or(ProtocolError::NoSuchNote(ssid))?;
        let witness = if sys.config().variant.uses_signatures() {
            note.key
                .sign(&mut sys.env, &recover_message(&self.pid))
                .map(|sig| Witness::RecoverCoinsSig { sig })
                .map_err(|e| ProtocolError::Proof(e.to_string()))
        } else {
            note.key
                .certificate(&mut sys.env)
                .map(|cert| Witness::RecoverCoins { cert })
                .map_err(|e| ProtocolError::Proof(e.to_string()))
        };
        note.key.destroy(&mut sys.env);
        Ok(self.post(sys, witness?, 0, PendingOp::Redeem { ssid }))
    }
}

/// Hands a banknote from `payer` to `payee`, who verifies it and either keeps it
/// or returns it.
pub fn pay(sys: &mut System, payer: &mut Wallet, payee: &mut Wallet, ssid: Ssid, policy: PayeePolicy) -> PayOutcome {
    let Some(note) = payer.take_note(ssid) else {
        payer.log(sys, "pay-failed", &[format!("ssid={ssid}"), "no-note".into()]);
        return PayOutcome::NoNote;
    };
    let value = note.value;
    let Banknote { key, serial, ssid, .. } = note;
    let key = match key.transfer(&mut sys.env, &payer.pid, &payee.pid) {
        Ok(k) => k,
        Err(key) => {
            payer.adopt(Banknote {
                key,
                serial,
                ssid,
                value,
            });
            return PayOutcome::Rejected {
                value,
                reason: RejectReason::TransferFailed,
            };
        }
    };
    let note = Banknote {
        key,
        serial,
        ssid,
        value,
    };
    let checked = match policy {
        PayeePolicy::Verify => payee.check_incoming(sys, &note),
        PayeePolicy::Keep => Ok(sys.ledger.retrieve_contract(ssid).map(|v| v.coins).unwrap_or(value)),
    };
    match checked {
        Ok(v) => {
            payer.log(
                sys,
                "pay",
                &[
                    format!("to={}", payee.pid.id()),
                    format!("ssid={ssid}"),
                    format!("value={v}"),
                ],
            );
            payee.log(
                sys,
                "accept",
                &[
                    format!("from={}", payer.pid.id()),
                    format!("ssid={ssid}"),
                    format!("value={v}"),
                ],
            );
            payee.adopt(Banknote { value: v, ..note });
            PayOutcome::Accepted { value: v }
        }
        Err(reason) => {
            payee.log(
                sys,
                "reject",
                &[
                    format!("from={}", payer.pid.id()),
                    format!("ssid={ssid}"),
                    reason.to_string(),
                ],
            );
            let Banknote { key, serial, ssid, .. } = note;
            match key.transfer(&mut sys.env, &payee.pid, &payer.pid) {
                Ok(key) => payer.adopt(Banknote {
                    key,
                    serial,
                    ssid,
                    value,
                }),
                Err(key) => payee.adopt(Banknote {
                    key,
                    serial,
                    ssid,
                    value: 0,
                }),
            }
            PayOutcome::Rejected { value, reason }
        }
    }
}

pub(crate) fn short(bytes: &[u8]) -> String {
    hex::encode(&bytes[..bytes.len().min(6)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{NetworkConfig, Scheduler};

    fn system(variant: Variant, key_mode: KeyMode) -> System {
        let mut c = NetworkConfig::with_variant(variant);
        c.key_mode = key_mode;
        System::new(c, Scheduler::Fifo, 7).unwrap()
    }

    fn party(sys: &mut System, s: &str) -> Wallet {
        let pid = Pid::parse(s).unwrap();
        sys.ledger.add_party(&pid);
        Wallet::new(pid)
    }

    fn contract_coins(sys: &System, ssid: Ssid) -> u64 {
        sys.ledger.retrieve_contract(ssid).unwrap().coins
    }

    #[test]
    fn mint_moves_deposit() {
        let mut sys = system(Variant::Base, KeyMode::Minimal);
        let mut alice = party(&mut sys, "alice:50");
        let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
        assert_eq!(sys.ledger.retrieve_party(alice.pid()), Some(10));
        assert_eq!(contract_coins(&sys, ssid), 40);
        let state = sys.ledger.retrieve_contract(ssid).unwrap().state.unwrap();
        assert_eq!(state, BanknoteState::fresh(alice.notes()[0].serial.clone()));
        assert_eq!(alice.banknote_value(), 40);
        assert!(matches!(
            alice.mint_banknote(&mut sys, 10),
            Err(ProtocolError::InsufficientBalance { .. })
        ));
    }

    #[test]
    fn payments_need_no_writes() {
        let mut sys = system(Variant::Base, KeyMode::Qlds);
        let mut alice = party(&mut sys, "alice:50");
        let mut bob = party(&mut sys, "bob:0");
        let mut carol = party(&mut sys, "carol:0");
        let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
        let before = sys.stats().state_changes;
        assert_eq!(
            pay(&mut sys, &mut alice, &mut bob, ssid, PayeePolicy::Verify),
            PayOutcome::Accepted { value: 40 }
        );
        assert_eq!(
            pay(&mut sys, &mut bob, &mut carol, ssid, PayeePolicy::Verify),
            PayOutcome::Accepted { value: 40 }
        );
        assert_eq!(sys.stats().state_changes, before);
        assert_eq!(
            (alice.banknote_value(), bob.banknote_value(), carol.banknote_value()),
            (0, 0, 40)
        );
        assert_eq!(
            pay(&mut sys, &mut alice, &mut bob, ssid, PayeePolicy::Verify),
            PayOutcome::NoNote
        );
        let r = carol.redeem(&mut sys, ssid).unwrap();
        assert!(matches!(
            r,
            Posted::Done(OpResult {
                accepted: true,
                reward: 40,
                ..
            })
        ));
        assert_eq!(sys.ledger.retrieve_party(carol.pid()), Some(40));
        assert!(sys.env.violations().is_empty());
    }

    #[test]
    fn payee_rejects_under_active_claim_and_returns_note() {
        let mut sys = system(Variant::Base, KeyMode::Minimal);
        let mut alice = party(&mut sys, "alice:50");
        let mut bob = party(&mut sys, "bob:0");
        let mut mallory = party(&mut sys, "mallory:50");
        let ssid = alice.mint_banknote(&mut sys, 30).unwrap();
        mallory.file_lost_claim(&mut sys, ssid).unwrap();
        assert_eq!(
            pay(&mut sys, &mut alice, &mut bob, ssid, PayeePolicy::Verify),
            PayOutcome::Rejected {
                value: 30,
                reason: RejectReason::ActiveClaim
            }
        );
        assert!(alice.holds(ssid));
        assert!(!bob.holds(ssid));
        assert_eq!(alice.banknote_value(), 30);
    }

    #[test]
    fn dead_bolt_rejected() {
        let mut sys = system(Variant::Base, KeyMode::Minimal);
        let mut alice = party(&mut sys, "alice:50");
        let mut bob = party(&mut sys, "bob:0");
        let ssid = alice.mint_banknote(&mut sys, 30).unwrap();
        alice.notes[0].key.certificate(&mut sys.env).unwrap();
        assert!(matches!(
            pay(&mut sys, &mut alice, &mut bob, ssid, PayeePolicy::Verify),
            PayOutcome::Rejected {
                reason: RejectReason::BoltInvalid,
                ..
            }
        ));
        assert!(alice.holds(ssid));
    }

    #[test]
    fn watchdog_defeats_malicious_claim() {
        for variant in [Variant::Base, Variant::SigGated] {
            let mut sys = system(variant, KeyMode::Qlds);
            let mut alice = party(&mut sys, "alice:100");
            let mut mallory = party(&mut sys, "mallory:50");
            let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
            assert!(alice.watchdog_scan(&mut sys).is_empty());
            mallory.file_lost_claim(&mut sys, ssid).unwrap();
            let actions = alice.watchdog_scan(&mut sys);
            assert_eq!(actions.len(), 1);
            assert!(matches!(
                actions[0],
                Ok(Posted::Done(OpResult {
                    accepted: true,
                    reward: 10,
                    ..
                }))
            ));
            assert_eq!(sys.ledger.retrieve_party(alice.pid()), Some(70));
            assert_eq!(sys.ledger.retrieve_party(mallory.pid()), Some(40));
            assert!(alice.holds(ssid));
            assert_eq!(alice.banknote_value(), 40);
            let view = sys.ledger.retrieve_contract(ssid).unwrap();
            assert_eq!(view.state.unwrap().serial.as_ref(), Some(&alice.notes()[0].serial));
            for _ in 0..200 {
                sys.tick();
                for p in mallory.advance_claims(&mut sys) {
                    assert!(matches!(p, Posted::Done(OpResult { accepted: false, .. })));
                }
            }
            assert!(mallory.claims().is_empty());
            assert_eq!(sys.ledger.retrieve_party(mallory.pid()), Some(40));
        }
    }

    #[test]
    fn lost_claim_settles_after_maturity() {
        let mut sys = system(Variant::Base, KeyMode::Minimal);
        let mut alice = party(&mut sys, "alice:100");
        let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
        alice.lose_note(&mut sys, ssid).unwrap();
        alice.file_lost_claim(&mut sys, ssid).unwrap();
        assert_eq!(sys.ledger.retrieve_party(alice.pid()), Some(50));
        for _ in 0..100 {
            sys.tick();
            assert!(alice.advance_claims(&mut sys).is_empty());
        }
        sys.tick();
        let r = alice.advance_claims(&mut sys);
        assert!(matches!(
            r[..],
            [Posted::Done(OpResult {
                accepted: true,
                reward: 10,
                ..
            })]
        ));
        assert_eq!(sys.ledger.retrieve_party(alice.pid()), Some(60));
        assert!(alice.holds(ssid));
        assert_eq!(alice.banknote_value(), 40);
    }

    #[test]
    fn commit_reveal_pipeline() {
        let mut sys = system(Variant::CommitReveal, KeyMode::Qlds);
        let mut alice = party(&mut sys, "alice:100");
        let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
        alice.lose_note(&mut sys, ssid).unwrap();
        alice.file_lost_claim(&mut sys, ssid).unwrap();
        let mut settled = false;
        for _ in 0..30 {
            sys.tick();
            for p in alice.advance_claims(&mut sys) {
                if let Posted::Done(OpResult {
                    op: OpKind::Settle,
                    accepted,
                    ..
                }) = p
                {
                    settled = accepted;
                }
            }
        }
        assert!(settled);
        assert!(alice.holds(ssid));
        assert_eq!(sys.ledger.retrieve_party(alice.pid()), Some(60));
    }

    #[test]
    fn sig_gated_redeem() {
        let mut sys = system(Variant::SigGated, KeyMode::Qlds);
        let mut alice = party(&mut sys, "alice:50");
        let ssid = alice.mint_banknote(&mut sys, 40).unwrap();
        assert!(matches!(
            alice.redeem(&mut sys, ssid).unwrap(),
            Posted::Done(OpResult {
                accepted: true,
                reward: 40,
                ..
            })
        ));
        assert!(matches!(
            alice.redeem(&mut sys, ssid),
            Err(ProtocolError::NoSuchNote(_))
        ));
    }
}
