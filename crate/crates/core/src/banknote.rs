//! The banknote-contract circuit and its hardened variants.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hashing::{sha256, Digest32, COMMIT_TAG};
use crate::ledger::{Circuit, ContractParams, Payout, Ssid, Transition, TriggerContext};
use crate::lightning::{verify_certificate, Certificate, SerialNumber, PREIMAGE_LEN, SERIAL_LEN};
use crate::pid::Pid;
use crate::qlds::{verify_sig, QldsParams, QldsSignature};

pub const NONCE_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Base,
    SigGated,
    CommitReveal,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::SigGated, Variant::CommitReveal];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::SigGated => "sig-gated",
            Variant::CommitReveal => "commit-reveal",
        }
    }

    /// Challenges and redemptions go through signatures rather than raw certificates.
    pub fn uses_signatures(self) -> bool {
        self != Variant::Base
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = WitnessParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Variant::Base),
            "sig-gated" => Ok(Variant::SigGated),
            "commit-reveal" => Ok(Variant::CommitReveal),
            other => Err(WitnessParseError(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhiParams {
    pub d0: u64,
    pub t_tr: u64,
    pub cert_len: usize,
    pub variant: Variant,
    pub t0: u64,
    pub t1: u64,
}

impl PhiParams {
    pub fn base(d0: u64, t_tr: u64) -> Self {
        PhiParams {
            d0,
            t_tr,
            cert_len: PREIMAGE_LEN,
            variant: Variant::Base,
            t0: 0,
            t1: 0,
        }
    }

    pub fn sig_gated(d0: u64, t_tr: u64) -> Self {
        PhiParams {
            variant: Variant::SigGated,
            ..Self::base(d0, t_tr)
        }
    }

    pub fn commit_reveal(d0: u64, t_tr: u64, t0: u64, t1: u64) -> Self {
        PhiParams {
            variant: Variant::CommitReveal,
            t0,
            t1,
            ..Self::base(d0, t_tr)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.d0 >= 1
            && self.t_tr >= 1
            && self.cert_len >= 1
            && (self.variant != Variant::CommitReveal || (self.t0 >= 1 && self.t1 >= 1))
    }

    /// Circuit identifier echoed in traces.
    pub fn id(&self) -> String {
        format!(
            "phi$:{}:d0={}:ttr={}:t0={}:t1={}:cert={}",
            self.variant, self.d0, self.t_tr, self.t0, self.t1, self.cert_len
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CommitEntry {
    pub pid: Pid,
    pub commitment: Digest32,
    pub committed_at: u64,
    pub revealed_at: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClaimState {
    NoActiveClaim,
    ClaimBy {
        pid: Pid,
        t: u64,
    },
    /// Commit-reveal variant: every commitment posted since the last settlement.
    Commits(Vec<CommitEntry>),
    /// Terminal state after redemption.
    Void,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BanknoteState {
    pub serial: Option<Vec<u8>>,
    pub claim: ClaimState,
}

impl BanknoteState {
    pub fn fresh(serial: Vec<u8>) -> Self {
        BanknoteState {
            serial: Some(serial),
            claim: ClaimState::NoActiveClaim,
        }
    }

    pub fn has_active_claim(&self) -> bool {
        !matches!(self.claim, ClaimState::NoActiveClaim | ClaimState::Void)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    BanknoteLost,
    ChallengeClaim { cert: Certificate, new_serial: Vec<u8> },
    ClaimUnchallenged { new_serial: Vec<u8> },
    RecoverCoins { cert: Certificate },
    ChallengeClaimSig { sig: QldsSignature, new_serial: Vec<u8> },
    RecoverCoinsSig { sig: QldsSignature },
    CommitLost { commitment: Digest32 },
    RevealLost { nonce: [u8; NONCE_LEN] },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("witness parse error: {0}")]
pub struct WitnessParseError(pub String);

impl Witness {
    pub fn name(&self) -> &'static str {
        match self {
            Witness::BanknoteLost => "BanknoteLost",
            Witness::ChallengeClaim { .. } => "ChallengeClaim",
            Witness::ClaimUnchallenged { .. } => "ClaimUnchallenged",
            Witness::RecoverCoins { .. } => "RecoverCoins",
            Witness::ChallengeClaimSig { .. } => "ChallengeClaimSig",
            Witness::RecoverCoinsSig { .. } => "RecoverCoinsSig",
            Witness::CommitLost { .. } => "CommitLost",
            Witness::RevealLost { .. } => "RevealLost",
        }
    }

    /// Name followed by tab-separated hex fields.
    pub fn encode(&self) -> String {
        let fields: Vec<String> = match self {
            Witness::BanknoteLost => vec![],
            Witness::ChallengeClaim { cert, new_serial } => {
                vec![cert.to_hex(), hex::encode(new_serial)]
            }
            Witness::ClaimUnchallenged { new_serial } => vec![hex::encode(new_serial)],
            Witness::RecoverCoins { cert } => vec![cert.to_hex()],
            Witness::ChallengeClaimSig { sig, new_serial } => {
                vec![sig.to_hex(), hex::encode(new_serial)]
            }
            Witness::RecoverCoinsSig { sig } => vec![sig.to_hex()],
            Witness::CommitLost { commitment } => vec![hex::encode(commitment)],
            Witness::RevealLost { nonce } => vec![hex::encode(nonce)],
        };
        std::iter::once(self.name().to_owned())
            .chain(fields)
            .collect::<Vec<_>>()
            .join("\t")
    }

    pub fn parse(fields: &[&str]) -> Result<Self, WitnessParseError> {
        let (name, rest) = fields
            .split_first()
            .ok_or_else(|| WitnessParseError("empty witness".into()))?;
        let arity = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(WitnessParseError(format!(
                    "{name} takes {n} field(s), got {}",
                    rest.len()
                )))
            }
        };
        let bytes = |s: &str| hex::decode(s).map_err(|e| WitnessParseError(format!("bad hex: {e}")));
        let sig = |s: &str| QldsSignature::from_hex(s).map_err(|e| WitnessParseError(e.to_string()));
        let fixed = |s: &str, len: usize| -> Result<Vec<u8>, WitnessParseError> {
            let b = bytes(s)?;
            if b.len() != len {
                return Err(WitnessParseError(format!("expected {len} bytes, got {}", b.len())));
            }
            Ok(b)
        };
        match *name {
            "BanknoteLost" => {
                arity(0)?;
                Ok(Witness::BanknoteLost)
            }
            "ChallengeClaim" => {
                arity(2)?;
                Ok(Witness::ChallengeClaim {
                    cert: Certificate::from_bytes(bytes(rest[0])?),
                    new_serial: bytes(rest[1])?,
                })
            }
            "ClaimUnchallenged" => {
                arity(1)?;
                Ok(Witness::ClaimUnchallenged {
                    new_serial: bytes(rest[0])?,
                })
            }
            "RecoverCoins" => {
                arity(1)?;
                Ok(Witness::RecoverCoins {
                    cert: Certificate::from_bytes(bytes(rest[0])?),
                })
            }
            "ChallengeClaimSig" => {
                arity(2)?;
                Ok(Witness::ChallengeClaimSig {
                    sig: sig(rest[0])?,
                    new_serial: bytes(rest[1])?,
                })
            }
            "RecoverCoinsSig" => {
                arity(1)?;
                Ok(Witness::RecoverCoinsSig { sig: sig(rest[0])? })
            }
            "CommitLost" => {
                arity(1)?;
                Ok(Witness::CommitLost {
                    commitment: fixed(rest[0], 32)?.try_into().expect("length checked"),
                })
            }
            "RevealLost" => {
                arity(1)?;
                Ok(Witness::RevealLost {
                    nonce: fixed(rest[0], NONCE_LEN)?.try_into().expect("length checked"),
                })
            }
            other => Err(WitnessParseError(format!("unknown witness `{other}`"))),
        }
    }
}

pub fn challenge_message(pid: &Pid) -> Vec<u8> {
    [b"CHALLENGE:".as_slice(), pid.as_str().as_bytes()].concat()
}

pub fn recover_message(pid: &Pid) -> Vec<u8> {
    [b"RECOVER:".as_slice(), pid.as_str().as_bytes()].concat()
}

/// `SHA-256("QLCOMMIT" ‖ pid ‖ ssid ‖ nonce)`.
pub fn commitment(pid: &Pid, ssid: Ssid, nonce: &[u8; NONCE_LEN]) -> Digest32 {
    sha256(&[COMMIT_TAG, pid.as_str().as_bytes(), &ssid.to_be_bytes(), nonce])
}

/// Verifies a certificate against a serial made of one or more segments; the
/// certificate is the concatenation of one per-segment certificate each.
pub fn verify_composite_certificate(serial: &[u8], cert: &Certificate, cert_len: usize) -> bool {
    if serial.is_empty() || !serial.len().is_multiple_of(SERIAL_LEN) {
        return false;
    }
    let segments = serial.len() / SERIAL_LEN;
    if cert.len() != segments * cert_len {
        return false;
    }
    serial
        .chunks(SERIAL_LEN)
        .zip(cert.as_bytes().chunks(cert_len))
        .all(|(s, c)| {
            let s = SerialNumber::from_slice(s).expect("segment length");
            verify_certificate(&s, &Certificate::from_bytes(c.to_vec()))
        })
}

fn signature_valid(serial: &[u8], msg: &[u8], sig: &QldsSignature) -> bool {
    QldsParams::for_serial(serial)
        .and_then(|p| verify_sig(p, serial, msg, sig))
        .unwrap_or(false)
}

fn step(serial: Option<Vec<u8>>, claim: ClaimState, payout: Payout) -> Option<Transition<BanknoteState>> {
    Some(Transition {
        state: BanknoteState { serial, claim },
        payout,
    })
}

/// Base circuit: exactly the four accepting rows of the transition table.
pub fn phi_money(
    p: &PhiParams,
    ctx: &TriggerContext<'_>,
    w: &Witness,
    st: &BanknoteState,
) -> Option<Transition<BanknoteState>> {
    let serial = st.serial.as_ref()?;
    match (&st.claim, w) {
        (ClaimState::NoActiveClaim, Witness::BanknoteLost) if ctx.deposit == p.d0 => step(
            st.serial.clone(),
            ClaimState::ClaimBy {
                pid: ctx.pid.clone(),
                t: ctx.time,
            },
            Payout::NONE,
        ),
        (ClaimState::NoActiveClaim, Witness::RecoverCoins { cert })
            if verify_composite_certificate(serial, cert, p.cert_len) =>
        {
            step(None, ClaimState::Void, Payout::AllCoins)
        }
        (ClaimState::ClaimBy { .. }, Witness::ChallengeClaim { cert, new_serial })
            if verify_composite_certificate(serial, cert, p.cert_len) =>
        {
            step(Some(new_serial.clone()), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        (ClaimState::ClaimBy { pid, t }, Witness::ClaimUnchallenged { new_serial })
            if pid == ctx.pid && ctx.time.saturating_sub(*t) > p.t_tr =>
        {
            step(Some(new_serial.clone()), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        _ => None,
    }
}

/// Signature-gated circuit: raw-certificate witnesses are disabled and the
/// challenge and recovery paths require pid-bound signatures.
pub fn phi_money_sig(
    p: &PhiParams,
    ctx: &TriggerContext<'_>,
    w: &Witness,
    st: &BanknoteState,
) -> Option<Transition<BanknoteState>> {
    let serial = st.serial.as_ref()?;
    match (&st.claim, w) {
        (_, Witness::ChallengeClaim { .. } | Witness::RecoverCoins { .. }) => None,
        (ClaimState::NoActiveClaim, Witness::RecoverCoinsSig { sig })
            if signature_valid(serial, &recover_message(ctx.pid), sig) =>
        {
            step(None, ClaimState::Void, Payout::AllCoins)
        }
        (ClaimState::ClaimBy { .. }, Witness::ChallengeClaimSig { sig, new_serial })
            if signature_valid(serial, &challenge_message(ctx.pid), sig) =>
        {
            step(Some(new_serial.clone()), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        (_, Witness::BanknoteLost | Witness::ClaimUnchallenged { .. }) => phi_money(p, ctx, w, st),
        _ => None,
    }
}

/// Commit-reveal circuit: lost claims go through commit, reveal within `t0`,
/// and settlement more than `t1` after the reveal by the earliest revealed commitment.
/// Challenge and recovery paths are those of the signature-gated circuit.
pub fn phi_money_cr(
    p: &PhiParams,
    ctx: &TriggerContext<'_>,
    w: &Witness,
    st: &BanknoteState,
) -> Option<Transition<BanknoteState>> {
    let serial = st.serial.as_ref()?;
    let entries: &[CommitEntry] = match &st.claim {
        ClaimState::NoActiveClaim => &[],
        ClaimState::Commits(entries) => entries,
        ClaimState::ClaimBy { .. } | ClaimState::Void => return None,
    };
    match w {
        Witness::CommitLost { commitment } if ctx.deposit == p.d0 => {
            let mut next = entries.to_vec();
            next.push(CommitEntry {
                pid: ctx.pid.clone(),
                commitment: *commitment,
                committed_at: ctx.time,
                revealed_at: None,
            });
            step(Some(serial.clone()), ClaimState::Commits(next), Payout::NONE)
        }
        Witness::RevealLost { nonce } => {
            let expected = commitment(ctx.pid, ctx.ssid, nonce);
            let pos = entries.iter().position(|e| {
                &e.pid == ctx.pid
                    && e.commitment == expected
                    && e.revealed_at.is_none()
                    && ctx.time >= e.committed_at
                    && ctx.time - e.committed_at <= p.t0
            })?;
            let mut next = entries.to_vec();
            next[pos].revealed_at = Some(ctx.time);
            step(Some(serial.clone()), ClaimState::Commits(next), Payout::NONE)
        }
        Witness::ClaimUnchallenged { new_serial } => {
            let winner = entries
                .iter()
                .filter(|e| e.revealed_at.is_some())
                .min_by_key(|e| e.committed_at)?;
            let revealed = winner.revealed_at.expect("filtered");
            if &winner.pid != ctx.pid || ctx.time < revealed || ctx.time - revealed <= p.t1 {
                return None;
            }
            step(Some(new_serial.clone()), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        Witness::ChallengeClaimSig { sig, new_serial }
            if !entries.is_empty() && signature_valid(serial, &challenge_message(ctx.pid), sig) =>
        {
            step(Some(new_serial.clone()), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        Witness::RecoverCoinsSig { .. } if entries.is_empty() => phi_money_sig(p, ctx, w, st),
        _ => None,
    }
}

impl Circuit for PhiParams {
    type State = BanknoteState;
    type Witness = Witness;

    fn evaluate(
        &self,
        ctx: &TriggerContext<'_>,
        witness: &Witness,
        state: &BanknoteState,
    ) -> Option<Transition<BanknoteState>> {
        match self.variant {
            Variant::Base => phi_money(self, ctx, witness, state),
            Variant::SigGated => phi_money_sig(self, ctx, witness, state),
            Variant::CommitReveal => phi_money_cr(self, ctx, witness, state),
        }
    }
}

/// Payee-side shape check of a contract claimed to back a banknote.
pub fn is_banknote_contract(params: &ContractParams<PhiParams>, network: &PhiParams) -> bool {
    params.members.len() == 1
        && params.circuit == *network
        && params.initial_state.serial.is_some()
        && params.initial_state.claim == ClaimState::NoActiveClaim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightning::ql_setup;
    use crate::qlds::{gen_sig, qlds_gen};

    fn pid(s: &str) -> Pid {
        Pid::parse(s).unwrap()
    }

    fn ctx<'a>(pid: &'a Pid, time: u64, deposit: u64) -> TriggerContext<'a> {
        TriggerContext {
            pid,
            ssid: 1,
            time,
            deposit,
        }
    }

    #[test]
    fn banknote_lost_records_claim() {
        let p = PhiParams::base(10, 100);
        let owner = pid("p:0");
        let st = BanknoteState::fresh(vec![7; 32]);
        let tr = phi_money(&p, &ctx(&owner, 7, 10), &Witness::BanknoteLost, &st).unwrap();
        assert_eq!(tr.payout, Payout::NONE);
        assert_eq!(
            tr.state,
            BanknoteState {
                serial: Some(vec![7; 32]),
                claim: ClaimState::ClaimBy { pid: owner, t: 7 }
            }
        );
        let other = pid("q:0");
        for d in [0, 9, 11] {
            assert!(phi_money(&p, &ctx(&other, 7, d), &Witness::BanknoteLost, &st).is_none());
        }
    }

    #[test]
    fn maturity_is_strict() {
        let p = PhiParams::base(10, 100);
        let q = pid("q:0");
        let st = BanknoteState {
            serial: Some(vec![1; 32]),
            claim: ClaimState::ClaimBy { pid: q.clone(), t: 5 },
        };
        let w = Witness::ClaimUnchallenged {
            new_serial: vec![2; 32],
        };
        assert!(phi_money(&p, &ctx(&q, 105, 0), &w, &st).is_none());
        let tr = phi_money(&p, &ctx(&q, 106, 0), &w, &st).unwrap();
        assert_eq!(tr.payout, Payout::Coins(10));
        assert_eq!(tr.state, BanknoteState::fresh(vec![2; 32]));
        assert!(phi_money(&p, &ctx(&pid("r:0"), 500, 0), &w, &st).is_none());
    }

    #[test]
    fn certificate_paths() {
        let mut env = ql_setup(128, [3; 32]).unwrap();
        let owner = pid("o:0");
        let (h, s) = env.gen_bolt(&owner);
        let (h2, s2) = env.gen_bolt(&owner);
        let p = PhiParams::base(10, 100);
        let st = BanknoteState::fresh(s.as_bytes().to_vec());
        let bad = env.gen_certificate(&h2, &s2).unwrap();
        let c = env.gen_certificate(&h, &s).unwrap();
        let recover = |cert: &Certificate| Witness::RecoverCoins { cert: cert.clone() };
        assert!(phi_money(&p, &ctx(&owner, 0, 0), &recover(&bad), &st).is_none());
        let tr = phi_money(&p, &ctx(&owner, 0, 0), &recover(&c), &st).unwrap();
        assert_eq!(tr.payout, Payout::AllCoins);
        assert_eq!(tr.state.serial, None);

        let claimed = BanknoteState {
            serial: st.serial.clone(),
            claim: ClaimState::ClaimBy { pid: pid("m:0"), t: 0 },
        };
        let ch = |cert: &Certificate| Witness::ChallengeClaim {
            cert: cert.clone(),
            new_serial: vec![9; 32],
        };
        assert!(phi_money(&p, &ctx(&owner, 1, 0), &ch(&bad), &claimed).is_none());
        let tr = phi_money(&p, &ctx(&owner, 1, 0), &ch(&c), &claimed).unwrap();
        assert_eq!(tr.payout, Payout::Coins(10));
        assert_eq!(tr.state, BanknoteState::fresh(vec![9; 32]));
        // recovery is only available without an active claim
        assert!(phi_money(&p, &ctx(&owner, 1, 0), &recover(&c), &claimed).is_none());
    }

    #[test]
    fn composite_certificate_per_segment() {
        let mut env = ql_setup(128, [4; 32]).unwrap();
        let owner = pid("o:0");
        let (h1, s1) = env.gen_bolt(&owner);
        let (h2, s2) = env.gen_bolt(&owner);
        let serial = [s1.as_bytes(), s2.as_bytes()].concat();
        let c1 = env.gen_certificate(&h1, &s1).unwrap();
        let c2 = env.gen_certificate(&h2, &s2).unwrap();
        let good = Certificate::from_bytes([c1.as_bytes(), c2.as_bytes()].concat());
        let swapped = Certificate::from_bytes([c2.as_bytes(), c1.as_bytes()].concat());
        assert!(verify_composite_certificate(&serial, &good, 16));
        assert!(!verify_composite_certificate(&serial, &swapped, 16));
        assert!(!verify_composite_certificate(&serial, &c1, 16));
    }

    #[test]
    fn sig_gated_binds_pid() {
        let mut env = ql_setup(128, [5; 32]).unwrap();
        let alice = pid("alice:0");
        let mallory = pid("mallory:0");
        let key = qlds_gen(&mut env, QldsParams::new(8).unwrap(), &alice);
        let serial = key.serial().to_vec();
        let p = PhiParams::sig_gated(10, 100);
        let st = BanknoteState::fresh(serial.clone());
        let sig = gen_sig(&mut env, &key, &serial, &recover_message(&alice)).unwrap();
        let w = Witness::RecoverCoinsSig { sig };
        assert!(phi_money_sig(&p, &ctx(&mallory, 0, 0), &w, &st).is_none());
        let tr = phi_money_sig(&p, &ctx(&alice, 0, 0), &w, &st).unwrap();
        assert_eq!(tr.payout, Payout::AllCoins);
    }

    #[test]
    fn sig_gated_rejects_raw_certificates() {
        let mut env = ql_setup(128, [6; 32]).unwrap();
        let owner = pid("o:0");
        let (h, s) = env.gen_bolt(&owner);
        let c = env.gen_certificate(&h, &s).unwrap();
        let st = BanknoteState::fresh(s.as_bytes().to_vec());
        let p = PhiParams::sig_gated(10, 100);
        assert!(phi_money(
            &PhiParams::base(10, 100),
            &ctx(&owner, 0, 0),
            &Witness::RecoverCoins { cert: c.clone() },
            &st
        )
        .is_some());
        assert!(phi_money_sig(&p, &ctx(&owner, 0, 0), &Witness::RecoverCoins { cert: c }, &st).is_none());
    }

    fn cr_commit(p: &PhiParams, who: &Pid, t: u64, nonce: [u8; 16], st: &BanknoteState) -> BanknoteState {
        let w = Witness::CommitLost {
            commitment: commitment(who, 1, &nonce),
        };
        phi_money_cr(p, &ctx(who, t, p.d0), &w, st).unwrap().state
    }

    #[test]
    fn reveal_deadline_is_inclusive() {
        let p = PhiParams::commit_reveal(10, 100, 10, 10);
        let a = pid("a:0");
        let st = cr_commit(&p, &a, 5, [1; 16], &BanknoteState::fresh(vec![0; 32]));
        let w = Witness::RevealLost { nonce: [1; 16] };
        assert!(phi_money_cr(&p, &ctx(&a, 15, 0), &w, &st).is_some());
        assert!(phi_money_cr(&p, &ctx(&a, 16, 0), &w, &st).is_none());
        assert!(phi_money_cr(&p, &ctx(&a, 10, 0), &Witness::RevealLost { nonce: [2; 16] }, &st).is_none());
    }

    #[test]
    fn earliest_revealed_commit_wins() {
        let p = PhiParams::commit_reveal(10, 100, 10, 10);
        let (a, b) = (pid("a:0"), pid("b:0"));
        let mut st = BanknoteState::fresh(vec![0; 32]);
        st = cr_commit(&p, &a, 3, [1; 16], &st);
        st = cr_commit(&p, &b, 4, [2; 16], &st);
        st = phi_money_cr(&p, &ctx(&b, 6, 0), &Witness::RevealLost { nonce: [2; 16] }, &st)
            .unwrap()
            .state;
        st = phi_money_cr(&p, &ctx(&a, 7, 0), &Witness::RevealLost { nonce: [1; 16] }, &st)
            .unwrap()
            .state;
        let settle = Witness::ClaimUnchallenged {
            new_serial: vec![5; 32],
        };
        assert!(phi_money_cr(&p, &ctx(&b, 50, 0), &settle, &st).is_none());
        assert!(
            phi_money_cr(&p, &ctx(&a, 17, 0), &settle, &st).is_none(),
            "t1 is strict"
        );
        let tr = phi_money_cr(&p, &ctx(&a, 18, 0), &settle, &st).unwrap();
        assert_eq!(tr.payout, Payout::Coins(10));
        assert_eq!(tr.state, BanknoteState::fresh(vec![5; 32]));
    }

    #[test]
    fn witness_round_trip() {
        let ws = [
            Witness::BanknoteLost,
            Witness::ChallengeClaim {
                cert: Certificate::from_bytes(vec![1; 16]),
                new_serial: vec![2; 32],
            },
            Witness::ClaimUnchallenged {
                new_serial: vec![3; 64],
            },
            Witness::RecoverCoins {
                cert: Certificate::from_bytes(vec![4; 32]),
            },
            Witness::CommitLost { commitment: [5; 32] },
            Witness::RevealLost { nonce: [6; 16] },
        ];
        for w in ws {
            let line = w.encode();
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(Witness::parse(&fields).unwrap(), w);
        }
        assert!(Witness::parse(&["Nope"]).is_err());
        assert!(Witness::parse(&["RecoverCoins"]).is_err());
        assert!(Witness::parse(&["RevealLost", "00"]).is_err());
    }

    #[test]
    fn banknote_contract_shape() {
        let net = PhiParams::base(10, 100);
        let a = pid("a:50");
        let good = ContractParams::single(&a, 40, net, BanknoteState::fresh(vec![1; 32]));
        assert!(is_banknote_contract(&good, &net));
        assert!(!is_banknote_contract(&good, &PhiParams::base(11, 100)));
        let mut two = good.clone();
        two.members.insert(pid("b:0"));
        two.deposits.insert(pid("b:0"), 0);
        assert!(!is_banknote_contract(&two, &net));
    }
}
