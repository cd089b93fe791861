//! Classical oracle standing in for a quantum lightning scheme with
//! bolt-to-certificate capability.
//!
//! A bolt is a move-only [`BoltHandle`] into a [`QuantumEnv`] registry. The
//! registry keeps the secret preimage of every bolt; its serial number is
//! `SHA-256("QLBOLT" ‖ secret)` and its certificate is the secret itself.
//! Measuring a bolt into a certificate kills it, and in sound mode the
//! environment refuses to clone, so at most one live bolt ever carries a
//! given serial.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::hashing::{self, Digest32, DigestHasher, BOLT_TAG};
use crate::pid::Pid;

pub const MIN_LAMBDA: u32 = 64;
pub const SERIAL_LEN: usize = 32;
pub const PREIMAGE_LEN: usize = 16;

static NEXT_NAMESPACE: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LightningError {
    #[error("setup rejected: lambda {0} below minimum {MIN_LAMBDA}")]
    SetupRejected(u32),
    #[error("setup rejected: preimage length {0} below 16 bytes")]
    PreimageTooShort(usize),
    #[error("handle was not issued by this environment")]
    ForeignHandle,
    #[error("measurement failed: bolt is dead or does not carry the given serial")]
    MeasureFailed,
    #[error("party {0} does not own this bolt")]
    NotOwner(Pid),
    #[error("malformed hex: {0}")]
    BadHex(String),
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LightningParams {
    pub lambda: u32,
    pub preimage_len: usize,
    pub serial_len: usize,
    pub sound_mode: bool,
}

impl LightningParams {
    pub fn new(lambda: u32) -> Self {
        LightningParams {
            lambda,
            preimage_len: PREIMAGE_LEN,
            serial_len: SERIAL_LEN,
            sound_mode: true,
        }
    }

    /// Negative-control parameters: cloning succeeds.
    pub fn unsound(mut self) -> Self {
        self.sound_mode = false;
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SerialNumber(pub [u8; SERIAL_LEN]);

impl SerialNumber {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, LightningError> {
        let arr: [u8; SERIAL_LEN] = bytes.try_into().map_err(|_| LightningError::BadLength {
            expected: SERIAL_LEN,
            got: bytes.len(),
        })?;
        Ok(SerialNumber(arr))
    }

    pub fn from_hex(s: &str) -> Result<Self, LightningError> {
        let bytes = hex::decode(s).map_err(|e| LightningError::BadHex(e.to_string()))?;
        Self::from_slice(&bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SerialNumber({}…)", &self.to_hex()[..12])
    }
}

impl fmt::Display for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Classical proof that a bolt was destroyed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Certificate(Vec<u8>);

impl Certificate {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Certificate(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self, LightningError> {
        hex::decode(s)
            .map(Certificate)
            .map_err(|e| LightningError::BadHex(e.to_string()))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Certificate({})", self.to_hex())
    }
}

/// Possession of one simulated bolt. Deliberately neither `Clone` nor `Copy`.
#[derive(Debug, PartialEq, Eq)]
pub struct BoltHandle {
    namespace: u64,
    id: u64,
}

impl BoltHandle {
    pub fn id(&self) -> u64 {
        self.id
    }
}

/// Returned when a transfer is refused; hands the bolt back to the caller.
#[derive(Debug)]
pub struct TransferError {
    pub handle: BoltHandle,
    pub error: LightningError,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct BoltRecord {
    secret: Vec<u8>,
    serial: SerialNumber,
    alive: bool,
    owner: Pid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvViolation {
    /// More than one live bolt carries the serial.
    Cloned { serial: SerialNumber, alive: usize },
    /// A certificate was released while a live bolt with the serial still exists.
    CertificateWithLiveBolt { serial: SerialNumber },
}

impl fmt::Display for EnvViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvViolation::Cloned { serial, alive } => {
                write!(f, "no-cloning violated: {alive} live bolts with serial {serial}")
            }
            EnvViolation::CertificateWithLiveBolt { serial } => {
                write!(f, "certificate exclusivity violated for serial {serial}")
            }
        }
    }
}

/// Registry of simulated bolts. All operations are serialized through `&mut self`.
pub struct QuantumEnv {
    namespace: u64,
    params: LightningParams,
    rng: ChaCha20Rng,
    registry: Vec<BoltRecord>,
    released: BTreeSet<SerialNumber>,
}

impl fmt::Debug for QuantumEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumEnv")
            .field("params", &self.params)
            .field("bolts", &self.registry.len())
            .finish()
    }
}

/// Trusted setup of the simulated scheme.
pub fn ql_setup(lambda: u32, seed: [u8; 32]) -> Result<QuantumEnv, LightningError> {
    QuantumEnv::with_params(LightningParams::new(lambda), seed)
}

/// Stateless certificate check: `SHA-256("QLBOLT" ‖ c) == s`.
pub fn verify_certificate(s: &SerialNumber, c: &Certificate) -> bool {
    hashing::tagged(BOLT_TAG, c.as_bytes()) == s.0
}

impl QuantumEnv {
    pub fn with_params(params: LightningParams, seed: [u8; 32]) -> Result<Self, LightningError> {
        if params.lambda < MIN_LAMBDA {
            return Err(LightningError::SetupRejected(params.lambda));
        }
        if params.preimage_len < PREIMAGE_LEN {
            return Err(LightningError::PreimageTooShort(params.preimage_len));
        }
        Ok(QuantumEnv {
            namespace: NEXT_NAMESPACE.fetch_add(1, Ordering::Relaxed),
            params,
            rng: ChaCha20Rng::from_seed(seed),
            registry: Vec::new(),
            released: BTreeSet::new(),
        })
    }

    pub fn params(&self) -> &LightningParams {
        &self.params
    }

    pub fn sound_mode(&self) -> bool {
        self.params.sound_mode
    }

    pub fn bolt_count(&self) -> usize {
        self.registry.len()
    }

    fn record(&self, h: &BoltHandle) -> Result<&BoltRecord, LightningError> {
        if h.namespace != self.namespace {
            return Err(LightningError::ForeignHandle);
        }
        self.registry.get(h.id as usize).ok_or(LightningError::ForeignHandle)
    }

    fn record_mut(&mut self, h: &BoltHandle) -> Result<&mut BoltRecord, LightningError> {
        if h.namespace != self.namespace {
            return Err(LightningError::ForeignHandle);
        }
        self.registry
            .get_mut(h.id as usize)
            .ok_or(LightningError::ForeignHandle)
    }

    fn register(&mut self, record: BoltRecord) -> BoltHandle {
        let id = self.registry.len() as u64;
        self.registry.push(record);
        BoltHandle {
            namespace: self.namespace,
            id,
        }
    }

    pub fn gen_bolt(&mut self, owner: &Pid) -> (BoltHandle, SerialNumber) {
        let mut secret = vec![0u8; self.params.preimage_len];
        self.rng.fill_bytes(&mut secret);
        let serial = SerialNumber(hashing::tagged(BOLT_TAG, &secret));
        let handle = self.register(BoltRecord {
            secret,
            serial,
            alive: true,
            owner: owner.clone(),
        });
        (handle, serial)
    }

    /// Non-destructive verification; repeated calls give identical answers.
    pub fn verify_bolt(&self, h: &BoltHandle, s: &SerialNumber) -> Result<bool, LightningError> {
        let r = self.record(h)?;
        Ok(r.alive && r.serial == *s)
    }

    /// Destructive measurement: returns the certificate and kills the bolt.
    pub fn gen_certificate(&mut self, h: &BoltHandle, s: &SerialNumber) -> Result<Certificate, LightningError> {
        let r = self.record_mut(h)?;
        if !r.alive || r.serial != *s {
            return Err(LightningError::MeasureFailed);
        }
        r.alive = false;
        let cert = Certificate(r.secret.clone());
        let serial = r.serial;
        self.released.insert(serial);
        Ok(cert)
    }

    /// Moves the bolt from `from` to `to`. On refusal the handle is returned inside the error.
    pub fn transfer_bolt(&mut self, h: BoltHandle, from: &Pid, to: &Pid) -> Result<BoltHandle, TransferError> {
        let r = match self.record_mut(&h) {
            Ok(r) => r,
            Err(error) => return Err(TransferError { handle: h, error }),
        };
        if r.owner != *from {
            return Err(TransferError {
                handle: h,
                error: LightningError::NotOwner(from.clone()),
            });
        }
        r.owner = to.clone();
        Ok(h)
    }

    /// Cloning attempt. Refused in sound mode; the negative control hands out
    /// a second live bolt with the same serial.
    pub fn clone_attempt(&mut self, h: &BoltHandle) -> Option<BoltHandle> {
        if self.params.sound_mode {
            return None;
        }
        let record = self.record(h).ok()?.clone();
        Some(self.register(record))
    }

    /// Models the loss of a fragile state: the bolt stops verifying.
    pub fn decohere(&mut self, h: BoltHandle) -> Result<(), LightningError> {
        self.record_mut(&h)?.alive = false;
        Ok(())
    }

    pub fn owner(&self, h: &BoltHandle) -> Result<&Pid, LightningError> {
        Ok(&self.record(h)?.owner)
    }

    pub fn is_alive(&self, h: &BoltHandle) -> Result<bool, LightningError> {
        Ok(self.record(h)?.alive)
    }

    /// Fresh uniformly random bytes from the environment's generator.
    pub fn random_bytes(&mut self, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        self.rng.fill_bytes(&mut out);
        out
    }

    /// Test and harness introspection: the hidden preimage behind a handle.
    #[doc(hidden)]
    pub fn secret_of(&self, h: &BoltHandle) -> Result<&[u8], LightningError> {
        Ok(&self.record(h)?.secret)
    }

    /// Environment-level invariant check (no-cloning, certificate exclusivity).
    pub fn violations(&self) -> Vec<EnvViolation> {
        let mut alive: BTreeMap<SerialNumber, usize> = BTreeMap::new();
        for r in self.registry.iter().filter(|r| r.alive) {
            *alive.entry(r.serial).or_default() += 1;
        }
        let mut out = Vec::new();
        for (serial, count) in &alive {
            if *count > 1 {
                out.push(EnvViolation::Cloned {
                    serial: *serial,
                    alive: *count,
                });
            }
            if self.released.contains(serial) {
                out.push(EnvViolation::CertificateWithLiveBolt { serial: *serial });
            }
        }
        out
    }

    /// Digest of the registry contents, independent of the handle namespace.
    pub fn registry_digest(&self) -> Digest32 {
        use std::hash::Hash;
        let mut h = DigestHasher::new();
        self.registry.hash(&mut h);
        self.released.hash(&mut h);
        h.digest()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alice() -> Pid {
        Pid::new("alice", 10)
    }

    fn env(seed: u8) -> QuantumEnv {
        ql_setup(128, [seed; 32]).unwrap()
    }

    #[test]
    fn setup_rejects_small_lambda() {
        assert_eq!(ql_setup(32, [0; 32]).unwrap_err(), LightningError::SetupRejected(32));
        assert!(ql_setup(64, [0; 32]).is_ok());
    }

    #[test]
    fn same_seed_same_serials() {
        let (mut a, mut b) = (env(0), env(0));
        for _ in 0..5 {
            assert_eq!(a.gen_bolt(&alice()).1, b.gen_bolt(&alice()).1);
        }
        assert_eq!(a.registry_digest(), b.registry_digest());
    }

    #[test]
    fn different_seeds_differ() {
        let (mut a, mut b) = (env(1), env(2));
        assert_ne!(a.gen_bolt(&alice()).1, b.gen_bolt(&alice()).1);
    }

    #[test]
    fn serial_is_tagged_hash_of_secret() {
        let mut e = env(3);
        let (h, s) = e.gen_bolt(&alice());
        let secret = e.secret_of(&h).unwrap().to_vec();
        assert_eq!(secret.len(), PREIMAGE_LEN);
        assert_eq!(s.0, hashing::sha256(&[b"QLBOLT", &secret]));
    }

    #[test]
    fn verify_accepts_own_serial_only() {
        let mut e = env(4);
        let (h, s) = e.gen_bolt(&alice());
        let (_, s2) = e.gen_bolt(&alice());
        assert!(e.verify_bolt(&h, &s).unwrap());
        assert!(!e.verify_bolt(&h, &s2).unwrap());
        for _ in 0..1000 {
            assert!(e.verify_bolt(&h, &s).unwrap());
        }
    }

    #[test]
    fn certificate_kills_bolt() {
        let mut e = env(5);
        let (h, s) = e.gen_bolt(&alice());
        let c = e.gen_certificate(&h, &s).unwrap();
        assert!(verify_certificate(&s, &c));
        assert!(!e.verify_bolt(&h, &s).unwrap());
        assert_eq!(e.gen_certificate(&h, &s).unwrap_err(), LightningError::MeasureFailed);
        assert!(e.violations().is_empty());
    }

    #[test]
    fn certificate_of_other_bolt_rejected() {
        let mut e = env(6);
        let (h1, s1) = e.gen_bolt(&alice());
        let (_h2, s2) = e.gen_bolt(&alice());
        let c1 = e.gen_certificate(&h1, &s1).unwrap();
        assert!(!verify_certificate(&s2, &c1));
        assert!(!verify_certificate(&s1, &Certificate::from_bytes(vec![7; 16])));
    }

    #[test]
    fn foreign_handle_detected() {
        let mut a = env(7);
        let b = env(7);
        let (h, s) = a.gen_bolt(&alice());
        assert_eq!(b.verify_bolt(&h, &s).unwrap_err(), LightningError::ForeignHandle);
    }

    #[test]
    fn transfer_requires_owner() {
        let mut e = env(8);
        let bob = Pid::new("bob", 0);
        let (h, _) = e.gen_bolt(&alice());
        let err = e.transfer_bolt(h, &bob, &alice()).unwrap_err();
        assert_eq!(err.error, LightningError::NotOwner(bob.clone()));
        let h = e.transfer_bolt(err.handle, &alice(), &bob).unwrap();
        assert_eq!(e.owner(&h).unwrap(), &bob);
    }

    #[test]
    fn cloning_refused_in_sound_mode() {
        let mut e = env(9);
        let (h, _) = e.gen_bolt(&alice());
        assert!((0..1000).all(|_| e.clone_attempt(&h).is_none()));
    }

    #[test]
    fn negative_control_clones() {
        let mut e = QuantumEnv::with_params(LightningParams::new(128).unsound(), [9; 32]).unwrap();
        let (h, s) = e.gen_bolt(&alice());
        let h2 = e.clone_attempt(&h).unwrap();
        assert!(e.verify_bolt(&h, &s).unwrap());
        assert!(e.verify_bolt(&h2, &s).unwrap());
        assert_eq!(e.violations().len(), 1);
        e.gen_certificate(&h, &s).unwrap();
        assert!(matches!(
            e.violations()[..],
            [EnvViolation::CertificateWithLiveBolt { .. }]
        ));
    }

    #[test]
    fn hex_round_trip() {
        let mut e = env(10);
        let (_, s) = e.gen_bolt(&alice());
        assert_eq!(SerialNumber::from_hex(&s.to_hex()).unwrap(), s);
        assert!(SerialNumber::from_hex("abcd").is_err());
        assert_eq!(s.to_hex(), s.to_hex().to_lowercase());
    }
}
