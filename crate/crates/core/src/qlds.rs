//! One-time signatures whose signing key is a bundle of `2n` bolts.
//!
//! The message is hashed to `n` bits `β`. For bit `i` (1-based) the signer
//! measures component `β_i·n + i`, so index `i` is burnt when the bit is 0 and
//! index `n + i` when it is 1. The signature is the `n` resulting certificates.
//! Signing burns exactly half the bundle, after which the key no longer
//! verifies as money.

use std::fmt;

use thiserror::Error;

use crate::hashing;
use crate::lightning::{
    verify_certificate, BoltHandle, Certificate, LightningError, QuantumEnv, SerialNumber, PREIMAGE_LEN, SERIAL_LEN,
};
use crate::pid::Pid;

pub const MIN_N: usize = 8;
pub const MAX_N: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QldsError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("key exhausted: component {index} is already dead")]
    KeyExhausted { index: usize },
    #[error("n = {0} outside supported range {MIN_N}..={MAX_N}")]
    BadParams(usize),
    #[error(transparent)]
    Lightning(#[from] LightningError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QldsParams {
    n: usize,
}

impl QldsParams {
    pub fn new(n: usize) -> Result<Self, QldsError> {
        if !(MIN_N..=MAX_N).contains(&n) {
            return Err(QldsError::BadParams(n));
        }
        Ok(QldsParams { n })
    }

    /// Recovers `n` from a serial of `2n` concatenated segments.
    pub fn for_serial(serial: &[u8]) -> Result<Self, QldsError> {
        if serial.is_empty() || !serial.len().is_multiple_of(2 * SERIAL_LEN) {
            return Err(QldsError::Parse(format!(
                "serial length {} is not a multiple of {}",
                serial.len(),
                2 * SERIAL_LEN
            )));
        }
        Self::new(serial.len() / (2 * SERIAL_LEN))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn serial_len(&self) -> usize {
        2 * self.n * SERIAL_LEN
    }

    pub fn signature_len(&self) -> usize {
        self.n * PREIMAGE_LEN
    }
}

impl Default for QldsParams {
    fn default() -> Self {
        QldsParams { n: MAX_N }
    }
}

/// First `n` bits of SHA-256(msg), most significant bit of byte 0 first.
pub fn message_bits(n: usize, msg: &[u8]) -> Vec<bool> {
    assert!(n <= MAX_N);
    let digest = hashing::sha256(&[msg]);
    (0..n).map(|k| digest[k / 8] >> (7 - k % 8) & 1 == 1).collect()
}

/// 1-based component index consumed for bit `i` (1-based) with value `bit`.
pub fn selected_index(n: usize, i: usize, bit: bool) -> usize {
    usize::from(bit) * n + i
}

/// The 1-based component indices a signature over `bits` consumes, in signing order.
pub fn consumed_indices(bits: &[bool]) -> Vec<usize> {
    let n = bits.len();
    bits.iter()
        .enumerate()
        .map(|(k, &b)| selected_index(n, k + 1, b))
        .collect()
}

/// Splits a serial into `SERIAL_LEN`-byte segments.
pub fn split_serial(serial: &[u8], segments: usize) -> Result<Vec<SerialNumber>, QldsError> {
    if serial.len() != segments * SERIAL_LEN {
        return Err(QldsError::Parse(format!(
            "expected {} serial bytes, got {}",
            segments * SERIAL_LEN,
            serial.len()
        )));
    }
    serial
        .chunks(SERIAL_LEN)
        .map(|c| SerialNumber::from_slice(c).map_err(QldsError::from))
        .collect()
}

/// Signing identity: `2n` bolts and the concatenation of their serials.
#[derive(Debug)]
pub struct QldsKey {
    bolts: Vec<BoltHandle>,
    serial: Vec<u8>,
}

impl QldsKey {
    pub fn serial(&self) -> &[u8] {
        &self.serial
    }

    pub fn n(&self) -> usize {
        self.bolts.len() / 2
    }

    pub fn bolts(&self) -> &[BoltHandle] {
        &self.bolts
    }

    /// Reassembles a key from parts; callers are responsible for the serial matching.
    pub fn from_parts(bolts: Vec<BoltHandle>, serial: Vec<u8>) -> Self {
        QldsKey { bolts, serial }
    }

    pub fn into_parts(self) -> (Vec<BoltHandle>, Vec<u8>) {
        (self.bolts, self.serial)
    }

    /// Moves every component to `to`. Ownership of all components is checked first.
    pub fn transfer(self, env: &mut QuantumEnv, from: &Pid, to: &Pid) -> Result<Self, (Self, QldsError)> {
        for b in &self.bolts {
            match env.owner(b) {
                Ok(owner) if owner == from => {}
                Ok(_) => return Err((self, LightningError::NotOwner(from.clone()).into())),
                Err(e) => return Err((self, e.into())),
            }
        }
        let QldsKey { bolts, serial } = self;
        let bolts = bolts
            .into_iter()
            .map(|b| env.transfer_bolt(b, from, to).expect("ownership checked above"))
            .collect();
        Ok(QldsKey { bolts, serial })
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QldsSignature {
    certs: Vec<Certificate>,
}

impl QldsSignature {
    pub fn certificates(&self) -> &[Certificate] {
        &self.certs
    }

    pub fn from_certificates(certs: Vec<Certificate>) -> Self {
        QldsSignature { certs }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.certs.iter().flat_map(|c| c.as_bytes().to_vec()).collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// Parses `n` concatenated certificates; `n` is implied by the length.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, QldsError> {
        if bytes.is_empty() || !bytes.len().is_multiple_of(PREIMAGE_LEN) {
            return Err(QldsError::Parse(format!(
                "signature length {} is not a multiple of {PREIMAGE_LEN}",
                bytes.len()
            )));
        }
        Ok(QldsSignature {
            certs: bytes
                .chunks(PREIMAGE_LEN)
                .map(|c| Certificate::from_bytes(c.to_vec()))
                .collect(),
        })
    }

    pub fn from_hex(s: &str) -> Result<Self, QldsError> {
        let bytes = hex::decode(s).map_err(|e| QldsError::Parse(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

impl fmt::Debug for QldsSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QldsSignature({} certs)", self.certs.len())
    }
}

pub fn qlds_gen(env: &mut QuantumEnv, params: QldsParams, owner: &Pid) -> QldsKey {
    let mut bolts = Vec::with_capacity(2 * params.n);
    let mut serial = Vec::with_capacity(params.serial_len());
    for _ in 0..2 * params.n {
        let (h, s) = env.gen_bolt(owner);
        bolts.push(h);
        serial.extend_from_slice(s.as_bytes());
    }
    QldsKey { bolts, serial }
}

/// Accepts iff every component verifies against its serial segment.
pub fn qlds_ver(env: &QuantumEnv, key: &QldsKey, serial: &[u8]) -> Result<bool, QldsError> {
    let segments = split_serial(serial, key.bolts.len())?;
    for (bolt, seg) in key.bolts.iter().zip(&segments) {
        if !env.verify_bolt(bolt, seg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Signs `msg`, measuring components in ascending bit order. Components measured
/// before a failure stay measured.
pub fn gen_sig(env: &mut QuantumEnv, key: &QldsKey, serial: &[u8], msg: &[u8]) -> Result<QldsSignature, QldsError> {
    let n = key.n();
    let segments = split_serial(serial, 2 * n)?;
    let bits = message_bits(n, msg);
    let mut certs = Vec::with_capacity(n);
    for index in consumed_indices(&bits) {
        let bolt = &key.bolts[index - 1];
        if !env.is_alive(bolt)? {
            return Err(QldsError::KeyExhausted { index });
        }
        certs.push(env.gen_certificate(bolt, &segments[index - 1])?);
    }
    Ok(QldsSignature { certs })
}

/// Stateless signature check against a `2n`-segment serial.
pub fn verify_sig(params: QldsParams, serial: &[u8], msg: &[u8], sig: &QldsSignature) -> Result<bool, QldsError> {
    let segments = split_serial(serial, 2 * params.n)?;
    if sig.certs.len() != params.n {
        return Err(QldsError::Parse(format!(
            "expected {} certificates, got {}",
            params.n,
            sig.certs.len()
        )));
    }
    let bits = message_bits(params.n, msg);
    Ok(consumed_indices(&bits)
        .into_iter()
        .zip(&sig.certs)
        .all(|(index, cert)| verify_certificate(&segments[index - 1], cert)))
}
