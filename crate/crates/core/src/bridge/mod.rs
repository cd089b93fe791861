//! Bitcoin-facing encodings: the minting message, denomination splitting and
//! Merkle-tree compression of many serials into one on-ledger record.

pub mod lamport;
pub mod merkle;

use rand::RngCore;
use thiserror::Error;

use crate::lightning::{BoltHandle, QuantumEnv, SerialNumber};
use crate::pid::Pid;

pub use lamport::{Lamport, LamportSignature, LamportSigningKey, LamportVerifyingKey};
pub use merkle::{merkle_build, merkle_path, merkle_verify, MerkleError, MerklePath, MerkleTree, Side};

pub const OPCODE: &[u8] = b"OP_BITCOIN_TO_QUANTUM_MONEY";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignError {
    #[error("one-time key already used")]
    KeyUsed,
}

/// Key generation, signing and verification.
pub trait SignatureScheme {
    type SigningKey;
    type VerifyingKey;
    type Signature: Clone + PartialEq + std::fmt::Debug;

    fn keygen<R: RngCore>(&self, rng: &mut R) -> (Self::SigningKey, Self::VerifyingKey);
    fn sign(&self, sk: &mut Self::SigningKey, msg: &[u8]) -> Result<Self::Signature, SignError>;
    fn verify(&self, vk: &Self::VerifyingKey, msg: &[u8], sig: &Self::Signature) -> bool;
    fn signature_bytes(&self, sig: &Self::Signature) -> Vec<u8>;
    fn parse_signature(&self, bytes: &[u8]) -> Option<Self::Signature>;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BridgeError {
    #[error("signature does not verify")]
    BadSignature,
    #[error("value {y} is not below the key balance {x}")]
    ValueTooLarge { y: u64, x: u64 },
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("value {y} is not divisible into 2^{n} notes")]
    NotDivisible { y: u64, n: u32 },
    #[error(transparent)]
    Sign(#[from] SignError),
    #[error(transparent)]
    Merkle(#[from] MerkleError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeMessage<S: SignatureScheme> {
    pub payload: Vec<u8>,
    pub value: u64,
    pub signature: S::Signature,
}

/// `OPCODE ‖ 0x00 ‖ payload ‖ 0x00 ‖ y` (8 bytes, big-endian): the signed part.
pub fn signed_bytes(payload: &[u8], value: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(OPCODE.len() + payload.len() + 10);
    out.extend_from_slice(OPCODE);
    out.push(0);
    out.extend_from_slice(payload);
    out.push(0);
    out.extend_from_slice(&value.to_be_bytes());
    out
}

impl<S: SignatureScheme> BridgeMessage<S> {
    /// Signed part followed by the signature bytes.
    pub fn encode(&self, scheme: &S) -> Vec<u8> {
        let mut out = signed_bytes(&self.payload, self.value);
        out.extend(scheme.signature_bytes(&self.signature));
        out
    }

    pub fn to_hex(&self, scheme: &S) -> String {
        hex::encode(self.encode(scheme))
    }

    /// Inverse of `encode` for a payload of known length.
    pub fn decode(scheme: &S, bytes: &[u8], payload_len: usize) -> Result<Self, BridgeError> {
        let head = OPCODE.len() + 1;
        let signed_len = head + payload_len + 1 + 8;
        if bytes.len() < signed_len || &bytes[..OPCODE.len()] != OPCODE || bytes[OPCODE.len()] != 0 {
            return Err(BridgeError::Malformed("bad opcode header".into()));
        }
        if bytes[head + payload_len] != 0 {
            return Err(BridgeError::Malformed("missing payload separator".into()));
        }
        let payload = bytes[head..head + payload_len].to_vec();
        let value = u64::from_be_bytes(bytes[signed_len - 8..signed_len].try_into().expect("8 bytes"));
        let signature = scheme
            .parse_signature(&bytes[signed_len..])
            .ok_or_else(|| BridgeError::Malformed("bad signature encoding".into()))?;
        Ok(BridgeMessage {
            payload,
            value,
            signature,
        })
    }
}

pub fn encode_bridge_message<S: SignatureScheme>(
    scheme: &S,
    sk: &mut S::SigningKey,
    payload: &[u8],
    value: u64,
) -> Result<BridgeMessage<S>, BridgeError> {
    let signature = scheme.sign(sk, &signed_bytes(payload, value))?;
    Ok(BridgeMessage {
        payload: payload.to_vec(),
        value,
        signature,
    })
}

/// Accepts when the signature verifies and the value is strictly below the key's balance `x`.
pub fn verify_bridge_message<S: SignatureScheme>(
    scheme: &S,
    vk: &S::VerifyingKey,
    msg: &BridgeMessage<S>,
    x: u64,
) -> Result<(), BridgeError> {
    if !scheme.verify(vk, &signed_bytes(&msg.payload, msg.value), &msg.signature) {
        return Err(BridgeError::BadSignature);
    }
    if msg.value >= x {
        return Err(BridgeError::ValueTooLarge { y: msg.value, x });
    }
    Ok(())
}

/// Stand-in for the external chain: an append-only list of published messages.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BridgeLedger {
    records: Vec<Vec<u8>>,
    bytes: u64,
}

impl BridgeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&mut self, record: Vec<u8>) {
        self.bytes += record.len() as u64;
        self.records.push(record);
    }

    pub fn writes(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn records(&self) -> &[Vec<u8>] {
        &self.records
    }
}

#[derive(Debug)]
pub struct BridgeNote {
    pub bolt: BoltHandle,
    pub serial: SerialNumber,
    pub path: MerklePath,
    pub value: u64,
}

#[derive(Debug)]
pub struct Split<S: SignatureScheme> {
    pub notes: Vec<BridgeNote>,
    pub tree: MerkleTree,
    pub message: BridgeMessage<S>,
    pub n: u32,
}

/// Mints `2^n` bolts worth `y / 2^n` each and publishes one message signing their Merkle root.
pub fn split_denominations<S: SignatureScheme>(
    env: &mut QuantumEnv,
    scheme: &S,
    sk: &mut S::SigningKey,
    owner: &Pid,
    y: u64,
    n: u32,
    chain: &mut BridgeLedger,
) -> Result<Split<S>, BridgeError> {
    if n > merkle::MAX_DEPTH {
        return Err(MerkleError::Depth(n).into());
    }
    let count = 1u64 << n;
    if !y.is_multiple_of(count) {
        return Err(BridgeError::NotDivisible { y, n });
    }
    let bolts: Vec<(BoltHandle, SerialNumber)> = (0..count).map(|_| env.gen_bolt(owner)).collect();
    let leaves: Vec<_> = bolts.iter().map(|(_, s)| s.0).collect();
    let tree = merkle_build(&leaves, n)?;
    let mut payload = tree.root().to_vec();
    payload.extend_from_slice(&n.to_be_bytes());
    let message = encode_bridge_message(scheme, sk, &payload, y)?;
    chain.publish(message.encode(scheme));
    let notes = bolts
        .into_iter()
        .enumerate()
        .map(|(i, (bolt, serial))| {
            Ok(BridgeNote {
                bolt,
                serial,
                path: merkle_path(&tree, i as u64)?,
                value: y / count,
            })
        })
        .collect::<Result<_, MerkleError>>()?;
    Ok(Split {
        notes,
        tree,
        message,
        n,
    })
}

/// Payload of a split message: the 32-byte root followed by `n` as 4 big-endian bytes.
pub fn parse_root_payload(payload: &[u8]) -> Option<([u8; 32], u32)> {
    if payload.len() != 36 {
        return None;
    }
    let root = payload[..32].try_into().ok()?;
    let n = u32::from_be_bytes(payload[32..].try_into().ok()?);
    Some((root, n))
}

/// A split note is valid when its serial is in the signed tree and its bolt verifies.
pub fn verify_bridge_note<S: SignatureScheme>(env: &QuantumEnv, message: &BridgeMessage<S>, note: &BridgeNote) -> bool {
    let Some((root, n)) = parse_root_payload(&message.payload) else {
        return false;
    };
    merkle_verify(&root, n, &note.serial.0, &note.path) && env.verify_bolt(&note.bolt, &note.serial).unwrap_or(false)
}
