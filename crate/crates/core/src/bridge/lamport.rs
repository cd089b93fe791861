//! Lamport one-time signatures over SHA-256.

use rand::RngCore;

use crate::hashing::{sha256, Digest32};

use super::{SignError, SignatureScheme};

const BITS: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Lamport;

pub struct LamportSigningKey {
    preimages: Vec<[Digest32; 2]>,
    used: bool,
}

impl std::fmt::Debug for LamportSigningKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LamportSigningKey").field("used", &self.used).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LamportVerifyingKey {
    hashes: Vec<[Digest32; 2]>,
}

impl LamportVerifyingKey {
    pub fn fingerprint(&self) -> Digest32 {
        let flat: Vec<u8> = self.hashes.iter().flat_map(|p| p.iter().flatten().copied()).collect();
        sha256(&[&flat])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LamportSignature(Vec<Digest32>);

fn bit(digest: &Digest32, i: usize) -> usize {
    usize::from(digest[i / 8] >> (7 - i % 8) & 1)
}

impl SignatureScheme for Lamport {
    type SigningKey = LamportSigningKey;
    type VerifyingKey = LamportVerifyingKey;
    type Signature = LamportSignature;

    fn keygen<R: RngCore>(&self, rng: &mut R) -> (LamportSigningKey, LamportVerifyingKey) {
        let mut preimages = Vec::with_capacity(BITS);
        for _ in 0..BITS {
            let mut pair = [[0u8; 32]; 2];
            rng.fill_bytes(&mut pair[0]);
            rng.fill_bytes(&mut pair[1]);
            preimages.push(pair);
        }
        let hashes = preimages.iter().map(|[a, b]| [sha256(&[a]), sha256(&[b])]).collect();
        (
            LamportSigningKey { preimages, used: false },
            LamportVerifyingKey { hashes },
        )
    }

    fn sign(&self, sk: &mut LamportSigningKey, msg: &[u8]) -> Result<LamportSignature, SignError> {
        if sk.used {
            return Err(SignError::KeyUsed);
        }
        sk.used = true;
        let h = sha256(&[msg]);
        Ok(LamportSignature(
            (0..BITS).map(|i| sk.preimages[i][bit(&h, i)]).collect(),
        ))
    }

    fn verify(&self, vk: &LamportVerifyingKey, msg: &[u8], sig: &LamportSignature) -> bool {
        if sig.0.len() != BITS || vk.hashes.len() != BITS {
            return false;
        }
        let h = sha256(&[msg]);
        (0..BITS).all(|i| sha256(&[&sig.0[i]]) == vk.hashes[i][bit(&h, i)])
    }

    fn signature_bytes(&self, sig: &LamportSignature) -> Vec<u8> {
        sig.0.concat()
    }

    fn parse_signature(&self, bytes: &[u8]) -> Option<LamportSignature> {
        if bytes.len() != BITS * 32 {
            return None;
        }
        Some(LamportSignature(
            bytes.chunks(32).map(|c| c.try_into().expect("32-byte chunk")).collect(),
        ))
    }
}
