//! Tagged SHA-256 helpers and a digest-backed [`Hasher`] used for state fingerprints.

use std::hash::{Hash, Hasher};

use sha2::{Digest, Sha256};

/// Domain tag for bolt serial numbers.
pub const BOLT_TAG: &[u8] = b"QLBOLT";
/// Domain tag for lost-claim commitments.
pub const COMMIT_TAG: &[u8] = b"QLCOMMIT";
/// Domain tag for Merkle internal nodes.
pub const NODE_TAG: &[u8] = b"QLNODE";

pub type Digest32 = [u8; 32];

/// SHA-256 over the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> Digest32 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// SHA-256 of `tag ‖ data`.
pub fn tagged(tag: &[u8], data: &[u8]) -> Digest32 {
    sha256(&[tag, data])
}

/// Feeds `std::hash::Hash` output into SHA-256 so that any `Hash` value can be
/// fingerprinted with a full 256-bit digest. Only stable within one build, which
/// is all replay comparisons need.
#[derive(Default)]
pub struct DigestHasher(Sha256);

impl DigestHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn digest(self) -> Digest32 {
        self.0.finalize().into()
    }
}

impl Hasher for DigestHasher {
    fn finish(&self) -> u64 {
        let d: Digest32 = self.0.clone().finalize().into();
        u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
    }

    fn write(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
}

/// 256-bit fingerprint of any hashable value.
pub fn fingerprint<T: Hash + ?Sized>(value: &T) -> Digest32 {
    let mut h = DigestHasher::new();
    value.hash(&mut h);
    h.digest()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_is_prefix_concatenation() {
        assert_eq!(tagged(b"QLBOLT", b"abc"), sha256(&[b"QLBOLTabc"]));
    }

    #[test]
    fn known_vector() {
        // SHA-256("abc")
        assert_eq!(
            hex::encode(sha256(&[b"abc"])),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn fingerprint_distinguishes_values() {
        assert_ne!(fingerprint(&(1u64, 2u64)), fingerprint(&(2u64, 1u64)));
        assert_eq!(fingerprint("x"), fingerprint("x"));
    }
}
