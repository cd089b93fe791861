//! Merkle hash trees over banknote serial numbers.

use std::fmt;

use thiserror::Error;

use crate::hashing::{sha256, Digest32};

pub const NODE_TAG: &[u8] = b"QLNODE";
pub const MAX_DEPTH: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MerkleError {
    #[error("expected 2^{n} = {expected} leaves, got {got}")]
    LeafCount { n: u32, expected: usize, got: usize },
    #[error("depth {0} exceeds {MAX_DEPTH}")]
    Depth(u32),
    #[error("leaf index {index} out of range for depth {n}")]
    Index { index: u64, n: u32 },
    #[error("malformed path: {0}")]
    Parse(String),
}

pub fn node_hash(left: &Digest32, right: &Digest32) -> Digest32 {
    sha256(&[NODE_TAG, left, right])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    /// `levels[0]` holds the leaves; the last level holds the root alone.
    levels: Vec<Vec<Digest32>>,
}

impl MerkleTree {
    pub fn root(&self) -> Digest32 {
        self.levels.last().expect("non-empty")[0]
    }

    pub fn depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn leaves(&self) -> &[Digest32] {
        &self.levels[0]
    }
}

/// Which side of the running hash a sibling sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerklePath {
    pub index: u64,
    pub siblings: Vec<(Side, Digest32)>,
}

pub fn merkle_build(leaves: &[Digest32], n: u32) -> Result<MerkleTree, MerkleError> {
    if n > MAX_DEPTH {
        return Err(MerkleError::Depth(n));
    }
    let expected = 1usize << n;
    if leaves.len() != expected {
        return Err(MerkleError::LeafCount {
            n,
            expected,
            got: leaves.len(),
        });
    }
    let mut levels = vec![leaves.to_vec()];
    while levels.last().expect("non-empty").len() > 1 {
        let next = levels
            .last()
            .expect("non-empty")
            .chunks(2)
            .map(|p| node_hash(&p[0], &p[1]))
            .collect();
        levels.push(next);
    }
    Ok(MerkleTree { levels })
}

pub fn merkle_path(tree: &MerkleTree, index: u64) -> Result<MerklePath, MerkleError> {
    let n = tree.depth();
    if index >= 1u64 << n {
        return Err(MerkleError::Index { index, n });
    }
    let mut siblings = Vec::with_capacity(n as usize);
    let mut i = index as usize;
    for level in &tree.levels[..n as usize] {
        let side = if i.is_multiple_of(2) { Side::Right } else { Side::Left };
        siblings.push((side, level[i ^ 1]));
        i /= 2;
    }
    Ok(MerklePath { index, siblings })
}

/// Folds `leaf` up the path. The path must have exactly `n` steps whose sides match the index bits.
pub fn merkle_verify(root: &Digest32, n: u32, leaf: &Digest32, path: &MerklePath) -> bool {
    if path.siblings.len() != n as usize || n > MAX_DEPTH || path.index >= 1u64 << n {
        return false;
    }
    let mut acc = *leaf;
    for (k, (side, sib)) in path.siblings.iter().enumerate() {
        let expected = if path.index >> k & 1 == 0 {
            Side::Right
        } else {
            Side::Left
        };
        if *side != expected {
            return false;
        }
        acc = match side {
            Side::Right => node_hash(&acc, sib),
            Side::Left => node_hash(sib, &acc),
        };
    }
    acc == *root
}

impl fmt::Display for MerklePath {
    /// `<index>` then one `<side><hex>` field per level, tab-separated. Side 1 means the sibling is on the left.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)?;
        for (side, h) in &self.siblings {
            let s = match side {
                Side::Right => '0',
                Side::Left => '1',
            };
            write!(f, "\t{s}{}", hex::encode(h))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for MerklePath {
    type Err = MerkleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut fields = s.split('\t');
        let index = fields
            .next()
            .and_then(|i| i.parse().ok())
            .ok_or_else(|| MerkleError::Parse("missing index".into()))?;
        let mut siblings = Vec::new();
        for field in fields {
            let (side, h) = field
                .split_at_checked(1)
                .ok_or_else(|| MerkleError::Parse("empty step".into()))?;
            let side = match side {
                "0" => Side::Right,
                "1" => Side::Left,
                other => return Err(MerkleError::Parse(format!("bad side `{other}`"))),
            };
            let bytes = hex::decode(h).map_err(|e| MerkleError::Parse(e.to_string()))?;
            let h: Digest32 = bytes
                .try_into()
                .map_err(|_| MerkleError::Parse("sibling must be 32 bytes".into()))?;
            siblings.push((side, h));
        }
        Ok(MerklePath { index, siblings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaves(k: usize) -> Vec<Digest32> {
        (0..k as u32).map(|i| sha256(&[&i.to_be_bytes()])).collect()
    }

    #[test]
    fn four_leaves_hand_built() {
        let l = leaves(4);
        let tree = merkle_build(&l, 2).unwrap();
        let root = node_hash(&node_hash(&l[0], &l[1]), &node_hash(&l[2], &l[3]));
        assert_eq!(tree.root(), root);
        for i in 0..4 {
            let p = merkle_path(&tree, i).unwrap();
            assert!(merkle_verify(&root, 2, &l[i as usize], &p));
            assert!(!merkle_verify(&root, 2, &l[(i as usize + 1) % 4], &p));
            assert!(!merkle_verify(&root, 3, &l[i as usize], &p));
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            merkle_build(&leaves(3), 2),
            Err(MerkleError::LeafCount { .. })
        ));
        let tree = merkle_build(&leaves(1), 0).unwrap();
        assert_eq!(tree.root(), leaves(1)[0]);
        assert!(merkle_path(&tree, 1).is_err());
    }

    #[test]
    fn path_text_round_trip() {
        let tree = merkle_build(&leaves(8), 3).unwrap();
        let p = merkle_path(&tree, 5).unwrap();
        let text = p.to_string();
        assert!(text.starts_with("5\t1"));
        assert_eq!(text.parse::<MerklePath>().unwrap(), p);
        assert!("x\t0ab".parse::<MerklePath>().is_err());
    }
}
