//! Variable groups and cross-group index bookkeeping.
//!
//! Indices are 0-based throughout the library; the 1-based convention used in
//! file formats and CLI output is applied only at I/O boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{IsaError, Result};

/// An ordered partition of `{0, .., d-1}` into `L >= 2` disjoint nonempty
/// groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    d: usize,
    group_of: Vec<usize>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, d: usize) -> Result<Self> {
        if groups.len() < 2 {
            return Err(IsaError::InvalidPartition(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        let mut group_of = vec![usize::MAX; d];
        let mut covered = 0usize;
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(IsaError::InvalidPartition(format!("group {g} is empty")));
            }
            for &j in members {
                if j >= d {
                    return Err(IsaError::InvalidPartition(format!(
                        "index {j} out of range for dimension {d}"
                    )));
                }
                if group_of[j] != usize::MAX {
                    return Err(IsaError::InvalidPartition(format!(
                        "index {j} appears in more than one group"
                    )));
                }
                group_of[j] = g;
                covered += 1;
            }
        }
        if covered != d {
            return Err(IsaError::InvalidPartition(format!(
                "groups cover {covered} of {d} indices"
            )));
        }
        Ok(Self { groups, d, group_of })
    }

    /// Contiguous groups of the given sizes: `[0..s0), [s0..s0+s1), ..`.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let d: usize = sizes.iter().sum();
        let mut groups = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &s in sizes {
            groups.push((start..start + s).collect());
            start += s;
        }
        Self::new(groups, d)
    }

    /// The two-group split `{0..d/2}, {d/2..d}` used by the simulation
    /// protocol. Requires even `d`.
    pub fn two_halves(d: usize) -> Result<Self> {
        if d < 2 || d % 2 != 0 {
            return Err(IsaError::InvalidPartition(format!(
                "two equal halves need an even dimension, got {d}"
            )));
        }
        Self::contiguous(&[d / 2, d / 2])
    }

    /// `L` contiguous groups with sizes as equal as possible.
    pub fn even_groups(d: usize, l: usize) -> Result<Self> {
        if l < 2 || l > d {
            return Err(IsaError::InvalidPartition(format!(
                "cannot split {d} variables into {l} groups"
            )));
        }
        let base = d / l;
        let extra = d % l;
        let sizes: Vec<usize> = (0..l).map(|g| base + usize::from(g < extra)).collect();
        Self::contiguous(&sizes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of groups `L`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, j: usize) -> usize {
        self.group_of[j]
    }

    /// All cross-group index pairs `(j, k)` with `group(j) < group(k)`,
    /// enumerated deterministically (group pairs in order, row-major within).
    pub fn inter_block_pairs(&self) -> Vec<InterBlockIndex> {
        let l = self.groups.len();
        let mut out = Vec::new();
        for a in 0..l {
            for b in (a + 1)..l {
                for &j in &self.groups[a] {
                    for &k in &self.groups[b] {
                        out.push(InterBlockIndex { j, k });
                    }
                }
            }
        }
        out
    }
}

/// A cross-group entry `(j, k)` of a `d x d` matrix, with `j` in the
/// lower-numbered group. 0-based; rendered 1-based at I/O boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InterBlockIndex {
    pub j: usize,
    pub k: usize,
}

impl InterBlockIndex {
    pub fn new(j: usize, k: usize, p: &GroupPartition) -> Result<Self> {
        if j >= p.d() || k >= p.d() {
            return Err(IsaError::DimensionMismatch(format!(
                "index ({j}, {k}) out of range for dimension {}",
                p.d()
            )));
        }
        if p.group_of(j) == p.group_of(k) {
            return Err(IsaError::InvalidArgument(format!(
                "({j}, {k}) lies within group {}; a cross-group pair is required",
                p.group_of(j)
            )));
        }
        if p.group_of(j) < p.group_of(k) {
            Ok(Self { j, k })
        } else {
            Ok(Self { j: k, k: j })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_group() {
        assert!(GroupPartition::new(vec![(0..4).collect()], 4).is_err());
    }

    #[test]
    fn rejects_overlap_and_gaps() {
        assert!(GroupPartition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(GroupPartition::new(vec![vec![0], vec![2]], 3).is_err());
    }

    #[test]
    fn accepts_non_contiguous_groups() {
        let p = GroupPartition::new(vec![vec![0, 2], vec![1, 3]], 4).unwrap();
        assert_eq!(p.group_of(2), 0);
        assert_eq!(p.group_of(3), 1);
    }

    #[test]
    fn even_groups_distribute_remainder() {
        let p = GroupPartition::even_groups(7, 3).unwrap();
        assert_eq!(p.group(0).len(), 3);
        assert_eq!(p.group(1).len(), 2);
        assert_eq!(p.group(2).len(), 2);
    }

    #[test]
    fn inter_block_pairs_two_groups() {
        let p = GroupPartition::two_halves(4).unwrap();
        let pairs = p.inter_block_pairs();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[0], InterBlockIndex { j: 0, k: 2 });
        assert_eq!(pairs[3], InterBlockIndex { j: 1, k: 3 });
    }

    #[test]
    fn inter_block_index_orients_by_group() {
        let p = GroupPartition::two_halves(4).unwrap();
        let ix = InterBlockIndex::new(3, 0, &p).unwrap();
        assert_eq!((ix.j, ix.k), (0, 3));
        assert!(InterBlockIndex::new(0, 1, &p).is_err());
    }
}
