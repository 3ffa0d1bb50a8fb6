//! Undirected independence structures over `n` variables.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// Largest node count accepted from structure files.
pub const DEFAULT_MAX_NODES: usize = 512;

/// Largest node count for which full enumeration is allowed (2^15 structures).
pub const MAX_ENUMERATION_NODES: usize = 6;

/// Undirected graph stored as one adjacency bitset per node.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Structure {
    adj: Vec<NodeSet>,
}

impl Structure {
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![NodeSet::new(n); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for (x, y) in all_pairs(n) {
            g.set_edge(x, y, true);
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(x, y) in edges {
            g.check_pair(x, y)?;
            g.set_edge(x, y, true);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    fn check_node(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            return Err(Error::NodeOutOfRange { node: x, n: self.n() });
        }
        Ok(())
    }

    fn check_pair(&self, x: usize, y: usize) -> Result<()> {
        self.check_node(x)?;
        self.check_node(y)?;
        if x == y {
            return Err(Error::InvalidPair {
                x,
                y,
                reason: "self-loops are not allowed",
            });
        }
        Ok(())
    }

    /// Neighbors of `x`.
    pub fn blanket(&self, x: usize) -> Result<&NodeSet> {
        self.check_node(x)?;
        Ok(&self.adj[x])
    }

    #[inline]
    pub(crate) fn neighbors(&self, x: usize) -> &NodeSet {
        &self.adj[x]
    }

    #[inline]
    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        x < self.n() && self.adj[x].contains(y)
    }

    pub(crate) fn set_edge(&mut self, x: usize, y: usize, present: bool) {
        if present {
            self.adj[x].insert(y);
            self.adj[y].insert(x);
        } else {
            self.adj[x].remove(y);
            self.adj[y].remove(x);
        }
    }

    /// Toggles edge `(x, y)` in place.
    pub fn flip_in_place(&mut self, x: usize, y: usize) -> Result<()> {
        self.check_pair(x, y)?;
        self.adj[x].toggle(y);
        self.adj[y].toggle(x);
        Ok(())
    }

    /// A copy of this structure with edge `(x, y)` added if absent or removed if present.
    pub fn flip_edge(&self, x: usize, y: usize) -> Result<Structure> {
        let mut g = self.clone();
        g.flip_in_place(x, y)?;
        Ok(g)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(NodeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&j| j > i).map(move |j| (i, j)))
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adj[x].len()
    }

    /// Whether every path between `x` and `y` passes through `z`.
    pub fn u_separated(&self, x: usize, y: usize, z: &[usize]) -> Result<bool> {
        self.check_pair(x, y)?;
        let mut blocked = NodeSet::new(self.n());
        for &w in z {
            self.check_node(w)?;
            if w == x || w == y {
                return Err(Error::InvalidPair {
                    x,
                    y,
                    reason: "separating set contains an endpoint",
                });
            }
            blocked.insert(w);
        }
        Ok(!self.reachable_avoiding(x, y, &blocked))
    }

    fn reachable_avoiding(&self, from: usize, to: usize, blocked: &NodeSet) -> bool {
        let mut seen = blocked.clone();
        seen.insert(from);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for v in self.adj[u].iter() {
                if v == to {
                    return true;
                }
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        false
    }

    pub fn to_file_format(&self) -> StructureFile {
        StructureFile {
            n: self.n(),
            edges: self.edges().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file_format()).expect("structure serializes");
        s.push('\n');
        s
    }

    /// Parses the structure file format. Edges must satisfy `i < j < n`, be
    /// sorted lexicographically and contain no duplicates.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StructureFile = serde_json::from_str(text).map_err(|e| Error::StructureFormat(e.to_string()))?;
        Self::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Serialized form of a [`Structure`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<StructureFile> for Structure {
    type Error = Error;

    fn try_from(file: StructureFile) -> Result<Self> {
        if file.n > DEFAULT_MAX_NODES {
            return Err(Error::StructureFormat(format!(
                "n = {} exceeds the limit of {DEFAULT_MAX_NODES}",
                file.n
            )));
        }
        let mut g = Structure::empty(file.n);
        let mut prev: Option<[usize; 2]> = None;
        for e in file.edges {
            let [i, j] = e;
            if i >= j || j >= file.n {
                return Err(Error::StructureFormat(format!(
                    "edge [{i}, {j}] must satisfy i < j < {}",
                    file.n
                )));
            }
            if prev.is_some_and(|p| p >= e) {
                return Err(Error::StructureFormat(format!(
                    "edge [{i}, {j}] is duplicated or out of lexicographic order"
                )));
            }
            prev = Some(e);
            g.set_edge(i, j, true);
        }
        Ok(g)
    }
}

/// Unordered pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Number of unordered pairs on which the two edge sets differ.
pub fn hamming(a: &Structure, b: &Structure) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    let twice: usize = a
        .adj
        .iter()
        .zip(&b.adj)
        .map(|(ra, rb)| ra.symmetric_difference_len(rb))
        .sum();
    Ok(twice / 2)
}

/// Every structure over `n` nodes. Structure `k` contains pair `p` (in
/// lexicographic pair order) iff bit `p` of `k` is set.
pub fn enumerate_structures(n: usize) -> Result<StructureIter> {
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::InvalidArgument(format!(
            "enumeration limited to n <= {MAX_ENUMERATION_NODES}, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = all_pairs(n).collect();
    Ok(StructureIter {
        n,
        total: 1u64 << pairs.len(),
        pairs,
        next: 0,
    })
}

/// Structure with index `k` in the enumeration order of [`enumerate_structures`].
pub fn structure_from_index(n: usize, k: u64) -> Structure {
    let mut g = Structure::empty(n);
    for (p, (x, y)) in all_pairs(n).enumerate() {
        if k >> p & 1 == 1 {
            g.set_edge(x, y, true);
        }
    }
    g
}

pub struct StructureIter {
    n: usize,
    pairs: Vec<(usize, usize)>,
    total: u64,
    next: u64,
}

impl Iterator for StructureIter {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        if self.next >= self.total {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let mut g = Structure::empty(self.n);
        for (p, &(x, y)) in self.pairs.iter().enumerate() {
            if k >> p & 1 == 1 {
                g.set_edge(x, y, true);
            }
        }
        Some(g)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for StructureIter {}
