//! Undirected simple networks and the topologies used by the experiments.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically. A
/// neighbour list is kept alongside for the O(degree) scans the dynamics need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(raw: NetworkJson) -> Result<Self> {
        Network::from_edges(raw.n, raw.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<Network> for NetworkJson {
    fn from(net: Network) -> Self {
        NetworkJson {
            n: net.n,
            edges: net.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl Network {
    /// Builds a network from an edge list. Pairs may be given in either orientation;
    /// self-loops, duplicates and out-of-range indices are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidSize("network needs at least one node".into()));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidNetwork(format!("self-loop at node {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidNetwork(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unchecked(n, list))
    }

    fn from_sorted_unchecked(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            neighbors,
        }
    }

    /// Complete network `K_n`.
    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("complete network needs n >= 1".into()));
        }
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Ok(Self::from_sorted_unchecked(n, edges))
    }

    /// Circulant network with connections at the given offsets (taken mod `n`, both
    /// directions).
    pub fn circulant(n: usize, offsets: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("circulant network needs n >= 1".into()));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for &off in offsets {
                let off = off % n;
                if off == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "circulant offset {off} is a multiple of n = {n}"
                    )));
                }
                let j = (i + off) % n;
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_unchecked(n, edges))
    }

    /// Ring network where every node is joined to its `d` nearest neighbours around
    /// the circle, `d / 2` on each side.
    pub fn wsg(n: usize, d: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "ring network needs n >= 3, got {n}"
            )));
        }
        if !d.is_multiple_of(2) || d < 2 || d > n - 1 {
            return Err(Error::InvalidParameter(format!(
                "degree d must be even with 2 <= d <= n - 1, got d = {d}, n = {n}"
            )));
        }
        let offsets: Vec<usize> = (1..=d / 2).collect();
        Self::circulant(n, &offsets)
    }

    /// The 3-regular 8-node circulant with offsets `{±1, 4}`: an 8-cycle plus its
    /// four diameters.
    pub fn eight_node_example() -> Self {
        Self::circulant(8, &[1, 4]).expect("valid circulant")
    }

    /// Star of `m` hexagonal rings: node 0 is the hub, ring `r` occupies nodes
    /// `1 + 6r ..= 6 + 6r`, and a single bridge joins the hub to the first node of
    /// each ring.
    pub fn ring_tree(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("ring-tree needs m >= 1".into()));
        }
        let n = 6 * m + 1;
        let mut edges = Vec::with_capacity(7 * m);
        for r in 0..m {
            let base = 1 + 6 * r;
            edges.push((0, base));
            for k in 0..6 {
                edges.push((base + k, base + (k + 1) % 6));
            }
        }
        Self::from_edges(n, edges)
    }

    /// Index of the node of ring `r` that carries the bridge to the hub.
    pub fn ring_tree_anchor(r: usize) -> usize {
        1 + 6 * r
    }

    /// Dense random network: start from `K_n` and delete edges in random order while
    /// both endpoints stay at degree `>= floor`. Deterministic per `seed`.
    pub fn random_min_degree(n: usize, floor: usize, seed: u64) -> Result<Self> {
        Self::random_min_degree_until(n, floor, seed, None)
    }

    /// As [`Network::random_min_degree`], stopping early once the edge count reaches
    /// `target_edges`.
    pub fn random_min_degree_until(
        n: usize,
        floor: usize,
        seed: u64,
        target_edges: Option<usize>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("random network needs n >= 1".into()));
        }
        if floor > n - 1 {
            return Err(Error::InvalidParameter(format!(
                "degree floor {floor} exceeds n - 1 = {}",
                n - 1
            )));
        }
        let complete = Self::complete(n)?;
        let mut candidates = complete.edges;
        // A skipped edge can never become removable later (degrees only fall), so one
        // pass over a uniform permutation is the same as repeatedly drawing a uniform
        // removable edge.
        candidates.shuffle(&mut sampling::stream_rng(seed, 0));
        let mut degree = vec![n - 1; n];
        let mut edge_count = n * (n - 1) / 2;
        let mut kept = Vec::with_capacity(edge_count);
        let mut remaining = candidates.into_iter();
        for (i, j) in remaining.by_ref() {
            if target_edges.is_some_and(|t| edge_count <= t) {
                kept.push((i, j));
                break;
            }
            if degree[i] > floor && degree[j] > floor {
                degree[i] -= 1;
                degree[j] -= 1;
                edge_count -= 1;
            } else {
                kept.push((i, j));
            }
        }
        kept.extend(remaining);
        kept.sort_unstable();
        Ok(Self::from_sorted_unchecked(n, kept))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    /// Graph Laplacian `D − A` as a dense row-major matrix.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; self.n]; self.n];
        for &(i, j) in &self.edges {
            l[i][j] -= 1.0;
            l[j][i] -= 1.0;
            l[i][i] += 1.0;
            l[j][j] += 1.0;
        }
        l
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidNetwork(e.to_string()))
    }
}
