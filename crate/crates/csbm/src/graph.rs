//! Sparse undirected graphs in compressed-row form with a directed-edge index.
//!
//! Each unordered edge {i, j} is stored twice, once per direction. The
//! directed id of (i -> j) is its position in the flattened adjacency array,
//! and `reverse` maps it to the id of (j -> i). Message-passing code indexes
//! per-directed-edge state by these ids and walks a node's incoming messages
//! through its adjacency slice.

use crate::error::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    reverse: Vec<u32>,
}

impl SparseGraph {
    /// Builds a graph from unordered edges. Rejects self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut degree = vec![0u32; n];
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut neighbors = vec![0u32; 2 * edges.len()];
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        for &(a, b) in edges {
            neighbors[cursor[a as usize] as usize] = b;
            cursor[a as usize] += 1;
            neighbors[cursor[b as usize] as usize] = a;
            cursor[b as usize] += 1;
        }
        // sort each adjacency slice so lookups can bisect
        for i in 0..n {
            let s = offsets[i] as usize;
            let e = offsets[i + 1] as usize;
            neighbors[s..e].sort_unstable();
            if neighbors[s..e].windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge incident to node {i}"
                )));
            }
        }
        let mut reverse = vec![0u32; neighbors.len()];
        for i in 0..n {
            let s = offsets[i] as usize;
            let e = offsets[i + 1] as usize;
            for (pos, &j) in neighbors[s..e].iter().enumerate() {
                let js = offsets[j as usize] as usize;
                let je = offsets[j as usize + 1] as usize;
                let back = neighbors[js..je]
                    .binary_search(&(i as u32))
                    .expect("reverse edge present by construction");
                reverse[s + pos] = (js + back) as u32;
            }
        }
        Ok(Self {
            n,
            offsets,
            neighbors,
            reverse,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of directed edges (= 2 * n_edges); the size of message arrays.
    pub fn n_directed(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        (self.offsets[i + 1] - self.offsets[i]) as usize
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.len() as f64 / self.n as f64
    }

    /// Neighbors of node `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Range of directed-edge ids leaving node `i`; id `k` in this range
    /// points at `self.neighbors(i)[k - range.start]`.
    pub fn out_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i] as usize..self.offsets[i + 1] as usize
    }

    /// Directed id of the opposite direction of directed edge `e`.
    #[inline]
    pub fn reverse_id(&self, e: usize) -> usize {
        self.reverse[e] as usize
    }

    /// Target node of directed edge `e`.
    #[inline]
    pub fn head(&self, e: usize) -> usize {
        self.neighbors[e] as usize
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Undirected edges as (i, j) with i < j.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| (i as u32) < j)
                .map(move |&j| (i as u32, j))
        })
    }

    /// Directed edges as (tail, head, dir_id).
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.out_range(i)
                .map(move |e| (i, self.neighbors[e] as usize, e))
        })
    }

    /// Uniform random labelled tree on `n` nodes via a random Pruefer sequence.
    pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1);
        if n == 1 {
            return Self::from_edges(1, &[]).unwrap();
        }
        if n == 2 {
            return Self::from_edges(2, &[(0, 1)]).unwrap();
        }
        let pruefer: Vec<u32> = (0..n - 2).map(|_| rng.random_range(0..n as u32)).collect();
        let mut deg = vec![1u32; n];
        for &p in &pruefer {
            deg[p as usize] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        // leaf = smallest index of degree 1, maintained with a scan pointer
        let mut ptr = 0usize;
        while deg[ptr] != 1 {
            ptr += 1;
        }
        let mut leaf = ptr;
        for &p in &pruefer {
            edges.push((leaf as u32, p));
            deg[p as usize] -= 1;
            if deg[p as usize] == 1 && (p as usize) < ptr {
                leaf = p as usize;
            } else {
                ptr += 1;
                while deg[ptr] != 1 {
                    ptr += 1;
                }
                leaf = ptr;
            }
        }
        let last = (leaf as u32, (n - 1) as u32);
        edges.push(last);
        Self::from_edges(n, &edges).expect("pruefer construction yields a simple tree")
    }

    /// Verifies symmetry and absence of self-loops by direct scan.
    pub fn check_simple(&self) -> bool {
        for (i, j, e) in self.directed_edges() {
            if i == j {
                return false;
            }
            let r = self.reverse_id(e);
            if self.head(r) != i || self.reverse_id(r) != e {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn builds_csr_and_reverse_index() {
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(g.n_edges(), 4);
        assert_eq!(g.n_directed(), 8);
        assert_eq!(g.neighbors(0), &[1, 3]);
        assert_eq!(g.degree(2), 2);
        assert!(g.check_simple());
        for (i, _, e) in g.directed_edges() {
            assert_eq!(g.head(g.reverse_id(e)), i);
        }
        assert!(g.has_edge(0, 3));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(SparseGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(SparseGraph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(SparseGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn random_tree_is_a_tree() {
        let mut rng = stream(7, "tree");
        for n in [1usize, 2, 3, 8, 14, 50] {
            let g = SparseGraph::random_tree(n, &mut rng);
            assert_eq!(g.n_edges(), n.saturating_sub(1));
            assert!(g.check_simple());
            if n > 1 {
                // connectivity: BFS reaches all nodes
                let mut seen = vec![false; n];
                let mut stack = vec![0usize];
                seen[0] = true;
                while let Some(i) = stack.pop() {
                    for &j in g.neighbors(i) {
                        if !seen[j as usize] {
                            seen[j as usize] = true;
                            stack.push(j as usize);
                        }
                    }
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
    }
}
