//! Interaction digraph: adjacency, strong connectivity, shortest-path depth.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid adjacency matrix: {0}")]
    InvalidMatrix(String),
    #[error("depth undefined: digraph is not strongly connected")]
    DepthUndefined,
}

/// Directed interaction graph on `n` agents.
///
/// `chi(i, j) == 1` means agent `j` transmits information to agent `i`;
/// row `i` of the adjacency matrix lists the in-influencers of `i`. Self
/// loops are excluded, so the diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    chi: Vec<u8>,
}

/// Requested digraph family, mirroring the scenario config.
#[derive(Debug, Clone, PartialEq)]
pub enum DigraphKind {
    Complete { n: usize },
    Ring { n: usize },
    Custom { matrix: Vec<Vec<u8>> },
    Random { n: usize, edge_prob: f64, seed: u64 },
}

/// Build a digraph of the requested family.
///
/// Random generation embeds a directed ring first and then adds arcs with
/// probability `edge_prob`, so the result is always strongly connected.
pub fn make_digraph(kind: DigraphKind) -> Result<Digraph, TopologyError> {
    match kind {
        DigraphKind::Complete { n } => Digraph::complete(n),
        DigraphKind::Ring { n } => Digraph::ring(n),
        DigraphKind::Custom { matrix } => Digraph::from_matrix(matrix),
        DigraphKind::Random { n, edge_prob, seed } => Digraph::random(n, edge_prob, seed),
    }
}

impl Digraph {
    pub fn from_matrix(rows: Vec<Vec<u8>>) -> Result<Self, TopologyError> {
        let n = rows.len();
        if n < 2 {
            return Err(TopologyError::InvalidMatrix(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        let mut chi = vec![0u8; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TopologyError::InvalidMatrix(format!(
                    "row {i} has length {} in a {n}x{n} matrix",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(TopologyError::InvalidMatrix(format!(
                        "entry ({i},{j}) is {v}; entries must be 0 or 1"
                    )));
                }
                if i == j && v != 0 {
                    return Err(TopologyError::InvalidMatrix(format!(
                        "self loop at vertex {i}"
                    )));
                }
                chi[i * n + j] = v;
            }
        }
        Ok(Digraph { n, chi })
    }

    pub fn complete(n: usize) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::InvalidMatrix(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        let mut chi = vec![1u8; n * n];
        for i in 0..n {
            chi[i * n + i] = 0;
        }
        Ok(Digraph { n, chi })
    }

    /// Directed ring where agent `i` is influenced by agent `(i + 1) mod n`.
    pub fn ring(n: usize) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::InvalidMatrix(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        let mut chi = vec![0u8; n * n];
        for i in 0..n {
            chi[i * n + (i + 1) % n] = 1;
        }
        Ok(Digraph { n, chi })
    }

    pub fn random(n: usize, edge_prob: f64, seed: u64) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::InvalidMatrix(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(TopologyError::InvalidMatrix(format!(
                "edge_prob must lie in (0, 1], got {edge_prob}"
            )));
        }
        let mut g = Self::ring(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            for j in 0..n {
                if i == j || g.chi[i * n + j] == 1 {
                    continue;
                }
                if rng.gen::<f64>() < edge_prob {
                    g.chi[i * n + j] = 1;
                }
            }
        }
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn chi(&self, i: usize, j: usize) -> u8 {
        self.chi[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| this_row(&self.chi, self.n, i))
            .collect()
    }

    /// In-influencers of `i` (the vertices whose state `i` reads).
    pub fn influencers(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        (0..n).filter(move |&j| self.chi[i * n + j] == 1)
    }

    /// Breadth-first distances from `src` along arcs `(u, v)` with
    /// `chi(u, v) == 1`, i.e. hopping from a vertex to its influencers.
    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for v in self.influencers(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// True iff every vertex is reachable from every other vertex.
    pub fn strongly_connected(&self) -> bool {
        (0..self.n).all(|i| self.bfs(i).iter().all(Option::is_some))
    }

    /// Neighbor sets, cardinalities, all-pairs distances and the depth.
    ///
    /// Errors with `DepthUndefined` when the digraph is not strongly
    /// connected, since the depth is only finite in that case.
    pub fn neighbor_summary(&self) -> Result<NeighborSummary, TopologyError> {
        let n = self.n;
        let neighbor_sets: Vec<Vec<usize>> = (0..n).map(|i| self.influencers(i).collect()).collect();
        let cardinalities: Vec<usize> = neighbor_sets.iter().map(Vec::len).collect();
        let dist: Vec<Vec<Option<usize>>> = (0..n).map(|i| self.bfs(i)).collect();
        let mut depth = 0usize;
        for row in &dist {
            for d in row {
                match d {
                    Some(d) => depth = depth.max(*d),
                    None => return Err(TopologyError::DepthUndefined),
                }
            }
        }
        Ok(NeighborSummary {
            neighbor_sets,
            cardinalities,
            depth,
            dist,
        })
    }
}

fn this_row(chi: &[u8], n: usize, i: usize) -> Vec<u8> {
    chi[i * n..(i + 1) * n].to_vec()
}

/// Neighbor structure of a strongly connected digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSummary {
    /// Per-vertex set of in-influencers.
    pub neighbor_sets: Vec<Vec<usize>>,
    /// Per-vertex in-neighbor counts.
    pub cardinalities: Vec<usize>,
    /// Maximum over ordered vertex pairs of the shortest-path length.
    pub depth: usize,
    /// `dist[i][j]` is the shortest-path length from `i` to `j`; `None`
    /// marks an unreachable pair.
    pub dist: Vec<Vec<Option<usize>>>,
}
