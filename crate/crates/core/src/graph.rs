//! Superpixel graph construction.
//!
//! Each node links to the `k` spectrally closest nodes within `h` hops of the
//! spatial adjacency, symmetrised ("`i` picks `j` or `j` picks `i`"), with
//! unit weight. Summing these relations over `h = 1..=o` yields the integer
//! weighted adjacency fed to the network after the usual
//! `D^{-1/2}(A + I)D^{-1/2}` normalisation.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::math;
use crate::superpixel::{grid_neighbors, SuperpixelMap};

/// Symmetric, irreflexive neighbour lists (sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialAdjacency {
    pub neighbors: Vec<Vec<usize>>,
}

impl SpatialAdjacency {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }
}

/// Superpixels sharing a 4-connected pixel boundary.
pub fn spatial_adjacency(map: &SuperpixelMap) -> SpatialAdjacency {
    let mut neighbors = vec![Vec::new(); map.count()];
    for p in 0..map.assignment.len() {
        let a = map.assignment[p];
        // Right and down suffice to visit each pixel pair once.
        let [_, right, _, down] = grid_neighbors(map.width, map.height, p);
        for q in [right, down].into_iter().flatten() {
            let b = map.assignment[q];
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }
    SpatialAdjacency { neighbors }
}

/// Nodes at shortest-path distance `1..=h` from `j`, ascending.
pub fn hop_neighborhood(adj: &SpatialAdjacency, j: usize, h: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    hop_neighborhood_with(adj, j, h, &mut dist)
}

// `dist` is scratch space of length N, left all-MAX on return.
fn hop_neighborhood_with(adj: &SpatialAdjacency, j: usize, h: usize, dist: &mut [usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    dist[j] = 0;
    queue.push_back(j);
    while let Some(u) = queue.pop_front() {
        if dist[u] == h {
            continue;
        }
        for &v in &adj.neighbors[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    dist[j] = usize::MAX;
    for &v in &out {
        dist[v] = usize::MAX;
    }
    out.sort_unstable();
    out
}

/// Euclidean distance between attribute rows `i` and `j`.
pub fn pairwise_distance(x: &Matrix, i: usize, j: usize) -> f64 {
    math::sqrt(sq_dist(x.row(i), x.row(j)))
}

/// Binary relation as sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryAdjacency {
    pub neighbors: Vec<Vec<usize>>,
}

impl BinaryAdjacency {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }
}

/// The `k` nearest members of `candidates` to node `i` (ties → smaller id).
pub fn nearest_k(x: &Matrix, i: usize, candidates: &[usize], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&j| (sq_dist(x.row(i), x.row(j)), j))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, j)| j).collect()
}

/// `A^{h,k}`: `i ~ j` iff `j` is among the `k` nearest of `i`'s `h`-hop
/// neighbourhood, or the reverse.
pub fn topk_adjacency(adj: &SpatialAdjacency, x: &Matrix, h: usize, k: usize) -> Result<BinaryAdjacency> {
    if h == 0 || k == 0 {
        return Err(Error::InvalidParameter("h and k must be positive".into()));
    }
    if x.rows() != adj.len() {
        return Err(Error::Shape(format!(
            "{} attribute rows for {} nodes",
            x.rows(),
            adj.len()
        )));
    }
    let n = adj.len();
    let mut neighbors = vec![Vec::new(); n];
    let mut dist = vec![usize::MAX; n];
    for i in 0..n {
        let hood = hop_neighborhood_with(adj, i, h, &mut dist);
        for j in nearest_k(x, i, &hood, k) {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }
    Ok(BinaryAdjacency { neighbors })
}

/// Symmetric non-negative integer-weighted adjacency with zero diagonal.
/// Rows are sorted by column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedAdjacency {
    pub rows: Vec<Vec<(usize, u64)>>,
}

impl WeightedAdjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    /// Builds from unordered edges; repeated pairs accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Shape(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self loop at node {a}")));
            }
            if w == 0 {
                continue;
            }
            rows[a].push((b, w));
            rows[b].push((a, w));
        }
        for row in &mut rows {
            row.sort_unstable();
            let mut merged: Vec<(usize, u64)> = Vec::with_capacity(row.len());
            for &(j, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            *row = merged;
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> u64 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0,
        }
    }

    /// Unordered edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, w)| j != i && self.weight(j, i) == w))
    }
}

/// `A_o^k = Σ_{h=1..o} A^{h,k}`.
pub fn multiscale_sum(mats: &[BinaryAdjacency]) -> Result<WeightedAdjacency> {
    let n = mats.first().map_or(0, BinaryAdjacency::len);
    if mats.iter().any(|m| m.len() != n) {
        return Err(Error::Shape("adjacency scales differ in node count".into()));
    }
    let mut edges = Vec::new();
    for m in mats {
        for (i, row) in m.neighbors.iter().enumerate() {
            for &j in row {
                if i < j {
                    edges.push((i, j, 1));
                }
            }
        }
    }
    WeightedAdjacency::from_edges(n, &edges)
}

/// Node attributes and multi-scale adjacency of the superpixel graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpixelGraph {
    pub features: Matrix,
    pub adjacency: WeightedAdjacency,
    /// Pixel count per node; the partition balances these.
    pub node_weights: Vec<u64>,
    pub o: usize,
    pub k: usize,
}

impl SuperpixelGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// A graph with unit node weights and no attributes, for partitioning.
    pub fn from_adjacency(adjacency: WeightedAdjacency) -> Self {
        let n = adjacency.len();
        Self {
            features: Matrix::zeros(n, 0),
            adjacency,
            node_weights: vec![1; n],
            o: 0,
            k: 0,
        }
    }
}

/// Builds `A_o^k` over the spatial adjacency of `map`.
pub fn build_graph(map: &SuperpixelMap, features: Matrix, o: usize, k: usize) -> Result<SuperpixelGraph> {
    if o == 0 {
        return Err(Error::InvalidParameter("o must be positive".into()));
    }
    let spatial = spatial_adjacency(map);
    let scales = (1..=o)
        .map(|h| topk_adjacency(&spatial, &features, h, k))
        .collect::<Result<Vec<_>>>()?;
    let adjacency = multiscale_sum(&scales)?;
    Ok(SuperpixelGraph {
        features,
        adjacency,
        node_weights: map.sizes.iter().map(|&s| s as u64).collect(),
        o,
        k,
    })
}

/// `D^{-1/2}(A + I)D^{-1/2}` in sparse row form, diagonal included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAdjacency {
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Degrees of `A + I`.
    pub degrees: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// `self · m`
    pub fn mul(&self, m: &Matrix) -> Matrix {
        assert_eq!(self.len(), m.rows(), "sparse product dimension");
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (i, row) in self.rows.iter().enumerate() {
            let out_row = out.row_mut(i);
            for &(j, a) in row {
                for (o, &v) in out_row.iter_mut().zip(m.row(j)) {
                    *o += a * v;
                }
            }
        }
        out
    }

    /// `self · v` for a vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * v[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Symmetric permutation: new node `r` is old node `perm[r]`.
    pub fn permute(&self, perm: &[usize]) -> NormalizedAdjacency {
        let mut inv = vec![0; perm.len()];
        for (r, &old) in perm.iter().enumerate() {
            inv[old] = r;
        }
        let rows = perm
            .iter()
            .map(|&old| {
                let mut row: Vec<(usize, f64)> = self.rows[old].iter().map(|&(j, a)| (inv[j], a)).collect();
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        NormalizedAdjacency {
            rows,
            degrees: perm.iter().map(|&old| self.degrees[old]).collect(),
        }
    }
}

pub fn normalize(a: &WeightedAdjacency) -> NormalizedAdjacency {
    let degrees: Vec<f64> = a
        .rows
        .iter()
        .map(|row| 1.0 + row.iter().map(|&(_, w)| w as f64).sum::<f64>())
        .collect();
    let rows = a
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = Vec::with_capacity(row.len() + 1);
            let mut diag_done = false;
            for &(j, w) in row {
                if !diag_done && j > i {
                    out.push((i, 1.0 / degrees[i]));
                    diag_done = true;
                }
                out.push((j, w as f64 / math::sqrt(degrees[i] * degrees[j])));
            }
            if !diag_done {
                out.push((i, 1.0 / degrees[i]));
            }
            out
        })
        .collect();
    NormalizedAdjacency { rows, degrees }
}
