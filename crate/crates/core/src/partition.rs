//! Multilevel graph partitioning and sub-graph induction.
//!
//! `c`-way partitions come from recursive bisection. Each bisection coarsens
//! the graph by heavy-edge matching, bisects the coarsest graph by greedy
//! region growing, then projects back level by level with boundary
//! Fiduccia–Mattheyses refinement. Balance is measured on node weights
//! (superpixel pixel counts).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize, NormalizedAdjacency, SuperpixelGraph, WeightedAdjacency};
use crate::linalg::Matrix;
use crate::math;
use crate::superpixel::NodeLabels;

const MAX_FM_PASSES: usize = 10;
const FM_STALL_MOVES: usize = 64;
const INITIAL_TRIALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionAssignment {
    pub part: Vec<usize>,
    pub c: usize,
    /// Balance tolerance actually met; exceeds the requested one when the
    /// node weights made it infeasible.
    pub eps_used: f64,
}

impl PartitionAssignment {
    pub fn trivial(n: usize) -> Self {
        Self {
            part: vec![0; n],
            c: 1,
            eps_used: 0.0,
        }
    }

    /// Validates an externally supplied assignment; `eps_used` is left at 0
    /// since node weights are unknown here.
    pub fn from_parts(part: Vec<usize>, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidParameter("cluster count must be positive".into()));
        }
        let mut seen = vec![false; c];
        for (i, &p) in part.iter().enumerate() {
            if p >= c {
                return Err(Error::InvalidParameter(format!(
                    "node {i} assigned to cluster {p} of {c}"
                )));
            }
            seen[p] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("cluster {empty} is empty")));
        }
        Ok(Self {
            part,
            c,
            eps_used: 0.0,
        })
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.c];
        for (i, &p) in self.part.iter().enumerate() {
            out[p].push(i);
        }
        out
    }

    pub fn part_weights(&self, node_weights: &[u64]) -> Vec<u64> {
        let mut w = vec![0; self.c];
        for (i, &p) in self.part.iter().enumerate() {
            w[p] += node_weights[i];
        }
        w
    }

    /// `max_i w_i / (W/c) − 1`.
    pub fn imbalance(&self, node_weights: &[u64]) -> f64 {
        let w = self.part_weights(node_weights);
        let total: u64 = w.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let ideal = total as f64 / self.c as f64;
        w.iter().copied().max().unwrap_or(0) as f64 / ideal - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    pub c: usize,
    pub eps: f64,
    pub seed: u64,
}

/// Diagnostics collected while partitioning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartitionTrace {
    /// `(cut before, cut after)` of every FM pass, at every level.
    pub fm_passes: Vec<(u64, u64)>,
    /// Per bisection: cut of the greedy initial bisection and the final cut.
    pub bisections: Vec<(u64, u64)>,
}

/// Total weight of edges whose endpoints lie in different parts.
pub fn edge_cut(adj: &WeightedAdjacency, part: &[usize]) -> u64 {
    adj.edges()
        .iter()
        .filter(|&&(i, j, _)| part[i] != part[j])
        .map(|e| e.2)
        .sum()
}

pub fn partition(graph: &SuperpixelGraph, params: &PartitionParams) -> Result<PartitionAssignment> {
    partition_traced(graph, params, &mut PartitionTrace::default())
}

pub fn partition_traced(
    graph: &SuperpixelGraph,
    params: &PartitionParams,
    trace: &mut PartitionTrace,
) -> Result<PartitionAssignment> {
    let n = graph.node_count();
    let c = params.c;
    if c == 0 || c > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {c} must lie in 1..={n}"
        )));
    }
    if params.eps.is_nan() || params.eps <= 0.0 {
        return Err(Error::InvalidParameter("balance tolerance must be positive".into()));
    }
    if graph.node_weights.len() != n {
        return Err(Error::Shape("node weight count differs from node count".into()));
    }
    if c == 1 {
        return Ok(PartitionAssignment::trivial(n));
    }
    let g = CsrGraph::from_adjacency(&graph.adjacency, &graph.node_weights);
    let depth = math::ceil(libm::log2(c as f64)).max(1.0);
    let mut ctx = Ctx {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        eps_level: math::pow(1.0 + params.eps, 1.0 / depth) - 1.0,
        coarsen_to: (8 * c).max(40),
        trace,
    };
    let mut part = vec![0; n];
    let ids: Vec<usize> = (0..n).collect();
    recursive_bisect(&g, &ids, c, 0, &mut part, &mut ctx);

    let mut out = PartitionAssignment {
        part,
        c,
        eps_used: params.eps,
    };
    let achieved = out.imbalance(&graph.node_weights);
    if achieved > params.eps {
        out.eps_used = achieved;
    }
    Ok(out)
}

struct Ctx<'a> {
    rng: ChaCha8Rng,
    eps_level: f64,
    coarsen_to: usize,
    trace: &'a mut PartitionTrace,
}

/// Compressed adjacency with node weights and fine-node counts.
#[derive(Debug, Clone)]
struct CsrGraph {
    xadj: Vec<usize>,
    adjncy: Vec<usize>,
    adjwgt: Vec<u64>,
    vwgt: Vec<u64>,
    vcount: Vec<usize>,
}

impl CsrGraph {
    fn from_adjacency(adj: &WeightedAdjacency, vwgt: &[u64]) -> Self {
        let mut xadj = Vec::with_capacity(adj.len() + 1);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        xadj.push(0);
        for row in &adj.rows {
            for &(j, w) in row {
                adjncy.push(j);
                adjwgt.push(w);
            }
            xadj.push(adjncy.len());
        }
        Self {
            xadj,
            adjncy,
            adjwgt,
            vwgt: vwgt.to_vec(),
            vcount: vec![1; adj.len()],
        }
    }

    #[inline]
    fn n(&self) -> usize {
        self.vwgt.len()
    }

    #[inline]
    fn edges(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.xadj[u]..self.xadj[u + 1];
        self.adjncy[r.clone()].iter().copied().zip(self.adjwgt[r].iter().copied())
    }

    fn total_vwgt(&self) -> u64 {
        self.vwgt.iter().sum()
    }

    fn cut(&self, side: &[u8]) -> u64 {
        let mut cut = 0;
        for u in 0..self.n() {
            for (v, w) in self.edges(u) {
                if u < v && side[u] != side[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    /// Induced subgraph on `nodes` (ascending local ids).
    fn induced(&self, nodes: &[usize]) -> CsrGraph {
        let mut local = vec![usize::MAX; self.n()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let mut xadj = Vec::with_capacity(nodes.len() + 1);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        xadj.push(0);
        for &u in nodes {
            for (v, w) in self.edges(u) {
                if local[v] != usize::MAX {
                    adjncy.push(local[v]);
                    adjwgt.push(w);
                }
            }
            xadj.push(adjncy.len());
        }
        CsrGraph {
            xadj,
            adjncy,
            adjwgt,
            vwgt: nodes.iter().map(|&u| self.vwgt[u]).collect(),
            vcount: nodes.iter().map(|&u| self.vcount[u]).collect(),
        }
    }
}

fn recursive_bisect(g: &CsrGraph, ids: &[usize], k: usize, first: usize, out: &mut [usize], ctx: &mut Ctx) {
    if k == 1 {
        for &id in ids {
            out[id] = first;
        }
        return;
    }
    let k0 = k / 2;
    let k1 = k - k0;
    let side = multilevel_bisect(g, k0, k1, ctx);
    let mut nodes = [Vec::new(), Vec::new()];
    for u in 0..g.n() {
        nodes[side[u] as usize].push(u);
    }
    for (s, (ks, start)) in [(k0, first), (k1, first + k0)].into_iter().enumerate() {
        let sub = g.induced(&nodes[s]);
        let sub_ids: Vec<usize> = nodes[s].iter().map(|&u| ids[u]).collect();
        recursive_bisect(&sub, &sub_ids, ks, start, out, ctx);
    }
}

#[derive(Debug, Clone, Copy)]
struct Balance {
    max_w: [u64; 2],
    min_count: [usize; 2],
}

fn multilevel_bisect(g: &CsrGraph, k0: usize, k1: usize, ctx: &mut Ctx) -> Vec<u8> {
    let total = g.total_vwgt();
    let target0 = total as f64 * k0 as f64 / (k0 + k1) as f64;
    let target1 = total as f64 - target0;
    let cap = |t: f64| ((t * (1.0 + ctx.eps_level)) as u64).max(math::ceil(t) as u64);
    let bal = Balance {
        max_w: [cap(target0), cap(target1)],
        min_count: [k0, k1],
    };

    let mut levels: Vec<(CsrGraph, Vec<usize>)> = Vec::new();
    let mut cur = g.clone();
    while cur.n() > ctx.coarsen_to {
        let max_vwgt = ((1.5 * total as f64 / ctx.coarsen_to as f64) as u64).max(1);
        let (coarse, cmap, _) = coarsen_csr(&cur, max_vwgt, &mut ctx.rng);
        if coarse.n() as f64 > 0.95 * cur.n() as f64 {
            break;
        }
        levels.push((cur, cmap));
        cur = coarse;
    }

    let mut side = initial_bisection(&cur, target0 as u64, bal, ctx);
    let initial_cut = cur.cut(&side);
    fm_refine(&cur, &mut side, bal, ctx.trace);

    while let Some((fine, cmap)) = levels.pop() {
        side = cmap.iter().map(|&cu| side[cu]).collect();
        fm_refine(&fine, &mut side, bal, ctx.trace);
        cur = fine;
    }
    repair_counts(&cur, &mut side, bal);
    ctx.trace.bisections.push((initial_cut, cur.cut(&side)));
    side
}

/// One round of heavy-edge matching. Returns the coarse graph, the fine →
/// coarse map and the weight of edges collapsed inside matched pairs.
fn coarsen_csr(g: &CsrGraph, max_vwgt: u64, rng: &mut ChaCha8Rng) -> (CsrGraph, Vec<usize>, u64) {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut best: Option<(u64, usize)> = None;
        for (v, w) in g.edges(u) {
            if v == u || mate[v] != usize::MAX || g.vwgt[u] + g.vwgt[v] > max_vwgt {
                continue;
            }
            best = match best {
                Some((bw, bv)) if bw > w || (bw == w && bv < v) => Some((bw, bv)),
                _ => Some((w, v)),
            };
        }
        match best {
            Some((_, v)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }

    let mut cmap = vec![usize::MAX; n];
    let mut next = 0;
    for u in 0..n {
        if cmap[u] == usize::MAX {
            cmap[u] = next;
            cmap[mate[u]] = next;
            next += 1;
        }
    }
    let mut vwgt = vec![0; next];
    let mut vcount = vec![0; next];
    for u in 0..n {
        vwgt[cmap[u]] += g.vwgt[u];
        vcount[cmap[u]] += g.vcount[u];
    }

    let mut internal = 0;
    let mut xadj = Vec::with_capacity(next + 1);
    let mut adjncy = Vec::new();
    let mut adjwgt = Vec::new();
    let mut slot = vec![usize::MAX; next];
    xadj.push(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); next];
    for u in 0..n {
        members[cmap[u]].push(u);
    }
    for (cu, fine) in members.iter().enumerate() {
        let row_start = adjncy.len();
        for &u in fine {
            for (v, w) in g.edges(u) {
                let cv = cmap[v];
                if cv == cu {
                    if u < v {
                        internal += w;
                    }
                    continue;
                }
                if slot[cv] == usize::MAX || slot[cv] < row_start {
                    slot[cv] = adjncy.len();
                    adjncy.push(cv);
                    adjwgt.push(w);
                } else {
                    adjwgt[slot[cv]] += w;
                }
            }
        }
        // Sorted rows keep every later scan order deterministic.
        let mut row: Vec<(usize, u64)> = adjncy[row_start..]
            .iter()
            .copied()
            .zip(adjwgt[row_start..].iter().copied())
            .collect();
        row.sort_unstable();
        for (i, (v, w)) in row.into_iter().enumerate() {
            adjncy[row_start + i] = v;
            adjwgt[row_start + i] = w;
        }
        for &v in &adjncy[row_start..] {
            slot[v] = usize::MAX;
        }
        xadj.push(adjncy.len());
    }
    (
        CsrGraph {
            xadj,
            adjncy,
            adjwgt,
            vwgt,
            vcount,
        },
        cmap,
        internal,
    )
}

/// Result of one heavy-edge matching round on a weighted adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Coarsening {
    pub adjacency: WeightedAdjacency,
    pub node_weights: Vec<u64>,
    /// Fine node → coarse node.
    pub map: Vec<usize>,
    /// Weight of the edges absorbed inside matched pairs.
    pub internal_weight: u64,
}

/// Heavy-edge matching in seeded random visiting order.
pub fn coarsen(adj: &WeightedAdjacency, node_weights: &[u64], seed: u64) -> Coarsening {
    let g = CsrGraph::from_adjacency(adj, node_weights);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, map, internal_weight) = coarsen_csr(&g, u64::MAX, &mut rng);
    let rows = (0..c.n()).map(|u| c.edges(u).collect()).collect();
    Coarsening {
        adjacency: WeightedAdjacency { rows },
        node_weights: c.vwgt,
        map,
        internal_weight,
    }
}

/// Greedy graph growing from several seeded start nodes; keeps the trial
/// with the smallest cut after refinement.
fn initial_bisection(g: &CsrGraph, target0: u64, bal: Balance, ctx: &mut Ctx) -> Vec<u8> {
    let n = g.n();
    let mut best: Option<(bool, u64, Vec<u8>)> = None;
    for _ in 0..INITIAL_TRIALS.min(n) {
        let start = ctx.rng.gen_range(0..n);
        let mut side = grow_region(g, start, target0, bal);
        let mut scratch = PartitionTrace::default();
        fm_refine(g, &mut side, bal, &mut scratch);
        let ok = is_balanced(g, &side, bal);
        let cut = g.cut(&side);
        let better = match &best {
            None => true,
            Some((bok, bcut, _)) => (ok && !bok) || (ok == *bok && cut < *bcut),
        };
        if better {
            best = Some((ok, cut, side));
        }
    }
    best.map(|b| b.2).unwrap_or_else(|| vec![1; n])
}

fn is_balanced(g: &CsrGraph, side: &[u8], bal: Balance) -> bool {
    let (w, c) = side_totals(g, side);
    w[0] <= bal.max_w[0] && w[1] <= bal.max_w[1] && c[0] >= bal.min_count[0] && c[1] >= bal.min_count[1]
}

fn side_totals(g: &CsrGraph, side: &[u8]) -> ([u64; 2], [usize; 2]) {
    let mut w = [0u64; 2];
    let mut c = [0usize; 2];
    for u in 0..g.n() {
        w[side[u] as usize] += g.vwgt[u];
        c[side[u] as usize] += g.vcount[u];
    }
    (w, c)
}

/// Grows side 0 from `start` by repeatedly absorbing the node with the best
/// cut gain until it reaches `target0`.
fn grow_region(g: &CsrGraph, start: usize, target0: u64, bal: Balance) -> Vec<u8> {
    let n = g.n();
    let total_count: usize = g.vcount.iter().sum();
    let mut side = vec![1u8; n];
    // gain[v] = (edges to side 0) − (edges to side 1) for nodes on side 1.
    let mut gain: Vec<i64> = (0..n).map(|u| -(g.edges(u).map(|e| e.1 as i64).sum::<i64>())).collect();
    let mut touched = vec![false; n];
    let mut w0 = 0u64;
    let mut c0 = 0usize;
    let mut next = Some(start);
    while let Some(u) = next {
        side[u] = 0;
        w0 += g.vwgt[u];
        c0 += g.vcount[u];
        for (v, w) in g.edges(u) {
            gain[v] += 2 * w as i64;
            touched[v] = true;
        }
        if w0 >= target0 {
            break;
        }
        let admissible = |v: usize| {
            side[v] == 1
                && w0 + g.vwgt[v] <= bal.max_w[0]
                && total_count - c0 - g.vcount[v] >= bal.min_count[1]
        };
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if admissible(v) && touched[v] && pick.is_none_or(|p| gain[v] > gain[p]) {
                pick = Some(v);
            }
        }
        // Disconnected remainder: restart from the lowest admissible id.
        if pick.is_none() {
            pick = (0..n).find(|&v| admissible(v));
        }
        next = pick;
    }
    side
}

/// Boundary FM passes; each pass rolls back to its best prefix, so the cut
/// never increases and balance is never violated.
fn fm_refine(g: &CsrGraph, side: &mut [u8], bal: Balance, trace: &mut PartitionTrace) {
    for _ in 0..MAX_FM_PASSES {
        let before = g.cut(side);
        let improvement = fm_pass(g, side, bal);
        let after = g.cut(side);
        trace.fm_passes.push((before, after));
        if improvement == 0 {
            break;
        }
    }
}

fn fm_pass(g: &CsrGraph, side: &mut [u8], bal: Balance) -> i64 {
    let n = g.n();
    let mut ext = vec![0i64; n];
    let mut int = vec![0i64; n];
    for u in 0..n {
        for (v, w) in g.edges(u) {
            if side[u] == side[v] {
                int[u] += w as i64;
            } else {
                ext[u] += w as i64;
            }
        }
    }
    let (mut pw, mut pc) = side_totals(g, side);
    let start = side.to_vec();
    let mut locked = vec![false; n];
    let mut moves: Vec<usize> = Vec::new();
    let mut sum = 0i64;
    let mut best_sum = 0i64;
    let mut best_len = 0usize;

    loop {
        let mut pick: Option<usize> = None;
        for u in 0..n {
            if locked[u] || ext[u] == 0 {
                continue;
            }
            let from = side[u] as usize;
            let to = 1 - from;
            if pw[to] + g.vwgt[u] > bal.max_w[to] || pc[from] < bal.min_count[from] + g.vcount[u] {
                continue;
            }
            let gain = ext[u] - int[u];
            if pick.is_none_or(|p| gain > ext[p] - int[p]) {
                pick = Some(u);
            }
        }
        let Some(u) = pick else { break };
        let from = side[u] as usize;
        let to = 1 - from;
        sum += ext[u] - int[u];
        side[u] = to as u8;
        core::mem::swap(&mut ext[u], &mut int[u]);
        pw[from] -= g.vwgt[u];
        pw[to] += g.vwgt[u];
        pc[from] -= g.vcount[u];
        pc[to] += g.vcount[u];
        for (v, w) in g.edges(u) {
            let w = w as i64;
            if side[v] as usize == from {
                int[v] -= w;
                ext[v] += w;
            } else {
                ext[v] -= w;
                int[v] += w;
            }
        }
        locked[u] = true;
        moves.push(u);
        if sum > best_sum {
            best_sum = sum;
            best_len = moves.len();
        } else if moves.len() - best_len > FM_STALL_MOVES {
            break;
        }
    }

    side.copy_from_slice(&start);
    for &u in &moves[..best_len] {
        side[u] = 1 - side[u];
    }
    best_sum
}

/// Moves nodes until each side holds at least as many fine nodes as parts it
/// must still be split into.
fn repair_counts(g: &CsrGraph, side: &mut [u8], bal: Balance) {
    loop {
        let (_, pc) = side_totals(g, side);
        let Some(short) = (0..2).find(|&s| pc[s] < bal.min_count[s]) else {
            return;
        };
        let donor = 1 - short;
        let mut pick: Option<(i64, usize)> = None;
        for u in 0..g.n() {
            if side[u] as usize != donor || pc[donor] < bal.min_count[donor] + g.vcount[u] {
                continue;
            }
            let gain: i64 = g
                .edges(u)
                .map(|(v, w)| if side[v] as usize == short { w as i64 } else { -(w as i64) })
                .sum();
            if pick.is_none_or(|(bg, _)| gain > bg) {
                pick = Some((gain, u));
            }
        }
        match pick {
            Some((_, u)) => side[u] = short as u8,
            None => return,
        }
    }
}

/// One cluster's induced graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGraph {
    /// Local → global node id, ascending.
    pub nodes: Vec<usize>,
    pub adjacency: WeightedAdjacency,
    pub normalized: NormalizedAdjacency,
    pub features: Matrix,
    pub labels: NodeLabels,
}

impl SubGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_train_labels(&self) -> bool {
        self.labels.train.iter().any(|&l| l != 0)
    }
}

/// Splits the graph into one sub-graph per cluster, dropping cut edges.
pub fn induce_subgraphs(
    graph: &SuperpixelGraph,
    assign: &PartitionAssignment,
    labels: &NodeLabels,
) -> Result<Vec<SubGraph>> {
    let n = graph.node_count();
    if assign.part.len() != n || labels.len() != n {
        return Err(Error::Shape(format!(
            "assignment covers {} and labels {} of {n} nodes",
            assign.part.len(),
            labels.len()
        )));
    }
    let mut local = vec![0usize; n];
    let members = assign.members();
    for nodes in &members {
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
    }
    Ok(members
        .into_iter()
        .map(|nodes| {
            let part = assign.part[nodes[0]];
            let rows = nodes
                .iter()
                .map(|&u| {
                    graph.adjacency.rows[u]
                        .iter()
                        .filter(|&&(v, _)| assign.part[v] == part)
                        .map(|&(v, w)| (local[v], w))
                        .collect()
                })
                .collect();
            let adjacency = WeightedAdjacency { rows };
            SubGraph {
                normalized: normalize(&adjacency),
                adjacency,
                features: graph.features.select_rows(&nodes),
                labels: labels.select(&nodes),
                nodes,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SuperpixelGraph {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1)).collect();
        SuperpixelGraph::from_adjacency(WeightedAdjacency::from_edges(n, &e).unwrap())
    }

    fn params(c: usize) -> PartitionParams {
        PartitionParams { c, eps: 0.1, seed: 3 }
    }

    #[test]
    fn single_cluster_is_trivial() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let a = partition(&g, &params(1)).unwrap();
        assert_eq!(a.part, vec![0; 4]);
        assert_eq!(edge_cut(&g.adjacency, &a.part), 0);
    }

    #[test]
    fn too_many_clusters() {
        let g = graph(2, &[(0, 1)]);
        assert!(partition(&g, &params(3)).is_err());
    }

    #[test]
    fn cut_of_split_edge() {
        let g = graph(2, &[(0, 1)]);
        assert_eq!(edge_cut(&g.adjacency, &[0, 1]), 1);
    }

    #[test]
    fn disjoint_triangles() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let a = partition(&g, &params(2)).unwrap();
        assert_eq!(edge_cut(&g.adjacency, &a.part), 0);
        assert_eq!(a.part[0], a.part[1]);
        assert_eq!(a.part[1], a.part[2]);
        assert_ne!(a.part[0], a.part[3]);
    }

    #[test]
    fn every_cluster_non_empty() {
        let edges: Vec<(usize, usize)> = (0..19).map(|i| (i, i + 1)).collect();
        let g = graph(20, &edges);
        for c in 1..=20 {
            let a = partition(&g, &params(c)).unwrap();
            let sizes: Vec<usize> = a.members().iter().map(Vec::len).collect();
            assert!(sizes.iter().all(|&s| s > 0), "c={c} sizes={sizes:?}");
        }
    }

    #[test]
    fn heavy_node_relaxes_balance() {
        let mut g = graph(3, &[(0, 1), (1, 2)]);
        g.node_weights = vec![10, 1, 1];
        let a = partition(&g, &params(2)).unwrap();
        assert!(a.eps_used > 0.1);
        assert_eq!(a.members().len(), 2);
    }

    #[test]
    fn triangle_split_subgraphs() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let assign = PartitionAssignment::from_parts(vec![0, 0, 1], 2).unwrap();
        let labels = NodeLabels {
            train: vec![1, 0, 2],
            val: vec![0; 3],
            test: vec![0; 3],
            impure: vec![false; 3],
            num_classes: 2,
        };
        let subs = induce_subgraphs(&g, &assign, &labels).unwrap();
        assert_eq!(subs[0].adjacency.edges().len(), 1);
        assert_eq!(subs[1].adjacency.edges().len(), 0);
        assert_eq!(subs[1].labels.train, vec![2]);
        assert_eq!(subs[1].nodes, vec![2]);
    }

    #[test]
    fn external_assignment_validation() {
        assert!(PartitionAssignment::from_parts(vec![0, 2], 2).is_err());
        assert!(PartitionAssignment::from_parts(vec![0, 0], 2).is_err());
        assert!(PartitionAssignment::from_parts(vec![1, 0], 2).is_ok());
    }
}
