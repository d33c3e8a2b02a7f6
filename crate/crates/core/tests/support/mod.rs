//! Independent oracles and the acceptance checks built on them.
//!
//! Shared by the core integration tests and the workspace acceptance target.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::time::Instant;

use hgc_core::cube::{HsiCube, LabelMap};
use hgc_core::gcn::{self, GcnDims, GcnModel};
use hgc_core::graph::{self, normalize, SpatialAdjacency, SuperpixelGraph, WeightedAdjacency};
use hgc_core::linalg::Matrix;
use hgc_core::metrics::{self, ConfusionMatrix};
use hgc_core::partition::{self, PartitionParams, PartitionTrace};
use hgc_core::superpixel::{compute_attributes, SuperpixelMap};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_edges(r: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                e.push((i, j));
            }
        }
    }
    e
}

pub fn random_weighted(r: &mut impl Rng, n: usize, p: f64, max_w: u64) -> Vec<(usize, usize, u64)> {
    random_edges(r, n, p)
        .into_iter()
        .map(|(i, j)| (i, j, r.gen_range(1..=max_w)))
        .collect()
}

pub fn dense_weights(n: usize, edges: &[(usize, usize, u64)]) -> Vec<Vec<u64>> {
    let mut w = vec![vec![0u64; n]; n];
    for &(i, j, x) in edges {
        w[i][j] += x;
        w[j][i] += x;
    }
    w
}

/// Nodes at distance `1..=h` from `j`, by breadth-first search over an
/// adjacency matrix.
pub fn bfs_oracle(n: usize, edges: &[(usize, usize)], j: usize, h: usize) -> Vec<usize> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        m[a][b] = true;
        m[b][a] = true;
    }
    let mut dist = vec![usize::MAX; n];
    dist[j] = 0;
    let mut q = VecDeque::from([j]);
    while let Some(u) = q.pop_front() {
        for v in 0..n {
            if m[u][v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    (0..n).filter(|&v| v != j && dist[v] <= h).collect()
}

/// Top-k relation by sorting every h-hop neighborhood on (distance, id).
pub fn topk_oracle(n: usize, edges: &[(usize, usize)], x: &[Vec<f64>], h: usize, k: usize) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for i in 0..n {
        let mut hood: Vec<(f64, usize)> = bfs_oracle(n, edges, i, h)
            .into_iter()
            .map(|j| {
                let d: f64 = x[i].iter().zip(&x[j]).map(|(p, q)| (p - q) * (p - q)).sum();
                (d, j)
            })
            .collect();
        hood.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        for &(_, j) in hood.iter().take(k) {
            a[i][j] = true;
            a[j][i] = true;
        }
    }
    a
}

pub fn cut_oracle(w: &[Vec<u64>], part: &[usize]) -> u64 {
    let n = w.len();
    let mut cut = 0;
    for i in 0..n {
        for j in 0..n {
            if i < j && part[i] != part[j] {
                cut += w[i][j];
            }
        }
    }
    cut
}

/// Group-by mean over pixels in raster order.
pub fn group_mean_oracle(assignment: &[usize], pixels: &[Vec<f64>], groups: usize) -> Vec<Vec<f64>> {
    let bands = pixels[0].len();
    let mut sum = vec![vec![0.0; bands]; groups];
    let mut count = vec![0usize; groups];
    for (p, &g) in assignment.iter().enumerate() {
        count[g] += 1;
        for b in 0..bands {
            sum[g][b] += pixels[p][b];
        }
    }
    for g in 0..groups {
        for v in &mut sum[g] {
            *v /= count[g] as f64;
        }
    }
    sum
}

/// OA, AA and kappa from a per-pixel tally.
pub fn tally_oracle(truth: &[u16], pred: &[u16], classes: usize) -> (Vec<Vec<u64>>, f64, f64, f64) {
    let mut m = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t as usize - 1][p as usize - 1] += 1;
    }
    let total: u64 = truth.len() as u64;
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as u64;
    let oa = correct as f64 / total as f64;
    let mut accs = Vec::new();
    let mut chance: u128 = 0;
    for c in 1..=classes as u16 {
        let in_class = truth.iter().filter(|&&t| t == c).count() as u64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as u64;
        chance += in_class as u128 * predicted as u128;
        if in_class > 0 {
            let hit = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p == c).count();
            accs.push(hit as f64 / in_class as f64);
        }
    }
    let aa = accs.iter().sum::<f64>() / accs.len() as f64;
    let pe = chance as f64 / (total as f64 * total as f64);
    let kappa = if pe >= 1.0 { 1.0 } else { (oa - pe) / (1.0 - pe) };
    (m, oa, aa, kappa)
}

fn fail(msg: String) -> Check {
    Err(msg)
}

pub fn hop_suite(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for t in 0..instances {
        let n = r.gen_range(1..=30);
        let p = r.gen_range(0.02..0.3);
        let edges = random_edges(&mut r, n, p);
        let adj = SpatialAdjacency::from_edges(n, &edges);
        for j in 0..n {
            for h in 1..=4 {
                let got = graph::hop_neighborhood(&adj, j, h);
                if got != bfs_oracle(n, &edges, j, h) {
                    return fail(format!("hop_neighborhood instance {t} node {j} h {h}"));
                }
            }
        }
    }
    Ok(format!("{instances} hop instances"))
}

pub fn topk_suite(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for t in 0..instances {
        let n = r.gen_range(1..=30);
        let p = r.gen_range(0.05..0.3);
        let edges = random_edges(&mut r, n, p);
        let dim = r.gen_range(1..=3);
        // Small integer attributes force many distance ties.
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(0..3) as f64).collect())
            .collect();
        let xm = Matrix::from_rows(&x).unwrap();
        let adj = SpatialAdjacency::from_edges(n, &edges);
        let h = r.gen_range(1..=3);
        let k = r.gen_range(1..=5);
        let got = graph::topk_adjacency(&adj, &xm, h, k).map_err(|e| e.to_string())?;
        let want = topk_oracle(n, &edges, &x, h, k);
        for i in 0..n {
            for j in 0..n {
                if got.contains(i, j) != want[i][j] {
                    return fail(format!("topk_adjacency instance {t} entry ({i},{j})"));
                }
            }
        }
    }
    Ok(format!("{instances} top-k instances"))
}

pub fn cut_suite(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for t in 0..instances {
        let n = r.gen_range(1..=30);
        let p = r.gen_range(0.05..0.5);
        let edges = random_weighted(&mut r, n, p, 3);
        let adj = WeightedAdjacency::from_edges(n, &edges).map_err(|e| e.to_string())?;
        let c = r.gen_range(1..=5);
        let part: Vec<usize> = (0..n).map(|_| r.gen_range(0..c)).collect();
        if partition::edge_cut(&adj, &part) != cut_oracle(&dense_weights(n, &edges), &part) {
            return fail(format!("edge_cut instance {t}"));
        }
    }
    Ok(format!("{instances} edge-cut instances"))
}

pub fn attribute_suite(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for t in 0..instances {
        let (w, h) = (r.gen_range(1..=6), r.gen_range(1..=5));
        let bands = r.gen_range(1..=4);
        let groups = r.gen_range(1..=(w * h).min(30));
        let mut assignment: Vec<usize> = (0..w * h).map(|p| p % groups).collect();
        assignment.shuffle(&mut r);
        let pixels: Vec<Vec<f64>> = (0..w * h)
            .map(|_| (0..bands).map(|_| r.gen_range(-5.0..5.0)).collect())
            .collect();
        let cube = HsiCube::from_pixels(w, h, &pixels).map_err(|e| e.to_string())?;
        let map = SuperpixelMap::from_assignment(w, h, &assignment).map_err(|e| e.to_string())?;
        let got = compute_attributes(&map, &cube).map_err(|e| e.to_string())?;
        let want = group_mean_oracle(&map.assignment, &pixels, map.count());
        for (g, row) in want.iter().enumerate() {
            if got.row(g) != row.as_slice() {
                return fail(format!("compute_attributes instance {t} group {g}"));
            }
        }
    }
    Ok(format!("{instances} attribute instances"))
}

pub fn metrics_suite(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for t in 0..instances {
        let classes = r.gen_range(1..=5);
        let n = r.gen_range(1..=30);
        let truth_all: Vec<u16> = (0..n).map(|_| r.gen_range(0..=classes as u16)).collect();
        // Every class id must occur for the map to be valid.
        let mut truth_all = truth_all;
        for c in 1..=classes as u16 {
            if !truth_all.contains(&c) {
                truth_all.push(c);
            }
        }
        let n = truth_all.len();
        let pred: Vec<u16> = (0..n).map(|_| r.gen_range(1..=classes as u16)).collect();
        let labels = LabelMap::new(n, 1, truth_all.clone()).map_err(|e| e.to_string())?;
        let eval: Vec<usize> = (0..n).filter(|&p| truth_all[p] != 0 && r.gen_bool(0.8)).collect();
        if eval.is_empty() {
            continue;
        }
        let m = metrics::confusion(&pred, &labels, &eval).map_err(|e| e.to_string())?;
        let truth: Vec<u16> = eval.iter().map(|&p| truth_all[p]).collect();
        let pr: Vec<u16> = eval.iter().map(|&p| pred[p]).collect();
        let (tally, oa, aa, kappa) = tally_oracle(&truth, &pr, classes);
        let flat: Vec<u64> = tally.concat();
        if m.counts != flat {
            return fail(format!("confusion instance {t}"));
        }
        let rep = metrics::metrics(&m).map_err(|e| e.to_string())?;
        if rep.oa != oa || rep.aa != aa || rep.kappa != kappa {
            return fail(format!(
                "metrics instance {t}: ({}, {}, {}) vs ({oa}, {aa}, {kappa})",
                rep.oa, rep.aa, rep.kappa
            ));
        }
    }
    Ok(format!("{instances} confusion/metrics instances"))
}

/// Oracle equivalence over random instances, all five families.
pub fn oracle_equivalence(instances: usize) -> Check {
    let start = Instant::now();
    let parts = [
        hop_suite(instances, 1)?,
        topk_suite(instances, 2)?,
        cut_suite(instances, 3)?,
        attribute_suite(instances, 4)?,
        metrics_suite(instances, 5)?,
    ];
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return fail(format!("took {secs:.1}s"));
    }
    Ok(format!("{} in {secs:.2}s", parts.join(", ")))
}

/// A random instance for gradient checking.
pub struct GradInstance {
    pub model: GcnModel,
    pub adj: graph::NormalizedAdjacency,
    pub x: Matrix,
    pub labels: Vec<u16>,
}

fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| r.gen_range(-scale..scale)).collect()).unwrap()
}

pub fn grad_instance(r: &mut impl Rng) -> GradInstance {
    let n = r.gen_range(1..=12);
    let dims = GcnDims {
        features: r.gen_range(1..=5),
        conv: r.gen_range(1..=6),
        hidden: r.gen_range(1..=6),
        classes: r.gen_range(2..=4),
    };
    let edges = random_weighted(r, n, 0.4, 2);
    let adj = normalize(&WeightedAdjacency::from_edges(n, &edges).unwrap());
    let x = random_matrix(r, n, dims.features, 2.0);
    let mut model = GcnModel::zeros(dims);
    model.theta = random_matrix(r, dims.features, dims.conv, 1.0);
    model.w0 = random_matrix(r, dims.conv, dims.hidden, 1.0);
    model.w1 = random_matrix(r, dims.hidden, dims.classes, 1.0);
    let mut labels: Vec<u16> = (0..n)
        .map(|_| if r.gen_bool(0.7) { r.gen_range(1..=dims.classes as u16) } else { 0 })
        .collect();
    if labels.iter().all(|&l| l == 0) {
        labels[0] = 1;
    }
    GradInstance { model, adj, x, labels }
}

fn near_kink(inst: &GradInstance, margin: f64) -> bool {
    let c = gcn::forward(&inst.model, &inst.adj, &inst.x).unwrap();
    c.pre0.as_slice().iter().chain(c.z1.as_slice()).any(|v| v.abs() < margin)
}

fn loss_at(inst: &GradInstance, model: &GcnModel) -> f64 {
    let c = gcn::forward(model, &inst.adj, &inst.x).unwrap();
    gcn::loss(&c, &inst.labels).unwrap()
}

/// Largest relative error between analytic and central-difference gradients;
/// the denominator is floored at 1e-3 so vanishing entries compare absolutely.
pub fn gradient_error(inst: &GradInstance, step: f64) -> f64 {
    let cache = gcn::forward(&inst.model, &inst.adj, &inst.x).unwrap();
    let g = gcn::backward(&cache, &inst.model, &inst.adj, &inst.x, &inst.labels);
    let analytic = g.as_array();
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        let len = inst.model.params()[which].as_slice().len();
        for e in 0..len {
            let mut plus = inst.model.clone();
            plus.params_mut()[which].as_mut_slice()[e] += step;
            let mut minus = inst.model.clone();
            minus.params_mut()[which].as_mut_slice()[e] -= step;
            let numeric = (loss_at(inst, &plus) - loss_at(inst, &minus)) / (2.0 * step);
            let a = analytic[which].as_slice()[e];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Analytic vs central-difference gradients on random instances. Instances
/// with a pre-activation within 1e-3 of a ReLU kink are redrawn, since a
/// finite difference straddling the kink is not a derivative.
pub fn gradient_check(instances: usize) -> Check {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let inst = grad_instance(&mut r);
        if near_kink(&inst, 1e-3) {
            continue;
        }
        worst = worst.max(gradient_error(&inst, 1e-5));
        done += 1;
    }
    if worst < 1e-4 {
        Ok(format!("{instances} instances, max relative error {worst:.2e}"))
    } else {
        fail(format!("max relative error {worst:.2e}"))
    }
}

/// Dominant eigenvalue magnitude by power iteration.
pub fn spectral_radius(a: &graph::NormalizedAdjacency, iters: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = a.len();
    let mut v: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
    let mut est = 0.0;
    for _ in 0..iters {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let w = a.mul_vec(&v);
        est = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w;
    }
    est
}

/// `A′·sqrt(d_i d_j)` reconstructs `A + I`, and the spectral radius is at most 1.
pub fn normalization_law(graphs: usize) -> Check {
    let mut r = rng(21);
    let mut max_dev: f64 = 0.0;
    let mut max_rho: f64 = 0.0;
    for t in 0..graphs {
        let n = r.gen_range(1..=200);
        let p = r.gen_range(0.005..0.1);
        let edges = random_weighted(&mut r, n, p, 3);
        let w = dense_weights(n, &edges);
        let a = normalize(&WeightedAdjacency::from_edges(n, &edges).map_err(|e| e.to_string())?);
        let dense = a.to_dense();
        for i in 0..n {
            let di = 1.0 + w[i].iter().sum::<u64>() as f64;
            for j in 0..n {
                let dj = 1.0 + w[j].iter().sum::<u64>() as f64;
                let want = w[i][j] as f64 + if i == j { 1.0 } else { 0.0 };
                let got = dense[(i, j)] * (di * dj).sqrt();
                max_dev = max_dev.max((got - want).abs());
                if dense[(i, j)] != dense[(j, i)] {
                    return fail(format!("graph {t}: asymmetric at ({i},{j})"));
                }
            }
        }
        max_rho = max_rho.max(spectral_radius(&a, 2000, t as u64));
    }
    if max_dev > 1e-12 {
        return fail(format!("reconstruction error {max_dev:.2e}"));
    }
    if max_rho > 1.0 + 1e-9 {
        return fail(format!("spectral radius {max_rho}"));
    }
    Ok(format!(
        "{graphs} graphs, reconstruction error {max_dev:.1e}, spectral radius {max_rho:.12}"
    ))
}

/// Minimum cut over all assignments into `c` parts of equal size.
pub fn brute_force_balanced_cut(w: &[Vec<u64>], c: usize) -> u64 {
    let n = w.len();
    let size = n / c;
    let mut best = u64::MAX;
    let mut part = vec![0usize; n];
    fn rec(i: usize, part: &mut Vec<usize>, counts: &mut Vec<usize>, size: usize, w: &[Vec<u64>], best: &mut u64) {
        if i == part.len() {
            *best = (*best).min(cut_oracle(w, part));
            return;
        }
        for p in 0..counts.len() {
            if counts[p] < size {
                counts[p] += 1;
                part[i] = p;
                rec(i + 1, part, counts, size, w, best);
                counts[p] -= 1;
            }
        }
    }
    rec(0, &mut part, &mut vec![0; c], size, w, &mut best);
    best
}

pub fn clique(nodes: &[usize]) -> Vec<(usize, usize, u64)> {
    let mut e = Vec::new();
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a + 1..] {
            e.push((i, j, 1));
        }
    }
    e
}

fn unit_graph(n: usize, edges: &[(usize, usize, u64)]) -> SuperpixelGraph {
    SuperpixelGraph::from_adjacency(WeightedAdjacency::from_edges(n, edges).unwrap())
}

/// Cut of the partitioner on `(n, edges)` with `c` parts, checking that no
/// FM pass increased the cut.
pub fn partition_cut(n: usize, edges: &[(usize, usize, u64)], c: usize, seed: u64) -> Result<u64, String> {
    let g = unit_graph(n, edges);
    let mut trace = PartitionTrace::default();
    let a = partition::partition_traced(&g, &PartitionParams { c, eps: 0.1, seed }, &mut trace)
        .map_err(|e| e.to_string())?;
    if let Some(&(before, after)) = trace.fm_passes.iter().find(|(b, a)| a > b) {
        return Err(format!("FM pass raised the cut from {before} to {after}"));
    }
    if let Some(&(init, fin)) = trace.bisections.iter().find(|(i, f)| f > i) {
        return Err(format!("bisection ended at {fin} above its initial {init}"));
    }
    Ok(partition::edge_cut(&g.adjacency, &a.part))
}

pub fn partition_fixtures() -> Check {
    let mut barbell = clique(&[0, 1, 2, 3]);
    barbell.extend(clique(&[4, 5, 6, 7]));
    barbell.push((3, 4, 1));
    let mut triangles = clique(&[0, 1, 2]);
    triangles.extend(clique(&[3, 4, 5]));
    let mut cliques = clique(&[0, 1, 2, 3]);
    cliques.extend(clique(&[4, 5, 6, 7]));
    cliques.extend(clique(&[8, 9, 10, 11]));
    let fixtures: [(&str, usize, &Vec<(usize, usize, u64)>, usize); 3] = [
        ("barbell", 8, &barbell, 2),
        ("two triangles", 6, &triangles, 2),
        ("three 4-cliques", 12, &cliques, 3),
    ];
    let mut out = Vec::new();
    for (name, n, edges, c) in fixtures {
        let optimal = brute_force_balanced_cut(&dense_weights(n, edges), c);
        for seed in 0..5 {
            let got = partition_cut(n, edges, c, seed)?;
            if got != optimal {
                return fail(format!("{name} seed {seed}: cut {got}, optimum {optimal}"));
            }
        }
        out.push(format!("{name} cut {optimal}"));
    }
    Ok(out.join(", "))
}

/// Mean cut of the partitioner vs uniformly random balanced assignments on
/// Erdős–Rényi graphs.
pub fn erdos_renyi_quality(c: usize, seeds: u64) -> Result<(f64, f64), String> {
    let n = 100;
    let mut ours = 0.0;
    let mut random = 0.0;
    for seed in 0..seeds {
        let mut r = rng(1000 + seed);
        let edges = random_weighted(&mut r, n, 0.06, 1);
        ours += partition_cut(n, &edges, c, seed)? as f64;
        let mut part: Vec<usize> = (0..n).map(|i| i % c).collect();
        part.shuffle(&mut r);
        random += cut_oracle(&dense_weights(n, &edges), &part) as f64;
    }
    Ok((ours / seeds as f64, random / seeds as f64))
}

pub fn partitioner_quality() -> Check {
    let fixtures = partition_fixtures()?;
    let mut out = vec![fixtures];
    for c in [2, 4] {
        let (ours, random) = erdos_renyi_quality(c, 20)?;
        if ours >= random {
            return fail(format!("c={c}: mean cut {ours} not below random {random}"));
        }
        out.push(format!("ER c={c} mean cut {ours:.1} vs random {random:.1}"));
    }
    Ok(out.join("; "))
}

/// Confusion matrix from explicit rows, for hand examples.
pub fn confusion_rows(rows: &[Vec<u64>]) -> ConfusionMatrix {
    ConfusionMatrix::from_rows(rows).unwrap()
}
