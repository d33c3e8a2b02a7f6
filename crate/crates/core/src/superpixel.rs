//! SLIC-style superpixels over a (PCA-reduced) cube, superpixel mean
//! attributes and pixel-to-superpixel label propagation.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cube::{HsiCube, LabelMap};
use crate::error::{Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::math;
use crate::split::DatasetSplit;

/// Pixel → superpixel assignment. Ids are numbered in raster order of each
/// superpixel's first pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl SuperpixelMap {
    /// Renumbers an arbitrary assignment in raster order and recomputes sizes.
    pub fn from_assignment(width: usize, height: usize, assignment: &[usize]) -> Result<Self> {
        if assignment.len() != width * height {
            return Err(Error::Dimensions(format!(
                "assignment has {} entries for a {width}x{height} image",
                assignment.len()
            )));
        }
        let max = assignment.iter().copied().max().unwrap_or(0);
        let mut remap = vec![usize::MAX; max + 1];
        let mut next = 0;
        let mut out = Vec::with_capacity(assignment.len());
        let mut sizes = Vec::new();
        for &a in assignment {
            if remap[a] == usize::MAX {
                remap[a] = next;
                next += 1;
                sizes.push(0);
            }
            out.push(remap[a]);
            sizes[remap[a]] += 1;
        }
        Ok(Self {
            width,
            height,
            assignment: out,
            sizes,
        })
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Pixel lists per superpixel, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (p, &s) in self.assignment.iter().enumerate() {
            out[s].push(p);
        }
        out
    }

    /// True when every superpixel forms a single 4-connected region.
    pub fn is_contiguous(&self) -> bool {
        let comps = connected_components(self.width, self.height, &self.assignment);
        let n_comp = comps.iter().copied().max().map_or(0, |m| m + 1);
        n_comp == self.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub target: usize,
    pub compactness: f64,
    pub iters: usize,
}

/// Grid size `(nx, ny)` with `nx·ny ≈ target` and near-square cells.
fn grid_shape(width: usize, height: usize, target: usize) -> (usize, usize) {
    let nx = math::round(math::sqrt(target as f64 * width as f64 / height as f64)) as usize;
    let nx = nx.clamp(1, width);
    let ny = (math::round(target as f64 / nx as f64) as usize).clamp(1, height);
    (nx, ny)
}

#[derive(Debug, Clone)]
struct Center {
    x: f64,
    y: f64,
    feat: Vec<f64>,
}

/// Segments `cube` into spatially contiguous superpixels.
///
/// Distance between a pixel and a center is
/// `sqrt(d_spec² + compactness²·(d_xy/S)²)` with `S = sqrt(W·H/target)`,
/// searched within a `2S × 2S` window. After the iterations each 4-connected
/// piece becomes its own superpixel and pieces smaller than `S²/4` are
/// absorbed into their largest neighbour.
pub fn segment(cube: &HsiCube, params: &SlicParams) -> Result<SuperpixelMap> {
    let (w, h) = (cube.width(), cube.height());
    let n = w * h;
    if params.target == 0 || params.iters == 0 {
        return Err(Error::InvalidParameter(
            "superpixel target and iteration count must be positive".into(),
        ));
    }
    if params.target > n {
        return Err(Error::InvalidParameter(format!(
            "superpixel target {} exceeds pixel count {n}",
            params.target
        )));
    }
    if !(params.compactness >= 0.0 && params.compactness.is_finite()) {
        return Err(Error::InvalidParameter("compactness must be non-negative".into()));
    }
    let bands = cube.bands();
    let pixels = cube.to_pixel_major();
    let feat = |p: usize| &pixels[p * bands..(p + 1) * bands];

    let step = math::sqrt(n as f64 / params.target as f64);
    let (nx, ny) = grid_shape(w, h, params.target);
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * w as f64 / nx as f64 - 0.5;
            let y = (j as f64 + 0.5) * h as f64 / ny as f64 - 0.5;
            centers.push(seed_center(cube, &pixels, x, y));
        }
    }

    let spatial_w = params.compactness / step;
    let spatial_w2 = spatial_w * spatial_w;
    let radius = math::ceil(2.0 * step) as isize;
    let mut label = vec![usize::MAX; n];
    let mut best = vec![f64::INFINITY; n];

    for _ in 0..params.iters {
        label.fill(usize::MAX);
        best.fill(f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let cx = math::round(c.x) as isize;
            let cy = math::round(c.y) as isize;
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius) as usize).min(w - 1);
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let dx = x as f64 - c.x;
                    let dy = y as f64 - c.y;
                    let d = sq_dist(feat(p), &c.feat) + spatial_w2 * (dx * dx + dy * dy);
                    if d < best[p] {
                        best[p] = d;
                        label[p] = ci;
                    }
                }
            }
        }
        // Pixels outside every window fall back to the globally nearest center.
        for (p, lp) in label.iter_mut().enumerate() {
            if *lp != usize::MAX {
                continue;
            }
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            let mut bd = f64::INFINITY;
            for (ci, c) in centers.iter().enumerate() {
                let d = sq_dist(feat(p), &c.feat)
                    + spatial_w2 * ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y));
                if d < bd {
                    bd = d;
                    *lp = ci;
                }
            }
        }

        let mut sums = vec![0.0; centers.len() * (bands + 2)];
        let mut counts = vec![0usize; centers.len()];
        for (p, &ci) in label.iter().enumerate() {
            counts[ci] += 1;
            let acc = &mut sums[ci * (bands + 2)..(ci + 1) * (bands + 2)];
            acc[0] += (p % w) as f64;
            acc[1] += (p / w) as f64;
            for (a, &v) in acc[2..].iter_mut().zip(feat(p)) {
                *a += v;
            }
        }
        for (ci, c) in centers.iter_mut().enumerate() {
            if counts[ci] == 0 {
                continue;
            }
            let k = counts[ci] as f64;
            let acc = &sums[ci * (bands + 2)..(ci + 1) * (bands + 2)];
            c.x = acc[0] / k;
            c.y = acc[1] / k;
            for (f, &a) in c.feat.iter_mut().zip(&acc[2..]) {
                *f = a / k;
            }
        }
    }

    let min_size = ((step * step / 4.0) as usize).max(1);
    let merged = enforce_connectivity(w, h, &label, min_size);
    SuperpixelMap::from_assignment(w, h, &merged)
}

// Moves the center to the lowest-gradient pixel of its 3×3 neighbourhood,
// keeping the sub-pixel grid position unless a strictly lower gradient exists.
fn seed_center(cube: &HsiCube, pixels: &[f64], x: f64, y: f64) -> Center {
    let (w, h, b) = (cube.width(), cube.height(), cube.bands());
    let px = (math::round(x) as usize).min(w - 1);
    let py = (math::round(y) as usize).min(h - 1);
    let grad = |x: usize, y: usize| {
        let at = |x: usize, y: usize| &pixels[(y * w + x) * b..(y * w + x + 1) * b];
        let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        sq_dist(at(xr, y), at(xl, y)) + sq_dist(at(x, yd), at(x, yu))
    };
    let mut best = (grad(px, py), px, py);
    for yy in py.saturating_sub(1)..=(py + 1).min(h - 1) {
        for xx in px.saturating_sub(1)..=(px + 1).min(w - 1) {
            let g = grad(xx, yy);
            if g < best.0 {
                best = (g, xx, yy);
            }
        }
    }
    let (cx, cy) = if best.1 == px && best.2 == py {
        (x, y)
    } else {
        (best.1 as f64, best.2 as f64)
    };
    let p = best.2 * w + best.1;
    Center {
        x: cx,
        y: cy,
        feat: pixels[p * b..(p + 1) * b].to_vec(),
    }
}

/// 4-connected component id per pixel, numbered in raster order.
pub fn connected_components(width: usize, height: usize, labels: &[usize]) -> Vec<usize> {
    let n = width * height;
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in grid_neighbors(width, height, p).into_iter().flatten() {
                if comp[q] == usize::MAX && labels[q] == labels[start] {
                    comp[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    comp
}

#[inline]
pub(crate) fn grid_neighbors(width: usize, height: usize, p: usize) -> [Option<usize>; 4] {
    let (x, y) = (p % width, p / width);
    [
        (x > 0).then(|| p - 1),
        (x + 1 < width).then(|| p + 1),
        (y > 0).then(|| p - width),
        (y + 1 < height).then(|| p + width),
    ]
}

fn enforce_connectivity(width: usize, height: usize, labels: &[usize], min_size: usize) -> Vec<usize> {
    let comp = connected_components(width, height, labels);
    let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; n_comp];
    let mut first = vec![usize::MAX; n_comp];
    for (p, &c) in comp.iter().enumerate() {
        size[c] += 1;
        if first[c] == usize::MAX {
            first[c] = p;
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for p in 0..comp.len() {
        for q in grid_neighbors(width, height, p).into_iter().flatten() {
            if comp[p] != comp[q] {
                adj[comp[p]].push(comp[q]);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }

    // Small regions, smallest first, are absorbed by their largest neighbour
    // (ties → earliest in raster order). Absorbed regions hand their
    // neighbour lists to the absorbing root.
    let mut orphans: Vec<usize> = (0..n_comp).filter(|&c| size[c] < min_size).collect();
    orphans.sort_by_key(|&c| (size[c], first[c]));
    let mut parent: Vec<usize> = (0..n_comp).collect();
    fn find(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }
    for &o in &orphans {
        let root = find(&mut parent, o);
        if size[root] >= min_size {
            continue;
        }
        let mut target: Option<usize> = None;
        for &nb in &adj[root] {
            let r = find(&mut parent, nb);
            if r == root {
                continue;
            }
            let better = match target {
                None => true,
                Some(t) => size[r] > size[t] || (size[r] == size[t] && first[r] < first[t]),
            };
            if better {
                target = Some(r);
            }
        }
        if let Some(t) = target {
            parent[root] = t;
            size[t] += size[root];
            first[t] = first[t].min(first[root]);
            let moved = core::mem::take(&mut adj[root]);
            adj[t].extend(moved);
        }
    }
    comp.iter().map(|&c| find(&mut parent, c)).collect()
}

/// Superpixel mean attributes, one row per superpixel.
pub fn compute_attributes(map: &SuperpixelMap, cube: &HsiCube) -> Result<Matrix> {
    if map.width != cube.width() || map.height != cube.height() {
        return Err(Error::Dimensions("segmentation and cube sizes differ".into()));
    }
    if let Some(i) = map.sizes.iter().position(|&s| s == 0) {
        return Err(Error::Degenerate(format!("superpixel {i} is empty")));
    }
    let bands = cube.bands();
    let mut x = Matrix::zeros(map.count(), bands);
    for b in 0..bands {
        for (p, &v) in cube.band(b).iter().enumerate() {
            x[(map.assignment[p], b)] += v;
        }
    }
    for (i, &s) in map.sizes.iter().enumerate() {
        for v in x.row_mut(i) {
            *v /= s as f64;
        }
    }
    Ok(x)
}

/// Per-superpixel labels for each role; `0` means none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabels {
    pub train: Vec<u16>,
    pub val: Vec<u16>,
    pub test: Vec<u16>,
    /// Superpixels whose train pixels span more than one class.
    pub impure: Vec<bool>,
    pub num_classes: usize,
}

impl NodeLabels {
    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn role(&self, role: Role) -> &[u16] {
        match role {
            Role::Train => &self.train,
            Role::Val => &self.val,
            Role::Test => &self.test,
        }
    }

    /// Restriction to `nodes`, in that order.
    pub fn select(&self, nodes: &[usize]) -> NodeLabels {
        NodeLabels {
            train: nodes.iter().map(|&i| self.train[i]).collect(),
            val: nodes.iter().map(|&i| self.val[i]).collect(),
            test: nodes.iter().map(|&i| self.test[i]).collect(),
            impure: nodes.iter().map(|&i| self.impure[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Train,
    Val,
    Test,
}

fn majority(counts: &[usize]) -> (u16, bool) {
    let mut best = 0usize;
    let mut classes = 0;
    for (c, &k) in counts.iter().enumerate().skip(1) {
        if k > 0 {
            classes += 1;
        }
        if k > counts[best] || (best == 0 && k > 0) {
            best = c;
        }
    }
    (best as u16, classes > 1)
}

/// Majority class of each superpixel's pixels per role (ties → smallest id).
pub fn aggregate_labels(map: &SuperpixelMap, split: &DatasetSplit, labels: &LabelMap) -> NodeLabels {
    let classes = labels.num_classes();
    let p = map.count();
    let vote = |pixels: &mut dyn Iterator<Item = usize>| {
        let mut counts = vec![vec![0usize; classes + 1]; p];
        for px in pixels {
            counts[map.assignment[px]][labels.label(px) as usize] += 1;
        }
        counts.iter().map(|c| majority(c)).collect::<Vec<_>>()
    };
    let train = vote(&mut split.train_pixels());
    let val = vote(&mut split.val_pixels());
    let test = vote(&mut split.test.iter().copied());
    NodeLabels {
        impure: train.iter().map(|t| t.1).collect(),
        train: train.into_iter().map(|t| t.0).collect(),
        val: val.into_iter().map(|t| t.0).collect(),
        test: test.into_iter().map(|t| t.0).collect(),
        num_classes: classes,
    }
}
