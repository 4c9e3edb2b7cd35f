//! Bisecting k-medoids.
//!
//! A cluster is split with a 2-medoid Voronoi iteration (assign to the nearest
//! medoid, then move each medoid to the member with the smallest total
//! distance). The split is kept when the larger child variance is strictly
//! below the parent's and both children hold at least `min_leaf_size`
//! members; otherwise the parent becomes a leaf. Clusters are processed level
//! by level until no cluster can be split.
//!
//! Distances between points are the project distance from [`crate::corpus`];
//! variances use the plain squared Euclidean norm around the medoid.

use std::collections::HashMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::{scaled_distance, squared_norm, NormVector};
use crate::seed::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BkConfig {
    pub seed: u64,
    /// Random initializations per 2-medoid split; the lowest total
    /// dissimilarity wins.
    pub restarts: usize,
    pub min_leaf_size: usize,
    pub max_kmedoid_iters: usize,
}

impl Default for BkConfig {
    fn default() -> Self {
        BkConfig {
            seed: 0,
            restarts: 5,
            min_leaf_size: 3,
            max_kmedoid_iters: 100,
        }
    }
}

impl BkConfig {
    pub fn with_seed(seed: u64) -> Self {
        BkConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidParameter("min_leaf_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Precomputed pairwise geometry of a point set.
#[derive(Debug, Clone)]
pub struct PointSpace {
    n: usize,
    dist: Vec<f64>,
    sq: Vec<f64>,
}

impl PointSpace {
    /// Builds the space from normalized project vectors of equal length.
    pub fn from_vectors(points: &[NormVector]) -> Result<Self> {
        let m = points.first().map_or(1, Vec::len);
        if m == 0 {
            return Err(Error::InvalidParameter("points have no coordinates".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != m) {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: m,
            });
        }
        Ok(Self::build(points.len(), m, |i, j| {
            squared_norm(&points[i], &points[j])
        }))
    }

    /// One-dimensional points, e.g. distance values.
    pub fn from_scalars(values: &[f64]) -> Self {
        Self::build(values.len(), 1, |i, j| (values[i] - values[j]).powi(2))
    }

    fn build(n: usize, m: usize, sq_fn: impl Fn(usize, usize) -> f64) -> Self {
        let mut sq = vec![0.0; n * n];
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s = sq_fn(i, j);
                let d = scaled_distance(s, m);
                sq[i * n + j] = s;
                sq[j * n + i] = s;
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        PointSpace { n, dist, sq }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Project distance between points `i` and `j`.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Squared Euclidean norm of the difference of points `i` and `j`.
    #[inline]
    pub fn squared(&self, i: usize, j: usize) -> f64 {
        self.sq[i * self.n + j]
    }

    fn check(&self, members: &[usize]) -> Result<()> {
        match members.iter().find(|&&i| i >= self.n) {
            Some(&i) => Err(Error::UnknownIndex(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    /// Ascending point indices.
    pub members: Vec<usize>,
    pub medoid: usize,
    pub variance: f64,
    /// Either empty (leaf) or exactly two children.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ClusterNode>,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ClusterNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub root: ClusterNode,
    pub seed: u64,
    #[serde(skip)]
    leaf_paths: Vec<Vec<u8>>,
    #[serde(skip)]
    leaf_lookup: HashMap<usize, usize>,
}

impl ClusterTree {
    fn new(root: ClusterNode, seed: u64) -> Self {
        let mut leaf_paths = Vec::new();
        let mut path = Vec::new();
        fn walk(node: &ClusterNode, path: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if node.is_leaf() {
                out.push(path.clone());
            } else {
                for (k, c) in node.children.iter().enumerate() {
                    path.push(k as u8);
                    walk(c, path, out);
                    path.pop();
                }
            }
        }
        walk(&root, &mut path, &mut leaf_paths);
        let mut tree = ClusterTree {
            root,
            seed,
            leaf_paths,
            leaf_lookup: HashMap::new(),
        };
        let lookup = tree
            .leaves()
            .iter()
            .enumerate()
            .flat_map(|(k, leaf)| leaf.members.iter().map(move |&i| (i, k)))
            .collect();
        tree.leaf_lookup = lookup;
        tree
    }

    /// Leaves in depth-first (left to right) order.
    pub fn leaves(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::with_capacity(self.leaf_paths.len());
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_paths.len()
    }

    fn node_at(&self, path: &[u8]) -> &ClusterNode {
        path.iter()
            .fold(&self.root, |node, &k| &node.children[k as usize])
    }

    /// Visits every internal node (nodes with two children).
    pub fn internal_nodes(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            if !n.is_leaf() {
                out.push(n);
                stack.extend(n.children.iter());
            }
        }
        out
    }
}

/// The leaf containing `index`.
pub fn leaf_of(tree: &ClusterTree, index: usize) -> Result<&ClusterNode> {
    let k = *tree
        .leaf_lookup
        .get(&index)
        .ok_or(Error::UnknownIndex(index))?;
    Ok(tree.node_at(&tree.leaf_paths[k]))
}

/// Mean squared norm of the members around `center`.
pub fn variance(members: &[usize], center: usize, space: &PointSpace) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidParameter(
            "variance of an empty cluster".into(),
        ));
    }
    space.check(members)?;
    if !members.contains(&center) {
        return Err(Error::InvalidParameter(format!(
            "center {center} is not a member"
        )));
    }
    Ok(variance_unchecked(members, center, space))
}

fn variance_unchecked(members: &[usize], center: usize, space: &PointSpace) -> f64 {
    members
        .iter()
        .map(|&j| space.squared(j, center))
        .sum::<f64>()
        / members.len() as f64
}

/// Member with the smallest total distance to the others; ties go to the
/// lower index. `members` must be ascending and non-empty.
pub fn medoid_of(members: &[usize], space: &PointSpace) -> usize {
    let mut best = members[0];
    let mut best_cost = f64::INFINITY;
    for &q in members {
        let cost: f64 = members.iter().map(|&p| space.distance(q, p)).sum();
        if cost < best_cost {
            best_cost = cost;
            best = q;
        }
    }
    best
}

fn node(mut members: Vec<usize>, medoid: usize, space: &PointSpace) -> ClusterNode {
    members.sort_unstable();
    let variance = variance_unchecked(&members, medoid, space);
    ClusterNode {
        members,
        medoid,
        variance,
        children: Vec::new(),
    }
}

struct SplitResult {
    medoids: [usize; 2],
    groups: [Vec<usize>; 2],
    cost: f64,
}

fn assign(members: &[usize], medoids: [usize; 2], space: &PointSpace) -> [Vec<usize>; 2] {
    let lower = if medoids[0] < medoids[1] { 0 } else { 1 };
    let mut groups = [Vec::new(), Vec::new()];
    for &p in members {
        let side = if p == medoids[0] {
            0
        } else if p == medoids[1] {
            1
        } else {
            let d0 = space.distance(p, medoids[0]);
            let d1 = space.distance(p, medoids[1]);
            if d0 < d1 {
                0
            } else if d1 < d0 {
                1
            } else {
                lower
            }
        };
        groups[side].push(p);
    }
    groups
}

fn run_kmedoids(
    members: &[usize],
    init: [usize; 2],
    space: &PointSpace,
    max_iters: usize,
) -> SplitResult {
    let mut medoids = init;
    let mut groups = assign(members, medoids, space);
    for _ in 0..max_iters {
        let updated = [medoid_of(&groups[0], space), medoid_of(&groups[1], space)];
        if updated == medoids {
            break;
        }
        medoids = updated;
        groups = assign(members, medoids, space);
    }
    let cost = groups
        .iter()
        .zip(medoids)
        .map(|(g, m)| g.iter().map(|&p| space.distance(p, m)).sum::<f64>())
        .sum();
    SplitResult {
        medoids,
        groups,
        cost,
    }
}

/// Splits `members` into two non-empty clusters, keeping the best of
/// `cfg.restarts` seeded initializations.
pub fn kmedoids_split(
    members: &[usize],
    space: &PointSpace,
    cfg: &BkConfig,
) -> Result<(ClusterNode, ClusterNode)> {
    cfg.validate()?;
    if members.len() < 2 {
        return Err(Error::TooFewProjects {
            needed: 2,
            got: members.len(),
        });
    }
    space.check(members)?;
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::TooFewProjects { needed: 2, got: 1 });
    }
    let mut best: Option<SplitResult> = None;
    for r in 0..cfg.restarts {
        let mut rng = seed::rng(seed::derive(cfg.seed, streams::KMEDOIDS, r as u64));
        let pick = sample(&mut rng, sorted.len(), 2);
        let init = [sorted[pick.index(0)], sorted[pick.index(1)]];
        let result = run_kmedoids(&sorted, init, space, cfg.max_kmedoid_iters);
        if best.as_ref().is_none_or(|b| result.cost < b.cost) {
            best = Some(result);
        }
    }
    let SplitResult {
        medoids, groups, ..
    } = best.expect("restarts >= 1");
    let [g0, g1] = groups;
    let a = node(g0, medoids[0], space);
    let b = node(g1, medoids[1], space);
    // Children ordered by their smallest member for stable output.
    Ok(if a.members[0] <= b.members[0] {
        (a, b)
    } else {
        (b, a)
    })
}

/// Builds the bisecting k-medoids tree over `indices`.
pub fn bisect(indices: &[usize], space: &PointSpace, cfg: &BkConfig) -> Result<ClusterTree> {
    cfg.validate()?;
    let mut members = indices.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.is_empty() {
        return Err(Error::EmptyDataset);
    }
    space.check(&members)?;

    let medoid = medoid_of(&members, space);
    let mut arena = vec![node(members, medoid, space)];
    let mut children: Vec<Option<[usize; 2]>> = vec![None];
    let mut level = vec![0usize];
    let mut splits = 0u64;
    while !level.is_empty() {
        let mut next = Vec::new();
        for id in level {
            let size = arena[id].size();
            if size < 2 || size < 2 * cfg.min_leaf_size {
                continue;
            }
            let split_cfg = BkConfig {
                seed: seed::derive(cfg.seed, streams::SPLIT, splits),
                ..*cfg
            };
            splits += 1;
            let (a, b) = kmedoids_split(&arena[id].members, space, &split_cfg)?;
            let accepted = a.variance.max(b.variance) < arena[id].variance
                && a.size() >= cfg.min_leaf_size
                && b.size() >= cfg.min_leaf_size;
            if accepted {
                let ia = arena.len();
                arena.push(a);
                arena.push(b);
                children.push(None);
                children.push(None);
                children[id] = Some([ia, ia + 1]);
                next.push(ia);
                next.push(ia + 1);
            }
        }
        level = next;
    }

    fn assemble(
        id: usize,
        arena: &mut [Option<ClusterNode>],
        children: &[Option<[usize; 2]>],
    ) -> ClusterNode {
        let mut n = arena[id].take().expect("each node assembled once");
        if let Some([a, b]) = children[id] {
            n.children = vec![assemble(a, arena, children), assemble(b, arena, children)];
        }
        n
    }
    let mut slots: Vec<Option<ClusterNode>> = arena.into_iter().map(Some).collect();
    let root = assemble(0, &mut slots, &children);
    Ok(ClusterTree::new(root, cfg.seed))
}

/// Bisecting k-medoids over one-dimensional values (each value is a point).
pub fn bisect_scalar(values: &[f64], cfg: &BkConfig) -> Result<ClusterTree> {
    let space = PointSpace::from_scalars(values);
    let all: Vec<usize> = (0..values.len()).collect();
    bisect(&all, &space, cfg)
}
