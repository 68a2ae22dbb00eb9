//! Nearest-edge queries against a fixed base tree.
//!
//! A segment tree is laid over preorder positions `1..=n` (padded to a power
//! of two). Node `z` stores every edge `(u, v)` with `u` a leaf under `z`,
//! keyed by `(dfn(v), edge id)`. Each edge is stored once from each endpoint.
//! A query covers the source's preorder range with canonical nodes and, in
//! each, probes for the first key inside the path's chain intervals.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::graph::{edge_key, EdgeId, Graph, Vertex, ROOT};
use crate::tree::{DfsTree, TreeError, TreePath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("invalid query path: {0}")]
    InvalidPath(#[from] TreeError),
    #[error("source subtree of {0} intersects the query path")]
    SourceIntersectsPath(Vertex),
    #[error("vertex {0} is not in the base tree")]
    UnknownVertex(Vertex),
    #[error("edge ({0}, {1}) is not present")]
    EdgeNotPresent(Vertex, Vertex),
}

/// Answer to a query: the edge `(on_path, source)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub on_path: Vertex,
    pub source: Vertex,
    pub edge: EdgeId,
}

/// Snapshot of the probe instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProbeStats {
    pub queries: u64,
    pub probes: u64,
    pub max_probes: u64,
}

#[derive(Debug, Default)]
struct Counters {
    queries: AtomicU64,
    probes: AtomicU64,
    max_probes: AtomicU64,
}

impl Counters {
    fn record(&self, probes: u64) {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.probes.fetch_add(probes, Ordering::Relaxed);
        self.max_probes.fetch_max(probes, Ordering::Relaxed);
    }

    fn snapshot(&self) -> ProbeStats {
        ProbeStats {
            queries: self.queries.load(Ordering::Relaxed),
            probes: self.probes.load(Ordering::Relaxed),
            max_probes: self.max_probes.load(Ordering::Relaxed),
        }
    }

    fn reset(&self) {
        self.queries.store(0, Ordering::Relaxed);
        self.probes.store(0, Ordering::Relaxed);
        self.max_probes.store(0, Ordering::Relaxed);
    }
}

type Key = (u32, u32);

#[derive(Debug)]
pub struct QueryStructure {
    tree: DfsTree,
    leaves: usize,
    sets: Vec<BTreeSet<Key>>,
    edges: Vec<Option<(Vertex, Vertex)>>,
    live: Vec<bool>,
    ids: HashMap<(Vertex, Vertex), EdgeId>,
    deleted: Vec<EdgeId>,
    counters: Counters,
}

fn leaf_count(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn edge_table(g: &Graph, t: &DfsTree) -> Vec<Option<(Vertex, Vertex)>> {
    let mut edges = vec![None; g.edge_id_bound()];
    for (id, u, v) in g.edges() {
        assert!(t.contains(u) && t.contains(v), "edge ({u}, {v}) leaves the tree");
        edges[id] = Some((u, v));
    }
    edges
}

impl QueryStructure {
    /// Builds the structure by merging sorted child lists bottom-up.
    pub fn build(g: &Graph, tree: DfsTree) -> Self {
        let edges = edge_table(g, &tree);
        let leaves = leaf_count(tree.vertex_count());
        let mut lists: Vec<Vec<Key>> = vec![Vec::new(); 2 * leaves];
        for (id, e) in edges.iter().enumerate() {
            if let Some((u, v)) = *e {
                let (du, dv) = (tree.dfn(u), tree.dfn(v));
                lists[leaves + du - 1].push((dv as u32, id as u32));
                lists[leaves + dv - 1].push((du as u32, id as u32));
            }
        }
        for l in &mut lists[leaves..] {
            l.sort_unstable();
        }
        for z in (1..leaves).rev() {
            let merged = merge(&lists[2 * z], &lists[2 * z + 1]);
            lists[z] = merged;
        }
        let sets = lists.into_iter().map(BTreeSet::from_iter).collect();
        Self::assemble(tree, leaves, sets, edges)
    }

    fn assemble(tree: DfsTree, leaves: usize, sets: Vec<BTreeSet<Key>>, edges: Vec<Option<(Vertex, Vertex)>>) -> Self {
        let live = edges.iter().map(Option::is_some).collect();
        let ids = edges
            .iter()
            .enumerate()
            .filter_map(|(id, e)| e.map(|(u, v)| (edge_key(u, v), id)))
            .collect();
        QueryStructure { tree, leaves, sets, edges, live, ids, deleted: Vec::new(), counters: Counters::default() }
    }

    pub fn tree(&self) -> &DfsTree {
        &self.tree
    }

    /// Total number of stored `(dfn, edge)` entries.
    pub fn entry_count(&self) -> usize {
        self.sets.iter().map(BTreeSet::len).sum()
    }

    /// Number of segment-tree nodes on each leaf-to-root path.
    pub fn levels(&self) -> usize {
        self.leaves.trailing_zeros() as usize + 1
    }

    pub fn live_edge_count(&self) -> usize {
        self.live.iter().filter(|&&b| b).count()
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        self.ids.get(&edge_key(u, v)).copied()
    }

    pub fn is_live(&self, u: Vertex, v: Vertex) -> bool {
        self.edge_id(u, v).is_some_and(|id| self.live[id])
    }

    pub fn endpoints(&self, id: EdgeId) -> Option<(Vertex, Vertex)> {
        self.edges.get(id).copied().flatten()
    }

    fn path_to_root(&self, v: Vertex) -> impl Iterator<Item = usize> {
        let mut z = self.leaves + self.tree.dfn(v) - 1;
        std::iter::from_fn(move || {
            if z == 0 {
                return None;
            }
            let cur = z;
            z >>= 1;
            Some(cur)
        })
    }

    fn set_entries(&mut self, id: EdgeId, insert: bool) {
        let (u, v) = self.edges[id].expect("known edge");
        for (a, b) in [(u, v), (v, u)] {
            let key = (self.tree.dfn(b) as u32, id as u32);
            let nodes: Vec<usize> = self.path_to_root(a).collect();
            for z in nodes {
                if insert {
                    self.sets[z].insert(key);
                } else {
                    self.sets[z].remove(&key);
                }
            }
        }
    }

    /// Removes a live edge from every node set holding it.
    pub fn delete_edge(&mut self, u: Vertex, v: Vertex) -> Result<EdgeId, QueryError> {
        let id = self.edge_id(u, v).filter(|&id| self.live[id]).ok_or(QueryError::EdgeNotPresent(u, v))?;
        self.set_entries(id, false);
        self.live[id] = false;
        self.deleted.push(id);
        Ok(id)
    }

    /// Deletes every live edge incident to `v`; returns how many were removed.
    pub fn delete_incident(&mut self, v: Vertex, g: &Graph) -> usize {
        let mut count = 0;
        for (u, _) in g.neighbors(v) {
            if self.delete_edge(v, u).is_ok() {
                count += 1;
            }
        }
        count
    }

    /// Reinserts every edge deleted since the last restore.
    pub fn restore_all(&mut self) {
        for id in std::mem::take(&mut self.deleted) {
            self.set_entries(id, true);
            self.live[id] = true;
        }
    }

    pub fn stats(&self) -> ProbeStats {
        self.counters.snapshot()
    }

    pub fn reset_stats(&self) {
        self.counters.reset()
    }

    fn check_vertex(&self, v: Vertex) -> Result<(), QueryError> {
        if v == ROOT || !self.tree.contains(v) {
            return Err(QueryError::UnknownVertex(v));
        }
        Ok(())
    }

    fn orient(&self, x: Vertex, y: Vertex) -> Result<(TreePath, bool), QueryError> {
        for v in [x, y] {
            if v == ROOT || !self.tree.contains(v) {
                return Err(TreeError::UnknownVertex(v).into());
            }
        }
        if self.tree.is_ancestor(x, y) {
            Ok((TreePath::new(x, y), true))
        } else if self.tree.is_ancestor(y, x) {
            Ok((TreePath::new(y, x), false))
        } else {
            Err(TreeError::NotAncestorDescendant(x, y).into())
        }
    }

    /// Edge from `w` to `path(x, y)` whose path endpoint is nearest to `x`.
    pub fn query_vertex(&self, w: Vertex, x: Vertex, y: Vertex) -> Result<Option<Hit>, QueryError> {
        self.query_vertex_probed(w, x, y).map(|(h, _)| h)
    }

    /// Edge from `T(w)` to `path(x, y)` whose path endpoint is nearest to `x`.
    pub fn query_subtree(&self, w: Vertex, x: Vertex, y: Vertex) -> Result<Option<Hit>, QueryError> {
        self.query_subtree_probed(w, x, y).map(|(h, _)| h)
    }

    /// [`QueryStructure::query_vertex`] together with its probe count.
    pub fn query_vertex_probed(&self, w: Vertex, x: Vertex, y: Vertex) -> Result<(Option<Hit>, u64), QueryError> {
        self.check_vertex(w)?;
        let (path, from_top) = self.orient(x, y)?;
        let d = self.tree.dfn(w);
        Ok(self.search(&[self.leaves + d - 1], path, from_top))
    }

    /// [`QueryStructure::query_subtree`] together with its probe count.
    pub fn query_subtree_probed(&self, w: Vertex, x: Vertex, y: Vertex) -> Result<(Option<Hit>, u64), QueryError> {
        self.check_vertex(w)?;
        let (path, from_top) = self.orient(x, y)?;
        if self.tree.is_ancestor(w, path.bottom) {
            return Err(QueryError::SourceIntersectsPath(w));
        }
        let (a, b) = self.tree.sub_interval(w);
        Ok(self.search(&self.cover(a, b), path, from_top))
    }

    /// Canonical nodes covering preorder range `a..=b`.
    fn cover(&self, a: usize, b: usize) -> Vec<usize> {
        let (mut l, mut r) = (self.leaves + a - 1, self.leaves + b);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        while l < r {
            if l & 1 == 1 {
                left.push(l);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                right.push(r);
            }
            l >>= 1;
            r >>= 1;
        }
        left.extend(right.into_iter().rev());
        left
    }

    fn search(&self, nodes: &[usize], path: TreePath, from_top: bool) -> (Option<Hit>, u64) {
        let ivs: Vec<(u32, u32)> = self
            .tree
            .decompose_path(path)
            .expect("path checked")
            .into_iter()
            .map(|(a, b)| (a as u32, b as u32))
            .collect();
        let mut probes = 0u64;
        let mut best: Option<Key> = None;
        for &z in nodes {
            let set = &self.sets[z];
            let found = if from_top {
                probe_min(set, &ivs, best.map(|k| k.0), &mut probes)
            } else {
                probe_max(set, &ivs, best.map(|k| k.0), &mut probes)
            };
            if found.is_some() {
                best = found;
            }
        }
        self.counters.record(probes);
        let hit = best.map(|(d, id)| {
            let id = id as EdgeId;
            let (u, v) = self.edges[id].expect("stored edge");
            let on_path = self.tree.vertex_at(d as usize);
            Hit { on_path, source: if on_path == u { v } else { u }, edge: id }
        });
        (hit, probes)
    }
}

/// Smallest key inside the intervals and strictly below `bound`.
fn probe_min(set: &BTreeSet<Key>, ivs: &[(u32, u32)], bound: Option<u32>, probes: &mut u64) -> Option<Key> {
    let mut i = 0;
    while i < ivs.len() {
        *probes += 1;
        let &k = set.range((ivs[i].0, 0)..).next()?;
        if bound.is_some_and(|b| k.0 >= b) {
            return None;
        }
        if k.0 <= ivs[i].1 {
            return Some(k);
        }
        let j = ivs.partition_point(|iv| iv.1 < k.0);
        if j == ivs.len() {
            return None;
        }
        if k.0 >= ivs[j].0 {
            return Some(k);
        }
        i = j;
    }
    None
}

/// Largest key inside the intervals and strictly above `bound`.
fn probe_max(set: &BTreeSet<Key>, ivs: &[(u32, u32)], bound: Option<u32>, probes: &mut u64) -> Option<Key> {
    let mut i = ivs.len();
    while i > 0 {
        let iv = ivs[i - 1];
        *probes += 1;
        let &k = set.range(..=(iv.1, u32::MAX)).next_back()?;
        if bound.is_some_and(|b| k.0 <= b) {
            return None;
        }
        if k.0 >= iv.0 {
            return Some(k);
        }
        let j = ivs.partition_point(|iv| iv.0 <= k.0);
        if j == 0 {
            return None;
        }
        if k.0 <= ivs[j - 1].1 {
            return Some(k);
        }
        i = j;
    }
    None
}

fn merge(a: &[Key], b: &[Key]) -> Vec<Key> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Builds a [`QueryStructure`] a bounded amount of work at a time. One unit
/// of work inserts one edge into all its node sets.
#[derive(Debug)]
pub struct IncrementalBuild {
    tree: DfsTree,
    leaves: usize,
    sets: Vec<BTreeSet<Key>>,
    edges: Vec<Option<(Vertex, Vertex)>>,
    pending: Vec<EdgeId>,
    done: usize,
}

impl IncrementalBuild {
    pub fn new(g: &Graph, tree: DfsTree) -> Self {
        let edges = edge_table(g, &tree);
        let leaves = leaf_count(tree.vertex_count());
        let pending = edges.iter().enumerate().filter(|(_, e)| e.is_some()).map(|(id, _)| id).collect();
        IncrementalBuild { tree, leaves, sets: vec![BTreeSet::new(); 2 * leaves], edges, pending, done: 0 }
    }

    /// Total work units the build needs.
    pub fn total_work(&self) -> usize {
        self.pending.len()
    }

    pub fn remaining(&self) -> usize {
        self.pending.len() - self.done
    }

    pub fn is_done(&self) -> bool {
        self.remaining() == 0
    }

    /// Performs up to `budget` work units; returns how many were done.
    pub fn step(&mut self, budget: usize) -> usize {
        let n = budget.min(self.remaining());
        for &id in &self.pending[self.done..self.done + n] {
            let (u, v) = self.edges[id].expect("known edge");
            for (a, b) in [(u, v), (v, u)] {
                let key = (self.tree.dfn(b) as u32, id as u32);
                let mut z = self.leaves + self.tree.dfn(a) - 1;
                while z > 0 {
                    self.sets[z].insert(key);
                    z >>= 1;
                }
            }
        }
        self.done += n;
        n
    }

    pub fn tree(&self) -> &DfsTree {
        &self.tree
    }

    /// Completes any remaining work and returns the structure.
    pub fn finish(mut self) -> QueryStructure {
        let rest = self.remaining();
        self.step(rest);
        QueryStructure::assemble(self.tree, self.leaves, self.sets, self.edges)
    }
}
