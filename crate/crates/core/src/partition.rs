//! Disjoint tree partitioning of the unvisited part of the updated graph.
//!
//! Every surviving vertex is either on one of a few ancestor-descendant paths
//! of the base tree, inside one of many failure-free base subtrees, or already
//! visited by the rebuild. No surviving base edge joins two distinct subtrees.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{edge_key, Graph, UpdateBatch, Vertex, ROOT};
use crate::tree::{DfsTree, TreePath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("batch of {k} updates exceeds the limit for {n} vertices")]
    BatchTooLarge { k: usize, n: usize },
    #[error("vertex {0} is not inside a tree of the partition")]
    NotInTree(Vertex),
    #[error("vertex {0} is not on a path of the partition")]
    NotInPath(Vertex),
    #[error("vertex {0} is not in the base tree")]
    UnknownVertex(Vertex),
}

pub type PathId = usize;

/// Where an unvisited vertex currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    Absent,
    Path(PathId),
    Tree,
    Visited,
}

/// A path of the partition. Inserted vertices form singleton paths outside
/// the base tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSeg {
    pub span: TreePath,
    pub inserted: bool,
    /// How many extractions this path (or its remainders) has served.
    pub entries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    FromTree,
    FromPath,
}

/// A path removed from the partition by the rebuild.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    /// Vertices in traversal order, entry vertex first.
    pub order: Vec<Vertex>,
    /// The same vertices as a base-tree path; `None` for an inserted vertex.
    pub span: Option<TreePath>,
    pub origin: Origin,
    /// Roots of subtrees that started hanging off the extracted path.
    pub new_trees: Vec<Vertex>,
}

#[derive(Debug, Clone)]
pub struct Partition<'t> {
    t: &'t DfsTree,
    tags: Vec<Member>,
    paths: Vec<Option<PathSeg>>,
    path_count: usize,
    trees: BTreeMap<usize, Vertex>,
    initial_paths: usize,
    max_paths: usize,
    max_entries: usize,
}

impl<'t> Partition<'t> {
    /// Partitions the base tree `t` around the failures of `batch`.
    pub fn build(t: &'t DfsTree, batch: &UpdateBatch) -> Result<Self, PartitionError> {
        let n = t.vertex_count().max(1);
        if batch.len() > n {
            return Err(PartitionError::BatchTooLarge { k: batch.len(), n });
        }
        let slots = batch
            .vertex_inserts
            .iter()
            .map(|vi| vi.id + 1)
            .chain([t.slot_count()])
            .max()
            .unwrap();
        let mut tags = vec![Member::Absent; slots];
        for &v in &t.preorder()[1..] {
            tags[v] = Member::Tree;
        }
        let trees = t.children(ROOT).iter().map(|&c| (t.dfn(c), c)).collect();
        let mut part = Partition {
            t,
            tags,
            paths: Vec::new(),
            path_count: 0,
            trees,
            initial_paths: 0,
            max_paths: 0,
            max_entries: 0,
        };

        for &v in &batch.vertex_fails {
            part.fail_vertex(v)?;
        }
        for &(a, b) in &batch.edge_fails {
            let (p, c) = match (t.parent(a), t.parent(b)) {
                (_, Some(pb)) if pb == a => (a, b),
                (Some(pa), _) if pa == b => (b, a),
                _ => continue,
            };
            part.fail_tree_edge(p, c);
        }
        for vi in &batch.vertex_inserts {
            part.tags[vi.id] = Member::Path(part.paths.len());
            part.add_path(PathSeg { span: TreePath::single(vi.id), inserted: true, entries: 0 });
        }
        part.initial_paths = part.path_count;
        part.max_paths = part.path_count;
        Ok(part)
    }

    pub fn tree(&self) -> &'t DfsTree {
        self.t
    }

    pub fn member(&self, v: Vertex) -> Member {
        self.tags.get(v).copied().unwrap_or(Member::Absent)
    }

    pub fn path(&self, id: PathId) -> Option<&PathSeg> {
        self.paths.get(id).and_then(Option::as_ref)
    }

    /// Live paths with their ids.
    pub fn paths(&self) -> impl Iterator<Item = (PathId, &PathSeg)> {
        self.paths.iter().enumerate().filter_map(|(i, p)| p.as_ref().map(|p| (i, p)))
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    /// Roots of the current subtrees, in preorder.
    pub fn tree_roots(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.trees.values().copied()
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn initial_path_count(&self) -> usize {
        self.initial_paths
    }

    pub fn max_path_count(&self) -> usize {
        self.max_paths
    }

    /// Largest number of extractions any single original path has served.
    pub fn max_path_entries(&self) -> usize {
        self.max_entries
    }

    /// Root of the subtree holding `v`, if `v` is inside one.
    pub fn tree_root_of(&self, v: Vertex) -> Option<Vertex> {
        if self.member(v) != Member::Tree {
            return None;
        }
        let (_, &x) = self.trees.range(..=self.t.dfn(v)).next_back()?;
        self.t.is_ancestor(x, v).then_some(x)
    }

    fn add_path(&mut self, seg: PathSeg) -> PathId {
        let id = self.paths.len();
        self.paths.push(Some(seg));
        self.path_count += 1;
        self.max_paths = self.max_paths.max(self.path_count);
        id
    }

    fn new_base_path(&mut self, top: Vertex, bottom: Vertex) {
        let id = self.paths.len();
        for v in self.t.path_vertices(TreePath::new(top, bottom)) {
            self.tags[v] = Member::Path(id);
        }
        self.add_path(PathSeg { span: TreePath::new(top, bottom), inserted: false, entries: 0 });
    }

    fn add_tree(&mut self, c: Vertex) {
        self.trees.insert(self.t.dfn(c), c);
    }

    /// Adds the subtrees hanging off `path(top, bottom)` as trees, skipping
    /// the child `skip`. Returns their roots.
    fn hang_off(&mut self, top: Vertex, bottom: Vertex, skip: Option<Vertex>) -> Vec<Vertex> {
        let mut out = Vec::new();
        let mut below: Option<Vertex> = None;
        let mut w = bottom;
        loop {
            for &c in self.t.children(w) {
                if Some(c) != below && Some(c) != skip {
                    out.push(c);
                }
            }
            if w == top {
                break;
            }
            below = Some(w);
            w = self.t.parent(w).unwrap();
        }
        for &c in &out {
            self.add_tree(c);
        }
        out
    }

    fn fail_vertex(&mut self, v: Vertex) -> Result<(), PartitionError> {
        if v == ROOT || !self.t.contains(v) {
            return Err(PartitionError::UnknownVertex(v));
        }
        match self.member(v) {
            Member::Tree => {
                let x = self.tree_root_of(v).unwrap();
                self.trees.remove(&self.t.dfn(x));
                if v != x {
                    let p = self.t.parent(v).unwrap();
                    self.new_base_path(x, p);
                    self.hang_off(x, p, Some(v));
                }
                for &c in self.t.children(v) {
                    self.add_tree(c);
                }
            }
            Member::Path(id) => self.split_path(id, v, true),
            _ => {}
        }
        self.tags[v] = Member::Absent;
        Ok(())
    }

    /// Splits path `id` at `v`: with `drop_v` the vertex is removed, otherwise
    /// the cut falls between `v` and its path child.
    fn split_path(&mut self, id: PathId, v: Vertex, drop_v: bool) {
        let seg = self.paths[id].take().unwrap();
        self.path_count -= 1;
        let TreePath { top, bottom } = seg.span;
        let t = self.t;
        let upper = if drop_v {
            (v != top).then(|| (top, t.parent(v).unwrap()))
        } else {
            Some((top, v))
        };
        let lower = (v != bottom).then(|| (t.ancestor_at_depth(bottom, t.depth(v) + 1), bottom));
        for (a, b) in upper.into_iter().chain(lower) {
            self.new_base_path(a, b);
        }
    }

    fn fail_tree_edge(&mut self, p: Vertex, c: Vertex) {
        match self.member(c) {
            Member::Tree => {
                let x = self.tree_root_of(c).unwrap();
                if x == c {
                    return;
                }
                self.trees.remove(&self.t.dfn(x));
                self.new_base_path(x, p);
                self.hang_off(x, p, None);
            }
            Member::Path(id) if self.member(p) == Member::Path(id) => self.split_path(id, p, false),
            _ => {}
        }
    }

    /// Extracts `path(u, root)` from the subtree holding `u`.
    pub fn extract_from_tree(&mut self, u: Vertex) -> Result<Extracted, PartitionError> {
        let x = self.tree_root_of(u).ok_or(PartitionError::NotInTree(u))?;
        self.trees.remove(&self.t.dfn(x));
        let new_trees = self.hang_off(x, u, None);
        let mut order = self.t.path_vertices(TreePath::new(x, u));
        order.reverse();
        for &w in &order {
            self.tags[w] = Member::Visited;
        }
        Ok(Extracted { order, span: Some(TreePath::new(x, u)), origin: Origin::FromTree, new_trees })
    }

    /// Extracts the part of `u`'s path from `u` to its farther end. The
    /// remainder keeps the path's id.
    pub fn extract_from_path(&mut self, u: Vertex) -> Result<Extracted, PartitionError> {
        let Member::Path(id) = self.member(u) else {
            return Err(PartitionError::NotInPath(u));
        };
        let seg = self.paths[id].as_mut().unwrap();
        seg.entries += 1;
        self.max_entries = self.max_entries.max(seg.entries);
        let PathSeg { span: TreePath { top, bottom }, inserted, .. } = *seg;
        if inserted {
            self.paths[id] = None;
            self.path_count -= 1;
            self.tags[u] = Member::Visited;
            return Ok(Extracted { order: vec![u], span: None, origin: Origin::FromPath, new_trees: Vec::new() });
        }
        let t = self.t;
        let up = t.depth(u) - t.depth(top);
        let down = t.depth(bottom) - t.depth(u);
        let (span, order, rest) = if up >= down {
            let mut order = t.path_vertices(TreePath::new(top, u));
            order.reverse();
            let rest = (u != bottom).then(|| TreePath::new(t.ancestor_at_depth(bottom, t.depth(u) + 1), bottom));
            (TreePath::new(top, u), order, rest)
        } else {
            let order = t.path_vertices(TreePath::new(u, bottom));
            let rest = (u != top).then(|| TreePath::new(top, t.parent(u).unwrap()));
            (TreePath::new(u, bottom), order, rest)
        };
        match rest {
            Some(r) => self.paths[id].as_mut().unwrap().span = r,
            None => {
                self.paths[id] = None;
                self.path_count -= 1;
            }
        }
        for &w in &order {
            self.tags[w] = Member::Visited;
        }
        Ok(Extracted { order, span: Some(span), origin: Origin::FromPath, new_trees: Vec::new() })
    }

    /// Extracts from whichever kind of super vertex holds `u`.
    pub fn extract(&mut self, u: Vertex) -> Result<Extracted, PartitionError> {
        match self.member(u) {
            Member::Tree => self.extract_from_tree(u),
            Member::Path(_) => self.extract_from_path(u),
            _ => Err(PartitionError::NotInPath(u)),
        }
    }

    /// Smallest unvisited vertex with id at least `from`, for restarts.
    pub fn next_unvisited(&self, from: Vertex) -> Option<Vertex> {
        (from.max(1)..self.tags.len()).find(|&v| matches!(self.tags[v], Member::Path(_) | Member::Tree))
    }
}

/// Checks every partition condition exhaustively, reporting the first
/// violation. `base` is the graph the tree was built on.
pub fn validate_partition(base: &Graph, t: &DfsTree, batch: &UpdateBatch, part: &Partition<'_>) -> Result<(), String> {
    let failed_v: BTreeSet<Vertex> = batch.vertex_fails.iter().copied().collect();
    let failed_e: BTreeSet<(Vertex, Vertex)> = batch.edge_fails.iter().map(|&(a, b)| edge_key(a, b)).collect();
    let inserted: BTreeSet<Vertex> = batch.vertex_inserts.iter().map(|vi| vi.id).collect();
    let cuts = |a: Vertex, b: Vertex| failed_e.contains(&edge_key(a, b));

    if part.path_count() > batch.len() {
        return Err(format!("{} paths for a batch of {}", part.path_count(), batch.len()));
    }
    let mut counted = 0;
    for (id, seg) in part.paths() {
        let verts = if seg.inserted {
            if !inserted.contains(&seg.span.top) || seg.span.top != seg.span.bottom {
                return Err(format!("path {id} is not a singleton inserted vertex"));
            }
            vec![seg.span.top]
        } else {
            t.check_path(seg.span).map_err(|e| format!("path {id}: {e}"))?;
            t.path_vertices(seg.span)
        };
        for (i, &v) in verts.iter().enumerate() {
            if failed_v.contains(&v) {
                return Err(format!("path {id} holds failed vertex {v}"));
            }
            if i > 0 && cuts(verts[i - 1], v) {
                return Err(format!("path {id} holds failed edge ({}, {v})", verts[i - 1]));
            }
            if part.member(v) != Member::Path(id) {
                return Err(format!("vertex {v} on path {id} is tagged {:?}", part.member(v)));
            }
        }
        counted += verts.len();
    }
    for x in part.tree_roots() {
        if x == ROOT || !t.contains(x) {
            return Err(format!("tree root {x} not in base tree"));
        }
        let (lo, hi) = t.sub_interval(x);
        for i in lo..=hi {
            let v = t.vertex_at(i);
            if failed_v.contains(&v) {
                return Err(format!("tree {x} holds failed vertex {v}"));
            }
            if v != x && cuts(v, t.parent(v).unwrap()) {
                return Err(format!("tree {x} holds failed edge ({v}, {})", t.parent(v).unwrap()));
            }
            if part.member(v) != Member::Tree || part.tree_root_of(v) != Some(x) {
                return Err(format!("vertex {v} of tree {x} is tagged {:?}", part.member(v)));
            }
        }
        counted += hi - lo + 1;
    }
    for (_, a, b) in base.edges() {
        if failed_v.contains(&a) || failed_v.contains(&b) || cuts(a, b) {
            continue;
        }
        if let (Some(ra), Some(rb)) = (part.tree_root_of(a), part.tree_root_of(b)) {
            if ra != rb {
                return Err(format!("edge ({a}, {b}) joins trees {ra} and {rb}"));
            }
        }
    }
    let surviving: BTreeSet<Vertex> =
        base.vertices().filter(|v| !failed_v.contains(v)).chain(inserted.iter().copied()).collect();
    let slots = surviving.iter().copied().max().unwrap_or(0).max(part.tags.len().saturating_sub(1));
    let mut visited = 0;
    for v in 1..=slots {
        let m = part.member(v);
        if (m == Member::Absent) == surviving.contains(&v) {
            return Err(format!("vertex {v} tagged {m:?} but surviving = {}", surviving.contains(&v)));
        }
        if m == Member::Visited {
            visited += 1;
        }
    }
    if counted + visited != surviving.len() {
        return Err(format!("pieces cover {} of {} surviving vertices", counted + visited, surviving.len()));
    }
    Ok(())
}

/// Boolean form of [`validate_partition`].
pub fn check_partition(base: &Graph, t: &DfsTree, batch: &UpdateBatch, part: &Partition<'_>) -> bool {
    validate_partition(base, t, batch, part).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::graph_a;
    use crate::tree::{build_tree, VisitOrder};

    fn roots(p: &Partition<'_>) -> BTreeSet<Vertex> {
        p.tree_roots().collect()
    }

    fn spans(p: &Partition<'_>) -> Vec<TreePath> {
        p.paths().map(|(_, s)| s.span).collect()
    }

    #[test]
    fn empty_batch_keeps_component_trees() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch::default();
        let p = Partition::build(&t, &b).unwrap();
        assert_eq!(p.path_count(), 0);
        assert_eq!(roots(&p), [1].into());
        assert!(check_partition(&g, &t, &b, &p));
    }

    #[test]
    fn vertex_failure_in_graph_a() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![2], ..Default::default() };
        let p = Partition::build(&t, &b).unwrap();
        assert_eq!(spans(&p), vec![TreePath::single(1)]);
        assert_eq!(roots(&p), [7, 3, 5].into());
        validate_partition(&g, &t, &b, &p).unwrap();
    }

    #[test]
    fn tree_edge_failure_in_graph_a() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { edge_fails: vec![(2, 5)], ..Default::default() };
        let p = Partition::build(&t, &b).unwrap();
        assert_eq!(spans(&p), vec![TreePath::new(1, 2)]);
        assert_eq!(roots(&p), [7, 3, 5].into());
        validate_partition(&g, &t, &b, &p).unwrap();
    }

    #[test]
    fn back_edge_failure_changes_nothing() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { edge_fails: vec![(1, 4)], ..Default::default() };
        let p = Partition::build(&t, &b).unwrap();
        assert_eq!(p.path_count(), 0);
        validate_partition(&g, &t, &b, &p).unwrap();
    }

    #[test]
    fn failure_on_a_path_splits_it() {
        // Chain 1-2-...-7: failing 7 turns path(1,6) into a path, failing 4
        // splits it, and failing the edge (2,3) splits the upper half again.
        let edges: Vec<_> = (1..7).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(7, &edges).unwrap();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![7, 4], edge_fails: vec![(2, 3)], ..Default::default() };
        let p = Partition::build(&t, &b).unwrap();
        validate_partition(&g, &t, &b, &p).unwrap();
        let got: BTreeSet<_> = spans(&p).into_iter().map(|s| (s.top, s.bottom)).collect();
        assert_eq!(got, [(1, 2), (3, 3), (5, 6)].into());
        assert_eq!(p.tree_count(), 0);
    }

    #[test]
    fn inserted_vertices_are_singleton_paths() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch {
            vertex_inserts: vec![crate::graph::VertexInsert { id: 9, neighbors: vec![1, 8] }],
            ..Default::default()
        };
        let mut p = Partition::build(&t, &b).unwrap();
        validate_partition(&g, &t, &b, &p).unwrap();
        assert_eq!(p.member(9), Member::Path(0));
        let e = p.extract_from_path(9).unwrap();
        assert_eq!(e.order, vec![9]);
        assert_eq!(e.span, None);
        assert_eq!(p.path_count(), 0);
        validate_partition(&g, &t, &b, &p).unwrap();
    }

    #[test]
    fn extract_from_tree_hangs_subtrees() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![1], ..Default::default() };
        let mut p = Partition::build(&t, &b).unwrap();
        assert_eq!(roots(&p), [2, 7].into());
        let e = p.extract_from_tree(4).unwrap();
        assert_eq!(e.order, vec![4, 3, 2]);
        assert_eq!(e.new_trees, vec![5]);
        assert_eq!(roots(&p), [5, 7].into());
        validate_partition(&g, &t, &b, &p).unwrap();
        assert!(matches!(p.extract_from_tree(4), Err(PartitionError::NotInTree(4))));
    }

    #[test]
    fn extract_singleton_and_root_entries() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![1], ..Default::default() };
        let mut p = Partition::build(&t, &b).unwrap();
        let e = p.extract_from_tree(8).unwrap();
        assert_eq!(e.order, vec![8, 7]);
        assert!(e.new_trees.is_empty());
        let e = p.extract_from_tree(2).unwrap();
        assert_eq!(e.order, vec![2]);
        assert_eq!(e.new_trees, vec![3, 5]);
        validate_partition(&g, &t, &b, &p).unwrap();
    }

    fn chain_partition(len: usize) -> (Graph, DfsTree) {
        // Vertex 1 fails, leaving the chain 2..=len+1 as one path via an
        // extra failed edge below its bottom.
        let edges: Vec<_> = (1..=len + 1).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(len + 2, &edges).unwrap();
        let t = build_tree(&g, VisitOrder::Ascending);
        (g, t)
    }

    #[test]
    fn extract_from_path_goes_to_farther_end() {
        // Path <2,3,4,5,6> (top 2), entered at 5: farther end is 2.
        let (g, t) = chain_partition(5);
        let b = UpdateBatch { vertex_fails: vec![1], edge_fails: vec![(6, 7)], ..Default::default() };
        let mut p = Partition::build(&t, &b).unwrap();
        // Failing 1 leaves T(2) as a tree; failing (6,7) turns path(2,6) into a path.
        assert_eq!(spans(&p), vec![TreePath::new(2, 6)]);
        let e = p.extract_from_path(5).unwrap();
        assert_eq!(e.order, vec![5, 4, 3, 2]);
        assert_eq!(spans(&p), vec![TreePath::single(6)]);
        validate_partition(&g, &t, &b, &p).unwrap();
        let e = p.extract_from_path(6).unwrap();
        assert_eq!(e.order, vec![6]);
        assert_eq!(p.path_count(), 0);
        assert_eq!(p.max_path_entries(), 2);
    }

    #[test]
    fn extract_at_endpoint_takes_whole_path() {
        let (_, t) = chain_partition(5);
        let b = UpdateBatch { vertex_fails: vec![1], edge_fails: vec![(6, 7)], ..Default::default() };
        let mut p = Partition::build(&t, &b).unwrap();
        let e = p.extract_from_path(6).unwrap();
        assert_eq!(e.order, vec![6, 5, 4, 3, 2]);
        assert_eq!(p.path_count(), 0);
    }

    #[test]
    fn midpoint_tie_goes_toward_top() {
        let (_, t) = chain_partition(7);
        let b = UpdateBatch { vertex_fails: vec![1], edge_fails: vec![(8, 9)], ..Default::default() };
        let mut p = Partition::build(&t, &b).unwrap();
        assert_eq!(spans(&p), vec![TreePath::new(2, 8)]);
        let e = p.extract_from_path(5).unwrap();
        assert_eq!(e.order, vec![5, 4, 3, 2]);
        assert_eq!(spans(&p), vec![TreePath::new(6, 8)]);
    }

    #[test]
    fn checker_rejects_bad_partitions() {
        let g = graph_a();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![2], ..Default::default() };
        let p = Partition::build(&t, &b).unwrap();

        // Two trees joined by an edge: re-add (3,5) as if it were a base edge.
        let mut joined = g.clone();
        joined.add_edge(3, 5).unwrap();
        assert!(!check_partition(&joined, &t, &b, &p));

        // A surviving vertex missing from every piece.
        let mut missing = p.clone();
        missing.trees.remove(&t.dfn(7));
        assert!(!check_partition(&g, &t, &b, &missing));
    }

    #[test]
    fn batch_too_large() {
        let g = Graph::from_edges(2, &[(1, 2)]).unwrap();
        let t = build_tree(&g, VisitOrder::Ascending);
        let b = UpdateBatch { vertex_fails: vec![1, 2], edge_fails: vec![(1, 2)], ..Default::default() };
        assert!(matches!(Partition::build(&t, &b), Err(PartitionError::BatchTooLarge { k: 3, n: 2 })));
    }
}
