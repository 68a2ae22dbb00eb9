//! Connectivity, biconnectivity and 2-edge-connectivity from a DFS tree.
//!
//! High numbers are computed from the rebuild's trace with a bounded number
//! of queries instead of a full edge scan: every vertex collects a small set
//! `A(x)` of neighbors such that its highest tree-ancestor neighbor lands in
//! `A(y)` for some `y` in its subtree, and a bottom-up fold finishes the job.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{edge_key, UpdateBatch, Vertex, ROOT};
use crate::partition::Origin;
use crate::query::{QueryError, QueryStructure};
use crate::rebuild::RebuildTrace;
use crate::tree::DfsTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AppError {
    #[error("vertex {0} is not active")]
    InactiveVertex(Vertex),
    #[error("trace does not describe this tree: {0}")]
    TraceMismatch(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Component label of each vertex: its ancestor one level below the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityLabels {
    label: Vec<Option<Vertex>>,
    count: usize,
}

impl ConnectivityLabels {
    pub fn new(t: &DfsTree) -> Self {
        let mut label = vec![None; t.slot_count()];
        for &v in &t.preorder()[1..] {
            let p = t.parent(v).unwrap();
            label[v] = Some(if p == ROOT { v } else { label[p].unwrap() });
        }
        ConnectivityLabels { label, count: t.children(ROOT).len() }
    }

    pub fn label(&self, v: Vertex) -> Option<Vertex> {
        self.label.get(v).copied().flatten()
    }

    pub fn component_count(&self) -> usize {
        self.count
    }

    pub fn connected(&self, x: Vertex, y: Vertex) -> Result<bool, AppError> {
        let lx = self.label(x).ok_or(AppError::InactiveVertex(x))?;
        let ly = self.label(y).ok_or(AppError::InactiveVertex(y))?;
        Ok(lx == ly)
    }
}

/// Preorder number and high number of every vertex of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighNumbers {
    pub dfn: Vec<usize>,
    /// Smallest preorder number over endpoints of edges touching `T(v)`;
    /// `None` when `T(v)` has no edges.
    pub high: Vec<Option<usize>>,
    pub d_queries: usize,
}

/// Computes high numbers of `tstar`, the tree returned together with `trace`
/// by a rebuild over `d` and `batch`. `d` must still hold that rebuild's
/// deletions.
pub fn compute_high(
    tstar: &DfsTree,
    trace: &RebuildTrace,
    d: &QueryStructure,
    batch: &UpdateBatch,
) -> Result<HighNumbers, AppError> {
    let slots = tstar.slot_count();
    let dfn: Vec<usize> = (0..slots).map(|v| if tstar.contains(v) { tstar.dfn(v) } else { usize::MAX }).collect();
    let mut best: Vec<Option<usize>> = vec![None; slots];
    let mut add = |x: Vertex, u: Vertex| {
        let du = dfn[u];
        best[x] = Some(best[x].map_or(du, |b| b.min(du)));
    };
    let base = d.tree();
    let in_base = |x: Vertex| x != ROOT && base.contains(x);
    let verts = &tstar.preorder()[1..];
    let mut queries = 0;

    if trace.unchanged {
        if base.parents() != tstar.parents() {
            return Err(AppError::TraceMismatch("tree differs from the base tree".into()));
        }
        for &x in verts {
            let p = tstar.parent(x).unwrap();
            if p == ROOT {
                continue;
            }
            queries += 1;
            if let Some(h) = d.query_vertex(x, tstar.component_root(x), p)? {
                add(x, h.on_path);
            }
        }
    } else {
        let attached_of = |v: Vertex| {
            trace
                .attached_index
                .get(v)
                .copied()
                .flatten()
                .map(|i| &trace.attached[i])
                .ok_or_else(|| AppError::TraceMismatch(format!("vertex {v} was never attached")))
        };
        let from_p: Vec<_> = trace.attached.iter().filter(|a| a.origin == Origin::FromPath && a.span.is_some()).collect();
        for &x in verts {
            let own = attached_of(x)?;
            if !in_base(x) {
                continue;
            }
            for p in &from_p {
                // Highest neighbor on each path that came from P.
                queries += 1;
                if let Some(h) = d.query_vertex(x, p.head(), p.tail())? {
                    add(x, h.on_path);
                }
                // Credit x to its deepest neighbor on that path.
                queries += 1;
                if let Some(h) = d.query_vertex(x, p.tail(), p.head())? {
                    add(h.on_path, x);
                }
            }
            if own.origin == Origin::FromTree {
                queries += 1;
                if let Some(h) = d.query_vertex(x, own.head(), own.tail())? {
                    add(x, h.on_path);
                }
            }
            if let Some(x0) = trace.original_tree_root.get(x).copied().flatten() {
                if x0 != x {
                    queries += 1;
                    let px = base.parent(x).unwrap();
                    if let Some(z) = d.query_vertex(x, x0, px)? {
                        let pz = attached_of(z.on_path)?;
                        queries += 1;
                        if let Some(h) = d.query_vertex(x, pz.head(), pz.tail())? {
                            add(x, h.on_path);
                        }
                    }
                }
            }
        }
    }
    for (a, b) in batch.all_inserted_edges() {
        add(a, b);
        add(b, a);
    }

    let mut high = best;
    for &v in verts.iter().rev() {
        let p = tstar.parent(v).unwrap();
        if p != ROOT {
            if let Some(h) = high[v] {
                high[p] = Some(high[p].map_or(h, |b| b.min(h)));
            }
        }
    }
    Ok(HighNumbers { dfn, high, d_queries: queries })
}

/// Articulation points, bridges, blocks and 2-edge-connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutStructure {
    articulation: Vec<bool>,
    /// The tree edge from `v` to its parent is a bridge.
    bridge_up: Vec<bool>,
    /// Block holding the tree edge from `v` to its parent.
    block: Vec<Option<usize>>,
    block_head: Vec<Vertex>,
    two_edge: Vec<Option<usize>>,
}

impl CutStructure {
    pub fn new(h: &HighNumbers, t: &DfsTree) -> Self {
        let slots = t.slot_count();
        let mut articulation = vec![false; slots];
        let mut bridge_up = vec![false; slots];
        let mut block = vec![None; slots];
        let mut block_head = Vec::new();
        let mut two_edge = vec![None; slots];
        let mut two_edge_count = 0;
        let high_is = |v: Vertex, u: Vertex| h.high[v] == Some(h.dfn[u]);

        for &v in &t.preorder()[1..] {
            let p = t.parent(v).unwrap();
            let kids = t.children(v);
            articulation[v] = if p == ROOT { kids.len() >= 2 } else { kids.iter().any(|&c| high_is(c, v)) };
            if p != ROOT {
                bridge_up[v] = high_is(v, p) && kids.iter().all(|&c| high_is(c, v));
                if t.parent(p) == Some(ROOT) || high_is(v, p) {
                    block[v] = Some(block_head.len());
                    block_head.push(p);
                } else {
                    block[v] = block[p];
                }
            }
            two_edge[v] = if p == ROOT || bridge_up[v] {
                two_edge_count += 1;
                Some(two_edge_count - 1)
            } else {
                two_edge[p]
            };
        }
        CutStructure { articulation, bridge_up, block, block_head, two_edge }
    }

    pub fn is_articulation(&self, v: Vertex) -> bool {
        self.articulation.get(v).copied().unwrap_or(false)
    }

    pub fn articulation_points(&self) -> BTreeSet<Vertex> {
        (0..self.articulation.len()).filter(|&v| self.articulation[v]).collect()
    }

    /// Bridges as `(smaller, larger)` endpoint pairs.
    pub fn bridges(&self, t: &DfsTree) -> BTreeSet<(Vertex, Vertex)> {
        (0..self.bridge_up.len())
            .filter(|&v| self.bridge_up[v])
            .map(|v| edge_key(v, t.parent(v).unwrap()))
            .collect()
    }

    /// `x` and `y` lie in a common block. Assumes both are active and
    /// connected.
    fn share_block(&self, x: Vertex, y: Vertex) -> bool {
        let (bx, by) = (self.block[x], self.block[y]);
        (bx.is_some() && bx == by)
            || bx.is_some_and(|b| self.block_head[b] == y)
            || by.is_some_and(|b| self.block_head[b] == x)
    }
}

/// Everything needed to answer the three pairwise queries in O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppState {
    pub labels: ConnectivityLabels,
    pub high: HighNumbers,
    pub cuts: CutStructure,
    bridges: BTreeSet<(Vertex, Vertex)>,
}

impl AppState {
    pub fn compute(
        tstar: &DfsTree,
        trace: &RebuildTrace,
        d: &QueryStructure,
        batch: &UpdateBatch,
    ) -> Result<Self, AppError> {
        let labels = ConnectivityLabels::new(tstar);
        let high = compute_high(tstar, trace, d, batch)?;
        let cuts = CutStructure::new(&high, tstar);
        let bridges = cuts.bridges(tstar);
        Ok(AppState { labels, high, cuts, bridges })
    }

    pub fn bridges(&self) -> &BTreeSet<(Vertex, Vertex)> {
        &self.bridges
    }

    pub fn query_connectivity(&self, x: Vertex, y: Vertex) -> Result<bool, AppError> {
        self.labels.connected(x, y)
    }

    pub fn query_biconnected(&self, x: Vertex, y: Vertex) -> Result<bool, AppError> {
        if !self.labels.connected(x, y)? {
            return Ok(false);
        }
        Ok(x == y || self.cuts.share_block(x, y))
    }

    pub fn query_2edge(&self, x: Vertex, y: Vertex) -> Result<bool, AppError> {
        if !self.labels.connected(x, y)? {
            return Ok(false);
        }
        Ok(self.cuts.two_edge[x] == self.cuts.two_edge[y])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::graph_a;
    use crate::graph::{normalize_batch, Graph, Update};
    use crate::oracle::{brute_articulation_bridges, brute_biconnected, brute_high, brute_two_edge};
    use crate::rebuild::{rebuild_batch, RebuildOptions};
    use crate::tree::{build_tree, VisitOrder};

    fn state(g: &Graph, raw: &[Update]) -> (Graph, DfsTree, AppState) {
        let batch = normalize_batch(g, raw).unwrap();
        let mut d = QueryStructure::build(g, build_tree(g, VisitOrder::Ascending));
        let (t, trace) = rebuild_batch(g, &mut d, &batch, RebuildOptions::default()).unwrap();
        let app = AppState::compute(&t, &trace, &d, &batch).unwrap();
        let mut after = g.clone();
        after.apply_batch(&batch).unwrap();
        (after, t, app)
    }

    #[test]
    fn tree_graph_high_is_parent_dfn() {
        let g = Graph::from_edges(5, &[(1, 2), (1, 3), (3, 4), (3, 5)]).unwrap();
        let (_, t, app) = state(&g, &[]);
        for v in 2..=5 {
            assert_eq!(app.high.high[v], Some(t.dfn(t.parent(v).unwrap())));
        }
    }

    #[test]
    fn graph_a_high_numbers() {
        let (g, t, app) = state(&graph_a(), &[]);
        assert_eq!(app.high.high[4], Some(1));
        assert_eq!(app.high.high[6], Some(2));
        assert_eq!(app.high.high[8], Some(7));
        assert_eq!(app.high.high, brute_high(&g, &t));
    }

    #[test]
    fn graph_a_after_tree_edge_deletion() {
        let (g, t, app) = state(&graph_a(), &[Update::DeleteEdge(1, 2)]);
        assert_eq!(app.high.high, brute_high(&g, &t));
    }

    #[test]
    fn graph_a_cuts() {
        let (g, t, app) = state(&graph_a(), &[]);
        let (ap, br) = brute_articulation_bridges(&g);
        assert_eq!(app.cuts.articulation_points(), ap);
        assert_eq!(app.cuts.bridges(&t), br);
    }

    #[test]
    fn labels_after_vertex_deletion() {
        let (g, _, app) = state(&graph_a(), &[Update::DeleteVertex(1)]);
        assert_eq!(app.labels.component_count(), 2);
        assert!(!app.query_connectivity(2, 7).unwrap());
        assert!(app.query_connectivity(2, 6).unwrap());
        assert!(matches!(app.query_connectivity(1, 2), Err(AppError::InactiveVertex(1))));
        assert_eq!(crate::oracle::component_count(&g), 2);
    }

    #[test]
    fn path_and_cycle() {
        let (_, t, app) = state(&Graph::from_edges(3, &[(1, 2), (2, 3)]).unwrap(), &[]);
        assert_eq!(app.cuts.articulation_points(), [2].into());
        assert_eq!(app.cuts.bridges(&t).len(), 2);
        assert!(!app.query_biconnected(1, 3).unwrap());
        assert!(app.query_biconnected(1, 2).unwrap());
        for q in [AppState::query_connectivity, AppState::query_biconnected, AppState::query_2edge] {
            assert!(q(&app, 2, 2).unwrap());
        }

        let (_, t, app) = state(&Graph::from_edges(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap(), &[]);
        assert!(app.cuts.articulation_points().is_empty());
        assert!(app.cuts.bridges(&t).is_empty());
        for x in 1..=4 {
            for y in 1..=4 {
                assert!(app.query_biconnected(x, y).unwrap());
                assert!(app.query_2edge(x, y).unwrap());
            }
        }
    }

    #[test]
    fn pairwise_queries_match_oracle_on_graph_a() {
        let (g, _, app) = state(&graph_a(), &[Update::InsertEdge(6, 8), Update::DeleteVertex(3)]);
        for x in g.vertices() {
            for y in g.vertices() {
                assert_eq!(app.query_biconnected(x, y).unwrap(), brute_biconnected(&g, x, y), "bicon {x} {y}");
                assert_eq!(app.query_2edge(x, y).unwrap(), brute_two_edge(&g, x, y), "2edge {x} {y}");
            }
        }
    }
}
