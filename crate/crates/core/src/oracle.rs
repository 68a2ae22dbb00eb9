//! Brute-force reference answers.
//!
//! Everything here works from raw parent links and full edge scans. None of it
//! touches the heavy-path indexing of [`DfsTree`] except where a preorder
//! number is needed to express an answer.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{edge_key, Graph, Vertex, ROOT};
use crate::tree::DfsTree;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    /// Parent links form a forest under the root covering exactly the active
    /// vertices, and every non-root link is a graph edge.
    pub is_spanning: bool,
    /// A graph edge whose endpoints are not in ancestor-descendant relation.
    pub offending_edge: Option<(Vertex, Vertex)>,
    /// Each child of the root spans exactly one connected component.
    pub components_match: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.is_spanning && self.offending_edge.is_none() && self.components_match
    }
}

/// Connected-component label of every active vertex (`usize::MAX` elsewhere).
pub fn component_labels(g: &Graph) -> Vec<usize> {
    component_labels_without(g, None, None)
}

fn component_labels_without(
    g: &Graph,
    skip_vertex: Option<Vertex>,
    skip_edge: Option<(Vertex, Vertex)>,
) -> Vec<usize> {
    let mut label = vec![usize::MAX; g.slot_count()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in g.vertices() {
        if label[s] != usize::MAX || Some(s) == skip_vertex {
            continue;
        }
        label[s] = next;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for (u, _) in g.neighbors(v) {
                if Some(u) == skip_vertex || label[u] != usize::MAX || Some(edge_key(u, v)) == skip_edge {
                    continue;
                }
                label[u] = next;
                queue.push_back(u);
            }
        }
        next += 1;
    }
    label
}

pub fn component_count(g: &Graph) -> usize {
    let labels = component_labels(g);
    g.vertices().map(|v| labels[v]).collect::<BTreeSet<_>>().len()
}

/// Checks the DFS-tree certificate: spanning, tree edges real, and every
/// non-tree edge a back edge.
pub fn verify_dfs_tree(g: &Graph, t: &DfsTree) -> ValidityReport {
    verify_parents(g, t.parents())
}

/// [`verify_dfs_tree`] over bare parent links (`parents[v] == None` for
/// vertices outside the tree).
pub fn verify_parents(g: &Graph, parents: &[Option<Vertex>]) -> ValidityReport {
    let slots = g.slot_count().max(parents.len());
    let parent = |v: Vertex| parents.get(v).copied().flatten();

    let mut report = ValidityReport::default();

    // Coverage and real tree edges.
    let mut spanning = true;
    for v in 1..slots {
        let in_tree = parent(v).is_some();
        if in_tree != g.is_active(v) {
            spanning = false;
        }
        if let Some(p) = parent(v) {
            if p != ROOT && !g.has_edge(v, p) {
                spanning = false;
            }
        }
    }

    // Children lists and an Euler walk from the root give entry/exit times.
    let mut children = vec![Vec::new(); slots];
    for v in 1..slots {
        if let Some(p) = parent(v) {
            if p < slots {
                children[p].push(v);
            } else {
                spanning = false;
            }
        }
    }
    let mut tin = vec![usize::MAX; slots];
    let mut tout = vec![0; slots];
    let mut clock = 0;
    let mut stack = vec![(ROOT, 0usize)];
    tin[ROOT] = clock;
    while let Some((v, i)) = stack.last_mut() {
        if let Some(&c) = children[*v].get(*i) {
            *i += 1;
            if tin[c] != usize::MAX {
                spanning = false;
                continue;
            }
            clock += 1;
            tin[c] = clock;
            stack.push((c, 0));
        } else {
            tout[*v] = clock;
            stack.pop();
        }
    }
    for v in 1..slots {
        if parent(v).is_some() && tin[v] == usize::MAX {
            // Unreachable from the root: a cycle among parent links.
            spanning = false;
        }
    }
    report.is_spanning = spanning;

    let anc = |a: Vertex, b: Vertex| tin[a] != usize::MAX && tin[b] != usize::MAX && tin[a] <= tin[b] && tin[b] <= tout[a];
    report.offending_edge = g
        .edges()
        .map(|(_, u, v)| (u, v))
        .find(|&(u, v)| !(anc(u, v) || anc(v, u)));

    // Every component must own exactly one child of the root.
    let labels = component_labels(g);
    let mut seen = BTreeSet::new();
    let mut ok = true;
    for &c in &children[ROOT] {
        if !g.is_active(c) || !seen.insert(labels[c]) {
            ok = false;
        }
    }
    let comps: BTreeSet<usize> = g.vertices().map(|v| labels[v]).collect();
    report.components_match = ok && seen == comps;
    report
}

/// Source side of a nearest-edge query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Vertex(Vertex),
    Subtree(Vertex),
}

/// Result of [`brute_query`]: the edge `(on_path, other)` and the distance of
/// `on_path` from the query's near end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteHit {
    pub on_path: Vertex,
    pub other: Vertex,
    pub dist: usize,
}

fn depth_of(t: &DfsTree, mut v: Vertex) -> usize {
    let mut d = 0;
    while let Some(p) = t.parent(v) {
        d += 1;
        v = p;
    }
    d
}

fn walk_is_ancestor(t: &DfsTree, a: Vertex, mut b: Vertex) -> bool {
    loop {
        if a == b {
            return true;
        }
        match t.parent(b) {
            Some(p) => b = p,
            None => return false,
        }
    }
}

/// Scans every edge of `g` from the source set to `path(x, y)` and returns
/// one whose path endpoint is nearest to `x`. Ties go to the smallest
/// `(dfn(on_path), dfn(other))`.
pub fn brute_query(g: &Graph, t: &DfsTree, source: Source, x: Vertex, y: Vertex) -> Option<BruteHit> {
    let (top, bottom) = if walk_is_ancestor(t, x, y) { (x, y) } else { (y, x) };
    let mut on_path = BTreeSet::new();
    let mut v = bottom;
    loop {
        on_path.insert(v);
        if v == top {
            break;
        }
        v = t.parent(v)?;
    }
    let in_source = |v: Vertex| match source {
        Source::Vertex(w) => v == w,
        Source::Subtree(w) => walk_is_ancestor(t, w, v),
    };
    let dx = depth_of(t, x);
    g.edges()
        .flat_map(|(_, a, b)| [(a, b), (b, a)])
        .filter(|&(p, s)| on_path.contains(&p) && in_source(s))
        .map(|(p, s)| BruteHit { on_path: p, other: s, dist: depth_of(t, p).abs_diff(dx) })
        .min_by_key(|h| (h.dist, t.dfn(h.on_path), t.dfn(h.other)))
}

/// Articulation points and bridges by deleting each element and recounting
/// components.
pub fn brute_articulation_bridges(g: &Graph) -> (BTreeSet<Vertex>, BTreeSet<(Vertex, Vertex)>) {
    let count = |labels: &[usize], skip: Option<Vertex>| {
        g.vertices()
            .filter(|&v| Some(v) != skip)
            .map(|v| labels[v])
            .collect::<BTreeSet<_>>()
            .len()
    };
    let base = count(&component_labels(g), None);
    let points = g
        .vertices()
        .filter(|&v| count(&component_labels_without(g, Some(v), None), Some(v)) > base)
        .collect();
    let bridges = g
        .edges()
        .map(|(_, u, v)| (u, v))
        .filter(|&e| count(&component_labels_without(g, None, Some(e)), None) > base)
        .collect();
    (points, bridges)
}

pub fn brute_connected(g: &Graph, x: Vertex, y: Vertex) -> bool {
    let l = component_labels(g);
    g.is_active(x) && g.is_active(y) && l[x] == l[y]
}

/// True when no single vertex other than `x` and `y` separates them.
pub fn brute_biconnected(g: &Graph, x: Vertex, y: Vertex) -> bool {
    if x == y {
        return g.is_active(x);
    }
    brute_connected(g, x, y)
        && g.vertices().filter(|&w| w != x && w != y).all(|w| {
            let l = component_labels_without(g, Some(w), None);
            l[x] == l[y]
        })
}

/// True when no single edge deletion separates `x` and `y`.
pub fn brute_two_edge(g: &Graph, x: Vertex, y: Vertex) -> bool {
    if x == y {
        return g.is_active(x);
    }
    brute_connected(g, x, y)
        && g.edges().all(|(_, a, b)| {
            let l = component_labels_without(g, None, Some((a, b)));
            l[x] == l[y]
        })
}

/// High number of every tree vertex: the minimum preorder number over all
/// endpoints of edges incident to `T(v)`. `None` when `T(v)` has no edges.
pub fn brute_high(g: &Graph, t: &DfsTree) -> Vec<Option<usize>> {
    let mut high = vec![None; t.slot_count()];
    for v in g.vertices() {
        let mut best: Option<usize> = None;
        for (_, a, b) in g.edges() {
            if walk_is_ancestor(t, v, a) || walk_is_ancestor(t, v, b) {
                let d = t.dfn(a).min(t.dfn(b));
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        high[v] = best;
    }
    high
}
