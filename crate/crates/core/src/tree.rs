//! Rooted DFS tree with heavy-path indexing.
//!
//! The tree is always rooted at [`ROOT`]; each child of the root spans one
//! connected component. Preorder numbers (`dfn`) follow a heavy-first
//! traversal: the child with the largest subtree is numbered first, so every
//! heavy chain and every subtree is a contiguous `dfn` range.

use std::collections::btree_map;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, Vertex, ROOT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("vertex {0} is not in the tree")]
    UnknownVertex(Vertex),
    #[error("vertices {0} and {1} lie in different components")]
    DifferentComponents(Vertex, Vertex),
    #[error("{0} is not an ancestor of {1}")]
    NotAncestorDescendant(Vertex, Vertex),
    #[error("parent links do not form a tree: {0}")]
    NotATree(String),
}

/// An ancestor-descendant path, `top` being the ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreePath {
    pub top: Vertex,
    pub bottom: Vertex,
}

impl TreePath {
    pub fn new(top: Vertex, bottom: Vertex) -> Self {
        TreePath { top, bottom }
    }

    pub fn single(v: Vertex) -> Self {
        TreePath { top: v, bottom: v }
    }
}

/// Which vertex the static traversal enters first from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VisitOrder {
    /// Components are entered at their smallest vertex id.
    #[default]
    Ascending,
    /// Enter this vertex first, then fall back to ascending order.
    StartAt(Vertex),
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfsTree {
    parent: Vec<Option<Vertex>>,
    present: Vec<bool>,
    children: Vec<Vec<Vertex>>,
    dfn: Vec<usize>,
    order: Vec<Vertex>,
    size: Vec<usize>,
    depth: Vec<usize>,
    heavy: Vec<Option<Vertex>>,
    head: Vec<Vertex>,
}

/// Static DFS of `g` from the dummy root, scanning neighbors in increasing id
/// order.
pub fn build_tree(g: &Graph, visit: VisitOrder) -> DfsTree {
    let slots = g.slot_count();
    let mut parent = vec![None; slots];
    let mut visited = vec![false; slots];
    let first = match visit {
        VisitOrder::StartAt(v) if g.is_active(v) => Some(v),
        _ => None,
    };
    let mut stack: Vec<(Vertex, btree_map::Keys<'_, Vertex, usize>)> = Vec::new();
    for s in first.into_iter().chain(g.vertices()) {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        parent[s] = Some(ROOT);
        stack.push((s, g.adjacency(s).keys()));
        while let Some((v, it)) = stack.last_mut() {
            let v = *v;
            match it.find(|&&u| !visited[u]) {
                Some(&u) => {
                    visited[u] = true;
                    parent[u] = Some(v);
                    stack.push((u, g.adjacency(u).keys()));
                }
                None => {
                    stack.pop();
                }
            }
        }
    }
    DfsTree::from_parents(parent).expect("static traversal yields a tree")
}

impl DfsTree {
    /// Builds the indexed tree from parent links. `parent[v] == None` marks
    /// `v` as absent; the root slot is ignored.
    pub fn from_parents(mut parent: Vec<Option<Vertex>>) -> Result<Self, TreeError> {
        if parent.is_empty() {
            parent.push(None);
        }
        parent[ROOT] = None;
        let slots = parent.len();
        let mut present = vec![false; slots];
        present[ROOT] = true;
        let mut children = vec![Vec::new(); slots];
        for v in 1..slots {
            if let Some(p) = parent[v] {
                if p >= slots {
                    return Err(TreeError::NotATree(format!("parent {p} of {v} out of range")));
                }
                present[v] = true;
                children[p].push(v);
            }
        }
        for v in 1..slots {
            if let Some(p) = parent[v] {
                if !present[p] {
                    return Err(TreeError::NotATree(format!("parent {p} of {v} is absent")));
                }
            }
        }

        // Top-down order (BFS) to detect cycles and accumulate sizes.
        let mut bfs = Vec::with_capacity(slots);
        bfs.push(ROOT);
        let mut i = 0;
        while i < bfs.len() {
            let v = bfs[i];
            bfs.extend_from_slice(&children[v]);
            i += 1;
        }
        let n_present = present.iter().filter(|&&p| p).count();
        if bfs.len() != n_present {
            return Err(TreeError::NotATree("cycle among parent links".into()));
        }

        let mut depth = vec![0; slots];
        for &v in &bfs[1..] {
            depth[v] = depth[parent[v].unwrap()] + 1;
        }
        let mut size = vec![0; slots];
        for &v in bfs.iter().rev() {
            size[v] += 1;
            if let Some(p) = parent[v] {
                size[p] += size[v];
            }
        }
        let heavy: Vec<Option<Vertex>> = (0..slots)
            .map(|v| {
                // Ties go to the smaller id: children are sorted ascending and
                // max_by_key keeps the last maximum, so compare on Reverse(id).
                children[v]
                    .iter()
                    .copied()
                    .max_by_key(|&c| (size[c], std::cmp::Reverse(c)))
            })
            .collect();

        let mut dfn = vec![NONE; slots];
        let mut head = vec![ROOT; slots];
        let mut order = Vec::with_capacity(n_present);
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            dfn[v] = order.len();
            order.push(v);
            let h = heavy[v];
            for &c in children[v].iter().rev() {
                if Some(c) != h {
                    head[c] = c;
                    stack.push(c);
                }
            }
            if let Some(c) = h {
                head[c] = head[v];
                stack.push(c);
            }
        }

        Ok(DfsTree { parent, present, children, dfn, order, size, depth, heavy, head })
    }

    pub fn slot_count(&self) -> usize {
        self.parent.len()
    }

    /// Number of tree vertices, the root excluded.
    pub fn vertex_count(&self) -> usize {
        self.order.len() - 1
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.present.get(v).copied().unwrap_or(false)
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent.get(v).copied().flatten()
    }

    pub fn parents(&self) -> &[Option<Vertex>] {
        &self.parent
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v]
    }

    pub fn dfn(&self, v: Vertex) -> usize {
        self.dfn[v]
    }

    /// Vertex at preorder position `i`; position 0 is the root.
    pub fn vertex_at(&self, i: usize) -> Vertex {
        self.order[i]
    }

    /// Vertices in heavy-first preorder, root first.
    pub fn preorder(&self) -> &[Vertex] {
        &self.order
    }

    pub fn size(&self, v: Vertex) -> usize {
        self.size[v]
    }

    pub fn depth(&self, v: Vertex) -> usize {
        self.depth[v]
    }

    pub fn heavy_child(&self, v: Vertex) -> Option<Vertex> {
        self.heavy[v]
    }

    pub fn chain_head(&self, v: Vertex) -> Vertex {
        self.head[v]
    }

    /// Inclusive preorder range covered by `T(v)`.
    pub fn sub_interval(&self, v: Vertex) -> (usize, usize) {
        (self.dfn[v], self.dfn[v] + self.size[v] - 1)
    }

    /// True when `a` is a (not necessarily proper) ancestor of `b`.
    pub fn is_ancestor(&self, a: Vertex, b: Vertex) -> bool {
        self.contains(a) && self.contains(b) && {
            let (lo, hi) = self.sub_interval(a);
            (lo..=hi).contains(&self.dfn[b])
        }
    }

    /// Child of `r` whose subtree holds `v`, i.e. the component root.
    pub fn component_root(&self, v: Vertex) -> Vertex {
        self.ancestor_at_depth(v, 1)
    }

    /// Ancestor of `v` at depth `d` (`d <= depth(v)`).
    pub fn ancestor_at_depth(&self, mut v: Vertex, d: usize) -> Vertex {
        debug_assert!(d <= self.depth[v]);
        while self.depth[self.head[v]] > d {
            v = self.parent[self.head[v]].unwrap();
        }
        self.order[self.dfn[v] - (self.depth[v] - d)]
    }

    fn lca_any(&self, mut x: Vertex, mut y: Vertex) -> Vertex {
        while self.head[x] != self.head[y] {
            if self.depth[self.head[x]] > self.depth[self.head[y]] {
                x = self.parent[self.head[x]].unwrap();
            } else {
                y = self.parent[self.head[y]].unwrap();
            }
        }
        if self.depth[x] < self.depth[y] {
            x
        } else {
            y
        }
    }

    /// Lowest common ancestor by jumping along heavy chains.
    pub fn lca(&self, x: Vertex, y: Vertex) -> Result<Vertex, TreeError> {
        for v in [x, y] {
            if v == ROOT || !self.contains(v) {
                return Err(TreeError::UnknownVertex(v));
            }
        }
        match self.lca_any(x, y) {
            ROOT => Err(TreeError::DifferentComponents(x, y)),
            a => Ok(a),
        }
    }

    pub fn check_path(&self, p: TreePath) -> Result<(), TreeError> {
        for v in [p.top, p.bottom] {
            if !self.contains(v) {
                return Err(TreeError::UnknownVertex(v));
            }
        }
        if !self.is_ancestor(p.top, p.bottom) {
            return Err(TreeError::NotAncestorDescendant(p.top, p.bottom));
        }
        Ok(())
    }

    /// Number of vertices on `p`.
    pub fn path_len(&self, p: TreePath) -> usize {
        self.depth[p.bottom] - self.depth[p.top] + 1
    }

    /// Splits `p` into `dfn` intervals, one per heavy chain it crosses,
    /// ordered from `p.top` down to `p.bottom`.
    pub fn decompose_path(&self, p: TreePath) -> Result<Vec<(usize, usize)>, TreeError> {
        self.check_path(p)?;
        let mut out = Vec::new();
        let mut b = p.bottom;
        loop {
            let h = self.head[b];
            if self.depth[h] <= self.depth[p.top] {
                out.push((self.dfn[p.top], self.dfn[b]));
                break;
            }
            out.push((self.dfn[h], self.dfn[b]));
            b = self.parent[h].unwrap();
        }
        out.reverse();
        Ok(out)
    }

    /// Vertices of `p` from top to bottom.
    pub fn path_vertices(&self, p: TreePath) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.path_len(p));
        let mut v = p.bottom;
        loop {
            out.push(v);
            if v == p.top {
                break;
            }
            v = self.parent[v].unwrap();
        }
        out.reverse();
        out
    }

    /// Tree dump: one `v parent dfn` line per non-root vertex, sorted by `v`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in 1..self.slot_count() {
            if let Some(p) = self.parent[v] {
                writeln!(s, "{v} {p} {}", self.dfn[v]).unwrap();
            }
        }
        s
    }

    /// Parses the output of [`DfsTree::dump`]. Only the parent column is
    /// trusted; preorder numbers are recomputed.
    pub fn parse_dump(text: &str) -> Result<Self, TreeError> {
        let mut links = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next()) {
                (Some(Ok(v)), Some(Ok(p))) => links.push((v, p)),
                _ => return Err(TreeError::NotATree(format!("line {}: malformed", i + 1))),
            }
        }
        let slots = links.iter().map(|&(v, p)| v.max(p) + 1).max().unwrap_or(1);
        let mut parent = vec![None; slots];
        for (v, p) in links {
            if v == ROOT {
                return Err(TreeError::NotATree("root cannot have a parent".into()));
            }
            parent[v] = Some(p);
        }
        DfsTree::from_parents(parent)
    }
}
