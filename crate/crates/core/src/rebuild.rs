//! Rerooting, single-update repair, and batch rebuilding of a DFS tree.

use thiserror::Error;

use crate::graph::{EdgeId, Graph, GraphError, Update, UpdateBatch, Vertex, ROOT};
use crate::partition::{validate_partition, Member, Origin, Partition, PartitionError};
use crate::query::{QueryError, QueryStructure};
use crate::tree::{DfsTree, TreeError, TreePath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RebuildError {
    #[error("new root {new_root} is outside the subtree of {subtree_root}")]
    NewRootOutsideSubtree { subtree_root: Vertex, new_root: Vertex },
    #[error("subtree of {0} has no edge to the path it hangs from")]
    DetachedSubtree(Vertex),
    #[error("partition audit failed: {0}")]
    Audit(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Reroots `T(subtree_root)` of the base tree held by `d` at `new_root`.
///
/// Writes the new parent of every vertex of the subtree except `new_root`
/// into `parent`; the caller decides where `new_root` hangs. Vertices whose
/// parent does not change are left untouched, so `parent` should start out as
/// the base tree's links. Returns the number of queries issued.
pub fn reroot(
    d: &QueryStructure,
    subtree_root: Vertex,
    new_root: Vertex,
    parent: &mut [Option<Vertex>],
) -> Result<usize, RebuildError> {
    let t = d.tree();
    if subtree_root == ROOT || !t.is_ancestor(subtree_root, new_root) {
        return Err(RebuildError::NewRootOutsideSubtree { subtree_root, new_root });
    }
    let mut queries = 0;
    let mut work = vec![(subtree_root, new_root)];
    while let Some((r0, rn)) = work.pop() {
        if r0 == rn {
            continue;
        }
        let path = t.path_vertices(TreePath::new(r0, rn));
        for w in path.windows(2) {
            parent[w[0]] = Some(w[1]);
        }
        for (i, &b) in path.iter().enumerate() {
            let next = path.get(i + 1).copied();
            for &c in t.children(b) {
                if Some(c) == next {
                    continue;
                }
                queries += 1;
                let hit = d.query_subtree(c, r0, b)?.ok_or(RebuildError::DetachedSubtree(c))?;
                parent[hit.source] = Some(hit.on_path);
                work.push((c, hit.source));
            }
        }
    }
    Ok(queries)
}

/// Repairs the DFS tree held by `d` after one update to `g`.
///
/// `d` must have been built over `g` and that tree; its deletions are reset
/// first. Returns the tree of the updated graph and the number of queries.
pub fn apply_single_update(g: &Graph, d: &mut QueryStructure, upd: &Update) -> Result<(DfsTree, usize), RebuildError> {
    d.restore_all();
    let mut after = g.clone();
    after.apply_update(upd)?;
    let t = d.tree().clone();
    let mut parent = t.parents().to_vec();
    parent.resize(after.slot_count().max(parent.len()), None);
    let mut queries = 0;

    // Hangs T(c) below the deepest vertex of path(component root, low) it
    // touches, or under the root when it touches none.
    let hang = |d: &QueryStructure, c: Vertex, low: Vertex, parent: &mut Vec<Option<Vertex>>| -> Result<usize, RebuildError> {
        if low == ROOT {
            parent[c] = Some(ROOT);
            return Ok(0);
        }
        let top = t.component_root(low);
        match d.query_subtree(c, low, top)? {
            Some(hit) => {
                let q = reroot(d, c, hit.source, parent)?;
                parent[hit.source] = Some(hit.on_path);
                Ok(q + 1)
            }
            None => {
                parent[c] = Some(ROOT);
                Ok(1)
            }
        }
    };

    match upd {
        Update::DeleteEdge(a, b) => {
            d.delete_edge(*a, *b)?;
            let (p, c) = if t.parent(*b) == Some(*a) {
                (*a, *b)
            } else if t.parent(*a) == Some(*b) {
                (*b, *a)
            } else {
                return Ok((t, 0));
            };
            queries += hang(d, c, p, &mut parent)?;
        }
        Update::InsertEdge(a, b) => {
            let (u, v) = (*a, *b);
            if t.is_ancestor(u, v) || t.is_ancestor(v, u) {
                return Ok((t, 0));
            }
            let v_top = match t.lca(u, v) {
                Ok(l) => t.ancestor_at_depth(v, t.depth(l) + 1),
                Err(TreeError::DifferentComponents(..)) => t.component_root(v),
                Err(e) => return Err(e.into()),
            };
            queries += reroot(d, v_top, v, &mut parent)?;
            parent[v] = Some(u);
        }
        Update::DeleteVertex(x) => {
            d.delete_incident(*x, g);
            let p = t.parent(*x).ok_or(GraphError::UnknownVertex(*x))?;
            parent[*x] = None;
            for &c in t.children(*x) {
                queries += hang(d, c, p, &mut parent)?;
            }
        }
        Update::InsertVertex(x, nbrs) => {
            let Some(&first) = nbrs.first() else {
                parent[*x] = Some(ROOT);
                return Ok((DfsTree::from_parents(parent)?, 0));
            };
            parent[*x] = Some(first);
            let mut done: Vec<Vertex> = Vec::new();
            for &w in &nbrs[1..] {
                if t.is_ancestor(w, first) {
                    continue;
                }
                let top = match t.lca(w, first) {
                    Ok(l) => t.ancestor_at_depth(w, t.depth(l) + 1),
                    Err(TreeError::DifferentComponents(..)) => t.component_root(w),
                    Err(e) => return Err(e.into()),
                };
                if done.contains(&top) {
                    continue;
                }
                done.push(top);
                queries += reroot(d, top, w, &mut parent)?;
                parent[w] = Some(*x);
            }
        }
    }
    Ok((DfsTree::from_parents(parent)?, queries))
}

/// A path attached to the new tree during a rebuild.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachedPath {
    /// Vertices from the one nearest the root to the deepest.
    pub vertices: Vec<Vertex>,
    pub origin: Origin,
    /// The same vertices as a base-tree path; `None` for an inserted vertex.
    pub span: Option<TreePath>,
}

impl AttachedPath {
    pub fn head(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn tail(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RebuildTrace {
    pub k: usize,
    pub d_queries: usize,
    /// Reduced adjacency entries scanned plus vertices attached.
    pub edges_scanned: usize,
    /// Total entries ever placed in the reduced adjacency lists.
    pub l_total: usize,
    pub paths_from_p: usize,
    pub paths_from_t: usize,
    pub attached: Vec<AttachedPath>,
    /// Index into `attached` for every vertex of the new tree.
    pub attached_index: Vec<Option<usize>>,
    /// Root of the partition tree each vertex started in, if any.
    pub original_tree_root: Vec<Option<Vertex>>,
    pub initial_paths: usize,
    pub max_paths: usize,
    pub max_path_entries: usize,
    /// The base tree was still valid and was returned as is.
    pub unchanged: bool,
}

impl RebuildTrace {
    /// CSV row `k,n,m,d_queries,edges_scanned,L_total,paths_from_P,paths_from_T`.
    pub fn csv_row(&self, n: usize, m: usize) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k, n, m, self.d_queries, self.edges_scanned, self.l_total, self.paths_from_p, self.paths_from_t
        )
    }

    pub const CSV_HEADER: &'static str = "k,n,m,d_queries,edges_scanned,L_total,paths_from_P,paths_from_T";
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RebuildOptions {
    /// Re-check the partition after every extraction and the stack after
    /// every push.
    pub audit: bool,
}

/// Computes a DFS tree of `base + batch` from the base tree held by `d`.
///
/// `d` must have been built over `base`. Deletions from earlier rebuilds are
/// undone first; on return `d` holds exactly this batch's deletions.
pub fn rebuild_batch(
    base: &Graph,
    d: &mut QueryStructure,
    batch: &UpdateBatch,
    opts: RebuildOptions,
) -> Result<(DfsTree, RebuildTrace), RebuildError> {
    d.restore_all();
    for &(u, v) in &batch.edge_fails {
        d.delete_edge(u, v)?;
    }
    for &v in &batch.vertex_fails {
        d.delete_incident(v, base);
    }
    let d: &QueryStructure = d;
    let t = d.tree();
    let only_back_edges = batch.is_insertion_only()
        && batch.vertex_inserts.is_empty()
        && batch.edge_inserts.iter().all(|&(u, v)| t.is_ancestor(u, v) || t.is_ancestor(v, u));
    if only_back_edges {
        let trace = RebuildTrace { k: batch.len(), unchanged: true, ..Default::default() };
        return Ok((t.clone(), trace));
    }
    let mut part = Partition::build(t, batch)?;
    if opts.audit {
        validate_partition(base, t, batch, &part).map_err(RebuildError::Audit)?;
    }

    let slots = batch.vertex_inserts.iter().map(|vi| vi.id + 1).chain([t.slot_count()]).max().unwrap();
    let mut trace = RebuildTrace {
        k: batch.len(),
        attached_index: vec![None; slots],
        original_tree_root: (0..slots).map(|v| part.tree_root_of(v)).collect(),
        initial_paths: part.initial_path_count(),
        ..Default::default()
    };

    let mut lists: Vec<Vec<(Vertex, Option<EdgeId>)>> = vec![Vec::new(); slots];
    for (u, v) in batch.all_inserted_edges() {
        lists[u].push((v, None));
        lists[v].push((u, None));
        trace.l_total += 2;
    }
    let mut cursor = vec![0usize; slots];
    let mut parent: Vec<Option<Vertex>> = vec![None; slots];
    let mut stack = vec![ROOT];
    let mut restart = 1;

    while let Some(&w) = stack.last() {
        let entry = if w == ROOT {
            match part.next_unvisited(restart) {
                Some(u) => {
                    restart = u;
                    u
                }
                None => break,
            }
        } else {
            let mut next = None;
            while let Some(&(y, _)) = lists[w].get(cursor[w]) {
                cursor[w] += 1;
                trace.edges_scanned += 1;
                if matches!(part.member(y), Member::Path(_) | Member::Tree) {
                    next = Some(y);
                    break;
                }
            }
            match next {
                Some(y) => y,
                None => {
                    stack.pop();
                    continue;
                }
            }
        };

        let ex = part.extract(entry)?;
        if opts.audit {
            validate_partition(base, t, batch, &part).map_err(RebuildError::Audit)?;
        }
        let mut above = w;
        for &v in &ex.order {
            parent[v] = Some(above);
            above = v;
            trace.attached_index[v] = Some(trace.attached.len());
        }
        trace.edges_scanned += ex.order.len();
        stack.extend_from_slice(&ex.order);
        if opts.audit {
            debug_assert!(stack.windows(2).all(|s| parent[s[1]] == Some(s[0])));
            if !stack.windows(2).all(|s| parent[s[1]] == Some(s[0])) {
                return Err(RebuildError::Audit("stack is not a tree path".into()));
            }
        }
        match ex.origin {
            Origin::FromTree => trace.paths_from_t += 1,
            Origin::FromPath => trace.paths_from_p += 1,
        }

        if let Some(span) = ex.span {
            // (i) one edge from every path vertex to every base path of P.
            for &x in &ex.order {
                for (_, seg) in part.paths() {
                    if seg.inserted {
                        continue;
                    }
                    trace.d_queries += 1;
                    if let Some(hit) = d.query_vertex(x, seg.span.top, seg.span.bottom)? {
                        lists[x].push((hit.on_path, Some(hit.edge)));
                        trace.l_total += 1;
                    }
                }
            }
            // (ii) one edge per relevant tree, landing as deep as possible on
            // the attached path.
            let tail = *ex.order.last().unwrap();
            let head = ex.order[0];
            let trees: Vec<Vertex> = match ex.origin {
                Origin::FromTree => ex.new_trees.clone(),
                Origin::FromPath => part.tree_roots().collect(),
            };
            debug_assert!(span.top == head || span.top == tail);
            for tau in trees {
                trace.d_queries += 1;
                if let Some(hit) = d.query_subtree(tau, tail, head)? {
                    lists[hit.on_path].push((hit.source, Some(hit.edge)));
                    trace.l_total += 1;
                }
            }
        }

        trace.attached.push(AttachedPath { vertices: ex.order, origin: ex.origin, span: ex.span });
    }

    trace.max_paths = part.max_path_count();
    trace.max_path_entries = part.max_path_entries();
    Ok((DfsTree::from_parents(parent)?, trace))
}
