//! Undirected graph with stable vertex identifiers and update batches.
//!
//! Vertex `0` is reserved for the dummy root [`ROOT`]. The root is implicitly
//! adjacent to every active vertex; those edges are never stored.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub type Vertex = usize;
pub type EdgeId = usize;

/// The dummy root. Never active, never stored in any adjacency map.
pub const ROOT: Vertex = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("unknown edge ({0}, {1})")]
    UnknownEdge(Vertex, Vertex),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(Vertex, Vertex),
    #[error("self loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("vertex id {0} was already allocated")]
    VertexExists(Vertex),
    #[error("conflicting update: {0}")]
    ConflictingUpdate(String),
}

/// A single raw update as it appears in an update stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Update {
    InsertEdge(Vertex, Vertex),
    DeleteEdge(Vertex, Vertex),
    InsertVertex(Vertex, Vec<Vertex>),
    DeleteVertex(Vertex),
}

impl Update {
    pub fn is_edge_insertion(&self) -> bool {
        matches!(self, Update::InsertEdge(..))
    }
}

/// Orders an undirected pair so that the smaller id comes first.
#[inline]
pub fn edge_key(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Vacant,
    Active,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexInsert {
    pub id: Vertex,
    pub neighbors: Vec<Vertex>,
}

/// A normalized set of updates, relative to some base graph.
///
/// Edges are named by their endpoint pair (smaller id first) so that a batch
/// stays meaningful against any graph holding the same edge, regardless of the
/// edge id that graph assigned.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateBatch {
    pub vertex_fails: Vec<Vertex>,
    pub edge_fails: Vec<(Vertex, Vertex)>,
    pub vertex_inserts: Vec<VertexInsert>,
    pub edge_inserts: Vec<(Vertex, Vertex)>,
}

impl UpdateBatch {
    /// Batch size `k`.
    pub fn len(&self) -> usize {
        self.vertex_fails.len()
            + self.edge_fails.len()
            + self.vertex_inserts.len()
            + self.edge_inserts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_insertion_only(&self) -> bool {
        self.vertex_fails.is_empty() && self.edge_fails.is_empty()
    }

    /// Every inserted edge, including the ones incident to inserted vertices.
    pub fn all_inserted_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.vertex_inserts
            .iter()
            .flat_map(|vi| vi.neighbors.iter().map(move |&nb| edge_key(vi.id, nb)))
            .chain(self.edge_inserts.iter().copied())
    }
}

enum Undo {
    AddedVertex(Vertex),
    RemovedVertex(Vertex, Vec<(Vertex, EdgeId)>),
    AddedEdge(EdgeId),
    RemovedEdge(EdgeId, Vertex, Vertex),
}

/// Simple undirected graph over stable vertex ids.
#[derive(Debug, Clone)]
pub struct Graph {
    slots: Vec<Slot>,
    adj: Vec<BTreeMap<Vertex, EdgeId>>,
    edges: Vec<Option<(Vertex, Vertex)>>,
    n_active: usize,
    m_active: usize,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for Graph {
    /// Two graphs are equal when they have the same active vertices and the
    /// same edge set; edge ids are not compared.
    fn eq(&self, other: &Self) -> bool {
        self.vertices().eq(other.vertices()) && self.edge_pairs() == other.edge_pairs()
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Graph {
            slots: vec![Slot::Retired],
            adj: vec![BTreeMap::new()],
            edges: Vec::new(),
            n_active: 0,
            m_active: 0,
        }
    }

    /// Graph with vertices `1..=n` and no edges.
    pub fn with_vertices(n: usize) -> Self {
        let mut g = Graph::new();
        for v in 1..=n {
            g.add_vertex(v).expect("fresh vertex");
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        let mut g = Graph::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Number of vertex slots, including the root slot. Every vertex id ever
    /// used is below this bound.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Upper bound on edge ids ever issued.
    pub fn edge_id_bound(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.n_active
    }

    pub fn edge_count(&self) -> usize {
        self.m_active
    }

    pub fn is_active(&self, v: Vertex) -> bool {
        matches!(self.slots.get(v), Some(Slot::Active))
    }

    fn is_vacant(&self, v: Vertex) -> bool {
        v != ROOT && !matches!(self.slots.get(v), Some(Slot::Active | Slot::Retired))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Slot::Active)
            .map(|(v, _)| v)
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = (Vertex, EdgeId)> + '_ {
        self.adj
            .get(v)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&u, &e)| (u, e)))
    }

    pub(crate) fn adjacency(&self, v: Vertex) -> &BTreeMap<Vertex, EdgeId> {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj.get(v).map_or(0, |m| m.len())
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        self.adj.get(u).and_then(|m| m.get(&v)).copied()
    }

    pub fn endpoints(&self, e: EdgeId) -> Option<(Vertex, Vertex)> {
        self.edges.get(e).copied().flatten()
    }

    /// Live edges as `(id, u, v)` with `u < v`, in id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, Vertex, Vertex)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(e, ends)| ends.map(|(u, v)| (e, u, v)))
    }

    /// Sorted endpoint pairs of all live edges.
    pub fn edge_pairs(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.edges().map(|(_, u, v)| (u, v)).collect()
    }

    fn grow_to(&mut self, v: Vertex) {
        if v >= self.slots.len() {
            self.slots.resize(v + 1, Slot::Vacant);
            self.adj.resize_with(v + 1, BTreeMap::new);
        }
    }

    pub fn add_vertex(&mut self, v: Vertex) -> Result<(), GraphError> {
        if v == ROOT || !self.is_vacant(v) {
            return Err(GraphError::VertexExists(v));
        }
        self.grow_to(v);
        self.slots[v] = Slot::Active;
        self.n_active += 1;
        Ok(())
    }

    /// Retires `v` and removes its incident edges, returning their ids.
    pub fn remove_vertex(&mut self, v: Vertex) -> Result<Vec<EdgeId>, GraphError> {
        Ok(self.remove_vertex_logged(v)?.into_iter().map(|(_, e)| e).collect())
    }

    fn remove_vertex_logged(&mut self, v: Vertex) -> Result<Vec<(Vertex, EdgeId)>, GraphError> {
        if !self.is_active(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        let incident: Vec<(Vertex, EdgeId)> = std::mem::take(&mut self.adj[v]).into_iter().collect();
        for &(u, e) in &incident {
            self.adj[u].remove(&v);
            self.edges[e] = None;
        }
        self.m_active -= incident.len();
        self.slots[v] = Slot::Retired;
        self.n_active -= 1;
        Ok(incident)
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<EdgeId, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for w in [u, v] {
            if !self.is_active(w) {
                return Err(GraphError::UnknownVertex(w));
            }
        }
        if self.has_edge(u, v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        let e = self.edges.len();
        self.edges.push(Some(edge_key(u, v)));
        self.adj[u].insert(v, e);
        self.adj[v].insert(u, e);
        self.m_active += 1;
        Ok(e)
    }

    pub fn remove_edge(&mut self, u: Vertex, v: Vertex) -> Result<EdgeId, GraphError> {
        let e = self.edge_id(u, v).ok_or(GraphError::UnknownEdge(u, v))?;
        self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        self.edges[e] = None;
        self.m_active -= 1;
        Ok(e)
    }

    fn restore_edge(&mut self, e: EdgeId, u: Vertex, v: Vertex) {
        self.edges[e] = Some(edge_key(u, v));
        self.adj[u].insert(v, e);
        self.adj[v].insert(u, e);
        self.m_active += 1;
    }

    fn rollback(&mut self, log: Vec<Undo>) {
        for undo in log.into_iter().rev() {
            match undo {
                Undo::AddedVertex(v) => {
                    self.slots[v] = Slot::Vacant;
                    self.n_active -= 1;
                }
                Undo::RemovedVertex(v, incident) => {
                    self.slots[v] = Slot::Active;
                    self.n_active += 1;
                    for (u, e) in incident {
                        self.restore_edge(e, u, v);
                    }
                }
                Undo::AddedEdge(e) => {
                    let (u, v) = self.edges[e].expect("edge added in this batch");
                    self.remove_edge(u, v).expect("edge added in this batch");
                    self.edges.pop();
                }
                Undo::RemovedEdge(e, u, v) => self.restore_edge(e, u, v),
            }
        }
    }

    /// Applies one raw update.
    pub fn apply_update(&mut self, upd: &Update) -> Result<(), GraphError> {
        let mut log = Vec::new();
        let res = self.apply_logged(upd, &mut log);
        if res.is_err() {
            self.rollback(log);
        }
        res
    }

    fn apply_logged(&mut self, upd: &Update, log: &mut Vec<Undo>) -> Result<(), GraphError> {
        match upd {
            Update::InsertEdge(u, v) => {
                let e = self.add_edge(*u, *v)?;
                log.push(Undo::AddedEdge(e));
            }
            Update::DeleteEdge(u, v) => {
                let e = self.remove_edge(*u, *v)?;
                log.push(Undo::RemovedEdge(e, *u, *v));
            }
            Update::InsertVertex(v, nbrs) => {
                self.add_vertex(*v)?;
                log.push(Undo::AddedVertex(*v));
                for &nb in nbrs {
                    let e = self.add_edge(*v, nb)?;
                    log.push(Undo::AddedEdge(e));
                }
            }
            Update::DeleteVertex(v) => {
                let incident = self.remove_vertex_logged(*v)?;
                log.push(Undo::RemovedVertex(*v, incident));
            }
        }
        Ok(())
    }

    /// Materializes `G+U`. Either the whole batch applies or the graph is left
    /// untouched.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<(), GraphError> {
        let mut log = Vec::new();
        let res = self.apply_batch_logged(batch, &mut log);
        if res.is_err() {
            self.rollback(log);
        }
        res
    }

    fn apply_batch_logged(&mut self, batch: &UpdateBatch, log: &mut Vec<Undo>) -> Result<(), GraphError> {
        for &v in &batch.vertex_fails {
            self.apply_logged(&Update::DeleteVertex(v), log)?;
        }
        for &(u, v) in &batch.edge_fails {
            self.apply_logged(&Update::DeleteEdge(u, v), log)?;
        }
        for vi in &batch.vertex_inserts {
            self.apply_logged(&Update::InsertVertex(vi.id, vi.neighbors.clone()), log)?;
        }
        for &(u, v) in &batch.edge_inserts {
            self.apply_logged(&Update::InsertEdge(u, v), log)?;
        }
        Ok(())
    }

    /// Full scan of the representation invariants. Meant for tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut m = 0;
        for v in 0..self.slots.len() {
            if self.slots[v] != Slot::Active && !self.adj[v].is_empty() {
                return Err(format!("inactive vertex {v} has neighbors"));
            }
            for (&u, &e) in &self.adj[v] {
                if u == v {
                    return Err(format!("self loop at {v}"));
                }
                if self.adj[u].get(&v) != Some(&e) {
                    return Err(format!("asymmetric adjacency ({v}, {u})"));
                }
                if self.edges.get(e).copied().flatten() != Some(edge_key(u, v)) {
                    return Err(format!("edge id {e} does not match ({v}, {u})"));
                }
                m += 1;
            }
        }
        if m != 2 * self.m_active {
            return Err(format!("m_active {} but {} adjacency entries", self.m_active, m));
        }
        if self.vertices().count() != self.n_active {
            return Err("n_active out of sync".into());
        }
        Ok(())
    }
}

/// Collapses a raw update sequence into a normalized batch relative to `g`.
///
/// Insert-then-delete pairs cancel, edges of deleted vertices are folded into
/// the vertex deletion, and edges inserted alongside a new vertex are attached
/// to that vertex (to the larger id when both endpoints are new).
pub fn normalize_batch(g: &Graph, raw: &[Update]) -> Result<UpdateBatch, GraphError> {
    let mut vstate: BTreeMap<Vertex, bool> = BTreeMap::new();
    let mut estate: HashMap<(Vertex, Vertex), bool> = HashMap::new();

    let active = |vstate: &BTreeMap<Vertex, bool>, v: Vertex| vstate.get(&v).copied().unwrap_or(g.is_active(v));
    let raw_present = |estate: &HashMap<(Vertex, Vertex), bool>, u: Vertex, v: Vertex| {
        estate.get(&edge_key(u, v)).copied().unwrap_or_else(|| g.has_edge(u, v))
    };

    let insert_edge = |vstate: &BTreeMap<Vertex, bool>,
                       estate: &mut HashMap<(Vertex, Vertex), bool>,
                       u: Vertex,
                       v: Vertex|
     -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for w in [u, v] {
            if !active(vstate, w) {
                return Err(GraphError::UnknownVertex(w));
            }
        }
        if raw_present(estate, u, v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        estate.insert(edge_key(u, v), true);
        Ok(())
    };

    for upd in raw {
        match upd {
            Update::InsertEdge(u, v) => insert_edge(&vstate, &mut estate, *u, *v)?,
            Update::DeleteEdge(u, v) => {
                // An edge whose endpoint was already deleted in this batch is
                // still "present" here; the deletion folds into the vertex one.
                if !raw_present(&estate, *u, *v) {
                    return Err(GraphError::ConflictingUpdate(format!(
                        "deleting edge ({u}, {v}) which is not present"
                    )));
                }
                estate.insert(edge_key(*u, *v), false);
            }
            Update::InsertVertex(v, nbrs) => {
                if *v == ROOT || !g.is_vacant(*v) || vstate.contains_key(v) {
                    return Err(GraphError::VertexExists(*v));
                }
                vstate.insert(*v, true);
                for &nb in nbrs {
                    insert_edge(&vstate, &mut estate, *v, nb)?;
                }
            }
            Update::DeleteVertex(v) => {
                if !active(&vstate, *v) {
                    return Err(GraphError::ConflictingUpdate(format!(
                        "deleting vertex {v} which is not present"
                    )));
                }
                vstate.insert(*v, false);
            }
        }
    }

    let mut batch = UpdateBatch::default();
    let mut inserts: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for (&v, &alive) in &vstate {
        if !alive && g.is_active(v) {
            batch.vertex_fails.push(v);
        }
        if alive && !g.is_active(v) {
            inserts.insert(v, Vec::new());
        }
    }
    let mut touched: Vec<_> = estate.into_iter().collect();
    touched.sort_unstable();
    for ((u, v), present) in touched {
        if !active(&vstate, u) || !active(&vstate, v) {
            continue;
        }
        let base = g.has_edge(u, v);
        match (base, present) {
            (true, false) => batch.edge_fails.push((u, v)),
            (false, true) => {
                // u < v, so the larger new endpoint owns the edge.
                if inserts.contains_key(&v) {
                    inserts.get_mut(&v).unwrap().push(u);
                } else if inserts.contains_key(&u) {
                    inserts.get_mut(&u).unwrap().push(v);
                } else {
                    batch.edge_inserts.push((u, v));
                }
            }
            _ => {}
        }
    }
    batch.vertex_inserts = inserts
        .into_iter()
        .map(|(id, mut neighbors)| {
            neighbors.sort_unstable();
            VertexInsert { id, neighbors }
        })
        .collect();
    Ok(batch)
}
