//! Instance generators: random graphs and streams, the edge-update lower
//! bound instance, and the pseudo-root reduction.

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bench::io::{QueryKind, StreamOp};
use crate::graph::{Graph, Update, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("adversary instance needs an even n >= 10, got {0}")]
    NTooSmall(usize),
    #[error("mix weights must be 5 or 7 non-negative numbers summing to 1, got {0:?}")]
    BadWeights(Vec<f64>),
    #[error("{m} edges do not fit on {n} vertices")]
    TooManyEdges { n: usize, m: usize },
}

/// Uniform simple graph on `1..=n` with `min(m, n(n-1)/2)` edges.
pub fn random_graph(n: usize, m: usize, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::with_vertices(n);
    let cap = n * n.saturating_sub(1) / 2;
    let m = m.min(cap);
    if m * 2 > cap {
        let mut all: Vec<(Vertex, Vertex)> =
            (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect();
        all.shuffle(rng);
        for &(u, v) in &all[..m] {
            g.add_edge(u, v).expect("distinct pair");
        }
        return g;
    }
    while g.edge_count() < m {
        let u = rng.gen_range(1..=n);
        let v = rng.gen_range(1..=n);
        if u != v && !g.has_edge(u, v) {
            g.add_edge(u, v).expect("checked");
        }
    }
    g
}

const IE: usize = 0;
const DE: usize = 1;
const IV: usize = 2;
const DV: usize = 3;

/// Draws an update of kind `kind` that is valid on `g`, or `None` when the
/// kind is infeasible right now.
fn draw_update(g: &Graph, kind: usize, rng: &mut impl Rng) -> Option<Update> {
    match kind {
        IE => {
            let n = g.vertex_count();
            if g.edge_count() >= n * n.saturating_sub(1) / 2 {
                return None;
            }
            let verts: Vec<Vertex> = g.vertices().collect();
            for _ in 0..64 {
                let u = *verts.choose(rng)?;
                let v = *verts.choose(rng)?;
                if u != v && !g.has_edge(u, v) {
                    return Some(Update::InsertEdge(u, v));
                }
            }
            None
        }
        DE => g.edges().choose(rng).map(|(_, u, v)| Update::DeleteEdge(u, v)),
        IV => {
            let id = g.slot_count();
            let want = rng.gen_range(0..=3.min(g.vertex_count()));
            let nbrs = g.vertices().choose_multiple(rng, want);
            Some(Update::InsertVertex(id, nbrs))
        }
        DV => g.vertices().choose(rng).map(Update::DeleteVertex),
        _ => unreachable!("update kinds are 0..4"),
    }
}

/// `k` mixed updates, each valid on the graph produced by its predecessors.
/// Kinds are drawn uniformly; infeasible draws are resampled.
pub fn random_updates(g: &Graph, k: usize, rng: &mut impl Rng) -> Vec<Update> {
    let mut scratch = g.clone();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let kind = rng.gen_range(0..4);
        if let Some(u) = draw_update(&scratch, kind, rng) {
            scratch.apply_update(&u).expect("generated updates are valid");
            out.push(u);
        }
    }
    out
}

/// Random graph plus a stream of `length` operations drawn from `weights`
/// over `IE, DE, IV, DV, QC, QB, Q2`. Five weights are read as
/// `IE, DE, IV, DV, Q` with the query weight split evenly. Infeasible draws
/// are redrawn; every emitted line is valid when replayed in order.
pub fn gen_random_stream(
    n: usize,
    m: usize,
    length: usize,
    weights: &[f64],
    seed: u64,
) -> Result<(Graph, Vec<StreamOp>), GenError> {
    let bad = || GenError::BadWeights(weights.to_vec());
    let w: Vec<f64> = match weights.len() {
        7 => weights.to_vec(),
        5 => {
            let q = weights[4] / 3.0;
            vec![weights[0], weights[1], weights[2], weights[3], q, q, q]
        }
        _ => return Err(bad()),
    };
    let total: f64 = w.iter().sum();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-6 {
        return Err(bad());
    }
    if m > n * n.saturating_sub(1) / 2 {
        return Err(GenError::TooManyEdges { n, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0 = random_graph(n, m, &mut rng);
    let mut g = g0.clone();
    let mut ops = Vec::with_capacity(length);
    let queries = [QueryKind::Connected, QueryKind::Biconnected, QueryKind::TwoEdge];
    while ops.len() < length {
        let mut kind = pick(&w, &mut rng);
        let mut op = None;
        for attempt in 0..256 {
            if attempt > 0 {
                kind = pick(&w, &mut rng);
            }
            op = if kind < 4 {
                draw_update(&g, kind, &mut rng).map(StreamOp::Update)
            } else {
                let verts: Vec<Vertex> = g.vertices().collect();
                match (verts.choose(&mut rng), verts.choose(&mut rng)) {
                    (Some(&u), Some(&v)) => Some(StreamOp::Query(queries[kind - 4], u, v)),
                    _ => None,
                }
            };
            if op.is_some() {
                break;
            }
        }
        // Only queries on an empty graph can exhaust the redraws; a vertex
        // insertion always applies.
        let op = op.unwrap_or_else(|| StreamOp::Update(Update::InsertVertex(g.slot_count(), Vec::new())));
        if let StreamOp::Update(u) = &op {
            g.apply_update(u).expect("generated updates are valid");
        }
        ops.push(op);
    }
    Ok((g0, ops))
}

fn pick(w: &[f64], rng: &mut impl Rng) -> usize {
    let mut x = rng.gen::<f64>() * w.iter().sum::<f64>();
    for (i, &wi) in w.iter().enumerate() {
        if x < wi {
            return i;
        }
        x -= wi;
    }
    w.iter().rposition(|&wi| wi > 0.0).unwrap_or(0)
}

/// The edge-update lower bound instance: hubs `x` and `y` both adjacent to
/// `n/2` vertices `u_j`, and a line `v_1 .. v_k` with `k = n/2 - 3` hanging
/// off a hub at one end.
#[derive(Debug, Clone)]
pub struct AdversaryInstance {
    pub graph: Graph,
    /// `line[i]` is `v_{i+1}`.
    pub line: Vec<Vertex>,
    pub x: Vertex,
    pub y: Vertex,
    pub us: Vec<Vertex>,
    /// Insert/delete pairs; `2 * pairs` updates.
    pub updates: Vec<Update>,
}

/// Builds the lower bound instance with `pairs` insert/delete pairs.
///
/// Pair `t` inserts `(v_{p(t)}, h(t))` and deletes `(v_{p(t-1)}, h(t-1))`,
/// where `p` cycles through `1..=k` and `h` alternates between the hubs
/// starting from `y`. The line always hangs off exactly one hub, and each
/// pair moves it to the other hub, so the `u_j` trade parents wholesale.
///
/// Ids are chosen so that a DFS from the lowest id runs down the line first.
pub fn gen_adversary_edge(n: usize, pairs: usize) -> Result<AdversaryInstance, GenError> {
    if n < 10 || !n.is_multiple_of(2) {
        return Err(GenError::NTooSmall(n));
    }
    let l = n / 2;
    let k = n / 2 - 3;
    let line: Vec<Vertex> = (1..=k).rev().collect();
    let y = k + 1;
    let x = k + 2;
    let us: Vec<Vertex> = (k + 3..k + 3 + l).collect();
    let mut g = Graph::with_vertices(k + 2 + l);
    for w in line.windows(2) {
        g.add_edge(w[0], w[1]).expect("fresh line edge");
    }
    for &u in &us {
        g.add_edge(u, x).expect("fresh hub edge");
        g.add_edge(u, y).expect("fresh hub edge");
    }
    let hub = |t: usize| if t.is_multiple_of(2) { y } else { x };
    let pos = |t: usize| line[t % k];
    g.add_edge(pos(0), hub(0)).expect("fresh attachment");
    let mut updates = Vec::with_capacity(2 * pairs);
    for t in 1..=pairs {
        updates.push(Update::InsertEdge(pos(t), hub(t)));
        updates.push(Update::DeleteEdge(pos(t - 1), hub(t - 1)));
    }
    Ok(AdversaryInstance { graph: g, line, x, y, us, updates })
}

/// Adds a fresh vertex adjacent to every active vertex of `g`.
pub fn gen_pseudo_root(g: &Graph) -> (Graph, Vertex) {
    let mut h = g.clone();
    let p = h.slot_count();
    let nbrs: Vec<Vertex> = h.vertices().collect();
    h.apply_update(&Update::InsertVertex(p, nbrs)).expect("fresh id");
    (h, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::io::write_stream;
    use crate::oracle::component_count;
    use crate::tree::{build_tree, VisitOrder};

    #[test]
    fn random_graph_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_graph(20, 50, &mut rng);
        assert_eq!((g.vertex_count(), g.edge_count()), (20, 50));
        let dense = random_graph(6, 100, &mut rng);
        assert_eq!(dense.edge_count(), 15);
    }

    #[test]
    fn random_updates_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(10, 15, &mut rng);
        let ups = random_updates(&g, 40, &mut rng);
        let mut h = g.clone();
        for u in &ups {
            h.apply_update(u).unwrap();
        }
    }

    #[test]
    fn adversary_shape_n10() {
        let a = gen_adversary_edge(10, 3).unwrap();
        assert_eq!(a.us.len(), 5);
        assert_eq!(a.line.len(), 2);
        assert_eq!(a.graph.vertex_count(), 9);
        assert_eq!(a.graph.edge_count(), 2 * 5 + 1 + 1);
        assert_eq!(a.updates.len(), 6);
        assert!(a.graph.has_edge(a.line[0], a.y));
        assert_eq!(a.updates[0], Update::InsertEdge(a.line[1], a.x));
        assert_eq!(a.updates[1], Update::DeleteEdge(a.line[0], a.y));
        let mut g = a.graph.clone();
        for u in &a.updates {
            g.apply_update(u).unwrap();
        }
    }

    #[test]
    fn adversary_rejects_small_or_odd() {
        assert_eq!(gen_adversary_edge(8, 1).unwrap_err(), GenError::NTooSmall(8));
        assert_eq!(gen_adversary_edge(11, 1).unwrap_err(), GenError::NTooSmall(11));
    }

    #[test]
    fn pseudo_root_children() {
        let (h, p) = gen_pseudo_root(&Graph::with_vertices(3));
        let t = build_tree(&h, VisitOrder::StartAt(p));
        assert_eq!(t.children(p).len(), 3);
        let path = Graph::from_edges(3, &[(1, 2), (2, 3)]).unwrap();
        let (h, p) = gen_pseudo_root(&path);
        let t = build_tree(&h, VisitOrder::StartAt(p));
        assert_eq!(t.children(p).len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..20);
            let g = random_graph(n, rng.gen_range(0..2 * n), &mut rng);
            let (h, p) = gen_pseudo_root(&g);
            let t = build_tree(&h, VisitOrder::StartAt(p));
            assert_eq!(t.children(p).len(), component_count(&g));
        }
    }

    #[test]
    fn stream_queries_only() {
        let (g, ops) = gen_random_stream(10, 12, 50, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 7).unwrap();
        assert_eq!(ops.len(), 50);
        assert!(ops.iter().all(|o| matches!(o, StreamOp::Query(QueryKind::Connected, ..))));
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn stream_is_deterministic_and_valid() {
        let w = [0.3, 0.3, 0.1, 0.1, 0.2];
        let (g1, a) = gen_random_stream(20, 40, 500, &w, 9).unwrap();
        let (g2, b) = gen_random_stream(20, 40, 500, &w, 9).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(write_stream(&a), write_stream(&b));
        let mut g = g1;
        for op in &a {
            match op {
                StreamOp::Update(u) => g.apply_update(u).unwrap(),
                StreamOp::Query(_, u, v) => assert!(g.is_active(*u) && g.is_active(*v)),
            }
        }
    }

    #[test]
    fn stream_deletions_on_empty_graph_resample() {
        let (_, ops) = gen_random_stream(0, 0, 20, &[0.0, 0.5, 0.1, 0.4, 0.0], 4).unwrap();
        assert_eq!(ops.len(), 20);
        assert!(gen_random_stream(5, 1, 1, &[0.5, 0.5], 0).is_err());
        assert!(gen_random_stream(5, 1, 1, &[0.5, 0.5, 0.5, 0.0, 0.0], 0).is_err());
    }
}
