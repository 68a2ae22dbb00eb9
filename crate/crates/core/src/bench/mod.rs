//! Stream replay with metrics, oracle auditing and shrinking of failures.

pub mod gen;
pub mod io;

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::graph::{Graph, Vertex};
use crate::maintainer::{Config, Maintainer, MaintainerError};
use crate::oracle::{brute_biconnected, brute_connected, brute_two_edge, verify_dfs_tree};
use crate::tree::{build_tree, DfsTree, VisitOrder};
use io::{format_op, write_graph, QueryKind, StreamOp};

/// One CSV row per replayed update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsRow {
    /// Position of the update in the stream, counting queries.
    pub index: usize,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub d_queries: usize,
    pub edges_scanned: usize,
    pub l_total: usize,
    pub wall_nanos: u128,
    pub tree_valid: bool,
    pub tree_edge_flips: usize,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str =
        "index,k,n,m,d_queries,edges_scanned,L_total,wall_nanos,tree_valid,tree_edge_flips";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.index,
            self.k,
            self.n,
            self.m,
            self.d_queries,
            self.edges_scanned,
            self.l_total,
            self.wall_nanos,
            u8::from(self.tree_valid),
            self.tree_edge_flips
        )
    }
}

pub fn write_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(MetricsRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Vertices present in both trees whose parent differs.
pub fn tree_edge_flips(prev: &DfsTree, cur: &DfsTree) -> usize {
    let n = prev.slot_count().min(cur.slot_count());
    (1..n)
        .filter(|&v| prev.contains(v) && cur.contains(v) && prev.parent(v) != cur.parent(v))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Answer {
    pub index: usize,
    pub kind: QueryKind,
    pub u: Vertex,
    pub v: Vertex,
    pub value: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub config: Config,
    /// Check every tree and every query answer against brute force and stop
    /// at the first mismatch.
    pub audit: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub answers: Vec<Answer>,
}

/// A reproduction of an oracle mismatch.
#[derive(Debug, Clone)]
pub struct Mismatch {
    /// Index of the failing operation within `prefix`.
    pub index: usize,
    pub what: String,
    pub graph: Graph,
    /// Shortest failing prefix found, ending at the failing operation.
    pub prefix: Vec<StreamOp>,
    /// A static DFS tree of the graph at the failure.
    pub oracle_tree: DfsTree,
    pub reported_tree: DfsTree,
}

impl Mismatch {
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# mismatch at operation {}: {}", self.index, self.what).unwrap();
        writeln!(s, "## graph").unwrap();
        s.push_str(&write_graph(&self.graph));
        writeln!(s, "## stream").unwrap();
        for op in &self.prefix {
            writeln!(s, "{}", format_op(op)).unwrap();
        }
        writeln!(s, "## oracle tree").unwrap();
        s.push_str(&self.oracle_tree.dump());
        writeln!(s, "## reported tree").unwrap();
        s.push_str(&self.reported_tree.dump());
        s
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("operation {index}: {source}")]
    Op {
        index: usize,
        #[source]
        source: MaintainerError,
    },
    #[error("oracle mismatch at operation {}: {}", .0.index, .0.what)]
    Mismatch(Box<Mismatch>),
}

/// Replays `ops` on `g`. With `opts.audit`, a mismatch is shrunk to a
/// minimal failing prefix before it is returned.
pub fn run_stream(g: &Graph, ops: &[StreamOp], opts: RunOptions) -> Result<RunOutput, RunError> {
    match replay(g, ops, opts) {
        Err(RunError::Mismatch(mm)) => Err(RunError::Mismatch(Box::new(shrink(g, opts, *mm)))),
        other => other,
    }
}

fn replay(g: &Graph, ops: &[StreamOp], opts: RunOptions) -> Result<RunOutput, RunError> {
    let mut cfg = opts.config;
    cfg.track_apps |= ops.iter().any(|op| matches!(op, StreamOp::Query(..)));
    let mut mt = Maintainer::new(g.clone(), cfg).map_err(|source| RunError::Op { index: 0, source })?;
    let mut prev = mt.tree().clone();
    let mut out = RunOutput::default();
    for (index, op) in ops.iter().enumerate() {
        let mismatch = |mt: &Maintainer, what: String| {
            RunError::Mismatch(Box::new(Mismatch {
                index,
                what,
                graph: g.clone(),
                prefix: ops[..=index].to_vec(),
                oracle_tree: build_tree(mt.graph(), VisitOrder::Ascending),
                reported_tree: mt.tree().clone(),
            }))
        };
        match op {
            StreamOp::Update(upd) => {
                let start = Instant::now();
                let report = mt.update(upd.clone()).map_err(|source| RunError::Op { index, source })?;
                let wall_nanos = start.elapsed().as_nanos();
                let live = mt.graph();
                let tree_valid = verify_dfs_tree(live, mt.tree()).is_valid();
                out.rows.push(MetricsRow {
                    index,
                    k: report.k,
                    n: live.vertex_count(),
                    m: live.edge_count(),
                    d_queries: report.trace.d_queries,
                    edges_scanned: report.trace.edges_scanned,
                    l_total: report.trace.l_total,
                    wall_nanos,
                    tree_valid,
                    tree_edge_flips: tree_edge_flips(&prev, mt.tree()),
                });
                if opts.audit && !tree_valid {
                    return Err(mismatch(&mt, "reported tree is not a DFS tree".into()));
                }
                prev = mt.tree().clone();
            }
            &StreamOp::Query(kind, u, v) => {
                let apps = mt.apps().expect("apps are tracked when the stream has queries");
                let value = match kind {
                    QueryKind::Connected => apps.query_connectivity(u, v),
                    QueryKind::Biconnected => apps.query_biconnected(u, v),
                    QueryKind::TwoEdge => apps.query_2edge(u, v),
                }
                .map_err(|e| RunError::Op { index, source: e.into() })?;
                if opts.audit {
                    let live = mt.graph();
                    let expected = match kind {
                        QueryKind::Connected => brute_connected(live, u, v),
                        QueryKind::Biconnected => brute_biconnected(live, u, v),
                        QueryKind::TwoEdge => brute_two_edge(live, u, v),
                    };
                    if value != expected {
                        let what = format!("{} {u} {v} answered {value}, expected {expected}", kind.tag());
                        return Err(mismatch(&mt, what));
                    }
                }
                out.answers.push(Answer { index, kind, u, v, value });
            }
        }
    }
    Ok(out)
}

/// Greedily drops operations before the failing one while the audit still
/// fails somewhere. Candidates that become invalid streams are rejected.
fn shrink(g: &Graph, opts: RunOptions, first: Mismatch) -> Mismatch {
    let audit = RunOptions { audit: true, ..opts };
    let mut best = first;
    let mut i = best.index;
    while i > 0 {
        i -= 1;
        let mut cand = best.prefix.clone();
        cand.remove(i);
        if let Err(RunError::Mismatch(mm)) = replay(g, &cand, audit) {
            best = *mm;
            i = i.min(best.index);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::graph_a;
    use crate::graph::Update;
    use io::parse_stream;

    #[test]
    fn empty_stream_has_header_only() {
        let out = run_stream(&graph_a(), &[], RunOptions { audit: true, ..Default::default() }).unwrap();
        assert_eq!(write_csv(&out.rows), format!("{}\n", MetricsRow::CSV_HEADER));
    }

    #[test]
    fn graph_a_delete_then_query() {
        let ops = parse_stream("DE 1 2\nQC 3 7\n").unwrap();
        let out = run_stream(&graph_a(), &ops, RunOptions { audit: true, ..Default::default() }).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0].tree_valid);
        assert_eq!(out.answers.len(), 1);
        assert!(out.answers[0].value);
        assert!(out.rows[0].to_csv().ends_with(&format!(",1,{}", out.rows[0].tree_edge_flips)));
    }

    #[test]
    fn flips_count_changed_parents() {
        let a = DfsTree::from_parents(vec![None, Some(0), Some(1), Some(2)]).unwrap();
        let b = DfsTree::from_parents(vec![None, Some(0), Some(1), Some(1)]).unwrap();
        assert_eq!(tree_edge_flips(&a, &b), 1);
        assert_eq!(tree_edge_flips(&a, &a), 0);
    }

    #[test]
    fn invalid_operation_reports_index() {
        let ops = vec![StreamOp::Update(Update::InsertEdge(1, 2)), StreamOp::Update(Update::DeleteEdge(5, 8))];
        match run_stream(&graph_a(), &ops, RunOptions::default()) {
            Err(RunError::Op { index, .. }) => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatch_dump_has_all_sections() {
        let t = build_tree(&graph_a(), VisitOrder::Ascending);
        let mm = Mismatch {
            index: 0,
            what: "x".into(),
            graph: graph_a(),
            prefix: parse_stream("QC 1 2\n").unwrap(),
            oracle_tree: t.clone(),
            reported_tree: t,
        };
        let d = mm.dump();
        for h in ["## graph", "## stream", "QC 1 2", "## oracle tree", "## reported tree"] {
            assert!(d.contains(h), "{h}");
        }
    }
}
