//! Text formats for graphs and update/query streams.
//!
//! Graph files start with `n m` followed by `m` lines `u v` over vertices
//! `1..=n`. Stream files hold one operation per line: `IE u v`, `DE u v`,
//! `IV u v1 v2 ...`, `DV u`, and the queries `QC u v`, `QB u v`, `Q2 u v`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, Update, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Connected,
    Biconnected,
    TwoEdge,
}

impl QueryKind {
    pub fn tag(self) -> &'static str {
        match self {
            QueryKind::Connected => "QC",
            QueryKind::Biconnected => "QB",
            QueryKind::TwoEdge => "Q2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StreamOp {
    Update(Update),
    Query(QueryKind, Vertex, Vertex),
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn numbers(line: usize, fields: &[&str]) -> Result<Vec<usize>, ParseError> {
    fields
        .iter()
        .map(|f| f.parse::<usize>().map_err(|_| err(line, format!("expected a non-negative integer, found `{f}`"))))
        .collect()
}

pub fn parse_graph(text: &str) -> Result<Graph, ParseError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing `n m` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = numbers(hl, &fields)?[..] else {
        return Err(err(hl, "header must be `n m`"));
    };
    let mut g = Graph::with_vertices(n);
    let mut count = 0;
    let mut last = hl;
    for (ln, l) in lines {
        last = ln;
        let fields: Vec<&str> = l.split_whitespace().collect();
        let [u, v] = numbers(ln, &fields)?[..] else {
            return Err(err(ln, "edge line must be `u v`"));
        };
        for w in [u, v] {
            if w == 0 || w > n {
                return Err(err(ln, format!("vertex {w} outside 1..={n}")));
            }
        }
        g.add_edge(u, v).map_err(|e| err(ln, e.to_string()))?;
        count += 1;
    }
    if count != m {
        return Err(err(last, format!("header promises {m} edges, found {count}")));
    }
    Ok(g)
}

/// Writes the active part of `g`. Vertex ids are kept, so retired ids below
/// the largest active one come back as isolated vertices.
pub fn write_graph(g: &Graph) -> String {
    let n = g.vertices().max().unwrap_or(0);
    let mut s = format!("{n} {}\n", g.edge_count());
    for (u, v) in g.edge_pairs() {
        writeln!(s, "{u} {v}").unwrap();
    }
    s
}

pub fn parse_op(line: usize, text: &str) -> Result<StreamOp, ParseError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    let (tag, rest) = fields.split_first().ok_or_else(|| err(line, "empty operation"))?;
    let args = numbers(line, rest)?;
    let pair = |args: &[usize]| match args {
        [u, v] => Ok((*u, *v)),
        _ => Err(err(line, format!("`{tag}` takes two vertices"))),
    };
    Ok(match *tag {
        "IE" => pair(&args).map(|(u, v)| StreamOp::Update(Update::InsertEdge(u, v)))?,
        "DE" => pair(&args).map(|(u, v)| StreamOp::Update(Update::DeleteEdge(u, v)))?,
        "IV" => match args.split_first() {
            Some((u, nbrs)) => StreamOp::Update(Update::InsertVertex(*u, nbrs.to_vec())),
            None => return Err(err(line, "`IV` needs a vertex id")),
        },
        "DV" => match args[..] {
            [u] => StreamOp::Update(Update::DeleteVertex(u)),
            _ => return Err(err(line, "`DV` takes one vertex")),
        },
        "QC" => pair(&args).map(|(u, v)| StreamOp::Query(QueryKind::Connected, u, v))?,
        "QB" => pair(&args).map(|(u, v)| StreamOp::Query(QueryKind::Biconnected, u, v))?,
        "Q2" => pair(&args).map(|(u, v)| StreamOp::Query(QueryKind::TwoEdge, u, v))?,
        other => return Err(err(line, format!("unknown operation `{other}`"))),
    })
}

pub fn parse_stream(text: &str) -> Result<Vec<StreamOp>, ParseError> {
    content_lines(text).map(|(ln, l)| parse_op(ln, l)).collect()
}

pub fn format_op(op: &StreamOp) -> String {
    match op {
        StreamOp::Update(Update::InsertEdge(u, v)) => format!("IE {u} {v}"),
        StreamOp::Update(Update::DeleteEdge(u, v)) => format!("DE {u} {v}"),
        StreamOp::Update(Update::InsertVertex(u, nbrs)) => {
            let mut s = format!("IV {u}");
            for v in nbrs {
                write!(s, " {v}").unwrap();
            }
            s
        }
        StreamOp::Update(Update::DeleteVertex(u)) => format!("DV {u}"),
        StreamOp::Query(kind, u, v) => format!("{} {u} {v}", kind.tag()),
    }
}

pub fn write_stream(ops: &[StreamOp]) -> String {
    let mut s = String::new();
    for op in ops {
        s.push_str(&format_op(op));
        s.push('\n');
    }
    s
}
