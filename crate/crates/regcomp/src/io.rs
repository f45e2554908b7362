//! Text formats for graphs, partitions, reduced graphs, and traces.
//!
//! Weights are serialized with 17 significant digits so every `f64`
//! round-trips exactly through save/load.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Graph, GraphError, VertexSet};
use crate::partition::EquitablePartition;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: edge ({i}, {j}) repeated with conflicting weights {w1} vs {w2}")]
    InconsistentEdge { line: usize, i: usize, j: usize, w1: f64, w2: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    /// Lines `i j w`, 0-indexed. Either one or both directions may be
    /// present; repeated entries must agree.
    EdgeList,
    /// First line `n`, then `n` whitespace-separated rows.
    DenseMatrix,
}

fn fmt_weight(w: f64) -> String {
    // 17 significant digits: lossless for f64.
    format!("{:.16e}", w)
}

pub fn graph_to_string(g: &Graph, format: GraphFormat) -> String {
    let mut out = String::new();
    match format {
        GraphFormat::EdgeList => {
            writeln!(out, "{}", g.n()).unwrap();
            for i in 0..g.n() {
                for j in (i + 1)..g.n() {
                    let w = g.weight(i, j);
                    if w > 0.0 {
                        writeln!(out, "{} {} {}", i, j, fmt_weight(w)).unwrap();
                    }
                }
            }
        }
        GraphFormat::DenseMatrix => {
            writeln!(out, "{}", g.n()).unwrap();
            for i in 0..g.n() {
                let row: Vec<String> = (0..g.n()).map(|j| fmt_weight(g.weight(i, j))).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
    }
    out
}

pub fn graph_from_string(text: &str, format: GraphFormat) -> Result<Graph, IoError> {
    match format {
        GraphFormat::EdgeList => parse_edge_list(text),
        GraphFormat::DenseMatrix => parse_dense(text),
    }
}

fn parse_edge_list(text: &str) -> Result<Graph, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected vertex count"))?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| parse_err(1, format!("expected vertex count, got {first:?}")))?;
    let mut entries: Vec<(usize, usize, f64, usize)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(lineno, format!("expected `i j w`, got {line:?}")));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad vertex index {:?}", parts[0])))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad vertex index {:?}", parts[1])))?;
        let w: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad weight {:?}", parts[2])))?;
        if i == j {
            return Err(parse_err(lineno, format!("self-loop at vertex {i}")));
        }
        if i >= n || j >= n {
            return Err(parse_err(lineno, format!("vertex index out of range for n={n}")));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(parse_err(lineno, format!("weight {w} outside [0, 1]")));
        }
        entries.push((i.min(j), i.max(j), w, lineno));
    }
    let mut g = Graph::empty(n);
    for (i, j, w, lineno) in entries {
        let existing = g.weight(i, j);
        if existing > 0.0 && existing != w {
            return Err(IoError::InconsistentEdge { line: lineno, i, j, w1: existing, w2: w });
        }
        g.set_weight(i, j, w)?;
    }
    Ok(g)
}

fn parse_dense(text: &str) -> Result<Graph, IoError> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected vertex count"))?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| parse_err(1, format!("expected vertex count, got {first:?}")))?;
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let lineno = r + 2;
        let line = lines
            .next()
            .ok_or_else(|| parse_err(lineno, format!("expected {n} matrix rows")))?;
        let row: Result<Vec<f64>, IoError> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad weight {t:?}"))))
            .collect();
        let row = row?;
        if row.len() != n {
            return Err(parse_err(lineno, format!("expected {n} entries, got {}", row.len())));
        }
        rows.push(row);
    }
    // Surface asymmetry / self-loop diagnostics with a line hint.
    Graph::from_rows(&rows).map_err(|e| match e {
        GraphError::SelfLoop(i) => parse_err(i + 2, format!("self-loop at vertex {i}")),
        GraphError::Asymmetric(i, j, a, b) => {
            parse_err(i + 2, format!("asymmetric entries ({i},{j}): {a} vs {b}"))
        }
        other => IoError::Graph(other),
    })
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>, format: GraphFormat) -> Result<(), IoError> {
    fs::write(path, graph_to_string(g, format))?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<Graph, IoError> {
    graph_from_string(&fs::read_to_string(path)?, format)
}

/// Guess the format from the extension-free content: the dense format's
/// second line has `n` entries, the edge list's has three.
pub fn load_graph_auto(path: impl AsRef<Path>) -> Result<Graph, IoError> {
    let text = fs::read_to_string(path)?;
    let n: Option<usize> = text.lines().next().and_then(|l| l.trim().parse().ok());
    let second_width = text.lines().nth(1).map(|l| l.split_whitespace().count());
    let format = match (n, second_width) {
        (Some(n), Some(w)) if w == n && n != 3 => GraphFormat::DenseMatrix,
        _ => GraphFormat::EdgeList,
    };
    graph_from_string(&text, format)
}

/// Partition text format: header `n k c`, one line of members per class,
/// and a final (possibly empty) line for the exceptional class.
pub fn partition_to_string(p: &EquitablePartition) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", p.n, p.classes.len(), p.class_size()).unwrap();
    for class in &p.classes {
        let row: Vec<String> = class.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    let row: Vec<String> = p.exceptional.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", row.join(" ")).unwrap();
    out
}

pub fn partition_from_string(text: &str) -> Result<EquitablePartition, IoError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty partition file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(parse_err(1, format!("expected header `n k c`, got {header:?}")));
    }
    let n: usize = parts[0].parse().map_err(|_| parse_err(1, "bad n"))?;
    let k: usize = parts[1].parse().map_err(|_| parse_err(1, "bad k"))?;
    let c: usize = parts[2].parse().map_err(|_| parse_err(1, "bad c"))?;
    let parse_members = |line: &str, lineno: usize| -> Result<Vec<usize>, IoError> {
        line.split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad index {t:?}"))))
            .collect()
    };
    let mut classes = Vec::with_capacity(k);
    for i in 0..k {
        let lineno = i + 2;
        let line = lines.next().ok_or_else(|| parse_err(lineno, "missing class line"))?;
        let members = parse_members(line, lineno)?;
        if members.len() != c {
            return Err(parse_err(lineno, format!("class has {} members, expected {c}", members.len())));
        }
        classes.push(VertexSet::new(members));
    }
    let c0_line = lines.next().unwrap_or("");
    let exceptional = VertexSet::new(parse_members(c0_line, k + 2)?);
    let p = EquitablePartition { classes, exceptional, n };
    p.validate().map_err(|e| parse_err(1, e.to_string()))?;
    Ok(p)
}

pub fn save_partition(p: &EquitablePartition, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path, partition_to_string(p))?;
    Ok(())
}

pub fn load_partition(path: impl AsRef<Path>) -> Result<EquitablePartition, IoError> {
    partition_from_string(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::complete(4);
        let text = graph_to_string(&g, GraphFormat::EdgeList);
        let back = graph_from_string(&text, GraphFormat::EdgeList).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn dense_round_trip_preserves_bits() {
        let mut g = Graph::empty(3);
        g.set_weight(0, 1, 0.1).unwrap();
        g.set_weight(1, 2, 1.0 / 3.0).unwrap();
        for f in [GraphFormat::EdgeList, GraphFormat::DenseMatrix] {
            let back = graph_from_string(&graph_to_string(&g, f), f).unwrap();
            assert_eq!(g, back, "format {f:?}");
        }
    }

    #[test]
    fn edge_list_both_directions_accepted() {
        let g = graph_from_string("2\n0 1 1.0\n1 0 1.0\n", GraphFormat::EdgeList).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn edge_list_conflicting_weights_rejected() {
        let err = graph_from_string("2\n0 1 1.0\n1 0 0.5\n", GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(err, IoError::InconsistentEdge { line: 3, .. }));
    }

    #[test]
    fn self_loop_rejected_with_line() {
        let err = graph_from_string("2\n0 0 1.0\n", GraphFormat::EdgeList).unwrap_err();
        match err {
            IoError::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("self-loop"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dense_asymmetric_rejected() {
        let err =
            graph_from_string("2\n0 1.0\n0.5 0\n", GraphFormat::DenseMatrix).unwrap_err();
        assert!(matches!(err, IoError::Parse { .. }));
    }

    #[test]
    fn auto_detect_formats() {
        let g = Graph::complete(5);
        let dir = std::env::temp_dir();
        let p1 = dir.join("regcomp_io_test_el.txt");
        let p2 = dir.join("regcomp_io_test_dm.txt");
        save_graph(&g, &p1, GraphFormat::EdgeList).unwrap();
        save_graph(&g, &p2, GraphFormat::DenseMatrix).unwrap();
        assert_eq!(load_graph_auto(&p1).unwrap(), g);
        assert_eq!(load_graph_auto(&p2).unwrap(), g);
        std::fs::remove_file(p1).ok();
        std::fs::remove_file(p2).ok();
    }

    #[test]
    fn partition_round_trip() {
        let p = EquitablePartition {
            classes: vec![VertexSet::new(vec![0, 1, 2]), VertexSet::new(vec![3, 4, 5])],
            exceptional: VertexSet::new(vec![6]),
            n: 7,
        };
        let back = partition_from_string(&partition_to_string(&p)).unwrap();
        assert_eq!(p.classes, back.classes);
        assert_eq!(p.exceptional, back.exceptional);
    }

    #[test]
    fn partition_empty_exceptional() {
        let p = EquitablePartition {
            classes: vec![VertexSet::new(vec![0, 1]), VertexSet::new(vec![2, 3])],
            exceptional: VertexSet::new(vec![]),
            n: 4,
        };
        let back = partition_from_string(&partition_to_string(&p)).unwrap();
        assert!(back.exceptional.is_empty());
    }
}
