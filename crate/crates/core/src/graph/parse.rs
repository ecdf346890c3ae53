//! Plain-text graph format.
//!
//! ```text
//! 3 undirected
//! 0 1 1.0
//! 1 2 0.5
//! ```
//!
//! The header gives the vertex count and orientation; every following
//! non-blank line is an `i j w` edge with 0-based ids. `#` starts a comment.

use std::collections::HashSet;
use std::path::Path;

use super::{GraphError, WeightedDigraph};

pub fn parse_graph_file(path: &Path) -> Result<WeightedDigraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<WeightedDigraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(GraphError::Parse { line: 1, msg: "missing header".into() })?;
    let err = |line: usize, msg: String| GraphError::Parse { line, msg };
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err(header_line, format!("header `{header}` must start with a vertex count")))?;
    let directed = match parts.next() {
        Some("directed") => true,
        Some("undirected") => false,
        other => {
            return Err(err(header_line, format!("expected `directed` or `undirected`, found {other:?}")));
        }
    };
    if parts.next().is_some() {
        return Err(err(header_line, "trailing tokens after header".into()));
    }

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (line, body) in lines {
        let edge = parse_edge(body).map_err(|m| err(line, m))?;
        check_edge(n, edge).map_err(|e| err(line, e.to_string()))?;
        let key = if directed { (edge.0, edge.1) } else { (edge.0.min(edge.1), edge.0.max(edge.1)) };
        if !seen.insert(key) {
            return Err(err(line, GraphError::DuplicateEdge { i: edge.0, j: edge.1 }.to_string()));
        }
        edges.push(edge);
    }
    WeightedDigraph::from_edges(n, directed, &edges)
}

/// Parses one `i j w` triple.
pub(crate) fn parse_edge(body: &str) -> Result<(usize, usize, f64), String> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(format!("edge `{body}` must be `i j w`"));
    }
    let i = toks[0].parse().map_err(|_| format!("bad vertex id `{}`", toks[0]))?;
    let j = toks[1].parse().map_err(|_| format!("bad vertex id `{}`", toks[1]))?;
    let w = toks[2].parse().map_err(|_| format!("bad weight `{}`", toks[2]))?;
    Ok((i, j, w))
}

pub(crate) fn check_edge(n: usize, (i, j, w): (usize, usize, f64)) -> Result<(), GraphError> {
    if i >= n || j >= n {
        return Err(GraphError::OutOfRange { i, j, n });
    }
    if i == j {
        return Err(GraphError::SelfLoop(i));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(GraphError::BadWeight { i, j, w });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_undirected_with_comments() {
        let g = parse_graph("# path\n3 undirected\n0 1 1.0\n\n1 2 0.5 # light\n").unwrap();
        assert_eq!(g.n(), 3);
        assert!(!g.is_directed());
        assert_eq!(g.weight(2, 1), 0.5);
    }

    #[test]
    fn parses_directed() {
        let g = parse_graph("3 directed\n0 1 1\n1 2 1\n2 0 1\n").unwrap();
        assert!(g.is_directed());
        assert_eq!(g.weight(1, 0), 0.0);
    }

    #[test]
    fn rejects_self_loop_with_line() {
        let e = parse_graph("2 undirected\n1 1 0.5\n").unwrap_err();
        assert_eq!(e, GraphError::Parse { line: 2, msg: "self-loop at vertex 1".into() });
    }

    #[test]
    fn rejects_bad_edges() {
        for text in ["2 undirected\n0 1 0\n", "2 undirected\n0 1 -1\n", "2 undirected\n0 5 1\n", "2 undirected\n0 1\n"] {
            assert!(matches!(parse_graph(text), Err(GraphError::Parse { line: 2, .. })), "{text}");
        }
        assert!(matches!(parse_graph("2 undirected\n0 1 1\n1 0 1\n"), Err(GraphError::Parse { line: 3, .. })));
        assert!(parse_graph("2 directed\n0 1 1\n1 0 1\n").is_ok());
    }

    #[test]
    fn rejects_bad_header() {
        assert!(parse_graph("").is_err());
        assert!(parse_graph("x undirected\n").is_err());
        assert!(parse_graph("2 sideways\n").is_err());
        assert!(parse_graph("2 directed extra\n").is_err());
    }
}
