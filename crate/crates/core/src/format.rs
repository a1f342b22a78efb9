//! Line-oriented text formats for instances and graphs.
//!
//! Instances:
//!
//! ```text
//! c optional comments
//! p occ <n> <M> <q_default>
//! 1 -2 3 0
//! q=2 2 4 5 0
//! ```
//!
//! Graphs use the DIMACS edge style: `p edge <nodes> <edges>` followed by
//! `e <u> <v>` lines with 1-based node indices.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::hamiltonian::{Graph, GraphError};
use crate::instance::{Clause, Instance, Literal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `p` header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("unexpected token {0:?}")]
    BadToken(String),
    #[error("clause not terminated by 0")]
    MissingTerminator,
    #[error("clause has no literals")]
    EmptyClause,
    #[error("variable {0} repeated in clause")]
    RepeatedVariable(usize),
    #[error("occupation q = {q} outside 1..={p}")]
    OccupationOutOfRange { q: usize, p: usize },
    #[error("literal {literal} out of range for n = {n}")]
    LiteralOutOfRange { literal: i64, n: usize },
    #[error("header declares {expected} entries, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.first() {
            None => None,
            Some(t) if t.starts_with('c') => None,
            Some(_) => Some((i + 1, toks)),
        }
    })
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse()
        .map_err(|_| err(line, ParseErrorKind::BadToken(tok.to_string())))
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut last_line = 0;
    for (line, toks) in content_lines(text) {
        last_line = line;
        if toks[0] == "p" {
            if header.is_some() {
                return Err(err(line, ParseErrorKind::DuplicateHeader));
            }
            if toks.len() != 5 || toks[1] != "occ" {
                return Err(err(
                    line,
                    ParseErrorKind::MalformedHeader("expected `p occ <n> <M> <q>`".into()),
                ));
            }
            let nums = toks[2..]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(line, ParseErrorKind::MalformedHeader(e.to_string())))?;
            if nums[2] == 0 {
                return Err(err(
                    line,
                    ParseErrorKind::MalformedHeader("default q must be positive".into()),
                ));
            }
            header = Some((nums[0], nums[1], nums[2]));
            continue;
        }
        let Some((n, _, q_default)) = header else {
            return Err(err(line, ParseErrorKind::MissingHeader));
        };
        clauses.push(parse_clause(line, &toks, n, q_default)?);
    }
    let Some((n, m, _)) = header else {
        return Err(err(last_line.max(1), ParseErrorKind::MissingHeader));
    };
    if clauses.len() != m {
        return Err(err(
            last_line,
            ParseErrorKind::CountMismatch {
                expected: m,
                found: clauses.len(),
            },
        ));
    }
    Ok(Instance::new(n, clauses).expect("literal indices validated during parsing"))
}

fn parse_clause(
    line: usize,
    toks: &[&str],
    n: usize,
    q_default: usize,
) -> Result<Clause, ParseError> {
    let (q, rest) = match toks[0].strip_prefix("q=") {
        Some(v) => (parse_usize(line, v)?, &toks[1..]),
        None => (q_default, toks),
    };
    let Some((&last, body)) = rest.split_last() else {
        return Err(err(line, ParseErrorKind::MissingTerminator));
    };
    if last != "0" {
        return Err(err(line, ParseErrorKind::MissingTerminator));
    }
    let mut literals = Vec::with_capacity(body.len());
    for tok in body {
        let lit: i64 = tok
            .parse()
            .map_err(|_| err(line, ParseErrorKind::BadToken(tok.to_string())))?;
        if lit == 0 {
            return Err(err(line, ParseErrorKind::BadToken(tok.to_string())));
        }
        let var = lit.unsigned_abs() as usize;
        if var > n {
            return Err(err(
                line,
                ParseErrorKind::LiteralOutOfRange { literal: lit, n },
            ));
        }
        if literals.iter().any(|l: &Literal| l.var == var - 1) {
            return Err(err(line, ParseErrorKind::RepeatedVariable(var)));
        }
        literals.push(Literal {
            var: var - 1,
            negated: lit < 0,
        });
    }
    if literals.is_empty() {
        return Err(err(line, ParseErrorKind::EmptyClause));
    }
    if q == 0 || q > literals.len() {
        return Err(err(
            line,
            ParseErrorKind::OccupationOutOfRange {
                q,
                p: literals.len(),
            },
        ));
    }
    Ok(Clause::new(literals, q).expect("clause validated during parsing"))
}

/// Most frequent occupation number, smallest on ties, 1 for an empty instance.
fn default_q(instance: &Instance) -> usize {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for c in instance.clauses() {
        *counts.entry(c.q()).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or(1, |(q, _)| q)
}

pub fn emit_instance(instance: &Instance) -> String {
    let q_default = default_q(instance);
    let mut out = format!("p occ {} {} {}\n", instance.n(), instance.m(), q_default);
    for c in instance.clauses() {
        if c.q() != q_default {
            write!(out, "q={} ", c.q()).unwrap();
        }
        for l in c.literals() {
            let v = l.var as i64 + 1;
            write!(out, "{} ", if l.negated { -v } else { v }).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_graph(text: &str) -> Result<Graph, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (line, toks) in content_lines(text) {
        last_line = line;
        match toks[0] {
            "p" => {
                if header.is_some() {
                    return Err(err(line, ParseErrorKind::DuplicateHeader));
                }
                if toks.len() != 4 || toks[1] != "edge" {
                    return Err(err(
                        line,
                        ParseErrorKind::MalformedHeader("expected `p edge <nodes> <edges>`".into()),
                    ));
                }
                let nodes = parse_usize(line, toks[2])?;
                let count = parse_usize(line, toks[3])?;
                header = Some((nodes, count));
            }
            "e" => {
                let Some((nodes, _)) = header else {
                    return Err(err(line, ParseErrorKind::MissingHeader));
                };
                if toks.len() != 3 {
                    return Err(err(
                        line,
                        ParseErrorKind::InvalidEdge("expected `e <u> <v>`".into()),
                    ));
                }
                let u = parse_usize(line, toks[1])?;
                let v = parse_usize(line, toks[2])?;
                for node in [u, v] {
                    if node == 0 || node > nodes {
                        return Err(err(line, ParseErrorKind::NodeOutOfRange { node, n: nodes }));
                    }
                }
                edges.push((line, u - 1, v - 1));
            }
            other => return Err(err(line, ParseErrorKind::BadToken(other.to_string()))),
        }
    }
    let Some((nodes, count)) = header else {
        return Err(err(last_line.max(1), ParseErrorKind::MissingHeader));
    };
    if edges.len() != count {
        return Err(err(
            last_line,
            ParseErrorKind::CountMismatch {
                expected: count,
                found: edges.len(),
            },
        ));
    }
    let mut graph = Graph::empty(nodes);
    for (line, u, v) in edges {
        graph
            .add_edge(u, v)
            .map_err(|e: GraphError| err(line, ParseErrorKind::InvalidEdge(e.to_string())))?;
    }
    Ok(graph)
}

pub fn emit_graph(graph: &Graph) -> String {
    let mut out = format!("p edge {} {}\n", graph.n_nodes(), graph.n_edges());
    for &(u, v) in graph.edges() {
        writeln!(out, "e {} {}", u + 1, v + 1).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_CLAUSE: &str =
        "c three overlapping clauses\np occ 5 3 1\n1 -2 3 0\n2 -3 4 0\n3 4 5 0\n";

    #[test]
    fn parses_three_clause_example() {
        let inst = parse_instance(THREE_CLAUSE).unwrap();
        assert_eq!(inst.n(), 5);
        assert_eq!(inst.m(), 3);
        let c = &inst.clauses()[0];
        assert_eq!(
            c.literals(),
            &[Literal::pos(0), Literal::neg(1), Literal::pos(2)]
        );
        assert_eq!(c.q(), 1);
        assert_eq!(
            emit_instance(&inst),
            THREE_CLAUSE
                .lines()
                .skip(1)
                .map(|l| format!("{l}\n"))
                .collect::<String>()
        );
    }

    #[test]
    fn empty_body() {
        let inst = parse_instance("p occ 1 0 1\n").unwrap();
        assert_eq!((inst.n(), inst.m()), (1, 0));
    }

    #[test]
    fn per_clause_occupation() {
        let inst = parse_instance("p occ 4 2 1\nq=2 1 2 3 0\n2 3 4 0\n").unwrap();
        assert_eq!(inst.clauses()[0].q(), 2);
        assert_eq!(inst.clauses()[1].q(), 1);
        assert_eq!(parse_instance(&emit_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn distinct_errors_with_line_numbers() {
        let e = parse_instance("p occ 3 1 1\n2 2 -3 0\n").unwrap_err();
        assert_eq!(e, err(2, ParseErrorKind::RepeatedVariable(2)));
        let e = parse_instance("p occ 3 1 1\nq=4 1 2 3 0\n").unwrap_err();
        assert_eq!(
            e,
            err(2, ParseErrorKind::OccupationOutOfRange { q: 4, p: 3 })
        );
        let e = parse_instance("c x\np occ 3 1 1\n1 2 7 0\n").unwrap_err();
        assert_eq!(
            e,
            err(3, ParseErrorKind::LiteralOutOfRange { literal: 7, n: 3 })
        );
        let e = parse_instance("p occ 3\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedHeader(_)));
        let e = parse_instance("1 2 3 0\n").unwrap_err();
        assert_eq!(e, err(1, ParseErrorKind::MissingHeader));
        let e = parse_instance("p occ 3 1 1\n1 2 3\n").unwrap_err();
        assert_eq!(e, err(2, ParseErrorKind::MissingTerminator));
        let e = parse_instance("p occ 3 2 1\n1 2 3 0\n").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::CountMismatch {
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn graph_round_trip() {
        let text = "p edge 4 6\ne 1 2\ne 1 3\ne 1 4\ne 2 3\ne 2 4\ne 3 4\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.n_nodes(), 4);
        assert_eq!(g.n_edges(), 6);
        assert_eq!(emit_graph(&g), text);
    }

    #[test]
    fn graph_errors() {
        let e = parse_graph("p edge 3 1\ne 1 4\n").unwrap_err();
        assert_eq!(e, err(2, ParseErrorKind::NodeOutOfRange { node: 4, n: 3 }));
        let e = parse_graph("p edge 3 2\ne 1 2\ne 2 1\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::InvalidEdge(_)));
        assert_eq!(e.line, 3);
        let e = parse_graph("p edge 3 1\ne 2 2\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::InvalidEdge(_)));
    }
}
