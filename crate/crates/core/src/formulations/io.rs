//! Text formats: edge list, DIMACS graphs, QAPLIB instances and solutions.

use std::fmt::Write as _;

use crate::error::{parse_err, Error, Result};
use crate::matrix::Matrix;
use crate::qubo::fmt_f64;

use super::{QapInstance, WeightedGraph};

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#') || t.starts_with("c ") || t == "c"
}

/// `p <nodes> <edges>` header, then `u v [w]` lines (0-based, weight defaults to 1).
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if is_comment(line) {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f[0] == "p" {
            if header.is_some() || f.len() != 3 {
                return Err(parse_err(ln + 1, "expected a single `p <nodes> <edges>` header"));
            }
            let n = f[1].parse().map_err(|_| parse_err(ln + 1, "bad node count"))?;
            let m = f[2].parse().map_err(|_| parse_err(ln + 1, "bad edge count"))?;
            header = Some((n, m));
            continue;
        }
        if header.is_none() {
            return Err(parse_err(ln + 1, "edge before header"));
        }
        if f.len() != 2 && f.len() != 3 {
            return Err(parse_err(ln + 1, "expected `u v [w]`"));
        }
        let u: usize = f[0].parse().map_err(|_| parse_err(ln + 1, "bad endpoint"))?;
        let v: usize = f[1].parse().map_err(|_| parse_err(ln + 1, "bad endpoint"))?;
        let w: f64 = match f.get(2) {
            Some(t) => t.parse().map_err(|_| parse_err(ln + 1, "bad weight"))?,
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    let (n, m) = header.ok_or(Error::EmptyInput("edge list header"))?;
    if edges.len() != m {
        return Err(Error::Schema(format!("header declares {m} edges, found {}", edges.len())));
    }
    WeightedGraph::new(n, edges)
}

pub fn write_edge_list(g: &WeightedGraph, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        writeln!(s, "# {c}").unwrap();
    }
    writeln!(s, "p {} {}", g.node_count(), g.edge_count()).unwrap();
    for &(u, v, w) in g.edges() {
        writeln!(s, "{u} {v} {}", fmt_f64(w)).unwrap();
    }
    s
}

/// DIMACS `p edge N M` / `e u v` (1-based, unit weights).
pub fn parse_dimacs(text: &str) -> Result<WeightedGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if is_comment(line) {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[0] {
            "p" => {
                if header.is_some() || f.len() != 4 || !matches!(f[1], "edge" | "col") {
                    return Err(parse_err(ln + 1, "expected a single `p edge N M` header"));
                }
                let n = f[2].parse().map_err(|_| parse_err(ln + 1, "bad node count"))?;
                let m = f[3].parse().map_err(|_| parse_err(ln + 1, "bad edge count"))?;
                header = Some((n, m));
            }
            "e" => {
                let (n, _) = header.ok_or_else(|| parse_err(ln + 1, "edge before header"))?;
                if f.len() != 3 {
                    return Err(parse_err(ln + 1, "expected `e u v`"));
                }
                let u: usize = f[1].parse().map_err(|_| parse_err(ln + 1, "bad endpoint"))?;
                let v: usize = f[2].parse().map_err(|_| parse_err(ln + 1, "bad endpoint"))?;
                if u == 0 || v == 0 || u > n || v > n {
                    return Err(parse_err(ln + 1, format!("endpoint out of 1..={n}")));
                }
                edges.push((u - 1, v - 1, 1.0));
            }
            other => return Err(parse_err(ln + 1, format!("unknown line type {other:?}"))),
        }
    }
    let (n, m) = header.ok_or(Error::EmptyInput("DIMACS header"))?;
    if edges.len() != m {
        return Err(Error::Schema(format!("header declares {m} edges, found {}", edges.len())));
    }
    WeightedGraph::new(n, edges)
}

pub fn write_dimacs(g: &WeightedGraph, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        writeln!(s, "c {c}").unwrap();
    }
    writeln!(s, "p edge {} {}", g.node_count(), g.edge_count()).unwrap();
    for &(u, v, _) in g.edges() {
        writeln!(s, "e {} {}", u + 1, v + 1).unwrap();
    }
    s
}

fn numbers(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if t.starts_with('#') {
            continue;
        }
        for tok in t.split_whitespace() {
            out.push(tok.parse::<f64>().map_err(|_| parse_err(ln + 1, format!("bad number {tok:?}")))?);
        }
    }
    Ok(out)
}

/// QAPLIB `.dat`: n, then F row-major, then D row-major.
pub fn parse_qaplib(text: &str) -> Result<QapInstance> {
    let v = numbers(text)?;
    let n = *v.first().ok_or(Error::EmptyInput("QAPLIB file"))?;
    if n < 1.0 || n.fract() != 0.0 {
        return Err(parse_err(1, "size must be a positive integer"));
    }
    let n = n as usize;
    if v.len() != 1 + 2 * n * n {
        return Err(Error::Schema(format!("size {n} needs {} numbers, found {}", 2 * n * n, v.len() - 1)));
    }
    let f = Matrix::from_vec(n, n, v[1..1 + n * n].to_vec())?;
    let d = Matrix::from_vec(n, n, v[1 + n * n..].to_vec())?;
    QapInstance::new(f, d)
}

pub fn write_qaplib(inst: &QapInstance, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        writeln!(s, "# {c}").unwrap();
    }
    writeln!(s, "{}\n", inst.n()).unwrap();
    for m in [inst.flow(), inst.dist()] {
        for i in 0..m.rows() {
            let row: Vec<String> = m.row(i).iter().map(|&x| fmt_f64(x)).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        writeln!(s).unwrap();
    }
    s
}

/// QAPLIB `.sln`: n, objective value, then the 1-based permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct QapSolution {
    pub n: usize,
    pub value: f64,
    pub perm: Vec<usize>,
}

pub fn parse_qaplib_solution(text: &str) -> Result<QapSolution> {
    let v = numbers(text)?;
    if v.len() < 2 {
        return Err(Error::EmptyInput("QAPLIB solution"));
    }
    let n = v[0] as usize;
    if v.len() != 2 + n {
        return Err(Error::Schema(format!("solution of size {n} needs {n} entries, found {}", v.len() - 2)));
    }
    let perm: Vec<usize> = v[2..].iter().map(|&p| p as usize).collect();
    if perm.iter().any(|&p| p == 0 || p > n) {
        return Err(Error::Schema("solution permutation must be 1-based".into()));
    }
    let perm: Vec<usize> = perm.into_iter().map(|p| p - 1).collect();
    if !super::is_permutation(&perm) {
        return Err(Error::Schema("solution is not a permutation".into()));
    }
    Ok(QapSolution { n, value: v[1], perm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedGraph::new(4, vec![(0, 1, 1.0), (2, 3, -1.0), (1, 3, 0.25)]).unwrap();
        let text = write_edge_list(&g, &["spec: x".into()]);
        assert_eq!(parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_rejects_inconsistent_header() {
        assert!(parse_edge_list("p 3 2\n0 1 1\n").is_err());
        assert!(parse_edge_list("p 2 1\n0 2 1\n").is_err());
        assert!(parse_edge_list("0 1 1\n").is_err());
    }

    #[test]
    fn dimacs_parse() {
        let g = parse_dimacs("c toy\np edge 3 2\ne 1 2\ne 2 3\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert!(parse_dimacs("p edge 3 3\ne 1 2\ne 2 3\n").is_err());
        assert!(parse_dimacs("p edge 3 1\ne 1 4\n").is_err());
        assert!(parse_dimacs("p edge 3 2\ne 1 2\ne 2 1\n").is_err());
        let g2 = parse_dimacs(&write_dimacs(&g, &[])).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn qaplib_parse() {
        let text = "2\n\n0 1\n1 0\n\n0 3\n3 0\n";
        let q = parse_qaplib(text).unwrap();
        assert_eq!(q.objective(&[0, 1]), 6.0);
        assert_eq!(parse_qaplib(&write_qaplib(&q, &[])).unwrap(), q);
        assert!(parse_qaplib("2\n0 1\n1 0\n0 3\n").is_err());
        let sol = parse_qaplib_solution("2 6\n2 1\n").unwrap();
        assert_eq!(sol.perm, vec![1, 0]);
        assert!(parse_qaplib_solution("2 6\n2 2\n").is_err());
    }
}
