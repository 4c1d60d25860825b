//! Binary adjacency graphs, the edge-list text format, and relabelling.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A simple graph on nodes `0..n` stored as a dense 0/1 adjacency matrix.
///
/// Undirected graphs keep the matrix symmetric. The diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize, directed: bool) -> Self {
        Self {
            n,
            directed,
            adj: vec![false; n * n],
        }
    }

    /// Builds a graph from an edge list. Undirected edges are mirrored.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n, directed);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::SelfLoop { line: 0, node: u });
            }
            g.set(u, v, true);
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    /// Adjacency entry as 0.0 / 1.0.
    #[inline]
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        if self.adj[u * self.n + v] {
            1.0
        } else {
            0.0
        }
    }

    /// Sets `(u, v)` (and `(v, u)` when undirected). Diagonal writes are ignored.
    pub(crate) fn set(&mut self, u: usize, v: usize, on: bool) {
        if u == v {
            return;
        }
        self.adj[u * self.n + v] = on;
        if !self.directed {
            self.adj[v * self.n + u] = on;
        }
    }

    /// Number of edges; unordered pairs for undirected graphs.
    pub fn edge_count(&self) -> usize {
        let ones = self.adj.iter().filter(|&&b| b).count();
        if self.directed {
            ones
        } else {
            ones / 2
        }
    }

    /// Edges as `(u, v)`; for undirected graphs only `u < v` is listed.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            let start = if self.directed { 0 } else { u + 1 };
            for v in start..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Out-degrees.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|u| (0..self.n).filter(|&v| self.has_edge(u, v)).count())
            .collect()
    }

    /// Fraction of off-diagonal pairs that are edges.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let pairs = self.n * (self.n - 1);
        let ones = self.adj.iter().filter(|&&b| b).count();
        ones as f64 / pairs as f64
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|u| (0..u).all(|v| self.has_edge(u, v) == self.has_edge(v, u)))
    }

    /// Dense `f64` copy of the adjacency matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// Complement on the off-diagonal.
    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.n, self.directed);
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v {
                    g.adj[u * self.n + v] = !self.has_edge(u, v);
                }
            }
        }
        g
    }
}

/// A bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &j in &map {
            if j >= map.len() || seen[j] {
                return Err(Error::InvalidParameter(format!(
                    "not a permutation of 0..{}: {map:?}",
                    map.len()
                )));
            }
            seen[j] = true;
        }
        Ok(Self { map })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    /// Pairs `(i, p(i))`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.map.iter().copied().enumerate().collect()
    }
}

/// Relabels `g` so that `out(p(i), p(j)) = g(i, j)`, i.e. `P G Pᵀ`.
pub fn apply_permutation(g: &Graph, p: &Permutation) -> Result<Graph> {
    if p.len() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            got: p.len(),
        });
    }
    let n = g.n;
    let mut out = Graph::empty(n, g.directed);
    for i in 0..n {
        for j in 0..n {
            if g.has_edge(i, j) {
                out.adj[p.apply(i) * n + p.apply(j)] = true;
            }
        }
    }
    Ok(out)
}

/// Embeds `g` in the top-left block of a graph on `n_target` nodes.
pub fn pad_to(g: &Graph, n_target: usize) -> Result<Graph> {
    if n_target < g.n {
        return Err(Error::InvalidParameter(format!(
            "cannot pad a graph with {} nodes down to {n_target}",
            g.n
        )));
    }
    let mut out = Graph::empty(n_target, g.directed);
    for i in 0..g.n {
        for j in 0..g.n {
            out.adj[i * n_target + j] = g.has_edge(i, j);
        }
    }
    Ok(out)
}

const NODES_HEADER: &str = "# nodes";

/// Parses the edge-list format.
///
/// One edge `u v` per line, `#` comments, and an optional `directed` /
/// `undirected` directive before the first edge. The node count is
/// `1 + max id`, raised to `N` if a `# nodes N` header comment is present.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut directed = false;
    let mut seen_edge = false;
    let mut hinted_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(NODES_HEADER) {
            let n = rest.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad node-count header {line:?}"),
            })?;
            hinted_n = Some(n);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        match line {
            "directed" | "undirected" => {
                if seen_edge {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "directive must precede all edges".into(),
                    });
                }
                directed = line == "directed";
                continue;
            }
            _ => {}
        }
        let mut fields = line.split_whitespace();
        let (u, v) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => {
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("expected a non-negative integer node id, got {s:?}"),
                    })
                };
                (parse(a)?, parse(b)?)
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected two node ids, got {line:?}"),
                })
            }
        };
        if u == v {
            return Err(Error::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        seen_edge = true;
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }

    let n = match (max_id, hinted_n) {
        (None, None) => return Err(Error::EmptyGraph),
        (Some(m), h) => (m + 1).max(h.unwrap_or(0)),
        (None, Some(h)) => h,
    };
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    Graph::from_edges(n, directed, &edges)
}

/// Serialises `g` in the format read by [`load_edge_list`].
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let kind = if g.directed { "directed" } else { "undirected" };
    let _ = writeln!(out, "{NODES_HEADER} {}", g.n);
    let _ = writeln!(out, "# edges {}", g.edge_count());
    let _ = writeln!(out, "{kind}");
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
