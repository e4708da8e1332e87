//! Coarsening by compatible weighted matching.
//!
//! Every stored off-diagonal pair `(i, j)` of `A` gets the weight
//!
//! ```text
//! c_ij = 1 - 2 a_ij w_i w_j / (a_ii w_i^2 + a_jj w_j^2)
//! ```
//!
//! for a test vector `w`, and pairs of vertices are matched so that the
//! product of the matched `c_ij` is approximately maximal. Maximizing a
//! product is the same as maximizing `sum log c_ij`, and only edges with
//! `c_ij > 1` can increase it, so matching runs on `log c_ij` restricted to
//! those edges. The locally-dominant edge algorithm used here guarantees at
//! least half of the optimal transformed weight.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph with one edge per stored off-diagonal pair, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
    n_nonfinite: usize,
}

impl WeightedGraph {
    /// Edges with `i == j` or `i >= n` are rejected; pairs are normalized to
    /// `i < j` and must be unique.
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for e in edges {
            let (i, j) = (e.i.min(e.j), e.i.max(e.j));
            if i == j || j >= n_vertices {
                return Err(Error::Malformed(format!("invalid edge ({}, {})", e.i, e.j)));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Malformed(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, weight: e.weight });
        }
        out.sort_by_key(|e| (e.i, e.j));
        Ok(Self { n_vertices, edges: out, n_nonfinite: 0 })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges dropped during construction because their weight was not finite.
    pub fn n_nonfinite(&self) -> usize {
        self.n_nonfinite
    }

    /// Graphviz rendering; matched edges drawn bold red.
    pub fn to_dot(&self, matching: Option<&Matching>) -> String {
        let matched: std::collections::HashSet<(usize, usize)> =
            matching.map(|m| m.pairs.iter().copied().collect()).unwrap_or_default();
        let mut s = String::from("graph matching {\n  node [shape=circle];\n");
        for v in 0..self.n_vertices {
            let _ = writeln!(s, "  {v};");
        }
        for e in &self.edges {
            if matched.contains(&(e.i, e.j)) {
                let _ = writeln!(s, "  {} -- {} [label=\"{:.4}\", color=red, penwidth=3];", e.i, e.j, e.weight);
            } else {
                let _ = writeln!(s, "  {} -- {} [label=\"{:.4}\"];", e.i, e.j, e.weight);
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Edge weights `c_ij` from the matrix entries and test vector `w`.
///
/// The stored pattern is symmetrized first (union, averaged values).
pub fn build_edge_weights(a: &CsrMatrix, w: &[f64]) -> Result<WeightedGraph> {
    if !a.is_square() || w.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "edge weights: {}x{} matrix, test vector of length {}",
            a.nrows(),
            a.ncols(),
            w.len()
        )));
    }
    let sym;
    let a = if a.symmetric_hint() && a.is_symmetric(0.0) {
        a
    } else {
        sym = a.symmetrized()?;
        &sym
    };
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotSpd(format!("non-positive diagonal at row {i}")));
    }
    let mut edges = Vec::new();
    let mut n_nonfinite = 0;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &aij) in cols.iter().zip(vals) {
            if j <= i {
                continue;
            }
            let denom = diag[i] * w[i] * w[i] + diag[j] * w[j] * w[j];
            if denom == 0.0 {
                return Err(Error::DegenerateEdge { i, j });
            }
            let c = 1.0 - 2.0 * aij * w[i] * w[j] / denom;
            if c.is_finite() {
                edges.push(Edge { i, j, weight: c });
            } else {
                n_nonfinite += 1;
            }
        }
    }
    Ok(WeightedGraph { n_vertices: a.nrows(), edges, n_nonfinite })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    n_vertices: usize,
    /// Matched pairs `(i, j)` with `i < j`, sorted.
    pub pairs: Vec<(usize, usize)>,
    /// Unmatched vertices, ascending.
    pub singletons: Vec<usize>,
}

impl Matching {
    /// Validates that pairs and singletons cover every vertex exactly once.
    pub fn new(n_vertices: usize, pairs: Vec<(usize, usize)>, singletons: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n_vertices];
        let mut mark = |v: usize| -> Result<()> {
            if v >= n_vertices || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Malformed(format!("vertex {v} repeated or out of range in matching")));
            }
            Ok(())
        };
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect();
        for &(i, j) in &pairs {
            if i == j {
                return Err(Error::Malformed(format!("self-pair ({i}, {i})")));
            }
            mark(i)?;
            mark(j)?;
        }
        for &s in &singletons {
            mark(s)?;
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::Malformed(format!("vertex {v} is neither matched nor a singleton")));
        }
        pairs.sort_unstable();
        let mut singletons = singletons;
        singletons.sort_unstable();
        Ok(Self { n_vertices, pairs, singletons })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Coarse size `n_c = |pairs| + |singletons|`.
    pub fn n_coarse(&self) -> usize {
        self.pairs.len() + self.singletons.len()
    }

    /// Sum of `log c_ij` over matched edges, looking weights up in `g`.
    pub fn transformed_weight(&self, g: &WeightedGraph) -> f64 {
        let lookup: std::collections::HashMap<(usize, usize), f64> =
            g.edges.iter().map(|e| ((e.i, e.j), e.weight)).collect();
        self.pairs.iter().map(|p| lookup.get(p).map_or(0.0, |c| c.ln())).sum()
    }
}

/// Strict total order on eligible edges: heavier first, then smaller
/// `(min, max)` endpoint key.
#[inline]
fn beats(wa: f64, ka: (usize, usize), wb: f64, kb: (usize, usize)) -> bool {
    match wa.partial_cmp(&wb).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => ka < kb,
    }
}

/// Half-approximate maximum product matching by locally dominant edges.
///
/// Only edges with `c_ij > 1` take part, with weight `ln c_ij`. Runs in
/// `O(|E| * max_degree)`.
pub fn half_approx_matching(g: &WeightedGraph) -> Matching {
    let n = g.n_vertices;
    // adjacency in CSR form over eligible edges
    let mut degree = vec![0usize; n + 1];
    for e in g.edges.iter().filter(|e| e.weight > 1.0) {
        degree[e.i + 1] += 1;
        degree[e.j + 1] += 1;
    }
    for v in 0..n {
        degree[v + 1] += degree[v];
    }
    let offsets = degree;
    let mut fill = offsets.clone();
    let mut adj = vec![(0usize, 0.0f64); offsets[n]];
    for e in g.edges.iter().filter(|e| e.weight > 1.0) {
        let w = e.weight.ln();
        adj[fill[e.i]] = (e.j, w);
        fill[e.i] += 1;
        adj[fill[e.j]] = (e.i, w);
        fill[e.j] += 1;
    }

    const NONE: usize = usize::MAX;
    let mut mate = vec![NONE; n];
    let mut candidate = vec![NONE; n];

    let best_free_neighbor = |v: usize, mate: &[usize]| -> usize {
        let mut best = NONE;
        let mut best_w = 0.0;
        for &(u, w) in &adj[offsets[v]..offsets[v + 1]] {
            if mate[u] != NONE {
                continue;
            }
            let key = (v.min(u), v.max(u));
            if best == NONE || beats(w, key, best_w, (v.min(best), v.max(best))) {
                best = u;
                best_w = w;
            }
        }
        best
    };

    for v in 0..n {
        candidate[v] = best_free_neighbor(v, &mate);
    }
    let mut queue = VecDeque::new();
    for v in 0..n {
        let u = candidate[v];
        if u != NONE && v < u && candidate[u] == v {
            mate[v] = u;
            mate[u] = v;
            queue.push_back(v);
            queue.push_back(u);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &(x, _) in &adj[offsets[v]..offsets[v + 1]] {
            if mate[x] != NONE || candidate[x] != v {
                continue;
            }
            let y = best_free_neighbor(x, &mate);
            candidate[x] = y;
            if y != NONE && candidate[y] == x {
                mate[x] = y;
                mate[y] = x;
                queue.push_back(x);
                queue.push_back(y);
            }
        }
    }

    let mut pairs = Vec::new();
    let mut singletons = Vec::new();
    for v in 0..n {
        match mate[v] {
            NONE => singletons.push(v),
            u if v < u => pairs.push((v, u)),
            _ => {}
        }
    }
    Matching { n_vertices: n, pairs, singletons }
}

/// Partition of fine indices into coarse aggregates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationMap {
    pub n_fine: usize,
    pub n_coarse: usize,
    /// Coarse aggregate of every fine index.
    pub assign: Vec<usize>,
    pub aggregate_sizes: Vec<usize>,
}

impl AggregationMap {
    pub fn from_assign(assign: Vec<usize>, n_coarse: usize) -> Result<Self> {
        let mut sizes = vec![0usize; n_coarse];
        for (i, &g) in assign.iter().enumerate() {
            if g >= n_coarse {
                return Err(Error::Malformed(format!("index {i} assigned to aggregate {g} of {n_coarse}")));
            }
            sizes[g] += 1;
        }
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Malformed(format!("aggregate {g} is empty")));
        }
        Ok(Self { n_fine: assign.len(), n_coarse, assign, aggregate_sizes: sizes })
    }

    pub fn max_size(&self) -> usize {
        self.aggregate_sizes.iter().copied().max().unwrap_or(0)
    }

    /// Members of every aggregate, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m: Vec<Vec<usize>> = self.aggregate_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &g) in self.assign.iter().enumerate() {
            m[g].push(i);
        }
        m
    }

    /// `hist[s]` is the number of aggregates of size `s`.
    pub fn size_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.max_size() + 1];
        for &s in &self.aggregate_sizes {
            h[s] += 1;
        }
        h
    }
}

/// One aggregate per matched pair and per singleton, numbered by their
/// smallest fine index.
pub fn matching_to_aggregates(m: &Matching) -> AggregationMap {
    let mut first = vec![usize::MAX; m.n_vertices];
    for &(i, j) in &m.pairs {
        first[i] = i;
        first[j] = i;
    }
    for &s in &m.singletons {
        first[s] = s;
    }
    let mut id = vec![usize::MAX; m.n_vertices];
    let mut next = 0;
    let mut assign = vec![0usize; m.n_vertices];
    for v in 0..m.n_vertices {
        let root = first[v];
        if id[root] == usize::MAX {
            id[root] = next;
            next += 1;
        }
        assign[v] = id[root];
    }
    AggregationMap::from_assign(assign, next).expect("a valid matching yields a valid aggregation")
}
