//! Hamiltonian cycles as a 2-in-deg Occupation problem over edge variables.
//!
//! Each edge gets a variable `e_ij`; each node a clause requiring exactly two
//! of its incident edges to be selected. Solutions of that instance are
//! disjoint unions of cycles covering every node, and the Hamiltonian cycles
//! are the connected ones. The parity matrix is the node-edge incidence
//! matrix, whose rank is `n − (#components)`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::gf2::{BinMatrix, BinVec};
use crate::instance::{Clause, Instance, Literal};
use crate::reduction::{reduce, XorOutcome};
use crate::search::ENUMERATION_MAX_K;

/// Largest node count accepted by [`brute_force_hc`].
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

const GENERATION_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("invalid graph size: {0}")]
    InvalidSize(String),
    #[error("no admissible graph after {0} attempts")]
    GenerationFailed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HcError {
    #[error("reduced dimension k = {k} exceeds guard {max}")]
    GuardExceeded { k: usize, max: usize },
    #[error("brute force refused: {n} nodes exceeds guard {max}")]
    BruteForceGuard { n: usize, max: usize },
    #[error("edge assignment has length {found}, graph has {expected} edges")]
    LengthMismatch { expected: usize, found: usize },
}

/// Simple undirected graph; edges stored as `(u, v)` with `u < v` in
/// insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    present: HashSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            edges: Vec::new(),
            present: HashSet::new(),
        }
    }

    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n_nodes);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        for node in [u, v] {
            if node >= self.n_nodes {
                return Err(GraphError::NodeOutOfRange {
                    node,
                    n: self.n_nodes,
                });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let e = (u.min(v), u.max(v));
        if !self.present.insert(e) {
            return Err(GraphError::DuplicateEdge(e.0, e.1));
        }
        self.edges.push(e);
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.present.contains(&(u.min(v), u.max(v)))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Indices of the edges incident to each node.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_nodes];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            inc[u].push(i);
            inc[v].push(i);
        }
        inc
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.incidence().iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_regular(&self, degree: usize) -> bool {
        self.degrees().iter().all(|&d| d == degree)
    }

    /// Component label of every node.
    pub fn components(&self) -> Vec<usize> {
        components_of(self.n_nodes, self.edges.iter().copied())
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |&c| c + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).expect("complete graph edges are distinct");
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n)
                .expect("cycle edges are distinct for n >= 3");
        }
        g
    }

    pub fn petersen() -> Self {
        let mut g = Self::empty(10);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5).unwrap();
            g.add_edge(i, i + 5).unwrap();
            g.add_edge(5 + i, 5 + (i + 2) % 5).unwrap();
        }
        g
    }

    /// Uniform connected simple 3-regular graph via the pairing model with
    /// rejection.
    pub fn random_cubic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, GraphError> {
        if n < 4 || n % 2 == 1 {
            return Err(GraphError::InvalidSize(format!(
                "3-regular graphs need an even n >= 4, got {n}"
            )));
        }
        let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
        for _ in 0..GENERATION_ATTEMPTS {
            points.shuffle(rng);
            let mut g = Self::empty(n);
            let simple = points
                .chunks(2)
                .all(|pair| g.add_edge(pair[0], pair[1]).is_ok());
            if simple && g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed(GENERATION_ATTEMPTS))
    }

    /// Connected simple (3,3)-regular bipartite graph on `n/2 + n/2` nodes,
    /// built as the union of three random perfect matchings with rejection.
    pub fn random_bipartite_cubic<R: Rng + ?Sized>(
        n: usize,
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        if n % 2 == 1 || n < 6 {
            return Err(GraphError::InvalidSize(format!(
                "(3,3)-regular bipartite graphs need an even n >= 6, got {n}"
            )));
        }
        let half = n / 2;
        let mut right: Vec<usize> = (half..n).collect();
        'attempt: for _ in 0..GENERATION_ATTEMPTS {
            let mut g = Self::empty(n);
            for _ in 0..3 {
                right.shuffle(rng);
                for (u, &v) in right.iter().enumerate() {
                    if g.add_edge(u, v).is_err() {
                        continue 'attempt;
                    }
                }
            }
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed(GENERATION_ATTEMPTS))
    }

    /// Connected Erdős–Rényi graph `G(n, p)` by rejection.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        p: f64,
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidSize(format!("G({n}, {p})")));
        }
        for _ in 0..GENERATION_ATTEMPTS {
            let mut g = Self::empty(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(p) {
                        g.add_edge(u, v).expect("each pair visited once");
                    }
                }
            }
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed(GENERATION_ATTEMPTS))
    }
}

fn components_of(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for (u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// One variable per edge, one `q = 2` clause per node over its incident
/// edges. Nodes of degree below two still get their (unsatisfiable) clause.
pub fn hc_to_occupation(g: &Graph) -> Instance {
    let clauses = g
        .incidence()
        .into_iter()
        .map(|edges| {
            let lits = edges.into_iter().map(Literal::pos).collect();
            Clause::degree_constraint(lits, 2).expect("incident edges are distinct")
        })
        .collect();
    Instance::new(g.n_edges(), clauses).expect("edge indices are in range")
}

/// Node-edge incidence matrix over GF(2).
pub fn incidence_matrix(g: &Graph) -> BinMatrix {
    let mut a = BinMatrix::zeros(g.n_nodes(), g.n_edges());
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        a.set(u, i, true);
        a.set(v, i, true);
    }
    a
}

/// GF(2) rank of the incidence matrix.
pub fn hc_rank_check(g: &Graph) -> usize {
    incidence_matrix(g).rank()
}

/// Every node has selected degree two and the selected edges form a single
/// cycle through all nodes.
pub fn is_hamiltonian_cycle(g: &Graph, selection: &BinVec) -> Result<bool, HcError> {
    if selection.len() != g.n_edges() {
        return Err(HcError::LengthMismatch {
            expected: g.n_edges(),
            found: selection.len(),
        });
    }
    let mut deg = vec![0usize; g.n_nodes()];
    for i in selection.ones() {
        let (u, v) = g.edges()[i];
        deg[u] += 1;
        deg[v] += 1;
    }
    if g.n_nodes() < 3 || deg.iter().any(|&d| d != 2) {
        return Ok(false);
    }
    let labels = components_of(g.n_nodes(), selection.ones().map(|i| g.edges()[i]));
    Ok(labels.iter().all(|&l| l == 0))
}

/// Enumerates the reduced space of the 2-in-deg instance and keeps the first
/// connected cover. `Ok(None)` certifies that no Hamiltonian cycle exists.
pub fn solve_hc(g: &Graph) -> Result<Option<BinVec>, HcError> {
    let instance = hc_to_occupation(g);
    let XorOutcome::Feasible(r) = reduce(&instance) else {
        return Ok(None);
    };
    if r.k() > ENUMERATION_MAX_K {
        return Err(HcError::GuardExceeded {
            k: r.k(),
            max: ENUMERATION_MAX_K,
        });
    }
    let mut x = r.xi_bar().clone();
    for step in 0..1u64 << r.k() {
        if step > 0 {
            x.xor_assign(&r.kernel()[step.trailing_zeros() as usize]);
        }
        if instance.satisfied_by(&x) && is_hamiltonian_cycle(g, &x)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Base-2 exponent `k / 2` of the query cost, `k = |E| − rank(A)`.
pub fn hc_cost_exponent(g: &Graph) -> f64 {
    (g.n_edges() - hc_rank_check(g)) as f64 / 2.0
}

/// Number of distinct undirected Hamiltonian cycles, by depth-first
/// enumeration of node orderings from node 0; each cycle is found once per
/// direction.
pub fn brute_force_hc(g: &Graph) -> Result<u64, HcError> {
    let n = g.n_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(HcError::BruteForceGuard {
            n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    if n < 3 {
        return Ok(0);
    }
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    fn extend(adj: &[Vec<bool>], visited: &mut [bool], last: usize, depth: usize) -> u64 {
        let n = adj.len();
        if depth == n {
            return u64::from(adj[last][0]);
        }
        let mut total = 0;
        for next in 1..n {
            if !visited[next] && adj[last][next] {
                visited[next] = true;
                total += extend(adj, visited, next, depth + 1);
                visited[next] = false;
            }
        }
        total
    }
    let mut visited = vec![false; n];
    visited[0] = true;
    Ok(extend(&adj, &mut visited, 0, 1) / 2)
}
