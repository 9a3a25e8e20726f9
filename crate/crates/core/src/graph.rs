//! Walker graphs: vertex set, directed edges, and per-vertex coin unitaries.
//!
//! A walk graph stores, for every vertex `x`, an ordered *neighborhood*
//! `n_x` (the targets of its outgoing directed edges) and a unitary coin
//! matrix of dimension `|n_x|` whose rows and columns are indexed by that
//! ordering. Edge symmetry (`(x, j)` present iff `(j, x)` present) is
//! required so the step operator is a bijection on directed edges.
//!
//! Coin matrix indices are meaningful only relative to the stored
//! neighborhood order: entry `(c, j)` is the amplitude for a walker that
//! entered `x` from `n_x(c)` to leave toward `n_x(j)`.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::max_unitarity_deviation;

/// Vertex label. Builders use plain integers (the line walk uses `−L..=L`);
/// arbitrary `i64` labels are accepted.
pub type Vertex = i64;

/// Tolerance for coin-unitarity validation.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate vertex {0}")]
    DuplicateVertex(Vertex),
    #[error("undeclared vertex {0}")]
    UnknownVertex(Vertex),
    #[error("edge ({0}, {1}) has no reverse edge ({1}, {0})")]
    AsymmetricEdge(Vertex, Vertex),
    #[error("coin at vertex {vertex} is not unitary (max deviation {deviation:.3e})")]
    NonUnitaryCoin { vertex: Vertex, deviation: f64 },
    #[error("coin at vertex {vertex} is {rows}x{cols} but the neighborhood has {expected} members")]
    CoinDimensionMismatch {
        vertex: Vertex,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("vertex {0} has outgoing edges but no coin")]
    MissingCoin(Vertex),
    #[error("neighborhood order for vertex {0} must list each outgoing edge target exactly once")]
    InvalidNeighborhoodOrder(Vertex),
    #[error("line half-width must be at least 1, got {0}")]
    InvalidWidth(i64),
    #[error("lattice dimensions must be at least 2x2, got {0}x{1}")]
    InvalidDimensions(i64, i64),
    #[error("cycle length must be at least 3, got {0}")]
    InvalidCycleLength(i64),
    #[error("vertex key {0:?} is not an integer label")]
    BadVertexKey(String),
}

/// The 2x2 line-walk coin: `((1, 1), (1, −1))/√2`, indexed by the
/// neighborhood order `(x−1, x+1)`.
pub fn hadamard_coin() -> Array2<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Array2::from_shape_vec((2, 2), vec![s, s, s, -s]).unwrap()
}

/// The d-level Grover coin `(2/d)J − I` (diagonal `2/d − 1`, off-diagonal
/// `2/d`). For d = 4 this is the lattice coin with diagonal −1/2 and
/// off-diagonal +1/2; for d = 2 it is the swap; for d = 1 the identity.
pub fn grover_coin(d: usize) -> Array2<Complex64> {
    let off = 2.0 / d as f64;
    Array2::from_shape_fn((d, d), |(i, j)| {
        Complex64::new(if i == j { off - 1.0 } else { off }, 0.0)
    })
}

/// Immutable walk graph: ordered vertices, ordered neighborhoods, and one
/// validated coin unitary per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerGraph {
    vertices: Vec<Vertex>,
    neighborhoods: BTreeMap<Vertex, Vec<Vertex>>,
    coins: BTreeMap<Vertex, Array2<Complex64>>,
}

impl WalkerGraph {
    /// Builds a graph with neighborhoods ordered by ascending target label.
    pub fn new(
        vertices: Vec<Vertex>,
        edges: &[(Vertex, Vertex)],
        coins: BTreeMap<Vertex, Array2<Complex64>>,
    ) -> Result<Self, GraphError> {
        Self::build(vertices, edges, coins, None)
    }

    /// Builds a graph with an explicit neighborhood order per vertex.
    /// Vertices absent from `order` fall back to ascending label order.
    pub fn with_order(
        vertices: Vec<Vertex>,
        edges: &[(Vertex, Vertex)],
        coins: BTreeMap<Vertex, Array2<Complex64>>,
        order: BTreeMap<Vertex, Vec<Vertex>>,
    ) -> Result<Self, GraphError> {
        Self::build(vertices, edges, coins, Some(order))
    }

    fn build(
        vertices: Vec<Vertex>,
        edges: &[(Vertex, Vertex)],
        coins: BTreeMap<Vertex, Array2<Complex64>>,
        order: Option<BTreeMap<Vertex, Vec<Vertex>>>,
    ) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for &v in &vertices {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateVertex(v));
            }
        }

        let mut edge_set: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
        for &(x, j) in edges {
            if !seen.contains(&x) {
                return Err(GraphError::UnknownVertex(x));
            }
            if !seen.contains(&j) {
                return Err(GraphError::UnknownVertex(j));
            }
            edge_set.insert((x, j));
        }
        for &(x, j) in &edge_set {
            if !edge_set.contains(&(j, x)) {
                return Err(GraphError::AsymmetricEdge(x, j));
            }
        }

        let mut neighborhoods: BTreeMap<Vertex, Vec<Vertex>> =
            vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(x, j) in &edge_set {
            neighborhoods.get_mut(&x).unwrap().push(j);
        }

        if let Some(order) = order {
            for (v, listed) in order {
                let targets = neighborhoods
                    .get_mut(&v)
                    .ok_or(GraphError::UnknownVertex(v))?;
                let expected: BTreeSet<Vertex> = targets.iter().copied().collect();
                let given: BTreeSet<Vertex> = listed.iter().copied().collect();
                if listed.len() != targets.len() || expected != given {
                    return Err(GraphError::InvalidNeighborhoodOrder(v));
                }
                *targets = listed;
            }
        }

        for &v in &vertices {
            let degree = neighborhoods[&v].len();
            match coins.get(&v) {
                None if degree == 0 => {}
                None => return Err(GraphError::MissingCoin(v)),
                Some(coin) => {
                    if coin.nrows() != degree || coin.ncols() != degree {
                        return Err(GraphError::CoinDimensionMismatch {
                            vertex: v,
                            expected: degree,
                            rows: coin.nrows(),
                            cols: coin.ncols(),
                        });
                    }
                    let deviation = max_unitarity_deviation(coin);
                    if deviation > UNITARITY_TOL {
                        return Err(GraphError::NonUnitaryCoin {
                            vertex: v,
                            deviation,
                        });
                    }
                }
            }
        }
        for &v in coins.keys() {
            if !seen.contains(&v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }

        Ok(Self {
            vertices,
            neighborhoods,
            coins,
        })
    }

    /// Line graph on vertices `−L..=L` with reflecting boundaries: interior
    /// vertices carry the [`hadamard_coin`] over the order `(x−1, x+1)`,
    /// the two endpoints a 1x1 identity coin.
    pub fn line(half_width: i64) -> Result<Self, GraphError> {
        if half_width < 1 {
            return Err(GraphError::InvalidWidth(half_width));
        }
        let l = half_width;
        let vertices: Vec<Vertex> = (-l..=l).collect();
        let mut edges = Vec::new();
        for x in -l..l {
            edges.push((x, x + 1));
            edges.push((x + 1, x));
        }
        let mut coins = BTreeMap::new();
        for &x in &vertices {
            if x == -l || x == l {
                coins.insert(x, Array2::from_elem((1, 1), Complex64::ONE));
            } else {
                coins.insert(x, hadamard_coin());
            }
        }
        // ascending label order is exactly (x−1, x+1)
        Self::new(vertices, &edges, coins)
    }

    /// Cycle graph on vertices `0..len` with wraparound edges; every vertex
    /// carries the [`hadamard_coin`] over the order `(x−1 mod N, x+1 mod N)`.
    pub fn cycle(len: i64) -> Result<Self, GraphError> {
        if len < 3 {
            return Err(GraphError::InvalidCycleLength(len));
        }
        let vertices: Vec<Vertex> = (0..len).collect();
        let mut edges = Vec::new();
        let mut coins = BTreeMap::new();
        let mut order = BTreeMap::new();
        for x in 0..len {
            let prev = (x - 1).rem_euclid(len);
            let next = (x + 1).rem_euclid(len);
            edges.push((x, prev));
            edges.push((x, next));
            coins.insert(x, hadamard_coin());
            order.insert(x, vec![prev, next]);
        }
        Self::with_order(vertices, &edges, coins, order)
    }

    /// Rectangular `width x height` lattice with 4-neighbor adjacency.
    /// Vertex `(row, col)` gets label `row*width + col`; rows count upward,
    /// so "down" is `row−1` and "up" is `row+1`. Every vertex carries the
    /// degree-matched [`grover_coin`] over the neighborhood order
    /// `(left, right, down, up)` filtered to existing neighbors.
    pub fn lattice2d(width: i64, height: i64) -> Result<Self, GraphError> {
        if width < 2 || height < 2 {
            return Err(GraphError::InvalidDimensions(width, height));
        }
        let label = |r: i64, c: i64| r * width + c;
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut coins = BTreeMap::new();
        let mut order = BTreeMap::new();
        for r in 0..height {
            for c in 0..width {
                let v = label(r, c);
                vertices.push(v);
                let mut neighbors = Vec::new();
                if c > 0 {
                    neighbors.push(label(r, c - 1));
                }
                if c + 1 < width {
                    neighbors.push(label(r, c + 1));
                }
                if r > 0 {
                    neighbors.push(label(r - 1, c));
                }
                if r + 1 < height {
                    neighbors.push(label(r + 1, c));
                }
                for &n in &neighbors {
                    edges.push((v, n));
                }
                coins.insert(v, grover_coin(neighbors.len()));
                order.insert(v, neighbors);
            }
        }
        Self::with_order(vertices, &edges, coins, order)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.neighborhoods.contains_key(&v)
    }

    /// Ordered neighborhood `n_x`, or `None` for an unknown vertex.
    pub fn neighborhood(&self, x: Vertex) -> Option<&[Vertex]> {
        self.neighborhoods.get(&x).map(|n| n.as_slice())
    }

    pub fn degree(&self, x: Vertex) -> usize {
        self.neighborhoods.get(&x).map_or(0, |n| n.len())
    }

    pub fn coin(&self, x: Vertex) -> Option<&Array2<Complex64>> {
        self.coins.get(&x)
    }

    pub fn has_edge(&self, x: Vertex, j: Vertex) -> bool {
        self.neighborhoods
            .get(&x)
            .is_some_and(|n| n.contains(&j))
    }

    /// Directed edges in canonical order: vertices in declaration order,
    /// targets in neighborhood order. This ordering defines the mode index
    /// used by the evolution operators.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.vertices
            .iter()
            .flat_map(move |&x| self.neighborhoods[&x].iter().map(move |&j| (x, j)))
    }

    pub fn num_edges(&self) -> usize {
        self.neighborhoods.values().map(Vec::len).sum()
    }

    /// Re-checks all construction invariants; useful for graphs deserialized
    /// or assembled elsewhere.
    pub fn validate(&self) -> Result<(), GraphError> {
        let edges: Vec<(Vertex, Vertex)> = self.edges().collect();
        Self::build(
            self.vertices.clone(),
            &edges,
            self.coins.clone(),
            Some(self.neighborhoods.clone()),
        )
        .map(|_| ())
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile::from_graph(self)
    }
}

/// On-disk JSON description of a walk graph.
///
/// Edges may carry an optional third element (a weight); weights are
/// accepted for interchange but carry no dynamical meaning, since all
/// structure lives in the coin matrices. Coin matrices are row-major with `[re, im]`
/// entry pairs, keyed by the decimal vertex label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeSpec>,
    pub coins: BTreeMap<String, Vec<Vec<(f64, f64)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood_order: Option<BTreeMap<String, Vec<Vertex>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Pair(Vertex, Vertex),
    Weighted(Vertex, Vertex, f64),
}

impl EdgeSpec {
    pub fn endpoints(&self) -> (Vertex, Vertex) {
        match *self {
            EdgeSpec::Pair(x, j) => (x, j),
            EdgeSpec::Weighted(x, j, _) => (x, j),
        }
    }
}

fn parse_vertex_key(key: &str) -> Result<Vertex, GraphError> {
    key.parse::<Vertex>()
        .map_err(|_| GraphError::BadVertexKey(key.to_string()))
}

impl GraphFile {
    pub fn from_graph(graph: &WalkerGraph) -> Self {
        let edges = graph.edges().map(|(x, j)| EdgeSpec::Pair(x, j)).collect();
        let coins = graph
            .coins
            .iter()
            .map(|(v, m)| {
                let rows = m
                    .rows()
                    .into_iter()
                    .map(|row| row.iter().map(|z| (z.re, z.im)).collect())
                    .collect();
                (v.to_string(), rows)
            })
            .collect();
        let neighborhood_order = Some(
            graph
                .neighborhoods
                .iter()
                .filter(|(_, n)| !n.is_empty())
                .map(|(v, n)| (v.to_string(), n.clone()))
                .collect(),
        );
        Self {
            vertices: graph.vertices.clone(),
            edges,
            coins,
            neighborhood_order,
        }
    }

    pub fn to_graph(&self) -> Result<WalkerGraph, GraphError> {
        let edges: Vec<(Vertex, Vertex)> = self.edges.iter().map(EdgeSpec::endpoints).collect();
        let mut coins = BTreeMap::new();
        for (key, rows) in &self.coins {
            let v = parse_vertex_key(key)?;
            let d = rows.len();
            let mut flat = Vec::with_capacity(d * d);
            for row in rows {
                if row.len() != d {
                    return Err(GraphError::CoinDimensionMismatch {
                        vertex: v,
                        expected: d,
                        rows: d,
                        cols: row.len(),
                    });
                }
                flat.extend(row.iter().map(|&(re, im)| Complex64::new(re, im)));
            }
            coins.insert(v, Array2::from_shape_vec((d, d), flat).unwrap());
        }
        match &self.neighborhood_order {
            None => WalkerGraph::new(self.vertices.clone(), &edges, coins),
            Some(orders) => {
                let mut order = BTreeMap::new();
                for (key, listed) in orders {
                    order.insert(parse_vertex_key(key)?, listed.clone());
                }
                WalkerGraph::with_order(self.vertices.clone(), &edges, coins, order)
            }
        }
    }
}
