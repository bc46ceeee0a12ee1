//! Finite simple graphs with dense vertex and edge ids.
//!
//! All randomness downstream is indexed by edge id, so constructors assign
//! edge ids deterministically in construction order. Graphs are immutable
//! after construction and safe to share across threads.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("periodic lattice requires side >= 3, got {0}")]
    PeriodicSideTooSmall(usize),
    #[error("lattice requires side >= 2, got {0}")]
    SideTooSmall(usize),
    #[error("lattice requires dim >= 1")]
    ZeroDim,
    #[error("cycle requires n >= 3, got {0}")]
    CycleTooSmall(usize),
    #[error("tree requires degree >= 2, got {0}")]
    TreeDegreeTooSmall(u32),
    #[error("edge id {0} out of range ({1} edges)")]
    InvalidEdge(u32, usize),
    #[error("vertex id {0} out of range ({1} vertices)")]
    InvalidVertex(u32, usize),
    #[error("invalid edge ({0}, {1}): self-loop or duplicate")]
    BadEdge(u32, u32),
    #[error("bad graph spec '{0}': expected path:N, cycle:N, lattice:DIM:SIDE:{{free|periodic}}, or tree:DEGREE:DEPTH")]
    BadSpec(String),
}

/// Boundary condition for lattice boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Free,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Free => write!(f, "free"),
            Boundary::Periodic => write!(f, "periodic"),
        }
    }
}

/// Lattice metadata kept by `lattice_box` so that coordinate-aware
/// statistics (covariance curves, cage scans) can interpret vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeMeta {
    pub dim: usize,
    pub side: usize,
    pub boundary: Boundary,
}

/// A finite simple undirected graph with bounded degree.
///
/// Vertex ids are dense integers `0..vertex_count`. Edge ids are dense
/// integers in constructor order; each edge is stored as `(u, v)` with
/// `u < v`. Lattice vertices use row-major encoding of coordinates
/// (the last axis varies fastest).
#[derive(Debug, Clone)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<(u32, u32)>>,
    degree_bound: u32,
    lattice: Option<LatticeMeta>,
}

impl Graph {
    /// Builds a graph from an explicit edge list, validating simplicity.
    pub fn from_edges(
        vertex_count: usize,
        edge_list: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph {
            vertex_count,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); vertex_count],
            degree_bound: 0,
            lattice: None,
        };
        for (u, v) in edge_list {
            g.push_edge(u, v)?;
        }
        g.degree_bound = g.adjacency.iter().map(|a| a.len() as u32).max().unwrap_or(0);
        Ok(g)
    }

    fn push_edge(&mut self, a: u32, b: u32) -> Result<(), GraphError> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        if u == v {
            return Err(GraphError::BadEdge(a, b));
        }
        if v as usize >= self.vertex_count {
            return Err(GraphError::InvalidVertex(v, self.vertex_count));
        }
        if self.adjacency[u as usize].iter().any(|&(n, _)| n == v) {
            return Err(GraphError::BadEdge(a, b));
        }
        let id = self.edges.len() as u32;
        self.edges.push((u, v));
        self.adjacency[u as usize].push((v, id));
        self.adjacency[v as usize].push((u, id));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn endpoints(&self, e: u32) -> (u32, u32) {
        self.edges[e as usize]
    }

    /// Neighbors of `v` as `(neighbor, edge id)` pairs.
    pub fn neighbors(&self, v: u32) -> &[(u32, u32)] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn lattice_meta(&self) -> Option<LatticeMeta> {
        self.lattice
    }

    /// BFS distances from `v`; unreachable vertices get `u32::MAX`.
    pub fn distances_from(&self, v: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[v as usize] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &(w, _) in self.neighbors(u) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = du + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Vertices at graph distance at most `r` from `v`, sorted by id.
    pub fn vertex_ball(&self, v: u32, r: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        let mut out = vec![v];
        dist[v as usize] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if du == r {
                continue;
            }
            for &(w, _) in self.neighbors(u) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = du + 1;
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Edge ids of the subgraph induced by a sorted vertex set.
    pub fn induced_edges(&self, vertices: &[u32]) -> Vec<u32> {
        let mut member = vec![false; self.vertex_count];
        for &v in vertices {
            member[v as usize] = true;
        }
        let mut out = Vec::new();
        for (id, &(u, v)) in self.edges.iter().enumerate() {
            if member[u as usize] && member[v as usize] {
                out.push(id as u32);
            }
        }
        out
    }

    /// Edge-list dump: first line "v e", then one "u w" pair per line.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = format!("{} {}\n", self.vertex_count, self.edges.len());
        for &(u, v) in &self.edges {
            s.push_str(&format!("{} {}\n", u, v));
        }
        s
    }
}

/// Induced subgraph on the union of the radius-`r` balls around both
/// endpoints of an edge.
#[derive(Debug, Clone)]
pub struct EdgeBall {
    pub center_edge: u32,
    pub radius: u32,
    /// Sorted vertex ids of the ball.
    pub vertices: Vec<u32>,
    /// Edge ids of the induced subgraph, in host-graph order.
    pub edges: Vec<u32>,
}

/// Path on `n` vertices: edges join consecutive sites.
pub fn path_graph(n: usize) -> Graph {
    let edges = (0..n.saturating_sub(1)).map(|i| (i as u32, i as u32 + 1));
    Graph::from_edges(n, edges).expect("path edges are simple")
}

/// Cycle on `n >= 3` vertices.
pub fn cycle_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::CycleTooSmall(n));
    }
    let edges = (0..n).map(|i| (i as u32, ((i + 1) % n) as u32));
    Ok(Graph::from_edges(n, edges).expect("cycle edges are simple"))
}

/// Box of side length `side` in `dim` dimensions with nearest-neighbor
/// edges. Vertex ids are row-major over coordinates; edges are emitted
/// vertex by vertex, axis by axis, which makes `lattice_box(1, n, Free)`
/// coincide with `path_graph(n)` including edge ids.
pub fn lattice_box(dim: usize, side: usize, boundary: Boundary) -> Result<Graph, GraphError> {
    if dim == 0 {
        return Err(GraphError::ZeroDim);
    }
    if side < 2 {
        return Err(GraphError::SideTooSmall(side));
    }
    if boundary == Boundary::Periodic && side < 3 {
        return Err(GraphError::PeriodicSideTooSmall(side));
    }
    let n: usize = side.checked_pow(dim as u32).expect("lattice size overflow");
    // strides[a] is the id step of +1 along axis a; last axis fastest.
    let mut strides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * side;
    }
    let mut edges = Vec::new();
    let mut coord = vec![0usize; dim];
    for v in 0..n {
        for a in 0..dim {
            if coord[a] + 1 < side {
                edges.push((v as u32, (v + strides[a]) as u32));
            } else if boundary == Boundary::Periodic {
                edges.push((v as u32, (v - (side - 1) * strides[a]) as u32));
            }
        }
        // increment row-major coordinate
        for a in (0..dim).rev() {
            coord[a] += 1;
            if coord[a] < side {
                break;
            }
            coord[a] = 0;
        }
    }
    let mut g = Graph::from_edges(n, edges).expect("lattice edges are simple");
    g.lattice = Some(LatticeMeta { dim, side, boundary });
    Ok(g)
}

/// Rooted tree: the root has `degree` children, internal vertices have
/// `degree - 1` children, and leaves sit at distance `depth` from the root.
/// Vertices are numbered level by level.
pub fn regular_tree(degree: u32, depth: usize) -> Result<Graph, GraphError> {
    if degree < 2 {
        return Err(GraphError::TreeDegreeTooSmall(degree));
    }
    let mut edges = Vec::new();
    let mut next_id = 1u32;
    let mut frontier = vec![0u32];
    for level in 0..depth {
        let children_per = if level == 0 { degree } else { degree - 1 };
        let mut new_frontier = Vec::new();
        for &parent in &frontier {
            for _ in 0..children_per {
                edges.push((parent, next_id));
                new_frontier.push(next_id);
                next_id += 1;
            }
        }
        frontier = new_frontier;
    }
    Graph::from_edges(next_id as usize, edges)
}

/// Ball of radius `r` around edge `e = (u, v)`: the union of the vertex
/// balls around `u` and `v`, with the induced edge set.
pub fn edge_ball(g: &Graph, e: u32, r: u32) -> Result<EdgeBall, GraphError> {
    if e as usize >= g.edge_count() {
        return Err(GraphError::InvalidEdge(e, g.edge_count()));
    }
    let (u, v) = g.endpoints(e);
    let mut vertices = g.vertex_ball(u, r);
    let more = g.vertex_ball(v, r);
    vertices.extend(more);
    vertices.sort_unstable();
    vertices.dedup();
    let edges = g.induced_edges(&vertices);
    Ok(EdgeBall {
        center_edge: e,
        radius: r,
        vertices,
        edges,
    })
}

/// Parsed graph family specification, the CLI's `--graph` grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphSpec {
    Path { n: usize },
    Cycle { n: usize },
    Lattice { dim: usize, side: usize, boundary: Boundary },
    Tree { degree: u32, depth: usize },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, GraphError> {
        match *self {
            GraphSpec::Path { n } => Ok(path_graph(n)),
            GraphSpec::Cycle { n } => cycle_graph(n),
            GraphSpec::Lattice { dim, side, boundary } => lattice_box(dim, side, boundary),
            GraphSpec::Tree { degree, depth } => regular_tree(degree, depth),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphSpec::Path { n } => write!(f, "path:{}", n),
            GraphSpec::Cycle { n } => write!(f, "cycle:{}", n),
            GraphSpec::Lattice { dim, side, boundary } => {
                write!(f, "lattice:{}:{}:{}", dim, side, boundary)
            }
            GraphSpec::Tree { degree, depth } => write!(f, "tree:{}:{}", degree, depth),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadSpec(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["path", n] => Ok(GraphSpec::Path { n: n.parse().map_err(|_| bad())? }),
            ["cycle", n] => Ok(GraphSpec::Cycle { n: n.parse().map_err(|_| bad())? }),
            ["lattice", dim, side, b] => {
                let boundary = match *b {
                    "free" => Boundary::Free,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(bad()),
                };
                Ok(GraphSpec::Lattice {
                    dim: dim.parse().map_err(|_| bad())?,
                    side: side.parse().map_err(|_| bad())?,
                    boundary,
                })
            }
            ["tree", degree, depth] => Ok(GraphSpec::Tree {
                degree: degree.parse().map_err(|_| bad())?,
                depth: depth.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree_sum(g: &Graph) -> usize {
        (0..g.vertex_count() as u32).map(|v| g.degree(v)).sum()
    }

    #[test]
    fn path_counts() {
        let g = path_graph(4);
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(path_graph(1).edge_count(), 0);
        assert_eq!(path_graph(0).vertex_count(), 0);
        assert_eq!(path_graph(2).edge_count(), 1);
        assert_eq!(g.degree_bound(), 2);
    }

    #[test]
    fn lattice_counts() {
        let g = lattice_box(2, 3, Boundary::Free).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.degree_bound(), 4);

        let t = lattice_box(2, 4, Boundary::Periodic).unwrap();
        assert_eq!(t.vertex_count(), 16);
        assert_eq!(t.edge_count(), 32);
        assert!((0..16).all(|v| t.degree(v) == 4));

        assert_eq!(
            lattice_box(2, 2, Boundary::Periodic).err(),
            Some(GraphError::PeriodicSideTooSmall(2))
        );
    }

    #[test]
    fn lattice_1d_matches_path() {
        let a = lattice_box(1, 7, Boundary::Free).unwrap();
        let b = path_graph(7);
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn tree_counts() {
        let g = regular_tree(3, 1).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 3));
        let g = regular_tree(3, 2).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (10, 9));
        // degree=2 gives a path of 2k+1 vertices
        let g = regular_tree(2, 3).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (7, 6));
        assert_eq!(g.degree_bound(), 2);
        assert!(regular_tree(1, 2).is_err());
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(cycle_graph(4).unwrap().edge_count(), 4);
        assert_eq!(cycle_graph(3).unwrap().edge_count(), 3);
        assert_eq!(cycle_graph(5).unwrap().edge_count(), 5);
        assert!(cycle_graph(2).is_err());
    }

    #[test]
    fn handshake_identity() {
        for g in [
            path_graph(9),
            cycle_graph(6).unwrap(),
            lattice_box(2, 5, Boundary::Free).unwrap(),
            lattice_box(3, 3, Boundary::Periodic).unwrap(),
            regular_tree(4, 2).unwrap(),
        ] {
            assert_eq!(degree_sum(&g), 2 * g.edge_count());
            assert!((0..g.vertex_count() as u32).all(|v| g.degree(v) as u32 <= g.degree_bound()));
        }
    }

    #[test]
    fn adjacency_consistent_with_edge_list() {
        let g = lattice_box(2, 4, Boundary::Periodic).unwrap();
        for (id, &(u, v)) in g.edges().iter().enumerate() {
            assert!(g.neighbors(u).contains(&(v, id as u32)));
            assert!(g.neighbors(v).contains(&(u, id as u32)));
        }
    }

    #[test]
    fn edge_ball_on_path() {
        let g = path_graph(7);
        // middle edge (3,4) has id 3
        let b = edge_ball(&g, 3, 1).unwrap();
        assert_eq!(b.vertices, vec![2, 3, 4, 5]);
        assert_eq!(b.edges.len(), 3);

        let b0 = edge_ball(&g, 3, 0).unwrap();
        assert_eq!(b0.vertices, vec![3, 4]);
        assert_eq!(b0.edges, vec![3]);

        let whole = edge_ball(&g, 3, 10).unwrap();
        assert_eq!(whole.vertices.len(), 7);
        assert_eq!(whole.edges.len(), 6);
    }

    #[test]
    fn edge_ball_on_lattice() {
        let g = lattice_box(2, 5, Boundary::Free).unwrap();
        // center horizontal edge: (2,2)-(2,3) = ids 12 and 13; find it
        let u = (2 * 5 + 2) as u32;
        let v = u + 1;
        let id = g
            .neighbors(u)
            .iter()
            .find(|&&(n, _)| n == v)
            .map(|&(_, e)| e)
            .unwrap();
        let b = edge_ball(&g, id, 1).unwrap();
        assert_eq!(b.vertices.len(), 8);
    }

    #[test]
    fn edge_ball_monotone_in_radius() {
        let g = lattice_box(2, 5, Boundary::Periodic).unwrap();
        for r in 0..4 {
            let small = edge_ball(&g, 17, r).unwrap();
            let big = edge_ball(&g, 17, r + 1).unwrap();
            assert!(small.vertices.iter().all(|v| big.vertices.contains(v)));
            assert!(small.edges.iter().all(|e| big.edges.contains(e)));
        }
    }

    #[test]
    fn invalid_edge_ball() {
        let g = path_graph(3);
        assert!(edge_ball(&g, 99, 1).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        for s in ["path:10", "cycle:5", "lattice:2:64:periodic", "lattice:3:4:free", "tree:3:2"] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            spec.build().unwrap();
        }
        assert!("latice:2:3:free".parse::<GraphSpec>().is_err());
        assert!("lattice:2:3:weird".parse::<GraphSpec>().is_err());
        assert!("path:x".parse::<GraphSpec>().is_err());
    }

    #[test]
    fn edge_list_dump() {
        let g = path_graph(3);
        assert_eq!(g.to_edge_list_string(), "3 2\n0 1\n1 2\n");
    }
}
