//! Random sequential dimer placement driven by per-edge wakeup ranks.
//!
//! Each edge gets an independent uniform wakeup time; only the order of the
//! times matters to the process, so a wakeup assignment stores a uniformly
//! random permutation of edge ranks. Ranks make runs bit-reproducible and
//! remove tie ambiguity.
//!
//! PRNG contract: ChaCha8 seeded with `seed_from_u64(seed)` and the ChaCha
//! stream id set to `stream`. Replication `i` of any estimator uses stream
//! `i`, which makes replications independent and embarrassingly parallel
//! with order-independent reproducibility.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graphs::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("wakeup assignment has {got} ranks but graph has {want} edges")]
    SizeMismatch { got: usize, want: usize },
}

/// Per-edge wakeup order: `ranks[e]` is the position of edge `e` in
/// ascending wakeup-time order. Ranks are a bijection onto `0..edge_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WakeupAssignment {
    ranks: Vec<u32>,
    seed: u64,
    stream: u64,
}

impl WakeupAssignment {
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn rank(&self, e: u32) -> u32 {
        self.ranks[e as usize]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Edge ids in ascending rank order (the placement attempt order).
    pub fn order(&self) -> Vec<u32> {
        let mut order = vec![0u32; self.ranks.len()];
        for (e, &r) in self.ranks.iter().enumerate() {
            order[r as usize] = e as u32;
        }
        order
    }

    /// Builds ranks from arbitrary per-edge keys (for example sampled
    /// uniform floats); ties are broken by edge id. The seed and stream
    /// provenance fields are zeroed, since no generator was involved.
    pub fn from_keys(g: &Graph, keys: &[u64]) -> Result<Self, EngineError> {
        if keys.len() != g.edge_count() {
            return Err(EngineError::SizeMismatch { got: keys.len(), want: g.edge_count() });
        }
        let mut ids: Vec<u32> = (0..keys.len() as u32).collect();
        ids.sort_unstable_by_key(|&e| (keys[e as usize], e));
        let mut ranks = vec![0u32; keys.len()];
        for (pos, &e) in ids.iter().enumerate() {
            ranks[e as usize] = pos as u32;
        }
        Ok(WakeupAssignment { ranks, seed: 0, stream: 0 })
    }
}

/// Uniform u64 in `0..bound` by rejection sampling, `bound >= 1`.
fn bounded_u64(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Samples a uniformly random wakeup rank permutation with Fisher-Yates.
/// Identical `(seed, stream)` yields identical ranks on every platform.
pub fn sample_wakeups(g: &Graph, seed: u64, stream: u64) -> WakeupAssignment {
    let mut ranks = Vec::new();
    fill_ranks(&mut ranks, g.edge_count(), seed, stream);
    WakeupAssignment { ranks, seed, stream }
}

/// Buffer-reusing body of [`sample_wakeups`].
pub(crate) fn fill_ranks(ranks: &mut Vec<u32>, m: usize, seed: u64, stream: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    ranks.clear();
    ranks.extend(0..m as u32);
    for i in (1..m).rev() {
        let j = bounded_u64(&mut rng, (i + 1) as u64) as usize;
        ranks.swap(i, j);
    }
}

/// The jammed state of one run: placed dimers and covered / monomer flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    /// Placed edge ids in placement order (ascending rank).
    placed: Vec<u32>,
    covered: Vec<bool>,
}

impl Configuration {
    pub fn placed(&self) -> &[u32] {
        &self.placed
    }

    pub fn is_covered(&self, v: u32) -> bool {
        self.covered[v as usize]
    }

    pub fn is_monomer(&self, v: u32) -> bool {
        !self.covered[v as usize]
    }

    pub fn monomer_count(&self) -> usize {
        self.covered.iter().filter(|&&c| !c).count()
    }

    pub fn monomer_vertices(&self) -> Vec<u32> {
        (0..self.covered.len() as u32).filter(|&v| !self.covered[v as usize]).collect()
    }

    /// Placed edges are pairwise vertex-disjoint.
    pub fn is_matching(&self, g: &Graph) -> bool {
        let mut seen = vec![false; g.vertex_count()];
        for &e in &self.placed {
            let (u, v) = g.endpoints(e);
            if seen[u as usize] || seen[v as usize] {
                return false;
            }
            seen[u as usize] = true;
            seen[v as usize] = true;
        }
        true
    }

    /// Every unplaced edge has at least one covered endpoint, and covered
    /// flags agree with the placed edge set.
    pub fn is_maximal_matching(&self, g: &Graph) -> bool {
        if !self.is_matching(g) {
            return false;
        }
        let mut cov = vec![false; g.vertex_count()];
        for &e in &self.placed {
            let (u, v) = g.endpoints(e);
            cov[u as usize] = true;
            cov[v as usize] = true;
        }
        if cov != self.covered {
            return false;
        }
        g.edges()
            .iter()
            .all(|&(u, v)| cov[u as usize] || cov[v as usize])
    }
}

/// Runs the placement sweep: edges wake in ascending rank order and a dimer
/// is placed iff both endpoints are still uncovered.
pub fn run_rsa(g: &Graph, w: &WakeupAssignment) -> Result<Configuration, EngineError> {
    if w.ranks.len() != g.edge_count() {
        return Err(EngineError::SizeMismatch { got: w.ranks.len(), want: g.edge_count() });
    }
    let mut order = Vec::new();
    let mut covered = Vec::new();
    let mut placed = Vec::new();
    rsa_sweep(g, &w.ranks, &mut order, &mut covered, &mut placed);
    Ok(Configuration { placed, covered })
}

/// Buffer-reusing body of [`run_rsa`]: `order` is scratch, `covered` and
/// `placed` receive the jammed state.
pub(crate) fn rsa_sweep(
    g: &Graph,
    ranks: &[u32],
    order: &mut Vec<u32>,
    covered: &mut Vec<bool>,
    placed: &mut Vec<u32>,
) {
    order.clear();
    order.resize(ranks.len(), 0);
    for (e, &r) in ranks.iter().enumerate() {
        order[r as usize] = e as u32;
    }
    covered.clear();
    covered.resize(g.vertex_count(), false);
    placed.clear();
    for &e in order.iter() {
        let (u, v) = g.endpoints(e);
        if !covered[u as usize] && !covered[v as usize] {
            covered[u as usize] = true;
            covered[v as usize] = true;
            placed.push(e);
        }
    }
}

/// Monomer indicator of `v` when the process is restricted to edges of the
/// subgraph induced by the radius-`r` ball around `v`, with relative ranks
/// preserved. `r = 0` leaves no edges, so the result is always true.
pub fn truncated_indicator(g: &Graph, w: &WakeupAssignment, v: u32, r: u32) -> bool {
    let ball = g.vertex_ball(v, r);
    let mut edges = g.induced_edges(&ball);
    edges.sort_unstable_by_key(|&e| w.rank(e));
    let mut covered = vec![false; g.vertex_count()];
    for e in edges {
        let (a, b) = g.endpoints(e);
        if !covered[a as usize] && !covered[b as usize] {
            covered[a as usize] = true;
            covered[b as usize] = true;
        }
    }
    !covered[v as usize]
}

/// Directed-edge index: walk currently on edge `e` about to continue from
/// vertex `exit`. Side 0 exits at the smaller endpoint.
fn dir_index(g: &Graph, e: u32, exit: u32) -> usize {
    let (u, _) = g.endpoints(e);
    2 * e as usize + usize::from(exit != u)
}

/// Longest monotone walk lengths for every edge.
///
/// A monotone walk is an edge path with strictly decreasing wakeup ranks;
/// only edges on such walks can influence the starting edge's outcome. The
/// walk enters each edge at one endpoint and leaves at the other, and
/// strictly decreasing ranks already forbid repeated edges. Computed in one
/// ascending-rank sweep over directed edges in O(|E| * degree).
pub fn dependence_radii(g: &Graph, w: &WakeupAssignment) -> Vec<u32> {
    let m = g.edge_count();
    // longest[d] = walk length achievable starting on directed edge d,
    // counting that edge itself.
    let mut longest = vec![1u32; 2 * m];
    for e in w.order() {
        let rank_e = w.rank(e);
        let (u, v) = g.endpoints(e);
        for exit in [u, v] {
            let mut best = 0u32;
            for &(x, f) in g.neighbors(exit) {
                if w.rank(f) < rank_e {
                    best = best.max(longest[dir_index(g, f, x)]);
                }
            }
            longest[dir_index(g, e, exit)] = 1 + best;
        }
    }
    (0..m as u32)
        .map(|e| {
            let (u, v) = g.endpoints(e);
            longest[dir_index(g, e, u)].max(longest[dir_index(g, e, v)])
        })
        .collect()
}

/// Length of the longest monotone walk starting at edge `e`. Truncated and
/// full dynamics of `e` agree for every ball radius at least this value.
pub fn dependence_radius(g: &Graph, w: &WakeupAssignment, e: u32) -> u32 {
    dependence_radii(g, w)[e as usize]
}

/// Marks each vertex whose monomer state is certified independent of
/// anything outside the graph: `true` iff no monotone walk from an edge
/// incident to the vertex reaches an edge incident to `boundary_vertices`.
/// For marked vertices the monomer state on this finite graph equals the
/// state in any edge-order-preserving extension.
pub fn bulk_mask(g: &Graph, w: &WakeupAssignment, boundary_vertices: &[u32]) -> Vec<bool> {
    let m = g.edge_count();
    let mut on_boundary = vec![false; g.vertex_count()];
    for &v in boundary_vertices {
        on_boundary[v as usize] = true;
    }
    let mut touched = vec![false; 2 * m];
    for e in w.order() {
        let rank_e = w.rank(e);
        let (u, v) = g.endpoints(e);
        let bnd = on_boundary[u as usize] || on_boundary[v as usize];
        for exit in [u, v] {
            let mut t = bnd;
            if !t {
                for &(x, f) in g.neighbors(exit) {
                    if w.rank(f) < rank_e && touched[dir_index(g, f, x)] {
                        t = true;
                        break;
                    }
                }
            }
            touched[dir_index(g, e, exit)] = t;
        }
    }
    (0..g.vertex_count() as u32)
        .map(|v| {
            g.neighbors(v).iter().all(|&(_, e)| {
                let (a, b) = g.endpoints(e);
                !touched[dir_index(g, e, a)] && !touched[dir_index(g, e, b)]
            })
        })
        .collect()
}
