//! Cage detection on two-dimensional lattices.
//!
//! A cage is an event local to a 4x1 interior segment: the 14 perimeter
//! sites of its enclosing 6x3 rectangle are fully covered by 7 placed
//! dimers lying entirely within the perimeter, and every one of those
//! dimers woke before any edge incident to an interior site. When it
//! happens, the interior evolves as an isolated 4-path (monomer count 0 or
//! 2 with probabilities 2/3 and 1/3) independently of the outside.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{EstimateWithCI, StatsError};
use crate::engine::{Configuration, WakeupAssignment};
use crate::graphs::{lattice_box, Boundary, Graph};

/// One horizontal 4x1 interior segment with its precomputed surroundings.
#[derive(Debug, Clone)]
struct CagePos {
    /// (row, col) of the leftmost interior cell.
    at: (u32, u32),
    interior: [u32; 4],
    /// Perimeter sites in cycle order (used to plant fixtures).
    frame_cycle: [u32; 14],
    /// (cell, cycle predecessor, cycle successor): a frame cell is matched
    /// within the frame iff its dimer partner is one of its cycle
    /// neighbors, the only frame-internal adjacencies on sides above 6.
    frame_links: [(u32, u32, u32); 14],
    /// Edges incident to at least one interior site.
    interior_edges: Vec<u32>,
}

fn cage_positions(g: &Graph) -> Result<Vec<CagePos>, StatsError> {
    let meta = g.lattice_meta().filter(|m| m.dim == 2).ok_or(StatsError::NotA2dLattice)?;
    let side = meta.side as i64;
    let cell = |r: i64, c: i64| -> u32 {
        (r.rem_euclid(side) * side + c.rem_euclid(side)) as u32
    };
    let mut out = Vec::new();
    if side < 6 {
        return Ok(out);
    }
    for y in 0..side {
        for x in 0..side {
            if meta.boundary == Boundary::Free && (y < 1 || y + 1 >= side || x < 1 || x + 4 >= side)
            {
                continue;
            }
            let interior = [cell(y, x), cell(y, x + 1), cell(y, x + 2), cell(y, x + 3)];
            // cycle order: top row left to right, right column middle,
            // bottom row right to left, left column middle
            let mut frame_cycle = [0u32; 14];
            let mut k = 0;
            for c in -1..=4 {
                frame_cycle[k] = cell(y - 1, x + c);
                k += 1;
            }
            frame_cycle[k] = cell(y, x + 4);
            k += 1;
            for c in (-1..=4).rev() {
                frame_cycle[k] = cell(y + 1, x + c);
                k += 1;
            }
            frame_cycle[k] = cell(y, x - 1);
            let mut frame_links = [(0u32, 0u32, 0u32); 14];
            for i in 0..14 {
                frame_links[i] = (
                    frame_cycle[i],
                    frame_cycle[(i + 13) % 14],
                    frame_cycle[(i + 1) % 14],
                );
            }
            let mut interior_edges = Vec::with_capacity(13);
            for &v in &interior {
                for &(_, e) in g.neighbors(v) {
                    if !interior_edges.contains(&e) {
                        interior_edges.push(e);
                    }
                }
            }
            out.push(CagePos { at: (y as u32, x as u32), interior, frame_cycle, frame_links, interior_edges });
        }
    }
    Ok(out)
}

/// Fills partner[v] / edge_of[v] with the dimer partner and covering edge
/// of each vertex (u32::MAX when uncovered).
fn fill_matching(g: &Graph, placed: &[u32], partner: &mut Vec<u32>, edge_of: &mut Vec<u32>) {
    partner.clear();
    partner.resize(g.vertex_count(), u32::MAX);
    edge_of.clear();
    edge_of.resize(g.vertex_count(), u32::MAX);
    for &e in placed {
        let (u, v) = g.endpoints(e);
        partner[u as usize] = v;
        partner[v as usize] = u;
        edge_of[u as usize] = e;
        edge_of[v as usize] = e;
    }
}

fn is_caged(ranks: &[u32], partner: &[u32], edge_of: &[u32], pos: &CagePos) -> bool {
    let mut max_frame_rank = 0u32;
    for &(cell, prev, next) in &pos.frame_links {
        let p = partner[cell as usize];
        if p != prev && p != next {
            return false;
        }
        max_frame_rank = max_frame_rank.max(ranks[edge_of[cell as usize] as usize]);
    }
    pos.interior_edges.iter().all(|&e| ranks[e as usize] > max_frame_rank)
}

/// Caged segments of one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CageScan {
    pub count: u64,
    /// (row, col) of the leftmost interior cell of each cage.
    pub locations: Vec<(u32, u32)>,
}

/// Scans every 4x1 horizontal segment position of a 2-d lattice for cages.
pub fn cage_scan(
    g: &Graph,
    w: &WakeupAssignment,
    config: &Configuration,
) -> Result<CageScan, StatsError> {
    let positions = cage_positions(g)?;
    let mut partner = Vec::new();
    let mut edge_of = Vec::new();
    fill_matching(g, config.placed(), &mut partner, &mut edge_of);
    let mut locations = Vec::new();
    for pos in &positions {
        if is_caged(w.ranks(), &partner, &edge_of, pos) {
            locations.push(pos.at);
        }
    }
    Ok(CageScan { count: locations.len() as u64, locations })
}

/// Cage statistics pooled over replications of a periodic box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CageHarvest {
    pub replications: u64,
    pub seed: u64,
    pub side: usize,
    /// Cages per site.
    pub density: EstimateWithCI,
    pub cage_count: u64,
    /// Interior monomer counts over caged segments.
    pub interior_zero: u64,
    pub interior_two: u64,
    pub interior_other: u64,
    /// Mean and variance of the caged interior monomer count.
    pub interior_mean: f64,
    pub interior_variance: f64,
    /// Chi-square p-value for independence of the interior outcome from a
    /// median split of the outside monomer count (1 = no evidence against).
    pub independence_p: f64,
}

/// Running totals merged across replications. All fields are exact
/// integer sums or multisets, so merging in any order gives the same
/// result and the harvest stays independent of the worker count.
/// Per-thread scratch carried through the fold so the hot loop does not
/// allocate per replication.
#[derive(Default)]
struct HarvestState {
    acc: HarvestAccum,
    ranks: Vec<u32>,
    order: Vec<u32>,
    covered: Vec<bool>,
    placed: Vec<u32>,
    partner: Vec<u32>,
    edge_of: Vec<u32>,
}

#[derive(Default, Clone)]
struct HarvestAccum {
    count_sum: u128,
    count_sq_sum: u128,
    cages: Vec<(u32, u32)>,
}

impl HarvestAccum {
    fn merge(mut self, other: HarvestAccum) -> HarvestAccum {
        self.count_sum += other.count_sum;
        self.count_sq_sum += other.count_sq_sum;
        self.cages.extend(other.cages);
        self
    }
}

/// Simulates a periodic `side` x `side` box `reps` times, collecting cage
/// density and the law of the caged interiors.
pub fn cage_harvest(side: usize, reps: u64, seed: u64) -> Result<CageHarvest, StatsError> {
    use rayon::prelude::*;
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let g = lattice_box(2, side, Boundary::Periodic)?;
    let positions = cage_positions(&g)?;
    let acc = (0..reps)
        .into_par_iter()
        .fold(HarvestState::default, |mut st, i| {
            crate::engine::fill_ranks(&mut st.ranks, g.edge_count(), seed, i);
            crate::engine::rsa_sweep(&g, &st.ranks, &mut st.order, &mut st.covered, &mut st.placed);
            fill_matching(&g, &st.placed, &mut st.partner, &mut st.edge_of);
            let total = st.covered.iter().filter(|&&c| !c).count() as u32;
            let mut found = 0u128;
            for pos in &positions {
                if is_caged(&st.ranks, &st.partner, &st.edge_of, pos) {
                    let interior: u32 = pos
                        .interior
                        .iter()
                        .map(|&v| u32::from(!st.covered[v as usize]))
                        .sum();
                    // outside = everything beyond the 6x3 footprint; the
                    // frame is fully covered so it contributes nothing
                    st.acc.cages.push((interior, total - interior));
                    found += 1;
                }
            }
            st.acc.count_sum += found;
            st.acc.count_sq_sum += found * found;
            st
        })
        .map(|st| st.acc)
        .reduce(HarvestAccum::default, HarvestAccum::merge);
    let v = g.vertex_count() as f64;
    let r = reps as f64;
    let sum = acc.count_sum;
    let sum_sq = acc.count_sq_sum;
    let mean = sum as f64 / r;
    let var = ((sum_sq as f64) - (sum as f64) * (sum as f64) / r) / (r - 1.0);
    let density = EstimateWithCI {
        estimate: mean / v,
        std_error: (var.max(0.0) / r).sqrt() / v,
        replications: reps,
        seed,
    };

    // merge order depends on scheduling; sort to fix the multiset order
    let mut all_cages = acc.cages;
    all_cages.sort_unstable();
    let mut interior_zero = 0u64;
    let mut interior_two = 0u64;
    let mut interior_other = 0u64;
    for &(i, _) in &all_cages {
        match i {
            0 => interior_zero += 1,
            2 => interior_two += 1,
            _ => interior_other += 1,
        }
    }
    let n_cages = all_cages.len() as f64;
    let interior_mean = if all_cages.is_empty() {
        0.0
    } else {
        all_cages.iter().map(|&(i, _)| i as f64).sum::<f64>() / n_cages
    };
    let interior_variance = if all_cages.len() < 2 {
        0.0
    } else {
        all_cages
            .iter()
            .map(|&(i, _)| (i as f64 - interior_mean).powi(2))
            .sum::<f64>()
            / (n_cages - 1.0)
    };
    let independence_p = independence_p_value(&all_cages);

    Ok(CageHarvest {
        replications: reps,
        seed,
        side,
        density,
        cage_count: all_cages.len() as u64,
        interior_zero,
        interior_two,
        interior_other,
        interior_mean,
        interior_variance,
        independence_p,
    })
}

/// Chi-square independence of interior outcome (0 vs 2 monomers) against a
/// median split of the outside count, 1 degree of freedom.
fn independence_p_value(cages: &[(u32, u32)]) -> f64 {
    if cages.len() < 20 {
        return 1.0;
    }
    let mut outside: Vec<u32> = cages.iter().map(|&(_, o)| o).collect();
    outside.sort_unstable();
    let median = outside[outside.len() / 2];
    let mut table = [[0u64; 2]; 2];
    for &(i, o) in cages {
        let row = usize::from(i != 0);
        let col = usize::from(o > median);
        table[row][col] += 1;
    }
    let row_sums = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col_sums = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let total = (row_sums[0] + row_sums[1]) as f64;
    if row_sums.contains(&0) || col_sums.contains(&0) {
        return 1.0;
    }
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / total;
            let d = table[i][j] as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("chi-square dof");
    1.0 - dist.cdf(chi2)
}

/// Cage density on a periodic box with its standard error.
pub fn cage_density_estimate(
    side: usize,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI, StatsError> {
    Ok(cage_harvest(side, reps, seed)?.density)
}

/// Builds a wakeup assignment realizing a cage at the given position of a
/// periodic box: the frame's alternating matching wakes first, everything
/// else later in edge-id order. Used by fixtures and tests.
pub fn plant_cage(g: &Graph, at: (u32, u32)) -> Result<WakeupAssignment, StatsError> {
    let positions = cage_positions(g)?;
    let pos = positions
        .iter()
        .find(|p| p.at == at)
        .ok_or(StatsError::NotA2dLattice)?;
    let mut keys: Vec<u64> = (0..g.edge_count() as u64).map(|e| 100 + e).collect();
    for pair in 0..7 {
        let a = pos.frame_cycle[2 * pair];
        let b = pos.frame_cycle[2 * pair + 1];
        let e = g
            .neighbors(a)
            .iter()
            .find(|&&(x, _)| x == b)
            .map(|&(_, e)| e)
            .expect("frame cycle edge");
        keys[e as usize] = pair as u64;
    }
    WakeupAssignment::from_keys(g, &keys).map_err(|_| StatsError::NotA2dLattice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_rsa;

    #[test]
    fn planted_cage_is_detected() {
        let g = lattice_box(2, 10, Boundary::Periodic).unwrap();
        let w = plant_cage(&g, (4, 3)).unwrap();
        let c = run_rsa(&g, &w).unwrap();
        let scan = cage_scan(&g, &w, &c).unwrap();
        assert!(scan.count >= 1);
        assert!(scan.locations.contains(&(4, 3)), "{:?}", scan.locations);
    }

    #[test]
    fn empty_configuration_has_no_cage() {
        // all edges wake in id order: the first dimers tile row by row and
        // no frame assembles before its interior edges wake
        let g = lattice_box(2, 8, Boundary::Periodic).unwrap();
        let keys: Vec<u64> = (0..g.edge_count() as u64).collect();
        let w = WakeupAssignment::from_keys(&g, &keys).unwrap();
        let c = run_rsa(&g, &w).unwrap();
        let scan = cage_scan(&g, &w, &c).unwrap();
        assert_eq!(scan.count, 0);
    }

    #[test]
    fn caged_interiors_follow_the_four_path_law() {
        let h = cage_harvest(16, 900_000, 99).unwrap();
        assert!(h.cage_count > 150, "cage_count={}", h.cage_count);
        assert_eq!(h.interior_other, 0);
        let n = (h.interior_zero + h.interior_two) as f64;
        let p0 = h.interior_zero as f64 / n;
        let se = (p0 * (1.0 - p0) / n).sqrt();
        assert!(
            (p0 - 2.0 / 3.0).abs() <= 3.0 * se.max(1e-6),
            "p0={p0} se={se}"
        );
        // per-cage interior variance approaches 8/9
        assert!((h.interior_variance - 8.0 / 9.0).abs() < 0.3, "{}", h.interior_variance);
        assert!(h.independence_p > 0.001, "p={}", h.independence_p);
    }

    #[test]
    fn cage_density_positive_and_translation_invariant() {
        let a = cage_density_estimate(16, 30_000, 5).unwrap();
        let b = cage_density_estimate(32, 8_000, 6).unwrap();
        assert!(a.excludes_zero(2.576), "{a:?}");
        assert!(a.estimate <= 1.0);
        let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() <= 3.0 * pooled, "a={a:?} b={b:?}");
    }

    #[test]
    fn free_boundary_restricts_positions() {
        let free = lattice_box(2, 8, Boundary::Free).unwrap();
        let per = lattice_box(2, 8, Boundary::Periodic).unwrap();
        assert_eq!(cage_positions(&per).unwrap().len(), 64);
        // rows 1..=6, cols 1..=3 fit a 6-wide block in a free 8x8 box
        assert_eq!(cage_positions(&free).unwrap().len(), 6 * 3);
        let path = crate::graphs::path_graph(5);
        let w = crate::engine::sample_wakeups(&path, 0, 0);
        let c = run_rsa(&path, &w).unwrap();
        assert!(matches!(cage_scan(&path, &w, &c), Err(StatsError::NotA2dLattice)));
    }
}
