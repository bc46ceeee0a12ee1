//! Monte Carlo estimators and hypothesis checks over the placement process.
//!
//! Every estimator is a deterministic function of (graph spec, replication
//! count, seed): replication `i` draws PRNG stream `i`, per-replication
//! statistics are integers collected into an index-ordered vector, and all
//! floating-point reduction happens sequentially afterwards. Results are
//! therefore byte-identical regardless of the rayon worker count.

mod bound;
mod cages;
mod clt;
mod covariance;

pub use bound::{concentration_bound, empirical_exceedance, ExceedanceCheck};
pub use cages::{cage_density_estimate, cage_harvest, cage_scan, plant_cage, CageHarvest, CageScan};
pub use clt::{clt_check, clt_report_from_samples, CltReport, AD_CRITICAL_1PCT};
pub use covariance::{covariance_curve, sigma2_estimate, SIGMA2_ENVELOPE_CUTOFF};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{dependence_radii, run_rsa, sample_wakeups, Configuration, WakeupAssignment};
use crate::graphs::{Boundary, Graph, GraphSpec};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("estimator needs at least {need} replications, got {got}")]
    TooFewReps { need: u64, got: u64 },
    #[error("graph spec failed to build: {0}")]
    BadGraph(#[from] crate::graphs::GraphError),
    #[error("max separation {max_sep} must be below side/2 = {limit}")]
    SeparationTooLarge { max_sep: u32, limit: u32 },
    #[error("variance estimate {estimate} with 99% CI including 0; refusing to normalize")]
    DegenerateVariance { estimate: f64 },
    #[error("cage scan requires a 2-d lattice graph")]
    NotA2dLattice,
    #[error("monotone path needs n >= 1")]
    EmptyPath,
}

/// A Monte Carlo point estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: u64,
    pub seed: u64,
}

impl EstimateWithCI {
    /// |estimate - reference| <= k standard errors.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.estimate - reference).abs() <= k * self.std_error
    }

    /// The CI `estimate +/- z * std_error` excludes zero.
    pub fn excludes_zero(&self, z: f64) -> bool {
        self.estimate.abs() > z * self.std_error
    }
}

/// Runs one closure per replication on stream `i`, preserving index order.
pub(crate) fn per_replication<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Per-replication jammed configurations mapped through `f`.
pub(crate) fn per_configuration<T, F>(g: &Graph, reps: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&WakeupAssignment, &Configuration) -> T + Sync,
{
    per_replication(reps, |i| {
        let w = sample_wakeups(g, seed, i);
        let c = run_rsa(g, &w).expect("matching sizes");
        f(&w, &c)
    })
}

/// Mean and standard error of a sample given exact integer sums.
fn mean_and_se(sum: u128, sum_sq: u128, reps: u64) -> (f64, f64) {
    let r = reps as f64;
    let mean = sum as f64 / r;
    let var = (sum_sq as f64 - (sum as f64) * (sum as f64) / r) / (r - 1.0);
    (mean, (var.max(0.0) / r).sqrt())
}

/// Mean monomer fraction across replications.
pub fn density_estimate(
    spec: &GraphSpec,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI, StatsError> {
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let g = spec.build()?;
    let counts: Vec<u64> =
        per_configuration(&g, reps, seed, |_, c| c.monomer_count() as u64);
    let sum: u128 = counts.iter().map(|&c| c as u128).sum();
    let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let (mean, se) = mean_and_se(sum, sum_sq, reps);
    let v = g.vertex_count() as f64;
    Ok(EstimateWithCI {
        estimate: mean / v,
        std_error: se / v,
        replications: reps,
        seed,
    })
}

/// Sample variance of the total monomer count divided by the vertex count,
/// with a jackknife standard error.
pub fn variance_per_site_estimate(
    spec: &GraphSpec,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI, StatsError> {
    if reps < 30 {
        return Err(StatsError::TooFewReps { need: 30, got: reps });
    }
    let g = spec.build()?;
    let counts: Vec<u64> =
        per_configuration(&g, reps, seed, |_, c| c.monomer_count() as u64);
    let v = g.vertex_count() as f64;
    let r = reps as f64;
    let s1: u128 = counts.iter().map(|&c| c as u128).sum();
    let s2: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let var = ((s2 as f64) - (s1 as f64) * (s1 as f64) / r) / (r - 1.0);
    // leave-one-out variances for the jackknife
    let mut loo = Vec::with_capacity(counts.len());
    for &c in &counts {
        let c = c as f64;
        let s1i = s1 as f64 - c;
        let s2i = s2 as f64 - c * c;
        loo.push((s2i - s1i * s1i / (r - 1.0)) / (r - 2.0));
    }
    let loo_mean = loo.iter().sum::<f64>() / r;
    let jack_var =
        (r - 1.0) / r * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>();
    Ok(EstimateWithCI {
        estimate: var / v,
        std_error: jack_var.max(0.0).sqrt() / v,
        replications: reps,
        seed,
    })
}

/// Fraction of replications in which a fixed straight path of `n` edges on
/// a 2-d torus has strictly decreasing wakeup ranks.
pub fn monotone_path_probability_mc(
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI, StatsError> {
    if n == 0 {
        return Err(StatsError::EmptyPath);
    }
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let side = (n + 2).max(8);
    let g = crate::graphs::lattice_box(2, side, Boundary::Periodic)?;
    // the horizontal path (0,0) -> (0,n) along row 0
    let path_edges: Vec<u32> = (0..n as u32)
        .map(|c| {
            g.neighbors(c)
                .iter()
                .find(|&&(x, _)| x == c + 1)
                .map(|&(_, e)| e)
                .expect("row edge")
        })
        .collect();
    let hits: Vec<u64> = per_replication(reps, |i| {
        let w = sample_wakeups(&g, seed, i);
        let monotone = path_edges.windows(2).all(|p| w.rank(p[0]) > w.rank(p[1]));
        u64::from(monotone)
    });
    let sum: u128 = hits.iter().map(|&h| h as u128).sum();
    let p = sum as f64 / reps as f64;
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    Ok(EstimateWithCI { estimate: p, std_error: se, replications: reps, seed })
}

/// One row of the dependence-radius tail table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiusTailRow {
    pub r: u32,
    pub empirical: f64,
    pub std_error: f64,
    /// Union-bound envelope (2 dim)^r / r!.
    pub bound: f64,
}

/// Empirical tail P(dependence radius >= r) over all edges and
/// replications of a periodic box, with the degree^r/r! envelope.
pub fn radius_tail(
    dim: usize,
    side: usize,
    reps: u64,
    seed: u64,
) -> Result<Vec<RadiusTailRow>, StatsError> {
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let g = crate::graphs::lattice_box(dim, side, Boundary::Periodic)?;
    let per_rep: Vec<Vec<u32>> = per_replication(reps, |i| {
        let w = sample_wakeups(&g, seed, i);
        let radii = dependence_radii(&g, &w);
        let max = radii.iter().copied().max().unwrap_or(0) as usize;
        // histogram of radii
        let mut hist = vec![0u32; max + 1];
        for &r in &radii {
            hist[r as usize] += 1;
        }
        hist
    });
    let max_r = per_rep.iter().map(|h| h.len()).max().unwrap_or(1) - 1;
    let edges = g.edge_count() as f64;
    let degree = (2 * dim) as f64;
    let mut rows = Vec::new();
    let mut bound = 1.0f64; // degree^r / r! updated incrementally
    for r in 1..=max_r as u32 {
        bound *= degree / r as f64;
        // per-replication tail fractions
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for hist in &per_rep {
            let tail: u32 = hist.iter().skip(r as usize).sum();
            let f = tail as f64 / edges;
            sum += f;
            sum_sq += f * f;
        }
        let rf = reps as f64;
        let mean = sum / rf;
        let var = (sum_sq - sum * sum / rf) / (rf - 1.0);
        rows.push(RadiusTailRow {
            r,
            empirical: mean,
            std_error: (var.max(0.0) / rf).sqrt(),
            bound,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact1d;
    use crate::oracle;
    use crate::graphs::path_graph;
    use num_traits::ToPrimitive;
    use std::collections::HashMap;

    #[test]
    fn density_matches_exact_on_path() {
        let spec = GraphSpec::Path { n: 100 };
        let est = density_estimate(&spec, 4000, 12).unwrap();
        let exact = exact1d::expected_monomers(100).to_f64().unwrap() / 100.0;
        assert!(est.within(exact, 3.0), "est={est:?} exact={exact}");
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn density_estimator_is_deterministic() {
        let spec = GraphSpec::Lattice { dim: 2, side: 16, boundary: Boundary::Periodic };
        let a = density_estimate(&spec, 200, 5).unwrap();
        let b = density_estimate(&spec, 200, 5).unwrap();
        assert_eq!(a, b);
        let c = density_estimate(&spec, 200, 6).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn density_rejects_tiny_reps() {
        let spec = GraphSpec::Path { n: 5 };
        assert!(matches!(
            density_estimate(&spec, 1, 0),
            Err(StatsError::TooFewReps { .. })
        ));
    }

    #[test]
    fn density_two_seed_consistency() {
        let spec = GraphSpec::Lattice { dim: 2, side: 32, boundary: Boundary::Periodic };
        let a = density_estimate(&spec, 400, 100).unwrap();
        let b = density_estimate(&spec, 400, 200).unwrap();
        let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 3.0 * pooled);
    }

    #[test]
    fn variance_estimate_matches_oracle_on_path4() {
        let spec = GraphSpec::Path { n: 4 };
        let est = variance_per_site_estimate(&spec, 100_000, 3).unwrap();
        // oracle variance 8/9, per site /4
        let want = 8.0 / 9.0 / 4.0;
        assert!(est.within(want, 3.0), "est={est:?} want={want}");
    }

    #[test]
    fn variance_estimate_matches_corrected_recurrence() {
        let n = 1000;
        let spec = GraphSpec::Path { n };
        let est = variance_per_site_estimate(&spec, 10_000, 17).unwrap();
        let want = exact1d::variance_corrected_recurrence(n).to_f64().unwrap() / n as f64;
        assert!(est.within(want, 3.0), "est={est:?} want={want}");
    }

    #[test]
    fn monotone_path_law() {
        assert_eq!(monotone_path_probability_mc(1, 100, 0).unwrap().estimate, 1.0);
        for n in 2..=5usize {
            let est = monotone_path_probability_mc(n, 200_000, 9).unwrap();
            let want = 1.0 / (1..=n).product::<usize>() as f64;
            assert!(est.within(want, 3.0), "n={n} est={est:?} want={want}");
        }
    }

    #[test]
    fn radius_tail_respects_envelope() {
        let rows = radius_tail(2, 32, 50, 4).unwrap();
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(
                row.empirical <= row.bound + 3.0 * row.std_error,
                "row {row:?}"
            );
        }
        // every edge is a length-1 walk, so the tail starts at exactly 1
        assert_eq!(rows[0].empirical, 1.0);
        // beyond that the tail is strictly inside (0, 1)
        assert!(rows[1].empirical < 1.0);
        assert!(rows[1].empirical > 0.0);
    }

    #[test]
    fn engine_law_matches_oracle_tv() {
        // empirical law on a small path within the 4/sqrt(reps) envelope
        let g = path_graph(8);
        let reps = 100_000u64;
        let counts_vec = per_configuration(&g, reps, 42, |_, c| c.monomer_count() as u32);
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for c in counts_vec {
            *counts.entry(c).or_insert(0) += 1;
        }
        let law = oracle::exact_distribution(&g).unwrap();
        let tv = law.tv_distance_to_counts(&counts, reps);
        assert!(tv < 4.0 / (reps as f64).sqrt(), "tv={tv}");
    }

    #[test]
    fn float_key_sampling_matches_oracle_tv() {
        use crate::engine::WakeupAssignment;
        use rand::{RngCore, SeedableRng};
        let g = path_graph(8);
        let reps = 100_000u64;
        let counts_vec: Vec<u32> = per_replication(reps, |i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            rng.set_stream(i);
            let keys: Vec<u64> = (0..g.edge_count()).map(|_| rng.next_u64()).collect();
            let w = WakeupAssignment::from_keys(&g, &keys).unwrap();
            run_rsa(&g, &w).unwrap().monomer_count() as u32
        });
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for c in counts_vec {
            *counts.entry(c).or_insert(0) += 1;
        }
        let law = oracle::exact_distribution(&g).unwrap();
        let tv = law.tv_distance_to_counts(&counts, reps);
        assert!(tv < 4.0 / (reps as f64).sqrt(), "tv={tv}");
    }

    #[test]
    fn density_calibration_meta_trial() {
        // 100 independent meta-trials at n=100; at least 99 must land
        // within 3 standard errors of the exact value
        let exact = exact1d::expected_monomers(100).to_f64().unwrap() / 100.0;
        let spec = GraphSpec::Path { n: 100 };
        let mut hits = 0;
        for trial in 0..100u64 {
            let est = density_estimate(&spec, 400, 7000 + trial).unwrap();
            if est.within(exact, 3.0) {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 calibrated");
    }
}
