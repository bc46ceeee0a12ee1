//! Exact distribution of the monomer count on small graphs.
//!
//! Conditioned on the past, the next effective placement of the wakeup
//! process is uniform over the currently placeable edges, so the law of the
//! jammed state is computed by dynamic programming over the set of alive
//! (uncovered) vertices instead of summing over all |E|! wakeup orders.
//! A direct permutation-summation implementation cross-validates this
//! equivalence in tests.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graphs::Graph;

/// Default vertex cap for the mask DP; configurable up to [`MASK_CAP`].
pub const DEFAULT_VERTEX_CAP: usize = 26;
/// Hard limit imposed by the u64 alive mask.
pub const MASK_CAP: usize = 63;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {got} vertices, exceeding the cap of {cap}")]
    GraphTooLarge { got: usize, cap: usize },
    #[error("graph has {got} edges, permutation summation allows at most {cap}")]
    TooManyEdges { got: usize, cap: usize },
    #[error("vertex id {0} out of range")]
    InvalidVertex(u32),
    #[error("pair probability requires two distinct vertices")]
    NotAPair,
}

/// Exact law of the monomer count: map from count to rational probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    probs: Vec<(u32, BigRational)>,
}

impl ExactDistribution {
    fn from_map(map: HashMap<u32, BigRational>) -> Self {
        let mut probs: Vec<_> = map.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        probs.sort_unstable_by_key(|&(m, _)| m);
        ExactDistribution { probs }
    }

    /// Support points and probabilities, ascending by monomer count.
    pub fn probs(&self) -> &[(u32, BigRational)] {
        &self.probs
    }

    pub fn prob(&self, m: u32) -> BigRational {
        self.probs
            .iter()
            .find(|&&(k, _)| k == m)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_mass(&self) -> BigRational {
        self.probs.iter().map(|(_, p)| p).sum()
    }

    /// k-th raw moment, exact.
    pub fn moment(&self, k: u32) -> BigRational {
        self.probs
            .iter()
            .map(|(m, p)| BigRational::from(BigInt::from(*m).pow(k)) * p)
            .sum()
    }

    pub fn mean(&self) -> BigRational {
        self.moment(1)
    }

    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        self.moment(2) - &mean * &mean
    }

    /// Moment generating function at `lambda`, evaluated in f64.
    pub fn mgf(&self, lambda: f64) -> f64 {
        self.probs
            .iter()
            .map(|(m, p)| (lambda * *m as f64).exp() * p.to_f64().unwrap())
            .sum()
    }

    /// Total variation distance to an empirical law given as counts.
    pub fn tv_distance_to_counts(&self, counts: &HashMap<u32, u64>, total: u64) -> f64 {
        let mut support: Vec<u32> = self.probs.iter().map(|&(m, _)| m).collect();
        support.extend(counts.keys());
        support.sort_unstable();
        support.dedup();
        0.5 * support
            .iter()
            .map(|m| {
                let p = self.prob(*m).to_f64().unwrap();
                let q = *counts.get(m).unwrap_or(&0) as f64 / total as f64;
                (p - q).abs()
            })
            .sum::<f64>()
    }
}

fn check_cap(g: &Graph, cap: usize) -> Result<(), OracleError> {
    let cap = cap.min(MASK_CAP);
    if g.vertex_count() > cap {
        return Err(OracleError::GraphTooLarge { got: g.vertex_count(), cap });
    }
    Ok(())
}

fn alive_edges(g: &Graph, mask: u64) -> Vec<(u32, u32)> {
    g.edges()
        .iter()
        .copied()
        .filter(|&(u, v)| mask & (1 << u) != 0 && mask & (1 << v) != 0)
        .collect()
}

/// Exact law of the monomer count under the uniform wakeup order.
pub fn exact_distribution(g: &Graph) -> Result<ExactDistribution, OracleError> {
    exact_distribution_with_cap(g, DEFAULT_VERTEX_CAP)
}

/// Same as [`exact_distribution`] with an explicit vertex cap (at most 63).
pub fn exact_distribution_with_cap(
    g: &Graph,
    cap: usize,
) -> Result<ExactDistribution, OracleError> {
    check_cap(g, cap)?;
    let full: u64 = if g.vertex_count() == 0 { 0 } else { (1u64 << g.vertex_count()) - 1 };
    let mut memo: HashMap<u64, HashMap<u32, BigRational>> = HashMap::new();
    let law = dist_rec(g, full, &mut memo);
    Ok(ExactDistribution::from_map(law.clone()))
}

fn dist_rec<'a>(
    g: &Graph,
    mask: u64,
    memo: &'a mut HashMap<u64, HashMap<u32, BigRational>>,
) -> &'a HashMap<u32, BigRational> {
    if !memo.contains_key(&mask) {
        let placeable = alive_edges(g, mask);
        let law = if placeable.is_empty() {
            HashMap::from([(mask.count_ones(), BigRational::one())])
        } else {
            let weight = BigRational::new(BigInt::one(), BigInt::from(placeable.len()));
            let mut acc: HashMap<u32, BigRational> = HashMap::new();
            for (u, v) in placeable {
                let child = mask & !(1 << u) & !(1 << v);
                let child_law = dist_rec(g, child, memo).clone();
                for (m, p) in child_law {
                    *acc.entry(m).or_insert_with(BigRational::zero) += p * &weight;
                }
            }
            acc
        };
        memo.insert(mask, law);
    }
    memo.get(&mask).unwrap()
}

/// Exact k-th moment of the monomer count.
pub fn exact_moment(g: &Graph, k: u32) -> Result<BigRational, OracleError> {
    Ok(exact_distribution(g)?.moment(k))
}

/// Exact moment generating function E[exp(lambda X)] in f64.
pub fn exact_mgf(g: &Graph, lambda: f64) -> Result<f64, OracleError> {
    Ok(exact_distribution(g)?.mgf(lambda))
}

/// Probability that both `u` and `v` end uncovered, by expectation DP over
/// the same recursion with the pair indicator evaluated at absorption.
pub fn exact_pair_uncovered(g: &Graph, u: u32, v: u32) -> Result<BigRational, OracleError> {
    check_cap(g, DEFAULT_VERTEX_CAP)?;
    if u == v {
        return Err(OracleError::NotAPair);
    }
    if u as usize >= g.vertex_count() || v as usize >= g.vertex_count() {
        return Err(OracleError::InvalidVertex(u.max(v)));
    }
    let full: u64 = if g.vertex_count() == 0 { 0 } else { (1u64 << g.vertex_count()) - 1 };
    let pair = (1u64 << u) | (1u64 << v);
    let mut memo: HashMap<u64, BigRational> = HashMap::new();
    Ok(pair_rec(g, full, pair, &mut memo))
}

fn pair_rec(
    g: &Graph,
    mask: u64,
    pair: u64,
    memo: &mut HashMap<u64, BigRational>,
) -> BigRational {
    if pair & mask != pair {
        // one of the pair is covered; the indicator is already 0
        return BigRational::zero();
    }
    if let Some(p) = memo.get(&mask) {
        return p.clone();
    }
    let placeable = alive_edges(g, mask);
    let value = if placeable.is_empty() {
        BigRational::one()
    } else {
        let weight = BigRational::new(BigInt::one(), BigInt::from(placeable.len()));
        let mut acc = BigRational::zero();
        for (a, b) in placeable {
            let child = mask & !(1 << a) & !(1 << b);
            acc += pair_rec(g, child, pair, memo) * &weight;
        }
        acc
    };
    memo.insert(mask, value.clone());
    value
}

/// Independent cross-check: the law obtained by averaging the greedy sweep
/// over every one of the |E|! wakeup permutations. Exponential; |E| <= 8.
pub fn exact_distribution_by_permutations(g: &Graph) -> Result<ExactDistribution, OracleError> {
    const EDGE_CAP: usize = 8;
    if g.edge_count() > EDGE_CAP {
        return Err(OracleError::TooManyEdges { got: g.edge_count(), cap: EDGE_CAP });
    }
    let m = g.edge_count();
    let mut order: Vec<u32> = (0..m as u32).collect();
    let mut counts: HashMap<u32, u64> = HashMap::new();
    let mut total = 0u64;
    permute(&mut order, 0, &mut |perm| {
        let mut covered = vec![false; g.vertex_count()];
        for &e in perm {
            let (u, v) = g.endpoints(e);
            if !covered[u as usize] && !covered[v as usize] {
                covered[u as usize] = true;
                covered[v as usize] = true;
            }
        }
        let monomers = covered.iter().filter(|&&c| !c).count() as u32;
        *counts.entry(monomers).or_insert(0) += 1;
        total += 1;
    });
    let total = BigRational::from(BigInt::from(total.max(1)));
    let map = counts
        .into_iter()
        .map(|(monomer, c)| (monomer, BigRational::from(BigInt::from(c)) / &total))
        .collect();
    Ok(ExactDistribution::from_map(map))
}

fn permute(items: &mut Vec<u32>, k: usize, visit: &mut impl FnMut(&[u32])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{cycle_graph, lattice_box, path_graph, regular_tree, Boundary};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn path4_law() {
        let d = exact_distribution(&path_graph(4)).unwrap();
        assert_eq!(d.probs(), &[(0, rat(2, 3)), (2, rat(1, 3))]);
        assert_eq!(d.mean(), rat(2, 3));
        assert_eq!(d.variance(), rat(8, 9));
        assert_eq!(d.moment(2), rat(4, 3));
        assert_eq!(d.moment(0), rat(1, 1));
    }

    #[test]
    fn tiny_paths() {
        let d = exact_distribution(&path_graph(2)).unwrap();
        assert_eq!(d.probs(), &[(0, rat(1, 1))]);
        let d = exact_distribution(&path_graph(3)).unwrap();
        assert_eq!(d.probs(), &[(1, rat(1, 1))]);
        let d = exact_distribution(&path_graph(0)).unwrap();
        assert_eq!(d.probs(), &[(0, rat(1, 1))]);
        let d = exact_distribution(&path_graph(1)).unwrap();
        assert_eq!(d.probs(), &[(1, rat(1, 1))]);
    }

    #[test]
    fn cycle4_has_no_monomers() {
        let d = exact_distribution(&cycle_graph(4).unwrap()).unwrap();
        assert_eq!(d.probs(), &[(0, rat(1, 1))]);
    }

    #[test]
    fn mass_sums_to_one() {
        for g in [
            path_graph(9),
            cycle_graph(7).unwrap(),
            lattice_box(2, 3, Boundary::Free).unwrap(),
            regular_tree(3, 2).unwrap(),
        ] {
            let d = exact_distribution(&g).unwrap();
            assert_eq!(d.total_mass(), rat(1, 1));
            assert!(d.probs().iter().all(|(_, p)| p > &BigRational::zero()));
        }
    }

    #[test]
    fn mgf_examples() {
        let d = exact_distribution(&path_graph(4)).unwrap();
        let want = 2.0 / 3.0 + std::f64::consts::E.powi(2) / 3.0;
        assert!((d.mgf(1.0) - want).abs() < 1e-12);
        assert!((d.mgf(0.0) - 1.0).abs() < 1e-15);
        let d1 = exact_distribution(&path_graph(1)).unwrap();
        for lam in [-1.0, 0.5, 2.0] {
            assert!((d1.mgf(lam) - lam.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_uncovered_examples() {
        let g = path_graph(4);
        assert_eq!(exact_pair_uncovered(&g, 0, 3).unwrap(), rat(1, 3));
        assert_eq!(exact_pair_uncovered(&g, 3, 0).unwrap(), rat(1, 3));
        let g = path_graph(2);
        assert_eq!(exact_pair_uncovered(&g, 0, 1).unwrap(), rat(0, 1));
        let g = path_graph(3);
        assert_eq!(exact_pair_uncovered(&g, 0, 2).unwrap(), rat(0, 1));
        assert!(exact_pair_uncovered(&g, 1, 1).is_err());
    }

    #[test]
    fn permutation_summation_agrees_with_dp() {
        for g in [
            path_graph(5),
            path_graph(6),
            cycle_graph(6).unwrap(),
            cycle_graph(5).unwrap(),
            regular_tree(3, 1).unwrap(),
            lattice_box(2, 3, Boundary::Free).unwrap(),
        ] {
            if g.edge_count() > 8 {
                continue;
            }
            let dp = exact_distribution(&g).unwrap();
            let perm = exact_distribution_by_permutations(&g).unwrap();
            assert_eq!(dp, perm, "graph with {} vertices", g.vertex_count());
        }
    }

    #[test]
    fn permutation_summation_rejects_large() {
        assert!(exact_distribution_by_permutations(&path_graph(12)).is_err());
    }

    #[test]
    fn size_cap_enforced() {
        let g = path_graph(27);
        assert_eq!(
            exact_distribution(&g),
            Err(OracleError::GraphTooLarge { got: 27, cap: 26 })
        );
        assert!(exact_distribution_with_cap(&g, 30).is_ok());
        // the mask cap cannot be exceeded even with a generous cap
        let big = path_graph(64);
        assert!(exact_distribution_with_cap(&big, 64).is_err());
    }
}
