//! The three-term concentration bound for the centered monomer average.
//!
//! For a box of side n in `dim` dimensions with degree bound d = 2 dim and
//! truncation radius r,
//!
//!   P(|S_n| > eps) <= r^dim * exp(-(eps/3)^2 * floor(n/r)^dim)
//!                   + (3/eps) * d^r/r!
//!                   + [d^r/r! > eps/3]
//!
//! The first term is a Chernoff union bound over the r^dim residue classes
//! of truncated indicators, the second controls how often truncated and
//! full indicators disagree, and the indicator term is the deterministic
//! bias clause: it vanishes exactly when d^r/r! <= eps/3. Degree and
//! dimension enter separately.

use serde::{Deserialize, Serialize};

use super::{per_configuration, StatsError};
use crate::graphs::GraphSpec;

/// Evaluates the bound; values above 1 are vacuous but returned as-is.
pub fn concentration_bound(n: usize, dim: usize, r: usize, eps: f64) -> f64 {
    assert!(n >= 1 && r >= 1 && dim >= 1, "n, r, dim must be positive");
    assert!(eps > 0.0, "eps must be positive");
    let degree = (2 * dim) as f64;
    let mut envelope = 1.0f64; // degree^r / r!
    for k in 1..=r {
        envelope *= degree / k as f64;
    }
    let classes = (r as f64).powi(dim as i32);
    let block = ((n / r) as f64).powi(dim as i32);
    let chernoff = classes * (-(eps / 3.0) * (eps / 3.0) * block).exp();
    let indicator = if envelope <= eps / 3.0 { 0.0 } else { 1.0 };
    chernoff + 3.0 / eps * envelope + indicator
}

/// Empirical exceedance of the centered monomer average against the bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceedanceCheck {
    pub spec: GraphSpec,
    pub eps: f64,
    pub r: usize,
    pub bound: f64,
    pub empirical: f64,
    pub replications: u64,
    pub seed: u64,
    /// empirical <= bound whenever the bound is informative (< 1).
    pub holds: bool,
}

/// Estimates P(|S_n| > eps) with S_n centered at the pooled mean, and
/// compares it against [`concentration_bound`] at radius r.
pub fn empirical_exceedance(
    spec: &GraphSpec,
    dim: usize,
    n: usize,
    r: usize,
    eps: f64,
    reps: u64,
    seed: u64,
) -> Result<ExceedanceCheck, StatsError> {
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let g = spec.build()?;
    let totals: Vec<u64> =
        per_configuration(&g, reps, seed, |_, c| c.monomer_count() as u64);
    let v = g.vertex_count() as f64;
    let sum: u128 = totals.iter().map(|&t| t as u128).sum();
    let mean = sum as f64 / reps as f64;
    let exceed = totals
        .iter()
        .filter(|&&t| ((t as f64 - mean) / v).abs() > eps)
        .count();
    let empirical = exceed as f64 / reps as f64;
    let bound = concentration_bound(n, dim, r, eps);
    Ok(ExceedanceCheck {
        spec: *spec,
        eps,
        r,
        bound,
        empirical,
        replications: reps,
        seed,
        holds: bound >= 1.0 || empirical <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Boundary;

    #[test]
    fn vacuous_when_envelope_dominates() {
        // small r: 4^r/r! > eps/3, so the indicator term alone gives >= 1
        let b = concentration_bound(64, 2, 3, 0.5);
        assert!(b >= 1.0, "b={b}");
    }

    #[test]
    fn decays_with_n_at_log_radius() {
        let eps = 0.15;
        let mut prev = f64::INFINITY;
        let mut saw_informative = false;
        for n in [1_000usize, 10_000, 100_000, 1_000_000] {
            let r = (n as f64).ln().ceil() as usize;
            let b = concentration_bound(n, 1, r, eps);
            assert!(b <= prev + 1e-12, "n={n} b={b} prev={prev}");
            if b < 1.0 {
                saw_informative = true;
            }
            prev = b;
        }
        assert!(saw_informative);
    }

    #[test]
    fn empirical_below_informative_bound() {
        let n = 100_000usize;
        let r = (n as f64).ln().ceil() as usize; // 12
        let eps = 0.1;
        let bound = concentration_bound(n, 1, r, eps);
        assert!(bound < 1.0, "bound={bound}");
        let spec = GraphSpec::Path { n };
        let check = empirical_exceedance(&spec, 1, n, r, eps, 200, 8).unwrap();
        assert!(check.holds, "{check:?}");
        assert!(check.empirical <= bound);
    }

    #[test]
    fn empirical_2d_below_bound() {
        let side = 120usize;
        let r = (side as f64).ln().ceil() as usize; // 5
        let eps = 0.9;
        let bound = concentration_bound(side, 2, r, eps);
        let spec = GraphSpec::Lattice { dim: 2, side, boundary: Boundary::Periodic };
        let check = empirical_exceedance(&spec, 2, side, r, eps, 100, 9).unwrap();
        assert!(check.holds, "{check:?}");
    }
}
