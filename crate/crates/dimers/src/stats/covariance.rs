//! Pair covariance of monomer indicators on a periodic box.
//!
//! The full correlation surface sum_v X_v X_{v+rho} is recovered per
//! replication through an FFT over the torus. The raw correlations are
//! integer counts, so the inverse transform is rounded back to exact
//! integers; every replication therefore contributes exact numbers and the
//! estimator stays deterministic.

use rustfft::{num_complex::Complex, FftPlanner};

use super::{per_configuration, EstimateWithCI, StatsError};
use crate::graphs::{lattice_box, Boundary};

/// Offsets are summed while the union-bound envelope degree^r/r! stays
/// above this cutoff.
pub const SIGMA2_ENVELOPE_CUTOFF: f64 = 1e-12;

/// Circular autocorrelation counts of a 0/1 field on a dim-dimensional
/// torus: out[rho] = sum_v field[v] * field[v + rho], for every offset.
fn torus_autocorrelation_counts(field: &[u8], dim: usize, side: usize) -> Vec<u64> {
    let v: usize = side.pow(dim as u32);
    assert_eq!(field.len(), v);
    let mut buf: Vec<Complex<f64>> =
        field.iter().map(|&x| Complex::new(x as f64, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(side);
    let inverse = planner.plan_fft_inverse(side);

    // one strided pass per axis; the last axis varies fastest
    let mut line = vec![Complex::new(0.0, 0.0); side];
    let mut pass = |buf: &mut [Complex<f64>], fft: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for axis in 0..dim {
            let stride = side.pow((dim - 1 - axis) as u32);
            let block = stride * side;
            for base in 0..v / block {
                for inner in 0..stride {
                    let start = base * block + inner;
                    for k in 0..side {
                        line[k] = buf[start + k * stride];
                    }
                    fft.process(&mut line);
                    for k in 0..side {
                        buf[start + k * stride] = line[k];
                    }
                }
            }
        }
    };

    pass(&mut buf, &forward);
    for z in buf.iter_mut() {
        *z *= z.conj();
    }
    pass(&mut buf, &inverse);
    let scale = 1.0 / v as f64;
    buf.iter()
        .map(|z| {
            let x = z.re * scale;
            debug_assert!((x - x.round()).abs() < 1e-3, "non-integer correlation {x}");
            x.round() as u64
        })
        .collect()
}

/// Torus l1 distance of each offset id, row-major decoding.
fn offset_distances(dim: usize, side: usize) -> Vec<u32> {
    let v: usize = side.pow(dim as u32);
    (0..v)
        .map(|mut id| {
            let mut d = 0u32;
            for _ in 0..dim {
                let c = id % side;
                d += c.min(side - c) as u32;
                id /= side;
            }
            d
        })
        .collect()
}

struct TorusAccum {
    /// Total monomer count per replication.
    totals: Vec<u64>,
    /// per_r[i][r] = sum over offsets at distance r of the correlation counts.
    per_r: Vec<Vec<u64>>,
    /// Number of offsets at each distance.
    offsets_per_r: Vec<u64>,
    vertex_count: usize,
}

fn torus_accumulate(
    dim: usize,
    side: usize,
    reps: u64,
    seed: u64,
    r_cap: u32,
) -> Result<TorusAccum, StatsError> {
    if reps < 2 {
        return Err(StatsError::TooFewReps { need: 2, got: reps });
    }
    let g = lattice_box(dim, side, Boundary::Periodic)?;
    let v = g.vertex_count();
    let dist = offset_distances(dim, side);
    let mut offsets_per_r = vec![0u64; r_cap as usize + 1];
    for &d in &dist {
        if d <= r_cap {
            offsets_per_r[d as usize] += 1;
        }
    }
    let rows: Vec<(u64, Vec<u64>)> = per_configuration(&g, reps, seed, |_, c| {
        let field: Vec<u8> = (0..v as u32).map(|x| u8::from(c.is_monomer(x))).collect();
        let corr = torus_autocorrelation_counts(&field, dim, side);
        let mut by_r = vec![0u64; r_cap as usize + 1];
        for (off, &count) in corr.iter().enumerate() {
            let d = dist[off];
            if d <= r_cap {
                by_r[d as usize] += count;
            }
        }
        let total = c.monomer_count() as u64;
        (total, by_r)
    });
    let mut totals = Vec::with_capacity(rows.len());
    let mut per_r = Vec::with_capacity(rows.len());
    for (t, row) in rows {
        totals.push(t);
        per_r.push(row);
    }
    Ok(TorusAccum { totals, per_r, offsets_per_r, vertex_count: v })
}

/// Jackknife standard error of an estimator over replications given the
/// leave-one-out values.
fn jackknife_se(loo: &[f64]) -> f64 {
    let r = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / r;
    ((r - 1.0) / r * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>())
        .max(0.0)
        .sqrt()
}

/// Empirical covariance of the monomer field against torus l1 separation,
/// averaged over translations and over all offsets at each distance.
pub fn covariance_curve(
    dim: usize,
    side: usize,
    reps: u64,
    max_sep: u32,
    seed: u64,
) -> Result<Vec<(u32, EstimateWithCI)>, StatsError> {
    let limit = (side / 2) as u32;
    if max_sep >= limit {
        return Err(StatsError::SeparationTooLarge { max_sep, limit });
    }
    let acc = torus_accumulate(dim, side, reps, seed, max_sep)?;
    let v = acc.vertex_count as f64;
    let r_f = reps as f64;
    let t_sum: u128 = acc.totals.iter().map(|&t| t as u128).sum();
    let mut out = Vec::new();
    for r in 0..=max_sep {
        let n_r = acc.offsets_per_r[r as usize] as f64;
        let a_sum: u128 = acc.per_r.iter().map(|row| row[r as usize] as u128).sum();
        let estimate =
            a_sum as f64 / (r_f * v * n_r) - (t_sum as f64 / (r_f * v)).powi(2);
        let loo: Vec<f64> = acc
            .totals
            .iter()
            .zip(acc.per_r.iter())
            .map(|(&t, row)| {
                let a_i = (a_sum - row[r as usize] as u128) as f64;
                let t_i = (t_sum - t as u128) as f64;
                a_i / ((r_f - 1.0) * v * n_r) - (t_i / ((r_f - 1.0) * v)).powi(2)
            })
            .collect();
        out.push((
            r,
            EstimateWithCI {
                estimate,
                std_error: jackknife_se(&loo),
                replications: reps,
                seed,
            },
        ));
    }
    Ok(out)
}

/// Truncation radius for the covariance sum: smallest r whose envelope
/// degree^r/r! falls below [`SIGMA2_ENVELOPE_CUTOFF`], capped at the
/// largest torus separation.
fn sigma2_radius(dim: usize, side: usize) -> u32 {
    let degree = (2 * dim) as f64;
    let mut bound = 1.0f64;
    let mut r = 0u32;
    let max_dist = (dim * (side / 2)) as u32;
    while bound >= SIGMA2_ENVELOPE_CUTOFF && r < max_dist {
        r += 1;
        bound *= degree / r as f64;
    }
    r
}

/// Truncated covariance sum sigma^2 = sum_rho Cov(X_0, X_rho) over all
/// offsets whose separation keeps the envelope above the cutoff.
pub fn sigma2_estimate(
    dim: usize,
    side: usize,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI, StatsError> {
    let r_star = sigma2_radius(dim, side);
    let acc = torus_accumulate(dim, side, reps, seed, r_star)?;
    let v = acc.vertex_count as f64;
    let r_f = reps as f64;
    let n_tot: u64 = acc.offsets_per_r.iter().sum();
    let t_sum: u128 = acc.totals.iter().map(|&t| t as u128).sum();
    let u_sum: u128 = acc
        .per_r
        .iter()
        .map(|row| row.iter().map(|&x| x as u128).sum::<u128>())
        .sum();
    let estimate =
        u_sum as f64 / (r_f * v) - n_tot as f64 * (t_sum as f64 / (r_f * v)).powi(2);
    let loo: Vec<f64> = acc
        .totals
        .iter()
        .zip(acc.per_r.iter())
        .map(|(&t, row)| {
            let u_i = (u_sum - row.iter().map(|&x| x as u128).sum::<u128>()) as f64;
            let t_i = (t_sum - t as u128) as f64;
            u_i / ((r_f - 1.0) * v) - n_tot as f64 * (t_i / ((r_f - 1.0) * v)).powi(2)
        })
        .collect();
    Ok(EstimateWithCI {
        estimate,
        std_error: jackknife_se(&loo),
        replications: reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphSpec;
    use crate::oracle;
    use crate::stats::variance_per_site_estimate;
    use num_traits::ToPrimitive;

    #[test]
    fn fft_counts_match_naive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for (dim, side) in [(1usize, 9usize), (2, 8), (2, 7), (3, 4)] {
            let v = side.pow(dim as u32);
            for _ in 0..3 {
                let field: Vec<u8> = (0..v).map(|_| rng.random_range(0..=1u8)).collect();
                let fft = torus_autocorrelation_counts(&field, dim, side);
                // naive circular correlation
                let coords = |mut id: usize| -> Vec<usize> {
                    let mut c = vec![0; dim];
                    for a in (0..dim).rev() {
                        c[a] = id % side;
                        id /= side;
                    }
                    c
                };
                let encode = |c: &[usize]| -> usize {
                    c.iter().fold(0, |acc, &x| acc * side + x)
                };
                for off in 0..v {
                    let oc = coords(off);
                    let mut want = 0u64;
                    for v_id in 0..v {
                        let vc = coords(v_id);
                        let shifted: Vec<usize> =
                            vc.iter().zip(&oc).map(|(&a, &b)| (a + b) % side).collect();
                        want += (field[v_id] * field[encode(&shifted)]) as u64;
                    }
                    assert_eq!(fft[off], want, "dim={dim} side={side} off={off}");
                }
            }
        }
    }

    #[test]
    fn offset_distances_wrap() {
        let d = offset_distances(2, 6);
        // offset (0,1) -> 1; (0,5) wraps to 1; (3,3) -> 6
        assert_eq!(d[1], 1);
        assert_eq!(d[5], 1);
        assert_eq!(d[3 * 6 + 3], 6);
        assert_eq!(d[0], 0);
    }

    #[test]
    fn covariance_at_zero_is_bernoulli_variance() {
        let curve = covariance_curve(2, 16, 400, 4, 21).unwrap();
        let spec = GraphSpec::Lattice { dim: 2, side: 16, boundary: crate::graphs::Boundary::Periodic };
        let density = crate::stats::density_estimate(&spec, 400, 21).unwrap();
        let p = density.estimate;
        let want = p * (1.0 - p);
        let got = curve[0].1.estimate;
        assert!((got - want).abs() < 1e-9, "got={got} want={want}");
    }

    #[test]
    fn covariance_respects_envelope() {
        let curve = covariance_curve(2, 32, 600, 9, 33).unwrap();
        let mut bound = 1.0;
        for (r, est) in &curve {
            if *r > 0 {
                bound *= 4.0 / *r as f64;
            }
            assert!(
                est.estimate.abs() <= bound + 3.0 * est.std_error,
                "r={r} est={est:?} bound={bound}"
            );
        }
        // covariance beyond the observed dependence range is zero within noise
        let far = &curve.last().unwrap().1;
        assert!(far.estimate.abs() <= 3.0 * far.std_error.max(1e-6), "far={far:?}");
    }

    #[test]
    fn covariance_matches_oracle_on_ring() {
        // periodic 1-d box: compare Cov(X_0, X_2) against the exact pair law
        let n = 9usize;
        let g = crate::graphs::lattice_box(1, n, crate::graphs::Boundary::Periodic).unwrap();
        let law = oracle::exact_distribution(&g).unwrap();
        let p_single = law.mean().to_f64().unwrap() / n as f64;
        let pair = oracle::exact_pair_uncovered(&g, 0, 2).unwrap().to_f64().unwrap();
        let want = pair - p_single * p_single;
        let curve = covariance_curve(1, n, 60_000, 3, 55).unwrap();
        let got = &curve[2].1;
        assert!(got.within(want, 3.0), "got={got:?} want={want}");
    }

    #[test]
    fn sigma2_positive_and_consistent() {
        let est = sigma2_estimate(2, 32, 1500, 77).unwrap();
        assert!(est.excludes_zero(2.576), "sigma2={est:?}");
        // agreement with the variance-of-totals estimator
        let spec = GraphSpec::Lattice { dim: 2, side: 32, boundary: crate::graphs::Boundary::Periodic };
        let var = variance_per_site_estimate(&spec, 1500, 78).unwrap();
        let pooled = (est.std_error.powi(2) + var.std_error.powi(2)).sqrt();
        assert!(
            (est.estimate - var.estimate).abs() <= 3.0 * pooled,
            "sigma2={est:?} var={var:?}"
        );
    }

    #[test]
    fn sigma2_radius_cutoff() {
        // 4^r/r! falls below 1e-12 at r = 28 in two dimensions
        assert_eq!(sigma2_radius(2, 64), 28);
        // capped by the torus diameter on small boxes
        assert_eq!(sigma2_radius(2, 8), 8);
    }

    #[test]
    fn rejects_separation_beyond_half_side() {
        assert!(matches!(
            covariance_curve(2, 16, 10, 8, 0),
            Err(StatsError::SeparationTooLarge { .. })
        ));
    }
}
