//! Exact analytics for dimer placement on a segment.
//!
//! Everything driven by recurrences is computed in exact rational
//! arithmetic; only the moment generating function, whose coefficients are
//! transcendental in lambda, uses high-precision floats (default 200 bits,
//! growing with the requested order). That keeps exactness claims separate
//! from precision claims.
//!
//! The expectation satisfies e_n = (2/(n-1)) * sum_{k<=n-2} e_k with
//! e_0 = 0, e_1 = 1, equivalently (n+1) e_{n+2} - n e_{n+1} = 2 e_n. For
//! the variance two recurrences are provided: `variance_paper_recurrence`
//! drops the cross term and collapses to zero, while
//! `variance_corrected_recurrence` keeps it,
//!
//!   Var_n = (2/(n-1)) sum_k Var_k
//!         + (1/(n-1)) sum_k (e_k + e_{n-2-k})^2 - e_n^2,
//!
//! and is gated against exhaustive enumeration on small segments before
//! being trusted at large n.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graphs::path_graph;
use crate::oracle;
use crate::series::{interpolate_polynomial, Coeff, Series};

#[derive(Debug, Error, PartialEq)]
pub enum Exact1dError {
    #[error("lambda must be finite, got {0}")]
    NonFiniteLambda(f64),
    #[error("series precision fell to {digits:.1} significant digits (need >= {required}) at order {order}; raise the precision")]
    PrecisionLoss { digits: f64, required: u32, order: usize },
}

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

fn rational(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

/// Expected monomer counts e_0..e_n, exact.
///
/// Computed through the integer-scaled form of the three-term recurrence:
/// with P_n = e_n * n!, (n+1) P_{n+2} = n (n+2) P_{n+1} + 2 (n+1)(n+2) P_n
/// divided by (n+1) stays integral, so the whole sweep runs on BigInt with
/// one rational reduction per returned value.
pub fn expected_monomers_upto(n: usize) -> Vec<BigRational> {
    let scaled = scaled_expectations(n);
    let mut fact = BigInt::one();
    scaled
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if k > 1 {
                fact *= big(k as u64);
            }
            rational(p.clone(), fact.clone())
        })
        .collect()
}

/// e_n = expected monomer count on a segment of n sites, exact.
pub fn expected_monomers(n: usize) -> BigRational {
    let p = scaled_expectations(n).pop().expect("nonempty");
    let mut fact = BigInt::one();
    for k in 2..=n as u64 {
        fact *= big(k);
    }
    rational(p, fact)
}

/// P_k = e_k * k! for k = 0..=n.
fn scaled_expectations(n: usize) -> Vec<BigInt> {
    let mut p: Vec<BigInt> = Vec::with_capacity(n + 1);
    p.push(BigInt::zero()); // e_0 = 0
    if n >= 1 {
        p.push(BigInt::one()); // e_1 = 1
    }
    for m in 2..=n {
        // index shift: m = k + 2
        let k = (m - 2) as u64;
        let num = big(k) * big(k + 2) * &p[m - 1] + big(2) * big(k + 1) * big(k + 2) * &p[m - 2];
        p.push(num / big(k + 1));
    }
    p
}

/// The alternating closed form e_n = sum_{k=0}^n (n-k) (-2)^k / k!, exact.
pub fn expected_monomers_closed_form(n: usize) -> BigRational {
    let mut term = BigRational::one(); // (-2)^k / k!
    let mut sum_a = BigRational::zero(); // sum of terms
    let mut sum_b = BigRational::zero(); // sum of k * term
    for k in 0..=n {
        if k > 0 {
            term *= rational(big(2), big(k as u64));
            term = -term;
        }
        sum_a += &term;
        sum_b += rational(big(k as u64), BigInt::one()) * &term;
    }
    rational(big(n as u64), BigInt::one()) * sum_a - sum_b
}

/// Limiting monomer density on the line, e^{-2} (about 13.5%).
pub fn density_limit() -> f64 {
    (-2.0f64).exp()
}

/// The variance recurrence exactly as printed: Var_n = (2/(n-1)) sum Var_k
/// with Var_0 = Var_1 = 0. Both seeds are forced (X_0 and X_1 are
/// deterministic), and with them the recurrence is identically zero; the
/// operation exists to document that collapse next to the corrected form.
pub fn variance_paper_recurrence(n: usize) -> BigRational {
    let mut prefix = BigRational::zero();
    let mut var = BigRational::zero();
    for m in 2..=n.max(1) {
        if m > 2 {
            prefix += &var;
        }
        var = rational(big(2), big((m - 1) as u64)) * &prefix;
    }
    if n <= 1 {
        BigRational::zero()
    } else {
        var
    }
}

/// Corrected variances Var_0..Var_n, exact.
///
/// Runs entirely on integers scaled by (k!)^2: with W_k = Var_k * (k!)^2,
/// U_k = sum_j P_j^2 (k!/j!)^2, T_k = sum_j W_j (k!/j!)^2 and G_k the scaled
/// convolution sum_j e_j e_{k-j} * k!, the recurrence becomes
/// W_n = 2 n^2 (n-1) [T_{n-2} + U_{n-2} + G_{n-2} (n-2)!] - P_n^2.
/// The convolution coefficients satisfy their own three-term recurrence
/// (n-2) c_n = (n-3) c_{n-1} + 4 c_{n-2}, obtained from the ODE of the
/// squared expectation generating function.
pub fn variance_corrected_upto(n: usize) -> Vec<BigRational> {
    let (w, _) = variance_scaled(n);
    let mut fact_sq = BigInt::one();
    w.iter()
        .enumerate()
        .map(|(m, value)| {
            if m > 0 {
                fact_sq *= big((m * m) as u64);
            }
            rational(value.clone(), fact_sq.clone())
        })
        .collect()
}

/// W_m = Var(X_m) * (m!)^2 for m = 0..=n, plus (n!)^2.
fn variance_scaled(n: usize) -> (Vec<BigInt>, BigInt) {
    let p = scaled_expectations(n);
    // G_k = c_k * k! where c_k = sum_j e_j e_{k-j}
    let mut gamma: Vec<BigInt> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let value = match m {
            0 | 1 => BigInt::zero(),
            2 => big(2),
            _ => {
                let m64 = m as u64;
                let num = big(m64) * big(m64 - 3) * &gamma[m - 1]
                    + big(4) * big(m64) * big(m64 - 1) * &gamma[m - 2];
                num / big(m64 - 2)
            }
        };
        gamma.push(value);
    }

    let mut w: Vec<BigInt> = Vec::with_capacity(n + 1);
    let mut fact_sq = BigInt::one(); // (m!)^2
    // prefix sums lag two steps behind m: when computing W_m they hold
    // T_{m-2} and U_{m-2} at scale ((m-2)!)^2, with fact_lag = (m-2)!
    let mut t_lag = BigInt::zero();
    let mut u_lag = BigInt::zero();
    let mut fact_lag = BigInt::one();
    for m in 0..=n {
        let m64 = m as u64;
        if m > 0 {
            fact_sq *= big(m64) * big(m64);
        }
        let value = if m < 2 {
            BigInt::zero()
        } else {
            let inner = &t_lag + &u_lag + &gamma[m - 2] * &fact_lag;
            big(2) * big(m64) * big(m64) * big(m64 - 1) * inner - &p[m] * &p[m]
        };
        w.push(value);
        if m >= 1 {
            // advance the lag from index m-2 to m-1
            let step = big(m64) - BigInt::one();
            let step_sq = &step * &step;
            t_lag = t_lag * &step_sq + &w[m - 1];
            u_lag = u_lag * &step_sq + &p[m - 1] * &p[m - 1];
            if m >= 2 {
                fact_lag *= step;
            }
        }
    }
    (w, fact_sq)
}

/// Corrected variance Var(X_n), exact. Agrees with exhaustive enumeration
/// on small segments; see the module tests.
pub fn variance_corrected_recurrence(n: usize) -> BigRational {
    variance_corrected_upto(n).pop().expect("nonempty")
}

/// Var(X_n)/n as a float, without ever reducing the huge scaled
/// fraction: the integer recurrence runs as in
/// [`variance_corrected_upto`] and only the final W_n/(n!)^2 is converted.
/// Usable at n in the tens of thousands where per-step reduction is not.
pub fn variance_corrected_per_site(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (w, fact_sq) = variance_scaled(n);
    let ratio = BigRational::new_raw(w.last().expect("nonempty").clone(), fact_sq);
    ratio.to_f64().unwrap_or(f64::NAN) / n as f64
}

/// Coefficients e_0..e_{n_max} extracted from the product of the two series
/// x/(x-1)^2 = sum n x^n and e^{-2x}, exact.
pub fn gf_coefficients(n_max: usize) -> Vec<BigRational> {
    let poly_part: Vec<BigRational> = (0..=n_max)
        .map(|m| rational(big(m as u64), BigInt::one()))
        .collect();
    let mut exp_part: Vec<BigRational> = Vec::with_capacity(n_max + 1);
    let mut term = BigRational::one();
    for k in 0..=n_max {
        if k > 0 {
            term = -(term * rational(big(2), big(k as u64)));
        }
        exp_part.push(term.clone());
    }
    let a = Series::from_coeffs(poly_part);
    let b = Series::from_coeffs(exp_part);
    a.mul_truncated(&b).coeffs().to_vec()
}

// ---------------------------------------------------------------------------
// Moment generating function via the Riccati substitution
// ---------------------------------------------------------------------------

/// Generating-function coefficients f_0..f_{n_max} of E[w^{X_n}] as a
/// function of w, computed for any coefficient type.
///
/// The convolution recurrence for f_n turns into a Riccati equation for
/// g(t) = sum f_m t^m whose solution is g = -y'/(t y) with
/// y = C_1 (1-t) e^t + C_2 (1+t) e^{-t}. Matching f_1 = w forces
/// C_1/C_2 = (1+w)/(1-w), realized by C_1 = cosh(ln w / 2),
/// C_2 = -sinh(ln w / 2). Normalizing y by its constant term e^{-ln w / 2}
/// leaves the series
///
///   s(t) = sum_m ((1-m)/m!) * w^{m mod 2} * t^m,
///
/// and t g = -d/dt ln y gives f_n = -(n+2) c_{n+2} where c_k are the
/// coefficients of ln s. The explicit combinatorial expansion of those
/// derivatives is deliberately avoided; the series log recurrence does the
/// same work in O(n^2) coefficient operations.
pub(crate) fn pgf_values<T: Coeff>(w: &T, n_max: usize) -> Vec<T> {
    let order = n_max + 2;
    let mut coeffs: Vec<T> = Vec::with_capacity(order + 1);
    let mut inv_fact = T::one();
    for m in 0..=order {
        if m > 0 {
            inv_fact = inv_fact / T::from_usize(m).expect("small integer");
        }
        let lead = T::one() - T::from_usize(m).expect("small integer");
        let mut c = lead * inv_fact.clone();
        if m % 2 == 1 {
            c = c * w.clone();
        }
        coeffs.push(c);
    }
    let log = Series::from_coeffs(coeffs).ln_truncated();
    (0..=n_max)
        .map(|n| -(T::from_usize(n + 2).expect("small integer") * log.coeff(n + 2)))
        .collect()
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Fixed-precision float wrapper so the generic series code can run on
/// astro-float values. Precision is carried per value; binary operations
/// use the larger of the two operand precisions.
#[derive(Debug, Clone)]
pub(crate) struct PrecFloat {
    v: BigFloat,
    prec: usize,
}

impl PrecFloat {
    pub(crate) fn from_f64(x: f64, prec: usize) -> Self {
        PrecFloat { v: BigFloat::from_f64(x, prec), prec }
    }

    pub(crate) fn exp(&self, cc: &mut Consts) -> Self {
        PrecFloat { v: self.v.exp(self.prec, RM, cc), prec: self.prec }
    }

    pub(crate) fn to_f64(&self) -> f64 {
        bigfloat_to_f64(&self.v)
    }
}

pub(crate) fn bigfloat_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        Some((words, _len, sign, exp, _inexact)) => {
            // words are little endian with the top bit of the last word set;
            // the value is sign * fraction * 2^exp with fraction in [0.5, 1)
            let nw = words.len();
            let top = words[nw - 1];
            let next = if nw >= 2 { words[nw - 2] } else { 0 };
            let frac = (top as f64) / 2f64.powi(64) + (next as f64) / 2f64.powi(128);
            let s = if sign == Sign::Neg { -1.0 } else { 1.0 };
            s * frac * 2f64.powi(exp)
        }
        None => f64::NAN,
    }
}

impl PartialEq for PrecFloat {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

macro_rules! prec_float_binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl std::ops::$trait for PrecFloat {
            type Output = PrecFloat;
            fn $method(self, rhs: PrecFloat) -> PrecFloat {
                let prec = self.prec.max(rhs.prec);
                PrecFloat { v: self.v.$op(&rhs.v, prec, RM), prec }
            }
        }
    };
}

prec_float_binop!(Add, add, add);
prec_float_binop!(Sub, sub, sub);
prec_float_binop!(Mul, mul, mul);
prec_float_binop!(Div, div, div);

impl std::ops::Neg for PrecFloat {
    type Output = PrecFloat;
    fn neg(self) -> PrecFloat {
        PrecFloat { v: self.v.neg(), prec: self.prec }
    }
}

impl Zero for PrecFloat {
    fn zero() -> Self {
        PrecFloat::from_f64(0.0, 64)
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
}

impl One for PrecFloat {
    fn one() -> Self {
        PrecFloat::from_f64(1.0, 64)
    }
    fn is_one(&self) -> bool {
        self.v == BigFloat::from_f64(1.0, self.prec)
    }
}

impl FromPrimitive for PrecFloat {
    fn from_i64(n: i64) -> Option<Self> {
        Some(PrecFloat { v: BigFloat::from_i64(n, 64), prec: 64 })
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(PrecFloat { v: BigFloat::from_u64(n, 64), prec: 64 })
    }
}

/// Base precision for the MGF series.
pub const DEFAULT_MGF_PRECISION_BITS: usize = 200;

fn mgf_precision(n_max: usize) -> usize {
    DEFAULT_MGF_PRECISION_BITS + 8 * n_max
}

/// Significant decimal digits required from the MGF series.
pub const MGF_REQUIRED_DIGITS: u32 = 6;

/// f_n(lambda) = E[exp(lambda X_n)] for n = 0..=n_max.
///
/// Runs the series at the default precision for the order and once more
/// with 64 extra bits; if the two disagree before [`MGF_REQUIRED_DIGITS`]
/// significant digits the computation is rejected rather than returned.
pub fn mgf_coefficients(lambda: f64, n_max: usize) -> Result<Vec<f64>, Exact1dError> {
    mgf_coefficients_with_precision(lambda, n_max, mgf_precision(n_max))
}

/// Same as [`mgf_coefficients`] with an explicit base precision in bits.
pub fn mgf_coefficients_with_precision(
    lambda: f64,
    n_max: usize,
    precision_bits: usize,
) -> Result<Vec<f64>, Exact1dError> {
    if !lambda.is_finite() {
        return Err(Exact1dError::NonFiniteLambda(lambda));
    }
    let lo = mgf_at_precision(lambda, n_max, precision_bits);
    let hi = mgf_at_precision(lambda, n_max, precision_bits + 64);
    for (order, (a, b)) in lo.iter().zip(hi.iter()).enumerate() {
        let denom = b.abs().max(f64::MIN_POSITIVE);
        let rel = (a - b).abs() / denom;
        let digits = -rel.log10();
        if rel > 10f64.powi(-(MGF_REQUIRED_DIGITS as i32)) {
            return Err(Exact1dError::PrecisionLoss {
                digits,
                required: MGF_REQUIRED_DIGITS,
                order,
            });
        }
    }
    Ok(hi)
}

fn mgf_at_precision(lambda: f64, n_max: usize, prec: usize) -> Vec<f64> {
    let mut cc = Consts::new().expect("constants cache");
    let w = PrecFloat::from_f64(lambda, prec).exp(&mut cc);
    pgf_values(&w, n_max).iter().map(PrecFloat::to_f64).collect()
}

// ---------------------------------------------------------------------------
// Distribution of the monomer count
// ---------------------------------------------------------------------------

/// Crossover below which `distribution_1d` delegates to the enumeration
/// oracle. A constant of the implementation, not a contract.
const DISTRIBUTION_ORACLE_CUTOFF: usize = 20;

/// P(X_n = m) for m = 0..=n, exact.
///
/// For n above the oracle cutoff the law is recovered from the probability
/// generating function: X_n has the parity of n, so E[z^{X_n}] is z^{n mod 2}
/// times Q(z^2) with Q of degree at most floor(n/2). Evaluating the PGF
/// exactly at the integer nodes z = 1..=h+1 and interpolating Q at the
/// nodes z^2 yields the probabilities without any rounding.
pub fn distribution_1d(n: usize) -> Vec<BigRational> {
    let mut probs = vec![BigRational::zero(); n + 1];
    if n <= DISTRIBUTION_ORACLE_CUTOFF {
        let law = oracle::exact_distribution(&path_graph(n)).expect("small path");
        for (m, p) in law.probs() {
            probs[*m as usize] = p.clone();
        }
        return probs;
    }
    let parity = n % 2;
    let h = n / 2;
    let mut nodes = Vec::with_capacity(h + 1);
    let mut values = Vec::with_capacity(h + 1);
    for i in 0..=h {
        let z = big((i + 1) as u64);
        let w = BigRational::from(z.clone());
        let pgf = pgf_values(&w, n).pop().expect("nonempty");
        let q_value = if parity == 1 { pgf / w.clone() } else { pgf };
        nodes.push(&w * &w);
        values.push(q_value);
    }
    let q = interpolate_polynomial(&nodes, &values);
    for (j, c) in q.into_iter().enumerate() {
        probs[2 * j + parity] = c;
    }
    probs
}

/// Decimal rendering of an exact rational, rounded toward zero.
pub fn decimal_string(r: &BigRational, digits: usize) -> String {
    let scale = big(10).pow(digits as u32);
    let scaled = (r * BigRational::from(scale.clone())).trunc();
    let int = scaled.to_integer();
    let neg = int < BigInt::zero();
    let mag = if neg { -int } else { int };
    let (whole, frac) = (mag.clone() / &scale, mag % &scale);
    let sign = if neg { "-" } else { "" };
    format!("{sign}{whole}.{frac:0>width$}", width = digits)
}
