//! Truncated power series with exact coefficient arithmetic.
//!
//! Coefficients are generic so the same product / logarithm / interpolation
//! routines run over exact rationals and over high-precision floats. The
//! truncation order is tracked explicitly and never silently exceeded:
//! binary operations are valid up to the smaller of the two orders.

use num_traits::{FromPrimitive, One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Coefficient requirements for series arithmetic.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + FromPrimitive
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + FromPrimitive
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

/// A power series truncated after `order()`: coefficients of t^0 .. t^order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> Series<T> {
    /// Builds a series from coefficients c_0..c_K; K is the truncation order.
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        Series { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// Product truncated at the smaller of the two orders.
    pub fn mul_truncated(&self, other: &Series<T>) -> Series<T> {
        let order = self.order().min(other.order());
        let mut out = vec![T::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Series { coeffs: out }
    }

    /// Series logarithm of a series with constant term 1, to the same order.
    ///
    /// Uses the derivative identity (ln s)' = s'/s, which gives the
    /// coefficient recurrence c_n = s_n - (1/n) * sum_{j=1}^{n-1} j c_j s_{n-j}.
    pub fn ln_truncated(&self) -> Series<T> {
        assert!(self.coeffs[0].is_one(), "series log needs constant term 1");
        let k = self.order();
        let mut c: Vec<T> = Vec::with_capacity(k + 1);
        c.push(T::zero());
        for n in 1..=k {
            let mut acc = T::zero();
            for j in 1..n {
                if c[j].is_zero() || self.coeffs[n - j].is_zero() {
                    continue;
                }
                let jf = T::from_usize(j).expect("small integer");
                acc = acc + jf * c[j].clone() * self.coeffs[n - j].clone();
            }
            let nf = T::from_usize(n).expect("small integer");
            c.push(self.coeffs[n].clone() - acc / nf);
        }
        Series { coeffs: c }
    }

    /// Horner evaluation at a point.
    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }
}

/// Coefficients of the unique polynomial of degree < nodes.len() passing
/// through (nodes[i], values[i]). Newton divided differences expanded to
/// the monomial basis; exact when `T` is exact.
pub fn interpolate_polynomial<T: Coeff>(nodes: &[T], values: &[T]) -> Vec<T> {
    assert_eq!(nodes.len(), values.len());
    assert!(!nodes.is_empty());
    let n = nodes.len();
    let mut dd: Vec<T> = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = dd[i].clone() - dd[i - 1].clone();
            let den = nodes[i].clone() - nodes[i - level].clone();
            dd[i] = num / den;
        }
    }
    // expand Newton form: p(x) = dd[0] + (x - x0)(dd[1] + (x - x1)(...))
    let mut poly = vec![T::zero(); n];
    poly[0] = dd[n - 1].clone();
    let mut deg = 0usize;
    for i in (0..n - 1).rev() {
        // poly <- poly * (x - nodes[i]) + dd[i]
        deg += 1;
        for k in (1..=deg).rev() {
            poly[k] = poly[k - 1].clone() - nodes[i].clone() * poly[k].clone();
        }
        poly[0] = dd[i].clone() - nodes[i].clone() * poly[0].clone();
    }
    poly
}
