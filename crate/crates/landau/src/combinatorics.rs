//! Multi-index algebra and the exact combinatorial sums over dyadic shells.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{LandauError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0, 0]);

    pub fn new(a1: u32, a2: u32, a3: u32) -> Self {
        MultiIndex([a1, a2, a3])
    }

    /// Unit index along `axis`.
    pub fn unit(axis: usize) -> Self {
        let mut a = [0; 3];
        a[axis] = 1;
        MultiIndex(a)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        Some(MultiIndex([
            self.0[0].checked_sub(other.0[0])?,
            self.0[1].checked_sub(other.0[1])?,
            self.0[2].checked_sub(other.0[2])?,
        ]))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    /// All multi-indices of total order `l`, in lexicographic order of (a1, a2).
    pub fn of_order(l: u32) -> impl Iterator<Item = MultiIndex> {
        (0..=l).flat_map(move |a1| (0..=l - a1).map(move |a2| MultiIndex([a1, a2, l - a1 - a2])))
    }

    /// All multi-indices with order at most `m`.
    pub fn up_to_order(m: u32) -> impl Iterator<Item = MultiIndex> {
        (0..=m).flat_map(MultiIndex::of_order)
    }

    /// All β with β ≤ self, componentwise.
    pub fn lower_set(&self) -> impl Iterator<Item = MultiIndex> {
        let [m1, m2, m3] = self.0;
        (0..=m1).flat_map(move |a| (0..=m2).flat_map(move |b| (0..=m3).map(move |c| MultiIndex([a, b, c]))))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl From<[u32; 3]> for MultiIndex {
    fn from(a: [u32; 3]) -> Self {
        MultiIndex(a)
    }
}

fn scalar_factorial(k: u64) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// α! = α₁!α₂!α₃!
pub fn factorial(alpha: &MultiIndex) -> BigUint {
    alpha
        .0
        .iter()
        .map(|&a| scalar_factorial(a as u64))
        .fold(BigUint::one(), |acc, x| acc * x)
}

/// Multi-index binomial coefficient μ!/((μ−β)!β!).
pub fn binomial(mu: &MultiIndex, beta: &MultiIndex) -> Result<BigUint> {
    if !beta.le(mu) {
        return Err(LandauError::NotDominated {
            beta: beta.0,
            mu: mu.0,
        });
    }
    let mut acc = BigUint::one();
    for i in 0..3 {
        acc *= scalar_binomial(mu.0[i] as u64, beta.0[i] as u64);
    }
    Ok(acc)
}

fn scalar_binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// (m−k)! when m ≥ k, and 1 otherwise (the (−i)! = 1 convention).
pub fn shifted_factorial(m: i64, k: u64) -> BigUint {
    let d = m - k as i64;
    if d <= 0 {
        BigUint::one()
    } else {
        scalar_factorial(d as u64)
    }
}

/// Same convention as [`shifted_factorial`], as a float for fits.
pub fn shifted_factorial_f64(m: i64, k: u64) -> f64 {
    let d = m - k as i64;
    (2..=d.max(0)).fold(1.0, |acc, i| acc * i as f64)
}

/// Number of β ∈ ℕ³ with |β| = l.
pub fn shell_count(l: u64) -> u64 {
    (l + 1) * (l + 2) / 2
}

/// Number of β ≤ μ with |β| = l, for every l in 0..=|μ|.
///
/// This is the coefficient list of the product of the three box polynomials
/// 1 + x + … + x^{μᵢ}.
pub fn box_counts(mu: &MultiIndex) -> Vec<u64> {
    let mut poly = vec![1u64];
    for &m in &mu.0 {
        let mut next = vec![0u64; poly.len() + m as usize];
        for (i, &c) in poly.iter().enumerate() {
            for j in 0..=m as usize {
                next[i + j] += c;
            }
        }
        poly = next;
    }
    poly
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumVariant {
    /// |μ| / (|β|⁴ (|μ|−|β|))
    Sum1,
    /// |μ| / (|β|³ (|μ|−|β|)²)
    Sum2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMode {
    /// β ≤ μ with 1 ≤ |β| ≤ |μ|−1.
    Restricted,
    /// Every β ∈ ℕ³ with 1 ≤ |β| ≤ |μ|−1.
    Shell,
}

/// Numerator and denominator of the single-shell term at |β| = l, |μ| = m.
pub fn term_parts(variant: SumVariant, m: u64, l: u64) -> (u128, u128) {
    let (m, l) = (m as u128, l as u128);
    match variant {
        SumVariant::Sum1 => (m, l * l * l * l * (m - l)),
        SumVariant::Sum2 => (m, l * l * l * (m - l) * (m - l)),
    }
}

/// Exact value of the shell sum for `mu`.
pub fn lemma21_sum(mu: &MultiIndex, variant: SumVariant, mode: SumMode) -> Result<BigRational> {
    let m = mu.order();
    if m < 2 {
        return Err(LandauError::OrderTooLow(m));
    }
    let counts: Vec<u64> = match mode {
        SumMode::Restricted => box_counts(mu),
        SumMode::Shell => (0..=m as u64).map(shell_count).collect(),
    };
    let mut acc = BigRational::zero();
    for l in 1..m as u64 {
        let c = counts[l as usize];
        if c == 0 {
            continue;
        }
        let (num, den) = term_parts(variant, m as u64, l);
        acc += BigRational::new(
            (BigUint::from(num) * c).into(),
            BigUint::from(den).into(),
        );
    }
    Ok(acc)
}
