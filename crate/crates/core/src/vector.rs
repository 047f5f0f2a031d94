//! Finitely supported vectors against an abstract basis and the block
//! multiplication `a ⊗ b`.
//!
//! For `a = Σ_{i≤n} a_i e_i` and `b = Σ_{j≤m} b_j e_j` with `b_m ≠ 0`,
//! `a ⊗ b` places `a_i b_j` at position `(i-1)m + j`. Positions are 1-based
//! throughout the public API. Together with `e_1` as identity this is an
//! associative, noncommutative monoid on finitely supported vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of coefficients a power may produce.
pub const DEFAULT_SIZE_CAP: usize = 10_000_000;

fn trim(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    coeffs
}

fn block_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        out.extend(b.iter().map(|&bj| ai * bj));
    }
    out
}

fn check_cap(len: usize, n: u32, cap: usize) -> Result<()> {
    let total = (len as u128).checked_pow(n).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::SizeCap { len: total, cap });
    }
    Ok(())
}

/// A finitely supported real sequence, stored densely with trailing zeros
/// removed. The stored length is the `m` of the block product.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteVector {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for FiniteVector {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<FiniteVector> for Vec<f64> {
    fn from(v: FiniteVector) -> Self {
        v.coeffs
    }
}

#[allow(clippy::len_without_is_empty)]
impl FiniteVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs: trim(coeffs),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis vector `e_i` (1-based).
    pub fn unit(i: usize) -> Result<Self> {
        if i == 0 {
            return Err(Error::ZeroIndex);
        }
        let mut coeffs = vec![0.0; i];
        coeffs[i - 1] = 1.0;
        Ok(Self { coeffs })
    }

    /// `e_1 + ... + e_n`.
    pub fn indicator(n: usize) -> Self {
        Self {
            coeffs: vec![1.0; n],
        }
    }

    /// `Σ_{i∈A} e_i`. Repeated indices count once; an empty set gives zero.
    pub fn indicator_of_set(set: &[usize]) -> Result<Self> {
        if set.contains(&0) {
            return Err(Error::ZeroIndex);
        }
        let len = set.iter().copied().max().unwrap_or(0);
        let mut coeffs = vec![0.0; len];
        for &i in set {
            coeffs[i - 1] = 1.0;
        }
        Ok(Self { coeffs })
    }

    /// Number of coefficients after trimming; zero iff the vector is zero.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient at the 1-based position `i` (zero outside the support).
    pub fn coeff(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.coeffs.get(i - 1).copied().unwrap_or(0.0)
    }

    /// 1-based positions of the nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| f(c)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        Self::new((1..=len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    /// Moves every coefficient `by` positions to the right.
    pub fn shift(&self, by: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; by];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    /// Places `a_i` at position `positions[i-1]`.
    pub fn spread(&self, positions: &[usize]) -> Result<Self> {
        if positions.contains(&0) {
            return Err(Error::ZeroIndex);
        }
        let len = positions.iter().copied().max().unwrap_or(0);
        let mut coeffs = vec![0.0; len];
        for (c, &p) in self.coeffs.iter().zip(positions) {
            coeffs[p - 1] = *c;
        }
        Ok(Self::new(coeffs))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// The block product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            coeffs: block_product(&self.coeffs, &other.coeffs),
        }
    }

    /// `self ⊗ ... ⊗ self` with `n` factors, subject to [`DEFAULT_SIZE_CAP`].
    pub fn power(&self, n: u32) -> Result<Self> {
        self.power_with_cap(n, DEFAULT_SIZE_CAP)
    }

    pub fn power_with_cap(&self, n: u32, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroExponent);
        }
        check_cap(self.len(), n, cap)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }

    /// Builds `selfⁿ` term by term from the multinomial expansion: the
    /// composition `(i_1, ..., i_m)` contributes `a_1^{i_1}···a_m^{i_m}` on
    /// every position in [`composition_positions`].
    pub fn multinomial_power(&self, n: u32) -> Result<Self> {
        self.multinomial_power_with_cap(n, DEFAULT_SIZE_CAP)
    }

    pub fn multinomial_power_with_cap(&self, n: u32, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroExponent);
        }
        let m = self.len();
        if m == 0 {
            return Ok(Self::zero());
        }
        check_cap(m, n, cap)?;
        let total = m.pow(n);
        let mut coeffs = vec![0.0; total];
        for composition in compositions(n as usize, m) {
            let value = composition
                .iter()
                .zip(&self.coeffs)
                .fold(1.0, |acc, (&k, &a)| acc * a.powi(k as i32));
            for pos in composition_positions(&composition) {
                coeffs[pos - 1] = value;
            }
        }
        Ok(Self::new(coeffs))
    }
}

/// All compositions `(i_1, ..., i_m)` of `n` into `m` nonnegative parts, in
/// lexicographic order.
pub fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=rest {
            cur.push(k);
            rec(rest - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(n, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// The index set `A(i_1, ..., i_m)`: 1-based positions of `αⁿ` whose base-`m`
/// word `(j_1, ..., j_n)` uses letter `j` exactly `i_j` times. The first letter
/// is the most significant digit, matching the block layout of `⊗`.
pub fn composition_positions(composition: &[usize]) -> Vec<usize> {
    let m = composition.len();
    let n: usize = composition.iter().sum();
    let mut counts = composition.to_vec();
    let mut out = Vec::new();
    fn rec(counts: &mut [usize], left: usize, m: usize, acc: usize, out: &mut Vec<usize>) {
        if left == 0 {
            out.push(acc + 1);
            return;
        }
        for j in 0..m {
            if counts[j] > 0 {
                counts[j] -= 1;
                rec(counts, left - 1, m, acc * m + j, out);
                counts[j] += 1;
            }
        }
    }
    if m > 0 {
        rec(&mut counts, n, m, 0, &mut out);
    }
    out
}

/// A finitely supported functional `Σ b_i e_i*`, trimmed like [`FiniteVector`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Functional {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Functional {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<Functional> for Vec<f64> {
    fn from(f: Functional) -> Self {
        f.coeffs
    }
}

#[allow(clippy::len_without_is_empty)]
impl Functional {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs: trim(coeffs),
        }
    }

    /// `e_1* + ... + e_n*`.
    pub fn indicator(n: usize) -> Self {
        Self {
            coeffs: vec![1.0; n],
        }
    }

    pub fn indicator_of_set(set: &[usize]) -> Result<Self> {
        FiniteVector::indicator_of_set(set).map(|v| Self { coeffs: v.coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.coeffs.get(i - 1).copied().unwrap_or(0.0)
    }

    /// The same coefficients read as a vector.
    pub fn to_vector(&self) -> FiniteVector {
        FiniteVector {
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            coeffs: block_product(&self.coeffs, &other.coeffs),
        }
    }

    pub fn power(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroExponent);
        }
        check_cap(self.len(), n, DEFAULT_SIZE_CAP)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }

    /// `f(a) = Σ f_i a_i` over the common support.
    pub fn pair(&self, a: &FiniteVector) -> f64 {
        self.coeffs
            .iter()
            .zip(a.as_slice())
            .map(|(f, x)| f * x)
            .sum()
    }
}

impl From<FiniteVector> for Functional {
    fn from(v: FiniteVector) -> Self {
        Self { coeffs: v.coeffs }
    }
}

pub fn tensor_mul(a: &FiniteVector, b: &FiniteVector) -> FiniteVector {
    a.tensor(b)
}

pub fn pair(f: &Functional, a: &FiniteVector) -> f64 {
    f.pair(a)
}
