//! Norm oracles for the catalog of sequence spaces.

pub mod dual;
pub mod norming;
pub mod tsirelson;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::space::{Family, SpaceDescriptor};
use crate::vector::FiniteVector;

pub use dual::{
    dual_bracket, dual_bracket_with_set, dual_norm_exact, norming_lp, pairing_ratio, DualBracket,
    DualOptions, UpperSource,
};
pub use norming::NormingFunctionalSet;
pub use tsirelson::{pconvex_norm, tsirelson_norm, DEFAULT_WINDOW_CAP};

pub fn lp_norm(a: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return a.iter().fold(0.0, |m, c| m.max(c.abs()));
    }
    if p == 1.0 {
        return a.iter().map(|c| c.abs()).sum();
    }
    if p == 2.0 {
        return a.iter().map(|c| c * c).sum::<f64>().sqrt();
    }
    a.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Summing-basis norm: largest absolute partial sum.
pub fn summing_norm(a: &[f64]) -> f64 {
    let mut partial = 0.0f64;
    let mut best = 0.0f64;
    for c in a {
        partial += c;
        best = best.max(partial.abs());
    }
    best
}

/// `(Σ w_i (a*_i)^p)^{1/p}` with `a*` the nonincreasing rearrangement of `|a|`.
pub fn lorentz_norm(a: &[f64], p: f64, weight: impl Fn(usize) -> f64) -> f64 {
    let mut r: Vec<f64> = a.iter().map(|c| c.abs()).filter(|c| *c != 0.0).collect();
    r.sort_by(|x, y| y.total_cmp(x));
    let sum: f64 = r
        .iter()
        .enumerate()
        .map(|(i, c)| weight(i + 1) * if p == 1.0 { *c } else { c.powf(p) })
        .sum();
    if p == 1.0 {
        sum
    } else {
        sum.powf(1.0 / p)
    }
}

/// Norm oracle for one catalog space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOracle {
    pub descriptor: SpaceDescriptor,
    /// Longest trimmed length the Tsirelson DP accepts.
    pub window_cap: usize,
}

impl NormOracle {
    pub fn new(descriptor: SpaceDescriptor) -> Self {
        Self {
            descriptor,
            window_cap: DEFAULT_WINDOW_CAP,
        }
    }

    pub fn with_window_cap(mut self, cap: usize) -> Self {
        self.window_cap = cap;
        self
    }

    pub fn family(&self) -> Family {
        self.descriptor.family
    }

    pub fn norm(&self, a: &FiniteVector) -> Result<f64> {
        let d = &self.descriptor;
        let c = a.as_slice();
        Ok(match d.family {
            Family::Lp => lp_norm(c, d.p),
            Family::C0 => lp_norm(c, f64::INFINITY),
            Family::Summing => summing_norm(c),
            Family::Lorentz => lorentz_norm(c, d.p, |i| d.weight(i)),
            Family::Tsirelson => tsirelson_norm(a, d.theta, self.window_cap)?,
            Family::PConvexTsirelson => pconvex_norm(a, d.p, d.theta, self.window_cap)?,
        })
    }

    /// Sign flips leave the norm unchanged and deleting a coordinate never
    /// increases it.
    pub fn is_1_unconditional(&self) -> bool {
        !matches!(self.family(), Family::Summing)
    }

    /// The norm depends only on the nonincreasing rearrangement of `|a|`.
    pub fn is_symmetric(&self) -> bool {
        matches!(self.family(), Family::Lp | Family::C0 | Family::Lorentz)
    }

    pub fn has_exact_dual(&self) -> bool {
        matches!(self.family(), Family::Lp | Family::C0)
    }

    /// A constant `c` with `‖x‖ ≥ c ‖x‖_∞` for every `x`.
    pub fn sup_domination(&self) -> f64 {
        match self.family() {
            // |a_i| = |S_i - S_{i-1}| ≤ 2 sup |S_n|
            Family::Summing => 0.5,
            _ => 1.0,
        }
    }

    /// An upper bound for the fundamental function over all of ℕ.
    pub fn fundamental_upper_bound(&self, n: usize) -> f64 {
        let d = &self.descriptor;
        let nf = n as f64;
        match d.family {
            Family::Lp => nf.powf(1.0 / d.p),
            Family::C0 => 1.0_f64.min(nf),
            Family::Lorentz => lorentz_norm(&vec![1.0; n], d.p, |i| d.weight(i)),
            // ‖x‖_T ≤ max(‖x‖_∞, θ‖x‖_1) by induction on the support
            Family::Tsirelson => (d.theta * nf).max(1.0_f64.min(nf)),
            Family::PConvexTsirelson => (d.theta * nf).max(1.0_f64.min(nf)).powf(1.0 / d.p),
            Family::Summing => nf,
        }
    }

    /// `C₀ = max_i max(‖e_i‖, 1/‖e_i‖)` over positions `1..=window`.
    pub fn semi_normalization(&self, window: usize) -> Result<f64> {
        let mut c0 = 1.0f64;
        for i in 1..=window {
            let n = self.norm(&FiniteVector::unit(i)?)?;
            c0 = c0.max(n).max(1.0 / n);
        }
        Ok(c0)
    }
}

impl From<SpaceDescriptor> for NormOracle {
    fn from(d: SpaceDescriptor) -> Self {
        Self::new(d)
    }
}
