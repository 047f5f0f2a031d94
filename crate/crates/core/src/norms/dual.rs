//! Dual norms `‖f‖_* = sup_x f(x)/‖x‖` of finitely supported functionals.
//!
//! Lower bounds come from explicit vectors and are therefore certified.
//! Upper bounds come from `‖x‖ ≥ c ‖x‖_∞` (giving `‖f‖_* ≤ ‖f‖_1 / c`) and,
//! for the Tsirelson norm, from the linear program over a norming set: the
//! truncated set defines a larger unit ball, so the LP value can only
//! overestimate.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{lp_norm, NormOracle, NormingFunctionalSet};
use crate::error::{Error, Result};
use crate::space::{conjugate_exponent, Family};
use crate::vector::{FiniteVector, Functional};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperSource {
    /// `‖f‖_1 / c` from sup-norm domination.
    SupDomination,
    /// LP over a generated norming set.
    NormingLp,
    /// Closed-form Hölder value.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualBracket {
    pub lower: f64,
    pub upper: f64,
    pub upper_source: UpperSource,
    /// Vector attaining `lower` as `f(x)/‖x‖`.
    pub witness: FiniteVector,
}

impl DualBracket {
    pub fn exact(value: f64, witness: FiniteVector) -> Self {
        Self {
            lower: value,
            upper: value,
            upper_source: UpperSource::Exact,
            witness,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Largest functional length for which a norming set is generated.
    pub norming_window_cap: usize,
    /// Generation depth; `None` means depth = window (exact).
    pub norming_depth: Option<usize>,
    pub functional_cap: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_sweeps: 200,
            seed: 0,
            norming_window_cap: 10,
            norming_depth: None,
            functional_cap: super::norming::DEFAULT_FUNCTIONAL_CAP,
        }
    }
}

/// Hölder-conjugate formula; only for `lp` and `c0`.
pub fn dual_norm_exact(o: &NormOracle, f: &Functional) -> Result<f64> {
    match o.family() {
        Family::Lp => Ok(lp_norm(f.as_slice(), o.descriptor.conjugate())),
        Family::C0 => Ok(lp_norm(f.as_slice(), 1.0)),
        _ => Err(Error::NoExactDual(o.descriptor.to_string())),
    }
}

/// `f(x)/‖x‖`, zero at `x = 0`.
pub fn pairing_ratio(o: &NormOracle, f: &Functional, x: &FiniteVector) -> Result<f64> {
    let n = o.norm(x)?;
    Ok(if n == 0.0 { 0.0 } else { f.pair(x) / n })
}

pub fn dual_bracket(o: &NormOracle, f: &Functional, opts: &DualOptions) -> Result<DualBracket> {
    dual_bracket_with_set(o, f, opts, None)
}

/// Like [`dual_bracket`], reusing a pre-generated norming set whose window
/// covers `f`.
pub fn dual_bracket_with_set(
    o: &NormOracle,
    f: &Functional,
    opts: &DualOptions,
    set: Option<&NormingFunctionalSet>,
) -> Result<DualBracket> {
    if f.is_zero() {
        return Ok(DualBracket::exact(0.0, FiniteVector::zero()));
    }
    let (lower, witness) = ascend(o, f, opts)?;

    let mut upper = lp_norm(f.as_slice(), 1.0) / o.sup_domination();
    let mut source = UpperSource::SupDomination;
    if o.family() == Family::Tsirelson {
        let generated;
        let set = match set {
            Some(s) if s.window >= f.len() && s.theta == o.descriptor.theta => Some(s),
            _ if f.len() <= opts.norming_window_cap => {
                let depth = opts.norming_depth.unwrap_or(f.len());
                generated = NormingFunctionalSet::generate_with_cap(
                    o.descriptor.theta,
                    f.len(),
                    depth,
                    opts.functional_cap,
                );
                generated.as_ref().ok()
            }
            _ => None,
        };
        if let Some(set) = set {
            let lp = norming_lp(f, set)?;
            if lp < upper {
                upper = lp;
                source = UpperSource::NormingLp;
            }
        }
    }
    Ok(DualBracket {
        lower,
        upper: upper.max(lower),
        upper_source: source,
        witness,
    })
}

/// `max Σ|f_i| x_i` subject to `w·x ≤ 1` for every representative `w` and
/// `x ≥ 0`. Valid for 1-unconditional norms.
pub fn norming_lp(f: &Functional, set: &NormingFunctionalSet) -> Result<f64> {
    let d = f.len();
    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..d)
        .map(|i| pb.add_var(f.as_slice()[i].abs(), (0.0, f64::INFINITY)))
        .collect();
    let mut seen = std::collections::HashSet::new();
    for w in set.representatives() {
        let support: Vec<usize> = (0..d.min(w.len())).filter(|&i| w[i] != 0.0).collect();
        if support.is_empty() {
            continue;
        }
        let key: Vec<(usize, u64)> = support.iter().map(|&i| (i, w[i].to_bits())).collect();
        if !seen.insert(key) {
            continue;
        }
        let terms: Vec<_> = support.iter().map(|&i| (vars[i], w[i])).collect();
        pb.add_constraint(&terms[..], ComparisonOp::Le, 1.0);
    }
    let sol = pb.solve().map_err(|e| Error::Lp(e.to_string()))?;
    Ok(sol.objective())
}

fn starting_points(o: &NormOracle, f: &Functional, opts: &DualOptions) -> Vec<Vec<f64>> {
    let c = f.as_slice();
    let d = c.len();
    let sign = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(c.iter().map(|&x| sign(x)).collect());
    starts.push(c.to_vec());

    let mut exponents = Vec::new();
    if matches!(
        o.family(),
        Family::Lp | Family::Lorentz | Family::PConvexTsirelson
    ) {
        exponents.push(o.descriptor.p);
    }
    exponents.extend([2.0, 1.5, 3.0, 4.0, 1.25]);
    for p in exponents {
        let q = conjugate_exponent(p);
        if q.is_finite() {
            starts.push(c.iter().map(|&x| sign(x) * x.abs().powf(q - 1.0)).collect());
        }
    }
    let argmax = (0..d)
        .max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()))
        .unwrap_or(0);
    let mut spike = vec![0.0; d];
    spike[argmax] = sign(c[argmax]);
    starts.push(spike);
    let half = d / 2;
    if half > 0 {
        starts.push(
            (0..d)
                .map(|i| if i < half { sign(c[i]) } else { 0.0 })
                .collect(),
        );
        starts.push(
            (0..d)
                .map(|i| if i >= half { sign(c[i]) } else { 0.0 })
                .collect(),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let unconditional = o.is_1_unconditional();
    while starts.len() < opts.restarts {
        starts.push(
            (0..d)
                .map(|i| {
                    let m: f64 = rng.gen_range(0.0..1.0);
                    if unconditional {
                        sign(c[i]) * m
                    } else {
                        m * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                    }
                })
                .collect(),
        );
    }
    starts.truncate(opts.restarts.max(1));
    starts
}

/// Multi-start coordinate search for `max f(x)/‖x‖`. For 1-unconditional
/// norms the search stays in the orthant aligned with `f` and off the
/// complement of its support.
fn ascend(o: &NormOracle, f: &Functional, opts: &DualOptions) -> Result<(f64, FiniteVector)> {
    let c = f.as_slice();
    let unconditional = o.is_1_unconditional();
    let coords: Vec<usize> = if unconditional {
        (0..c.len()).filter(|&i| c[i] != 0.0).collect()
    } else {
        (0..c.len()).collect()
    };
    let sign = |i: usize| if c[i] < 0.0 { -1.0 } else { 1.0 };

    let mut best = (f64::NEG_INFINITY, FiniteVector::zero());
    for start in starting_points(o, f, opts) {
        let mut x = start;
        let eval = |x: &[f64]| pairing_ratio(o, f, &FiniteVector::new(x.to_vec()));
        let mut r = eval(&x)?;
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut step = 0.5 * scale;
        let mut sweeps = 0;
        while step > 1e-10 * scale && sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut improved = false;
            for &i in &coords {
                for dir in [1.0, -1.0] {
                    let old = x[i];
                    let mut nv = old + dir * step * if unconditional { sign(i) } else { 1.0 };
                    if unconditional && nv * sign(i) < 0.0 {
                        nv = 0.0;
                    }
                    if nv == old {
                        continue;
                    }
                    x[i] = nv;
                    let nr = eval(&x)?;
                    if nr > r + 1e-15 * r.abs() {
                        r = nr;
                        improved = true;
                    } else {
                        x[i] = old;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if r > best.0 {
            best = (r, FiniteVector::new(x));
        }
    }
    Ok((best.0.max(0.0), best.1))
}
