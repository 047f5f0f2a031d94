//! Checks built from norms and greedy constants: tensor-ratio statistics,
//! power and `λ`-grid profiles, exponent fitting, `ℓ_p` comparisons, sign
//! averages, the `ℓ_1` subset search and the shift/difference identities.

mod suite;

pub use suite::{
    derive_seed, run_suite, CheckRecord, CheckStatus, Classification, Profiles, SuiteConfig,
    SuiteReport, SCHEMA_VERSION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{
    BestWitness, ConstantName, ConstantReport, Exponent, Witness, WitnessInput,
};
use crate::error::{Error, Result};
use crate::greedy::{binomial, sign_average, unrank_combination, Budgets, SignMode};
use crate::norms::{
    dual_bracket_with_set, dual_norm_exact, lp_norm, DualOptions, NormOracle, NormingFunctionalSet,
};
use crate::sampler::Sampler;
use crate::space::{conjugate_exponent, Family};
use crate::vector::{FiniteVector, Functional};

/// Geometric decay rates used by the structured inputs.
pub const STRUCTURED_DECAY: [f64; 2] = [0.5, 0.9];

/// Indicators `1_k`, alternating `±1` vectors and spikes `e_k` for
/// `k ≤ max_len`, and geometric decay of length `max_len`.
pub fn structured_vectors(max_len: usize) -> Vec<FiniteVector> {
    let mut out = Vec::new();
    for k in 1..=max_len {
        out.push(FiniteVector::indicator(k));
    }
    for k in 2..=max_len {
        out.push(FiniteVector::new(
            (0..k)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        ));
    }
    for k in 2..=max_len {
        out.push(FiniteVector::unit(k).expect("k >= 1"));
    }
    for r in STRUCTURED_DECAY {
        let mut w = 1.0;
        out.push(FiniteVector::new(
            (0..max_len)
                .map(|_| {
                    let v = w;
                    w *= r;
                    v
                })
                .collect(),
        ));
    }
    out
}

fn sampled(sampler: &Sampler, trials: usize, seed: u64) -> Vec<FiniteVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| sampler.sample(&mut rng)).collect()
}

/// Evaluates every input in parallel and keeps the best, ties going to the
/// earliest input.
fn best_of(
    o: &NormOracle,
    inputs: Vec<WitnessInput>,
    name: ConstantName,
    seed: u64,
) -> Result<ConstantReport> {
    let witnesses: Vec<Witness> = inputs
        .into_par_iter()
        .map(|w| Witness::evaluate(o, w))
        .collect::<Result<_>>()?;
    let mut best = BestWitness::new();
    for w in witnesses {
        best.offer(w);
    }
    Ok(best.into_report(name, seed))
}

/// Certified lower bounds for the two constants in
/// `‖a‖‖b‖/K ≤ ‖a⊗b‖ ≤ K‖a‖‖b‖`, over structured pairs (lengths up to 8)
/// and `trials` sampled pairs.
pub fn k_ratio_stats(
    o: &NormOracle,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
) -> Result<(ConstantReport, ConstantReport)> {
    let structured = structured_vectors(8);
    let mut pairs: Vec<(FiniteVector, FiniteVector)> = Vec::new();
    for a in &structured {
        for b in &structured {
            pairs.push((a.clone(), b.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let a = sampler.sample(&mut rng);
        let b = sampler.sample(&mut rng);
        pairs.push((a, b));
    }
    let ratios: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let na = o.norm(a)?;
            let nb = o.norm(b)?;
            let nab = o.norm(&a.tensor(b))?;
            Ok((nab / (na * nb), na * nb / nab))
        })
        .collect::<Result<_>>()?;
    let mut upper = BestWitness::new();
    let mut lower = BestWitness::new();
    for ((a, b), (u, l)) in pairs.into_iter().zip(ratios) {
        upper.offer(Witness::new(
            u,
            WitnessInput::TensorUpper {
                a: a.clone(),
                b: b.clone(),
            },
        ));
        lower.offer(Witness::new(l, WitnessInput::TensorLower { a, b }));
    }
    Ok((
        upper.into_report(ConstantName::KUpper, seed),
        lower.into_report(ConstantName::KLower, seed),
    ))
}

/// `(‖a‖ⁿ/‖aⁿ‖)^{1/n}` for `n = 1..=n_max`.
pub fn power_condition_profile(o: &NormOracle, a: &FiniteVector, n_max: u32) -> Result<Vec<f64>> {
    let na = o.norm(a)?;
    let mut out = Vec::with_capacity(n_max as usize);
    let mut power = FiniteVector::unit(1)?;
    for n in 1..=n_max {
        power = power.tensor(a);
        if power.len() > crate::vector::DEFAULT_SIZE_CAP {
            return Err(Error::SizeCap {
                len: power.len() as u128,
                cap: crate::vector::DEFAULT_SIZE_CAP,
            });
        }
        out.push((na.powi(n as i32) / o.norm(&power)?).powf(1.0 / n as f64));
    }
    Ok(out)
}

/// Entry `[m-1][n-1]` is `λ(mn)/(λ(m)λ(n))`.
pub fn lambda_grid(o: &NormOracle, m_max: usize, n_max: usize) -> Result<Vec<Vec<f64>>> {
    let top = m_max * n_max;
    let lam: Vec<f64> = (1..=top)
        .into_par_iter()
        .map(|k| o.norm(&FiniteVector::indicator(k)))
        .collect::<Result<_>>()?;
    Ok((1..=m_max)
        .map(|m| {
            (1..=n_max)
                .map(|n| lam[m * n - 1] / (lam[m - 1] * lam[n - 1]))
                .collect()
        })
        .collect())
}

/// Slopes below this are read as "no growth".
pub const FLAT_SLOPE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `1/slope`, or `"inf"` when the slope is below [`FLAT_SLOPE`].
    pub p_hat: Exponent,
    pub slope: f64,
    pub r_squared: f64,
    /// `(n, λ(n))` at `n = 1, 2, 4, ...`.
    pub points: Vec<(usize, f64)>,
}

impl ExponentFit {
    pub fn is_flat(&self) -> bool {
        !self.p_hat.0.is_finite()
    }
}

/// Least-squares slope of `log λ(2^k)` against `k log 2`, where
/// `lambda[n - 1] = λ(n)`. Needs at least three dyadic points.
pub fn fit_exponent(lambda: &[f64]) -> Result<ExponentFit> {
    let points: Vec<(usize, f64)> = (0..)
        .map(|k| 1usize << k)
        .take_while(|&n| n <= lambda.len())
        .map(|n| (n, lambda[n - 1]))
        .collect();
    if points.len() < 3 {
        return Err(Error::InvalidParam {
            name: "window",
            value: lambda.len() as f64,
            reason: "exponent fit needs at least 3 dyadic points (window >= 4)",
        });
    }
    let xs: Vec<f64> = (0..points.len())
        .map(|k| k as f64 * std::f64::consts::LN_2)
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * my.abs().max(1.0) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    let p_hat = if slope.abs() < FLAT_SLOPE {
        f64::INFINITY
    } else {
        1.0 / slope
    };
    Ok(ExponentFit {
        p_hat: Exponent(p_hat),
        slope,
        r_squared,
        points,
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParam {
            name: "p",
            value: p,
            reason: "must be at least 1",
        });
    }
    Ok(())
}

/// Lower bound for the best `K` in `‖a‖ ≤ K‖a‖_p`.
pub fn upper_p_estimate_check(
    o: &NormOracle,
    p: f64,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
) -> Result<ConstantReport> {
    check_exponent(p)?;
    let inputs: Vec<WitnessInput> = structured_vectors(sampler.max_len.max(16))
        .into_iter()
        .chain(sampled(sampler, trials, seed))
        .map(|a| WitnessInput::LpComparison { a, p: Exponent(p) })
        .collect();
    best_of(o, inputs, ConstantName::UpperP, seed)
}

/// The `x` attaining the dual norm for closed-form duals.
fn holder_extremal(o: &NormOracle, f: &Functional) -> FiniteVector {
    let c = f.as_slice();
    let sign = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    match o.family() {
        Family::C0 => FiniteVector::new(c.iter().map(|&x| sign(x)).collect()),
        _ if o.descriptor.p == 1.0 => {
            let i = (0..c.len())
                .max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()).then(j.cmp(&i)))
                .unwrap_or(0);
            let mut v = vec![0.0; c.len()];
            v[i] = sign(c[i]);
            FiniteVector::new(v)
        }
        _ => {
            let q = o.descriptor.conjugate();
            FiniteVector::new(c.iter().map(|&x| sign(x) * x.abs().powf(q - 1.0)).collect())
        }
    }
}

/// Lower bound for the best `K` in `‖f‖_* ≤ K‖f‖_q`, from explicit pairings
/// `f(x)/‖x‖`. `estimate` uses the upper end of each dual bracket.
/// At most `functionals` sampled functionals are tried besides the
/// structured ones.
pub fn dual_q_estimate_check(
    o: &NormOracle,
    q: f64,
    sampler: &Sampler,
    functionals: usize,
    seed: u64,
    dual: &DualOptions,
) -> Result<ConstantReport> {
    check_exponent(q)?;
    let fs: Vec<Functional> = structured_vectors(sampler.max_len)
        .into_iter()
        .chain(sampled(sampler, functionals, seed))
        .map(Functional::from)
        .collect();
    let window = fs.iter().map(|f| f.len()).max().unwrap_or(0);
    let norming = if o.family() == Family::Tsirelson && window <= dual.norming_window_cap {
        NormingFunctionalSet::generate_with_cap(
            o.descriptor.theta,
            window,
            dual.norming_depth.unwrap_or(window),
            dual.functional_cap,
        )
        .ok()
    } else {
        None
    };
    let rows: Vec<(Witness, f64)> = fs
        .par_iter()
        .map(|f| {
            let fq = lp_norm(f.as_slice(), q);
            let (x, upper) = if o.has_exact_dual() {
                (holder_extremal(o, f), dual_norm_exact(o, f)?)
            } else {
                let b = dual_bracket_with_set(o, f, dual, norming.as_ref())?;
                (b.witness, b.upper)
            };
            let w = Witness::evaluate(
                o,
                WitnessInput::DualPairing {
                    f: f.clone(),
                    x,
                    q: Exponent(q),
                },
            )?;
            Ok((w, upper / fq))
        })
        .collect::<Result<_>>()?;
    let mut best = BestWitness::new();
    let mut estimate = f64::NEG_INFINITY;
    for (w, u) in rows {
        estimate = estimate.max(u);
        best.offer(w);
    }
    let mut report = best.into_report(ConstantName::DualQ, seed);
    report.estimate = estimate.max(report.certified_lower);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub n: usize,
    /// `Ave ‖Σ±e_i‖ / n`
    pub value: f64,
    pub stderr: f64,
    pub mode: SignMode,
}

/// Normalized sign averages for `n = 1..=window`: exhaustive while
/// `2^(n-1)` fits `sign_cap`, Monte Carlo with `trials` draws beyond.
pub fn ell1_average_slope(
    o: &NormOracle,
    window: usize,
    budgets: &Budgets,
    seed: u64,
) -> Result<Vec<SlopeEntry>> {
    (1..=window)
        .map(|n| {
            let exhaustive =
                n <= crate::greedy::MAX_EXHAUSTIVE_SIGNS && (1u64 << (n - 1)) <= budgets.sign_cap;
            let mode = if exhaustive {
                SignMode::Exhaustive
            } else {
                SignMode::MonteCarlo
            };
            let a = sign_average(o, n, mode, budgets.trials, seed.wrapping_add(n as u64))?;
            Ok(SlopeEntry {
                n,
                value: a.mean / n as f64,
                stderr: a.stderr / n as f64,
                mode: a.mode,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EltonResult {
    pub n: usize,
    pub c: f64,
    /// Largest passing subset, first in lexicographic order among its size.
    pub subset: Vec<usize>,
    /// `|subset| / n`
    pub delta: f64,
    /// Certified lower bound for `min ‖Σ_{i∈A} a_i e_i‖` over `Σ|a_i| = 1`.
    pub certified_lower: f64,
    /// Smallest ratio found by search (an upper bound for the same minimum).
    pub estimate: f64,
    /// Vector on the subset attaining `estimate` as `‖a‖/‖a‖_1`.
    pub witness: Option<Witness>,
    pub subsets_examined: usize,
}

/// ℓ1-lower constant of the coordinates in `set`, as
/// `(certified lower, searched value, minimizing vector)`.
///
/// For each sign pattern `s` on the set (only the all-plus one when the norm
/// is 1-unconditional), pairing with `f_s = Σ s_i e_i*` gives
/// `‖Σ a_i e_i‖ ≥ ‖a‖_1 / ‖f_s‖_*`, so `1/upper(‖f_s‖_*)` is certified. For
/// 1-unconditional norms a minimax argument makes `1/‖f_s‖_*` the exact
/// minimum over the simplex, and the ascent witness of the dual bracket,
/// scaled to the sphere, attains `1/lower`. Otherwise the simplex is searched
/// directly by pairwise mass transfers.
pub fn ell1_lower_constant(
    o: &NormOracle,
    set: &[usize],
    dual: &DualOptions,
    norming: Option<&NormingFunctionalSet>,
) -> Result<(f64, f64, FiniteVector)> {
    let k = set.len();
    let patterns: u64 = if o.is_1_unconditional() {
        1
    } else {
        1 << (k - 1)
    };
    let mut certified = f64::INFINITY;
    let mut best = (f64::INFINITY, FiniteVector::zero());
    for pattern in 0..patterns {
        let signs: Vec<f64> = (0..k)
            .map(|i| {
                if (pattern << 1) >> i & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect();
        let len = *set.last().expect("nonempty set");
        let mut coeffs = vec![0.0; len];
        for (s, &i) in signs.iter().zip(set) {
            coeffs[i - 1] = *s;
        }
        let f = Functional::new(coeffs);
        let (upper, candidate) = if o.has_exact_dual() {
            (
                dual_norm_exact(o, &f)?,
                simplex_descent(o, set, &signs, dual.max_sweeps)?,
            )
        } else {
            let b = dual_bracket_with_set(o, &f, dual, norming)?;
            let x = if o.is_1_unconditional() && b.witness.l1() > 0.0 {
                b.witness.scale(1.0 / b.witness.l1())
            } else {
                simplex_descent(o, set, &signs, dual.max_sweeps)?
            };
            (b.upper, x)
        };
        certified = certified.min(1.0 / upper);
        let r = o.norm(&candidate)? / candidate.l1();
        if r < best.0 {
            best = (r, candidate);
        }
    }
    Ok((certified.min(best.0), best.0, best.1))
}

/// Coordinate search for `min ‖Σ s_i a_i e_i‖` over `a ≥ 0`, `Σ a_i = 1`,
/// moving mass between pairs of coordinates with halving steps.
fn simplex_descent(
    o: &NormOracle,
    set: &[usize],
    signs: &[f64],
    max_sweeps: usize,
) -> Result<FiniteVector> {
    let k = set.len();
    let len = *set.last().expect("nonempty set");
    let build = |a: &[f64]| {
        let mut c = vec![0.0; len];
        for j in 0..k {
            c[set[j] - 1] = signs[j] * a[j];
        }
        FiniteVector::new(c)
    };
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / k as f64; k]];
    for j in 0..k {
        let mut v = vec![0.0; k];
        v[j] = 1.0;
        starts.push(v);
    }
    let mut best = (f64::INFINITY, vec![]);
    for mut a in starts {
        let mut val = o.norm(&build(&a))?;
        let mut step: f64 = 0.5;
        let mut sweeps = 0;
        while step > 1e-9 && sweeps < max_sweeps.max(40) {
            sweeps += 1;
            let mut improved = false;
            for i in 0..k {
                for j in 0..k {
                    if i == j || a[i] <= 0.0 {
                        continue;
                    }
                    let t = step.min(a[i]);
                    a[i] -= t;
                    a[j] += t;
                    let v = o.norm(&build(&a))?;
                    if v < val - 1e-15 {
                        val = v;
                        improved = true;
                    } else {
                        a[i] += t;
                        a[j] -= t;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if val < best.0 {
            best = (val, a);
        }
    }
    Ok(build(&best.1))
}

/// Largest `A ⊆ {1..n}` whose certified ℓ1-lower constant is at least `c`,
/// scanning sizes from `n` down and subsets in lexicographic order.
pub fn elton_subset_search(
    o: &NormOracle,
    n: usize,
    c: f64,
    dual: &DualOptions,
) -> Result<EltonResult> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidParam {
            name: "n",
            value: n as f64,
            reason: "subset search needs 1 <= n <= 16",
        });
    }
    let norming = if o.family() == Family::Tsirelson && n <= dual.norming_window_cap {
        NormingFunctionalSet::generate_with_cap(
            o.descriptor.theta,
            n,
            dual.norming_depth.unwrap_or(n),
            dual.functional_cap,
        )
        .ok()
    } else {
        None
    };
    let mut examined = 0;
    for k in (1..=n).rev() {
        for r in 0..binomial(n, k) {
            let set = unrank_combination(n, k, r);
            examined += 1;
            let (certified, estimate, x) = ell1_lower_constant(o, &set, dual, norming.as_ref())?;
            if certified >= c * (1.0 - 1e-12) {
                let witness = Witness::evaluate(
                    o,
                    WitnessInput::LpComparison {
                        a: x,
                        p: Exponent(1.0),
                    },
                )?;
                return Ok(EltonResult {
                    n,
                    c,
                    delta: k as f64 / n as f64,
                    subset: set,
                    certified_lower: certified,
                    estimate,
                    witness: Some(witness),
                    subsets_examined: examined,
                });
            }
        }
    }
    Ok(EltonResult {
        n,
        c,
        subset: Vec::new(),
        delta: 0.0,
        certified_lower: 0.0,
        estimate: 0.0,
        witness: None,
        subsets_examined: examined,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// sup of the new/old norm ratio
    pub forward: ConstantReport,
    /// sup of the old/new norm ratio
    pub backward: ConstantReport,
    /// The `⊗` identity held coefficient-exactly on every input it applies to.
    pub identity_holds: bool,
    pub identity_checked: usize,
}

/// Compares `Σa_i e_{mn+i}` with `Σa_i e_i` for `a` supported in `{1..n}`,
/// and checks `e_{m+1} ⊗ a` against the explicit shift when `a` has trimmed
/// length `n`.
pub fn shift_equivalence(
    o: &NormOracle,
    m: usize,
    n: usize,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if n == 0 {
        return Err(Error::InvalidParam {
            name: "n",
            value: 0.0,
            reason: "must be positive",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = structured_vectors(n);
    for _ in 0..trials {
        inputs.push(sampler.sample_len(&mut rng, n));
    }
    let e = FiniteVector::unit(m + 1)?;
    let mut checked = 0;
    let mut holds = true;
    for a in &inputs {
        if a.len() == n {
            checked += 1;
            holds &= e.tensor(a) == a.shift(m * n);
        }
    }
    let fwd: Vec<WitnessInput> = inputs
        .iter()
        .map(|a| WitnessInput::NormRatio {
            num: a.shift(m * n),
            den: a.clone(),
        })
        .collect();
    let bwd: Vec<WitnessInput> = inputs
        .iter()
        .map(|a| WitnessInput::NormRatio {
            num: a.clone(),
            den: a.shift(m * n),
        })
        .collect();
    Ok(EquivalenceReport {
        forward: best_of(o, fwd, ConstantName::ShiftForward, seed)?,
        backward: best_of(o, bwd, ConstantName::ShiftBackward, seed)?,
        identity_holds: holds,
        identity_checked: checked,
    })
}

/// `Σ a_i (e_{2i} − e_{2i−1})`, built coordinate by coordinate.
pub fn difference_image(a: &FiniteVector) -> FiniteVector {
    let mut c = vec![0.0; 2 * a.len()];
    for (i, &v) in a.as_slice().iter().enumerate() {
        c[2 * i] = -v;
        c[2 * i + 1] = v;
    }
    FiniteVector::new(c)
}

/// Compares `Σ a_i (e_{2i} − e_{2i−1})` with `Σ a_i e_i` and checks it
/// against `a ⊗ (e_2 − e_1)`.
pub fn difference_basis_check(
    o: &NormOracle,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let inputs: Vec<FiniteVector> = structured_vectors(sampler.max_len)
        .into_iter()
        .chain(sampled(sampler, trials, seed))
        .collect();
    let d = FiniteVector::new(vec![-1.0, 1.0]);
    let holds = inputs.iter().all(|a| a.tensor(&d) == difference_image(a));
    let up: Vec<WitnessInput> = inputs
        .iter()
        .map(|a| WitnessInput::NormRatio {
            num: difference_image(a),
            den: a.clone(),
        })
        .collect();
    let down: Vec<WitnessInput> = inputs
        .iter()
        .map(|a| WitnessInput::NormRatio {
            num: a.clone(),
            den: difference_image(a),
        })
        .collect();
    Ok(EquivalenceReport {
        forward: best_of(o, up, ConstantName::DifferenceUpper, seed)?,
        backward: best_of(o, down, ConstantName::DifferenceLower, seed)?,
        identity_holds: holds,
        identity_checked: inputs.len(),
    })
}

/// Witnessed `(‖a‖ⁿ/‖aⁿ‖)^{1/n}` maximized over inputs and `n ≤ n_max`.
pub fn power_constant(
    o: &NormOracle,
    inputs: &[FiniteVector],
    n_max: u32,
    seed: u64,
) -> Result<ConstantReport> {
    let mut list = Vec::new();
    for a in inputs {
        for n in 1..=n_max {
            if (a.len() as f64).powi(n as i32) <= o.window_cap as f64 {
                list.push(WitnessInput::Power { a: a.clone(), n });
            }
        }
    }
    best_of(o, list, ConstantName::KTilde, seed)
}

pub(crate) fn conjugate_or_one(p: f64) -> f64 {
    if p.is_finite() {
        conjugate_exponent(p)
    } else {
        1.0
    }
}
