//! Indicator norms `λ`, fundamental functions `Φ`, `Φ*`, democracy and
//! constant-coefficient constants, sign averages and the thresholding
//! operator `𝒢_δ`.
//!
//! Everything that enumerates subsets or sign patterns does so by index, in
//! parallel, and reduces with "largest value, then smallest index" so results
//! do not depend on scheduling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{BestWitness, ConstantName, ConstantReport, Witness, WitnessInput};
use crate::error::{Error, Result};
use crate::norms::{dual_bracket_with_set, lp_norm, DualOptions, NormOracle, NormingFunctionalSet};
use crate::sampler::Sampler;
use crate::space::Family;
use crate::vector::{FiniteVector, Functional};

pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;
pub const DEFAULT_SIGN_CAP: u64 = 1 << 20;
pub const DEFAULT_TRIALS: usize = 2000;
/// Sign patterns are enumerated exhaustively only up to this length.
pub const MAX_EXHAUSTIVE_SIGNS: usize = 20;
/// Rough operation budget for one exhaustive subset scan.
pub const DEFAULT_WORK_CAP: f64 = 4e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    Exhaustive,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub subset_cap: u128,
    pub sign_cap: u64,
    pub trials: usize,
    /// Random subsets tried per size in heuristic mode.
    pub heuristic_samples: usize,
    /// Estimated elementary operations allowed for one exhaustive scan in
    /// automatic mode.
    pub work_cap: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            subset_cap: DEFAULT_SUBSET_CAP,
            sign_cap: DEFAULT_SIGN_CAP,
            trials: DEFAULT_TRIALS,
            heuristic_samples: 32,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// The `r`-th `k`-subset of `{1..n}` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut r: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 1;
    for slot in 0..k {
        let remaining = k - slot;
        loop {
            let with_next = binomial(n - next, remaining - 1);
            if r < with_next {
                out.push(next);
                next += 1;
                break;
            }
            r -= with_next;
            next += 1;
        }
    }
    out
}

/// Larger value wins, then the smaller index.
fn pick(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Smaller value wins, then the smaller index.
fn pick_min(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `λ(A) = ‖Σ_{i∈A} e_i‖`.
pub fn lambda_of_set(o: &NormOracle, set: &[usize]) -> Result<f64> {
    o.norm(&FiniteVector::indicator_of_set(set)?)
}

/// `λ(n) = λ({1..n})`.
pub fn lambda(o: &NormOracle, n: usize) -> Result<f64> {
    o.norm(&FiniteVector::indicator(n))
}

/// Relative cost of one norm evaluation on `s` support points.
fn norm_cost(o: &NormOracle, s: usize) -> f64 {
    let s = s.max(1) as f64;
    match o.family() {
        Family::Tsirelson | Family::PConvexTsirelson => s.powi(4) / 4.0 + s,
        Family::Lorentz => s * s.log2().max(1.0),
        _ => s,
    }
}

fn check_window(n: usize, window: usize) -> Result<()> {
    if n == 0 || n > window {
        return Err(Error::InvalidParam {
            name: "n",
            value: n as f64,
            reason: "must lie in 1..=window",
        });
    }
    Ok(())
}

/// Subset sizes that an exhaustive `Φ(n)` scan must visit.
fn exhaustive_sizes(o: &NormOracle, n: usize) -> Vec<usize> {
    if o.is_1_unconditional() {
        vec![n]
    } else {
        (1..=n).collect()
    }
}

fn exhaustive_count(o: &NormOracle, n: usize, window: usize) -> u128 {
    exhaustive_sizes(o, n)
        .iter()
        .map(|&k| binomial(window, k))
        .sum()
}

/// Extremes of `λ` over the sets visited for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub n: usize,
    /// Largest `λ(A)` found with `|A| ≤ n`; a lower bound for `Φ(n)` over ℕ.
    pub value: f64,
    pub mode: Mode,
    pub argmax: Vec<usize>,
    /// Smallest `λ(A)` found with `|A| = n`.
    pub min_value: f64,
    pub argmin: Vec<usize>,
    pub sets_examined: u128,
}

fn exhaustive_phi(o: &NormOracle, n: usize, window: usize, cap: u128) -> Result<PhiValue> {
    check_window(n, window)?;
    let needed = exhaustive_count(o, n, window);
    if needed > cap {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cap,
        });
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut worst = (f64::INFINITY, Vec::new());
    for k in exhaustive_sizes(o, n) {
        let count = binomial(window, k) as u64;
        let (hi, lo) = (0..count)
            .into_par_iter()
            .map(|r| {
                let v = lambda_of_set(o, &unrank_combination(window, k, r as u128))?;
                Ok(((v, r), (v, r)))
            })
            .try_reduce(
                || ((f64::NEG_INFINITY, u64::MAX), (f64::INFINITY, u64::MAX)),
                |a, b| Ok((pick(a.0, b.0), pick_min(a.1, b.1))),
            )?;
        if hi.0 > best.0 {
            best = (hi.0, unrank_combination(window, k, hi.1 as u128));
        }
        if k == n {
            worst = (lo.0, unrank_combination(window, k, lo.1 as u128));
        }
    }
    Ok(PhiValue {
        n,
        value: best.0,
        mode: Mode::Exhaustive,
        argmax: best.1,
        min_value: worst.0,
        argmin: worst.1,
        sets_examined: needed,
    })
}

/// Greedy augmentation: each step adds the index raising `λ` the most.
/// Entry `k - 1` is the chain's `k`-set and its `λ`.
fn greedy_chain(o: &NormOracle, window: usize, len: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    let mut chain = Vec::with_capacity(len);
    let mut current: Vec<usize> = Vec::new();
    for _ in 0..len {
        let (v, i) = (1..=window as u64)
            .into_par_iter()
            .filter(|i| !current.contains(&(*i as usize)))
            .map(|i| {
                let mut set = current.clone();
                set.push(i as usize);
                set.sort_unstable();
                Ok((lambda_of_set(o, &set)?, i))
            })
            .try_reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| Ok(pick(a, b)))?;
        current.push(i as usize);
        current.sort_unstable();
        chain.push((current.clone(), v));
    }
    Ok(chain)
}

/// Candidate `n`-sets for heuristic mode: leftmost and rightmost blocks, the
/// chain set, and seeded random subsets.
fn heuristic_candidates(
    n: usize,
    window: usize,
    chain: &[(Vec<usize>, f64)],
    samples: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut sets = vec![
        (1..=n).collect::<Vec<_>>(),
        (window + 1 - n..=window).collect(),
        chain[n - 1].0.clone(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for _ in 0..samples {
        let mut s: Vec<usize> = index::sample(&mut rng, window, n)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        s.sort_unstable();
        sets.push(s);
    }
    sets
}

fn heuristic_phi(
    o: &NormOracle,
    n: usize,
    window: usize,
    chain: &[(Vec<usize>, f64)],
    samples: usize,
    seed: u64,
) -> Result<PhiValue> {
    let sets = heuristic_candidates(n, window, chain, samples, seed);
    let values: Vec<f64> = sets
        .par_iter()
        .map(|s| lambda_of_set(o, s))
        .collect::<Result<_>>()?;
    let mut hi = (f64::NEG_INFINITY, 0);
    let mut lo = (f64::INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > hi.0 {
            hi = (v, i);
        }
        if v < lo.0 {
            lo = (v, i);
        }
    }
    Ok(PhiValue {
        n,
        value: hi.0,
        mode: Mode::Heuristic,
        argmax: sets[hi.1].clone(),
        min_value: lo.0,
        argmin: sets[lo.1].clone(),
        sets_examined: sets.len() as u128,
    })
}

fn wants_exhaustive(o: &NormOracle, n: usize, window: usize, budgets: &Budgets) -> bool {
    let count = exhaustive_count(o, n, window);
    count <= budgets.subset_cap && count as f64 * norm_cost(o, n) <= budgets.work_cap
}

/// `Φ(n)` restricted to subsets of `{1..window}`.
///
/// `mode = None` picks exhaustive search when it fits the budgets. Requesting
/// [`Mode::Exhaustive`] past `subset_cap` is an error. Heuristic values, and
/// exhaustive ones for non-1-unconditional norms, are made monotone by taking
/// the maximum with every smaller size.
pub fn fundamental_function(
    o: &NormOracle,
    n: usize,
    window: usize,
    mode: Option<Mode>,
    budgets: &Budgets,
    seed: u64,
) -> Result<PhiValue> {
    check_window(n, window)?;
    let exhaustive = match mode {
        Some(Mode::Exhaustive) => true,
        Some(Mode::Heuristic) => false,
        None => wants_exhaustive(o, n, window, budgets),
    };
    if exhaustive {
        return exhaustive_phi(o, n, window, budgets.subset_cap);
    }
    let chain = greedy_chain(o, window, n)?;
    let mut best: Option<PhiValue> = None;
    for k in 1..=n {
        let v = heuristic_phi(o, k, window, &chain, budgets.heuristic_samples, seed)?;
        best = Some(match best {
            Some(mut b) if b.value >= v.value => {
                b.n = v.n;
                b.min_value = v.min_value;
                b.argmin = v.argmin;
                b.sets_examined += v.sets_examined;
                b
            }
            Some(b) => PhiValue {
                sets_examined: v.sets_examined + b.sets_examined,
                ..v
            },
            None => v,
        });
    }
    Ok(best.expect("n >= 1"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalEntry {
    pub n: usize,
    pub lambda: f64,
    /// Window lower bound for `Φ(n)`.
    pub phi: f64,
    pub phi_mode: Mode,
    pub phi_argmax: Vec<usize>,
    /// Closed-form upper bound for `Φ(n)` over ℕ.
    pub phi_upper: f64,
    pub lambda_star: Bracket,
    pub phi_star: Bracket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub mode: Option<Mode>,
    pub budgets: Budgets,
    pub seed: u64,
    /// Dual brackets beyond the pairing bound are searched for `n` up to this.
    pub dual_window: usize,
    pub dual: DualOptions,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            mode: None,
            budgets: Budgets::default(),
            seed: 0,
            dual_window: 12,
            dual: DualOptions {
                restarts: 8,
                max_sweeps: 60,
                norming_window_cap: 12,
                ..DualOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalTable {
    pub window: usize,
    pub entries: Vec<FundamentalEntry>,
}

impl FundamentalTable {
    pub fn compute(o: &NormOracle, window: usize, opts: &TableOptions) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParam {
                name: "window",
                value: 0.0,
                reason: "must be positive",
            });
        }
        let needs_chain = (1..=window).any(|n| match opts.mode {
            Some(Mode::Heuristic) => true,
            Some(Mode::Exhaustive) => false,
            None => !wants_exhaustive(o, n, window, &opts.budgets),
        });
        let chain = if needs_chain {
            greedy_chain(o, window, window)?
        } else {
            Vec::new()
        };
        let norming = dual_norming_set(o, window.min(opts.dual_window), &opts.dual);

        let mut entries: Vec<FundamentalEntry> = Vec::with_capacity(window);
        let mut running: Option<(f64, Vec<usize>)> = None;
        for n in 1..=window {
            let exhaustive = match opts.mode {
                Some(Mode::Exhaustive) => true,
                Some(Mode::Heuristic) => false,
                None => wants_exhaustive(o, n, window, &opts.budgets),
            };
            let pv = if exhaustive {
                exhaustive_phi(o, n, window, opts.budgets.subset_cap)?
            } else {
                heuristic_phi(
                    o,
                    n,
                    window,
                    &chain,
                    opts.budgets.heuristic_samples,
                    opts.seed,
                )?
            };
            let lam = lambda(o, n)?;
            match &running {
                Some((v, _)) if *v >= pv.value => {}
                _ => running = Some((pv.value, pv.argmax.clone())),
            }
            let (phi, phi_argmax) = running.clone().expect("set above");
            let (lambda_star, phi_star) =
                dual_fundamental_pair(o, n, lam, &pv, opts, norming.as_ref())?;
            entries.push(FundamentalEntry {
                n,
                lambda: lam,
                phi: phi.max(lam),
                phi_mode: pv.mode,
                phi_argmax,
                phi_upper: o.fundamental_upper_bound(n).max(phi),
                lambda_star,
                phi_star,
            });
        }
        Ok(Self { window, entries })
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    pub fn phi(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.phi).collect()
    }
}

fn dual_norming_set(
    o: &NormOracle,
    window: usize,
    opts: &DualOptions,
) -> Option<NormingFunctionalSet> {
    if o.family() != Family::Tsirelson || window == 0 || window > opts.norming_window_cap {
        return None;
    }
    let depth = opts.norming_depth.unwrap_or(window);
    NormingFunctionalSet::generate_with_cap(o.descriptor.theta, window, depth, opts.functional_cap)
        .ok()
}

/// Exact `Φ*(n) = λ*(n)` where the dual norm has a closed form.
fn exact_dual_fundamental(o: &NormOracle, n: usize) -> Option<f64> {
    let ones = vec![1.0; n];
    match o.family() {
        Family::Lp => Some(lp_norm(&ones, o.descriptor.conjugate())),
        Family::C0 => Some(n as f64),
        _ => None,
    }
}

fn indicator_dual(
    o: &NormOracle,
    set: &[usize],
    lambda_set: f64,
    opts: &TableOptions,
    norming: Option<&NormingFunctionalSet>,
) -> Result<Bracket> {
    let n = set.len() as f64;
    let mut lower = n / lambda_set;
    let mut upper = n / o.sup_domination();
    let f = Functional::indicator_of_set(set)?;
    if f.len() <= opts.dual_window {
        let b = dual_bracket_with_set(o, &f, &opts.dual, norming)?;
        lower = lower.max(b.lower);
        upper = upper.min(b.upper);
    }
    Ok(Bracket {
        lower,
        upper: upper.max(lower),
    })
}

fn dual_fundamental_pair(
    o: &NormOracle,
    n: usize,
    lam: f64,
    pv: &PhiValue,
    opts: &TableOptions,
    norming: Option<&NormingFunctionalSet>,
) -> Result<(Bracket, Bracket)> {
    if let Some(v) = exact_dual_fundamental(o, n) {
        return Ok((Bracket::exact(v), Bracket::exact(v)));
    }
    let block: Vec<usize> = (1..=n).collect();
    let lambda_star = indicator_dual(o, &block, lam, opts, norming)?;
    let mut phi_star = Bracket {
        lower: lambda_star.lower,
        upper: n as f64 / o.sup_domination(),
    };
    if pv.argmin != block && pv.min_value.is_finite() {
        let b = indicator_dual(o, &pv.argmin, pv.min_value, opts, norming)?;
        phi_star.lower = phi_star.lower.max(b.lower);
    }
    phi_star.upper = phi_star.upper.max(phi_star.lower);
    Ok((lambda_star, phi_star))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualFundamental {
    pub n: usize,
    pub lambda_star: Bracket,
    pub phi_star: Bracket,
    pub exact: bool,
}

/// Brackets for `λ*(n) = ‖Σ_{i≤n} e_i*‖_*` and `Φ*(n)`. The lower end always
/// includes the pairing bound `n / λ(A)`.
pub fn dual_fundamental_function(
    o: &NormOracle,
    n: usize,
    opts: &TableOptions,
) -> Result<DualFundamental> {
    if n == 0 {
        return Ok(DualFundamental {
            n,
            lambda_star: Bracket::exact(0.0),
            phi_star: Bracket::exact(0.0),
            exact: true,
        });
    }
    if let Some(v) = exact_dual_fundamental(o, n) {
        return Ok(DualFundamental {
            n,
            lambda_star: Bracket::exact(v),
            phi_star: Bracket::exact(v),
            exact: true,
        });
    }
    let window = 2 * n;
    let pv = fundamental_function(
        o,
        n,
        window,
        Some(Mode::Heuristic),
        &opts.budgets,
        opts.seed,
    )?;
    let lam = lambda(o, n)?;
    let norming = dual_norming_set(o, n.min(opts.dual_window), &opts.dual);
    let (lambda_star, phi_star) = dual_fundamental_pair(o, n, lam, &pv, opts, norming.as_ref())?;
    Ok(DualFundamental {
        n,
        lambda_star,
        phi_star,
        exact: false,
    })
}

/// Democracy ratio `Φ(|A|)/λ(A)`, maximized over subsets of `{1..window}`:
/// all of them when `2^window - 1 ≤ subset_cap`, otherwise blocks plus
/// `trials` seeded random subsets.
pub fn democracy_constant(
    o: &NormOracle,
    window: usize,
    budgets: &Budgets,
    seed: u64,
) -> Result<ConstantReport> {
    check_window(1, window)?;
    let all = window < 127 && (1u128 << window) - 1 <= budgets.subset_cap;
    let sets: Vec<Vec<usize>> = if all {
        (1u64..(1u64 << window))
            .map(|mask| {
                (0..window)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| i + 1)
                    .collect()
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for n in 1..=window {
            sets.push((1..=n).collect());
            sets.push((window + 1 - n..=window).collect());
        }
        for _ in 0..budgets.trials {
            let n = rng.gen_range(1..=window);
            let mut s: Vec<usize> = index::sample(&mut rng, window, n)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            s.sort_unstable();
            sets.push(s);
        }
        sets
    };
    let values: Vec<f64> = sets
        .par_iter()
        .map(|s| lambda_of_set(o, s))
        .collect::<Result<_>>()?;

    // largest λ among examined sets of each size, then of size ≤ k
    let mut by_size: Vec<Option<usize>> = vec![None; window + 1];
    for (i, s) in sets.iter().enumerate() {
        let k = s.len();
        if by_size[k].is_none_or(|j| values[i] > values[j]) {
            by_size[k] = Some(i);
        }
    }
    let mut phi_idx: Vec<Option<usize>> = vec![None; window + 1];
    for k in 1..=window {
        phi_idx[k] = match (phi_idx[k - 1], by_size[k]) {
            (Some(a), Some(b)) => Some(if values[b] > values[a] { b } else { a }),
            (a, b) => a.or(b),
        };
    }
    let mut best = BestWitness::new();
    for (i, s) in sets.iter().enumerate() {
        let j = phi_idx[s.len()].expect("a set of this size was examined");
        best.offer(Witness::new(
            values[j] / values[i],
            WitnessInput::NormRatio {
                num: FiniteVector::indicator_of_set(&sets[j])?,
                den: FiniteVector::indicator_of_set(s)?,
            },
        ));
    }
    Ok(best.into_report(ConstantName::Delta, seed))
}

fn signed_indicator(n: usize, pattern: u64) -> FiniteVector {
    FiniteVector::new(
        (0..n)
            .map(|i| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 })
            .collect(),
    )
}

fn exhaustive_sign_check(n: usize) -> Result<()> {
    if n > MAX_EXHAUSTIVE_SIGNS {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << n,
            budget: 1u128 << MAX_EXHAUSTIVE_SIGNS,
        });
    }
    Ok(())
}

/// `max ±(‖Σ±e_i‖/λ(n))^{±1}` over sign patterns on `{1..n}`. The first sign
/// is fixed since the norm is even.
pub fn ccu_constant(
    o: &NormOracle,
    n: usize,
    mode: SignMode,
    trials: usize,
    seed: u64,
) -> Result<ConstantReport> {
    check_window(n, usize::MAX)?;
    let y = FiniteVector::indicator(n);
    let lam = o.norm(&y)?;
    let ratio = |pattern: u64| -> Result<f64> {
        let r = o.norm(&signed_indicator(n, pattern))? / lam;
        Ok(r.max(1.0 / r))
    };
    let mut best = BestWitness::new();
    match mode {
        SignMode::Exhaustive => {
            exhaustive_sign_check(n)?;
            let count = 1u64 << (n - 1);
            let (_, p) = (0..count)
                .into_par_iter()
                .map(|k| Ok((ratio(k << 1)?, k)))
                .try_reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| Ok(pick(a, b)))?;
            best.offer_input(
                o,
                WitnessInput::TwoSided {
                    x: signed_indicator(n, p << 1),
                    y: y.clone(),
                },
            )?;
            best.samples = count as usize;
        }
        SignMode::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let patterns: Vec<u64> = (0..trials.max(1))
                .map(|_| (0..n).fold(0u64, |m, i| m | (rng.gen_range(0..2u64) << i)))
                .collect();
            let (_, k) = patterns
                .par_iter()
                .enumerate()
                .map(|(k, &p)| Ok((ratio(p)?, k as u64)))
                .try_reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| Ok(pick(a, b)))?;
            best.offer_input(
                o,
                WitnessInput::TwoSided {
                    x: signed_indicator(n, patterns[k as usize]),
                    y: y.clone(),
                },
            )?;
            best.samples = patterns.len();
        }
    }
    Ok(best.into_report(ConstantName::CCcu, seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignAverage {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub mode: SignMode,
    pub samples: u64,
}

/// Average of `‖Σ_{i≤n} ±e_i‖` over sign patterns. For 1-unconditional norms
/// every pattern has norm `λ(n)`, which is returned directly as the exact
/// mean.
pub fn sign_average(
    o: &NormOracle,
    n: usize,
    mode: SignMode,
    trials: usize,
    seed: u64,
) -> Result<SignAverage> {
    if n == 0 {
        return Ok(SignAverage {
            n,
            mean: 0.0,
            stderr: 0.0,
            mode: SignMode::Exhaustive,
            samples: 1,
        });
    }
    if o.is_1_unconditional() {
        return Ok(SignAverage {
            n,
            mean: lambda(o, n)?,
            stderr: 0.0,
            mode: SignMode::Exhaustive,
            samples: 1,
        });
    }
    match mode {
        SignMode::Exhaustive => {
            exhaustive_sign_check(n)?;
            const CHUNK: u64 = 4096;
            let count = 1u64 << (n - 1);
            let chunks: Vec<Neumaier> = (0..count.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut acc = Neumaier::default();
                    for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
                        acc.add(o.norm(&signed_indicator(n, k << 1))?);
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut total = Neumaier::default();
            for c in chunks {
                total.merge(c);
            }
            Ok(SignAverage {
                n,
                mean: total.total() / count as f64,
                stderr: 0.0,
                mode,
                samples: count,
            })
        }
        SignMode::MonteCarlo => {
            let trials = trials.max(2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let patterns: Vec<u64> = (0..trials)
                .map(|_| (0..n).fold(0u64, |m, i| m | (rng.gen_range(0..2u64) << i)))
                .collect();
            let values: Vec<f64> = patterns
                .par_iter()
                .map(|&p| o.norm(&signed_indicator(n, p)))
                .collect::<Result<_>>()?;
            let mut s = Neumaier::default();
            values.iter().for_each(|&v| s.add(v));
            let mean = s.total() / trials as f64;
            let mut ss = Neumaier::default();
            values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
            let var = ss.total() / (trials - 1) as f64;
            Ok(SignAverage {
                n,
                mean,
                stderr: (var / trials as f64).sqrt(),
                mode,
                samples: trials as u64,
            })
        }
    }
}

/// `Φ(n)·Φ*(n)/n` brackets from a table; the lower end is at least 1.
pub fn bidemocracy_profile(table: &FundamentalTable) -> Vec<Bracket> {
    table
        .entries
        .iter()
        .map(|e| {
            let n = e.n as f64;
            let lower = (e.phi * e.phi_star.lower / n).max(1.0);
            let upper = (e.phi_upper * e.phi_star.upper / n).max(lower);
            Bracket { lower, upper }
        })
        .collect()
}

/// `𝒢_δ(x)`: keeps the coefficients with `|x_i| ≥ δ`.
pub fn quasi_greedy_apply(x: &FiniteVector, delta: f64) -> FiniteVector {
    x.map(|c| if c.abs() >= delta { c } else { 0.0 })
}

/// Best `‖𝒢_δ(x)‖/‖x‖` over the thresholds `δ ∈ {|x_i|}`, the only values at
/// which `𝒢_δ(x)` changes. `None` for `x = 0`.
pub fn quasi_greedy_ratio(o: &NormOracle, x: &FiniteVector) -> Result<Option<Witness>> {
    if x.is_zero() {
        return Ok(None);
    }
    let nx = o.norm(x)?;
    let mut deltas: Vec<f64> = x
        .as_slice()
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| c.abs())
        .collect();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();
    let mut best: Option<Witness> = None;
    for d in deltas {
        let r = o.norm(&quasi_greedy_apply(x, d))? / nx;
        if best.as_ref().is_none_or(|b| r > b.ratio) {
            best = Some(Witness::new(
                r,
                WitnessInput::Threshold {
                    x: x.clone(),
                    delta: d,
                },
            ));
        }
    }
    Ok(best)
}

/// Alternating vector of the given length with positive entries 1 and
/// negative entries `1 - gap`.
pub fn near_alternating(len: usize, gap: f64) -> FiniteVector {
    FiniteVector::new(
        (0..len)
            .map(|i| if i % 2 == 0 { 1.0 } else { -(1.0 - gap) })
            .collect(),
    )
}

/// Gap used by the structured thresholding inputs.
pub const ALTERNATING_GAP: f64 = 1.0 / (1u64 << 40) as f64;

pub fn quasi_greedy_constant(
    o: &NormOracle,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
) -> Result<ConstantReport> {
    let mut inputs: Vec<FiniteVector> = (1..=13)
        .flat_map(|len| {
            [
                near_alternating(len, ALTERNATING_GAP),
                near_alternating(len, 0.5),
            ]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        inputs.push(sampler.sample(&mut rng));
    }
    let results: Vec<Option<Witness>> = inputs
        .par_iter()
        .map(|x| quasi_greedy_ratio(o, x))
        .collect::<Result<_>>()?;
    let mut best = BestWitness::new();
    for w in results.into_iter().flatten() {
        best.offer(w);
    }
    Ok(best.into_report(ConstantName::AQg, seed))
}
