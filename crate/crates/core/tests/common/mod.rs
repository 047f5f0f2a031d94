//! Test-only reference implementations. Nothing here calls into the crate's
//! Tsirelson code.
#![allow(dead_code)]

use std::collections::HashMap;

/// Tsirelson norm by brute force over admissible families of arbitrary
/// (not necessarily interval) successive sets, memoized on support bitmasks.
/// `x[i]` is the coefficient at position `i + 1`.
pub struct SetOracle<'a> {
    x: &'a [f64],
    theta: f64,
    memo: HashMap<u32, f64>,
}

impl<'a> SetOracle<'a> {
    pub fn new(x: &'a [f64], theta: f64) -> Self {
        assert!(x.len() <= 20);
        Self {
            x,
            theta,
            memo: HashMap::new(),
        }
    }

    pub fn norm(&mut self) -> f64 {
        let mask = (0..self.x.len())
            .filter(|&i| self.x[i] != 0.0)
            .fold(0u32, |m, i| m | (1 << i));
        self.norm_of(mask)
    }

    pub fn norm_of(&mut self, mask: u32) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&mask) {
            return v;
        }
        let elems: Vec<usize> = (0..self.x.len()).filter(|&i| mask >> i & 1 == 1).collect();
        let sup = elems.iter().map(|&i| self.x[i].abs()).fold(0.0, f64::max);
        let mut best = 0.0f64;
        self.families(mask, &elems, 0, 0, 0.0, 0, usize::MAX, &mut best);
        let v = sup.max(self.theta * best);
        self.memo.insert(mask, v);
        v
    }

    /// Each element is skipped, added to the open set, or opens a new set.
    #[allow(clippy::too_many_arguments)]
    fn families(
        &mut self,
        whole: u32,
        elems: &[usize],
        idx: usize,
        open: u32,
        closed_sum: f64,
        closed_count: usize,
        first_min: usize,
        best: &mut f64,
    ) {
        if idx == elems.len() {
            if open == 0 {
                return;
            }
            let k = closed_count + 1;
            if k > first_min {
                return;
            }
            if k == 1 && open == whole {
                return;
            }
            let total = closed_sum + self.norm_of(open);
            if total > *best {
                *best = total;
            }
            return;
        }
        let e = elems[idx];
        let bit = 1u32 << e;
        // skip
        self.families(
            whole,
            elems,
            idx + 1,
            open,
            closed_sum,
            closed_count,
            first_min,
            best,
        );
        if open != 0 {
            // join the open set
            self.families(
                whole,
                elems,
                idx + 1,
                open | bit,
                closed_sum,
                closed_count,
                first_min,
                best,
            );
            // close it and open a new one
            let s = self.norm_of(open);
            self.families(
                whole,
                elems,
                idx + 1,
                bit,
                closed_sum + s,
                closed_count + 1,
                first_min,
                best,
            );
        } else {
            // first set; its minimum is position e + 1
            self.families(
                whole,
                elems,
                idx + 1,
                bit,
                closed_sum,
                closed_count,
                e + 1,
                best,
            );
        }
    }
}

pub fn set_oracle_norm(x: &[f64], theta: f64) -> f64 {
    SetOracle::new(x, theta).norm()
}

/// Norm of the indicator of positions `a..=b` by top-down recursion over
/// exact-`k` tilings of `s..=b` (positions, not support points).
pub struct IntervalIndicatorOracle {
    theta: f64,
    lam: HashMap<(usize, usize), f64>,
    tiling: HashMap<(usize, usize, usize), f64>,
}

impl IntervalIndicatorOracle {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            lam: HashMap::new(),
            tiling: HashMap::new(),
        }
    }

    pub fn lambda(&mut self, n: usize) -> f64 {
        self.interval(1, n)
    }

    pub fn interval(&mut self, a: usize, b: usize) -> f64 {
        if let Some(&v) = self.lam.get(&(a, b)) {
            return v;
        }
        let mut best = 0.0f64;
        for s in a..=b {
            for k in 2..=s.min(b - s + 1) {
                best = best.max(self.tile(s, b, k));
            }
        }
        let v = 1.0f64.max(self.theta * best);
        self.lam.insert((a, b), v);
        v
    }

    // best sum over tilings of s..=b by exactly k intervals
    fn tile(&mut self, s: usize, b: usize, k: usize) -> f64 {
        if k == 1 {
            return self.interval(s, b);
        }
        if let Some(&v) = self.tiling.get(&(s, b, k)) {
            return v;
        }
        let mut best = f64::NEG_INFINITY;
        for t in s..=b + 1 - k {
            let v = self.interval(s, t) + self.tile(t + 1, b, k - 1);
            best = best.max(v);
        }
        self.tiling.insert((s, b, k), best);
        best
    }
}

/// Splitmix-style generator so fixtures never depend on an external RNG.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Dyadic value `k/8` with `k ∈ [-16, 16]`, so sums and θ = 1/2 scalings
    /// stay exact in floating point.
    pub fn dyadic(&mut self) -> f64 {
        (self.below(33) as f64 - 16.0) / 8.0
    }

    pub fn small_int(&mut self, bound: i64) -> f64 {
        (self.below((2 * bound + 1) as u64) as i64 - bound) as f64
    }
}

pub fn random_dyadic_vectors(count: usize, max_len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Lcg(seed);
    (0..count)
        .map(|_| {
            let len = 1 + rng.below(max_len as u64) as usize;
            let mut v: Vec<f64> = (0..len).map(|_| rng.dyadic()).collect();
            if v.iter().all(|c| *c == 0.0) {
                v[len - 1] = 1.0;
            }
            v
        })
        .collect()
}

/// Nonnegative points `k/denom` on the simplex over `size` coordinates.
fn simplex_grid(size: usize, denom: usize) -> Vec<Vec<usize>> {
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
    rec(denom, size, &mut Vec::new(), &mut out);
    out
}

/// Largest `A ⊆ {1..n}` (lexicographically first among its size) on which
/// `‖x‖_T ≥ c‖x‖₁` for every `x` supported on `A`, by certificate only.
///
/// A set fails when an indicator of a subset of `A`, or a grid point on the
/// simplex, has ratio below `c`. A set
/// passes when `min A ≥ |A|` and `c ≤ θ`, since then the singletons of `A`
/// form an admissible family. Any set left undecided panics.
pub fn elton_oracle(n: usize, c: f64, theta: f64, denom: usize) -> Vec<usize> {
    assert!(n <= 16 && c <= theta);
    for size in (1..=n).rev() {
        let grid = simplex_grid(size, denom);
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut cur = Vec::new();
        fn combos(
            start: usize,
            n: usize,
            k: usize,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..=n {
                cur.push(i);
                combos(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        combos(1, n, size, &mut cur, &mut sets);
        for a in sets {
            let indicator_fails = (1u32..1 << size).any(|mask| {
                let mut x = vec![0.0; n];
                for (j, &pos) in a.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        x[pos - 1] = 1.0;
                    }
                }
                set_oracle_norm(&x, theta) < c * mask.count_ones() as f64
            });
            let fails = indicator_fails
                || grid.iter().any(|g| {
                    let mut x = vec![0.0; n];
                    for (&pos, &k) in a.iter().zip(g) {
                        x[pos - 1] = k as f64;
                    }
                    set_oracle_norm(&x, theta) < c * denom as f64
                });
            if fails {
                continue;
            }
            assert!(a[0] >= a.len(), "undecided set {a:?}");
            return a;
        }
    }
    panic!("no passing set");
}
