//! Norming functionals for the Tsirelson norm on a finite window.
//!
//! Level 0 holds `±e_i*` for `i ≤ N`. Level `k+1` adds `θ (f_1 + ... + f_j)`
//! for functionals of earlier levels with successive supports and
//! `j ≤ min supp f_1`. The set is closed under coordinate sign changes, so only
//! the nonnegative representatives are stored; the signed set is their orbit.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{FiniteVector, Functional};

pub const DEFAULT_FUNCTIONAL_CAP: usize = 200_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormingFunctionalSet {
    /// Nonnegative representatives, each of length `window`.
    functionals: Vec<Vec<f64>>,
    pub window: usize,
    pub depth: usize,
    pub theta: f64,
}

#[derive(Clone)]
struct Entry {
    coeffs: Vec<f64>,
    // 0-based first and last support index
    first: usize,
    last: usize,
}

fn key(c: &[f64]) -> Vec<u64> {
    c.iter().map(|x| x.to_bits()).collect()
}

impl NormingFunctionalSet {
    pub fn generate(theta: f64, window: usize, depth: usize) -> Result<Self> {
        Self::generate_with_cap(theta, window, depth, DEFAULT_FUNCTIONAL_CAP)
    }

    pub fn generate_with_cap(theta: f64, window: usize, depth: usize, cap: usize) -> Result<Self> {
        let mut entries: Vec<Entry> = (0..window)
            .map(|i| {
                let mut c = vec![0.0; window];
                c[i] = 1.0;
                Entry {
                    coeffs: c,
                    first: i,
                    last: i,
                }
            })
            .collect();
        if entries.len() > cap {
            return Err(Error::FunctionalCap { cap });
        }
        let mut seen: HashSet<Vec<u64>> = entries.iter().map(|e| key(&e.coeffs)).collect();
        // entries grouped by (first, last); a functional dominated coordinatewise
        // by another with the same span never changes the max at |x| and
        // chains into dominated combinations only
        let mut spans: HashMap<(usize, usize), Vec<Vec<f64>>> = HashMap::new();
        for e in &entries {
            spans
                .entry((e.first, e.last))
                .or_default()
                .push(e.coeffs.clone());
        }

        for _ in 0..depth {
            // entries sorted by first support index for successive chaining
            let mut by_first: Vec<Vec<usize>> = vec![Vec::new(); window];
            for (i, e) in entries.iter().enumerate() {
                by_first[e.first].push(i);
            }
            let mut fresh: Vec<Entry> = Vec::new();
            for start in 0..window {
                // j ≤ min supp f_1, with 1-based support
                let max_pieces = start + 1;
                if max_pieces < 2 {
                    continue;
                }
                for &head in &by_first[start] {
                    let e = &entries[head];
                    let acc = e.coeffs.clone();
                    extend_chain(
                        &entries,
                        &by_first,
                        &acc,
                        e.last,
                        1,
                        max_pieces,
                        start,
                        theta,
                        &mut seen,
                        &mut fresh,
                        entries.len(),
                        cap,
                    )?;
                }
            }
            fresh.retain(|e| {
                let group = spans.entry((e.first, e.last)).or_default();
                let dominated = group
                    .iter()
                    .any(|g| g.iter().zip(&e.coeffs).all(|(a, b)| a >= b));
                if !dominated {
                    group.push(e.coeffs.clone());
                }
                !dominated
            });
            if fresh.is_empty() {
                break;
            }
            entries.extend(fresh);
        }

        Ok(Self {
            functionals: entries.into_iter().map(|e| e.coeffs).collect(),
            window,
            depth,
            theta,
        })
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    /// Nonnegative representatives.
    pub fn representatives(&self) -> &[Vec<f64>] {
        &self.functionals
    }

    /// The full signed set, expanded from the representatives.
    pub fn signed_functionals(&self) -> Vec<Functional> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for f in &self.functionals {
            let support: Vec<usize> = (0..f.len()).filter(|&i| f[i] != 0.0).collect();
            for mask in 0u64..(1u64 << support.len()) {
                let mut g = f.clone();
                for (b, &i) in support.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        g[i] = -g[i];
                    }
                }
                if seen.insert(key(&g)) {
                    out.push(Functional::new(g));
                }
            }
        }
        out
    }

    /// `max_f f(x)` over the signed set; a lower bound for the Tsirelson norm
    /// that is exact once `depth ≥ window`.
    pub fn max_pairing(&self, x: &FiniteVector) -> f64 {
        let ax: Vec<f64> = (1..=self.window).map(|i| x.coeff(i).abs()).collect();
        self.functionals
            .iter()
            .map(|f| f.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[allow(clippy::too_many_arguments)]
fn extend_chain(
    entries: &[Entry],
    by_first: &[Vec<usize>],
    acc: &[f64],
    last: usize,
    pieces: usize,
    max_pieces: usize,
    first: usize,
    theta: f64,
    seen: &mut HashSet<Vec<u64>>,
    fresh: &mut Vec<Entry>,
    existing: usize,
    cap: usize,
) -> Result<()> {
    if pieces >= 2 {
        let combined: Vec<f64> = acc.iter().map(|c| theta * c).collect();
        if seen.insert(key(&combined)) {
            if existing + fresh.len() + 1 > cap {
                return Err(Error::FunctionalCap { cap });
            }
            fresh.push(Entry {
                coeffs: combined,
                first,
                last,
            });
        }
    }
    if pieces == max_pieces {
        return Ok(());
    }
    for next_first in last + 1..by_first.len() {
        for &i in &by_first[next_first] {
            let e = &entries[i];
            let next: Vec<f64> = acc.iter().zip(&e.coeffs).map(|(a, c)| a + c).collect();
            extend_chain(
                entries,
                by_first,
                &next,
                e.last,
                pieces + 1,
                max_pieces,
                first,
                theta,
                seen,
                fresh,
                existing,
                cap,
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::tsirelson::tsirelson_norm;

    #[test]
    fn depth_zero_is_signed_unit_functionals() {
        let set = NormingFunctionalSet::generate(0.5, 2, 0).unwrap();
        let mut signed: Vec<Vec<f64>> = set
            .signed_functionals()
            .into_iter()
            .map(|f| {
                let mut c = f.as_slice().to_vec();
                c.resize(2, 0.0);
                c
            })
            .collect();
        signed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            signed,
            vec![vec![-1., 0.], vec![0., -1.], vec![0., 1.], vec![1., 0.]]
        );
    }

    #[test]
    fn window_one() {
        for d in 0..4 {
            let set = NormingFunctionalSet::generate(0.5, 1, d).unwrap();
            assert_eq!(set.max_pairing(&FiniteVector::unit(1).unwrap()), 1.0);
        }
    }

    #[test]
    fn matches_dp_on_indicator_four() {
        let set = NormingFunctionalSet::generate(0.5, 4, 4).unwrap();
        let x = FiniteVector::indicator(4);
        assert_eq!(set.max_pairing(&x), tsirelson_norm(&x, 0.5, 64).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            NormingFunctionalSet::generate_with_cap(0.5, 8, 8, 20),
            Err(Error::FunctionalCap { cap: 20 })
        ));
    }
}
