//! Tsirelson norm on finite support.
//!
//! `‖x‖ = max(‖x‖_∞, θ · sup Σ_{j≤k} ‖E_j x‖)` over successive sets
//! `E_1 < ... < E_k` with `k ≤ min E_1`. The norm is 1-unconditional, so each
//! `E_j` may be replaced by the interval it spans and intervals may be widened
//! until they tile a suffix of the support. The DP below runs over intervals of
//! support points, shortest first. A family with `k = 1` never beats the
//! interval itself since `θ < 1`, so every `E_j` that matters is strictly
//! shorter than the interval being evaluated and one pass is exact.

use crate::error::{Error, Result};
use crate::vector::FiniteVector;

/// Default cap on the trimmed length of vectors handed to the DP.
pub const DEFAULT_WINDOW_CAP: usize = 256;

pub fn tsirelson_norm(a: &FiniteVector, theta: f64, window_cap: usize) -> Result<f64> {
    if a.len() > window_cap {
        return Err(Error::WindowExceeded {
            len: a.len(),
            cap: window_cap,
        });
    }
    let points: Vec<(usize, f64)> = a
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (i + 1, c.abs()))
        .collect();
    Ok(norm_of_points(&points, theta))
}

/// `tsirelson_norm((|a_i|^p)_i)^{1/p}`.
pub fn pconvex_norm(a: &FiniteVector, p: f64, theta: f64, window_cap: usize) -> Result<f64> {
    let powered = if p == 1.0 {
        a.abs()
    } else {
        a.map(|c| c.abs().powf(p))
    };
    let t = tsirelson_norm(&powered, theta, window_cap)?;
    Ok(if p == 1.0 { t } else { t.powf(1.0 / p) })
}

/// `points` are `(position, |value|)` pairs with strictly increasing 1-based
/// positions and nonzero values.
pub(crate) fn norm_of_points(points: &[(usize, f64)], theta: f64) -> f64 {
    let s = points.len();
    match s {
        0 => return 0.0,
        1 => return points[0].1,
        _ => {}
    }
    let pos: Vec<usize> = points.iter().map(|p| p.0).collect();
    let val: Vec<f64> = points.iter().map(|p| p.1).collect();

    let idx = |u: usize, v: usize| u * s + v;
    // norm of the restriction to points u..=v
    let mut norm = vec![0.0f64; s * s];
    // tiles[idx(u, v)][j - 1]: best Σ norm over tilings of u..=v by at most j intervals
    let mut tiles: Vec<Vec<f64>> = vec![Vec::new(); s * s];
    let mut range_max = vec![0.0f64; s * s];

    for len in 1..=s {
        for u in 0..=s - len {
            let v = u + len - 1;
            let rmax = if len == 1 {
                val[u]
            } else {
                range_max[idx(u, v - 1)].max(val[v])
            };
            range_max[idx(u, v)] = rmax;

            let tile = |t: usize, j: usize| -> f64 {
                let row = &tiles[idx(t, v)];
                row[(j.min(row.len())) - 1]
            };

            let mut best = 0.0f64;
            if len >= 2 {
                let k = pos[u].min(len);
                if k >= 2 {
                    for t in u..v {
                        best = best.max(norm[idx(u, t)] + tile(t + 1, k - 1));
                    }
                }
                for (u2, &p2) in pos.iter().enumerate().take(v + 1).skip(u + 1) {
                    let k2 = p2.min(v - u2 + 1);
                    best = best.max(tile(u2, k2));
                }
            }
            let n = rmax.max(theta * best);
            norm[idx(u, v)] = n;

            // row[j - 1] = best tiling with at most j pieces
            let mut row = vec![f64::NEG_INFINITY; len];
            row[0] = n;
            for t in u..v {
                let head = norm[idx(u, t)];
                let rest = &tiles[idx(t + 1, v)];
                for j in 2..=len {
                    let cand = head + rest[(j - 1).min(rest.len()) - 1];
                    if cand > row[j - 1] {
                        row[j - 1] = cand;
                    }
                }
            }
            for j in 1..len {
                if row[j - 1] > row[j] {
                    row[j] = row[j - 1];
                }
            }
            tiles[idx(u, v)] = row;
        }
    }
    norm[idx(0, s - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: &[f64]) -> f64 {
        tsirelson_norm(&FiniteVector::new(c.to_vec()), 0.5, DEFAULT_WINDOW_CAP).unwrap()
    }

    fn ind(n: usize) -> f64 {
        tsirelson_norm(&FiniteVector::indicator(n), 0.5, DEFAULT_WINDOW_CAP).unwrap()
    }

    #[test]
    fn unit_vectors_are_normalized() {
        for i in 1..=20 {
            let e = FiniteVector::unit(i).unwrap();
            assert_eq!(tsirelson_norm(&e, 0.5, 64).unwrap(), 1.0);
        }
    }

    #[test]
    fn small_indicators() {
        // {1..4}: every admissible family sums to at most 2, so the sup norm wins
        assert_eq!(ind(4), 1.0);
        // {4},{5},{6},{7,8} gives (1 + 1 + 1 + 1) / 2
        assert_eq!(ind(8), 2.0);
        assert_eq!(ind(1), 1.0);
    }

    #[test]
    fn far_right_sets_are_theta_l1() {
        // positions n..2n-1 admit n singletons
        for n in 2..10 {
            let set: Vec<usize> = (n..2 * n).collect();
            let v = FiniteVector::indicator_of_set(&set).unwrap();
            assert_eq!(tsirelson_norm(&v, 0.5, 64).unwrap(), 0.5 * n as f64);
        }
    }

    #[test]
    fn sign_and_zero_gaps() {
        assert_eq!(t(&[1., -1., 1., -1., 1., -1., 1., -1.]), ind(8));
        assert_eq!(t(&[0., 0., 3.]), 3.0);
    }

    #[test]
    fn window_cap() {
        let v = FiniteVector::indicator(10);
        assert!(matches!(
            tsirelson_norm(&v, 0.5, 9),
            Err(Error::WindowExceeded { len: 10, cap: 9 })
        ));
    }

    #[test]
    fn pconvex_compositions() {
        let e3 = FiniteVector::unit(3).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert_eq!(pconvex_norm(&e3, p, 0.5, 64).unwrap(), 1.0);
        }
        let v = FiniteVector::indicator(8);
        assert_eq!(pconvex_norm(&v, 2.0, 0.5, 64).unwrap(), ind(8).sqrt());
        let w = FiniteVector::new(vec![0.5, -2., 1., 0., 3.]);
        assert_eq!(
            pconvex_norm(&w, 1.0, 0.5, 64).unwrap(),
            tsirelson_norm(&w, 0.5, 64).unwrap()
        );
    }
}
