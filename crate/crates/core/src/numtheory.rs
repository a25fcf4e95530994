//! Modular arithmetic behind line design: the line length, the set of
//! admissible slopes, and the map from a D-dimensional frequency to the bin
//! of a line DFT it lands in.
//!
//! A slope vector `alpha` is admissible when, for every pair of distinct
//! dimensions `i != j`, `alpha_i` is coprime with `alpha_j` and with
//! `c_j = L / N_j`. For such slopes the map
//!
//! ```text
//! m  ->  [ sum_k c_k * m_k * alpha_k ]_L
//! ```
//!
//! is onto `[L]`, so the `N` grid frequencies split into `L` disjoint fibers
//! of exactly `N / L` points each.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::CubeShape;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple of all `dims`, or [`Error::Overflow`] if it does not
/// fit in a `usize`.
pub fn lcm_all(dims: &[usize]) -> Result<usize> {
    let mut acc: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(Error::InvalidShape("dimension of length 0".into()));
        }
        let g = gcd(acc as u64, d as u64) as usize;
        acc = (acc / g).checked_mul(d).ok_or(Error::Overflow("lcm"))?;
    }
    Ok(acc)
}

/// Extended Euclid: returns `(g, u, v)` with `u*a + v*b = g = gcd(a, b)`.
pub fn bezout(a: u64, b: u64) -> (u64, i128, i128) {
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 as u64, s0, t0)
}

/// A slope vector known to be admissible for the shape it was built against.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlopeVector(Vec<usize>);

impl SlopeVector {
    pub fn new(alpha: Vec<usize>, shape: &CubeShape) -> Result<Self> {
        if is_valid_slope(&alpha, shape) {
            Ok(SlopeVector(alpha))
        } else {
            Err(Error::InvalidSlope {
                alpha,
                shape: shape.to_string(),
            })
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl std::ops::Deref for SlopeVector {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Checks the pairwise coprimality conditions on `alpha`.
///
/// Dimensions of extent 1 force `alpha_k = 0` and carry no frequency
/// information, so conditions whose left operand is such an `alpha_k` are
/// skipped. A 1-D shape has no pairs; there the slope must be a unit mod `L`.
pub fn is_valid_slope(alpha: &[usize], shape: &CubeShape) -> bool {
    let dims = shape.dims();
    if alpha.len() != dims.len() || alpha.iter().zip(dims).any(|(&a, &n)| a >= n) {
        return false;
    }
    let line_len = shape.line_len() as u64;
    if dims.len() == 1 {
        return dims[0] == 1 || gcd(alpha[0] as u64, line_len) == 1;
    }
    for i in 0..dims.len() {
        if dims[i] == 1 {
            continue;
        }
        let ai = alpha[i] as u64;
        for j in 0..dims.len() {
            if i == j {
                continue;
            }
            if dims[j] != 1 && gcd(ai, alpha[j] as u64) != 1 {
                return false;
            }
            if gcd(ai, shape.stride(j) as u64) != 1 {
                return false;
            }
        }
    }
    true
}

/// Every admissible slope for `shape`, in lexicographic order.
pub fn enumerate_slopes(shape: &CubeShape) -> Vec<SlopeVector> {
    shape
        .grid()
        .filter(|alpha| is_valid_slope(alpha, shape))
        .map(SlopeVector)
        .collect()
}

/// Draws a slope uniformly from the admissible set by rejection sampling.
///
/// After `10 * N` rejected draws the admissible set is enumerated and one
/// element is picked uniformly, which has the same distribution.
pub fn sample_slope<R: Rng + ?Sized>(shape: &CubeShape, rng: &mut R) -> SlopeVector {
    let cap = shape.n_total().saturating_mul(10);
    let mut alpha = vec![0usize; shape.ndim()];
    for _ in 0..cap {
        for (a, &n) in alpha.iter_mut().zip(shape.dims()) {
            *a = rng.gen_range(0..n);
        }
        if is_valid_slope(&alpha, shape) {
            return SlopeVector(alpha);
        }
    }
    let all = enumerate_slopes(shape);
    all[rng.gen_range(0..all.len())].clone()
}

/// The line-DFT bin that frequency `m` projects onto for slope `alpha`.
pub fn bin_of_frequency(m: &[usize], alpha: &[usize], shape: &CubeShape) -> usize {
    let line_len = shape.line_len() as u128;
    let mut acc: u128 = 0;
    for k in 0..shape.ndim() {
        let term = shape.stride(k) as u128 * m[k] as u128 % line_len * alpha[k] as u128;
        acc = (acc + term) % line_len;
    }
    acc as usize
}

/// All grid frequencies projecting onto `bin`, by enumeration of the grid.
///
/// Intended for tests and small shapes; the recovery loop never needs it.
pub fn fiber_of_bin(bin: usize, alpha: &[usize], shape: &CubeShape) -> Vec<Vec<usize>> {
    shape
        .grid()
        .filter(|m| bin_of_frequency(m, alpha, shape) == bin)
        .collect()
}

/// Walks the fiber of `bin` for a 2-D shape without enumerating the grid.
///
/// With `a_k = alpha_k * L / N_k`, a Bezout certificate `u*a_0 + v*a_1 = 1`
/// gives one member `([bin*u]_{N_0}, [bin*v]_{N_1})`; the rest follow by
/// stepping `(+a_1, -a_0)`. Returns `N / L` points, or `None` for shapes that
/// are not 2-D or slopes whose scaled components are not coprime.
pub fn walk_fiber_2d(bin: usize, alpha: &[usize], shape: &CubeShape) -> Option<Vec<[usize; 2]>> {
    if shape.ndim() != 2 {
        return None;
    }
    let (n0, n1) = (shape.dims()[0] as i128, shape.dims()[1] as i128);
    let a0 = (alpha[0] * shape.stride(0)) as i128;
    let a1 = (alpha[1] * shape.stride(1)) as i128;
    let (g, u, v) = bezout(a0 as u64, a1 as u64);
    if g != 1 {
        return None;
    }
    let m0 = (bin as i128 * u).rem_euclid(n0);
    let m1 = (bin as i128 * v).rem_euclid(n1);
    let count = shape.fiber_size() as i128;
    Some(
        (0..count)
            .map(|k| {
                [
                    (m0 + k * a1).rem_euclid(n0) as usize,
                    (m1 - k * a0).rem_euclid(n1) as usize,
                ]
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn shape(dims: &[usize]) -> CubeShape {
        CubeShape::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(6, 4), 2);
        assert_eq!(gcd(0, 7), 7);
        assert_eq!(gcd(7, 0), 7);
        assert_eq!(gcd(256, 256), 256);
    }

    #[test]
    fn lcm_examples() {
        assert_eq!(lcm_all(&[256, 256]).unwrap(), 256);
        assert_eq!(lcm_all(&[4, 6]).unwrap(), 12);
        assert_eq!(lcm_all(&[512, 576]).unwrap(), 4608);
        assert_eq!(lcm_all(&[1]).unwrap(), 1);
    }

    #[test]
    fn lcm_overflow_is_reported() {
        let primes = [1_000_000_007usize, 998_244_353, 1_000_000_009, 999_999_937];
        assert!(matches!(lcm_all(&primes), Err(Error::Overflow(_))));
    }

    #[test]
    fn slope_validity_examples() {
        let s = shape(&[4, 6]);
        assert!(is_valid_slope(&[1, 1], &s));
        assert!(!is_valid_slope(&[2, 3], &s));
        assert!(is_valid_slope(&[3, 2], &s));
        assert!(!is_valid_slope(&[4, 1], &s), "out of range");
        assert!(!is_valid_slope(&[1], &s), "wrong arity");
    }

    #[test]
    fn degenerate_unit_shape_has_zero_slope() {
        let s = shape(&[1, 1]);
        assert!(is_valid_slope(&[0, 0], &s));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample_slope(&s, &mut rng).as_slice(), &[0, 0]);
    }

    #[test]
    fn one_dimensional_slopes_are_units() {
        let s = shape(&[12]);
        let valid: Vec<usize> = (0..12).filter(|&a| is_valid_slope(&[a], &s)).collect();
        assert_eq!(valid, vec![1, 5, 7, 11]);
    }

    #[test]
    fn sampled_slopes_are_valid() {
        let s = shape(&[4, 6]);
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert!(is_valid_slope(&sample_slope(&s, &mut rng), &s));
        }
    }

    #[test]
    fn bezout_certificates() {
        for (a, b) in [(3u64, 2u64), (12, 8), (1, 1), (35, 64), (0, 5)] {
            let (g, u, v) = bezout(a, b);
            assert_eq!(g, gcd(a, b));
            assert_eq!(u * a as i128 + v * b as i128, g as i128);
        }
        // scaled slope components for alpha = (1, 1) on 4x6
        let s = shape(&[4, 6]);
        let (g, _, _) = bezout(s.stride(0) as u64, s.stride(1) as u64);
        assert_eq!(g, 1);
    }

    #[test]
    fn bin_examples() {
        assert_eq!(bin_of_frequency(&[0, 0], &[3, 5], &shape(&[8, 8])), 0);
        assert_eq!(bin_of_frequency(&[1, 0], &[1, 1], &shape(&[4, 6])), 3);
        assert_eq!(bin_of_frequency(&[2, 3], &[1, 1], &shape(&[8, 8])), 5);
    }

    #[test]
    fn fiber_examples() {
        let s = shape(&[8, 8]);
        let fiber = fiber_of_bin(5, &[1, 1], &s);
        assert_eq!(fiber.len(), 8);
        assert!(fiber.iter().all(|m| (m[0] + m[1]) % 8 == 5));

        let s = shape(&[4, 6]);
        for bin in 0..12 {
            assert_eq!(fiber_of_bin(bin, &[1, 1], &s).len(), 2);
        }
    }

    #[test]
    fn fiber_walk_matches_enumeration() {
        for dims in [[4usize, 6], [8, 8], [6, 9], [12, 8], [2, 3], [16, 12]] {
            let s = shape(&dims);
            for alpha in enumerate_slopes(&s) {
                for bin in 0..s.line_len() {
                    let walked = walk_fiber_2d(bin, &alpha, &s).unwrap();
                    let walked: HashSet<Vec<usize>> = walked.iter().map(|p| p.to_vec()).collect();
                    // the walk has period exactly N/L: no point repeats
                    assert_eq!(walked.len(), s.fiber_size(), "{dims:?} {alpha:?} {bin}");
                    let enumerated: HashSet<Vec<usize>> = fiber_of_bin(bin, &alpha, &s).into_iter().collect();
                    assert_eq!(walked, enumerated, "{dims:?} {alpha:?} {bin}");
                }
            }
        }
    }

    #[test]
    fn every_shorter_line_has_a_fractional_projection() {
        // (L'/N_0) m_0 a_0 + (L'/N_1) m_1 a_1 must be integral for all m, a;
        // any L' below the LCM fails on a unit frequency along some axis.
        let dims = [4u64, 6];
        let lcm = lcm_all(&[4, 6]).unwrap() as u64;
        let integral = |short: u64, m: [u64; 2], a: [u64; 2]| {
            (short * m[0] * a[0] * dims[1] + short * m[1] * a[1] * dims[0]).is_multiple_of(dims[0] * dims[1])
        };
        for short in 1..lcm {
            let witness = if short % dims[0] != 0 {
                ([1, 0], [1, 1])
            } else {
                ([0, 1], [1, 1])
            };
            assert!(!integral(short, witness.0, witness.1), "L'={short}");
        }
        for m0 in 0..4 {
            for m1 in 0..6 {
                assert!(integral(lcm, [m0, m1], [3, 5]));
            }
        }
    }
}
