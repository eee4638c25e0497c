//! Exact rank and determinant computations. Nothing in here touches floating point.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::gf::{GfContext, GfElement};
use crate::matrix::Matrix;

/// Mersenne prime used for the modular full-rank filter.
const FILTER_PRIME: u64 = (1 << 61) - 1;

fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "{a} not invertible mod {m}");
    t.rem_euclid(m as i128) as u64
}

/// Rank of a matrix of residues modulo the prime `m`.
pub fn rank_mod(rows: usize, cols: usize, mut data: Vec<u64>, m: u64) -> usize {
    let mm = m as u128;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| data[i * cols + col] != 0) else {
            continue;
        };
        if piv != rank {
            for j in 0..cols {
                data.swap(piv * cols + j, rank * cols + j);
            }
        }
        let inv = inv_mod(data[rank * cols + col], m) as u128;
        for i in rank + 1..rows {
            let f = data[i * cols + col] as u128 * inv % mm;
            if f == 0 {
                continue;
            }
            for j in col..cols {
                let sub = f * data[rank * cols + j] as u128 % mm;
                let v = data[i * cols + j] as u128;
                data[i * cols + j] = ((v + mm - sub) % mm) as u64;
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a GF(p) matrix whose entries are given as integers in `[0, p)`.
pub fn rank_gf_p(m: &Matrix<u32>, p: u32) -> usize {
    rank_mod(m.rows(), m.cols(), m.iter().map(|&v| v as u64).collect(), p as u64)
}

/// Rank over GF(p^n) by Gaussian elimination.
pub fn rank_over_field(ctx: &GfContext, m: &Matrix<GfElement>) -> usize {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| !a[(i, col)].is_zero()) else {
            continue;
        };
        a.swap_rows(piv, rank);
        let inv = ctx.inv(a[(rank, col)]).expect("pivot is nonzero");
        for i in rank + 1..rows {
            if a[(i, col)].is_zero() {
                continue;
            }
            let f = ctx.mul(a[(i, col)], inv).expect("same field");
            for j in col..cols {
                let t = ctx.mul(f, a[(rank, j)]).expect("same field");
                a[(i, j)] = ctx.sub(a[(i, j)], t).expect("same field");
            }
        }
        rank += 1;
    }
    rank
}

/// Fraction-free (Bareiss) elimination. Returns the rank and, for square
/// matrices, the exact determinant.
pub fn bareiss(m: &Matrix<i64>) -> (usize, Option<BigInt>) {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<BigInt>> = m.to_rows().into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut negate = false;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        if piv != rank {
            a.swap(piv, rank);
            negate = !negate;
        }
        let (top, bottom) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in bottom.iter_mut() {
            for j in col + 1..cols {
                let v = &pivot_row[col] * &row[j] - &row[col] * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = pivot_row[col].clone();
        rank += 1;
    }
    let det = (rows == cols).then(|| {
        if rank < rows {
            BigInt::zero()
        } else if negate {
            -prev.clone()
        } else {
            prev.clone()
        }
    });
    (rank, det)
}

pub fn bareiss_det(m: &Matrix<i64>) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant of a non-square matrix");
    bareiss(m).1.expect("square")
}

/// Exact rank over ℚ of an integer matrix.
///
/// A rank computed modulo a large prime is a lower bound for the rational
/// rank, so when it already equals `min(rows, cols)` it is exact; otherwise
/// the Bareiss path decides.
pub fn integer_rank(m: &Matrix<i64>) -> usize {
    let full = m.rows().min(m.cols());
    let residues = m.iter().map(|&v| v.rem_euclid(FILTER_PRIME as i64) as u64).collect();
    if rank_mod(m.rows(), m.cols(), residues, FILTER_PRIME) == full {
        return full;
    }
    bareiss(m).0
}
