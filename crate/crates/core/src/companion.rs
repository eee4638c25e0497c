//! Companion-matrix representation of GF(p^n) over GF(p).
//!
//! `ζ(a) = a(C)` sends a field element to an n×n matrix over GF(p); the
//! coefficient vector `Γ(a)` is the element's own representation, so
//! `ζ(a)·Γ(b) = Γ(ab)`. Expanding a field matrix entrywise through ζ and
//! lifting residues to the integers preserves nonsingularity.

use thiserror::Error;

use crate::gf::{GfContext, GfElement};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompanionError {
    #[error("ζ({a}) + ζ({b}) ≠ ζ({a} + {b})")]
    Additive { a: String, b: String },
    #[error("ζ({a})·ζ({b}) ≠ ζ({a}·{b})")]
    Multiplicative { a: String, b: String },
    #[error("ζ({a})·Γ({b}) ≠ Γ({a}·{b})")]
    Mixed { a: String, b: String },
}

#[derive(Debug, Clone)]
pub struct CompanionRep {
    ctx: GfContext,
    c: Matrix<u32>,
    /// C^0 … C^{n-1}, used to evaluate a(C).
    powers: Vec<Matrix<u32>>,
}

pub fn mat_mul_mod(a: &Matrix<u32>, b: &Matrix<u32>, p: u32) -> Matrix<u32> {
    assert_eq!(a.cols(), b.rows());
    let p = p as u64;
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        ((0..a.cols()).map(|k| a[(i, k)] as u64 * b[(k, j)] as u64).sum::<u64>() % p) as u32
    })
}

fn mat_add_mod(a: &Matrix<u32>, b: &Matrix<u32>, p: u32) -> Matrix<u32> {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| (a[(i, j)] + b[(i, j)]) % p)
}

fn identity(n: usize) -> Matrix<u32> {
    Matrix::from_fn(n, n, |i, j| u32::from(i == j))
}

impl CompanionRep {
    pub fn new(ctx: &GfContext) -> Self {
        let n = ctx.degree() as usize;
        let p = ctx.characteristic();
        let pi = ctx.poly();
        let c = Matrix::from_fn(n, n, |i, j| {
            if j == n - 1 {
                (p - pi[i]) % p
            } else {
                u32::from(i == j + 1)
            }
        });
        Self::with_matrix(ctx, c)
    }

    /// Uses an arbitrary n×n matrix in place of C. Only useful for negative
    /// controls of [`CompanionRep::homomorphism_check`].
    pub fn with_matrix(ctx: &GfContext, c: Matrix<u32>) -> Self {
        let n = ctx.degree() as usize;
        assert_eq!(c.shape(), (n, n));
        let mut powers = vec![identity(n)];
        for k in 1..n {
            powers.push(mat_mul_mod(&powers[k - 1], &c, ctx.characteristic()));
        }
        CompanionRep { ctx: ctx.clone(), c, powers }
    }

    pub fn context(&self) -> &GfContext {
        &self.ctx
    }

    pub fn matrix(&self) -> &Matrix<u32> {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.ctx.degree() as usize
    }

    /// `ζ(a) = a_0 I + a_1 C + … + a_{n-1} C^{n-1}` over GF(p).
    pub fn zeta(&self, a: GfElement) -> Matrix<u32> {
        let n = self.degree();
        let p = self.ctx.characteristic() as u64;
        let coeffs = self.ctx.coeffs(a);
        Matrix::from_fn(n, n, |i, j| {
            (coeffs
                .iter()
                .zip(&self.powers)
                .map(|(&ak, pk)| ak as u64 * pk[(i, j)] as u64)
                .sum::<u64>()
                % p) as u32
        })
    }

    /// `ζ(a)·v` for a column vector `v = Γ(b)`.
    pub fn apply(&self, a: GfElement, v: &[u32]) -> Vec<u32> {
        let z = self.zeta(a);
        let p = self.ctx.characteristic() as u64;
        (0..self.degree())
            .map(|i| ((0..self.degree()).map(|j| z[(i, j)] as u64 * v[j] as u64).sum::<u64>() % p) as u32)
            .collect()
    }

    /// `π(C)` evaluated over GF(p); zero for a genuine companion matrix.
    pub fn poly_at_matrix(&self) -> Matrix<u32> {
        let n = self.degree();
        let p = self.ctx.characteristic();
        let mut acc = Matrix::filled(n, n, 0u32);
        let mut power = identity(n);
        for &coef in self.ctx.poly() {
            let term = power.map(|&v| ((v as u64 * coef as u64) % p as u64) as u32);
            acc = mat_add_mod(&acc, &term, p);
            power = mat_mul_mod(&power, &self.c, p);
        }
        acc
    }

    /// Smallest k ≥ 1 with C^k = I, if any within p^n steps.
    pub fn multiplicative_order(&self) -> Option<u64> {
        let n = self.degree();
        let p = self.ctx.characteristic();
        let id = identity(n);
        let mut power = self.c.clone();
        for k in 1..=self.ctx.order() as u64 {
            if power == id {
                return Some(k);
            }
            power = mat_mul_mod(&power, &self.c, p);
        }
        None
    }

    /// Exhaustively verifies that ζ respects addition and multiplication and
    /// that `ζ(a)·Γ(b) = Γ(ab)`. Returns the first failing pair.
    pub fn homomorphism_check(&self) -> Result<usize, CompanionError> {
        let ctx = &self.ctx;
        let p = ctx.characteristic();
        let elems = ctx.elements();
        let zetas: Vec<_> = elems.iter().map(|&a| self.zeta(a)).collect();
        let index = |e: GfElement| e.packed() as usize;
        let mut by_packed = vec![0usize; elems.len()];
        for (i, e) in elems.iter().enumerate() {
            by_packed[index(*e)] = i;
        }
        let mut pairs = 0;
        for (ia, &a) in elems.iter().enumerate() {
            for (ib, &b) in elems.iter().enumerate() {
                let names = || (ctx.display(a), ctx.display(b));
                let sum = ctx.add(a, b).expect("same field");
                if mat_add_mod(&zetas[ia], &zetas[ib], p) != zetas[by_packed[index(sum)]] {
                    let (a, b) = names();
                    return Err(CompanionError::Additive { a, b });
                }
                let prod = ctx.mul(a, b).expect("same field");
                if mat_mul_mod(&zetas[ia], &zetas[ib], p) != zetas[by_packed[index(prod)]] {
                    let (a, b) = names();
                    return Err(CompanionError::Multiplicative { a, b });
                }
                if self.apply(a, &ctx.coeffs(b)) != ctx.coeffs(prod) {
                    let (a, b) = names();
                    return Err(CompanionError::Mixed { a, b });
                }
                pairs += 1;
            }
        }
        Ok(pairs)
    }

    /// Replaces every entry by its ζ-block: an r×c field matrix becomes an
    /// rn×cn matrix over GF(p).
    pub fn expand_matrix(&self, m: &Matrix<GfElement>) -> Matrix<u32> {
        let n = self.degree();
        let blocks: Vec<Matrix<u32>> = m.iter().map(|&a| self.zeta(a)).collect();
        Matrix::from_fn(m.rows() * n, m.cols() * n, |i, j| {
            blocks[(i / n) * m.cols() + j / n][(i % n, j % n)]
        })
    }
}

/// Entrywise identity embedding of GF(p) residues into ℤ.
pub fn integer_lift(m: &Matrix<u32>) -> Matrix<i64> {
    m.map(|&v| v as i64)
}

/// Natural embedding of a prime-field matrix into ℤ.
pub fn lift_prime_field(ctx: &GfContext, m: &Matrix<GfElement>) -> Matrix<i64> {
    debug_assert_eq!(ctx.degree(), 1);
    m.map(|a| a.packed() as i64)
}
