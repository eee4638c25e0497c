//! Exact arithmetic in GF(p) and GF(p^n).
//!
//! Elements use the polynomial-in-α representation: `a_0 + a_1 α + … +
//! a_{n-1} α^{n-1}` with every `a_i` in `[0, p)`. The coefficient vector is
//! stored packed as the base-p integer `Σ a_i p^i`, so elements are `Copy` and
//! hash cheaply, but no discrete-log tables are ever built. Products are
//! reduced with the primitive polynomial, i.e. using `π(α) = 0`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest field order accepted by [`GfContext`].
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{n} exceeds the supported maximum of 2^20")]
    FieldTooLarge { p: u32, n: u32 },
    #[error("polynomial must be monic of degree {expected} with coefficients in [0, {p}), got {got:?}")]
    BadPolynomial { expected: u32, p: u32, got: Vec<u32> },
    #[error("polynomial {0} is not primitive: x does not generate the multiplicative group")]
    NotPrimitive(String),
    #[error("no built-in primitive polynomial for GF({p}^{n}) and none supplied")]
    NoBuiltinPolynomial { p: u32, n: u32 },
    #[error("element does not belong to GF({p}^{n})")]
    ContextMismatch { p: u32, n: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("coefficient vector {coeffs:?} is not a valid element of GF({p}^{n})")]
    BadCoefficients { p: u32, n: u32, coeffs: Vec<u32> },
    #[error("cannot parse field spec {0:?}: expected \"p\", \"p^n\" or \"p^n/π-coefficients\"")]
    Parse(String),
}

/// An element of some GF(p^n), tagged with the context that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GfElement {
    packed: u32,
    tag: u32,
}

impl GfElement {
    /// Base-p packed coefficient vector `Σ a_i p^i`.
    pub fn packed(self) -> u32 {
        self.packed
    }

    pub fn is_zero(self) -> bool {
        self.packed == 0
    }
}

/// The finite field GF(p^n) with a fixed primitive polynomial.
///
/// Immutable after construction; all arithmetic is pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfContext {
    p: u32,
    n: u32,
    /// π_0, …, π_{n-1}, 1 (low to high, monic).
    pi: Vec<u32>,
    order: u32,
    tag: u32,
}

/// Built-in primitive polynomials, coefficients low to high.
const BUILTIN: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (3, 2, &[2, 1, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 1, 0, 0, 1]),
    (5, 2, &[2, 1, 1]),
    (5, 3, &[2, 3, 0, 1]),
];

/// Fields with a built-in polynomial, as `(p, n)`.
pub fn builtin_fields() -> impl Iterator<Item = (u32, u32)> {
    BUILTIN.iter().map(|&(p, n, _)| (p, n))
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Smallest primitive root modulo the prime `p`.
pub fn primitive_root(p: u32) -> u32 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p as u64 - 1);
    (2..p)
        .find(|&g| {
            factors
                .iter()
                .all(|&r| pow_mod(g as u64, (p as u64 - 1) / r, p as u64) != 1)
        })
        .expect("every prime has a primitive root")
}

/// `C(k, i) mod p` via Lucas' theorem; zero when `k < i`.
pub fn binom_mod_p(k: u64, i: u64, p: u32) -> u32 {
    if i > k {
        return 0;
    }
    let p64 = p as u64;
    let (mut k, mut i) = (k, i);
    let mut acc = 1u64;
    while i > 0 || k > 0 {
        let (kd, id) = (k % p64, i % p64);
        if id > kd {
            return 0;
        }
        acc = acc * small_binom_mod(kd, id, p64) % p64;
        k /= p64;
        i /= p64;
    }
    acc as u32
}

// k < p, so every factor is a unit mod p.
fn small_binom_mod(k: u64, i: u64, p: u64) -> u64 {
    let i = i.min(k - i);
    let mut num = 1u64;
    let mut den = 1u64;
    for t in 0..i {
        num = num * ((k - t) % p) % p;
        den = den * ((t + 1) % p) % p;
    }
    num * pow_mod(den, p - 2, p) % p
}

fn fnv(words: impl IntoIterator<Item = u32>) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u32;
            h = h.wrapping_mul(0x0100_0193);
        }
    }
    h
}

impl GfContext {
    /// Builds GF(p^n). With `pi = None` the built-in table (or, for n = 1,
    /// `x − g` for the smallest primitive root g) is used; a supplied
    /// polynomial is re-verified for primitivity.
    pub fn new(p: u32, n: u32, pi: Option<Vec<u32>>) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if n == 0 {
            return Err(GfError::ZeroDegree);
        }
        let order = (p as u64).checked_pow(n).filter(|&q| q <= MAX_FIELD_ORDER);
        let order = order.ok_or(GfError::FieldTooLarge { p, n })? as u32;
        let pi = match pi {
            Some(pi) => pi,
            None if n == 1 => vec![(p - primitive_root(p)) % p, 1],
            None => BUILTIN
                .iter()
                .find(|&&(bp, bn, _)| bp == p && bn == n)
                .map(|&(_, _, c)| c.to_vec())
                .ok_or(GfError::NoBuiltinPolynomial { p, n })?,
        };
        if pi.len() != n as usize + 1 || pi[n as usize] != 1 || pi.iter().any(|&c| c >= p) {
            return Err(GfError::BadPolynomial { expected: n, p, got: pi });
        }
        let tag = fnv([p, n].into_iter().chain(pi.iter().copied()));
        let ctx = GfContext { p, n, pi, order, tag };
        if !ctx.x_is_primitive() {
            return Err(GfError::NotPrimitive(ctx.poly_string()));
        }
        Ok(ctx)
    }

    /// GF(p) with its default primitive root.
    pub fn prime(p: u32) -> Result<Self, GfError> {
        Self::new(p, 1, None)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    /// Field size p^n.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Primitive polynomial coefficients π_0, …, π_{n-1}, 1.
    pub fn poly(&self) -> &[u32] {
        &self.pi
    }

    fn x_is_primitive(&self) -> bool {
        let q1 = self.order as u64 - 1;
        let x = self.reduce_slice(&[0, 1]);
        if self.pow_raw(x, q1) != 1 {
            return false;
        }
        prime_factors(q1)
            .into_iter()
            .all(|r| self.pow_raw(x, q1 / r) != 1)
    }

    fn poly_string(&self) -> String {
        let terms: Vec<String> = self
            .pi
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "x".into(),
                (1, c) => format!("{c}x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}x^{i}"),
            })
            .collect();
        terms.join("+")
    }

    /// Canonical `p^n/π` spec string, digits low to high.
    pub fn spec_string(&self) -> String {
        let digits = if self.p <= 10 {
            self.pi.iter().map(|c| c.to_string()).collect::<String>()
        } else {
            self.pi.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        };
        format!("{}^{}/{}", self.p, self.n, digits)
    }

    fn wrap(&self, packed: u32) -> GfElement {
        GfElement { packed, tag: self.tag }
    }

    pub fn contains(&self, a: GfElement) -> bool {
        a.tag == self.tag && a.packed < self.order
    }

    fn check(&self, a: GfElement) -> Result<(), GfError> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(GfError::ContextMismatch { p: self.p, n: self.n })
        }
    }

    pub fn zero(&self) -> GfElement {
        self.wrap(0)
    }

    pub fn one(&self) -> GfElement {
        self.wrap(1)
    }

    /// The primitive element α (the class of x).
    pub fn alpha(&self) -> GfElement {
        self.wrap(self.reduce_slice(&[0, 1]))
    }

    /// Embeds an integer of GF(p) (taken mod p).
    pub fn from_int(&self, v: u64) -> GfElement {
        self.wrap((v % self.p as u64) as u32)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<GfElement, GfError> {
        if coeffs.len() > self.n as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(GfError::BadCoefficients {
                p: self.p,
                n: self.n,
                coeffs: coeffs.to_vec(),
            });
        }
        Ok(self.wrap(self.pack(coeffs)))
    }

    /// Length-n coefficient vector (Γ of the element).
    pub fn coeffs(&self, a: GfElement) -> Vec<u32> {
        let mut out = vec![0; self.n as usize];
        self.unpack(a.packed, &mut out);
        out
    }

    /// Element with the given packed representation, if in range.
    pub fn from_packed(&self, packed: u32) -> Option<GfElement> {
        (packed < self.order).then(|| self.wrap(packed))
    }

    fn pack(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0u32, |acc, &c| acc * self.p + c)
    }

    fn unpack(&self, mut v: u32, out: &mut [u32]) {
        for c in out.iter_mut() {
            *c = v % self.p;
            v /= self.p;
        }
    }

    fn add_raw(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        if self.n == 1 {
            return (a + b) % self.p;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.n {
            out += ((a % self.p + b % self.p) % self.p) * scale;
            a /= self.p;
            b /= self.p;
            scale = scale.wrapping_mul(self.p);
        }
        out
    }

    fn neg_raw(&self, a: u32) -> u32 {
        if self.p == 2 {
            return a;
        }
        let mut c = [0u32; MAX_DEGREE];
        let n = self.n as usize;
        self.unpack(a, &mut c[..n]);
        for x in &mut c[..n] {
            *x = (self.p - *x) % self.p;
        }
        self.pack(&c[..n])
    }

    fn reduce_slice(&self, poly: &[u64]) -> u32 {
        let n = self.n as usize;
        let p = self.p as u64;
        let mut r: Vec<u64> = poly.iter().map(|&c| c % p).collect();
        if r.len() < n {
            r.resize(n, 0);
        }
        for d in (n..r.len()).rev() {
            let c = r[d] % p;
            if c == 0 {
                continue;
            }
            r[d] = 0;
            for t in 0..n {
                let sub = c * self.pi[t] as u64 % p;
                r[d - n + t] = (r[d - n + t] + p - sub) % p;
            }
        }
        let low: Vec<u32> = r[..n].iter().map(|&c| (c % p) as u32).collect();
        self.pack(&low)
    }

    fn mul_raw(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let p = self.p as u64;
        if self.n == 1 {
            return (a as u64 * b as u64 % p) as u32;
        }
        let n = self.n as usize;
        let mut ca = [0u32; MAX_DEGREE];
        let mut cb = [0u32; MAX_DEGREE];
        self.unpack(a, &mut ca[..n]);
        self.unpack(b, &mut cb[..n]);
        let mut prod = [0u64; 2 * MAX_DEGREE - 1];
        for i in 0..n {
            if ca[i] == 0 {
                continue;
            }
            for j in 0..n {
                prod[i + j] = (prod[i + j] + ca[i] as u64 * cb[j] as u64) % p;
            }
        }
        self.reduce_slice(&prod[..2 * n - 1])
    }

    fn pow_raw(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn add(&self, a: GfElement, b: GfElement) -> Result<GfElement, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.add_raw(a.packed, b.packed)))
    }

    pub fn sub(&self, a: GfElement, b: GfElement) -> Result<GfElement, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.add_raw(a.packed, self.neg_raw(b.packed))))
    }

    pub fn neg(&self, a: GfElement) -> Result<GfElement, GfError> {
        self.check(a)?;
        Ok(self.wrap(self.neg_raw(a.packed)))
    }

    pub fn mul(&self, a: GfElement, b: GfElement) -> Result<GfElement, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.mul_raw(a.packed, b.packed)))
    }

    /// Multiplies by an integer interpreted in GF(p).
    pub fn scale(&self, c: u64, a: GfElement) -> Result<GfElement, GfError> {
        self.mul(self.from_int(c), a)
    }

    pub fn pow(&self, a: GfElement, e: u64) -> Result<GfElement, GfError> {
        self.check(a)?;
        Ok(self.wrap(self.pow_raw(a.packed, e)))
    }

    pub fn inv(&self, a: GfElement) -> Result<GfElement, GfError> {
        self.check(a)?;
        if a.is_zero() {
            return Err(GfError::ZeroInverse);
        }
        Ok(self.wrap(self.pow_raw(a.packed, self.order as u64 - 2)))
    }

    /// `α^k`.
    pub fn alpha_pow(&self, k: u64) -> GfElement {
        self.wrap(self.pow_raw(self.alpha().packed, k))
    }

    /// 0, 1, α, α², …, α^{p^n−2}.
    pub fn elements(&self) -> Vec<GfElement> {
        let alpha = self.alpha().packed;
        let mut out = Vec::with_capacity(self.order as usize);
        out.push(self.zero());
        let mut x = 1u32;
        for _ in 0..self.order - 1 {
            out.push(self.wrap(x));
            x = self.mul_raw(x, alpha);
        }
        out
    }

    /// Evaluates `Σ u_k x^k` at `x` (Horner).
    pub fn poly_eval(&self, u: &[GfElement], x: GfElement) -> Result<GfElement, GfError> {
        let mut acc = self.zero();
        for &c in u.iter().rev() {
            acc = self.add(self.mul(acc, x)?, c)?;
        }
        Ok(acc)
    }

    /// The i-th Hasse derivative: coefficient of `x^{k−i}` is `C(k,i)·u_k`
    /// with the binomial reduced mod p.
    pub fn hasse_derivative(&self, u: &[GfElement], i: usize) -> Result<Vec<GfElement>, GfError> {
        (i..u.len())
            .map(|k| self.scale(binom_mod_p(k as u64, i as u64, self.p) as u64, u[k]))
            .collect()
    }

    /// Human-readable form in powers of α, e.g. `1+α^2`.
    pub fn display(&self, a: GfElement) -> String {
        if a.is_zero() {
            return "0".into();
        }
        if self.n == 1 {
            return a.packed.to_string();
        }
        let terms: Vec<String> = self
            .coeffs(a)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| {
                let mono = match i {
                    0 => String::new(),
                    1 => "α".into(),
                    i => format!("α^{i}"),
                };
                match (c, i) {
                    (c, 0) => c.to_string(),
                    (1, _) => mono,
                    (c, _) => format!("{c}{mono}"),
                }
            })
            .collect();
        terms.join("+")
    }
}

impl fmt::Display for GfContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.n)
        }
    }
}

impl FromStr for GfContext {
    type Err = GfError;

    /// Accepts `"7"`, `"3^2"`, `"2^3/1101"` (π digits low to high, base p) and
    /// comma-separated coefficients such as `"19^1/15,1"`.
    fn from_str(s: &str) -> Result<Self, GfError> {
        let bad = || GfError::Parse(s.to_string());
        let s = s.trim();
        let (head, poly) = match s.split_once('/') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        let (p, n) = match head.split_once('^') {
            Some((p, n)) => (p.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?),
            None => (head.trim().parse().map_err(|_| bad())?, 1u32),
        };
        let pi = match poly {
            None => None,
            Some(d) if d.contains(',') => Some(
                d.split(',')
                    .map(|t| t.trim().parse::<u32>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Some(d) => Some(
                d.trim()
                    .chars()
                    .map(|c| c.to_digit(36).ok_or_else(bad))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        GfContext::new(p, n, pi)
    }
}
