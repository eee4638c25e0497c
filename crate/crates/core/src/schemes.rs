//! Generator collections `{G_k}`: N matrices of shape Δ×ℓ whose columns say
//! how each worker's stored submatrices combine the block-rows of `A`.
//!
//! Real constructions (RS and UDM), their finite-field counterparts, and the
//! two embeddings of field collections into integer matrices live here.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{self, EnumerationMode, PatternBound, Verdict};
use crate::companion::{integer_lift, lift_prime_field, CompanionRep};
use crate::gf::{GfContext, GfElement, GfError};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("evaluation points must be distinct; {0} appears twice")]
    DuplicateBeta(String),
    #[error("UDM evaluation points over a finite field must be nonzero")]
    ZeroBeta,
    #[error("expected {expected} evaluation points, got {got}")]
    WrongBetaCount { expected: usize, got: usize },
    #[error("field too small: {rule} (have {have})")]
    FieldTooSmall { rule: String, have: u32 },
    #[error("{0}")]
    InvalidParameters(String),
    #[error("{operation} expects a {expected} collection, got {got}")]
    WrongDomain { operation: &'static str, expected: &'static str, got: String },
    #[error("no certified draw after {attempts} attempts; last failing pattern {pattern:?}")]
    CertificationFailed { attempts: u32, pattern: Vec<usize> },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed collection document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    RsReal,
    UdmReal,
    UdmRealWithGstar,
    RsFf,
    UdmFf,
    RsCompanion,
    UdmCompanion,
    RsNaturalEmbed,
    UdmNaturalEmbed,
    UdmRandomReal,
    /// The hand-written N=3, Δ=3, ℓ=2 collection of 0/1 matrices.
    ExampleOne,
    /// UDM layout with binomials reduced mod p but real β: the naive
    /// embedding that does not preserve full rank.
    NaiveRealEmbed,
    /// Matrices supplied directly by the caller.
    Custom,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::RsReal => "rs-real",
            Construction::UdmReal => "udm-real",
            Construction::UdmRealWithGstar => "udm-real-with-gstar",
            Construction::RsFf => "rs-ff",
            Construction::UdmFf => "udm-ff",
            Construction::RsCompanion => "rs-companion",
            Construction::UdmCompanion => "udm-companion",
            Construction::RsNaturalEmbed => "rs-natural-embed",
            Construction::UdmNaturalEmbed => "udm-natural-embed",
            Construction::UdmRandomReal => "udm-random-real",
            Construction::ExampleOne => "example-one",
            Construction::NaiveRealEmbed => "naive-real-embed",
            Construction::Custom => "custom",
        }
    }

    pub fn needs_field(self) -> bool {
        matches!(
            self,
            Construction::RsFf
                | Construction::UdmFf
                | Construction::RsCompanion
                | Construction::UdmCompanion
                | Construction::RsNaturalEmbed
                | Construction::UdmNaturalEmbed
        )
    }

    fn is_rs(self) -> bool {
        matches!(
            self,
            Construction::RsReal | Construction::RsFf | Construction::RsCompanion | Construction::RsNaturalEmbed
        )
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The value domain of a collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Real,
    IntegerLift,
    PrimeField(GfContext),
    ExtensionField(GfContext),
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Real => "real",
            Domain::IntegerLift => "integer-lift",
            Domain::PrimeField(_) => "prime-field",
            Domain::ExtensionField(_) => "extension-field",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generators {
    Real(Vec<Matrix<f64>>),
    Integer(Vec<Matrix<i64>>),
    Field(GfContext, Vec<Matrix<GfElement>>),
}

/// Evaluation points as they were actually used, for logging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaLog {
    Real(Vec<f64>),
    /// Coefficient vectors (low to high) of field elements.
    Field(Vec<Vec<u32>>),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: Construction,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
    pub betas: BetaLog,
    #[serde(default)]
    pub gstar: bool,
    #[serde(default)]
    pub rs_exponent_offset: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attempts: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCollection {
    n_workers: usize,
    delta: usize,
    ell: usize,
    s: usize,
    generators: Generators,
    provenance: Provenance,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn check_distinct_reals(betas: &[f64]) -> Result<(), SchemeError> {
    for (i, a) in betas.iter().enumerate() {
        if betas[..i].contains(a) {
            return Err(SchemeError::DuplicateBeta(fmt_f64(*a)));
        }
    }
    Ok(())
}

fn check_distinct_field(ctx: &GfContext, betas: &[GfElement]) -> Result<(), SchemeError> {
    for &b in betas {
        if !ctx.contains(b) {
            return Err(GfError::ContextMismatch { p: ctx.characteristic(), n: ctx.degree() }.into());
        }
    }
    for (i, a) in betas.iter().enumerate() {
        if betas[..i].contains(a) {
            return Err(SchemeError::DuplicateBeta(ctx.display(*a)));
        }
    }
    Ok(())
}

fn check_count(expected: usize, got: usize) -> Result<(), SchemeError> {
    if expected == got {
        Ok(())
    } else {
        Err(SchemeError::WrongBetaCount { expected, got })
    }
}

fn check_dims(n_workers: usize, delta: usize, ell: usize) -> Result<(), SchemeError> {
    if n_workers == 0 || delta == 0 || ell == 0 {
        return Err(SchemeError::InvalidParameters("N, Δ and ℓ must be positive".into()));
    }
    Ok(())
}

/// Exact integer binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `count` equally spaced points on `[low, high]`, endpoints included.
pub fn equispaced(count: usize, low: f64, high: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..count).map(|k| low + (high - low) * k as f64 / (count - 1) as f64).collect(),
    }
}

fn udm_real_matrix(delta: usize, ell: usize, beta: f64) -> Matrix<f64> {
    Matrix::from_fn(delta, ell, |i, j| {
        if i >= j {
            binomial(i as u64, j as u64) as f64 * beta.powi((i - j) as i32)
        } else {
            0.0
        }
    })
}

/// Anti-diagonal unit columns hitting the bottom rows: entry (Δ−1−j, j) is 1.
pub fn gstar_matrix(delta: usize, ell: usize) -> Matrix<f64> {
    Matrix::from_fn(delta, ell, |i, j| if j < delta && i == delta - 1 - j { 1.0 } else { 0.0 })
}

/// RS over ℝ: `G_k(i,j) = β_{k,j}^i`, with `β_{k,j} = betas[k·ℓ + j]`.
pub fn make_rs_real(n_workers: usize, delta: usize, ell: usize, betas: &[f64]) -> Result<GeneratorCollection, SchemeError> {
    check_dims(n_workers, delta, ell)?;
    check_count(n_workers * ell, betas.len())?;
    check_distinct_reals(betas)?;
    let mats = (0..n_workers)
        .map(|k| Matrix::from_fn(delta, ell, |i, j| betas[k * ell + j].powi(i as i32)))
        .collect();
    Ok(GeneratorCollection {
        n_workers,
        delta,
        ell,
        s: 1,
        generators: Generators::Real(mats),
        provenance: Provenance {
            construction: Construction::RsReal,
            field: None,
            betas: BetaLog::Real(betas.to_vec()),
            gstar: false,
            rs_exponent_offset: 0,
            seed: None,
            attempts: None,
        },
    })
}

/// UDM over ℝ: `G_k(i,j) = C(i,j) β_k^{i−j}` for `i ≥ j`. With `use_gstar`
/// the last worker gets [`gstar_matrix`] and `betas` has N−1 entries.
pub fn make_udm_real(
    n_workers: usize,
    delta: usize,
    ell: usize,
    betas: &[f64],
    use_gstar: bool,
) -> Result<GeneratorCollection, SchemeError> {
    check_dims(n_workers, delta, ell)?;
    check_count(n_workers - usize::from(use_gstar), betas.len())?;
    check_distinct_reals(betas)?;
    let mut mats: Vec<_> = betas.iter().map(|&b| udm_real_matrix(delta, ell, b)).collect();
    if use_gstar {
        if ell > delta {
            return Err(SchemeError::InvalidParameters("G* needs ℓ ≤ Δ".into()));
        }
        mats.push(gstar_matrix(delta, ell));
    }
    Ok(GeneratorCollection {
        n_workers,
        delta,
        ell,
        s: 1,
        generators: Generators::Real(mats),
        provenance: Provenance {
            construction: if use_gstar { Construction::UdmRealWithGstar } else { Construction::UdmReal },
            field: None,
            betas: BetaLog::Real(betas.to_vec()),
            gstar: use_gstar,
            rs_exponent_offset: 0,
            seed: None,
            attempts: None,
        },
    })
}

fn field_log(ctx: &GfContext, betas: &[GfElement]) -> BetaLog {
    BetaLog::Field(betas.iter().map(|&b| ctx.coeffs(b)).collect())
}

/// UDM over GF(p^n): `G_k(i,j) = C(i,j)·β_k^{i−j}` with the binomial in GF(p).
pub fn make_udm_ff(
    ctx: &GfContext,
    n_workers: usize,
    delta: usize,
    ell: usize,
    betas: &[GfElement],
) -> Result<GeneratorCollection, SchemeError> {
    check_dims(n_workers, delta, ell)?;
    if (ctx.order() as usize) < n_workers + 1 {
        return Err(SchemeError::FieldTooSmall {
            rule: format!("the UDM construction needs p^n ≥ N+1 = {}", n_workers + 1),
            have: ctx.order(),
        });
    }
    check_count(n_workers, betas.len())?;
    check_distinct_field(ctx, betas)?;
    if betas.iter().any(|b| b.is_zero()) {
        return Err(SchemeError::ZeroBeta);
    }
    let p = ctx.characteristic();
    let mut mats = Vec::with_capacity(n_workers);
    for &b in betas {
        let mut m = Matrix::filled(delta, ell, ctx.zero());
        for i in 0..delta {
            for j in 0..ell.min(i + 1) {
                let c = crate::gf::binom_mod_p(i as u64, j as u64, p) as u64;
                m[(i, j)] = ctx.scale(c, ctx.pow(b, (i - j) as u64)?)?;
            }
        }
        mats.push(m);
    }
    Ok(GeneratorCollection {
        n_workers,
        delta,
        ell,
        s: 1,
        generators: Generators::Field(ctx.clone(), mats),
        provenance: Provenance {
            construction: Construction::UdmFf,
            field: Some(ctx.spec_string()),
            betas: field_log(ctx, betas),
            gstar: false,
            rs_exponent_offset: 0,
            seed: None,
            attempts: None,
        },
    })
}

/// RS over GF(p^n): `G_k(i,j) = β_{k,j}^{i + offset}`.
///
/// `offset = 0` is the plain Vandermonde layout. A positive offset scales each
/// column by a nonzero power of its own point, which keeps every square
/// selection nonsingular as long as no point is zero.
pub fn make_rs_ff(
    ctx: &GfContext,
    n_workers: usize,
    delta: usize,
    ell: usize,
    betas: &[GfElement],
    offset: u32,
) -> Result<GeneratorCollection, SchemeError> {
    check_dims(n_workers, delta, ell)?;
    if (ctx.order() as usize) < n_workers * ell + 1 {
        return Err(SchemeError::FieldTooSmall {
            rule: format!("the RS construction needs p^n ≥ N·ℓ+1 = {}", n_workers * ell + 1),
            have: ctx.order(),
        });
    }
    check_count(n_workers * ell, betas.len())?;
    check_distinct_field(ctx, betas)?;
    if offset > 0 && betas.iter().any(|b| b.is_zero()) {
        return Err(SchemeError::ZeroBeta);
    }
    let mut mats = Vec::with_capacity(n_workers);
    for k in 0..n_workers {
        let mut m = Matrix::filled(delta, ell, ctx.zero());
        for i in 0..delta {
            for j in 0..ell {
                m[(i, j)] = ctx.pow(betas[k * ell + j], i as u64 + offset as u64)?;
            }
        }
        mats.push(m);
    }
    Ok(GeneratorCollection {
        n_workers,
        delta,
        ell,
        s: 1,
        generators: Generators::Field(ctx.clone(), mats),
        provenance: Provenance {
            construction: Construction::RsFf,
            field: Some(ctx.spec_string()),
            betas: field_log(ctx, betas),
            gstar: false,
            rs_exponent_offset: offset,
            seed: None,
            attempts: None,
        },
    })
}

fn embedded_construction(c: Construction, companion: bool) -> Construction {
    match (c, companion) {
        (Construction::RsFf, true) => Construction::RsCompanion,
        (Construction::RsFf, false) => Construction::RsNaturalEmbed,
        (Construction::UdmFf, true) => Construction::UdmCompanion,
        (Construction::UdmFf, false) => Construction::UdmNaturalEmbed,
        (other, _) => other,
    }
}

/// Expands every entry through ζ and lifts to ℤ: Δ×ℓ over GF(p^n) becomes
/// nΔ×nℓ over ℤ with block size s multiplied by n.
pub fn embed_companion(coll: &GeneratorCollection) -> Result<GeneratorCollection, SchemeError> {
    let Generators::Field(ctx, mats) = &coll.generators else {
        return Err(SchemeError::WrongDomain {
            operation: "companion embedding",
            expected: "finite-field",
            got: coll.domain().name().into(),
        });
    };
    let rep = CompanionRep::new(ctx);
    let n = ctx.degree() as usize;
    let lifted = mats.iter().map(|m| integer_lift(&rep.expand_matrix(m))).collect();
    let mut provenance = coll.provenance.clone();
    provenance.construction = embedded_construction(provenance.construction, true);
    Ok(GeneratorCollection {
        n_workers: coll.n_workers,
        delta: coll.delta * n,
        ell: coll.ell * n,
        s: coll.s * n,
        generators: Generators::Integer(lifted),
        provenance,
    })
}

/// Lifts a prime-field collection entrywise to the integers `{0, …, p−1}`.
pub fn embed_natural(coll: &GeneratorCollection) -> Result<GeneratorCollection, SchemeError> {
    let Generators::Field(ctx, mats) = &coll.generators else {
        return Err(SchemeError::WrongDomain {
            operation: "natural embedding",
            expected: "prime-field",
            got: coll.domain().name().into(),
        });
    };
    if ctx.degree() != 1 {
        return Err(SchemeError::WrongDomain {
            operation: "natural embedding",
            expected: "prime-field",
            got: "extension-field".into(),
        });
    }
    let mut provenance = coll.provenance.clone();
    provenance.construction = embedded_construction(provenance.construction, false);
    Ok(GeneratorCollection {
        generators: Generators::Integer(mats.iter().map(|m| lift_prime_field(ctx, m)).collect()),
        provenance,
        ..coll.clone()
    })
}

pub const DEFAULT_MAX_RETRIES: u32 = 16;

/// Draws N distinct β uniformly from `[low, high)`, builds the real UDM
/// collection and keeps the first draw that passes strong full-rank
/// certification.
pub fn make_udm_random_real(
    n_workers: usize,
    delta: usize,
    ell: usize,
    seed: u64,
    (low, high): (f64, f64),
    max_retries: u32,
) -> Result<GeneratorCollection, SchemeError> {
    if low.is_nan() || high.is_nan() || low >= high {
        return Err(SchemeError::InvalidParameters(format!("empty interval [{low}, {high})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_failure = Vec::new();
    for attempt in 1..=max_retries.max(1) {
        let mut betas: Vec<f64> = Vec::with_capacity(n_workers);
        while betas.len() < n_workers {
            let b = rng.random_range(low..high);
            if !betas.contains(&b) {
                betas.push(b);
            }
        }
        let mut coll = make_udm_real(n_workers, delta, ell, &betas, false)?;
        coll.provenance.construction = Construction::UdmRandomReal;
        coll.provenance.seed = Some(seed);
        coll.provenance.attempts = Some(attempt);
        let cert = analysis::certify_full_rank(
            &coll,
            EnumerationMode::Full,
            PatternBound::Inclusive,
            analysis::DEFAULT_RANK_TOL,
        );
        match cert.verdict {
            Verdict::Pass => return Ok(coll),
            Verdict::Fail { pattern, .. } => last_failure = pattern,
        }
    }
    Err(SchemeError::CertificationFailed { attempts: max_retries.max(1), pattern: last_failure })
}

/// UDM layout over ℝ whose binomial coefficients are reduced mod `p`, as if a
/// characteristic-p collection were copied entry by entry into the reals.
pub fn make_naive_real_embed(
    n_workers: usize,
    delta: usize,
    ell: usize,
    betas: &[f64],
    p: u32,
) -> Result<GeneratorCollection, SchemeError> {
    check_dims(n_workers, delta, ell)?;
    check_count(n_workers, betas.len())?;
    check_distinct_reals(betas)?;
    let mats = betas
        .iter()
        .map(|&b| {
            Matrix::from_fn(delta, ell, |i, j| {
                if i >= j {
                    crate::gf::binom_mod_p(i as u64, j as u64, p) as f64 * b.powi((i - j) as i32)
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(GeneratorCollection {
        n_workers,
        delta,
        ell,
        s: 1,
        generators: Generators::Real(mats),
        provenance: Provenance {
            construction: Construction::NaiveRealEmbed,
            field: None,
            betas: BetaLog::Real(betas.to_vec()),
            gstar: false,
            rs_exponent_offset: 0,
            seed: None,
            attempts: None,
        },
    })
}

/// The N=3, Δ=3, ℓ=2 collection whose first columns are the unit vectors and
/// whose second columns each add the other two block-rows.
pub fn example_one() -> GeneratorCollection {
    let m = |rows: [[f64; 2]; 3]| Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect());
    GeneratorCollection {
        n_workers: 3,
        delta: 3,
        ell: 2,
        s: 1,
        generators: Generators::Real(vec![
            m([[1., 0.], [0., 1.], [0., 1.]]),
            m([[0., 1.], [1., 0.], [0., 1.]]),
            m([[0., 1.], [0., 1.], [1., 0.]]),
        ]),
        provenance: Provenance {
            construction: Construction::ExampleOne,
            field: None,
            betas: BetaLog::None,
            gstar: false,
            rs_exponent_offset: 0,
            seed: None,
            attempts: None,
        },
    }
}

impl GeneratorCollection {
    /// Wraps explicit real matrices as a collection with block size `s`.
    pub fn from_real(mats: Vec<Matrix<f64>>, s: usize) -> Result<Self, SchemeError> {
        let (delta, ell) = mats.first().map(Matrix::shape).ok_or_else(|| {
            SchemeError::InvalidParameters("a collection needs at least one matrix".into())
        })?;
        let coll = GeneratorCollection {
            n_workers: mats.len(),
            delta,
            ell,
            s,
            generators: Generators::Real(mats),
            provenance: Provenance {
                construction: Construction::Custom,
                field: None,
                betas: BetaLog::None,
                gstar: false,
                rs_exponent_offset: 0,
                seed: None,
                attempts: None,
            },
        };
        coll.validate()?;
        Ok(coll)
    }

    fn validate(&self) -> Result<(), SchemeError> {
        let shapes_ok = match &self.generators {
            Generators::Real(m) => m.len() == self.n_workers && m.iter().all(|g| g.shape() == (self.delta, self.ell)),
            Generators::Integer(m) => m.len() == self.n_workers && m.iter().all(|g| g.shape() == (self.delta, self.ell)),
            Generators::Field(_, m) => m.len() == self.n_workers && m.iter().all(|g| g.shape() == (self.delta, self.ell)),
        };
        if !shapes_ok {
            return Err(SchemeError::InvalidParameters(format!(
                "all {} matrices must be {}×{}",
                self.n_workers, self.delta, self.ell
            )));
        }
        if self.s == 0 || !self.delta.is_multiple_of(self.s) || !self.ell.is_multiple_of(self.s) {
            return Err(SchemeError::InvalidParameters(format!(
                "block size s = {} must divide Δ = {} and ℓ = {}",
                self.s, self.delta, self.ell
            )));
        }
        Ok(())
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Q_b = Δ/s, the number of size-s blocks needed to decode.
    pub fn q_b(&self) -> usize {
        self.delta / self.s
    }

    /// Storage fraction ℓ/Δ.
    pub fn gamma(&self) -> f64 {
        self.ell as f64 / self.delta as f64
    }

    pub fn generators(&self) -> &Generators {
        &self.generators
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn construction(&self) -> Construction {
        self.provenance.construction
    }

    pub fn domain(&self) -> Domain {
        match &self.generators {
            Generators::Real(_) => Domain::Real,
            Generators::Integer(_) => Domain::IntegerLift,
            Generators::Field(ctx, _) if ctx.degree() == 1 => Domain::PrimeField(ctx.clone()),
            Generators::Field(ctx, _) => Domain::ExtensionField(ctx.clone()),
        }
    }

    /// Fraction of nonzero entries over all N·Δ·ℓ generator entries.
    pub fn density(&self) -> f64 {
        let nnz = match &self.generators {
            Generators::Real(m) => m.iter().flat_map(Matrix::iter).filter(|v| **v != 0.0).count(),
            Generators::Integer(m) => m.iter().flat_map(Matrix::iter).filter(|v| **v != 0).count(),
            Generators::Field(_, m) => m.iter().flat_map(Matrix::iter).filter(|v| !v.is_zero()).count(),
        };
        nnz as f64 / (self.n_workers * self.delta * self.ell) as f64
    }

    /// Real-valued generator matrices, if the domain embeds in ℝ.
    pub fn real_matrices(&self) -> Option<Vec<Matrix<f64>>> {
        match &self.generators {
            Generators::Real(m) => Some(m.clone()),
            Generators::Integer(m) => Some(m.iter().map(|g| g.map(|&v| v as f64)).collect()),
            Generators::Field(..) => None,
        }
    }

    /// Same collection with the worker order permuted (`order[k]` is the old
    /// index of new worker k).
    pub fn permuted(&self, order: &[usize]) -> Self {
        fn pick<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
            order.iter().map(|&k| v[k].clone()).collect()
        }
        let generators = match &self.generators {
            Generators::Real(m) => Generators::Real(pick(m, order)),
            Generators::Integer(m) => Generators::Integer(pick(m, order)),
            Generators::Field(c, m) => Generators::Field(c.clone(), pick(m, order)),
        };
        GeneratorCollection { generators, ..self.clone() }
    }

    /// The document written by `construct`: metadata plus row-major matrices.
    pub fn to_document(&self, config: Option<&SchemeConfig>) -> CollectionDocument {
        let matrices = match &self.generators {
            Generators::Real(m) => MatrixData::Real(m.iter().map(Matrix::to_rows).collect()),
            Generators::Integer(m) => MatrixData::Integer(m.iter().map(Matrix::to_rows).collect()),
            Generators::Field(ctx, m) => MatrixData::Field(
                m.iter().map(|g| g.map(|&a| ctx.coeffs(a)).to_rows()).collect(),
            ),
        };
        let config_hash = config.map(SchemeConfig::hash);
        CollectionDocument {
            meta: CollectionMeta {
                n_workers: self.n_workers,
                delta: self.delta,
                ell: self.ell,
                s: self.s,
                q_b: self.q_b(),
                gamma: self.gamma(),
                domain: self.domain().name().to_string(),
                density: self.density(),
                provenance: self.provenance.clone(),
                config: config.cloned(),
                config_hash,
            },
            matrices,
        }
    }

    pub fn from_document(doc: &CollectionDocument) -> Result<Self, SchemeError> {
        let bad = |m: &str| SchemeError::Document(m.to_string());
        let meta = &doc.meta;
        let generators = match (&doc.matrices, meta.domain.as_str()) {
            (MatrixData::Real(m), "real") => Generators::Real(m.iter().cloned().map(Matrix::from_rows).collect()),
            (MatrixData::Integer(m), "integer-lift") => {
                Generators::Integer(m.iter().cloned().map(Matrix::from_rows).collect())
            }
            (MatrixData::Integer(m), "real") => {
                Generators::Real(m.iter().map(|g| Matrix::from_rows(g.clone()).map(|&v| v as f64)).collect())
            }
            (MatrixData::Field(m), "prime-field" | "extension-field") => {
                let spec = meta.provenance.field.as_deref().ok_or_else(|| bad("field collection without a field spec"))?;
                let ctx: GfContext = spec.parse()?;
                let mats = m
                    .iter()
                    .map(|g| {
                        g.iter()
                            .map(|row| row.iter().map(|c| ctx.from_coeffs(c)).collect::<Result<Vec<_>, _>>())
                            .collect::<Result<Vec<_>, _>>()
                            .map(Matrix::from_rows)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Generators::Field(ctx, mats)
            }
            (_, d) => return Err(bad(&format!("matrices do not match domain {d:?}"))),
        };
        let coll = GeneratorCollection {
            n_workers: meta.n_workers,
            delta: meta.delta,
            ell: meta.ell,
            s: meta.s,
            generators,
            provenance: meta.provenance.clone(),
        };
        coll.validate()?;
        Ok(coll)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixData {
    Integer(Vec<Vec<Vec<i64>>>),
    Real(Vec<Vec<Vec<f64>>>),
    Field(Vec<Vec<Vec<Vec<u32>>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionMeta {
    #[serde(rename = "N")]
    pub n_workers: usize,
    pub delta: usize,
    pub ell: usize,
    pub s: usize,
    #[serde(rename = "Q_b")]
    pub q_b: usize,
    pub gamma: f64,
    pub domain: String,
    pub density: f64,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<SchemeConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionDocument {
    pub meta: CollectionMeta,
    pub matrices: MatrixData,
}

/// One explicit evaluation point: a real number, or a field element given by
/// its coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaValue {
    Real(f64),
    Coeffs(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BetaSource {
    Equispaced { low: f64, high: f64 },
    PowersOfAlpha,
    /// `α^e` for each listed exponent.
    AlphaExponents { exponents: Vec<u64> },
    Explicit { values: Vec<BetaValue> },
    SeededRandom { seed: u64, low: f64, high: f64 },
}

/// Everything needed to rebuild a collection. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub construction: Construction,
    #[serde(rename = "N")]
    pub n_workers: usize,
    pub delta: usize,
    pub ell: usize,
    /// Optional consistency check against the derived block size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Optional consistency check against ℓ/Δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaSource>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rs_exponent_offset: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<u32>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl SchemeConfig {
    pub fn new(construction: Construction, n_workers: usize, delta: usize, ell: usize) -> Self {
        SchemeConfig {
            construction,
            n_workers,
            delta,
            ell,
            s: None,
            gamma: None,
            field: None,
            beta: None,
            rs_exponent_offset: 0,
            max_retries: None,
        }
    }

    pub fn with_field(mut self, field: &str) -> Self {
        self.field = Some(field.to_string());
        self
    }

    pub fn with_beta(mut self, beta: BetaSource) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_rs_offset(mut self, offset: u32) -> Self {
        self.rs_exponent_offset = offset;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, SchemeError> {
        serde_json::from_str(text).map_err(|e| SchemeError::InvalidParameters(format!("scheme config: {e}")))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn field_context(&self) -> Result<Option<GfContext>, SchemeError> {
        match (&self.field, self.construction.needs_field()) {
            (Some(f), true) => Ok(Some(f.parse()?)),
            (None, true) => Err(SchemeError::InvalidParameters(format!(
                "construction {} needs a \"field\"",
                self.construction
            ))),
            (Some(_), false) => Err(SchemeError::InvalidParameters(format!(
                "construction {} does not take a \"field\"",
                self.construction
            ))),
            (None, false) => Ok(None),
        }
    }

    fn point_count(&self) -> usize {
        match self.construction {
            c if c.is_rs() => self.n_workers * self.ell,
            Construction::UdmRealWithGstar => self.n_workers.saturating_sub(1),
            _ => self.n_workers,
        }
    }

    fn real_betas(&self) -> Result<Vec<f64>, SchemeError> {
        let count = self.point_count();
        match self.beta.clone().unwrap_or(BetaSource::Equispaced { low: -1.0, high: 1.0 }) {
            BetaSource::Equispaced { low, high } => Ok(equispaced(count, low, high)),
            BetaSource::Explicit { values } => values
                .into_iter()
                .map(|v| match v {
                    BetaValue::Real(x) => Ok(x),
                    BetaValue::Coeffs(_) => Err(SchemeError::InvalidParameters(
                        "coefficient-vector β given for a real construction".into(),
                    )),
                })
                .collect(),
            BetaSource::SeededRandom { seed, low, high } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out: Vec<f64> = Vec::with_capacity(count);
                while out.len() < count {
                    let b = rng.random_range(low..high);
                    if !out.contains(&b) {
                        out.push(b);
                    }
                }
                Ok(out)
            }
            other => Err(SchemeError::InvalidParameters(format!(
                "β source {other:?} only applies to finite-field constructions"
            ))),
        }
    }

    fn field_betas(&self, ctx: &GfContext) -> Result<Vec<GfElement>, SchemeError> {
        let count = self.point_count();
        match self.beta.clone().unwrap_or(BetaSource::PowersOfAlpha) {
            BetaSource::PowersOfAlpha => {
                if count as u64 > ctx.order() as u64 - 1 {
                    return Err(SchemeError::FieldTooSmall {
                        rule: format!("{count} distinct nonzero points are needed"),
                        have: ctx.order(),
                    });
                }
                Ok((0..count as u64).map(|k| ctx.alpha_pow(k)).collect())
            }
            BetaSource::AlphaExponents { exponents } => Ok(exponents.into_iter().map(|e| ctx.alpha_pow(e)).collect()),
            BetaSource::Explicit { values } => values
                .into_iter()
                .map(|v| match v {
                    BetaValue::Coeffs(c) => Ok(ctx.from_coeffs(&c)?),
                    BetaValue::Real(x) if x >= 0.0 && x.fract() == 0.0 && (x as u64) < ctx.characteristic() as u64 => {
                        Ok(ctx.from_int(x as u64))
                    }
                    BetaValue::Real(x) => Err(SchemeError::InvalidParameters(format!(
                        "{x} is not an element of {ctx}; use a coefficient vector"
                    ))),
                })
                .collect(),
            other => Err(SchemeError::InvalidParameters(format!(
                "β source {other:?} only applies to real constructions"
            ))),
        }
    }

    /// Builds the collection this config describes.
    pub fn build(&self) -> Result<GeneratorCollection, SchemeError> {
        let ctx = self.field_context()?;
        let (n, d, l) = (self.n_workers, self.delta, self.ell);
        if self.rs_exponent_offset > 0 && !matches!(self.construction, Construction::RsFf | Construction::RsCompanion | Construction::RsNaturalEmbed) {
            return Err(SchemeError::InvalidParameters(
                "rs_exponent_offset only applies to finite-field RS constructions".into(),
            ));
        }
        let coll = match self.construction {
            Construction::RsReal => make_rs_real(n, d, l, &self.real_betas()?)?,
            Construction::UdmReal => make_udm_real(n, d, l, &self.real_betas()?, false)?,
            Construction::UdmRealWithGstar => make_udm_real(n, d, l, &self.real_betas()?, true)?,
            Construction::UdmRandomReal => {
                let (seed, low, high) = match &self.beta {
                    None => (0, -1.0, 1.0),
                    Some(BetaSource::SeededRandom { seed, low, high }) => (*seed, *low, *high),
                    Some(other) => {
                        return Err(SchemeError::InvalidParameters(format!(
                            "udm-random-real takes a seeded-random β source, not {other:?}"
                        )))
                    }
                };
                make_udm_random_real(n, d, l, seed, (low, high), self.max_retries.unwrap_or(DEFAULT_MAX_RETRIES))?
            }
            Construction::NaiveRealEmbed => make_naive_real_embed(n, d, l, &self.real_betas()?, 2)?,
            Construction::Custom => {
                return Err(SchemeError::InvalidParameters(
                    "custom collections are loaded from a collection document, not built from a config".into(),
                ))
            }
            Construction::ExampleOne => {
                if (n, d, l) != (3, 3, 2) {
                    return Err(SchemeError::InvalidParameters("example-one is fixed at N=3, Δ=3, ℓ=2".into()));
                }
                example_one()
            }
            c => {
                let ctx = ctx.expect("field constructions have a context");
                let betas = self.field_betas(&ctx)?;
                let base = if c.is_rs() {
                    make_rs_ff(&ctx, n, d, l, &betas, self.rs_exponent_offset)?
                } else {
                    make_udm_ff(&ctx, n, d, l, &betas)?
                };
                match c {
                    Construction::RsFf | Construction::UdmFf => base,
                    Construction::RsCompanion | Construction::UdmCompanion => embed_companion(&base)?,
                    _ => embed_natural(&base)?,
                }
            }
        };
        if let Some(s) = self.s {
            if s != coll.s() {
                return Err(SchemeError::InvalidParameters(format!(
                    "config says s = {s} but {} yields s = {}",
                    self.construction,
                    coll.s()
                )));
            }
        }
        if let Some(g) = self.gamma {
            if (g - l as f64 / d as f64).abs() > 1e-12 {
                return Err(SchemeError::InvalidParameters(format!("gamma = {g} but ℓ/Δ = {}", l as f64 / d as f64)));
            }
        }
        Ok(coll)
    }
}
