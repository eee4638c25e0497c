//! Pattern enumeration, full-rank certification and conditioning statistics.
//!
//! A pattern `v` records how many leading columns each worker has finished.
//! It is admissible when `Σ ⌊v_i/s⌋ = Q_b`. For each admissible pattern the
//! selected columns form a Δ×Σv_i matrix `G` that must have rank Δ.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::{integer_rank, rank_over_field};
use crate::gf::{GfContext, GfElement};
use crate::matrix::{dmatrix_from, Matrix};
use crate::schemes::{BetaLog, Construction, GeneratorCollection, Generators};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_BUDGET: u128 = 10_000_000;
/// κ is reported as infinite once σ_min drops below this fraction of σ_max.
pub const INFINITE_KAPPA_TOL: f64 = 1e-12;

/// Largest power-of-two scaling tried when certifying real matrices exactly.
const MAX_DYADIC_SHIFT: i32 = 40;
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{count} patterns exceed the budget of {budget}; try block-aligned mode or raise --budget")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("no admissible pattern: Q_b·s = {needed} columns but only N·ℓ = {available} exist")]
    Infeasible { needed: usize, available: usize },
    #[error("pattern {pattern:?} is invalid for N = {n_workers}, ℓ = {ell}")]
    InvalidPattern { pattern: Vec<usize>, n_workers: usize, ell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationMode {
    /// Every v_i is a multiple of s, so each G is square.
    #[default]
    BlockAligned,
    Full,
}

impl fmt::Display for EnumerationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnumerationMode::BlockAligned => "block-aligned",
            EnumerationMode::Full => "full",
        })
    }
}

impl std::str::FromStr for EnumerationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "block-aligned" => Ok(EnumerationMode::BlockAligned),
            "full" => Ok(EnumerationMode::Full),
            other => Err(format!("unknown mode {other:?} (expected block-aligned or full)")),
        }
    }
}

/// Upper bound on each v_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternBound {
    /// `v_i ≤ ℓ`: finished workers are included.
    #[default]
    Inclusive,
    /// `v_i ≤ ℓ − 1`.
    Strict,
}

impl PatternBound {
    pub fn max_v(self, ell: usize) -> usize {
        match self {
            PatternBound::Inclusive => ell,
            PatternBound::Strict => ell.saturating_sub(1),
        }
    }
}

impl fmt::Display for PatternBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternBound::Inclusive => "v_i <= ell",
            PatternBound::Strict => "v_i <= ell-1",
        })
    }
}

/// The set of admissible patterns for given N, ℓ, s, Q_b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternSpace {
    pub n_workers: usize,
    pub ell: usize,
    pub s: usize,
    pub q_b: usize,
    pub mode: EnumerationMode,
    pub bound: PatternBound,
}

impl PatternSpace {
    pub fn new(n_workers: usize, ell: usize, s: usize, q_b: usize, mode: EnumerationMode, bound: PatternBound) -> Self {
        assert!(s > 0, "block size must be positive");
        PatternSpace { n_workers, ell, s, q_b, mode, bound }
    }

    pub fn for_collection(coll: &GeneratorCollection, mode: EnumerationMode, bound: PatternBound) -> Self {
        PatternSpace::new(coll.n_workers(), coll.ell(), coll.s(), coll.q_b(), mode, bound)
    }

    fn max_v(&self) -> usize {
        self.bound.max_v(self.ell)
    }

    fn max_blocks(&self) -> usize {
        self.max_v() / self.s
    }

    /// True when no pattern can deliver Q_b blocks.
    pub fn is_infeasible(&self) -> bool {
        self.q_b > self.n_workers * self.max_blocks()
    }

    pub fn contains(&self, v: &[usize]) -> bool {
        v.len() == self.n_workers
            && v.iter().all(|&x| x <= self.max_v())
            && (self.mode == EnumerationMode::Full || v.iter().all(|&x| x % self.s == 0))
            && v.iter().map(|&x| x / self.s).sum::<usize>() == self.q_b
    }

    /// Number of patterns, by dynamic programming over the block count.
    pub fn count(&self) -> u128 {
        let maxb = self.max_blocks();
        let weight = |b: usize| -> u128 {
            match self.mode {
                EnumerationMode::BlockAligned => 1,
                EnumerationMode::Full => {
                    let lo = b * self.s;
                    let hi = (lo + self.s - 1).min(self.max_v());
                    (hi - lo + 1) as u128
                }
            }
        };
        let mut dp = vec![0u128; self.q_b + 1];
        dp[0] = 1;
        for _ in 0..self.n_workers {
            let mut next = vec![0u128; self.q_b + 1];
            for (have, &ways) in dp.iter().enumerate() {
                if ways == 0 {
                    continue;
                }
                for b in 0..=maxb.min(self.q_b - have) {
                    next[have + b] += ways * weight(b);
                }
            }
            dp = next;
        }
        dp[self.q_b]
    }

    /// Streams the patterns in lexicographic order.
    pub fn iter(&self) -> PatternIter {
        PatternIter { space: *self, cur: vec![0; self.n_workers], started: false, done: self.is_infeasible() }
    }
}

pub struct PatternIter {
    space: PatternSpace,
    cur: Vec<usize>,
    started: bool,
    done: bool,
}

impl PatternIter {
    fn step(&self) -> usize {
        match self.space.mode {
            EnumerationMode::BlockAligned => self.space.s,
            EnumerationMode::Full => 1,
        }
    }

    /// Fills positions `from..` with the smallest completion; the prefix must
    /// leave a feasible remainder.
    fn fill_smallest(&mut self, from: usize) {
        let sp = self.space;
        let maxb = sp.max_blocks();
        let mut rem = sp.q_b - self.cur[..from].iter().map(|&x| x / sp.s).sum::<usize>();
        for i in from..sp.n_workers {
            let later = sp.n_workers - i - 1;
            let b = rem.saturating_sub(later * maxb);
            self.cur[i] = b * sp.s;
            rem -= b;
        }
    }

    fn advance(&mut self) -> bool {
        let sp = self.space;
        let maxb = sp.max_blocks();
        let step = self.step();
        for pos in (0..sp.n_workers).rev() {
            let before: usize = self.cur[..pos].iter().map(|&x| x / sp.s).sum();
            let later = sp.n_workers - pos - 1;
            let mut v = self.cur[pos] + step;
            while v <= sp.max_v() && before + v / sp.s <= sp.q_b {
                let rem = sp.q_b - before - v / sp.s;
                if rem <= later * maxb {
                    self.cur[pos] = v;
                    self.fill_smallest(pos + 1);
                    return true;
                }
                v += step;
            }
        }
        false
    }
}

impl Iterator for PatternIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_smallest(0);
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(self.cur.clone())
    }
}

pub fn enumerate_patterns(
    n_workers: usize,
    ell: usize,
    s: usize,
    q_b: usize,
    mode: EnumerationMode,
    bound: PatternBound,
) -> PatternIter {
    PatternSpace::new(n_workers, ell, s, q_b, mode, bound).iter()
}

/// The selected-column matrix of one pattern, in the collection's domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Assembled {
    Real(Matrix<f64>),
    Integer(Matrix<i64>),
    Field(GfContext, Matrix<GfElement>),
}

impl Assembled {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Assembled::Real(m) => m.shape(),
            Assembled::Integer(m) => m.shape(),
            Assembled::Field(_, m) => m.shape(),
        }
    }

    pub fn to_real(&self) -> Option<DMatrix<f64>> {
        match self {
            Assembled::Real(m) => Some(dmatrix_from(m)),
            Assembled::Integer(m) => Some(m.to_f64()),
            Assembled::Field(..) => None,
        }
    }
}

/// Concatenates the first `v[k]` columns of each `G_k` in worker order.
#[allow(non_snake_case)]
pub fn assemble_G(coll: &GeneratorCollection, v: &[usize]) -> Result<Assembled, AnalysisError> {
    if v.len() != coll.n_workers() || v.iter().any(|&x| x > coll.ell()) {
        return Err(AnalysisError::InvalidPattern { pattern: v.to_vec(), n_workers: coll.n_workers(), ell: coll.ell() });
    }
    let d = coll.delta();
    Ok(match coll.generators() {
        Generators::Real(m) => Assembled::Real(Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, d, 0.0)),
        Generators::Integer(m) => Assembled::Integer(Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, d, 0)),
        Generators::Field(ctx, m) => {
            Assembled::Field(ctx.clone(), Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, d, ctx.zero()))
        }
    })
}

/// κ = σ_max/σ_min over the min(rows, cols) singular values. A wide matrix
/// has `rows` of them, so this is the row-space conditioning. Infinite when
/// the matrix has fewer columns than rows or σ_min is negligible.
pub fn condition_number(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return 1.0;
    }
    if g.ncols() < g.nrows() {
        return f64::INFINITY;
    }
    let sv = g.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || min < INFINITE_KAPPA_TOL * max {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numerical rank: singular values above `tol·σ_max`.
pub fn numeric_rank(g: &DMatrix<f64>, tol: f64) -> usize {
    if g.is_empty() {
        return 0;
    }
    let sv = g.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > tol * max).count()
}

/// Worst-case number of products computed before decoding, `Δ + (N−1)(s−1)`.
pub fn worst_case_load(delta: usize, n_workers: usize, s: usize) -> usize {
    delta + n_workers.saturating_sub(1) * s.saturating_sub(1)
}

/// Exhaustive worst case over every interleaving of sequential workers: the
/// largest Σv_i at the moment Σ⌊v_i/s⌋ first reaches Q_b. `None` when Q_b
/// blocks can never be delivered.
pub fn worst_case_load_search(n_workers: usize, ell: usize, s: usize, q_b: usize) -> Option<usize> {
    if q_b > n_workers * (ell / s) {
        return None;
    }
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![vec![0usize; n_workers]];
    let mut worst = None;
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        if v.iter().map(|&x| x / s).sum::<usize>() >= q_b {
            let total: usize = v.iter().sum();
            worst = worst.max(Some(total));
            continue;
        }
        for k in 0..n_workers {
            if v[k] < ell {
                let mut w = v.clone();
                w[k] += 1;
                stack.push(w);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    /// Rank by exact elimination (finite field, integers, or dyadic rationals).
    Exact,
    /// Rank by singular values against a relative tolerance.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail { pattern: Vec<usize>, rank: usize },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub verdict: Verdict,
    pub exactness: Exactness,
    pub mode: EnumerationMode,
    pub bound: PatternBound,
    pub patterns_checked: u64,
}

/// Per-collection rank oracle chosen once, then applied to every pattern.
enum RankOracle {
    Field(GfContext, Vec<Matrix<GfElement>>),
    Integer(Vec<Matrix<i64>>),
    Numerical(Vec<Matrix<f64>>, f64),
}

/// Smallest power of two turning every entry into an integer, if the scaled
/// entries stay far inside the i64 range.
fn dyadic_scale(mats: &[Matrix<f64>]) -> Option<i32> {
    let mut shift = 0;
    let mut max_abs = 0.0f64;
    for &x in mats.iter().flat_map(Matrix::iter) {
        if !x.is_finite() {
            return None;
        }
        max_abs = max_abs.max(x.abs());
        while (x * f64::powi(2.0, shift)).fract() != 0.0 {
            shift += 1;
            if shift > MAX_DYADIC_SHIFT {
                return None;
            }
        }
    }
    (max_abs * f64::powi(2.0, shift) < 2f64.powi(52)).then_some(shift)
}

impl RankOracle {
    fn new(coll: &GeneratorCollection, rank_tol: f64) -> Self {
        match coll.generators() {
            Generators::Field(ctx, m) => RankOracle::Field(ctx.clone(), m.clone()),
            Generators::Integer(m) => RankOracle::Integer(m.clone()),
            Generators::Real(m) => match dyadic_scale(m) {
                Some(shift) => {
                    let f = f64::powi(2.0, shift);
                    RankOracle::Integer(m.iter().map(|g| g.map(|&x| (x * f) as i64)).collect())
                }
                None => RankOracle::Numerical(m.clone(), rank_tol),
            },
        }
    }

    fn exactness(&self) -> Exactness {
        match self {
            RankOracle::Numerical(..) => Exactness::Numerical,
            _ => Exactness::Exact,
        }
    }

    fn rank(&self, delta: usize, v: &[usize]) -> usize {
        match self {
            RankOracle::Field(ctx, m) => {
                rank_over_field(ctx, &Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, delta, ctx.zero()))
            }
            RankOracle::Integer(m) => integer_rank(&Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, delta, 0)),
            RankOracle::Numerical(m, tol) => {
                numeric_rank(&dmatrix_from(&Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, delta, 0.0)), *tol)
            }
        }
    }
}

/// Checks `rank G = Δ` for every pattern; stops at the first failure in
/// lexicographic order.
pub fn certify_full_rank(
    coll: &GeneratorCollection,
    mode: EnumerationMode,
    bound: PatternBound,
    rank_tol: f64,
) -> Certification {
    let oracle = RankOracle::new(coll, rank_tol);
    let space = PatternSpace::for_collection(coll, mode, bound);
    let delta = coll.delta();
    let mut checked = 0u64;
    let mut iter = space.iter();
    loop {
        let chunk: Vec<Vec<usize>> = iter.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let failure = chunk.par_iter().map(|v| oracle.rank(delta, v)).position_first(|r| r < delta);
        if let Some(i) = failure {
            checked += i as u64 + 1;
            let rank = oracle.rank(delta, &chunk[i]);
            return Certification {
                verdict: Verdict::Fail { pattern: chunk[i].clone(), rank },
                exactness: oracle.exactness(),
                mode,
                bound,
                patterns_checked: checked,
            };
        }
        checked += chunk.len() as u64;
    }
    Certification { verdict: Verdict::Pass, exactness: oracle.exactness(), mode, bound, patterns_checked: checked }
}

/// Options shared by `analyze` and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub mode: EnumerationMode,
    pub bound: PatternBound,
    pub budget: u128,
    pub rank_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mode: EnumerationMode::BlockAligned,
            bound: PatternBound::Inclusive,
            budget: DEFAULT_BUDGET,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Rounds to 12 significant digits so serialized reports are stable.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn ser_kappa<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        None => s.serialize_none(),
        Some(v) if v.is_infinite() => s.serialize_str("inf"),
        Some(v) => s.serialize_f64(round_sig(*v)),
    }
}

fn ser_rounded<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeMeta {
    pub construction: Construction,
    #[serde(rename = "N")]
    pub n_workers: usize,
    pub delta: usize,
    pub ell: usize,
    pub s: usize,
    #[serde(rename = "Q_b")]
    pub q_b: usize,
    pub domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub betas: BetaLog,
    pub rs_exponent_offset: u32,
    pub gstar: bool,
}

impl SchemeMeta {
    pub fn of(coll: &GeneratorCollection) -> Self {
        let p = coll.provenance();
        SchemeMeta {
            construction: p.construction,
            n_workers: coll.n_workers(),
            delta: coll.delta(),
            ell: coll.ell(),
            s: coll.s(),
            q_b: coll.q_b(),
            domain: coll.domain().name().to_string(),
            field: p.field.clone(),
            betas: p.betas.clone(),
            rs_exponent_offset: p.rs_exponent_offset,
            gstar: p.gstar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// Row label for tables.
    pub label: String,
    pub scheme: SchemeMeta,
    pub mode: EnumerationMode,
    pub bound: PatternBound,
    pub pattern_count: u64,
    pub certification: Certification,
    /// `None` for finite-field domains, where κ is undefined.
    #[serde(serialize_with = "ser_kappa")]
    pub max_kappa: Option<f64>,
    /// Mean over finite κ values only.
    #[serde(serialize_with = "ser_kappa")]
    pub avg_kappa: Option<f64>,
    pub infinite_kappa_count: u64,
    #[serde(serialize_with = "ser_rounded")]
    pub density: f64,
    pub worst_case_load: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Streams Ψ once, computing κ for every pattern and certifying rank.
pub fn analyze(coll: &GeneratorCollection, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let space = PatternSpace::for_collection(coll, opts.mode, opts.bound);
    if space.is_infeasible() {
        return Err(AnalysisError::Infeasible {
            needed: coll.q_b() * coll.s(),
            available: coll.n_workers() * opts.bound.max_v(coll.ell()),
        });
    }
    let count = space.count();
    if count > opts.budget {
        return Err(AnalysisError::BudgetExceeded { count, budget: opts.budget });
    }
    let oracle = RankOracle::new(coll, opts.rank_tol);
    let real = coll.real_matrices();
    let delta = coll.delta();

    let mut max_kappa = 1.0f64;
    let mut sum = 0.0f64;
    let mut finite = 0u64;
    let mut infinite = 0u64;
    let mut seen = 0u64;
    let mut failure: Option<(Vec<usize>, usize)> = None;
    let mut iter = space.iter();
    loop {
        let chunk: Vec<Vec<usize>> = iter.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let results: Vec<(usize, Option<f64>)> = chunk
            .par_iter()
            .map(|v| {
                let rank = oracle.rank(delta, v);
                let kappa = real.as_ref().map(|m| {
                    condition_number(&dmatrix_from(&Matrix::hcat_prefixes(&m.iter().collect::<Vec<_>>(), v, delta, 0.0)))
                });
                (rank, kappa)
            })
            .collect();
        for (v, (rank, kappa)) in chunk.iter().zip(results) {
            seen += 1;
            if rank < delta && failure.is_none() {
                failure = Some((v.clone(), rank));
            }
            if let Some(k) = kappa {
                // A rank-deficient pattern counts as infinite whatever the
                // floating-point singular values say.
                if k.is_infinite() || rank < delta {
                    infinite += 1;
                } else {
                    finite += 1;
                    sum += k;
                    max_kappa = max_kappa.max(k);
                }
            }
        }
    }
    let (max_kappa, avg_kappa) = match real {
        None => (None, None),
        Some(_) if infinite > 0 => (Some(f64::INFINITY), (finite > 0).then(|| sum / finite as f64)),
        Some(_) => (Some(max_kappa), (finite > 0).then(|| sum / finite as f64)),
    };
    let verdict = match failure {
        None => Verdict::Pass,
        Some((pattern, rank)) => Verdict::Fail { pattern, rank },
    };
    Ok(AnalysisReport {
        label: default_label(coll),
        scheme: SchemeMeta::of(coll),
        mode: opts.mode,
        bound: opts.bound,
        pattern_count: seen,
        certification: Certification {
            verdict,
            exactness: oracle.exactness(),
            mode: opts.mode,
            bound: opts.bound,
            patterns_checked: seen,
        },
        max_kappa,
        avg_kappa,
        infinite_kappa_count: infinite,
        density: coll.density(),
        worst_case_load: worst_case_load(coll.delta(), coll.n_workers(), coll.s()),
        config_hash: None,
    })
}

fn default_label(coll: &GeneratorCollection) -> String {
    let p = coll.provenance();
    let field = p.field.as_deref().map(|f| f.split('/').next().unwrap_or(f).to_string());
    match (p.construction, field) {
        (Construction::RsReal, _) => "RS based scheme".into(),
        (Construction::UdmReal, _) => "UDM-based scheme".into(),
        (Construction::UdmRealWithGstar, _) => "UDM-based scheme with G*".into(),
        (Construction::RsCompanion, Some(f)) => format!("RS+Companion GF({f})"),
        (Construction::UdmCompanion, Some(f)) => format!("UDM+Companion GF({f})"),
        (Construction::RsNaturalEmbed, Some(f)) => format!("RS over GF({f})"),
        (Construction::UdmNaturalEmbed, Some(f)) => format!("UDM over GF({f})"),
        (c, Some(f)) => format!("{c} GF({f})"),
        (c, None) => c.to_string(),
    }
}

/// Formats κ with two significant figures: `5.1e3` above 1000, plain below.
pub fn format_kappa(k: Option<f64>) -> String {
    match k {
        None => "-".into(),
        Some(k) if k.is_infinite() => "inf".into(),
        Some(k) if k >= 1000.0 => format!("{k:.1e}"),
        Some(k) => {
            let mag = k.abs().log10().floor() as i32;
            let decimals = (1 - mag).max(0) as usize;
            let scale = 10f64.powi(mag - 1);
            let rounded = (k / scale).round() * scale;
            format!("{rounded:.decimals$}")
        }
    }
}

/// Aligned text table with one row per report.
pub fn format_table(reports: &[AnalysisReport]) -> String {
    let header = ["Scheme", "Δ", "ℓ", "s", "Max Cond", "Avg Cond", "Density"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.scheme.delta.to_string(),
                r.scheme.ell.to_string(),
                r.scheme.s.to_string(),
                format_kappa(r.max_kappa),
                format_kappa(r.avg_kappa),
                format!("{:.0}%", r.density * 100.0),
            ]
        })
        .collect();
    let width = |i: usize| {
        rows.iter().map(|r| r[i].chars().count()).chain([header[i].chars().count()]).max().unwrap_or(0)
    };
    let widths: Vec<usize> = (0..7).map(width).collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{example_one, make_naive_real_embed};

    fn collect(n: usize, ell: usize, s: usize, q: usize, mode: EnumerationMode, bound: PatternBound) -> Vec<Vec<usize>> {
        enumerate_patterns(n, ell, s, q, mode, bound).collect()
    }

    #[test]
    fn pattern_counts() {
        use EnumerationMode::*;
        use PatternBound::*;
        assert_eq!(collect(6, 3, 1, 4, BlockAligned, Inclusive).len(), 120);
        assert_eq!(collect(6, 3, 1, 4, BlockAligned, Strict).len(), 90);
        assert_eq!(collect(2, 2, 2, 1, BlockAligned, Inclusive), vec![vec![0, 2], vec![2, 0]]);
        assert_eq!(collect(3, 2, 1, 3, BlockAligned, Inclusive).len(), 7);
        assert_eq!(collect(3, 2, 1, 3, BlockAligned, Strict), vec![vec![1, 1, 1]]);
        assert_eq!(PatternSpace::new(6, 3, 1, 4, Full, Inclusive).count(), 120);
    }

    #[test]
    fn full_mode_includes_partial_blocks() {
        let all = collect(2, 4, 2, 1, EnumerationMode::Full, PatternBound::Inclusive);
        assert_eq!(all, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 0], vec![2, 1], vec![3, 0], vec![3, 1]]);
        let space = PatternSpace::new(2, 4, 2, 1, EnumerationMode::Full, PatternBound::Inclusive);
        assert_eq!(space.count(), 8);
    }

    #[test]
    fn infeasible_space_is_empty() {
        let space = PatternSpace::new(2, 2, 1, 5, EnumerationMode::BlockAligned, PatternBound::Inclusive);
        assert!(space.is_infeasible());
        assert_eq!(space.iter().count(), 0);
        assert_eq!(space.count(), 0);
    }

    #[test]
    fn assemble_example_one() {
        let c = example_one();
        let Assembled::Real(g) = assemble_G(&c, &[1, 1, 1]).unwrap() else { panic!() };
        assert_eq!(g.to_rows(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(assemble_G(&c, &[0, 0, 0]).unwrap().shape(), (3, 0));
        assert!(assemble_G(&c, &[3, 0, 0]).is_err());
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(condition_number(&DMatrix::identity(3, 3)), 1.0);
        assert!((condition_number(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])) - 2.0).abs() < 1e-12);
        assert!((condition_number(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])) - 1.0).abs() < 1e-12);
        assert!(condition_number(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).is_infinite());
        assert!(condition_number(&DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).is_infinite());
    }

    #[test]
    fn certification_examples() {
        let c = example_one();
        let cert = certify_full_rank(&c, EnumerationMode::BlockAligned, PatternBound::Inclusive, DEFAULT_RANK_TOL);
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.exactness, Exactness::Exact);
        assert_eq!(cert.patterns_checked, 7);

        let bad = make_naive_real_embed(2, 4, 2, &[1.0, -1.0], 2).unwrap();
        let cert = certify_full_rank(&bad, EnumerationMode::BlockAligned, PatternBound::Inclusive, DEFAULT_RANK_TOL);
        assert_eq!(cert.verdict, Verdict::Fail { pattern: vec![2, 2], rank: 2 });
    }

    #[test]
    fn load_formula() {
        assert_eq!(worst_case_load(12, 6, 3), 22);
        assert_eq!(worst_case_load_search(3, 2, 1, 3), Some(3));
        assert_eq!(worst_case_load_search(2, 4, 2, 2), Some(5));
        assert_eq!(worst_case_load_search(2, 1, 1, 3), None);
    }

    #[test]
    fn kappa_formatting() {
        assert_eq!(format_kappa(Some(5100.0)), "5.1e3");
        assert_eq!(format_kappa(Some(334.0)), "330");
        assert_eq!(format_kappa(Some(1.0)), "1.0");
        assert_eq!(format_kappa(Some(f64::INFINITY)), "inf");
        assert_eq!(format_kappa(None), "-");
    }
}
