//! Encoding, straggler simulation and decoding for `A·x`.
//!
//! `A` is cut into Δ block-rows `A_0 … A_{Δ−1}` of height t. Worker k stores
//! `Â_{k,j} = Σ_i G_k(i,j) A_i` for j < ℓ and multiplies them by `x` in order,
//! reporting after every s products. The master decodes once it holds Q_b
//! complete blocks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{assemble_G, condition_number, numeric_rank, Assembled, DEFAULT_RANK_TOL};
use crate::matrix::Matrix;
use crate::schemes::GeneratorCollection;
use crate::sparse::Csr;

/// Inputs sparser than this fraction of nonzeros take the sparse path.
pub const SPARSE_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodingError {
    #[error("{0}")]
    Shape(String),
    #[error("coding needs a real or integer collection, got {0}")]
    Domain(String),
    #[error("worker {0} has already processed all of its submatrices")]
    WorkerFinished(usize),
    #[error("infeasible schedule: at most {available} of the {needed} required blocks can arrive")]
    Infeasible { available: usize, needed: usize },
    #[error("decode needs Q_b = {needed} complete blocks but pattern {pattern:?} delivers {have}")]
    NotDecodable { pattern: Vec<usize>, have: usize, needed: usize },
    #[error("pattern {pattern:?} gives a rank-{rank} system; Δ = {delta} is required")]
    RankDeficient { pattern: Vec<usize>, rank: usize, delta: usize },
    #[error("{0}")]
    Parse(String),
}

/// The input matrix, stored dense or in compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub enum InputMatrix {
    Dense(DMatrix<f64>),
    Sparse(Csr),
}

impl InputMatrix {
    /// Picks the sparse representation when fewer than a quarter of the
    /// entries are nonzero.
    pub fn auto(a: DMatrix<f64>) -> Self {
        let nnz = a.iter().filter(|v| **v != 0.0).count();
        if a.is_empty() || (nnz as f64) / (a.len() as f64) >= SPARSE_THRESHOLD {
            InputMatrix::Dense(a)
        } else {
            InputMatrix::Sparse(Csr::from_dense(&a))
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            InputMatrix::Dense(a) => a.shape(),
            InputMatrix::Sparse(a) => (a.nrows(), a.ncols()),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, InputMatrix::Sparse(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            InputMatrix::Dense(a) => a.clone(),
            InputMatrix::Sparse(a) => a.to_dense(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            InputMatrix::Dense(a) => a * x,
            InputMatrix::Sparse(a) => a.mul_vec(x),
        }
    }
}

/// One stored submatrix `Â_{k,j}`.
#[derive(Debug, Clone, PartialEq)]
pub enum EncodedBlock {
    Dense(DMatrix<f64>),
    Sparse(Csr),
}

impl EncodedBlock {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            EncodedBlock::Dense(a) => a.clone(),
            EncodedBlock::Sparse(a) => a.to_dense(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            EncodedBlock::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
            EncodedBlock::Sparse(a) => a.nnz(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            EncodedBlock::Dense(a) => a * x,
            EncodedBlock::Sparse(a) => a.mul_vec(x),
        }
    }
}

/// `A`, `x` and a real-valued collection, with `A` zero-padded to a multiple
/// of Δ rows.
#[derive(Debug, Clone)]
pub struct CodedJob {
    a: InputMatrix,
    x: DVector<f64>,
    coll: GeneratorCollection,
    generators: Vec<Matrix<f64>>,
    rows: usize,
    t: usize,
}

impl CodedJob {
    pub fn new(a: InputMatrix, x: DVector<f64>, coll: GeneratorCollection) -> Result<Self, CodingError> {
        let generators = coll.real_matrices().ok_or_else(|| CodingError::Domain(coll.domain().name().into()))?;
        let (rows, cols) = a.shape();
        if cols != x.len() {
            return Err(CodingError::Shape(format!("A has {cols} columns but x has length {}", x.len())));
        }
        if rows == 0 {
            return Err(CodingError::Shape("A has no rows".into()));
        }
        let delta = coll.delta();
        let t = rows.div_ceil(delta);
        let padded = t * delta;
        let a = if padded == rows {
            a
        } else {
            match a {
                InputMatrix::Dense(m) => InputMatrix::Dense(m.resize_vertically(padded, 0.0)),
                InputMatrix::Sparse(m) => InputMatrix::Sparse(Csr::from_triplets(padded, cols, m.triplets().collect())),
            }
        };
        Ok(CodedJob { a, x, coll, generators, rows, t })
    }

    pub fn collection(&self) -> &GeneratorCollection {
        &self.coll
    }

    /// Block-row height after padding.
    pub fn block_height(&self) -> usize {
        self.t
    }

    /// Row count of the original, unpadded `A`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn padded_rows(&self) -> usize {
        self.t * self.coll.delta()
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn input(&self) -> &InputMatrix {
        &self.a
    }

    /// `A·x` computed directly, for reference.
    pub fn direct_product(&self) -> DVector<f64> {
        self.a.mul_vec(&self.x).rows(0, self.rows).into_owned()
    }

    fn encode_one(&self, k: usize, j: usize) -> EncodedBlock {
        let g = &self.generators[k];
        let t = self.t;
        let cols = self.x.len();
        let terms: Vec<(usize, f64)> = (0..self.coll.delta()).map(|i| (i, g[(i, j)])).filter(|&(_, c)| c != 0.0).collect();
        match &self.a {
            InputMatrix::Dense(a) => {
                let mut out = DMatrix::zeros(t, cols);
                for (i, c) in terms {
                    out += a.rows(i * t, t) * c;
                }
                EncodedBlock::Dense(out)
            }
            InputMatrix::Sparse(a) => {
                let mut entries = Vec::new();
                for (i, c) in terms {
                    for r in 0..t {
                        entries.extend(a.row(i * t + r).map(|(col, v)| (r, col, c * v)));
                    }
                }
                EncodedBlock::Sparse(Csr::from_triplets(t, cols, entries))
            }
        }
    }

    /// All N×ℓ stored submatrices, indexed `[k][j]`. Zero generator entries
    /// cost nothing.
    pub fn encode(&self) -> Vec<Vec<EncodedBlock>> {
        let (n, ell) = (self.coll.n_workers(), self.coll.ell());
        let flat: Vec<EncodedBlock> =
            (0..n * ell).into_par_iter().map(|idx| self.encode_one(idx / ell, idx % ell)).collect();
        let mut it = flat.into_iter();
        (0..n).map(|_| it.by_ref().take(ell).collect()).collect()
    }
}

/// How fast workers progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// Worker k computes at most `budgets[k]` products; workers take turns.
    Budgets { budgets: Vec<usize> },
    /// Each product of worker k takes an exponential time with rate
    /// `rates[k]`; a rate of zero marks a dead worker.
    Exponential { seed: u64, rates: Vec<f64> },
}

/// What one step of a worker produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub j: usize,
    /// Indices sent to the master by this step, empty between block
    /// boundaries.
    pub emitted: Vec<usize>,
}

/// Workers' progress and everything the master has received so far.
#[derive(Debug, Clone)]
pub struct WorkerPool<'a> {
    encoded: &'a [Vec<EncodedBlock>],
    x: &'a DVector<f64>,
    s: usize,
    next: Vec<usize>,
    pending: Vec<Vec<(usize, DVector<f64>)>>,
    received: Vec<Vec<(usize, DVector<f64>)>>,
    events: Vec<(usize, usize)>,
}

impl<'a> WorkerPool<'a> {
    pub fn new(encoded: &'a [Vec<EncodedBlock>], x: &'a DVector<f64>, s: usize) -> Self {
        let n = encoded.len();
        WorkerPool {
            encoded,
            x,
            s,
            next: vec![0; n],
            pending: vec![Vec::new(); n],
            received: vec![Vec::new(); n],
            events: Vec::new(),
        }
    }

    /// Worker k computes its next product; at a block boundary the pending
    /// products go to the master.
    pub fn worker_step(&mut self, k: usize) -> Result<StepOutcome, CodingError> {
        let j = self.next[k];
        if j >= self.encoded[k].len() {
            return Err(CodingError::WorkerFinished(k));
        }
        let y = self.encoded[k][j].mul_vec(self.x);
        self.next[k] += 1;
        self.events.push((k, j));
        self.pending[k].push((j, y));
        let mut emitted = Vec::new();
        if (j + 1).is_multiple_of(self.s) {
            for (jj, yy) in self.pending[k].drain(..) {
                emitted.push(jj);
                self.received[k].push((jj, yy));
            }
        }
        Ok(StepOutcome { j, emitted })
    }

    pub fn completed(&self) -> &[usize] {
        &self.next
    }

    /// Products received per worker: the decode pattern.
    pub fn received_counts(&self) -> Vec<usize> {
        self.received.iter().map(Vec::len).collect()
    }

    pub fn received_blocks(&self) -> usize {
        self.received.iter().map(|r| r.len() / self.s).sum()
    }

    fn into_trace(self, schedule: Schedule) -> WorkerTrace {
        let received: Vec<Vec<ReturnedProduct>> = self
            .received
            .into_iter()
            .map(|r| r.into_iter().map(|(j, y)| ReturnedProduct { j, value: y.iter().copied().collect() }).collect())
            .collect();
        WorkerTrace {
            schedule,
            completed: self.next.clone(),
            pattern: received.iter().map(Vec::len).collect(),
            total_products: self.next.iter().sum(),
            events: self.events,
            received,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnedProduct {
    pub j: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerTrace {
    pub schedule: Schedule,
    /// Products computed per worker when the master stopped.
    pub completed: Vec<usize>,
    /// Products received per worker; the pattern used for decoding.
    pub pattern: Vec<usize>,
    pub total_products: usize,
    /// `(worker, j)` in the order products were computed.
    pub events: Vec<(usize, usize)>,
    /// Per-worker products in the order they arrived.
    pub received: Vec<Vec<ReturnedProduct>>,
}

impl WorkerTrace {
    /// Every worker's received indices are exactly `0, 1, …` with no gap.
    pub fn is_sequential(&self) -> bool {
        self.received.iter().all(|r| r.iter().enumerate().all(|(i, p)| p.j == i))
    }
}

/// A pending product completion in the stochastic model.
#[derive(Debug, PartialEq)]
struct Event {
    time: f64,
    worker: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time, then worker index.
        other.time.total_cmp(&self.time).then_with(|| other.worker.cmp(&self.worker))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the workers until the master can decode.
pub fn simulate(job: &CodedJob, encoded: &[Vec<EncodedBlock>], schedule: &Schedule) -> Result<WorkerTrace, CodingError> {
    let coll = job.collection();
    let (n, ell, s, q_b) = (coll.n_workers(), coll.ell(), coll.s(), coll.q_b());
    let mut pool = WorkerPool::new(encoded, &job.x, s);
    match schedule {
        Schedule::Budgets { budgets } => {
            if budgets.len() != n {
                return Err(CodingError::Shape(format!("{} budgets for {n} workers", budgets.len())));
            }
            if let Some(&b) = budgets.iter().find(|&&b| b > ell) {
                return Err(CodingError::Shape(format!("budget {b} exceeds ℓ = {ell}")));
            }
            let available = budgets.iter().map(|&b| b / s).sum::<usize>();
            if available < q_b {
                return Err(CodingError::Infeasible { available, needed: q_b });
            }
            while pool.received_blocks() < q_b {
                for (k, &budget) in budgets.iter().enumerate() {
                    if pool.completed()[k] < budget {
                        pool.worker_step(k)?;
                        if pool.received_blocks() >= q_b {
                            break;
                        }
                    }
                }
            }
        }
        Schedule::Exponential { seed, rates } => {
            if rates.len() != n {
                return Err(CodingError::Shape(format!("{} rates for {n} workers", rates.len())));
            }
            let available = rates.iter().filter(|&&r| r > 0.0).count() * (ell / s);
            if available < q_b {
                return Err(CodingError::Infeasible { available, needed: q_b });
            }
            let mut rngs: Vec<ChaCha8Rng> = (0..n)
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(k as u64);
                    rng
                })
                .collect();
            let mut heap = BinaryHeap::new();
            let draw = |k: usize, now: f64, rngs: &mut Vec<ChaCha8Rng>| -> Option<Event> {
                let rate = rates[k];
                (rate > 0.0 && rate.is_finite()).then(|| {
                    let exp = Exp::new(rate).expect("positive rate");
                    Event { time: now + exp.sample(&mut rngs[k]), worker: k }
                })
            };
            for k in 0..n {
                heap.extend(draw(k, 0.0, &mut rngs));
            }
            while pool.received_blocks() < q_b {
                let Some(ev) = heap.pop() else {
                    return Err(CodingError::Infeasible { available: pool.received_blocks(), needed: q_b });
                };
                pool.worker_step(ev.worker)?;
                if pool.completed()[ev.worker] < ell {
                    heap.extend(draw(ev.worker, ev.time, &mut rngs));
                }
            }
        }
    }
    Ok(pool.into_trace(schedule.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeOutput {
    pub ax: Vec<f64>,
    pub pattern: Vec<usize>,
    /// Frobenius norm of `GᵀY − R`.
    pub residual: f64,
    pub kappa: f64,
}

/// Solves `Gᵀ Y = R` in the least-squares sense from the received products.
pub fn decode(trace: &WorkerTrace, job: &CodedJob) -> Result<DecodeOutput, CodingError> {
    let coll = job.collection();
    let (delta, s, t) = (coll.delta(), coll.s(), job.block_height());
    let pattern = trace.pattern.clone();
    let blocks: usize = pattern.iter().map(|&v| v / s).sum();
    if blocks < coll.q_b() {
        return Err(CodingError::NotDecodable { pattern, have: blocks, needed: coll.q_b() });
    }
    let g = match assemble_G(coll, &pattern).map_err(|e| CodingError::Shape(e.to_string()))? {
        Assembled::Real(m) => crate::matrix::dmatrix_from(&m),
        Assembled::Integer(m) => m.to_f64(),
        Assembled::Field(..) => return Err(CodingError::Domain("finite-field".into())),
    };
    let rank = numeric_rank(&g, DEFAULT_RANK_TOL);
    if rank < delta {
        return Err(CodingError::RankDeficient { pattern, rank, delta });
    }
    let width = g.ncols();
    let mut r = DMatrix::zeros(width, t);
    let mut row = 0;
    for products in &trace.received {
        for p in products {
            for (c, v) in p.value.iter().enumerate() {
                r[(row, c)] = *v;
            }
            row += 1;
        }
    }
    let gt = g.transpose();
    let svd = gt.clone().svd(true, true);
    let y = svd.solve(&r, 0.0).map_err(|e| CodingError::Shape(e.to_string()))?;
    let residual = (&gt * &y - &r).norm();
    let mut ax = Vec::with_capacity(delta * t);
    for i in 0..delta {
        ax.extend(y.row(i).iter());
    }
    ax.truncate(job.rows());
    Ok(DecodeOutput { ax, pattern, residual, kappa: condition_number(&g) })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, CodingError> {
    tok.trim().parse().map_err(|_| CodingError::Parse(format!("line {line}: {tok:?} is not a number")))
}

/// Dense CSV: one row per line, comma-separated.
pub fn read_dense_csv(reader: impl BufRead) -> Result<DMatrix<f64>, CodingError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CodingError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|t| parse_f64(t, i + 1)).collect::<Result<_, _>>()?);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CodingError::Parse("ragged CSV rows".into()));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// Sparse triplets `row col value`, zero-based. An optional first line
/// `% rows cols` fixes the shape; otherwise it is inferred.
pub fn read_triplets(reader: impl BufRead) -> Result<InputMatrix, CodingError> {
    let mut shape = None;
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CodingError::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.trim_start_matches('%').split_whitespace().collect();
        let index = |t: &str| t.parse::<usize>().map_err(|_| CodingError::Parse(format!("line {}: bad index {t:?}", i + 1)));
        if line.starts_with('%') {
            if toks.len() == 2 {
                shape = Some((index(toks[0])?, index(toks[1])?));
            }
            continue;
        }
        if toks.len() != 3 {
            return Err(CodingError::Parse(format!("line {}: expected \"row col value\"", i + 1)));
        }
        entries.push((index(toks[0])?, index(toks[1])?, parse_f64(toks[2], i + 1)?));
    }
    let (rows, cols) = shape.unwrap_or_else(|| {
        entries.iter().fold((0, 0), |(r, c), &(i, j, _)| (r.max(i + 1), c.max(j + 1)))
    });
    if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
        return Err(CodingError::Parse(format!("entry ({i}, {j}) outside {rows}×{cols}")));
    }
    let csr = Csr::from_triplets(rows, cols, entries);
    let density = csr.nnz() as f64 / (rows * cols).max(1) as f64;
    Ok(if density < SPARSE_THRESHOLD { InputMatrix::Sparse(csr) } else { InputMatrix::Dense(csr.to_dense()) })
}

/// One value per line.
pub fn read_vector(reader: impl BufRead) -> Result<DVector<f64>, CodingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CodingError::Parse(e.to_string()))?;
        if !line.trim().is_empty() {
            out.push(parse_f64(&line, i + 1)?);
        }
    }
    Ok(DVector::from_vec(out))
}
