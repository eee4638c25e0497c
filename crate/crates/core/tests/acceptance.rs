//! Acceptance suite. Each criterion prints one `criterion N: PASS|FAIL` line
//! (run with `--nocapture` to see them) and asserts its verdict.

use std::time::{Duration, Instant};

use codedmv::analysis::{
    analyze, assemble_G, certify_full_rank, numeric_rank, worst_case_load, worst_case_load_search, AnalysisOptions,
    AnalysisReport, EnumerationMode, Exactness, PatternBound, PatternSpace, Verdict, DEFAULT_RANK_TOL,
};
use codedmv::coding::{decode, simulate, CodedJob, InputMatrix, Schedule};
use codedmv::companion::{integer_lift, CompanionRep};
use codedmv::exact::{bareiss_det, rank_gf_p, rank_over_field};
use codedmv::gf::{builtin_fields, GfContext, GfElement};
use codedmv::matrix::Matrix;
use codedmv::schemes::{example_one, make_naive_real_embed, BetaLog, Construction, SchemeConfig};
use codedmv::tables::{run_table, table_one, table_two};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u8, ok: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn opts(bound: PatternBound) -> AnalysisOptions {
    AnalysisOptions { bound, ..AnalysisOptions::default() }
}

// ---------------------------------------------------------------- criterion 1

struct RealRow {
    construction: Construction,
    label: &'static str,
    max_kappa: f64,
    avg_kappa: f64,
    density: f64,
}

/// Returns (row passes, description). A row passes when density matches
/// exactly and some bound convention puts max κ within 15% and avg κ within
/// 25% simultaneously.
fn check_real_row(row: &RealRow) -> (bool, String) {
    let coll = SchemeConfig::new(row.construction, 6, 4, 3).build().unwrap();
    let density_ok = (coll.density() - row.density).abs() < 1e-12;
    let mut parts = vec![format!("density {:.4} (want {})", coll.density(), row.density)];
    let mut passing = Vec::new();
    for bound in [PatternBound::Inclusive, PatternBound::Strict] {
        let r: AnalysisReport = analyze(&coll, &opts(bound)).unwrap();
        let (mx, avg) = (r.max_kappa.unwrap(), r.avg_kappa.unwrap());
        let (emx, eavg) = (rel_err(mx, row.max_kappa), rel_err(avg, row.avg_kappa));
        let ok = r.certification.verdict.passed() && emx <= 0.15 && eavg <= 0.25;
        parts.push(format!(
            "{bound}: max {mx:.1} ({:+.1}%) avg {avg:.1} ({:+.1}%) {}",
            100.0 * (mx - row.max_kappa) / row.max_kappa,
            100.0 * (avg - row.avg_kappa) / row.avg_kappa,
            if ok { "ok" } else { "out of tolerance" }
        ));
        if ok {
            passing.push(bound.to_string());
        }
    }
    let ok = density_ok && !passing.is_empty();
    let which = if passing.is_empty() { "none".to_string() } else { passing.join(", ") };
    (ok, format!("[{}: {}; passing bound: {which}]", row.label, parts.join("; ")))
}

#[test]
fn criterion_1_real_rows() {
    let start = Instant::now();
    let rows = [
        RealRow {
            construction: Construction::RsReal,
            label: "RS based scheme",
            max_kappa: 5.1e3,
            avg_kappa: 334.0,
            density: 1.0,
        },
        RealRow {
            construction: Construction::UdmReal,
            label: "UDM-based scheme",
            max_kappa: 6.1e3,
            avg_kappa: 265.0,
            density: 0.75,
        },
    ];
    let results: Vec<(bool, String)> = rows.iter().map(check_real_row).collect();
    let elapsed = start.elapsed();
    let timely = elapsed < Duration::from_secs(10);
    let ok = timely && results.iter().all(|r| r.0);
    let detail: Vec<&str> = results.iter().map(|r| r.1.as_str()).collect();
    report(1, ok, &format!("{} runtime {:.2}s", detail.join(" "), elapsed.as_secs_f64()));
    assert!(ok, "criterion 1 failed: {detail:?}");
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_field_rows() {
    let opts = AnalysisOptions::default();
    let one = run_table(&table_one(), &opts).unwrap();
    let two = run_table(&table_two(), &opts).unwrap();
    let mut problems = Vec::new();

    let smallest = one
        .iter()
        .min_by(|a, b| a.max_kappa.unwrap().total_cmp(&b.max_kappa.unwrap()))
        .unwrap();
    if smallest.label != "UDM+Companion GF(3^2)" {
        problems.push(format!("smallest max κ is {}", smallest.label));
    }

    let is_rs = |r: &AnalysisReport| r.label.starts_with("RS");
    let densest_companion_udm = one
        .iter()
        .filter(|r| r.scheme.construction == Construction::UdmCompanion)
        .map(|r| r.density)
        .fold(0.0, f64::max);
    let sparsest_rs = one.iter().filter(|r| is_rs(r)).map(|r| r.density).fold(1.0, f64::min);
    if densest_companion_udm >= sparsest_rs {
        problems.push(format!("companion UDM density {densest_companion_udm:.3} ≥ RS density {sparsest_rs:.3}"));
    }

    let mut checked = 0;
    let mut worst_pp: f64 = 0.0;
    let targets = table_one().into_iter().zip(&one).chain(table_two().into_iter().zip(&two));
    for (row, rep) in targets {
        if rep.scheme.field.is_none() {
            continue;
        }
        checked += 1;
        let pp = 100.0 * (rep.density - row.target.density).abs();
        worst_pp = worst_pp.max(pp);
        if pp > 5.0 {
            problems.push(format!("{} density {:.1}% vs {:.0}%", row.label, 100.0 * rep.density, 100.0 * row.target.density));
        }
        let logged = match &rep.scheme.betas {
            BetaLog::Field(b) => b.len() == rep.scheme.n_workers || b.len() == rep.scheme.n_workers * row.config.ell,
            _ => false,
        };
        if !logged {
            problems.push(format!("{} does not log its β", row.label));
        }
        println!("  {:<24} β = {}", row.label, serde_json::to_string(&rep.scheme.betas).unwrap());
    }
    let ok = problems.is_empty() && checked == 12;
    report(
        2,
        ok,
        &format!(
            "[smallest max κ: {} ({:.1}); {checked} field rows, worst density gap {worst_pp:.1}pp] {problems:?}",
            smallest.label,
            smallest.max_kappa.unwrap()
        ),
    );
    assert!(ok, "{problems:?}");
}

// ---------------------------------------------------------------- criterion 3

/// Independent count of patterns: brute force over every vector in
/// `{0..=max_v}^N` with the right block total.
fn brute_force_count(n: usize, max_v: usize, s: usize, q_b: usize, block_aligned: bool) -> u64 {
    let mut count = 0;
    let mut v = vec![0usize; n];
    loop {
        let aligned = v.iter().all(|&x| x % s == 0);
        if v.iter().map(|&x| x / s).sum::<usize>() == q_b && (aligned || !block_aligned) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            v[i] += 1;
            if v[i] <= max_v {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

/// Coefficient of x^q in (1 + x + … + x^m)^n.
fn generating_function(n: usize, m: usize, q: usize) -> u64 {
    let mut poly = vec![1u64];
    for _ in 0..n {
        let mut next = vec![0u64; poly.len() + m];
        for (i, &c) in poly.iter().enumerate() {
            for j in 0..=m {
                next[i + j] += c;
            }
        }
        poly = next;
    }
    poly.get(q).copied().unwrap_or(0)
}

#[test]
fn criterion_3_certification_suite() {
    let start = Instant::now();
    let mut problems = Vec::new();

    let ex = example_one();
    let mut counts = Vec::new();
    for bound in [PatternBound::Inclusive, PatternBound::Strict] {
        let cert = certify_full_rank(&ex, EnumerationMode::BlockAligned, bound, DEFAULT_RANK_TOL);
        let oracle = brute_force_count(3, bound.max_v(2), 1, 3, true);
        if !cert.verdict.passed() || cert.patterns_checked != oracle || cert.exactness != Exactness::Exact {
            problems.push(format!("example one {bound}: {cert:?} vs oracle count {oracle}"));
        }
        counts.push(cert.patterns_checked);
    }

    let mut six = Vec::new();
    for (bound, m) in [(PatternBound::Strict, 2), (PatternBound::Inclusive, 3)] {
        let space = PatternSpace::new(6, 3, 1, 4, EnumerationMode::BlockAligned, bound);
        let listed = space.iter().count() as u64;
        let gf = generating_function(6, m, 4);
        if listed != gf || space.count() != gf as u128 {
            problems.push(format!("N=6 {bound}: listed {listed}, dp {}, oracle {gf}", space.count()));
        }
        six.push(listed);
    }

    let naive = make_naive_real_embed(2, 4, 2, &[1.0, -1.0], 2).unwrap();
    let cert = certify_full_rank(&naive, EnumerationMode::BlockAligned, PatternBound::Inclusive, DEFAULT_RANK_TOL);
    let failing: Vec<Vec<usize>> = PatternSpace::for_collection(&naive, EnumerationMode::BlockAligned, PatternBound::Inclusive)
        .iter()
        .filter(|v| {
            let g = assemble_G(&naive, v).unwrap().to_real().unwrap();
            numeric_rank(&g, DEFAULT_RANK_TOL) < naive.delta()
        })
        .collect();
    if cert.verdict != (Verdict::Fail { pattern: vec![2, 2], rank: 2 }) {
        problems.push(format!("counterexample verdict {:?}", cert.verdict));
    }
    if failing != vec![vec![2, 2]] {
        problems.push(format!("counterexample failing set {failing:?}"));
    }

    let gf8 = SchemeConfig::new(Construction::UdmCompanion, 6, 4, 3).with_field("2^3").build().unwrap();
    assert_eq!((gf8.delta(), gf8.ell(), gf8.s()), (12, 9, 3));
    let mut gf8_counts = Vec::new();
    for mode in [EnumerationMode::BlockAligned, EnumerationMode::Full] {
        let cert = certify_full_rank(&gf8, mode, PatternBound::Inclusive, DEFAULT_RANK_TOL);
        if !cert.verdict.passed() || cert.exactness != Exactness::Exact {
            problems.push(format!("GF(8) companion {mode}: {cert:?}"));
        }
        gf8_counts.push(cert.patterns_checked);
    }

    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(5) {
        problems.push(format!("runtime {elapsed:?}"));
    }
    let ok = problems.is_empty();
    report(
        3,
        ok,
        &format!(
            "[example one: {} inclusive / {} strict patterns; N=6 ℓ=3 Q_b=4: {} strict / {} inclusive; \
             β=(1,−1) fails only at (2,2); GF(8) companion exact over {} block-aligned + {} full patterns; \
             runtime {:.2}s] {problems:?}",
            counts[0],
            counts[1],
            six[0],
            six[1],
            gf8_counts[0],
            gf8_counts[1],
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok, "{problems:?}");
}

// ---------------------------------------------------------------- criterion 4

fn random_matrix(ctx: &GfContext, size: usize, rng: &mut ChaCha8Rng) -> Matrix<GfElement> {
    let q = ctx.order();
    Matrix::from_fn(size, size, |_, _| ctx.from_packed(rng.random_range(0..q)).unwrap())
}

#[test]
fn criterion_4_embedding_oracles() {
    const PER_FIELD: usize = 1200;
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for (field, seed) in [("2^2", 4u64), ("2^3", 8), ("3^2", 9)] {
        let ctx: GfContext = field.parse().unwrap();
        let rep = CompanionRep::new(&ctx);
        let p = ctx.characteristic();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut singular, mut mismatch_p, mut mismatch_mod, mut forward, mut converse) = (0, 0, 0, 0, 0);
        for i in 0..PER_FIELD {
            let size = 1 + i % 4;
            let b = random_matrix(&ctx, size, &mut rng);
            let field_ok = rank_over_field(&ctx, &b) == size;
            let expanded = rep.expand_matrix(&b);
            let gfp_ok = rank_gf_p(&expanded, p) == expanded.rows();
            let det = bareiss_det(&integer_lift(&expanded));
            let int_ok = !det.is_zero();
            let int_mod_ok = !(det % BigInt::from(p)).is_zero();
            singular += usize::from(!field_ok);
            mismatch_p += usize::from(field_ok != gfp_ok);
            mismatch_mod += usize::from(field_ok != int_mod_ok);
            forward += usize::from(field_ok && !int_ok);
            converse += usize::from(!field_ok && int_ok);
        }
        if mismatch_p + mismatch_mod + forward > 0 {
            problems.push(format!(
                "GF({field}): field vs GF(p) {mismatch_p}, field vs det mod p {mismatch_mod}, nonsingular with det 0 {forward}"
            ));
        }
        summary.push(format!(
            "GF({field}): {PER_FIELD} matrices, {singular} singular, 0 discrepancies; \
             {converse} singular ones have nonzero integer det (a multiple of {p})"
        ));
    }
    let ok = problems.is_empty();
    report(4, ok, &format!("[{}] {problems:?}", summary.join("; ")));
    assert!(ok, "{problems:?}");
}

// ---------------------------------------------------------------- criterion 5

fn check_axioms(ctx: &GfContext) -> Result<(), String> {
    let els = ctx.elements();
    let (zero, one) = (ctx.zero(), ctx.one());
    let add = |a, b| ctx.add(a, b).unwrap();
    let mul = |a, b| ctx.mul(a, b).unwrap();
    if els.len() != ctx.order() as usize {
        return Err("element count".into());
    }
    for &a in &els {
        if add(a, zero) != a || mul(a, one) != a || add(a, ctx.neg(a).unwrap()) != zero {
            return Err(format!("identity/negation at {}", ctx.display(a)));
        }
        if !a.is_zero() && mul(a, ctx.inv(a).unwrap()) != one {
            return Err(format!("inverse at {}", ctx.display(a)));
        }
        for &b in &els {
            if add(a, b) != add(b, a) || mul(a, b) != mul(b, a) {
                return Err(format!("commutativity at {}, {}", ctx.display(a), ctx.display(b)));
            }
            if !a.is_zero() && !b.is_zero() && mul(a, b).is_zero() {
                return Err("zero divisor".into());
            }
            for &c in &els {
                if add(add(a, b), c) != add(a, add(b, c))
                    || mul(mul(a, b), c) != mul(a, mul(b, c))
                    || mul(a, add(b, c)) != add(mul(a, b), mul(a, c))
                {
                    return Err(format!("associativity/distributivity at {}", ctx.display(a)));
                }
            }
        }
    }
    let alpha = ctx.alpha();
    let generated = (0..ctx.order() - 1).map(|k| ctx.pow(alpha, k as u64).unwrap()).collect::<std::collections::HashSet<_>>();
    if generated.len() != ctx.order() as usize - 1 {
        return Err("α is not primitive".into());
    }
    Ok(())
}

fn gamma_shift_holds(ctx: &GfContext) -> bool {
    let rep = CompanionRep::new(ctx);
    let c = rep.matrix();
    let p = ctx.characteristic() as u64;
    let n = rep.degree();
    ctx.elements().into_iter().all(|b| {
        let gb = ctx.coeffs(b);
        let cg: Vec<u32> =
            (0..n).map(|i| ((0..n).map(|j| c[(i, j)] as u64 * gb[j] as u64).sum::<u64>() % p) as u32).collect();
        cg == ctx.coeffs(ctx.mul(ctx.alpha(), b).unwrap())
    })
}

#[test]
fn criterion_5_field_properties() {
    let mut problems = Vec::new();
    let mut fields = Vec::new();
    let primes = (2..=81u32).filter(|&p| codedmv::gf::is_prime(p)).map(|p| (p, 1));
    for (p, n) in primes.chain(builtin_fields().filter(|&(_, n)| n > 1)) {
        if (p as u64).pow(n) > 81 {
            continue;
        }
        let ctx = GfContext::new(p, n, None).unwrap();
        fields.push(format!("{p}^{n}"));
        if let Err(e) = check_axioms(&ctx) {
            problems.push(format!("GF({p}^{n}) axioms: {e}"));
        }
        if !gamma_shift_holds(&ctx) {
            problems.push(format!("GF({p}^{n}) Γ(αb) ≠ CΓ(b)"));
        }
    }
    let mut pairs = Vec::new();
    for field in ["2^3", "3^2"] {
        let ctx: GfContext = field.parse().unwrap();
        match CompanionRep::new(&ctx).homomorphism_check() {
            Ok(n) => pairs.push(n),
            Err(e) => problems.push(format!("ζ on GF({field}): {e}")),
        }
    }
    let ok = problems.is_empty() && pairs.len() == 2;
    report(
        5,
        ok,
        &format!("[axioms and Γ shift on {} fields: {}; ζ checked on {pairs:?} pairs] {problems:?}", fields.len(), fields.join(" ")),
    );
    assert!(ok, "{problems:?}");
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_round_trip() {
    const TRIALS: usize = 50;
    let mut problems = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut runs = 0;
    for (row_idx, row) in table_one().into_iter().enumerate() {
        let coll = row.config.build().unwrap();
        let (n, ell, s, q_b) = (coll.n_workers(), coll.ell(), coll.s(), coll.q_b());
        let bound = worst_case_load(coll.delta(), n, s);
        let space = PatternSpace::for_collection(&coll, EnumerationMode::BlockAligned, PatternBound::Inclusive);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + row_idx as u64);
        for t in 0..TRIALS {
            let a = DMatrix::from_fn(96, 48, |_, _| rng.random_range(-1.0..1.0));
            let x = DVector::from_fn(48, |_, _| rng.random_range(-1.0..1.0));
            let schedule = if t % 2 == 0 {
                loop {
                    let budgets: Vec<usize> = (0..n).map(|_| rng.random_range(0..=ell)).collect();
                    if budgets.iter().map(|b| b / s).sum::<usize>() >= q_b {
                        break Schedule::Budgets { budgets };
                    }
                }
            } else {
                let mut rates: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
                rates[rng.random_range(0..n)] = 0.0;
                Schedule::Exponential { seed: rng.random(), rates }
            };
            let job = CodedJob::new(InputMatrix::auto(a), x, coll.clone()).unwrap();
            let encoded = job.encode();
            let trace = simulate(&job, &encoded, &schedule).unwrap();
            let out = decode(&trace, &job).unwrap();
            let truth = job.direct_product();
            let err = (DVector::from_column_slice(&out.ax) - &truth).norm() / truth.norm();
            let ratio = err / out.kappa;
            worst_ratio = worst_ratio.max(ratio);
            runs += 1;
            let blocks: usize = trace.pattern.iter().map(|v| v / s).sum();
            let label = row.label;
            if ratio > 1e-8 {
                problems.push(format!("{label} trial {t}: error {err:e} with κ {}", out.kappa));
            }
            if !trace.is_sequential() {
                problems.push(format!("{label} trial {t}: out-of-order products"));
            }
            if blocks != q_b || !space.contains(&trace.pattern) {
                problems.push(format!("{label} trial {t}: stopped at {:?}", trace.pattern));
            }
            if trace.total_products > bound {
                problems.push(format!("{label} trial {t}: {} products > {bound}", trace.total_products));
            }
        }
    }
    let ok = problems.is_empty();
    report(6, ok, &format!("[{runs} round trips, worst error/κ {worst_ratio:.2e}] {problems:?}"));
    assert!(ok, "{problems:?}");
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_load_formula() {
    let mut problems = Vec::new();
    let (mut exact, mut bounded) = (0, 0);
    for n in 1..=4 {
        for ell in 1..=6 {
            for s in (1..=3).filter(|s| ell % s == 0) {
                for q_b in 1..=n * (ell / s) {
                    let formula = worst_case_load(q_b * s, n, s);
                    let searched = worst_case_load_search(n, ell, s, q_b).unwrap();
                    if q_b <= n * (ell / s - 1) + 1 {
                        exact += 1;
                        if searched != formula {
                            problems.push(format!("N={n} ℓ={ell} s={s} Q_b={q_b}: search {searched}, formula {formula}"));
                        }
                    } else {
                        bounded += 1;
                        if searched > formula {
                            problems.push(format!("N={n} ℓ={ell} s={s} Q_b={q_b}: search {searched} > formula {formula}"));
                        }
                    }
                }
            }
        }
    }
    let ok = problems.is_empty();
    report(
        7,
        ok,
        &format!(
            "[{exact} instances where workers can all hold s−1 partial products: formula = search; \
             {bound} saturated instances: search ≤ formula] {problems:?}",
            bound = bounded
        ),
    );
    assert!(ok, "{problems:?}");
}
