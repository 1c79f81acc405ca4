//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Reference values come from small oracles written here against the raw
//! definitions (map formula, Choi blocks, partial transpose), not from the
//! library code paths they check.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use witness_core::dtype_map::DTypeMap;
use witness_core::inequality::{
    constrained_scan, g_poly, lagrange_residual, quartic_factor_check, stationary_multiplier,
};
use witness_core::linalg::{hermitian_eig, kron_vec, min_eigenvalue, ComplexMatrix, C64, EIG_TOL};
use witness_core::optimality::{
    case2_split, certificate_sweep, coefficient_matrix, detect_value, optimality_verdict,
    subtraction_probe, zero_locus_span, Subcase, ZeroLocusConfig,
};
use witness_core::perm::Permutation;
use witness_core::positivity::{numeric_block_positivity, PositivityStatus, SearchConfig};

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// The map applied entrywise from its defining formula.
fn oracle_map(t: f64, pi: &[usize], x: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = pi.len();
    let mut y = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            y[i][j] = -x[i][j];
        }
        y[i][i] += x[i][i] * (n as f64 - t) + x[pi[i]][pi[i]] * t;
    }
    y
}

/// `W[(i*n+k, j*n+l)] = Phi(E_ij)[k][l]`.
fn oracle_choi(t: f64, pi: &[usize]) -> ComplexMatrix {
    let n = pi.len();
    let mut w = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![vec![C64::new(0.0, 0.0); n]; n];
            e[i][j] = C64::new(1.0, 0.0);
            let img = oracle_map(t, pi, &e);
            for k in 0..n {
                for l in 0..n {
                    w[(i * n + k, j * n + l)] = img[k][l];
                }
            }
        }
    }
    w
}

fn oracle_pt(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[(i * n + l, j * n + k)] = m[(i * n + k, j * n + l)];
                }
            }
        }
    }
    out
}

/// `<e (x) f|W|e (x) f> = <f| Phi(conj(e) conj(e)^dagger) |f>`.
fn oracle_product_value(t: f64, pi: &[usize], e: &[C64], f: &[C64]) -> f64 {
    let n = e.len();
    let x: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| e[i].conj() * e[j]).collect())
        .collect();
    let y = oracle_map(t, pi, &x);
    let mut s = C64::new(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            s += f[k].conj() * y[k][l] * f[l];
        }
    }
    s.re
}

fn zero_based(p: &Permutation) -> Vec<usize> {
    (0..p.n()).map(|i| p.apply(i)).collect()
}

fn max_orbit(pi: &[usize]) -> usize {
    (0..pi.len())
        .map(|s| {
            let mut len = 1;
            let mut i = pi[s];
            while i != s {
                i = pi[i];
                len += 1;
            }
            len
        })
        .max()
        .unwrap()
}

fn all_perms3() -> Vec<Permutation> {
    ["1,2,3", "1,3,2", "2,1,3", "2,3,1", "3,1,2", "3,2,1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn t_grid() -> Vec<f64> {
    (0..=30).map(|k| k as f64 / 10.0).collect()
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn positivity_cross_validation() -> Outcome {
    let cfg = SearchConfig::default();
    let mut points = 0;
    let mut violations = 0;
    for p in all_perms3() {
        let pi = zero_based(&p);
        let threshold = 3.0 / max_orbit(&pi) as f64;
        let mut ts: Vec<f64> = t_grid()
            .into_iter()
            .filter(|&t| t <= threshold + 1e-12)
            .collect();
        let above = 1.05 * threshold;
        if above <= 3.0 {
            ts.push(above);
        }
        for t in ts {
            let w = DTypeMap::new(t, p.clone())
                .map_err(|e| e.to_string())?
                .choi_matrix();
            let v = numeric_block_positivity(&w, &cfg);
            let expect_violation = t > threshold + 1e-12;
            let found = v.status == PositivityStatus::ViolationFound;
            ensure(found == expect_violation, || {
                format!(
                    "pi={p} t={t}: numeric min {} vs threshold {threshold}",
                    v.min_value
                )
            })?;
            if let Some((e, f)) = &v.witness_pair {
                let direct = oracle_product_value(t, &pi, e, f);
                ensure(
                    direct < -1e-8 && (direct - v.min_value).abs() < 1e-9,
                    || format!("pi={p} t={t}: reported pair evaluates to {direct}"),
                )?;
                violations += 1;
            } else {
                ensure(v.min_value >= -1e-8, || {
                    format!("pi={p} t={t}: min {}", v.min_value)
                })?;
            }
            points += 1;
        }
    }
    Ok(format!(
        "{points} (pi, t) points, {violations} violations, all beyond 3/l(pi)"
    ))
}

fn verdict_table() -> Outcome {
    let mut optimal = Vec::new();
    for p in all_perms3() {
        let pi = zero_based(&p);
        let three_cycle = (0..3).all(|i| pi[i] != i);
        for t in t_grid() {
            let got = optimality_verdict(t, &p)
                .map(|v| v.optimal)
                .unwrap_or(false);
            let expect = three_cycle && t == 1.0;
            ensure(got == expect, || format!("pi={p} t={t}: optimal={got}"))?;
            if got {
                optimal.push(p.to_string());
            }
        }
    }
    ensure(optimal.len() == 2, || format!("optimal set {optimal:?}"))?;
    Ok(format!(
        "optimal exactly at t=1 for {}",
        optimal.join(" and ")
    ))
}

fn transposition_splits() -> Outcome {
    let mut worst_eig: f64 = f64::INFINITY;
    let mut worst_pt: f64 = f64::INFINITY;
    let mut worst_sum: f64 = 0.0;
    let mut count = 0;
    for p in ["2,1,3", "3,2,1", "1,3,2"] {
        let p: Permutation = p.parse().unwrap();
        let pi = zero_based(&p);
        for t in [0.25, 0.5, 0.75, 1.0, 1.2, 1.5] {
            let split = case2_split(t, &p).map_err(|e| e.to_string())?;
            let w = oracle_choi(t, &pi);
            let sum = &split.positive_part + &split.ppt_part;
            let sum_err = sum.max_abs_diff(&w);
            let pos = min_eigenvalue(&split.positive_part).unwrap();
            let pt = min_eigenvalue(&oracle_pt(&split.ppt_part, 3)).unwrap();
            let check = split.check(&DTypeMap::new(t, p.clone()).unwrap().choi_matrix());
            ensure(sum_err <= 1e-14, || {
                format!("pi={p} t={t}: sum error {sum_err}")
            })?;
            ensure(pos >= -1e-10, || {
                format!("pi={p} t={t}: positive part eigenvalue {pos}")
            })?;
            ensure(pt >= -1e-10 && check.ppt, || {
                format!("pi={p} t={t}: PT eigenvalue {pt}")
            })?;
            ensure(split.positive_part.frobenius_norm() > 0.0, || {
                format!("pi={p} t={t}: zero positive part")
            })?;
            worst_eig = worst_eig.min(pos);
            worst_pt = worst_pt.min(pt);
            worst_sum = worst_sum.max(sum_err);
            count += 1;
        }
    }
    Ok(format!(
        "{count} splits; min eig {worst_eig:.2e}, min PT eig {worst_pt:.2e}, max sum error {worst_sum:.1e}"
    ))
}

/// 2×6 `F_x` times its adjoint through a generic Hermitian eigensolve.
fn oracle_gram_max(x: &[C64; 3], t: f64, c: f64) -> (f64, f64) {
    let f = coefficient_matrix(x, t, c).unwrap();
    let m = f.matrix();
    let g = &m * &m.adjoint();
    let top = hermitian_eig(&g, EIG_TOL).unwrap().max();
    let sq = (3.0 - t).sqrt();
    let st = t.sqrt();
    let mut res: f64 = 0.0;
    for (row, target) in [
        (0, [x[0], x[1], x[2]]),
        (1, [x[0] * c, -x[1] * c, C64::new(0.0, 0.0)]),
    ] {
        for i in 0..3 {
            let rebuilt = m[(row, i)] * sq * x[i] + m[(row, 3 + i)] * st * x[(i + 1) % 3];
            res = res.max((rebuilt - target[i]).norm());
        }
    }
    (top, res)
}

fn certificate_sweeps() -> Outcome {
    let mut max_eig: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    let mut total = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        let c = (1.0 - t).sqrt();
        let report =
            certificate_sweep(t, c, 10_000, 1000 + k).map_err(|e| format!("t={t}: {e}"))?;
        ensure(report.max_gram_eig <= 1.0 + 1e-9, || {
            format!("t={t}: {}", report.max_gram_eig)
        })?;
        ensure(report.max_residual <= 1e-12, || {
            format!("t={t}: residual {}", report.max_residual)
        })?;
        for (sub, n) in &report.subcase_counts {
            ensure(*n > 0, || format!("t={t}: pattern {sub:?} never visited"))?;
        }
        max_eig = max_eig.max(report.max_gram_eig);
        max_res = max_res.max(report.max_residual);
        total += report.samples;

        for sub in Subcase::ALL {
            let mut xs = vec![sub.representative()];
            xs.extend((0..50).map(|_| sub.sample(&mut rng)));
            for x in xs {
                let (top, res) = oracle_gram_max(&x, t, c);
                ensure(top <= 1.0 + 1e-9 && res <= 1e-12, || {
                    format!("t={t} {sub:?} x={x:?}: eig {top}, residual {res}")
                })?;
            }
        }
    }
    Ok(format!(
        "{total} vectors over 9 values of t; max Gram eig {max_eig:.12}, max residual {max_res:.1e}"
    ))
}

fn subtracted_positivity() -> Outcome {
    let mut mins = Vec::new();
    for t in [0.3f64, 0.6, 0.9] {
        let c = (1.0 - t).sqrt();
        let m = DTypeMap::new(t, Permutation::shift(3))
            .unwrap()
            .subtracted(ComplexMatrix::real_diag(&[c, -c, 0.0]))
            .unwrap();
        let v = numeric_block_positivity(&m.choi_matrix(), &SearchConfig::default());
        ensure(
            v.status == PositivityStatus::NoViolationFound && v.min_value >= -1e-8,
            || format!("t={t}: {:?} min {}", v.status, v.min_value),
        )?;
        mins.push(format!("{:.1e}", v.min_value));
    }
    Ok(format!(
        "no violation over 100 restarts; minima {}",
        mins.join(", ")
    ))
}

fn inequality_checks() -> Outcome {
    let mut worst_g: f64 = f64::INFINITY;
    let mut worst_gap: f64 = f64::INFINITY;
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        let g1 = g_poly(t, &[1.0, 1.0, 1.0]);
        ensure(g1.abs() <= 1e-12, || format!("t={t}: g(1,1,1) = {g1}"))?;

        // Third Lagrange equation at (1,1,1): (1 - t^2) + 2t + lambda = 0.
        let lambda = -(1.0 - t * t) - 2.0 * t;
        let lib = stationary_multiplier(t, &[1.0, 1.0, 1.0]);
        ensure((lambda - lib).abs() <= 1e-15, || {
            format!("t={t}: lambda {lib} vs {lambda}")
        })?;
        for r in lagrange_residual(t, &[1.0, 1.0, 1.0], lambda) {
            ensure(r.abs() <= 1e-12, || format!("t={t}: Lagrange residual {r}"))?;
        }

        let scan = constrained_scan(t, 100_000, 3.0, 7 + k).map_err(|e| e.to_string())?;
        ensure(scan.min_g >= -1e-9, || {
            format!("t={t}: min g {}", scan.min_g)
        })?;
        ensure(scan.min_f_gap >= -1e-9, || {
            format!("t={t}: min f gap {}", scan.min_f_gap)
        })?;
        ensure(scan.sign_mismatches == 0, || {
            format!("t={t}: {} sign mismatches", scan.sign_mismatches)
        })?;
        worst_g = worst_g.min(scan.min_g);
        worst_gap = worst_gap.min(scan.min_f_gap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..1.0);
        let x: f64 = rng.random_range(0.0..10.0);
        let expanded =
            (2.0 * t - t * t) * x.powi(4) + (1.0 - t) * x.powi(3) - t * x + (t * t - 1.0);
        let q = quartic_factor_check(t, x);
        ensure((q.lhs - expanded).abs() <= 1e-10, || {
            format!("t={t} x={x}: {} vs {expanded}", q.lhs)
        })?;
    }
    Ok(format!(
        "9 scans of 1e5 samples; min g {worst_g:.3e}, min f gap {worst_gap:.3e}; quartic identity at 1000 points"
    ))
}

fn witness_behavior() -> Outcome {
    let choi_map = DTypeMap::new(1.0, Permutation::shift(3)).unwrap();
    let w = choi_map.choi_matrix();
    let oracle = oracle_choi(1.0, &[1, 2, 0]);
    ensure(w.matrix().max_abs_diff(&oracle) == 0.0, || {
        "Choi matrix differs from oracle".into()
    })?;
    let eig = hermitian_eig(w.matrix(), EIG_TOL).unwrap();
    let lam = eig.min();
    ensure(lam < 0.0, || format!("min eigenvalue {lam}"))?;
    let v = eig.vector(0);
    let rho = ComplexMatrix::outer(&v, &v);
    let d = detect_value(&w, &rho).map_err(|e| e.to_string())?;
    ensure(d < 0.0 && (d - lam).abs() < 1e-10, || {
        format!("detect {d} vs eigenvalue {lam}")
    })?;
    let mixed = detect_value(&w, &ComplexMatrix::identity(9).scale_real(1.0 / 9.0)).unwrap();
    ensure((mixed - 2.0 / 3.0).abs() <= 1e-10, || {
        format!("Tr(W I/9) = {mixed}")
    })?;
    let z = zero_locus_span(
        &w,
        &ZeroLocusConfig {
            samples: 100_000,
            seed: 5,
        },
    );
    ensure(z.dimension < 9, || {
        format!("zero locus dimension {}", z.dimension)
    })?;
    for b in &z.basis {
        ensure(b.len() == 9, || "basis vector length".into())?;
    }
    // Spot-check the sampled locus: a product vector built from an equal-modulus e.
    let e: Vec<C64> = (0..3)
        .map(|k| C64::from_polar(1.0 / 3f64.sqrt(), k as f64))
        .collect();
    let f: Vec<C64> = e.iter().map(|z| z.conj()).collect();
    let on_locus = w.matrix().quad_form(&kron_vec(&e, &f));
    ensure(on_locus.abs() < 1e-12, || {
        format!("<e,f|W|e,f> = {on_locus}")
    })?;
    Ok(format!(
        "min eig {lam:.6}, detect(min eigvec) {d:.6}, Tr(W I/9) {mixed:.12}, zero-locus dimension {} ({} hits)",
        z.dimension, z.hits
    ))
}

fn probe_consistency() -> Outcome {
    let small_t = subtraction_probe(&DTypeMap::new(0.5, Permutation::shift(3)).unwrap(), 200, 42);
    ensure(small_t.found, || "t=0.5: no subtraction found".into())?;
    let c = small_t.best_c.as_ref().unwrap();
    ensure(c.frobenius_norm() > 0.0, || "t=0.5: zero C".into())?;
    let optimal = subtraction_probe(&DTypeMap::new(1.0, Permutation::shift(3)).unwrap(), 200, 42);
    ensure(!optimal.found, || {
        format!(
            "t=1: subtraction with ||C||_F = {} survived",
            optimal.best_scale
        )
    })?;
    Ok(format!(
        "t=0.5 found ||C||_F = {:.4}; t=1 none in {} trials (evidence, not proof)",
        small_t.best_scale, optimal.trials
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("positivity cross-validation", positivity_cross_validation),
        ("optimality verdict table", verdict_table),
        ("transposition decompositions", transposition_splits),
        ("certificate sweep", certificate_sweeps),
        ("subtracted-map positivity", subtracted_positivity),
        ("three-variable inequality", inequality_checks),
        ("witness behavior", witness_behavior),
        ("subtraction probe consistency", probe_consistency),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail} ({secs:.1}s)", k + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} {name}: {why} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
