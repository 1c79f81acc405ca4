use rand::Rng;
use serde_json::{json, Value};

use witness_core::dtype_map::{DTypeMap, Witness};
use witness_core::inequality::{
    constrained_scan, lagrange_residual, quartic_factor_check, stationary_multiplier,
    subcase_bound, BoundCase, BOUND_TOL, EXCLUSION_RADIUS,
};
use witness_core::linalg::{min_eigenvalue, ComplexMatrix};
use witness_core::optimality::{
    c0_certificate, c_form_split, case2_split, coefficient_matrix, detect_value, gram_contraction,
    optimality_verdict, reconstruction_residual, run_certificate_sweep, subtraction_probe,
    zero_locus_span, OptimalityReason, Subcase, ZeroLocusConfig, CONTRACTION_TOL,
    ZERO_COMPONENT_TOL, ZERO_LOCUS_EIG_TOL, ZERO_LOCUS_RANK_TOL,
};
use witness_core::perm::Permutation;
use witness_core::positivity::{
    closed_form_positive, is_completely_positive, is_ppt, numeric_block_positivity,
    positivity_threshold, PositivityStatus, SearchConfig, PSD_TOL, VIOLATION_TOL,
};
use witness_core::WitnessError;

use crate::{Cli, Command};

pub struct Report {
    pub json: Value,
    pub finding: bool,
}

type Outcome = Result<(Value, bool), String>;

const MAX_N: usize = 4;
const RESIDUAL_TOL: f64 = 1e-12;
const INEQUALITY_TOL: f64 = 1e-9;

fn name(cmd: Command) -> &'static str {
    match cmd {
        Command::BuildWitness => "build-witness",
        Command::CheckPositivity => "check-positivity",
        Command::CheckCp => "check-cp",
        Command::CheckOptimality => "check-optimality",
        Command::Decompose => "decompose",
        Command::CertificateSweep => "certificate-sweep",
        Command::VerifyInequality => "verify-lemma24",
        Command::VerifySubcases => "verify-subcases",
        Command::ZeroLocus => "zero-locus",
        Command::Detect => "detect",
        Command::ProbeSubtraction => "probe-subtraction",
        Command::ConjectureProbe => "conjecture-probe",
    }
}

fn claim(cmd: Command) -> &'static str {
    match cmd {
        Command::BuildWitness => {
            "The Choi matrix W = (Phi(E_ij)) of a positive map is block-positive; it is an entanglement witness when Phi is not completely positive."
        }
        Command::CheckPositivity => "Phi_{t,pi} on M_n is positive iff 0 <= t <= n / l(pi).",
        Command::CheckCp => "Phi is completely positive iff its Choi matrix is positive semidefinite.",
        Command::CheckOptimality => {
            "For n = 3, the witness of a positive, non-CP Phi_{t,pi} is optimal iff t = 1 and l(pi) = 3."
        }
        Command::Decompose => {
            "For l(pi) = 2 and 0 < t <= 3/2, W = A + B with A >= 0, A != 0 and B^{T_B} >= 0, so W is decomposable and not optimal."
        }
        Command::CertificateSweep => {
            "For l(pi) = 3, 0 < t < 1 and 0 < c^2 <= 1 - t, X -> Phi(X) - C0 X C0^dagger with C0 = diag(c, -c, 0) is positive: every local coefficient matrix F_x is a contraction."
        }
        Command::VerifyInequality => {
            "For 0 < t < 1 and positive x with x1 x2 x3 = 1, x != (1,1,1): f(x) >= 1 - t, equivalently g(x) >= 0, with constrained minimum g(1,1,1) = 0."
        }
        Command::VerifySubcases => {
            "In every zero pattern of x the explicit coefficients reproduce x and C0 x, and ||F_x F_x^dagger|| <= 1 whenever c^2 <= 1 - t."
        }
        Command::ZeroLocus => {
            "The product vectors annihilated by a Choi-map witness do not span the whole space, although the witness is optimal."
        }
        Command::Detect => "A state rho is detected by W iff Tr(W rho) < 0.",
        Command::ProbeSubtraction => {
            "W_Phi is optimal iff no nonzero C makes X -> Phi(X) - C X C^dagger positive."
        }
        Command::ConjectureProbe => {
            "Conjectured: for n >= 3, W_{Phi_{t,pi}} is optimal iff t = 1, l(pi) = n and pi^2 != id."
        }
    }
}

fn tolerances() -> Value {
    json!({
        "violation": VIOLATION_TOL,
        "psd": PSD_TOL,
        "contraction": CONTRACTION_TOL,
        "zero_component": ZERO_COMPONENT_TOL,
        "residual": RESIDUAL_TOL,
        "inequality": INEQUALITY_TOL,
        "subcase_bound": BOUND_TOL,
        "exclusion_radius": EXCLUSION_RADIUS,
        "zero_locus_eigenvalue": ZERO_LOCUS_EIG_TOL,
        "zero_locus_rank": ZERO_LOCUS_RANK_TOL,
    })
}

fn default_samples(cmd: Command) -> usize {
    match cmd {
        Command::CertificateSweep => 10_000,
        Command::VerifyInequality | Command::ZeroLocus => 100_000,
        Command::VerifySubcases => 1_000,
        _ => 0,
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    n: usize,
    samples: usize,
}

impl Ctx<'_> {
    fn t(&self) -> Result<f64, String> {
        let t = self.cli.t.ok_or("--t is required")?;
        if !t.is_finite() {
            return Err(format!("--t {t} is not finite"));
        }
        Ok(t)
    }

    fn pi(&self) -> Result<Permutation, String> {
        let p = match &self.cli.pi {
            Some(s) => s.parse::<Permutation>().map_err(|e| e.to_string())?,
            None => Permutation::shift(self.n),
        };
        if p.n() != self.n {
            return Err(format!("--pi has {} entries but --n is {}", p.n(), self.n));
        }
        Ok(p)
    }

    fn map(&self) -> Result<DTypeMap, String> {
        DTypeMap::new(self.t()?, self.pi()?).map_err(|e| e.to_string())
    }

    fn c(&self, t: f64) -> f64 {
        self.cli.c.unwrap_or_else(|| (1.0 - t).sqrt())
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.cli.restarts,
            seed: self.cli.seed,
            ..SearchConfig::default()
        }
    }

    fn require_qutrit(&self) -> Result<(), String> {
        if self.n != 3 {
            return Err(format!(
                "this command is defined for n = 3, got --n {}",
                self.n
            ));
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<Report, String> {
    let cmd = cli.command;
    let n = if matches!(cmd, Command::ConjectureProbe) {
        4
    } else {
        cli.n
    };
    if !(2..=MAX_N).contains(&n) {
        return Err(format!("--n must be between 2 and {MAX_N}, got {}", cli.n));
    }
    if matches!(cmd, Command::ConjectureProbe) && cli.n != 3 && cli.n != 4 {
        return Err("conjecture-probe always runs at n = 4".into());
    }
    let samples = cli.samples.unwrap_or_else(|| default_samples(cmd));
    let ctx = Ctx { cli, n, samples };
    let (result, finding) = match cmd {
        Command::BuildWitness => build_witness(&ctx),
        Command::CheckPositivity => check_positivity(&ctx),
        Command::CheckCp => check_cp(&ctx),
        Command::CheckOptimality => check_optimality(&ctx),
        Command::Decompose => decompose(&ctx),
        Command::CertificateSweep => certificate_sweep(&ctx),
        Command::VerifyInequality => verify_inequality(&ctx),
        Command::VerifySubcases => verify_subcases(&ctx),
        Command::ZeroLocus => zero_locus(&ctx),
        Command::Detect => detect(&ctx),
        Command::ProbeSubtraction => probe_subtraction(&ctx),
        Command::ConjectureProbe => conjecture_probe(&ctx),
    }?;
    let config = json!({
        "command": name(cmd),
        "t": cli.t,
        "pi": cli.pi.clone().or_else(|| (!matches!(cmd, Command::ConjectureProbe)).then(|| Permutation::shift(n).to_string())),
        "c": cli.c,
        "samples": (samples > 0).then_some(samples),
        "seed": cli.seed,
        "n": n,
        "restarts": cli.restarts,
        "trials": cli.trials,
        "L": cli.l,
        "rho": cli.rho.as_ref().map(|p| p.display().to_string()),
        "output": cli.output,
    });
    Ok(Report {
        json: json!({
            "command": name(cmd),
            "config": config,
            "tolerances": tolerances(),
            "paper_claim": claim(cmd),
            "finding": finding,
            "result": result,
        }),
        finding,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn build_witness(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    let w = m.choi_matrix();
    let min = min_eigenvalue(w.matrix()).map_err(|e| e.to_string())?;
    Ok((
        json!({
            "map": to_value(&m.descriptor()),
            "dim": [w.dim_a(), w.dim_b()],
            "trace": w.matrix().trace().re,
            "min_eigenvalue": min,
            "choi": to_value(w.matrix()),
        }),
        false,
    ))
}

fn check_positivity(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    let v = numeric_block_positivity(&m.choi_matrix(), &ctx.search());
    let closed = closed_form_positive(m.n(), m.t(), m.pi());
    let found = v.status == PositivityStatus::ViolationFound;
    Ok((
        json!({
            "status": to_value(&v.status),
            "min_value": v.min_value,
            "witness_pair": to_value(&v.witness_pair.as_ref().map(|(e, f)| (encode(e), encode(f)))),
            "samples_used": v.samples_used,
            "threshold": positivity_threshold(m.n(), m.pi()),
            "closed_form_positive": closed,
            "agrees_with_closed_form": closed != found,
        }),
        found,
    ))
}

fn encode(v: &[witness_core::C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn check_cp(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    let cp = is_completely_positive(&m);
    Ok((to_value(&cp), !cp.completely_positive))
}

fn check_optimality(ctx: &Ctx) -> Outcome {
    ctx.require_qutrit()?;
    let (t, p) = (ctx.t()?, ctx.pi()?);
    let verdict = match optimality_verdict(t, &p) {
        Ok(v) => to_value(&v),
        Err(WitnessError::NotAWitness(_)) => json!({
            "optimal": false,
            "reason": to_value(&OptimalityReason::CompletelyPositive),
            "certificate": null,
        }),
        Err(e) => return Err(e.to_string()),
    };
    Ok((json!({"verdict": verdict, "l": p.length()}), false))
}

fn decompose(ctx: &Ctx) -> Outcome {
    ctx.require_qutrit()?;
    let m = ctx.map()?;
    let split = case2_split(m.t(), m.pi()).map_err(|e| e.to_string())?;
    let check = split.check(&m.choi_matrix());
    let mut result = json!({
        "branch": to_value(&split.branch),
        "positive_part": to_value(&split.positive_part),
        "ppt_part": to_value(&split.ppt_part),
        "check": to_value(&check),
    });
    if m.t() > 1.0 && m.pi().apply(0) == 1 {
        // The split that keeps the pi-matched terms whole in the PPT part.
        let (c1, c2) = c_form_split(m.t());
        result["unshifted_split"] = json!({
            "positive_part_min_eig": min_eigenvalue(&c1).map_err(|e| e.to_string())?,
            "ppt_part_is_ppt": is_ppt(&c2, 3, 3).map_err(|e| e.to_string())?,
        });
    }
    Ok((result, !check.ok))
}

fn certificate_sweep(ctx: &Ctx) -> Outcome {
    ctx.require_qutrit()?;
    let t = ctx.t()?;
    let report =
        run_certificate_sweep(t, ctx.c(t), ctx.samples, ctx.cli.seed).map_err(|e| e.to_string())?;
    let finding = !report.violations.is_empty() || report.max_residual > RESIDUAL_TOL;
    Ok((to_value(&report), finding))
}

fn verify_inequality(ctx: &Ctx) -> Outcome {
    let t = ctx.t()?;
    let scan =
        constrained_scan(t, ctx.samples, ctx.cli.l, ctx.cli.seed).map_err(|e| e.to_string())?;
    let ones = [1.0, 1.0, 1.0];
    let lambda = stationary_multiplier(t, &ones);
    let residual = lagrange_residual(t, &ones, lambda);
    let max_residual = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));

    let mut rng = witness_core::positivity::seeded_rng(ctx.cli.seed, 1);
    let mut quartic_err: f64 = 0.0;
    let mut bracket_min = f64::INFINITY;
    for _ in 0..1000 {
        let x1: f64 = rng.random_range(0.0..10.0);
        let q = quartic_factor_check(t, x1);
        quartic_err = quartic_err.max((q.lhs - q.expanded).abs());
        bracket_min = bracket_min.min(q.bracket);
    }
    let finding = scan.min_g < -INEQUALITY_TOL
        || scan.min_f_gap < -INEQUALITY_TOL
        || scan.sign_mismatches > 0
        || max_residual > RESIDUAL_TOL
        || quartic_err > 1e-10
        || bracket_min <= 0.0;
    Ok((
        json!({
            "scan": to_value(&scan),
            "lagrange": {"x": ones, "lambda": lambda, "residual": residual},
            "quartic": {"points": 1000, "max_identity_error": quartic_err, "min_cubic_factor": bracket_min},
        }),
        finding,
    ))
}

fn verify_subcases(ctx: &Ctx) -> Outcome {
    ctx.require_qutrit()?;
    let t = ctx.t()?;
    let c = ctx.c(t);
    c0_certificate(t, c).map_err(|e| e.to_string())?;
    let mut rng = witness_core::positivity::seeded_rng(ctx.cli.seed, 2);
    let mut finding = false;
    let mut rows = Vec::new();
    for sub in Subcase::ALL {
        let mut max_eig: f64 = 0.0;
        let mut max_res: f64 = 0.0;
        let xs = std::iter::once(sub.representative())
            .chain((0..ctx.samples).map(|_| sub.sample(&mut rng)))
            .collect::<Vec<_>>();
        for x in &xs {
            let f = coefficient_matrix(x, t, c).map_err(|e| e.to_string())?;
            let (rx, rc) = reconstruction_residual(x, &f, t, c).map_err(|e| e.to_string())?;
            max_eig = max_eig.max(gram_contraction(&f).0);
            max_res = max_res.max(rx).max(rc);
        }
        let rep = coefficient_matrix(&sub.representative(), t, c).map_err(|e| e.to_string())?;
        let ok = max_eig <= 1.0 + CONTRACTION_TOL && max_res <= RESIDUAL_TOL;
        finding |= !ok;
        rows.push(json!({
            "subcase": to_value(&sub),
            "vectors": xs.len(),
            "max_gram_eig": max_eig,
            "max_residual": max_res,
            "representative_gram": to_value(&rep.gram()),
            "ok": ok,
        }));
    }

    let mut bounds = Vec::new();
    for which in [BoundCase::S2, BoundCase::S3, BoundCase::S4, BoundCase::S5] {
        let mut min_bound = f64::INFINITY;
        let mut all_ge = true;
        for _ in 0..ctx.samples.max(1) {
            let r: Vec<f64> = if which == BoundCase::S2 {
                let (a, b) = (
                    rng.random_range(-3.0f64..3.0).exp(),
                    rng.random_range(-3.0f64..3.0).exp(),
                );
                vec![a, b, 1.0 / (a * b)]
            } else {
                vec![rng.random_range(-3.0f64..3.0).exp()]
            };
            match subcase_bound(which, t, &r) {
                Ok(b) => {
                    min_bound = min_bound.min(b.c2_bound);
                    all_ge &= b.ge_1mt;
                }
                Err(WitnessError::DegeneratePoint) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
        finding |= !all_ge;
        bounds.push(json!({"case": to_value(&which), "min_c2_bound": min_bound, "all_ge_1_minus_t": all_ge}));
    }
    Ok((
        json!({"t": t, "c": c, "subcases": rows, "bounds": bounds}),
        finding,
    ))
}

fn zero_locus(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    let z = zero_locus_span(
        &m.choi_matrix(),
        &ZeroLocusConfig {
            samples: ctx.samples,
            seed: ctx.cli.seed,
        },
    );
    let full = m.n() * m.n();
    Ok((
        json!({
            "dimension": z.dimension,
            "full_dimension": full,
            "spanning": z.dimension == full,
            "hits": z.hits,
            "samples": z.samples,
            "basis": z.basis.iter().map(|v| encode(v)).collect::<Vec<_>>(),
        }),
        false,
    ))
}

fn read_rho(ctx: &Ctx) -> Result<ComplexMatrix, String> {
    let path = ctx.cli.rho.as_ref().ok_or("--rho is required")?;
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| e.to_string())?
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
    };
    ComplexMatrix::from_json(&text).map_err(|e| e.to_string())
}

fn detect(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    let rho = read_rho(ctx)?;
    let w: Witness = m.choi_matrix();
    let value = detect_value(&w, &rho).map_err(|e| e.to_string())?;
    Ok((
        json!({"value": value, "detected": value < 0.0}),
        value < 0.0,
    ))
}

fn probe_subtraction(ctx: &Ctx) -> Outcome {
    let m = ctx.map()?;
    if !closed_form_positive(m.n(), m.t(), m.pi()) {
        return Err(format!(
            "the map is not positive at t = {} (threshold {})",
            m.t(),
            positivity_threshold(m.n(), m.pi())
        ));
    }
    let r = subtraction_probe(&m, ctx.cli.trials, ctx.cli.seed);
    Ok((to_value(&r), r.found))
}

/// Cycle-type representatives of S_4.
const REPRESENTATIVES: [&str; 5] = ["1,2,3,4", "2,1,3,4", "2,1,4,3", "2,3,1,4", "2,3,4,1"];

fn conjecture_probe(ctx: &Ctx) -> Outcome {
    let cfg = ctx.search();
    let grid: Vec<f64> = (0..=16).map(|k| k as f64 * 0.25).collect();
    let mut disagreements = Vec::new();
    let mut points = 0;
    for p in Permutation::all(4) {
        for &t in &grid {
            let m = DTypeMap::new(t, p.clone()).map_err(|e| e.to_string())?;
            let v = numeric_block_positivity(&m.choi_matrix(), &cfg);
            let closed = closed_form_positive(4, t, &p);
            let found = v.status == PositivityStatus::ViolationFound;
            if closed == found {
                disagreements.push(json!({"pi": p.to_string(), "t": t, "min_value": v.min_value, "closed_form_positive": closed}));
            }
            points += 1;
        }
    }

    let mut probes = Vec::new();
    let mut contradictions = 0;
    for rep in REPRESENTATIVES {
        let p: Permutation = rep.parse().expect("valid representative");
        for t in [0.5, 1.0] {
            if !closed_form_positive(4, t, &p) {
                continue;
            }
            let m = DTypeMap::new(t, p.clone()).map_err(|e| e.to_string())?;
            let predicted_optimal = t == 1.0 && p.is_cyclic() && !p.is_involution();
            let r = subtraction_probe(&m, ctx.cli.trials, ctx.cli.seed);
            let outcome = match (predicted_optimal, r.found) {
                (true, true) => {
                    contradictions += 1;
                    "contradicts"
                }
                (true, false) | (false, true) => "consistent",
                (false, false) => "inconclusive",
            };
            probes.push(json!({
                "pi": rep,
                "t": t,
                "l": p.length(),
                "predicted_optimal": predicted_optimal,
                "subtraction_found": r.found,
                "best_scale": r.best_scale,
                "outcome": outcome,
            }));
        }
    }
    let finding = !disagreements.is_empty() || contradictions > 0;
    Ok((
        json!({
            "positivity_grid": {"points": points, "t_values": grid, "disagreements": disagreements},
            "probes": probes,
        }),
        finding,
    ))
}
