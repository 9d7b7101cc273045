use std::path::Path;

use wpir_core::analytics::{leakage_cap, maxl_leakage, mil_leakage, retrieval_rate};
use wpir_core::appendix::{g_table, lemma1_check, lemma2_check, lemma3_values, lemma4_check, MonotonicityReport};
use wpir_core::exec;
use wpir_core::optimizer::{compare_with_theorem, linspace, OptimalityClaim};
use wpir_core::protocol::{
    answer, build_library, download_law, exact_audit_with, execute_trial, run_trials, AuditMode, Transcript,
};
use wpir_core::{Execution, Metric, MixingDistribution, SchemeParams};

use crate::output::{Record, Report};
use crate::{Command, ParamArgs, ProtocolArgs, UsageError};

/// Agreement required between the LP and the closed form, and between the
/// exact audit and the formulas.
const TOLERANCE: f64 = 1e-9;

type Outcome = Result<(Report, Option<String>), UsageError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Auto,
    Full,
    Sufficient,
}

impl From<ModeArg> for AuditMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => AuditMode::Auto,
            ModeArg::Full => AuditMode::Full,
            ModeArg::Sufficient => AuditMode::Sufficient,
        }
    }
}

fn mode_name(mode: AuditMode) -> &'static str {
    match mode {
        AuditMode::Auto => "auto",
        AuditMode::Full => "full",
        AuditMode::Sufficient => "sufficient",
    }
}

pub(crate) fn execute(command: Command, threads: usize) -> Outcome {
    let exec = Execution::for_threads(threads);
    match command {
        Command::Tradeoff {
            params,
            metric,
            rho_grid,
            rho,
        } => {
            let rhos = match (rho_grid, rho) {
                (Some(grid), _) => grid.points(),
                (None, Some(rho)) => vec![rho],
                (None, None) => return Err(UsageError("give --rho or --rho-grid".into())),
            };
            tradeoff(&scheme(&params)?, metric, &rhos, exec)
        }
        Command::Optimize { params, metric, rho } => optimize(&scheme(&params)?, metric, rho),
        Command::VerifyTheorems { rho_points, details } => verify_theorems(rho_points, details, exec),
        Command::Table1 { q } => table1(q),
        Command::Lemmas {
            a1,
            a2,
            y,
            grid_points,
        } => lemmas(a1, a2, y, grid_points),
        Command::Simulate {
            proto,
            trials,
            seed,
            dump_transcript,
            transcript_trial,
        } => simulate(&proto, trials, seed, dump_transcript.as_deref(), transcript_trial, exec),
        Command::Audit {
            transcript: Some(path),
            ..
        } => replay(&path),
        Command::Audit { n, files, p, mode, .. } => {
            let (Some(n), Some(files)) = (n, files) else {
                return Err(UsageError("audit needs --n and --files, or --transcript".into()));
            };
            audit(&ProtocolArgs { n, files, p }, mode.into())
        }
    }
}

fn scheme(args: &ParamArgs) -> Result<SchemeParams, UsageError> {
    Ok(SchemeParams::new(args.setting, args.n, args.s, args.files)?)
}

fn protocol_inputs(args: &ProtocolArgs) -> Result<(SchemeParams, MixingDistribution), UsageError> {
    let params = SchemeParams::replicated(args.n, args.files)?;
    if args.p.is_empty() {
        return Err(UsageError("--p is required".into()));
    }
    let p = params.distribution(args.p.clone())?;
    Ok((params, p))
}

fn check_rho(rho: f64) -> Result<(), UsageError> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(UsageError(format!("budget {rho} must be a non-negative number")))
    }
}

fn tradeoff(params: &SchemeParams, metric: Metric, rhos: &[f64], exec: Execution) -> Outcome {
    rhos.iter().try_for_each(|&r| check_rho(r))?;
    let rows = exec::map_slice(exec, rhos, |&rho| {
        compare_with_theorem(params, metric, rho).map(|cmp| {
            Record::new()
                .with("rho", rho)
                .with("theorem_rate", cmp.theorem_rate)
                .with("lp_rate", cmp.lp_rate)
                .with("gap", cmp.gap)
                .with("support", cmp.lp_support)
                .with("within_threshold", cmp.diagnostics.within_threshold)
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((Report::Rows(rows), None))
}

fn optimize(params: &SchemeParams, metric: Metric, rho: f64) -> Outcome {
    check_rho(rho)?;
    let cmp = compare_with_theorem(params, metric, rho)?;
    let record = Record::new()
        .with("setting", params.setting().name())
        .with("n", params.n_servers())
        .with("s", params.strength())
        .with("files", params.n_files())
        .with("metric", metric.name())
        .with("rho", rho)
        .with("ratio", params.ratio())
        .with("leakage_cap", leakage_cap(params, metric))
        .with("lp_rate", cmp.lp_rate)
        .with("theorem_rate", cmp.theorem_rate)
        .with("gap", cmp.gap)
        .with("objective", cmp.solution.objective_value)
        .with("support", cmp.lp_support.clone())
        .with("p", cmp.solution.distribution.probs().to_vec())
        .with("constraint_tight", cmp.solution.constraint_tight)
        .with("d", cmp.diagnostics.d.clone())
        .with("sensitivity", cmp.diagnostics.sensitivity.clone())
        .with("positive_indices", cmp.diagnostics.positive_indices.clone())
        .with("within_threshold", cmp.diagnostics.within_threshold);
    Ok((Report::One(record), None))
}

fn describe(params: &SchemeParams) -> String {
    format!("N={} s={} M={}", params.n_servers(), params.strength(), params.n_files())
}

fn verify_theorems(rho_points: usize, details: bool, exec: Execution) -> Outcome {
    if rho_points < 2 {
        return Err(UsageError("--rho-points must be at least 2".into()));
    }
    let mut rows = Vec::new();
    let mut failed_claims = Vec::new();
    for claim in OptimalityClaim::ALL {
        let records = wpir_core::optimizer::sweep_claim(claim, rho_points, exec);
        let failures: Vec<_> = records.iter().filter(|r| !r.passed(TOLERANCE)).collect();
        if !failures.is_empty() {
            failed_claims.push(claim.label());
        }
        if details {
            rows.extend(records.iter().map(|r| {
                Record::new()
                    .with("claim", claim.label())
                    .with("n", r.params.n_servers())
                    .with("s", r.params.strength())
                    .with("files", r.params.n_files())
                    .with("ratio", r.params.ratio())
                    .with("max_abs_gap", r.max_abs_gap)
                    .with("support_ok", r.support_ok)
                    .with("passed", r.passed(TOLERANCE))
            }));
        } else {
            let max_gap = records.iter().map(|r| r.max_abs_gap).fold(0.0, f64::max);
            let first = failures.first().map_or_else(String::new, |r| describe(&r.params));
            rows.push(
                Record::new()
                    .with("claim", claim.label())
                    .with("grid_points", records.len())
                    .with("rho_points", rho_points)
                    .with("passed", records.len() - failures.len())
                    .with("failed", failures.len())
                    .with("max_abs_gap", max_gap)
                    .with("status", if failures.is_empty() { "pass" } else { "fail" })
                    .with("first_failure", first),
            );
        }
    }
    let failure = (!failed_claims.is_empty()).then(|| format!("claims not confirmed: {}", failed_claims.join(", ")));
    Ok((Report::Rows(rows), failure))
}

fn table1(q: f64) -> Outcome {
    let table = g_table(q)?;
    let rows = table
        .rows
        .iter()
        .map(|(m, row)| {
            row.iter()
                .enumerate()
                .fold(Record::new().with("files", *m), |rec, (k, v)| rec.with(format!("g{}", k + 1), *v))
        })
        .collect();
    Ok((Report::Rows(rows), None))
}

fn monotonicity_rows(name: &str, r: &MonotonicityReport) -> Vec<Record> {
    let row = |quantity: &str, value: crate::output::Field| {
        Record::new().with("lemma", name).with("quantity", quantity).with("value", value)
    };
    vec![
        row("a", r.a.into()),
        row("grid_points", r.grid_points.into()),
        row("grid_min", r.grid_min.into()),
        row("grid_max", r.grid_max.into()),
        row("max_diff", r.max_diff.into()),
        row("anchor", r.anchor.into()),
        row("phi_at_anchor", r.phi_at_anchor.into()),
        row("phi_prime_at_anchor", r.phi_prime_at_anchor.into()),
        row("phi_prime_numeric", r.phi_prime_numeric.into()),
        row("phi_second_min", r.phi_second_min.into()),
        row("decreasing", r.verdict.into()),
    ]
}

fn lemmas(a1: f64, a2: f64, y: f64, grid_points: usize) -> Outcome {
    if grid_points < 2 {
        return Err(UsageError("--grid-points must be at least 2".into()));
    }
    let l1 = lemma1_check(a1, &linspace(1.0, 20.0, grid_points))?;
    let l2 = lemma2_check(a2, &linspace(6.0, 60.0, grid_points))?;
    let mut rows = monotonicity_rows("lemma1", &l1);
    rows.extend(monotonicity_rows("lemma2", &l2));

    let mut l3_negative = true;
    let mut l3_decreasing = true;
    let mut l3_max = f64::NEG_INFINITY;
    for n in 2..=5 {
        for m in 3..=10 {
            let r = lemma3_values(n, m)?;
            l3_negative &= r.all_negative;
            l3_decreasing &= r.strictly_decreasing;
            l3_max = r.values.iter().copied().fold(l3_max, f64::max);
        }
    }
    let row = |lemma: &str, quantity: String, value: crate::output::Field| {
        Record::new().with("lemma", lemma).with("quantity", quantity).with("value", value)
    };
    rows.push(row("lemma3", "max_value".into(), l3_max.into()));
    rows.push(row("lemma3", "all_negative".into(), l3_negative.into()));
    rows.push(row("lemma3", "strictly_decreasing".into(), l3_decreasing.into()));

    let l4 = lemma4_check(y, 8)?;
    rows.push(row("lemma4", "y".into(), l4.y.into()));
    for e in &l4.entries {
        rows.push(row("lemma4", format!("ratio_M{}_m{}", e.n_files, e.m), e.ratio.into()));
    }
    rows.push(row("lemma4", "min_ratio".into(), l4.min_ratio.into()));
    let inner = l4.entries.iter().all(|e| e.inner_bound_holds);
    rows.push(row("lemma4", "inner_bound_holds".into(), inner.into()));
    rows.push(row("lemma4", "all_above_one".into(), l4.verdict.into()));

    let mut failed = Vec::new();
    for (ok, name) in [
        (l1.verdict, "lemma1"),
        (l2.verdict && l2.phi_at_anchor > 0.0, "lemma2"),
        (l3_negative && l3_decreasing, "lemma3"),
        (l4.verdict && inner, "lemma4"),
    ] {
        if !ok {
            failed.push(name);
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("checks failed: {}", failed.join(", ")));
    Ok((Report::Rows(rows), failure))
}

fn simulate(
    args: &ProtocolArgs,
    trials: u64,
    seed: u64,
    dump: Option<&Path>,
    dump_trial: u64,
    exec: Execution,
) -> Outcome {
    if trials == 0 {
        return Err(UsageError("--trials must be at least 1".into()));
    }
    let (params, p) = protocol_inputs(args)?;
    let library = build_library(&params, seed)?;
    let stats = run_trials(&params, &library, &p, trials, seed, exec)?;
    if let Some(path) = dump {
        let record = execute_trial(&params, &library, &p, seed, dump_trial)?;
        let transcript = Transcript {
            n_servers: params.n_servers(),
            n_files: params.n_files(),
            record,
        };
        std::fs::write(path, transcript.to_bytes()?)
            .map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())))?;
    }
    let analytic = retrieval_rate(&params, &p);
    let record = Record::new()
        .with("n", params.n_servers())
        .with("files", params.n_files())
        .with("p", p.probs().to_vec())
        .with("trials", trials)
        .with("seed", seed)
        .with("file_len", library.file_len())
        .with("mean_download", stats.mean_download)
        .with("empirical_rate", stats.empirical_rate)
        .with("analytic_rate", analytic)
        .with("relative_error", (stats.empirical_rate - analytic).abs() / analytic)
        .with("mprime_frequencies", stats.mprime_frequencies.clone())
        .with("decode_failures", stats.decode_failures)
        .with("download_law_violations", stats.download_law_violations);
    let failure = (stats.decode_failures > 0 || stats.download_law_violations > 0).then(|| {
        format!(
            "{} decode failures, {} download-law violations",
            stats.decode_failures, stats.download_law_violations
        )
    });
    Ok((Report::One(record), failure))
}

fn audit(args: &ProtocolArgs, mode: AuditMode) -> Outcome {
    let (params, p) = protocol_inputs(args)?;
    let stats = exact_audit_with(&params, &p, mode)?;
    let mil = mil_leakage(&params, &p);
    let maxl = maxl_leakage(&params, &p);
    let rate = retrieval_rate(&params, &p);
    let error = (stats.mil - mil)
        .abs()
        .max((stats.maxl - maxl).abs())
        .max((stats.rate - rate).abs());
    let record = Record::new()
        .with("n", params.n_servers())
        .with("files", params.n_files())
        .with("p", p.probs().to_vec())
        .with("mode", mode_name(stats.mode))
        .with("mil", stats.mil)
        .with("maxl", stats.maxl)
        .with("expected_download", stats.expected_download)
        .with("rate", stats.rate)
        .with("mil_formula", mil)
        .with("maxl_formula", maxl)
        .with("rate_formula", rate)
        .with("max_abs_error", error)
        .with("mil_per_server", stats.mil_per_server.clone())
        .with("maxl_per_server", stats.maxl_per_server.clone());
    let failure = (error > TOLERANCE).then(|| format!("audit differs from closed forms by {error:e}"));
    Ok((Report::One(record), failure))
}

fn replay(path: &Path) -> Outcome {
    let bytes = std::fs::read(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let t = Transcript::from_bytes(&bytes)?;
    let rec = &t.record;
    let params = SchemeParams::replicated(t.n_servers, t.n_files)?;
    let library = build_library(&params, rec.seed)?;

    let draw_ok = rec.draw.desired < t.n_files
        && rec.draw.side_files.len() == rec.draw.mprime
        && !rec.draw.side_files.contains(&rec.draw.desired)
        && (rec.draw.mprime == 0) == rec.draw.direct_server.is_some();
    let answers_ok = rec.queries.len() == rec.answers.len()
        && rec
            .queries
            .iter()
            .zip(&rec.answers)
            .all(|(q, a)| answer(q, &library).is_ok_and(|expected| &expected == a));
    let decoded_ok = rec.decoded.as_deref() == library.file(rec.draw.desired);
    let law_ok = rec.download() == download_law(t.n_servers, t.n_files, rec.draw.mprime);

    let record = Record::new()
        .with("n", t.n_servers)
        .with("files", t.n_files)
        .with("seed", rec.seed)
        .with("trial", rec.trial)
        .with("desired", rec.draw.desired)
        .with("mprime", rec.draw.mprime)
        .with("side_files", rec.draw.side_files.clone())
        .with("download", rec.download())
        .with("draw_consistent", draw_ok)
        .with("answers_match", answers_ok)
        .with("decoded_matches", decoded_ok)
        .with("download_matches_law", law_ok);
    let all = draw_ok && answers_ok && decoded_ok && law_ok;
    Ok((Report::One(record), (!all).then(|| "transcript does not replay".to_string())))
}
