//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use wpir_core::analytics::{mil_leakage, retrieval_rate, theorem_distribution, theorem_rate};
use wpir_core::appendix::{
    g_table, lemma1_check, lemma2_check, lemma3_values, lemma4_check, LEMMA1_MIN_EXPONENT, LEMMA2_MIN_EXPONENT,
    LEMMA4_MIN_Y, TABLE_RATIO,
};
use wpir_core::optimizer::{compare_with_theorem, d_coefficients, linspace, sweep_claim, OptimalityClaim};
use wpir_core::protocol::{build_library, exact_audit, inner_privacy_holds, run_trials};
use wpir_core::{Execution, Metric, MixingDistribution, SchemeParams, Setting};

/// Distributions on `len` entries with masses in multiples of `1/steps`.
fn simplex_grid(len: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, slots - 1, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(steps, len, steps, &mut Vec::new(), &mut out);
    out
}

type Criterion = (&'static str, fn(&mut Checks));

/// Collects failed checks for one criterion.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        if (got - want).abs().is_nan() || (got - want).abs() > tol {
            self.0.push(format!("{what}: got {got:.6}, want {want} ± {tol}"));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        if !ok {
            self.0.push(what.to_string());
        }
    }
}

fn mds544() -> SchemeParams {
    SchemeParams::new(Setting::MdsCoded, 5, 4, 4).unwrap()
}

fn two_point_mil(c: &mut Checks) {
    let params = mds544();
    let p = theorem_distribution(&params, Metric::Mil, 0.8).unwrap();
    for (k, want) in [0.5, 0.0, 0.0, 0.5].into_iter().enumerate() {
        c.near(&format!("p({k})"), p.get(k), want, 1e-12);
    }
    c.near("theorem rate", theorem_rate(&params, Metric::Mil, 0.8).unwrap(), 0.506, 0.001);
    c.near("MIL", mil_leakage(&params, &p), 0.8, 1e-12);
}

fn two_point_maxl(c: &mut Checks) {
    let params = mds544();
    let p = theorem_distribution(&params, Metric::MaxL, 0.8).unwrap();
    c.near("p(0)", p.get(0), 0.308, 0.001);
    c.near("theorem rate", theorem_rate(&params, Metric::MaxL, 0.8).unwrap(), 0.425, 0.001);
    let q = MixingDistribution::new(vec![0.552, 0.379, 0.0, 0.069]).unwrap();
    c.near("rate(Q)", retrieval_rate(&params, &q), 0.695, 0.001);
}

fn diagnostics(c: &mut Checks) {
    let mil = d_coefficients(&mds544(), Metric::Mil).d;
    c.near("MIL D1", mil[0], -0.0136, 0.0005);
    c.near("MIL D2", mil[1], 0.0011, 0.0005);
    let maxl = d_coefficients(&mds544(), Metric::MaxL).d;
    c.near("MaxL D1", maxl[0], 0.0007, 0.0005);
    c.near("MaxL D2", maxl[1], -0.050, 0.0005);
}

const TABLE_ONE: [(usize, [Option<f64>; 5]); 6] = [
    (3, [Some(-0.025), None, None, None, None]),
    (4, [Some(-0.044), Some(-0.007), None, None, None]),
    (5, [Some(-0.059), Some(-0.020), Some(-0.008), None, None]),
    (6, [Some(-0.071), Some(-0.033), Some(-0.020), Some(-0.011), None]),
    (7, [Some(-0.081), Some(-0.046), Some(-0.033), Some(-0.025), Some(-0.014)]),
    (8, [Some(-0.091), Some(-0.059), Some(-0.047), Some(-0.039), Some(-0.030)]),
];

fn table_one(c: &mut Checks) {
    let table = g_table(TABLE_RATIO).unwrap();
    let mut defined = 0;
    for (m, row) in TABLE_ONE {
        for (k, want) in row.into_iter().enumerate() {
            let got = table.get(k + 1, m);
            match (want, got) {
                (Some(w), Some(g)) => {
                    defined += 1;
                    c.near(&format!("g({}, {m})", k + 1), g, w, 0.001);
                }
                (None, None) => {}
                _ => c.holds(&format!("g({}, {m}) applicability", k + 1), false),
            }
        }
    }
    c.holds("20 defined entries", defined == 20);
}

fn equality_sweeps(c: &mut Checks) {
    for claim in OptimalityClaim::ALL {
        let records = sweep_claim(claim, 25, Execution::Parallel);
        let failed: Vec<String> = records
            .iter()
            .filter(|r| !r.passed(1e-9))
            .map(|r| {
                format!(
                    "N={} s={} M={} (gap {:.3e}, support ok {})",
                    r.params.n_servers(),
                    r.params.strength(),
                    r.params.n_files(),
                    r.max_abs_gap,
                    r.support_ok
                )
            })
            .collect();
        if !failed.is_empty() {
            c.0.push(format!(
                "{}: {}/{} grid points differ, e.g. {}",
                claim.label(),
                failed.len(),
                records.len(),
                failed[..failed.len().min(3)].join("; ")
            ));
        }
    }
}

fn beyond_threshold(c: &mut Checks) {
    let params = mds544();
    let mil = compare_with_theorem(&params, Metric::Mil, 0.8).unwrap();
    c.holds("MIL gap in [0.0005, 0.002]", (0.0005..=0.002).contains(&mil.gap));
    c.holds("MIL D2 > 0", mil.diagnostics.d[1] > 0.0);
    let maxl = compare_with_theorem(&params, Metric::MaxL, 0.8).unwrap();
    c.holds("MaxL gap > 0", maxl.gap > 0.0);
    c.holds("MaxL D1 > 0", maxl.diagnostics.d[0] > 0.0);
    let q = MixingDistribution::new(vec![0.6635, 0.0, 0.2795, 0.057]).unwrap();
    c.near("MIL(Q)", mil_leakage(&params, &q), 1.1776, 0.001);
    c.near("rate(Q)", retrieval_rate(&params, &q), 0.6606, 0.001);
}

fn lemmas(c: &mut Checks) {
    let l1 = lemma1_check(LEMMA1_MIN_EXPONENT, &linspace(1.0, 20.0, 1000)).unwrap();
    c.holds("lemma 1 decreasing", l1.verdict);
    c.near("lemma 1 phi'(1)", l1.phi_prime_at_anchor, 2.235, 0.005);
    let l2 = lemma2_check(LEMMA2_MIN_EXPONENT, &linspace(6.0, 60.0, 1000)).unwrap();
    c.holds("lemma 2 decreasing", l2.verdict);
    c.near("lemma 2 phi'(6)", l2.phi_prime_at_anchor, 1.784, 0.005);
    c.holds("lemma 2 phi(6) > 0", l2.phi_at_anchor > 0.0);
    for n in 2..=5 {
        for m in 3..=10 {
            let r = lemma3_values(n, m).unwrap();
            c.holds(&format!("lemma 3 N={n} M={m}"), r.all_negative && r.strictly_decreasing);
        }
    }
    let l4 = lemma4_check(LEMMA4_MIN_Y, 8).unwrap();
    for (m, k, want) in [
        (3, 1, 1.570),
        (4, 1, 1.233),
        (5, 1, 1.133),
        (4, 2, 2.032),
        (5, 2, 1.416),
        (6, 2, 1.225),
        (7, 2, 1.138),
    ] {
        c.near(&format!("lemma 4 ratio({m}, {k})"), l4.ratio(m, k).unwrap_or(f64::NAN), want, 0.002);
    }
    c.holds("lemma 4 all ratios > 1", l4.verdict);
}

fn protocol_end_to_end(c: &mut Checks) {
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let params = SchemeParams::replicated(n, m).unwrap();
        let lib = build_library(&params, 2024).unwrap();
        let uniform = MixingDistribution::new(vec![1.0 / m as f64; m]).unwrap();
        let stats = run_trials(&params, &lib, &uniform, 10_000, 11, Execution::Parallel).unwrap();
        c.holds(&format!("N={n} M={m} decoding"), stats.decode_failures == 0);
        c.holds(&format!("N={n} M={m} download law"), stats.download_law_violations == 0);
        for probs in simplex_grid(m, 4) {
            let p = MixingDistribution::new(probs).unwrap();
            let audit = exact_audit(&params, &p).unwrap();
            let label = format!("N={n} M={m} p={:?}", p.probs());
            c.near(&format!("{label} MIL"), audit.mil, mil_leakage(&params, &p), 1e-9);
            c.near(
                &format!("{label} MaxL"),
                audit.maxl,
                wpir_core::analytics::maxl_leakage(&params, &p),
                1e-9,
            );
            let expected_download = lib.file_len() as f64 / retrieval_rate(&params, &p);
            c.near(&format!("{label} E[D]"), audit.expected_download, expected_download, 1e-9);
        }
    }
    let small = SchemeParams::replicated(2, 2).unwrap();
    c.holds("inner privacy N=2 M=2", inner_privacy_holds(&small, 1).unwrap_or(false));
}

fn monte_carlo(c: &mut Checks) {
    let params = SchemeParams::replicated(2, 2).unwrap();
    let lib = build_library(&params, 42).unwrap();
    let p = MixingDistribution::new(vec![0.5, 0.5]).unwrap();
    let stats = run_trials(&params, &lib, &p, 100_000, 42, Execution::Parallel).unwrap();
    c.near("empirical rate", stats.empirical_rate, 0.8, 0.008);
}

fn cli(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_wpir"))
        .args(args)
        .env("WPIR_SEED", "5")
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn determinism(c: &mut Checks) {
    let runs: [&[&str]; 4] = [
        &["tradeoff", "--setting", "mds", "--n", "5", "--s", "4", "--files", "4", "--metric", "mil", "--rho-grid", "0:1.6:0.1"],
        &["verify-theorems", "--details"],
        &["simulate", "--n", "3", "--files", "3", "--p", "0.2,0.3,0.5", "--trials", "20000", "--format", "json"],
        &["lemmas"],
    ];
    for args in runs {
        let (base, code) = cli(&[args, &["--threads", "1"]].concat());
        c.holds(&format!("{} produced output", args[0]), !base.is_empty() && code != 2);
        for threads in ["1", "4"] {
            let (again, again_code) = cli(&[args, &["--threads", threads]].concat());
            c.holds(
                &format!("{} identical with --threads {threads}", args[0]),
                again == base && again_code == code,
            );
        }
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("two-point MIL distribution at N=5 s=4 M=4", two_point_mil),
        ("two-point MaxL distribution at N=5 s=4 M=4", two_point_maxl),
        ("sign diagnostics at N=5 s=4 M=4", diagnostics),
        ("table of g(m', M) at q=0.7828", table_one),
        ("two-point optimality sweeps", equality_sweeps),
        ("strict improvement beyond threshold", beyond_threshold),
        ("appendix lemmas", lemmas),
        ("protocol end to end", protocol_end_to_end),
        ("Monte-Carlo rate", monte_carlo),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut checks = Checks::default();
        check(&mut checks);
        let elapsed = start.elapsed().as_secs_f64();
        if checks.0.is_empty() {
            println!("PASS {:>2} {name} ({elapsed:.2}s)", k + 1);
        } else {
            failed += 1;
            println!("FAIL {:>2} {name} ({elapsed:.2}s)", k + 1);
            for msg in &checks.0 {
                println!("        {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
