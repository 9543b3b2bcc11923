//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Every suite runs twice, on pools of 1 and 8 threads; the single-thread
//! run provides timings and the values checked here, and the two runs must
//! agree byte for byte.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde_json::Value;

use adversim::complexity::worstcase_sequential_rademacher;
use adversim::complexity::{covering_number, PNorm};
use adversim::dist::PointDist;
use adversim::domain::{FiniteTable, FunctionClass, Point};
use adversim::rng::{derive_seed, derived_rng};
use adversim::suites::{random_table, run_suite, SuiteOutput, SUITES};
use adversim::trees::{sample_tree_pair, ObliviousStrategy};

const MASTER_SEED: u64 = 0;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
}

fn run_all(threads: usize) -> BTreeMap<&'static str, (SuiteOutput, Duration)> {
    let p = pool(threads);
    SUITES
        .iter()
        .map(|&s| {
            let start = Instant::now();
            let out = p
                .install(|| run_suite(s, MASTER_SEED))
                .unwrap_or_else(|e| panic!("suite {s}: {e}"));
            (s, (out, start.elapsed()))
        })
        .collect()
}

fn checks<'a>(
    out: &'a SuiteOutput,
    filter: impl Fn(&str) -> bool + 'a,
) -> impl Iterator<Item = &'a adversim::suites::Check> + 'a {
    out.report.checks.iter().filter(move |c| filter(&c.name))
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64()
        .unwrap_or_else(|| panic!("missing number at {path:?} in {v}"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Exact i.i.d. Rademacher average of a table under the uniform law, by
/// enumerating every sequence and sign vector.
fn exact_classical(rows: &[Vec<f64>], t: usize) -> f64 {
    let cols = rows[0].len();
    let mut total = 0.0;
    let n_seq = cols.pow(t as u32);
    for code in 0..n_seq {
        let xs: Vec<usize> = (0..t).map(|i| code / cols.pow(i as u32) % cols).collect();
        for bits in 0..(1u32 << t) {
            let best = rows
                .iter()
                .map(|r| {
                    xs.iter()
                        .enumerate()
                        .map(|(i, &x)| if bits >> i & 1 == 1 { r[x] } else { -r[x] })
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            total += best;
        }
    }
    total / (n_seq as f64 * (1u64 << t) as f64)
}

/// Worst-case sequential Rademacher value by plain tree recursion.
fn exact_worstcase(rows: &[Vec<f64>], t: usize, sums: Vec<f64>) -> f64 {
    if t == 0 {
        return sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    (0..rows[0].len())
        .map(|x| {
            let plus: Vec<f64> = sums.iter().zip(rows).map(|(s, r)| s + r[x]).collect();
            let minus: Vec<f64> = sums.iter().zip(rows).map(|(s, r)| s - r[x]).collect();
            (exact_worstcase(rows, t - 1, plus) + exact_worstcase(rows, t - 1, minus)) / 2.0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_1(out: &SuiteOutput, elapsed: Duration) -> Line {
    let c = &out.report.checks[0];
    let rows = random_table(5, 4, derive_seed(MASTER_SEED, 1));
    let exact = exact_classical(&rows, 6);
    let dd = &c.detail["distdep"];
    let cl = &c.detail["classical"];
    let se = num(&c.detail, &["combined_se"]);
    let diff = (num(dd, &["mean"]) - num(cl, &["mean"])).abs();
    let dd_exact = (num(dd, &["mean"]) - exact).abs() <= 3.0 * num(dd, &["std_error"]);
    let pass = c.pass && diff <= 3.0 * se && dd_exact && elapsed < Duration::from_secs(60);
    Line {
        id: 1,
        name: "i.i.d. distribution-dependent = classical",
        pass,
        detail: format!(
            "|distdep - classical| = {diff:.4} <= 3 SE = {:.4}; exact value {exact:.4}; {:.1}s on one thread (< 60s)",
            3.0 * se,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2(out: &SuiteOutput) -> Line {
    let rows = random_table(5, 4, derive_seed(MASTER_SEED, 1));
    let oracle = exact_worstcase(&rows, 6, vec![0.0; 5]);
    let class = FunctionClass::FiniteTable(FiniteTable::unbounded(rows).unwrap());
    let lib = worstcase_sequential_rademacher(&class, 6).unwrap();
    let mut pass = close(lib, oracle) && out.report.checks.len() == 3;
    let mut parts = vec![format!("worst case {oracle:.4}")];
    for c in &out.report.checks {
        let m = num(&c.detail, &["distdep", "mean"]);
        let se = num(&c.detail, &["distdep", "std_error"]);
        pass &= c.pass && m <= oracle + 3.0 * se;
        parts.push(format!("{}: {m:.4}", c.name.split(' ').next().unwrap()));
    }
    Line {
        id: 2,
        name: "distribution-dependent <= worst case",
        pass,
        detail: parts.join(", "),
    }
}

fn criterion_3(out: &SuiteOutput) -> Line {
    let pass = out.report.checks.len() == 5 && out.report.checks.iter().all(|c| c.pass);
    let worst = out
        .report
        .checks
        .iter()
        .filter_map(|c| c.detail.get("max_abs_diff").and_then(Value::as_f64))
        .fold(0.0f64, f64::max);
    let violations = num(&out.report.checks[0].detail, &["violations"]);
    Line {
        id: 3,
        name: "structural identities, pathwise",
        pass: pass && worst <= 1e-9 && violations == 0.0,
        detail: format!("largest deviation {worst:.2e} over 1000 paths (tol 1e-9), monotonicity violations {violations}"),
    }
}

fn bound_line(
    id: usize,
    name: &'static str,
    out: &SuiteOutput,
    oracles: &[f64],
    elapsed: Option<Duration>,
) -> Line {
    let mut pass = out.report.checks.len() >= oracles.len();
    let mut parts = Vec::new();
    for (c, &oracle) in out.report.checks.iter().zip(oracles) {
        let bound = num(&c.detail, &["bound", "value"]);
        let max = num(&c.detail, &["max_final_regret"]);
        let reps = num(&c.detail, &["replicates"]);
        pass &= c.pass && close(bound, oracle) && max <= oracle;
        parts.push(format!(
            "max regret {max:.3} <= {oracle:.3} over {reps} seeds"
        ));
    }
    if let Some(e) = elapsed {
        pass &= e < Duration::from_secs(120);
        parts.push(format!("{:.1}s (< 120s)", e.as_secs_f64()));
    }
    Line {
        id,
        name,
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_6(out: &SuiteOutput) -> Line {
    let (t, gamma) = (1000.0f64, 0.01f64);
    let oracle = 2.0 + (2.0 * t * (4.0 * t.ln() + (1.0 / gamma).ln())).sqrt();
    let mut line = bound_line(6, "smoothed thresholds", out, &[oracle], None);
    line.pass =
        line.pass && out.report.checks.len() == 3 && out.report.checks.iter().all(|c| c.pass);
    let rates = &out.report.checks[1].detail["regret_per_round"];
    let rates: Vec<f64> = rates
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    line.pass &= rates.windows(2).all(|w| w[1] < w[0]);
    let col = &out.report.checks[2].detail;
    let (freq, bound, se) = (
        num(col, &["frequency"]),
        num(col, &["bound"]),
        num(col, &["std_error"]),
    );
    let exponent = 3.0 + (1.0 / gamma).ln() / t.ln();
    line.pass &= close(bound, 1.0 / (gamma * t.powf(exponent - 2.0))) && freq <= bound + 3.0 * se;
    line.detail = format!(
        "{}; regret/T {:?}; collisions {freq:.4} <= {bound:.4} + 3 SE",
        line.detail,
        rates
            .iter()
            .map(|r| (r * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    line
}

fn criterion_7(out: &SuiteOutput) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut n = 0;
    for c in checks(out, |n| n.starts_with("noiseless")) {
        let m = num(&c.detail, &["mean_regret"]);
        let t: f64 = c.name.rsplit(' ').next().unwrap().parse().unwrap();
        pass &= c.pass && m >= 0.4 * t;
        parts.push(format!("{:.0}/{t}", m));
        n += 1;
    }
    Line {
        id: 7,
        name: "noiseless halving forces linear regret",
        pass: pass && n == 4,
        detail: format!("mean regret (EW, EW, FTL, FTL) {}", parts.join(", ")),
    }
}

fn criterion_8(out: &SuiteOutput) -> Line {
    let mut pass = out.report.checks.len() == 2;
    let mut parts = Vec::new();
    for c in &out.report.checks {
        let reg = num(&c.detail, &["mean_regret"]);
        let rad = num(&c.detail, &["rademacher", "mean"]);
        let se = num(&c.detail, &["combined_se"]);
        pass &= c.pass && reg >= rad - 3.0 * se;
        parts.push(format!(
            "{} regret {reg:.3} >= {rad:.3} - 3 x {se:.3}",
            c.name.split(' ').next().unwrap()
        ));
    }
    Line {
        id: 8,
        name: "Rademacher lower bound",
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_9(out: &SuiteOutput) -> Line {
    let mut pass = true;
    let mut n = 0;
    let mut slack = f64::INFINITY;
    for c in checks(out, |n| n.starts_with("Dudley")) {
        let d = num(&c.detail, &["dudley", "mean"]);
        let r = num(&c.detail, &["distdep", "mean"]);
        let se = num(&c.detail, &["combined_se"]);
        pass &= c.pass && d >= r - 3.0 * se;
        slack = slack.min(d - r);
        n += 1;
    }
    Line {
        id: 9,
        name: "entropy integral dominates",
        pass: pass && n == 5,
        detail: format!("5 classes, smallest gap {slack:.3}"),
    }
}

/// Distinct rows of `f(x_v)` over all tree nodes, in test code.
fn profile_count(rows: &[Vec<f64>], nodes: &[Point]) -> usize {
    let mut profiles: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            nodes
                .iter()
                .map(|p| match p {
                    Point::Index(j) => r[*j],
                    other => panic!("unexpected point {other}"),
                })
                .collect()
        })
        .collect();
    profiles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    profiles.dedup();
    profiles.len()
}

fn criterion_10(out: &SuiteOutput) -> Line {
    let suite_ok = checks(out, |n| !n.starts_with("Dudley")).all(|c| c.pass);
    let strategy = ObliviousStrategy::Iid(PointDist::UniformIndex(4));
    let constants =
        FunctionClass::FiniteTable(FiniteTable::new(vec![vec![0.0; 4], vec![1.0; 4]]).unwrap());
    let mut pass = suite_ok;
    for k in 0..20 {
        let (tree, _) = sample_tree_pair(&strategy, 6, &mut derived_rng(99, k)).unwrap();
        for (alpha, want) in [(0.5, 1), (0.4, 2), (1.0, 1), (0.0, 2)] {
            pass &= covering_number(&constants, &tree, alpha, PNorm::L2)
                .unwrap()
                .size
                == want;
        }
    }
    let mut agree = 0;
    for k in 0..10u64 {
        let rows = random_table(5, 4, 1000 + k);
        let class = FunctionClass::FiniteTable(FiniteTable::unbounded(rows.clone()).unwrap());
        let (tree, _) = sample_tree_pair(&strategy, 5, &mut derived_rng(77, k)).unwrap();
        if covering_number(&class, &tree, 0.0, PNorm::L2).unwrap().size
            == profile_count(&rows, tree.nodes())
        {
            agree += 1;
        }
    }
    pass &= agree == 10;
    Line {
        id: 10,
        name: "exact covering numbers",
        pass,
        detail: format!("constants: N(0.5)=1, N(0.4)=2 on 20+20 trees; scale 0 matches profile oracle on {agree}/10 classes"),
    }
}

fn criterion_11(
    one: &BTreeMap<&str, (SuiteOutput, Duration)>,
    eight: &BTreeMap<&str, (SuiteOutput, Duration)>,
) -> Line {
    let mut differing = Vec::new();
    let mut files = 0;
    for s in SUITES {
        let (a, b) = (&one[s].0, &eight[s].0);
        if a.report.to_json() != b.report.to_json() || a.files != b.files {
            differing.push(s);
        }
        files += 1 + a.files.len();
    }
    Line {
        id: 11,
        name: "determinism across thread counts",
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{files} JSON/CSV artifacts byte-identical at 1 and 8 threads")
        } else {
            format!("differ: {differing:?}")
        },
    }
}

fn main() -> ExitCode {
    let one = run_all(1);
    let eight = run_all(8);
    let s = |name: &str| &one[name].0;
    let sqrt = f64::sqrt;
    let lines = vec![
        criterion_1(s("prop2"), one["prop2"].1),
        criterion_2(s("prop3")),
        criterion_3(s("prop4")),
        bound_line(
            4,
            "variance bound",
            s("prop5"),
            &[
                2.0 * sqrt(2.0) * sqrt(10.0),
                2.0 * sqrt(2.0) * sqrt(10.0 * 16f64.ln()),
            ],
            Some(one["prop5"].1),
        ),
        bound_line(
            5,
            "slow-change bound",
            s("prop6"),
            &[
                2.0 * 0.05 * sqrt(2.0 * 2000.0),
                2.0 * 0.05 * sqrt(2.0 * 2000.0 * 16f64.ln()),
            ],
            None,
        ),
        criterion_6(s("prop7")),
        criterion_7(s("cor5")),
        criterion_8(s("lemma4")),
        criterion_9(s("dudley")),
        criterion_10(s("dudley")),
        criterion_11(&one, &eight),
    ];
    let mut failed = 0;
    for l in &lines {
        println!(
            "criterion {:>2} {}: {} ({})",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
