//! Named verification suites, each a reproducible experiment with a
//! machine-readable verdict.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adversaries::SigmaSchedule;
use crate::complexity::{
    classical_rademacher, covering_number, distdep_rademacher, dudley_bound, paired_samples,
    worstcase_sequential_rademacher, DistDepOptions, EstimateCI, PNorm, PathMode, TreeSampling,
};
use crate::dist::PointDist;
use crate::domain::{BallNorm, FiniteTable, FunctionClass, Point, RegretRecord};
use crate::engine::{
    collision_check, lower_bound_check, run_game, runs_csv, verify_bound, AdversarySpec, ClassSpec,
    ConstraintSpec, DistSpec, ExperimentSpec, LabelKind, LearnerSpec, RegretMode, Summary,
};
use crate::error::{Error, Result};
use crate::learners::{Ftl, GridEw, Hint, Learner};
use crate::rng::{derive_seed, derived_rng};
use crate::trees::{sample_tree_pair, MarkovStep, ObliviousStrategy};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 9] = [
    "prop2", "prop3", "prop4", "prop5", "prop6", "prop7", "lemma4", "cor5", "dudley",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Verdict plus artifacts (file name to contents).
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub report: SuiteReport,
    pub files: BTreeMap<String, String>,
}

struct Builder {
    checks: Vec<Check>,
    files: BTreeMap<String, String>,
}

impl Builder {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: Value) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    fn finish(self, suite: &str, seed: u64) -> SuiteOutput {
        let pass = self.checks.iter().all(|c| c.pass);
        SuiteOutput {
            report: SuiteReport {
                suite: suite.into(),
                seed,
                pass,
                checks: self.checks,
            },
            files: self.files,
        }
    }
}

/// Runs a suite; unknown names are an [`Error::InvalidSpec`].
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteOutput> {
    let mut b = Builder::new();
    match name {
        "prop2" => prop2(&mut b, seed)?,
        "prop3" => prop3(&mut b, seed)?,
        "prop4" => prop4(&mut b, seed)?,
        "prop5" => prop5(&mut b, seed)?,
        "prop6" => prop6(&mut b, seed)?,
        "prop7" => prop7(&mut b, seed)?,
        "lemma4" => lemma4(&mut b, seed)?,
        "cor5" => cor5(&mut b, seed)?,
        "dudley" => dudley(&mut b, seed)?,
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    Ok(b.finish(name, seed))
}

/// `rows x cols` table with entries uniform on `[-1, 1]`.
pub fn random_table(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = derived_rng(seed, 0);
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect()
}

fn table_class(rows: Vec<Vec<f64>>) -> Result<FunctionClass> {
    FiniteTable::unbounded(rows).map(FunctionClass::FiniteTable)
}

fn ci(e: &EstimateCI) -> Value {
    json!({ "mean": e.mean, "std_error": e.std_error, "n": e.n_samples })
}

const TABLE_ROWS: usize = 5;
const TABLE_COLS: usize = 4;
const SMALL_T: usize = 6;

fn materialized() -> DistDepOptions {
    DistDepOptions {
        sampling: TreeSampling::Materialized,
        ..DistDepOptions::default()
    }
}

fn prop2(b: &mut Builder, seed: u64) -> Result<()> {
    let class = table_class(random_table(TABLE_ROWS, TABLE_COLS, derive_seed(seed, 1)))?;
    let p = PointDist::UniformIndex(TABLE_COLS);
    let n = 20_000;
    let dd = distdep_rademacher(
        &class,
        &ObliviousStrategy::Iid(p.clone()),
        SMALL_T,
        n,
        materialized(),
        derive_seed(seed, 2),
    )?;
    let cl = classical_rademacher(&class, &p, SMALL_T, n, derive_seed(seed, 3))?;
    let se = dd.combined_se(&cl);
    b.check(
        "iid distribution-dependent equals classical",
        (dd.mean - cl.mean).abs() <= 3.0 * se,
        json!({ "distdep": ci(&dd), "classical": ci(&cl), "combined_se": se, "horizon": SMALL_T }),
    );
    Ok(())
}

fn prop3(b: &mut Builder, seed: u64) -> Result<()> {
    let class = table_class(random_table(TABLE_ROWS, TABLE_COLS, derive_seed(seed, 1)))?;
    let worst = worstcase_sequential_rademacher(&class, SMALL_T)?;
    let strategies = [
        (
            "iid",
            ObliviousStrategy::Iid(PointDist::UniformIndex(TABLE_COLS)),
        ),
        (
            "deterministic",
            ObliviousStrategy::Deterministic(
                (0..SMALL_T)
                    .map(|t| Point::Index((t * 3) % TABLE_COLS))
                    .collect(),
            ),
        ),
        (
            "markov",
            ObliviousStrategy::Markov {
                initial: PointDist::UniformIndex(TABLE_COLS),
                step: MarkovStep::IndexWalk { n: TABLE_COLS },
            },
        ),
    ];
    for (k, (name, s)) in strategies.iter().enumerate() {
        let dd = distdep_rademacher(
            &class,
            s,
            SMALL_T,
            5_000,
            materialized(),
            derive_seed(seed, 10 + k as u64),
        )?;
        b.check(
            format!("{name} strategy below the worst case"),
            dd.mean <= worst + 3.0 * dd.std_error,
            json!({ "distdep": ci(&dd), "worstcase": worst }),
        );
    }
    Ok(())
}

fn prop4(b: &mut Builder, seed: u64) -> Result<()> {
    let rows = random_table(TABLE_ROWS, TABLE_COLS, derive_seed(seed, 1));
    let extra = random_table(3, TABLE_COLS, derive_seed(seed, 2));
    let h = random_table(1, TABLE_COLS, derive_seed(seed, 3)).remove(0);
    let mut rng = derived_rng(seed, 4);
    let mut superset = rows.clone();
    superset.extend(extra);
    let mut hull = rows.clone();
    for _ in 0..4 {
        let w: Vec<f64> = (0..rows.len()).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = w.iter().sum();
        hull.push(
            (0..TABLE_COLS)
                .map(|j| rows.iter().zip(&w).map(|(r, wi)| r[j] * wi / s).sum())
                .collect(),
        );
    }
    let scaled = |c: f64| {
        rows.iter()
            .map(|r| r.iter().map(|v| c * v).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let shifted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&h).map(|(a, b)| a + b).collect())
        .collect();
    let classes = [
        rows.clone(),
        superset,
        hull,
        scaled(2.5),
        scaled(-1.0),
        shifted,
    ]
    .into_iter()
    .map(table_class)
    .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&FunctionClass> = classes.iter().collect();
    // i.i.d. kernels make the leftmost path a valid sample of the process,
    // and exact sign enumeration makes negation and shifts cancel per sample
    let options = DistDepOptions {
        path_mode: PathMode::Leftmost,
        ..DistDepOptions::default()
    };
    let strategy = ObliviousStrategy::Iid(PointDist::UniformIndex(TABLE_COLS));
    let n = 1_000;
    let samples = paired_samples(&refs, &strategy, SMALL_T, n, options, derive_seed(seed, 5))?;
    let tol = 1e-9;
    let worst = |f: &dyn Fn(&[f64]) -> f64| samples.iter().map(|s| f(s)).fold(0.0f64, f64::max);
    let monotone = samples.iter().filter(|s| s[0] > s[1] + tol).count();
    let conv = worst(&|s| (s[0] - s[2]).abs());
    let pos = worst(&|s| (s[3] - 2.5 * s[0]).abs());
    let neg = worst(&|s| (s[4] - s[0]).abs());
    let shift = worst(&|s| (s[5] - s[0]).abs());
    b.check(
        "subset monotonicity",
        monotone == 0,
        json!({ "violations": monotone, "paths": n }),
    );
    b.check(
        "convex hull invariance",
        conv <= tol,
        json!({ "max_abs_diff": conv }),
    );
    b.check(
        "homogeneity c = 2.5",
        pos <= tol,
        json!({ "max_abs_diff": pos }),
    );
    b.check(
        "homogeneity c = -1",
        neg <= tol,
        json!({ "max_abs_diff": neg }),
    );
    b.check(
        "translation invariance",
        shift <= tol,
        json!({ "max_abs_diff": shift }),
    );
    Ok(())
}

fn run_and_verify(b: &mut Builder, name: &str, spec: &ExperimentSpec) -> Result<Vec<RegretRecord>> {
    let records = run_game(spec)?;
    let bound = spec
        .resolve_bound()?
        .ok_or_else(|| Error::InvalidSpec(format!("{name} needs a bound")))?;
    let verdict = verify_bound(&records, &bound, spec)?;
    b.files.insert(
        format!("{}_runs.csv", spec.id),
        runs_csv(&records, Some(&bound)),
    );
    b.files.insert(
        format!("{}_summary.json", spec.id),
        Summary::new(spec, &records, Some(&verdict)).to_json(),
    );
    b.check(
        name,
        verdict.pass,
        serde_json::to_value(&verdict).expect("verdict serializes"),
    );
    Ok(records)
}

fn linear_spec(
    id: &str,
    class: ClassSpec,
    constraint: ConstraintSpec,
    hint: Hint,
    horizon: usize,
    seed: u64,
) -> ExperimentSpec {
    let bound = match constraint {
        ConstraintSpec::Variance { .. } => crate::engine::BoundSpec::Variance { lambda: 1.0 },
        _ => crate::engine::BoundSpec::SlowChange { lambda: 1.0 },
    };
    ExperimentSpec {
        id: id.into(),
        horizon,
        class,
        learner: LearnerSpec::OptimisticOmd { hint, eta: None },
        adversary: AdversarySpec::Constrained {
            constraint,
            proposal: Default::default(),
            dist: None,
        },
        bound: Some(bound),
        replicates: 100,
        seed: Some(seed),
        analytic: false,
        regret: RegretMode::Fixed,
    }
}

/// Dimension of the ball in the linear suites.
pub const BALL_DIMENSION: usize = 3;
/// Dimension of the simplex in the linear suites.
pub const SIMPLEX_DIMENSION: usize = 16;

fn ball() -> ClassSpec {
    ClassSpec::LinearBall {
        dimension: BALL_DIMENSION,
        radius: 1.0,
        norm: BallNorm::Euclidean,
    }
}

fn simplex() -> ClassSpec {
    ClassSpec::Simplex {
        dimension: SIMPLEX_DIMENSION,
    }
}

/// Experiments behind the variance suite.
pub fn variance_specs(seed: u64) -> Vec<ExperimentSpec> {
    let c = || ConstraintSpec::Variance {
        sigma: SigmaSchedule::Constant(0.1),
        norm: None,
    };
    vec![
        linear_spec(
            "variance_l2",
            ball(),
            c(),
            Hint::RunningMean,
            1_000,
            derive_seed(seed, 1),
        ),
        linear_spec(
            "variance_simplex",
            simplex(),
            c(),
            Hint::RunningMean,
            1_000,
            derive_seed(seed, 2),
        ),
    ]
}

/// Experiments behind the slow-change suite.
pub fn slow_change_specs(seed: u64) -> Vec<ExperimentSpec> {
    let c = || ConstraintSpec::SlowChange {
        delta: 0.05,
        norm: None,
    };
    vec![
        linear_spec(
            "slow_change_l2",
            ball(),
            c(),
            Hint::Previous,
            2_000,
            derive_seed(seed, 1),
        ),
        linear_spec(
            "slow_change_simplex",
            simplex(),
            c(),
            Hint::Previous,
            2_000,
            derive_seed(seed, 2),
        ),
    ]
}

fn prop5(b: &mut Builder, seed: u64) -> Result<()> {
    for spec in variance_specs(seed) {
        run_and_verify(b, &format!("{} within the variance bound", spec.id), &spec)?;
    }
    Ok(())
}

fn prop6(b: &mut Builder, seed: u64) -> Result<()> {
    for spec in slow_change_specs(seed) {
        run_and_verify(
            b,
            &format!("{} within the slow-change bound", spec.id),
            &spec,
        )?;
    }
    Ok(())
}

/// Smoothed threshold game with discretized exponential weights.
pub fn smoothed_spec(horizon: usize, gamma: f64, replicates: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        id: format!("smoothed_t{horizon}"),
        horizon,
        // thresholds kept gamma/2 away from the ends, like the learner's grid
        class: ClassSpec::ThresholdInterval {
            margin: gamma / 2.0,
        },
        learner: LearnerSpec::DiscretizedEw {
            gamma: None,
            capped: true,
        },
        adversary: AdversarySpec::Smoothed { gamma, inner: None },
        bound: Some(crate::engine::BoundSpec::SmoothedThreshold { gamma: None }),
        replicates,
        seed: Some(seed),
        analytic: false,
        regret: RegretMode::Fixed,
    }
}

fn mean_final(records: &[RegretRecord]) -> f64 {
    crate::stats::mean(
        &records
            .iter()
            .map(RegretRecord::final_regret)
            .collect::<Vec<_>>(),
    )
}

fn decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

const HORIZONS: [usize; 4] = [250, 500, 1_000, 2_000];

fn prop7(b: &mut Builder, seed: u64) -> Result<()> {
    let gamma = 0.01;
    run_and_verify(
        b,
        "smoothed regret within the bound",
        &smoothed_spec(1_000, gamma, 50, derive_seed(seed, 1)),
    )?;
    let mut rates = Vec::new();
    for (k, &t) in HORIZONS.iter().enumerate() {
        let records = run_game(&smoothed_spec(
            t,
            gamma,
            50,
            derive_seed(seed, 10 + k as u64),
        ))?;
        rates.push(mean_final(&records) / t as f64);
    }
    b.check(
        "regret/T decreases with T",
        decreasing(&rates),
        json!({ "horizons": HORIZONS, "regret_per_round": rates }),
    );
    let c = collision_check(1_000, gamma, 1_000, derive_seed(seed, 20))?;
    b.check(
        "bins-and-balls collisions",
        c.pass,
        serde_json::to_value(&c).expect("report serializes"),
    );
    Ok(())
}

fn lemma4(b: &mut Builder, seed: u64) -> Result<()> {
    let grid = crate::domain::ThresholdGrid::new(16, 0.0)?;
    let class = FunctionClass::ThresholdGrid(grid);
    let x = PointDist::uniform_unit();
    let (t, reps) = (200, 2_000);
    let eta = crate::learners::hedge_eta(16.0, t);
    let ew = lower_bound_check(
        &class,
        &x,
        || Ok(Box::new(GridEw::new(grid, eta)?) as Box<dyn Learner>),
        t,
        reps,
        derive_seed(seed, 1),
    )?;
    let ftl = lower_bound_check(
        &class,
        &x,
        || Ok(Box::new(Ftl::new(class.clone())) as Box<dyn Learner>),
        t,
        reps,
        derive_seed(seed, 2),
    )?;
    b.check(
        "ew regret above the Rademacher lower bound",
        ew.pass,
        serde_json::to_value(&ew).expect("serializes"),
    );
    b.check(
        "ftl regret above the Rademacher lower bound",
        ftl.pass,
        serde_json::to_value(&ftl).expect("serializes"),
    );
    Ok(())
}

fn hybrid_spec(horizon: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        id: format!("hybrid_t{horizon}"),
        horizon,
        class: ClassSpec::ThresholdGrid {
            resolution: 64,
            margin: 0.0,
        },
        learner: LearnerSpec::Ew {
            eta: None,
            class: None,
        },
        adversary: AdversarySpec::Hybrid {
            x: DistSpec::UniformScalar { lo: 0.0, hi: 1.0 },
            labels: LabelKind::OppositeMajority,
        },
        bound: None,
        replicates: 200,
        seed: Some(seed),
        analytic: true,
        regret: RegretMode::Fixed,
    }
}

/// Noiseless halving against a grid learner or FTL on the interval.
pub fn halving_spec(horizon: usize, learner: LearnerSpec, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        id: format!("halving_t{horizon}"),
        horizon,
        class: ClassSpec::ThresholdInterval { margin: 0.0 },
        learner,
        adversary: AdversarySpec::Halving {},
        bound: None,
        replicates: 200,
        seed: Some(seed),
        analytic: false,
        regret: RegretMode::Fixed,
    }
}

fn cor5(b: &mut Builder, seed: u64) -> Result<()> {
    let mut rates = Vec::new();
    for (k, &t) in HORIZONS.iter().enumerate() {
        rates.push(
            mean_final(&run_game(&hybrid_spec(t, derive_seed(seed, 1 + k as u64)))?) / t as f64,
        );
    }
    b.check(
        "i.i.d. instances with adversarial labels: regret/T decreases",
        decreasing(&rates),
        json!({ "horizons": HORIZONS, "regret_per_round": rates }),
    );
    let learners = [
        (
            "ew_grid4096",
            LearnerSpec::Ew {
                eta: None,
                class: Some(ClassSpec::ThresholdGrid {
                    resolution: 4096,
                    margin: 0.0,
                }),
            },
        ),
        ("ftl", LearnerSpec::Ftl { class: None }),
    ];
    for (k, (name, learner)) in learners.iter().enumerate() {
        for (j, t) in [64usize, 256].into_iter().enumerate() {
            let spec = halving_spec(
                t,
                learner.clone(),
                derive_seed(seed, 10 + 2 * k as u64 + j as u64),
            );
            let m = mean_final(&run_game(&spec)?);
            b.check(
                format!("noiseless halving forces linear regret on {name} at T = {t}"),
                m >= 0.4 * t as f64,
                json!({ "mean_regret": m, "threshold": 0.4 * t as f64 }),
            );
        }
    }
    Ok(())
}

fn dudley(b: &mut Builder, seed: u64) -> Result<()> {
    let strategy = ObliviousStrategy::Iid(PointDist::UniformIndex(TABLE_COLS));
    for k in 0..5u64 {
        let class = table_class(random_table(
            TABLE_ROWS,
            TABLE_COLS,
            derive_seed(seed, 100 + k),
        ))?;
        let d = dudley_bound(&class, &strategy, SMALL_T, 200, derive_seed(seed, 200 + k))?;
        let r = distdep_rademacher(
            &class,
            &strategy,
            SMALL_T,
            5_000,
            materialized(),
            derive_seed(seed, 300 + k),
        )?;
        let se = d.combined_se(&r);
        b.check(
            format!("Dudley integral dominates, class {k}"),
            d.mean >= r.mean - 3.0 * se,
            json!({ "dudley": ci(&d), "distdep": ci(&r), "combined_se": se }),
        );
    }

    let constants = table_class(vec![vec![0.0; TABLE_COLS], vec![1.0; TABLE_COLS]])?;
    let mut bad = Vec::new();
    for k in 0..20u64 {
        let mut rng = derived_rng(seed, 400 + k);
        let (tree, _) = sample_tree_pair(&strategy, SMALL_T, &mut rng)?;
        let half = covering_number(&constants, &tree, 0.5, PNorm::L2)?.size;
        let below = covering_number(&constants, &tree, 0.4, PNorm::L2)?.size;
        if half != 1 || below != 2 {
            bad.push(json!({ "tree": k, "n_0.5": half, "n_0.4": below }));
        }
    }
    b.check(
        "two constants: N(0.5) = 1 and N(0.4) = 2 on every tree",
        bad.is_empty(),
        json!({ "trees": 20, "failures": bad }),
    );

    let mut mismatches = Vec::new();
    for k in 0..10u64 {
        let rows = random_table(TABLE_ROWS, TABLE_COLS, derive_seed(seed, 500 + k));
        let class = table_class(rows.clone())?;
        let mut rng = derived_rng(seed, 600 + k);
        let (tree, _) = sample_tree_pair(&strategy, 5, &mut rng)?;
        let cover = covering_number(&class, &tree, 0.0, PNorm::L2)?.size;
        let profiles = distinct_tree_profiles(&rows, tree.nodes());
        if cover != profiles {
            mismatches.push(json!({ "class": k, "cover": cover, "profiles": profiles }));
        }
    }
    b.check(
        "scale-0 cover equals the number of distinct profiles",
        mismatches.is_empty(),
        json!({ "classes": 10, "mismatches": mismatches }),
    );
    Ok(())
}

/// Distinct rows of `f(x_v)` over every node `v`, by direct enumeration.
fn distinct_tree_profiles(rows: &[Vec<f64>], nodes: &[Point]) -> usize {
    let mut seen: Vec<Vec<u64>> = Vec::new();
    for r in rows {
        let prof: Vec<u64> = nodes
            .iter()
            .map(|p| match p {
                Point::Index(j) => r[*j].to_bits(),
                _ => unreachable!("finite tables live on index points"),
            })
            .collect();
        if !seen.contains(&prof) {
            seen.push(prof);
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(
            run_suite("unknown", 0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn prop4_is_exact() {
        let out = run_suite("prop4", 3).unwrap();
        assert!(out.report.pass, "{}", out.report.to_json());
    }
}
