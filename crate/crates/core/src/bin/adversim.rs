use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use adversim::complexity::{
    classical_rademacher, covering_number, distdep_rademacher, dudley_bound,
    worstcase_sequential_rademacher, DistDepOptions, PNorm, PathMode,
};
use adversim::config::{Config, Emit};
use adversim::engine::{
    regret_svg, run_game, runs_csv, verify_bound, ClassSpec, DistSpec, Summary,
};
use adversim::rng::derived_rng;
use adversim::suites::{run_suite, SUITES};
use adversim::trees::{sample_tree_pair, MarkovStep, ObliviousStrategy};
use adversim::Error;

/// Seed used by `verify` when none is given.
const DEFAULT_SUITE_SEED: u64 = 0;

#[derive(Parser)]
#[command(
    name = "adversim",
    version,
    about = "Online learning games against restricted adversaries"
)]
struct Cli {
    /// Master seed; a fresh one is drawn and logged when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to ADVERSIM_THREADS, then all cores).
    #[arg(long, global = true, env = "ADVERSIM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a TOML config.
    Simulate(SimulateArgs),
    /// Estimate a complexity of a class under an oblivious strategy.
    Complexity(ComplexityArgs),
    /// Run a named verification suite and print its verdict.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replicates per experiment (overrides the config).
    #[arg(long)]
    replicates: Option<usize>,
    /// Artifacts to write (overrides `emit`).
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Vec<EmitArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EmitArg {
    Csv,
    Json,
    Svg,
}

impl From<EmitArg> for Emit {
    fn from(e: EmitArg) -> Self {
        match e {
            EmitArg::Csv => Emit::Csv,
            EmitArg::Json => Emit::Json,
            EmitArg::Svg => Emit::Svg,
        }
    }
}

#[derive(Args)]
struct ComplexityArgs {
    /// Class as JSON, e.g. '{"kind":"threshold_interval"}'.
    #[arg(long)]
    class: String,
    /// Point law as JSON, e.g. '{"kind":"uniform_scalar"}'.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, short = 'T')]
    horizon: usize,
    /// Monte Carlo samples (trees or sequences).
    #[arg(long, short = 'n', default_value_t = 1000)]
    samples: usize,
    #[arg(long, group = "quantity")]
    classical: bool,
    #[arg(long, group = "quantity")]
    worstcase: bool,
    #[arg(long, group = "quantity")]
    distdep: bool,
    #[arg(long, group = "quantity")]
    dudley: bool,
    /// Covering number at this scale on one sampled tree.
    #[arg(long, group = "quantity", value_name = "ALPHA")]
    cover: Option<f64>,
    /// Centered variant of the distribution-dependent estimate.
    #[arg(long)]
    centered: bool,
    /// Evaluate on the leftmost path with independent signs.
    #[arg(long)]
    leftmost: bool,
    /// i.i.d. draws from `--dist` (the default strategy).
    #[arg(long, group = "strategy")]
    iid: bool,
    /// Random walk on `0..N` started from `--dist`.
    #[arg(long, group = "strategy", value_name = "N")]
    markov_walk: Option<usize>,
    /// Norm for `--cover`: 1, 2 or inf.
    #[arg(long, default_value = "2")]
    norm: String,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    /// Also write the suite's verdict and artifacts here.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verdict,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Complexity(a) => complexity(a, cli.seed),
        Command::Verify(a) => verify(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verdict) => ExitCode::from(1),
    }
}

/// Fresh seeds stay below 2^63 so they can be written back into TOML.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::random::<u64>() >> 1)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}

fn simulate(args: SimulateArgs, seed: Option<u64>) -> Result<(), Failure> {
    let src = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("reading {}: {e}", args.config.display())))?;
    let mut cfg = Config::parse(&src)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    let out = args.out.unwrap_or_else(|| cfg.out.clone());
    let emit: BTreeSet<Emit> = if args.emit.is_empty() {
        cfg.emit.clone()
    } else {
        args.emit.into_iter().map(Emit::from).collect()
    };
    for spec in &mut cfg.experiments {
        if let Some(r) = args.replicates {
            spec.replicates = r;
        }
        if seed.is_some() || spec.seed.is_none() {
            spec.seed = Some(resolve_seed(seed));
        }
        spec.validate()
            .map_err(|e| Failure::Usage(format!("experiment {:?}: {e}", spec.id)))?;
        eprintln!("experiment {}: seed {}", spec.id, spec.master_seed());
    }

    let results: Vec<_> = cfg
        .experiments
        .par_iter()
        .map(|spec| {
            let records = run_game(spec)?;
            let bound = spec.resolve_bound()?;
            let verdict = bound
                .as_ref()
                .map(|b| verify_bound(&records, b, spec))
                .transpose()?;
            Ok((records, bound, verdict))
        })
        .collect::<Vec<adversim::Result<_>>>();

    for (spec, result) in cfg.experiments.iter().zip(results) {
        let (records, bound, verdict) = result
            .map_err(|e: Error| Failure::Runtime(format!("experiment {:?}: {e}", spec.id)))?;
        let dir = out.join(&spec.id);
        fs::create_dir_all(&dir)
            .map_err(|e| Failure::Runtime(format!("creating {}: {e}", dir.display())))?;
        if emit.contains(&Emit::Csv) {
            write(&dir.join("runs.csv"), &runs_csv(&records, bound.as_ref()))?;
        }
        if emit.contains(&Emit::Json) {
            write(
                &dir.join("summary.json"),
                &Summary::new(spec, &records, verdict.as_ref()).to_json(),
            )?;
        }
        if emit.contains(&Emit::Svg) {
            write(
                &dir.join("regret.svg"),
                &regret_svg(&spec.id, &records, bound.as_ref()),
            )?;
        }
        let status = verdict.map_or("no bound", |v| if v.pass { "pass" } else { "FAIL" });
        eprintln!(
            "experiment {}: {status}, outputs in {}",
            spec.id,
            dir.display()
        );
    }
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, src: &str) -> Result<T, Failure> {
    serde_json::from_str(src).map_err(|e| Failure::Usage(format!("--{what}: {e}")))
}

fn complexity(args: ComplexityArgs, seed: Option<u64>) -> Result<(), Failure> {
    let seed = resolve_seed(seed);
    eprintln!("seed {seed}");
    let usage = |e: Error| Failure::Usage(e.to_string());
    let runtime = |e: Error| Failure::Runtime(e.to_string());
    let class = parse_json::<ClassSpec>("class", &args.class)?
        .build()
        .map_err(usage)?;
    let dist = args
        .dist
        .as_deref()
        .map(|s| parse_json::<DistSpec>("dist", s).and_then(|d| d.build().map_err(usage)))
        .transpose()?;
    let need_dist = || {
        dist.clone()
            .ok_or_else(|| Failure::Usage("--dist is required for this quantity".into()))
    };
    let strategy = || -> Result<ObliviousStrategy, Failure> {
        let initial = need_dist()?;
        Ok(match args.markov_walk {
            Some(n) => ObliviousStrategy::Markov {
                initial,
                step: MarkovStep::IndexWalk { n },
            },
            None => ObliviousStrategy::Iid(initial),
        })
    };
    let options = DistDepOptions {
        centered: args.centered,
        path_mode: if args.leftmost {
            PathMode::Leftmost
        } else {
            PathMode::Full
        },
        ..DistDepOptions::default()
    };
    let (t, n) = (args.horizon, args.samples);
    let json = if args.worstcase {
        let v = worstcase_sequential_rademacher(&class, t).map_err(runtime)?;
        serde_json::json!({ "mean": v, "std_error": 0.0, "n": 0, "exact": true })
    } else if args.classical {
        serde_json::to_value(
            classical_rademacher(&class, &need_dist()?, t, n, seed).map_err(runtime)?,
        )
        .unwrap()
    } else if args.dudley {
        serde_json::to_value(dudley_bound(&class, &strategy()?, t, n, seed).map_err(runtime)?)
            .unwrap()
    } else if let Some(alpha) = args.cover {
        let norm = match args.norm.as_str() {
            "1" => PNorm::L1,
            "2" => PNorm::L2,
            "inf" => PNorm::Sup,
            other => {
                return Err(Failure::Usage(format!(
                    "--norm must be 1, 2 or inf, got {other:?}"
                )))
            }
        };
        let mut rng = derived_rng(seed, 0);
        let (tree, _) = sample_tree_pair(&strategy()?, t, &mut rng).map_err(runtime)?;
        serde_json::to_value(covering_number(&class, &tree, alpha, norm).map_err(runtime)?).unwrap()
    } else {
        serde_json::to_value(
            distdep_rademacher(&class, &strategy()?, t, n, options, seed).map_err(runtime)?,
        )
        .unwrap()
    };
    // --distdep and --iid only spell out the defaults
    let _ = (args.distdep, args.iid);
    println!("{json}");
    Ok(())
}

fn verify(args: VerifyArgs, seed: Option<u64>) -> Result<(), Failure> {
    if !SUITES.contains(&args.suite.as_str()) {
        return Err(Failure::Usage(format!(
            "unknown suite {:?}; expected one of {}",
            args.suite,
            SUITES.join(", ")
        )));
    }
    let seed = seed.unwrap_or(DEFAULT_SUITE_SEED);
    eprintln!("suite {}: seed {seed}", args.suite);
    let output = run_suite(&args.suite, seed)
        .map_err(|e| Failure::Runtime(format!("suite {}: {e}", args.suite)))?;
    let json = output.report.to_json();
    println!("{json}");
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir)
            .map_err(|e| Failure::Runtime(format!("creating {}: {e}", dir.display())))?;
        write(&dir.join(format!("{}_verdict.json", args.suite)), &json)?;
        for (name, contents) in &output.files {
            write(&dir.join(name), contents)?;
        }
    }
    if output.report.pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}
