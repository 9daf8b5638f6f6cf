//! `referee`: evaluate voting rules on metric instances, generate lower-bound
//! instances, print bound curves, run the planar grid search and the
//! randomized property suites.
//!
//! Exit status: 0 success, 1 property violation, 2 usage or input error,
//! 3 search refused for exceeding its work budget.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use referee::adversarial::{
    build_circle_instance, build_star_instance, build_topk_squared_instance, default_topk_eps, StarFamily,
    StarGeometry, StarVariant, DEFAULT_CIRCLE_DELTA, DEFAULT_CIRCLE_EPS, DEFAULT_STAR_EPS,
};
use referee::analysis::{distortion_report, monte_carlo_counts, monte_carlo_distortion, BoundCurve, Moment};
use referee::checks::{run_suite, Suite};
use referee::io::{emit_instance, read_instance};
use referee::mechanisms::{distribution, Mechanism, EXACT_AGENT_LIMIT};
use referee::plane::{run_search, SearchMode, SearchOptions, SearchOutcome, DEFAULT_BUDGET};
use referee::Error;

#[derive(Parser)]
#[command(name = "referee", version, about = "Distortion of query-limited randomized voting rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion of a mechanism on an instance file.
    Eval(EvalArgs),
    /// Write a lower-bound instance.
    Gen(GenArgs),
    /// CSV of the oligarchy bound against the favorite-only lower bound.
    Curve(CurveArgs),
    /// Exhaustive search over canonical five-point grid configurations.
    Search(SearchArgs),
    /// Randomized property suites.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Exact,
    Mc,
}

#[derive(clap::Args)]
struct EvalArgs {
    file: PathBuf,
    /// rd, rr or ro.
    #[arg(long, default_value = "rr")]
    mechanism: Mechanism,
    /// 1 for distortion, 2 for squared distortion.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    moment: u32,
    #[arg(long, value_enum, default_value = "exact")]
    mode: EvalMode,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    TopkSquared,
    Star,
    Circle,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Abstract,
    Circle,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of agents (top-k and circle families).
    #[arg(long, default_value_t = 20)]
    agents: usize,
    /// Alternatives per agent (top-k and circle families).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Defaults: 1/(2n) for top-k, 1e-3 for the star, 1e-4 for the circle.
    #[arg(long)]
    eps: Option<f64>,
    /// Circle diameter (circle family).
    #[arg(long, default_value_t = DEFAULT_CIRCLE_DELTA)]
    delta: f64,
    #[arg(long, value_enum, default_value = "a")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "abstract")]
    geometry: GeometryArg,
    /// Output file; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
    m_max: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Collinear,
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Grid step is 1/k.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Most configurations to evaluate before refusing.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Lift the work budget.
    #[arg(long)]
    long: bool,
    /// Append completed blocks here and resume from it.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Write `key=value` summary lines here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Stop after this many blocks (resume later from the checkpoint).
    #[arg(long)]
    stop_after_blocks: Option<usize>,
}

#[derive(clap::Args)]
struct CheckArgs {
    /// referee-bound (alias lemma2), jensen, squared-bound (alias theorem2)
    /// or all.
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn eval(args: EvalArgs) -> anyhow::Result<ExitCode> {
    let mode = match args.mode {
        EvalMode::Exact => "exact",
        EvalMode::Mc => "mc",
    };
    eprintln!(
        "# eval file={} mechanism={} moment={} mode={mode} samples={} seed={}",
        args.file.display(),
        args.mechanism,
        args.moment,
        args.samples,
        args.seed
    );
    let inst = read_instance(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let moment = Moment::from_order(args.moment)?;
    let (opt, opt_cost) = inst.optimal_alternative();
    let mut out = String::new();
    out.push_str(&format!("mechanism: {}\n", args.mechanism));
    match args.mode {
        EvalMode::Exact => {
            if inst.agents() > EXACT_AGENT_LIMIT {
                bail!(
                    "exact evaluation is limited to {EXACT_AGENT_LIMIT} agents (instance has {}); use --mode mc",
                    inst.agents()
                );
            }
            let dist = distribution(&inst, args.mechanism);
            let r = distortion_report(&inst, &dist)?;
            let value = if moment == Moment::First { r.distortion } else { r.squared_distortion };
            out.push_str(&format!("moment {}: {value}\n", args.moment));
            out.push_str(&format!("distortion: {}\n", r.distortion));
            out.push_str(&format!("squared_distortion: {}\n", r.squared_distortion));
            out.push_str(&format!("optimal_alternative: {opt}\noptimal_cost: {opt_cost}\n"));
            out.push_str("distribution:\n");
            for (a, p) in dist.probs().iter().enumerate() {
                if *p > 0.0 {
                    out.push_str(&format!("{a} {p}\n"));
                }
            }
        }
        EvalMode::Mc => {
            if args.samples == 0 {
                bail!("--samples must be positive");
            }
            let first = monte_carlo_distortion(&inst, args.mechanism, args.samples, args.seed, Moment::First)?;
            let second = monte_carlo_distortion(&inst, args.mechanism, args.samples, args.seed, Moment::Second)?;
            let value = if moment == Moment::First { first } else { second };
            out.push_str(&format!("moment {}: {} (std error {})\n", args.moment, value.estimate, value.std_error));
            out.push_str(&format!("distortion: {} (std error {})\n", first.estimate, first.std_error));
            out.push_str(&format!("squared_distortion: {} (std error {})\n", second.estimate, second.std_error));
            out.push_str(&format!("optimal_alternative: {opt}\noptimal_cost: {opt_cost}\n"));
            out.push_str(&format!("samples: {}\ndistribution:\n", args.samples));
            let counts = monte_carlo_counts(&inst, args.mechanism, args.samples, args.seed);
            for (a, c) in counts.iter().enumerate() {
                if *c > 0 {
                    out.push_str(&format!("{a} {}\n", *c as f64 / args.samples as f64));
                }
            }
        }
    }
    write_out(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let (inst, resolved) = match args.family {
        Family::TopkSquared => {
            let eps = args.eps.unwrap_or_else(|| default_topk_eps(args.agents.max(1)));
            (
                build_topk_squared_instance(args.agents, args.k, eps)?,
                format!("family=topk-squared agents={} k={} eps={eps}", args.agents, args.k),
            )
        }
        Family::Star => {
            let eps = args.eps.unwrap_or(DEFAULT_STAR_EPS);
            let variant = match args.variant {
                VariantArg::A => StarVariant::A,
                VariantArg::B => StarVariant::B,
            };
            let geometry = match args.geometry {
                GeometryArg::Abstract => StarGeometry::Abstract,
                GeometryArg::Circle => StarGeometry::EuclideanCircle,
            };
            let family = StarFamily::new(variant, eps, geometry)?;
            (
                build_star_instance(&family)?,
                format!("family=star variant={variant:?} geometry={geometry:?} eps={eps}"),
            )
        }
        Family::Circle => {
            let eps = args.eps.unwrap_or(DEFAULT_CIRCLE_EPS);
            (
                build_circle_instance(args.agents, args.k, eps, args.delta)?,
                format!("family=circle agents={} k={} eps={eps} delta={}", args.agents, args.k, args.delta),
            )
        }
    };
    eprintln!("# gen {resolved}");
    write_out(args.output.as_deref(), &emit_instance(&inst))?;
    Ok(ExitCode::SUCCESS)
}

fn curve(args: CurveArgs) -> anyhow::Result<ExitCode> {
    eprintln!("# curve m_max={}", args.m_max);
    let curve = BoundCurve::oligarchy(args.m_max)?;
    write_out(args.output.as_deref(), &curve.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn search(args: SearchArgs) -> anyhow::Result<ExitCode> {
    let mode = match args.mode {
        ModeArg::Full => SearchMode::Full,
        ModeArg::Collinear => SearchMode::Collinear,
    };
    let budget = (!args.long).then_some(args.budget);
    eprintln!(
        "# search k={} delta={} mode={mode} threads={} budget={} checkpoint={}",
        args.k,
        1.0 / args.k as f64,
        args.threads,
        budget.map_or("none".to_string(), |b| b.to_string()),
        args.checkpoint.as_ref().map_or("none".to_string(), |p| p.display().to_string()),
    );
    let opts = SearchOptions {
        k: args.k,
        mode,
        threads: args.threads,
        budget,
        checkpoint: args.checkpoint,
        stop_after_blocks: args.stop_after_blocks,
    };
    match run_search(&opts)? {
        SearchOutcome::Complete(report) => {
            write_out(None, &report.render())?;
            eprintln!("# wall time {:.3}s", report.wall_time.as_secs_f64());
            if let Some(p) = &args.summary {
                fs::write(p, report.summary()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        SearchOutcome::Paused { blocks_done, blocks_total } => {
            println!("paused after {blocks_done} of {blocks_total} blocks; rerun with the same checkpoint to resume");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> anyhow::Result<ExitCode> {
    eprintln!(
        "# check suite={} seed={} count={} (instance i uses sub-seed derive_seed(seed, i))",
        args.suite, args.seed, args.count
    );
    let report = run_suite(args.suite, args.seed, args.count);
    for v in &report.violations {
        println!("violation: {v}");
    }
    println!(
        "{} {}: {} instances, {} skipped, {} violations",
        if report.passed() { "PASS" } else { "FAIL" },
        args.suite,
        report.instances,
        report.skipped,
        report.violations.len()
    );
    if matches!(args.suite, Suite::SquaredBound | Suite::All) && report.instances > report.skipped {
        println!(
            "max referee squared distortion {}, max distortion {}",
            report.max_squared, report.max_distortion
        );
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a),
        Command::Curve(a) => curve(a),
        Command::Search(a) => search(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::OverBudget { .. }) => {
                    eprintln!("pass --long or a larger --budget to run it anyway");
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}
