use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fanova::analysis::{run_analysis, AnalysisConfig, GateRule};
use fanova::closure::{pairwise_followup, ClosureMethod, PermutationNodes};
use fanova::error::{Error, Result};
use fanova::io::{load_dataset_path, write_fitted_csv};
use fanova::permute::{NullStatMatrix, PValueRule, PermutationPlan};
use fanova::plot::{plot_means, plot_power};
use fanova::report::{render_report, ReportFormat};
use fanova::simulate::{
    run_power, write_demo_erythrograms, Model, SimConfig, BETA_GRID, DEMO_SEED,
};
use fanova::smoothing::{
    smooth_dataset, BoundaryRule, KnotRule, PenaltyRule, SmoothingOptions, DEFAULT_GCV_GAMMA,
};
use fanova::stats::{IntervalPartition, NamedInterval};

#[derive(Parser)]
#[command(
    name = "fanova",
    version,
    about = "Permutation tests for differences among groups of curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gated pipeline: global test, interval closure, pairwise.
    Test(TestArgs),
    /// Pairwise group comparison within one named interval.
    Pairwise(PairwiseArgs),
    /// Fit curves and export them on the common grid.
    Smooth(SmoothArgs),
    /// Estimate power on synthetic data, or write the bundled demo files.
    Simulate(SimulateArgs),
    /// Plot group mean curves with interval boundaries.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct SmoothingArgs {
    /// Fixed roughness penalty; by default the penalty is chosen per curve
    /// by GCV.
    #[arg(long, conflicts_with = "gcv_gamma")]
    lambda: Option<f64>,
    /// GCV penalty multiplier on the effective degrees of freedom.
    #[arg(long, default_value_t = DEFAULT_GCV_GAMMA)]
    gcv_gamma: f64,
    /// Knot rule: "per-obs" or a count of equally spaced knots.
    #[arg(long, default_value = "per-obs")]
    knots: String,
    /// Spline degree.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Constrain fits to zero curvature at the domain endpoints.
    #[arg(long)]
    natural_boundary: bool,
}

impl SmoothingArgs {
    fn to_options(&self) -> Result<SmoothingOptions> {
        let knots = match self.knots.as_str() {
            "per-obs" => KnotRule::PerObservation,
            other => {
                let count: usize = other.parse().map_err(|_| {
                    Error::InvalidConfig(format!(
                        "--knots takes 'per-obs' or a number, got '{other}'"
                    ))
                })?;
                KnotRule::Equispaced(count)
            }
        };
        let penalty = match self.lambda {
            Some(l) => PenaltyRule::Fixed(l),
            None => PenaltyRule::Gcv {
                gamma: self.gcv_gamma,
            },
        };
        Ok(SmoothingOptions {
            knots,
            degree: self.degree,
            penalty,
            boundary: if self.natural_boundary {
                BoundaryRule::Natural
            } else {
                BoundaryRule::Free
            },
        })
    }
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV files, one dataset each.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// JSON file with named intervals: [{"name":"latent","a":0,"b":60},...]
    #[arg(long)]
    intervals: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Multiplicity adjustment; "shortcut-stat" and "shortcut-p" are the
    /// single-ordering variants of "combined".
    #[arg(long, value_enum, default_value_t = ClosureMethod::Combined)]
    method: ClosureMethod,
    /// Stage-3 gate: "strict" or "marginal:<p>".
    #[arg(long, default_value = "strict")]
    gate: String,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Directory for per-dataset null-matrix CSV exports.
    #[arg(long)]
    export_nulls: Option<PathBuf>,
}

#[derive(Args)]
struct PairwiseArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    intervals: PathBuf,
    /// Name of the interval to compare groups within.
    #[arg(long)]
    interval: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long)]
    data: PathBuf,
    /// Output CSV of fitted curves (grid by curves).
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG of the group means.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    smoothing: SmoothingArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Model::M1)]
    model: Model,
    /// Number of equal-length intervals.
    #[arg(long = "m", default_value_t = 5)]
    intervals: usize,
    /// Simulation replicates; defaults to 200 (1000 with --full-scale).
    #[arg(long)]
    nsim: Option<usize>,
    /// Permutations per replicate; defaults to 200 (1000 with --full-scale).
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Comma-separated beta values; defaults to the built-in grid.
    #[arg(long, value_delimiter = ',')]
    betas: Vec<f64>,
    /// Run the pairwise follow-up on flagged intervals.
    #[arg(long)]
    pairwise: bool,
    /// Use 1000 replicates of 1000 permutations.
    #[arg(long)]
    full_scale: bool,
    /// Write the power table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG of the power curves.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write the bundled demo datasets to this directory and exit.
    #[arg(long)]
    demo_dir: Option<PathBuf>,
    /// Seed for the demo datasets.
    #[arg(long, default_value_t = DEMO_SEED)]
    demo_seed: u64,
    /// Fit with a fixed penalty instead of the harness default.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    data: PathBuf,
    /// Optional interval JSON; boundaries are drawn as vertical rules.
    #[arg(long)]
    intervals: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    smoothing: SmoothingArgs,
}

fn parse_gate(text: &str) -> Result<GateRule> {
    if text == "strict" {
        return Ok(GateRule::Strict);
    }
    if let Some(p) = text.strip_prefix("marginal:") {
        let p: f64 = p
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad gate threshold '{text}'")))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidPValue(p));
        }
        return Ok(GateRule::Marginal(p));
    }
    Err(Error::InvalidConfig(format!(
        "--gate takes 'strict' or 'marginal:<p>', got '{text}'"
    )))
}

fn load_intervals(path: &PathBuf) -> Result<Vec<NamedInterval>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let cfg = AnalysisConfig {
        data: args.data,
        intervals: load_intervals(&args.intervals)?,
        alpha: args.alpha,
        permutations: args.permutations,
        seed: args.seed,
        method: args.method,
        gate: parse_gate(&args.gate)?,
        p_rule: PValueRule::AddOne,
        smoothing: args.smoothing.to_options()?,
        null_export_dir: args.export_nulls,
    };
    let report = run_analysis(&cfg)?;
    emit(&render_report(&report, args.format)?, args.out.as_ref())
}

fn cmd_pairwise(args: PairwiseArgs) -> Result<()> {
    let raws = load_dataset_path(&args.data)?;
    let ds = smooth_dataset(&raws, &args.smoothing.to_options()?)?;
    let named = load_intervals(&args.intervals)?;
    let (partition, warnings) = IntervalPartition::from_named(ds.grid(), &named)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let index = partition
        .index_of(&args.interval)
        .ok_or_else(|| Error::InvalidConfig(format!("no interval named '{}'", args.interval)))?;

    let plan = PermutationPlan::random(args.seed, args.permutations, ds.group_of())?;
    let nulls = NullStatMatrix::compute(&ds, &partition, &plan)?;
    let src = PermutationNodes::new(&nulls, PValueRule::AddOne);
    let closure = fanova::closure::combined_shortcut(&src);
    let interval_adjusted = closure.hypotheses[index].adjusted_p;
    if interval_adjusted > args.alpha {
        eprintln!(
            "note: interval '{}' is not significant at alpha={} (adjusted p = {:.3}); \
             comparing anyway",
            args.interval, args.alpha, interval_adjusted
        );
    }
    let report = pairwise_followup(
        &ds,
        &partition,
        index,
        interval_adjusted,
        &plan,
        PValueRule::AddOne,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    emit(&json, args.out.as_ref())
}

fn cmd_smooth(args: SmoothArgs) -> Result<()> {
    let raws = load_dataset_path(&args.data)?;
    let ds = smooth_dataset(&raws, &args.smoothing.to_options()?)?;
    let file = std::fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_fitted_csv(&ds, file)?;
    if let Some(svg_path) = args.svg {
        let svg = plot_means(&ds, None, "group means");
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    if let Some(dir) = args.demo_dir {
        let paths = write_demo_erythrograms(&dir, args.demo_seed)?;
        for p in paths {
            println!("{}", p.display());
        }
        return Ok(());
    }
    let base = if args.full_scale {
        SimConfig::full_scale(args.model)
    } else {
        SimConfig::desk(args.model)
    };
    let mut smoothing = base.smoothing.clone();
    if let Some(lambda) = args.lambda {
        smoothing.penalty = PenaltyRule::Fixed(lambda);
    }
    let cfg = SimConfig {
        intervals: args.intervals,
        smoothing,
        nsim: args.nsim.unwrap_or(base.nsim),
        permutations: args.permutations.unwrap_or(base.permutations),
        seed: args.seed,
        alpha: args.alpha,
        pairwise: args.pairwise,
        ..base
    };
    let betas: Vec<f64> = if args.betas.is_empty() {
        BETA_GRID.to_vec()
    } else {
        args.betas
    };
    let table = run_power(&cfg, &betas)?;
    let mut buf = Vec::new();
    table.to_csv(&mut buf)?;
    emit(
        &String::from_utf8(buf).expect("csv output is utf-8"),
        args.out.as_ref(),
    )?;
    if let Some(svg_path) = args.svg {
        let svg = plot_power(&table, &format!("{:?} rejection rates", cfg.model));
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let raws = load_dataset_path(&args.data)?;
    let ds = smooth_dataset(&raws, &args.smoothing.to_options()?)?;
    let partition = match &args.intervals {
        Some(path) => {
            let named = load_intervals(path)?;
            let (p, warnings) = IntervalPartition::from_named(ds.grid(), &named)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            Some(p)
        }
        None => None,
    };
    let title = args
        .data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let svg = plot_means(&ds, partition.as_ref(), &title);
    std::fs::write(&args.out, svg).map_err(|e| Error::io(&args.out, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Pairwise(args) => cmd_pairwise(args),
        Command::Smooth(args) => cmd_smooth(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
