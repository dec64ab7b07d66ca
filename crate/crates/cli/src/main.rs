use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lossy_cgf::blocklength::{order_for, sweep, SweepConfig, DEFAULT_BUDGET};
use lossy_cgf::codec::{build_code, code_metrics, CodeVariant};
use lossy_cgf::covering::{g_quantity_with, greedy_cover_with, DistortionSpec};
use lossy_cgf::probability::FinitePmf;
use lossy_cgf::ratedistortion::{rd_at_distortion_with, rd_value};
use lossy_cgf::verify::{run_suite, SuiteConfig};
use lossy_cgf::{Error, Exec, Extended};

mod grid;
mod table;

use table::{Cell, Format, Table};

/// Variable-length lossy coding under a CGF length criterion.
#[derive(Parser, Debug)]
#[command(name = "lossy-cgf", version)]
struct Cli {
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// G over a (D, epsilon, t) grid.
    Gquantity(GridArgs),
    /// Build a code, write its JSON export to --out and print its metrics.
    BuildCode(BuildArgs),
    /// Blocklength-n bounds and the Gaussian approximation.
    Sweep(SweepArgs),
    /// Run the verification suite; prints one JSON report per line.
    Verify(VerifyArgs),
    /// Rate-distortion function, slope and dispersion.
    Rd(RdArgs),
}

#[derive(Args, Debug)]
struct Instance {
    /// Source PMF as JSON: {"alphabet": [...], "probs": [...]}.
    #[arg(long)]
    source: PathBuf,
    /// Distortion as JSON: {"source_alphabet", "repro_alphabet", "d": rows}.
    #[arg(long)]
    distortion: PathBuf,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    instance: Instance,
    /// Distortion levels: list or start:stop:step, repeatable.
    #[arg(long = "D", required = true)]
    level: Vec<String>,
    #[arg(long, required = true)]
    epsilon: Vec<String>,
    #[arg(long, required = true)]
    t: Vec<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    Stochastic,
    Det,
    Prefix,
}

impl From<Variant> for CodeVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Stochastic => CodeVariant::Stochastic,
            Variant::Det => CodeVariant::Deterministic,
            Variant::Prefix => CodeVariant::Prefix,
        }
    }
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long = "D")]
    level: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = Variant::Stochastic)]
    variant: Variant,
    /// Orders at which the metrics are reported.
    #[arg(long, default_value = "1")]
    t: Vec<String>,
    /// Metrics table format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Code export (JSON); not written when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long = "D", required = true)]
    level: Vec<String>,
    #[arg(long, required = true)]
    epsilon: Vec<String>,
    #[arg(long, default_value = "0")]
    t: Vec<String>,
    /// Blocklengths.
    #[arg(long, required = true)]
    n: Vec<String>,
    /// Largest expanded distortion matrix, in entries.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite configuration (JSON); the built-in default when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Add tampered inputs that every check must flag.
    #[arg(long)]
    negative_control: bool,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RdArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long = "D", required = true)]
    level: Vec<String>,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = executor(cli.workers)?;
    match cli.command {
        Command::Gquantity(args) => gquantity(args, exec),
        Command::BuildCode(args) => build(args, exec),
        Command::Sweep(args) => sweep_cmd(args, exec),
        Command::Verify(args) => verify(args, exec),
        Command::Rd(args) => rd(args, exec),
    }
}

#[cfg(feature = "parallel")]
fn executor(workers: usize) -> Result<Exec> {
    match workers {
        0 => Ok(Exec::Parallel),
        1 => Ok(Exec::Sequential),
        n => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring worker threads")?;
            Ok(Exec::Parallel)
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn executor(_workers: usize) -> Result<Exec> {
    Ok(Exec::Sequential)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "{what} {} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })
}

fn load(instance: &Instance) -> Result<(FinitePmf, DistortionSpec)> {
    let source: FinitePmf = read_json(&instance.source, "source")?;
    let spec: DistortionSpec = read_json(&instance.distortion, "distortion")?;
    spec.check_source(&source)?;
    Ok((source, spec))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(table: &Table, output: &Output) -> Result<ExitCode> {
    let mut out = sink(output.out.as_deref())?;
    table.write(output.format, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn gquantity(args: GridArgs, exec: Exec) -> Result<ExitCode> {
    let (source, spec) = load(&args.instance)?;
    let levels = grid::floats("D", &args.level)?;
    let epsilons = grid::floats("epsilon", &args.epsilon)?;
    let ts = grid::floats("t", &args.t)?;
    let mut table = Table::new(&["D", "epsilon", "t", "alpha", "G"]);
    for &level in &levels {
        for &epsilon in &epsilons {
            for &t in &ts {
                let alpha = order_for(t)?;
                let g = g_quantity_with(&source, &spec, level, epsilon, alpha, exec)?;
                table.push(vec![
                    level.into(),
                    epsilon.into(),
                    t.into(),
                    alpha.into(),
                    g.into(),
                ]);
            }
        }
    }
    emit(&table, &args.output)
}

fn build(args: BuildArgs, exec: Exec) -> Result<ExitCode> {
    let (source, spec) = load(&args.instance)?;
    let ts = grid::floats("t", &args.t)?;
    let plan = greedy_cover_with(&source, &spec, args.level, args.epsilon, exec)?;
    let variant = CodeVariant::from(args.variant);
    let code = build_code(&plan, variant);
    if let Some(path) = &args.out {
        let mut out = sink(Some(path))?;
        serde_json::to_writer_pretty(&mut out, &code.export())?;
        writeln!(out)?;
        out.flush()?;
    }
    let name = serde_json::to_value(variant)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut table = Table::new(&[
        "variant",
        "D",
        "epsilon",
        "k_star",
        "t",
        "excess",
        "cgf",
        "mean_length",
        "max_length",
    ]);
    for &t in &ts {
        order_for(t)?;
        let m = code_metrics(&code, &source, &spec, args.level, t)?;
        table.push(vec![
            Cell::Text(name.clone()),
            args.level.into(),
            args.epsilon.into(),
            plan.k_star().into(),
            t.into(),
            m.excess_probability.into(),
            m.cgf.into(),
            m.mean_length.into(),
            m.max_length.into(),
        ]);
    }
    let mut out = io::stdout().lock();
    table.write(args.format, &mut out)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(args: SweepArgs, exec: Exec) -> Result<ExitCode> {
    let (source, spec) = load(&args.instance)?;
    let levels = grid::floats("D", &args.level)?;
    let epsilons = grid::floats("epsilon", &args.epsilon)?;
    let ts = grid::floats("t", &args.t)?;
    let ns = grid::counts("n", &args.n)?;
    let mut table = Table::new(&[
        "n",
        "t",
        "epsilon",
        "D",
        "lower",
        "upper",
        "gaussian",
        "gap",
        "scaled_gap",
        "status",
    ]);
    for &level in &levels {
        for &epsilon in &epsilons {
            for &t in &ts {
                let cfg = SweepConfig {
                    level,
                    epsilon,
                    t,
                    ns: ns.clone(),
                    budget: args.budget,
                };
                for row in sweep(&source, &spec, &cfg, exec)? {
                    let status = if row.skipped { "skipped" } else { "ok" };
                    table.push(vec![
                        row.n.into(),
                        row.t.into(),
                        row.epsilon.into(),
                        row.distortion.into(),
                        row.lower.into(),
                        row.upper.into(),
                        row.gaussian.into(),
                        row.gap.into(),
                        row.scaled_gap.into(),
                        Cell::Text(status.into()),
                    ]);
                }
            }
        }
    }
    emit(&table, &args.output)
}

fn verify(args: VerifyArgs, exec: Exec) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            SuiteConfig::from_json(&text).with_context(|| path.display().to_string())?
        }
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.negative_control |= args.negative_control;
    let report = run_suite(&cfg, exec)?;
    let mut out = sink(args.out.as_deref())?;
    out.write_all(report.to_json_lines().as_bytes())?;
    out.flush()?;
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for claim in &report.summary.failing_claims {
            eprintln!("failed: {claim}");
        }
        Ok(ExitCode::from(1))
    }
}

fn rd(args: RdArgs, exec: Exec) -> Result<ExitCode> {
    let (source, spec) = load(&args.instance)?;
    let levels = grid::floats("D", &args.level)?;
    if args.output.format == Format::Json {
        let mut rows = Vec::new();
        for &level in &levels {
            rows.push(match rd_at_distortion_with(&source, &spec, level, exec) {
                Ok(sol) => serde_json::to_value(sol)?,
                Err(Error::Domain { .. }) => serde_json::json!({
                    "distortion": level,
                    "rate": rd_value(&source, &spec, level)?,
                }),
                Err(e) => bail!(e),
            });
        }
        let mut out = sink(args.output.out.as_deref())?;
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out)?;
        out.flush()?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut table = Table::new(&["D", "R", "lambda", "V"]);
    for &level in &levels {
        let row: Vec<Cell> = match rd_at_distortion_with(&source, &spec, level, exec) {
            Ok(sol) => vec![
                level.into(),
                sol.rate.into(),
                sol.lambda_star.into(),
                sol.dispersion.into(),
            ],
            // outside (D_min, D_max) only the rate is defined
            Err(Error::Domain { .. }) => {
                let rate: Extended = rd_value(&source, &spec, level)?;
                vec![level.into(), rate.into(), Cell::Empty, Cell::Empty]
            }
            Err(e) => bail!(e),
        };
        table.push(row);
    }
    emit(&table, &args.output)
}
