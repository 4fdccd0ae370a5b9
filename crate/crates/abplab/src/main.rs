use std::path::PathBuf;
use std::process::ExitCode;

use abplab::config::{Config, Suite, SUITE_NAMES};
use abplab::forms::{BoundaryForm, FForm};
use abplab::reportio::{write_report_json, write_summary_csv, RunReport};
use abplab::suites::{run_config, run_suite};
use abplab_core::operators::PolyOperator;
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "abplab",
    about = "Verification suites and relaxation solvers for Garding-Dirichlet operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites listed in a config file and write JSON + CSV reports
    Run(RunArgs),
    /// Inspect the operator catalog
    Ops(OpsArgs),
    /// Solve one Dirichlet problem on a rectangle and dump the grid
    Solve(SolveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the config file
    config: PathBuf,
    /// Run suites on one thread each instead of sequentially
    #[arg(long)]
    parallel: bool,
    /// Override the config's JSON report path
    #[arg(long)]
    report: Option<PathBuf>,
    /// Override the config's CSV summary path
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct OpsArgs {
    #[command(subcommand)]
    command: OpsCommand,
}

#[derive(Subcommand)]
enum OpsCommand {
    /// Print the recognized operator forms with examples
    List,
}

#[derive(Args)]
struct SolveArgs {
    /// Operator spec, e.g. det:n=2 or trace:n=2
    #[arg(long)]
    op: String,
    /// Right-hand side, e.g. const:1, gauss:1,0.5, poly:0,1
    #[arg(long, default_value = "const:1")]
    f: String,
    /// Boundary data: halfnormsq, normsq, ridge, harmonic, zero
    #[arg(long, default_value = "halfnormsq")]
    boundary: String,
    /// Nodes per axis
    #[arg(long, default_value_t = 65)]
    shape: usize,
    /// Domain rectangle as x0,y0,x1,y1
    #[arg(long = "box", value_name = "X0,Y0,X1,Y1", default_value = "0,0,1,1")]
    boxed: String,
    /// Residual tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Sweep budget
    #[arg(long, default_value_t = 40_000)]
    max_iter: usize,
    /// Allow the generic cone-bracketed scheme for operators without a
    /// dedicated stencil
    #[arg(long)]
    experimental: bool,
    /// CSV output path for the solution grid
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match cmd_run(args) {
            Ok(all_passed) => {
                if all_passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Command::Ops(args) => {
            match args.command {
                OpsCommand::List => print_ops(),
            }
            ExitCode::SUCCESS
        }
        Command::Solve(args) => match cmd_solve(args) {
            Ok(converged) => {
                if converged {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = Config::parse(&text)?;
    if let Ok(seed) = std::env::var("ABPLAB_SEED") {
        cfg.seed = seed
            .parse()
            .map_err(|_| anyhow!("ABPLAB_SEED must be a u64, got {seed:?}"))?;
    }
    if cfg.suites.is_empty() {
        return Err(anyhow!(
            "config lists no suites; add at least one [section] out of: {}",
            SUITE_NAMES.join(", ")
        ));
    }
    if let Some(p) = args.report {
        cfg.report_path = p;
    }
    if let Some(p) = args.summary {
        cfg.summary_path = p;
    }
    let reports = run_config(&cfg, args.parallel)?;
    let run = RunReport::new(cfg.resolved_text(), reports);
    for r in &run.reports {
        let status = if r.passed { "pass" } else { "FAIL" };
        let skip = r
            .skipped
            .as_deref()
            .map(|s| format!(" (skipped: {s})"))
            .unwrap_or_default();
        println!(
            "{status}  {:<12} {:<28} samples={} min_slack={:.3e}{skip}",
            r.suite, r.operator, r.samples, r.min_slack
        );
    }
    write_report_json(&run, &cfg.report_path)?;
    write_summary_csv(&run.reports, &cfg.summary_path)?;
    println!(
        "{} of {} suites passed; reports in {} and {}",
        run.reports.iter().filter(|r| r.passed).count(),
        run.reports.len(),
        cfg.report_path.display(),
        cfg.summary_path.display()
    );
    Ok(run.all_passed)
}

fn print_ops() {
    println!("operator spec forms (n is the matrix dimension):");
    println!("  det:n=N              determinant");
    println!("  sigma:k=K,n=N        k-th elementary symmetric polynomial of the eigenvalues");
    println!("  pfold:p=P,n=N        product of all p-fold eigenvalue sums");
    println!("  trace:n=N            trace (plain Laplacian)");
    println!("  normsqdet:n=N        |A|^2 det(A), elliptic on the PSD cone only");
    println!("  prod(S1,S2)          product of two operator specs on the same dimension");
    println!("  rderiv(S,l=L)        l-th directional derivative of S along the identity");
    println!();
    for spec in [
        "det:n=2",
        "det:n=3",
        "sigma:k=2,n=3",
        "pfold:p=2,n=3",
        "trace:n=2",
        "normsqdet:n=2",
        "prod(det:n=2,sigma:k=1,n=2)",
        "rderiv(det:n=3,l=1)",
    ] {
        match PolyOperator::parse(spec) {
            Ok(g) => println!(
                "  {:<28} degree {:>2}, g(I) = {}",
                g.spec_str(),
                g.degree(),
                g.value_at_identity()
            ),
            Err(e) => println!("  {spec:<28} error: {e}"),
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<bool> {
    let operator = PolyOperator::parse(&args.op)?;
    let boxed = parse_box(&args.boxed)?;
    let center = [
        0.5 * (boxed[0] + boxed[2]),
        0.5 * (boxed[1] + boxed[3]),
    ];
    let f = FForm::parse(&args.f, &center)?;
    let boundary = BoundaryForm::parse(&args.boundary)?;
    let suite = Suite::Solve {
        operator,
        f,
        boundary,
        shape: args.shape,
        boxed,
        tol: args.tol,
        max_iter: args.max_iter,
        out: args.out,
        experimental: args.experimental,
    };
    let reports = run_suite(&suite, 0)?;
    let r = &reports[0];
    for note in &r.notes {
        println!("{note}");
    }
    Ok(r.passed)
}

fn parse_box(text: &str) -> Result<[f64; 4]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("--box expects four numbers x0,y0,x1,y1, got {text:?}"))?;
    if parts.len() != 4 {
        return Err(anyhow!("--box expects four numbers, got {}", parts.len()));
    }
    if parts[0] >= parts[2] || parts[1] >= parts[3] {
        return Err(anyhow!("--box needs x0 < x1 and y0 < y1"));
    }
    Ok([parts[0], parts[1], parts[2], parts[3]])
}
