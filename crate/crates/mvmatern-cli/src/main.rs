//! Command-line front end: fit a model to a CSV dataset, sweep the
//! ordering/neighbor grid, or compare free and zero cross-nugget fits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mvmatern::{
    fisher_scoring, load_dataset, model_family, starting_values, ColumnSpec, FitConfig, FitResult,
    LoadReport, ModelFamily, SpatialDataset, StopReason, VecchiaPlan, MODEL_FAMILY_NAMES,
};

#[derive(Parser)]
#[command(
    name = "mvmatern",
    about = "Multivariate Matérn Gaussian-process fitting on spatial CSV data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model family and report parameter estimates.
    Fit(FitArgs),
    /// Fit across the ordering/neighbor grid at m = 20 and 40.
    Benchmark(BenchmarkArgs),
    /// Compare fits with a free vs forced-zero cross nugget.
    NuggetStudy(NuggetStudyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV file with a header row.
    input: PathBuf,
    /// Comma-separated coordinate column names.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["x".to_string(), "y".to_string()])]
    x_cols: Vec<String>,
    /// Component label column name.
    #[arg(long, default_value = "comp")]
    component_col: String,
    /// Response column name.
    #[arg(long, default_value = "value")]
    response_col: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family: independent, parsimonious, flexible-a, flexible-e, unconstrained.
    #[arg(long)]
    model: String,
    /// Ordering scheme: random, component, cycle.
    #[arg(long, default_value = "random")]
    ordering: String,
    /// Neighbor rule: any, balanced, preferential.
    #[arg(long, default_value = "any")]
    neighbors: String,
    /// Neighbor budget.
    #[arg(short, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on accepted scoring iterations.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Force the co-located cross nugget to zero.
    #[arg(long)]
    zero_cross_nugget: bool,
    /// Write the fit result as JSON to this path.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model families to sweep (repeatable); defaults to all five.
    #[arg(long)]
    model: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    zero_cross_nugget: bool,
}

#[derive(Args)]
struct NuggetStudyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family; must support a cross nugget.
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "random")]
    ordering: String,
    #[arg(long, default_value = "any")]
    neighbors: String,
    #[arg(short, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iter: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => fit_command(args),
        Command::Benchmark(args) => benchmark_command(args),
        Command::NuggetStudy(args) => nugget_study_command(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn column_spec(data: &DataArgs) -> ColumnSpec {
    ColumnSpec {
        x_cols: data.x_cols.clone(),
        component_col: data.component_col.clone(),
        response_col: data.response_col.clone(),
    }
}

fn load(data: &DataArgs) -> Result<SpatialDataset> {
    let report = load_dataset(&data.input, &column_spec(data))
        .with_context(|| format!("loading {}", data.input.display()))?;
    describe(&data.input, &report);
    Ok(report.dataset)
}

fn describe(path: &Path, report: &LoadReport) {
    let d = &report.dataset;
    println!(
        "{}: {} observations, {} components, d={} ({} missing rows dropped, {} duplicates removed)",
        path.display(),
        d.len(),
        d.n_components(),
        d.dim(),
        report.dropped_missing,
        report.dropped_duplicates
    );
}

fn fit_config(max_iter: Option<usize>, seed: u64) -> FitConfig {
    let mut config = FitConfig {
        seed,
        ..FitConfig::default()
    };
    if let Some(cap) = max_iter {
        config.max_iter = cap;
    }
    config
}

fn run_fit(
    dataset: &SpatialDataset,
    model: &dyn ModelFamily,
    ordering: &str,
    neighbors: &str,
    m: usize,
    config: &FitConfig,
) -> Result<FitResult> {
    let plan = VecchiaPlan::build(dataset, ordering, neighbors, m, config.seed)?;
    let start = starting_values(dataset, model, &plan)?;
    for label in &start.fallback_components {
        eprintln!("warning: marginal fit for component {label:?} failed; using moment heuristics");
    }
    Ok(fisher_scoring(
        dataset,
        &plan,
        model,
        start.theta.as_slice(),
        config,
    )?)
}

/// Parameter names and values in table order: the lower triangle of each
/// block, row by row, named with the smaller component index first.
fn parameter_rows(fit: &FitResult) -> Vec<(String, f64)> {
    let p = fit.params.p;
    let mut rows = Vec::new();
    for (name, matrix) in [
        ("sigma", &fit.params.sigma),
        ("alpha", &fit.params.alpha),
        ("nu", &fit.params.nu),
        ("tau", &fit.params.tau),
    ] {
        for i in 0..p {
            for j in 0..=i {
                rows.push((format!("{}_{}{}", name, j + 1, i + 1), matrix[(i, j)]));
            }
        }
    }
    rows
}

fn exit_code_for(fit: &FitResult) -> ExitCode {
    match fit.stop_reason {
        StopReason::StepGradTol => ExitCode::SUCCESS,
        StopReason::MaxIter | StopReason::GradientStall => ExitCode::from(2),
    }
}

fn fit_command(args: FitArgs) -> Result<ExitCode> {
    let dataset = load(&args.data)?;
    let model = model_family(&args.model, args.zero_cross_nugget)?;
    let config = fit_config(args.max_iter, args.seed);
    let fit = run_fit(
        &dataset,
        model.as_ref(),
        &args.ordering,
        &args.neighbors,
        args.m,
        &config,
    )?;
    println!(
        "model={} ordering={} neighbors={} m={} seed={}",
        args.model, args.ordering, args.neighbors, args.m, args.seed
    );
    println!();
    for (name, value) in parameter_rows(&fit) {
        println!("  {name:<10} {value:>14.6}");
    }
    println!();
    println!("  {:<11} {:>14.4}", "loglik", fit.loglik);
    println!("  {:<11} {:>14}", "iterations", fit.iterations);
    println!("  {:<11} {:>14}", "stop_reason", stop_label(fit.stop_reason));
    println!("  {:<11} {:>14.2}", "seconds", fit.seconds);
    if let Some(path) = &args.output {
        std::fs::write(path, fit.to_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(exit_code_for(&fit))
}

fn stop_label(reason: StopReason) -> &'static str {
    match reason {
        StopReason::StepGradTol => "step_grad_tol",
        StopReason::MaxIter => "max_iter",
        StopReason::GradientStall => "gradient_stall",
    }
}

struct BenchmarkCell {
    ordering: &'static str,
    neighbors: &'static str,
    m: usize,
    model: String,
    outcome: Result<FitResult, mvmatern::Error>,
}

fn benchmark_command(args: BenchmarkArgs) -> Result<ExitCode> {
    let dataset = load(&args.data)?;
    let families = if args.model.is_empty() {
        MODEL_FAMILY_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.model.clone()
    };
    // Validate names up front so a typo fails before hours of fitting.
    for name in &families {
        model_family(name, args.zero_cross_nugget)?;
    }
    let mut cells = Vec::new();
    let mut cell_index = 0u64;
    for ordering in ["random", "component", "cycle"] {
        for neighbors in ["any", "balanced", "preferential"] {
            for m in [20, 40] {
                for name in &families {
                    let model = model_family(name, args.zero_cross_nugget)?;
                    let config = fit_config(args.max_iter, args.seed.wrapping_add(cell_index));
                    cell_index += 1;
                    let outcome = run_fit(
                        &dataset,
                        model.as_ref(),
                        ordering,
                        neighbors,
                        m,
                        &config,
                    )
                    .map_err(|e| match e.downcast::<mvmatern::Error>() {
                        Ok(lib) => lib,
                        Err(other) => mvmatern::Error::Domain {
                            op: "benchmark",
                            message: other.to_string(),
                        },
                    });
                    cells.push(BenchmarkCell {
                        ordering,
                        neighbors,
                        m,
                        model: name.clone(),
                        outcome,
                    });
                }
            }
        }
    }
    let best = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .map(|f| f.loglik)
        .fold(f64::NEG_INFINITY, f64::max);
    println!();
    println!(
        "{:<10} {:<13} {:>3}  {:<14} {:>12} {:>11}",
        "ordering", "neighbors", "m", "model", "loglik_diff", "iterations"
    );
    for cell in &cells {
        match &cell.outcome {
            Ok(fit) => println!(
                "{:<10} {:<13} {:>3}  {:<14} {:>12.4} {:>11}",
                cell.ordering,
                cell.neighbors,
                cell.m,
                cell.model,
                fit.loglik - best,
                fit.iterations
            ),
            Err(e) => println!(
                "{:<10} {:<13} {:>3}  {:<14} {:>12} {:>11}  ({e})",
                cell.ordering, cell.neighbors, cell.m, cell.model, "failed", "-"
            ),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn nugget_study_command(args: NuggetStudyArgs) -> Result<ExitCode> {
    let free_model = model_family(&args.model, false)?;
    if !free_model.has_cross_nugget() {
        bail!(
            "model family {:?} has no cross nugget to study; pick one of parsimonious, \
             flexible-a, flexible-e, unconstrained",
            args.model
        );
    }
    let dataset = load(&args.data)?;
    let config = fit_config(args.max_iter, args.seed);
    let free = run_fit(
        &dataset,
        free_model.as_ref(),
        &args.ordering,
        &args.neighbors,
        args.m,
        &config,
    )?;
    let zero_model = model_family(&args.model, true)?;
    let zero = run_fit(
        &dataset,
        zero_model.as_ref(),
        &args.ordering,
        &args.neighbors,
        args.m,
        &config,
    )?;
    let rows_free = parameter_rows(&free);
    let rows_zero = parameter_rows(&zero);
    println!();
    print!("{:<14}", "cross_nugget");
    for (name, _) in &rows_free {
        print!(" {name:>10}");
    }
    println!(" {:>12}", "loglik");
    print!("{:<14}", "free");
    for (_, value) in &rows_free {
        print!(" {value:>10.4}");
    }
    println!(" {:>12.4}", free.loglik);
    print!("{:<14}", "zero");
    for (_, value) in &rows_zero {
        print!(" {value:>10.4}");
    }
    println!(" {:>12.4}", zero.loglik);
    println!();
    println!(
        "loglik difference (free - zero): {:.4}",
        free.loglik - zero.loglik
    );
    if free.converged && zero.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}
