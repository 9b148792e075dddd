//! Command-line front end: dataset ingestion, ensemble construction,
//! posterior optimization, verification and reporting.
//!
//! Exit codes: 0 success, 2 input/validation problems, 1 anything else
//! (including failed verification checks).

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chi2pb::experiment::{cross_validate, CvReport};
use chi2pb::experiment::{
    read_profile_csv, run_pipeline, write_profile_csv, write_report_json, write_table2_csv,
    write_table5_csv, RunSettings,
};
use chi2pb::opt::ordered_subset_search;
use chi2pb::svm::{lambda_grid, load_csv, split_dataset};
use chi2pb::{make_risk_profile, BoundConfig, Distance, Error, Prior};

/// Worker-count override; falls back to the rayon default when unset.
const WORKERS_ENV: &str = "CHI2PB_WORKERS";

#[derive(Parser)]
#[command(
    name = "chi2pb",
    about = "Chi-squared PAC-Bayes posteriors over SVM ensembles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: ingest, train the lambda ensemble, optimize
    /// posteriors, run the CV baseline, write reports.
    Run(RunArgs),
    /// Optimize posteriors over a previously exported risk profile.
    Optimize(OptimizeArgs),
    /// Run the golden-value self checks.
    Verify,
    /// Cross-validation baseline only.
    Cv(CvArgs),
    /// Print the regularization grid.
    Grid {
        /// Keep only the h smallest values.
        #[arg(long)]
        h: Option<usize>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// CSV dataset with a header row.
    #[arg(long)]
    dataset: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label_column: String,
    /// Label value mapped to +1; everything else maps to -1.
    #[arg(long)]
    positive_label: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Ensemble size; defaults to the full grid.
    #[arg(long)]
    h: Option<usize>,
    /// Comma-separated subset of lin,sq,kl.
    #[arg(long, value_delimiter = ',', default_values_t = ["lin".to_string(), "sq".to_string(), "kl".to_string()])]
    distances: Vec<String>,
    #[arg(long, default_value_t = false)]
    enable_ccp: bool,
    #[arg(long, default_value_t = 1000)]
    ccp_starts: usize,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Skip the cross-validation baseline.
    #[arg(long, default_value_t = false)]
    no_cv: bool,
}

#[derive(clap::Args)]
struct OptimizeArgs {
    /// Risk-profile CSV exported by `run`.
    #[arg(long)]
    profile: PathBuf,
    /// Validation sample size the risks were computed on.
    #[arg(long)]
    m: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    distance: String,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(clap::Args)]
struct CvArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    label_column: String,
    #[arg(long)]
    positive_label: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var(WORKERS_ENV) {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Verify => return verify::cmd_verify(),
        Command::Cv(args) => cmd_cv(args),
        Command::Grid { h } => cmd_grid(h),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Input and validation problems exit with 2, everything else with 1.
fn classify(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::MissingLabelColumn(_)
            | Error::SingleClass
            | Error::DatasetTooSmall { .. }
            | Error::EmptyInput
            | Error::MalformedProfile(_)
            | Error::InvalidDelta(_)
            | Error::RiskOutOfRange(_)
            | Error::GridTooSmall { .. }
            | Error::Csv(_)
            | Error::Io(_),
        ) => 2,
        _ => 1,
    }
}

fn parse_distances(names: &[String]) -> anyhow::Result<Vec<Distance>> {
    let mut out = Vec::new();
    for name in names {
        let d: Distance = name.parse().map_err(anyhow::Error::msg)?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if out.is_empty() {
        anyhow::bail!("at least one distance is required");
    }
    Ok(out)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let dataset = load_csv(&args.dataset, &args.label_column, &args.positive_label)?;
    let settings = RunSettings {
        seed: args.seed,
        delta: args.delta,
        h: args.h,
        distances: parse_distances(&args.distances)?,
        enable_ccp: args.enable_ccp,
        ccp_starts: args.ccp_starts,
        run_cv: !args.no_cv,
        cv_folds: 5,
    };
    if !(settings.delta > 0.0 && settings.delta < 1.0) {
        return Err(Error::InvalidDelta(settings.delta).into());
    }
    std::fs::create_dir_all(&args.output_dir)?;
    let (report, ensemble) = run_pipeline(&dataset, &settings)?;

    write_report_json(&args.output_dir.join("report.json"), &report)?;
    write_table2_csv(&args.output_dir.join("table2.csv"), &report)?;
    write_table5_csv(&args.output_dir.join("table5.csv"), &report)?;
    write_profile_csv(&args.output_dir.join("risk_profile.csv"), &ensemble)?;

    println!(
        "dataset {} | H = {} | m/v/t = {}/{}/{}",
        report.dataset, report.h, report.m, report.v, report.t
    );
    for m in &report.methods {
        match m.bound {
            Some(b) => println!(
                "  {:<6} bound {:.5}  test error {:.5}  support {}  hhi {:.4}  [{:.2}s]",
                m.method, b, m.gibbs_test_error, m.support_size, m.hhi, m.wall_time_s
            ),
            None => println!(
                "  {:<6} test error {:.5}  support {}  hhi {:.4}  [{:.2}s]",
                m.method, m.gibbs_test_error, m.support_size, m.hhi, m.wall_time_s
            ),
        }
    }
    if let Some(cv) = &report.cv {
        println!(
            "  cv     lambda* {}  cv error {:.5}  test error {:.5}  [{:.2}s]",
            cv.best_lambda, cv.cv_error, cv.test_error, cv.wall_time_s
        );
    }
    if !report.failures.is_empty() {
        for (method, why) in &report.failures {
            eprintln!("  {method} failed: {why}");
        }
        anyhow::bail!("{} method(s) failed", report.failures.len());
    }
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> anyhow::Result<()> {
    let distance: Distance = args.distance.parse().map_err(anyhow::Error::msg)?;
    let rows = read_profile_csv(&args.profile)?;
    let risks: Vec<f64> = rows.iter().map(|r| r.valid_risk).collect();
    let labels: Vec<String> = rows.iter().map(|r| format!("{}", r.lambda)).collect();
    let profile = make_risk_profile(&risks, args.m, labels)?;
    let cfg = BoundConfig::new(distance, args.m, args.delta, Prior::uniform(profile.h()))?;
    let sol = ordered_subset_search(&profile, &cfg)?;
    let q = sol.posterior.as_ref().expect("search result is feasible");
    let bound = sol.bound_val().expect("feasible result has a bound");

    println!(
        "distance {} | H = {} | H* = {} | bound {:.6}",
        distance.as_str(),
        profile.h(),
        sol.h_prime,
        bound
    );
    println!("top weights (lambda, weight):");
    for i in 0..sol.h_prime.min(10) {
        println!("  {:>12}  {:.6}", profile.labels()[i], q.weights()[i]);
    }

    std::fs::create_dir_all(&args.output_dir)?;
    let out = args
        .output_dir
        .join(format!("posterior_{}.csv", distance.as_str()));
    let mut body = String::from("lambda,weight\n");
    for (label, &w) in profile.labels().iter().zip(q.weights()) {
        body.push_str(&format!("{label},{w:.16e}\n"));
    }
    std::fs::write(&out, body)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_cv(args: CvArgs) -> anyhow::Result<()> {
    let dataset = load_csv(&args.dataset, &args.label_column, &args.positive_label)?;
    let plan = split_dataset(&dataset, args.seed)?;
    let z = dataset.standardized_on(&plan.composite());
    let lambdas = lambda_grid(args.h)?;
    let report: CvReport = cross_validate(&z, &plan, &lambdas, args.folds, args.seed)?;
    println!(
        "cv: lambda* {}  cv error {:.5}  test error {:.5}  [{:.2}s]",
        report.best_lambda, report.cv_error, report.test_error, report.wall_time_s
    );
    Ok(())
}

fn cmd_grid(h: Option<usize>) -> anyhow::Result<()> {
    use std::io::Write;
    let grid = lambda_grid(h)?;
    // stop quietly when the consumer hangs up (e.g. piped into `head`)
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if writeln!(out, "# {} values", grid.len()).is_err() {
        return Ok(());
    }
    for v in grid {
        if writeln!(out, "{v}").is_err() {
            return Ok(());
        }
    }
    Ok(())
}
