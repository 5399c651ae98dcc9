//! Command-line entry points for the propensity goodness-of-fit tests.
//!
//! Subcommands: `fit` estimates the null model and prints the coefficient
//! table, `test` additionally runs the residual goodness-of-fit test with
//! the requested calibration, and `simulate` runs one Monte-Carlo study
//! cell. Exit codes are scriptable: 0 on success without rejection, 2 when
//! a test rejects at the configured level, 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nmar_gof::sim::{run_study, scenario, Scenario};
use nmar_gof::{bootstrap_test, plugin_test, Error, OutcomeFamily};
use nmar_gof_cli::config::{Method, RunConfig};
use nmar_gof_cli::csv_io::load_csv;
use nmar_gof_cli::report::{
    build_report, human_summary, study_table, to_json_string, StudyConfig, StudyReport,
    SCHEMA_VERSION,
};

#[derive(Debug, Parser)]
#[command(
    name = "nmar-gof",
    version,
    about = "Goodness-of-fit tests for a logistic propensity model with nonignorably missing outcomes"
)]
struct Cli {
    /// Worker threads for bootstrap and simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that reads a CSV file.
#[derive(Debug, clap::Args)]
struct DataArgs {
    /// CSV file with a header row; empty or NA outcome cells mean missing.
    #[arg(long)]
    data: PathBuf,
    /// Header name of the outcome column.
    #[arg(long)]
    outcome: String,
    /// Outcome family: bernoulli, normal, or gamma.
    #[arg(long, value_parser = parse_family)]
    family: OutcomeFamily,
    /// Comma-separated header names entering the propensity model.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    propensity_cols: Vec<String>,
    /// Comma-separated header names entering the outcome regression.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    outcome_cols: Vec<String>,
    /// Where to write the JSON report (omit to print the summary only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the null model by maximum likelihood and report the coefficients.
    Fit {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit the null model and test its goodness of fit.
    Test {
        #[command(flatten)]
        data: DataArgs,
        /// Calibration to run: plugin, bootstrap, or both.
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Significance level of the decision.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bootstrap replicates.
        #[arg(long, default_value_t = 500)]
        boot_reps: usize,
        /// Root seed; all randomness flows from it through named streams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one Monte-Carlo study cell and write its rejection-rate summary.
    Simulate {
        /// Example number: 1 (Bernoulli), 2 (Normal), or 3 (Gamma).
        #[arg(long)]
        example: u8,
        /// Scenario label: I, II, III, IV, or V.
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Sample size per replication.
        #[arg(long)]
        n: usize,
        /// Number of replications.
        #[arg(long)]
        reps: usize,
        /// Bootstrap replicates per replication.
        #[arg(long, default_value_t = 200)]
        boot_reps: usize,
        /// Significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Root seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the JSON summary.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_family(s: &str) -> Result<OutcomeFamily, String> {
    s.parse::<OutcomeFamily>().map_err(|e| e.to_string())
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse::<Scenario>().map_err(|e| e.to_string())
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn run_fit(data: DataArgs) -> Result<u8, Error> {
    let cfg = RunConfig {
        data_path: data.data.clone(),
        outcome_col: data.outcome,
        propensity_cols: data.propensity_cols,
        outcome_cols: data.outcome_cols,
        family: data.family,
        method: Method::Both,
        alpha: 0.05,
        boot_reps: 500,
        seed: 0,
        output_path: data.out,
    };
    cfg.validate()?;
    let dataset = load_csv(&cfg.data_path, &cfg)?;
    // plugin_test at level a is fit + statistic; a fit-only run reuses it
    // with the test fields suppressed in the report.
    let fit = nmar_gof::fit_mle(&dataset, cfg.family, &nmar_gof::FitOptions::default())?;
    let gof = nmar_gof::GofReport {
        t_n: f64::NAN,
        delta_hat: f64::NAN,
        sigma_hat: None,
        plugin_p: None,
        plugin_reject: None,
        fit,
        n: dataset.n(),
        alpha: cfg.alpha,
    };
    let report = build_report(&cfg, &dataset, &gof, None, false);
    if let Some(path) = &cfg.output_path {
        write_file(path, &to_json_string(&report))?;
    }
    print!("{}", human_summary(&report));
    Ok(0)
}

fn run_test(
    data: DataArgs,
    method: Method,
    alpha: f64,
    boot_reps: usize,
    seed: u64,
) -> Result<u8, Error> {
    let cfg = RunConfig {
        data_path: data.data.clone(),
        outcome_col: data.outcome,
        propensity_cols: data.propensity_cols,
        outcome_cols: data.outcome_cols,
        family: data.family,
        method,
        alpha,
        boot_reps,
        seed,
        output_path: data.out,
    };
    cfg.validate()?;
    let dataset = load_csv(&cfg.data_path, &cfg)?;
    let (report, reject) = match cfg.method {
        Method::Plugin => {
            let gof = plugin_test(&dataset, cfg.family, cfg.alpha)?;
            let reject = gof.plugin_reject.unwrap_or(false);
            (build_report(&cfg, &dataset, &gof, None, true), reject)
        }
        Method::Bootstrap | Method::Both => {
            let (gof, boot) = bootstrap_test(&dataset, cfg.family, cfg.alpha, cfg.boot_reps, cfg.seed)?;
            // With both calibrations in one run, the decision (and exit
            // code) follows the bootstrap, the better-calibrated test.
            let reject = boot.reject;
            (build_report(&cfg, &dataset, &gof, Some(&boot), true), reject)
        }
    };
    if let Some(path) = &cfg.output_path {
        write_file(path, &to_json_string(&report))?;
    }
    print!("{}", human_summary(&report));
    Ok(if reject { 2 } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    example: u8,
    sc: Scenario,
    n: usize,
    reps: usize,
    boot_reps: usize,
    alpha: f64,
    seed: u64,
    out: PathBuf,
) -> Result<u8, Error> {
    if boot_reps == 0 {
        return Err(Error::InvalidInput("bootstrap replicate count must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "significance level must be in (0,1), got {alpha}"
        )));
    }
    let spec = scenario(example, sc)?;
    let summary = run_study(&spec, n, reps, boot_reps, alpha, seed)?;
    eprintln!("study finished in {:.1} s", summary.runtime.as_secs_f64());
    let report = StudyReport {
        schema: SCHEMA_VERSION.to_string(),
        config: StudyConfig {
            example,
            scenario: sc.to_string(),
            n,
            reps,
            boot_reps,
            alpha,
            seed,
        },
        summary,
    };
    write_file(&out, &to_json_string(&report))?;
    print!("{}", study_table(&report));
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("thread count must be at least 1".into()));
        }
        // Ignore the error from a pool that already exists (tests call
        // dispatch more than once in-process); the command-line binary sets
        // it exactly once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Fit { data } => run_fit(data),
        Command::Test { data, method, alpha, boot_reps, seed } => {
            run_test(data, method, alpha, boot_reps, seed)
        }
        Command::Simulate { example, scenario, n, reps, boot_reps, alpha, seed, out } => {
            run_simulate(example, scenario, n, reps, boot_reps, alpha, seed, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outputs; anything else is a
            // usage error, reported on the error exit code 1 (2 is reserved
            // for a test rejection).
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
