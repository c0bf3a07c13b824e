//! The `assess` operator tool.
//!
//! Exit codes: 0 on success, 1 when the input is invalid, 2 when a file or
//! the network cannot be used.

pub mod bank_cmd;
pub mod error;
pub mod simulate;
pub mod stats;

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use assess_core::analytics::TTestVariant;
use assess_core::{EducationLevel, SelectionCriteria};
use assess_server::Config;

pub use error::CliError;
use simulate::{Cohort, SimulationPolicy};

#[derive(Debug, Parser)]
#[command(name = "assess", version, about = "Self-assessment platform operator tool")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check, install or write out bank documents.
    Bank {
        #[command(subcommand)]
        action: BankAction,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Run a scripted cohort through selection, grading and profiling.
    Simulate(SimulateArgs),
    /// Score a CSV of SUS questionnaires, ten answers per row.
    Sus { csv: PathBuf },
    /// Two-tailed two-sample t-test over two CSV score files.
    Ttest {
        a: PathBuf,
        b: PathBuf,
        /// Unequal variances (Welch) instead of the pooled test.
        #[arg(long)]
        welch: bool,
    },
}

#[derive(Debug, Args)]
pub struct DataDir {
    #[arg(long, env = "ASSESS_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BankAction {
    /// Validate a bank document.
    Validate { file: PathBuf },
    /// Validate a bank document and install it in the data directory.
    Import {
        file: PathBuf,
        #[command(flatten)]
        dir: DataDir,
    },
    /// Write the data directory's bank to a file in canonical form.
    Export {
        file: PathBuf,
        #[command(flatten)]
        dir: DataDir,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ASSESS_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[command(flatten)]
    pub dir: DataDir,
    /// Key for signing bearer tokens; at least 16 bytes.
    #[arg(long, env = "ASSESS_TOKEN_SECRET", hide_env_values = true)]
    pub token_secret: String,
    /// Admin account created on first start.
    #[arg(long, env = "ASSESS_ADMIN_USER", requires = "admin_password")]
    pub admin_user: Option<String>,
    #[arg(long, env = "ASSESS_ADMIN_PASSWORD", hide_env_values = true)]
    pub admin_password: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub bank: PathBuf,
    /// Selection criteria document, as posted to the sessions endpoint.
    #[arg(long)]
    pub criteria: PathBuf,
    #[arg(long)]
    pub students: usize,
    /// `{"correct_probability": p}` or per difficulty `{"easy": .., "medium": .., "difficult": ..}`.
    #[arg(long)]
    pub policy: PathBuf,
    /// Overrides the policy's seed. Defaults to 0 when neither is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub sessions_per_student: usize,
    #[arg(long, default_value_t = 3)]
    pub education_level: i64,
    /// Also write `learner_id,score` rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    out.write_all(text.as_bytes()).map_err(|e| CliError::Environment(format!("stdout: {e}")))
}

fn run_command(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Bank { action } => {
            let summary = match action {
                BankAction::Validate { file } => bank_cmd::validate(&file)?,
                BankAction::Import { file, dir } => bank_cmd::import(&file, &dir.data_dir)?,
                BankAction::Export { file, dir } => bank_cmd::export(&file, &dir.data_dir)?,
            };
            print_json(out, &summary)
        }
        Command::Serve(args) => serve(args),
        Command::Simulate(args) => {
            let bank = bank_cmd::load(&args.bank)?;
            let criteria: SelectionCriteria = error::read_json(&args.criteria)?;
            let policy: SimulationPolicy = error::read_json(&args.policy)?;
            let education_level = EducationLevel::new(args.education_level).map_err(|e| CliError::domain(e.to_string()))?;
            let cohort = Cohort {
                students: args.students,
                sessions_per_student: args.sessions_per_student,
                seed: args.seed.or(policy.seed).unwrap_or(0),
                education_level,
            };
            let report = simulate::simulate(&bank, &criteria, &policy, &cohort).map_err(CliError::domain)?;
            if let Some(path) = &args.csv {
                error::write_file(path, report.scores_csv().as_bytes())?;
            }
            print_json(out, &report)
        }
        Command::Sus { csv } => print_json(out, &stats::sus(&csv)?),
        Command::Ttest { a, b, welch } => {
            let variant = if welch { TTestVariant::Welch } else { TTestVariant::Pooled };
            print_json(out, &stats::ttest(&a, &b, variant)?)
        }
    }
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    if args.token_secret.len() < 16 {
        return Err(CliError::domain("the token secret must be at least 16 bytes"));
    }
    let config = Config {
        bind: args.bind,
        data_dir: args.dir.data_dir,
        token_secret: args.token_secret.into_bytes(),
        admin: args.admin_user.zip(args.admin_password),
        seed: None,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Environment(e.to_string()))?;
    runtime.block_on(assess_server::serve(config)).map_err(|e| CliError::Environment(e.to_string()))
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
