use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ospgr_core::analysis::{form_groups, GroupingConfig};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{self, Mode};
use crate::http;
use crate::pipeline;
use crate::report::{AnalysisReport, Table};
use crate::service::SessionManager;

#[derive(Debug, Parser)]
#[command(
    name = "ospgr",
    version,
    about = "Simulate, enumerate and analyse one-sided preference games with popularity information"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play RDM-R agents through n rounds and write the session log.
    Simulate(SimulateArgs),
    /// Enumerate every tau-bounded profile and tabulate RDM-R choices.
    Enumerate(EnumerateArgs),
    /// Classify choices and compute chosen rates over session logs.
    Analyze(AnalyzeArgs),
    /// Partition candidates into groups with every tau below a limit.
    FormGroups(FormGroupsArgs),
    /// Expand a complete session log into its virtual groups.
    Reform(ReformArgs),
    /// Run the experiment server.
    Serve(ServeArgs),
    /// Render a table from a saved analysis report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preference file (ospgr-preferences/1); omit to draw random preferences.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Number of players and objects for random preferences.
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    /// Seed for the priority schedule and random preferences.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "object")]
    pub object_type: String,
    #[arg(long)]
    pub session_id: Option<String>,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Largest tau allowed for every player.
    #[arg(long)]
    pub tau_bound: usize,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Session logs (ospgr-session/1).
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Table to print with `--format csv`.
    #[arg(long, value_enum, default_value_t = Table::ChosenRate)]
    pub table: Table,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct FormGroupsArgs {
    /// Candidate preferences (ospgr-preferences/1).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Players per group; defaults to the number of objects.
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Every member's tau must be strictly below this.
    #[arg(long, default_value_t = 3)]
    pub max_tau: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ReformArgs {
    pub log: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "OSPGR_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Finished session logs are written here.
    #[arg(long, env = "OSPGR_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analysis report (ospgr-report/1) written by `analyze` or `enumerate --format json`.
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = Table::ChosenRate)]
    pub table: Table,
    #[command(flatten)]
    pub out: Output,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn mode(lenient: bool) -> Mode {
    if lenient {
        Mode::Lenient
    } else {
        Mode::Strict
    }
}

fn emit(out: &Output, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|k| {
            if n <= 26 {
                ((b'A' + k as u8) as char).to_string()
            } else {
                format!("O{}", k + 1)
            }
        })
        .collect()
}

#[derive(Serialize)]
struct GroupingOutput {
    all_accepted: bool,
    restarts_used: usize,
    max_tau: usize,
    groups: Vec<GroupOutput>,
}

#[derive(Serialize)]
struct GroupOutput {
    members: Vec<String>,
    popularity: Vec<String>,
    popularity_tied: bool,
    taus: Vec<usize>,
    accepted: bool,
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(args) => {
            let prefs = match (&args.input, args.n) {
                (Some(path), _) => format::decode_preferences(&read(path)?, mode(args.lenient))?,
                (None, Some(n)) => {
                    if n < 2 {
                        return Err(Error::Usage("--n must be at least 2".into()));
                    }
                    pipeline::random_preferences(&default_labels(n), n, args.seed, &args.object_type)
                }
                (None, None) => return Err(Error::Usage("either --input or --n is required".into())),
            };
            let id = args.session_id.clone().unwrap_or_else(|| format!("sim-{}", args.seed));
            let log = pipeline::simulate(&prefs, args.seed, &id)?;
            emit(&args.out, &format::encode_session(&log), stdout)
        }
        Command::Enumerate(args) => {
            let result = pipeline::enumerate_parallel(args.n, args.tau_bound, args.threads)?;
            let report = pipeline::enumeration_report(&result);
            let text = match args.format {
                Format::Csv => report.render(Table::ChosenRate)?,
                Format::Json => report.to_json(),
            };
            emit(&args.out, &text, stdout)
        }
        Command::Analyze(args) => {
            let logs = args
                .logs
                .iter()
                .map(|p| format::decode_session(&read(p)?, mode(args.lenient)))
                .collect::<Result<Vec<_>>>()?;
            let report = pipeline::analyze(&logs)?;
            let text = match args.format {
                Format::Csv => report.render(args.table)?,
                Format::Json => report.to_json(),
            };
            emit(&args.out, &text, stdout)
        }
        Command::FormGroups(args) => {
            let prefs = format::decode_preferences(&read(&args.input)?, mode(args.lenient))?;
            let config = GroupingConfig {
                group_size: args.group_size.unwrap_or(prefs.object_labels.len()),
                max_tau: args.max_tau,
                seed: args.seed,
                restarts: args.restarts,
            };
            let grouping = form_groups(&prefs.rows(), &config)?;
            let output = GroupingOutput {
                all_accepted: grouping.all_accepted(),
                restarts_used: grouping.restarts_used,
                max_tau: args.max_tau,
                groups: grouping
                    .groups
                    .iter()
                    .map(|g| GroupOutput {
                        members: g.members.iter().map(|&m| prefs.players[m].id.clone()).collect(),
                        popularity: g
                            .popularity
                            .objects_in_rank_order()
                            .into_iter()
                            .map(|o| prefs.object_labels[o].clone())
                            .collect(),
                        popularity_tied: g.popularity.has_ties(),
                        taus: g.taus.clone(),
                        accepted: g.accepted,
                    })
                    .collect(),
            };
            emit(&args.out, &to_json(&output), stdout)
        }
        Command::Reform(args) => {
            let log = format::decode_session(&read(&args.log)?, mode(args.lenient))?;
            let rows = pipeline::reform_rows(&log)?;
            let text = match args.format {
                Format::Json => to_json(&rows),
                Format::Csv => {
                    let mut w = csv::WriterBuilder::new()
                        .terminator(csv::Terminator::Any(b'\n'))
                        .from_writer(Vec::new());
                    for row in &rows {
                        w.serialize(row)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| Error::Usage(e.to_string()))?)
                        .expect("csv output is utf-8")
                }
            };
            emit(&args.out, &text, stdout)
        }
        Command::Serve(args) => {
            let runtime = tokio::runtime::Runtime::new().map_err(|source| Error::Io {
                path: "<runtime>".into(),
                source,
            })?;
            runtime
                .block_on(http::serve(&args.bind, SessionManager::new(args.data_dir)))
                .map_err(|source| Error::Io {
                    path: args.bind,
                    source,
                })
        }
        Command::Report(args) => {
            let report = AnalysisReport::from_json(&read(&args.report)?)?;
            emit(&args.out, &report.render(args.table)?, stdout)
        }
    }
}

/// Runs the tool and returns the process exit code: 0 on success, 1 for
/// data or validation errors, 2 for usage errors. Failures are reported as
/// one JSON line on `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            let line = serde_json::json!({ "error": "usage", "message": e.kind().to_string() });
            let _ = writeln!(stderr, "{line}");
            return 2;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            let _ = writeln!(stderr, "{line}");
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}
