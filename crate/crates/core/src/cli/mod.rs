//! Command-line surface.
//!
//! Every subcommand produces one primary table (printed to stdout) and,
//! with `--out DIR`, writes that table, any auxiliary files and a
//! `manifest.json` into `DIR`. Exit codes: 0 success, 1 usage error, 2 data
//! error.

mod commands;
mod manifest;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{load_corpus, Corpus, LoadOptions, YearRange};
use crate::journal::{DenominatorPolicy, SelfCitationPolicy};

pub use manifest::{sha256_hex, FileDigest, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "citestat",
    version,
    about = "Citation statistics with their uncertainty"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus in JSON-lines format.
    #[arg(long)]
    pub input: PathBuf,
    /// Reject records with unknown fields.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for output files and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DenominatorArg {
    Substantive,
    All,
}

impl From<DenominatorArg> for DenominatorPolicy {
    fn from(a: DenominatorArg) -> Self {
        match a {
            DenominatorArg::Substantive => DenominatorPolicy::SubstantiveOnly,
            DenominatorArg::All => DenominatorPolicy::AllItems,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SelfCitesArg {
    Include,
    Exclude,
}

impl From<SelfCitesArg> for SelfCitationPolicy {
    fn from(a: SelfCitesArg) -> Self {
        match a {
            SelfCitesArg::Include => SelfCitationPolicy::Include,
            SelfCitesArg::Exclude => SelfCitationPolicy::ExcludeSameJournal,
        }
    }
}

#[derive(Debug, Args)]
pub struct IfArgs {
    /// Impact-factor window in years.
    #[arg(long, default_value_t = 2)]
    pub window: u32,
    #[arg(long, value_enum, default_value = "substantive")]
    pub denominator: DenominatorArg,
    #[arg(long = "self-cites", value_enum, default_value = "include")]
    pub self_cites: SelfCitesArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    #[value(name = "core-points", alias = "example1")]
    CorePoints,
    #[value(name = "tier-points", alias = "example2")]
    TierPoints,
    #[value(name = "weighted-if", alias = "example3")]
    WeightedIf,
}

#[derive(Debug, Args)]
pub struct SynthSource {
    /// Synthetic config as a JSON document.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in config (`math`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and write it back normalized.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Report data-integrity counts.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Impact factors for one census year.
    JournalIf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        census_year: i32,
        #[command(flatten)]
        policy: IfArgs,
        /// Restrict to these journals (repeatable); all journals otherwise.
        #[arg(long)]
        journal: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Age profile of the citations made in a census year.
    JournalProfile {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        census_year: i32,
        #[arg(long)]
        journal: Option<String>,
        /// Window used for the coverage figure.
        #[arg(long, default_value_t = 2)]
        window: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// h, g and m indices per author.
    AuthorIndex {
        #[command(flatten)]
        input: InputArgs,
        /// Evaluation year for the m-index; latest corpus year by default.
        #[arg(long)]
        census_year: Option<i32>,
        /// Only count citations made in these years (`2005` or `2000:2004`).
        #[arg(long)]
        citing_years: Option<YearRange>,
        #[arg(long)]
        author: Vec<String>,
        /// Also write per-author citation histograms as JSON.
        #[arg(long)]
        histograms: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact probability that an article of A is cited at least as often as one of B.
    Compare {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        #[arg(long, requires = "input")]
        journal_a: Option<String>,
        #[arg(long, requires = "input")]
        journal_b: Option<String>,
        #[arg(long)]
        pub_years: Option<YearRange>,
        #[arg(long)]
        citing_years: Option<YearRange>,
        /// Histogram JSON (`{"0": 60, "1": 40}`) instead of a corpus journal.
        #[arg(long, conflicts_with = "journal_a")]
        hist_a: Option<PathBuf>,
        #[arg(long, conflicts_with = "journal_b")]
        hist_b: Option<PathBuf>,
        /// Print JSON with full histograms instead of CSV.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[command(flatten)]
        source: SynthSource,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Impact-factor volatility over replicate synthetic corpora.
    Replicate {
        #[command(flatten)]
        source: SynthSource,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 2)]
        window: u32,
        #[arg(long)]
        census_years: Option<YearRange>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score authors under an institutional rule and compare with citations.
    Policy {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long)]
        census_year: i32,
        #[arg(long, default_value_t = 2)]
        window: u32,
        /// Core journal list, one id per line (core-points rule).
        #[arg(long)]
        core_list: Option<PathBuf>,
        /// Indexed journal list, one id per line (core-points rule).
        #[arg(long)]
        indexed_list: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Multi-section report with plot data.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        census_year: Option<i32>,
        /// Journal pair to compare, `A:B` (repeatable).
        #[arg(long)]
        pair: Vec<String>,
        /// Publication years of compared articles; five years before the census by default.
        #[arg(long)]
        pub_years: Option<YearRange>,
        #[command(flatten)]
        policy: IfArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

pub(crate) fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

/// Result of a subcommand: a primary table plus auxiliary files.
#[derive(Debug, Default)]
pub struct Outputs {
    pub primary_name: String,
    pub primary: String,
    pub files: Vec<(String, Vec<u8>)>,
    pub inputs: Vec<FileDigest>,
    pub seeds: Vec<u64>,
    pub notes: Vec<String>,
}

impl Outputs {
    pub(crate) fn new(primary_name: &str, primary: String) -> Self {
        Self {
            primary_name: primary_name.to_string(),
            primary,
            ..Self::default()
        }
    }

    pub(crate) fn file(&mut self, name: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.files.push((name.into(), content.into()));
    }
}

/// Reads and parses a corpus, recording the input digest.
pub(crate) fn read_corpus(
    input: &InputArgs,
    digests: &mut Vec<FileDigest>,
) -> Result<Corpus, CliError> {
    read_corpus_path(&input.input, input.strict, digests)
}

pub(crate) fn read_corpus_path(
    path: &Path,
    strict: bool,
    digests: &mut Vec<FileDigest>,
) -> Result<Corpus, CliError> {
    let bytes = read_input(path, digests)?;
    load_corpus(bytes.as_slice(), LoadOptions { strict })
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn read_input(path: &Path, digests: &mut Vec<FileDigest>) -> Result<Vec<u8>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    digests.push(FileDigest::of(path.display().to_string(), &bytes));
    Ok(bytes)
}

fn write_outputs(dir: &Path, outputs: &Outputs, command_line: &[String]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut manifest = RunManifest::new(command_line.to_vec());
    manifest.inputs = outputs.inputs.clone();
    manifest.seeds = outputs.seeds.clone();
    let all = std::iter::once((outputs.primary_name.as_str(), outputs.primary.as_bytes())).chain(
        outputs
            .files
            .iter()
            .map(|(n, b)| (n.as_str(), b.as_slice())),
    );
    for (name, bytes) in all {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(data)?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        manifest.outputs.push(FileDigest::of(name, bytes));
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(data)?;
    fs::write(dir.join("manifest.json"), json + "\n").map_err(data)?;
    Ok(())
}

fn out_dir(command: &Command) -> Option<&Path> {
    match command {
        Command::Ingest { out, .. }
        | Command::Validate { out, .. }
        | Command::JournalIf { out, .. }
        | Command::JournalProfile { out, .. }
        | Command::AuthorIndex { out, .. }
        | Command::Compare { out, .. }
        | Command::Synth { out, .. }
        | Command::Replicate { out, .. }
        | Command::Policy { out, .. } => out.out.as_deref(),
        Command::Report { out, .. } => Some(out.as_path()),
    }
}

/// Runs one parsed command, writing the primary table to `stdout` and
/// diagnostics to `stderr`. Returns the process exit code.
pub fn execute<W: Write, E: Write>(
    cli: &Cli,
    command_line: &[String],
    stdout: &mut W,
    stderr: &mut E,
) -> i32 {
    let result = commands::dispatch(&cli.command).and_then(|outputs| {
        if let Some(dir) = out_dir(&cli.command) {
            write_outputs(dir, &outputs, command_line)?;
        }
        Ok(outputs)
    });
    match result {
        Ok(outputs) => {
            for note in &outputs.notes {
                let _ = writeln!(stderr, "warning: {note}");
            }
            if stdout.write_all(outputs.primary.as_bytes()).is_err() {
                return EXIT_DATA;
            }
            EXIT_OK
        }
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Data(msg)) = &e;
            let _ = writeln!(stderr, "error: {msg}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T, W, E>(args: I, stdout: &mut W, stderr: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command_line: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match Cli::try_parse_from(&args) {
        Ok(cli) => execute(&cli, &command_line, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            }
        }
    }
}
