//! Command-line front end: exact tables, simulation, expectation oracle,
//! slice comparison and twin demos.
//!
//! Every command that writes files also writes `<command>.manifest.json`
//! with the parameters, timestamps and SHA-256 digests of its outputs.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path as FsPath, PathBuf};

use chessboard::analysis::compare_slice;
use chessboard::montecarlo::SimMetadata;
use chessboard::twin::meeting_points;
use chessboard::{
    entwine, expected_lattice, extend_even, kernel_table, orthogonal_twin, run, ChargeLattice,
    Convention, Direction, KernelParams, Path, SimConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

/// Exit status categories.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<chessboard::Error> for CliError {
    fn from(e: chessboard::Error) -> CliError {
        match e {
            chessboard::Error::Guard { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "chessboard", version, about = "Chessboard propagator: exact kernel and single-path Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact kernel table by transfer-matrix recursion.
    Exact(ExactArgs),
    /// Single-path Monte Carlo: sample, entwine, deposit.
    Simulate(SimulateArgs),
    /// Exact per-loop expectation of the deposits (enumeration, steps <= 16).
    Oracle(OracleArgs),
    /// Compare a simulation slice with the exact kernel.
    Compare(CompareArgs),
    /// Print a path's extension, orthogonal twin, meetings and entwined loop.
    Twin(TwinArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    Feynman,
    Gersch,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Convention {
        match c {
            ConventionArg::Feynman => Convention::Feynman,
            ConventionArg::Gersch => Convention::Gersch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_parser = parse_positive)]
    pub steps: u64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_corner_weight)]
    pub corner_weight: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Feynman)]
    pub convention: ConventionArg,
    /// First step direction, `+` or `-`.
    #[arg(long, default_value = "+", value_parser = parse_direction, allow_hyphen_values = true)]
    pub start: Direction,
    /// Only export this slice.
    #[arg(long, value_parser = parse_positive)]
    pub slice: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_positive)]
    pub steps: u64,
    #[arg(long, value_parser = parse_probability)]
    pub corner_prob: f64,
    #[arg(long, value_parser = parse_positive)]
    pub loops: u64,
    #[arg(long, default_value = "0", value_parser = parse_count)]
    pub seed: u64,
    #[arg(long, default_value = "1", value_parser = parse_positive)]
    pub workers: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_positive)]
    pub steps: u64,
    #[arg(long, value_parser = parse_probability)]
    pub corner_prob: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Counts CSV written by `simulate`; its `.meta.json` sidecar must sit next to it.
    #[arg(long)]
    pub sim: PathBuf,
    #[arg(long, value_parser = parse_positive)]
    pub slice: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TwinArgs {
    /// Path as a string over `+` and `-`, e.g. `++-`.
    #[arg(allow_hyphen_values = true)]
    pub path: String,
}

/// Integer that may be written in scientific notation (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 {
        return Err(format!("`{s}` is not a nonnegative integer"));
    }
    if v > 9_007_199_254_740_992.0 {
        return Err(format!("`{s}` is too large to represent exactly"));
    }
    Ok(v as u64)
}

fn parse_positive(s: &str) -> Result<u64, String> {
    match parse_count(s)? {
        0 => Err("must be at least 1".into()),
        v => Ok(v),
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not a probability in [0, 1]"))
    }
}

fn parse_corner_weight(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("corner weight must be finite and nonnegative, got {v}"))
    }
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "+" | "+1" | "1" => Ok(Direction::Plus),
        "-" | "-1" => Ok(Direction::Minus),
        _ => Err(format!("`{s}` is not a direction (use + or -)")),
    }
}

#[derive(Debug, Serialize)]
struct OutputDigest {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    started_at: String,
    finished_at: String,
    outputs: Vec<OutputDigest>,
}

/// Collects output files for one command and writes its manifest.
struct Outputs {
    dir: PathBuf,
    command: &'static str,
    started_at: String,
    written: Vec<OutputDigest>,
}

impl Outputs {
    fn new(dir: &FsPath, command: &'static str) -> CliResult<Outputs> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            command,
            started_at: chrono::Utc::now().to_rfc3339(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(OutputDigest {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    fn finish(mut self, parameters: serde_json::Value, seed: Option<u64>) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            parameters,
            seed,
            started_at: self.started_at.clone(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: std::mem::take(&mut self.written),
        };
        let name = format!("{}.manifest.json", self.command);
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

fn to_usize(v: u64) -> CliResult<usize> {
    usize::try_from(v).map_err(|_| CliError::Usage(format!("{v} is too large")))
}

/// Runs one command, writing human-readable text to `stdout`.
pub fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Exact(a) => cmd_exact(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Twin(a) => cmd_twin(a, stdout),
    }
}

pub fn cmd_exact(args: &ExactArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let steps = to_usize(args.steps)?;
    let slice = args.slice.map(to_usize).transpose()?;
    if slice.is_some_and(|t| t > steps) {
        return Err(CliError::Usage(format!("--slice must not exceed --steps ({steps})")));
    }
    let params = KernelParams::new(steps, args.corner_weight).with_convention(args.convention.into());
    let table = kernel_table(params, args.start)?;

    let mut outputs = Outputs::new(&args.out, "exact")?;
    let file = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf, slice)?;
            outputs.write("kernel.csv", &buf)?
        }
        Format::Json => {
            let rows: Vec<_> = table
                .cells()
                .filter(|(s, _, _)| slice.is_none_or(|t| s.t == t as i64))
                .map(|(site, end, cell)| {
                    let (phi_r, phi_i) = cell.phi_components();
                    let k = table.complex(site, end);
                    json!({
                        "t": site.t, "x": site.x, "end_dir": end.sign(),
                        "w0": cell.w[0], "w1": cell.w[1], "w2": cell.w[2], "w3": cell.w[3],
                        "phi_r": phi_r, "phi_i": phi_i, "g": cell.signed(),
                        "k_re": k.re, "k_im": k.im,
                    })
                })
                .collect();
            let doc = json!({
                "steps": steps,
                "corner_weight": args.corner_weight,
                "convention": args.convention,
                "start": args.start.sign(),
                "rows": rows,
            });
            let text = serde_json::to_string_pretty(&doc).expect("table serializes") + "\n";
            outputs.write("kernel.json", text.as_bytes())?
        }
    };
    writeln!(stdout, "wrote {}", file.display())?;
    outputs.finish(
        json!({
            "steps": steps,
            "corner_weight": args.corner_weight,
            "convention": args.convention,
            "start": args.start.sign(),
            "slice": slice,
            "format": args.format,
        }),
        None,
    )
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = SimConfig {
        n_steps: to_usize(args.steps)?,
        corner_prob: args.corner_prob,
        loops: args.loops,
        seed: args.seed,
        workers: to_usize(args.workers)?,
    };
    config.validate()?;
    let started = std::time::Instant::now();
    let lattice = run(&config)?;
    eprintln!(
        "completed {} loops of {} steps on {} worker(s) in {:.1?}",
        lattice.loops_completed(),
        config.n_steps,
        config.workers,
        started.elapsed()
    );

    let mut outputs = Outputs::new(&args.out, "simulate")?;
    let mut csv = Vec::new();
    lattice.write_csv(&mut csv)?;
    let file = outputs.write("counts.csv", &csv)?;
    let meta = serde_json::to_string_pretty(&lattice.metadata()).expect("metadata serializes") + "\n";
    outputs.write("counts.meta.json", meta.as_bytes())?;
    writeln!(stdout, "wrote {}", file.display())?;
    outputs.finish(serde_json::to_value(config).expect("config serializes"), Some(config.seed))
}

pub fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let expected = expected_lattice(to_usize(args.steps)?, args.corner_prob)?;
    let mut outputs = Outputs::new(&args.out, "oracle")?;
    let mut csv = Vec::new();
    expected.write_csv(&mut csv)?;
    let file = outputs.write("expected.csv", &csv)?;
    writeln!(stdout, "wrote {}", file.display())?;
    outputs.finish(
        json!({ "steps": args.steps, "corner_prob": args.corner_prob }),
        None,
    )
}

/// `counts.csv` -> `counts.meta.json`.
pub fn metadata_path(sim: &FsPath) -> PathBuf {
    let stem = sim
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    sim.with_file_name(format!("{stem}.meta.json"))
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let meta_path = metadata_path(&args.sim);
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| CliError::Io(format!("cannot read metadata {}: {e}", meta_path.display())))?;
    let meta: SimMetadata = serde_json::from_str(&meta_text)
        .map_err(|e| CliError::Io(format!("malformed metadata {}: {e}", meta_path.display())))?;
    let file = fs::File::open(&args.sim)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.sim.display())))?;
    let lattice = ChargeLattice::read_csv(BufReader::new(file), &meta)
        .map_err(|e| CliError::Io(e.to_string()))?;

    let slice = to_usize(args.slice)?;
    let cmp = compare_slice(&lattice, slice)?;
    if let Some(w) = &cmp.warning {
        eprintln!("warning: {w}");
    }

    let mut outputs = Outputs::new(&args.out, "compare")?;
    let mut csv = Vec::new();
    cmp.write_csv(&mut csv)?;
    let file = outputs.write("comparison.csv", &csv)?;
    let summary = cmp.summary();
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    outputs.write("comparison.json", text.as_bytes())?;
    writeln!(
        stdout,
        "wrote {} (scale {:.6e}, reduced chi2 {:.3}, max |z| {:.3})",
        file.display(),
        summary.scale,
        summary.reduced_chi2,
        summary.max_abs_z
    )?;
    outputs.finish(
        json!({ "sim": args.sim, "slice": slice, "metadata": meta }),
        Some(meta.seed),
    )
}

pub fn cmd_twin(args: &TwinArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let path: Path = args.path.parse()?;
    let extended = extend_even(&path);
    let twin = orthogonal_twin(&path);
    let meetings = meeting_points(&path, &twin)?;
    let lp = entwine(&path);

    writeln!(stdout, "path      {path}")?;
    writeln!(stdout, "extended  {extended}")?;
    writeln!(stdout, "twin      {twin}")?;
    let sites: Vec<String> = meetings.iter().map(|s| s.to_string()).collect();
    writeln!(stdout, "meetings  {}", sites.join(" "))?;
    writeln!(stdout, "moves     {}", lp.len())?;
    writeln!(stdout, "channel,space_dir,time_dir,x_from,t_from,x_to,t_to")?;
    for seg in lp.segments() {
        writeln!(stdout, "{}", seg.to_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_in_scientific_notation() {
        assert_eq!(parse_count("1000"), Ok(1000));
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("2.5E3"), Ok(2500));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("1e30").is_err());
        assert!(parse_count("abc").is_err());
        assert_eq!(parse_count("18446744073709551615"), Ok(u64::MAX));
        assert!(parse_positive("0").is_err());
    }

    #[test]
    fn probabilities_and_directions() {
        assert_eq!(parse_probability("0.5"), Ok(0.5));
        assert!(parse_probability("1.5").is_err());
        assert!(parse_probability("-0.1").is_err());
        assert_eq!(parse_direction("-"), Ok(Direction::Minus));
        assert!(parse_direction("x").is_err());
    }

    #[test]
    fn metadata_sidecar_name() {
        assert_eq!(
            metadata_path(FsPath::new("runs/counts.csv")),
            PathBuf::from("runs/counts.meta.json")
        );
    }
}
