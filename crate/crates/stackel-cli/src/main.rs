//! Command-line front end: load system definitions, run checks and solves,
//! emit machine-readable reports.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails
//! (or a catalog run disagrees with its declared verdicts), 2 on usage,
//! parse, or I/O errors.

use std::error::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stackel::driver::{self, CheckSettings};
use stackel::gallery;
use stackel::solve::hj_pointwise_verify;
use stackel::{CheckReport, GalleryEntry, SystemDefinition};

#[derive(Parser)]
#[command(
    name = "stackel",
    version,
    about = "Separability checks and separated solutions for generalized St\u{e4}ckel systems",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Invert the defining matrix across the domain and report the scaled
    /// round-trip residual
    Invert {
        /// Definition file or catalog system name
        input: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run separability checks
    Check {
        /// Definition file or catalog system name
        input: String,
        /// regular | nonregular | brackets | commutators | nogo2d |
        /// vectorpot | all
        #[arg(long, default_value = "all")]
        mode: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Verify the stored closed-form separated solution of a catalog system
    Solve {
        /// Catalog system name (closed forms live in the catalog)
        input: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Pointwise Hamilton-Jacobi verification with chosen separation
    /// constants
    Verify {
        /// Definition file or catalog system name
        input: String,
        /// Comma-separated constants lambda_1..lambda_{dim-sides}
        /// (lambda_1 = -E); defaults to -1 followed by zeros
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Catalog operations
    Gallery {
        #[command(subcommand)]
        cmd: GalleryCmd,
    },
    /// Write a definition in the plain-text format
    Export {
        /// Definition file or catalog system name
        input: String,
        /// Destination path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GalleryCmd {
    /// List catalog systems
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run checks on a catalog system and compare against its declared
    /// verdicts
    Run {
        name: String,
        /// A check mode, or "all" for every declared check
        #[arg(long, default_value = "all")]
        mode: String,
        /// Override a catalog parameter, e.g. --param alpha=2 (repeatable)
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Sample points per check
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Tolerance override (each check has its own default)
    #[arg(long, value_parser = parse_positive)]
    tol: Option<f64>,
    /// Extra seed folded into the fixed base sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of each domain interval kept clear at both ends
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit the generated_at field so reruns are byte-identical
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("tolerance must be positive and finite, got {s}"))
    }
}

impl RunOpts {
    fn settings(&self) -> CheckSettings {
        CheckSettings {
            samples: self.samples,
            tol: self.tol,
            seed: self.seed,
            margin: self.margin,
        }
    }
}

/// Everything a report needs; `exit` doubles as the process exit code.
#[derive(Serialize)]
struct Report {
    schema: u32,
    system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    checks: Vec<CheckReport>,
    exit: i32,
}

impl Report {
    fn new(system: &str, checks: Vec<CheckReport>, exit: i32, opts: &RunOpts) -> Report {
        let generated_at = (!opts.no_timestamp).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Report {
            schema: 1,
            system: system.to_string(),
            generated_at,
            checks,
            exit,
        }
    }

    fn render(&self, format: Format) -> Result<String, Box<dyn Error>> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            Format::Text => {
                let mut s = String::new();
                let _ = writeln!(s, "system: {}", self.system);
                if let Some(t) = self.generated_at {
                    let _ = writeln!(s, "generated_at: {t}");
                }
                for c in &self.checks {
                    let _ = writeln!(
                        s,
                        "{}: {}  (max residual {:.3e}, tolerance {:.3e}, {} samples)",
                        c.name, c.verdict, c.max_residual, c.tolerance, c.samples
                    );
                    for note in &c.notes {
                        let _ = writeln!(s, "  {note}");
                    }
                    for (key, values) in &c.multipliers {
                        let vals: Vec<String> = values.iter().map(f64::to_string).collect();
                        let _ = writeln!(s, "  {key} = [{}]", vals.join(", "));
                    }
                }
                let _ = writeln!(s, "exit: {}", self.exit);
                Ok(s)
            }
        }
    }
}

fn emit(report: &Report, opts: &RunOpts) -> Result<i32, Box<dyn Error>> {
    let text = report.render(opts.format)?;
    match &opts.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write '{}': {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(report.exit)
}

/// A definition file path, or a catalog name as fallback.
fn load_input(input: &str) -> Result<(SystemDefinition, Option<GalleryEntry>), Box<dyn Error>> {
    if Path::new(input).is_file() {
        let def = SystemDefinition::load(input).map_err(|e| format!("{input}: {e}"))?;
        // Validate the matrix structure up front so the error names the file.
        def.matrix().map_err(|e| format!("{input}: {e}"))?;
        return Ok((def, None));
    }
    if gallery::list_systems().contains(&input) {
        let entry = gallery::load(input)?;
        return Ok((entry.def.clone(), Some(entry)));
    }
    Err(format!(
        "'{input}' is neither a readable file nor a catalog system (run `stackel gallery list`)"
    )
    .into())
}

fn run_modes(
    def: &SystemDefinition,
    entry: Option<&GalleryEntry>,
    modes: &[&str],
    settings: &CheckSettings,
) -> Result<Vec<CheckReport>, Box<dyn Error>> {
    let mut checks = Vec::new();
    for mode in modes {
        let report = match entry {
            Some(e) => e.run_check(mode, settings)?,
            None => driver::run_check(def, None, mode, settings)?,
        };
        checks.push(report);
    }
    Ok(checks)
}

fn exit_from(checks: &[CheckReport]) -> i32 {
    i32::from(checks.iter().any(CheckReport::is_failure))
}

fn cmd_check(input: &str, mode: &str, opts: &RunOpts) -> Result<i32, Box<dyn Error>> {
    let (def, entry) = load_input(input)?;
    let modes: Vec<&str> = if mode == "all" {
        driver::applicable_modes(&def)
    } else {
        vec![mode]
    };
    let checks = run_modes(&def, entry.as_ref(), &modes, &opts.settings())?;
    let exit = exit_from(&checks);
    emit(&Report::new(&def.name, checks, exit, opts), opts)
}

fn cmd_invert(input: &str, opts: &RunOpts) -> Result<i32, Box<dyn Error>> {
    let (def, _) = load_input(input)?;
    let checks = vec![driver::run_invert(&def, &opts.settings())?];
    let exit = exit_from(&checks);
    emit(&Report::new(&def.name, checks, exit, opts), opts)
}

fn cmd_solve(input: &str, opts: &RunOpts) -> Result<i32, Box<dyn Error>> {
    let (def, entry) = load_input(input)?;
    let entry = entry.ok_or_else(|| {
        format!("'{}' is not a catalog system; solve runs stored closed-form recipes", def.name)
    })?;
    let checks = driver::run_solve(&entry, &opts.settings())?;
    let exit = exit_from(&checks);
    emit(&Report::new(&def.name, checks, exit, opts), opts)
}

fn cmd_verify(input: &str, lambda: Option<&str>, opts: &RunOpts) -> Result<i32, Box<dyn Error>> {
    let (def, _) = load_input(input)?;
    let def = def.resolved();
    let free = def.dim() - def.sides;
    let lambda: Vec<f64> = match lambda {
        Some(text) => text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("separation constant '{part}' is not a number"))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let mut v = vec![0.0; free];
            v[0] = -1.0;
            v
        }
    };
    if lambda.len() != free {
        return Err(format!(
            "{} separation constants given, {} coordinates minus {} side conditions needs {free}",
            lambda.len(),
            def.dim(),
            def.sides
        )
        .into());
    }
    let settings = opts.settings();
    let s = def.matrix()?;
    let domain = driver::effective_domain(&def.domain_box(), settings.margin)?;
    let tol = settings.tol.unwrap_or(1e-10);
    let hj = hj_pointwise_verify(&s, &def.potential, &lambda, &domain, settings.samples, settings.seed)?;
    let lam: Vec<String> = lambda.iter().map(f64::to_string).collect();
    let note = format!("separation constants [{}]", lam.join(", "));
    let mut checks = vec![
        CheckReport::from_residual("verify.hamiltonian", tol, hj.samples, hj.hamiltonian_residual)
            .note(note),
        CheckReport::from_residual("verify.side", tol, hj.samples, hj.side_residual),
    ];
    if hj.negative_p2 > 0 {
        checks[0].notes.push(format!(
            "{} sample-coordinate pairs have negative separated momentum squares; \
             the identities still hold at the p^2 level",
            hj.negative_p2
        ));
    }
    let exit = exit_from(&checks);
    emit(&Report::new(&def.name, checks, exit, opts), opts)
}

fn cmd_gallery_list(format: Format) -> Result<i32, Box<dyn Error>> {
    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        dim: usize,
        sides: usize,
        description: String,
    }
    let rows: Vec<Row> = gallery::list_systems()
        .into_iter()
        .map(|name| {
            let entry = gallery::load(name)?;
            Ok(Row {
                name,
                dim: entry.def.dim(),
                sides: entry.def.sides,
                description: entry.description.to_string(),
            })
        })
        .collect::<Result<_, Box<dyn Error>>>()?;
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            print!("{s}");
        }
        Format::Text => {
            for r in rows {
                let first = r.description.split('.').next().unwrap_or(r.description.as_str());
                let plural = if r.sides == 1 { "" } else { "s" };
                println!(
                    "{}  ({}d, {} side condition{plural})  {}",
                    r.name,
                    r.dim,
                    r.sides,
                    first.trim()
                );
            }
        }
    }
    Ok(0)
}

fn parse_params(raw: &[String]) -> Result<Vec<(String, f64)>, Box<dyn Error>> {
    raw.iter()
        .map(|item| {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("parameter '{item}' is not of the form KEY=VALUE"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("parameter value in '{item}' is not a number"))?;
            Ok((key.trim().to_string(), value))
        })
        .collect()
}

fn cmd_gallery_run(
    name: &str,
    mode: &str,
    params: &[String],
    opts: &RunOpts,
) -> Result<i32, Box<dyn Error>> {
    let params = parse_params(params)?;
    let refs: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let entry = gallery::load_with(name, &refs)?;
    let modes: Vec<&str> = if mode == "all" {
        entry.expected.keys().copied().collect()
    } else {
        vec![mode]
    };
    let settings = opts.settings();
    let mut checks = Vec::new();
    let mut mismatch = false;
    for m in &modes {
        let mut report = entry.run_check(m, &settings)?;
        if let Some(&want) = entry.expected.get(m) {
            if report.verdict == want {
                report.notes.push(format!("matches the declared verdict ({want})"));
            } else {
                report.notes.push(format!("catalog declares '{want}'"));
                mismatch = true;
            }
        }
        checks.push(report);
    }
    let exit = i32::from(mismatch || checks.iter().any(CheckReport::is_failure));
    emit(&Report::new(name, checks, exit, opts), opts)
}

fn cmd_export(input: &str, out: Option<&Path>) -> Result<i32, Box<dyn Error>> {
    let (def, _) = load_input(input)?;
    let text = def.to_text();
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write '{}': {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32, Box<dyn Error>> {
    match cli.cmd {
        Cmd::Invert { input, opts } => cmd_invert(&input, &opts),
        Cmd::Check { input, mode, opts } => cmd_check(&input, &mode, &opts),
        Cmd::Solve { input, opts } => cmd_solve(&input, &opts),
        Cmd::Verify { input, lambda, opts } => cmd_verify(&input, lambda.as_deref(), &opts),
        Cmd::Gallery { cmd } => match cmd {
            GalleryCmd::List { format } => cmd_gallery_list(format),
            GalleryCmd::Run { name, mode, params, opts } => {
                cmd_gallery_run(&name, &mode, &params, &opts)
            }
        },
        Cmd::Export { input, out } => cmd_export(&input, out.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}
