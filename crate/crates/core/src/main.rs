use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use entswap::analysis::{
    bound_table, estimate_detection_with, exact_detection, DetectionReport, Experiment,
    DEFAULT_LEAF_CAP, DEFAULT_SEED,
};
use entswap::attacks::AttackKind;
use entswap::identities::{verify_all, Identity, IdentityOptions};
use entswap::protocol::{CheckScope, Engine, Protocol};
use entswap::qudit::Dim;

#[derive(Parser, Debug)]
#[command(
    name = "entswap",
    version,
    about = "Entanglement-swapping multiparty QKD/QSS simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the swapping and relabeling identities numerically.
    VerifyIdentities {
        /// Dimensions, as a list (2,3) or an inclusive range (2..5).
        #[arg(long = "d", default_value = "2,3", value_parser = parse_range)]
        d: List,
        /// Restrict to one identity; repeatable.
        #[arg(long)]
        identity: Vec<Identity>,
        /// Random label tuples per identity above d = 3.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
        #[arg(long, hide = true)]
        corrupt_phase: bool,
    },
    /// Run protocol rounds, optionally under attack, and report detection.
    Simulate {
        #[arg(long, default_value = "modified")]
        protocol: Protocol,
        #[arg(long, default_value = "none")]
        attack: AttackKind,
        #[arg(long = "d", default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        parties: usize,
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Receiver targeted by the one-party attack.
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value = "auto")]
        engine: Engine,
        /// Quantity compared on testing rounds.
        #[arg(long, default_value = "both")]
        check: CheckScope,
        /// Share of rounds used as testing rounds.
        #[arg(long, default_value_t = 1.0)]
        test_fraction: f64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write every round record as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Also enumerate every branch for the exact detection probability.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_LEAF_CAP)]
        leaf_cap: usize,
        /// Exit with status 2 when the rate falls below the bound minus slack.
        #[arg(long)]
        check_bound: bool,
    },
    /// Print the closed-form detection bounds.
    Bounds {
        #[arg(long = "d", default_value = "2..5", value_parser = parse_range)]
        d: List,
        #[arg(long, default_value = "3..5", value_parser = parse_range)]
        parties: List,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Debug)]
struct List(Vec<usize>);

/// `2`, `2,3,5` or the inclusive range `2..5`.
fn parse_range(s: &str) -> Result<List, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(format!("'{s}' is an empty range"));
    }
    Ok(List(out))
}

enum Failure {
    /// Invalid input or an I/O problem.
    Usage(String),
    /// A check the user asked for did not pass.
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn verify_identities(
    d: Vec<usize>,
    identity: Vec<Identity>,
    samples: usize,
    format: TextFormat,
    corrupt_phase: bool,
) -> Result<(), Failure> {
    let dims = d.into_iter().map(Dim::new).collect::<Result<Vec<_>, _>>()?;
    let selected = if identity.is_empty() {
        Identity::ALL.to_vec()
    } else {
        identity
    };
    let options = IdentityOptions {
        samples,
        corrupt_phase,
        ..Default::default()
    };
    let reports = verify_all(&dims, &selected, &options)?;
    let mut out = io::stdout().lock();
    match format {
        TextFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&reports)?)?,
        TextFormat::Text => {
            for r in &reports {
                writeln!(
                    out,
                    "{:<20} d={:<2} cases={:<5} {:<10} max_deviation={:.3e}  {}",
                    r.identity.name(),
                    r.d,
                    r.cases,
                    if r.exhaustive {
                        "exhaustive"
                    } else {
                        "sampled"
                    },
                    r.max_deviation,
                    if r.passed { "ok" } else { "FAILED" }
                )?;
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Check(format!(
            "{failed} identity checks exceeded the tolerance"
        )));
    }
    Ok(())
}

fn simulate(exp: Experiment, cmd: &SimOptions) -> Result<(), Failure> {
    exp.validate()?;
    let run = || -> Result<DetectionReport, Failure> {
        let mut records = match &cmd.records {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        let mut sink = |rec: &entswap::protocol::RoundRecord| -> entswap::Result<()> {
            if let Some(w) = records.as_mut() {
                let line = serde_json::to_string(rec).expect("record serializes");
                writeln!(w, "{line}").map_err(|e| entswap::Error::InvalidConfig(e.to_string()))?;
            }
            Ok(())
        };
        let mut report = estimate_detection_with(&exp, &mut sink)?;
        if let Some(mut w) = records {
            w.flush()?;
        }
        if cmd.exact {
            let exact = exact_detection(&exp, cmd.leaf_cap)?;
            report = report.with_exact(exact.detection);
        }
        Ok(report)
    };
    let report = match cmd.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()?
            .install(run)?,
        None => run()?,
    };
    let mut out = output(cmd.output.as_ref())?;
    match cmd.format {
        ReportFormat::Json => writeln!(out, "{}", report.to_json())?,
        ReportFormat::Csv => {
            writeln!(out, "{}\n{}", DetectionReport::CSV_HEADER, report.csv_row())?
        }
    }
    out.flush()?;
    if cmd.check_bound {
        match (report.bound_satisfied, &report.bound) {
            (Some(false), Some(b)) => {
                return Err(Failure::Check(format!(
                    "detection rate {:.5} is below the bound {} minus slack {:.5}",
                    report.exact_rate.unwrap_or(report.rate),
                    b.exact,
                    report.slack
                )))
            }
            (None, _) => eprintln!("note: no detection bound applies to this configuration"),
            _ => {}
        }
    }
    Ok(())
}

struct SimOptions {
    format: ReportFormat,
    output: Option<PathBuf>,
    records: Option<PathBuf>,
    threads: Option<usize>,
    exact: bool,
    leaf_cap: usize,
    check_bound: bool,
}

fn bounds(d: Vec<usize>, parties: Vec<usize>, format: TableFormat) -> Result<(), Failure> {
    let rows = bound_table(&d, &parties)?;
    let mut out = io::stdout().lock();
    match format {
        TableFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
        TableFormat::Csv => {
            writeln!(out, "d,parties,zlg,zlg_value,one_party,one_party_value,two_party,two_party_value,two_party_three")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.d,
                    r.parties,
                    r.zlg.exact,
                    r.zlg.value,
                    r.one_party.exact,
                    r.one_party.value,
                    r.two_party.exact,
                    r.two_party.value,
                    r.two_party_three
                        .as_ref()
                        .map(|b| b.exact.clone())
                        .unwrap_or_default()
                )?;
            }
        }
        TableFormat::Table => {
            writeln!(
                out,
                "{:>3} {:>3}  {:>22}  {:>22}  {:>22}  {:>18}",
                "d", "N", "zlg", "one-party", "two-party", "two-party (N=3)"
            )?;
            for r in &rows {
                let cell =
                    |b: &entswap::analysis::BoundValue| format!("{} ({:.6})", b.exact, b.value);
                writeln!(
                    out,
                    "{:>3} {:>3}  {:>22}  {:>22}  {:>22}  {:>18}",
                    r.d,
                    r.parties,
                    cell(&r.zlg),
                    cell(&r.one_party),
                    cell(&r.two_party),
                    r.two_party_three
                        .as_ref()
                        .map(|b| b.exact.clone())
                        .unwrap_or_else(|| "-".into())
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::VerifyIdentities {
            d,
            identity,
            samples,
            format,
            corrupt_phase,
        } => verify_identities(d.0, identity, samples, format, corrupt_phase),
        Command::Simulate {
            protocol,
            attack,
            d,
            parties,
            rounds,
            seed,
            target,
            engine,
            check,
            test_fraction,
            format,
            output,
            records,
            threads,
            exact,
            leaf_cap,
            check_bound,
        } => {
            let exp = Experiment::new(d, parties, protocol, attack)
                .rounds(rounds)
                .seed(seed)
                .target(target)
                .engine(engine)
                .check(check)
                .test_fraction(test_fraction);
            let opts = SimOptions {
                format,
                output,
                records,
                threads,
                exact,
                leaf_cap,
                check_bound,
            };
            simulate(exp, &opts)
        }
        Command::Bounds { d, parties, format } => bounds(d.0, parties.0, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
