use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use levysub::runner::{builtin_config, run, run_file, seed_override, RunOutput};
use levysub::sampling::{sample_multg, sample_subordinator, MultGSpec, RandomStream, DEFAULT_CUTOFF};
use levysub::subordination::SubordinatorSpec;
use levysub::suites::{classify, ClassifyInput, TestKind};
use levysub::{Error, Result};

#[derive(Parser)]
#[command(name = "levysub", version, about = "Subordination of cone-parameter semigroups and class-inheritance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON config and write report.json plus CSV tables.
    Run {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Classify Lévy data read from a JSON measure or triplet file.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        test: TestArg,
        #[arg(long)]
        span: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Draw samples from a subordinator or type multG spec into a CSV file.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
    /// Run a built-in verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TestArg {
    Sd,
    Ssd,
    Lm,
    Semistable,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> TestKind {
        match t {
            TestArg::Sd => TestKind::Sd,
            TestArg::Ssd => TestKind::Ssd,
            TestArg::Lm => TestKind::Lm,
            TestArg::Semistable => TestKind::Semistable,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SampleSpec {
    MultG(MultGSpec),
    Subordinator(SubordinatorSpec),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn summarize(out: &RunOutput) {
    for s in &out.report.scenarios {
        let margin = s.margin.map_or(String::new(), |m| format!(" margin={m:.3e}"));
        let tag = if s.asserted { "" } else { " (exploratory)" };
        eprintln!("{:<14} {:<24} {:?}{margin}{tag}", s.kind, s.id, s.status);
        if let Some(e) = &s.error {
            eprintln!("    {e}");
        }
    }
}

fn finish_run(out: RunOutput, dir: Option<&PathBuf>) -> Result<i32> {
    summarize(&out);
    match dir {
        Some(d) => out.write(d)?,
        None => print!("{}", out.report_json()),
    }
    Ok(out.report.exit_code)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out_dir } => finish_run(run_file(&config)?, Some(&out_dir)),
        Command::Verify { suite, out_dir } => finish_run(run(&builtin_config(&suite)?, seed_override()?)?, out_dir.as_ref()),
        Command::Classify { input, test, span, order, alpha } => {
            let data: ClassifyInput = read_json(&input)?;
            let v = classify(&data, test.into(), span, order, alpha, None)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("verdict json"));
            Ok(if v.passed() { 0 } else { 1 })
        }
        Command::Sample { spec, n, seed, out, cutoff } => {
            let spec: SampleSpec = read_json(&spec)?;
            let stream = RandomStream::new(seed, 0);
            let rows = match &spec {
                SampleSpec::MultG(m) => sample_multg(m, n, &stream, cutoff)?,
                SampleSpec::Subordinator(s) => sample_subordinator(s, n, &stream, Some(cutoff))?,
            };
            let io = |e: std::io::Error| Error::input(format!("{}: {e}", out.display()));
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out).map_err(io)?);
            let d = rows.first().map_or(0, |r| r.len());
            let header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
            writeln!(w, "{}", header.join(",")).map_err(io)?;
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(w, "{}", cells.join(",")).map_err(io)?;
            }
            w.flush().map_err(io)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
