use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use basislab_core::greedy::{
    sign_average, Budgets, FundamentalTable, Mode, SignMode, TableOptions, DEFAULT_SIGN_CAP,
    DEFAULT_SUBSET_CAP, DEFAULT_TRIALS, MAX_EXHAUSTIVE_SIGNS,
};
use basislab_core::harness::{fit_exponent, k_ratio_stats, run_suite, SuiteConfig, SuiteReport};
use basislab_core::norms::DEFAULT_WINDOW_CAP;
use basislab_core::{parse_space, FiniteVector, NormOracle, Sampler};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

mod output;

use output::{format_significant, CsvTable};

const CSV_HELP: &str = "\
CSV columns:
  phi                      n,lambda,phi,phi_mode,phi_upper,lambda_star_lower,lambda_star_upper,phi_star_lower,phi_star_upper
  ktest                    name,certified_lower,estimate,samples,seed
  fit-p                    n,lambda (dyadic points), then p_hat,slope,r_squared in the JSON form
  signavg                  n,mean,stderr,normalized,mode
  suite --csv-dir          fundamental.csv, bidemocracy.csv (n,lower,upper),
                           ell1_average_slope.csv (n,value,stderr,mode),
                           lambda_grid.csv (m,n,ratio), power_condition.csv (input,n,ratio),
                           indicator_squares.csv (n,ratio)

JSON output carries the full run configuration, defaults included.";

#[derive(Parser, Debug)]
#[command(name = "basislab", version, about = "Norms, block products and greedy-basis constants on sequence spaces", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the norm of a vector
    Norm {
        #[command(flatten)]
        space: SpaceArg,
        /// Comma-separated coefficients, e.g. 3,4
        #[arg(long = "vec", allow_hyphen_values = true)]
        vector: String,
    },
    /// Table of λ(n), Φ(n) and dual brackets for n = 1..N
    Phi {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "N", default_value_t = 32)]
        window: usize,
        #[arg(long, value_enum, default_value_t = PhiMode::Auto)]
        mode: PhiMode,
        #[arg(long = "subset-cap", default_value_t = DEFAULT_SUBSET_CAP as u64)]
        subset_cap: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run every check and write a report
    Suite {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "N", default_value_t = 32)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        sampler: String,
        #[arg(long = "subset-cap", default_value_t = DEFAULT_SUBSET_CAP as u64)]
        subset_cap: u64,
        #[arg(long = "sign-cap", default_value_t = DEFAULT_SIGN_CAP)]
        sign_cap: u64,
        /// Report path; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for per-profile CSV tables
        #[arg(long = "csv-dir")]
        csv_dir: Option<PathBuf>,
        /// Exit 1 unless the classification hint matches (lp, lp(2), c0, inconsistent, inconclusive)
        #[arg(long = "assert-class")]
        assert_class: Option<String>,
    },
    /// Bounds for the tensor-product constants
    Ktest {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long, default_value = "gaussian")]
        sampler: String,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fit λ(n) ≈ n^(1/p) over dyadic n ≤ N
    FitP {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "N", default_value_t = 64)]
        window: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sign averages of ‖Σ±e_i‖ for n = 1..N
    Signavg {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "N", default_value_t = 16)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "sign-cap", default_value_t = DEFAULT_SIGN_CAP)]
        sign_cap: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct SpaceArg {
    /// Space descriptor: lp:p=2, c0, lorentz:p=2,s=0.5, tsirelson:theta=0.5, tp:p=2,theta=0.5, summing
    #[arg(long)]
    space: String,
    /// Largest trimmed length accepted by the Tsirelson norm
    #[arg(long = "window-cap", default_value_t = DEFAULT_WINDOW_CAP)]
    window_cap: usize,
}

impl SpaceArg {
    fn oracle(&self) -> Result<NormOracle> {
        let d = parse_space(&self.space)?;
        Ok(NormOracle::new(d).with_window_cap(self.window_cap))
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PhiMode {
    Auto,
    Exhaustive,
    Heuristic,
}

impl PhiMode {
    fn mode(self) -> Option<Mode> {
        match self {
            Self::Auto => None,
            Self::Exhaustive => Some(Mode::Exhaustive),
            Self::Heuristic => Some(Mode::Heuristic),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Exhaustive => "exhaustive",
            Self::Heuristic => "heuristic",
        }
    }
}

fn parse_vector(text: &str) -> Result<FiniteVector> {
    if text.trim().is_empty() {
        bail!("empty vector literal");
    }
    let coeffs = text
        .split(',')
        .map(|tok| {
            let t = tok.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => bail!("invalid number `{t}` in vector literal `{text}`"),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FiniteVector::new(coeffs))
}

fn parse_sampler(text: &str) -> Result<Sampler> {
    Ok(basislab_core::parse_sampler(text)?)
}

fn emit_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_phi(
    space: &SpaceArg,
    window: usize,
    mode: PhiMode,
    subset_cap: u64,
    seed: u64,
    format: Format,
) -> Result<()> {
    let o = space.oracle()?;
    let opts = TableOptions {
        mode: mode.mode(),
        budgets: Budgets {
            subset_cap: subset_cap as u128,
            ..Budgets::default()
        },
        seed,
        ..TableOptions::default()
    };
    let table = FundamentalTable::compute(&o, window, &opts)?;
    match format {
        Format::Csv => output::fundamental_csv(&table).write(io::stdout().lock()),
        Format::Json => emit_json(&json!({
            "config": {
                "command": "phi",
                "space": o.descriptor.to_string(),
                "window": window,
                "mode": mode.label(),
                "subset_cap": subset_cap,
                "seed": seed,
                "window_cap": o.window_cap,
            },
            "table": table,
        })),
    }
}

fn write_suite_csv(report: &SuiteReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, table) in output::suite_tables(report) {
        let path = dir.join(format!("{name}.csv"));
        let file =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        table.write(file)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_suite(
    space: &SpaceArg,
    window: usize,
    trials: usize,
    seed: u64,
    sampler: &str,
    subset_cap: u64,
    sign_cap: u64,
    out: Option<&Path>,
    csv_dir: Option<&Path>,
    assert_class: Option<&str>,
) -> Result<ExitCode> {
    let d = parse_space(&space.space)?;
    let config = SuiteConfig {
        window,
        trials,
        seed,
        sampler: parse_sampler(sampler)?,
        subset_cap,
        sign_cap,
        ..SuiteConfig::default()
    };
    let report = run_suite(&d, &config)?;
    let text = report.to_json();
    match out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    if let Some(dir) = csv_dir {
        write_suite_csv(&report, dir)?;
    }
    eprintln!("classification: {}", report.classification_hint);
    Ok(match assert_class {
        Some(q) if !report.classification_hint.matches(q) => {
            eprintln!("expected `{q}`, got `{}`", report.classification_hint);
            ExitCode::from(1)
        }
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_ktest(
    space: &SpaceArg,
    sampler: &str,
    trials: usize,
    seed: u64,
    format: Format,
) -> Result<()> {
    let o = space.oracle()?;
    let s = parse_sampler(sampler)?;
    let (upper, lower) = k_ratio_stats(&o, &s, trials, seed)?;
    match format {
        Format::Csv => {
            let mut t = CsvTable::new(&["name", "certified_lower", "estimate", "samples", "seed"]);
            for r in [&upper, &lower] {
                t.push(vec![
                    r.name.label().to_string(),
                    r.certified_lower.to_string(),
                    r.estimate.to_string(),
                    r.samples.to_string(),
                    r.seed.to_string(),
                ]);
            }
            t.write(io::stdout().lock())
        }
        Format::Json => emit_json(&json!({
            "config": {
                "command": "ktest",
                "space": o.descriptor.to_string(),
                "sampler": s.to_string(),
                "trials": trials,
                "seed": seed,
                "window_cap": o.window_cap,
            },
            "k_upper": upper,
            "k_lower": lower,
        })),
    }
}

fn cmd_fit_p(space: &SpaceArg, window: usize, format: Format) -> Result<()> {
    let o = space.oracle()?;
    let lambda: Vec<f64> = (1..=window)
        .map(|n| o.norm(&FiniteVector::indicator(n)))
        .collect::<basislab_core::Result<_>>()?;
    let fit = fit_exponent(&lambda)?;
    match format {
        Format::Csv => {
            let mut t = CsvTable::new(&["n", "lambda"]);
            for (n, l) in &fit.points {
                t.push(vec![n.to_string(), l.to_string()]);
            }
            t.write(io::stdout().lock())?;
            eprintln!("p_hat = {}", output::format_exponent(fit.p_hat.0));
            Ok(())
        }
        Format::Json => emit_json(&json!({
            "config": {
                "command": "fit-p",
                "space": o.descriptor.to_string(),
                "window": window,
                "window_cap": o.window_cap,
            },
            "fit": fit,
        })),
    }
}

fn cmd_signavg(
    space: &SpaceArg,
    window: usize,
    trials: usize,
    seed: u64,
    sign_cap: u64,
    format: Format,
) -> Result<()> {
    let o = space.oracle()?;
    let rows = (1..=window)
        .map(|n| {
            let exhaustive = n <= MAX_EXHAUSTIVE_SIGNS && (1u64 << (n - 1)) <= sign_cap;
            let mode = if exhaustive {
                SignMode::Exhaustive
            } else {
                SignMode::MonteCarlo
            };
            sign_average(&o, n, mode, trials, seed.wrapping_add(n as u64))
        })
        .collect::<basislab_core::Result<Vec<_>>>()?;
    match format {
        Format::Csv => {
            let mut t = CsvTable::new(&["n", "mean", "stderr", "normalized", "mode"]);
            for r in &rows {
                t.push(vec![
                    r.n.to_string(),
                    r.mean.to_string(),
                    r.stderr.to_string(),
                    (r.mean / r.n as f64).to_string(),
                    output::sign_mode_label(r.mode).to_string(),
                ]);
            }
            t.write(io::stdout().lock())
        }
        Format::Json => emit_json(&json!({
            "config": {
                "command": "signavg",
                "space": o.descriptor.to_string(),
                "window": window,
                "trials": trials,
                "seed": seed,
                "sign_cap": sign_cap,
                "window_cap": o.window_cap,
            },
            "averages": rows,
        })),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Norm { space, vector } => {
            let o = space.oracle()?;
            let v = parse_vector(&vector)?;
            println!("{}", format_significant(o.norm(&v)?, 12));
        }
        Command::Phi {
            space,
            window,
            mode,
            subset_cap,
            seed,
            out,
        } => cmd_phi(&space, window, mode, subset_cap, seed, out.format)?,
        Command::Suite {
            space,
            window,
            trials,
            seed,
            sampler,
            subset_cap,
            sign_cap,
            out,
            csv_dir,
            assert_class,
        } => {
            return cmd_suite(
                &space,
                window,
                trials,
                seed,
                &sampler,
                subset_cap,
                sign_cap,
                out.as_deref(),
                csv_dir.as_deref(),
                assert_class.as_deref(),
            )
        }
        Command::Ktest {
            space,
            sampler,
            trials,
            seed,
            out,
        } => cmd_ktest(&space, &sampler, trials, seed, out.format)?,
        Command::FitP { space, window, out } => cmd_fit_p(&space, window, out.format)?,
        Command::Signavg {
            space,
            window,
            trials,
            seed,
            sign_cap,
            out,
        } => cmd_signavg(&space, window, trials, seed, sign_cap, out.format)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
