use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use splitrx::mi::HistogramCoords;
use splitrx::modem::{Scheme, SerMethod};
use splitrx_cli::point::{mi_point, ser_point, MiPointArgs, SerPointArgs};
use splitrx_cli::{builtin, list_experiments, run_experiment, threads_from_env, with_workers, ExperimentSpec, Table};

#[derive(Parser)]
#[command(name = "splitrx", version, about = "Splitting-receiver experiments: MI, SER and figure reproductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON spec or the built-in catalog.
    Run {
        /// Path to a JSON experiment spec.
        spec: Option<PathBuf>,
        /// Name of a built-in experiment (see `splitrx list`), or `all`.
        #[arg(long, conflicts_with = "spec")]
        builtin: Option<String>,
        /// Output directory (default: the spec's output_path, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiments.
    List {
        /// Print the full specs as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Histogram mutual information at one splitting ratio.
    Mi {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        power: f64,
        /// CD noise variance σ₁².
        #[arg(long, default_value_t = 1.0)]
        sigma1: f64,
        /// PD noise variance σ₂².
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Number of antennas (unit gains).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        samples: u64,
        #[arg(long, default_value = "64", value_parser = parse_count)]
        bins: u64,
        #[arg(long, default_value = "42", value_parser = parse_count)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Coords::Standardized)]
        coords: Coords,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symbol error rate at one splitting ratio.
    Ser {
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        power: f64,
        /// CD noise variance σ₁².
        #[arg(long, default_value_t = 1.0)]
        sigma1: f64,
        /// PD noise variance σ₂².
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        trials: u64,
        #[arg(long, default_value = "42", value_parser = parse_count)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Method::Mc)]
        method: Method,
        /// Also export the decision regions as JSON.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Coords {
    Raw,
    Standardized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Plain Monte Carlo with Wilson intervals.
    Mc,
    /// Importance sampling, for very small error rates.
    Is,
}

/// Accepts integers written as `10000000`, `1e7` or `1.5e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as u64)
}

fn emit(table: &Table, out: Option<&PathBuf>) -> Result<()> {
    let bytes = table.to_csv()?;
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(&bytes)?),
    }
}

fn run_specs(specs: Vec<ExperimentSpec>, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    for spec in specs {
        spec.validate()?;
        let dir = out
            .clone()
            .or_else(|| spec.output_path.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let report = with_workers(threads, || run_experiment(&spec, &dir))??;
        println!(
            "{}: {} rows in {:.1} s -> {}",
            spec.name,
            report.rows,
            report.elapsed_s,
            report.csv.display()
        );
        if let Some(budget) = spec.runtime_budget_s {
            if report.elapsed_s > budget {
                eprintln!("warning: {} exceeded its {budget} s budget", spec.name);
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = threads_from_env()?;
    match cli.command {
        Command::Run { spec, builtin: name, out } => {
            let specs = match (spec, name) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let spec: ExperimentSpec =
                        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                    vec![spec]
                }
                (None, Some(n)) if n == "all" => list_experiments(),
                (None, Some(n)) => match builtin(&n) {
                    Some(s) => vec![s],
                    None => bail!("unknown built-in '{n}'; run `splitrx list`"),
                },
                _ => bail!("give a spec file or --builtin NAME"),
            };
            run_specs(specs, out, threads)
        }
        Command::List { json } => {
            let specs = list_experiments();
            if json {
                println!("{}", serde_json::to_string_pretty(&specs)?);
            } else {
                for s in specs {
                    println!(
                        "{:<7} {:<8} {:<18} {:>5.0} s  {}",
                        s.name,
                        s.figure.as_deref().unwrap_or("-"),
                        s.kind.as_str(),
                        s.runtime_budget_s.unwrap_or(0.0),
                        s.description
                    );
                }
            }
            Ok(())
        }
        Command::Mi {
            rho,
            power,
            sigma1,
            sigma2,
            k,
            samples,
            bins,
            seed,
            coords,
            out,
        } => {
            let args = MiPointArgs {
                rho,
                power,
                sigma1_sq: sigma1,
                sigma2_sq: sigma2,
                k,
                samples,
                bins: usize::try_from(bins)?,
                seed,
                coords: match coords {
                    Coords::Raw => HistogramCoords::Raw,
                    Coords::Standardized => HistogramCoords::Standardized,
                },
            };
            let table = with_workers(threads, || mi_point(&args))??;
            emit(&table, out.as_ref())
        }
        Command::Ser {
            scheme,
            m,
            rho,
            power,
            sigma1,
            sigma2,
            k,
            trials,
            seed,
            method,
            regions,
            out,
        } => {
            let args = SerPointArgs {
                scheme,
                m,
                rho,
                power,
                sigma1_sq: sigma1,
                sigma2_sq: sigma2,
                k,
                trials,
                seed,
                method: match method {
                    Method::Mc => SerMethod::MonteCarlo,
                    Method::Is => SerMethod::ImportanceSampling,
                },
            };
            let (table, regs) = with_workers(threads, || ser_point(&args))??;
            if let Some(p) = regions {
                std::fs::write(&p, serde_json::to_vec_pretty(&regs)?).with_context(|| format!("writing {}", p.display()))?;
            }
            emit(&table, out.as_ref())
        }
    }
}
