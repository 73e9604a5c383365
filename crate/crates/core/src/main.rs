//! `moebius-lab` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use moebius_lab::config::{DEFAULT_ENERGY_GRID, DEFAULT_GRID, DEFAULT_LAMBDA, Tolerances};
use moebius_lab::invariants::willmore_energy;
use moebius_lab::report::{
    AnalyzeOptions, EnergyReport, SCHEMA, VERSION, analyze, default_domain, energy_csv, energy_sweep,
    flatness_cells_csv, lambda_rows_csv, parse_mu, resolve_mu, to_json, verify, write_atomic,
};
use moebius_lab::surfaces::{Domain, catalog_defaults, catalog_entries, parse_surface};
use moebius_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "moebius-lab", version, about = "Möbius invariants, L-lifts and Willmore certificates of surfaces in S^n")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    surface: String,
    /// auto | constant | zero | a+bi | meromorphic:c | stereo-dual
    #[arg(long, default_value = "auto")]
    mu: String,
    /// Classifier tolerance for the residual and L-equation tests.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid size WxH.
    #[arg(long, default_value_t = format!("{}x{}", DEFAULT_GRID.0, DEFAULT_GRID.1))]
    grid: String,
    /// Number of equispaced λ samples on the unit circle.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: usize,
    /// Box u0,u1,v0,v1 replacing the chart domain.
    #[arg(long = "box")]
    bbox: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Invariants, lift and frame data at one point.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Point u,v.
        #[arg(long, default_value = "0,0")]
        at: String,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: usize,
        /// Grid for the energy integral; 0 skips it.
        #[arg(long, default_value_t = DEFAULT_ENERGY_GRID)]
        energy_grid: usize,
    },
    /// Structure equations, Willmore classifiers and λ-flatness over a grid.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sup flatness residual per λ sample.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Willmore energy, or a table over a list of product-torus radii.
    Energy {
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = format!("{DEFAULT_ENERGY_GRID}x{DEFAULT_ENERGY_GRID}"))]
        grid: String,
        /// Comma separated radii for the product-torus family.
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lists the built-in charts.
    Catalog {
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Per-node flatness table and the verification report.
    Export {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
}

fn parse_pair<T: std::str::FromStr>(text: &str, sep: char, what: &str) -> Result<(T, T)> {
    let bad = || Error::Parse(format!("invalid {what} `{text}`"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_box(text: &str) -> Result<Domain> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("invalid box `{text}`"))))
        .collect::<Result<_>>()?;
    match v[..] {
        [u0, u1, v0, v1] if u1 > u0 && v1 > v0 => Ok(Domain::Box { u0, u1, v0, v1 }),
        _ => Err(Error::Parse(format!("box must be u0,u1,v0,v1 with u0<u1, v0<v1: `{text}`"))),
    }
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::ParameterRange {
            name: "tol".into(),
            value: t,
            range: "(0, inf)".into(),
        }),
        Some(t) => Ok(Tolerances::default().with_classifier_tol(t)),
        None => Ok(Tolerances::default()),
    }
}

fn emit(text: &str, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Returns the process exit status on success.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze {
            common,
            at,
            lambda,
            energy_grid,
        } => {
            let chart = parse_surface(&common.surface)?;
            let (u, v) = parse_pair::<f64>(&at, ',', "point")?;
            let tol = tolerances(common.tol)?;
            let mu = resolve_mu(&parse_mu(&common.mu)?, chart.as_ref(), u, v, &tol)?;
            let opts = AnalyzeOptions {
                lambda_count: lambda.max(1),
                energy_grid: (energy_grid > 0).then_some((energy_grid, energy_grid)),
                tol,
            };
            let report = analyze(chart.as_ref(), u, v, &mu, &opts)?;
            emit(&to_json(&report)?, &common.json)?;
            Ok(0)
        }
        Command::Verify { common, grid } => grid_command(common, grid, GridMode::Verify),
        Command::Sweep { common, grid } => grid_command(common, grid, GridMode::Sweep),
        Command::Export { common, grid } => grid_command(common, grid, GridMode::Export),
        Command::Energy {
            surface,
            grid,
            a,
            json,
            csv,
        } => {
            let (w, h) = parse_pair::<usize>(&grid, 'x', "grid")?;
            let report = match a {
                Some(list) => {
                    if !surface.starts_with("product-torus") {
                        return Err(Error::Parse("--a applies to the product-torus family".into()));
                    }
                    let values: Vec<f64> = list
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("invalid radius `{s}`"))))
                        .collect::<Result<_>>()?;
                    if values.len() < 2 {
                        return Err(Error::Parse("--a needs at least two radii".into()));
                    }
                    energy_sweep(&values, (w, h))?
                }
                None => {
                    let chart = parse_surface(&surface)?;
                    EnergyReport {
                        schema: SCHEMA.into(),
                        version: VERSION.into(),
                        surface: chart.spec(),
                        grid: [w, h],
                        energy: Some(willmore_energy(chart.as_ref(), w, h)?),
                        table: Vec::new(),
                        argmin: None,
                        min_energy: None,
                    }
                }
            };
            if let Some(p) = &csv {
                write_atomic(p, &energy_csv(&report.table))?;
            }
            emit(&to_json(&report)?, &json)?;
            Ok(0)
        }
        Command::Catalog { json } => {
            let entries: Vec<serde_json::Value> = catalog_entries()
                .into_iter()
                .map(|(spec, about)| serde_json::json!({ "spec": spec, "description": about }))
                .collect();
            let value = serde_json::json!({
                "schema": SCHEMA,
                "version": VERSION,
                "entries": entries,
                "defaults": catalog_defaults(),
            });
            emit(&to_json(&value)?, &json)?;
            Ok(0)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum GridMode {
    Verify,
    Sweep,
    Export,
}

fn grid_command(common: Common, grid: GridArgs, mode: GridMode) -> Result<u8> {
    let chart = parse_surface(&common.surface)?;
    let (w, h) = parse_pair::<usize>(&grid.grid, 'x', "grid")?;
    if w < moebius_lab::frames::MIN_GRID || h < moebius_lab::frames::MIN_GRID {
        return Err(Error::GridTooSmall(w, h));
    }
    if grid.lambda < 2 {
        return Err(Error::ParameterRange {
            name: "lambda".into(),
            value: grid.lambda as f64,
            range: "[2, inf)".into(),
        });
    }
    let tol = tolerances(common.tol)?;
    let explicit = grid.bbox.as_deref().map(parse_box).transpose()?;
    let probe = explicit.unwrap_or(chart.domain()).from_unit(0.5, 0.5);
    let mu = resolve_mu(&parse_mu(&common.mu)?, chart.as_ref(), probe.0, probe.1, &tol)?;
    let domain = explicit.unwrap_or_else(|| default_domain(chart.as_ref(), &mu));
    let (report, fields) = verify(chart.as_ref(), &mu, domain, (w, h), grid.lambda, &tol)?;
    match mode {
        GridMode::Verify | GridMode::Sweep => {
            if let Some(p) = &grid.csv {
                write_atomic(p, &lambda_rows_csv(&report.lambda_table))?;
            }
        }
        GridMode::Export => {
            if let Some(p) = &grid.csv {
                write_atomic(p, &flatness_cells_csv(&fields))?;
            }
        }
    }
    let text = if mode == GridMode::Sweep {
        to_json(&serde_json::json!({
            "schema": SCHEMA,
            "version": VERSION,
            "surface": report.surface,
            "mu": report.mu,
            "noise_floor": report.classifiers.noise_floor,
            "lambda_table": report.lambda_table,
        }))?
    } else {
        to_json(&report)?
    };
    emit(&text, &common.json)?;
    if mode == GridMode::Verify {
        for d in &report.disagreements {
            eprintln!("disagreement: {d}");
        }
        if !report.structure_ok {
            eprintln!("structure equations violated: {:?}", report.structure);
        }
    }
    Ok(if mode == GridMode::Verify && !report.passed() { 1 } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let input = e.is_input_error() || matches!(e, Error::Io(_));
            ExitCode::from(if input { 2 } else { 3 })
        }
    }
}
