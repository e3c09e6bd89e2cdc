use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lrdsc::{Lattice, LatticeKind};
use lrdsc_cli::config::ExperimentConfig;
use lrdsc_cli::experiment::{run_point, run_sweep};
use lrdsc_cli::output::{write_csv, write_json, write_sweep};
use lrdsc_cli::suite::validate_suite;
use lrdsc_cli::theory_table::{prediction_table, rate_table};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "lrdsc",
    version,
    about = "Nested-lattice robust distributed source coding experiments"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the pairs simulated per point (final point included).
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Output file; stdout when absent and the config names none.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Accept points that fail the γ, cell-width or μ ≥ 8 conditions.
    #[arg(long, global = true)]
    unsafe_small_mu: bool,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one ladder point.
    Simulate {
        /// Ladder position; defaults to the last point.
        #[arg(long)]
        point: Option<usize>,
    },
    /// Simulate every ladder point.
    Sweep,
    /// Closed-form predictions for each ladder point, or an r_md/r_rc table.
    Theory {
        /// Differential entropy per component, bits (table mode).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        d_s: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        d_c: Vec<f64>,
    },
    /// Geometry of the lattices at each ladder point, or of one lattice.
    LatticeInfo {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Row-major generator for the generic family.
        #[arg(long, value_delimiter = ',')]
        basis: Vec<f64>,
    },
    /// Run the property suite on each ladder point.
    Validate,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("this command needs --config")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(s) = cli.samples {
        cfg.samples = s;
        cfg.final_samples = Some(s);
    }
    if cli.unsafe_small_mu {
        cfg.codec.unsafe_small_mu = true;
    }
    cfg.check()?;
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `value` to `--out` or stdout in the chosen format, then to any
/// paths the config names.
fn emit<T: Serialize>(
    cli: &Cli,
    cfg: Option<&ExperimentConfig>,
    json: &T,
    csv: impl Fn(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    let as_json = cli.format == Some(Format::Json);
    let primary = cli.out.clone().or_else(|| {
        cfg.and_then(|c| {
            if as_json {
                c.output.json.clone()
            } else {
                c.output.csv.clone()
            }
        })
    });
    let mut w = open_out(primary.as_deref())?;
    if as_json {
        write_json(&mut w, json)?;
    } else {
        csv(&mut w)?;
    }
    w.flush()?;
    // the config's JSON mirror is written alongside the CSV
    if let Some(mirror) = cfg.and_then(|c| c.output.json.clone()) {
        if !as_json && cli.out.is_none() {
            write_json(open_out(Some(&mirror))?, json)?;
        }
    }
    Ok(())
}

fn write_rows<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r)?;
    }
    c.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LatticeDump {
    kind: LatticeKind,
    n: usize,
    scale: f64,
    geometry: lrdsc::LatticeGeometry,
    separation: Option<lrdsc::Separation>,
}

fn dump(l: &Lattice) -> Result<LatticeDump> {
    Ok(LatticeDump {
        kind: l.kind(),
        n: l.dim(),
        scale: l.scale(),
        geometry: l.geometry()?,
        separation: l.nonadjacent_separation().ok(),
    })
}

#[derive(Serialize)]
struct PointDump {
    theta: f64,
    mu: i64,
    status: String,
    #[serde(rename = "K")]
    k: Option<u64>,
    #[serde(rename = "M")]
    m: Option<u64>,
    gamma: Option<f64>,
    r0: Option<f64>,
    c: Option<f64>,
    decoder_threshold: Option<f64>,
    worst_case_error: Option<f64>,
    central: Option<LatticeDump>,
    intermediate: Option<LatticeDump>,
    side: Option<LatticeDump>,
    fractional: Option<LatticeDump>,
    checks: Vec<lrdsc::ConditionCheck>,
}

fn lattice_info(cli: &Cli, family: Option<&str>, n: Option<usize>, scale: f64, basis: &[f64]) -> Result<()> {
    if let Some(f) = family {
        let lat = match f {
            "integer-grid" => Lattice::integer_grid(n.context("--n is required")?, scale)?,
            "hexagonal" => Lattice::hexagonal(scale)?,
            "generic" => Lattice::generic(n.context("--n is required")?, basis.to_vec(), scale)?,
            other => bail!("unknown family {other:?}"),
        };
        let mut w = open_out(cli.out.as_deref())?;
        write_json(&mut w, &dump(&lat)?)?;
        return Ok(());
    }
    let cfg = load_config(cli)?;
    let mut out = Vec::new();
    for p in cfg.points() {
        let mut d = PointDump {
            theta: p.theta,
            mu: p.mu,
            status: "ok".into(),
            k: None,
            m: None,
            gamma: None,
            r0: None,
            c: None,
            decoder_threshold: None,
            worst_case_error: None,
            central: None,
            intermediate: None,
            side: None,
            fractional: None,
            checks: Vec::new(),
        };
        match lrdsc_cli::build_codec(&cfg, p) {
            Ok(codec) => {
                if !codec.supported_by_theory() {
                    d.status = "unsupported-by-theory".into();
                }
                d.k = Some(codec.k());
                d.m = Some(codec.m());
                d.gamma = Some(codec.gamma());
                d.r0 = Some(codec.r0());
                d.c = Some(codec.c());
                d.decoder_threshold = Some(codec.decoder_threshold());
                d.worst_case_error = Some(codec.worst_case_error());
                d.central = Some(dump(codec.central())?);
                d.intermediate = Some(dump(codec.intermediate())?);
                d.side = Some(dump(codec.side())?);
                d.fractional = Some(dump(codec.fractional())?);
                d.checks = codec.report().checks.clone();
            }
            Err(e) => d.status = format!("skipped: {e}"),
        }
        out.push(d);
    }
    let mut w = open_out(cli.out.as_deref())?;
    write_json(&mut w, &out)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate { point } => {
            let cfg = load_config(cli)?;
            let count = cfg.points().len();
            let index = point.unwrap_or(count - 1);
            if index >= count {
                bail!("point {index} is outside the ladder of {count}");
            }
            let row = run_point(&cfg, index)?;
            emit(cli, Some(&cfg), &row, |w| write_csv(w, std::slice::from_ref(&row)))?;
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let report = run_sweep(&cfg)?;
            let s = &report.summary;
            log::info!(
                "final point: d_s ratio {:?} ({}), d_c ratio {:?} ({}), rate gap {:?} ({}), skipped {}",
                s.side_ratio,
                verdict(s.side_ratio_ok),
                s.central_ratio,
                verdict(s.central_ratio_ok),
                s.rate_gap,
                verdict(s.rate_gap_ok),
                s.skipped
            );
            emit(cli, Some(&cfg), &report, |w| write_sweep(w, &report, false))?;
        }
        Command::Theory { h, d_s, d_c } => {
            if let Some(h) = h {
                if d_s.is_empty() || d_c.is_empty() {
                    bail!("table mode needs --d-s and --d-c");
                }
                let rows = rate_table(*h, d_s, d_c);
                emit(cli, None, &rows, |w| write_rows(w, &rows))?;
            } else {
                let cfg = load_config(cli)?;
                let rows = prediction_table(&cfg);
                emit(cli, None, &rows, |w| write_rows(w, &rows))?;
            }
        }
        Command::LatticeInfo {
            family,
            n,
            scale,
            basis,
        } => lattice_info(cli, family.as_deref(), *n, *scale, basis)?,
        Command::Validate => {
            let cfg = load_config(cli)?;
            let report = validate_suite(&cfg, cfg.samples)?;
            let mut w = open_out(cli.out.as_deref())?;
            if cli.format == Some(Format::Json) {
                write_json(&mut w, &report)?;
            } else {
                for p in &report.points {
                    let note = if p.supported_by_theory {
                        ""
                    } else {
                        " [unsupported-by-theory]"
                    };
                    for c in &p.checks {
                        writeln!(
                            w,
                            "{} θ={} μ={}{note} {}: {}",
                            verdict(c.passed),
                            p.theta,
                            p.mu,
                            c.name,
                            c.detail
                        )?;
                    }
                }
            }
            w.flush()?;
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
