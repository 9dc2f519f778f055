//! `pbss`: command-line driver for the photonic blind source separation simulator.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pbss::checks;
use pbss::config::{Experiment, ExperimentConfig};
use pbss::engine::{latency_model, CycleOverheads, PbssResultJson};
use pbss::signal::{mixing_m1, mixing_m2, MixingScenario};
use pbss::sweep::{
    run_trial, sweep_estimator_quality, sweep_success_vs_snr, thread_pool, write_csv,
    SweepConfig, TrialSeed,
};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "pbss", version, about = "Photonic blind source separation simulator")]
struct Cli {
    /// Experiment configuration (JSON); the default M1 setup is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for detector noise, acquisition start times and trial streams.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; tables default to CSV, single results to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Grid from the configuration file (desk grid by default).
    Config,
    Desk,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mixing {
    /// The configuration's scenario.
    Config,
    M1,
    M2,
    /// M1 and M2 with default sources.
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weight versus tuning current for every ring.
    TransferCurve {
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Estimator mean, spread and SNR across sampling rate and sample count.
    StatsSweep {
        #[arg(long, value_enum, default_value_t = Preset::Config)]
        preset: Preset,
    },
    /// Separation success rate and estimator SNR for every grid cell.
    SuccessSweep {
        #[arg(long, value_enum, default_value_t = Preset::Config)]
        preset: Preset,
        #[arg(long, value_enum, default_value_t = Mixing::Both)]
        mixing: Mixing,
        /// Trials per cell; the configuration's value when omitted.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// One separation run; prints the result and the demodulation outcome.
    PbssRun,
    /// Latency model for the configured plan and per-cycle overheads.
    Latency {
        /// Communication overheads to tabulate, seconds.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2e-3, 6e-3])]
        t_c: Vec<f64>,
        /// Settling time, seconds.
        #[arg(long, default_value_t = 0.0)]
        t_s: f64,
        /// Processing time, seconds.
        #[arg(long, default_value_t = 0.0)]
        t_p: f64,
    },
    /// Runs the analytic oracle checks; fails if any check fails.
    Validate,
}

fn load(cli: &Cli) -> Result<Experiment> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("invalid configuration {}", path.display()))?,
        None => ExperimentConfig::two_source_default(&mixing_m1()),
    };
    let mut exp = cfg.build().context("invalid configuration")?;
    exp.bank = exp.bank.clone().with_noise(exp.bank.noise().std, cli.seed);
    Ok(exp)
}

fn output(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(cli: &Cli, rows: &[T], default: Format) -> Result<()> {
    let mut out = output(cli)?;
    match cli.format.unwrap_or(default) {
        Format::Csv => write_csv(rows, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn grid(preset: Preset, exp: &Experiment) -> SweepConfig {
    match preset {
        Preset::Config => exp.sweep.clone(),
        Preset::Desk => SweepConfig {
            trials: exp.sweep.trials,
            quality_repeats: exp.sweep.quality_repeats,
            ..SweepConfig::desk()
        },
        Preset::Full => SweepConfig {
            trials: exp.sweep.trials,
            quality_repeats: exp.sweep.quality_repeats,
            ..SweepConfig::full()
        },
    }
}

#[derive(Serialize)]
struct TransferRow {
    ring: usize,
    current_ma: f64,
    weight: f64,
}

fn transfer_curve(cli: &Cli, exp: &Experiment, points: usize) -> Result<()> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let mut rows = Vec::new();
    for (k, ring) in exp.bank.rings().iter().enumerate() {
        let (lo, hi) = ring.current_range();
        for j in 0..points {
            let i = lo + (hi - lo) * j as f64 / (points - 1) as f64;
            rows.push(TransferRow {
                ring: k,
                current_ma: i,
                weight: ring.photocurrent_weight(i)?,
            });
        }
    }
    emit(cli, &rows, Format::Csv)
}

fn cases(mixing: Mixing, exp: &Experiment) -> Result<Vec<(String, MixingScenario)>> {
    let default = |m| MixingScenario::two_source_default(m);
    Ok(match mixing {
        Mixing::Config => vec![("config".into(), exp.scenario.clone())],
        Mixing::M1 => vec![("M1".into(), default(mixing_m1())?)],
        Mixing::M2 => vec![("M2".into(), default(mixing_m2())?)],
        Mixing::Both => vec![
            ("M1".into(), default(mixing_m1())?),
            ("M2".into(), default(mixing_m2())?),
        ],
    })
}

fn pbss_run(cli: &Cli, exp: &Experiment) -> Result<()> {
    if cli.format == Some(Format::Csv) {
        bail!("pbss-run emits JSON only");
    }
    let outcome = run_trial(&exp.scenario, &exp.bank, &exp.pbss, TrialSeed::derive(cli.seed, 0));
    let result = outcome.result.context("separation failed")?;
    let mut out = output(cli)?;
    serde_json::to_writer_pretty(&mut out, &PbssResultJson::from(&result))?;
    writeln!(out)?;
    out.flush()?;
    eprintln!(
        "{} cycles; both sources demodulated without errors: {}",
        result.cycle_count, outcome.success
    );
    Ok(())
}

#[derive(Serialize)]
struct LatencyRow {
    t_c_s: f64,
    t_s_s: f64,
    t_p_s: f64,
    cycles: usize,
    t_a_s: f64,
    cycle_time_s: f64,
    total_s: f64,
}

fn latency(cli: &Cli, exp: &Experiment, t_c: &[f64], t_s: f64, t_p: f64) -> Result<()> {
    let rows: Vec<LatencyRow> = t_c
        .iter()
        .map(|&t_c| {
            let r = latency_model(&exp.pbss, &CycleOverheads { t_c, t_s, t_p });
            LatencyRow {
                t_c_s: t_c,
                t_s_s: t_s,
                t_p_s: t_p,
                cycles: r.cycles,
                t_a_s: r.t_a,
                cycle_time_s: r.cycle_time,
                total_s: r.total,
            }
        })
        .collect();
    emit(cli, &rows, Format::Csv)
}

fn validate(cli: &Cli) -> Result<bool> {
    let outcomes = checks::run_all(cli.seed)?;
    let passed = outcomes.iter().all(|c| c.passed);
    emit(cli, &outcomes, Format::Json)?;
    Ok(passed)
}

fn run(cli: &Cli) -> Result<bool> {
    let exp = load(cli)?;
    match &cli.command {
        Command::TransferCurve { points } => transfer_curve(cli, &exp, *points)?,
        Command::StatsSweep { preset } => {
            let sweep = grid(*preset, &exp);
            let rows = thread_pool()?
                .install(|| sweep_estimator_quality(&exp.scenario, &exp.bank, &sweep, cli.seed))?;
            emit(cli, &rows, Format::Csv)?;
        }
        Command::SuccessSweep {
            preset,
            mixing,
            trials,
        } => {
            let mut sweep = grid(*preset, &exp);
            if let Some(t) = trials {
                sweep.trials = *t;
            }
            let cases = cases(*mixing, &exp)?;
            let records = thread_pool()?.install(|| {
                sweep_success_vs_snr(&cases, &exp.bank, &exp.pbss, &sweep, cli.seed)
            })?;
            emit(cli, &records, Format::Csv)?;
        }
        Command::PbssRun => pbss_run(cli, &exp)?,
        Command::Latency { t_c, t_s, t_p } => latency(cli, &exp, t_c, *t_s, *t_p)?,
        Command::Validate => return validate(cli),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
