//! Batch front end: configure the medium and forcing once, then predict,
//! simulate, oracle-check, or fully cross-verify a sweep of forcing
//! strengths, leaving plot-ready CSV artifacts behind.

mod config;
mod runs;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::RunConfig;
use pacewave_core::verify;
use pacewave_core::Error as CoreError;
use runs::{eps_tag, measure_run, num, per_epsilon, write_profile, CsvFile, Workspace};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CRITERION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pacewave",
    version,
    about = "Pacemakers in oscillator media: asymptotic predictions, direct simulation, and cross-checks"
)]
struct Cli {
    /// Configuration file (TOML); `pacewave init` writes a template.
    #[arg(long, global = true, default_value = "pacewave.toml")]
    config: PathBuf,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated forcing strengths; overrides the configured sweep.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    epsilon: Option<Vec<f64>>,
    /// Run forcing strengths that violate the locking sign condition.
    #[arg(long, global = true)]
    allow_wrong_sign: bool,
    /// Also dump final (x, phase) profiles.
    #[arg(long, global = true)]
    snapshot: bool,
    /// Worker threads for the per-epsilon sweep.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fully commented configuration template.
    Init,
    /// Asymptotic pipeline per forcing strength: wavenumber, offset, frequency.
    Predict,
    /// Time-integrate from rest and measure the locked state.
    Simulate,
    /// Ground-state frequency oracle for the local model.
    Oracle,
    /// Run every acceptance criterion and write the cross-check report.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(err: impl std::fmt::Display) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if let Command::Init = cli.command {
        return cmd_init(&cli.config);
    }
    let mut cfg = RunConfig::load(&cli.config).map_err(|e| Failure::config(format!("{e:#}")))?;
    if let Some(eps) = &cli.epsilon {
        cfg.epsilons = eps.clone();
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::config(format!("creating {}: {e}", out_dir.display())))?;

    let needs_sign_check = !matches!(cli.command, Command::Verify);
    if needs_sign_check && !cli.allow_wrong_sign {
        let wrong = cfg.wrong_sign_epsilons();
        if !wrong.is_empty() {
            return Err(Failure::config(format!(
                "forcing strengths {wrong:?} share the sign of the forcing mass \
                 ({:+.4}); no pacemaker locks there. Pass --allow-wrong-sign to run anyway",
                cfg.forcing.mass()
            )));
        }
    }

    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }

    match cli.command {
        Command::Init => unreachable!("handled above"),
        Command::Predict => cmd_predict(&cfg, cli, &out_dir),
        Command::Simulate => cmd_simulate(&cfg, cli, &out_dir),
        Command::Oracle => cmd_oracle(&cfg, cli, &out_dir),
        Command::Verify => cmd_verify(&cfg, cli, &out_dir),
    }
}

fn cmd_init(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        return Err(Failure::config(format!(
            "{} already exists; refusing to overwrite",
            path.display()
        )));
    }
    std::fs::write(path, config::TEMPLATE)
        .map_err(|e| Failure::config(format!("writing {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Partial-versus-total failure exit policy shared by the sweep commands.
fn sweep_exit(total: usize, failures: usize) -> Result<(), Failure> {
    if total == 0 || failures == 0 {
        Ok(())
    } else if failures == total {
        Err(Failure {
            code: EXIT_NUMERICS,
            message: format!("all {total} sweep entries failed"),
        })
    } else {
        Err(Failure {
            code: EXIT_CRITERION,
            message: format!("{failures} of {total} sweep entries failed"),
        })
    }
}

fn header_comments(cfg: &RunConfig, what: &str) -> Vec<String> {
    let mut lines = vec![
        format!("pacewave {what}, model {}", cfg.model),
        format!(
            "grid: half_width {}, points {}",
            cfg.grid.half_width, cfg.grid.points
        ),
    ];
    for w in cfg.warnings() {
        lines.push(format!("warning: {w}"));
    }
    lines
}

fn cmd_predict(cfg: &RunConfig, cli: &Cli, out: &Path) -> Result<(), Failure> {
    let ws = Workspace::build(cfg).map_err(|e| Failure::config(format!("{e:#}")))?;
    let rows = per_epsilon(&cfg.epsilons, cli.jobs, |eps| (eps, ws.predict(cfg, eps)));

    let mut comments = header_comments(cfg, "predict");
    comments.push(
        "columns: epsilon (forcing strength), wavenumber (selected far-field slope, 1/x), \
         phase_offset (far-field step), frequency (collective rate, 1/t), \
         iterations (corrector passes), residual (sup-norm steady defect), status"
            .into(),
    );
    let mut csv = CsvFile::new(
        out,
        "predict.csv",
        &comments,
        "epsilon,wavenumber,phase_offset,frequency,iterations,residual,status",
    );
    let mut failures = 0;
    for (eps, res) in &rows {
        match res {
            Ok(pm) => {
                let residual = ws
                    .simulator(*eps)
                    .and_then(|sim| Ok(sim.pacemaker_residual(pm)?.max_abs()))
                    .unwrap_or(f64::NAN);
                csv.row(&[
                    num(*eps),
                    num(pm.wavenumber),
                    num(pm.offset),
                    num(pm.frequency),
                    pm.iterations.to_string(),
                    num(residual),
                    "ok".into(),
                ]);
                let name = format!("predict_profile_{}.csv", eps_tag(*eps));
                write_profile(out, &name, &comments, &pm.phase_profile())
                    .map_err(|e| Failure::config(format!("{e:#}")))?;
            }
            Err(e) => {
                failures += 1;
                csv.row(&[
                    num(*eps),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "0".into(),
                    "nan".into(),
                    format!("failed: {e}").replace(',', ";"),
                ]);
            }
        }
    }
    csv.write().map_err(|e| Failure::config(format!("{e:#}")))?;
    println!(
        "predict: {} of {} strengths converged -> {}",
        rows.len() - failures,
        rows.len(),
        out.join("predict.csv").display()
    );
    sweep_exit(rows.len(), failures)
}

fn cmd_simulate(cfg: &RunConfig, cli: &Cli, out: &Path) -> Result<(), Failure> {
    let ws = Workspace::build(cfg).map_err(|e| Failure::config(format!("{e:#}")))?;
    let rows = per_epsilon(&cfg.epsilons, cli.jobs, |eps| {
        (eps, measure_run(&ws, cfg, eps, false))
    });

    let mut comments = header_comments(cfg, "simulate");
    comments.push(
        "columns: epsilon (forcing strength), duration (integrated time), dt (step), \
         frequency (measured locking rate, 1/t), k_plus/k_minus (far-field slopes, 1/x), \
         outgoing (both group velocities point away), status"
            .into(),
    );
    let mut csv = CsvFile::new(
        out,
        "simulate.csv",
        &comments,
        "epsilon,duration,dt,frequency,k_plus,k_minus,outgoing,status",
    );
    let mut failures = 0;
    let mut blew_up = false;
    for (eps, res) in &rows {
        match res {
            Ok(m) => {
                csv.row(&[
                    num(*eps),
                    num(m.duration),
                    num(cfg.simulator.dt),
                    num(m.frequency),
                    num(m.k_plus),
                    num(m.k_minus),
                    m.outgoing.to_string(),
                    "ok".into(),
                ]);
                let series_name = format!("simulate_series_{}.csv", eps_tag(*eps));
                let mut series = CsvFile::new(out, &series_name, &comments, "time,center_phase");
                for (t, phi) in m.record.times.iter().zip(&m.record.center_phase) {
                    series.row(&[num(*t), num(*phi)]);
                }
                series
                    .write()
                    .map_err(|e| Failure::config(format!("{e:#}")))?;
                if cli.snapshot {
                    let name = format!("simulate_profile_{}.csv", eps_tag(*eps));
                    write_profile(out, &name, &comments, &m.record.final_phase())
                        .map_err(|e| Failure::config(format!("{e:#}")))?;
                }
            }
            Err(e) => {
                failures += 1;
                blew_up |= matches!(e, CoreError::Blowup { .. });
                csv.row(&[
                    num(*eps),
                    "nan".into(),
                    num(cfg.simulator.dt),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "false".into(),
                    format!("failed: {e}").replace(',', ";"),
                ]);
            }
        }
    }
    csv.write().map_err(|e| Failure::config(format!("{e:#}")))?;
    std::fs::write(out.join("plot.py"), runs::PLOT_SCRIPT)
        .map_err(|e| Failure::config(format!("{e:#}")))?;
    println!(
        "simulate: {} of {} runs completed -> {}",
        rows.len() - failures,
        rows.len(),
        out.join("simulate.csv").display()
    );
    if blew_up {
        return Err(Failure {
            code: EXIT_NUMERICS,
            message: "at least one run hit the blowup guard".into(),
        });
    }
    sweep_exit(rows.len(), failures)
}

fn cmd_oracle(cfg: &RunConfig, cli: &Cli, out: &Path) -> Result<(), Failure> {
    if !cfg.is_local() {
        return Err(Failure::config(
            "the ground-state oracle applies to the local model only; set model = \"local\"",
        ));
    }
    let opts = cfg.oracle.options();
    let forcing = cfg.forcing.clone();
    let rows = per_epsilon(&cfg.epsilons, cli.jobs, |eps| {
        let gs = pacewave_core::diagnostics::pacemaker_frequency_oracle(
            eps,
            |x| forcing.sample(x),
            &opts,
        );
        (eps, gs)
    });

    let mut comments = header_comments(cfg, "oracle");
    comments.push(
        "columns: epsilon (forcing strength), ground_energy (lowest eigenvalue), \
         frequency (locking rate = minus energy, 1/t), wavenumber (far-field decay, 1/x), \
         box_half_width, spacing, status"
            .into(),
    );
    let mut csv = CsvFile::new(
        out,
        "oracle.csv",
        &comments,
        "epsilon,ground_energy,frequency,wavenumber,box_half_width,spacing,status",
    );
    let mut failures = 0;
    for (eps, res) in &rows {
        match res {
            Ok(gs) => csv.row(&[
                num(*eps),
                num(gs.energy),
                num(-gs.energy),
                num(gs.decay),
                num(gs.half_width),
                num(gs.spacing),
                "ok".into(),
            ]),
            Err(e) => {
                failures += 1;
                csv.row(&[
                    num(*eps),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    format!("failed: {e}").replace(',', ";"),
                ]);
            }
        }
    }
    csv.write().map_err(|e| Failure::config(format!("{e:#}")))?;
    println!(
        "oracle: {} of {} strengths bound -> {}",
        rows.len() - failures,
        rows.len(),
        out.join("oracle.csv").display()
    );
    sweep_exit(rows.len(), failures)
}

fn cmd_verify(_cfg: &RunConfig, cli: &Cli, out: &Path) -> Result<(), Failure> {
    let report = verify::run_verification(cli.jobs).map_err(|e| Failure {
        code: EXIT_NUMERICS,
        message: format!("verification harness failed: {e}"),
    })?;

    let comments = vec![
        "pacewave verify: corrector vs simulation vs eigenvalue oracle".into(),
        "columns: epsilon (forcing strength), model, k_plus_sim/k_minus_sim (measured \
         far-field slopes, 1/x), omega_sim (measured locking rate, 1/t), omega_oracle \
         (ground-state rate; local only), omega_ansatz (corrector rate), residual \
         (sup-norm steady defect of the ansatz), outgoing"
            .into(),
    ];
    let mut csv = CsvFile::new(
        out,
        "report.csv",
        &comments,
        "epsilon,model,k_plus_sim,k_minus_sim,omega_sim,omega_oracle,omega_ansatz,residual,outgoing",
    );
    for (model, rows) in [("local", &report.local), ("nonlocal", &report.nonlocal)] {
        for r in rows {
            csv.row(&[
                num(r.epsilon),
                model.into(),
                num(r.k_plus_sim),
                num(r.k_minus_sim),
                num(r.omega_sim),
                r.omega_oracle.map_or("nan".into(), num),
                num(r.omega_ansatz),
                num(r.steady_residual),
                r.outgoing.to_string(),
            ]);
        }
    }
    csv.write().map_err(|e| Failure::config(format!("{e:#}")))?;

    let mut crit = CsvFile::new(
        out,
        "criteria.csv",
        &["pacewave verify: one row per acceptance criterion".into()],
        "criterion,name,status",
    );
    for c in &report.criteria {
        println!(
            "criterion {:02} {:<20} {}",
            c.index,
            c.name,
            if c.passed { "pass" } else { "FAIL" }
        );
        for d in &c.details {
            println!("    {d}");
        }
        crit.row(&[
            format!("{:02}", c.index),
            c.name.into(),
            if c.passed { "pass" } else { "fail" }.into(),
        ]);
    }
    crit.write()
        .map_err(|e| Failure::config(format!("{e:#}")))?;
    std::fs::write(out.join("plot.py"), runs::PLOT_SCRIPT)
        .map_err(|e| Failure::config(format!("{e:#}")))?;

    if report.passed {
        println!(
            "all criteria passed -> {}",
            out.join("report.csv").display()
        );
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CRITERION,
            message: "one or more acceptance criteria failed".into(),
        })
    }
}
