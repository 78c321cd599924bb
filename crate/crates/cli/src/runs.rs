//! Per-epsilon work units shared by the subcommands, plus the CSV and plot
//! artifacts. Every output is deterministic: fixed float formatting, rows in
//! input order, no timestamps.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use pacewave_core::asymptotics::{
    leading_order_local, leading_order_nonlocal, solve_pacemaker_local, solve_pacemaker_nonlocal,
    Inhomogeneity, Pacemaker,
};
use pacewave_core::diagnostics::{far_field_report, frequency_from_series};
use pacewave_core::kernels::{DerivedSymbols, Kernel, Medium};
use pacewave_core::simulator::{SimulationRecord, Simulator};
use pacewave_core::{Field, Grid, SpectralEngine};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub struct Workspace {
    pub engine: Arc<SpectralEngine>,
    pub forcing: Inhomogeneity,
    pub medium: Option<Medium>,
}

impl Workspace {
    pub fn build(cfg: &RunConfig) -> Result<Workspace> {
        let grid = Grid::new(cfg.grid.half_width, cfg.grid.points)?;
        let engine = SpectralEngine::new(&grid)?;
        let forcing = Inhomogeneity::from_fn(&grid, |x| cfg.forcing.sample(x))?;
        let medium = if cfg.is_local() {
            None
        } else {
            let smoothing = Kernel::new(cfg.smoothing.family()?, &engine)?;
            let transport = Kernel::new(cfg.transport.family()?, &engine)?;
            Some(Medium::new(smoothing, transport)?)
        };
        Ok(Workspace {
            engine,
            forcing,
            medium,
        })
    }

    pub fn predict(&self, cfg: &RunConfig, epsilon: f64) -> pacewave_core::Result<Pacemaker> {
        let opts = cfg.corrector.options();
        match &self.medium {
            None => {
                let lead = leading_order_local(&self.engine, &self.forcing)?;
                solve_pacemaker_local(&self.engine, &self.forcing, epsilon, &lead, &opts)
            }
            Some(medium) => {
                let symbols = DerivedSymbols::new(medium)?;
                let lead = leading_order_nonlocal(&symbols, &self.forcing)?;
                solve_pacemaker_nonlocal(medium, &symbols, &self.forcing, epsilon, &lead, &opts)
            }
        }
    }

    pub fn simulator(&self, epsilon: f64) -> pacewave_core::Result<Simulator> {
        match &self.medium {
            None => Simulator::local(&self.engine, &self.forcing, epsilon),
            Some(medium) => Simulator::nonlocal(medium, &self.forcing, epsilon),
        }
    }

    pub fn transport_mass(&self) -> f64 {
        self.medium.as_ref().map_or(1.0, |m| m.transport.mass)
    }

    /// Auto horizon: the selected front must clear the far-field windows and
    /// the locking transient must decay inside the fitted tail.
    pub fn auto_duration(&self, cfg: &RunConfig, epsilon: f64) -> f64 {
        if cfg.simulator.duration > 0.0 {
            return cfg.simulator.duration;
        }
        let mass = self.forcing.mass;
        let divisor = self
            .medium
            .as_ref()
            .map_or(2.0, |m| m.smoothing.second_moment);
        let k = (epsilon.abs() * mass.abs() / divisor).max(1e-4);
        let omega = self.transport_mass().powi(2) * k * k;
        (0.6 * self.engine.grid.half_width / k + 5.0 / omega).max(400.0)
    }
}

pub struct SimMeasurement {
    pub record: SimulationRecord,
    pub frequency: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub outgoing: bool,
    pub duration: f64,
}

pub fn measure_run(
    ws: &Workspace,
    cfg: &RunConfig,
    epsilon: f64,
    snapshots: bool,
) -> pacewave_core::Result<SimMeasurement> {
    let sim = ws.simulator(epsilon)?;
    let duration = ws.auto_duration(cfg, epsilon);
    let opts = cfg.simulator.options(duration, snapshots);
    let record = sim.run(Field::zeros(&ws.engine.grid), Default::default(), &opts)?;
    let frequency = frequency_from_series(&record.times, &record.center_phase, 0.2)?;
    let report = far_field_report(&record.final_phase(), ws.transport_mass(), 0.1, 0.02)?;
    Ok(SimMeasurement {
        record,
        frequency,
        k_plus: report.k_plus,
        k_minus: report.k_minus,
        outgoing: report.outgoing,
        duration,
    })
}

/// Run one closure per epsilon on up to `jobs` threads, keeping input order.
pub fn per_epsilon<R: Send>(
    epsilons: &[f64],
    jobs: usize,
    work: impl Fn(f64) -> R + Sync,
) -> Vec<R> {
    let workers = jobs.max(1).min(epsilons.len().max(1));
    if workers <= 1 {
        return epsilons.iter().map(|&e| work(e)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> = epsilons
        .iter()
        .map(|_| std::sync::Mutex::new(None))
        .collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= epsilons.len() {
                    break;
                }
                let r = work(epsilons[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker finished"))
        .collect()
}

pub struct CsvFile {
    path: PathBuf,
    lines: Vec<String>,
}

impl CsvFile {
    pub fn new(dir: &Path, name: &str, comments: &[String], header: &str) -> CsvFile {
        let mut lines: Vec<String> = comments.iter().map(|c| format!("# {c}")).collect();
        lines.push(header.to_string());
        CsvFile {
            path: dir.join(name),
            lines,
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    pub fn write(self) -> Result<()> {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        std::fs::write(&self.path, out)
            .with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

pub fn eps_tag(epsilon: f64) -> String {
    format!("{epsilon}").replace('-', "m").replace('.', "p")
}

pub fn write_profile(dir: &Path, name: &str, comments: &[String], phi: &Field) -> Result<()> {
    let mut csv = CsvFile::new(dir, name, comments, "x,phase");
    for (i, v) in phi.values.iter().enumerate() {
        csv.row(&[num(phi.grid.x(i)), num(*v)]);
    }
    csv.write()
}

/// Self-contained matplotlib script for the standard artifacts; written next
/// to the CSVs so a sweep directory plots itself.
pub const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plot pacewave sweep artifacts found in this directory."""
import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]
    return header, data


here = os.path.dirname(os.path.abspath(__file__))

for path in glob.glob(os.path.join(here, "simulate_series_*.csv")):
    header, data = read_csv(path)
    t = [float(r[0]) for r in data]
    phi = [float(r[1]) for r in data]
    plt.figure()
    plt.plot(t, phi)
    plt.xlabel("time")
    plt.ylabel("phase at the core")
    plt.title(os.path.basename(path))
    plt.savefig(path.replace(".csv", ".png"), dpi=120)
    plt.close()

for path in glob.glob(os.path.join(here, "*profile*.csv")):
    header, data = read_csv(path)
    x = [float(r[0]) for r in data]
    phi = [float(r[1]) for r in data]
    plt.figure()
    plt.plot(x, phi)
    plt.xlabel("x")
    plt.ylabel(header[1])
    plt.title(os.path.basename(path))
    plt.savefig(path.replace(".csv", ".png"), dpi=120)
    plt.close()

report = os.path.join(here, "report.csv")
if os.path.exists(report):
    header, data = read_csv(report)
    col = {name: i for i, name in enumerate(header)}
    plt.figure()
    for model in ("local", "nonlocal"):
        rows = [r for r in data if r[col["model"]] == model]
        if not rows:
            continue
        eps = [float(r[col["epsilon"]]) for r in rows]
        k = [float(r[col["k_plus_sim"]]) for r in rows]
        plt.plot(eps, k, "o-", label=f"{model} simulation")
    plt.xlabel("forcing strength")
    plt.ylabel("selected wavenumber")
    plt.legend()
    plt.savefig(os.path.join(here, "selection.png"), dpi=120)
    plt.close()

print("plots written next to their CSVs")
"##;
