//! Run configuration: one TOML file describing the model, grids, kernels,
//! forcing, and solver/integrator settings for a whole sweep.

use anyhow::{bail, Context};
use pacewave_core::asymptotics::CorrectorOptions;
use pacewave_core::diagnostics::OracleOptions;
use pacewave_core::kernels::KernelFamily;
use pacewave_core::simulator::SimulatorOptions;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// "local" (diffusive phase) or "nonlocal" (smoothing + transport kernels).
    pub model: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub smoothing: KernelConfig,
    #[serde(default)]
    pub transport: KernelConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub corrector: CorrectorConfig,
    #[serde(default)]
    pub simulator: SimulatorConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_epsilons() -> Vec<f64> {
    vec![0.05, 0.1]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width: 60.0,
            points: 1024,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// "gaussian" or "sech-square".
    pub family: String,
    /// Standard deviation (gaussian) or width scale (sech-square).
    pub scale: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            family: "gaussian".into(),
            scale: 1.0,
        }
    }
}

impl KernelConfig {
    pub fn family(&self) -> anyhow::Result<KernelFamily> {
        match self.family.as_str() {
            "gaussian" => Ok(KernelFamily::Gaussian { std: self.scale }),
            "sech-square" => Ok(KernelFamily::SechSquare { scale: self.scale }),
            other => bail!("unknown kernel family {other:?}; use gaussian or sech-square"),
        }
    }
}

/// Gaussian forcing bump g(x) = amplitude * exp(-((x - center)/width)^2).
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            amplitude: -1.0,
            width: 1.0,
            center: 0.0,
        }
    }
}

impl ForcingConfig {
    pub fn sample(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        self.amplitude * (-u * u).exp()
    }

    /// Total forcing mass; its sign decides which forcing strengths lock.
    pub fn mass(&self) -> f64 {
        self.amplitude * self.width * std::f64::consts::PI.sqrt()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectorConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        let o = CorrectorOptions::default();
        CorrectorConfig {
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
        }
    }
}

impl CorrectorConfig {
    pub fn options(&self) -> CorrectorOptions {
        CorrectorOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub dt: f64,
    /// Zero means: size the horizon from the predicted wavenumber so the
    /// selected front clears the measurement windows.
    pub duration: f64,
    pub sample_interval: f64,
    pub refit_interval: usize,
    pub blowup_limit: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        let o = SimulatorOptions::default();
        SimulatorConfig {
            dt: o.dt,
            duration: 0.0,
            sample_interval: o.sample_interval,
            refit_interval: o.refit_interval,
            blowup_limit: o.blowup_limit,
        }
    }
}

impl SimulatorConfig {
    pub fn options(&self, duration: f64, keep_snapshots: bool) -> SimulatorOptions {
        SimulatorOptions {
            dt: self.dt,
            duration,
            sample_interval: self.sample_interval,
            refit_interval: self.refit_interval,
            blowup_limit: self.blowup_limit,
            keep_snapshots,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub spacing: f64,
    pub initial_half_width: f64,
    pub max_half_width: f64,
    pub tail_target: f64,
    pub refine: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let o = OracleOptions::default();
        OracleConfig {
            spacing: o.spacing,
            initial_half_width: o.initial_half_width,
            max_half_width: o.max_half_width,
            tail_target: o.tail_target,
            refine: o.refine,
        }
    }
}

impl OracleConfig {
    pub fn options(&self) -> OracleOptions {
        OracleOptions {
            spacing: self.spacing,
            initial_half_width: self.initial_half_width,
            max_half_width: self.max_half_width,
            tail_target: self.tail_target,
            refine: self.refine,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_local(&self) -> bool {
        self.model == "local"
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.model != "local" && self.model != "nonlocal" {
            bail!(
                "model must be \"local\" or \"nonlocal\", got {:?}",
                self.model
            );
        }
        if !(self.grid.half_width > 0.0) || self.grid.points < 16 {
            bail!("grid needs a positive half width and at least 16 points");
        }
        if !(self.forcing.width > 0.0) {
            bail!("forcing width must be positive");
        }
        if !(self.simulator.dt > 0.0) {
            bail!("simulator dt must be positive");
        }
        self.smoothing.family()?;
        self.transport.family()?;
        Ok(())
    }

    /// Forcing strengths that violate the locking sign condition; the run
    /// refuses them unless explicitly overridden.
    pub fn wrong_sign_epsilons(&self) -> Vec<f64> {
        let mass = self.forcing.mass();
        self.epsilons
            .iter()
            .copied()
            .filter(|&e| e * mass >= 0.0)
            .collect()
    }

    /// Deliberate under-resolution and similar hazards worth flagging in
    /// every report; none of these stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.grid.points < 256 {
            out.push(format!(
                "grid resolution {} is low; spectral tails may be truncated",
                self.grid.points
            ));
        }
        let h = 2.0 * self.grid.half_width / self.grid.points as f64;
        if self.forcing.width < 4.0 * h {
            out.push(format!(
                "forcing width {} spans fewer than 4 grid cells (h = {h:.4})",
                self.forcing.width
            ));
        }
        if self.grid.half_width < 8.0 * self.forcing.width {
            out.push("domain is narrow relative to the forcing support".into());
        }
        out
    }
}

/// Configuration template written by `pacewave init`; every default is
/// spelled out so a sweep is reproducible from this one artifact.
pub const TEMPLATE: &str = r#"# pacewave run configuration
# model: "local" (diffusive phase equation) or "nonlocal" (kernel coupling)
model = "local"
# directory for CSV and profile outputs
output_dir = "out"
# forcing strengths for the sweep; the sign must oppose the forcing mass
# (negative-mass dip => positive strengths) unless --allow-wrong-sign is set
epsilons = [0.05, 0.1]

[grid]
# periodic computation box is [-half_width, half_width)
half_width = 60.0
# even number of collocation points
points = 1024

# smoothing kernel G (nonlocal model only); second moment 1 for gaussian
# with scale 1, which the corrector requires
[smoothing]
family = "gaussian"   # or "sech-square"
scale = 1.0

# transport kernel J (nonlocal model only); unit mass required
[transport]
family = "gaussian"
scale = 1.0

# inhomogeneity g(x) = amplitude * exp(-((x - center) / width)^2)
[forcing]
amplitude = -1.0
width = 1.0
center = 0.0

[corrector]
# relative update size declaring the fixed point converged
tolerance = 1e-11
max_iterations = 60

[simulator]
dt = 0.05
# 0 = choose the horizon from the predicted wavenumber (front must clear
# the far-field fit windows and the locking transient must die out)
duration = 0.0
sample_interval = 0.5
# steps between far-field template refits; 0 disables
refit_interval = 1
# sup-norm of the localized part that aborts the run
blowup_limit = 1e6

[oracle]
# finite-difference spacing for the ground-state solve
spacing = 0.05
initial_half_width = 24.0
max_half_width = 3072.0
# box is wide enough when the edge amplitude falls below this fraction
tail_target = 1e-8
# re-solve at half the spacing and extrapolate
refine = true
"#;
