//! End-to-end cross-checks tying the solver stack, the asymptotic pipeline,
//! the time integrator, and the spectral oracle together.
//!
//! Each criterion compares independently produced numbers: quadrature against
//! integration by parts, solved fields against forward-applied operators,
//! corrector output against long-time simulation, simulation against the
//! exponential-substitution eigenvalue oracle. Tolerances are pinned here so
//! the batch front-end and the test suite judge identical gates.

use crate::asymptotics::{
    leading_order_local, leading_order_nonlocal, solve_pacemaker_local, solve_pacemaker_nonlocal,
    CorrectorOptions, Inhomogeneity, Pacemaker,
};
use crate::diagnostics::{
    far_field_report, frequency_from_series, pacemaker_frequency_oracle, OracleOptions,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, SpectralEngine};
use crate::kernels::{DerivedSymbols, Kernel, Medium};
use crate::norms::{sup_norm, weighted_lp};
use crate::simulator::{pacemaker_state, wavetrain_state, Simulator, SimulatorOptions};
use crate::solvers::{antiderivative, DriftLaplacian};
use rand::{Rng, SeedableRng};
use std::sync::Arc;

/// Selected wavenumber per unit forcing strength, local model: half the
/// forcing mass, here for the unit gaussian dip.
pub const LOCAL_SELECTION_RATE: f64 = 0.886226925452758;
/// Nonlocal counterpart: forcing mass over the smoothing second moment.
pub const NONLOCAL_SELECTION_RATE: f64 = 1.772453850905516;

const HALF_WIDTH: f64 = 60.0;
const SWEEP_POINTS: usize = 1024;

/// Epsilon sweep shared by the selection-rate and scaling criteria.
pub const SELECTION_SWEEP: [f64; 3] = [0.025, 0.05, 0.1];
/// Local sweep extension for the oracle-agreement criterion.
pub const ORACLE_SWEEP: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Local,
    Nonlocal,
}

/// One pass/fail gate with its measured-versus-target evidence.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

/// Everything measured for one forcing strength: corrector prediction,
/// long-time simulation, and (local model) the eigenvalue oracle.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub k_ansatz: f64,
    pub offset_ansatz: f64,
    pub omega_ansatz: f64,
    pub iterations: usize,
    pub steady_residual: f64,
    pub k_plus_sim: f64,
    pub k_minus_sim: f64,
    pub omega_sim: f64,
    pub outgoing: bool,
    pub omega_oracle: Option<f64>,
    pub duration: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub local: Vec<SweepRow>,
    pub nonlocal: Vec<SweepRow>,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
}

fn sweep_engine() -> Result<Arc<SpectralEngine>> {
    SpectralEngine::new(&Grid::new(HALF_WIDTH, SWEEP_POINTS)?)
}

fn gaussian_medium(engine: &Arc<SpectralEngine>) -> Result<Medium> {
    Medium::new(
        Kernel::gaussian(1.0, engine)?,
        Kernel::gaussian(1.0, engine)?,
    )
}

/// Corrector prediction for one forcing strength on the sweep grid.
fn predict(model: ModelKind, epsilon: f64) -> Result<(Arc<SpectralEngine>, Pacemaker)> {
    let engine = sweep_engine()?;
    let forcing = Inhomogeneity::gaussian_dip(&engine.grid)?;
    let opts = CorrectorOptions::default();
    let pm = match model {
        ModelKind::Local => {
            let lead = leading_order_local(&engine, &forcing)?;
            solve_pacemaker_local(&engine, &forcing, epsilon, &lead, &opts)?
        }
        ModelKind::Nonlocal => {
            let medium = gaussian_medium(&engine)?;
            let symbols = DerivedSymbols::new(&medium)?;
            let lead = leading_order_nonlocal(&symbols, &forcing)?;
            solve_pacemaker_nonlocal(&medium, &symbols, &forcing, epsilon, &lead, &opts)?
        }
    };
    Ok((engine, pm))
}

/// Time step and horizon sized from the predicted wavenumber: the selected
/// front must clear the far-field fit windows long before the end, and the
/// trailing fit window must sit far past the locking transient (which
/// relaxes at the collective frequency itself).
fn pacing(k: f64, omega: f64) -> (f64, f64) {
    let dt = if k < 0.06 { 0.1 } else { 0.05 };
    let crossing = 0.6 * HALF_WIDTH / k.max(1e-6);
    let settle = 5.0 / omega.max(1e-9);
    (dt, (crossing + settle).max(400.0))
}

/// Predict, simulate from rest, and cross-measure one forcing strength.
fn sweep_one(model: ModelKind, epsilon: f64, with_oracle: bool) -> Result<SweepRow> {
    let (engine, pm) = predict(model, epsilon)?;
    let forcing = Inhomogeneity::gaussian_dip(&engine.grid)?;
    let sim = match model {
        ModelKind::Local => Simulator::local(&engine, &forcing, epsilon)?,
        ModelKind::Nonlocal => {
            let medium = gaussian_medium(&engine)?;
            Simulator::nonlocal(&medium, &forcing, epsilon)?
        }
    };
    let steady_residual = sim.pacemaker_residual(&pm)?.max_abs();

    let (dt, duration) = pacing(pm.wavenumber, pm.frequency);
    let opts = SimulatorOptions {
        dt,
        duration,
        ..Default::default()
    };
    let rec = sim.run(Field::zeros(&engine.grid), Default::default(), &opts)?;
    let omega_sim = frequency_from_series(&rec.times, &rec.center_phase, 0.2)?;
    let report = far_field_report(&rec.final_phase(), 1.0, 0.1, 0.02)?;

    let omega_oracle = if with_oracle && model == ModelKind::Local {
        let gs = pacemaker_frequency_oracle(
            epsilon,
            |x: f64| -(-x * x).exp(),
            &OracleOptions::default(),
        )?;
        Some(-gs.energy)
    } else {
        None
    };

    Ok(SweepRow {
        epsilon,
        k_ansatz: pm.wavenumber,
        offset_ansatz: pm.offset,
        omega_ansatz: pm.frequency,
        iterations: pm.iterations,
        steady_residual,
        k_plus_sim: report.k_plus,
        k_minus_sim: report.k_minus,
        omega_sim,
        outgoing: report.outgoing,
        omega_oracle,
        duration,
    })
}

/// Run the per-epsilon sweep, optionally on several worker threads. Rows
/// come back in input order regardless of scheduling.
pub fn sweep(
    model: ModelKind,
    epsilons: &[f64],
    with_oracle: bool,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let workers = jobs.max(1).min(epsilons.len().max(1));
    if workers <= 1 {
        return epsilons
            .iter()
            .map(|&e| sweep_one(model, e, with_oracle))
            .collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<SweepRow>>>> = epsilons
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
                let row = sweep_one(model, epsilons[i], with_oracle);
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker finished"))
        .collect()
}

fn outcome(
    index: usize,
    name: &'static str,
    run: impl FnOnce() -> Result<(bool, Vec<String>)>,
) -> CriterionOutcome {
    match run() {
        Ok((passed, details)) => CriterionOutcome {
            index,
            name,
            passed,
            details,
        },
        Err(e) => CriterionOutcome {
            index,
            name,
            passed: false,
            details: vec![format!("errored: {e}")],
        },
    }
}

/// Least-squares slope of k against epsilon in the {e, e^2} basis through
/// the origin; the quadratic column absorbs the next-order response so the
/// linear column reports the selection rate. Also returns the plain
/// proportional fit for reference.
fn selection_slopes(eps: &[f64], k: &[f64]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&e, &kv) in eps.iter().zip(k) {
        s11 += e * e;
        s12 += e * e * e;
        s22 += e * e * e * e;
        b1 += e * kv;
        b2 += e * e * kv;
    }
    let det = s11 * s22 - s12 * s12;
    let basis = (s22 * b1 - s12 * b2) / det;
    let plain = b1 / s11;
    (basis, plain)
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Quadrature table of the step/ramp pairings that close the leading-order
/// system: the second derivatives of S and xS against 1 and x.
fn pairing_table() -> CriterionOutcome {
    outcome(1, "pairing-table", || {
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 4096)?)?;
        let step = Field::from_fn(&engine.grid, |x| crate::field::tanh_deriv(2, x));
        let ramp = Field::from_fn(&engine.grid, |x| crate::field::x_tanh_deriv(2, x));
        let table = [
            crate::norms::moment(&step, 0),
            crate::norms::moment(&step, 1),
            crate::norms::moment(&ramp, 0),
            crate::norms::moment(&ramp, 1),
        ];
        let target = [0.0, -2.0, 2.0, 0.0];
        let worst = table
            .iter()
            .zip(&target)
            .map(|(m, t)| (m - t).abs())
            .fold(0.0_f64, f64::max);
        let details = vec![
            format!(
                "pairings ({:+.2e}, {:+.6}, {:+.6}, {:+.2e}) target (0, -2, 2, 0)",
                table[0], table[1], table[2], table[3]
            ),
            format!("worst deviation {worst:.3e}, gate 1e-8"),
        ];
        Ok((worst < 1e-8, details))
    })
}

/// Forward-applied inputs are reproduced by the three solve paths: the
/// bordered zero-drift operator, the drifted kernel-free solve, and the
/// drifted bordered solve.
fn solver_residuals() -> CriterionOutcome {
    outcome(2, "solver-residuals", || {
        // quadrature error is fourth order in the spacing; this resolution
        // puts the honest floor an order under the gate
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 8192)?)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut worst = 0.0_f64;
        let mut details = Vec::new();
        for &b in &[0.0, 0.05, 0.2, 0.5] {
            let op = DriftLaplacian::new(&engine, b)?;
            let mut worst_b = 0.0_f64;
            for _ in 0..50 {
                let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = Field::from_fn(&engine.grid, |x| {
                    c[0] * (-(x - 2.0 * c[1]).powi(2)).exp()
                        + c[2] * (-(x - 3.0 * c[3]).powi(2) / 2.0).exp()
                        + c[4] * x * (-(x * x) / (1.5 + c[5])).exp()
                });
                let scale = sup_norm(&f);
                let sol = op.solve(&f)?;
                let bordered = op.apply_bordered(&sol)?.sub(&f).max_abs() / scale;
                // kernel-free path: forward-apply a decaying profile so the
                // right-hand side is solvable by construction
                let u = Field::from_fn(&engine.grid, |x| {
                    c[0] * (-(x - c[1]).powi(2)).exp() + c[2] * x * (-(x * x) / 2.0).exp()
                });
                let fu = op.apply(&u)?;
                let back = op.apply(&op.solve_decaying(&fu)?)?;
                let decaying = back.sub(&fu).max_abs() / sup_norm(&fu);
                worst_b = worst_b.max(bordered).max(decaying);
            }
            details.push(format!("drift {b}: worst relative residual {worst_b:.3e}"));
            worst = worst.max(worst_b);
        }
        details.push(format!("gate 1e-7 over 50 right-hand sides per drift"));
        Ok((worst < 1e-7, details))
    })
}

/// Norm scalings of the inverses: the kernel-free solve grows like one over
/// the drift, the bordered solve stays drift-uniform in the shifted weight,
/// and the antiderivative returns the exact primitive with weighted norms
/// that grow toward the critical weight, refusing inside the guard band.
/// The reciprocal-distance blowup of the antiderivative bound itself is not
/// box-visible: its extremal inputs spread over ranges exponential in the
/// reciprocal distance, while any compactly carried primitive obeys a gain
/// ceiling set by the box half-width alone.
fn solver_scalings() -> CriterionOutcome {
    outcome(3, "solver-scalings", || {
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 2048)?)?;
        let mut details = Vec::new();

        // wide plateau forcing sees the small-drift amplification; the bound
        // controls the solution's gradient, so that is what gets measured
        let plateau = Field::from_fn(&engine.grid, |x| {
            0.25 * (1.0 + (13.0 - x).tanh()) * (1.0 + (13.0 + x).tanh())
        });
        let drifts = [0.1, 0.2, 0.4];
        let mut gains = Vec::new();
        for &b in &drifts {
            let op = DriftLaplacian::new(&engine, b)?;
            let sol = op.solve(&plateau)?;
            let slope_field =
                Field::from_values(&engine.grid, engine.derivative(&sol.field.values, 1)?)?;
            gains.push(weighted_lp(&slope_field, 0.0, 2.0)? / weighted_lp(&plateau, 0.0, 2.0)?);
        }
        let drift_exponent = log_log_slope(&drifts, &gains);
        details.push(format!(
            "kernel-free gradient-gain exponent {drift_exponent:.3} (gate -1 +- 0.3)"
        ));

        // the bordered solve in the shifted weight is drift-uniform
        let localized = Field::from_fn(&engine.grid, |x| (-(x * x) / 4.0).exp());
        let mut ratios = Vec::new();
        for &b in &drifts {
            let op = DriftLaplacian::new(&engine, b)?;
            let sol = op.solve(&localized)?;
            ratios.push(weighted_lp(&sol.field, 0.5, 2.0)? / weighted_lp(&localized, 2.5, 2.0)?);
        }
        let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
            / ratios.iter().cloned().fold(f64::MAX, f64::min);
        details.push(format!(
            "bordered-ratio spread {spread:.3} over drifts (gate 2)"
        ));

        // antiderivative on a derivative with a closed-form primitive: the
        // returned norms must match the primitive's own, grow monotonically
        // toward the critical weight, and the weight itself must be refused
        let truth = Field::from_fn(&engine.grid, |x| 1.0 / x.cosh());
        let f = Field::from_fn(&engine.grid, |x| {
            let s = 1.0 / x.cosh();
            -s * x.tanh()
        });
        let gammas = [0.6, 0.55, 0.52];
        let mut gains_g = Vec::new();
        let mut worst_match = 0.0_f64;
        for &g in &gammas {
            let primitive = antiderivative(&engine, &f, g, 2.0)?;
            let den = weighted_lp(&f, g, 2.0)?;
            let measured = weighted_lp(&primitive, g - 1.0, 2.0)? / den;
            let expected = weighted_lp(&truth, g - 1.0, 2.0)? / den;
            worst_match = worst_match.max((measured / expected - 1.0).abs());
            gains_g.push(measured);
        }
        let monotone = gains_g[1] > gains_g[0] && gains_g[2] > gains_g[1];
        let refused = matches!(
            antiderivative(&engine, &f, 0.5 + 4.0e-4, 2.0),
            Err(Error::CriticalWeight { .. })
        );
        details.push(format!(
            "antiderivative ratios {:.6} / {:.6} / {:.6} toward the critical weight",
            gains_g[0], gains_g[1], gains_g[2]
        ));
        details.push(format!(
            "monotone growth {monotone}, closed-form match off {worst_match:.2e} (gate 1e-3), \
             critical-band refusal {refused}"
        ));

        let passed = (drift_exponent + 1.0).abs() <= 0.3
            && spread <= 2.0
            && monotone
            && worst_match <= 1e-3
            && refused;
        Ok((passed, details))
    })
}

fn selection_criterion(
    index: usize,
    name: &'static str,
    rows: &[SweepRow],
    target: f64,
) -> CriterionOutcome {
    let rows = rows.to_vec();
    outcome(index, name, move || {
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let k_ansatz: Vec<f64> = rows.iter().map(|r| r.k_ansatz).collect();
        let k_sim: Vec<f64> = rows.iter().map(|r| r.k_plus_sim).collect();
        let (sa, pa) = selection_slopes(&eps, &k_ansatz);
        let (ss, ps) = selection_slopes(&eps, &k_sim);
        let ea = (sa - target).abs() / target;
        let es = (ss - target).abs() / target;
        let details = vec![
            format!("corrector slope {sa:.5} (plain fit {pa:.5}), target {target:.5}"),
            format!("simulation slope {ss:.5} (plain fit {ps:.5}), target {target:.5}"),
            format!(
                "relative errors {:.2}% and {:.2}%, gate 5%",
                100.0 * ea,
                100.0 * es
            ),
        ];
        Ok((ea <= 0.05 && es <= 0.05, details))
    })
}

/// Locked frequency grows quadratically in the forcing strength, both
/// models. Pairwise log-log slopes on a geometric sweep carry a bias linear
/// in the forcing strength from the next expansion order (the same order the
/// selection fits need a quadratic column for); one Richardson step across
/// the two pairs cancels it exactly and estimates the limiting slope.
fn frequency_scaling(local: &[SweepRow], nonlocal: &[SweepRow]) -> CriterionOutcome {
    let local = local.to_vec();
    let nonlocal = nonlocal.to_vec();
    outcome(6, "frequency-scaling", move || {
        let mut details = Vec::new();
        let mut passed = true;
        for (label, rows) in [("local", &local), ("nonlocal", &nonlocal)] {
            let mut rows = rows.clone();
            rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            if rows.len() < 3 {
                return Err(Error::InvalidParameter(
                    "frequency scaling needs a three-point sweep".into(),
                ));
            }
            let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
            let omega: Vec<f64> = rows.iter().map(|r| r.omega_sim).collect();
            let raw = log_log_slope(&eps, &omega);
            let s_small = (omega[1] / omega[0]).ln() / (eps[1] / eps[0]).ln();
            let s_large = (omega[2] / omega[1]).ln() / (eps[2] / eps[1]).ln();
            let slope = 2.0 * s_small - s_large;
            passed &= (slope - 2.0).abs() <= 0.1;
            details.push(format!(
                "{label}: limiting slope {slope:.4} (pairwise {s_small:.4} then {s_large:.4}, \
                 plain fit {raw:.4}), gate 2 +- 0.1"
            ));
        }
        Ok((passed, details))
    })
}

/// Simulated locked frequency against the independent eigenvalue oracle.
fn oracle_agreement(rows: &[SweepRow]) -> CriterionOutcome {
    let rows = rows.to_vec();
    outcome(7, "oracle-agreement", move || {
        let mut details = Vec::new();
        let mut passed = true;
        for row in &rows {
            let Some(oracle) = row.omega_oracle else {
                return Err(Error::Oracle(format!(
                    "missing oracle frequency at eps {}",
                    row.epsilon
                )));
            };
            let rel = (row.omega_sim - oracle).abs() / oracle;
            passed &= rel <= 0.02;
            details.push(format!(
                "eps {:.3}: simulated {:.6e}, oracle {:.6e}, off {:.3}% (gate 2%)",
                row.epsilon,
                row.omega_sim,
                oracle,
                100.0 * rel
            ));
        }
        Ok((passed, details))
    })
}

/// With the forcing sign matched to its mass the medium never locks: the
/// frequency estimate stays at noise level and the corrector refuses. An
/// unlocked medium still creeps like half a log of time (the survival
/// probability of diffusion through repulsive forcing decays as one over
/// root time), so the rate is fitted jointly with a logarithmic transient;
/// a genuine lock would land in the rate coefficient untouched.
fn sign_condition() -> CriterionOutcome {
    outcome(8, "sign-condition", || {
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 512)?)?;
        let forcing = Inhomogeneity::gaussian_dip(&engine.grid)?;
        let epsilon = -0.05;

        let lead = leading_order_local(&engine, &forcing)?;
        let refusal = solve_pacemaker_local(
            &engine,
            &forcing,
            epsilon,
            &lead,
            &CorrectorOptions::default(),
        );
        let refused = matches!(refusal, Err(Error::SignCondition { .. }));

        // box wide enough that the diffusive front never saturates it: the
        // boundary then stays invisible over the whole run
        let wide = SpectralEngine::new(&Grid::new(512.0, 2048)?)?;
        let forcing_wide = Inhomogeneity::gaussian_dip(&wide.grid)?;
        let sim = Simulator::local(&wide, &forcing_wide, epsilon)?;
        let opts = SimulatorOptions {
            dt: 0.25,
            duration: 20_000.0,
            ..Default::default()
        };
        let rec = sim.run(Field::zeros(&wide.grid), Default::default(), &opts)?;
        let (rate, log_coefficient) = rate_beside_log_creep(&rec.times, &rec.center_phase);

        let details = vec![
            format!("corrector refused: {refused}"),
            format!("frequency estimate {rate:.3e}, gate 1e-5"),
            format!(
                "logarithmic creep coefficient {log_coefficient:.4} \
                 (diffusive survival predicts 0.5, gate 0.5 +- 0.1)"
            ),
        ];
        Ok((
            refused && rate.abs() < 1e-5 && (log_coefficient - 0.5).abs() <= 0.1,
            details,
        ))
    })
}

/// Least squares of the phase series on a constant, a logarithm, and a line
/// over the trailing three quarters; returns the line rate with the sign
/// convention of a locked frequency, plus the logarithm's coefficient.
fn rate_beside_log_creep(times: &[f64], phase: &[f64]) -> (f64, f64) {
    let start = times.len() / 4;
    let (t, p) = (&times[start..], &phase[start..]);
    let tbar = t.iter().sum::<f64>() / t.len() as f64;
    let mut g = [[0.0_f64; 3]; 3];
    let mut b = [0.0_f64; 3];
    for (&ti, &pi) in t.iter().zip(p) {
        let row = [1.0, ti.ln(), (ti - tbar) / tbar];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
            b[i] += row[i] * pi;
        }
    }
    for c in 0..3 {
        let pivot = (c..3)
            .max_by(|&i, &j| g[i][c].abs().total_cmp(&g[j][c].abs()))
            .unwrap();
        g.swap(c, pivot);
        b.swap(c, pivot);
        for r in c + 1..3 {
            let m = g[r][c] / g[c][c];
            for j in c..3 {
                g[r][j] -= m * g[c][j];
            }
            b[r] -= m * b[c];
        }
    }
    let mut sol = [0.0_f64; 3];
    for r in (0..3).rev() {
        let mut v = b[r];
        for j in r + 1..3 {
            v -= g[r][j] * sol[j];
        }
        sol[r] = v / g[r][r];
    }
    (-(sol[2] / tbar), sol[1])
}

/// Dispersion closure: an exact wave train locks at its dispersion
/// frequency, and a pacemaker's measured frequency matches the dispersion
/// of its own measured far-field wavenumber.
fn dispersion_closure(nonlocal: &[SweepRow]) -> CriterionOutcome {
    let rows = nonlocal.to_vec();
    outcome(9, "dispersion-closure", move || {
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 512)?)?;
        let medium = gaussian_medium(&engine)?;
        let forcing = Inhomogeneity::from_fn(&engine.grid, |_| 0.0)?;
        let sim = Simulator::nonlocal(&medium, &forcing, 0.0)?;
        let k = 0.2;
        let (w0, t0) = wavetrain_state(&engine.grid, k);
        let opts = SimulatorOptions {
            dt: 0.05,
            duration: 50.0,
            ..Default::default()
        };
        let rec = sim.run(w0, t0, &opts)?;
        let omega_train = frequency_from_series(&rec.times, &rec.center_phase, 0.2)?;
        let train_err = (omega_train - 0.04).abs() / 0.04;

        let row = rows
            .iter()
            .find(|r| (r.epsilon - 0.1).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidParameter("sweep lacks eps = 0.1".into()))?;
        let closure = row.k_plus_sim * row.k_plus_sim;
        let pace_err = (row.omega_sim - closure).abs() / row.omega_sim;

        let details = vec![
            format!(
                "wave train k = {k}: locked {omega_train:.8}, dispersion 0.04, off {:.2e} (gate 1%)",
                train_err
            ),
            format!(
                "pacemaker eps 0.1: frequency {:.6e} vs squared far-field slope {:.6e}, off {:.2}% (gate 3%)",
                row.omega_sim,
                closure,
                100.0 * pace_err
            ),
            format!("far field outgoing on both sides: {}", row.outgoing),
        ];
        Ok((train_err <= 0.01 && pace_err <= 0.03, details))
    })
}

/// The corrected profile is a numerical steady state: tiny residual, an
/// order-of-magnitude better than leading order alone, and the simulation
/// started on it only drifts at the collective frequency.
fn ansatz_steadiness() -> CriterionOutcome {
    outcome(10, "ansatz-steadiness", || {
        let engine = SpectralEngine::new(&Grid::new(HALF_WIDTH, 2048)?)?;
        let forcing = Inhomogeneity::gaussian_dip(&engine.grid)?;
        let epsilon = 0.1;
        let lead = leading_order_local(&engine, &forcing)?;
        let pm = solve_pacemaker_local(
            &engine,
            &forcing,
            epsilon,
            &lead,
            &CorrectorOptions::default(),
        )?;
        let sim = Simulator::local(&engine, &forcing, epsilon)?;
        let residual = sim.pacemaker_residual(&pm)?.max_abs();
        let lead_residual = sim
            .pacemaker_residual(&Pacemaker::from_leading(epsilon, &lead, 1.0))?
            .max_abs();

        let (w0, t0) = pacemaker_state(&pm);
        let opts = SimulatorOptions {
            dt: 0.02,
            duration: 50.0,
            sample_interval: 2.5,
            keep_snapshots: true,
            ..Default::default()
        };
        let rec = sim.run(w0, t0, &opts)?;
        let profile = pm.phase_profile();
        let mut wander = 0.0_f64;
        for snap in &rec.snapshots {
            let phi = snap.localized.add(&snap.template.sample(&engine.grid));
            let drifted: Vec<f64> = profile
                .values
                .iter()
                .map(|v| v - pm.frequency * snap.time)
                .collect();
            let dev = phi
                .values
                .iter()
                .zip(&drifted)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            wander = wander.max(dev);
        }

        let details = vec![
            format!("steady residual {residual:.3e}, gate 1e-6"),
            format!(
                "leading-order residual {lead_residual:.3e}, {:.1}x the corrected one (gate 10x)",
                lead_residual / residual
            ),
            format!("profile wander over 50 time units {wander:.3e}, gate 1e-3"),
        ];
        Ok((
            residual < 1e-6 && lead_residual >= 10.0 * residual && wander <= 1e-3,
            details,
        ))
    })
}

/// Run every criterion, reusing the epsilon sweeps across them.
pub fn run_verification(jobs: usize) -> Result<VerifyReport> {
    let mut local_eps: Vec<f64> = SELECTION_SWEEP.to_vec();
    for e in ORACLE_SWEEP {
        if !local_eps.contains(&e) {
            local_eps.push(e);
        }
    }
    let local = sweep(ModelKind::Local, &local_eps, true, jobs)?;
    let nonlocal = sweep(ModelKind::Nonlocal, &SELECTION_SWEEP, false, jobs)?;

    let selection_local: Vec<SweepRow> = local
        .iter()
        .filter(|r| SELECTION_SWEEP.contains(&r.epsilon))
        .cloned()
        .collect();
    let oracle_rows: Vec<SweepRow> = local
        .iter()
        .filter(|r| ORACLE_SWEEP.contains(&r.epsilon))
        .cloned()
        .collect();

    let criteria = vec![
        pairing_table(),
        solver_residuals(),
        solver_scalings(),
        selection_criterion(4, "local-selection", &selection_local, LOCAL_SELECTION_RATE),
        selection_criterion(5, "nonlocal-selection", &nonlocal, NONLOCAL_SELECTION_RATE),
        frequency_scaling(&selection_local, &nonlocal),
        oracle_agreement(&oracle_rows),
        sign_condition(),
        dispersion_closure(&nonlocal),
        ansatz_steadiness(),
    ];
    let passed = criteria.iter().all(|c| c.passed);
    Ok(VerifyReport {
        local,
        nonlocal,
        criteria,
        passed,
    })
}
