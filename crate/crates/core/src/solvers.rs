//! Explicit inverses of the linear operators behind the corrector.
//!
//! The central object is the drift Laplacian
//!     L_b u = u'' - 2 b tanh(x) u',
//! which is not onto among decaying functions: its cokernel is spanned by
//! cosh(x)^(-2b) and an odd bounded companion. Bordering with the two tanh
//! blocks d^2/dx^2 tanh and d^2/dx^2 (x tanh) restores solvability, and the
//! solve is explicit: one weighted cumulative integral for u', one plain one
//! for u. All cumulative quadrature runs in log space with per-step exponent
//! differences (no overflow at any drift), at two resolutions combined by
//! Richardson extrapolation, so solutions carry O(h^4) error while every
//! pairing stays consistent with the quadrature that uses it.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{tanh_deriv, x_tanh_deriv, Field};
use crate::grid::SpectralEngine;

/// Largest |drift| the weighted theory (and the pairings) tolerate; the odd
/// cokernel function grows like cosh^{2|b|} for negative drift and the
/// border pairings only converge against exp(-2|x|) blocks below one.
const DRIFT_LIMIT: f64 = 0.9;
/// Half-width of the guard band around the critical weight line.
const CRITICAL_BAND: f64 = 1e-3;
/// Relative solvability defect above which a kernel-free solve is refused;
/// sits above the quadrature floor of the extrapolated pairings.
const SOLVABILITY_LIMIT: f64 = 1e-6;
/// Relative conditioning floor for the 2x2 bordering matrix.
const BORDER_COND_LIMIT: f64 = 1e-10;

/// ln cosh(x) without overflow: |x| + ln((1 + exp(-2|x|)) / 2).
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + ((1.0 + (-2.0 * a).exp()) * 0.5).ln()
}

/// Solution of the bordered problem L_b u + alpha e1 + beta e2 = f.
#[derive(Debug, Clone)]
pub struct BorderedSolution {
    pub field: Field,
    pub alpha: f64,
    pub beta: f64,
}

/// One resolution level: analytic samples plus the cokernel pair and the
/// bordering matrix, all built with the same trapezoid cumulative rule.
struct Level {
    h: f64,
    lc: Vec<f64>,
    tanh: Vec<f64>,
    psi_even: Vec<f64>,
    psi_odd: Vec<f64>,
    border_step: Vec<f64>,
    border_ramp: Vec<f64>,
    inv_border: [[f64; 2]; 2],
}

impl Level {
    fn build(points: &[f64], h: f64, drift: f64) -> Result<Level> {
        let n = points.len();
        let lc: Vec<f64> = points.iter().map(|&x| log_cosh(x)).collect();
        let tanh: Vec<f64> = points.iter().map(|&x| x.tanh()).collect();
        let psi_even: Vec<f64> = lc.iter().map(|&l| (-2.0 * drift * l).exp()).collect();

        // psi_odd solves w' + 2 b tanh w = 1, odd; cumulative trapezoid of
        // cosh(y)^{2b} against the integrating factor, kept as per-step
        // exponent differences. Built outward from the origin on each side.
        let mut psi_odd = vec![0.0; n];
        let origin = points.iter().position(|&x| x == 0.0).unwrap_or(n / 2);
        for i in (origin + 1)..n {
            let step = (2.0 * drift * (lc[i - 1] - lc[i])).exp();
            psi_odd[i] = psi_odd[i - 1] * step + 0.5 * h * (step + 1.0);
        }
        for i in (0..origin).rev() {
            let step = (2.0 * drift * (lc[i + 1] - lc[i])).exp();
            psi_odd[i] = psi_odd[i + 1] * step - 0.5 * h * (step + 1.0);
        }

        let border_step: Vec<f64> = points.iter().map(|&x| tanh_deriv(2, x)).collect();
        let border_ramp: Vec<f64> = points.iter().map(|&x| x_tanh_deriv(2, x)).collect();

        let pair = |a: &[f64], b: &[f64]| -> f64 {
            let mut acc = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
            for i in 1..n - 1 {
                acc += a[i] * b[i];
            }
            acc * h
        };
        let m = [
            [pair(&border_step, &psi_even), pair(&border_ramp, &psi_even)],
            [pair(&border_step, &psi_odd), pair(&border_ramp, &psi_odd)],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
        if det.abs() < BORDER_COND_LIMIT * scale * scale {
            return Err(Error::DegenerateBordering {
                cond: det.abs() / (scale * scale).max(1e-300),
                limit: BORDER_COND_LIMIT,
            });
        }
        let inv_border = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        Ok(Level {
            h,
            lc,
            tanh,
            psi_even,
            psi_odd,
            border_step,
            border_ramp,
            inv_border,
        })
    }

    fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let mut acc = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
        for i in 1..n - 1 {
            acc += a[i] * b[i];
        }
        acc * self.h
    }

    /// Kernel-complement solve at this resolution. `f` must already be
    /// bordered so that both trapezoid pairings with the cokernel vanish:
    /// the weighted cumulative then lands on zero at the far edge exactly,
    /// and the two inward marches meet without a seam.
    fn solve_projected(&self, f: &[f64], drift: f64) -> Vec<f64> {
        let n = f.len();
        let h = self.h;
        // u' by the weighted cumulative: all exponentials are differences of
        // adjacent log cosh values, bounded by 2|b|h. For nonnegative drift
        // the homogeneous mode cosh^{2b} grows toward both edges, so each
        // half is integrated inward from its own edge (rounding decays);
        // for negative drift a single left-to-right pass is the stable one.
        let mut v = vec![0.0; n];
        let top = if drift >= 0.0 { n / 2 } else { n - 1 };
        for i in 1..=top {
            let step = (2.0 * drift * (self.lc[i] - self.lc[i - 1])).exp();
            v[i] = v[i - 1] * step + 0.5 * h * (f[i - 1] * step + f[i]);
        }
        if drift >= 0.0 {
            for i in (top + 1..n - 1).rev() {
                let step = (2.0 * drift * (self.lc[i] - self.lc[i + 1])).exp();
                v[i] = v[i + 1] * step - 0.5 * h * (f[i] + f[i + 1] * step);
            }
        }
        // u by a plain cumulative of u'
        let mut u = vec![0.0; n];
        for i in 1..n {
            u[i] = u[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
        }
        u
    }

    /// Border coefficients making f - alpha e1 - beta e2 orthogonal to the
    /// cokernel pair in this level's quadrature.
    fn border_coefficients(&self, f: &[f64]) -> (f64, f64) {
        let p1 = self.pairing(f, &self.psi_even);
        let p2 = self.pairing(f, &self.psi_odd);
        (
            self.inv_border[0][0] * p1 + self.inv_border[0][1] * p2,
            self.inv_border[1][0] * p1 + self.inv_border[1][1] * p2,
        )
    }
}

/// The drift Laplacian L_b = d^2/dx^2 - 2 b tanh(x) d/dx with its bordering
/// by the two tanh blocks, ready to solve and to apply.
pub struct DriftLaplacian {
    pub engine: Arc<SpectralEngine>,
    pub drift: f64,
    coarse: Level,
    fine: Level,
}

impl DriftLaplacian {
    pub fn new(engine: &Arc<SpectralEngine>, drift: f64) -> Result<DriftLaplacian> {
        if !drift.is_finite() || drift.abs() > DRIFT_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "drift {drift} outside the solvable band |b| <= {DRIFT_LIMIT}"
            )));
        }
        let grid = &engine.grid;
        let coarse_points = grid.x_samples();
        let fine_points: Vec<f64> = (0..2 * grid.n)
            .map(|k| -grid.half_width + 0.5 * grid.h * k as f64)
            .collect();
        let coarse = Level::build(&coarse_points, grid.h, drift)?;
        let fine = Level::build(&fine_points, 0.5 * grid.h, drift)?;
        Ok(DriftLaplacian {
            engine: engine.clone(),
            drift,
            coarse,
            fine,
        })
    }

    /// Even cokernel function cosh(x)^(-2b).
    pub fn cokernel_even(&self) -> Field {
        Field {
            grid: self.engine.grid.clone(),
            values: self.coarse.psi_even.clone(),
        }
    }

    /// Odd cokernel companion, Richardson-extrapolated to O(h^4). Approaches
    /// +-1/(2b) for positive drift, x for zero drift.
    pub fn cokernel_odd(&self) -> Field {
        let n = self.engine.grid.n;
        let values = (0..n)
            .map(|i| (4.0 * self.fine.psi_odd[2 * i] - self.coarse.psi_odd[i]) / 3.0)
            .collect();
        Field {
            grid: self.engine.grid.clone(),
            values,
        }
    }

    /// Relative defects of f against the two cokernel directions, measured
    /// with the extrapolated odd companion so the quadrature floor sits
    /// well below the refusal threshold.
    pub fn solvability_defects(&self, f: &Field) -> (f64, f64) {
        let fs = crate::norms::l2_norm(f).max(1e-300);
        let odd = self.cokernel_odd();
        let p1 = self.coarse.pairing(&f.values, &self.coarse.psi_even);
        let p2 = self.coarse.pairing(&f.values, &odd.values);
        let n1 = self.level_l2(&self.coarse.psi_even);
        let n2 = self.level_l2(&odd.values);
        (p1.abs() / (fs * n1), p2.abs() / (fs * n2))
    }

    fn level_l2(&self, v: &[f64]) -> f64 {
        (v.iter().map(|a| a * a).sum::<f64>() * self.coarse.h)
            .sqrt()
            .max(1e-300)
    }

    /// Solve the bordered problem: find a decaying u and coefficients
    /// (alpha, beta) with L_b u + alpha e1 + beta e2 = f. Always solvable;
    /// the coefficients absorb the cokernel content of f.
    pub fn solve(&self, f: &Field) -> Result<BorderedSolution> {
        if *f.grid != *self.engine.grid {
            return Err(Error::GridMismatch("solver and field grids differ".into()));
        }
        let n = self.engine.grid.n;

        let (u_c, a_c, b_c) = self.solve_level(&self.coarse, &f.values);
        let f_fine = self.engine.refine_double(&f.values)?;
        let (u_f, a_f, b_f) = self.solve_level(&self.fine, &f_fine);

        let mut values: Vec<f64> = (0..n).map(|i| (4.0 * u_f[2 * i] - u_c[i]) / 3.0).collect();
        let alpha = (4.0 * a_f - a_c) / 3.0;
        let beta = (4.0 * b_f - b_c) / 3.0;

        // the cumulative construction anchors the left tail at zero; sweep
        // the residual right-tail constant (pure kernel content) into decay
        let right = values[n - 8..].iter().sum::<f64>() / 8.0;
        for (i, v) in values.iter_mut().enumerate() {
            let x = self.engine.grid.x(i);
            *v -= right * 0.5 * (1.0 + x.tanh());
        }

        Ok(BorderedSolution {
            field: Field {
                grid: self.engine.grid.clone(),
                values,
            },
            alpha,
            beta,
        })
    }

    fn solve_level(&self, level: &Level, f: &[f64]) -> (Vec<f64>, f64, f64) {
        let (alpha, beta) = level.border_coefficients(f);
        let projected: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(i, &v)| v - alpha * level.border_step[i] - beta * level.border_ramp[i])
            .collect();
        (level.solve_projected(&projected, self.drift), alpha, beta)
    }

    /// Solve L_b u = f without borders; refuses f with visible cokernel
    /// content instead of silently projecting it away.
    pub fn solve_decaying(&self, f: &Field) -> Result<Field> {
        let (d1, d2) = self.solvability_defects(f);
        if d1 > SOLVABILITY_LIMIT || d2 > SOLVABILITY_LIMIT {
            return Err(Error::Solvability {
                defect1: d1,
                defect2: d2,
                limit: SOLVABILITY_LIMIT,
            });
        }
        Ok(self.solve(f)?.field)
    }

    /// Forward application of L_b with spectral derivatives; valid for
    /// decaying u.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        let du = self.engine.derivative(&u.values, 1)?;
        let ddu = self.engine.derivative(&u.values, 2)?;
        let values = (0..u.values.len())
            .map(|i| ddu[i] - 2.0 * self.drift * self.coarse.tanh[i] * du[i])
            .collect();
        Field::from_values(&self.engine.grid, values)
    }

    /// Forward application of the bordered operator.
    pub fn apply_bordered(&self, s: &BorderedSolution) -> Result<Field> {
        let base = self.apply(&s.field)?;
        let values = base
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                v + s.alpha * self.coarse.border_step[i] + s.beta * self.coarse.border_ramp[i]
            })
            .collect();
        Field::from_values(&self.engine.grid, values)
    }
}

/// Spectral primitive of a mean-zero field, anchored to vanish on the left
/// pad. Returns physical-window samples.
fn spectral_primitive(engine: &Arc<SpectralEngine>, values: &[f64]) -> Result<Vec<f64>> {
    let mut buf = engine.pad(values);
    engine.fft(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let l = engine.padded.freq(j);
        if j == 0 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v /= Complex64::new(0.0, l);
        }
    }
    engine.ifft(&mut buf);
    let anchor = buf[0].re;
    let out = engine.crop_real(&buf)?;
    Ok(out.iter().map(|v| v - anchor).collect())
}

/// Antiderivative on the weighted line. The weight index gamma and the
/// Lebesgue exponent p fix the regime: above the critical line
/// gamma = 1 - 1/p the primitive must decay on both sides, which demands a
/// mean-zero integrand and anchors the integral at -infinity; below it the
/// primitive may grow and is anchored at the origin. Inside a guard band
/// around the critical line the constant blows up and the call is refused.
pub fn antiderivative(
    engine: &Arc<SpectralEngine>,
    f: &Field,
    gamma: f64,
    p: f64,
) -> Result<Field> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent {p} < 1"
        )));
    }
    let critical = 1.0 - 1.0 / p;
    if (gamma - critical).abs() < CRITICAL_BAND {
        return Err(Error::CriticalWeight { gamma, critical });
    }
    let mass = f.integrate();
    if gamma > critical {
        let scale = crate::norms::weighted_lp(f, 0.0, 1.0)?.max(1e-300);
        if mass.abs() > 1e-8 * scale {
            return Err(Error::Hypothesis(format!(
                "decaying primitive needs a mean-zero integrand; mean = {mass:e}"
            )));
        }
        let values = spectral_primitive(engine, &f.values)?;
        return Field::from_values(&engine.grid, values);
    }
    // growing regime: peel the mass off with a unit-mass bump whose
    // primitive is known in closed form, integrate the rest spectrally
    let bump: Vec<f64> = engine
        .grid
        .x_samples()
        .iter()
        .map(|&x| {
            let c = x.cosh();
            0.5 / (c * c)
        })
        .collect();
    let peeled: Vec<f64> = f
        .values
        .iter()
        .zip(&bump)
        .map(|(v, b)| v - mass * b)
        .collect();
    let raw = spectral_primitive(engine, &peeled)?;
    let at_zero = raw[engine.grid.index_of(0.0)];
    let values = raw
        .iter()
        .enumerate()
        .map(|(i, v)| v - at_zero + mass * 0.5 * engine.grid.x(i).tanh())
        .collect();
    Field::from_values(&engine.grid, values)
}

/// (1 - d/dx)^{-1} f, the causal resolvent: symbol 1/(1 - i l), kernel
/// exp(x - z) integrated over z > x.
pub fn causal_resolvent(engine: &Arc<SpectralEngine>, f: &Field) -> Result<Field> {
    let symbol = engine.sample_symbol(|l| 1.0 / Complex64::new(1.0, -l));
    let values = engine.apply_multiplier(&f.values, &symbol)?;
    Field::from_values(&engine.grid, values)
}

/// d/dx (1 - d/dx)^{-1} f, symbol i l / (1 - i l).
pub fn causal_derivative(engine: &Arc<SpectralEngine>, f: &Field) -> Result<Field> {
    let symbol = engine.sample_symbol(|l| Complex64::new(0.0, l) / Complex64::new(1.0, -l));
    let values = engine.apply_multiplier(&f.values, &symbol)?;
    Field::from_values(&engine.grid, values)
}
