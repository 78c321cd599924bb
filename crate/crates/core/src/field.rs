//! Real-valued fields on a shared grid, plus the tanh far-field template.
//!
//! States in this laboratory are "localized part + affine far field glued by
//! tanh". The template type captures the four-parameter family
//!     T(x) = A + B tanh(x) + C x tanh(x) + D x,
//! which realizes independent affine asymptotics on each side. Splitting a
//! state into template plus decaying remainder is what makes spectral
//! treatment legitimate for profiles that grow linearly.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<Grid>, f: F) -> Field {
        let values = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} samples on a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "n = {} / L = {} versus n = {} / L = {}",
                self.grid.n, self.grid.half_width, other.grid.n, other.grid.half_width
            )))
        }
    }

    /// Trapezoid quadrature over the whole line; spectrally accurate for
    /// smooth decaying integrands on a uniform grid.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn mul(&self, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    /// self + c * other
    pub fn axpy(&self, c: f64, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.grid.index_of(x)]
    }
}

/// k-th derivative of tanh, closed form, k <= 4.
pub fn tanh_deriv(k: u32, x: f64) -> f64 {
    let t = x.tanh();
    let s = 1.0 - t * t;
    match k {
        0 => t,
        1 => s,
        2 => -2.0 * t * s,
        3 => -2.0 * s * (1.0 - 3.0 * t * t),
        4 => 8.0 * t * s * (2.0 - 3.0 * t * t),
        _ => panic!("tanh derivative implemented up to order 4, got {k}"),
    }
}

/// k-th derivative of x tanh(x) via the Leibniz rule, k <= 4.
pub fn x_tanh_deriv(k: u32, x: f64) -> f64 {
    if k == 0 {
        x * x.tanh()
    } else {
        x * tanh_deriv(k, x) + k as f64 * tanh_deriv(k - 1, x)
    }
}

/// Four-parameter tanh-glued affine far field:
/// T(x) = mean_offset + step tanh(x) + vee_slope x tanh(x) + tilt x.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FarFieldTemplate {
    pub mean_offset: f64,
    pub step: f64,
    pub vee_slope: f64,
    pub tilt: f64,
}

impl FarFieldTemplate {
    pub fn from_sides(
        offset_plus: f64,
        slope_plus: f64,
        offset_minus: f64,
        slope_minus: f64,
    ) -> FarFieldTemplate {
        FarFieldTemplate {
            mean_offset: 0.5 * (offset_plus + offset_minus),
            step: 0.5 * (offset_plus - offset_minus),
            vee_slope: 0.5 * (slope_plus - slope_minus),
            tilt: 0.5 * (slope_plus + slope_minus),
        }
    }

    /// (offset, slope) of the affine asymptote at +infinity.
    pub fn plus_side(&self) -> (f64, f64) {
        (self.mean_offset + self.step, self.vee_slope + self.tilt)
    }

    /// (offset, slope) of the affine asymptote at -infinity.
    pub fn minus_side(&self) -> (f64, f64) {
        (self.mean_offset - self.step, self.tilt - self.vee_slope)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.mean_offset + self.step * x.tanh() + self.vee_slope * x * x.tanh() + self.tilt * x
    }

    pub fn eval_deriv(&self, k: u32, x: f64) -> f64 {
        match k {
            0 => self.eval(x),
            1 => self.step * tanh_deriv(1, x) + self.vee_slope * x_tanh_deriv(1, x) + self.tilt,
            _ => self.step * tanh_deriv(k, x) + self.vee_slope * x_tanh_deriv(k, x),
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid, |x| self.eval(x))
    }

    pub fn sample_deriv(&self, grid: &Arc<Grid>, k: u32) -> Field {
        Field::from_fn(grid, |x| self.eval_deriv(k, x))
    }

    pub fn is_zero(&self) -> bool {
        self.mean_offset == 0.0 && self.step == 0.0 && self.vee_slope == 0.0 && self.tilt == 0.0
    }
}

/// Least-squares affine fit phi ~ offset + slope x over grid points with
/// lo <= x <= hi. Returns (offset, slope, rms residual).
pub fn fit_affine_window(field: &Field, lo: f64, hi: f64) -> Result<(f64, f64, f64)> {
    let g = &field.grid;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0usize;
    for i in 0..g.n {
        let x = g.x(i);
        if x >= lo && x <= hi {
            let y = field.values[i];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1;
        }
    }
    if count < 4 {
        return Err(Error::InvalidParameter(format!(
            "affine fit window [{lo}, {hi}] holds only {count} grid points"
        )));
    }
    let nf = count as f64;
    let det = nf * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidParameter(
            "degenerate affine fit window".into(),
        ));
    }
    let slope = (nf * sxy - sx * sy) / det;
    let offset = (sy - slope * sx) / nf;
    let mut ss = 0.0;
    for i in 0..g.n {
        let x = g.x(i);
        if x >= lo && x <= hi {
            let r = field.values[i] - offset - slope * x;
            ss += r * r;
        }
    }
    Ok((offset, slope, (ss / nf).sqrt()))
}

/// Windows used for far-field fits: per side, a band of relative width
/// `window_fraction` that stops short of the outer `edge_exclusion` of the
/// domain where closure artifacts live.
pub fn far_field_windows(
    grid: &Grid,
    window_fraction: f64,
    edge_exclusion: f64,
) -> Result<((f64, f64), (f64, f64))> {
    if !(window_fraction > 0.0 && window_fraction + edge_exclusion < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fraction {window_fraction} with edge exclusion {edge_exclusion} leaves no window"
        )));
    }
    let l = grid.half_width;
    let hi = (1.0 - edge_exclusion) * l;
    let lo = (1.0 - edge_exclusion - window_fraction) * l;
    Ok(((lo, hi), (-hi, -lo)))
}

/// Fit the four-parameter template from per-side affine fits and split the
/// state into (localized remainder, template). Exact decomposition: remainder
/// plus template reproduces the input bitwise up to rounding.
pub fn split_far_field(
    field: &Field,
    window_fraction: f64,
    edge_exclusion: f64,
) -> Result<(Field, FarFieldTemplate, f64, f64)> {
    let ((plo, phi), (mlo, mhi)) = far_field_windows(&field.grid, window_fraction, edge_exclusion)?;
    let (off_p, slope_p, res_p) = fit_affine_window(field, plo, phi)?;
    let (off_m, slope_m, res_m) = fit_affine_window(field, mlo, mhi)?;
    let template = FarFieldTemplate::from_sides(off_p, slope_p, off_m, slope_m);
    let t = template.sample(&field.grid);
    Ok((field.sub(&t), template, res_p, res_m))
}
