//! Algebraically weighted norms, pairings and moments.
//!
//! Defect profiles decay only algebraically, so membership in the right
//! weighted class is what the solver hypotheses actually require. The weight
//! is the smooth bracket (1 + x^2)^(gamma/2); positive gamma demands decay,
//! negative gamma tolerates growth.

use crate::error::{Error, Result};
use crate::field::Field;

/// (1 + x^2)^(1/2), the smooth stand-in for |x|.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Bracket weight (1 + x^2)^(gamma/2).
pub fn weight(x: f64, gamma: f64) -> f64 {
    bracket(x).powf(gamma)
}

/// Weighted Lebesgue norm || weight(., gamma) u ||_p on the grid.
/// Pass `f64::INFINITY` for the weighted sup norm. Finite p must be >= 1.
pub fn weighted_lp(field: &Field, gamma: f64, p: f64) -> Result<f64> {
    if p.is_infinite() {
        let mut m = 0.0_f64;
        for (i, v) in field.values.iter().enumerate() {
            m = m.max((weight(field.grid.x(i), gamma) * v).abs());
        }
        return Ok(m);
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent {p} < 1"
        )));
    }
    let mut acc = 0.0_f64;
    for (i, v) in field.values.iter().enumerate() {
        acc += (weight(field.grid.x(i), gamma) * v).abs().powf(p);
    }
    Ok((acc * field.grid.h).powf(1.0 / p))
}

pub fn sup_norm(field: &Field) -> f64 {
    field.max_abs()
}

pub fn l2_norm(field: &Field) -> f64 {
    let acc: f64 = field.values.iter().map(|v| v * v).sum();
    (acc * field.grid.h).sqrt()
}

/// Dual pairing <a, b> = integral of a b over the line.
pub fn pairing(a: &Field, b: &Field) -> Result<f64> {
    a.same_grid(b)?;
    let acc: f64 = a.values.iter().zip(&b.values).map(|(u, v)| u * v).sum();
    Ok(acc * a.grid.h)
}

/// Monomial moment: integral of x^k f(x) dx.
pub fn moment(field: &Field, k: u32) -> f64 {
    let mut acc = 0.0;
    for (i, v) in field.values.iter().enumerate() {
        acc += field.grid.x(i).powi(k as i32) * v;
    }
    acc * field.grid.h
}

/// How much of the field survives at the edges of the box: max |u| over the
/// outer `band` fraction on each side, relative to max |u| overall. Values
/// near zero certify that box quadrature sees the whole line; values of
/// order one flag a truncated tail, and quadrature results are then
/// box-dependent, not line values.
pub fn edge_decay_ratio(field: &Field, band: f64) -> f64 {
    let n = field.grid.n;
    let w = ((n as f64 * band).ceil() as usize).clamp(1, n / 2);
    let peak = field.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0_f64;
    for i in 0..w {
        edge = edge.max(field.values[i].abs());
        edge = edge.max(field.values[n - 1 - i].abs());
    }
    edge / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::tanh_deriv;
    use crate::grid::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn gaussian_field() -> Field {
        let grid = Grid::new(40.0, 2048).unwrap();
        Field::from_fn(&grid, |x| (-x * x).exp())
    }

    #[test]
    fn weight_matches_closed_form() {
        assert_relative_eq!(weight(3.0, -1.0), 1.0 / 10.0_f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(weight(0.0, 5.0), 1.0);
    }

    #[test]
    fn gaussian_l2_norm_is_quarter_power_of_half_pi() {
        let f = gaussian_field();
        assert_relative_eq!(l2_norm(&f), (PI / 2.0).powf(0.25), epsilon = 1e-12);
        assert_relative_eq!(
            weighted_lp(&f, 0.0, 2.0).unwrap(),
            (PI / 2.0).powf(0.25),
            epsilon = 1e-12
        );
    }

    #[test]
    fn weighted_sup_of_gaussian_with_growing_weight() {
        // max of (1+x^2) e^{-x^2} is attained where 2x = 2x(1+x^2), i.e. x = 0
        // for the decaying branch; compare against a dense scan.
        let f = gaussian_field();
        let by_norm = weighted_lp(&f, 2.0, f64::INFINITY).unwrap();
        let mut scan = 0.0_f64;
        for i in 0..400000 {
            let x = -40.0 + i as f64 * 80.0 / 400000.0;
            scan = scan.max((1.0 + x * x) * (-x * x).exp());
        }
        assert_relative_eq!(by_norm, scan, epsilon = 1e-4);
    }

    #[test]
    fn moments_of_tanh_blocks_match_integration_by_parts() {
        let grid = Grid::new(40.0, 2048).unwrap();
        let s2 = Field::from_fn(&grid, |x| tanh_deriv(2, x));
        let xs2 = Field::from_fn(&grid, |x| 2.0 * tanh_deriv(1, x) + x * tanh_deriv(2, x));
        assert!(moment(&s2, 0).abs() < 1e-12);
        assert_relative_eq!(moment(&s2, 1), -2.0, epsilon = 1e-12);
        assert_relative_eq!(moment(&xs2, 0), 2.0, epsilon = 1e-12);
        assert!(moment(&xs2, 1).abs() < 1e-10);
    }

    #[test]
    fn edge_ratio_separates_decaying_from_truncated() {
        let grid = Grid::new(40.0, 1024).unwrap();
        let decaying = Field::from_fn(&grid, |x| (-x * x).exp());
        let flat = Field::from_fn(&grid, |_| 1.0);
        assert!(edge_decay_ratio(&decaying, 0.02) < 1e-200);
        assert_relative_eq!(edge_decay_ratio(&flat, 0.02), 1.0);
    }

    #[test]
    fn rejects_sub_unit_exponent() {
        let f = gaussian_field();
        assert!(weighted_lp(&f, 0.0, 0.5).is_err());
    }
}
