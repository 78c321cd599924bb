//! Convolution kernels of the medium and the pseudo-differential symbols
//! derived from them.
//!
//! The model couples oscillators through two even kernels: a smoothing kernel
//! (unit mass, appears linearly as `smoothing * phi - phi`) and a transport
//! kernel whose derivative builds the nonlocal gradient in the quadratic
//! term. All operators act as Fourier multipliers on the padded grid; the
//! closed-form families carry exact symbols, tabulated kernels get theirs
//! from a padded transform.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SpectralEngine;

/// Relative tail size above which a kernel is considered truncated by the box.
const TAIL_LIMIT: f64 = 1e-12;
/// Relative asymmetry above which a tabulated kernel is rejected as uneven.
const EVENNESS_LIMIT: f64 = 1e-9;
/// Below this |l| the symbols with removable singularities switch to series.
const SERIES_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// exp(-x^2 / (2 std^2)) / (std sqrt(2 pi))
    Gaussian { std: f64 },
    /// sech^2(x / scale) / (2 scale)
    SechSquare { scale: f64 },
    /// Arbitrary samples on the physical grid; must be even and box-resolved.
    Table { values: Vec<f64> },
}

/// An even convolution kernel bound to a grid: samples, moments, and the
/// real even Fourier symbol sampled on the padded frequencies.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub family: KernelFamily,
    pub engine: Arc<SpectralEngine>,
    pub samples: Vec<f64>,
    pub mass: f64,
    pub second_moment: f64,
    pub fourth_moment: f64,
    pub symbol: Vec<f64>,
    /// Unit mass and symbol nowhere above it: the linearization
    /// `smoothing * phi - phi` is then dissipative on every mode.
    pub diffusive: bool,
}

impl Kernel {
    pub fn new(family: KernelFamily, engine: &Arc<SpectralEngine>) -> Result<Kernel> {
        let grid = &engine.grid;
        match &family {
            KernelFamily::Gaussian { std } => {
                let s = *std;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!("gaussian std {s}")));
                }
                let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
                let value = move |x: f64| norm * (-x * x / (2.0 * s * s)).exp();
                let samples: Vec<f64> = grid.x_samples().iter().map(|&x| value(x)).collect();
                check_tail(&samples, value(0.0))?;
                let symbol: Vec<f64> = engine
                    .padded
                    .freq_samples()
                    .iter()
                    .map(|&l| (-0.5 * s * s * l * l).exp())
                    .collect();
                Ok(Kernel {
                    family,
                    engine: engine.clone(),
                    samples,
                    mass: 1.0,
                    second_moment: s * s,
                    fourth_moment: 3.0 * s.powi(4),
                    symbol,
                    diffusive: true,
                })
            }
            KernelFamily::SechSquare { scale } => {
                let s = *scale;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!("sech-square scale {s}")));
                }
                let value = move |x: f64| {
                    let c = (x / s).cosh();
                    1.0 / (2.0 * s * c * c)
                };
                let samples: Vec<f64> = grid.x_samples().iter().map(|&x| value(x)).collect();
                check_tail(&samples, value(0.0))?;
                // symbol z / sinh z with z = pi s l / 2; series near z = 0
                let symbol: Vec<f64> = engine
                    .padded
                    .freq_samples()
                    .iter()
                    .map(|&l| {
                        let z = 0.5 * std::f64::consts::PI * s * l;
                        if z.abs() < 1e-4 {
                            let z2 = z * z;
                            1.0 / (1.0 + z2 / 6.0 + z2 * z2 / 120.0)
                        } else {
                            z / z.sinh()
                        }
                    })
                    .collect();
                let pi = std::f64::consts::PI;
                Ok(Kernel {
                    family,
                    engine: engine.clone(),
                    samples,
                    mass: 1.0,
                    second_moment: s * s * pi * pi / 12.0,
                    fourth_moment: 7.0 * pi.powi(4) * s.powi(4) / 240.0,
                    symbol,
                    diffusive: true,
                })
            }
            KernelFamily::Table { values } => {
                if values.len() != grid.n {
                    return Err(Error::GridMismatch(format!(
                        "table kernel with {} samples on a grid of {} points",
                        values.len(),
                        grid.n
                    )));
                }
                let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if peak == 0.0 {
                    return Err(Error::InvalidParameter("zero table kernel".into()));
                }
                // index 0 sits at -L and has no mirror point; start at 1
                let mut asym = 0.0_f64;
                for i in 1..grid.n / 2 {
                    asym = asym.max((values[i] - values[grid.n - i]).abs());
                }
                if asym > EVENNESS_LIMIT * peak {
                    return Err(Error::NotEven {
                        asymmetry: asym,
                        peak,
                    });
                }
                check_tail(values, peak)?;
                let field = Field::from_values(grid, values.clone())?;
                let mass = field.integrate();
                let m2 = moment_quadrature(&field, 2);
                let m4 = moment_quadrature(&field, 4);
                let symbol = measured_symbol(engine, values)?;
                let diffusive =
                    (mass - 1.0).abs() < 1e-9 && symbol.iter().all(|&s| s <= 1.0 + 1e-9);
                let samples = values.clone();
                Ok(Kernel {
                    family,
                    engine: engine.clone(),
                    samples,
                    mass,
                    second_moment: m2,
                    fourth_moment: m4,
                    symbol,
                    diffusive,
                })
            }
        }
    }

    pub fn gaussian(std: f64, engine: &Arc<SpectralEngine>) -> Result<Kernel> {
        Kernel::new(KernelFamily::Gaussian { std }, engine)
    }

    pub fn sech_square(scale: f64, engine: &Arc<SpectralEngine>) -> Result<Kernel> {
        Kernel::new(KernelFamily::SechSquare { scale }, engine)
    }

    /// Symbol value by interpolation-free closed form where available,
    /// otherwise nearest padded bin (tests and reporting only).
    pub fn symbol_at(&self, l: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { std } => (-0.5 * std * std * l * l).exp(),
            KernelFamily::SechSquare { scale } => {
                let z = 0.5 * std::f64::consts::PI * scale * l;
                if z.abs() < 1e-4 {
                    1.0 - z * z / 6.0
                } else {
                    z / z.sinh()
                }
            }
            KernelFamily::Table { .. } => {
                let padded = &self.engine.padded;
                let mut best = 0usize;
                let mut dist = f64::INFINITY;
                for j in 0..padded.n {
                    let d = (padded.freq(j) - l).abs();
                    if d < dist {
                        dist = d;
                        best = j;
                    }
                }
                self.symbol[best]
            }
        }
    }

    /// smoothing * f
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        let symbol: Vec<Complex64> = self
            .symbol
            .iter()
            .map(|&s| Complex64::new(s, 0.0))
            .collect();
        let values = self.engine.apply_multiplier(&f.values, &symbol)?;
        Field::from_values(&self.engine.grid, values)
    }

    /// kernel * f with f given in closed form: direct quadrature over the
    /// kernel support. The argument x - y may leave the box, so plateaus and
    /// linear ramps convolve without wrap-around; plain sums are spectrally
    /// accurate because the samples decay below cutoff well inside the box.
    pub fn convolve_closed_form<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        quadrature_convolve(&self.engine.grid, &self.samples, f)
    }

    /// (d/dx kernel) * f with f in closed form; the derivative samples come
    /// from the spectral multiplier, everything else as above.
    pub fn convolve_deriv_closed_form<F: Fn(f64) -> f64>(&self, f: F) -> Result<Field> {
        let deriv = self.engine.derivative(&self.samples, 1)?;
        Ok(quadrature_convolve(&self.engine.grid, &deriv, f))
    }

    /// (d/dx kernel) * f, symbol i l K(l); the nonlocal gradient when applied
    /// with the transport kernel.
    pub fn convolve_deriv(&self, f: &Field) -> Result<Field> {
        let padded = &self.engine.padded;
        let symbol: Vec<Complex64> = self
            .symbol
            .iter()
            .enumerate()
            .map(|(j, &s)| Complex64::new(0.0, padded.freq(j) * s))
            .collect();
        let values = self.engine.apply_multiplier(&f.values, &symbol)?;
        Field::from_values(&self.engine.grid, values)
    }
}

fn check_tail(samples: &[f64], peak: f64) -> Result<()> {
    let n = samples.len();
    let band = (n / 50).max(1);
    let mut tail = 0.0_f64;
    for i in 0..band {
        tail = tail.max(samples[i].abs());
        tail = tail.max(samples[n - 1 - i].abs());
    }
    if tail > TAIL_LIMIT * peak.max(1e-300) {
        return Err(Error::MassTruncated {
            tail: tail / peak,
            limit: TAIL_LIMIT,
        });
    }
    Ok(())
}

fn quadrature_convolve<F: Fn(f64) -> f64>(
    grid: &Arc<crate::grid::Grid>,
    kernel_samples: &[f64],
    f: F,
) -> Field {
    let peak = kernel_samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = peak * 1e-15;
    let mut lo = kernel_samples.len() / 2;
    let mut hi = lo;
    for (i, v) in kernel_samples.iter().enumerate() {
        if v.abs() > cut {
            lo = lo.min(i);
            hi = hi.max(i);
        }
    }
    let values = (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            let mut acc = 0.0;
            for (j, k) in kernel_samples[lo..=hi].iter().enumerate() {
                acc += k * f(x - grid.x(lo + j));
            }
            acc * grid.h
        })
        .collect();
    Field {
        grid: grid.clone(),
        values,
    }
}

fn moment_quadrature(f: &Field, k: i32) -> f64 {
    let mut acc = 0.0;
    for (i, v) in f.values.iter().enumerate() {
        acc += f.grid.x(i).powi(k) * v;
    }
    acc * f.grid.h
}

/// Fourier symbol of a tabulated even kernel: trapezoid transform realized by
/// an FFT over the padded window. With x_i = -2L + i h and l_j = j pi / (2L),
/// the phase correction is (-1)^j.
fn measured_symbol(engine: &Arc<SpectralEngine>, values: &[f64]) -> Result<Vec<f64>> {
    let grid = &engine.grid;
    let mut buf = engine.pad(values);
    engine.fft(&mut buf);
    let mut out = Vec::with_capacity(buf.len());
    let mut max_im = 0.0_f64;
    let mut max_re = 0.0_f64;
    for (j, v) in buf.iter().enumerate() {
        // centered padding keeps every sample at its true coordinate; the
        // padded window starting at -2L contributes the phase (-1)^j
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let s = sign * grid.h * v;
        max_im = max_im.max(s.im.abs());
        max_re = max_re.max(s.re.abs());
        out.push(s.re);
    }
    if max_im > 1e-8 * max_re.max(1.0) {
        return Err(Error::ImaginaryResidue {
            residue: max_im,
            limit: 1e-8 * max_re.max(1.0),
        });
    }
    Ok(out)
}

/// The two kernels of a nonlocal medium, hypothesis-checked.
#[derive(Debug, Clone)]
pub struct Medium {
    pub smoothing: Kernel,
    pub transport: Kernel,
}

impl Medium {
    pub fn new(smoothing: Kernel, transport: Kernel) -> Result<Medium> {
        if !smoothing.diffusive {
            return Err(Error::Hypothesis(
                "smoothing kernel must have unit mass and symbol nowhere above one".into(),
            ));
        }
        if smoothing.second_moment <= 0.0 {
            return Err(Error::Hypothesis(
                "smoothing kernel needs positive second moment".into(),
            ));
        }
        if transport.mass.abs() < 1e-12 {
            return Err(Error::Hypothesis(
                "transport kernel must carry nonzero mass".into(),
            ));
        }
        Ok(Medium {
            smoothing,
            transport,
        })
    }

    /// Both kernels the same shape; the common self-coupled setup.
    pub fn self_coupled(kernel: Kernel) -> Result<Medium> {
        let transport = kernel.clone();
        Medium::new(kernel, transport)
    }

    /// Mass of the transport kernel; squares into the dispersion relation.
    pub fn transport_mass(&self) -> f64 {
        self.transport.mass
    }

    /// Effective diffusivity of the smoothing kernel, half its second moment.
    pub fn diffusivity(&self) -> f64 {
        0.5 * self.smoothing.second_moment
    }

    /// Frequency of the wave train with wavenumber k.
    pub fn wavetrain_frequency(&self, k: f64) -> f64 {
        let j0 = self.transport_mass();
        j0 * j0 * k * k
    }

    /// Group velocity of the wave train with wavenumber k.
    pub fn group_velocity(&self, k: f64) -> f64 {
        let j0 = self.transport_mass();
        2.0 * j0 * j0 * k
    }
}

/// Fourier multipliers derived from a medium, sampled on the padded
/// frequencies, singular bins filled with their analytic limits.
#[derive(Debug, Clone)]
pub struct DerivedSymbols {
    pub engine: Arc<SpectralEngine>,
    /// smoothing symbol minus one: the linear generator of the dynamics.
    pub relaxation: Vec<Complex64>,
    /// (1 - smoothing symbol) / l^2, limit m2/2 at l = 0; strictly positive.
    pub effective_diffusivity: Vec<Complex64>,
    /// reciprocal of the above: composing it with the linear generator
    /// yields exactly the second derivative.
    pub inverse_diffusivity: Vec<Complex64>,
    /// i l transport-symbol: the nonlocal gradient.
    pub nonlocal_gradient: Vec<Complex64>,
    /// i l / (1 - i l): derivative through the causal resolvent.
    pub causal_derivative: Vec<Complex64>,
    /// 1 / (1 - i l), kernel exp(x) on the left half line.
    pub causal_resolvent: Vec<Complex64>,
    /// bounded factor with transport-symbol - 1 = causal_derivative * this;
    /// exists because the transport kernel is normalized to unit mass.
    pub transport_factor: Vec<Complex64>,
    /// factor with inverse_diffusivity - 1 = causal_derivative * this. The
    /// quotient has a simple pole at l = 0 whenever the diffusivity is not
    /// one half; the stored bin holds the finite part and
    /// `pole_weight` carries the residue for zero-mode bookkeeping.
    pub diffusivity_factor: Vec<Complex64>,
    /// inverse_diffusivity(0) - 1, the weight of the omitted pole.
    pub pole_weight: f64,
}

impl DerivedSymbols {
    pub fn new(medium: &Medium) -> Result<DerivedSymbols> {
        let engine = medium.smoothing.engine.clone();
        if medium.transport.engine.grid != engine.grid {
            return Err(Error::GridMismatch(
                "medium kernels live on different grids".into(),
            ));
        }
        let m2 = medium.smoothing.second_moment;
        let m4 = medium.smoothing.fourth_moment;
        let jm2 = medium.transport.second_moment;
        let jm4 = medium.transport.fourth_moment;
        let freqs = engine.padded.freq_samples();
        let nbins = freqs.len();

        let mut relaxation = Vec::with_capacity(nbins);
        let mut effective_diffusivity = Vec::with_capacity(nbins);
        let mut inverse_diffusivity = Vec::with_capacity(nbins);
        let mut nonlocal_gradient = Vec::with_capacity(nbins);
        let mut causal_derivative = Vec::with_capacity(nbins);
        let mut causal_resolvent = Vec::with_capacity(nbins);
        let mut transport_factor = Vec::with_capacity(nbins);
        let mut diffusivity_factor = Vec::with_capacity(nbins);

        let c0 = 2.0 / m2;
        for (j, &l) in freqs.iter().enumerate() {
            let g = medium.smoothing.symbol[j];
            let tj = medium.transport.symbol[j];
            relaxation.push(Complex64::new(g - 1.0, 0.0));
            let diff = if l.abs() < SERIES_THRESHOLD {
                0.5 * m2 - m4 * l * l / 24.0
            } else {
                (1.0 - g) / (l * l)
            };
            if !(diff > 0.0) {
                return Err(Error::SymbolNotInvertible {
                    name: "effective diffusivity".into(),
                    min_abs: diff,
                    at: l,
                });
            }
            effective_diffusivity.push(Complex64::new(diff, 0.0));
            inverse_diffusivity.push(Complex64::new(1.0 / diff, 0.0));
            nonlocal_gradient.push(Complex64::new(0.0, l * tj));
            let il = Complex64::new(0.0, l);
            let one_minus_il = Complex64::new(1.0, -l);
            causal_derivative.push(il / one_minus_il);
            causal_resolvent.push(1.0 / one_minus_il);
            let tf = if l.abs() < SERIES_THRESHOLD {
                // (transport - 1)/(i l) = i l (jm2/2 - jm4 l^2/24) + O(l^5)
                let a = 0.5 * jm2 - jm4 * l * l / 24.0;
                one_minus_il * Complex64::new(0.0, a * l)
            } else {
                one_minus_il * Complex64::new(tj - 1.0, 0.0) / il
            };
            transport_factor.push(tf);
            let df = if l == 0.0 {
                // finite part of (1 - i l)(inv-diff - c0 + (c0 - 1))/(i l)
                Complex64::new(1.0 - c0, 0.0)
            } else {
                one_minus_il * Complex64::new(1.0 / diff - 1.0, 0.0) / il
            };
            diffusivity_factor.push(df);
        }

        // keep the self-conjugate bin real so real fields map to real fields
        let nyquist = nbins / 2;
        for symbol in [
            &mut nonlocal_gradient,
            &mut causal_derivative,
            &mut causal_resolvent,
            &mut transport_factor,
            &mut diffusivity_factor,
        ] {
            symbol[nyquist] = Complex64::new(symbol[nyquist].re, 0.0);
        }

        Ok(DerivedSymbols {
            engine,
            relaxation,
            effective_diffusivity,
            inverse_diffusivity,
            nonlocal_gradient,
            causal_derivative,
            causal_resolvent,
            transport_factor,
            diffusivity_factor,
            pole_weight: c0 - 1.0,
        })
    }

    pub fn apply(&self, symbol: &[Complex64], f: &Field) -> Result<Field> {
        let values = self.engine.apply_multiplier(&f.values, symbol)?;
        Field::from_values(&self.engine.grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn engine() -> Arc<SpectralEngine> {
        let grid = Grid::new(40.0, 1024).unwrap();
        SpectralEngine::new(&grid).unwrap()
    }

    #[test]
    fn gaussian_symbol_and_moments() {
        let eng = engine();
        let k = Kernel::gaussian(1.0, &eng).unwrap();
        assert_relative_eq!(k.symbol_at(0.0), 1.0);
        assert!(k.symbol.iter().all(|&s| s <= 1.0));
        assert_relative_eq!(
            Field::from_values(&eng.grid, k.samples.clone())
                .unwrap()
                .integrate(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(k.second_moment, 1.0);
        assert!(k.diffusive);
    }

    #[test]
    fn sech_square_moments_match_quadrature() {
        let eng = engine();
        let k = Kernel::sech_square(1.3, &eng).unwrap();
        let f = Field::from_values(&eng.grid, k.samples.clone()).unwrap();
        assert_relative_eq!(f.integrate(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(moment_quadrature(&f, 2), k.second_moment, epsilon = 1e-10);
        assert_relative_eq!(moment_quadrature(&f, 4), k.fourth_moment, epsilon = 1e-8);
        assert_relative_eq!(k.second_moment, 1.3 * 1.3 * PI * PI / 12.0);
    }

    #[test]
    fn tabulated_symbol_matches_closed_form() {
        let eng = engine();
        let reference = Kernel::gaussian(1.0, &eng).unwrap();
        let table = Kernel::new(
            KernelFamily::Table {
                values: reference.samples.clone(),
            },
            &eng,
        )
        .unwrap();
        let worst = reference
            .symbol
            .iter()
            .zip(&table.symbol)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-12, "measured symbol off by {worst}");
        assert_relative_eq!(table.mass, 1.0, epsilon = 1e-12);
        assert!(table.diffusive);
    }

    #[test]
    fn convolving_a_cosine_scales_it_by_the_symbol() {
        let eng = engine();
        let k = Kernel::gaussian(1.0, &eng).unwrap();
        // pick an exact grid frequency and a windowed cosine: the window is
        // flat where the check happens
        let l0 = eng.grid.freq(8).abs();
        let f = Field::from_fn(&eng.grid, |x| (l0 * x).cos() * (-(x / 25.0).powi(10)).exp());
        let out = k.convolve(&f).unwrap();
        let expect = (-0.5 * l0 * l0).exp();
        for i in (eng.grid.n / 2 - 40)..(eng.grid.n / 2 + 40) {
            let x = eng.grid.x(i);
            assert_relative_eq!(out.values[i], expect * (l0 * x).cos(), epsilon = 1e-6);
        }
    }

    #[test]
    fn nonlocal_gradient_of_line_is_transport_mass() {
        // d/dx kernel * x = mass(kernel) on any even kernel; probe it with the
        // template machinery since plain x is not localized: use x * window
        // and look near the center.
        let eng = engine();
        let k = Kernel::gaussian(0.7, &eng).unwrap();
        let f = Field::from_fn(&eng.grid, |x| x * (-(x / 25.0).powi(10)).exp());
        let out = k.convolve_deriv(&f).unwrap();
        assert_relative_eq!(out.value_at(0.0), 1.0, epsilon = 1e-6);
        assert_relative_eq!(out.value_at(3.0), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn uneven_and_truncated_tables_are_rejected() {
        let eng = engine();
        let shifted: Vec<f64> = eng
            .grid
            .x_samples()
            .iter()
            .map(|&x| (-(x - 3.0) * (x - 3.0)).exp())
            .collect();
        assert!(matches!(
            Kernel::new(KernelFamily::Table { values: shifted }, &eng),
            Err(Error::NotEven { .. })
        ));
        let wide = Kernel::gaussian(12.0, &eng);
        assert!(matches!(wide, Err(Error::MassTruncated { .. })));
    }

    #[test]
    fn oscillatory_kernel_fails_the_diffusive_check() {
        let eng = engine();
        // unit-mass kernel whose spectrum peaks away from zero
        let raw: Vec<f64> = eng
            .grid
            .x_samples()
            .iter()
            .map(|&x| (2.0 * x).cos() * (-0.5 * x * x).exp())
            .collect();
        let mass: f64 = raw.iter().sum::<f64>() * eng.grid.h;
        let values: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        let k = Kernel::new(KernelFamily::Table { values }, &eng).unwrap();
        assert!(!k.diffusive);
        assert!(Medium::self_coupled(k).is_err());
    }

    #[test]
    fn derived_symbols_satisfy_their_defining_identities() {
        let eng = engine();
        let medium = Medium::self_coupled(Kernel::gaussian(1.0, &eng).unwrap()).unwrap();
        let d = DerivedSymbols::new(&medium).unwrap();
        let freqs = eng.padded.freq_samples();
        let nyquist = freqs.len() / 2;
        for (j, &l) in freqs.iter().enumerate() {
            // relaxation = -l^2 * effective diffusivity
            let lhs = d.relaxation[j];
            let rhs = -l * l * d.effective_diffusivity[j];
            assert!((lhs - rhs).norm() < 1e-12, "factorization off at l = {l}");
            // inverse relation
            let prod = d.effective_diffusivity[j] * d.inverse_diffusivity[j];
            assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            if j == nyquist {
                // the self-conjugate bin is real-projected, breaking the
                // complex factorizations there by construction
                continue;
            }
            // transport factor reassembles the transport symbol
            let back = d.causal_derivative[j] * d.transport_factor[j] + 1.0;
            assert!(
                (back.re - medium.transport.symbol[j]).abs() < 1e-10 && back.im.abs() < 1e-10,
                "transport factor off at l = {l}: {back}"
            );
            // diffusivity factor reassembles inverse diffusivity off the pole
            if l != 0.0 {
                let back = d.causal_derivative[j] * d.diffusivity_factor[j] + 1.0;
                assert!(
                    (back - d.inverse_diffusivity[j]).norm() < 1e-9,
                    "at l = {l}"
                );
            }
        }
        // evenness and parity spot checks: symbols at +-l are conjugates
        for j in 1..20 {
            let m = freqs.len() - j;
            assert!((d.transport_factor[j] - d.transport_factor[m].conj()).norm() < 1e-12);
            assert!((d.nonlocal_gradient[j] + d.nonlocal_gradient[m]).norm() < 1e-12);
            assert!(d.nonlocal_gradient[j].re == 0.0);
        }
        assert_relative_eq!(d.pole_weight, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.effective_diffusivity[0].re, 0.5);
        assert_relative_eq!(d.inverse_diffusivity[0].re, 2.0);
    }

    #[test]
    fn inverse_diffusivity_composes_to_second_derivative() {
        let eng = engine();
        let medium = Medium::self_coupled(Kernel::gaussian(1.0, &eng).unwrap()).unwrap();
        let d = DerivedSymbols::new(&medium).unwrap();
        let f = Field::from_fn(&eng.grid, |x| (-x * x).exp());
        let smoothed = medium.smoothing.convolve(&f).unwrap();
        let relaxed = smoothed.sub(&f);
        let composed = d.apply(&d.inverse_diffusivity, &relaxed).unwrap();
        let second = Field::from_values(&eng.grid, eng.derivative(&f.values, 2).unwrap()).unwrap();
        let err = composed.sub(&second).max_abs();
        assert!(err < 1e-8, "composition error {err}");
    }
    #[test]
    fn closed_form_convolution_agrees_with_spectral_and_handles_ramps() {
        let eng = engine();
        let k = Kernel::gaussian(1.0, &eng).unwrap();
        // decaying argument: must match the spectral path
        let f = Field::from_fn(&eng.grid, |x| (-0.5 * x * x).exp() * (1.3 * x).cos());
        let direct = k.convolve_closed_form(|x| (-0.5_f64 * x * x).exp() * (1.3 * x).cos());
        let spectral = k.convolve(&f).unwrap();
        assert!(direct.sub(&spectral).max_abs() < 1e-12);
        // growing argument: the derivative kernel against x tanh x tends to
        // +-mass, and against tanh x it stays even and decaying
        let ramp = k.convolve_deriv_closed_form(|x: f64| x * x.tanh()).unwrap();
        let edge = eng.grid.n - 2;
        assert_relative_eq!(ramp.values[edge], k.mass, epsilon = 1e-10);
        assert_relative_eq!(ramp.values[1], -k.mass, epsilon = 1e-10);
        let step = k.convolve_deriv_closed_form(|x: f64| x.tanh()).unwrap();
        assert!(step.values[edge].abs() < 1e-12);
        let mid = eng.grid.index_of(0.7);
        let mirrored = eng.grid.index_of(-0.7);
        assert_relative_eq!(step.values[mid], step.values[mirrored], epsilon = 1e-10);
    }
}
