//! Uniform symmetric grids and the Fourier machinery shared by every module.
//!
//! All spectral operations run on a zero-padded copy of the field that spans
//! twice the domain, so periodic wrap-around from convolution tails lands in
//! the padding instead of re-entering the physical window. Fields handed to
//! the engine are expected to decay towards the domain edges; callers that
//! hold states with affine far fields split off a tanh template first.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance on the imaginary residue left after an even-symbol convolution,
/// relative to the field scale. Anything above this indicates a symbol that
/// lost its required symmetry.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-10;

/// Symmetric uniform grid on [-half_width, half_width) with spacing 2L/n.
#[derive(Debug)]
pub struct Grid {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Arc<Grid>> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid half width must be positive and finite, got {half_width}"
            )));
        }
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs an even point count of at least 16, got {n}"
            )));
        }
        let h = 2.0 * half_width / n as f64;
        Ok(Arc::new(Grid { half_width, n, h }))
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    pub fn x_samples(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Angular frequency of bin `j` in standard FFT order.
    #[inline]
    pub fn freq(&self, j: usize) -> f64 {
        let signed = if j <= self.n / 2 - 1 {
            j as isize
        } else {
            j as isize - self.n as isize
        };
        signed as f64 * std::f64::consts::PI / self.half_width
    }

    pub fn freq_samples(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.freq(j)).collect()
    }

    /// Index of the grid point closest to `x`.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.h).round() as isize;
        i.clamp(0, self.n as isize - 1) as usize
    }
}

/// FFT plans for a grid and its doubled padding, plus multiplier application.
pub struct SpectralEngine {
    pub grid: Arc<Grid>,
    pub padded: Arc<Grid>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SpectralEngine(n = {}, L = {})",
            self.grid.n, self.grid.half_width
        )
    }
}

impl SpectralEngine {
    pub fn new(grid: &Arc<Grid>) -> Result<Arc<SpectralEngine>> {
        let padded = Grid::new(2.0 * grid.half_width, 2 * grid.n)?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded.n);
        let inverse = planner.plan_fft_inverse(padded.n);
        Ok(Arc::new(SpectralEngine {
            grid: grid.clone(),
            padded,
            forward,
            inverse,
        }))
    }

    /// Zero-pad grid samples into the doubled window, physical window centered.
    pub fn pad(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (i, &v) in values.iter().enumerate() {
            buf[n / 2 + i] = Complex64::new(v, 0.0);
        }
        buf
    }

    /// Forward transform of a padded buffer, in place.
    pub fn fft(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform of a padded buffer, in place, with 1/N normalization.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Crop a padded buffer back to the physical window, checking that the
    /// imaginary residue stayed at rounding level.
    pub fn crop_real(&self, buf: &[Complex64]) -> Result<Vec<f64>> {
        let n = self.grid.n;
        let mut out = Vec::with_capacity(n);
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        for v in &buf[n / 2..n / 2 + n] {
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
            out.push(v.re);
        }
        let limit = IMAG_RESIDUE_LIMIT * max_re.max(1.0);
        if max_im > limit {
            return Err(Error::ImaginaryResidue {
                residue: max_im,
                limit,
            });
        }
        Ok(out)
    }

    /// Apply a Fourier multiplier given by samples on the padded frequencies.
    pub fn apply_multiplier(&self, values: &[f64], symbol: &[Complex64]) -> Result<Vec<f64>> {
        assert_eq!(
            symbol.len(),
            self.padded.n,
            "symbol sampled on the wrong grid"
        );
        let mut buf = self.pad(values);
        self.fft(&mut buf);
        for (v, s) in buf.iter_mut().zip(symbol.iter()) {
            *v *= s;
        }
        self.ifft(&mut buf);
        self.crop_real(&buf)
    }

    /// Sample a scalar symbol on the padded frequency layout.
    pub fn sample_symbol<F: Fn(f64) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        let mut symbol: Vec<Complex64> =
            (0..self.padded.n).map(|j| f(self.padded.freq(j))).collect();
        // the self-conjugate bin must stay real for real signals to map to
        // real signals
        let nyquist = self.padded.n / 2;
        symbol[nyquist] = Complex64::new(symbol[nyquist].re, 0.0);
        symbol
    }

    /// Spectral derivative of the given order; fields must decay at the edges.
    pub fn derivative(&self, values: &[f64], order: u32) -> Result<Vec<f64>> {
        let symbol = self.sample_symbol(|l| Complex64::new(0.0, l).powu(order));
        self.apply_multiplier(values, &symbol)
    }

    /// Band-limited interpolation of `values` onto a grid with twice the
    /// points, same physical window. Used by solvers for step refinement.
    pub fn refine_double(&self, values: &[f64]) -> Result<Vec<f64>> {
        let n2 = self.padded.n;
        let mut buf = self.pad(values);
        self.fft(&mut buf);
        // zero-insert in the middle of the spectrum: 2n -> 4n bins
        let mut wide = vec![Complex64::new(0.0, 0.0); 2 * n2];
        for j in 0..n2 / 2 {
            wide[j] = buf[j] * 2.0;
        }
        for j in n2 / 2 + 1..n2 {
            wide[j + n2] = buf[j] * 2.0;
        }
        // split the Nyquist bin symmetrically to keep the signal real
        wide[n2 / 2] = buf[n2 / 2];
        wide[n2 + n2 / 2] = buf[n2 / 2];
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(2 * n2);
        inv.process(&mut wide);
        let scale = 1.0 / (2 * n2) as f64;
        let n = self.grid.n;
        // physical window of the refined padded buffer: indices n..3n of 4n
        let mut out = Vec::with_capacity(2 * n);
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        for v in &wide[n..3 * n] {
            let v = *v * scale;
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
            out.push(v.re);
        }
        let limit = IMAG_RESIDUE_LIMIT * max_re.max(1.0);
        if max_im > limit {
            return Err(Error::ImaginaryResidue {
                residue: max_im,
                limit,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_layout_is_symmetric() {
        let g = Grid::new(60.0, 4096).unwrap();
        assert_eq!(g.x(0), -60.0);
        assert_relative_eq!(g.x(2048), 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.h, 120.0 / 4096.0);
        assert_eq!(g.freq(0), 0.0);
        assert_relative_eq!(g.freq(1), std::f64::consts::PI / 60.0);
        assert!(g.freq(4095) < 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(-1.0, 64).is_err());
        assert!(Grid::new(10.0, 15).is_err());
    }

    #[test]
    fn derivative_of_gaussian_matches_closed_form() {
        let g = Grid::new(30.0, 1024).unwrap();
        let eng = SpectralEngine::new(&g).unwrap();
        let f: Vec<f64> = g.x_samples().iter().map(|&x| (-x * x).exp()).collect();
        let df = eng.derivative(&f, 1).unwrap();
        for (i, &x) in g.x_samples().iter().enumerate() {
            let exact = -2.0 * x * (-x * x).exp();
            assert!(
                (df[i] - exact).abs() < 1e-9,
                "at x = {x}: {} vs {exact}",
                df[i]
            );
        }
    }

    #[test]
    fn multiplier_identity_round_trips() {
        let g = Grid::new(20.0, 256).unwrap();
        let eng = SpectralEngine::new(&g).unwrap();
        let f: Vec<f64> = g
            .x_samples()
            .iter()
            .map(|&x| (-(x * x) / 2.0).exp() * x)
            .collect();
        let one = eng.sample_symbol(|_| Complex64::new(1.0, 0.0));
        let back = eng.apply_multiplier(&f, &one).unwrap();
        for (a, b) in f.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_interpolates_band_limited_data() {
        let g = Grid::new(25.0, 512).unwrap();
        let eng = SpectralEngine::new(&g).unwrap();
        let f: Vec<f64> = g
            .x_samples()
            .iter()
            .map(|&x| (-(x * x) / 4.0).exp())
            .collect();
        let fine = eng.refine_double(&f).unwrap();
        assert_eq!(fine.len(), 1024);
        // even samples agree with the originals, odd samples sit in between
        for i in 0..g.n {
            assert!((fine[2 * i] - f[i]).abs() < 1e-10);
        }
        let x_half = g.x(100) + 0.5 * g.h;
        assert!((fine[201] - (-(x_half * x_half) / 4.0).exp()).abs() < 1e-8);
    }
}
