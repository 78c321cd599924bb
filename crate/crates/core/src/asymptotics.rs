//! Constructive small-coupling pipeline: the leading-order response to a
//! localized inhomogeneity and the contraction that corrects it to a full
//! pacemaker profile.
//!
//! A pacemaker is sought as
//!     Phi(x, t) = core(x) + (offset + k x) tanh(x) - omega t,
//! with a decaying core. The tanh glue realizes the selected outgoing slopes
//! +-k exactly, so the unknown core lives in a weighted space where the
//! bordered drift Laplacian is invertible. Expanding in the coupling eps
//! gives a linear leading-order problem; the remainder is picked up by a
//! fixed-point iteration whose preconditioner is the same bordered operator
//! with the drift refreshed from the current wavenumber.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{tanh_deriv, FarFieldTemplate, Field};
use crate::grid::SpectralEngine;
use crate::kernels::{DerivedSymbols, Medium};
use crate::norms;
use crate::solvers::DriftLaplacian;

/// Edge mass above this fraction of the peak means the forcing does not fit
/// the box and moments would be silently wrong.
const FORCING_TAIL_LIMIT: f64 = 1e-8;

/// Localized forcing profile together with its first two moments, which set
/// the leading-order frequency and asymmetry of the response.
#[derive(Debug, Clone)]
pub struct Inhomogeneity {
    pub profile: Field,
    /// Total mass; its sign decides which coupling signs admit a pacemaker.
    pub mass: f64,
    /// First moment; breaks the left-right symmetry of the response.
    pub first_moment: f64,
}

impl Inhomogeneity {
    pub fn new(profile: Field) -> Result<Inhomogeneity> {
        if !profile.is_finite() {
            return Err(Error::InvalidParameter(
                "forcing profile has non-finite samples".into(),
            ));
        }
        let tail = norms::edge_decay_ratio(&profile, 0.02);
        if tail > FORCING_TAIL_LIMIT {
            return Err(Error::MassTruncated {
                tail,
                limit: FORCING_TAIL_LIMIT,
            });
        }
        let mass = profile.integrate();
        let first_moment = norms::moment(&profile, 1);
        Ok(Inhomogeneity {
            profile,
            mass,
            first_moment,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: &Arc<crate::grid::Grid>,
        f: F,
    ) -> Result<Inhomogeneity> {
        Inhomogeneity::new(Field::from_fn(grid, f))
    }

    /// The canonical example: a negative Gaussian dip, so positive couplings
    /// select outgoing waves.
    pub fn gaussian_dip(grid: &Arc<crate::grid::Grid>) -> Result<Inhomogeneity> {
        Inhomogeneity::from_fn(grid, |x| -(-x * x).exp())
    }

    /// A pacemaker exists only when the coupling opposes the forcing mass;
    /// the aligned sign would demand incoming waves.
    pub fn check_sign(&self, epsilon: f64) -> Result<()> {
        if epsilon * self.mass < 0.0 {
            Ok(())
        } else {
            Err(Error::SignCondition {
                epsilon,
                g0: self.mass,
            })
        }
    }
}

/// Derivative of the coupled response at zero coupling: decaying profile
/// plus the rates at which offset and wavenumber switch on.
#[derive(Debug, Clone)]
pub struct LeadingOrder {
    pub response: Field,
    pub offset_rate: f64,
    pub wavenumber_rate: f64,
}

fn leading_from(engine: &Arc<SpectralEngine>, f: &Field) -> Result<LeadingOrder> {
    let lap = DriftLaplacian::new(engine, 0.0)?;
    let sol = lap.solve(f)?;
    Ok(LeadingOrder {
        response: sol.field,
        offset_rate: sol.alpha,
        wavenumber_rate: sol.beta,
    })
}

/// Leading-order response of the locally coupled model: the bordered
/// Laplace problem with the forcing as right-hand side.
pub fn leading_order_local(
    engine: &Arc<SpectralEngine>,
    forcing: &Inhomogeneity,
) -> Result<LeadingOrder> {
    leading_from(engine, &forcing.profile.scale(-1.0))
}

/// Leading-order response of the nonlocally coupled model: the smoothing
/// operator is first inverted against the plain Laplacian, which divides
/// the forcing by the effective diffusivity symbol.
pub fn leading_order_nonlocal(
    symbols: &DerivedSymbols,
    forcing: &Inhomogeneity,
) -> Result<LeadingOrder> {
    let image = symbols.apply(&symbols.inverse_diffusivity, &forcing.profile)?;
    leading_from(&symbols.engine, &image.scale(-1.0))
}

#[derive(Debug, Clone)]
pub struct CorrectorOptions {
    /// Relative update size below which the iteration is declared converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        CorrectorOptions {
            tolerance: 1e-11,
            max_iterations: 60,
        }
    }
}

/// A corrected pacemaker profile: Phi(x, t) = core + (offset + k x) tanh(x)
/// - omega t with all parameters at finite coupling.
#[derive(Debug, Clone)]
pub struct Pacemaker {
    pub epsilon: f64,
    /// Decaying part of the profile, coupling scale included.
    pub core: Field,
    pub offset: f64,
    pub wavenumber: f64,
    pub frequency: f64,
    /// Fixed-point iterations spent; zero for a plain leading-order profile.
    pub iterations: usize,
}

impl Pacemaker {
    /// Uncorrected profile straight from the leading order, for comparing
    /// how much the contraction improves the residual.
    pub fn from_leading(epsilon: f64, lead: &LeadingOrder, transport_mass: f64) -> Pacemaker {
        let k = epsilon * lead.wavenumber_rate;
        Pacemaker {
            epsilon,
            core: lead.response.scale(epsilon),
            offset: epsilon * lead.offset_rate,
            wavenumber: k,
            frequency: transport_mass * transport_mass * k * k,
            iterations: 0,
        }
    }

    /// The far-field part of the profile in template form.
    pub fn template(&self) -> FarFieldTemplate {
        FarFieldTemplate {
            mean_offset: 0.0,
            step: self.offset,
            vee_slope: self.wavenumber,
            tilt: 0.0,
        }
    }

    /// Full spatial profile at time zero.
    pub fn phase_profile(&self) -> Field {
        let t = self.template();
        self.core.add(&t.sample(&self.core.grid))
    }

    pub fn phase_at(&self, x: f64, t: f64) -> f64 {
        self.core.value_at(x) + (self.offset + self.wavenumber * x) * x.tanh() - self.frequency * t
    }
}

fn derivative_field(engine: &Arc<SpectralEngine>, f: &Field) -> Result<Field> {
    Ok(Field {
        grid: engine.grid.clone(),
        values: engine.derivative(&f.values, 1)?,
    })
}

struct IterationState {
    rho: Field,
    alpha: f64,
    beta: f64,
    history: Vec<f64>,
}

impl IterationState {
    fn new(grid: &Arc<crate::grid::Grid>) -> IterationState {
        IterationState {
            rho: Field::zeros(grid),
            alpha: 0.0,
            beta: 0.0,
            history: Vec::new(),
        }
    }

    /// Absorb a fresh solve; the return value is the converged flag.
    fn absorb(&mut self, sol: crate::solvers::BorderedSolution, tolerance: f64) -> Result<bool> {
        let delta = sol.field.sub(&self.rho).max_abs()
            + (sol.alpha - self.alpha).abs()
            + (sol.beta - self.beta).abs();
        self.history.push(delta);
        self.rho = sol.field;
        self.alpha = sol.alpha;
        self.beta = sol.beta;
        if !delta.is_finite() || delta > 1e3 * (self.history[0] + 1.0) {
            return Err(Error::CorrectorDiverged {
                iterations: self.history.len(),
                history: self.history.clone(),
            });
        }
        let scale = 1.0 + self.rho.max_abs() + self.alpha.abs() + self.beta.abs();
        Ok(delta < tolerance * scale)
    }

    fn exhausted(self) -> Error {
        Error::CorrectorDiverged {
            iterations: self.history.len(),
            history: self.history,
        }
    }
}

/// Correct the leading order of the locally coupled model to a genuine
/// steady source. Each pass solves the bordered drift problem
///     T_b (rho, alpha, beta) = eps N(rho, alpha, beta),
/// where b = eps (b1 + beta) is refreshed from the current iterate and N
/// collects every term of the steady equation beyond the linearization.
pub fn solve_pacemaker_local(
    engine: &Arc<SpectralEngine>,
    forcing: &Inhomogeneity,
    epsilon: f64,
    lead: &LeadingOrder,
    opts: &CorrectorOptions,
) -> Result<Pacemaker> {
    forcing.check_sign(epsilon)?;
    let grid = &engine.grid;
    let s = Field::from_fn(grid, |x| x.tanh());
    let sp = Field::from_fn(grid, |x| tanh_deriv(1, x));
    let phi1_prime = derivative_field(engine, &lead.response)?;
    let two_s_phi1p = s.mul(&phi1_prime).scale(2.0);
    let mut state = IterationState::new(grid);
    for iter in 1..=opts.max_iterations {
        let a = lead.offset_rate + state.alpha;
        let b = lead.wavenumber_rate + state.beta;
        let lap = DriftLaplacian::new(engine, epsilon * b)?;
        let affine = Field::from_fn(grid, |x| a + b * x);
        // w is the decaying part of the profile slope
        let w = phi1_prime
            .add(&derivative_field(engine, &state.rho)?)
            .add(&affine.mul(&sp));
        // N = w^2 + 2 b S (a + b x) S' - b^2 S' + 2 b S phi1'
        let rhs = w
            .mul(&w)
            .add(&s.mul(&affine).mul(&sp).scale(2.0 * b))
            .sub(&sp.scale(b * b))
            .add(&two_s_phi1p.scale(b))
            .scale(epsilon);
        if state.absorb(lap.solve(&rhs)?, opts.tolerance)? {
            let k = epsilon * (lead.wavenumber_rate + state.beta);
            return Ok(Pacemaker {
                epsilon,
                core: lead.response.add(&state.rho).scale(epsilon),
                offset: epsilon * (lead.offset_rate + state.alpha),
                wavenumber: k,
                frequency: k * k,
                iterations: iter,
            });
        }
    }
    Err(state.exhausted())
}

/// Correct the leading order of the nonlocally coupled model. The expansion
/// is organized for media normalized to unit transport mass and unit
/// smoothing second moment; other media must be rescaled first.
pub fn solve_pacemaker_nonlocal(
    medium: &Medium,
    symbols: &DerivedSymbols,
    forcing: &Inhomogeneity,
    epsilon: f64,
    lead: &LeadingOrder,
    opts: &CorrectorOptions,
) -> Result<Pacemaker> {
    forcing.check_sign(epsilon)?;
    if (medium.transport.mass - 1.0).abs() > 1e-9
        || (medium.smoothing.second_moment - 1.0).abs() > 1e-9
    {
        return Err(Error::Hypothesis(
            "corrector expansion assumes unit transport mass and unit smoothing \
             second moment; rescale the medium first"
                .into(),
        ));
    }
    let engine = &symbols.engine;
    let grid = &engine.grid;
    let s = Field::from_fn(grid, |x| x.tanh());
    // transport profiles of the template, exact beyond the box
    let p_s = medium
        .transport
        .convolve_deriv_closed_form(|x: f64| x.tanh())?;
    let p_xs = medium
        .transport
        .convolve_deriv_closed_form(|x: f64| x * x.tanh())?;
    let ones = Field::from_fn(grid, |_| 1.0);
    let q_step = p_xs.mul(&p_xs).sub(&ones);
    let q_even = p_s.mul(&p_s);
    let q_cross = p_s.mul(&p_xs);
    let q_drift = p_xs.sub(&s);
    let mut state = IterationState::new(grid);
    for iter in 1..=opts.max_iterations {
        let a = lead.offset_rate + state.alpha;
        let b = lead.wavenumber_rate + state.beta;
        let lap = DriftLaplacian::new(engine, epsilon * b)?;
        let phi = lead.response.add(&state.rho);
        let jphi = medium.transport.convolve_deriv(&phi)?;
        // gathered nonlinearity before smoothing inversion
        let gathered = q_step
            .scale(b * b)
            .add(&q_even.scale(a * a))
            .add(&jphi.mul(&jphi))
            .add(&jphi.mul(&p_s).scale(2.0 * a))
            .add(&q_cross.scale(2.0 * a * b))
            .add(&jphi.mul(&q_drift).scale(2.0 * b));
        let n1 = symbols.apply(&symbols.inverse_diffusivity, &gathered)?;
        // transport of the core against the glue, with the locally absorbed
        // drift taken back out
        let n2 = symbols
            .apply(&symbols.inverse_diffusivity, &s.mul(&jphi))?
            .sub(&s.mul(&derivative_field(engine, &state.rho)?));
        let rhs = n1.add(&n2.scale(2.0 * b)).scale(epsilon);
        if state.absorb(lap.solve(&rhs)?, opts.tolerance)? {
            let k = epsilon * (lead.wavenumber_rate + state.beta);
            return Ok(Pacemaker {
                epsilon,
                core: lead.response.add(&state.rho).scale(epsilon),
                offset: epsilon * (lead.offset_rate + state.alpha),
                wavenumber: k,
                frequency: medium.wavetrain_frequency(k),
                iterations: iter,
            });
        }
    }
    Err(state.exhausted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernels::Kernel;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn engine(n: usize) -> Arc<SpectralEngine> {
        let grid = Grid::new(60.0, n).unwrap();
        SpectralEngine::new(&grid).unwrap()
    }

    fn offset_dip(engine: &Arc<SpectralEngine>) -> Inhomogeneity {
        Inhomogeneity::from_fn(&engine.grid, |x| -(-(x - 0.3) * (x - 0.3)).exp()).unwrap()
    }

    #[test]
    fn leading_rates_follow_the_forcing_moments_locally() {
        let eng = engine(1024);
        let forcing = offset_dip(&eng);
        assert_relative_eq!(forcing.mass, -PI.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(forcing.first_moment, -0.3 * PI.sqrt(), epsilon = 1e-10);
        let lead = leading_order_local(&eng, &forcing).unwrap();
        // offset rate is half the first moment, wavenumber rate minus half
        // the mass
        assert_relative_eq!(lead.offset_rate, -0.15 * PI.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(lead.wavenumber_rate, 0.5 * PI.sqrt(), epsilon = 1e-8);
        assert!(norms::edge_decay_ratio(&lead.response, 0.02) < 1e-6);
    }

    #[test]
    fn leading_rates_divide_by_the_diffusivity_nonlocally() {
        let eng = engine(1024);
        let medium = Medium::self_coupled(Kernel::gaussian(1.0, &eng).unwrap()).unwrap();
        let symbols = DerivedSymbols::new(&medium).unwrap();
        let forcing = offset_dip(&eng);
        let lead = leading_order_nonlocal(&symbols, &forcing).unwrap();
        // unit second moment: the rates double relative to the local model
        assert_relative_eq!(lead.offset_rate, -0.3 * PI.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(lead.wavenumber_rate, PI.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn local_corrector_reproduces_the_spectral_oracle() {
        let eng = engine(2048);
        let forcing = Inhomogeneity::gaussian_dip(&eng.grid).unwrap();
        let lead = leading_order_local(&eng, &forcing).unwrap();
        let pm = solve_pacemaker_local(&eng, &forcing, 0.1, &lead, &CorrectorOptions::default())
            .unwrap();
        // independent bound-state computation of the same wavenumber
        let oracle = crate::diagnostics::pacemaker_frequency_oracle(
            0.1,
            |x: f64| -(-x * x).exp(),
            &crate::diagnostics::OracleOptions::default(),
        )
        .unwrap();
        assert!(
            (pm.wavenumber - oracle.decay).abs() < 1e-6,
            "corrector k {} vs oracle {}",
            pm.wavenumber,
            oracle.decay
        );
        assert_relative_eq!(pm.frequency, pm.wavenumber * pm.wavenumber, epsilon = 1e-14);
        // even forcing leaves no offset
        assert!(pm.offset.abs() < 1e-9);
        assert!(pm.iterations <= 30, "took {} iterations", pm.iterations);
    }

    #[test]
    fn nonlocal_corrector_converges_and_respects_symmetry() {
        let eng = engine(1024);
        let medium = Medium::self_coupled(Kernel::gaussian(1.0, &eng).unwrap()).unwrap();
        let symbols = DerivedSymbols::new(&medium).unwrap();
        let forcing = Inhomogeneity::gaussian_dip(&eng.grid).unwrap();
        let lead = leading_order_nonlocal(&symbols, &forcing).unwrap();
        let pm = solve_pacemaker_nonlocal(
            &medium,
            &symbols,
            &forcing,
            0.1,
            &lead,
            &CorrectorOptions::default(),
        )
        .unwrap();
        assert!(pm.wavenumber > 0.0);
        let relative = (pm.wavenumber / 0.1 - PI.sqrt()).abs() / PI.sqrt();
        assert!(relative < 0.25, "wavenumber rate off by {relative}");
        assert!(pm.offset.abs() < 1e-9);
        assert_relative_eq!(
            pm.frequency,
            medium.wavetrain_frequency(pm.wavenumber),
            epsilon = 1e-14
        );
    }

    #[test]
    fn couplings_aligned_with_the_forcing_mass_are_refused() {
        let eng = engine(1024);
        let forcing = Inhomogeneity::gaussian_dip(&eng.grid).unwrap();
        let lead = leading_order_local(&eng, &forcing).unwrap();
        for eps in [-0.1, 0.0] {
            let err = solve_pacemaker_local(&eng, &forcing, eps, &lead, &Default::default());
            assert!(matches!(err, Err(Error::SignCondition { .. })), "eps {eps}");
        }
    }

    #[test]
    fn unnormalized_media_are_rejected_by_the_corrector() {
        let eng = engine(1024);
        let medium = Medium::self_coupled(Kernel::gaussian(2.0, &eng).unwrap()).unwrap();
        let symbols = DerivedSymbols::new(&medium).unwrap();
        let forcing = Inhomogeneity::gaussian_dip(&eng.grid).unwrap();
        let lead = leading_order_nonlocal(&symbols, &forcing).unwrap();
        let err =
            solve_pacemaker_nonlocal(&medium, &symbols, &forcing, 0.1, &lead, &Default::default());
        assert!(matches!(err, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn transport_term_split_form_requires_the_zero_mode() {
        // the two-factor form of the transport term drops the zero mode of
        // the smoothing inversion; adding it back in reproduces the direct
        // assembly exactly
        let eng = engine(1024);
        let medium = Medium::self_coupled(Kernel::gaussian(1.0, &eng).unwrap()).unwrap();
        let symbols = DerivedSymbols::new(&medium).unwrap();
        let grid = &eng.grid;
        let s = Field::from_fn(grid, |x| x.tanh());
        let rho = Field::from_fn(grid, |x| {
            (0.7 * x).sin() * (-0.25 * x * x).exp() + 0.3 * (-0.5 * (x - 1.0) * (x - 1.0)).exp()
        });
        let jrho = medium.transport.convolve_deriv(&rho).unwrap();
        let s_jrho = s.mul(&jrho);
        let s_rho_prime = s.mul(&derivative_field(&eng, &rho).unwrap());
        let direct = symbols
            .apply(&symbols.inverse_diffusivity, &s_jrho)
            .unwrap()
            .sub(&s_rho_prime);
        // composed in one pass; a two-pass version would also truncate the
        // causal kernel at the padding seam, which is a different effect
        let product: Vec<_> = symbols
            .causal_derivative
            .iter()
            .zip(&symbols.diffusivity_factor)
            .map(|(d, g)| d * g)
            .collect();
        let two_step = symbols.apply(&product, &s_jrho).unwrap();
        let split = s_jrho.sub(&s_rho_prime).add(&two_step);
        let padded_mean = s_jrho.values.iter().sum::<f64>() / (2 * grid.n) as f64;
        let lost = symbols.pole_weight * padded_mean;
        assert!(
            lost.abs() > 1e-6,
            "test profile should excite the zero mode"
        );
        let gap = direct.sub(&split).max_abs();
        assert!((gap - lost.abs()).abs() < 1e-10, "gap {gap} vs lost {lost}");
        let patched = Field::from_fn(grid, |_| lost);
        let err = direct.sub(&split).sub(&patched).max_abs();
        assert!(err < 1e-10, "patched split differs by {err}");
    }

    #[test]
    fn pacemaker_profile_assembles_core_plus_template() {
        let eng = engine(1024);
        let forcing = Inhomogeneity::gaussian_dip(&eng.grid).unwrap();
        let lead = leading_order_local(&eng, &forcing).unwrap();
        let pm = Pacemaker::from_leading(0.05, &lead, 1.0);
        let assembled = pm.core.add(&pm.template().sample(&eng.grid));
        assert!(assembled.sub(&pm.phase_profile()).max_abs() < 1e-14);
        assert_relative_eq!(pm.wavenumber, 0.05 * 0.5 * PI.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(pm.frequency, pm.wavenumber * pm.wavenumber, epsilon = 1e-12);
    }
}
