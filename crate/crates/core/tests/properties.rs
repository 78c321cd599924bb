//! Randomized structural invariants: weighted-norm embeddings, duality
//! pairings, kernel symbol envelopes, inverse/forward operator round trips,
//! and conservation of the far-field split.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use pacewave_core::field::split_far_field;
use pacewave_core::norms::{bracket, pairing, weight, weighted_lp};
use pacewave_core::solvers::antiderivative;
use pacewave_core::{DriftLaplacian, Error, Field, Grid, Kernel, SpectralEngine};

const HALF_WIDTH: f64 = 40.0;
const POINTS: usize = 1024;

fn engine() -> &'static Arc<SpectralEngine> {
    static ENGINE: OnceLock<Arc<SpectralEngine>> = OnceLock::new();
    ENGINE.get_or_init(|| SpectralEngine::new(&Grid::new(HALF_WIDTH, POINTS).unwrap()).unwrap())
}

/// Sum of a few gaussian bumps kept well inside the box, so every sampled
/// field decays to rounding level before the window band.
#[derive(Debug, Clone)]
struct Bumps(Vec<(f64, f64, f64)>);

impl Bumps {
    fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|&(a, c, w)| a * (-((x - c) / w).powi(2)).exp())
            .sum()
    }

    fn field(&self) -> Field {
        Field::from_fn(&engine().grid, |x| self.eval(x))
    }
}

fn bumps() -> impl Strategy<Value = Bumps> {
    prop::collection::vec((-2.0..2.0_f64, -8.0..8.0_f64, 0.7..3.0_f64), 1..4).prop_map(Bumps)
}

proptest! {
    #[test]
    fn weight_is_even_and_one_at_origin(x in -100.0..100.0_f64, gamma in -3.0..3.0_f64) {
        prop_assert!((weight(0.0, gamma) - 1.0).abs() < 1e-15);
        let w = weight(x, gamma);
        prop_assert!((w - weight(-x, gamma)).abs() <= 1e-12 * w.abs());
        prop_assert!(bracket(x) >= 1.0_f64.max(x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_norms_nest_in_the_weight(
        b in bumps(),
        g in -1.5..2.0_f64,
        dg in 0.01..2.0_f64,
        p in 1.0..4.0_f64,
    ) {
        let f = b.field();
        prop_assume!(f.max_abs() > 1e-3);
        let lo = weighted_lp(&f, g, p).unwrap();
        let hi = weighted_lp(&f, g + dg, p).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12), "embedding reversed: {lo} > {hi}");
    }

    #[test]
    fn weighted_norm_scales_and_subadds(
        a in bumps(),
        b in bumps(),
        c in -3.0..3.0_f64,
        g in -1.0..2.0_f64,
    ) {
        let fa = a.field();
        let fb = b.field();
        let na = weighted_lp(&fa, g, 2.0).unwrap();
        let nb = weighted_lp(&fb, g, 2.0).unwrap();
        let scaled = weighted_lp(&fa.scale(c), g, 2.0).unwrap();
        prop_assert!((scaled - c.abs() * na).abs() <= 1e-10 * (1.0 + na));
        let sum = weighted_lp(&fa.add(&fb), g, 2.0).unwrap();
        prop_assert!(sum <= na + nb + 1e-10);
    }

    #[test]
    fn pairing_respects_weighted_duality(a in bumps(), b in bumps(), g in -1.0..1.0_f64) {
        let fa = a.field();
        let fb = b.field();
        let lhs = pairing(&fa, &fb).unwrap().abs();
        let rhs = weighted_lp(&fa, g, 2.0).unwrap() * weighted_lp(&fb, -g, 2.0).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn gaussian_symbol_peaks_at_zero_and_keeps_mass(
        std in 0.5..3.0_f64,
        l in -20.0..20.0_f64,
        b in bumps(),
    ) {
        let e = engine();
        let k = Kernel::gaussian(std, e).unwrap();
        prop_assert!((k.symbol_at(l) - k.symbol_at(-l)).abs() <= 1e-12);
        prop_assert!(k.symbol_at(l) <= k.symbol_at(0.0) + 1e-12);
        let f = b.field();
        let smoothed = k.convolve(&f).unwrap();
        let expected = k.symbol_at(0.0) * f.integrate();
        prop_assert!(
            (smoothed.integrate() - expected).abs() <= 1e-8 * (1.0 + expected.abs()),
            "convolution changed the mass"
        );
    }

    #[test]
    fn drift_solve_inverts_apply(b in bumps(), drift in 0.0..0.6_f64) {
        let e = engine();
        let u = b.field();
        prop_assume!(u.max_abs() > 1e-3);
        let op = DriftLaplacian::new(e, drift).unwrap();
        let f = op.apply(&u).unwrap();
        let sol = op.solve(&f).unwrap();
        let back = op.apply_bordered(&sol).unwrap();
        let err = back.sub(&f).max_abs() / f.max_abs().max(1e-12);
        prop_assert!(err < 1e-3, "round-trip residual {err} at drift {drift}");
    }

    #[test]
    fn antiderivative_recovers_the_primitive(b in bumps(), g in 0.55..1.5_f64) {
        let e = engine();
        let u = b.field();
        prop_assume!(u.max_abs() > 1e-3);
        let du = Field::from_values(&e.grid, e.derivative(&u.values, 1).unwrap()).unwrap();
        let prim = antiderivative(e, &du, g, 2.0).unwrap();
        let err = prim.sub(&u).max_abs() / u.max_abs();
        prop_assert!(err < 1e-7, "primitive off by {err}");
    }

    #[test]
    fn critical_weights_are_refused(b in bumps(), d in -9e-4..9e-4_f64) {
        let e = engine();
        let u = b.field();
        let du = Field::from_values(&e.grid, e.derivative(&u.values, 1).unwrap()).unwrap();
        let refused = matches!(
            antiderivative(e, &du, 0.5 + d, 2.0),
            Err(Error::CriticalWeight { .. })
        );
        prop_assert!(refused, "critical band accepted");
    }

    #[test]
    fn far_field_split_preserves_the_state(
        b in bumps(),
        off in -2.0..2.0_f64,
        step in -1.0..1.0_f64,
        vee in -0.2..0.2_f64,
        tilt in -0.2..0.2_f64,
    ) {
        let e = engine();
        let w = Field::from_fn(&e.grid, |x| {
            b.eval(x) + off + step * (x / 4.0).tanh() + vee * bracket(x) + tilt * x
        });
        let (loc, extra, _, _) = split_far_field(&w, 0.1, 0.02).unwrap();
        let rebuilt = loc.add(&extra.sample(&e.grid));
        let err = rebuilt.sub(&w).max_abs();
        prop_assert!(err <= 1e-10 * (1.0 + w.max_abs()), "split leaked {err}");
    }
}
