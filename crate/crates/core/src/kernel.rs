//! Transient impact: price pressure that decays after each trade.
//!
//! A decay kernel G(tau) >= 0 turns a rate path into the cost
//! D[v] = sum_a \int_0^T \int_0^t G(t - s) v_a(s) v_a(t) ds dt.
//! Both built-in kernels are completely monotone, which makes D a positive
//! semidefinite quadratic form, so transient impact can only dissipate.

use crate::error::{Error, Result};
use crate::quad;
use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKernel {
    /// G(tau) = kappa * exp(-rho * tau). rho = 0 degenerates to permanent
    /// pressure of size kappa.
    Exponential { kappa: f64, rho: f64 },
    /// G(tau) = kappa * (1 + tau)^(-delta) with 0 < delta < 1: slow decay
    /// with long memory, finite at tau = 0.
    PowerLawDecay { kappa: f64, delta: f64 },
}

impl DecayKernel {
    pub fn exponential(kappa: f64, rho: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidInput(format!("rho must be nonnegative, got {rho}")));
        }
        Ok(DecayKernel::Exponential { kappa, rho })
    }

    pub fn power_law_decay(kappa: f64, delta: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(DecayKernel::PowerLawDecay { kappa, delta })
    }

    /// G(tau) for tau >= 0.
    pub fn eval(&self, tau: f64) -> f64 {
        assert!(tau >= 0.0, "decay kernels are defined for tau >= 0");
        match *self {
            DecayKernel::Exponential { kappa, rho } => kappa * (-rho * tau).exp(),
            DecayKernel::PowerLawDecay { kappa, delta } => kappa * (1.0 + tau).powf(-delta),
        }
    }

    /// D[v] over the whole horizon. Exponential kernels on piecewise-constant
    /// rates evaluate in closed form; everything else goes through nested
    /// adaptive quadrature with splits at the segment breakpoints.
    pub fn transient_cost(&self, strategy: &Strategy) -> Result<f64> {
        if let Some(exact) = self.transient_cost_closed(strategy) {
            return Ok(exact);
        }
        self.transient_cost_quadrature(strategy)
    }

    fn transient_cost_closed(&self, strategy: &Strategy) -> Option<f64> {
        let (kappa, rho) = match *self {
            DecayKernel::Exponential { kappa, rho } => (kappa, rho),
            DecayKernel::PowerLawDecay { .. } => return None,
        };
        let segs = strategy.segments();
        if segs.iter().any(|s| s.rates.iter().any(|r| r.slope != 0.0)) {
            return None;
        }
        let mut total = 0.0;
        for a in 0..strategy.assets() {
            for (j, sj) in segs.iter().enumerate() {
                let vj = sj.rates[a].value;
                total += vj * vj * exp_kernel_same_segment(rho, sj.len());
                for si in &segs[..j] {
                    let vi = si.rates[a].value;
                    total += vi
                        * vj
                        * exp_kernel_cross(rho, si.len(), sj.t_start - si.t_end, sj.len());
                }
            }
        }
        Some(kappa * total)
    }

    fn transient_cost_quadrature(&self, strategy: &Strategy) -> Result<f64> {
        let horizon = strategy.horizon();
        let breaks: Vec<f64> =
            strategy.segments().iter().map(|s| s.t_end).take(strategy.segments().len() - 1).collect();
        let mut total = 0.0;
        for a in 0..strategy.assets() {
            let inner = |t: f64| -> f64 {
                let g = |s: f64| self.eval(t - s) * strategy.rate(s, a);
                quad::integrate(&g, 0.0, t, 1e-10, &breaks)
                    .expect("inner decay integral converges on a finite smooth piece")
            };
            let outer = |t: f64| strategy.rate(t, a) * inner(t);
            total += quad::integrate(&outer, 0.0, horizon, 1e-8, &breaks)?;
        }
        Ok(total)
    }
}

/// \int over the triangle {a <= s <= t <= a+l} of exp(-rho (t-s)),
/// = (rho l + expm1(-rho l)) / rho^2. Small rho l cancels, so a short
/// Taylor series takes over below 1e-4.
fn exp_kernel_same_segment(rho: f64, l: f64) -> f64 {
    let x = rho * l;
    if x < 1e-4 {
        l * l * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0)
    } else {
        (x + (-x).exp_m1()) / (rho * rho)
    }
}

/// \int over [s in I] x [t in J] of exp(-rho (t-s)) for I before J with
/// gap = start(J) - end(I) >= 0.
fn exp_kernel_cross(rho: f64, len_i: f64, gap: f64, len_j: f64) -> f64 {
    if rho == 0.0 {
        return len_i * len_j;
    }
    (-(-rho * len_i).exp_m1()) * (-(-rho * len_j).exp_m1()) * (-rho * gap).exp() / (rho * rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DecayKernel::exponential(0.0, 1.0).is_err());
        assert!(DecayKernel::exponential(1.0, -0.5).is_err());
        assert!(DecayKernel::exponential(1.0, 0.0).is_ok());
        assert!(DecayKernel::power_law_decay(1.0, 0.0).is_err());
        assert!(DecayKernel::power_law_decay(1.0, 1.0).is_err());
        assert!(DecayKernel::power_law_decay(-1.0, 0.5).is_err());
    }

    #[test]
    fn eval_shapes() {
        let e = DecayKernel::exponential(2.0, 3.0).unwrap();
        assert_eq!(e.eval(0.0), 2.0);
        assert!(e.eval(1.0) < e.eval(0.5));
        let p = DecayKernel::power_law_decay(2.0, 0.5).unwrap();
        assert_eq!(p.eval(0.0), 2.0);
        assert!((p.eval(3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_triangular_hand_value() {
        // two half-segments at rates +-1:
        // 2 (e^{-1/2} - 1/2) - (1 - e^{-1/2})^2
        let k = DecayKernel::exponential(1.0, 1.0).unwrap();
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let d = k.transient_cost(&s).unwrap();
        assert!((d - 0.05824319767909137).abs() < 1e-15, "got {d}");
    }

    #[test]
    fn zero_decay_reduces_to_terminal_inventory() {
        // rho = 0: D = kappa q_T^2 / 2
        let k = DecayKernel::exponential(3.0, 0.0).unwrap();
        let open = Strategy::from_rate_samples(&[0.0], &[2.0], 1.0).unwrap();
        assert!((k.transient_cost(&open).unwrap() - 6.0).abs() < 1e-12);
        let closed = Strategy::triangular(1.0, 1.0).unwrap();
        assert!(k.transient_cost(&closed).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        let k = DecayKernel::exponential(1.3, 2.1).unwrap();
        for s in [
            Strategy::triangular(1.0, 1.0).unwrap(),
            Strategy::random_round_trip(5, 4, 1.5, 2.0).unwrap(),
            Strategy::from_rate_samples(&[0.0, 0.4], &[1.0, 0.3], 1.0).unwrap(),
        ] {
            let closed = match k.transient_cost_closed(&s) {
                Some(v) => v,
                None => panic!("constant-rate strategy should take the closed form"),
            };
            let quad = k.transient_cost_quadrature(&s).unwrap();
            assert!(
                (closed - quad).abs() <= 1e-7 * closed.abs().max(1.0),
                "closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn same_segment_series_matches_exact_formula_at_threshold() {
        // both branches evaluated at the same x = rho l near the switch
        for l in [0.5e-4, 1.0e-4, 2.0e-4, 1.0e-3] {
            let rho = 1.0f64;
            let x = rho * l;
            let series = l * l * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
            let exact = (x + (-x).exp_m1()) / (rho * rho);
            assert!(
                (series - exact).abs() <= 1e-10 * series,
                "l={l}: series {series} vs exact {exact}"
            );
            assert!((exp_kernel_same_segment(rho, l) - series).abs() <= 1e-11 * series);
        }
    }

    #[test]
    fn affine_rates_take_quadrature_and_stay_positive() {
        let k = DecayKernel::exponential(1.0, 1.0).unwrap();
        let ramp = Strategy::ramp(1.0, 1.0).unwrap();
        assert!(k.transient_cost_closed(&ramp).is_none());
        let d = k.transient_cost(&ramp).unwrap();
        assert!(d > 0.0);
        // bounded by the zero-decay cost of the same flow magnitudes:
        // G <= kappa so D <= kappa (\int |v|)^2 / 2 = kappa / 8
        assert!(d < 0.125);
    }

    #[test]
    fn power_law_cost_positive_and_bounded() {
        let k = DecayKernel::power_law_decay(2.0, 0.5).unwrap();
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let d = k.transient_cost(&s).unwrap();
        assert!(d > 0.0);
        assert!(d < 2.0 * 0.5); // kappa (\int |v|)^2 / 2
    }

    #[test]
    fn two_identical_assets_double_the_cost() {
        use crate::strategy::Segment;
        let k = DecayKernel::exponential(1.0, 1.0).unwrap();
        let single = Strategy::triangular(1.0, 1.0).unwrap();
        let segments = single
            .segments()
            .iter()
            .map(|seg| Segment {
                t_start: seg.t_start,
                t_end: seg.t_end,
                rates: vec![seg.rates[0], seg.rates[0]],
            })
            .collect();
        let double = Strategy::from_segments(1.0, 2, segments).unwrap();
        let d1 = k.transient_cost(&single).unwrap();
        let d2 = k.transient_cost(&double).unwrap();
        assert!((d2 - 2.0 * d1).abs() < 1e-14);
    }
}
