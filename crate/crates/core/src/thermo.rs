//! Work, heat, and loss bounds for execution paths.
//!
//! The central quantity is the dissipated work
//! W[v] = \int (J(v) . v + I(v) . q) dt: the expected cost of friction, paid
//! to temporary impact as you trade and to permanent impact as you carry what
//! you moved. Cash P&L decomposes as Pi = -W + Q where Q is a centered
//! Gaussian driven by the exogenous noise, so W prices every probabilistic
//! statement about losing or winning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{ImpactModel, PermanentImpact};
use crate::matrix::SquareMatrix;
use crate::numeric::{golden_minimize, norm_cdf};
use crate::quad;
use crate::strategy::Strategy;

/// Exogenous noise specification: one sigma for every asset, or a full
/// covariance (per unit time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Volatility {
    Scalar(f64),
    Matrix(SquareMatrix),
}

impl Volatility {
    pub fn scalar(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(Volatility::Scalar(sigma))
    }

    pub fn covariance(cov: SquareMatrix) -> Result<Self> {
        let scale = cov.trace().abs().max(1.0);
        if cov.max_asymmetry() > 1e-9 * scale {
            return Err(Error::InvalidInput(format!(
                "covariance must be symmetric (asymmetry {})",
                cov.max_asymmetry()
            )));
        }
        Ok(Volatility::Matrix(cov))
    }

    /// Check compatibility with a given asset count.
    pub fn validate(&self, assets: usize) -> Result<()> {
        match self {
            Volatility::Scalar(s) => {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {s}")));
                }
            }
            Volatility::Matrix(m) => {
                if m.dim() != assets {
                    return Err(Error::DimensionMismatch { expected: assets, got: m.dim() });
                }
            }
        }
        Ok(())
    }
}

/// W[v], exact. The temporary part is eta \int sum_a |v_a|^(exponent) dt; the
/// permanent part contracts the impact coefficients with C_ij = \int q_i v_j dt.
/// Both reduce to closed-form polynomial integrals, so no tolerance is
/// involved. Does not require a round trip; for round trips the single-asset
/// permanent part vanishes identically (C_aa telescopes to q_T^2 / 2).
pub fn dissipated_work(model: &ImpactModel, strategy: &Strategy) -> Result<f64> {
    if model.assets() != strategy.assets() {
        return Err(Error::DimensionMismatch { expected: model.assets(), got: strategy.assets() });
    }
    let temp = model.temporary().eta()
        * strategy.rate_power_integral(model.temporary().cost_exponent())?;
    let cross = strategy.inventory_rate_cross_integral();
    let perm = match model.permanent() {
        PermanentImpact::Linear { lambda } => lambda * cross.trace(),
        PermanentImpact::Matrix(m) => m.frobenius_inner(&cross)?,
    };
    Ok(temp + perm)
}

/// P(Pi >= 0) when Pi ~ Normal(-work, noise_variance). At zero noise the
/// outcome is deterministic: 0 if work > 0, else 1.
pub fn exact_profit_probability(work: f64, noise_variance: f64) -> f64 {
    assert!(noise_variance >= 0.0, "noise variance cannot be negative");
    if noise_variance == 0.0 {
        return if work > 0.0 { 0.0 } else { 1.0 };
    }
    norm_cdf(-work / noise_variance.sqrt())
}

/// exp(-work^2 / (2 noise_variance)), the optimal exponential-tilt bound on
/// P(Pi >= 0). Trivially 1 when work <= 0; degenerates like the exact
/// probability at zero noise.
pub fn chernoff_profit_bound(work: f64, noise_variance: f64) -> f64 {
    assert!(noise_variance >= 0.0, "noise variance cannot be negative");
    if noise_variance == 0.0 {
        return if work > 0.0 { 0.0 } else { 1.0 };
    }
    if work <= 0.0 {
        return 1.0;
    }
    (-work * work / (2.0 * noise_variance)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnlStats {
    pub work: f64,
    /// V = \int ||q||^2 dt.
    pub variance_term: f64,
    pub sigma: f64,
    pub mean_pnl: f64,
    /// sigma^2 V.
    pub pnl_variance: f64,
    pub profit_prob_exact: f64,
    pub chernoff_bound: f64,
    /// W / (sigma^2 V); None when the noise variance vanishes.
    pub beta_v: Option<f64>,
}

/// Full P&L summary for a round trip under scalar volatility. Round trips
/// only: with open terminal inventory the cash P&L is no longer -W + Q with
/// Q of variance sigma^2 \int q^2.
pub fn pnl_statistics(model: &ImpactModel, strategy: &Strategy, sigma: f64) -> Result<PnlStats> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    strategy.require_round_trip()?;
    let work = dissipated_work(model, strategy)?;
    let variance_term = strategy.position_variance();
    let pnl_variance = sigma * sigma * variance_term;
    Ok(PnlStats {
        work,
        variance_term,
        sigma,
        mean_pnl: -work,
        pnl_variance,
        profit_prob_exact: exact_profit_probability(work, pnl_variance),
        chernoff_bound: chernoff_profit_bound(work, pnl_variance),
        beta_v: (pnl_variance > 0.0).then(|| work / pnl_variance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffOptimum {
    /// Optimal tilt theta* = work / (sigma^2 V).
    pub theta: f64,
    pub bound: f64,
}

/// The tilt parameter minimizing E[exp(theta Pi)] and the bound it yields.
/// The minimizer of the quadratic exponent is analytic; a golden-section
/// search over the same exponent cross-checks it and trips NumericalFailure
/// on disagreement, which would indicate a broken invariant upstream.
pub fn chernoff_optimum(work: f64, sigma: f64, variance_term: f64) -> Result<ChernoffOptimum> {
    if !(work.is_finite() && work > 0.0) {
        return Err(Error::InvalidInput(format!("tilt optimum needs work > 0, got {work}")));
    }
    let noise_variance = sigma * sigma * variance_term;
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tilt optimum needs sigma^2 V > 0, got {noise_variance}"
        )));
    }
    let theta = work / noise_variance;
    // log E[exp(theta Pi)] = theta^2 nv / 2 - theta W
    let exponent = |t: f64| 0.5 * t * t * noise_variance - t * work;
    let searched = golden_minimize(&exponent, 0.0, 2.0 * theta, 1e-10 * theta.max(1.0));
    // golden section resolves a quadratic minimum to ~sqrt(eps) relative
    if (searched - theta).abs() > 1e-7 * theta.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "tilt optimum cross-check failed: analytic {theta}, searched {searched}"
        )));
    }
    Ok(ChernoffOptimum { theta, bound: (exponent(theta)).exp() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiAssetBound {
    pub work: f64,
    /// \int q^T Sigma q dt.
    pub exact_heat_variance: f64,
    /// tr(Sigma) \int ||q||^2 dt, an upper bound needing only total variance.
    pub trace_heat_variance: f64,
    pub exact_bound: f64,
    pub trace_bound: f64,
}

/// Loss bound for a multi-asset round trip under correlated noise, both with
/// the exact heat variance and with the coarser trace estimate. The exact
/// variance never exceeds the trace one, so exact_bound <= trace_bound: using
/// only total variance always understates how unlikely profit is.
pub fn multi_asset_bound(
    model: &ImpactModel,
    strategy: &Strategy,
    covariance: &SquareMatrix,
) -> Result<MultiAssetBound> {
    if covariance.dim() != strategy.assets() {
        return Err(Error::DimensionMismatch {
            expected: strategy.assets(),
            got: covariance.dim(),
        });
    }
    let scale = covariance.trace().abs().max(1.0);
    if covariance.max_asymmetry() > 1e-9 * scale {
        return Err(Error::InvalidInput(format!(
            "covariance must be symmetric (asymmetry {})",
            covariance.max_asymmetry()
        )));
    }
    strategy.require_round_trip()?;
    let work = dissipated_work(model, strategy)?;
    let moments = strategy.inventory_outer_integral();
    let trace_heat_variance = covariance.trace() * moments.trace();
    let mut exact_heat_variance = covariance.frobenius_inner(&moments)?;
    if exact_heat_variance < 0.0 {
        if exact_heat_variance >= -1e-12 * trace_heat_variance.max(1.0) {
            exact_heat_variance = 0.0;
        } else {
            return Err(Error::InvalidInput(format!(
                "covariance is not positive semidefinite along this path \
                 (heat variance {exact_heat_variance})"
            )));
        }
    }
    Ok(MultiAssetBound {
        work,
        exact_heat_variance,
        trace_heat_variance,
        exact_bound: chernoff_profit_bound(work, exact_heat_variance),
        trace_bound: chernoff_profit_bound(work, trace_heat_variance),
    })
}

/// W[v] for a user-supplied running cost L(v, q), by adaptive quadrature with
/// splits at segment breakpoints and rate sign changes. L must vanish at zero
/// rate (a pure trading friction, no holding cost); that is probed at every
/// breakpoint before integrating.
pub fn lagrangian_work<L>(strategy: &Strategy, lagrangian: L, rel_tol: f64) -> Result<f64>
where
    L: Fn(&[f64], &[f64]) -> f64,
{
    if !(rel_tol.is_finite() && rel_tol > 0.0) {
        return Err(Error::InvalidInput(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let d = strategy.assets();
    let inv = strategy.inventory();
    let zero_rate = vec![0.0f64; d];
    let mut splits = Vec::new();
    for seg in strategy.segments() {
        splits.push(seg.t_start);
        for r in &seg.rates {
            if r.slope != 0.0 {
                let root = -r.value / r.slope;
                if root > 0.0 && root < seg.len() {
                    splits.push(seg.t_start + root);
                }
            }
        }
    }
    for &t in splits.iter().chain([strategy.horizon()].iter()) {
        let q: Vec<f64> = (0..d).map(|a| inv.value(t, a)).collect();
        let at_rest = lagrangian(&zero_rate, &q);
        if at_rest.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "running cost must vanish at zero rate; L(0, q({t})) = {at_rest}"
            )));
        }
    }
    let integrand = |t: f64| {
        let v: Vec<f64> = (0..d).map(|a| strategy.rate(t, a)).collect();
        let q: Vec<f64> = (0..d).map(|a| inv.value(t, a)).collect();
        lagrangian(&v, &q)
    };
    quad::integrate(&integrand, 0.0, strategy.horizon(), rel_tol, &splits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondLawReport {
    pub work: f64,
    pub mean_pnl: f64,
    pub round_trip_residual: Vec<f64>,
    /// work >= -tol, where tol covers only floating-point noise.
    pub work_nonnegative: bool,
    pub tol: f64,
}

/// Verify the no-free-lunch statement on a round trip: expected P&L is -W
/// and W cannot be negative. Errors on strategies with open terminal
/// inventory, where the statement does not apply.
pub fn second_law_verify(model: &ImpactModel, strategy: &Strategy) -> Result<SecondLawReport> {
    strategy.require_round_trip()?;
    let work = dissipated_work(model, strategy)?;
    let tol = 1e-12 * work.abs().max(1.0);
    Ok(SecondLawReport {
        work,
        mean_pnl: -work,
        round_trip_residual: strategy.round_trip_residual(),
        work_nonnegative: work >= -tol,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impact::TemporaryImpact;
    use crate::strategy::{LinearRate, Segment};

    fn linear_model(eta: f64, lambda: f64) -> ImpactModel {
        ImpactModel::single_asset(TemporaryImpact::linear(eta).unwrap(), lambda).unwrap()
    }

    #[test]
    fn triangular_work_is_lambda_free() {
        // W = eta vbar^2 T for every lambda on a round trip
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let base = dissipated_work(&linear_model(1.0, 0.0), &s).unwrap();
        assert!((base - 1.0).abs() < 1e-15);
        for lambda in [1.0, 5.0, 100.0] {
            let w = dissipated_work(&linear_model(1.0, lambda), &s).unwrap();
            assert!((w - base).abs() <= 1e-12, "lambda {lambda}: {w}");
        }
    }

    #[test]
    fn closed_form_works() {
        // ramp: W = eta vbar^2 T / 3; square wave: same W as triangular
        let ramp = Strategy::ramp(1.0, 1.0).unwrap();
        let w = dissipated_work(&linear_model(1.0, 2.0), &ramp).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
        for n in [2usize, 5] {
            let sq = Strategy::square_wave(1.0, 1.0, n).unwrap();
            let w = dissipated_work(&linear_model(1.0, 3.0), &sq).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "n {n}");
        }
        // power-law temporary on the ramp: eta \int |v|^3 = eta / 4
        let model = ImpactModel::single_asset(
            TemporaryImpact::power_law(2.0, 2.0).unwrap(),
            0.0,
        )
        .unwrap();
        let w = dissipated_work(&model, &ramp).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
    }

    fn two_asset_strategy() -> Strategy {
        // asset 0: symmetric triangle; asset 1: buys fast to 1/3, sells to T
        let segs = vec![
            Segment {
                t_start: 0.0,
                t_end: 1.0 / 3.0,
                rates: vec![LinearRate::constant(1.0), LinearRate::constant(2.0)],
            },
            Segment {
                t_start: 1.0 / 3.0,
                t_end: 0.5,
                rates: vec![LinearRate::constant(1.0), LinearRate::constant(-1.0)],
            },
            Segment {
                t_start: 0.5,
                t_end: 1.0,
                rates: vec![LinearRate::constant(-1.0), LinearRate::constant(-1.0)],
            },
        ];
        Strategy::from_segments(1.0, 2, segs).unwrap()
    }

    #[test]
    fn cross_impact_work_hand_value() {
        // C_01 = -1/12, C_10 = +1/12; Lambda = [[0,1],[0,0]] picks out C_01.
        // Temporary part: \int (v0^2 + v1^2) = 1 + 2 = 3.
        let s = two_asset_strategy();
        assert!(s.is_round_trip(1e-12));
        let lam = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let model = ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Matrix(lam),
            2,
        )
        .unwrap();
        let w = dissipated_work(&model, &s).unwrap();
        assert!((w - (3.0 - 1.0 / 12.0)).abs() < 1e-12, "got {w}");
    }

    #[test]
    fn symmetric_cross_impact_vanishes_on_round_trips() {
        // C + C^T integrates d(q_i q_j), zero on round trips
        let s = two_asset_strategy();
        let sym = SquareMatrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.2]]).unwrap();
        let model = ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Matrix(sym),
            2,
        )
        .unwrap();
        let w = dissipated_work(&model, &s).unwrap();
        assert!((w - 3.0).abs() < 1e-12, "got {w}");
    }

    #[test]
    fn pnl_statistics_triangular_frozen_values() {
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let stats = pnl_statistics(&linear_model(1.0, 0.5), &s, 1.0).unwrap();
        assert!((stats.work - 1.0).abs() < 1e-15);
        assert!((stats.variance_term - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(stats.mean_pnl, -stats.work);
        assert!((stats.pnl_variance - 1.0 / 12.0).abs() < 1e-16);
        // Phi(-sqrt 12) and exp(-6)
        assert!((stats.profit_prob_exact - 2.66002752569624849e-4).abs() < 1e-17);
        assert!((stats.chernoff_bound - 2.4787521766663585e-3).abs() < 1e-16);
        assert!((stats.beta_v.unwrap() - 12.0).abs() < 1e-12);
        assert!(stats.profit_prob_exact <= stats.chernoff_bound);
    }

    #[test]
    fn degenerate_noise_conventions() {
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let stats = pnl_statistics(&linear_model(1.0, 0.0), &s, 0.0).unwrap();
        assert_eq!(stats.profit_prob_exact, 0.0);
        assert_eq!(stats.chernoff_bound, 0.0);
        assert_eq!(stats.beta_v, None);

        let z = Strategy::zero(1.0).unwrap();
        let stats = pnl_statistics(&linear_model(1.0, 0.0), &z, 1.0).unwrap();
        assert_eq!(stats.work, 0.0);
        assert_eq!(stats.profit_prob_exact, 1.0);
        assert_eq!(stats.chernoff_bound, 1.0);
    }

    #[test]
    fn pnl_statistics_rejects_open_positions() {
        let open = Strategy::from_rate_samples(&[0.0], &[1.0], 1.0).unwrap();
        assert!(matches!(
            pnl_statistics(&linear_model(1.0, 0.0), &open, 1.0),
            Err(Error::NotRoundTrip { .. })
        ));
    }

    #[test]
    fn chernoff_optimum_matches_search() {
        let opt = chernoff_optimum(1.0, 1.0, 1.0 / 12.0).unwrap();
        assert!((opt.theta - 12.0).abs() < 1e-12);
        assert!((opt.bound - 2.4787521766663585e-3).abs() < 1e-15);
        assert!(chernoff_optimum(0.0, 1.0, 1.0).is_err());
        assert!(chernoff_optimum(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn multi_asset_exact_beats_trace() {
        // both assets run the same triangle: M is 1/12 in every entry
        let single = Strategy::triangular(1.0, 1.0).unwrap();
        let segs = single
            .segments()
            .iter()
            .map(|seg| Segment {
                t_start: seg.t_start,
                t_end: seg.t_end,
                rates: vec![seg.rates[0], seg.rates[0]],
            })
            .collect();
        let s = Strategy::from_segments(1.0, 2, segs).unwrap();
        let model = ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Linear { lambda: 0.0 },
            2,
        )
        .unwrap();
        let cov = SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let b = multi_asset_bound(&model, &s, &cov).unwrap();
        assert!((b.work - 2.0).abs() < 1e-14);
        assert!((b.exact_heat_variance - 0.25).abs() < 1e-15);
        assert!((b.trace_heat_variance - 1.0 / 6.0 * 2.0).abs() < 1e-15);
        assert!(b.exact_heat_variance <= b.trace_heat_variance);
        assert!((b.exact_bound - (-8.0f64).exp()).abs() < 1e-15);
        assert!((b.trace_bound - (-6.0f64).exp()).abs() < 1e-15);
        assert!(b.exact_bound <= b.trace_bound);

        let asym = SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(multi_asset_bound(&model, &s, &asym).is_err());
    }

    #[test]
    fn lagrangian_work_hand_value() {
        // L = v^2 (1 + q^2) on the unit triangle: 1 + 1/12 = 13/12
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let w = lagrangian_work(&s, |v, q| v[0] * v[0] * (1.0 + q[0] * q[0]), 1e-10).unwrap();
        assert!((w - 13.0 / 12.0).abs() < 1e-9, "got {w}");
        // matches dissipated_work for the built-in quadratic cost
        let via_quad = lagrangian_work(&s, |v, q| 2.0 * v[0] * v[0] + 0.7 * q[0] * v[0], 1e-10)
            .unwrap();
        let model = linear_model(2.0, 0.7);
        let exact = dissipated_work(&model, &s).unwrap();
        assert!((via_quad - exact).abs() < 1e-9);
    }

    #[test]
    fn lagrangian_rejects_holding_costs() {
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let err = lagrangian_work(&s, |v, _| v[0] * v[0] + 1.0, 1e-9);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn second_law_report() {
        let s = Strategy::random_round_trip(3, 5, 1.0, 2.0).unwrap();
        let rep = second_law_verify(&linear_model(0.5, 1.0), &s).unwrap();
        assert!(rep.work_nonnegative);
        assert!(rep.work >= 0.0);
        assert_eq!(rep.mean_pnl, -rep.work);
        let open = Strategy::from_rate_samples(&[0.0], &[1.0], 1.0).unwrap();
        assert!(second_law_verify(&linear_model(0.5, 1.0), &open).is_err());
    }

    #[test]
    fn dimension_mismatch_is_caught() {
        let s = Strategy::triangular(1.0, 1.0).unwrap();
        let model = ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Linear { lambda: 0.0 },
            2,
        )
        .unwrap();
        assert!(matches!(
            dissipated_work(&model, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn volatility_validation_and_serde() {
        assert!(Volatility::scalar(-1.0).is_err());
        let v = Volatility::scalar(0.3).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "0.3");
        let m = Volatility::covariance(
            SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap(),
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: Volatility = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(m.validate(2).is_ok());
        assert!(m.validate(3).is_err());
        let s: Volatility = serde_json::from_str("0.25").unwrap();
        assert_eq!(s, Volatility::Scalar(0.25));
    }
}
