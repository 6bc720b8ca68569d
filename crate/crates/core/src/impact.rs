//! Price-impact model: a temporary execution offset J(v) paid while trading
//! at rate v, plus a permanent drift I(v) written into the midprice.
//!
//! Profitability bounds downstream hinge on one structural property: the
//! instantaneous cost f(v) = J(v) * v must be convex with f(0) = 0. Convexity
//! is checked on f, never on J alone (an odd J can look concave for v < 0
//! while f stays convex).

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Temporary impact J(v): the execution price is S_t + J(v_t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporaryImpact {
    /// J(v) = eta * v
    Linear { eta: f64 },
    /// J(v) = eta * sgn(v) * |v|^gamma
    PowerLaw { eta: f64, gamma: f64 },
}

impl TemporaryImpact {
    pub fn linear(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidInput(format!("impact coefficient eta must be positive, got {eta}")));
        }
        Ok(TemporaryImpact::Linear { eta })
    }

    pub fn power_law(eta: f64, gamma: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidInput(format!("impact coefficient eta must be positive, got {eta}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!("impact exponent gamma must be positive, got {gamma}")));
        }
        Ok(TemporaryImpact::PowerLaw { eta, gamma })
    }

    /// Execution offset J(v). Odd in v for both families.
    pub fn offset(&self, v: f64) -> f64 {
        match *self {
            TemporaryImpact::Linear { eta } => eta * v,
            TemporaryImpact::PowerLaw { eta, gamma } => eta * v.signum() * v.abs().powf(gamma),
        }
    }

    /// Instantaneous cost rate f(v) = J(v) * v; even, nonnegative, f(0) = 0.
    pub fn cost(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        self.offset(v) * v
    }

    /// p such that f(v) = eta * |v|^p; the work integral is
    /// eta * \int |v_t|^p dt.
    pub fn cost_exponent(&self) -> f64 {
        match *self {
            TemporaryImpact::Linear { .. } => 2.0,
            TemporaryImpact::PowerLaw { gamma, .. } => gamma + 1.0,
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            TemporaryImpact::Linear { eta } => eta,
            TemporaryImpact::PowerLaw { eta, .. } => eta,
        }
    }
}

/// Permanent impact I(v) = Lambda v added to the midprice drift.
#[derive(Debug, Clone, PartialEq)]
pub enum PermanentImpact {
    /// I(v) = lambda * v per asset (Lambda = lambda * identity).
    Linear { lambda: f64 },
    /// Cross-impact matrix: I(v) = Lambda v.
    Matrix(SquareMatrix),
}

impl PermanentImpact {
    pub fn linear(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("permanent impact lambda must be nonnegative, got {lambda}")));
        }
        Ok(PermanentImpact::Linear { lambda })
    }

    /// Midprice drift I(v) for a rate vector.
    pub fn drift(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            PermanentImpact::Linear { lambda } => Ok(v.iter().map(|&x| lambda * x).collect()),
            PermanentImpact::Matrix(m) => m.mul_vec(v),
        }
    }
}

/// Structured warnings attached to a model at construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// An asymmetric cross-impact matrix is legal but makes the permanent
    /// term path dependent even on round trips.
    AsymmetricPermanentImpact { max_asymmetry: f64 },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::AsymmetricPermanentImpact { max_asymmetry } => write!(
                f,
                "permanent impact matrix is asymmetric (max |a_ij - a_ji| = {max_asymmetry:e}); \
                 its work contribution is path dependent on round trips"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactModel {
    temporary: TemporaryImpact,
    permanent: PermanentImpact,
    assets: usize,
    warnings: Vec<ModelWarning>,
}

impl ImpactModel {
    pub fn new(temporary: TemporaryImpact, permanent: PermanentImpact, assets: usize) -> Result<Self> {
        if assets == 0 {
            return Err(Error::InvalidInput("asset count must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        if let PermanentImpact::Matrix(m) = &permanent {
            if m.dim() != assets {
                return Err(Error::DimensionMismatch { expected: assets, got: m.dim() });
            }
            let asym = m.max_asymmetry();
            if asym > 0.0 {
                warnings.push(ModelWarning::AsymmetricPermanentImpact { max_asymmetry: asym });
            }
        }
        Ok(ImpactModel { temporary, permanent, assets, warnings })
    }

    /// Single-asset model with scalar permanent impact.
    pub fn single_asset(temporary: TemporaryImpact, lambda: f64) -> Result<Self> {
        Self::new(temporary, PermanentImpact::linear(lambda)?, 1)
    }

    pub fn temporary(&self) -> &TemporaryImpact {
        &self.temporary
    }

    pub fn permanent(&self) -> &PermanentImpact {
        &self.permanent
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn warnings(&self) -> &[ModelWarning] {
        &self.warnings
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub is_convex: bool,
    /// Indices i (1..n-1) where f[i+1] - 2 f[i] + f[i-1] < -tol.
    pub violations: Vec<usize>,
    pub tol: f64,
}

/// Scale-aware default tolerance for `convexity_check`: 1e-9 * max |f|.
pub fn default_convexity_tol(values: &[f64]) -> f64 {
    1e-9 * values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Discrete convexity of samples on a uniformly spaced grid: every second
/// difference must be >= -tol. Spacing uniformity is the caller's contract;
/// second differences on a non-uniform grid do not measure curvature.
pub fn convexity_check(values: &[f64], tol: f64) -> Result<ConvexityReport> {
    if values.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "convexity check needs at least 3 grid points, got {}",
            values.len()
        )));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidInput("convexity tolerance must be nonnegative".into()));
    }
    let mut violations = Vec::new();
    for i in 1..values.len() - 1 {
        let second = values[i + 1] - 2.0 * values[i] + values[i - 1];
        if second < -tol {
            violations.push(i);
        }
    }
    Ok(ConvexityReport { is_convex: violations.is_empty(), violations, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_match_hand_values() {
        let lin = TemporaryImpact::linear(1.5).unwrap();
        assert_eq!(lin.offset(2.0), 3.0);
        assert_eq!(lin.offset(-2.0), -3.0);

        // eta sgn(v) |v|^0.5 at v = -4 -> -2
        let root = TemporaryImpact::power_law(1.0, 0.5).unwrap();
        assert!((root.offset(-4.0) + 2.0).abs() < 1e-15);
        assert_eq!(root.offset(0.0), 0.0);
    }

    #[test]
    fn cost_matches_hand_value() {
        // eta=2, gamma=2: f(-1) = J(-1)*(-1) = (-2)*(-1) = 2
        let imp = TemporaryImpact::power_law(2.0, 2.0).unwrap();
        assert_eq!(imp.cost(-1.0), 2.0);
        assert_eq!(imp.cost(1.0), 2.0);
        assert_eq!(imp.cost_exponent(), 3.0);
        assert_eq!(TemporaryImpact::linear(0.5).unwrap().cost_exponent(), 2.0);
    }

    #[test]
    fn odd_offset_even_cost_on_grid() {
        for spec in [
            TemporaryImpact::linear(0.7).unwrap(),
            TemporaryImpact::power_law(1.3, 1.5).unwrap(),
            TemporaryImpact::power_law(2.0, 0.5).unwrap(),
        ] {
            for k in 0..50 {
                let v = -5.0 + 0.2 * k as f64;
                assert!((spec.offset(v) + spec.offset(-v)).abs() < 1e-12);
                assert!((spec.cost(v) - spec.cost(-v)).abs() < 1e-12);
                assert!(spec.cost(v) >= 0.0);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(TemporaryImpact::linear(0.0).is_err());
        assert!(TemporaryImpact::linear(-1.0).is_err());
        assert!(TemporaryImpact::power_law(1.0, 0.0).is_err());
        assert!(TemporaryImpact::power_law(f64::NAN, 1.0).is_err());
        assert!(PermanentImpact::linear(-0.1).is_err());
        assert!(PermanentImpact::linear(0.0).is_ok());
    }

    #[test]
    fn matrix_drift_and_asymmetry_warning() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.0, 1.0]]).unwrap();
        let perm = PermanentImpact::Matrix(m);
        assert_eq!(perm.drift(&[1.0, 1.0]).unwrap(), vec![1.2, 1.0]);

        let model =
            ImpactModel::new(TemporaryImpact::linear(1.0).unwrap(), perm, 2).unwrap();
        match model.warnings() {
            [ModelWarning::AsymmetricPermanentImpact { max_asymmetry }] => {
                assert!((max_asymmetry - 0.2).abs() < 1e-15);
            }
            w => panic!("expected asymmetry warning, got {w:?}"),
        }

        let sym = SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap();
        let model = ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Matrix(sym),
            2,
        )
        .unwrap();
        assert!(model.warnings().is_empty());
    }

    #[test]
    fn model_dimension_checks() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(ImpactModel::new(
            TemporaryImpact::linear(1.0).unwrap(),
            PermanentImpact::Matrix(m),
            3
        )
        .is_err());
        assert!(ImpactModel::single_asset(TemporaryImpact::linear(1.0).unwrap(), 0.5).is_ok());
    }

    #[test]
    fn convexity_of_builtin_cost_curves() {
        // 101-point grid over [-5, 5]; includes v = 0.
        let grid: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
        for spec in [
            TemporaryImpact::linear(2.0).unwrap(),
            TemporaryImpact::power_law(1.0, 2.0).unwrap(),
            TemporaryImpact::power_law(1.0, 1.5).unwrap(),
        ] {
            let f: Vec<f64> = grid.iter().map(|&v| spec.cost(v)).collect();
            let rep = convexity_check(&f, default_convexity_tol(&f)).unwrap();
            assert!(rep.is_convex, "cost of {spec:?} flagged non-convex: {:?}", rep.violations);
        }
    }

    #[test]
    fn concave_samples_are_flagged() {
        // f(v) = v^2 - 0.2 v^4 is concave for |v| > ~0.91.
        let grid: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
        let f: Vec<f64> = grid.iter().map(|&v| v * v - 0.2 * v.powi(4)).collect();
        let rep = convexity_check(&f, default_convexity_tol(&f)).unwrap();
        assert!(!rep.is_convex);
        assert!(!rep.violations.is_empty());
    }

    #[test]
    fn convexity_needs_three_points() {
        assert!(convexity_check(&[1.0, 2.0], 0.0).is_err());
    }
}
