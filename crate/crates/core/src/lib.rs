//! Thermodynamics of price impact: every round trip pays a dissipated work
//! W, profits are pure noise on top of -W, and the chance of a profitable
//! cycle is exponentially suppressed by W^2 / (2 sigma^2 V).
//!
//! The crate computes W and the inventory variance V in closed form from
//! piecewise-affine trading strategies, prices the profit event exactly and
//! by Chernoff bound, verifies both against seeded Monte Carlo, weights
//! strategy sets by Gibbs ensembles with free-energy identities and
//! temperature calibration, and runs an estimation pipeline over trade
//! tapes.

pub mod cluster;
pub mod empirical;
pub mod ensemble;
pub mod error;
pub mod impact;
pub mod kernel;
pub mod matrix;
pub mod mc;
mod numeric;
mod poly;
mod quad;
pub mod strategy;
pub mod thermo;

pub use cluster::{cluster_strategies, Clustering};
pub use empirical::{
    bound_violation_report, convexity_test, estimate_impact_curve, estimate_work_variance,
    realized_pnl, realized_variance, synthesize_tape, BoundReport, ImpactCurveEstimate,
    OffsetSource, ReturnKind, TapeAnnotation, TapeBound, TapeRecord, TradeTape,
};
pub use ensemble::{
    beta_limits, calibrate_beta, identity_checks, BetaEstimate, BetaLimitsReport, GibbsState,
    IdentityChecks, StrategyEnsemble,
};
pub use error::{Error, Result};
pub use impact::{
    convexity_check, default_convexity_tol, ConvexityReport, ImpactModel, ModelWarning,
    PermanentImpact, TemporaryImpact,
};
pub use kernel::DecayKernel;
pub use matrix::SquareMatrix;
pub use mc::{
    convergence_study, mc_profit_probability, pnl_samples, simulate, ConvergenceRow, McResult,
    ProfitProbabilityCheck, SimConfig,
};
pub use numeric::norm_cdf;
pub use strategy::{InventoryPath, LinearRate, Segment, Strategy};
pub use thermo::{
    chernoff_optimum, chernoff_profit_bound, dissipated_work, exact_profit_probability,
    lagrangian_work, multi_asset_bound, pnl_statistics, second_law_verify, ChernoffOptimum,
    MultiAssetBound, PnlStats, SecondLawReport, Volatility,
};
