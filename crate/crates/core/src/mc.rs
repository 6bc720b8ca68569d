//! Path simulation of execution P&L under impact plus Brownian noise.
//!
//! Prices follow the left-endpoint Euler scheme
//! S_{k+1} = S_k + noise * sqrt(h) z_k + I(v_k) h, starting from 0, and each
//! step charges (S_k + J(v_k)) . v_k h in cash. Every path also accumulates
//! the exogenous-noise functional sum_k q(t_k) . dW_k so the identity
//! pnl = -W + noise can be checked sample by sample; its violation is pure
//! discretization error and shrinks like h.
//!
//! Results are bit-for-bit reproducible for a given seed regardless of how
//! many worker threads run: every path owns a counter-based RNG stream keyed
//! by its index, and reductions happen serially in path order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::matrix::SquareMatrix;
use crate::numeric::sample_moments;
use crate::strategy::Strategy;
use crate::thermo::{self, Volatility};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sigma: Volatility,
    /// Target step size; each segment is subdivided evenly into steps no
    /// longer than this.
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair consecutive paths with mirrored noise. Halves variance on
    /// near-linear functionals; the reported standard errors still treat
    /// paths as independent, so they are conservative.
    pub antithetic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub n_paths: usize,
    pub mean_pnl: f64,
    pub mean_pnl_se: f64,
    pub pnl_variance: f64,
    /// Gaussian-based standard error: variance * sqrt(2 / (n - 1)).
    pub pnl_variance_se: f64,
    pub profit_frequency: f64,
    pub profit_frequency_se: f64,
    pub skewness: f64,
    /// max_i |pnl_i + W - noise_i|: the worst pathwise violation of the
    /// work-noise decomposition, an O(dt) discretization diagnostic.
    pub max_decomposition_residual: f64,
}

struct Step {
    sqrt_h: f64,
    /// v_a h.
    vh: Vec<f64>,
    /// sum_a J(v_a) v_a h, the path-independent temporary cost.
    cost: f64,
    /// I(v) h.
    drift: Vec<f64>,
    /// Coefficients c with c . z_k = q(t_k) . (noise sqrt(h) z_k).
    noise_coeff: Vec<f64>,
}

enum NoiseOp {
    Scalar(f64),
    Factor(SquareMatrix),
}

// Path i owns stream i (or i/2 with its mirror when antithetic), so the
// draw sequence is a pure function of (seed, i) and never of scheduling.
fn path_rng(config: &SimConfig, i: usize) -> (ChaCha8Rng, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    if config.antithetic {
        rng.set_stream((i / 2) as u64);
    } else {
        rng.set_stream(i as u64);
    }
    (rng, config.antithetic && i % 2 == 1)
}

/// Simulate a round trip and summarize the P&L sample.
pub fn simulate(model: &ImpactModel, strategy: &Strategy, config: &SimConfig) -> Result<McResult> {
    let (steps, noise, work) = prepare(model, strategy, config)?;
    let d = strategy.assets();
    let paths: Vec<PathOut> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let (rng, negate) = path_rng(config, i);
            run_path(&steps, &noise, d, work, rng, negate)
        })
        .collect();

    let pnls: Vec<f64> = paths.iter().map(|p| p.pnl).collect();
    let m = sample_moments(&pnls);
    let n = config.n_paths as f64;
    let mut profits = 0usize;
    let mut max_residual = 0.0f64;
    for p in &paths {
        if p.pnl >= 0.0 {
            profits += 1;
        }
        max_residual = max_residual.max(p.residual.abs());
    }
    let freq = profits as f64 / n;
    Ok(McResult {
        n_paths: config.n_paths,
        mean_pnl: m.mean,
        mean_pnl_se: (m.variance / n).sqrt(),
        pnl_variance: m.variance,
        pnl_variance_se: if config.n_paths > 1 {
            m.variance * (2.0 / (n - 1.0)).sqrt()
        } else {
            0.0
        },
        profit_frequency: freq,
        profit_frequency_se: (freq * (1.0 - freq) / n).sqrt(),
        skewness: m.skewness,
        max_decomposition_residual: max_residual,
    })
}

/// Raw per-path P&L in path order, draw for draw the same sample `simulate`
/// summarizes. Meant for external analysis dumps.
pub fn pnl_samples(
    model: &ImpactModel,
    strategy: &Strategy,
    config: &SimConfig,
) -> Result<Vec<f64>> {
    let (steps, noise, work) = prepare(model, strategy, config)?;
    let d = strategy.assets();
    Ok((0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let (rng, negate) = path_rng(config, i);
            run_path(&steps, &noise, d, work, rng, negate).pnl
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitProbabilityCheck {
    pub frequency: f64,
    pub frequency_se: f64,
    pub exact: f64,
    pub chernoff_bound: f64,
    /// Frequency within 3 binomial standard errors of the exact probability
    /// and not above the bound by more than 3 of its own standard errors.
    pub consistent: bool,
}

/// Run the simulation and test its profit frequency against the exact
/// Gaussian probability and the exponential bound. Scalar volatility only:
/// the exact probability is defined through sigma^2 \int q^2.
pub fn mc_profit_probability(
    model: &ImpactModel,
    strategy: &Strategy,
    config: &SimConfig,
) -> Result<ProfitProbabilityCheck> {
    let sigma = match config.sigma {
        Volatility::Scalar(s) => s,
        Volatility::Matrix(_) => {
            return Err(Error::InvalidInput(
                "profit probability comparison needs scalar volatility".into(),
            ))
        }
    };
    let stats = thermo::pnl_statistics(model, strategy, sigma)?;
    let sim = simulate(model, strategy, config)?;
    let n = config.n_paths as f64;
    let binomial_se = (stats.profit_prob_exact * (1.0 - stats.profit_prob_exact) / n).sqrt();
    let matches_exact =
        (sim.profit_frequency - stats.profit_prob_exact).abs() <= 3.0 * binomial_se + 1e-12;
    let below_bound = sim.profit_frequency
        <= stats.chernoff_bound + 3.0 * sim.profit_frequency_se + 1e-12;
    Ok(ProfitProbabilityCheck {
        frequency: sim.profit_frequency,
        frequency_se: sim.profit_frequency_se,
        exact: stats.profit_prob_exact,
        chernoff_bound: stats.chernoff_bound,
        consistent: matches_exact && below_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// mean_pnl + W: sampling noise plus the O(dt) scheme bias.
    pub mean_bias: f64,
    pub max_residual: f64,
}

/// Rerun the same simulation across step sizes. Same seed throughout, so
/// rows differ only by discretization.
pub fn convergence_study(
    model: &ImpactModel,
    strategy: &Strategy,
    config: &SimConfig,
    dts: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    if dts.is_empty() {
        return Err(Error::InvalidInput("convergence study needs at least one dt".into()));
    }
    let work = thermo::dissipated_work(model, strategy)?;
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let run = SimConfig { dt, ..config.clone() };
        let res = simulate(model, strategy, &run)?;
        rows.push(ConvergenceRow {
            dt,
            mean_bias: res.mean_pnl + work,
            max_residual: res.max_decomposition_residual,
        });
    }
    Ok(rows)
}

fn prepare(
    model: &ImpactModel,
    strategy: &Strategy,
    config: &SimConfig,
) -> Result<(Vec<Step>, NoiseOp, f64)> {
    if model.assets() != strategy.assets() {
        return Err(Error::DimensionMismatch { expected: model.assets(), got: strategy.assets() });
    }
    if config.n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be at least 1".into()));
    }
    let horizon = strategy.horizon();
    let shortest = strategy.shortest_segment();
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", config.dt)));
    }
    if config.dt > shortest {
        return Err(Error::InvalidInput(format!(
            "dt {} exceeds the shortest segment {shortest}; rates would be skipped",
            config.dt
        )));
    }
    if config.dt > horizon / 10.0 {
        return Err(Error::InvalidInput(format!(
            "dt {} is too coarse for horizon {horizon}; need at least 10 steps",
            config.dt
        )));
    }
    config.sigma.validate(strategy.assets())?;
    strategy.require_round_trip()?;
    let work = thermo::dissipated_work(model, strategy)?;

    let noise = match &config.sigma {
        Volatility::Scalar(s) => NoiseOp::Scalar(*s),
        Volatility::Matrix(cov) => NoiseOp::Factor(cov.cholesky()?),
    };

    let d = strategy.assets();
    let inv = strategy.inventory();
    let mut steps = Vec::new();
    for seg in strategy.segments() {
        let len = seg.len();
        let n_sub = (len / config.dt).ceil() as usize;
        let h = len / n_sub as f64;
        let sqrt_h = h.sqrt();
        for j in 0..n_sub {
            let s_local = j as f64 * h;
            let t = seg.t_start + s_local;
            let v: Vec<f64> = seg.rates.iter().map(|r| r.value + r.slope * s_local).collect();
            let cost: f64 =
                v.iter().map(|&va| model.temporary().cost(va)).sum::<f64>() * h;
            let drift: Vec<f64> =
                model.permanent().drift(&v)?.into_iter().map(|x| x * h).collect();
            let q: Vec<f64> = (0..d).map(|a| inv.value(t, a)).collect();
            let noise_coeff: Vec<f64> = match &noise {
                NoiseOp::Scalar(s) => q.iter().map(|&qa| s * sqrt_h * qa).collect(),
                // q . (L z) = (L^T q) . z
                NoiseOp::Factor(l) => (0..d)
                    .map(|a| {
                        let mut acc = 0.0;
                        for i in 0..d {
                            acc += l.get(i, a) * q[i];
                        }
                        acc * sqrt_h
                    })
                    .collect(),
            };
            steps.push(Step {
                sqrt_h,
                vh: v.iter().map(|&va| va * h).collect(),
                cost,
                drift,
                noise_coeff,
            });
        }
    }
    Ok((steps, noise, work))
}

struct PathOut {
    pnl: f64,
    residual: f64,
}

fn run_path(
    steps: &[Step],
    noise: &NoiseOp,
    d: usize,
    work: f64,
    mut rng: ChaCha8Rng,
    negate: bool,
) -> PathOut {
    let mut s = vec![0.0f64; d];
    let mut z = vec![0.0f64; d];
    let mut pnl = 0.0f64;
    let mut noise_acc = 0.0f64;
    for step in steps {
        let mut exec = step.cost;
        for a in 0..d {
            exec += s[a] * step.vh[a];
        }
        pnl -= exec;
        for za in z.iter_mut() {
            let draw: f64 = StandardNormal.sample(&mut rng);
            *za = if negate { -draw } else { draw };
        }
        match noise {
            NoiseOp::Scalar(sig) => {
                for a in 0..d {
                    s[a] += sig * step.sqrt_h * z[a] + step.drift[a];
                }
            }
            NoiseOp::Factor(l) => {
                for a in 0..d {
                    let mut lz = 0.0;
                    for j in 0..d {
                        lz += l.get(a, j) * z[j];
                    }
                    s[a] += step.sqrt_h * lz + step.drift[a];
                }
            }
        }
        for a in 0..d {
            noise_acc += step.noise_coeff[a] * z[a];
        }
    }
    PathOut { pnl, residual: pnl + work - noise_acc }
}
