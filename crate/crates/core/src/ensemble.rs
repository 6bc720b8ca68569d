//! Gibbs weighting over a finite set of strategies, keyed by their work.
//!
//! For inverse temperature beta > 0 each strategy gets probability
//! p_i = exp(-beta W_i) / Z. Low temperature concentrates on the cheapest
//! strategy, high temperature spreads uniformly; in between the free energy
//! F = -log(Z)/beta splits as F = mean work - entropy/beta. Calibration goes
//! the other way: observed usage counts pin down the beta whose Gibbs mean
//! work matches the count-weighted mean.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, KahanSum};

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyEnsemble {
    labels: Vec<String>,
    works: Vec<f64>,
}

const CSV_HEADER: [&str; 2] = ["label", "work"];
const CSV_HEADER_COUNTS: [&str; 3] = ["label", "work", "count"];

impl StrategyEnsemble {
    pub fn new(labels: Vec<String>, works: Vec<f64>) -> Result<Self> {
        if works.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one strategy".into()));
        }
        if labels.len() != works.len() {
            return Err(Error::DimensionMismatch { expected: works.len(), got: labels.len() });
        }
        for &w in &works {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "works must be finite and nonnegative, got {w}"
                )));
            }
        }
        Ok(StrategyEnsemble { labels, works })
    }

    /// Labels generated as s0, s1, ...
    pub fn from_works(works: Vec<f64>) -> Result<Self> {
        let labels = (0..works.len()).map(|i| format!("s{i}")).collect();
        Self::new(labels, works)
    }

    pub fn len(&self) -> usize {
        self.works.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn works(&self) -> &[f64] {
        &self.works
    }

    pub fn min_work(&self) -> f64 {
        self.works.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn work_range(&self) -> f64 {
        let max = self.works.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max - self.min_work()
    }

    /// Indices attaining the minimal work, ties included.
    pub fn argmin_set(&self) -> Vec<usize> {
        let min = self.min_work();
        let tol = 1e-12 * min.abs().max(1.0);
        (0..self.works.len()).filter(|&i| self.works[i] <= min + tol).collect()
    }

    /// Gibbs distribution at inverse temperature beta. All exponentials are
    /// shifted by the minimal work, so beta * range(W) up to 1e4 stays finite
    /// (weights below exp(-745) underflow to zero probability).
    pub fn gibbs(&self, beta: f64) -> Result<GibbsState> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        let exponents: Vec<f64> = self.works.iter().map(|&w| -beta * w).collect();
        let log_z = log_sum_exp(&exponents);
        let probabilities: Vec<f64> = exponents.iter().map(|&x| (x - log_z).exp()).collect();
        let mut mean = KahanSum::default();
        for (p, w) in probabilities.iter().zip(&self.works) {
            mean.add(p * w);
        }
        let mean_work = mean.value();
        // Entropy from the probabilities themselves, not from the identity
        // S = log Z + beta W_beta, so the decomposition check below stays a
        // genuine two-route comparison.
        let mut ent = KahanSum::default();
        let mut var = KahanSum::default();
        for (p, w) in probabilities.iter().zip(&self.works) {
            if *p > 0.0 {
                ent.add(-p * p.ln());
            }
            let d = w - mean_work;
            var.add(p * d * d);
        }
        Ok(GibbsState {
            beta,
            log_z,
            free_energy: -log_z / beta,
            mean_work,
            entropy: ent.value(),
            work_variance: var.value(),
            probabilities,
        })
    }

    /// CSV rows `label,work`, plus a `count` column when counts are given.
    pub fn to_csv<W: Write>(&self, counts: Option<&[f64]>, out: W) -> Result<()> {
        if let Some(c) = counts {
            if c.len() != self.works.len() {
                return Err(Error::DimensionMismatch { expected: self.works.len(), got: c.len() });
            }
        }
        let mut wtr = csv::Writer::from_writer(out);
        match counts {
            Some(_) => wtr.write_record(CSV_HEADER_COUNTS)?,
            None => wtr.write_record(CSV_HEADER)?,
        }
        for (i, (label, work)) in self.labels.iter().zip(&self.works).enumerate() {
            match counts {
                Some(c) => {
                    wtr.write_record(&[label.clone(), work.to_string(), c[i].to_string()])?
                }
                None => wtr.write_record(&[label.clone(), work.to_string()])?,
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, counts: Option<&[f64]>) -> Result<String> {
        let mut buf = Vec::new();
        self.to_csv(counts, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Accepts `label,work` or `label,work,count`; the counts come back
    /// alongside the ensemble when present.
    pub fn from_csv<R: Read>(input: R) -> Result<(Self, Option<Vec<f64>>)> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let with_counts = if headers == CSV_HEADER {
            false
        } else if headers == CSV_HEADER_COUNTS {
            true
        } else {
            return Err(Error::Parse(format!(
                "expected header label,work or label,work,count, got {headers:?}"
            )));
        };
        let mut labels = Vec::new();
        let mut works = Vec::new();
        let mut counts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let expected = if with_counts { 3 } else { 2 };
            if rec.len() != expected {
                return Err(Error::Parse(format!(
                    "expected {expected} columns, got {}",
                    rec.len()
                )));
            }
            labels.push(rec[0].to_owned());
            works.push(
                rec[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad work value {:?}", &rec[1])))?,
            );
            if with_counts {
                let c: f64 = rec[2]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad count value {:?}", &rec[2])))?;
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::Parse(format!("counts must be nonnegative, got {c}")));
                }
                counts.push(c);
            }
        }
        let ens = Self::new(labels, works)?;
        Ok((ens, with_counts.then_some(counts)))
    }

    pub fn from_csv_str(s: &str) -> Result<(Self, Option<Vec<f64>>)> {
        Self::from_csv(s.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub beta: f64,
    #[serde(rename = "logZ")]
    pub log_z: f64,
    /// F = -log(Z) / beta.
    pub free_energy: f64,
    pub mean_work: f64,
    /// Shannon entropy of the distribution, computed from the probabilities.
    pub entropy: f64,
    pub work_variance: f64,
    pub probabilities: Vec<f64>,
}

impl GibbsState {
    /// |F - (mean work - S/beta)| measured across the two computation routes
    /// (F from log Z, entropy from the probabilities). Stays at rounding
    /// level, <= 1e-10 relative, whenever the state is consistent.
    pub fn decomposition_residual(&self) -> f64 {
        (self.free_energy - (self.mean_work - self.entropy / self.beta)).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityChecks {
    /// Relative gap between the five-point finite difference of F and the
    /// closed form S/beta^2.
    pub df_dbeta_error: f64,
    /// Relative gap between the three-point second difference of beta*F and
    /// the closed form -Var(W). beta*F = -log Z is concave, so its curvature
    /// is minus the variance.
    pub curvature_error: f64,
}

/// Differentiate the free energy numerically and compare against the
/// closed-form derivatives dF/dbeta = S/beta^2 and d2(beta F)/dbeta2 =
/// -Var(W). Both errors are O(h^2) or better; h must leave beta - 2h > 0
/// for the five-point stencil.
pub fn identity_checks(ens: &StrategyEnsemble, beta: f64, h: f64) -> Result<IdentityChecks> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("step h must be positive, got {h}")));
    }
    if beta - 2.0 * h <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "need beta - 2h > 0 for the difference stencil, got beta {beta}, h {h}"
        )));
    }
    let state = ens.gibbs(beta)?;
    let f = |b: f64| -> Result<f64> { Ok(ens.gibbs(b)?.free_energy) };

    let fd_slope = (f(beta - 2.0 * h)? - 8.0 * f(beta - h)? + 8.0 * f(beta + h)?
        - f(beta + 2.0 * h)?)
        / (12.0 * h);
    let slope = state.entropy / (beta * beta);
    let df_dbeta_error = (fd_slope - slope).abs() / slope.abs().max(1.0);

    let g = |b: f64| -> Result<f64> { Ok(-ens.gibbs(b)?.log_z) };
    let fd_curv = (g(beta - h)? - 2.0 * g(beta)? + g(beta + h)?) / (h * h);
    let curvature_error = (fd_curv + state.work_variance).abs() / state.work_variance.max(1.0);

    Ok(IdentityChecks { df_dbeta_error, curvature_error })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaLimitsReport {
    /// Indices of minimal work, ties included; every index when the work
    /// range is zero.
    pub argmin_set: Vec<usize>,
    /// ln N, the entropy of the uniform distribution.
    pub uniform_entropy: f64,
    pub large_beta: f64,
    pub argmin_mass_at_large_beta: f64,
    pub small_beta: f64,
    pub entropy_at_small_beta: f64,
    /// argmin mass >= 1 - 1e-6 at the large beta probe.
    pub concentrates: bool,
    /// entropy within 1e-6 of ln N at the small beta probe.
    pub equidistributes: bool,
}

/// Probe the two temperature limits: mass collapses onto the cheapest
/// strategies as beta grows and spreads uniformly as beta vanishes.
pub fn beta_limits(ens: &StrategyEnsemble) -> Result<BetaLimitsReport> {
    let n = ens.len() as f64;
    let range = ens.work_range();
    let large_beta = if range > 0.0 { 1e3 / range } else { 1.0 };
    let small_beta = 1e-6 / range.max(1.0);
    let argmin_set = ens.argmin_set();
    let concentrated = ens.gibbs(large_beta)?;
    let argmin_mass: f64 = argmin_set.iter().map(|&i| concentrated.probabilities[i]).sum();
    let spread = ens.gibbs(small_beta)?;
    let uniform_entropy = n.ln();
    Ok(BetaLimitsReport {
        argmin_set,
        uniform_entropy,
        large_beta,
        argmin_mass_at_large_beta: argmin_mass,
        small_beta,
        entropy_at_small_beta: spread.entropy,
        concentrates: argmin_mass >= 1.0 - 1e-6,
        equidistributes: (spread.entropy - uniform_entropy).abs() <= 1e-6,
    })
}

/// Outcome of maximum-likelihood temperature calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaEstimate {
    Fitted(f64),
    /// Count-weighted mean work at or below the minimum work: the likelihood
    /// increases without bound as beta grows.
    AtArgmin,
    /// Count-weighted mean work at or above the equal-weight mean: a fit
    /// would need beta <= 0, outside the family.
    OutOfRange,
}

impl BetaEstimate {
    pub fn fitted(&self) -> Option<f64> {
        match self {
            BetaEstimate::Fitted(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for BetaEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaEstimate::Fitted(b) => write!(f, "{b}"),
            BetaEstimate::AtArgmin => {
                write!(f, "degenerate: all mass at argmin (beta -> +inf)")
            }
            BetaEstimate::OutOfRange => write!(
                f,
                "beta <= 0 region: empirical mean exceeds the beta -> 0 ensemble mean"
            ),
        }
    }
}

/// Maximum-likelihood inverse temperature for observed usage counts
/// (fractional counts allowed). The first-order condition matches the Gibbs
/// mean work to the count-weighted mean; the mean is strictly decreasing in
/// beta, so the root is bracketed in [1e-8, 1e8]/range(W), bisected to
/// 1e-12 relative, and polished by Newton steps using dmean/dbeta = -Var.
pub fn calibrate_beta(ens: &StrategyEnsemble, counts: &[f64]) -> Result<BetaEstimate> {
    if counts.len() != ens.len() {
        return Err(Error::DimensionMismatch { expected: ens.len(), got: counts.len() });
    }
    for &c in counts {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "counts must be finite and nonnegative, got {c}"
            )));
        }
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("counts must not all be zero".into()));
    }
    let works = ens.works();
    let target = counts.iter().zip(works).map(|(c, w)| c * w).sum::<f64>() / total;
    let min = ens.min_work();
    let flat_mean = works.iter().sum::<f64>() / works.len() as f64;
    // boundary comparisons carry a relative tolerance so rounding in the
    // count-weighted mean cannot flip a degenerate case between sentinels
    let tol = 1e-12 * min.abs().max(1.0);
    if target <= min + tol {
        return Ok(BetaEstimate::AtArgmin);
    }
    if target >= flat_mean - tol {
        return Ok(BetaEstimate::OutOfRange);
    }
    // reaching here needs min < target < flat mean, hence a positive range
    let range = ens.work_range();
    let mut lo = 1e-8 / range;
    let mut hi = 1e8 / range;
    let mean_at = |b: f64| -> Result<f64> { Ok(ens.gibbs(b)?.mean_work) };
    if mean_at(lo)? < target {
        // target sits between the beta->0 limit and the smallest bracketed
        // beta; indistinguishable from the boundary of the family
        return Ok(BetaEstimate::OutOfRange);
    }
    if mean_at(hi)? > target {
        return Ok(BetaEstimate::AtArgmin);
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mean_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..4 {
        let state = ens.gibbs(beta)?;
        if state.work_variance <= 0.0 {
            break;
        }
        let next = beta + (state.mean_work - target) / state.work_variance;
        if !(next.is_finite() && next > 0.0) {
            break;
        }
        beta = next;
    }
    Ok(BetaEstimate::Fitted(beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(works: &[f64]) -> StrategyEnsemble {
        StrategyEnsemble::from_works(works.to_vec()).unwrap()
    }

    #[test]
    fn two_level_gibbs_hand_values() {
        let state = ens(&[0.0, 1.0]).gibbs(1.0).unwrap();
        assert!((state.probabilities[0] - 0.7310585786300049).abs() < 1e-16);
        assert!((state.probabilities[1] - 0.2689414213699951).abs() < 1e-16);
        assert!((state.log_z - 0.31326168751822283).abs() < 1e-15);
        assert!((state.free_energy + 0.31326168751822283).abs() < 1e-15);
        assert!((state.mean_work - 0.2689414213699951).abs() < 1e-15);
        assert!((state.entropy - 0.58220310888821795).abs() < 1e-15);
        assert!((state.work_variance - 0.19661193324148185).abs() < 1e-15);
        let p_sum: f64 = state.probabilities.iter().sum();
        assert!((p_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_works_are_uniform() {
        let state = ens(&[0.7, 0.7, 0.7, 0.7]).gibbs(3.0).unwrap();
        for p in &state.probabilities {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!((state.entropy - 4.0f64.ln()).abs() < 1e-14);
        assert!((state.free_energy - (0.7 - 4.0f64.ln() / 3.0)).abs() < 1e-14);
        assert!(state.work_variance.abs() < 1e-16);
    }

    #[test]
    fn singleton_ensemble() {
        let state = ens(&[0.42]).gibbs(2.0).unwrap();
        assert_eq!(state.probabilities, vec![1.0]);
        assert_eq!(state.entropy, 0.0);
        assert!((state.free_energy - 0.42).abs() < 1e-16);
    }

    #[test]
    fn decomposition_residual_is_rounding_level() {
        let state = ens(&[0.0, 1.0]).gibbs(1.0).unwrap();
        assert!(state.decomposition_residual() <= 1e-14);
        // extreme range: the shifted log-sum-exp keeps the identity intact
        let state = ens(&[0.0, 100.0]).gibbs(50.0).unwrap();
        assert!(
            state.decomposition_residual() <= 1e-10 * state.free_energy.abs().max(1.0),
            "residual {}",
            state.decomposition_residual()
        );
        let wide = ens(&[0.0, 0.3, 5.0, 40.0]).gibbs(250.0).unwrap();
        assert!(wide.decomposition_residual() <= 1e-10 * wide.free_energy.abs().max(1.0));
    }

    #[test]
    fn derivative_identities_match_finite_differences() {
        let e = ens(&[0.0, 1.0]);
        let checks = identity_checks(&e, 1.0, 1e-4).unwrap();
        assert!(checks.df_dbeta_error <= 1e-6, "slope error {}", checks.df_dbeta_error);
        assert!(checks.curvature_error <= 1e-6, "curvature error {}", checks.curvature_error);
        // equal works: F = c - ln(N)/beta, both identities in closed form
        let flat = ens(&[0.5, 0.5, 0.5]);
        let checks = identity_checks(&flat, 1.0, 1e-4).unwrap();
        assert!(checks.df_dbeta_error <= 1e-8);
        assert!(checks.curvature_error <= 1e-8);
        // stencil width guard
        assert!(identity_checks(&e, 1e-4, 1e-4).is_err());
        assert!(identity_checks(&e, 1.0, 0.0).is_err());
    }

    #[test]
    fn temperature_limits() {
        let report = beta_limits(&ens(&[0.0, 1.0, 2.0])).unwrap();
        assert_eq!(report.argmin_set, vec![0]);
        assert!(report.concentrates, "mass {}", report.argmin_mass_at_large_beta);
        assert!(report.equidistributes, "entropy {}", report.entropy_at_small_beta);
        assert!((report.uniform_entropy - 3.0f64.ln()).abs() < 1e-15);

        // ties split the concentrated mass evenly
        let tied = beta_limits(&ens(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(tied.argmin_set, vec![0, 1]);
        assert!(tied.concentrates);
        let state = ens(&[0.0, 0.0, 1.0]).gibbs(tied.large_beta).unwrap();
        assert!((state.probabilities[0] - 0.5).abs() < 1e-9);

        // zero range: argmin is everything and both limits hold trivially
        let flat = beta_limits(&ens(&[0.3, 0.3])).unwrap();
        assert_eq!(flat.argmin_set, vec![0, 1]);
        assert!(flat.concentrates && flat.equidistributes);
    }

    #[test]
    fn calibration_inverts_gibbs_counts() {
        let e = ens(&[0.0, 1.0]);
        let state = e.gibbs(1.0).unwrap();
        let est = calibrate_beta(&e, &state.probabilities).unwrap();
        let beta = est.fitted().expect("interior fit");
        assert!((beta - 1.0).abs() < 1e-8, "got {beta}");

        // the three-level inversion at beta* = 2.5
        let e3 = ens(&[0.0, 0.3, 1.1]);
        let counts = e3.gibbs(2.5).unwrap().probabilities;
        let beta = calibrate_beta(&e3, &counts).unwrap().fitted().unwrap();
        assert!((beta - 2.5).abs() < 1e-9, "got {beta}");

        // scaling all counts together changes nothing
        let scaled: Vec<f64> = counts.iter().map(|c| 137.0 * c).collect();
        let beta2 = calibrate_beta(&e3, &scaled).unwrap().fitted().unwrap();
        assert!((beta2 - beta).abs() < 1e-12);
    }

    #[test]
    fn calibration_sentinels_and_validation() {
        let e = ens(&[0.0, 1.0]);
        assert_eq!(calibrate_beta(&e, &[3.0, 0.0]).unwrap(), BetaEstimate::AtArgmin);
        assert_eq!(calibrate_beta(&e, &[0.0, 2.0]).unwrap(), BetaEstimate::OutOfRange);
        // equal split: empirical mean equals the flat mean
        assert_eq!(calibrate_beta(&e, &[1.0, 1.0]).unwrap(), BetaEstimate::OutOfRange);
        // all works equal: empirical mean can only sit at the minimum
        let flat = ens(&[0.4, 0.4]);
        assert_eq!(calibrate_beta(&flat, &[1.0, 2.0]).unwrap(), BetaEstimate::AtArgmin);
        assert!(calibrate_beta(&e, &[0.0, 0.0]).is_err());
        assert!(calibrate_beta(&e, &[-1.0, 2.0]).is_err());
        assert!(calibrate_beta(&e, &[1.0]).is_err());
        assert!(format!("{}", BetaEstimate::AtArgmin).contains("degenerate: all mass at argmin"));
        assert!(format!("{}", BetaEstimate::OutOfRange).contains("beta <= 0 region"));
    }

    #[test]
    fn shift_invariance() {
        let base = ens(&[0.2, 0.7, 1.9]);
        let shifted = ens(&[0.7, 1.2, 2.4]);
        let a = base.gibbs(1.7).unwrap();
        let b = shifted.gibbs(1.7).unwrap();
        for (pa, pb) in a.probabilities.iter().zip(&b.probabilities) {
            assert!((pa - pb).abs() < 1e-14);
        }
        assert!((b.free_energy - a.free_energy - 0.5).abs() < 1e-12);
        assert!((b.entropy - a.entropy).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trips() {
        let e = StrategyEnsemble::new(
            vec!["tri".into(), "sq".into(), "ramp".into()],
            vec![1.0, 1.0, 1.0 / 3.0],
        )
        .unwrap();
        let plain = e.to_csv_string(None).unwrap();
        let (back, counts) = StrategyEnsemble::from_csv_str(&plain).unwrap();
        assert_eq!(back, e);
        assert_eq!(counts, None);

        let with = e.to_csv_string(Some(&[5.0, 2.5, 0.0])).unwrap();
        let (back, counts) = StrategyEnsemble::from_csv_str(&with).unwrap();
        assert_eq!(back, e);
        assert_eq!(counts, Some(vec![5.0, 2.5, 0.0]));

        assert!(StrategyEnsemble::from_csv_str("name,cost\nx,1\n").is_err());
        assert!(StrategyEnsemble::from_csv_str("label,work\nx,abc\n").is_err());
        assert!(StrategyEnsemble::from_csv_str("label,work,count\nx,1,-2\n").is_err());
        assert!(StrategyEnsemble::from_csv_str("label,work\n").is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(StrategyEnsemble::from_works(vec![]).is_err());
        assert!(StrategyEnsemble::from_works(vec![-0.1]).is_err());
        assert!(StrategyEnsemble::from_works(vec![f64::NAN]).is_err());
        assert!(StrategyEnsemble::new(vec!["a".into()], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn gibbs_rejects_bad_beta() {
        let e = ens(&[0.0, 1.0]);
        assert!(e.gibbs(0.0).is_err());
        assert!(e.gibbs(-1.0).is_err());
        assert!(e.gibbs(f64::INFINITY).is_err());
    }

    #[test]
    fn mean_work_decreases_in_beta() {
        // stop before exp(-beta range) underflows the gap below fp epsilon,
        // where the mean saturates at the minimum work
        let e = ens(&[0.1, 0.4, 0.9, 2.0]);
        let mut prev = f64::INFINITY;
        for beta in [0.01, 0.05, 0.2, 1.0, 3.0, 10.0, 30.0, 100.0] {
            let m = e.gibbs(beta).unwrap().mean_work;
            assert!(m < prev, "beta {beta}: {m} !< {prev}");
            assert!(m >= e.min_work());
            prev = m;
        }
    }

    #[test]
    fn json_keys_match_interface() {
        let state = ens(&[0.0, 1.0]).gibbs(1.0).unwrap();
        let value: serde_json::Value = serde_json::to_value(&state).unwrap();
        for key in [
            "beta",
            "logZ",
            "free_energy",
            "mean_work",
            "entropy",
            "work_variance",
            "probabilities",
        ] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
    }
}
