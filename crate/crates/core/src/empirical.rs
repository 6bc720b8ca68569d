//! Estimation pipeline over trade tapes: impact-curve regression, convexity
//! testing, realized variance, and per-tape (work, variance) reconstruction
//! feeding profit-bound compliance reports.
//!
//! A tape is a time-ordered record of (t, rate, price increment). Price
//! increments follow the midprice convention: they carry noise and permanent
//! drift but no execution offset, since the offset J(v) is paid at the trade
//! and never moves the midprice. Raw external tapes that do embed J(v) in
//! their increments are handled by the supplied-lambda offset source.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::impact::{convexity_check, ConvexityReport, ImpactModel};
use crate::numeric::KahanSum;
use crate::strategy::Strategy;
use crate::thermo::{chernoff_profit_bound, exact_profit_probability};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapeRecord {
    /// Start of the record's interval; the interval runs to the next record
    /// (the last one to the horizon).
    pub t: f64,
    pub rate: f64,
    /// Price increment over the interval.
    pub d_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapeAnnotation {
    pub model: ImpactModel,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeTape {
    records: Vec<TapeRecord>,
    horizon: f64,
    annotation: Option<TapeAnnotation>,
}

const CSV_HEADER: [&str; 3] = ["t", "rate", "dS"];

impl TradeTape {
    pub fn new(records: Vec<TapeRecord>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if records.is_empty() {
            return Err(Error::InvalidInput("tape has no records".into()));
        }
        let mut prev = -f64::INFINITY;
        for r in &records {
            if !(r.t.is_finite() && r.rate.is_finite() && r.d_price.is_finite()) {
                return Err(Error::InvalidInput("tape records must be finite".into()));
            }
            if r.t <= prev {
                return Err(Error::InvalidInput("record times must be strictly increasing".into()));
            }
            prev = r.t;
        }
        if records[0].t < 0.0 || prev >= horizon {
            return Err(Error::InvalidInput(format!(
                "record times must lie in [0, {horizon})"
            )));
        }
        Ok(TradeTape { records, horizon, annotation: None })
    }

    pub fn with_annotation(mut self, model: ImpactModel, sigma: f64) -> Self {
        self.annotation = Some(TapeAnnotation { model, sigma });
        self
    }

    pub fn records(&self) -> &[TapeRecord] {
        &self.records
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn annotation(&self) -> Option<&TapeAnnotation> {
        self.annotation.as_ref()
    }

    /// Length of record k's interval.
    fn interval(&self, k: usize) -> f64 {
        let end = self.records.get(k + 1).map_or(self.horizon, |r| r.t);
        end - self.records[k].t
    }

    /// Midprice samples starting at 0: n records give n+1 prices.
    pub fn price_path(&self) -> Vec<f64> {
        let mut prices = Vec::with_capacity(self.records.len() + 1);
        let mut s = KahanSum::default();
        prices.push(0.0);
        for r in &self.records {
            s.add(r.d_price);
            prices.push(s.value());
        }
        prices
    }

    /// CSV with header `t,rate,dS`. The annotation is not serialized.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.records {
            wtr.write_record(&[r.t.to_string(), r.rate.to_string(), r.d_price.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// The horizon is not part of the CSV and must be supplied.
    pub fn from_csv<R: std::io::Read>(input: R, horizon: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers != CSV_HEADER {
            return Err(Error::Parse(format!("expected header t,rate,dS, got {headers:?}")));
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("expected 3 columns, got {}", rec.len())));
            }
            let field = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| Error::Parse(format!("bad value {:?}", &rec[i])))
            };
            records.push(TapeRecord { t: field(0)?, rate: field(1)?, d_price: field(2)? });
        }
        TradeTape::new(records, horizon)
    }

    pub fn from_csv_str(s: &str, horizon: f64) -> Result<Self> {
        Self::from_csv(s.as_bytes(), horizon)
    }
}

/// Sample a single-asset strategy on the simulation grid and attach seeded
/// Gaussian price increments dS = sigma sqrt(h) Z + I(v) h. The generating
/// model and sigma are kept as the tape's annotation.
pub fn synthesize_tape(
    model: &ImpactModel,
    strategy: &Strategy,
    sigma: f64,
    dt: f64,
    seed: u64,
) -> Result<TradeTape> {
    if model.assets() != 1 || strategy.assets() != 1 {
        return Err(Error::InvalidInput("tape synthesis is single-asset".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    check_grid_step(strategy, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for seg in strategy.segments() {
        let len = seg.len();
        let n_sub = (len / dt).ceil() as usize;
        let h = len / n_sub as f64;
        let sqrt_h = h.sqrt();
        for j in 0..n_sub {
            let offset = j as f64 * h;
            let rate = seg.rates[0].value + seg.rates[0].slope * offset;
            let drift = model.permanent().drift(&[rate])?[0] * h;
            let z: f64 = StandardNormal.sample(&mut rng);
            records.push(TapeRecord {
                t: seg.t_start + offset,
                rate,
                d_price: sigma * sqrt_h * z + drift,
            });
        }
    }
    Ok(TradeTape::new(records, strategy.horizon())?.with_annotation(model.clone(), sigma))
}

fn check_grid_step(strategy: &Strategy, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if dt > strategy.shortest_segment() {
        return Err(Error::InvalidInput(format!(
            "dt {dt} exceeds the shortest segment {}; rates would be skipped",
            strategy.shortest_segment()
        )));
    }
    if dt > strategy.horizon() / 10.0 {
        return Err(Error::InvalidInput(format!(
            "dt {dt} too coarse for horizon {}; need at least 10 steps",
            strategy.horizon()
        )));
    }
    Ok(())
}

/// Where the per-record execution offset comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetSource {
    /// Synthetic tapes: offset = J(v) from the annotated model plus the
    /// drift-stripped increment, so estimator noise is preserved.
    Annotated,
    /// Raw tapes whose increments embed the execution offset: the permanent
    /// component lambda v h is subtracted with a caller-supplied lambda.
    /// Joint identification of (impact curve, lambda) is out of scope.
    SuppliedLambda(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactCurveEstimate {
    pub bin_width: f64,
    /// Full-grid index of each retained (populated) bin.
    pub bin_indices: Vec<usize>,
    pub bin_centers: Vec<f64>,
    /// Mean observed rate per retained bin.
    pub mean_rates: Vec<f64>,
    /// Mean execution offset per retained bin, the estimate of J at that bin.
    pub mean_offsets: Vec<f64>,
    pub counts: Vec<usize>,
    /// f(v) = J(v) v evaluated at the bin centers.
    pub cost_curve: Vec<f64>,
    /// Full-grid indices of empty bins, dropped from the curve.
    pub dropped_bins: Vec<usize>,
    pub n_records: usize,
}

impl ImpactCurveEstimate {
    /// Count-weighted least squares through the origin on the bin means;
    /// for a linear generator at sigma = 0 this returns eta exactly.
    pub fn linear_slope(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&m, &j), &c) in self.mean_rates.iter().zip(&self.mean_offsets).zip(&self.counts) {
            num += c as f64 * m * j;
            den += c as f64 * m * m;
        }
        if den == 0.0 {
            return Err(Error::InvalidInput("no rate variation to fit a slope".into()));
        }
        Ok(num / den)
    }
}

/// Bin the tape's rates into n_bins equal-width bins spanning the observed
/// range and average the execution offset in each. Empty bins are dropped
/// from the curve and reported.
pub fn estimate_impact_curve(
    tape: &TradeTape,
    n_bins: usize,
    source: OffsetSource,
) -> Result<ImpactCurveEstimate> {
    if n_bins < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 bins, got {n_bins}")));
    }
    let offsets = execution_offsets(tape, source)?;
    let rates: Vec<f64> = tape.records().iter().map(|r| r.rate).collect();
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;

    let mut counts = vec![0usize; n_bins];
    let mut rate_sums = vec![0.0f64; n_bins];
    let mut offset_sums = vec![0.0f64; n_bins];
    for (&v, &j) in rates.iter().zip(&offsets) {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
        rate_sums[idx] += v;
        offset_sums[idx] += j;
    }

    let mut bin_indices = Vec::new();
    let mut bin_centers = Vec::new();
    let mut mean_rates = Vec::new();
    let mut mean_offsets = Vec::new();
    let mut kept_counts = Vec::new();
    let mut cost_curve = Vec::new();
    let mut dropped_bins = Vec::new();
    for i in 0..n_bins {
        if counts[i] == 0 {
            dropped_bins.push(i);
            continue;
        }
        let center = if width > 0.0 { min + (i as f64 + 0.5) * width } else { min };
        let n = counts[i] as f64;
        let mean_offset = offset_sums[i] / n;
        bin_indices.push(i);
        bin_centers.push(center);
        mean_rates.push(rate_sums[i] / n);
        mean_offsets.push(mean_offset);
        kept_counts.push(counts[i]);
        cost_curve.push(mean_offset * center);
    }
    Ok(ImpactCurveEstimate {
        bin_width: width,
        bin_indices,
        bin_centers,
        mean_rates,
        mean_offsets,
        counts: kept_counts,
        cost_curve,
        dropped_bins,
        n_records: tape.records().len(),
    })
}

fn execution_offsets(tape: &TradeTape, source: OffsetSource) -> Result<Vec<f64>> {
    match source {
        OffsetSource::Annotated => {
            let ann = tape.annotation().ok_or_else(|| {
                Error::InvalidInput(
                    "tape carries no model annotation; use a supplied lambda instead".into(),
                )
            })?;
            if ann.model.assets() != 1 {
                return Err(Error::InvalidInput("annotated model must be single-asset".into()));
            }
            let mut offsets = Vec::with_capacity(tape.records().len());
            for (k, r) in tape.records().iter().enumerate() {
                let drift = ann.model.permanent().drift(&[r.rate])?[0] * tape.interval(k);
                offsets.push(ann.model.temporary().offset(r.rate) + (r.d_price - drift));
            }
            Ok(offsets)
        }
        OffsetSource::SuppliedLambda(lambda) => {
            if !lambda.is_finite() {
                return Err(Error::InvalidInput(format!("lambda must be finite, got {lambda}")));
            }
            Ok(tape
                .records()
                .iter()
                .enumerate()
                .map(|(k, r)| r.d_price - lambda * r.rate * tape.interval(k))
                .collect())
        }
    }
}

/// Second-difference convexity of the estimated cost curve. Needs at least
/// three populated bins and a gap-free run of them, since second differences
/// only measure curvature on a uniform grid.
pub fn convexity_test(curve: &ImpactCurveEstimate, tol: f64) -> Result<ConvexityReport> {
    if curve.bin_centers.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "convexity needs at least 3 populated bins, got {}",
            curve.bin_centers.len()
        )));
    }
    for w in curve.bin_indices.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::InvalidInput(format!(
                "populated bins are not contiguous (gap after bin {}); curvature is undefined",
                w[0]
            )));
        }
    }
    convexity_check(&curve.cost_curve, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    /// Price differences; matches arithmetic Brownian midprice dynamics and
    /// is the default throughout.
    Arithmetic,
    /// Log returns; requires strictly positive prices.
    Log,
}

/// Realized variance (1/T) sum r_i^2 of a sampled price series.
pub fn realized_variance(prices: &[f64], horizon: f64, kind: ReturnKind) -> Result<f64> {
    if prices.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 price samples, got {}",
            prices.len()
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let mut sum = KahanSum::default();
    for w in prices.windows(2) {
        let r = match kind {
            ReturnKind::Arithmetic => w[1] - w[0],
            ReturnKind::Log => {
                if w[0] <= 0.0 || w[1] <= 0.0 {
                    return Err(Error::InvalidInput(
                        "log returns need strictly positive prices".into(),
                    ));
                }
                (w[1] / w[0]).ln()
            }
        };
        sum.add(r * r);
    }
    Ok(sum.value() / horizon)
}

/// Left-rule Riemann sums over the tape grid: W = sum J(v) v h and
/// V = sum q^2 h with inventory accumulated by the same left rule.
pub fn estimate_work_variance(tape: &TradeTape, model: &ImpactModel) -> Result<(f64, f64)> {
    if model.assets() != 1 {
        return Err(Error::InvalidInput("tape estimation is single-asset".into()));
    }
    let mut work = KahanSum::default();
    let mut variance = KahanSum::default();
    let mut q = KahanSum::default();
    for (k, r) in tape.records().iter().enumerate() {
        let h = tape.interval(k);
        work.add(model.temporary().cost(r.rate) * h);
        let qk = q.value();
        variance.add(qk * qk * h);
        q.add(r.rate * h);
    }
    Ok((work.value(), variance.value()))
}

/// Cash P&L of executing the tape's trades against its own price path,
/// paying the model's execution offset: -sum (S_k + J(v_k)) v_k h_k with
/// S accumulated from the increments and S_0 = 0.
pub fn realized_pnl(tape: &TradeTape, model: &ImpactModel) -> Result<f64> {
    if model.assets() != 1 {
        return Err(Error::InvalidInput("tape estimation is single-asset".into()));
    }
    let mut pnl = KahanSum::default();
    let mut s = KahanSum::default();
    for (k, r) in tape.records().iter().enumerate() {
        let h = tape.interval(k);
        pnl.add(-(s.value() + model.temporary().offset(r.rate)) * r.rate * h);
        s.add(r.d_price);
    }
    Ok(pnl.value())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TapeBound {
    pub work: f64,
    pub variance_term: f64,
    pub pnl: f64,
    pub exact_probability: f64,
    pub chernoff_bound: f64,
    /// Profitable although the bound prices that event below 0.01/n across
    /// the whole batch: seeing even one such tape is less than 1% likely.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub per_tape: Vec<TapeBound>,
    pub n_tapes: usize,
    pub profitable_frequency: f64,
    pub frequency_se: f64,
    pub mean_exact_probability: f64,
    pub mean_chernoff_bound: f64,
    /// Frequency within 3 binomial SE of the mean exact probability and not
    /// above the mean bound by more than 3 SE.
    pub frequency_consistent: bool,
}

impl BoundReport {
    /// Flat per-tape table, header
    /// `index,work,variance_term,pnl,exact_probability,chernoff_bound,flagged`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "index,work,variance_term,pnl,exact_probability,chernoff_bound,flagged\n",
        );
        for (i, t) in self.per_tape.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                t.work, t.variance_term, t.pnl, t.exact_probability, t.chernoff_bound, t.flagged
            ));
        }
        out
    }
}

/// Reconstruct (W, V) for each tape, price its profit event under the given
/// sigma, and compare the batch's profitable frequency against the bounds.
pub fn bound_violation_report(
    tapes: &[(TradeTape, f64)],
    model: &ImpactModel,
    sigma: f64,
) -> Result<BoundReport> {
    if tapes.is_empty() {
        return Err(Error::InvalidInput("no tapes to report on".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    let n = tapes.len();
    let alarm_level = 0.01 / n as f64;
    let mut per_tape = Vec::with_capacity(n);
    let mut profitable = 0usize;
    let mut exact_sum = KahanSum::default();
    let mut bound_sum = KahanSum::default();
    for (tape, pnl) in tapes {
        let (work, variance_term) = estimate_work_variance(tape, model)?;
        let nv = sigma * sigma * variance_term;
        let exact_probability = exact_profit_probability(work, nv);
        let chernoff_bound = chernoff_profit_bound(work, nv);
        let is_profit = *pnl >= 0.0;
        if is_profit {
            profitable += 1;
        }
        exact_sum.add(exact_probability);
        bound_sum.add(chernoff_bound);
        per_tape.push(TapeBound {
            work,
            variance_term,
            pnl: *pnl,
            exact_probability,
            chernoff_bound,
            flagged: is_profit && chernoff_bound < alarm_level,
        });
    }
    let frequency = profitable as f64 / n as f64;
    let mean_exact = exact_sum.value() / n as f64;
    let mean_bound = bound_sum.value() / n as f64;
    let frequency_se = (frequency * (1.0 - frequency) / n as f64).sqrt();
    let exact_se = (mean_exact * (1.0 - mean_exact) / n as f64).sqrt();
    let frequency_consistent = (frequency - mean_exact).abs() <= 3.0 * exact_se + 1e-12
        && frequency <= mean_bound + 3.0 * frequency_se + 1e-12;
    Ok(BoundReport {
        per_tape,
        n_tapes: n,
        profitable_frequency: frequency,
        frequency_se,
        mean_exact_probability: mean_exact,
        mean_chernoff_bound: mean_bound,
        frequency_consistent,
    })
}
