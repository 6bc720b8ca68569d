//! Execution strategies: deterministic trading-rate paths on [0, T].
//!
//! A strategy is a contiguous list of segments, each carrying an affine rate
//! per asset. Inventories are therefore piecewise quadratic and every moment
//! the bounds need (\int q^2, \int q_i q_j, \int q v) integrates exactly; no
//! quadrature enters unless an operation says so explicitly.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::poly::Poly;

/// rate(t) = value + slope * (t - t_start), local to the owning segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRate {
    pub value: f64,
    pub slope: f64,
}

impl LinearRate {
    pub fn constant(value: f64) -> Self {
        LinearRate { value, slope: 0.0 }
    }

    fn at(&self, s: f64) -> f64 {
        self.value + self.slope * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// One rate per asset.
    pub rates: Vec<LinearRate>,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    horizon: f64,
    assets: usize,
    segments: Vec<Segment>,
}

const CSV_HEADER: [&str; 4] = ["t_start", "t_end", "rate_const", "rate_slope"];

impl Strategy {
    /// Validating constructor. Segments must tile [0, horizon] exactly:
    /// breakpoints are compared bitwise, which every builder and the CSV
    /// round trip preserve.
    pub fn from_segments(horizon: f64, assets: usize, segments: Vec<Segment>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if assets == 0 {
            return Err(Error::InvalidInput("asset count must be at least 1".into()));
        }
        if segments.is_empty() {
            return Err(Error::InvalidInput("strategy needs at least one segment".into()));
        }
        let mut cursor = 0.0f64;
        for (k, seg) in segments.iter().enumerate() {
            if seg.t_start != cursor {
                return Err(Error::InvalidInput(format!(
                    "segment {k} starts at {} but previous coverage ends at {cursor}",
                    seg.t_start
                )));
            }
            if !(seg.t_end.is_finite() && seg.t_end > seg.t_start) {
                return Err(Error::InvalidInput(format!(
                    "segment {k} must have t_end > t_start, got [{}, {}]",
                    seg.t_start, seg.t_end
                )));
            }
            if seg.rates.len() != assets {
                return Err(Error::DimensionMismatch { expected: assets, got: seg.rates.len() });
            }
            for r in &seg.rates {
                if !(r.value.is_finite() && r.slope.is_finite()) {
                    return Err(Error::InvalidInput(format!("segment {k} has a non-finite rate")));
                }
            }
            cursor = seg.t_end;
        }
        if cursor != horizon {
            return Err(Error::InvalidInput(format!(
                "segments cover [0, {cursor}] but the horizon is {horizon}"
            )));
        }
        Ok(Strategy { horizon, assets, segments })
    }

    /// Buy at +peak_rate for the first half, sell at -peak_rate for the
    /// second; returns exactly to flat.
    pub fn triangular(peak_rate: f64, horizon: f64) -> Result<Self> {
        check_positive("peak_rate", peak_rate)?;
        let half = horizon / 2.0;
        Self::from_segments(
            horizon,
            1,
            vec![
                Segment { t_start: 0.0, t_end: half, rates: vec![LinearRate::constant(peak_rate)] },
                Segment { t_start: half, t_end: horizon, rates: vec![LinearRate::constant(-peak_rate)] },
            ],
        )
    }

    /// n buy/sell cycles of alternating +-peak_rate; 2n equal segments.
    /// cycles = 1 coincides with the triangular path.
    pub fn square_wave(peak_rate: f64, horizon: f64, cycles: usize) -> Result<Self> {
        check_positive("peak_rate", peak_rate)?;
        if cycles == 0 {
            return Err(Error::InvalidInput("square wave needs at least one cycle".into()));
        }
        let n_seg = 2 * cycles;
        let breaks: Vec<f64> =
            (0..=n_seg).map(|k| k as f64 * horizon / n_seg as f64).collect();
        let segments = (0..n_seg)
            .map(|k| Segment {
                t_start: breaks[k],
                t_end: breaks[k + 1],
                rates: vec![LinearRate::constant(if k % 2 == 0 { peak_rate } else { -peak_rate })],
            })
            .collect();
        Self::from_segments(horizon, 1, segments)
    }

    /// Linearly decaying rate v(t) = peak_rate * (T - 2t)/T: starts buying at
    /// +peak_rate, crosses zero at T/2, ends selling at -peak_rate.
    pub fn ramp(peak_rate: f64, horizon: f64) -> Result<Self> {
        check_positive("peak_rate", peak_rate)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        Self::from_segments(
            horizon,
            1,
            vec![Segment {
                t_start: 0.0,
                t_end: horizon,
                rates: vec![LinearRate { value: peak_rate, slope: -2.0 * peak_rate / horizon }],
            }],
        )
    }

    /// Piecewise-constant rates: rates[k] holds on [times[k], times[k+1]),
    /// the last until the horizon. times[0] must be 0.
    pub fn from_rate_samples(times: &[f64], rates: &[f64], horizon: f64) -> Result<Self> {
        if times.is_empty() || times.len() != rates.len() {
            return Err(Error::InvalidInput(format!(
                "times and rates must be non-empty and equal length, got {} and {}",
                times.len(),
                rates.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidInput(format!("first sample time must be 0, got {}", times[0])));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
            }
        }
        if *times.last().unwrap() >= horizon {
            return Err(Error::InvalidInput(format!(
                "last sample time {} must precede the horizon {horizon}",
                times.last().unwrap()
            )));
        }
        let segments = (0..times.len())
            .map(|k| Segment {
                t_start: times[k],
                t_end: if k + 1 < times.len() { times[k + 1] } else { horizon },
                rates: vec![LinearRate::constant(rates[k])],
            })
            .collect();
        Self::from_segments(horizon, 1, segments)
    }

    /// The do-nothing strategy: rate identically zero.
    pub fn zero(horizon: f64) -> Result<Self> {
        Self::from_rate_samples(&[0.0], &[0.0], horizon)
    }

    /// Seeded random round trip: n_segments piecewise-constant rates drawn
    /// uniformly from [-rate_bound, rate_bound] on randomly sized segments,
    /// with the last rate set to -q/(last duration) so the terminal inventory
    /// is exactly zero. The adjusted rate may exceed rate_bound.
    pub fn random_round_trip(
        seed: u64,
        n_segments: usize,
        rate_bound: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_positive("rate_bound", rate_bound)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if n_segments < 2 {
            return Err(Error::InvalidInput(
                "a random round trip needs at least two segments to balance".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..n_segments).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = weights.iter().sum();
        let mut breaks = Vec::with_capacity(n_segments + 1);
        breaks.push(0.0);
        let mut acc = 0.0;
        for w in &weights[..n_segments - 1] {
            acc += w / total * horizon;
            breaks.push(acc);
        }
        breaks.push(horizon);

        let mut rates: Vec<f64> =
            (0..n_segments - 1).map(|_| rng.gen_range(-rate_bound..rate_bound)).collect();
        let q_partial: f64 =
            rates.iter().enumerate().map(|(k, r)| r * (breaks[k + 1] - breaks[k])).sum();
        let last_len = breaks[n_segments] - breaks[n_segments - 1];
        rates.push(-q_partial / last_len);

        let segments = (0..n_segments)
            .map(|k| Segment {
                t_start: breaks[k],
                t_end: breaks[k + 1],
                rates: vec![LinearRate::constant(rates[k])],
            })
            .collect();
        Self::from_segments(horizon, 1, segments)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// v_asset(t); t is clamped into [0, horizon]. At an interior breakpoint
    /// the earlier segment's value is returned.
    pub fn rate(&self, t: f64, asset: usize) -> f64 {
        assert!(asset < self.assets, "asset index out of range");
        let t = t.clamp(0.0, self.horizon);
        let idx = self
            .segments
            .partition_point(|seg| seg.t_end < t)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        seg.rates[asset].at(t - seg.t_start)
    }

    /// Largest |rate| attained anywhere on the path (affine rates attain
    /// extremes at segment endpoints).
    pub fn max_abs_rate(&self) -> f64 {
        let mut m = 0.0f64;
        for seg in &self.segments {
            let len = seg.len();
            for r in &seg.rates {
                m = m.max(r.value.abs()).max(r.at(len).abs());
            }
        }
        m
    }

    pub fn shortest_segment(&self) -> f64 {
        self.segments.iter().map(Segment::len).fold(f64::INFINITY, f64::min)
    }

    /// Scale-aware round-trip tolerance: 1e-9 * max|rate| * horizon.
    pub fn default_round_trip_tol(&self) -> f64 {
        1e-9 * self.max_abs_rate() * self.horizon
    }

    pub fn inventory(&self) -> InventoryPath {
        let mut q0 = vec![0.0f64; self.assets];
        let mut segs = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let len = seg.len();
            let polys: Vec<[f64; 3]> = seg
                .rates
                .iter()
                .enumerate()
                .map(|(a, r)| [q0[a], r.value, 0.5 * r.slope])
                .collect();
            for (a, p) in polys.iter().enumerate() {
                q0[a] = p[0] + p[1] * len + p[2] * len * len;
            }
            segs.push(InventorySegment { t_start: seg.t_start, t_end: seg.t_end, polys });
        }
        InventoryPath { horizon: self.horizon, assets: self.assets, segments: segs }
    }

    /// |q_T| per asset.
    pub fn round_trip_residual(&self) -> Vec<f64> {
        self.inventory().terminal().into_iter().map(f64::abs).collect()
    }

    pub fn is_round_trip(&self, tol: f64) -> bool {
        self.round_trip_residual().into_iter().all(|r| r <= tol)
    }

    pub(crate) fn require_round_trip(&self) -> Result<()> {
        let tol = self.default_round_trip_tol();
        let residual = self.round_trip_residual();
        if residual.iter().any(|&r| r > tol) {
            return Err(Error::NotRoundTrip { residual, tol });
        }
        Ok(())
    }

    /// V = \int_0^T ||q_t||^2 dt, exact.
    pub fn position_variance(&self) -> f64 {
        self.inventory_outer_integral().trace()
    }

    /// M with M_ij = \int_0^T q_i q_j dt, exact; the quadratic form behind
    /// multi-asset heat variance.
    pub fn inventory_outer_integral(&self) -> SquareMatrix {
        let inv = self.inventory();
        let d = self.assets;
        let mut data = vec![0.0f64; d * d];
        for seg in &inv.segments {
            let len = seg.t_end - seg.t_start;
            let polys: Vec<Poly> =
                seg.polys.iter().map(|p| Poly::quadratic(p[0], p[1], p[2])).collect();
            for i in 0..d {
                for j in i..d {
                    let val = polys[i].mul(&polys[j]).integral_to(len);
                    data[i * d + j] += val;
                    if i != j {
                        data[j * d + i] += val;
                    }
                }
            }
        }
        SquareMatrix::from_row_major(d, data).expect("inventory moments are finite")
    }

    /// C with C_ij = \int_0^T q_i v_j dt, exact; contracts with a permanent
    /// impact matrix to give the permanent work term.
    pub(crate) fn inventory_rate_cross_integral(&self) -> SquareMatrix {
        let inv = self.inventory();
        let d = self.assets;
        let mut data = vec![0.0f64; d * d];
        for (seg, inv_seg) in self.segments.iter().zip(&inv.segments) {
            let len = seg.len();
            for i in 0..d {
                let qi = Poly::quadratic(inv_seg.polys[i][0], inv_seg.polys[i][1], inv_seg.polys[i][2]);
                for j in 0..d {
                    let vj = Poly::linear(seg.rates[j].value, seg.rates[j].slope);
                    data[i * d + j] += qi.mul(&vj).integral_to(len);
                }
            }
        }
        SquareMatrix::from_row_major(d, data).expect("cross moments are finite")
    }

    /// \int_0^T sum_a |v_a(t)|^p dt for p >= 1, exact.
    ///
    /// Constant rates integrate directly; affine rates use the antiderivative
    /// sgn(u)|u|^{p+1} / (m (p+1)) after splitting at the sign change. A
    /// near-degenerate slope (|du| tiny against |u|) would cancel in that
    /// difference, so those fall back to 5-point Gauss-Legendre, whose error
    /// on an almost-constant integrand is far below f64 resolution.
    pub fn rate_power_integral(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidInput(format!("power integral needs p >= 1, got {p}")));
        }
        let mut total = 0.0;
        for seg in &self.segments {
            let len = seg.len();
            for r in &seg.rates {
                total += abs_power_integral(r.value, r.slope, len, p);
            }
        }
        Ok(total)
    }

    /// Reverse time and negate the rate: v'(t) = -v(T - t). For round trips
    /// the inventory path is replayed backwards, so every inventory moment
    /// and every |v|^p integral is preserved.
    pub fn time_reversed(&self) -> Strategy {
        let t = self.horizon;
        let segments: Vec<Segment> = self
            .segments
            .iter()
            .rev()
            .map(|seg| {
                let len = seg.len();
                Segment {
                    t_start: t - seg.t_end,
                    t_end: t - seg.t_start,
                    rates: seg
                        .rates
                        .iter()
                        .map(|r| LinearRate { value: -r.at(len), slope: r.slope })
                        .collect(),
                }
            })
            .collect();
        Strategy { horizon: self.horizon, assets: self.assets, segments }
    }

    /// Concatenate the asset dimensions of several strategies over the same
    /// horizon. Segment boundaries become the union of all breakpoints and
    /// affine rates are re-anchored, so each part keeps its rate function.
    pub fn stack(parts: &[Strategy]) -> Result<Strategy> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to stack".into()))?;
        let horizon = first.horizon;
        for p in parts {
            if p.horizon != horizon {
                return Err(Error::InvalidInput(format!(
                    "horizons differ: {} vs {horizon}",
                    p.horizon
                )));
            }
        }
        let mut breaks: Vec<f64> = vec![0.0, horizon];
        for p in parts {
            breaks.extend(p.segments.iter().map(|s| s.t_end));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let assets = parts.iter().map(|p| p.assets).sum();
        let mut segments = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mut rates = Vec::with_capacity(assets);
            for p in parts {
                let idx = p.segments.partition_point(|s| s.t_end <= a);
                let seg = &p.segments[idx];
                for r in &seg.rates {
                    rates.push(LinearRate { value: r.at(a - seg.t_start), slope: r.slope });
                }
            }
            segments.push(Segment { t_start: a, t_end: b, rates });
        }
        Strategy::from_segments(horizon, assets, segments)
    }

    /// CSV with header `t_start,t_end,rate_const,rate_slope`; one row per
    /// segment, assets written as consecutive blocks (each restarting at
    /// t_start = 0).
    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(CSV_HEADER)?;
        for asset in 0..self.assets {
            for seg in &self.segments {
                wtr.write_record(&[
                    seg.t_start.to_string(),
                    seg.t_end.to_string(),
                    seg.rates[asset].value.to_string(),
                    seg.rates[asset].slope.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("csv into memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse(format!(
                "expected header {CSV_HEADER:?}, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Parse(format!("expected 4 columns, got {}", rec.len())));
            }
            let mut vals = [0.0f64; 4];
            for (i, field) in rec.iter().enumerate() {
                vals[i] = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad float {field:?} in strategy csv")))?;
            }
            rows.push((vals[0], vals[1], vals[2], vals[3]));
        }
        if rows.is_empty() {
            return Err(Error::Parse("strategy csv has no segment rows".into()));
        }
        // Asset blocks: a row restarting at the first row's t_start opens the
        // next block.
        let block_start = rows[0].0;
        let mut blocks: Vec<Vec<(f64, f64, f64, f64)>> = Vec::new();
        for row in rows {
            if row.0 == block_start && !blocks.is_empty() && !blocks.last().unwrap().is_empty() {
                blocks.push(Vec::new());
            }
            if blocks.is_empty() {
                blocks.push(Vec::new());
            }
            blocks.last_mut().unwrap().push(row);
        }
        let n = blocks[0].len();
        for b in &blocks {
            if b.len() != n {
                return Err(Error::Parse("asset blocks have differing segment counts".into()));
            }
            for (k, row) in b.iter().enumerate() {
                if row.0 != blocks[0][k].0 || row.1 != blocks[0][k].1 {
                    return Err(Error::Parse("asset blocks have differing breakpoints".into()));
                }
            }
        }
        let assets = blocks.len();
        let horizon = blocks[0][n - 1].1;
        let segments = (0..n)
            .map(|k| Segment {
                t_start: blocks[0][k].0,
                t_end: blocks[0][k].1,
                rates: blocks.iter().map(|b| LinearRate { value: b[k].2, slope: b[k].3 }).collect(),
            })
            .collect();
        Self::from_segments(horizon, assets, segments)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv(s.as_bytes())
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidInput(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// \int_0^len |c + m s|^p ds, exact up to rounding.
fn abs_power_integral(c: f64, m: f64, len: f64, p: f64) -> f64 {
    if len == 0.0 {
        return 0.0;
    }
    if m == 0.0 {
        return c.abs().powf(p) * len;
    }
    let root = -c / m;
    if root > 0.0 && root < len {
        abs_power_piece(c, m, 0.0, root, p) + abs_power_piece(c, m, root, len, p)
    } else {
        abs_power_piece(c, m, 0.0, len, p)
    }
}

/// Sign-constant piece [s0, s1].
fn abs_power_piece(c: f64, m: f64, s0: f64, s1: f64, p: f64) -> f64 {
    let u0 = c + m * s0;
    let u1 = c + m * s1;
    let du = u1 - u0;
    if du.abs() <= 1e-8 * u0.abs().max(u1.abs()) {
        // Antiderivative difference would cancel; the integrand is nearly
        // constant, where 5-point Gauss-Legendre is exact to ~(du/u)^10.
        return gauss5(|s| (c + m * s).abs().powf(p), s0, s1);
    }
    let psi = |u: f64| u.signum() * u.abs().powf(p + 1.0) / (p + 1.0);
    (psi(u1) - psi(u0)) / m
}

fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * X.iter().zip(W).map(|(&x, w)| w * f(mid + half * x)).sum::<f64>()
}

#[derive(Debug, Clone)]
pub(crate) struct InventorySegment {
    pub t_start: f64,
    pub t_end: f64,
    /// Per asset [q0, c1, c2]: q(s) = q0 + c1 s + c2 s^2 in local time.
    pub polys: Vec<[f64; 3]>,
}

/// Piecewise-quadratic inventory q_t = \int_0^t v du, continuous by
/// construction.
#[derive(Debug, Clone)]
pub struct InventoryPath {
    horizon: f64,
    assets: usize,
    pub(crate) segments: Vec<InventorySegment>,
}

impl InventoryPath {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    /// q_asset(t); t is clamped into [0, horizon].
    pub fn value(&self, t: f64, asset: usize) -> f64 {
        assert!(asset < self.assets, "asset index out of range");
        let t = t.clamp(0.0, self.horizon);
        let idx = self
            .segments
            .partition_point(|seg| seg.t_end < t)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let s = t - seg.t_start;
        let p = seg.polys[asset];
        p[0] + p[1] * s + p[2] * s * s
    }

    /// Terminal inventory q_T per asset.
    pub fn terminal(&self) -> Vec<f64> {
        let last = self.segments.last().expect("strategies are non-empty");
        let len = last.t_end - last.t_start;
        last.polys.iter().map(|p| p[0] + p[1] * len + p[2] * len * len).collect()
    }

    /// max_t |q_asset(t)|; quadratics attain extremes at endpoints or the
    /// interior vertex.
    pub fn max_abs(&self, asset: usize) -> f64 {
        assert!(asset < self.assets, "asset index out of range");
        let mut m = 0.0f64;
        for seg in &self.segments {
            let len = seg.t_end - seg.t_start;
            let p = seg.polys[asset];
            m = m.max(p[0].abs());
            m = m.max((p[0] + p[1] * len + p[2] * len * len).abs());
            if p[2] != 0.0 {
                let vertex = -p[1] / (2.0 * p[2]);
                if vertex > 0.0 && vertex < len {
                    m = m.max((p[0] + p[1] * vertex + p[2] * vertex * vertex).abs());
                }
            }
        }
        m
    }
}
