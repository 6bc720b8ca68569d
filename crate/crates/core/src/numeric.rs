//! Shared scalar numerics: normal CDF, stabilized log-sum-exp, compensated
//! summation, golden-section minimization, and sample moments.

/// Standard normal CDF. erfc keeps full relative accuracy in the far tail,
/// where 1 - Phi(|x|) underflows long before erfc does.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// log(sum_i exp(x_i)) with the max shifted out. The shifted sum is
/// 1 + (ties - 1) + rest with rest < n, finished by log1p so the result keeps
/// full absolute precision even when the non-max terms are ~1e-15; a plain
/// ln(1 + tiny) would put an eps-of-one floor under downstream differences.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = 0usize;
    let mut rest = 0.0f64;
    for &x in xs {
        if x == m {
            ties += 1;
        } else {
            rest += (x - m).exp();
        }
    }
    m + ((ties - 1) as f64 + rest).ln_1p()
}

/// Kahan compensated accumulator. Used for the fixed-order Monte Carlo
/// reductions, where determinism requires a serial sum and accuracy asks for
/// compensation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Golden-section minimum of a unimodal function on [a, b].
pub(crate) fn golden_minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SampleMoments {
    pub mean: f64,
    /// Unbiased sample variance (n - 1 denominator).
    pub variance: f64,
    /// g1 = m3 / m2^(3/2) with biased central moments.
    pub skewness: f64,
}

/// Two-pass compensated central moments; deterministic for a fixed ordering.
pub(crate) fn sample_moments(xs: &[f64]) -> SampleMoments {
    let n = xs.len();
    assert!(n > 0, "moments of an empty sample");
    let mut s = KahanSum::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    let (mut s2, mut s3) = (KahanSum::default(), KahanSum::default());
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
    }
    let m2 = s2.value() / n as f64;
    let m3 = s3.value() / n as f64;
    let variance = if n > 1 { s2.value() / (n as f64 - 1.0) } else { 0.0 };
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    SampleMoments { mean, variance, skewness }
}
