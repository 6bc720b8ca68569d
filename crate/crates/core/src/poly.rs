//! Dense univariate polynomials in a local segment coordinate.
//!
//! Trading rates are affine per segment, inventories quadratic, so every
//! integrand built from them (q^2, q*v, q_i*q_j) has degree at most four and
//! integrates in closed form. Coefficients are stored lowest degree first.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn linear(c0: f64, c1: f64) -> Self {
        Poly { coeffs: vec![c0, c1] }
    }

    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        Poly { coeffs: vec![c0, c1, c2] }
    }

    #[cfg(test)]
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    #[cfg(test)]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly { coeffs: out }
    }

    /// Exact \int_0^upper p(x) dx via the antiderivative, Horner form.
    pub fn integral_to(&self, upper: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * upper + c / (k as f64 + 1.0);
        }
        acc * upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_integral_match_hand_values() {
        // p(x) = 1 + 2x + 3x^2, \int_0^2 = 2 + 4 + 8 = 14
        let p = Poly::quadratic(1.0, 2.0, 3.0);
        assert_eq!(p.eval(2.0), 17.0);
        assert!((p.integral_to(2.0) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn product_degrees_add() {
        let q = Poly::quadratic(0.0, 1.0, -0.5); // x - x^2/2
        let sq = q.mul(&q);
        assert_eq!(sq.coeff(2), 1.0);
        assert_eq!(sq.coeff(3), -1.0);
        assert_eq!(sq.coeff(4), 0.25);
        // \int_0^1 (x - x^2/2)^2 dx = 1/3 - 1/4 + 1/20
        let expect = 1.0 / 3.0 - 0.25 + 0.05;
        assert!((sq.integral_to(1.0) - expect).abs() < 1e-15);
    }
}
