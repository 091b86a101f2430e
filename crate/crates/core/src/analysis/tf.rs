use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Rational Laplace-domain transfer function with a pure delay,
/// `N(s)/D(s)·e^{-s·delay}`. Coefficients are ascending in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalDelayTF {
    num: Vec<f64>,
    den: Vec<f64>,
    delay_s: f64,
}

impl RationalDelayTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>, delay_s: f64) -> Result<Self> {
        let den = trim(den);
        if den.is_empty() {
            return Err(invalid("den_coeffs", "denominator has no nonzero coefficient"));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(invalid("coeffs", "coefficients must be finite"));
        }
        if !delay_s.is_finite() {
            return Err(invalid("delay_s", "delay must be finite"));
        }
        Ok(Self {
            num: trim(num),
            den,
            delay_s,
        })
    }

    pub fn constant(k: f64) -> Self {
        Self::new(vec![k], vec![1.0], 0.0).expect("constant transfer function")
    }

    pub fn delay(delay_s: f64) -> Self {
        Self::new(vec![1.0], vec![1.0], delay_s).expect("pure delay")
    }

    pub fn num_coeffs(&self) -> &[f64] {
        &self.num
    }

    pub fn den_coeffs(&self) -> &[f64] {
        &self.den
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_s
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let n = horner(&self.num, s);
        let d = horner(&self.den, s);
        let ratio = n / d;
        if self.delay_s == 0.0 {
            ratio
        } else {
            ratio * (-s * self.delay_s).exp()
        }
    }
}

fn trim(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    coeffs
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// A transfer function built by composing rational-with-delay blocks.
///
/// Compositions are kept as an expression tree and evaluated pointwise, so
/// sums of blocks with different delays stay exact.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferFunction {
    Rational(RationalDelayTF),
    Sum(Box<TransferFunction>, Box<TransferFunction>),
    Difference(Box<TransferFunction>, Box<TransferFunction>),
    Product(Box<TransferFunction>, Box<TransferFunction>),
    Quotient(Box<TransferFunction>, Box<TransferFunction>),
    Negated(Box<TransferFunction>),
}

impl TransferFunction {
    pub fn constant(k: f64) -> Self {
        Self::Rational(RationalDelayTF::constant(k))
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            Self::Rational(r) => r.eval(s),
            Self::Sum(a, b) => a.eval(s) + b.eval(s),
            Self::Difference(a, b) => a.eval(s) - b.eval(s),
            Self::Product(a, b) => a.eval(s) * b.eval(s),
            Self::Quotient(a, b) => a.eval(s) / b.eval(s),
            Self::Negated(a) => -a.eval(s),
        }
    }

    /// Evaluates on the imaginary axis at `freq_hz`.
    pub fn eval_hz(&self, freq_hz: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, std::f64::consts::TAU * freq_hz))
    }

    /// Heuristic test for an identically vanishing function: zero (to
    /// rounding) at a spread of probe points in the s-plane.
    pub fn is_identically_zero(&self) -> bool {
        const PROBES: [(f64, f64); 8] = [
            (0.0, 0.0),
            (0.0, 1.7),
            (0.3, 31.0),
            (-2.0, 517.0),
            (11.0, 4.9e3),
            (0.0, 7.3e4),
            (1.3e3, 2.2e6),
            (0.0, 9.1e8),
        ];
        PROBES.iter().all(|&(re, im)| {
            let v = self.eval(Complex64::new(re, im));
            v.is_finite() && v.norm() <= 1e-13
        })
    }
}

impl From<RationalDelayTF> for TransferFunction {
    fn from(r: RationalDelayTF) -> Self {
        Self::Rational(r)
    }
}

impl From<f64> for TransferFunction {
    fn from(k: f64) -> Self {
        Self::constant(k)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl<T: Into<TransferFunction>> $trait<T> for TransferFunction {
            type Output = TransferFunction;
            fn $method(self, rhs: T) -> TransferFunction {
                TransferFunction::$variant(Box::new(self), Box::new(rhs.into()))
            }
        }

        impl<T: Into<TransferFunction>> $trait<T> for &TransferFunction {
            type Output = TransferFunction;
            fn $method(self, rhs: T) -> TransferFunction {
                TransferFunction::$variant(Box::new(self.clone()), Box::new(rhs.into()))
            }
        }

        impl $trait<TransferFunction> for f64 {
            type Output = TransferFunction;
            fn $method(self, rhs: TransferFunction) -> TransferFunction {
                TransferFunction::$variant(Box::new(self.into()), Box::new(rhs))
            }
        }
    };
}

binary_op!(Add, add, Sum);
binary_op!(Sub, sub, Difference);
binary_op!(Mul, mul, Product);
binary_op!(Div, div, Quotient);

impl From<&TransferFunction> for TransferFunction {
    fn from(t: &TransferFunction) -> Self {
        t.clone()
    }
}

impl Neg for TransferFunction {
    type Output = TransferFunction;
    fn neg(self) -> TransferFunction {
        TransferFunction::Negated(Box::new(self))
    }
}
