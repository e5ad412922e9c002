//! Scalar types the numerical core is generic over.

use std::collections::BTreeMap;
use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Real field underlying the complex amplitudes (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Elementwise comparison tolerance appropriate for the precision.
    fn default_tolerance() -> Self;

    /// Looser tolerance used for spectral quantities (singular values, eigenvalues).
    fn spectral_tolerance() -> Self;

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in float")
    }

    fn of_f64(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 fits in float")
    }
}

impl Real for f64 {
    fn default_tolerance() -> Self {
        1e-9
    }

    fn spectral_tolerance() -> Self {
        1e-6
    }
}

impl Real for f32 {
    fn default_tolerance() -> Self {
        1e-4
    }

    fn spectral_tolerance() -> Self {
        1e-3
    }
}

/// `e^{i 2π k / d}` with `k` reduced modulo `d`.
pub fn root_of_unity<T: Real>(k: i64, d: usize) -> Complex<T> {
    let k = k.rem_euclid(d as i64) as usize;
    let angle = T::TAU() * T::of_usize(k) / T::of_usize(d);
    Complex::new(angle.cos(), angle.sin())
}

/// Reduces an exponent or basis label modulo `d` into `0..d`.
pub fn modulo(x: i64, d: usize) -> usize {
    x.rem_euclid(d as i64) as usize
}

/// Exact bookkeeping of a global factor `coeff · Π_d d^{k_d / 2}`.
///
/// Rewrite rules deposit powers of `√d`; keeping the exponents as integers
/// means a long rewrite trace never accumulates rounding in those factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct ScalarFactor<T> {
    /// dimension → exponent `k` of `√dimension`
    pub root_powers: BTreeMap<usize, i32>,
    pub coeff: Complex<T>,
}

impl<T: Real> Default for ScalarFactor<T> {
    fn default() -> Self {
        Self::one()
    }
}

impl<T: Real> ScalarFactor<T> {
    pub fn one() -> Self {
        Self {
            root_powers: BTreeMap::new(),
            coeff: Complex::new(T::one(), T::zero()),
        }
    }

    pub fn from_complex(coeff: Complex<T>) -> Self {
        Self {
            root_powers: BTreeMap::new(),
            coeff,
        }
    }

    /// `(√d)^k`
    pub fn sqrt_power(d: usize, k: i32) -> Self {
        let mut s = Self::one();
        s.push_root(d, k);
        s
    }

    fn push_root(&mut self, d: usize, k: i32) {
        if d <= 1 || k == 0 {
            return;
        }
        let e = self.root_powers.entry(d).or_insert(0);
        *e += k;
        if *e == 0 {
            self.root_powers.remove(&d);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&d, &k) in &other.root_powers {
            out.push_root(d, k);
        }
        out.coeff = out.coeff * other.coeff;
        out
    }

    pub fn inverse(&self) -> Self {
        Self {
            root_powers: self.root_powers.iter().map(|(&d, &k)| (d, -k)).collect(),
            coeff: self.coeff.inv(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            root_powers: self.root_powers.clone(),
            coeff: self.coeff.conj(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.root_powers.is_empty() && self.coeff == Complex::new(T::one(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.coeff.re.is_finite() && self.coeff.im.is_finite()
    }

    pub fn value(&self) -> Complex<T> {
        let mut v = self.coeff;
        for (&d, &k) in &self.root_powers {
            v = v.scale(T::of_usize(d).sqrt().powi(k));
        }
        v
    }
}

impl<T: Real> Display for ScalarFactor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.coeff != Complex::new(T::one(), T::zero()) || self.root_powers.is_empty() {
            parts.push(format!("({}{:+}i)", self.coeff.re, self.coeff.im));
        }
        for (d, k) in &self.root_powers {
            parts.push(format!("√{d}^{k}"));
        }
        write!(f, "{}", parts.join("·"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity_wrap() {
        let w: Complex<f64> = root_of_unity(-1, 3);
        let v: Complex<f64> = root_of_unity(2, 3);
        assert!((w - v).norm() < 1e-15);
        let one: Complex<f64> = root_of_unity(5, 5);
        assert!((one - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_factor_powers_cancel_exactly() {
        let a = ScalarFactor::<f64>::sqrt_power(3, 1);
        let b = ScalarFactor::<f64>::sqrt_power(3, -1);
        assert!(a.mul(&b).is_one());
        let c = ScalarFactor::<f64>::sqrt_power(2, 3);
        assert!((c.value().re - 8f64.sqrt()).abs() < 1e-14);
        assert!(c.mul(&c.inverse()).is_one());
    }
}
