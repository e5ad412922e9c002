//! Dense complex tensors with typed legs.
//!
//! A [`Tensor`] is the value of a diagram: amplitudes are stored row-major as
//! a matrix whose rows enumerate the output legs and whose columns enumerate
//! the input legs, each big-endian over the leg order.

mod network;

pub use network::{contract, contract_in_edge_order, BoundaryLeg, NetworkEdge};

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LegType {
    pub direction: Direction,
    pub dim: usize,
}

impl LegType {
    pub fn output(dim: usize) -> Self {
        Self {
            direction: Direction::Output,
            dim,
        }
    }

    pub fn input(dim: usize) -> Self {
        Self {
            direction: Direction::Input,
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    legs: Vec<LegType>,
    data: Vec<Complex<T>>,
}

pub(crate) fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Writes the big-endian multi-index of `flat` over `dims` into `out`.
pub(crate) fn unravel(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
}

pub(crate) fn ravel(index: &[usize], dims: &[usize]) -> usize {
    index.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn signature_string(outputs: &[usize], inputs: &[usize]) -> String {
    format!("{outputs:?}<-{inputs:?}")
}

impl<T: Real> Tensor<T> {
    pub fn new(legs: Vec<LegType>, data: Vec<Complex<T>>) -> Result<Self> {
        if legs.iter().any(|l| l.dim == 0) {
            return Err(Error::ZeroDimension);
        }
        let first_input = legs
            .iter()
            .position(|l| l.direction == Direction::Input)
            .unwrap_or(legs.len());
        if legs[first_input..]
            .iter()
            .any(|l| l.direction == Direction::Output)
        {
            return Err(Error::LegOrder);
        }
        let expected: usize = legs.iter().map(|l| l.dim).product();
        if expected != data.len() {
            return Err(Error::AmplitudeCount {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { legs, data })
    }

    /// Builds a tensor from row-major matrix data (`rows = Π outputs`, `cols = Π inputs`).
    pub fn from_matrix(outputs: &[usize], inputs: &[usize], data: Vec<Complex<T>>) -> Result<Self> {
        let legs = outputs
            .iter()
            .map(|&d| LegType::output(d))
            .chain(inputs.iter().map(|&d| LegType::input(d)))
            .collect();
        Self::new(legs, data)
    }

    /// Builds a tensor entry by entry from output and input multi-indices.
    pub fn from_fn(
        outputs: &[usize],
        inputs: &[usize],
        mut f: impl FnMut(&[usize], &[usize]) -> Complex<T>,
    ) -> Self {
        let rows = product(outputs);
        let cols = product(inputs);
        let mut out_idx = vec![0; outputs.len()];
        let mut in_idx = vec![0; inputs.len()];
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            unravel(r, outputs, &mut out_idx);
            for c in 0..cols {
                unravel(c, inputs, &mut in_idx);
                data.push(f(&out_idx, &in_idx));
            }
        }
        Self::from_matrix(outputs, inputs, data).expect("from_fn builds consistent shapes")
    }

    pub fn zeros(outputs: &[usize], inputs: &[usize]) -> Self {
        let n = product(outputs) * product(inputs);
        Self::from_matrix(outputs, inputs, vec![Complex::zero(); n])
            .expect("zeros builds consistent shapes")
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = product(dims);
        let mut t = Self::zeros(dims, dims);
        for i in 0..n {
            t.data[i * n + i] = Complex::one();
        }
        t
    }

    pub fn scalar(value: Complex<T>) -> Self {
        Self {
            legs: Vec::new(),
            data: vec![value],
        }
    }

    /// A ket over `dims` with the given amplitudes.
    pub fn state(dims: &[usize], amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::from_matrix(dims, &[], amplitudes)
    }

    pub fn legs(&self) -> &[LegType] {
        &self.legs
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.legs
            .iter()
            .filter(|l| l.direction == Direction::Output)
            .map(|l| l.dim)
            .collect()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.legs
            .iter()
            .filter(|l| l.direction == Direction::Input)
            .map(|l| l.dim)
            .collect()
    }

    pub fn rows(&self) -> usize {
        product(&self.output_dims())
    }

    pub fn cols(&self) -> usize {
        product(&self.input_dims())
    }

    pub fn at(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.cols() + col]
    }

    /// Entry addressed by output and input multi-indices.
    pub fn entry(&self, outputs: &[usize], inputs: &[usize]) -> Complex<T> {
        let r = ravel(outputs, &self.output_dims());
        let c = ravel(inputs, &self.input_dims());
        self.at(r, c)
    }

    pub fn signature(&self) -> String {
        signature_string(&self.output_dims(), &self.input_dims())
    }

    pub fn same_signature(&self, other: &Self) -> bool {
        self.legs == other.legs
    }

    fn require_same_signature(&self, other: &Self) -> Result<()> {
        if self.same_signature(other) {
            Ok(())
        } else {
            Err(Error::SignatureMismatch {
                expected: self.signature(),
                found: other.signature(),
            })
        }
    }

    /// Tensor product: outputs of `self` then `other`, inputs of `self` then `other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.rows(), self.cols());
        let (rb, cb) = (other.rows(), other.cols());
        let mut data = vec![Complex::zero(); ra * rb * ca * cb];
        let cols = ca * cb;
        for i in 0..ra {
            for p in 0..ca {
                let a = self.data[i * ca + p];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rb {
                    let row = i * rb + j;
                    for q in 0..cb {
                        data[row * cols + p * cb + q] = a * other.data[j * cb + q];
                    }
                }
            }
        }
        let mut outputs = self.output_dims();
        outputs.extend(other.output_dims());
        let mut inputs = self.input_dims();
        inputs.extend(other.input_dims());
        Self::from_matrix(&outputs, &inputs, data).expect("kron shapes")
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        let needed = self.input_dims();
        let given = first.output_dims();
        if needed.len() != given.len() {
            return Err(Error::SignatureMismatch {
                expected: format!("{needed:?}"),
                found: format!("{given:?}"),
            });
        }
        if let Some((index, (&left, &right))) = given
            .iter()
            .zip(&needed)
            .enumerate()
            .find(|(_, (a, b))| a != b)
        {
            return Err(Error::DimensionMismatch { index, left, right });
        }
        let (m, k, n) = (self.rows(), self.cols(), first.cols());
        let data = matmul(&self.data, &first.data, m, k, n);
        Self::from_matrix(&self.output_dims(), &first.input_dims(), data)
    }

    /// Hermitian adjoint: inputs and outputs swap, entries conjugate-transposed.
    pub fn dagger(&self) -> Self {
        self.swap_sides(|z| z.conj())
    }

    /// Transpose in the computational basis (no conjugation).
    pub fn transpose_cb(&self) -> Self {
        self.swap_sides(|z| z)
    }

    /// Elementwise complex conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        Self {
            legs: self.legs.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    fn swap_sides(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut data = vec![Complex::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = f(self.data[i * c + j]);
            }
        }
        Self::from_matrix(&self.input_dims(), &self.output_dims(), data).expect("swap shapes")
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            legs: self.legs.clone(),
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_signature(other)?;
        Ok(Self {
            legs: self.legs.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_signature(other)?;
        Ok(Self {
            legs: self.legs.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn trace(&self) -> Result<Complex<T>> {
        let (r, c) = (self.rows(), self.cols());
        if r != c {
            return Err(Error::SignatureMismatch {
                expected: "square operator".into(),
                found: self.signature(),
            });
        }
        Ok((0..r).map(|i| self.data[i * c + i]).fold(Complex::zero(), |a, b| a + b))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.require_same_signature(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm())))
    }

    /// True iff the maximum elementwise absolute difference is at most `tol`.
    pub fn equal_within(&self, other: &Self, tol: T) -> Result<bool> {
        Ok(self.max_abs_diff(other)? <= tol)
    }

    /// Finds `λ` with `self = λ·reference` within `tol`.
    ///
    /// `λ` is read off the largest-magnitude entry of `reference`.
    pub fn proportional_within(&self, reference: &Self, tol: T) -> Result<Option<Complex<T>>> {
        self.require_same_signature(reference)?;
        let (pivot, magnitude) = reference
            .data
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bm), (i, z)| {
                if z.norm() > bm {
                    (i, z.norm())
                } else {
                    (bi, bm)
                }
            });
        if magnitude.is_zero() {
            return Err(Error::ZeroTensor);
        }
        let lambda = self.data[pivot] / reference.data[pivot];
        let ok = self
            .data
            .iter()
            .zip(&reference.data)
            .all(|(&a, &b)| (a - b * lambda).norm() <= tol);
        Ok(ok.then_some(lambda))
    }

    /// Max-norm distance of `U·U†` and `U†·U` from the identity.
    pub fn unitarity_defect(&self) -> T {
        if self.rows() != self.cols() {
            return T::infinity();
        }
        let dag = self.dagger();
        let left = dag.compose(self).expect("square");
        let right = self.compose(&dag).expect("square");
        let eye_in = Self::identity(&self.input_dims());
        let eye_out = Self::identity(&self.output_dims());
        let a = left.max_abs_diff(&eye_in).unwrap_or(T::infinity());
        let b = right.max_abs_diff(&eye_out).unwrap_or(T::infinity());
        a.max(b)
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Re-types the tensor with new leg dimensions of equal total size.
    pub fn reshape(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        Self::from_matrix(outputs, inputs, self.data.clone())
    }

    /// Converts to another float precision.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            legs: self.legs.clone(),
            data: self
                .data
                .iter()
                .map(|z| {
                    Complex::new(
                        U::of_f64(z.re.to_f64().unwrap_or(f64::NAN)),
                        U::of_f64(z.im.to_f64().unwrap_or(f64::NAN)),
                    )
                })
                .collect(),
        }
    }
}

pub(crate) fn matmul<T: Real>(
    a: &[Complex<T>],
    b: &[Complex<T>],
    m: usize,
    k: usize,
    n: usize,
) -> Vec<Complex<T>> {
    let mut out = vec![Complex::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for l in 0..k {
            let a_il = a[i * k + l];
            if a_il.is_zero() {
                continue;
            }
            let b_row = &b[l * n..(l + 1) * n];
            for (o, &bv) in row.iter_mut().zip(b_row) {
                *o = *o + a_il * bv;
            }
        }
    }
    out
}

impl<T: Real> fmt::Display for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tensor {}", self.signature())?;
        let c = self.cols();
        for (i, z) in self.data.iter().enumerate() {
            if z.norm() > T::of_f64(1e-12) {
                writeln!(f, "  [{}, {}] = {} {:+}i", i / c.max(1), i % c.max(1), z.re, z.im)?;
            }
        }
        Ok(())
    }
}
