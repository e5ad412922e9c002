//! Small dense linear algebra on square operators.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{matmul, Tensor};

fn square_size<T: Real>(t: &Tensor<T>) -> Result<usize> {
    if t.rows() != t.cols() {
        return Err(Error::NonSquare);
    }
    Ok(t.rows())
}

/// Eigenvalues of a real symmetric matrix (row-major), ascending.
fn symmetric_eigenvalues<T: Real>(mut a: Vec<T>, n: usize) -> Vec<T> {
    let two = T::one() + T::one();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a[i * n + j] * a[i * n + j]);
        if off <= T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Eigenvalues of a Hermitian operator, ascending.
///
/// Uses the real embedding `[[A, -B], [B, A]]` of `A + iB`, whose spectrum
/// is that of the operator with every eigenvalue doubled.
pub fn hermitian_eigenvalues<T: Real>(op: &Tensor<T>) -> Result<Vec<T>> {
    let n = square_size(op)?;
    let m = 2 * n;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            // symmetrize to absorb rounding in nearly Hermitian input
            let z = (op.at(i, j) + op.at(j, i).conj()).scale(T::of_f64(0.5));
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[i * m + j + n] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(a, m);
    Ok(doubled.chunks(2).map(|p| (p[0] + p[1]) / (T::one() + T::one())).collect())
}

/// Singular values, descending.
pub fn singular_values<T: Real>(op: &Tensor<T>) -> Result<Vec<T>> {
    let (r, c) = (op.rows(), op.cols());
    let adj: Vec<Complex<T>> = (0..c)
        .flat_map(|i| (0..r).map(move |j| (i, j)))
        .map(|(i, j)| op.at(j, i).conj())
        .collect();
    let gram = matmul(&adj, op.data(), c, r, c);
    let gram = Tensor::from_matrix(&[c], &[c], gram)?;
    let mut sv: Vec<T> = hermitian_eigenvalues(&gram)?
        .into_iter()
        .map(|e| e.max(T::zero()).sqrt())
        .collect();
    sv.reverse();
    Ok(sv)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse<T: Real>(op: &Tensor<T>) -> Result<Tensor<T>> {
    let n = square_size(op)?;
    let mut a: Vec<Complex<T>> = op.data().to_vec();
    let mut inv: Vec<Complex<T>> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::zero()
            }
        })
        .collect();
    let scale = op.max_abs().max(T::one());
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                a[x * n + col]
                    .norm()
                    .partial_cmp(&a[y * n + col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot * n + col].norm() <= T::epsilon() * scale * T::of_usize(n) {
            return Err(Error::InvalidParameter("matrix is singular".into()));
        }
        for k in 0..n {
            a.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let p = a[col * n + col].inv();
        for k in 0..n {
            a[col * n + k] = a[col * n + k] * p;
            inv[col * n + k] = inv[col * n + k] * p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                a[row * n + k] = a[row * n + k] - f * a[col * n + k];
                inv[row * n + k] = inv[row * n + k] - f * inv[col * n + k];
            }
        }
    }
    Tensor::from_matrix(&op.output_dims(), &op.input_dims(), inv)
}
