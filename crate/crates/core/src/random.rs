//! Seeded random operators and states for tests and soundness hosts.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;
use crate::tensor::Tensor;

pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::of_f64(re), T::of_f64(im))
}

fn real_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    Complex::new(T::of_f64(re), T::zero())
}

/// Tensor with independent standard complex Gaussian entries.
pub fn random_tensor<T: Real, R: Rng + ?Sized>(
    outputs: &[usize],
    inputs: &[usize],
    rng: &mut R,
) -> Tensor<T> {
    Tensor::from_fn(outputs, inputs, |_, _| complex_gaussian(rng))
}

/// Normalized random state on the given output legs.
pub fn random_state<T: Real, R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Tensor<T> {
    let t = random_tensor::<T, R>(dims, &[], rng);
    let n = t.norm();
    t.scale(Complex::new(n.recip(), T::zero()))
}

/// Orthonormalizes columns (modified Gram-Schmidt).
fn orthonormal_columns<T: Real>(d: usize, mut cols: Vec<Vec<Complex<T>>>) -> Tensor<T> {
    for j in 0..d {
        for k in 0..j {
            let overlap: Complex<T> = (0..d).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..d {
                let v = cols[k][i] * overlap;
                cols[j][i] = cols[j][i] - v;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        for z in &mut cols[j] {
            *z = z.unscale(norm);
        }
    }
    Tensor::from_fn(&[d], &[d], |o, i| cols[i[0]][o[0]])
}

/// Haar-like random unitary from Gram-Schmidt on Gaussian columns.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Tensor<T> {
    let cols = (0..d).map(|_| (0..d).map(|_| complex_gaussian(rng)).collect()).collect();
    orthonormal_columns(d, cols)
}

/// Random real orthogonal matrix.
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Tensor<T> {
    let cols = (0..d).map(|_| (0..d).map(|_| real_gaussian(rng)).collect()).collect();
    orthonormal_columns(d, cols)
}

/// Symmetric unitary `V·Vᵀ`.
pub fn random_symmetric_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Tensor<T> {
    let v = random_unitary::<T, R>(d, rng);
    v.compose(&v.transpose_cb()).expect("square")
}

/// `ρ = G·G†/Tr(G·G†)` with a complex Gaussian `G`.
pub fn random_density<T: Real, R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Tensor<T> {
    let g = random_tensor::<T, R>(dims, dims, rng);
    let rho = g.compose(&g.dagger()).expect("square");
    let tr = rho.trace().expect("square");
    if tr.is_zero() {
        return rho;
    }
    rho.scale(tr.inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..6 {
            assert!(random_unitary::<f64, _>(d, &mut rng).is_unitary(1e-10));
            let o = random_orthogonal::<f64, _>(d, &mut rng);
            assert!(o.is_unitary(1e-10));
            assert!(o.equal_within(&o.conj(), 0.0).unwrap());
            let s = random_symmetric_unitary::<f64, _>(d, &mut rng);
            assert!(s.is_unitary(1e-10));
            assert!(s.equal_within(&s.transpose_cb(), 1e-12).unwrap());
        }
    }

    #[test]
    fn density_has_unit_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density::<f64, _>(&[3], &mut rng);
        assert!((rho.trace().unwrap() - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rho.equal_within(&rho.dagger(), 1e-12).unwrap());
    }
}
