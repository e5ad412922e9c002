//! Complete sets of morphisms, quantum channels and the cup checker.

use std::fmt;

use num_complex::Complex;
use serde::Serialize;

use crate::diagram::{Diagram, NodeId};
use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, GeneratorSpec};
use crate::linalg::{hermitian_eigenvalues, singular_values};
use crate::scalar::{modulo, Real, ScalarFactor};
use crate::tensor::Tensor;

/// Bell outcome `(a, b)` on a cap of dimension `dim`.
///
/// `⟨B_ab| = (1/√d)·ε∘(Z^{-a} ⊗ X^{-b})`, so on a teleported wire the
/// branch map is `X^b·Z^{-a}` up to `1/√d`, undone by `Z^a·X^{-b}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BellCorrection {
    pub dim: usize,
    pub a: usize,
    pub b: usize,
}

impl BellCorrection {
    /// Exponents `(z, x)` of the correction `Z^z·X^x` (X acts first).
    pub fn teleport_exponents(&self) -> (usize, usize) {
        (self.a, modulo(-(self.b as i64), self.dim))
    }

    /// Combines with a later outcome on the same wire, exponents mod d.
    pub fn then(&self, other: &BellCorrection) -> BellCorrection {
        BellCorrection {
            dim: self.dim,
            a: (self.a + other.a) % self.dim,
            b: (self.b + other.b) % self.dim,
        }
    }
}

impl fmt::Display for BellCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

#[derive(Clone, Debug)]
pub struct Branch<T> {
    pub label: String,
    pub tensor: Tensor<T>,
    pub diagram: Option<Diagram<T>>,
    pub corrections: Vec<BellCorrection>,
}

impl<T: Real> Branch<T> {
    pub fn new(label: impl Into<String>, tensor: Tensor<T>) -> Self {
        Self {
            label: label.into(),
            tensor,
            diagram: None,
            corrections: Vec::new(),
        }
    }
}

/// A labelled set of morphisms sharing one signature.
#[derive(Clone, Debug)]
pub struct KrausSet<T> {
    branches: Vec<Branch<T>>,
}

impl<T: Real> KrausSet<T> {
    pub fn new(branches: Vec<Branch<T>>) -> Result<Self> {
        let first = branches.first().ok_or(Error::EmptySet)?;
        for b in &branches[1..] {
            if !b.tensor.same_signature(&first.tensor) {
                return Err(Error::SignatureMismatch {
                    expected: first.tensor.signature(),
                    found: b.tensor.signature(),
                });
            }
        }
        Ok(Self { branches })
    }

    pub fn from_tensors(items: impl IntoIterator<Item = (String, Tensor<T>)>) -> Result<Self> {
        Self::new(items.into_iter().map(|(l, t)| Branch::new(l, t)).collect())
    }

    /// Evaluates each diagram and keeps it alongside its tensor.
    pub fn from_diagrams(items: impl IntoIterator<Item = (String, Diagram<T>)>) -> Result<Self> {
        let branches = items
            .into_iter()
            .map(|(label, d)| {
                Ok(Branch {
                    label,
                    tensor: d.evaluate()?,
                    diagram: Some(d),
                    corrections: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(branches)
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.branches[0].tensor.output_dims()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.branches[0].tensor.input_dims()
    }

    pub fn get(&self, label: &str) -> Option<&Branch<T>> {
        self.branches.iter().find(|b| b.label == label)
    }

    /// Multiplies every branch tensor by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.tensor = b.tensor.scale(factor);
        }
        out
    }

    /// `max |Σ f†f − I|`.
    pub fn completeness_residual(&self) -> T {
        let dims = self.input_dims();
        let mut sum = Tensor::zeros(&dims, &dims);
        for b in &self.branches {
            let ff = b.tensor.dagger().compose(&b.tensor).expect("shared signature");
            sum = sum.add(&ff).expect("shared signature");
        }
        sum.max_abs_diff(&Tensor::identity(&dims)).expect("square")
    }

    pub fn is_complete(&self, tol: T) -> (bool, T) {
        let r = self.completeness_residual();
        (r <= tol, r)
    }

    fn ensure_complete(&self) -> Result<()> {
        let (ok, r) = self.is_complete(T::default_tolerance());
        if ok {
            Ok(())
        } else {
            Err(Error::Incomplete { residual: r.to_f64().unwrap_or(f64::NAN) })
        }
    }

    /// `ρ ↦ Σ f ρ f†`.
    pub fn apply(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        self.ensure_complete()?;
        if self.input_dims() != rho.dims() {
            return Err(Error::SignatureMismatch {
                expected: rho.tensor().signature(),
                found: self.branches[0].tensor.signature(),
            });
        }
        let dims = self.output_dims();
        let mut out = Tensor::zeros(&dims, &dims);
        for b in &self.branches {
            let term = b.tensor.compose(&rho.tensor().compose(&b.tensor.dagger())?)?;
            out = out.add(&term)?;
        }
        DensityOperator::new(out)
    }

    /// `{f_i ⊗ g_j}`.
    pub fn tensor_sets(&self, other: &Self) -> Result<Self> {
        self.ensure_complete()?;
        other.ensure_complete()?;
        let mut branches = Vec::with_capacity(self.len() * other.len());
        for f in &self.branches {
            for g in &other.branches {
                let mut b = Branch::new(format!("{}⊗{}", f.label, g.label), f.tensor.kron(&g.tensor));
                b.corrections = f.corrections.iter().chain(&g.corrections).copied().collect();
                branches.push(b);
            }
        }
        let out = Self::new(branches)?;
        debug_assert!(out.is_complete(T::spectral_tolerance()).0);
        Ok(out)
    }

    /// `{g_j ∘ f_i}` where `self` holds the `f_i`.
    pub fn compose_sets(&self, then: &Self) -> Result<Self> {
        self.ensure_complete()?;
        then.ensure_complete()?;
        let mut branches = Vec::with_capacity(self.len() * then.len());
        for f in &self.branches {
            for g in &then.branches {
                let mut b = Branch::new(format!("{}∘{}", g.label, f.label), g.tensor.compose(&f.tensor)?);
                b.corrections = f.corrections.iter().chain(&g.corrections).copied().collect();
                branches.push(b);
            }
        }
        let out = Self::new(branches)?;
        debug_assert!(out.is_complete(T::spectral_tolerance()).0);
        Ok(out)
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator<T> {
    tensor: Tensor<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(tensor: Tensor<T>) -> Result<Self> {
        if tensor.output_dims() != tensor.input_dims() {
            return Err(Error::NonSquare);
        }
        let tol = T::default_tolerance();
        let herm = tensor.max_abs_diff(&tensor.dagger())?;
        if herm > tol {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {:e})", herm.to_f64().unwrap_or(f64::NAN))));
        }
        let tr = tensor.trace()?;
        if (tr - Complex::new(T::one(), T::zero())).norm() > tol {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&tensor)?.first().copied().unwrap_or(T::zero());
        if min < -tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {:e}", min.to_f64().unwrap_or(f64::NAN))));
        }
        Ok(Self { tensor })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state.
    pub fn pure(psi: &Tensor<T>) -> Result<Self> {
        if !psi.input_dims().is_empty() {
            return Err(Error::NonSquare);
        }
        Self::new(psi.compose(&psi.dagger())?)
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn dims(&self) -> Vec<usize> {
        self.tensor.output_dims()
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.tensor
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Tensor<T>) -> Result<Self> {
        Self::new(u.compose(&self.tensor.compose(&u.dagger())?)?)
    }
}

/// Splits the cap `cap_node` into the `d²` Bell outcomes.
///
/// Branch `(a, b)` replaces the cap by `√d·⟨B_ab|`, so branch `(0, 0)` is the
/// original diagram and the branch tensors scaled by `1/√d` sum to a
/// complete set whenever the rest of the diagram is an isometry.
pub fn expand_cap_to_bell_branches<T: Real>(diag: &Diagram<T>, cap_node: NodeId) -> Result<KrausSet<T>> {
    let spec = diag.node(cap_node).ok_or(Error::NotACap(cap_node))?;
    let dim = match (&spec.kind, spec.adjoint) {
        (GeneratorKind::Cap { dim }, false) | (GeneratorKind::Cup { dim }, true) => *dim,
        _ => return Err(Error::NotACap(cap_node)),
    };
    let root = ScalarFactor::sqrt_power(dim, 1);
    let mut branches = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut d = diag.clone();
            d.insert_node(cap_node, GeneratorSpec::bell_effect(dim, a, b));
            d.scalar = d.scalar.mul(&root);
            branches.push(Branch {
                label: format!("{a},{b}"),
                tensor: d.evaluate()?,
                diagram: Some(d),
                corrections: vec![BellCorrection { dim, a, b }],
            });
        }
    }
    KrausSet::new(branches)
}

#[derive(Clone, Debug)]
pub struct CupEquivalence<T> {
    pub is_cup: bool,
    /// `U` with `ψ = (U ⊗ I)|∪⟩`, when `is_cup`.
    pub local_unitary: Option<Tensor<T>>,
    pub singular_values: Vec<T>,
}

impl<T: Real> CupEquivalence<T> {
    /// For `ψ = (U⊗I)|∪⟩`, the `g` with `(f⊗I)ψ = (I⊗g)ψ`, namely
    /// `(U†fU)ᵀ`.
    pub fn slide_partner(&self, f: &Tensor<T>) -> Option<Tensor<T>> {
        let u = self.local_unitary.as_ref()?;
        let inner = u.dagger().compose(&f.compose(u).ok()?).ok()?;
        Some(inner.transpose_cb())
    }
}

/// Decides whether a two-qudit state is a local unitary rotation of the
/// normalized cup, and recovers the rotation.
pub fn cup_equivalence<T: Real>(psi: &Tensor<T>) -> Result<CupEquivalence<T>> {
    let outs = psi.output_dims();
    if !psi.input_dims().is_empty() || outs.len() != 2 || outs[0] != outs[1] {
        return Err(Error::NonSquare);
    }
    let norm = psi.norm();
    if (norm - T::one()).abs() > T::default_tolerance() {
        return Err(Error::NotNormalized { norm: norm.to_f64().unwrap_or(f64::NAN) });
    }
    let d = outs[0];
    let tol = T::spectral_tolerance();
    let c = psi.reshape(&[d], &[d])?;
    let sv = singular_values(&c)?;
    let target = T::one() / T::of_usize(d).sqrt();
    let flat = sv.iter().all(|s| (*s - target).abs() <= tol);
    let u = c.scale(Complex::new(T::of_usize(d).sqrt(), T::zero()));
    let symmetric = u.max_abs_diff(&u.transpose_cb())? <= tol;
    let is_cup = flat && symmetric && u.unitarity_defect() <= tol;
    Ok(CupEquivalence {
        is_cup,
        local_unitary: is_cup.then_some(u),
        singular_values: sv,
    })
}

/// Total probability `Tr(f ρ f†)` of one branch.
pub fn branch_probability<T: Real>(f: &Tensor<T>, rho: &Tensor<T>) -> Result<T> {
    let t = f.compose(&rho.compose(&f.dagger())?)?.trace()?;
    Ok(t.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators as gen;
    use crate::random::{random_density, random_state, random_symmetric_unitary, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn completeness_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary::<f64, _>(3, &mut rng);
        let set = KrausSet::from_tensors([("U".to_string(), u)]).unwrap();
        assert!(set.is_complete(1e-9).0);

        let psi = random_state::<f64, _>(&[3], &mut rng);
        let set = KrausSet::from_tensors([("psi".to_string(), psi.clone())]).unwrap();
        assert!(set.is_complete(1e-9).0);
        let set = KrausSet::from_tensors([("psi".to_string(), psi.scale(c(0.9)))]).unwrap();
        assert!(!set.is_complete(1e-9).0);

        let d = 3;
        let bell = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| {
            (format!("{a},{b}"), gen::bell_state::<f64>(d, a, b).unwrap().dagger())
        });
        assert!(KrausSet::from_tensors(bell).unwrap().is_complete(1e-9).0);
    }

    #[test]
    fn residual_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fs: Vec<Tensor<f64>> = (0..3).map(|_| crate::random::random_tensor(&[2], &[2], &mut rng)).collect();
        let set = KrausSet::from_tensors(fs.iter().enumerate().map(|(i, f)| (i.to_string(), f.clone()))).unwrap();
        let mut sum = [[c(0.0); 2]; 2];
        for f in &fs {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        sum[i][j] += f.at(k, i).conj() * f.at(k, j);
                    }
                }
            }
        }
        let brute = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (sum[i][j] - if i == j { c(1.0) } else { c(0.0) }).norm())
            .fold(0.0, f64::max);
        assert!((set.completeness_residual() - brute).abs() < 1e-12);
    }

    #[test]
    fn mixed_signatures_are_rejected() {
        let a = Tensor::<f64>::identity(&[2]);
        let b = Tensor::<f64>::identity(&[3]);
        assert!(KrausSet::from_tensors([("a".into(), a), ("b".into(), b)]).is_err());
        assert!(matches!(KrausSet::<f64>::new(vec![]), Err(Error::EmptySet)));
    }

    #[test]
    fn dephasing_keeps_the_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityOperator::new(random_density::<f64, _>(&[2], &mut rng)).unwrap();
        let set = KrausSet::from_tensors((0..2).map(|k| {
            let e = gen::basis_state::<f64>(2, k).unwrap();
            (k.to_string(), e.compose(&e.dagger()).unwrap())
        }))
        .unwrap();
        let out = set.apply(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { rho.tensor().at(i, j) } else { c(0.0) };
                assert!((out.tensor().at(i, j) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn density_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density::<f64, _>(&[3], &mut rng);
        assert!(DensityOperator::new(rho.clone()).is_ok());
        assert!(DensityOperator::new(rho.scale(c(2.0))).is_err());
        let neg = Tensor::from_matrix(&[2], &[2], vec![c(1.5), c(0.0), c(0.0), c(-0.5)]).unwrap();
        assert!(matches!(DensityOperator::new(neg), Err(Error::InvalidDensity(_))));
        let skew = Tensor::from_matrix(&[2], &[2], vec![c(0.5), c(0.3), c(0.0), c(0.5)]).unwrap();
        assert!(DensityOperator::new(skew).is_err());
        assert!(matches!(DensityOperator::new(Tensor::<f64>::zeros(&[2], &[3])), Err(Error::NonSquare)));
    }

    #[test]
    fn products_of_sets_stay_complete() {
        let d = 2;
        let bell = || {
            KrausSet::from_tensors((0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| {
                (format!("{a},{b}"), gen::bell_state::<f64>(d, a, b).unwrap().dagger())
            }))
            .unwrap()
        };
        let id = KrausSet::from_tensors([("I".to_string(), Tensor::identity(&[d]))]).unwrap();
        let t = bell().tensor_sets(&id).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.is_complete(1e-9).0);

        let pairs = (0..d).flat_map(|a| (0..d).map(move |b| (a, b)));
        let paulis = KrausSet::from_tensors(pairs.map(|(a, b)| {
            let z = gen::z_pow::<f64>(d, a as i64).unwrap();
            let x = gen::x_pow::<f64>(d, b as i64).unwrap();
            (format!("{a},{b}"), z.compose(&x).unwrap().scale(c(0.5)))
        }))
        .unwrap();
        let composed = paulis.compose_sets(&paulis).unwrap();
        assert_eq!(composed.len(), 16);
        assert!(composed.is_complete(1e-9).0);
    }

    #[test]
    fn cap_expansion() {
        for d in [2, 3] {
            let mut diag = Diagram::<f64>::empty();
            let cap = diag.add_node(GeneratorSpec::cap(d));
            let i0 = diag.add_input(d);
            let i1 = diag.add_input(d);
            diag.connect(crate::diagram::Source::Input(i0), crate::diagram::Sink::node(cap, 0)).unwrap();
            diag.connect(crate::diagram::Source::Input(i1), crate::diagram::Sink::node(cap, 1)).unwrap();
            let set = expand_cap_to_bell_branches(&diag, cap).unwrap();
            assert_eq!(set.len(), d * d);
            let first = set.get("0,0").unwrap();
            assert!(first.tensor.equal_within(&gen::cap(d).unwrap(), 1e-12).unwrap());
            let scaled = set.scaled(c(1.0 / (d as f64).sqrt()));
            assert!(scaled.is_complete(1e-9).0);
            assert!(matches!(expand_cap_to_bell_branches(&diag, 99), Err(Error::NotACap(99))));
        }
    }

    #[test]
    fn bell_costates_factor_through_the_cap() {
        for d in 2..=5 {
            for a in 0..d {
                for b in 0..d {
                    let za = gen::z_pow::<f64>(d, -(a as i64)).unwrap();
                    let xb = gen::x_pow::<f64>(d, -(b as i64)).unwrap();
                    let rhs = gen::cap::<f64>(d)
                        .unwrap()
                        .compose(&za.kron(&xb))
                        .unwrap()
                        .scale(c(1.0 / (d as f64).sqrt()));
                    let lhs = gen::bell_state::<f64>(d, a, b).unwrap().dagger();
                    assert!(lhs.equal_within(&rhs, 1e-12).unwrap());
                }
            }
        }
    }

    #[test]
    fn cup_checker() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 3;
        let cup = gen::normalized_cup::<f64>(d).unwrap();
        let r = cup_equivalence(&cup).unwrap();
        assert!(r.is_cup);
        assert!(r.local_unitary.unwrap().equal_within(&Tensor::identity(&[d]), 1e-9).unwrap());

        let u = random_symmetric_unitary::<f64, _>(d, &mut rng);
        let psi = u.kron(&Tensor::identity(&[d])).compose(&cup).unwrap();
        let r = cup_equivalence(&psi).unwrap();
        assert!(r.is_cup);
        assert!(r.local_unitary.as_ref().unwrap().equal_within(&u, 1e-9).unwrap());
        let f = crate::random::random_tensor::<f64, _>(&[d], &[d], &mut rng);
        let g = r.slide_partner(&f).unwrap();
        let left = f.kron(&Tensor::identity(&[d])).compose(&psi).unwrap();
        let right = Tensor::identity(&[d]).kron(&g).compose(&psi).unwrap();
        assert!(left.equal_within(&right, 1e-9).unwrap());

        let zz = gen::basis_state::<f64>(d, 0).unwrap().kron(&gen::basis_state(d, 0).unwrap());
        let r = cup_equivalence(&zz).unwrap();
        assert!(!r.is_cup);
        assert!((r.singular_values[0] - 1.0).abs() < 1e-9);

        assert!(matches!(cup_equivalence(&Tensor::<f64>::identity(&[d])), Err(Error::NonSquare)));
        assert!(matches!(cup_equivalence(&cup.scale(c(2.0))), Err(Error::NotNormalized { .. })));
    }
}
