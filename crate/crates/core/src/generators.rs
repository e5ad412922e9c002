//! Named gates, states, compact structures and symmetric dots.
//!
//! Every constructor returns a [`Tensor`] in the computational basis with
//! big-endian multi-qudit indexing. [`GeneratorSpec`] is the symbolic
//! counterpart stored on diagram nodes.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{modulo, root_of_unity, Real};
use crate::tensor::Tensor;

fn one<T: Real>() -> Complex<T> {
    Complex::one()
}

fn zero<T: Real>() -> Complex<T> {
    Complex::zero()
}

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn require_gate_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "gate dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn require_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(())
}

fn require_index(name: &str, k: usize, d: usize) -> Result<()> {
    if k >= d {
        return Err(Error::InvalidParameter(format!(
            "{name} = {k} out of range for dimension {d}"
        )));
    }
    Ok(())
}

/// Discrete Fourier transform `H = d^{-1/2} Σ_ab e^{i2πab/d} |a⟩⟨b|`.
pub fn hadamard<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    let norm = T::of_usize(d).sqrt().recip();
    Ok(Tensor::from_fn(&[d], &[d], |o, i| {
        root_of_unity::<T>((o[0] * i[0]) as i64, d).scale(norm)
    }))
}

/// Modular negation `|k⟩ ↦ |⊖k⟩`.
pub fn neg<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    Ok(permutation(d, |k| modulo(-(k as i64), d)))
}

/// `Z^a = Σ_k e^{i2πak/d} |k⟩⟨k|`.
pub fn z_pow<T: Real>(d: usize, a: i64) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    Ok(Tensor::from_fn(&[d], &[d], |o, i| {
        if o[0] == i[0] {
            root_of_unity(a * o[0] as i64, d)
        } else {
            zero()
        }
    }))
}

/// `X^b = Σ_k |k⊕b⟩⟨k|`.
pub fn x_pow<T: Real>(d: usize, b: i64) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    Ok(permutation(d, |k| modulo(k as i64 + b, d)))
}

fn permutation<T: Real>(d: usize, image: impl Fn(usize) -> usize) -> Tensor<T> {
    Tensor::from_fn(&[d], &[d], |o, i| if o[0] == image(i[0]) { one() } else { zero() })
}

/// `ADD = Σ_xy |x, y⊕x⟩⟨x, y|`.
pub fn add<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    Ok(two_qudit_permutation(d, |x, y| (x, (x + y) % d)))
}

/// `NADD = NEG₂·ADD = Σ_xy |x, ⊖x⊖y⟩⟨x, y|`.
pub fn nadd<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_gate_dim(d)?;
    Ok(two_qudit_permutation(d, |x, y| {
        (x, modulo(-(x as i64) - y as i64, d))
    }))
}

fn two_qudit_permutation<T: Real>(
    d: usize,
    image: impl Fn(usize, usize) -> (usize, usize),
) -> Tensor<T> {
    Tensor::from_fn(&[d, d], &[d, d], |o, i| {
        if (o[0], o[1]) == image(i[0], i[1]) {
            one()
        } else {
            zero()
        }
    })
}

/// Braiding `SWAP_{A,B} = Σ_ab |ba⟩⟨ab|` from `A⊗B` to `B⊗A`.
pub fn swap<T: Real>(first: usize, second: usize) -> Result<Tensor<T>> {
    require_dim(first)?;
    require_dim(second)?;
    Ok(Tensor::from_fn(&[second, first], &[first, second], |o, i| {
        if o[0] == i[1] && o[1] == i[0] {
            one()
        } else {
            zero()
        }
    }))
}

pub fn basis_state<T: Real>(d: usize, k: usize) -> Result<Tensor<T>> {
    require_dim(d)?;
    require_index("basis index", k, d)?;
    Ok(Tensor::from_fn(&[d], &[], |o, _| if o[0] == k { one() } else { zero() }))
}

/// `|+⟩ = H|0⟩ = d^{-1/2} Σ_i |i⟩`.
pub fn plus_state<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_dim(d)?;
    let norm = T::of_usize(d).sqrt().recip();
    Ok(Tensor::from_fn(&[d], &[], |_, _| real(norm)))
}

/// `|B_{a,b}⟩ = d^{-1/2} Σ_k e^{i2πak/d} |k, k⊕b⟩`.
pub fn bell_state<T: Real>(d: usize, a: usize, b: usize) -> Result<Tensor<T>> {
    require_dim(d)?;
    require_index("Bell label a", a, d)?;
    require_index("Bell label b", b, d)?;
    let norm = T::of_usize(d).sqrt().recip();
    Ok(Tensor::from_fn(&[d, d], &[], |o, _| {
        if o[1] == (o[0] + b) % d {
            root_of_unity::<T>((a * o[0]) as i64, d).scale(norm)
        } else {
            zero()
        }
    }))
}

/// Unit `η = Σ_k |kk⟩`.
pub fn cup<T: Real>(d: usize) -> Result<Tensor<T>> {
    require_dim(d)?;
    Ok(Tensor::from_fn(&[d, d], &[], |o, _| {
        if o[0] == o[1] {
            one()
        } else {
            zero()
        }
    }))
}

/// Counit `ε = η†`.
pub fn cap<T: Real>(d: usize) -> Result<Tensor<T>> {
    Ok(cup::<T>(d)?.dagger())
}

pub fn normalized_cup<T: Real>(d: usize) -> Result<Tensor<T>> {
    Ok(cup::<T>(d)?.scale(real(T::of_usize(d).sqrt().recip())))
}

pub fn normalized_cap<T: Real>(d: usize) -> Result<Tensor<T>> {
    Ok(normalized_cup::<T>(d)?.dagger())
}

/// `n`-fold tensor power; the zero-fold power is the scalar 1.
pub fn tensor_power<T: Real>(t: &Tensor<T>, n: usize) -> Tensor<T> {
    (0..n).fold(Tensor::scalar(one()), |acc, _| acc.kron(t))
}

fn conjugate_by_color<T: Real>(
    plain: Tensor<T>,
    inputs: usize,
    outputs: usize,
    color: Option<&Tensor<T>>,
) -> Tensor<T> {
    match color {
        None => plain,
        Some(u) => {
            let left = tensor_power(u, outputs);
            let right = tensor_power(&u.dagger(), inputs);
            left.compose(&plain)
                .and_then(|t| t.compose(&right))
                .expect("color dimensions checked by caller")
        }
    }
}

fn check_color<T: Real>(d: usize, color: Option<&Tensor<T>>) -> Result<()> {
    if let Some(u) = color {
        if u.output_dims() != [d] || u.input_dims() != [d] {
            return Err(Error::InvalidParameter(format!(
                "color must be a {d}x{d} operator, got {}",
                u.signature()
            )));
        }
        let defect = u.unitarity_defect();
        if defect > T::default_tolerance() {
            return Err(Error::NotUnitary {
                deviation: defect.to_f64().unwrap_or(f64::INFINITY),
            });
        }
    }
    Ok(())
}

/// `COPY^{m→n} = Σ_k |k…k⟩⟨k…k|`, conjugated by `U^{⊗n} · U^{†⊗m}` when colored.
pub fn copy_dot<T: Real>(
    d: usize,
    inputs: usize,
    outputs: usize,
    color: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    require_dim(d)?;
    check_color(d, color)?;
    let plain = Tensor::from_fn(&vec![d; outputs], &vec![d; inputs], |o, i| {
        let k = o.first().or(i.first()).copied().unwrap_or(0);
        if o.iter().chain(i).all(|&x| x == k) {
            one()
        } else {
            zero()
        }
    });
    // the empty dot has no index to collapse: Σ_k 1 = d
    let plain = if inputs + outputs == 0 {
        Tensor::scalar(real(T::of_usize(d)))
    } else {
        plain
    };
    Ok(conjugate_by_color(plain, inputs, outputs, color))
}

/// `PLUS^{m→n} = d^{-(m+n-2)/2} Σ δ(Σr ⊕ Σs, 0) |s⟩⟨r|` from its closed form.
pub fn plus_dot<T: Real>(
    d: usize,
    inputs: usize,
    outputs: usize,
    color: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    require_dim(d)?;
    check_color(d, color)?;
    let exponent = -((inputs + outputs) as i32 - 2);
    let prefactor = T::of_usize(d).sqrt().powi(exponent);
    let plain = Tensor::from_fn(&vec![d; outputs], &vec![d; inputs], |o, i| {
        let total: usize = o.iter().chain(i).sum();
        if total.is_multiple_of(d) {
            real(prefactor)
        } else {
            zero()
        }
    });
    Ok(conjugate_by_color(plain, inputs, outputs, color))
}

/// `PLUS^{m→n}` built as `H^{⊗n} · COPY^{m→n} · H^{⊗m}`.
pub fn plus_dot_via_fourier<T: Real>(d: usize, inputs: usize, outputs: usize) -> Result<Tensor<T>> {
    let copy = copy_dot::<T>(d, inputs, outputs, None)?;
    if d == 1 {
        return Ok(copy);
    }
    let h = hadamard::<T>(d)?;
    tensor_power(&h, outputs)
        .compose(&copy)?
        .compose(&tensor_power(&h, inputs))
}

/// A symmetric dot: kind-independent order, dimension and color.
#[derive(Clone, Debug, PartialEq)]
pub struct Dot<T> {
    pub dim: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Basis change `U_B` from the computational basis; `None` is computational.
    pub color: Option<Tensor<T>>,
}

impl<T: Real> Dot<T> {
    pub fn new(dim: usize, inputs: usize, outputs: usize) -> Self {
        Self {
            dim,
            inputs,
            outputs,
            color: None,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            dim: self.dim,
            inputs: self.outputs,
            outputs: self.inputs,
            color: self.color.clone(),
        }
    }

    pub fn with_arity(&self, inputs: usize, outputs: usize) -> Self {
        Self {
            dim: self.dim,
            inputs,
            outputs,
            color: self.color.clone(),
        }
    }

    pub fn same_color(&self, other: &Self, tol: T) -> bool {
        match (&self.color, &other.color) {
            (None, None) => true,
            (Some(a), Some(b)) => a.equal_within(b, tol).unwrap_or(false),
            (Some(u), None) | (None, Some(u)) => u
                .equal_within(&Tensor::identity(&[self.dim]), tol)
                .unwrap_or(false),
        }
    }

    /// Leg bending needs `U_B = conj(U_B)`.
    pub fn has_real_color(&self, tol: T) -> bool {
        self.color
            .as_ref()
            .is_none_or(|u| u.equal_within(&u.conj(), tol).unwrap_or(false))
    }
}

/// Which family a dot belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DotKind {
    Copy,
    Plus,
}

/// Symbolic generator carried by a diagram node.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind<T> {
    H { dim: usize },
    Neg { dim: usize },
    ZPow { dim: usize, exp: usize },
    XPow { dim: usize, exp: usize },
    Add { dim: usize },
    Nadd { dim: usize },
    Swap { first: usize, second: usize },
    BasisState { dim: usize, index: usize },
    PlusState { dim: usize },
    BellState { dim: usize, a: usize, b: usize },
    Cup { dim: usize },
    Cap { dim: usize },
    NormalizedCup { dim: usize },
    NormalizedCap { dim: usize },
    CopyDot(Dot<T>),
    PlusDot(Dot<T>),
    Box { label: String, tensor: Tensor<T> },
    ScalarNode { value: Complex<T> },
}

impl<T: Real> GeneratorKind<T> {
    /// Stable spelling used by the document format.
    pub fn name(&self) -> &'static str {
        match self {
            Self::H { .. } => "H",
            Self::Neg { .. } => "NEG",
            Self::ZPow { .. } => "Zpow",
            Self::XPow { .. } => "Xpow",
            Self::Add { .. } => "ADD",
            Self::Nadd { .. } => "NADD",
            Self::Swap { .. } => "SWAP",
            Self::BasisState { .. } => "BasisState",
            Self::PlusState { .. } => "PlusState",
            Self::BellState { .. } => "BellState",
            Self::Cup { .. } => "Cup",
            Self::Cap { .. } => "Cap",
            Self::NormalizedCup { .. } => "NormalizedCup",
            Self::NormalizedCap { .. } => "NormalizedCap",
            Self::CopyDot(_) => "CopyDot",
            Self::PlusDot(_) => "PlusDot",
            Self::Box { .. } => "Box",
            Self::ScalarNode { .. } => "ScalarNode",
        }
    }
}

/// A generator together with an adjoint flag.
///
/// [`GeneratorSpec::dagger`] keeps specs canonical where a named closed form
/// exists (cup ↔ cap, dot arity swap, `Z^a ↦ Z^{-a}`) and only falls back
/// to setting `adjoint` for the rest (`H†`, `ADD†`, effects).
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec<T> {
    pub kind: GeneratorKind<T>,
    pub adjoint: bool,
}

impl<T: Real> From<GeneratorKind<T>> for GeneratorSpec<T> {
    fn from(kind: GeneratorKind<T>) -> Self {
        Self {
            kind,
            adjoint: false,
        }
    }
}

impl<T: Real> GeneratorSpec<T> {
    pub fn new(kind: GeneratorKind<T>) -> Self {
        kind.into()
    }

    pub fn h(dim: usize) -> Self {
        GeneratorKind::H { dim }.into()
    }

    pub fn neg(dim: usize) -> Self {
        GeneratorKind::Neg { dim }.into()
    }

    pub fn z_pow(dim: usize, exp: i64) -> Self {
        GeneratorKind::ZPow {
            dim,
            exp: modulo(exp, dim),
        }
        .into()
    }

    pub fn x_pow(dim: usize, exp: i64) -> Self {
        GeneratorKind::XPow {
            dim,
            exp: modulo(exp, dim),
        }
        .into()
    }

    pub fn add(dim: usize) -> Self {
        GeneratorKind::Add { dim }.into()
    }

    pub fn nadd(dim: usize) -> Self {
        GeneratorKind::Nadd { dim }.into()
    }

    pub fn swap(first: usize, second: usize) -> Self {
        GeneratorKind::Swap { first, second }.into()
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        GeneratorKind::BasisState { dim, index }.into()
    }

    pub fn basis_effect(dim: usize, index: usize) -> Self {
        Self::basis_state(dim, index).dagger()
    }

    pub fn plus_state(dim: usize) -> Self {
        GeneratorKind::PlusState { dim }.into()
    }

    pub fn plus_effect(dim: usize) -> Self {
        Self::plus_state(dim).dagger()
    }

    pub fn bell_state(dim: usize, a: usize, b: usize) -> Self {
        GeneratorKind::BellState { dim, a, b }.into()
    }

    pub fn bell_effect(dim: usize, a: usize, b: usize) -> Self {
        Self::bell_state(dim, a, b).dagger()
    }

    pub fn cup(dim: usize) -> Self {
        GeneratorKind::Cup { dim }.into()
    }

    pub fn cap(dim: usize) -> Self {
        GeneratorKind::Cap { dim }.into()
    }

    pub fn copy_dot(dim: usize, inputs: usize, outputs: usize) -> Self {
        GeneratorKind::CopyDot(Dot::new(dim, inputs, outputs)).into()
    }

    pub fn plus_dot(dim: usize, inputs: usize, outputs: usize) -> Self {
        GeneratorKind::PlusDot(Dot::new(dim, inputs, outputs)).into()
    }

    pub fn boxed(label: impl Into<String>, tensor: Tensor<T>) -> Self {
        GeneratorKind::Box {
            label: label.into(),
            tensor,
        }
        .into()
    }

    pub fn scalar(value: Complex<T>) -> Self {
        GeneratorKind::ScalarNode { value }.into()
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// The dot and its family, if this is a dot.
    pub fn dot(&self) -> Option<(DotKind, &Dot<T>)> {
        match &self.kind {
            GeneratorKind::CopyDot(d) => Some((DotKind::Copy, d)),
            GeneratorKind::PlusDot(d) => Some((DotKind::Plus, d)),
            _ => None,
        }
    }

    /// Leg dimensions `(outputs, inputs)` of the un-daggered generator.
    fn base_signature(&self) -> (Vec<usize>, Vec<usize>) {
        use GeneratorKind::*;
        match &self.kind {
            H { dim } | Neg { dim } | ZPow { dim, .. } | XPow { dim, .. } => {
                (vec![*dim], vec![*dim])
            }
            Add { dim } | Nadd { dim } => (vec![*dim; 2], vec![*dim; 2]),
            Swap { first, second } => (vec![*second, *first], vec![*first, *second]),
            BasisState { dim, .. } | PlusState { dim } => (vec![*dim], vec![]),
            BellState { dim, .. } | Cup { dim } | NormalizedCup { dim } => {
                (vec![*dim; 2], vec![])
            }
            Cap { dim } | NormalizedCap { dim } => (vec![], vec![*dim; 2]),
            CopyDot(d) | PlusDot(d) => (vec![d.dim; d.outputs], vec![d.dim; d.inputs]),
            Box { tensor, .. } => (tensor.output_dims(), tensor.input_dims()),
            ScalarNode { .. } => (vec![], vec![]),
        }
    }

    pub fn output_dims(&self) -> Vec<usize> {
        let (o, i) = self.base_signature();
        if self.adjoint {
            i
        } else {
            o
        }
    }

    pub fn input_dims(&self) -> Vec<usize> {
        let (o, i) = self.base_signature();
        if self.adjoint {
            o
        } else {
            i
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.output_dims().len()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_dims().len()
    }

    /// Checks parameters, dimensions and colors.
    pub fn validate(&self) -> Result<()> {
        self.base_tensor().map(|_| ())
    }

    fn base_tensor(&self) -> Result<Tensor<T>> {
        use GeneratorKind::*;
        match &self.kind {
            H { dim } => hadamard(*dim),
            Neg { dim } => neg(*dim),
            ZPow { dim, exp } => z_pow(*dim, *exp as i64),
            XPow { dim, exp } => x_pow(*dim, *exp as i64),
            Add { dim } => add(*dim),
            Nadd { dim } => nadd(*dim),
            Swap { first, second } => swap(*first, *second),
            BasisState { dim, index } => basis_state(*dim, *index),
            PlusState { dim } => plus_state(*dim),
            BellState { dim, a, b } => bell_state(*dim, *a, *b),
            Cup { dim } => cup(*dim),
            Cap { dim } => cap(*dim),
            NormalizedCup { dim } => normalized_cup(*dim),
            NormalizedCap { dim } => normalized_cap(*dim),
            CopyDot(d) => copy_dot(d.dim, d.inputs, d.outputs, d.color.as_ref()),
            PlusDot(d) => plus_dot(d.dim, d.inputs, d.outputs, d.color.as_ref()),
            Box { tensor, .. } => Ok(tensor.clone()),
            ScalarNode { value } => Ok(Tensor::scalar(*value)),
        }
    }

    pub fn tensor(&self) -> Result<Tensor<T>> {
        let t = self.base_tensor()?;
        Ok(if self.adjoint { t.dagger() } else { t })
    }

    /// Adjoint generator, kept in canonical form where one exists.
    pub fn dagger(&self) -> Self {
        use GeneratorKind::*;
        let kind = match &self.kind {
            Neg { dim } => Neg { dim: *dim },
            ZPow { dim, exp } => ZPow {
                dim: *dim,
                exp: modulo(-(*exp as i64), *dim),
            },
            XPow { dim, exp } => XPow {
                dim: *dim,
                exp: modulo(-(*exp as i64), *dim),
            },
            Nadd { dim } => Nadd { dim: *dim },
            Swap { first, second } => Swap {
                first: *second,
                second: *first,
            },
            Cup { dim } => Cap { dim: *dim },
            Cap { dim } => Cup { dim: *dim },
            NormalizedCup { dim } => NormalizedCap { dim: *dim },
            NormalizedCap { dim } => NormalizedCup { dim: *dim },
            CopyDot(d) if !self.adjoint => CopyDot(d.swapped()),
            PlusDot(d) if !self.adjoint => PlusDot(d.swapped()),
            Box { label, tensor } if !self.adjoint => Box {
                label: dagger_label(label),
                tensor: tensor.dagger(),
            },
            ScalarNode { value } => ScalarNode {
                value: value.conj(),
            },
            other => {
                return Self {
                    kind: other.clone(),
                    adjoint: !self.adjoint,
                }
            }
        };
        Self {
            kind,
            adjoint: self.adjoint,
        }
    }

    /// Transpose in the computational basis, using closed forms where known
    /// (`Z ↦ Z`, `X ↦ X^{-1}`, `H ↦ H`).
    pub fn transposed(&self) -> Result<Self> {
        use GeneratorKind::*;
        let kind = match (&self.kind, self.adjoint) {
            (H { dim }, adj) => {
                return Ok(Self {
                    kind: H { dim: *dim },
                    adjoint: adj,
                })
            }
            (Neg { dim }, _) => Neg { dim: *dim },
            (ZPow { dim, exp }, _) => ZPow {
                dim: *dim,
                exp: *exp,
            },
            (XPow { dim, exp }, _) => XPow {
                dim: *dim,
                exp: modulo(-(*exp as i64), *dim),
            },
            (Nadd { dim }, _) => return Ok(Self::boxed("NADDᵀ", nadd::<T>(*dim)?.transpose_cb())),
            (BasisState { dim, index }, adj) => {
                return Ok(Self {
                    kind: BasisState {
                        dim: *dim,
                        index: *index,
                    },
                    adjoint: !adj,
                })
            }
            (PlusState { dim }, adj) => {
                return Ok(Self {
                    kind: PlusState { dim: *dim },
                    adjoint: !adj,
                })
            }
            (Cup { dim }, _) => Cap { dim: *dim },
            (Cap { dim }, _) => Cup { dim: *dim },
            (CopyDot(d), false) if d.color.is_none() => CopyDot(d.swapped()),
            (PlusDot(d), false) if d.color.is_none() => PlusDot(d.swapped()),
            (ScalarNode { value }, _) => ScalarNode { value: *value },
            (Box { label, tensor }, false) => Box {
                label: transpose_label(label),
                tensor: tensor.transpose_cb(),
            },
            _ => {
                return Ok(Self::boxed(
                    format!("{}ᵀ", self.name()),
                    self.tensor()?.transpose_cb(),
                ))
            }
        };
        Ok(Self {
            kind,
            adjoint: false,
        })
    }
}

fn dagger_label(label: &str) -> String {
    match label.strip_suffix('†') {
        Some(base) => base.to_string(),
        None => format!("{label}†"),
    }
}

fn transpose_label(label: &str) -> String {
    match label.strip_suffix('ᵀ') {
        Some(base) => base.to_string(),
        None => format!("{label}ᵀ"),
    }
}

/// Changes the color of a dot: `D_B = U^{⊗n} D U^{†⊗m}`.
///
/// An existing color `V` becomes `U·V`; a resulting identity color is
/// dropped so that recoloring by `I` gives back the same dot.
pub fn recolor<T: Real>(spec: &GeneratorSpec<T>, unitary: &Tensor<T>) -> Result<GeneratorSpec<T>> {
    let (kind, dot) = spec
        .dot()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a dot", spec.name())))?;
    check_color(dot.dim, Some(unitary))?;
    let combined = match &dot.color {
        Some(v) => unitary.compose(v)?,
        None => unitary.clone(),
    };
    let is_identity = combined
        .equal_within(&Tensor::identity(&[dot.dim]), T::default_tolerance())
        .unwrap_or(false);
    let new_dot = Dot {
        color: (!is_identity).then_some(combined),
        ..dot.clone()
    };
    let kind = match kind {
        DotKind::Copy => GeneratorKind::CopyDot(new_dot),
        DotKind::Plus => GeneratorKind::PlusDot(new_dot),
    };
    Ok(GeneratorSpec {
        kind,
        adjoint: spec.adjoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::root_of_unity;

    type C = Complex<f64>;
    const TOL: f64 = 1e-9;

    fn eq(a: &Tensor<f64>, b: &Tensor<f64>) -> bool {
        a.equal_within(b, TOL).unwrap()
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn mat(rows: &[&[f64]]) -> Vec<C> {
        rows.iter().flat_map(|r| r.iter().map(|&x| c(x, 0.))).collect()
    }

    #[test]
    fn qubit_hadamard() {
        let s = 1.0 / 2f64.sqrt();
        let expected = Tensor::from_matrix(&[2], &[2], mat(&[&[s, s], &[s, -s]])).unwrap();
        assert!(eq(&hadamard(2).unwrap(), &expected));
    }

    #[test]
    fn qubit_negation_is_identity() {
        assert!(eq(&neg(2).unwrap(), &Tensor::identity(&[2])));
    }

    #[test]
    fn qubit_nadd_is_cnot() {
        let cnot = Tensor::from_matrix(
            &[2, 2],
            &[2, 2],
            mat(&[&[1., 0., 0., 0.], &[0., 1., 0., 0.], &[0., 0., 0., 1.], &[0., 0., 1., 0.]]),
        )
        .unwrap();
        assert!(eq(&nadd(2).unwrap(), &cnot));
        assert!(eq(&add(2).unwrap(), &cnot));
    }

    #[test]
    fn add_on_basis_pair() {
        let input = basis_state::<f64>(3, 1).unwrap().kron(&basis_state(3, 2).unwrap());
        let out = add(3).unwrap().compose(&input).unwrap();
        let expected = basis_state::<f64>(3, 1).unwrap().kron(&basis_state(3, 0).unwrap());
        assert!(eq(&out, &expected));
    }

    #[test]
    fn gates_reject_small_dimensions() {
        assert!(hadamard::<f64>(1).is_err());
        assert!(swap::<f64>(1, 3).is_ok());
        assert!(basis_state::<f64>(3, 3).is_err());
        assert!(bell_state::<f64>(2, 0, 2).is_err());
    }

    #[test]
    fn plus_and_bell_states() {
        let s = 1.0 / 2f64.sqrt();
        let plus = Tensor::state(&[2], vec![c(s, 0.), c(s, 0.)]).unwrap();
        assert!(eq(&plus_state(2).unwrap(), &plus));
        let b00 = Tensor::state(&[2, 2], vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]).unwrap();
        assert!(eq(&bell_state(2, 0, 0).unwrap(), &b00));
    }

    #[test]
    fn bell_state_matches_preparation_circuit() {
        // oracle: ADD·(H⊗I)|a,b⟩ evaluated directly
        for d in 2..6 {
            for a in 0..d {
                for b in 0..d {
                    let ket = basis_state::<f64>(d, a).unwrap().kron(&basis_state(d, b).unwrap());
                    let circuit = add::<f64>(d)
                        .unwrap()
                        .compose(&hadamard::<f64>(d).unwrap().kron(&Tensor::identity(&[d])))
                        .unwrap()
                        .compose(&ket)
                        .unwrap();
                    assert!(eq(&bell_state(d, a, b).unwrap(), &circuit), "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn bell_d3_closed_form() {
        let s = 1.0 / 3f64.sqrt();
        let bell = bell_state::<f64>(3, 1, 2).unwrap();
        for k in 0..3 {
            let amp = bell.entry(&[k, (k + 2) % 3], &[]);
            assert!((amp - root_of_unity::<f64>(k as i64, 3).scale(s)).norm() < 1e-12);
        }
    }

    #[test]
    fn compact_structures() {
        assert!(eq(&cup::<f64>(1).unwrap().reshape(&[], &[]).unwrap(), &Tensor::scalar(c(1., 0.))));
        for d in 1..6 {
            assert!(eq(&normalized_cup(d).unwrap(), &bell_state(d, 0, 0).unwrap()));
        }
        let loop3 = cap::<f64>(3).unwrap().compose(&cup(3).unwrap()).unwrap();
        assert!((loop3.data()[0] - c(3., 0.)).norm() < 1e-12);
        assert!(eq(&cup::<f64>(4).unwrap().dagger(), &cap(4).unwrap()));
    }

    #[test]
    fn copy_dot_basics() {
        for d in 1..5 {
            assert!(eq(&copy_dot(d, 1, 1, None).unwrap(), &Tensor::identity(&[d])));
        }
        let out = copy_dot::<f64>(2, 1, 2, None)
            .unwrap()
            .compose(&basis_state(2, 0).unwrap())
            .unwrap();
        let expected = basis_state::<f64>(2, 0).unwrap().kron(&basis_state(2, 0).unwrap());
        assert!(eq(&out, &expected));
        let merge = copy_dot::<f64>(3, 2, 0, None).unwrap();
        assert!(eq(&merge, &copy_dot(3, 0, 2, None).unwrap().dagger()));
        assert!((copy_dot::<f64>(3, 0, 0, None).unwrap().data()[0] - c(3., 0.)).norm() < 1e-12);
    }

    #[test]
    fn plus_dot_closed_form_matches_fourier_route() {
        for d in 1..5 {
            for m in 0..4 {
                for n in 0..4 {
                    let direct = plus_dot::<f64>(d, m, n, None).unwrap();
                    let fourier = plus_dot_via_fourier::<f64>(d, m, n).unwrap();
                    assert!(eq(&direct, &fourier), "d={d} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn plus_dot_examples() {
        for d in 2..6 {
            assert!(eq(&plus_dot(d, 1, 1, None).unwrap(), &neg(d).unwrap()));
        }
        // 1 ⊕ 2 ⊕ 0 = 0 (mod 3): amplitude 3^{-1/2} on |0⟩
        let p = plus_dot::<f64>(3, 2, 1, None).unwrap();
        let ket = basis_state::<f64>(3, 1).unwrap().kron(&basis_state(3, 2).unwrap());
        let out = p.compose(&ket).unwrap();
        let expected = basis_state::<f64>(3, 0).unwrap().scale(c(1.0 / 3f64.sqrt(), 0.));
        assert!(eq(&out, &expected));
        assert!((plus_dot::<f64>(4, 0, 0, None).unwrap().data()[0] - c(4., 0.)).norm() < 1e-12);
    }

    #[test]
    fn recolor_by_fourier_then_negate_is_plus() {
        for d in 2..5 {
            let h = hadamard::<f64>(d).unwrap();
            let spec = recolor(&GeneratorSpec::copy_dot(d, 1, 2), &h).unwrap();
            let lhs = spec.tensor().unwrap().compose(&neg(d).unwrap()).unwrap();
            assert!(eq(&lhs, &plus_dot(d, 1, 2, None).unwrap()));
        }
        let plain = GeneratorSpec::<f64>::copy_dot(3, 1, 2);
        assert_eq!(recolor(&plain, &Tensor::identity(&[3])).unwrap(), plain);
        let not_unitary = Tensor::identity(&[3]).scale(c(2., 0.));
        assert!(matches!(recolor(&plain, &not_unitary), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn recolored_real_dot_bends_with_cup() {
        // a real rotation color satisfies S3: COPY_B^{1→2} ∘ η on its input equals COPY_B^{0→3}
        let (cs, sn) = (0.3f64.cos(), 0.3f64.sin());
        let rot = Tensor::from_matrix(&[2], &[2], mat(&[&[cs, -sn], &[sn, cs]])).unwrap();
        let bent_spec = recolor(&GeneratorSpec::copy_dot(2, 1, 2), &rot).unwrap();
        let full = recolor(&GeneratorSpec::copy_dot(2, 0, 3), &rot).unwrap();
        let lhs = Tensor::identity(&[2])
            .kron(&bent_spec.tensor().unwrap())
            .compose(&cup(2).unwrap())
            .unwrap();
        assert!(eq(&lhs, &full.tensor().unwrap()));
    }

    #[test]
    fn spec_dagger_matches_tensor_dagger() {
        let specs: Vec<GeneratorSpec<f64>> = vec![
            GeneratorSpec::h(3),
            GeneratorSpec::neg(3),
            GeneratorSpec::z_pow(4, 1),
            GeneratorSpec::x_pow(4, 3),
            GeneratorSpec::add(3),
            GeneratorSpec::nadd(3),
            GeneratorSpec::swap(2, 3),
            GeneratorSpec::basis_state(3, 2),
            GeneratorSpec::plus_state(3),
            GeneratorSpec::bell_state(3, 1, 2),
            GeneratorSpec::cup(3),
            GeneratorSpec::cap(2),
            GeneratorSpec::copy_dot(2, 1, 3),
            GeneratorSpec::plus_dot(3, 2, 1),
            GeneratorSpec::boxed("f", hadamard(3).unwrap().compose(&z_pow(3, 1).unwrap()).unwrap()),
            GeneratorSpec::scalar(c(0.5, 2.0)),
        ];
        for s in specs {
            let t = s.tensor().unwrap();
            let dag = s.dagger();
            assert!(eq(&dag.tensor().unwrap(), &t.dagger()), "{}", s.name());
            assert_eq!(dag.dagger(), s, "{}", s.name());
            let tr = s.transposed().unwrap();
            assert!(eq(&tr.tensor().unwrap(), &t.transpose_cb()), "{}", s.name());
        }
    }

    #[test]
    fn copy_dagger_swaps_arity() {
        let d = GeneratorSpec::<f64>::copy_dot(2, 1, 2).dagger();
        assert_eq!(d, GeneratorSpec::copy_dot(2, 2, 1));
    }
}
