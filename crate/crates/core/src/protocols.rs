//! End-to-end protocols built from diagrams and certified by evaluation.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{branch_probability, expand_cap_to_bell_branches, BellCorrection, Branch, DensityOperator, KrausSet};
use crate::diagram::{Diagram, NodeId, Patch, PatchSink, PatchSource, Sink, Source};
use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, GeneratorSpec};
use crate::random::random_density;
use crate::report::{trace_rows, TensorSummary, TraceRow};
use crate::rewrite::{normalize, normalize_phases, GHZ_STRATEGY, ZX_NADD_PHASES};
use crate::scalar::{Real, ScalarFactor};
use crate::tensor::Tensor;

/// Step budget for the GHZ normalization.
pub const GHZ_MAX_STEPS: usize = 40;

#[derive(Clone, Debug, Serialize)]
pub struct BranchRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    /// Max-norm distance from the expected branch tensor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub corrections: Vec<BellCorrection>,
    pub kraus: TensorSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelCheck {
    pub trials: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub branches: Vec<BranchRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ProtocolReport {
    fn new(protocol: &str, dim: usize, seed: Option<u64>) -> Self {
        Self {
            protocol: protocol.to_string(),
            dim,
            seed,
            branches: Vec::new(),
            completeness_residual: None,
            channel: None,
            trace: Vec::new(),
            checks: Vec::new(),
            passed: false,
        }
    }

    fn check<T: Real>(&mut self, name: impl Into<String>, value: T, tolerance: T) {
        let value = f(value);
        let tolerance = f(tolerance);
        self.checks.push(Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        });
    }

    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed) && self.channel.as_ref().is_none_or(|c| c.passed);
        self
    }

    /// The failing checks, for error messages.
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn re<T: Real>(x: f64) -> Complex<T> {
    Complex::new(T::of_f64(x), T::zero())
}

fn require_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("protocols need d >= 2, got {d}")));
    }
    Ok(())
}

fn gate<T: Real>(spec: GeneratorSpec<T>) -> Diagram<T> {
    Diagram::from_generator(spec)
}

fn layer<T: Real>(parts: Vec<Diagram<T>>) -> Diagram<T> {
    parts.iter().fold(Diagram::empty(), |acc, p| acc.tensor(p))
}

fn id<T: Real>(d: usize) -> Diagram<T> {
    Diagram::identity(&[d])
}

fn normalized_cup<T: Real>(d: usize) -> GeneratorSpec<T> {
    GeneratorKind::NormalizedCup { dim: d }.into()
}

/// `|0…0⟩`, `H` on wire 0, then `ADD` from each wire to the next.
pub fn ghz_circuit<T: Real>(d: usize, wires: usize) -> Result<Diagram<T>> {
    require_dim(d)?;
    if wires < 2 {
        return Err(Error::InvalidParameter(format!("GHZ needs at least 2 wires, got {wires}")));
    }
    let mut circuit = layer((0..wires).map(|_| gate(GeneratorSpec::basis_state(d, 0))).collect());
    let mut hl = vec![gate(GeneratorSpec::h(d))];
    hl.extend((1..wires).map(|_| id(d)));
    circuit = layer(hl).compose(&circuit)?;
    for k in 0..wires - 1 {
        let mut parts: Vec<Diagram<T>> = (0..k).map(|_| id(d)).collect();
        parts.push(gate(GeneratorSpec::add(d)));
        parts.extend((k + 2..wires).map(|_| id(d)));
        circuit = layer(parts).compose(&circuit)?;
    }
    Ok(circuit)
}

/// `(1/√d)·Σ_k |k…k⟩`.
pub fn ghz_state<T: Real>(d: usize, wires: usize) -> Tensor<T> {
    let amp = re::<T>(1.0 / (d as f64).sqrt());
    Tensor::from_fn(&vec![d; wires], &[], |o, _| {
        if o.iter().all(|&k| k == o[0]) {
            amp
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Normalizes the GHZ circuit to `(1/√d)·COPY^{0→n}` and checks its value.
pub fn run_ghz<T: Real>(d: usize, wires: usize) -> Result<ProtocolReport> {
    let circuit = ghz_circuit::<T>(d, wires)?;
    let (nf, trace) = normalize(&circuit, GHZ_STRATEGY, GHZ_MAX_STEPS, true)?;
    let mut report = ProtocolReport::new("ghz", d, None);
    report.trace = trace_rows(&trace);
    let tol = T::default_tolerance();
    let single = nf.node_count() == 1
        && nf.nodes().values().next() == Some(&GeneratorSpec::copy_dot(d, 0, wires))
        && nf.wires().len() == wires;
    report.check("single copy dot", if single { 0.0 } else { 1.0 }, 0.0);
    report.check("step limit", if trace.limit_reached { 1.0 } else { 0.0 }, 0.0);
    report.check("every step verified", if trace.all_verified() { 0.0 } else { 1.0 }, 0.0);
    let expected_scalar = re::<T>(1.0 / (d as f64).sqrt());
    report.check("scalar is 1/sqrt(d)", (nf.scalar.value() - expected_scalar).norm(), tol);
    let state = nf.evaluate()?;
    report.check("matches GHZ state", state.max_abs_diff(&ghz_state(d, wires))?, tol);
    report.check("circuit agrees", state.max_abs_diff(&circuit.evaluate()?)?, tol);
    report.check("norm is 1", (state.norm() - T::one()).abs(), tol);
    report.branches.push(BranchRow {
        label: "state".to_string(),
        probability: None,
        deviation: None,
        corrections: Vec::new(),
        kraus: TensorSummary::new(&state),
    });
    Ok(report.finish())
}

/// Alice encodes `(p, q)` on her half of a cup with `Z^p·X^{-q}`; Bob
/// measures in the Bell basis.
pub fn superdense_branches<T: Real>(d: usize, p: usize, q: usize) -> Result<KrausSet<T>> {
    let encode = gate(GeneratorSpec::z_pow(d, p as i64)).compose(&gate(GeneratorSpec::x_pow(d, -(q as i64))))?;
    let prepared = layer(vec![encode, id(d)]).compose(&gate(normalized_cup(d)))?;
    let mut items = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let branch = gate(GeneratorSpec::bell_effect(d, a, b)).compose(&prepared)?;
            items.push((format!("{a},{b}"), branch));
        }
    }
    KrausSet::from_diagrams(items)
}

pub fn run_superdense<T: Real>(d: usize, p: usize, q: usize) -> Result<ProtocolReport> {
    require_dim(d)?;
    if p >= d || q >= d {
        return Err(Error::InvalidParameter(format!("message ({p},{q}) out of range for d = {d}")));
    }
    let tol = T::default_tolerance();
    let mut report = ProtocolReport::new("superdense", d, None);
    let set = superdense_branches::<T>(d, p, q)?;
    let one = Tensor::scalar(re::<T>(1.0));
    let mut worst = T::zero();
    for b in set.branches() {
        let prob = branch_probability(&b.tensor, &one)?;
        let expected = if b.label == format!("{p},{q}") { T::one() } else { T::zero() };
        worst = worst.max((prob - expected).abs());
        report.branches.push(BranchRow {
            label: b.label.clone(),
            probability: Some(f(prob)),
            deviation: Some(f((prob - expected).abs())),
            corrections: Vec::new(),
            kraus: TensorSummary::new(&b.tensor),
        });
    }
    let residual = set.completeness_residual();
    report.completeness_residual = Some(f(residual));
    report.check(format!("point mass at ({p},{q})"), worst, tol);
    report.check("complete", residual, tol);
    let mut all_worst = T::zero();
    for pp in 0..d {
        for qq in 0..d {
            let s = superdense_branches::<T>(d, pp, qq)?;
            all_worst = all_worst.max(s.completeness_residual());
            for b in s.branches() {
                let prob = branch_probability(&b.tensor, &one)?;
                let expected = if b.label == format!("{pp},{qq}") { T::one() } else { T::zero() };
                all_worst = all_worst.max((prob - expected).abs());
            }
        }
    }
    report.check("every message decodes", all_worst, tol);
    Ok(report.finish())
}

fn find_caps<T: Real>(d: &Diagram<T>) -> Vec<NodeId> {
    d.nodes()
        .iter()
        .filter(|(_, s)| matches!(s.kind, GeneratorKind::Cap { .. }) && !s.adjoint)
        .map(|(n, _)| *n)
        .collect()
}

/// Input wire, cap on (input, cup half), the other cup half is the output.
pub fn teleport_diagram<T: Real>(d: usize) -> Result<Diagram<T>> {
    let mut g = Diagram::empty();
    let input = g.add_input(d);
    let cup = g.add_node(normalized_cup(d));
    let cap = g.add_node(GeneratorSpec::cap(d));
    g.connect(Source::Input(input), Sink::node(cap, 0))?;
    g.connect(Source::node(cup, 0), Sink::node(cap, 1))?;
    let out = g.add_output(d);
    g.connect(Source::node(cup, 1), Sink::Output(out))?;
    Ok(g)
}

fn correction<T: Real>(c: &BellCorrection) -> Result<Diagram<T>> {
    let (z, x) = c.teleport_exponents();
    gate(GeneratorSpec::z_pow(c.dim, z as i64)).compose(&gate(GeneratorSpec::x_pow(c.dim, x as i64)))
}

/// Bell-measures the cap of every branch with a normalized costate and
/// appends Bob's correction, giving the `d²` teleportation Kraus maps.
pub fn teleport_branches<T: Real>(d: usize) -> Result<KrausSet<T>> {
    require_dim(d)?;
    let base = teleport_diagram::<T>(d)?;
    let cap = find_caps(&base)[0];
    let expanded = expand_cap_to_bell_branches(&base, cap)?;
    let branches = expanded
        .branches()
        .iter()
        .map(|b| {
            let c = b.corrections[0];
            let mut diag = correction(&c)?.compose(b.diagram.as_ref().expect("expansion keeps diagrams"))?;
            diag.scalar = diag.scalar.mul(&ScalarFactor::sqrt_power(d, -1));
            Ok(Branch {
                label: b.label.clone(),
                tensor: diag.evaluate()?,
                diagram: Some(diag),
                corrections: vec![c],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KrausSet::new(branches)
}

pub fn run_teleport<T: Real>(d: usize, trials: usize, seed: u64) -> Result<ProtocolReport> {
    let tol = T::default_tolerance();
    let mut report = ProtocolReport::new("teleport", d, Some(seed));
    let set = teleport_branches::<T>(d)?;
    let expected = Tensor::identity(&[d]).scale(re::<T>(1.0 / d as f64));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rhos = (0..trials.max(1))
        .map(|_| DensityOperator::new(random_density::<T, _>(&[d], &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for b in set.branches() {
        let dev = b.tensor.max_abs_diff(&expected)?;
        worst = worst.max(dev);
        report.branches.push(BranchRow {
            label: b.label.clone(),
            probability: Some(f(branch_probability(&b.tensor, rhos[0].tensor())?)),
            deviation: Some(f(dev)),
            corrections: b.corrections.clone(),
            kraus: TensorSummary::new(&b.tensor),
        });
    }
    report.check("every branch is I/d", worst, tol);
    let residual = set.completeness_residual();
    report.completeness_residual = Some(f(residual));
    report.check("complete", residual, tol);
    report.channel = Some(channel_check(&set, &rhos[..trials], |rho| Ok(rho.clone()), tol)?);
    Ok(report.finish())
}

fn channel_check<T: Real>(
    set: &KrausSet<T>,
    rhos: &[DensityOperator<T>],
    expected: impl Fn(&DensityOperator<T>) -> Result<DensityOperator<T>>,
    tol: T,
) -> Result<ChannelCheck> {
    let mut worst = T::zero();
    for rho in rhos {
        let out = set.apply(rho)?;
        worst = worst.max(out.tensor().max_abs_diff(expected(rho)?.tensor())?);
    }
    Ok(ChannelCheck {
        trials: rhos.len(),
        max_deviation: f(worst),
        passed: worst <= tol,
    })
}

/// Two inputs teleported through the offline state `NADD·(|∪⟩ ⊗ |∪⟩)`.
pub fn gate_teleport_diagram<T: Real>(d: usize) -> Result<Diagram<T>> {
    let mut g = Diagram::empty();
    let nadd = g.add_node(GeneratorSpec::nadd(d));
    for k in 0..2 {
        let input = g.add_input(d);
        let cup = g.add_node(normalized_cup(d));
        let cap = g.add_node(GeneratorSpec::cap(d));
        g.connect(Source::Input(input), Sink::node(cap, 0))?;
        g.connect(Source::node(cup, 0), Sink::node(cap, 1))?;
        g.connect(Source::node(cup, 1), Sink::node(nadd, k))?;
    }
    for k in 0..2 {
        let out = g.add_output(d);
        g.connect(Source::node(nadd, k), Sink::Output(out))?;
    }
    Ok(g)
}

/// Pushes the Pauli corrections `Z^{a_i}·X^{-b_i}` from before the NADD to
/// after it with the commutation rules, then strips the NADD to leave the
/// gates Bob applies after receiving the offline state.
pub fn shuttle_corrections<T: Real>(d: usize, corrections: &[BellCorrection; 2]) -> Result<Diagram<T>> {
    let before = layer(vec![correction(&corrections[0])?, correction(&corrections[1])?]);
    let circuit = gate(GeneratorSpec::nadd(d)).compose(&before)?;
    let (nf, trace) = normalize_phases(&circuit, ZX_NADD_PHASES, 200, false)?;
    let fail = |why: &str| Error::Certification(format!("shuttling {corrections:?} failed: {why}"));
    if trace.limit_reached {
        return Err(fail("step limit"));
    }
    let nadds: Vec<NodeId> = nf
        .nodes()
        .iter()
        .filter(|(_, s)| matches!(s.kind, GeneratorKind::Nadd { .. }) && !s.adjoint)
        .map(|(n, _)| *n)
        .collect();
    let [nadd] = nadds[..] else {
        return Err(fail("no single NADD in the result"));
    };
    let adj = nf.adjacency();
    let mut patch = Patch::new(vec![nadd]);
    for k in 0..2 {
        let w_in = adj.into_port(nadd, k).and_then(|w| nf.wire(w)).ok_or_else(|| fail("dangling NADD"))?;
        if w_in.src != Source::Input(k) {
            return Err(fail("a gate is still in front of the NADD"));
        }
        let w_out = adj.out_of_port(nadd, k).and_then(|w| nf.wire(w)).ok_or_else(|| fail("dangling NADD"))?;
        patch.wire(PatchSource::Existing(w_in.src), PatchSink::Existing(w_out.dst));
    }
    let mut after = nf;
    after.apply_patch(&patch)?;
    Ok(after)
}

/// The `d⁴` corrected branches of NADD gate teleportation.
pub fn gate_teleport_branches<T: Real>(d: usize) -> Result<KrausSet<T>> {
    require_dim(d)?;
    let base = gate_teleport_diagram::<T>(d)?;
    let caps = find_caps(&base);
    let inv = ScalarFactor::sqrt_power(d, -1);
    let mut branches = Vec::with_capacity(d.pow(4));
    for first in expand_cap_to_bell_branches(&base, caps[0])?.branches() {
        let mid = first.diagram.as_ref().expect("expansion keeps diagrams");
        for second in expand_cap_to_bell_branches(mid, caps[1])?.branches() {
            let cs = [first.corrections[0], second.corrections[0]];
            let fix = shuttle_corrections::<T>(d, &cs)?;
            let mut diag = fix.compose(second.diagram.as_ref().expect("expansion keeps diagrams"))?;
            diag.scalar = diag.scalar.mul(&inv).mul(&inv);
            branches.push(Branch {
                label: format!("{}|{}", first.label, second.label),
                tensor: diag.evaluate()?,
                diagram: Some(diag),
                corrections: cs.to_vec(),
            });
        }
    }
    KrausSet::new(branches)
}

pub fn run_gate_teleport<T: Real>(d: usize, trials: usize, seed: u64) -> Result<ProtocolReport> {
    let tol = T::default_tolerance();
    let mut report = ProtocolReport::new("gate-teleport", d, Some(seed));
    let set = gate_teleport_branches::<T>(d)?;
    let nadd = crate::generators::nadd::<T>(d)?;
    let expected = nadd.scale(re::<T>(1.0 / (d * d) as f64));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rhos = (0..trials.max(1))
        .map(|_| DensityOperator::new(random_density::<T, _>(&[d, d], &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for b in set.branches() {
        let dev = b.tensor.max_abs_diff(&expected)?;
        worst = worst.max(dev);
        report.branches.push(BranchRow {
            label: b.label.clone(),
            probability: Some(f(branch_probability(&b.tensor, rhos[0].tensor())?)),
            deviation: Some(f(dev)),
            corrections: b.corrections.clone(),
            kraus: TensorSummary::new(&b.tensor),
        });
    }
    report.check("every branch is NADD/d^2", worst, tol);
    let residual = set.completeness_residual();
    report.completeness_residual = Some(f(residual));
    report.check("complete", residual, tol);
    report.channel = Some(channel_check(&set, &rhos[..trials], |rho| rho.conjugate_by(&nadd), tol)?);
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_reaches_a_single_dot() {
        for d in 2..=5 {
            let r = run_ghz::<f64>(d, 4).unwrap();
            assert!(r.passed, "{:?}", r.failures());
            assert!(r.trace.len() <= GHZ_MAX_STEPS);
            assert_eq!(r.branches[0].kraus.entries.len(), d);
        }
        let r = run_ghz::<f64>(2, 4).unwrap();
        let e = &r.branches[0].kraus.entries;
        assert_eq!(e[0].outputs, vec![0, 0, 0, 0]);
        assert_eq!(e[1].outputs, vec![1, 1, 1, 1]);
        assert!((e[0].re - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn superdense_is_deterministic() {
        let r = run_superdense::<f64>(2, 1, 0).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        for row in &r.branches {
            let p = row.probability.unwrap();
            assert!((p - if row.label == "1,0" { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        assert!(run_superdense::<f64>(3, 2, 1).unwrap().passed);
        assert!(run_superdense::<f64>(3, 3, 0).is_err());
    }

    #[test]
    fn teleport_branches_are_identity_over_d() {
        for d in 2..=3 {
            let r = run_teleport::<f64>(d, 3, 9).unwrap();
            assert!(r.passed, "{:?}", r.failures());
            assert_eq!(r.branches.len(), d * d);
        }
    }

    #[test]
    fn teleport_fixes_a_pure_state() {
        let d = 3;
        let set = teleport_branches::<f64>(d).unwrap();
        let zero = crate::generators::basis_state::<f64>(d, 0).unwrap();
        let rho = DensityOperator::pure(&zero).unwrap();
        assert!(set.apply(&rho).unwrap().tensor().equal_within(rho.tensor(), 1e-12).unwrap());
    }

    #[test]
    fn gate_teleport_gives_nadd() {
        let r = run_gate_teleport::<f64>(2, 2, 5).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert_eq!(r.branches.len(), 16);
    }
}
