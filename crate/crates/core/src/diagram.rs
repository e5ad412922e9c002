//! Open graphs of generators with ordered boundaries.
//!
//! Wires are directed: a wire runs from a [`Source`] (an input slot or a
//! node output port) to a [`Sink`] (an output slot or a node input port).
//! Bending only happens through cup and cap nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::scalar::{Real, ScalarFactor};
use crate::tensor::{contract, BoundaryLeg, Direction, NetworkEdge, Tensor};

pub type NodeId = usize;
pub type WireId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Input(usize),
    Node { node: NodeId, port: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sink {
    Output(usize),
    Node { node: NodeId, port: usize },
}

impl Source {
    pub fn node(node: NodeId, port: usize) -> Self {
        Self::Node { node, port }
    }

    pub fn node_id(&self) -> Option<NodeId> {
        match self {
            Self::Node { node, .. } => Some(*node),
            Self::Input(_) => None,
        }
    }
}

impl Sink {
    pub fn node(node: NodeId, port: usize) -> Self {
        Self::Node { node, port }
    }

    pub fn node_id(&self) -> Option<NodeId> {
        match self {
            Self::Node { node, .. } => Some(*node),
            Self::Output(_) => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(i) => write!(f, "input {i}"),
            Self::Node { node, port } => write!(f, "node {node} out {port}"),
        }
    }
}

impl fmt::Display for Sink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Output(i) => write!(f, "output {i}"),
            Self::Node { node, port } => write!(f, "node {node} in {port}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Wire {
    pub id: WireId,
    pub dim: usize,
    pub src: Source,
    pub dst: Sink,
}

/// A violated structural invariant, naming the offending ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Defect {
    DimMismatch {
        wire: WireId,
        wire_dim: usize,
        endpoint: String,
        endpoint_dim: usize,
    },
    PortReuse {
        endpoint: String,
        wires: Vec<WireId>,
    },
    DanglingPort {
        node: NodeId,
        port: usize,
        direction: Direction,
    },
    UnboundBoundary {
        slot: usize,
        direction: Direction,
    },
    UnknownNode {
        wire: WireId,
        node: NodeId,
    },
    PortOutOfRange {
        wire: WireId,
        endpoint: String,
    },
    BoundaryOutOfRange {
        wire: WireId,
        endpoint: String,
    },
    InvalidSpec {
        node: NodeId,
        message: String,
    },
    NonFiniteScalar,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimMismatch {
                wire,
                wire_dim,
                endpoint,
                endpoint_dim,
            } => write!(
                f,
                "DimMismatch: wire {wire} has dim {wire_dim} but {endpoint} has dim {endpoint_dim}"
            ),
            Self::PortReuse { endpoint, wires } => {
                write!(f, "PortReuse: {endpoint} used by wires {wires:?}")
            }
            Self::DanglingPort {
                node,
                port,
                direction,
            } => write!(f, "DanglingPort: node {node} {direction:?} port {port} unconnected"),
            Self::UnboundBoundary { slot, direction } => {
                write!(f, "UnboundBoundary: {direction:?} slot {slot} has no wire")
            }
            Self::UnknownNode { wire, node } => {
                write!(f, "UnknownNode: wire {wire} refers to missing node {node}")
            }
            Self::PortOutOfRange { wire, endpoint } => {
                write!(f, "PortOutOfRange: wire {wire} uses nonexistent {endpoint}")
            }
            Self::BoundaryOutOfRange { wire, endpoint } => {
                write!(f, "BoundaryOutOfRange: wire {wire} uses nonexistent {endpoint}")
            }
            Self::InvalidSpec { node, message } => {
                write!(f, "InvalidSpec: node {node}: {message}")
            }
            Self::NonFiniteScalar => write!(f, "NonFiniteScalar"),
        }
    }
}

/// Port-to-wire lookup for a diagram.
#[derive(Clone, Debug, Default)]
pub struct Adjacency {
    into: HashMap<(NodeId, usize), WireId>,
    out_of: HashMap<(NodeId, usize), WireId>,
}

impl Adjacency {
    pub fn into_port(&self, node: NodeId, port: usize) -> Option<WireId> {
        self.into.get(&(node, port)).copied()
    }

    pub fn out_of_port(&self, node: NodeId, port: usize) -> Option<WireId> {
        self.out_of.get(&(node, port)).copied()
    }
}

/// Endpoint of a wire created by a [`Patch`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSource {
    Existing(Source),
    /// Output port of the `i`-th node added by the patch.
    New(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSink {
    Existing(Sink),
    New(usize, usize),
}

/// Local graph surgery: remove nodes (and every wire touching them), add
/// nodes, and rewire the freed endpoints.
#[derive(Clone, Debug)]
pub struct Patch<T> {
    pub remove: Vec<NodeId>,
    pub add: Vec<GeneratorSpec<T>>,
    pub wires: Vec<(PatchSource, PatchSink)>,
    pub scalar: ScalarFactor<T>,
}

impl<T: Real> Patch<T> {
    pub fn new(remove: Vec<NodeId>) -> Self {
        Self {
            remove,
            add: Vec::new(),
            wires: Vec::new(),
            scalar: ScalarFactor::one(),
        }
    }

    /// Adds a node, returning its local index.
    pub fn node(&mut self, spec: GeneratorSpec<T>) -> usize {
        self.add.push(spec);
        self.add.len() - 1
    }

    pub fn wire(&mut self, src: PatchSource, dst: PatchSink) {
        self.wires.push((src, dst));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagram<T> {
    nodes: BTreeMap<NodeId, GeneratorSpec<T>>,
    wires: BTreeMap<WireId, Wire>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    /// Global factor multiplying the graph's value.
    pub scalar: ScalarFactor<T>,
    next_node: NodeId,
    next_wire: WireId,
}

impl<T: Real> Default for Diagram<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> Diagram<T> {
    /// The empty diagram: the scalar 1 on the unit object.
    pub fn empty() -> Self {
        Self {
            nodes: BTreeMap::new(),
            wires: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            scalar: ScalarFactor::one(),
            next_node: 0,
            next_wire: 0,
        }
    }

    pub fn from_scalar(value: Complex<T>) -> Self {
        let mut d = Self::empty();
        d.scalar = ScalarFactor::from_complex(value);
        d
    }

    /// Idle wires of the given dimensions.
    pub fn identity(dims: &[usize]) -> Self {
        let mut d = Self::empty();
        for &dim in dims {
            let i = d.add_input(dim);
            let o = d.add_output(dim);
            d.add_wire(dim, Source::Input(i), Sink::Output(o));
        }
        d
    }

    /// A single generator with its legs on the boundary in order.
    pub fn from_generator(spec: GeneratorSpec<T>) -> Self {
        let mut d = Self::empty();
        let outs = spec.output_dims();
        let ins = spec.input_dims();
        let n = d.add_node(spec);
        for (p, dim) in ins.into_iter().enumerate() {
            let i = d.add_input(dim);
            d.add_wire(dim, Source::Input(i), Sink::node(n, p));
        }
        for (p, dim) in outs.into_iter().enumerate() {
            let o = d.add_output(dim);
            d.add_wire(dim, Source::node(n, p), Sink::Output(o));
        }
        d
    }

    pub fn from_tensor(label: impl Into<String>, tensor: Tensor<T>) -> Self {
        Self::from_generator(GeneratorSpec::boxed(label, tensor))
    }

    pub fn add_node(&mut self, spec: GeneratorSpec<T>) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        self.nodes.insert(id, spec);
        id
    }

    /// Inserts a node under a caller-chosen id (used by the file format).
    pub fn insert_node(&mut self, id: NodeId, spec: GeneratorSpec<T>) {
        self.nodes.insert(id, spec);
        self.next_node = self.next_node.max(id + 1);
    }

    pub fn add_input(&mut self, dim: usize) -> usize {
        self.inputs.push(dim);
        self.inputs.len() - 1
    }

    pub fn add_output(&mut self, dim: usize) -> usize {
        self.outputs.push(dim);
        self.outputs.len() - 1
    }

    /// Adds a wire without checking it; see [`Diagram::validate`].
    pub fn add_wire(&mut self, dim: usize, src: Source, dst: Sink) -> WireId {
        let id = self.next_wire;
        self.insert_wire(Wire { id, dim, src, dst });
        id
    }

    pub fn insert_wire(&mut self, wire: Wire) {
        self.next_wire = self.next_wire.max(wire.id + 1);
        self.wires.insert(wire.id, wire);
    }

    /// Adds a wire whose dimension is read off the source.
    pub fn connect(&mut self, src: Source, dst: Sink) -> Result<WireId> {
        let from = self.source_dim(src).ok_or_else(|| {
            Error::InvalidParameter(format!("{src} does not exist"))
        })?;
        let to = self
            .sink_dim(dst)
            .ok_or_else(|| Error::InvalidParameter(format!("{dst} does not exist")))?;
        if from != to {
            return Err(Error::DimensionMismatch {
                index: self.next_wire,
                left: from,
                right: to,
            });
        }
        Ok(self.add_wire(from, src, dst))
    }

    pub fn source_dim(&self, src: Source) -> Option<usize> {
        match src {
            Source::Input(i) => self.inputs.get(i).copied(),
            Source::Node { node, port } => self.nodes.get(&node)?.output_dims().get(port).copied(),
        }
    }

    pub fn sink_dim(&self, dst: Sink) -> Option<usize> {
        match dst {
            Sink::Output(i) => self.outputs.get(i).copied(),
            Sink::Node { node, port } => self.nodes.get(&node)?.input_dims().get(port).copied(),
        }
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, GeneratorSpec<T>> {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&GeneratorSpec<T>> {
        self.nodes.get(&id)
    }

    pub fn wires(&self) -> &BTreeMap<WireId, Wire> {
        &self.wires
    }

    pub fn wire(&self, id: WireId) -> Option<&Wire> {
        self.wires.get(&id)
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Product of all boundary dimensions.
    pub fn boundary_dim(&self) -> usize {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .fold(1usize, |acc, &d| acc.saturating_mul(d))
    }

    pub fn signature(&self) -> String {
        format!("{:?} -> {:?}", self.inputs, self.outputs)
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut adj = Adjacency::default();
        for w in self.wires.values() {
            if let Source::Node { node, port } = w.src {
                adj.out_of.insert((node, port), w.id);
            }
            if let Sink::Node { node, port } = w.dst {
                adj.into.insert((node, port), w.id);
            }
        }
        adj
    }

    /// Lists every violated invariant; empty iff the diagram is well formed.
    pub fn validate(&self) -> Vec<Defect> {
        let mut defects = Vec::new();
        if !self.scalar.is_finite() {
            defects.push(Defect::NonFiniteScalar);
        }
        for (&id, spec) in &self.nodes {
            if let Err(e) = spec.validate() {
                defects.push(Defect::InvalidSpec {
                    node: id,
                    message: e.to_string(),
                });
            }
        }
        let mut sources: BTreeMap<Source, Vec<WireId>> = BTreeMap::new();
        let mut sinks: BTreeMap<Sink, Vec<WireId>> = BTreeMap::new();
        for w in self.wires.values() {
            let mut endpoint_ok = true;
            if let Some(node) = w.src.node_id().filter(|n| !self.nodes.contains_key(n)) {
                defects.push(Defect::UnknownNode { wire: w.id, node });
                endpoint_ok = false;
            }
            if let Some(node) = w.dst.node_id().filter(|n| !self.nodes.contains_key(n)) {
                defects.push(Defect::UnknownNode { wire: w.id, node });
                endpoint_ok = false;
            }
            if !endpoint_ok {
                continue;
            }
            for (endpoint, dim, is_boundary) in [
                (w.src.to_string(), self.source_dim(w.src), matches!(w.src, Source::Input(_))),
                (w.dst.to_string(), self.sink_dim(w.dst), matches!(w.dst, Sink::Output(_))),
            ] {
                match dim {
                    None if is_boundary => defects.push(Defect::BoundaryOutOfRange {
                        wire: w.id,
                        endpoint,
                    }),
                    None => defects.push(Defect::PortOutOfRange {
                        wire: w.id,
                        endpoint,
                    }),
                    Some(d) if d != w.dim => defects.push(Defect::DimMismatch {
                        wire: w.id,
                        wire_dim: w.dim,
                        endpoint,
                        endpoint_dim: d,
                    }),
                    Some(_) => {}
                }
            }
            sources.entry(w.src).or_default().push(w.id);
            sinks.entry(w.dst).or_default().push(w.id);
        }
        for (src, ws) in &sources {
            if ws.len() > 1 {
                defects.push(Defect::PortReuse {
                    endpoint: src.to_string(),
                    wires: ws.clone(),
                });
            }
        }
        for (dst, ws) in &sinks {
            if ws.len() > 1 {
                defects.push(Defect::PortReuse {
                    endpoint: dst.to_string(),
                    wires: ws.clone(),
                });
            }
        }
        for (&id, spec) in &self.nodes {
            for port in 0..spec.num_outputs() {
                if !sources.contains_key(&Source::node(id, port)) {
                    defects.push(Defect::DanglingPort {
                        node: id,
                        port,
                        direction: Direction::Output,
                    });
                }
            }
            for port in 0..spec.num_inputs() {
                if !sinks.contains_key(&Sink::node(id, port)) {
                    defects.push(Defect::DanglingPort {
                        node: id,
                        port,
                        direction: Direction::Input,
                    });
                }
            }
        }
        for slot in 0..self.inputs.len() {
            if !sources.contains_key(&Source::Input(slot)) {
                defects.push(Defect::UnboundBoundary {
                    slot,
                    direction: Direction::Input,
                });
            }
        }
        for slot in 0..self.outputs.len() {
            if !sinks.contains_key(&Sink::Output(slot)) {
                defects.push(Defect::UnboundBoundary {
                    slot,
                    direction: Direction::Output,
                });
            }
        }
        defects
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let defects = self.validate();
        if defects.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDiagram(defects))
        }
    }

    /// Sequential composition `self ∘ first`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if first.outputs != self.inputs {
            return Err(Error::BoundaryMismatch(format!(
                "outputs {:?} do not match inputs {:?}",
                first.outputs, self.inputs
            )));
        }
        let mut out = first.clone();
        out.outputs = self.outputs.clone();
        let offset = first.next_node;
        let shift_src = |s: Source| match s {
            Source::Node { node, port } => Source::node(node + offset, port),
            other => other,
        };
        let shift_dst = |s: Sink| match s {
            Sink::Node { node, port } => Sink::node(node + offset, port),
            other => other,
        };
        for (&id, spec) in &self.nodes {
            out.insert_node(id + offset, spec.clone());
        }
        out.next_node = out.next_node.max(offset + self.next_node);
        // first's wires ending on an output slot are glued to self's wire
        // leaving the matching input slot
        let mut dangling: BTreeMap<usize, Wire> = BTreeMap::new();
        for w in first.wires.values() {
            if let Sink::Output(slot) = w.dst {
                out.wires.remove(&w.id);
                dangling.insert(slot, *w);
            }
        }
        for w in self.wires.values() {
            let src = match w.src {
                Source::Input(slot) => match dangling.get(&slot) {
                    Some(prev) => prev.src,
                    None => Source::Input(usize::MAX),
                },
                other => shift_src(other),
            };
            out.add_wire(w.dim, src, shift_dst(w.dst));
        }
        out.scalar = self.scalar.mul(&first.scalar);
        Ok(out)
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        let offset = self.next_node;
        let (in_off, out_off) = (self.inputs.len(), self.outputs.len());
        for (&id, spec) in &other.nodes {
            out.insert_node(id + offset, spec.clone());
        }
        out.next_node = out.next_node.max(offset + other.next_node);
        out.inputs.extend(&other.inputs);
        out.outputs.extend(&other.outputs);
        for w in other.wires.values() {
            let src = match w.src {
                Source::Input(i) => Source::Input(i + in_off),
                Source::Node { node, port } => Source::node(node + offset, port),
            };
            let dst = match w.dst {
                Sink::Output(i) => Sink::Output(i + out_off),
                Sink::Node { node, port } => Sink::node(node + offset, port),
            };
            out.add_wire(w.dim, src, dst);
        }
        out.scalar = self.scalar.mul(&other.scalar);
        out
    }

    /// Mirror image: boundaries swap, every node is daggered and every wire
    /// reversed. Output port `p` of a node becomes input port `p` of its
    /// adjoint and vice versa.
    pub fn dagger(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|(&id, spec)| (id, spec.dagger()))
            .collect();
        let wires = self
            .wires
            .values()
            .map(|w| {
                let src = match w.dst {
                    Sink::Output(i) => Source::Input(i),
                    Sink::Node { node, port } => Source::node(node, port),
                };
                let dst = match w.src {
                    Source::Input(i) => Sink::Output(i),
                    Source::Node { node, port } => Sink::node(node, port),
                };
                (w.id, Wire { src, dst, ..*w })
            })
            .collect();
        Self {
            nodes,
            wires,
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            scalar: self.scalar.conj(),
            next_node: self.next_node,
            next_wire: self.next_wire,
        }
    }

    /// Value of the diagram: scalar accumulator times the contracted network,
    /// legs ordered outputs then inputs.
    pub fn evaluate(&self) -> Result<Tensor<T>> {
        self.ensure_valid()?;
        let index: HashMap<NodeId, usize> = self.nodes.keys().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut tensors = Vec::with_capacity(self.nodes.len());
        let mut num_outputs = Vec::with_capacity(self.nodes.len());
        for spec in self.nodes.values() {
            tensors.push(spec.tensor()?);
            num_outputs.push(spec.num_outputs());
        }
        let mut edges = Vec::new();
        let mut out_legs = vec![None; self.outputs.len()];
        let mut in_legs = vec![None; self.inputs.len()];
        for w in self.wires.values() {
            match (w.src, w.dst) {
                (Source::Input(i), Sink::Output(o)) => {
                    let n = tensors.len();
                    tensors.push(Tensor::identity(&[w.dim]));
                    out_legs[o] = Some((n, 0));
                    in_legs[i] = Some((n, 1));
                }
                (Source::Input(i), Sink::Node { node, port }) => {
                    let n = index[&node];
                    in_legs[i] = Some((n, num_outputs[n] + port));
                }
                (Source::Node { node, port }, Sink::Output(o)) => {
                    out_legs[o] = Some((index[&node], port));
                }
                (Source::Node { node: a, port: pa }, Sink::Node { node: b, port: pb }) => {
                    let (na, nb) = (index[&a], index[&b]);
                    edges.push(NetworkEdge::new(na, pa, nb, num_outputs[nb] + pb));
                }
            }
        }
        let boundary: Vec<BoundaryLeg> = out_legs
            .into_iter()
            .map(|l| (l, Direction::Output))
            .chain(in_legs.into_iter().map(|l| (l, Direction::Input)))
            .map(|(l, direction)| {
                let (node, leg) = l.expect("validated boundary");
                BoundaryLeg {
                    node,
                    leg,
                    direction,
                }
            })
            .collect();
        let value = if tensors.is_empty() {
            Tensor::scalar(Complex::new(T::one(), T::zero()))
        } else {
            contract(&tensors, &edges, &boundary)?
        };
        Ok(value.scale(self.scalar.value()))
    }

    /// Equality up to wire ids.
    pub fn structurally_eq(&self, other: &Self) -> bool {
        let ends = |d: &Self| -> BTreeSet<(usize, Source, Sink)> {
            d.wires.values().map(|w| (w.dim, w.src, w.dst)).collect()
        };
        self.nodes == other.nodes
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.scalar == other.scalar
            && self.wires.len() == other.wires.len()
            && ends(self) == ends(other)
    }

    /// Applies graph surgery; new nodes receive fresh ids, untouched nodes
    /// keep theirs. Returns the ids given to the added nodes.
    pub fn apply_patch(&mut self, patch: &Patch<T>) -> Result<Vec<NodeId>> {
        let removed: BTreeSet<NodeId> = patch.remove.iter().copied().collect();
        for id in &removed {
            if self.nodes.remove(id).is_none() {
                return Err(Error::InvalidParameter(format!("node {id} does not exist")));
            }
        }
        self.wires.retain(|_, w| {
            !w.src.node_id().is_some_and(|n| removed.contains(&n))
                && !w.dst.node_id().is_some_and(|n| removed.contains(&n))
        });
        let ids: Vec<NodeId> = patch.add.iter().map(|s| self.add_node(s.clone())).collect();
        for &(src, dst) in &patch.wires {
            let src = match src {
                PatchSource::Existing(s) => s,
                PatchSource::New(i, port) => Source::node(ids[i], port),
            };
            let dst = match dst {
                PatchSink::Existing(s) => s,
                PatchSink::New(i, port) => Sink::node(ids[i], port),
            };
            let dim = self
                .source_dim(src)
                .ok_or_else(|| Error::InvalidParameter(format!("{src} does not exist")))?;
            self.add_wire(dim, src, dst);
        }
        self.scalar = self.scalar.mul(&patch.scalar);
        Ok(ids)
    }

    /// Converts amplitudes to another precision.
    pub fn cast<U: Real>(&self) -> Diagram<U> {
        use crate::generators::{Dot, GeneratorKind as K};
        let cast_dot = |d: &Dot<T>| Dot {
            dim: d.dim,
            inputs: d.inputs,
            outputs: d.outputs,
            color: d.color.as_ref().map(Tensor::cast),
        };
        let cast_c = |c: Complex<T>| {
            Complex::new(
                U::of_f64(c.re.to_f64().unwrap_or(f64::NAN)),
                U::of_f64(c.im.to_f64().unwrap_or(f64::NAN)),
            )
        };
        let nodes = self
            .nodes
            .iter()
            .map(|(&id, spec)| {
                let kind = match &spec.kind {
                    K::H { dim } => K::H { dim: *dim },
                    K::Neg { dim } => K::Neg { dim: *dim },
                    K::ZPow { dim, exp } => K::ZPow { dim: *dim, exp: *exp },
                    K::XPow { dim, exp } => K::XPow { dim: *dim, exp: *exp },
                    K::Add { dim } => K::Add { dim: *dim },
                    K::Nadd { dim } => K::Nadd { dim: *dim },
                    K::Swap { first, second } => K::Swap {
                        first: *first,
                        second: *second,
                    },
                    K::BasisState { dim, index } => K::BasisState {
                        dim: *dim,
                        index: *index,
                    },
                    K::PlusState { dim } => K::PlusState { dim: *dim },
                    K::BellState { dim, a, b } => K::BellState {
                        dim: *dim,
                        a: *a,
                        b: *b,
                    },
                    K::Cup { dim } => K::Cup { dim: *dim },
                    K::Cap { dim } => K::Cap { dim: *dim },
                    K::NormalizedCup { dim } => K::NormalizedCup { dim: *dim },
                    K::NormalizedCap { dim } => K::NormalizedCap { dim: *dim },
                    K::CopyDot(d) => K::CopyDot(cast_dot(d)),
                    K::PlusDot(d) => K::PlusDot(cast_dot(d)),
                    K::Box { label, tensor } => K::Box {
                        label: label.clone(),
                        tensor: tensor.cast(),
                    },
                    K::ScalarNode { value } => K::ScalarNode {
                        value: cast_c(*value),
                    },
                };
                (
                    id,
                    GeneratorSpec {
                        kind,
                        adjoint: spec.adjoint,
                    },
                )
            })
            .collect();
        Diagram {
            nodes,
            wires: self.wires.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            scalar: ScalarFactor {
                root_powers: self.scalar.root_powers.clone(),
                coeff: cast_c(self.scalar.coeff),
            },
            next_node: self.next_node,
            next_wire: self.next_wire,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{self as g, GeneratorSpec as G};

    type D = Diagram<f64>;
    type C = Complex<f64>;
    const TOL: f64 = 1e-9;

    fn eq(a: &Tensor<f64>, b: &Tensor<f64>) -> bool {
        a.equal_within(b, TOL).unwrap()
    }

    fn gate(spec: G<f64>) -> D {
        D::from_generator(spec)
    }

    #[test]
    fn idle_wires_compose() {
        let w = D::identity(&[3]);
        let ww = w.compose(&w).unwrap();
        assert!(ww.validate().is_empty());
        assert!(eq(&ww.evaluate().unwrap(), &Tensor::identity(&[3])));
    }

    #[test]
    fn snake_is_identity() {
        // (I ⊗ ε) ∘ (η ⊗ I)
        let d = 3;
        let left = gate(G::cup(d)).tensor(&D::identity(&[d]));
        let right = D::identity(&[d]).tensor(&gate(G::cap(d)));
        let snake = right.compose(&left).unwrap();
        assert!(snake.validate().is_empty());
        assert!(eq(&snake.evaluate().unwrap(), &Tensor::identity(&[d])));
    }

    #[test]
    fn closed_loop_evaluates_to_dimension() {
        let lp = gate(G::cap(3)).compose(&gate(G::cup(3))).unwrap();
        let v = lp.evaluate().unwrap();
        assert!((v.data()[0] - C::new(3., 0.)).norm() < 1e-12);
    }

    #[test]
    fn hadamard_twice_is_not_identity_but_negation() {
        let hh = gate(G::h(3)).compose(&gate(G::h(3))).unwrap();
        assert!(eq(&hh.evaluate().unwrap(), &g::neg(3).unwrap()));
        let hh2 = gate(G::h(2)).compose(&gate(G::h(2))).unwrap();
        assert!(eq(&hh2.evaluate().unwrap(), &Tensor::identity(&[2])));
    }

    #[test]
    fn tensor_with_empty_and_kron() {
        let x = gate(G::x_pow(3, 1));
        assert!(D::empty().tensor(&x).structurally_eq(&x));
        let xz = x.tensor(&gate(G::z_pow(3, 2)));
        let expected = g::x_pow::<f64>(3, 1).unwrap().kron(&g::z_pow(3, 2).unwrap());
        assert!(eq(&xz.evaluate().unwrap(), &expected));
    }

    #[test]
    fn nadd_qubit_is_cnot() {
        let v = gate(G::nadd(2)).evaluate().unwrap();
        assert!(eq(&v, &g::add(2).unwrap()));
    }

    #[test]
    fn dagger_of_state_and_dot() {
        let psi = gate(G::bell_state(3, 1, 2));
        let eff = psi.dagger();
        assert_eq!(eff.inputs(), &[3, 3]);
        assert!(eq(&eff.evaluate().unwrap(), &psi.evaluate().unwrap().dagger()));
        assert!(psi.dagger().dagger().structurally_eq(&psi));
        let copy = gate(G::copy_dot(2, 1, 2)).dagger();
        assert_eq!(copy.node(0).unwrap(), &G::copy_dot(2, 2, 1));
    }

    #[test]
    fn swap_squares_to_identity_and_fixes_cup() {
        let s = gate(G::swap(2, 3));
        let ss = gate(G::swap(3, 2)).compose(&s).unwrap();
        assert!(eq(&ss.evaluate().unwrap(), &Tensor::identity(&[2, 3])));
        let cup = gate(G::cup(3));
        let swapped = gate(G::swap(3, 3)).compose(&cup).unwrap();
        assert!(eq(&swapped.evaluate().unwrap(), &cup.evaluate().unwrap()));
    }

    #[test]
    fn compose_rejects_boundary_mismatch() {
        let r = gate(G::h(2)).compose(&gate(G::h(3)));
        assert!(matches!(r, Err(Error::BoundaryMismatch(_))));
    }

    #[test]
    fn scalars_multiply() {
        let a = D::from_scalar(C::new(2., 0.));
        let b = D::from_scalar(C::new(0., 3.));
        let v = a.tensor(&b).evaluate().unwrap();
        assert!((v.data()[0] - C::new(0., 6.)).norm() < 1e-12);
        assert!((a.compose(&b).unwrap().scalar.value() - C::new(0., 6.)).norm() < 1e-12);
    }

    #[test]
    fn validate_reports_defects() {
        let mut d = gate(G::h(3));
        let w = *d.wires().values().next().unwrap();
        d.insert_wire(Wire { dim: 2, ..w });
        assert!(matches!(d.validate()[..], [Defect::DimMismatch { .. }, ..]));

        let mut d = gate(G::h(3));
        d.add_output(3);
        d.add_wire(3, Source::node(0, 0), Sink::Output(1));
        let defects = d.validate();
        assert!(defects.iter().any(|x| matches!(x, Defect::PortReuse { .. })));

        let mut d = D::empty();
        d.add_node(G::h(2));
        let defects = d.validate();
        assert_eq!(defects.len(), 2);
        assert!(matches!(d.evaluate(), Err(Error::InvalidDiagram(_))));
    }

    #[test]
    fn patch_rewires_through() {
        // X · X^{-1} replaced by a plain wire
        let mut d = gate(G::x_pow(3, 2)).compose(&gate(G::x_pow(3, 1))).unwrap();
        let adj = d.adjacency();
        let before = d.wire(adj.into_port(0, 0).unwrap()).unwrap().src;
        let after = d.wire(adj.out_of_port(1, 0).unwrap()).unwrap().dst;
        let mut p = Patch::new(vec![0, 1]);
        p.wire(PatchSource::Existing(before), PatchSink::Existing(after));
        d.apply_patch(&p).unwrap();
        assert_eq!(d.node_count(), 0);
        assert!(d.structurally_eq(&D::identity(&[3])) || d.validate().is_empty());
        assert!(eq(&d.evaluate().unwrap(), &Tensor::identity(&[3])));
    }

    #[test]
    fn f32_evaluation() {
        let d: Diagram<f32> = gate(G::h(3)).compose(&gate(G::h(3))).unwrap().cast();
        let v = d.evaluate().unwrap();
        assert!(v.equal_within(&g::neg(3).unwrap(), 1e-5).unwrap());
    }
}
