//! The `.qcat.json` diagram file format, version 1.
//!
//! ```json
//! {
//!   "format": "qcat",
//!   "version": 1,
//!   "dim": 2,
//!   "inputs": [2, 2],
//!   "outputs": [2, 2],
//!   "nodes": [{ "id": 0, "kind": "NADD" }],
//!   "wires": [
//!     { "id": 0, "from": { "input": 0 }, "to": { "node": 0, "port": 0 } },
//!     ...
//!   ]
//! }
//! ```
//!
//! Node `dim` defaults to the top-level `dim`. Kind-specific integers go in
//! `params`: `[exp]` for `Zpow`/`Xpow`, `[first, second]` for `SWAP`,
//! `[index]` for `BasisState`, `[a, b]` for `BellState` and
//! `[inputs, outputs]` for dots. Dots may carry a row-major `color` unitary,
//! boxes carry `label`, leg dims and row-major `amplitudes`. Complex numbers
//! are `[re, im]` pairs. Wire dimensions are read off their source.
//!
//! Wires of dimension 1 carry no information and are not written. On load,
//! unwired dimension-1 sources and sinks are paired up in sorted order.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Sink, Source, Wire};
use crate::error::{Error, Result};
use crate::generators::{Dot, GeneratorKind as K, GeneratorSpec};
use crate::scalar::{Real, ScalarFactor};
use crate::tensor::Tensor;

pub const FORMAT: &str = "qcat";
pub const VERSION: u32 = 1;
pub const EXTENSION: &str = ".qcat.json";

type Pair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramDocument {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ScalarDoc>,
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub wires: Vec<WireDoc>,
}

/// `coeff · Π √d^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDoc {
    pub coeff: Pair,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roots: BTreeMap<usize, i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<i64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub adjoint: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Pair>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum EndDoc {
    Input { input: usize },
    Output { output: usize },
    Port { node: usize, port: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDoc {
    pub id: usize,
    pub from: EndDoc,
    pub to: EndDoc,
}

fn pair<T: Real>(z: Complex<T>) -> Pair {
    [z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN)]
}

fn complex<T: Real>(p: Pair) -> Complex<T> {
    Complex::new(T::of_f64(p[0]), T::of_f64(p[1]))
}

fn spec_dim<T>(kind: &K<T>) -> Option<usize> {
    match kind {
        K::H { dim }
        | K::Neg { dim }
        | K::ZPow { dim, .. }
        | K::XPow { dim, .. }
        | K::Add { dim }
        | K::Nadd { dim }
        | K::BasisState { dim, .. }
        | K::PlusState { dim }
        | K::BellState { dim, .. }
        | K::Cup { dim }
        | K::Cap { dim }
        | K::NormalizedCup { dim }
        | K::NormalizedCap { dim } => Some(*dim),
        K::CopyDot(dot) | K::PlusDot(dot) => Some(dot.dim),
        K::Swap { .. } | K::Box { .. } | K::ScalarNode { .. } => None,
    }
}

/// Most common node dimension, ties to the smaller one.
fn default_dim<T: Real>(d: &Diagram<T>) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in d.nodes().values() {
        if let Some(dim) = spec_dim(&s.kind) {
            *counts.entry(dim).or_default() += 1;
        }
    }
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(d, _)| *d)
}

fn node_doc<T: Real>(id: usize, spec: &GeneratorSpec<T>, default: Option<usize>) -> NodeDoc {
    let mut doc = NodeDoc {
        id,
        kind: spec.kind.name().to_string(),
        dim: spec_dim(&spec.kind).filter(|d| Some(*d) != default),
        params: Vec::new(),
        adjoint: spec.adjoint,
        label: None,
        outputs: None,
        inputs: None,
        color: None,
        amplitudes: None,
    };
    match &spec.kind {
        K::ZPow { exp, .. } | K::XPow { exp, .. } => doc.params = vec![*exp as i64],
        K::Swap { first, second } => doc.params = vec![*first as i64, *second as i64],
        K::BasisState { index, .. } => doc.params = vec![*index as i64],
        K::BellState { a, b, .. } => doc.params = vec![*a as i64, *b as i64],
        K::CopyDot(dot) | K::PlusDot(dot) => {
            doc.params = vec![dot.inputs as i64, dot.outputs as i64];
            doc.color = dot.color.as_ref().map(|u| u.data().iter().map(|z| pair(*z)).collect());
        }
        K::Box { label, tensor } => {
            doc.label = Some(label.clone());
            doc.outputs = Some(tensor.output_dims());
            doc.inputs = Some(tensor.input_dims());
            doc.amplitudes = Some(tensor.data().iter().map(|z| pair(*z)).collect());
        }
        K::ScalarNode { value } => doc.amplitudes = Some(vec![pair(*value)]),
        _ => {}
    }
    doc
}

fn end_of_source(s: Source) -> EndDoc {
    match s {
        Source::Input(input) => EndDoc::Input { input },
        Source::Node { node, port } => EndDoc::Port { node, port },
    }
}

fn end_of_sink(s: Sink) -> EndDoc {
    match s {
        Sink::Output(output) => EndDoc::Output { output },
        Sink::Node { node, port } => EndDoc::Port { node, port },
    }
}

impl DiagramDocument {
    pub fn from_diagram<T: Real>(d: &Diagram<T>) -> Self {
        let dim = default_dim(d);
        let scalar = (!d.scalar.is_one()).then(|| ScalarDoc {
            coeff: pair(d.scalar.coeff),
            roots: d.scalar.root_powers.clone(),
        });
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            dim,
            inputs: d.inputs().to_vec(),
            outputs: d.outputs().to_vec(),
            scalar,
            nodes: d.nodes().iter().map(|(id, s)| node_doc(*id, s, dim)).collect(),
            wires: d
                .wires()
                .values()
                .filter(|w| w.dim != 1)
                .map(|w| WireDoc {
                    id: w.id,
                    from: end_of_source(w.src),
                    to: end_of_sink(w.dst),
                })
                .collect(),
        }
    }

    /// Builds the diagram. Only structural problems (unknown kinds, bad
    /// parameters, unreadable wires) are errors; graph defects are left for
    /// [`Diagram::validate`].
    pub fn to_diagram<T: Real>(&self) -> Result<Diagram<T>> {
        if self.format != FORMAT {
            return Err(Error::Document(format!("unknown format {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Document(format!("unsupported version {}", self.version)));
        }
        let mut d = Diagram::empty();
        for &dim in &self.inputs {
            d.add_input(dim);
        }
        for &dim in &self.outputs {
            d.add_output(dim);
        }
        if let Some(s) = &self.scalar {
            d.scalar = ScalarFactor {
                root_powers: s.roots.clone(),
                coeff: complex(s.coeff),
            };
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(Error::Document(format!("duplicate node id {}", n.id)));
            }
            d.insert_node(n.id, self.node_spec(n)?);
        }
        let mut wire_ids = BTreeSet::new();
        for w in &self.wires {
            if !wire_ids.insert(w.id) {
                return Err(Error::Document(format!("duplicate wire id {}", w.id)));
            }
            let src = match w.from {
                EndDoc::Input { input } => Source::Input(input),
                EndDoc::Port { node, port } => Source::node(node, port),
                EndDoc::Output { .. } => {
                    return Err(Error::Document(format!("wire {} starts at an output", w.id)))
                }
            };
            let dst = match w.to {
                EndDoc::Output { output } => Sink::Output(output),
                EndDoc::Port { node, port } => Sink::node(node, port),
                EndDoc::Input { .. } => return Err(Error::Document(format!("wire {} ends at an input", w.id))),
            };
            let dim = d
                .source_dim(src)
                .or_else(|| d.sink_dim(dst))
                .ok_or_else(|| Error::Document(format!("wire {} has no known endpoint", w.id)))?;
            d.insert_wire(Wire { id: w.id, dim, src, dst });
        }
        restore_unit_wires(&mut d);
        Ok(d)
    }

    fn node_spec<T: Real>(&self, n: &NodeDoc) -> Result<GeneratorSpec<T>> {
        let bad = |why: &str| Error::Document(format!("node {} ({}): {why}", n.id, n.kind));
        let dim = || n.dim.or(self.dim).ok_or_else(|| bad("no dimension"));
        let params = |k: usize| -> Result<Vec<usize>> {
            if n.params.len() != k {
                return Err(bad(&format!("expected {k} params, found {}", n.params.len())));
            }
            n.params
                .iter()
                .map(|&p| usize::try_from(p).map_err(|_| bad("negative parameter")))
                .collect()
        };
        let exp = || -> Result<i64> {
            match n.params[..] {
                [e] => Ok(e),
                _ => Err(bad("expected 1 param")),
            }
        };
        let kind = match n.kind.as_str() {
            "H" => K::H { dim: dim()? },
            "NEG" => K::Neg { dim: dim()? },
            "Zpow" => GeneratorSpec::z_pow(dim()?, exp()?).kind,
            "Xpow" => GeneratorSpec::x_pow(dim()?, exp()?).kind,
            "ADD" => K::Add { dim: dim()? },
            "NADD" => K::Nadd { dim: dim()? },
            "SWAP" => {
                let p = params(2)?;
                K::Swap { first: p[0], second: p[1] }
            }
            "BasisState" => K::BasisState { dim: dim()?, index: params(1)?[0] },
            "PlusState" => K::PlusState { dim: dim()? },
            "BellState" => {
                let p = params(2)?;
                K::BellState { dim: dim()?, a: p[0], b: p[1] }
            }
            "Cup" => K::Cup { dim: dim()? },
            "Cap" => K::Cap { dim: dim()? },
            "NormalizedCup" => K::NormalizedCup { dim: dim()? },
            "NormalizedCap" => K::NormalizedCap { dim: dim()? },
            "CopyDot" | "PlusDot" => {
                let p = params(2)?;
                let dim = dim()?;
                let color = n
                    .color
                    .as_ref()
                    .map(|c| Tensor::from_matrix(&[dim], &[dim], c.iter().map(|z| complex(*z)).collect()))
                    .transpose()
                    .map_err(|e| bad(&e.to_string()))?;
                let dot = Dot {
                    dim,
                    inputs: p[0],
                    outputs: p[1],
                    color,
                };
                if n.kind == "CopyDot" {
                    K::CopyDot(dot)
                } else {
                    K::PlusDot(dot)
                }
            }
            "Box" => {
                let outs = n.outputs.clone().unwrap_or_default();
                let ins = n.inputs.clone().unwrap_or_default();
                let amps = n.amplitudes.as_ref().ok_or_else(|| bad("missing amplitudes"))?;
                let tensor = Tensor::from_matrix(&outs, &ins, amps.iter().map(|z| complex(*z)).collect())
                    .map_err(|e| bad(&e.to_string()))?;
                K::Box {
                    label: n.label.clone().unwrap_or_default(),
                    tensor,
                }
            }
            "ScalarNode" => match n.amplitudes.as_deref() {
                Some([v]) => K::ScalarNode { value: complex(*v) },
                _ => return Err(bad("expected one amplitude")),
            },
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        Ok(GeneratorSpec {
            kind,
            adjoint: n.adjoint,
        })
    }
}

/// Pairs unwired dimension-1 sources with unwired dimension-1 sinks.
fn restore_unit_wires<T: Real>(d: &mut Diagram<T>) {
    let used_src: BTreeSet<Source> = d.wires().values().map(|w| w.src).collect();
    let used_dst: BTreeSet<Sink> = d.wires().values().map(|w| w.dst).collect();
    let mut sources: Vec<Source> = (0..d.inputs().len())
        .filter(|&i| d.inputs()[i] == 1)
        .map(Source::Input)
        .collect();
    let mut sinks: Vec<Sink> = (0..d.outputs().len())
        .filter(|&i| d.outputs()[i] == 1)
        .map(Sink::Output)
        .collect();
    for (&id, spec) in d.nodes() {
        for (p, dim) in spec.output_dims().into_iter().enumerate() {
            if dim == 1 {
                sources.push(Source::node(id, p));
            }
        }
        for (p, dim) in spec.input_dims().into_iter().enumerate() {
            if dim == 1 {
                sinks.push(Sink::node(id, p));
            }
        }
    }
    sources.retain(|s| !used_src.contains(s));
    sinks.retain(|s| !used_dst.contains(s));
    sources.sort();
    sinks.sort();
    for (src, dst) in sources.into_iter().zip(sinks) {
        d.add_wire(1, src, dst);
    }
}

/// Parses a document; JSON or schema problems become [`Error::Document`].
pub fn parse<T: Real>(text: &str) -> Result<Diagram<T>> {
    let doc: DiagramDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    doc.to_diagram()
}

/// Pretty JSON with a trailing newline.
pub fn serialize<T: Real>(d: &Diagram<T>) -> String {
    let doc = DiagramDocument::from_diagram(d);
    let mut s = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec as G;
    use crate::random::{random_tensor, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Diagram<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 3;
        let u = random_unitary::<f64, _>(d, &mut rng);
        let colored = crate::generators::recolor(&G::copy_dot(d, 1, 2), &u).unwrap();
        let a = Diagram::from_generator(G::nadd(d)).compose(&Diagram::from_generator(colored)).unwrap();
        let b = Diagram::from_generator(G::boxed("f", random_tensor(&[d], &[2], &mut rng)));
        let mut out = a.tensor(&b).tensor(&Diagram::from_generator(G::swap(2, 3)));
        out = out.tensor(&Diagram::from_generator(G::z_pow(5, -1).dagger()));
        out.scalar = ScalarFactor::sqrt_power(3, -1).mul(&ScalarFactor::from_complex(Complex::new(0.5, -0.25)));
        out
    }

    #[test]
    fn round_trip_is_structural_and_byte_stable() {
        let d = sample();
        let text = serialize(&d);
        let back: Diagram<f64> = parse(&text).unwrap();
        assert!(back.structurally_eq(&d));
        assert_eq!(serialize(&back), text);
        assert!(back.evaluate().unwrap().equal_within(&d.evaluate().unwrap(), 0.0).unwrap());
    }

    #[test]
    fn unit_wires_are_elided_and_restored() {
        let t = Tensor::<f64>::from_fn(&[1, 2], &[2], |o, i| Complex::new((o[1] + 2 * i[0]) as f64, 0.0));
        let e = Tensor::<f64>::from_fn(&[], &[1], |_, _| Complex::new(3.0, 0.0));
        let d = Diagram::from_generator(G::boxed("e", e))
            .tensor(&Diagram::identity(&[2]))
            .compose(&Diagram::from_generator(G::boxed("t", t)))
            .unwrap();
        let text = serialize(&d);
        let back: Diagram<f64> = parse(&text).unwrap();
        assert_eq!(back.wires().len(), d.wires().len());
        assert!(back.validate().is_empty());
        assert!(back.evaluate().unwrap().equal_within(&d.evaluate().unwrap(), 1e-12).unwrap());
        assert_eq!(serialize(&back), text);
    }

    #[test]
    fn parse_errors_are_document_errors() {
        for text in [
            "{",
            r#"{"format":"qcat","version":2}"#,
            r#"{"format":"other","version":1}"#,
            r#"{"format":"qcat","version":1,"nodes":[{"id":0,"kind":"Frob","dim":2}]}"#,
            r#"{"format":"qcat","version":1,"nodes":[{"id":0,"kind":"Zpow","dim":2}]}"#,
            r#"{"format":"qcat","version":1,"nodes":[{"id":0,"kind":"H"}]}"#,
        ] {
            assert!(matches!(parse::<f64>(text), Err(Error::Document(_))), "{text}");
        }
    }

    #[test]
    fn graph_defects_survive_parsing() {
        let text = r#"{"format":"qcat","version":1,"dim":2,"outputs":[2],
            "nodes":[{"id":0,"kind":"H"}],
            "wires":[{"id":0,"from":{"node":0,"port":0},"to":{"output":0}}]}"#;
        let d: Diagram<f64> = parse(text).unwrap();
        assert!(!d.validate().is_empty());
    }

    #[test]
    fn empty_scalar_document() {
        let text = r#"{"format":"qcat","version":1,"scalar":{"coeff":[2.0,0.0]}}"#;
        let d: Diagram<f64> = parse(text).unwrap();
        assert_eq!(d.evaluate().unwrap().data(), &[Complex::new(2.0, 0.0)]);
    }
}
