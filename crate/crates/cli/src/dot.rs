//! Graphviz export.

use std::fmt::Write;

use qcat::diagram::{Sink, Source};
use qcat::generators::GeneratorKind as K;
use qcat::report::format_complex;
use qcat::{Diagram, GeneratorSpec};

fn label(spec: &GeneratorSpec) -> String {
    let dag = if spec.adjoint { "†" } else { "" };
    let ket = |s: String| if spec.adjoint { format!("⟨{s}|") } else { format!("|{s}⟩") };
    match &spec.kind {
        K::ZPow { exp, .. } => format!("Z^{exp}{dag}"),
        K::XPow { exp, .. } => format!("X^{exp}{dag}"),
        K::Swap { .. } => format!("SWAP{dag}"),
        K::BasisState { index, .. } => ket(index.to_string()),
        K::PlusState { .. } => ket("+".into()),
        K::BellState { a, b, .. } => ket(format!("B{a},{b}")),
        K::Cup { .. } => if spec.adjoint { "∩" } else { "∪" }.into(),
        K::Cap { .. } => if spec.adjoint { "∪" } else { "∩" }.into(),
        K::NormalizedCup { .. } => if spec.adjoint { "⟨∩|" } else { "|∪⟩" }.into(),
        K::NormalizedCap { .. } => if spec.adjoint { "|∪⟩" } else { "⟨∩|" }.into(),
        K::CopyDot(dot) | K::PlusDot(dot) => {
            let glyph = if matches!(spec.kind, K::CopyDot(_)) { "•" } else { "⊕" };
            let color = if dot.color.is_some() { " U" } else { "" };
            format!("{glyph}{color}{dag}")
        }
        K::Box { label, .. } => format!("{label}{dag}"),
        K::ScalarNode { value } => {
            let v = if spec.adjoint { value.conj() } else { *value };
            format_complex(v.re, v.im)
        }
        other => format!("{}{dag}", other.name()),
    }
}

fn shape(spec: &GeneratorSpec) -> &'static str {
    match &spec.kind {
        K::CopyDot(_) | K::PlusDot(_) => "circle",
        K::Cup { .. } | K::Cap { .. } | K::NormalizedCup { .. } | K::NormalizedCap { .. } => "plain",
        K::ScalarNode { .. } => "ellipse",
        _ => "box",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Deterministic Graphviz text: inputs ranked left, outputs right.
pub fn to_dot(d: &Diagram) -> String {
    let mut s = String::new();
    s.push_str("digraph qcat {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n");
    if !d.scalar.is_one() {
        let _ = writeln!(s, "  label=\"scalar {}\";", escape(&d.scalar.to_string()));
    }
    s.push_str("  { rank=source;");
    for (i, dim) in d.inputs().iter().enumerate() {
        let _ = write!(s, " in{i} [shape=point, xlabel=\"in{i}:{dim}\"];");
    }
    s.push_str(" }\n  { rank=sink;");
    for (i, dim) in d.outputs().iter().enumerate() {
        let _ = write!(s, " out{i} [shape=point, xlabel=\"out{i}:{dim}\"];");
    }
    s.push_str(" }\n");
    for (id, spec) in d.nodes() {
        let _ = writeln!(s, "  n{id} [shape={}, label=\"{}\"];", shape(spec), escape(&label(spec)));
    }
    for w in d.wires().values() {
        let (from, tail) = match w.src {
            Source::Input(i) => (format!("in{i}"), None),
            Source::Node { node, port } => (format!("n{node}"), multi(d, node, port, true)),
        };
        let (to, head) = match w.dst {
            Sink::Output(o) => (format!("out{o}"), None),
            Sink::Node { node, port } => (format!("n{node}"), multi(d, node, port, false)),
        };
        let mut attrs = vec![format!("label=\"{}\"", w.dim)];
        if let Some(t) = tail {
            attrs.push(format!("taillabel=\"{t}\""));
        }
        if let Some(h) = head {
            attrs.push(format!("headlabel=\"{h}\""));
        }
        let _ = writeln!(s, "  {from} -> {to} [{}];", attrs.join(", "));
    }
    s.push_str("}\n");
    s
}

/// Port number, shown only where a node has several ports on that side.
fn multi(d: &Diagram, node: usize, port: usize, output: bool) -> Option<usize> {
    let spec = d.node(node)?;
    let n = if output { spec.num_outputs() } else { spec.num_inputs() };
    (n > 1).then_some(port)
}
