use super::samples as s;
use super::RewriteRule;
use crate::diagram::{Adjacency, Diagram, NodeId, Patch, PatchSink, PatchSource, Sink, Source};
use crate::generators::{Dot, DotKind, GeneratorKind, GeneratorKind as K, GeneratorSpec};
use crate::scalar::{modulo, Real, ScalarFactor};

use PatchSink as PK;
use PatchSource as PS;

pub(super) fn catalog<T: Real>() -> Vec<RewriteRule<T>> {
    vec![
        RewriteRule::new("spider-copy", "fuse adjacent copy dots of equal color", spider_copy, s::spider_copy),
        RewriteRule::new("spider-plus", "fuse plus dots joined through NEG glue", spider_plus, s::spider_plus),
        RewriteRule::new("prune-copy", "|+> on a copy dot leg removes the leg (1/sqrt d)", prune_copy, s::prune_copy),
        RewriteRule::new("prune-plus", "|0> on a plus dot leg removes the leg (1/sqrt d)", prune_plus, s::prune_plus),
        RewriteRule::new("snake", "cup and cap sharing one wire straighten", snake, s::snake),
        RewriteRule::new("loop-elim", "closed loop becomes its dimension", loop_elim, s::loop_elim),
        RewriteRule::new("slide", "move a one-qudit gate around a cup or cap, transposed", slide, s::slide),
        RewriteRule::new("cup-symmetry", "SWAP on the legs of a cup or cap is absorbed", cup_symmetry, s::cup_symmetry),
        RewriteRule::new("conjugate-state", "effect on a cup leg becomes a state on the other", conjugate_state, s::conjugate_state),
        RewriteRule::new("dot-bend", "cup into a dot input becomes a dot output (cap dually)", dot_bend, s::dot_bend),
        RewriteRule::new("dot-dagger", "adjoint dot becomes the dot with swapped arity", dot_dagger, s::dot_dagger),
        RewriteRule::new("dot-permute", "SWAP on two legs of one dot is absorbed", dot_permute, s::dot_permute),
        RewriteRule::new("recolor", "colored dot becomes plain dot conjugated by its color", recolor, s::recolor),
        RewriteRule::new("commute-z-copy", "Z on a copy dot leg moves to output 0", commute_z_copy, s::commute_z_copy),
        RewriteRule::new("commute-x-copy", "X on a copy dot input spreads over the other legs", commute_x_copy, s::commute_x_copy),
        RewriteRule::new("commute-z-plus", "Z on a plus dot input becomes inverse Z on the other legs", commute_z_plus, s::commute_z_plus),
        RewriteRule::new("commute-x-plus", "X on a plus dot input becomes inverse X on output 0", commute_x_plus, s::commute_x_plus),
        RewriteRule::new("bialgebra", "NADD, SWAP, NADD becomes one NADD with roles swapped", bialgebra, s::bialgebra),
        RewriteRule::new("dot-bialgebra", "plus then copy becomes copies then pluses (sqrt d)", dot_bialgebra, s::dot_bialgebra),
        RewriteRule::new("hopf", "copy, NEG branch, plus becomes |0><+|", hopf, s::hopf),
        RewriteRule::new("nadd-split", "NADD becomes a copy dot and a plus dot (sqrt d)", nadd_split, s::nadd_split),
        RewriteRule::new("nadd-fuse", "copy dot feeding a plus dot becomes NADD (1/sqrt d)", nadd_fuse, s::nadd_fuse),
        RewriteRule::new("add-to-nadd", "ADD becomes NADD followed by NEG on the target", add_to_nadd, s::add_to_nadd),
        RewriteRule::new("neg-as-h2", "H H becomes NEG", neg_as_h2, s::neg_as_h2),
        RewriteRule::new("h4-elim", "four H in a row cancel", h4_elim, s::h4_elim),
        RewriteRule::new("neg-cancel", "NEG NEG cancels", neg_cancel, s::neg_cancel),
        RewriteRule::new("plus-to-neg", "one-in one-out plus dot is NEG", plus_to_neg, s::plus_to_neg),
        RewriteRule::new("copy-identity", "one-in one-out copy dot is a wire", copy_identity, s::copy_identity),
        RewriteRule::new("plus-prep", "H on |0> is |+>", plus_prep, s::plus_prep),
        RewriteRule::new("dot-scalar", "legless dot becomes its dimension", dot_scalar, s::dot_scalar),
        RewriteRule::new("pauli-fuse", "adjacent Z or X powers multiply", pauli_fuse, s::pauli_fuse),
    ]
}

/// Read access to a diagram with port lookup.
struct Ctx<'a, T> {
    d: &'a Diagram<T>,
    adj: Adjacency,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn new(d: &'a Diagram<T>) -> Self {
        Self {
            d,
            adj: d.adjacency(),
        }
    }

    fn nodes(&self) -> impl Iterator<Item = (NodeId, &'a GeneratorSpec<T>)> {
        self.d.nodes().iter().map(|(&id, s)| (id, s))
    }

    fn spec(&self, n: NodeId) -> &'a GeneratorSpec<T> {
        self.d.node(n).expect("node exists")
    }

    fn feeder(&self, n: NodeId, port: usize) -> Option<Source> {
        Some(self.d.wire(self.adj.into_port(n, port)?)?.src)
    }

    fn consumer(&self, n: NodeId, port: usize) -> Option<Sink> {
        Some(self.d.wire(self.adj.out_of_port(n, port)?)?.dst)
    }

    fn pred(&self, n: NodeId, port: usize) -> Option<(NodeId, usize)> {
        match self.feeder(n, port)? {
            Source::Node { node, port } => Some((node, port)),
            Source::Input(_) => None,
        }
    }

    fn succ(&self, n: NodeId, port: usize) -> Option<(NodeId, usize)> {
        match self.consumer(n, port)? {
            Sink::Node { node, port } => Some((node, port)),
            Sink::Output(_) => None,
        }
    }

    fn feeders(&self, n: NodeId) -> Option<Vec<Source>> {
        (0..self.spec(n).num_inputs()).map(|p| self.feeder(n, p)).collect()
    }

    fn consumers(&self, n: NodeId) -> Option<Vec<Sink>> {
        (0..self.spec(n).num_outputs()).map(|p| self.consumer(n, p)).collect()
    }
}

fn tol<T: Real>() -> T {
    T::default_tolerance()
}

fn plain_dot<T: Real>(spec: &GeneratorSpec<T>, kind: DotKind) -> Option<&Dot<T>> {
    match spec.dot() {
        Some((k, d)) if k == kind && !spec.adjoint && d.color.is_none() => Some(d),
        _ => None,
    }
}

fn any_dot<T: Real>(spec: &GeneratorSpec<T>) -> Option<(DotKind, &Dot<T>)> {
    spec.dot().filter(|_| !spec.adjoint)
}

fn dot_spec<T: Real>(kind: DotKind, dot: Dot<T>) -> GeneratorSpec<T> {
    match kind {
        DotKind::Copy => GeneratorKind::CopyDot(dot).into(),
        DotKind::Plus => GeneratorKind::PlusDot(dot).into(),
    }
}

fn is_neg<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    matches!(spec.kind, K::Neg { .. })
}

fn is_h<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    matches!(spec.kind, K::H { .. })
}

/// One-input one-output gates that slide around cups.
fn slidable<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    match &spec.kind {
        K::H { .. } | K::Neg { .. } | K::ZPow { .. } | K::XPow { .. } => true,
        K::Box { .. } => spec.num_inputs() == 1 && spec.num_outputs() == 1,
        _ => false,
    }
}

/// States and effects on one leg (dots excluded, they bend instead).
fn one_leg_end<T: Real>(spec: &GeneratorSpec<T>, inputs: usize, outputs: usize) -> bool {
    spec.dot().is_none()
        && !matches!(spec.kind, K::ScalarNode { .. })
        && spec.num_inputs() == inputs
        && spec.num_outputs() == outputs
}

fn is_cup<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    matches!(spec.kind, K::Cup { .. }) && !spec.adjoint
}

fn is_cap<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    matches!(spec.kind, K::Cap { .. }) && !spec.adjoint
}

fn wire<T: Real>(remove: Vec<NodeId>, src: Source, dst: Sink) -> Patch<T> {
    let mut p = Patch::new(remove);
    p.wire(PS::Existing(src), PK::Existing(dst));
    p
}

/// Replaces `remove` by a single node fed from `ins` and feeding `outs`.
fn single<T: Real>(remove: Vec<NodeId>, spec: GeneratorSpec<T>, ins: &[Source], outs: &[Sink]) -> Patch<T> {
    let mut p = Patch::new(remove);
    let n = p.node(spec);
    for (i, &src) in ins.iter().enumerate() {
        p.wire(PS::Existing(src), PK::New(n, i));
    }
    for (i, &dst) in outs.iter().enumerate() {
        p.wire(PS::New(n, i), PK::Existing(dst));
    }
    p
}

fn root<T: Real>(d: usize, k: i32) -> ScalarFactor<T> {
    ScalarFactor::sqrt_power(d, k)
}

// ---------------------------------------------------------------- spiders

fn spider_copy<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut pairs = std::collections::BTreeSet::new();
    for w in d.wires().values() {
        if let (Source::Node { node: a, .. }, Sink::Node { node: b, .. }) = (w.src, w.dst) {
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs
        .into_iter()
        .filter_map(|(a, b)| {
            let (ka, da) = any_dot(cx.spec(a))?;
            let (kb, db) = any_dot(cx.spec(b))?;
            if ka != DotKind::Copy || kb != DotKind::Copy || da.dim != db.dim || !da.same_color(db, tol()) {
                return None;
            }
            let inner = |n: NodeId| n == a || n == b;
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for n in [a, b] {
                for src in cx.feeders(n)? {
                    if !src.node_id().is_some_and(inner) {
                        ins.push(src);
                    }
                }
                for dst in cx.consumers(n)? {
                    if !dst.node_id().is_some_and(inner) {
                        outs.push(dst);
                    }
                }
            }
            let fused = da.with_arity(ins.len(), outs.len());
            Some(single(vec![a, b], dot_spec(DotKind::Copy, fused), &ins, &outs))
        })
        .collect()
}

/// `U†·G·U = NEG` for the glue `G` of plus dots colored by `U`.
fn is_glue<T: Real>(spec: &GeneratorSpec<T>, dot: &Dot<T>) -> bool {
    if spec.num_inputs() != 1 || spec.num_outputs() != 1 || spec.dot().is_some() {
        return false;
    }
    if is_neg(spec) && dot.color.is_none() {
        return true;
    }
    let (Ok(g), Ok(neg)) = (spec.tensor(), crate::generators::neg::<T>(dot.dim)) else {
        return false;
    };
    if g.output_dims() != [dot.dim] || g.input_dims() != [dot.dim] {
        return false;
    }
    let conj = match &dot.color {
        None => g,
        Some(u) => match u.dagger().compose(&g).and_then(|x| x.compose(u)) {
            Ok(x) => x,
            Err(_) => return false,
        },
    };
    conj.equal_within(&neg, tol()).unwrap_or(false)
}

fn spider_plus<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut pairs = std::collections::BTreeSet::new();
    for (g, spec) in cx.nodes() {
        if spec.num_inputs() != 1 || spec.num_outputs() != 1 {
            continue;
        }
        if let (Some((a, _)), Some((b, _))) = (cx.pred(g, 0), cx.succ(g, 0)) {
            if a != b && a != g && b != g {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs
        .into_iter()
        .filter_map(|(a, b)| {
            let (ka, da) = any_dot(cx.spec(a))?;
            let (kb, db) = any_dot(cx.spec(b))?;
            if ka != DotKind::Plus || kb != DotKind::Plus || da.dim != db.dim || !da.same_color(db, tol()) {
                return None;
            }
            let other = |n: NodeId| if n == a { b } else { a };
            let mut glue = Vec::new();
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for n in [a, b] {
                for src in cx.feeders(n)? {
                    match src.node_id() {
                        Some(m) if m == a || m == b => return None,
                        Some(g) if is_glue(cx.spec(g), da) && cx.pred(g, 0).map(|x| x.0) == Some(other(n)) => {
                            glue.push(g)
                        }
                        _ => ins.push(src),
                    }
                }
                for dst in cx.consumers(n)? {
                    match dst.node_id() {
                        Some(g) if is_glue(cx.spec(g), da) && cx.succ(g, 0).map(|x| x.0) == Some(other(n)) => {}
                        _ => outs.push(dst),
                    }
                }
            }
            if glue.is_empty() {
                return None;
            }
            let mut remove = vec![a, b];
            remove.extend(glue);
            let fused = da.with_arity(ins.len(), outs.len());
            Some(single(remove, dot_spec(DotKind::Plus, fused), &ins, &outs))
        })
        .collect()
}

// ---------------------------------------------------------------- pruning

fn prune_with<T: Real>(
    d: &Diagram<T>,
    kind: DotKind,
    is_pruner: impl Fn(&GeneratorSpec<T>) -> bool,
) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (dot_id, spec) in cx.nodes() {
        let Some(dot) = plain_dot(spec, kind) else { continue };
        let (Some(ins), Some(outs)) = (cx.feeders(dot_id), cx.consumers(dot_id)) else { continue };
        for (p, src) in ins.iter().enumerate() {
            let Some(state) = src.node_id() else { continue };
            let st = cx.spec(state);
            if state != dot_id && st.num_inputs() == 0 && st.num_outputs() == 1 && is_pruner(st) {
                let mut ins = ins.clone();
                ins.remove(p);
                let mut patch = single(
                    vec![dot_id, state],
                    dot_spec(kind, dot.with_arity(ins.len(), outs.len())),
                    &ins,
                    &outs,
                );
                patch.scalar = root(dot.dim, -1);
                out.push(patch);
            }
        }
        for (p, dst) in outs.iter().enumerate() {
            let Some(effect) = dst.node_id() else { continue };
            let ef = cx.spec(effect);
            if effect != dot_id && ef.num_inputs() == 1 && ef.num_outputs() == 0 && is_pruner(&ef.dagger()) {
                let mut outs = outs.clone();
                outs.remove(p);
                let mut patch = single(
                    vec![dot_id, effect],
                    dot_spec(kind, dot.with_arity(ins.len(), outs.len())),
                    &ins,
                    &outs,
                );
                patch.scalar = root(dot.dim, -1);
                out.push(patch);
            }
        }
    }
    out
}

fn prune_copy<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    prune_with(d, DotKind::Copy, |s| matches!(s.kind, K::PlusState { .. }) && !s.adjoint)
}

fn prune_plus<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    prune_with(d, DotKind::Plus, |s| {
        matches!(s.kind, K::BasisState { index: 0, .. }) && !s.adjoint
    })
}

// ---------------------------------------------------------------- cups and caps

fn snake<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (c, spec) in cx.nodes() {
        if !is_cup(spec) {
            continue;
        }
        for i in 0..2 {
            let Some((p, j)) = cx.succ(c, i) else { continue };
            if !is_cap(cx.spec(p)) || cx.succ(c, 1 - i).is_some_and(|x| x.0 == p) {
                continue;
            }
            if let (Some(src), Some(dst)) = (cx.feeder(p, 1 - j), cx.consumer(c, 1 - i)) {
                out.push(wire(vec![c, p], src, dst));
            }
        }
    }
    out
}

fn loop_elim<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter(|(_, s)| is_cup(s))
        .filter_map(|(c, spec)| {
            let (p0, _) = cx.succ(c, 0)?;
            let (p1, _) = cx.succ(c, 1)?;
            if p0 != p1 || !is_cap(cx.spec(p0)) {
                return None;
            }
            let mut patch = Patch::new(vec![c, p0]);
            patch.scalar = root(spec.output_dims()[0], 2);
            Some(patch)
        })
        .collect()
}

fn slide<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        if is_cup(spec) {
            for i in 0..2 {
                let Some((f, _)) = cx.succ(n, i) else { continue };
                let fs = cx.spec(f);
                if !slidable(fs) {
                    continue;
                }
                let (Ok(ft), Some(f_out), Some(other)) = (fs.transposed(), cx.consumer(f, 0), cx.consumer(n, 1 - i))
                else {
                    continue;
                };
                let mut p = Patch::new(vec![n, f]);
                let cup = p.node(GeneratorSpec::cup(fs.output_dims()[0]));
                let g = p.node(ft);
                p.wire(PS::New(cup, i), PK::Existing(f_out));
                p.wire(PS::New(cup, 1 - i), PK::New(g, 0));
                p.wire(PS::New(g, 0), PK::Existing(other));
                out.push(p);
            }
        }
        if is_cap(spec) {
            for i in 0..2 {
                let Some((f, _)) = cx.pred(n, i) else { continue };
                let fs = cx.spec(f);
                if !slidable(fs) {
                    continue;
                }
                let (Ok(ft), Some(f_in), Some(other)) = (fs.transposed(), cx.feeder(f, 0), cx.feeder(n, 1 - i)) else {
                    continue;
                };
                let mut p = Patch::new(vec![n, f]);
                let cap = p.node(GeneratorSpec::cap(fs.input_dims()[0]));
                let g = p.node(ft);
                p.wire(PS::Existing(f_in), PK::New(cap, i));
                p.wire(PS::Existing(other), PK::New(g, 0));
                p.wire(PS::New(g, 0), PK::New(cap, 1 - i));
                out.push(p);
            }
        }
    }
    out
}

fn cup_symmetry<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (sw, spec) in cx.nodes() {
        let K::Swap { first, second } = spec.kind else { continue };
        if first != second {
            continue;
        }
        if let (Some((c0, _)), Some((c1, _))) = (cx.pred(sw, 0), cx.pred(sw, 1)) {
            if c0 == c1 && is_cup(cx.spec(c0)) {
                if let Some(outs) = cx.consumers(sw) {
                    out.push(single(vec![sw, c0], GeneratorSpec::cup(first), &[], &outs));
                }
            }
        }
        if let (Some((c0, _)), Some((c1, _))) = (cx.succ(sw, 0), cx.succ(sw, 1)) {
            if c0 == c1 && is_cap(cx.spec(c0)) {
                if let Some(ins) = cx.feeders(sw) {
                    out.push(single(vec![sw, c0], GeneratorSpec::cap(first), &ins, &[]));
                }
            }
        }
    }
    out
}

fn conjugate_state<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        for i in 0..2 {
            if is_cup(spec) {
                let Some((e, _)) = cx.succ(n, i) else { continue };
                let es = cx.spec(e);
                if !one_leg_end(es, 1, 0) {
                    continue;
                }
                if let (Ok(state), Some(dst)) = (es.transposed(), cx.consumer(n, 1 - i)) {
                    out.push(single(vec![n, e], state, &[], &[dst]));
                }
            }
            if is_cap(spec) {
                let Some((st, _)) = cx.pred(n, i) else { continue };
                let ss = cx.spec(st);
                if !one_leg_end(ss, 0, 1) {
                    continue;
                }
                if let (Ok(effect), Some(src)) = (ss.transposed(), cx.feeder(n, 1 - i)) {
                    out.push(single(vec![n, st], effect, &[src], &[]));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------- dot structure

fn dot_bend<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        for i in 0..2 {
            if is_cup(spec) {
                let Some((dot_id, p)) = cx.succ(n, i) else { continue };
                let Some((kind, dot)) = any_dot(cx.spec(dot_id)) else { continue };
                let Some(other) = cx.consumer(n, 1 - i) else { continue };
                if other.node_id() == Some(dot_id) || !dot.has_real_color(tol()) {
                    continue;
                }
                let (Some(mut ins), Some(mut outs)) = (cx.feeders(dot_id), cx.consumers(dot_id)) else { continue };
                ins.remove(p);
                outs.push(other);
                let bent = dot.with_arity(ins.len(), outs.len());
                out.push(single(vec![n, dot_id], dot_spec(kind, bent), &ins, &outs));
            }
            if is_cap(spec) {
                let Some((dot_id, p)) = cx.pred(n, i) else { continue };
                let Some((kind, dot)) = any_dot(cx.spec(dot_id)) else { continue };
                let Some(other) = cx.feeder(n, 1 - i) else { continue };
                if other.node_id() == Some(dot_id) || !dot.has_real_color(tol()) {
                    continue;
                }
                let (Some(mut ins), Some(mut outs)) = (cx.feeders(dot_id), cx.consumers(dot_id)) else { continue };
                outs.remove(p);
                ins.push(other);
                let bent = dot.with_arity(ins.len(), outs.len());
                out.push(single(vec![n, dot_id], dot_spec(kind, bent), &ins, &outs));
            }
        }
    }
    out
}

fn dot_dagger<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter(|(_, s)| s.adjoint)
        .filter_map(|(n, spec)| {
            let (kind, dot) = spec.dot()?;
            let canonical = dot_spec(kind, dot.swapped());
            Some(single(vec![n], canonical, &cx.feeders(n)?, &cx.consumers(n)?))
        })
        .collect()
}

fn dot_permute<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (sw, spec) in cx.nodes() {
        if !matches!(spec.kind, K::Swap { .. }) || spec.adjoint {
            continue;
        }
        if let (Some((a, pa)), Some((b, pb))) = (cx.pred(sw, 0), cx.pred(sw, 1)) {
            if a == b && a != sw && cx.spec(a).dot().is_some() {
                if let Some([o0, o1]) = cx.consumers(sw).as_deref().map(|v| [v[0], v[1]]) {
                    let mut p = Patch::new(vec![sw]);
                    p.wire(PS::Existing(Source::node(a, pb)), PK::Existing(o0));
                    p.wire(PS::Existing(Source::node(a, pa)), PK::Existing(o1));
                    out.push(p);
                }
            }
        }
        if let (Some((a, pa)), Some((b, pb))) = (cx.succ(sw, 0), cx.succ(sw, 1)) {
            if a == b && a != sw && cx.spec(a).dot().is_some() {
                if let Some([i0, i1]) = cx.feeders(sw).as_deref().map(|v| [v[0], v[1]]) {
                    let mut p = Patch::new(vec![sw]);
                    p.wire(PS::Existing(i1), PK::Existing(Sink::node(a, pa)));
                    p.wire(PS::Existing(i0), PK::Existing(Sink::node(a, pb)));
                    out.push(p);
                }
            }
        }
    }
    out
}

fn recolor<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter_map(|(n, spec)| {
            let (kind, dot) = any_dot(spec)?;
            let u = dot.color.clone()?;
            let (ins, outs) = (cx.feeders(n)?, cx.consumers(n)?);
            let mut p = Patch::new(vec![n]);
            let plain = p.node(dot_spec(kind, Dot::new(dot.dim, dot.inputs, dot.outputs)));
            for (i, src) in ins.into_iter().enumerate() {
                let b = p.node(GeneratorSpec::boxed("color†", u.dagger()));
                p.wire(PS::Existing(src), PK::New(b, 0));
                p.wire(PS::New(b, 0), PK::New(plain, i));
            }
            for (i, dst) in outs.into_iter().enumerate() {
                let b = p.node(GeneratorSpec::boxed("color", u.clone()));
                p.wire(PS::New(plain, i), PK::New(b, 0));
                p.wire(PS::New(b, 0), PK::Existing(dst));
            }
            Some(p)
        })
        .collect()
}

// ---------------------------------------------------------------- commutation

/// Rebuilds `dot` after deleting the one-qudit gates in `taken` from its
/// legs and inserting `new_in`/`new_out` gates right next to it.
fn regate<T: Real>(
    cx: &Ctx<T>,
    dot_id: NodeId,
    taken: &[NodeId],
    new_in: &[(usize, GeneratorSpec<T>)],
    new_out: &[(usize, GeneratorSpec<T>)],
) -> Option<Patch<T>> {
    let spec = cx.spec(dot_id).clone();
    let mut ins = cx.feeders(dot_id)?;
    let mut outs = cx.consumers(dot_id)?;
    for src in ins.iter_mut() {
        if let Some(g) = src.node_id().filter(|g| taken.contains(g)) {
            *src = cx.feeder(g, 0)?;
        }
    }
    for dst in outs.iter_mut() {
        if let Some(g) = dst.node_id().filter(|g| taken.contains(g)) {
            *dst = cx.consumer(g, 0)?;
        }
    }
    let mut remove = vec![dot_id];
    remove.extend_from_slice(taken);
    let mut p = Patch::new(remove);
    let n = p.node(spec);
    for (i, src) in ins.into_iter().enumerate() {
        match new_in.iter().find(|(port, _)| *port == i) {
            Some((_, g)) => {
                let g = p.node(g.clone());
                p.wire(PS::Existing(src), PK::New(g, 0));
                p.wire(PS::New(g, 0), PK::New(n, i));
            }
            None => p.wire(PS::Existing(src), PK::New(n, i)),
        }
    }
    for (i, dst) in outs.into_iter().enumerate() {
        match new_out.iter().find(|(port, _)| *port == i) {
            Some((_, g)) => {
                let g = p.node(g.clone());
                p.wire(PS::New(n, i), PK::New(g, 0));
                p.wire(PS::New(g, 0), PK::Existing(dst));
            }
            None => p.wire(PS::New(n, i), PK::Existing(dst)),
        }
    }
    Some(p)
}

fn z_exp<T: Real>(spec: &GeneratorSpec<T>) -> Option<(usize, usize)> {
    match spec.kind {
        K::ZPow { dim, exp } => Some((dim, exp)),
        _ => None,
    }
}

fn x_exp<T: Real>(spec: &GeneratorSpec<T>) -> Option<(usize, usize)> {
    match spec.kind {
        K::XPow { dim, exp } => Some((dim, exp)),
        _ => None,
    }
}

/// Gates `g` with `g.out → dot.in p`, as `(p, g)`.
fn gates_on_inputs<T: Real>(cx: &Ctx<T>, dot_id: NodeId) -> Vec<(usize, NodeId)> {
    (0..cx.spec(dot_id).num_inputs())
        .filter_map(|p| {
            let (g, _) = cx.pred(dot_id, p)?;
            (g != dot_id && cx.spec(g).num_inputs() == 1 && cx.spec(g).num_outputs() == 1).then_some((p, g))
        })
        .collect()
}

fn commute_z_copy<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        let Some(dot) = plain_dot(spec, DotKind::Copy) else { continue };
        let to_output = dot.outputs > 0;
        let place = |z: GeneratorSpec<T>| -> (Vec<(usize, GeneratorSpec<T>)>, Vec<(usize, GeneratorSpec<T>)>) {
            if to_output {
                (vec![], vec![(0, z)])
            } else {
                (vec![(0, z)], vec![])
            }
        };
        for (p, g) in gates_on_inputs(&cx, n) {
            if z_exp(cx.spec(g)).is_none() || (!to_output && p == 0) {
                continue;
            }
            let (ni, no) = place(cx.spec(g).clone());
            out.extend(regate(&cx, n, &[g], &ni, &no));
        }
        for k in 1..dot.outputs {
            let Some((g, _)) = cx.succ(n, k) else { continue };
            if g == n || z_exp(cx.spec(g)).is_none() {
                continue;
            }
            let (ni, no) = place(cx.spec(g).clone());
            out.extend(regate(&cx, n, &[g], &ni, &no));
        }
    }
    out
}

fn commute_x_copy<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        let Some(dot) = plain_dot(spec, DotKind::Copy) else { continue };
        for (p, g) in gates_on_inputs(&cx, n) {
            let Some((dim, b)) = x_exp(cx.spec(g)) else { continue };
            let ni: Vec<_> = (0..dot.inputs)
                .filter(|&q| q != p)
                .map(|q| (q, GeneratorSpec::x_pow(dim, -(b as i64))))
                .collect();
            let no: Vec<_> = (0..dot.outputs).map(|k| (k, GeneratorSpec::x_pow(dim, b as i64))).collect();
            out.extend(regate(&cx, n, &[g], &ni, &no));
        }
    }
    out
}

fn commute_z_plus<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        let Some(dot) = plain_dot(spec, DotKind::Plus) else { continue };
        for (p, g) in gates_on_inputs(&cx, n) {
            let Some((dim, a)) = z_exp(cx.spec(g)) else { continue };
            let inv = GeneratorSpec::z_pow(dim, -(a as i64));
            let ni: Vec<_> = (0..dot.inputs).filter(|&q| q != p).map(|q| (q, inv.clone())).collect();
            let no: Vec<_> = (0..dot.outputs).map(|k| (k, inv.clone())).collect();
            out.extend(regate(&cx, n, &[g], &ni, &no));
        }
    }
    out
}

fn commute_x_plus<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (n, spec) in cx.nodes() {
        let Some(dot) = plain_dot(spec, DotKind::Plus) else { continue };
        if dot.outputs == 0 {
            continue;
        }
        for (_, g) in gates_on_inputs(&cx, n) {
            let Some((dim, b)) = x_exp(cx.spec(g)) else { continue };
            out.extend(regate(&cx, n, &[g], &[], &[(0, GeneratorSpec::x_pow(dim, -(b as i64)))]));
        }
    }
    out
}

// ---------------------------------------------------------------- NADD and dots

fn is_nadd<T: Real>(spec: &GeneratorSpec<T>) -> bool {
    matches!(spec.kind, K::Nadd { .. })
}

fn bialgebra<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (sw, spec) in cx.nodes() {
        let K::Swap { first, second } = spec.kind else { continue };
        if first != second || spec.adjoint {
            continue;
        }
        let (Some((n1, 0)), Some((m1, 1))) = (cx.pred(sw, 0), cx.pred(sw, 1)) else { continue };
        let (Some((n2, 0)), Some((m2, 1))) = (cx.succ(sw, 0), cx.succ(sw, 1)) else { continue };
        if n1 != m1 || n2 != m2 || n1 == n2 || !is_nadd(cx.spec(n1)) || !is_nadd(cx.spec(n2)) {
            continue;
        }
        let (Some(x), Some(y)) = (cx.feeder(n1, 0), cx.feeder(n1, 1)) else { continue };
        let (Some(o0), Some(o1)) = (cx.consumer(n2, 0), cx.consumer(n2, 1)) else { continue };
        out.push(single(vec![n1, sw, n2], GeneratorSpec::nadd(first), &[y, x], &[o1, o0]));
    }
    out
}

fn dot_bialgebra<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (pl, spec) in cx.nodes() {
        let Some(pd) = plain_dot(spec, DotKind::Plus) else { continue };
        if (pd.inputs, pd.outputs) != (2, 1) {
            continue;
        }
        let Some((cp, _)) = cx.succ(pl, 0) else { continue };
        let Some(cd) = plain_dot(cx.spec(cp), DotKind::Copy) else { continue };
        if (cd.inputs, cd.outputs) != (1, 2) || cd.dim != pd.dim {
            continue;
        }
        let (Some(r1), Some(r2)) = (cx.feeder(pl, 0), cx.feeder(pl, 1)) else { continue };
        let (Some(o1), Some(o2)) = (cx.consumer(cp, 0), cx.consumer(cp, 1)) else { continue };
        let dim = pd.dim;
        let mut p = Patch::new(vec![pl, cp]);
        let ca = p.node(GeneratorSpec::copy_dot(dim, 1, 2));
        let cb = p.node(GeneratorSpec::copy_dot(dim, 1, 2));
        let p1 = p.node(GeneratorSpec::plus_dot(dim, 2, 1));
        let p2 = p.node(GeneratorSpec::plus_dot(dim, 2, 1));
        p.wire(PS::Existing(r1), PK::New(ca, 0));
        p.wire(PS::Existing(r2), PK::New(cb, 0));
        p.wire(PS::New(ca, 0), PK::New(p1, 0));
        p.wire(PS::New(ca, 1), PK::New(p2, 0));
        p.wire(PS::New(cb, 0), PK::New(p1, 1));
        p.wire(PS::New(cb, 1), PK::New(p2, 1));
        p.wire(PS::New(p1, 0), PK::Existing(o1));
        p.wire(PS::New(p2, 0), PK::Existing(o2));
        p.scalar = root(dim, 1);
        out.push(p);
    }
    out
}

fn hopf<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (cp, spec) in cx.nodes() {
        let Some(cd) = plain_dot(spec, DotKind::Copy) else { continue };
        if (cd.inputs, cd.outputs) != (1, 2) {
            continue;
        }
        for i in 0..2 {
            let Some((neg, _)) = cx.succ(cp, i) else { continue };
            let Some((pl, x)) = cx.succ(neg, 0).filter(|_| is_neg(cx.spec(neg))) else { continue };
            let Some(pd) = plain_dot(cx.spec(pl), DotKind::Plus) else { continue };
            if (pd.inputs, pd.outputs) != (2, 1) || pd.dim != cd.dim || cx.succ(cp, 1 - i) != Some((pl, 1 - x)) {
                continue;
            }
            let (Some(src), Some(dst)) = (cx.feeder(cp, 0), cx.consumer(pl, 0)) else { continue };
            let mut p = Patch::new(vec![cp, neg, pl]);
            let zero = p.node(GeneratorSpec::basis_state(cd.dim, 0));
            let plus = p.node(GeneratorSpec::plus_effect(cd.dim));
            p.wire(PS::New(zero, 0), PK::Existing(dst));
            p.wire(PS::Existing(src), PK::New(plus, 0));
            out.push(p);
        }
    }
    out
}

fn nadd_split<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter(|(_, s)| is_nadd(s))
        .filter_map(|(n, spec)| {
            let dim = spec.input_dims()[0];
            let (ins, outs) = (cx.feeders(n)?, cx.consumers(n)?);
            let mut p = Patch::new(vec![n]);
            let c = p.node(GeneratorSpec::copy_dot(dim, 1, 2));
            let q = p.node(GeneratorSpec::plus_dot(dim, 2, 1));
            p.wire(PS::Existing(ins[0]), PK::New(c, 0));
            p.wire(PS::New(c, 0), PK::Existing(outs[0]));
            p.wire(PS::New(c, 1), PK::New(q, 0));
            p.wire(PS::Existing(ins[1]), PK::New(q, 1));
            p.wire(PS::New(q, 0), PK::Existing(outs[1]));
            p.scalar = root(dim, 1);
            Some(p)
        })
        .collect()
}

fn nadd_fuse<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (cp, spec) in cx.nodes() {
        let Some(cd) = plain_dot(spec, DotKind::Copy) else { continue };
        if (cd.inputs, cd.outputs) != (1, 2) {
            continue;
        }
        for i in 0..2 {
            let Some((pl, j)) = cx.succ(cp, i) else { continue };
            let Some(pd) = plain_dot(cx.spec(pl), DotKind::Plus) else { continue };
            if pl == cp || (pd.inputs, pd.outputs) != (2, 1) || pd.dim != cd.dim {
                continue;
            }
            if cx.succ(cp, 1 - i).is_some_and(|x| x.0 == pl) {
                continue;
            }
            let (Some(ctrl), Some(target)) = (cx.feeder(cp, 0), cx.feeder(pl, 1 - j)) else { continue };
            let (Some(ctrl_out), Some(target_out)) = (cx.consumer(cp, 1 - i), cx.consumer(pl, 0)) else {
                continue;
            };
            let mut p = single(
                vec![cp, pl],
                GeneratorSpec::nadd(cd.dim),
                &[ctrl, target],
                &[ctrl_out, target_out],
            );
            p.scalar = root(cd.dim, -1);
            out.push(p);
        }
    }
    out
}

fn add_to_nadd<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter(|(_, s)| matches!(s.kind, K::Add { .. }))
        .filter_map(|(n, spec)| {
            let dim = spec.input_dims()[0];
            let (ins, outs) = (cx.feeders(n)?, cx.consumers(n)?);
            let mut p = Patch::new(vec![n]);
            let nadd = p.node(GeneratorSpec::nadd(dim));
            let neg = p.node(GeneratorSpec::neg(dim));
            p.wire(PS::Existing(ins[0]), PK::New(nadd, 0));
            p.wire(PS::New(nadd, 0), PK::Existing(outs[0]));
            if spec.adjoint {
                p.wire(PS::Existing(ins[1]), PK::New(neg, 0));
                p.wire(PS::New(neg, 0), PK::New(nadd, 1));
                p.wire(PS::New(nadd, 1), PK::Existing(outs[1]));
            } else {
                p.wire(PS::Existing(ins[1]), PK::New(nadd, 1));
                p.wire(PS::New(nadd, 1), PK::New(neg, 0));
                p.wire(PS::New(neg, 0), PK::Existing(outs[1]));
            }
            Some(p)
        })
        .collect()
}

// ---------------------------------------------------------------- gate chains

/// Chains `g_1 → … → g_len` of distinct one-qudit nodes accepted by `accept`,
/// where `accept` also sees the first node of the chain.
fn chains<T: Real>(
    cx: &Ctx<T>,
    len: usize,
    accept: impl Fn(&GeneratorSpec<T>, &GeneratorSpec<T>) -> bool,
) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    for (start, first) in cx.nodes() {
        if !accept(first, first) {
            continue;
        }
        let mut chain = vec![start];
        while chain.len() < len {
            let last = *chain.last().unwrap();
            match cx.succ(last, 0) {
                Some((next, 0)) if !chain.contains(&next) && accept(first, cx.spec(next)) => chain.push(next),
                _ => break,
            }
        }
        if chain.len() == len {
            out.push(chain);
        }
    }
    out
}

fn through<T: Real>(cx: &Ctx<T>, chain: &[NodeId]) -> Option<(Source, Sink)> {
    Some((cx.feeder(chain[0], 0)?, cx.consumer(*chain.last()?, 0)?))
}

fn neg_as_h2<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    chains(&cx, 2, |first, s| is_h(s) && s == first)
        .into_iter()
        .filter_map(|c| {
            let (src, dst) = through(&cx, &c)?;
            let dim = cx.spec(c[0]).input_dims()[0];
            Some(single(c, GeneratorSpec::neg(dim), &[src], &[dst]))
        })
        .collect()
}

fn h4_elim<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    chains(&cx, 4, |first, s| is_h(s) && s == first)
        .into_iter()
        .filter_map(|c| {
            let (src, dst) = through(&cx, &c)?;
            Some(wire(c, src, dst))
        })
        .collect()
}

fn neg_cancel<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    chains(&cx, 2, |_, s| is_neg(s))
        .into_iter()
        .filter_map(|c| {
            let (src, dst) = through(&cx, &c)?;
            Some(wire(c, src, dst))
        })
        .collect()
}

fn pauli_fuse<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let same_family = |a: &GeneratorSpec<T>, b: &GeneratorSpec<T>| match (&a.kind, &b.kind) {
        (K::ZPow { dim: x, .. }, K::ZPow { dim: y, .. }) | (K::XPow { dim: x, .. }, K::XPow { dim: y, .. }) => x == y,
        _ => false,
    };
    chains(&cx, 2, same_family)
        .into_iter()
        .filter_map(|c| {
            let (src, dst) = through(&cx, &c)?;
            let (a, b) = (cx.spec(c[0]), cx.spec(c[1]));
            let fused = match (&a.kind, &b.kind) {
                (K::ZPow { dim, exp: x }, K::ZPow { exp: y, .. }) => {
                    (modulo((x + y) as i64, *dim) != 0).then(|| GeneratorSpec::z_pow(*dim, (x + y) as i64))
                }
                (K::XPow { dim, exp: x }, K::XPow { exp: y, .. }) => {
                    (modulo((x + y) as i64, *dim) != 0).then(|| GeneratorSpec::x_pow(*dim, (x + y) as i64))
                }
                _ => return None,
            };
            Some(match fused {
                Some(g) => single(c, g, &[src], &[dst]),
                None => wire(c, src, dst),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- small identities

fn plus_to_neg<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter_map(|(n, spec)| {
            let dot = plain_dot(spec, DotKind::Plus)?;
            if (dot.inputs, dot.outputs) != (1, 1) || dot.dim < 2 {
                return None;
            }
            Some(single(vec![n], GeneratorSpec::neg(dot.dim), &cx.feeders(n)?, &cx.consumers(n)?))
        })
        .collect()
}

fn copy_identity<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    cx.nodes()
        .filter_map(|(n, spec)| {
            let (kind, dot) = any_dot(spec)?;
            if kind != DotKind::Copy || (dot.inputs, dot.outputs) != (1, 1) {
                return None;
            }
            Some(wire(vec![n], cx.feeder(n, 0)?, cx.consumer(n, 0)?))
        })
        .collect()
}

fn plus_prep<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    let cx = Ctx::new(d);
    let mut out = Vec::new();
    for (h, spec) in cx.nodes() {
        if !is_h(spec) {
            continue;
        }
        let dim = spec.input_dims()[0];
        if let Some((z, _)) = cx.pred(h, 0) {
            if cx.spec(z) == &GeneratorSpec::basis_state(dim, 0) {
                if let Some(dst) = cx.consumer(h, 0) {
                    out.push(single(vec![z, h], GeneratorSpec::plus_state(dim), &[], &[dst]));
                }
            }
        }
        if let Some((z, _)) = cx.succ(h, 0) {
            if cx.spec(z) == &GeneratorSpec::basis_effect(dim, 0) {
                if let Some(src) = cx.feeder(h, 0) {
                    out.push(single(vec![h, z], GeneratorSpec::plus_effect(dim), &[src], &[]));
                }
            }
        }
    }
    out
}

fn dot_scalar<T: Real>(d: &Diagram<T>) -> Vec<Patch<T>> {
    Ctx::new(d)
        .nodes()
        .filter_map(|(n, spec)| {
            let (_, dot) = spec.dot()?;
            if dot.inputs + dot.outputs != 0 {
                return None;
            }
            let mut p = Patch::new(vec![n]);
            p.scalar = root(dot.dim, 2);
            Some(p)
        })
        .collect()
}
