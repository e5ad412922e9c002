//! Small diagrams containing each rule's left-hand side.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::diagram::{Diagram, Sink, Source};
use crate::generators::{self as gen, GeneratorSpec as G};
use crate::random::{random_orthogonal, random_state, random_tensor, random_unitary};
use crate::scalar::Real;

fn g<T: Real>(spec: G<T>) -> Diagram<T> {
    Diagram::from_generator(spec)
}

fn id<T: Real>(dim: usize, n: usize) -> Diagram<T> {
    Diagram::identity(&vec![dim; n])
}

fn seq<T: Real>(layers: Vec<Diagram<T>>) -> Diagram<T> {
    let mut it = layers.into_iter();
    let first = it.next().expect("at least one layer");
    it.fold(first, |acc, next| next.compose(&acc).expect("sample layers fit"))
}

fn par<T: Real>(parts: Vec<Diagram<T>>) -> Diagram<T> {
    parts.into_iter().fold(Diagram::empty(), |acc, p| acc.tensor(&p))
}

fn copy<T: Real>(dim: usize, m: usize, n: usize) -> G<T> {
    G::copy_dot(dim, m, n)
}

fn plus<T: Real>(dim: usize, m: usize, n: usize) -> G<T> {
    G::plus_dot(dim, m, n)
}

fn colored<T: Real>(base: G<T>, u: Option<crate::tensor::Tensor<T>>) -> G<T> {
    match u {
        Some(u) => gen::recolor(&base, &u).expect("unitary color"),
        None => base,
    }
}

/// A one-qudit gate drawn from the named generators and random boxes.
pub(crate) fn random_gate<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> G<T> {
    match rng.random_range(0..5) {
        0 => G::h(dim),
        1 => G::z_pow(dim, rng.random_range(1..dim as i64)),
        2 => G::x_pow(dim, rng.random_range(1..dim as i64)),
        3 => G::neg(dim),
        _ => G::boxed("U", random_unitary(dim, rng)),
    }
}

fn random_effect<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> G<T> {
    match rng.random_range(0..3) {
        0 => G::basis_effect(dim, rng.random_range(0..dim)),
        1 => G::plus_effect(dim),
        _ => G::boxed("phi", random_state::<T, _>(&[dim], rng).dagger()),
    }
}

fn random_prep<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> G<T> {
    random_effect::<T>(dim, rng).dagger()
}

/// Two dots of one family joined by `k` wires, each optionally through `glue`.
fn dot_pair<T: Real>(
    first: G<T>,
    second: G<T>,
    k: usize,
    dim: usize,
    glue: Option<G<T>>,
) -> Diagram<T> {
    let (n1, m2) = (first.num_outputs(), second.num_inputs());
    let mid = match glue {
        Some(gl) => par(vec![id(dim, n1 - k), par((0..k).map(|_| g(gl.clone())).collect()), id(dim, m2 - k)]),
        None => id(dim, n1 + m2 - k),
    };
    seq(vec![
        g(first).tensor(&id(dim, m2 - k)),
        mid,
        id(dim, n1 - k).tensor(&g(second)),
    ])
}

fn maybe_color<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> Option<crate::tensor::Tensor<T>> {
    rng.random_bool(0.4).then(|| random_unitary(dim, rng))
}

/// Arity pair `(a, b)` with `k ≤ b` connecting legs and few free legs.
fn arities(rng: &mut ChaCha8Rng) -> (usize, usize, usize, usize, usize) {
    let k = rng.random_range(1..=2);
    let m1 = rng.random_range(0..=1);
    let n1 = k + rng.random_range(0..=1);
    let m2 = k + rng.random_range(0..=1);
    let n2 = rng.random_range(0..=2);
    (m1, n1, m2, n2, k)
}

pub(super) fn spider_copy<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let (m1, n1, m2, n2, k) = arities(rng);
    let u = maybe_color(d, rng);
    dot_pair(colored(copy(d, m1, n1), u.clone()), colored(copy(d, m2, n2), u), k, d, None)
}

pub(super) fn spider_plus<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let (m1, n1, m2, n2, k) = arities(rng);
    let u = maybe_color::<T>(d, rng);
    let glue = match &u {
        Some(u) => G::boxed(
            "glue",
            u.compose(&gen::neg(d).unwrap()).and_then(|x| x.compose(&u.dagger())).unwrap(),
        ),
        None => G::neg(d),
    };
    dot_pair(colored(plus(d, m1, n1), u.clone()), colored(plus(d, m2, n2), u), k, d, Some(glue))
}

fn pruned<T: Real>(d: usize, rng: &mut ChaCha8Rng, dot: impl Fn(usize, usize) -> G<T>, state: G<T>) -> Diagram<T> {
    let m = rng.random_range(1..=2);
    let n = rng.random_range(0..=2);
    if rng.random_bool(0.5) {
        seq(vec![g(state).tensor(&id(d, m - 1)), g(dot(m, n))])
    } else {
        let (m, n) = (n, m);
        seq(vec![g(dot(m, n)), g(state.dagger()).tensor(&id(d, n - 1))])
    }
}

pub(super) fn prune_copy<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    pruned(d, rng, |m, n| copy(d, m, n), G::plus_state(d))
}

pub(super) fn prune_plus<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    pruned(d, rng, |m, n| plus(d, m, n), G::basis_state(d, 0))
}

pub(super) fn snake<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    if rng.random_bool(0.5) {
        seq(vec![g(G::cup(d)).tensor(&id(d, 1)), id(d, 1).tensor(&g(G::cap(d)))])
    } else {
        seq(vec![id(d, 1).tensor(&g(G::cup(d))), g(G::cap(d)).tensor(&id(d, 1))])
    }
}

pub(super) fn loop_elim<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let lp = seq(vec![g(G::cup(d)), g(G::cap(d))]);
    lp.tensor(&g(random_gate(d, rng)))
}

pub(super) fn slide<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let f = if rng.random_bool(0.3) {
        let other = rng.random_range(2..=3);
        G::boxed("f", random_tensor(&[other], &[d], rng))
    } else {
        random_gate(d, rng)
    };
    let leg = rng.random_bool(0.5);
    let place = |f: G<T>| if leg { g(f).tensor(&id(d, 1)) } else { id(d, 1).tensor(&g(f)) };
    if rng.random_bool(0.5) {
        seq(vec![g(G::cup(d)), place(f)])
    } else {
        seq(vec![place(f.dagger()), g(G::cap(d))])
    }
}

pub(super) fn cup_symmetry<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    if rng.random_bool(0.5) {
        seq(vec![g(G::cup(d)), g(G::swap(d, d))])
    } else {
        seq(vec![g(G::swap(d, d)), g(G::cap(d))])
    }
}

pub(super) fn conjugate_state<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let leg = rng.random_bool(0.5);
    let place = |x: G<T>| if leg { g(x).tensor(&id(d, 1)) } else { id(d, 1).tensor(&g(x)) };
    if rng.random_bool(0.5) {
        seq(vec![g(G::cup(d)), place(random_effect(d, rng))])
    } else {
        seq(vec![place(random_prep(d, rng)), g(G::cap(d))])
    }
}

fn random_dot<T: Real>(d: usize, m: usize, n: usize, rng: &mut ChaCha8Rng, real_color: bool) -> G<T> {
    let base = if rng.random_bool(0.5) { copy(d, m, n) } else { plus(d, m, n) };
    let u = if real_color {
        rng.random_bool(0.4).then(|| random_orthogonal(d, rng))
    } else {
        maybe_color(d, rng)
    };
    colored(base, u)
}

pub(super) fn dot_bend<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let m = rng.random_range(1..=2);
    let n = rng.random_range(0..=2);
    if rng.random_bool(0.5) {
        let dot = random_dot(d, m, n, rng, true);
        seq(vec![g(G::cup(d)).tensor(&id(d, m - 1)), id(d, 1).tensor(&g(dot))])
    } else {
        let dot = random_dot(d, n, m, rng, true);
        seq(vec![id(d, 1).tensor(&g(dot)), g(G::cap(d)).tensor(&id(d, m - 1))])
    }
}

pub(super) fn dot_dagger<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let m = rng.random_range(0..=2);
    let n = rng.random_range(0..=2);
    let dot = random_dot::<T>(d, m, n, rng, false);
    g(G {
        kind: dot.kind,
        adjoint: true,
    })
}

pub(super) fn dot_permute<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let dot = random_dot::<T>(d, 1, 3, rng, false);
    let at = rng.random_range(0..2);
    let sw = par(vec![id(d, at), g(G::swap(d, d)), id(d, 1 - at)]);
    if rng.random_bool(0.5) {
        seq(vec![g(dot), sw])
    } else {
        seq(vec![sw, g(dot.dagger())])
    }
}

pub(super) fn recolor<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let m = rng.random_range(0..=2);
    let n = rng.random_range(0..=2);
    let base = if rng.random_bool(0.5) { copy(d, m, n) } else { plus(d, m, n) };
    g(colored(base, Some(random_unitary(d, rng))))
}

/// Dot with a one-qudit gate on input `p` (or, if `on_output`, output `p`).
fn gated_dot<T: Real>(dot: G<T>, gate: G<T>, port: usize, on_output: bool, d: usize) -> Diagram<T> {
    if on_output {
        let n = dot.num_outputs();
        seq(vec![g(dot), par(vec![id(d, port), g(gate), id(d, n - port - 1)])])
    } else {
        let m = dot.num_inputs();
        seq(vec![par(vec![id(d, port), g(gate), id(d, m - port - 1)]), g(dot)])
    }
}

pub(super) fn commute_z_copy<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let m = rng.random_range(1..=2);
    let n = rng.random_range(0..=3);
    let z = G::z_pow(d, rng.random_range(1..d as i64));
    if n >= 2 && rng.random_bool(0.5) {
        let k = rng.random_range(1..n);
        gated_dot(copy(d, m, n), z, k, true, d)
    } else if n == 0 {
        gated_dot(copy(d, 2, 0), z, 1, false, d)
    } else {
        let p = rng.random_range(0..m);
        gated_dot(copy(d, m, n), z, p, false, d)
    }
}

fn input_gated<T: Real>(d: usize, rng: &mut ChaCha8Rng, dot: impl Fn(usize, usize) -> G<T>, gate: G<T>, min_out: usize) -> Diagram<T> {
    let m = rng.random_range(1..=2);
    let n = rng.random_range(min_out..=2);
    let p = rng.random_range(0..m);
    gated_dot(dot(m, n), gate, p, false, d)
}

pub(super) fn commute_x_copy<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let x = G::x_pow(d, rng.random_range(1..d as i64));
    input_gated(d, rng, |m, n| copy(d, m, n), x, 0)
}

pub(super) fn commute_z_plus<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let z = G::z_pow(d, rng.random_range(1..d as i64));
    input_gated(d, rng, |m, n| plus(d, m, n), z, 0)
}

pub(super) fn commute_x_plus<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let x = G::x_pow(d, rng.random_range(1..d as i64));
    input_gated(d, rng, |m, n| plus(d, m, n), x, 1)
}

pub(super) fn bialgebra<T: Real>(d: usize, _rng: &mut ChaCha8Rng) -> Diagram<T> {
    seq(vec![g(G::nadd(d)), g(G::swap(d, d)), g(G::nadd(d))])
}

pub(super) fn dot_bialgebra<T: Real>(d: usize, _rng: &mut ChaCha8Rng) -> Diagram<T> {
    seq(vec![g(plus(d, 2, 1)), g(copy(d, 1, 2))])
}

pub(super) fn hopf<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let neg_first = rng.random_bool(0.5);
    let mid = if neg_first {
        g(G::neg(d)).tensor(&id(d, 1))
    } else {
        id(d, 1).tensor(&g(G::neg(d)))
    };
    seq(vec![g(copy(d, 1, 2)), mid, g(plus(d, 2, 1))])
}

pub(super) fn nadd_split<T: Real>(d: usize, _rng: &mut ChaCha8Rng) -> Diagram<T> {
    g(G::nadd(d))
}

pub(super) fn nadd_fuse<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let mut diagram = Diagram::empty();
    let c = diagram.add_node(copy(d, 1, 2));
    let p = diagram.add_node(plus(d, 2, 1));
    let (i, j) = (rng.random_range(0..2), rng.random_range(0..2));
    let ctrl = diagram.add_input(d);
    let target = diagram.add_input(d);
    diagram.connect(Source::Input(ctrl), Sink::node(c, 0)).unwrap();
    diagram.connect(Source::Input(target), Sink::node(p, 1 - j)).unwrap();
    diagram.connect(Source::node(c, i), Sink::node(p, j)).unwrap();
    let o0 = diagram.add_output(d);
    let o1 = diagram.add_output(d);
    diagram.connect(Source::node(c, 1 - i), Sink::Output(o0)).unwrap();
    diagram.connect(Source::node(p, 0), Sink::Output(o1)).unwrap();
    diagram
}

pub(super) fn add_to_nadd<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let add = G::add(d);
    g(if rng.random_bool(0.5) { add.dagger() } else { add })
}

pub(super) fn neg_as_h2<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let h = if rng.random_bool(0.5) { G::h(d) } else { G::h(d).dagger() };
    seq(vec![g(h.clone()), g(h)])
}

pub(super) fn h4_elim<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let h = if rng.random_bool(0.5) { G::h(d) } else { G::h(d).dagger() };
    seq((0..4).map(|_| g(h.clone())).collect())
}

pub(super) fn neg_cancel<T: Real>(d: usize, _rng: &mut ChaCha8Rng) -> Diagram<T> {
    seq(vec![g(G::neg(d)), g(G::neg(d))])
}

pub(super) fn plus_to_neg<T: Real>(d: usize, _rng: &mut ChaCha8Rng) -> Diagram<T> {
    g(plus(d, 1, 1))
}

pub(super) fn copy_identity<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let u = maybe_color(d, rng);
    g(colored(copy(d, 1, 1), u))
}

pub(super) fn plus_prep<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    if rng.random_bool(0.5) {
        seq(vec![g(G::basis_state(d, 0)), g(G::h(d))])
    } else {
        seq(vec![g(G::h(d)), g(G::basis_effect(d, 0))])
    }
}

pub(super) fn dot_scalar<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let dot = if rng.random_bool(0.5) { copy(d, 0, 0) } else { plus(d, 0, 0) };
    g(dot).tensor(&g(random_gate(d, rng)))
}

pub(super) fn pauli_fuse<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let (a, b) = (rng.random_range(1..d as i64), rng.random_range(1..d as i64));
    if rng.random_bool(0.5) {
        seq(vec![g(G::z_pow(d, a)), g(G::z_pow(d, b))])
    } else {
        seq(vec![g(G::x_pow(d, a)), g(G::x_pow(d, b))])
    }
}
