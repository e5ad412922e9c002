use num_complex::Complex;

use super::soundness::{cell_seed, check_rule};
use super::*;
use crate::diagram::{Diagram, Sink, Source};
use crate::generators::{self as gen, GeneratorSpec as G};

type D = Diagram<f64>;

fn g(spec: G<f64>) -> D {
    D::from_generator(spec)
}

fn seq(layers: &[D]) -> D {
    let mut it = layers.iter();
    let first = it.next().unwrap().clone();
    it.fold(first, |acc, l| l.compose(&acc).unwrap())
}

fn par(parts: &[D]) -> D {
    parts.iter().fold(D::empty(), |acc, p| acc.tensor(p))
}

fn id(d: usize) -> D {
    D::identity(&[d])
}

fn rule(name: &str) -> RewriteRule<f64> {
    rule_by_name(name).unwrap()
}

fn same(a: &D, b: &D) -> bool {
    a.evaluate()
        .unwrap()
        .equal_within(&b.evaluate().unwrap(), 1e-9)
        .unwrap()
}

fn step(d: &D, name: &str) -> D {
    let ms = find_matches(d, &rule(name));
    assert!(!ms.is_empty(), "{name} should match");
    let after = apply(d, &ms[0]).unwrap();
    assert_eq!(certify(d, &after).unwrap(), Verdict::Pass);
    after
}

fn ghz_circuit(d: usize) -> D {
    let zero = g(G::basis_state(d, 0));
    let prep = par(&[zero.clone(), zero.clone(), zero.clone(), zero]);
    seq(&[
        prep,
        par(&[g(G::h(d)), id(d), id(d), id(d)]),
        par(&[g(G::add(d)), id(d), id(d)]),
        par(&[id(d), g(G::add(d)), id(d)]),
        par(&[id(d), id(d), g(G::add(d))]),
    ])
}

#[test]
fn catalog_has_unique_names() {
    let names = rule_names();
    assert!(names.len() >= 18);
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), names.len());
    assert!(matches!(rule_by_name::<f64>("nope"), Err(crate::Error::UnknownRule(_))));
}

#[test]
fn every_rule_is_sound_on_random_hosts() {
    let mut bad = Vec::new();
    for (i, rule) in builtin_rules::<f64>().iter().enumerate() {
        for d in 2..=5 {
            let (report, _) = check_rule(rule, d, 5, cell_seed(7, i, d)).unwrap();
            if !report.ok() {
                bad.push(format!("{report:?}"));
            }
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn corrupted_rules_are_caught() {
    for (i, rule) in builtin_rules::<f64>().iter().enumerate() {
        let (report, failures) = check_rule(&rule.corrupted(), 3, 2, cell_seed(11, i, 3)).unwrap();
        assert!(report.failed > 0, "{}", rule.name());
        assert_eq!(failures.len(), 2);
    }
}

#[test]
fn two_adjacent_copy_dots_fuse() {
    for d in [2, 3] {
        let two = seq(&[g(G::copy_dot(d, 1, 2)), par(&[g(G::copy_dot(d, 1, 2)), id(d)])]);
        let one = step(&two, "spider-copy");
        assert_eq!(one.node_count(), 1);
        assert_eq!(one.node(*one.nodes().keys().next().unwrap()).unwrap(), &G::copy_dot(d, 1, 3));
        assert!(same(&one, &g(G::copy_dot(d, 1, 3))));
    }
}

#[test]
fn chain_of_three_dots_has_two_matches() {
    let d = 3;
    let chain = seq(&[g(G::copy_dot(d, 1, 1)), g(G::copy_dot(d, 1, 1)), g(G::copy_dot(d, 1, 1))]);
    assert_eq!(find_matches(&chain, &rule("spider-copy")).len(), 2);
}

#[test]
fn plus_dots_fuse_through_neg_glue() {
    let d = 5;
    let glued = seq(&[g(G::plus_dot(d, 2, 1)), g(G::neg(d)), g(G::plus_dot(d, 1, 2))]);
    let fused = step(&glued, "spider-plus");
    assert_eq!(fused.node_count(), 1);
}

#[test]
fn snake_needs_a_zigzag() {
    let d = 3;
    let straight = id(d);
    assert!(find_matches(&straight, &rule("snake")).is_empty());
    let zigzag = seq(&[par(&[g(G::cup(d)), id(d)]), par(&[id(d), g(G::cap(d))])]);
    let ms = find_matches(&zigzag, &rule("snake"));
    assert_eq!(ms.len(), 1);
    let after = apply(&zigzag, &ms[0]).unwrap();
    assert_eq!(after.node_count(), 0);
    assert!(same(&after, &id(d)));
}

#[test]
fn hopf_disconnects_copy_and_plus() {
    for d in 2..=4 {
        let pair = seq(&[g(G::copy_dot(d, 1, 2)), par(&[g(G::neg(d)), id(d)]), g(G::plus_dot(d, 2, 1))]);
        let after = step(&pair, "hopf");
        let expected = seq(&[g(G::plus_effect(d)), g(G::basis_state(d, 0))]);
        assert!(same(&after, &expected));
        let direct = gen::basis_state::<f64>(d, 0)
            .unwrap()
            .compose(&gen::plus_state::<f64>(d).unwrap().dagger())
            .unwrap();
        assert!(after.evaluate().unwrap().equal_within(&direct, 1e-9).unwrap());
    }
}

#[test]
fn bialgebra_turns_nadd_swap_nadd_into_one_nadd() {
    let d = 3;
    let lhs = seq(&[g(G::nadd(d)), g(G::swap(d, d)), g(G::nadd(d))]);
    let after = step(&lhs, "bialgebra");
    assert_eq!(after.node_count(), 1);
}

#[test]
fn x_commutes_through_copy() {
    let d = 4;
    let lhs = seq(&[g(G::x_pow(d, 1)), g(G::copy_dot(d, 1, 2))]);
    let after = step(&lhs, "commute-x-copy");
    let rhs = seq(&[g(G::copy_dot(d, 1, 2)), par(&[g(G::x_pow(d, 1)), g(G::x_pow(d, 1))])]);
    assert!(same(&after, &rhs));
}

#[test]
fn gate_slides_through_cup() {
    let d = 3;
    let u = crate::random::random_unitary::<f64, _>(d, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1));
    let lhs = seq(&[g(G::cup(d)), par(&[g(G::boxed("U", u)), id(d)])]);
    step(&lhs, "slide");
}

#[test]
fn stale_match_is_rejected() {
    let d = 3;
    let two = seq(&[g(G::copy_dot(d, 1, 1)), g(G::copy_dot(d, 1, 1))]);
    let ms = find_matches(&two, &rule("spider-copy"));
    let once = apply(&two, &ms[0]).unwrap();
    assert!(matches!(apply(&once, &ms[0]), Err(crate::Error::StaleMatch { .. })));
}

#[test]
fn corrupted_step_fails_verification() {
    let d = 3;
    let two = seq(&[g(G::copy_dot(d, 1, 1)), g(G::copy_dot(d, 1, 1))]);
    let bad = rule("spider-copy").corrupted();
    let ms = find_matches(&two, &bad);
    let after = apply(&two, &ms[0]).unwrap();
    assert_eq!(certify(&two, &after).unwrap(), Verdict::Fail);
}

#[test]
fn verify_step_refuses_large_diagrams() {
    let big = par(&vec![id(3); 9]);
    assert!(matches!(verify_step(&big, &big, Complex::new(1.0, 0.0)), Err(crate::Error::TooLarge { .. })));
    assert_eq!(certify(&big, &big).unwrap(), Verdict::Unverified);
}

#[test]
fn ghz_circuit_normalizes_to_a_single_copy_dot() {
    for d in 2..=4 {
        let circuit = ghz_circuit(d);
        let (nf, trace) = normalize(&circuit, GHZ_STRATEGY, 200, true).unwrap();
        assert!(!trace.limit_reached);
        assert!(trace.all_verified());
        assert_eq!(nf.node_count(), 1, "d={d}: {:?}", nf.nodes());
        let (_, spec) = nf.nodes().iter().next().unwrap();
        assert_eq!(spec, &G::copy_dot(d, 0, 4));
        let scale = (d as f64).sqrt().recip();
        assert!((nf.scalar.value() - Complex::new(scale, 0.0)).norm() < 1e-9);
        assert!(same(&nf, &circuit));
    }
}

#[test]
fn zx_nadd_strategy_moves_paulis_past_nadd() {
    let d = 3;
    let lhs = seq(&[par(&[g(G::z_pow(d, 1)), g(G::x_pow(d, 2))]), g(G::nadd(d))]);
    let (nf, trace) = normalize_phases(&lhs, ZX_NADD_PHASES, 100, true).unwrap();
    assert!(!trace.limit_reached);
    assert!(trace.all_verified());
    assert!(same(&nf, &lhs));
    let nadd = nf.nodes().iter().find(|(_, s)| s.name() == "NADD").map(|(n, _)| *n).unwrap();
    for w in nf.wires().values() {
        if let Sink::Node { node, .. } = w.dst {
            if node == nadd {
                assert!(matches!(w.src, Source::Input(_)), "a gate is still in front of the NADD");
            }
        }
    }
}

#[test]
fn fusion_strategy_terminates_on_random_dot_networks() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let d = rng.random_range(2..5);
        let mut layers = vec![g(G::copy_dot(d, 1, 2))];
        for _ in 0..4 {
            let dot = if rng.random_bool(0.5) { G::copy_dot(d, 2, 2) } else { G::plus_dot(d, 2, 2) };
            layers.push(g(dot));
        }
        let circuit = seq(&layers);
        let (nf, trace) = normalize(&circuit, FUSION_STRATEGY, 50, true).unwrap();
        assert!(!trace.limit_reached);
        assert!(trace.all_verified());
        assert!(nf.node_count() <= circuit.node_count());
    }
}

#[test]
fn scalar_accumulator_preserves_evaluation() {
    let d = 4;
    let dot = seq(&[g(G::basis_state(d, 0)), g(G::plus_dot(d, 1, 2))]);
    let after = step(&dot, "prune-plus");
    assert!((after.scalar.value() - Complex::new(0.5, 0.0)).norm() < 1e-12);
}
