use num_complex::Complex;
use proptest::prelude::*;
use qcat::channels::DensityOperator;
use qcat::document::{parse, serialize};
use qcat::random::{random_density, random_tensor, random_unitary};
use qcat::{ComplexTensor, Diagram, GeneratorSpec, KrausSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn legs(r: &mut ChaCha8Rng) -> Vec<usize> {
    (0..r.random_range(1..=2)).map(|_| r.random_range(2..=3)).collect()
}

fn close(a: &ComplexTensor, b: &ComplexTensor) -> bool {
    a.max_abs_diff(b).is_ok_and(|dev| dev <= TOL)
}

/// One random layer on `n` wires of dimension `d`.
fn random_layer(d: usize, n: usize, r: &mut ChaCha8Rng) -> Diagram {
    let id = Diagram::identity(&[d]);
    let pick = r.random_range(0..9);
    let two = n >= 2 && pick >= 6;
    let gate = if two {
        match pick {
            6 => GeneratorSpec::add(d),
            7 => GeneratorSpec::nadd(d),
            _ => GeneratorSpec::swap(d, d),
        }
    } else {
        match pick % 6 {
            0 => GeneratorSpec::h(d),
            1 => GeneratorSpec::neg(d),
            2 => GeneratorSpec::z_pow(d, r.random_range(0..d as i64)),
            3 => GeneratorSpec::x_pow(d, r.random_range(0..d as i64)),
            4 => GeneratorSpec::copy_dot(d, 1, 1),
            _ => GeneratorSpec::boxed("u", random_unitary(d, r)),
        }
    };
    let gate = if r.random_bool(0.3) { gate.dagger() } else { gate };
    let width = if two { 2 } else { 1 };
    let at = r.random_range(0..=n - width);
    let mut layer = Diagram::empty();
    for _ in 0..at {
        layer = layer.tensor(&id);
    }
    layer = layer.tensor(&Diagram::from_generator(gate));
    for _ in at + width..n {
        layer = layer.tensor(&id);
    }
    layer
}

fn random_circuit(seed: u64) -> Diagram {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = r.random_range(2..=3);
    let n = r.random_range(1..=3);
    let mut circuit = Diagram::identity(&vec![d; n]);
    for _ in 0..r.random_range(0..8) {
        circuit = random_layer(d, n, &mut r).compose(&circuit).unwrap();
    }
    if r.random_bool(0.3) {
        circuit = circuit.tensor(&Diagram::from_generator(GeneratorSpec::scalar(Complex::new(0.5, -1.25))));
    }
    circuit
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_a_functor(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (legs(&mut r), legs(&mut r), legs(&mut r));
        let f = random_tensor::<f64, _>(&b, &a, &mut r);
        let g = random_tensor::<f64, _>(&c, &b, &mut r);
        let p = random_tensor::<f64, _>(&a, &c, &mut r);
        let (fd, gd) = (Diagram::from_tensor("f", f.clone()), Diagram::from_tensor("g", g.clone()));
        let pd = Diagram::from_tensor("p", p.clone());
        let gf = gd.compose(&fd).unwrap();
        prop_assert!(close(&gf.evaluate().unwrap(), &g.compose(&f).unwrap()));
        let left = pd.compose(&gf).unwrap();
        let right = pd.compose(&gd).unwrap().compose(&fd).unwrap();
        prop_assert!(close(&left.evaluate().unwrap(), &right.evaluate().unwrap()));
        prop_assert!(close(&fd.tensor(&gd).evaluate().unwrap(), &f.kron(&g)));
        prop_assert!(close(&gf.dagger().evaluate().unwrap(), &gf.evaluate().unwrap().dagger()));
        prop_assert!(close(&gf.dagger().dagger().evaluate().unwrap(), &gf.evaluate().unwrap()));
        let swapped = fd.dagger().compose(&gd.dagger()).unwrap();
        prop_assert!(close(&swapped.evaluate().unwrap(), &gf.dagger().evaluate().unwrap()));
    }

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c, x, y, z) = (legs(&mut r), legs(&mut r), legs(&mut r), legs(&mut r), legs(&mut r), legs(&mut r));
        let box_ = |out: &[usize], inp: &[usize], r: &mut ChaCha8Rng| {
            Diagram::from_tensor("t", random_tensor::<f64, _>(out, inp, r))
        };
        let (f1, f2) = (box_(&b, &a, &mut r), box_(&c, &b, &mut r));
        let (g1, g2) = (box_(&y, &x, &mut r), box_(&z, &y, &mut r));
        let lhs = f2.tensor(&g2).compose(&f1.tensor(&g1)).unwrap();
        let rhs = f2.compose(&f1).unwrap().tensor(&g2.compose(&g1).unwrap());
        prop_assert!(close(&lhs.evaluate().unwrap(), &rhs.evaluate().unwrap()));
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let circuit = random_circuit(seed);
        let text = serialize(&circuit);
        let back = parse::<f64>(&text).unwrap();
        prop_assert!(back.validate().is_empty());
        prop_assert_eq!(serialize(&back), text);
        prop_assert!(close(&back.evaluate().unwrap(), &circuit.evaluate().unwrap()));
    }

    #[test]
    fn weighted_unitaries_form_a_complete_set(seed in any::<u64>(), n in 1usize..5, d in 2usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let branches = weights.iter().enumerate().map(|(k, w)| {
            let u = random_unitary::<f64, _>(d, &mut r);
            (k.to_string(), u.scale(Complex::new((w / total).sqrt(), 0.0)))
        });
        let set = KrausSet::from_tensors(branches).unwrap();
        prop_assert!(set.is_complete(TOL).0);
        let rho = DensityOperator::new(random_density::<f64, _>(&[d], &mut r)).unwrap();
        let out = set.apply(&rho).unwrap();
        prop_assert!((out.tensor().trace().unwrap() - Complex::new(1.0, 0.0)).norm() <= TOL);
        let shrunk = set.scaled(Complex::new(0.9, 0.0));
        prop_assert!(!shrunk.is_complete(TOL).0);
        prop_assert!(shrunk.apply(&rho).is_err());
    }
}
