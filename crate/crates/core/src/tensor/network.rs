//! Einstein-summation of tensor networks.
//!
//! Contraction order only affects cost: [`contract`] picks a greedy
//! smallest-intermediate order, [`contract_in_edge_order`] follows a caller
//! supplied order (used to check order independence).

use num_complex::Complex;
use num_traits::Zero;

use super::{matmul, product, Direction, LegType, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Joins leg `a.1` of node `a.0` with leg `b.1` of node `b.0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkEdge {
    pub a: (usize, usize),
    pub b: (usize, usize),
}

impl NetworkEdge {
    pub fn new(node_a: usize, leg_a: usize, node_b: usize, leg_b: usize) -> Self {
        Self {
            a: (node_a, leg_a),
            b: (node_b, leg_b),
        }
    }
}

/// An open leg of the network, in result order (outputs before inputs).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryLeg {
    pub node: usize,
    pub leg: usize,
    pub direction: Direction,
}

/// Dense tensor whose axes carry contraction labels.
struct Labeled<T> {
    dims: Vec<usize>,
    labels: Vec<usize>,
    data: Vec<Complex<T>>,
}

impl<T: Real> Labeled<T> {
    fn size(&self) -> usize {
        product(&self.dims)
    }

    /// Reorders axes so that new axis `j` is old axis `perm[j]`.
    fn permute(&self, perm: &[usize]) -> Self {
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let labels: Vec<usize> = perm.iter().map(|&p| self.labels[p]).collect();
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Self {
                dims,
                labels,
                data: self.data.clone(),
            };
        }
        let mut old_strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            old_strides[i] = old_strides[i + 1] * self.dims[i + 1];
        }
        let strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let n = self.data.len();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; dims.len()];
        let mut offset = 0usize;
        for _ in 0..n {
            data.push(self.data[offset]);
            // odometer increment over the new index, tracking the old offset
            for axis in (0..dims.len()).rev() {
                idx[axis] += 1;
                offset += strides[axis];
                if idx[axis] < dims[axis] {
                    break;
                }
                offset -= strides[axis] * dims[axis];
                idx[axis] = 0;
            }
        }
        Self { dims, labels, data }
    }

    /// Sums over every label that appears twice on this tensor.
    fn trace_repeated(self) -> Self {
        let mut t = self;
        while let Some((p, q)) = first_repeated(&t.labels) {
            t = t.trace_pair(p, q);
        }
        t
    }

    fn trace_pair(&self, p: usize, q: usize) -> Self {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|&i| i != p && i != q).collect();
        let mut perm = rest.clone();
        perm.push(p);
        perm.push(q);
        let moved = self.permute(&perm);
        let d = self.dims[p];
        let outer = product(&rest.iter().map(|&i| self.dims[i]).collect::<Vec<_>>());
        let mut data = vec![Complex::zero(); outer];
        for (o, slot) in data.iter_mut().enumerate() {
            let base = o * d * d;
            for k in 0..d {
                *slot = *slot + moved.data[base + k * d + k];
            }
        }
        Self {
            dims: rest.iter().map(|&i| self.dims[i]).collect(),
            labels: rest.iter().map(|&i| self.labels[i]).collect(),
            data,
        }
    }
}

fn first_repeated(labels: &[usize]) -> Option<(usize, usize)> {
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Contracts every label shared between `a` and `b`.
fn contract_pair<T: Real>(a: &Labeled<T>, b: &Labeled<T>) -> Labeled<T> {
    let shared: Vec<usize> = a
        .labels
        .iter()
        .copied()
        .filter(|l| b.labels.contains(l))
        .collect();
    let a_free: Vec<usize> = (0..a.labels.len())
        .filter(|&i| !shared.contains(&a.labels[i]))
        .collect();
    let b_free: Vec<usize> = (0..b.labels.len())
        .filter(|&i| !shared.contains(&b.labels[i]))
        .collect();
    let a_shared: Vec<usize> = shared
        .iter()
        .map(|l| a.labels.iter().position(|x| x == l).unwrap())
        .collect();
    let b_shared: Vec<usize> = shared
        .iter()
        .map(|l| b.labels.iter().position(|x| x == l).unwrap())
        .collect();

    let a_perm: Vec<usize> = a_free.iter().chain(&a_shared).copied().collect();
    let b_perm: Vec<usize> = b_shared.iter().chain(&b_free).copied().collect();
    let ap = a.permute(&a_perm);
    let bp = b.permute(&b_perm);

    let m = product(&a_free.iter().map(|&i| a.dims[i]).collect::<Vec<_>>());
    let k = product(&a_shared.iter().map(|&i| a.dims[i]).collect::<Vec<_>>());
    let n = product(&b_free.iter().map(|&i| b.dims[i]).collect::<Vec<_>>());
    let data = matmul(&ap.data, &bp.data, m, k, n);

    Labeled {
        dims: a_free
            .iter()
            .map(|&i| a.dims[i])
            .chain(b_free.iter().map(|&i| b.dims[i]))
            .collect(),
        labels: a_free
            .iter()
            .map(|&i| a.labels[i])
            .chain(b_free.iter().map(|&i| b.labels[i]))
            .collect(),
        data,
    }
}

struct Network<T> {
    slots: Vec<Option<Labeled<T>>>,
    owner: Vec<usize>,
    edges: Vec<NetworkEdge>,
    boundary_labels: Vec<usize>,
    boundary_legs: Vec<LegType>,
}

impl<T: Real> Network<T> {
    fn build(nodes: &[Tensor<T>], edges: &[NetworkEdge], boundary: &[BoundaryLeg]) -> Result<Self> {
        let mut label_of: Vec<Vec<Option<usize>>> =
            nodes.iter().map(|t| vec![None; t.legs().len()]).collect();
        let mut claim = |node: usize, leg: usize, label: usize| -> Result<usize> {
            let legs = label_of
                .get_mut(node)
                .ok_or(Error::LegOutOfRange { node, leg })?;
            let slot = legs.get_mut(leg).ok_or(Error::LegOutOfRange { node, leg })?;
            if slot.is_some() {
                return Err(Error::DoubleUsedLeg { node, leg });
            }
            *slot = Some(label);
            Ok(nodes[node].legs()[leg].dim)
        };
        for (e, edge) in edges.iter().enumerate() {
            let da = claim(edge.a.0, edge.a.1, e)?;
            let db = claim(edge.b.0, edge.b.1, e)?;
            if da != db {
                return Err(Error::DimensionMismatch {
                    index: e,
                    left: da,
                    right: db,
                });
            }
        }
        let mut boundary_legs = Vec::with_capacity(boundary.len());
        let mut seen_input = false;
        for (i, b) in boundary.iter().enumerate() {
            let dim = claim(b.node, b.leg, edges.len() + i)?;
            match b.direction {
                Direction::Input => seen_input = true,
                Direction::Output if seen_input => return Err(Error::LegOrder),
                Direction::Output => {}
            }
            boundary_legs.push(LegType {
                direction: b.direction,
                dim,
            });
        }
        for (node, legs) in label_of.iter().enumerate() {
            if let Some(leg) = legs.iter().position(Option::is_none) {
                return Err(Error::DanglingLeg { node, leg });
            }
        }
        let slots = nodes
            .iter()
            .zip(&label_of)
            .map(|(t, labels)| {
                Some(
                    Labeled {
                        dims: t.legs().iter().map(|l| l.dim).collect(),
                        labels: labels.iter().map(|l| l.unwrap()).collect(),
                        data: t.data().to_vec(),
                    }
                    .trace_repeated(),
                )
            })
            .collect();
        Ok(Self {
            slots,
            owner: (0..nodes.len()).collect(),
            edges: edges.to_vec(),
            boundary_labels: (edges.len()..edges.len() + boundary.len()).collect(),
            boundary_legs,
        })
    }

    fn slot_of(&self, node: usize) -> usize {
        self.owner[node]
    }

    fn pending(&self, e: usize) -> bool {
        let s = self.slot_of(self.edges[e].a.0);
        self.slots[s]
            .as_ref()
            .is_some_and(|t| t.labels.contains(&e))
    }

    /// Size of the intermediate produced by processing edge `e`.
    fn cost(&self, e: usize) -> usize {
        let sa = self.slot_of(self.edges[e].a.0);
        let sb = self.slot_of(self.edges[e].b.0);
        let ta = self.slots[sa].as_ref().unwrap();
        if sa == sb {
            return ta.size();
        }
        let tb = self.slots[sb].as_ref().unwrap();
        let shared: usize = ta
            .labels
            .iter()
            .zip(&ta.dims)
            .filter(|(l, _)| tb.labels.contains(l))
            .map(|(_, &d)| d)
            .product();
        ta.size() / shared * (tb.size() / shared)
    }

    fn process(&mut self, e: usize) {
        if !self.pending(e) {
            return;
        }
        let sa = self.slot_of(self.edges[e].a.0);
        let sb = self.slot_of(self.edges[e].b.0);
        if sa == sb {
            // already merged; labels were traced when the slots joined
            return;
        }
        let (lo, hi) = (sa.min(sb), sa.max(sb));
        let a = self.slots[lo].take().unwrap();
        let b = self.slots[hi].take().unwrap();
        self.slots[lo] = Some(contract_pair(&a, &b).trace_repeated());
        for o in self.owner.iter_mut() {
            if *o == hi {
                *o = lo;
            }
        }
    }

    fn finish(mut self) -> Result<Tensor<T>> {
        let mut rest = self.slots.iter_mut().filter_map(Option::take);
        let mut acc = match rest.next() {
            Some(t) => t,
            None => Labeled {
                dims: vec![],
                labels: vec![],
                data: vec![Complex::new(T::one(), T::zero())],
            },
        };
        for t in rest {
            acc = contract_pair(&acc, &t);
        }
        let perm: Vec<usize> = self
            .boundary_labels
            .iter()
            .map(|l| acc.labels.iter().position(|x| x == l).unwrap())
            .collect();
        let out = acc.permute(&perm);
        Tensor::new(std::mem::take(&mut self.boundary_legs), out.data)
    }
}

/// Contracts a network with a greedy smallest-intermediate order.
///
/// Every leg of every node must appear in exactly one edge or once in
/// `boundary`. Ties are broken by the lowest edge index, so results are
/// deterministic.
pub fn contract<T: Real>(
    nodes: &[Tensor<T>],
    edges: &[NetworkEdge],
    boundary: &[BoundaryLeg],
) -> Result<Tensor<T>> {
    let mut net = Network::build(nodes, edges, boundary)?;
    loop {
        let next = (0..net.edges.len())
            .filter(|&e| net.pending(e))
            .min_by_key(|&e| (net.cost(e), e));
        match next {
            Some(e) => net.process(e),
            None => break,
        }
    }
    net.finish()
}

/// Contracts a network processing edges in the given order.
pub fn contract_in_edge_order<T: Real>(
    nodes: &[Tensor<T>],
    edges: &[NetworkEdge],
    boundary: &[BoundaryLeg],
    order: &[usize],
) -> Result<Tensor<T>> {
    let mut net = Network::build(nodes, edges, boundary)?;
    for &e in order {
        if e >= edges.len() {
            return Err(Error::InvalidParameter(format!("edge {e} out of range")));
        }
        net.process(e);
    }
    for e in 0..edges.len() {
        net.process(e);
    }
    net.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn random_tensor(rng: &mut ChaCha8Rng, outputs: &[usize], inputs: &[usize]) -> Tensor<f64> {
        Tensor::from_fn(outputs, inputs, |_, _| {
            C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn cup(d: usize) -> Tensor<f64> {
        Tensor::from_fn(&[d, d], &[], |o, _| {
            if o[0] == o[1] {
                C::new(1., 0.)
            } else {
                C::new(0., 0.)
            }
        })
    }

    fn out(node: usize, leg: usize) -> BoundaryLeg {
        BoundaryLeg {
            node,
            leg,
            direction: Direction::Output,
        }
    }

    fn inp(node: usize, leg: usize) -> BoundaryLeg {
        BoundaryLeg {
            node,
            leg,
            direction: Direction::Input,
        }
    }

    #[test]
    fn single_node_is_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(&mut rng, &[2, 3], &[2]);
        let r = contract(std::slice::from_ref(&t), &[], &[out(0, 0), out(0, 1), inp(0, 2)]).unwrap();
        assert!(r.equal_within(&t, 0.0).unwrap());
    }

    #[test]
    fn snake_network_is_identity() {
        for d in 1..5 {
            // node 0: cap (legs: in, in), node 1: cup (legs: out, out)
            let cap = cup(d).dagger();
            let edges = [NetworkEdge::new(0, 1, 1, 0)];
            let r = contract(&[cap, cup(d)], &edges, &[out(1, 1), inp(0, 0)]).unwrap();
            assert!(r.equal_within(&Tensor::identity(&[d]), 1e-12).unwrap());
        }
    }

    #[test]
    fn closed_wire_loop_is_dimension() {
        for d in 1..6 {
            // brute force: Σ_k δ_kk
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            let expected: f64 = (0..d).map(|k| delta(k, k)).sum();
            let edges = [NetworkEdge::new(0, 0, 0, 1)];
            let r = contract(&[Tensor::<f64>::identity(&[d])], &edges, &[]).unwrap();
            assert!((r.data()[0] - C::new(expected, 0.)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_tensor(&mut rng, &[3], &[2]);
        let g = random_tensor(&mut rng, &[2], &[3]);
        let direct = g.compose(&f).unwrap();
        // g legs: out0, in1; f legs: out0, in1
        let edges = [NetworkEdge::new(0, 1, 1, 0)];
        let r = contract(&[g, f], &edges, &[out(0, 0), inp(1, 1)]).unwrap();
        assert!(r.equal_within(&direct, 1e-12).unwrap());
    }

    #[test]
    fn errors_on_bad_networks() {
        let t = Tensor::<f64>::identity(&[2]);
        assert!(matches!(
            contract(std::slice::from_ref(&t), &[], &[out(0, 0)]),
            Err(Error::DanglingLeg { node: 0, leg: 1 })
        ));
        assert!(matches!(
            contract(std::slice::from_ref(&t), &[NetworkEdge::new(0, 0, 0, 1)], &[out(0, 0)]),
            Err(Error::DoubleUsedLeg { node: 0, leg: 0 })
        ));
        let u = Tensor::<f64>::identity(&[3]);
        assert!(matches!(
            contract(&[t, u], &[NetworkEdge::new(0, 1, 1, 0)], &[out(0, 0), inp(1, 1)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn order_independent_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            // a ring of 4 three-leg tensors, each with one open output
            let n = 4;
            let dims: Vec<usize> = (0..n).map(|_| rng.random_range(1..4)).collect();
            let nodes: Vec<Tensor<f64>> = (0..n)
                .map(|i| random_tensor(&mut rng, &[2, dims[i]], &[dims[(i + n - 1) % n]]))
                .collect();
            let edges: Vec<NetworkEdge> = (0..n)
                .map(|i| NetworkEdge::new(i, 1, (i + 1) % n, 2))
                .collect();
            let boundary: Vec<BoundaryLeg> = (0..n).map(|i| out(i, 0)).collect();
            let greedy = contract(&nodes, &edges, &boundary).unwrap();
            for _ in 0..3 {
                let mut order: Vec<usize> = (0..edges.len()).collect();
                order.shuffle(&mut rng);
                let r = contract_in_edge_order(&nodes, &edges, &boundary, &order).unwrap();
                assert!(r.equal_within(&greedy, 1e-10).unwrap());
            }
        }
    }
}
