//! Randomized soundness checks: embed a rule's pattern in random host
//! diagrams, apply every match and certify each step by evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{apply, certify, find_matches, RewriteRule, Verdict, MAX_VERIFY_BOUNDARY_DIM, MAX_VERIFY_NODES};
use crate::diagram::Diagram;
use crate::error::Result;
use crate::generators::GeneratorSpec;
use crate::random::random_state;
use crate::scalar::Real;

use super::samples::random_gate;

/// Wraps `pattern` in random one-qudit gates and closes boundary legs with
/// random states and effects until it fits the verification budget.
pub fn random_host<T: Real>(pattern: &Diagram<T>, rng: &mut ChaCha8Rng) -> Diagram<T> {
    let budget = MAX_VERIFY_NODES - 2;
    let mut nodes = pattern.node_count();
    let mut layer = |dims: &[usize], rng: &mut ChaCha8Rng| -> Diagram<T> {
        let mut out = Diagram::empty();
        for &dim in dims {
            let part = if dim >= 2 && nodes < budget && rng.random_bool(0.5) {
                nodes += 1;
                Diagram::from_generator(random_gate(dim, rng))
            } else {
                Diagram::identity(&[dim])
            };
            out = out.tensor(&part);
        }
        out
    };
    let pre = layer(pattern.inputs(), rng);
    let post = layer(pattern.outputs(), rng);
    let mut host = post
        .compose(pattern)
        .and_then(|x| x.compose(&pre))
        .expect("layers match the pattern boundary");
    if nodes < budget && rng.random_bool(0.3) {
        let dim = *pattern.inputs().first().or(pattern.outputs().first()).unwrap_or(&2);
        if dim >= 2 {
            host = host.tensor(&Diagram::from_generator(random_gate(dim, rng)));
        }
    }
    close_legs(host, rng)
}

fn close_legs<T: Real>(mut host: Diagram<T>, rng: &mut ChaCha8Rng) -> Diagram<T> {
    while host.boundary_dim() > MAX_VERIFY_BOUNDARY_DIM / 4 && host.node_count() < MAX_VERIFY_NODES {
        let close_input = !host.inputs().is_empty() && (host.outputs().is_empty() || rng.random_bool(0.5));
        if close_input {
            let slot = rng.random_range(0..host.inputs().len());
            let layer = host
                .inputs()
                .iter()
                .enumerate()
                .map(|(i, &dim)| {
                    if i == slot {
                        Diagram::from_generator(GeneratorSpec::boxed("psi", random_state(&[dim], rng)))
                    } else {
                        Diagram::identity(&[dim])
                    }
                })
                .fold(Diagram::empty(), |acc, p| acc.tensor(&p));
            host = host.compose(&layer).expect("closing layer fits");
        } else {
            let slot = rng.random_range(0..host.outputs().len());
            let layer = host
                .outputs()
                .iter()
                .enumerate()
                .map(|(i, &dim)| {
                    if i == slot {
                        Diagram::from_generator(GeneratorSpec::boxed("phi", random_state(&[dim], rng).dagger()))
                    } else {
                        Diagram::identity(&[dim])
                    }
                })
                .fold(Diagram::empty(), |acc, p| acc.tensor(&p));
            host = layer.compose(&host).expect("closing layer fits");
        }
    }
    host
}

/// Outcome of one host trial.
#[derive(Clone, Debug)]
pub struct Trial<T> {
    pub host: Diagram<T>,
    pub matches: usize,
    pub verdicts: Vec<Verdict>,
}

impl<T> Trial<T> {
    /// Passes iff the pattern was found and every step verified.
    pub fn passed(&self) -> bool {
        self.matches > 0 && self.verdicts.iter().all(|v| *v == Verdict::Pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleCheck {
    pub rule: String,
    pub dim: usize,
    pub trials: usize,
    pub matches: usize,
    pub passed: usize,
    pub failed: usize,
    pub unverified: usize,
    pub no_match: usize,
}

impl RuleCheck {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.unverified == 0 && self.no_match == 0
    }
}

/// Runs `trials` random hosts for one rule and dimension. Failing hosts are
/// returned so that callers can write reproducers.
pub fn check_rule<T: Real>(
    rule: &RewriteRule<T>,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<(RuleCheck, Vec<Trial<T>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RuleCheck {
        rule: rule.name().to_string(),
        dim,
        trials,
        matches: 0,
        passed: 0,
        failed: 0,
        unverified: 0,
        no_match: 0,
    };
    let mut failures = Vec::new();
    for _ in 0..trials {
        let pattern = rule.sample_pattern(dim, &mut rng);
        let host = random_host(&pattern, &mut rng);
        let trial = run_trial(rule, host)?;
        report.matches += trial.matches;
        for v in &trial.verdicts {
            match v {
                Verdict::Pass => report.passed += 1,
                Verdict::Fail => report.failed += 1,
                Verdict::Unverified => report.unverified += 1,
            }
        }
        if trial.matches == 0 {
            report.no_match += 1;
        }
        if !trial.passed() {
            failures.push(trial);
        }
    }
    Ok((report, failures))
}

/// Applies every match of `rule` in `host` separately and certifies it.
pub fn run_trial<T: Real>(rule: &RewriteRule<T>, host: Diagram<T>) -> Result<Trial<T>> {
    let matches = find_matches(&host, rule);
    let verdicts = matches
        .iter()
        .map(|m| {
            let after = apply(&host, m)?;
            certify(&host, &after)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trial {
        matches: matches.len(),
        host,
        verdicts,
    })
}

/// Seed for one (rule, dimension) cell, derived from a base seed.
pub fn cell_seed(base: u64, rule_index: usize, dim: usize) -> u64 {
    base ^ ((rule_index as u64) << 32) ^ (dim as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
