//! Graph rewriting with diagrammatic laws.
//!
//! Each [`RewriteRule`] finds occurrences of its left-hand side and builds
//! a [`Patch`] for each. Applying a match multiplies the diagram's scalar
//! accumulator by the rule's factor `σ`, so the graph before equals `σ`
//! times the graph after and the full evaluation never changes.

mod rules;
mod samples;
pub mod soundness;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagram::{Diagram, NodeId, Patch, PatchSink, PatchSource, Wire, WireId};
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::scalar::{Real, ScalarFactor};

/// Largest network that [`verify_step`] will evaluate.
pub const MAX_VERIFY_NODES: usize = 20;
pub const MAX_VERIFY_BOUNDARY_DIM: usize = 4096;

/// One occurrence of a rule's pattern together with its replacement.
#[derive(Clone, Debug)]
pub struct Match<T> {
    pub rule: String,
    /// Bound nodes, sorted.
    pub nodes: Vec<NodeId>,
    /// Wires touching the bound nodes, sorted.
    pub wires: Vec<WireId>,
    /// Distinct dimensions on those wires.
    pub dims: Vec<usize>,
    pub scalar: ScalarFactor<T>,
    snapshot_nodes: Vec<(NodeId, GeneratorSpec<T>)>,
    snapshot_wires: Vec<Wire>,
    patch: Patch<T>,
}

impl<T: Real> Match<T> {
    pub fn patch(&self) -> &Patch<T> {
        &self.patch
    }
}

type Finder<T> = Arc<dyn Fn(&Diagram<T>) -> Vec<Patch<T>> + Send + Sync>;
type Sampler<T> = Arc<dyn Fn(usize, &mut ChaCha8Rng) -> Diagram<T> + Send + Sync>;

/// A named diagrammatic law.
#[derive(Clone)]
pub struct RewriteRule<T> {
    name: String,
    summary: &'static str,
    finder: Finder<T>,
    sampler: Sampler<T>,
}

impl<T> fmt::Debug for RewriteRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewriteRule").field("name", &self.name).finish()
    }
}

impl<T: Real> RewriteRule<T> {
    pub(crate) fn new(
        name: &str,
        summary: &'static str,
        finder: impl Fn(&Diagram<T>) -> Vec<Patch<T>> + Send + Sync + 'static,
        sampler: impl Fn(usize, &mut ChaCha8Rng) -> Diagram<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            summary,
            finder: Arc::new(finder),
            sampler: Arc::new(sampler),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn summary(&self) -> &'static str {
        self.summary
    }

    /// A small diagram containing the left-hand side, for dimension `d`.
    pub fn sample_pattern(&self, d: usize, rng: &mut ChaCha8Rng) -> Diagram<T> {
        (self.sampler)(d, rng)
    }

    /// Same matcher, but every replacement is off by a phase and a factor.
    /// Only useful as a negative control for verification.
    #[doc(hidden)]
    pub fn corrupted(&self) -> Self {
        let inner = self.finder.clone();
        let bad = ScalarFactor::from_complex(Complex::from_polar(T::of_f64(1.25), T::of_f64(0.3)));
        Self {
            name: self.name.clone(),
            summary: self.summary,
            finder: Arc::new(move |d| {
                inner(d)
                    .into_iter()
                    .map(|mut p| {
                        p.scalar = p.scalar.mul(&bad);
                        p
                    })
                    .collect()
            }),
            sampler: self.sampler.clone(),
        }
    }
}

/// Every builtin rule, in catalog order.
pub fn builtin_rules<T: Real>() -> Vec<RewriteRule<T>> {
    rules::catalog()
}

pub fn rule_names() -> Vec<String> {
    builtin_rules::<f64>().into_iter().map(|r| r.name).collect()
}

pub fn rule_by_name<T: Real>(name: &str) -> Result<RewriteRule<T>> {
    builtin_rules()
        .into_iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::UnknownRule(name.to_string()))
}

/// Resolves a list of rule names, failing on the first unknown one.
pub fn rules_by_name<T: Real, S: AsRef<str>>(names: &[S]) -> Result<Vec<RewriteRule<T>>> {
    let all = builtin_rules::<T>();
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|r| r.name == n.as_ref())
                .cloned()
                .ok_or_else(|| Error::UnknownRule(n.as_ref().to_string()))
        })
        .collect()
}

fn touches_removed<T>(patch: &Patch<T>) -> bool {
    let removed: BTreeSet<NodeId> = patch.remove.iter().copied().collect();
    patch.wires.iter().any(|(s, t)| {
        let s_bad = matches!(s, PatchSource::Existing(src) if src.node_id().is_some_and(|n| removed.contains(&n)));
        let t_bad = matches!(t, PatchSink::Existing(dst) if dst.node_id().is_some_and(|n| removed.contains(&n)));
        s_bad || t_bad
    })
}

fn touching_wires<T: Real>(d: &Diagram<T>, nodes: &[NodeId]) -> Vec<Wire> {
    d.wires()
        .values()
        .filter(|w| {
            w.src.node_id().is_some_and(|n| nodes.contains(&n))
                || w.dst.node_id().is_some_and(|n| nodes.contains(&n))
        })
        .copied()
        .collect()
}

/// All matches of `rule`, sorted by bound node ids.
///
/// Patterns whose replacement would have to reconnect a port of a removed
/// node (closed cycles inside the pattern) are skipped.
pub fn find_matches<T: Real>(d: &Diagram<T>, rule: &RewriteRule<T>) -> Vec<Match<T>> {
    let mut seen = BTreeSet::new();
    let mut out: Vec<Match<T>> = (rule.finder)(d)
        .into_iter()
        .filter(|p| !touches_removed(p))
        .filter_map(|patch| {
            let mut nodes = patch.remove.clone();
            nodes.sort_unstable();
            nodes.dedup();
            if !seen.insert(nodes.clone()) {
                return None;
            }
            let snapshot_wires = touching_wires(d, &nodes);
            let wires: Vec<WireId> = snapshot_wires.iter().map(|w| w.id).collect();
            let dims: Vec<usize> = snapshot_wires
                .iter()
                .map(|w| w.dim)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let snapshot_nodes = nodes
                .iter()
                .map(|&n| (n, d.node(n).cloned().expect("matched node exists")))
                .collect();
            Some(Match {
                rule: rule.name.clone(),
                nodes,
                wires,
                dims,
                scalar: patch.scalar.clone(),
                snapshot_nodes,
                snapshot_wires,
                patch,
            })
        })
        .collect();
    out.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    out
}

/// Applies a match; fails if the matched region changed since it was found.
pub fn apply<T: Real>(d: &Diagram<T>, m: &Match<T>) -> Result<Diagram<T>> {
    let stale = m.snapshot_nodes.iter().any(|(n, spec)| d.node(*n) != Some(spec))
        || touching_wires(d, &m.nodes) != m.snapshot_wires;
    if stale {
        return Err(Error::StaleMatch {
            rule: m.rule.clone(),
        });
    }
    let mut out = d.clone();
    out.apply_patch(&m.patch)?;
    Ok(out)
}

/// Checks `evaluate(after) = declared · evaluate(before)`.
///
/// Tolerance is the precision default scaled by the largest amplitude of
/// the reference, so large unnormalized networks are compared fairly.
pub fn verify_step<T: Real>(before: &Diagram<T>, after: &Diagram<T>, declared: Complex<T>) -> Result<bool> {
    if before.inputs() != after.inputs() || before.outputs() != after.outputs() {
        return Err(Error::SignatureMismatch {
            expected: before.signature(),
            found: after.signature(),
        });
    }
    for d in [before, after] {
        if d.node_count() > MAX_VERIFY_NODES || d.boundary_dim() > MAX_VERIFY_BOUNDARY_DIM {
            return Err(Error::TooLarge {
                nodes: d.node_count(),
                boundary_dim: d.boundary_dim(),
            });
        }
    }
    let lhs = after.evaluate()?;
    let rhs = before.evaluate()?.scale(declared);
    let tol = T::default_tolerance() * rhs.max_abs().max(T::one());
    Ok(lhs.max_abs_diff(&rhs)? <= tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unverified,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unverified => "unverified",
        })
    }
}

#[derive(Clone, Debug)]
pub struct TraceStep<T> {
    pub rule: String,
    pub nodes: Vec<NodeId>,
    /// Ids given to the nodes the rule created.
    pub created: Vec<NodeId>,
    pub scalar: ScalarFactor<T>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default)]
pub struct RewriteTrace<T> {
    pub steps: Vec<TraceStep<T>>,
    pub limit_reached: bool,
}

impl<T: Real> RewriteTrace<T> {
    /// Product of all deposited factors.
    pub fn total_scalar(&self) -> ScalarFactor<T> {
        self.steps
            .iter()
            .fold(ScalarFactor::one(), |acc, s| acc.mul(&s.scalar))
    }

    pub fn all_verified(&self) -> bool {
        self.steps.iter().all(|s| s.verdict == Verdict::Pass)
    }

    pub fn any_failed(&self) -> bool {
        self.steps.iter().any(|s| s.verdict == Verdict::Fail)
    }
}

/// Outcome of certifying one applied step.
pub fn certify<T: Real>(before: &Diagram<T>, after: &Diagram<T>) -> Result<Verdict> {
    match verify_step(before, after, Complex::new(T::one(), T::zero())) {
        Ok(true) => Ok(Verdict::Pass),
        Ok(false) => Ok(Verdict::Fail),
        Err(Error::TooLarge { .. }) => Ok(Verdict::Unverified),
        Err(e) => Err(e),
    }
}

/// Repeatedly applies the first available match, trying rules in strategy
/// order, until no rule matches or `max_steps` steps were taken.
pub fn normalize<T: Real, S: AsRef<str>>(
    d: &Diagram<T>,
    strategy: &[S],
    max_steps: usize,
    verify_each: bool,
) -> Result<(Diagram<T>, RewriteTrace<T>)> {
    let rules = rules_by_name::<T, S>(strategy)?;
    normalize_with(d, &rules, max_steps, verify_each)
}

pub fn normalize_with<T: Real>(
    d: &Diagram<T>,
    rules: &[RewriteRule<T>],
    max_steps: usize,
    verify_each: bool,
) -> Result<(Diagram<T>, RewriteTrace<T>)> {
    d.ensure_valid()?;
    let mut current = d.clone();
    let mut trace = RewriteTrace::default();
    loop {
        let next = rules
            .iter()
            .find_map(|r| find_matches(&current, r).into_iter().next());
        let Some(m) = next else { break };
        if trace.steps.len() >= max_steps {
            trace.limit_reached = true;
            break;
        }
        let mut after = current.clone();
        let created = after.apply_patch(&m.patch)?;
        let verdict = if verify_each {
            certify(&current, &after)?
        } else {
            Verdict::Unverified
        };
        trace.steps.push(TraceStep {
            rule: m.rule.clone(),
            nodes: m.nodes.clone(),
            created,
            scalar: m.scalar.clone(),
            verdict,
        });
        current = after;
    }
    Ok((current, trace))
}

/// Runs [`normalize`] once per phase and concatenates the traces. The step
/// budget is shared between phases.
pub fn normalize_phases<T: Real, S: AsRef<str>>(
    d: &Diagram<T>,
    phases: &[&[S]],
    max_steps: usize,
    verify_each: bool,
) -> Result<(Diagram<T>, RewriteTrace<T>)> {
    let mut current = d.clone();
    let mut trace = RewriteTrace::default();
    for phase in phases {
        let budget = max_steps.saturating_sub(trace.steps.len());
        let (next, t) = normalize(&current, phase, budget, verify_each)?;
        current = next;
        trace.steps.extend(t.steps);
        if t.limit_reached {
            trace.limit_reached = true;
            break;
        }
    }
    Ok((current, trace))
}

/// Strategy taking the ADD-ladder GHZ circuit to a single copy dot.
pub const GHZ_STRATEGY: &[&str] = &[
    "add-to-nadd",
    "nadd-split",
    "plus-prep",
    "prune-copy",
    "prune-plus",
    "plus-to-neg",
    "neg-cancel",
    "spider-copy",
];

/// Phases pushing Z and X gates from before a NADD to after it. Splitting
/// and fusing undo each other, so they run as separate passes.
pub const ZX_NADD_PHASES: &[&[&str]] = &[
    &["nadd-split"],
    &["pauli-fuse", "commute-z-copy", "commute-x-copy", "commute-x-plus", "commute-z-plus"],
    &["nadd-fuse"],
];

/// Fusion strategy whose every step removes at least one node.
pub const FUSION_STRATEGY: &[&str] = &["spider-copy", "spider-plus", "snake", "h4-elim"];

#[cfg(test)]
mod tests;
