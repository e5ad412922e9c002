use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use qcat::document;
use qcat::protocols::{self, ProtocolReport};
use qcat::report::{format_complex, trace_rows, TensorSummary, TraceRow};
use qcat::rewrite::soundness::{cell_seed, check_rule, RuleCheck};
use qcat::rewrite::{self, builtin_rules, Verdict};
use qcat::{Diagram, RewriteRule};

use crate::dot;
use crate::failure::Failure;
use crate::ProtocolName;

#[derive(Serialize)]
struct Report<B: Serialize> {
    command: Vec<String>,
    elapsed_ms: f64,
    #[serde(flatten)]
    body: B,
}

impl<B: Serialize> Report<B> {
    fn new(argv: &[String], started: Instant, body: B) -> Self {
        Self {
            command: argv.to_vec(),
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            body,
        }
    }

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

fn load(path: &Path) -> Result<Diagram, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    let d: Diagram = document::parse(&text).map_err(|e| match e {
        qcat::Error::Document(m) => Failure::Parse(format!("{}: {m}", path.display())),
        other => Failure::from(other),
    })?;
    let defects = d.validate();
    if !defects.is_empty() {
        return Err(Failure::Invalid(defects));
    }
    Ok(d)
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn eval(path: &Path, output: Option<&Path>, json: bool) -> Result<bool, Failure> {
    let d = load(path)?;
    let summary = TensorSummary::new(&d.evaluate()?);
    let json_text = || serde_json::to_string_pretty(&summary).expect("summaries serialize") + "\n";
    if let Some(out) = output {
        fs::write(out, json_text())?;
    }
    if json {
        return write_stdout(&json_text()).map(|_| true);
    }
    let mut text = format!("signature: {}\n", d.signature());
    if summary.outputs.is_empty() && summary.inputs.is_empty() {
        let (re, im) = summary.entries.first().map_or((0.0, 0.0), |a| (a.re, a.im));
        text.push_str(&format!("scalar: {}\n", format_complex(re, im)));
    } else {
        let wide = summary.is_wide();
        for a in &summary.entries {
            text.push_str(&format!("{}  {}\n", a.ket_bra(wide), format_complex(a.re, a.im)));
        }
        text.push_str(&format!("nonzero: {}\n", summary.entries.len()));
    }
    write_stdout(&text).map(|_| true)
}

pub struct RewriteArgs {
    pub argv: Vec<String>,
    pub file: PathBuf,
    pub rules: Vec<String>,
    pub max_steps: usize,
    pub verify: bool,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerdictCounts {
    pass: usize,
    fail: usize,
    unverified: usize,
}

#[derive(Serialize)]
struct RewriteBody {
    input: String,
    rules: Vec<String>,
    nodes_before: usize,
    nodes_after: usize,
    steps: Vec<TraceRow>,
    limit_reached: bool,
    total_scalar: String,
    verdicts: VerdictCounts,
    passed: bool,
}

pub fn rewrite(args: &RewriteArgs) -> Result<bool, Failure> {
    let started = Instant::now();
    let rules: Vec<RewriteRule> = rewrite::rules_by_name(&args.rules)?;
    let d = load(&args.file)?;
    let (nf, trace) = rewrite::normalize_with(&d, &rules, args.max_steps, args.verify)?;
    let count = |v: Verdict| trace.steps.iter().filter(|s| s.verdict == v).count();
    let verdicts = VerdictCounts {
        pass: count(Verdict::Pass),
        fail: count(Verdict::Fail),
        unverified: count(Verdict::Unverified),
    };
    let passed = verdicts.fail == 0;
    let doc = document::serialize(&nf);
    match &args.output {
        Some(p) => fs::write(p, &doc)?,
        None => write_stdout(&doc)?,
    }
    for (i, s) in trace.steps.iter().enumerate() {
        eprintln!("step {}: {} on {:?} scalar {} {}", i + 1, s.rule, s.nodes, s.scalar, s.verdict);
    }
    if trace.limit_reached {
        eprintln!("step limit {} reached", args.max_steps);
    }
    eprintln!("{} steps, {} -> {} nodes", trace.steps.len(), d.node_count(), nf.node_count());
    let body = RewriteBody {
        input: args.file.display().to_string(),
        rules: args.rules.clone(),
        nodes_before: d.node_count(),
        nodes_after: nf.node_count(),
        steps: trace_rows(&trace),
        limit_reached: trace.limit_reached,
        total_scalar: trace.total_scalar().to_string(),
        verdicts,
        passed,
    };
    if let Some(p) = &args.report {
        fs::write(p, Report::new(&args.argv, started, body).to_json())?;
    }
    if !passed {
        return Err(Failure::Soundness("a rewrite step failed verification".into()));
    }
    Ok(true)
}

pub struct VerifyArgs {
    pub argv: Vec<String>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub rules: Vec<String>,
    pub reproducers: PathBuf,
    pub json: bool,
    pub corrupt: Option<String>,
}

#[derive(Serialize)]
struct VerifyBody {
    seed: u64,
    trials: usize,
    dims: Vec<usize>,
    cells: Vec<RuleCheck>,
    reproducers: Vec<String>,
    passed: bool,
}

pub fn verify_rules(args: &VerifyArgs) -> Result<bool, Failure> {
    let started = Instant::now();
    let mut catalog: Vec<RewriteRule> = builtin_rules();
    for name in args.rules.iter().chain(&args.corrupt) {
        if !catalog.iter().any(|r| r.name() == name) {
            return Err(Failure::UnknownRule(name.clone()));
        }
    }
    if let Some(name) = &args.corrupt {
        for r in catalog.iter_mut().filter(|r| r.name() == name) {
            *r = r.corrupted();
        }
    }
    let mut cells = Vec::new();
    let mut reproducers = Vec::new();
    for (index, rule) in catalog.iter().enumerate() {
        if !args.rules.is_empty() && !args.rules.iter().any(|n| n == rule.name()) {
            continue;
        }
        for &d in &args.dims {
            if d < 2 {
                return Err(Failure::Other(format!("dimension {d} is too small for rule checks")));
            }
            let (cell, failures) = check_rule(rule, d, args.trials, cell_seed(args.seed, index, d))?;
            for (k, trial) in failures.iter().enumerate() {
                fs::create_dir_all(&args.reproducers)?;
                let path = args.reproducers.join(format!("{}-d{d}-{k}{}", rule.name(), document::EXTENSION));
                fs::write(&path, document::serialize(&trial.host))?;
                eprintln!("reproducer: {}", path.display());
                reproducers.push(path.display().to_string());
            }
            cells.push(cell);
        }
    }
    let passed = cells.iter().all(RuleCheck::ok);
    let body = VerifyBody {
        seed: args.seed,
        trials: args.trials,
        dims: args.dims.clone(),
        cells,
        reproducers,
        passed,
    };
    if args.json {
        write_stdout(&Report::new(&args.argv, started, &body).to_json())?;
    } else {
        let mut text = format!(
            "{:<16} {:>2} {:>8} {:>6} {:>6} {:>11} {:>9}\n",
            "rule", "d", "matches", "pass", "fail", "unverified", "no-match"
        );
        for c in &body.cells {
            text.push_str(&format!(
                "{:<16} {:>2} {:>8} {:>6} {:>6} {:>11} {:>9}\n",
                c.rule, c.dim, c.matches, c.passed, c.failed, c.unverified, c.no_match
            ));
        }
        text.push_str(&format!(
            "result: {} ({} cells, seed {})\n",
            if passed { "pass" } else { "fail" },
            body.cells.len(),
            args.seed
        ));
        write_stdout(&text)?;
    }
    if !passed {
        return Err(Failure::Soundness("rule verification failed".into()));
    }
    Ok(true)
}

pub struct ProtocolArgs {
    pub argv: Vec<String>,
    pub name: ProtocolName,
    pub dim: usize,
    pub seed: u64,
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    pub wires: usize,
    pub json: bool,
}

pub fn protocol(args: &ProtocolArgs) -> Result<bool, Failure> {
    let started = Instant::now();
    let d = args.dim;
    let report: ProtocolReport = match args.name {
        ProtocolName::Ghz => protocols::run_ghz::<f64>(d, args.wires)?,
        ProtocolName::Superdense => protocols::run_superdense::<f64>(d, args.p, args.q)?,
        ProtocolName::Teleport => protocols::run_teleport::<f64>(d, args.trials, args.seed)?,
        ProtocolName::GateTeleport => protocols::run_gate_teleport::<f64>(d, args.trials, args.seed)?,
    };
    let passed = report.passed;
    if args.json {
        write_stdout(&Report::new(&args.argv, started, &report).to_json())?;
    } else {
        write_stdout(&protocol_table(&report))?;
    }
    if !passed {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        return Err(Failure::Soundness(format!("certification failed: {}", names.join(", "))));
    }
    Ok(true)
}

fn kraus_cell(s: &TensorSummary) -> String {
    let wide = s.is_wide();
    if s.entries.is_empty() {
        return "0".into();
    }
    if s.outputs.is_empty() && s.inputs.is_empty() {
        return format_complex(s.entries[0].re, s.entries[0].im);
    }
    if s.entries.len() > 4 {
        let a = &s.entries[0];
        return format!("{} nonzero, {} {}, ...", s.entries.len(), a.ket_bra(wide), format_complex(a.re, a.im));
    }
    let parts: Vec<String> = s
        .entries
        .iter()
        .map(|a| format!("{} {}", a.ket_bra(wide), format_complex(a.re, a.im)))
        .collect();
    parts.join(", ")
}

fn protocol_table(r: &ProtocolReport) -> String {
    let mut t = format!("protocol: {}  d = {}", r.protocol, r.dim);
    if let Some(seed) = r.seed {
        t.push_str(&format!("  seed = {seed}"));
    }
    t.push('\n');
    t.push_str(&format!("{:<12} {:>14} {:>10}  {:<12} kraus\n", "branch", "probability", "deviation", "corrections"));
    for b in &r.branches {
        let prob = b.probability.map_or("-".to_string(), |p| format!("{p:.12}"));
        let dev = b.deviation.map_or("-".to_string(), |x| format!("{x:.1e}"));
        let corr: Vec<String> = b
            .corrections
            .iter()
            .map(|c| {
                let (z, x) = c.teleport_exponents();
                format!("Z^{z}X^{x}")
            })
            .collect();
        let corr = if corr.is_empty() { "-".to_string() } else { corr.join(" ") };
        t.push_str(&format!("{:<12} {:>14} {:>10}  {:<12} {}\n", b.label, prob, dev, corr, kraus_cell(&b.kraus)));
    }
    if !r.trace.is_empty() {
        t.push_str(&format!("rewrite steps: {}\n", r.trace.len()));
    }
    if let Some(res) = r.completeness_residual {
        t.push_str(&format!("completeness residual: {res:.3e}\n"));
    }
    if let Some(c) = &r.channel {
        t.push_str(&format!(
            "channel: {} trials, max deviation {:.3e}: {}\n",
            c.trials,
            c.max_deviation,
            if c.passed { "pass" } else { "fail" }
        ));
    }
    for c in &r.checks {
        t.push_str(&format!(
            "{} {} (value {:.3e}, tolerance {:.0e})\n",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    t.push_str(&format!("result: {}\n", if r.passed { "pass" } else { "fail" }));
    t
}

pub fn export_dot(path: &Path) -> Result<bool, Failure> {
    let d = load(path)?;
    write_stdout(&dot::to_dot(&d))?;
    Ok(true)
}
