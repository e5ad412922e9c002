//! Serializable summaries of tensors and rewrite traces.

use serde::Serialize;

use crate::rewrite::{RewriteTrace, Verdict};
use crate::scalar::Real;
use crate::tensor::{product, unravel, Tensor};

/// Amplitudes below this magnitude are left out of summaries.
pub const AMPLITUDE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    pub outputs: Vec<usize>,
    pub inputs: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

impl Amplitude {
    /// `|01⟩⟨2|`-style label, digits comma separated once any dim exceeds 10.
    pub fn ket_bra(&self, wide: bool) -> String {
        let join = |v: &[usize]| {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            parts.join(if wide { "," } else { "" })
        };
        let mut s = String::new();
        if !self.outputs.is_empty() || self.inputs.is_empty() {
            s.push_str(&format!("|{}⟩", join(&self.outputs)));
        }
        if !self.inputs.is_empty() {
            s.push_str(&format!("⟨{}|", join(&self.inputs)));
        }
        s
    }
}

/// Leg signature and nonzero amplitudes in big-endian index order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorSummary {
    pub outputs: Vec<usize>,
    pub inputs: Vec<usize>,
    pub entries: Vec<Amplitude>,
}

impl TensorSummary {
    pub fn new<T: Real>(t: &Tensor<T>) -> Self {
        let outputs = t.output_dims();
        let inputs = t.input_dims();
        let cols = product(&inputs);
        let mut entries = Vec::new();
        for (flat, z) in t.data().iter().enumerate() {
            let (re, im) = (z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN));
            if re.hypot(im) <= AMPLITUDE_THRESHOLD {
                continue;
            }
            let mut o = vec![0; outputs.len()];
            let mut i = vec![0; inputs.len()];
            unravel(flat / cols, &outputs, &mut o);
            unravel(flat % cols, &inputs, &mut i);
            entries.push(Amplitude { outputs: o, inputs: i, re, im });
        }
        Self { outputs, inputs, entries }
    }

    pub fn is_wide(&self) -> bool {
        self.outputs.iter().chain(&self.inputs).any(|&d| d > 10)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub rule: String,
    pub nodes: Vec<usize>,
    pub created: Vec<usize>,
    pub scalar: String,
    pub verdict: Verdict,
}

pub fn trace_rows<T: Real>(trace: &RewriteTrace<T>) -> Vec<TraceRow> {
    trace
        .steps
        .iter()
        .map(|s| TraceRow {
            rule: s.rule.clone(),
            nodes: s.nodes.clone(),
            created: s.created.clone(),
            scalar: s.scalar.to_string(),
            verdict: s.verdict,
        })
        .collect()
}

/// Formats a complex number compactly, dropping a zero imaginary part.
pub fn format_complex(re: f64, im: f64) -> String {
    let clean = |x: f64| if x.abs() < AMPLITUDE_THRESHOLD { 0.0 } else { x };
    let (re, im) = (clean(re), clean(im));
    if im == 0.0 {
        format!("{re:.12}")
    } else if re == 0.0 {
        format!("{im:.12}i")
    } else {
        format!("{re:.12}{im:+.12}i")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn summary_lists_nonzero_entries_in_order() {
        let t = Tensor::<f64>::from_fn(&[2], &[2], |o, i| if o[0] != i[0] { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) });
        let s = TensorSummary::new(&t);
        assert_eq!(s.entries.len(), 2);
        assert_eq!(s.entries[0].outputs, vec![0]);
        assert_eq!(s.entries[0].inputs, vec![1]);
        assert_eq!(s.entries[0].ket_bra(false), "|0⟩⟨1|");
        assert_eq!(format_complex(0.5, 0.0), "0.500000000000");
        assert_eq!(format_complex(0.0, -1.0), "-1.000000000000i");
    }
}
