//! Exponent sequences: the increasing, positive, divergent sequences that
//! generate power series spaces.
//!
//! A sequence is described either by a built-in analytic family (affine,
//! power, logarithmic, geometric, factorial, `e^{n^p}`, a scaled copy, or a
//! merge of two descriptors) or by an explicit table — a finite prefix of an
//! otherwise unknown sequence. Built-in families carry analytic stability
//! rules; tables only ever support evidence-graded conclusions.
//!
//! "Increasing" is read as non-decreasing throughout: merged sequences keep
//! duplicate values (ties break left-first) so that both embedding index
//! maps exist, and tables may repeat values as long as they grow overall.

mod dsl;

pub use dsl::parse_sequence;

use crate::error::{Error, Result};
use crate::numeric::ln_factorial;
use crate::verdict::{Evidence, Verdict3, VerdictValue};
use serde::{Deserialize, Serialize};

/// Recipe for one exponent sequence. All validation happens at construction,
/// so evaluation never has to re-check parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Descriptor {
    /// `a·n + b`, `a > 0`, `a + b > 0`.
    Affine { slope: f64, intercept: f64 },
    /// `n^p`, `p > 0`.
    Power { exponent: f64 },
    /// `ln(n + c)`, `c > 0`.
    Logarithmic { offset: f64 },
    /// `q^n`, `q > 1`.
    Geometric { base: f64 },
    /// `n!`.
    Factorial,
    /// `e^{n^p}`, `p > 0`.
    ExpPower { exponent: f64 },
    /// `c · inner`, `c > 0`.
    Scaled { factor: f64, inner: Box<Descriptor> },
    /// Non-decreasing sorted union of two descriptors (duplicates kept,
    /// left-first on ties).
    Merge {
        left: Box<Descriptor>,
        right: Box<Descriptor>,
    },
    /// Explicit finite prefix: positive, non-decreasing, last > first.
    Table { values: Vec<f64> },
}

/// A validated exponent sequence. 1-indexed: `eval(1)` is the first term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSequence {
    descriptor: Descriptor,
    text: String,
}

impl ExponentSequence {
    pub fn new(descriptor: Descriptor) -> Result<ExponentSequence> {
        validate(&descriptor)?;
        let text = render(&descriptor);
        Ok(ExponentSequence { descriptor, text })
    }

    /// Parse from the DSL (`"n"`, `"n^2"`, `"ln(n+1)"`, `"2^n"`, `"n!"`,
    /// `"exp(n^2)"`, `"3*n"`, `"merge(a,b)"`, `"table:[...]"`).
    pub fn parse(text: &str) -> Result<ExponentSequence> {
        parse_sequence(text)
    }

    pub fn from_table(values: Vec<f64>) -> Result<ExponentSequence> {
        ExponentSequence::new(Descriptor::Table { values })
    }

    /// Load a table descriptor from a JSON array of numbers, e.g.
    /// `"[1, 2, 3.5]"`.
    pub fn table_from_json(text: &str) -> Result<ExponentSequence> {
        let values: Vec<f64> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidDescriptor(format!("table JSON: {e}")))?;
        ExponentSequence::from_table(values)
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    /// DSL rendering of the descriptor.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Sequences are 1-indexed throughout.
    pub fn index_base(&self) -> u32 {
        1
    }

    /// Largest evaluable index, `None` when unbounded.
    pub fn max_index(&self) -> Option<u32> {
        max_index(&self.descriptor)
    }

    /// The n-th term. Values past `f64` range saturate to `+inf`; use
    /// [`ExponentSequence::log_eval`] where the magnitude matters.
    pub fn eval(&self, n: u32) -> Result<f64> {
        self.check_index(n)?;
        Ok(eval(&self.descriptor, n))
    }

    /// `ln` of the n-th term, computed analytically (finite wherever the
    /// index is valid, even when the term itself overflows `f64`).
    pub fn log_eval(&self, n: u32) -> Result<f64> {
        self.check_index(n)?;
        Ok(log_eval(&self.descriptor, n))
    }

    /// Stream the first `limit` terms (fewer if a table runs out).
    pub fn iter(&self, limit: u32) -> Box<dyn Iterator<Item = f64> + '_> {
        iter_values(&self.descriptor, limit, false)
    }

    /// Stream `ln` of the first `limit` terms.
    pub fn log_iter(&self, limit: u32) -> Box<dyn Iterator<Item = f64> + '_> {
        iter_values(&self.descriptor, limit, true)
    }

    fn check_index(&self, n: u32) -> Result<()> {
        if n == 0 {
            return Err(Error::IndexOutOfRange { index: 0, limit: 1 });
        }
        if let Some(limit) = self.max_index() {
            if n > limit {
                return Err(Error::IndexOutOfRange { index: n, limit });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for ExponentSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

fn validate(d: &Descriptor) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidDescriptor(msg));
    match d {
        Descriptor::Affine { slope, intercept } => {
            if !slope.is_finite() || !intercept.is_finite() || *slope <= 0.0 {
                return bad(format!("affine slope must be positive, got {slope}"));
            }
            if slope + intercept <= 0.0 {
                return bad(format!(
                    "affine first term {} is not positive",
                    slope + intercept
                ));
            }
        }
        Descriptor::Power { exponent } => {
            if !exponent.is_finite() || *exponent <= 0.0 {
                return bad(format!("power exponent must be positive, got {exponent}"));
            }
        }
        Descriptor::Logarithmic { offset } => {
            if !offset.is_finite() || *offset <= 0.0 {
                return bad(format!(
                    "logarithmic offset must be positive, got {offset}"
                ));
            }
        }
        Descriptor::Geometric { base } => {
            if !base.is_finite() || *base <= 1.0 {
                return bad(format!("geometric base must exceed 1, got {base}"));
            }
        }
        Descriptor::Factorial => {}
        Descriptor::ExpPower { exponent } => {
            if !exponent.is_finite() || *exponent <= 0.0 {
                return bad(format!(
                    "exp-power exponent must be positive, got {exponent}"
                ));
            }
        }
        Descriptor::Scaled { factor, inner } => {
            if !factor.is_finite() || *factor <= 0.0 {
                return bad(format!("scale factor must be positive, got {factor}"));
            }
            validate(inner)?;
        }
        Descriptor::Merge { left, right } => {
            validate(left)?;
            validate(right)?;
        }
        Descriptor::Table { values } => {
            if values.len() < 2 {
                return bad("table needs at least two values".to_string());
            }
            for (i, v) in values.iter().enumerate() {
                if !v.is_finite() || *v <= 0.0 {
                    return bad(format!("table value {v} at position {} invalid", i + 1));
                }
            }
            for w in values.windows(2) {
                if w[1] < w[0] {
                    return bad(format!("table not non-decreasing at {} -> {}", w[0], w[1]));
                }
            }
            if values[values.len() - 1] <= values[0] {
                return bad("table shows no growth (last value must exceed first)".to_string());
            }
        }
    }
    Ok(())
}

fn max_index(d: &Descriptor) -> Option<u32> {
    match d {
        Descriptor::Table { values } => Some(values.len() as u32),
        Descriptor::Scaled { inner, .. } => max_index(inner),
        Descriptor::Merge { left, right } => match (max_index(left), max_index(right)) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        },
        _ => None,
    }
}

fn eval(d: &Descriptor, n: u32) -> f64 {
    let x = n as f64;
    match d {
        Descriptor::Affine { slope, intercept } => slope * x + intercept,
        Descriptor::Power { exponent } => {
            if exponent.fract() == 0.0 && exponent.abs() < 64.0 {
                x.powi(*exponent as i32)
            } else {
                x.powf(*exponent)
            }
        }
        Descriptor::Logarithmic { offset } => (x + offset).ln(),
        Descriptor::Geometric { base } => {
            if n <= 2048 {
                base.powi(n as i32)
            } else {
                (x * base.ln()).exp()
            }
        }
        Descriptor::Factorial => {
            if n > 170 {
                return f64::INFINITY;
            }
            let mut acc = 1.0f64;
            for i in 2..=n as u64 {
                acc *= i as f64;
            }
            acc
        }
        Descriptor::ExpPower { exponent } => eval(&Descriptor::Power { exponent: *exponent }, n).exp(),
        Descriptor::Scaled { factor, inner } => factor * eval(inner, n),
        Descriptor::Merge { .. } => iter_values(d, n, false)
            .nth(n as usize - 1)
            .expect("index validated"),
        Descriptor::Table { values } => values[n as usize - 1],
    }
}

fn log_eval(d: &Descriptor, n: u32) -> f64 {
    let x = n as f64;
    match d {
        Descriptor::Affine { .. } | Descriptor::Logarithmic { .. } | Descriptor::Table { .. } => {
            eval(d, n).ln()
        }
        Descriptor::Power { exponent } => exponent * x.ln(),
        Descriptor::Geometric { base } => x * base.ln(),
        Descriptor::Factorial => ln_factorial(n),
        Descriptor::ExpPower { exponent } => eval(&Descriptor::Power { exponent: *exponent }, n),
        Descriptor::Scaled { factor, inner } => factor.ln() + log_eval(inner, n),
        Descriptor::Merge { .. } => iter_values(d, n, true)
            .nth(n as usize - 1)
            .expect("index validated"),
    }
}

/// Streaming terms; merges run a two-pointer walk over their children, so a
/// full prefix costs O(limit) regardless of nesting. With `log` the streams
/// carry `ln` values — order is preserved, ties still break left-first.
fn iter_values<'a>(d: &'a Descriptor, limit: u32, log: bool) -> Box<dyn Iterator<Item = f64> + 'a> {
    match d {
        Descriptor::Merge { left, right } => {
            let l = iter_values(left, limit, log);
            let r = iter_values(right, limit, log);
            Box::new(MergeIter::new(l, r).take(limit as usize))
        }
        Descriptor::Table { values } => {
            let take = (limit as usize).min(values.len());
            if log {
                Box::new(values[..take].iter().map(|v| v.ln()))
            } else {
                Box::new(values[..take].iter().copied())
            }
        }
        _ => {
            let f = move |n: u32| if log { log_eval(d, n) } else { eval(d, n) };
            Box::new((1..=limit).map(f))
        }
    }
}

struct MergeIter<'a> {
    left: std::iter::Peekable<Box<dyn Iterator<Item = f64> + 'a>>,
    right: std::iter::Peekable<Box<dyn Iterator<Item = f64> + 'a>>,
}

impl<'a> MergeIter<'a> {
    fn new(
        left: Box<dyn Iterator<Item = f64> + 'a>,
        right: Box<dyn Iterator<Item = f64> + 'a>,
    ) -> Self {
        MergeIter {
            left: left.peekable(),
            right: right.peekable(),
        }
    }
}

impl Iterator for MergeIter<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        match (self.left.peek().copied(), self.right.peek().copied()) {
            (Some(l), Some(r)) => {
                if l <= r {
                    self.left.next()
                } else {
                    self.right.next()
                }
            }
            (Some(_), None) => self.left.next(),
            (None, Some(_)) => self.right.next(),
            (None, None) => None,
        }
    }
}

fn render(d: &Descriptor) -> String {
    match d {
        Descriptor::Affine { slope, intercept } => {
            let core = if *slope == 1.0 {
                "n".to_string()
            } else {
                format!("{slope}*n")
            };
            if *intercept == 0.0 {
                core
            } else if *intercept > 0.0 {
                format!("{core}+{intercept}")
            } else {
                format!("{core}{intercept}")
            }
        }
        Descriptor::Power { exponent } => format!("n^{exponent}"),
        Descriptor::Logarithmic { offset } => format!("ln(n+{offset})"),
        Descriptor::Geometric { base } => format!("{base}^n"),
        Descriptor::Factorial => "n!".to_string(),
        Descriptor::ExpPower { exponent } => format!("exp(n^{exponent})"),
        Descriptor::Scaled { factor, inner } => format!("{factor}*{}", render(inner)),
        Descriptor::Merge { left, right } => format!("merge({},{})", render(left), render(right)),
        Descriptor::Table { values } => format!("table[{} values]", values.len()),
    }
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

/// Outcome of a stability check: is `sup_n α_{n+1}/α_n` finite?
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Largest ratio `α_{n+1}/α_n` seen in the scan (`None` when it exceeds
    /// `f64` range; see `sup_log_ratio_observed`).
    pub sup_ratio_observed: Option<f64>,
    /// `ln` of the largest observed ratio. Always finite.
    pub sup_log_ratio_observed: f64,
    /// Index where the observed sup is attained (first attainment).
    pub attained_at: u32,
    pub depth: u32,
    pub verdict: Verdict3,
    /// True when a built-in family rule decided the verdict.
    pub analytic: bool,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict.is(VerdictValue::Bounded)
    }
}

/// Analytic stability rule for a built-in family: verdict plus, for bounded
/// families, the exact sup of the ratio sequence.
fn analytic_rule(d: &Descriptor) -> Option<(VerdictValue, Option<f64>, String)> {
    match d {
        Descriptor::Affine { slope, intercept } => Some((
            VerdictValue::Bounded,
            Some((2.0 * slope + intercept) / (slope + intercept)),
            "affine family: ratio decreases to 1".to_string(),
        )),
        Descriptor::Power { exponent } => Some((
            VerdictValue::Bounded,
            Some(2f64.powf(*exponent)),
            "power family: ratio ((n+1)/n)^p decreases to 1".to_string(),
        )),
        Descriptor::Logarithmic { offset } => Some((
            VerdictValue::Bounded,
            Some((2.0 + offset).ln() / (1.0 + offset).ln()),
            "logarithmic family: ratio decreases to 1".to_string(),
        )),
        Descriptor::Geometric { base } => Some((
            VerdictValue::Bounded,
            Some(*base),
            format!("geometric family: constant ratio {base}"),
        )),
        Descriptor::Factorial => Some((
            VerdictValue::Unbounded,
            None,
            "factorial family: ratio n+1 tends to infinity".to_string(),
        )),
        Descriptor::ExpPower { exponent } => {
            if *exponent > 1.0 {
                Some((
                    VerdictValue::Unbounded,
                    None,
                    format!("exp-power family p={exponent}: ratio e^((n+1)^p - n^p) tends to infinity"),
                ))
            } else if *exponent == 1.0 {
                Some((
                    VerdictValue::Bounded,
                    Some(std::f64::consts::E),
                    "exp-power family p=1: constant ratio e".to_string(),
                ))
            } else {
                Some((
                    VerdictValue::Bounded,
                    Some((2f64.powf(*exponent) - 1.0).exp()),
                    format!("exp-power family p={exponent}<1: ratio decreases to 1"),
                ))
            }
        }
        Descriptor::Scaled { inner, .. } => analytic_rule(inner),
        Descriptor::Merge { .. } | Descriptor::Table { .. } => None,
    }
}

/// Decide stability of `seq`. Built-in families are decided by rule (the
/// verdict is a statement about all `n`, which no prefix can settle); the
/// numeric scan supplies the observed statistics either way.
pub fn check_stability(seq: &ExponentSequence, depth: u32) -> Result<StabilityReport> {
    if depth < 2 {
        return Err(Error::InvalidDescriptor(
            "stability check needs depth >= 2".to_string(),
        ));
    }
    let scan_depth = match seq.max_index() {
        Some(limit) => depth.min(limit),
        None => depth,
    };

    // Scan in log domain so factorial-type families cannot overflow.
    let mut sup_log_ratio = f64::NEG_INFINITY;
    let mut attained_at = 0u32;
    let mut prev = f64::NAN;
    let mut ratios_tail_increasing = true;
    let mut prev_ratio = f64::NEG_INFINITY;
    let tail_start = scan_depth.saturating_sub(scan_depth / 4).max(2);
    for (idx, ln_v) in seq.log_iter(scan_depth).enumerate() {
        let n = idx as u32 + 1;
        if n > 1 {
            let log_ratio = ln_v - prev;
            if log_ratio > sup_log_ratio {
                sup_log_ratio = log_ratio;
                attained_at = n - 1;
            }
            if n >= tail_start {
                if log_ratio <= prev_ratio {
                    ratios_tail_increasing = false;
                }
                prev_ratio = log_ratio;
            }
        }
        prev = ln_v;
    }
    let sup_log_ratio = sup_log_ratio.max(0.0);
    let sup_ratio = sup_log_ratio.exp();

    let report = |verdict: Verdict3, analytic: bool| StabilityReport {
        sup_ratio_observed: sup_ratio.is_finite().then_some(sup_ratio),
        sup_log_ratio_observed: sup_log_ratio,
        attained_at,
        depth: scan_depth,
        verdict,
        analytic,
    };

    if let Some((value, family_sup, rationale)) = analytic_rule(seq.descriptor()) {
        let mut ev = Evidence::new(rationale)
            .with("sup_log_ratio_observed", sup_log_ratio)
            .with("attained_at", attained_at as f64);
        if let Some(s) = family_sup {
            ev = ev.with("family_sup_ratio", s);
        }
        return Ok(report(Verdict3::new(value, ev), true));
    }

    let summary = if ratios_tail_increasing && scan_depth >= 8 {
        "prefix scan only; ratio sequence is monotone increasing over the \
         final quarter (unbounded-leaning)"
    } else {
        "prefix scan only; no analytic rule applies to this descriptor"
    };
    let ev = Evidence::new(summary)
        .with("sup_log_ratio_observed", sup_log_ratio)
        .with("attained_at", attained_at as f64)
        .with(
            "tail_monotone_increasing",
            if ratios_tail_increasing { 1.0 } else { 0.0 },
        );
    Ok(report(Verdict3::new(VerdictValue::Inconclusive, ev), false))
}

// ---------------------------------------------------------------------------
// Merging (the γ construction)
// ---------------------------------------------------------------------------

/// Sorted union of two sequence prefixes with the index maps embedding each
/// side: `gamma[left_map[n-1]] == left(n)` and symmetrically on the right,
/// bit-equal. Every γ position is hit by exactly one of the two maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MergedSequence {
    pub gamma: ExponentSequence,
    /// 1-based γ-positions of the left terms (`t` map), strictly increasing.
    pub left_map: Vec<u32>,
    /// 1-based γ-positions of the right terms (`s` map), strictly increasing.
    pub right_map: Vec<u32>,
}

impl MergedSequence {
    pub fn depth(&self) -> u32 {
        self.left_map.len() as u32
    }
}

/// Merge the first `depth` terms of `left` and `right` into a single
/// non-decreasing table, remembering where each side landed. Ties take the
/// left term first.
pub fn merge(
    left: &ExponentSequence,
    right: &ExponentSequence,
    depth: u32,
) -> Result<MergedSequence> {
    if depth == 0 {
        return Err(Error::InvalidDescriptor("merge depth must be >= 1".to_string()));
    }
    for (side, seq) in [("left", left), ("right", right)] {
        if let Some(limit) = seq.max_index() {
            if limit < depth {
                return Err(Error::InvalidDescriptor(format!(
                    "{side} sequence only evaluable to {limit}, merge depth {depth}"
                )));
            }
        }
    }
    let lv: Vec<f64> = left.iter(depth).collect();
    let rv: Vec<f64> = right.iter(depth).collect();
    if lv.iter().chain(rv.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDescriptor(
            "sequence values exceed f64 range at requested merge depth".to_string(),
        ));
    }

    let mut gamma = Vec::with_capacity(2 * depth as usize);
    let mut left_map = Vec::with_capacity(depth as usize);
    let mut right_map = Vec::with_capacity(depth as usize);
    let (mut i, mut j) = (0usize, 0usize);
    while i < lv.len() || j < rv.len() {
        let take_left = match (lv.get(i), rv.get(j)) {
            (Some(l), Some(r)) => l <= r,
            (Some(_), None) => true,
            _ => false,
        };
        if take_left {
            gamma.push(lv[i]);
            left_map.push(gamma.len() as u32);
            i += 1;
        } else {
            gamma.push(rv[j]);
            right_map.push(gamma.len() as u32);
            j += 1;
        }
    }

    let gamma = ExponentSequence::from_table(gamma)?;
    Ok(MergedSequence {
        gamma,
        left_map,
        right_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(text: &str) -> ExponentSequence {
        ExponentSequence::parse(text).expect(text)
    }

    #[test]
    fn eval_builtin_families() {
        assert_eq!(seq("n!").eval(4).unwrap(), 24.0);
        assert!((seq("ln(n+1)").eval(1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(seq("n^2").eval(7).unwrap(), 49.0);
        assert_eq!(seq("2^n").eval(10).unwrap(), 1024.0);
        assert_eq!(seq("3*n").eval(5).unwrap(), 15.0);
        assert_eq!(seq("2*n-1").eval(3).unwrap(), 5.0);
        assert!((seq("exp(n^2)").log_eval(9).unwrap() - 81.0).abs() < 1e-12);
    }

    #[test]
    fn merge_family_interleaves() {
        // merge of (2n) and (2n-1) is (1,2,3,...)
        let m = seq("merge(2*n,2*n-1)");
        assert_eq!(m.eval(5).unwrap(), 5.0);
        assert_eq!(m.eval(1).unwrap(), 1.0);
        let prefix: Vec<f64> = m.iter(6).collect();
        assert_eq!(prefix, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn factorial_log_eval_stays_finite_past_f64() {
        let f = seq("n!");
        assert_eq!(f.eval(200).unwrap(), f64::INFINITY);
        let ln200 = f.log_eval(200).unwrap();
        assert!(ln200.is_finite());
        // ln(200!) ≈ 863.23
        assert!((ln200 - 863.231_987_192_468_6).abs() < 1e-6);
    }

    #[test]
    fn table_loads_from_a_json_array() {
        let t = ExponentSequence::table_from_json("[1, 2.5, 4]").unwrap();
        assert_eq!(t.eval(2).unwrap(), 2.5);
        assert!(ExponentSequence::table_from_json("[3, 1]").is_err());
        assert!(ExponentSequence::table_from_json("{}").is_err());
    }

    #[test]
    fn table_validation_rejects_bad_input() {
        assert!(ExponentSequence::from_table(vec![1.0, 0.5]).is_err());
        assert!(ExponentSequence::from_table(vec![1.0, 1.0]).is_err());
        assert!(ExponentSequence::from_table(vec![-1.0, 2.0]).is_err());
        assert!(ExponentSequence::from_table(vec![3.0]).is_err());
        let t = ExponentSequence::from_table(vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(t.eval(3).unwrap(), 2.0);
        assert!(t.eval(5).is_err());
    }

    #[test]
    fn stability_analytic_rules() {
        let geo = check_stability(&seq("2^n"), 100).unwrap();
        assert!(geo.analytic);
        assert!(geo.is_stable());
        assert!((geo.sup_ratio_observed.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(geo.verdict.evidence.stats["family_sup_ratio"], 2.0);

        let fact = check_stability(&seq("n!"), 100).unwrap();
        assert!(fact.analytic);
        assert!(fact.verdict.is(VerdictValue::Unbounded));
        // The numeric scan agrees: the observed sup keeps pace with depth.
        let deep = check_stability(&seq("n!"), 10_000).unwrap();
        assert!(deep.sup_ratio_observed.unwrap() >= 9_999.0);

        let log = check_stability(&seq("ln(n+1)"), 100_000).unwrap();
        assert!(log.analytic);
        assert!(log.is_stable());
        let expected = 3f64.ln() / 2f64.ln();
        assert!((log.sup_ratio_observed.unwrap() - expected).abs() < 1e-12);
        assert_eq!(log.attained_at, 1);

        let ep = check_stability(&seq("exp(n^2)"), 50).unwrap();
        assert!(ep.analytic);
        assert!(ep.verdict.is(VerdictValue::Unbounded));
    }

    #[test]
    fn stability_table_is_inconclusive() {
        let t = ExponentSequence::from_table((1..=64).map(|n| (n * n) as f64).collect()).unwrap();
        let rep = check_stability(&t, 1000).unwrap();
        assert!(!rep.analytic);
        assert!(rep.verdict.is(VerdictValue::Inconclusive));
        assert_eq!(rep.depth, 64);
        assert!((rep.sup_ratio_observed.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn merge_examples() {
        // Interleaving evens and odds.
        let m = merge(&seq("2*n"), &seq("2*n-1"), 5).unwrap();
        let g: Vec<f64> = m.gamma.iter(10).collect();
        assert_eq!(g, (1..=10).map(|x| x as f64).collect::<Vec<_>>());
        assert_eq!(m.left_map, vec![2, 4, 6, 8, 10]);
        assert_eq!(m.right_map, vec![1, 3, 5, 7, 9]);

        // Duplicate union, left-first tie-break.
        let m = merge(&seq("n"), &seq("n"), 3).unwrap();
        let g: Vec<f64> = m.gamma.iter(6).collect();
        assert_eq!(g, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert_eq!(m.left_map, vec![1, 3, 5]);
        assert_eq!(m.right_map, vec![2, 4, 6]);

        // (n) with (n^2), depth 3.
        let m = merge(&seq("n"), &seq("n^2"), 3).unwrap();
        let g: Vec<f64> = m.gamma.iter(6).collect();
        assert_eq!(g, vec![1.0, 1.0, 2.0, 3.0, 4.0, 9.0]);
        assert_eq!(m.left_map, vec![1, 3, 4]);
        assert_eq!(m.right_map, vec![2, 5, 6]);
    }

    proptest! {
        /// Monotonicity of every built-in family over a sampled prefix.
        #[test]
        fn families_are_non_decreasing(idx in 0usize..7, depth in 3u32..200) {
            let texts = ["n", "n^2", "ln(n+1)", "2^n", "n!", "exp(n^1.5)", "merge(n,3*n)"];
            let s = seq(texts[idx]);
            let vals: Vec<f64> = s.log_iter(depth).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }

        /// Merge completeness and exact embedding on random tables.
        #[test]
        fn merge_embeds_both_sides(
            mut a in proptest::collection::vec(0.001f64..1e6, 2..40),
            mut b in proptest::collection::vec(0.001f64..1e6, 2..40),
        ) {
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assume!(a[a.len() - 1] > a[0] && b[b.len() - 1] > b[0]);
            let depth = a.len().min(b.len()) as u32;
            let left = ExponentSequence::from_table(a.clone()).unwrap();
            let right = ExponentSequence::from_table(b.clone()).unwrap();
            let m = merge(&left, &right, depth).unwrap();

            // |γ| = 2·depth and the maps partition its indices.
            let mut hit = vec![false; 2 * depth as usize];
            for &p in m.left_map.iter().chain(m.right_map.iter()) {
                prop_assert!(!hit[p as usize - 1]);
                hit[p as usize - 1] = true;
            }
            prop_assert!(hit.iter().all(|&h| h));

            // Bit-exact embeddings.
            for (n, &p) in m.left_map.iter().enumerate() {
                prop_assert_eq!(m.gamma.eval(p).unwrap().to_bits(), a[n].to_bits());
            }
            for (n, &p) in m.right_map.iter().enumerate() {
                prop_assert_eq!(m.gamma.eval(p).unwrap().to_bits(), b[n].to_bits());
            }
        }

        /// Numeric ratio scan never exceeds the analytic sup for bounded families.
        #[test]
        fn analytic_sup_dominates_scan(idx in 0usize..4) {
            let texts = ["n", "n^2", "ln(n+1)", "2^n"];
            let s = seq(texts[idx]);
            let rep = check_stability(&s, 10_000).unwrap();
            let family = rep.verdict.evidence.stats["family_sup_ratio"];
            prop_assert!(rep.sup_ratio_observed.unwrap() <= family + 1e-12);
        }
    }
}
