//! Finite limit points of the double ratio family `(β_i/α_j)` and the
//! truncated tameness criterion.
//!
//! The set `M_βα` of finite limit points of `{β_i/α_j : i, j ∈ N}` governs
//! tameness of infinite-type pairs; no finite scan can decide its
//! boundedness, so the estimator reports evidence-graded verdicts. Two
//! analytic shortcuts decide it for built-in families:
//!
//! * either sequence stable: fix `r > 0`; descending the stable side moves
//!   the ratio from above `r` to below in multiplicative steps of at most
//!   `Q = sup α_{n+1}/α_n`, so infinitely many ratios land in `[r, Q·r]` and
//!   `M_βα` meets every such window — it is unbounded.
//! * both sequences non-stable: `M_βα` is bounded (cross ratios cannot
//!   accumulate at arbitrarily large finite values when both gap sequences
//!   blow up).

mod piszczek;

pub use piszczek::{check_piszczek, ConstantSample, PiszczekParams, PiszczekRun, PISZCZEK_TOL};

use crate::error::{Error, Result};
use crate::exec::{ordered_map, Execution};
use crate::sequences::{check_stability, ExponentSequence};
use crate::verdict::{Evidence, Verdict3, VerdictValue};
use serde::{Deserialize, Serialize};

/// A cluster of ratio values: `center` is the mean of its members (exactly
/// `0.0` for the zero cluster), `mass` the number of index pairs hitting it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub mass: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPointParams {
    pub depth: u32,
    pub cutoff: f64,
    pub cluster_eps: f64,
    pub execution: Execution,
}

impl LimitPointParams {
    /// Default clustering resolution is `10^-3 · cutoff`.
    pub fn new(depth: u32, cutoff: f64) -> LimitPointParams {
        LimitPointParams {
            depth,
            cutoff,
            cluster_eps: 1e-3 * cutoff,
            execution: Execution::Sequential,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> LimitPointParams {
        self.cluster_eps = eps;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> LimitPointParams {
        self.execution = exec;
        self
    }
}

/// Estimated structure of `M_βα` below a cutoff.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPointEstimate {
    /// Limit-point candidates: clusters whose mass grew between half depth
    /// and full depth.
    pub clusters: Vec<Cluster>,
    /// Largest candidate center; only set when the verdict is `Bounded`.
    pub sup_finite: Option<f64>,
    pub cutoff: f64,
    /// Scan depth the clusters reflect (capped when an analytic rule decided
    /// the verdict; the requested depth is in the evidence).
    pub depth: u32,
    pub verdict: Verdict3,
    pub analytic: bool,
}

/// Cap on the evidence scan when an analytic rule already decided the
/// verdict — clusters are then illustration, not proof.
const ANALYTIC_EVIDENCE_DEPTH: u32 = 512;

/// Fraction of the cutoff treated as "arbitrarily close to the cutoff" in
/// the escape test.
const NEAR_CUTOFF_FRACTION: f64 = 0.05;

/// Estimate the finite limit points of `(β_i/α_j)` for `i, j ≤ depth`.
///
/// Ratios at or above `cutoff` are discarded as escaping to infinity; values
/// at most `cluster_eps` form the zero cluster (zero is always admitted as a
/// limit point and never counts against boundedness). The remaining sorted
/// values are clustered greedily at resolution `cluster_eps`, and a cluster
/// counts as a limit-point candidate only if its mass grows between depth/2
/// and depth. Analytic family rules fire first; the numeric verdict compares
/// candidate sups across a depth doubling and re-tests near-cutoff escape at
/// `2·cutoff`.
pub fn estimate_limit_points(
    beta: &ExponentSequence,
    alpha: &ExponentSequence,
    params: &LimitPointParams,
) -> Result<LimitPointEstimate> {
    if params.depth < 10 {
        return Err(Error::Validation("limit point scan needs depth >= 10".to_string()));
    }
    // NaN fails both guards.
    if params.cutoff.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Validation("cutoff must be positive".to_string()));
    }
    if params.cluster_eps.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Validation("cluster_eps must be positive".to_string()));
    }

    let analytic = analytic_rule(beta, alpha);
    let depth = if analytic.is_some() {
        params.depth.min(ANALYTIC_EVIDENCE_DEPTH)
    } else {
        params.depth
    };
    let eps = params.cluster_eps;
    let exec = params.execution;

    let cand_full = candidates(beta, alpha, depth, params.cutoff, eps, exec);
    let cand_half = candidates(beta, alpha, depth / 2, params.cutoff, eps, exec);
    let cand_2c = candidates(beta, alpha, depth, 2.0 * params.cutoff, eps, exec);

    let sup_full = max_center(&cand_full);
    let sup_half = max_center(&cand_half);
    let sup_2c = max_center(&cand_2c);
    let margin = NEAR_CUTOFF_FRACTION * params.cutoff;
    let near = sup_full >= params.cutoff - margin;
    let near_2c = sup_2c >= 2.0 * params.cutoff - 2.0 * margin;
    let sup_stable = (sup_full - sup_half).abs() <= eps.max(1e-9);

    let base_stats = |ev: Evidence| {
        ev.with("requested_depth", params.depth as f64)
            .with("scan_depth", depth as f64)
            .with("cluster_eps", eps)
            .with("candidates", cand_full.len() as f64)
            .with("candidates_half_depth", cand_half.len() as f64)
            .with("sup_candidate", sup_full)
            .with("sup_candidate_half_depth", sup_half)
            .with("sup_candidate_double_cutoff", sup_2c)
            .with("near_cutoff", near as u8 as f64)
            .with("near_double_cutoff", near_2c as u8 as f64)
    };

    let (value, evidence, analytic_flag) = if let Some((value, why)) = analytic {
        (value, base_stats(Evidence::new(why)), true)
    } else if near && near_2c {
        let ev = base_stats(Evidence::new(
            "candidates accumulate near the cutoff and keep doing so when the \
             cutoff doubles: the ratio family escapes every finite bound",
        ));
        (VerdictValue::Unbounded, ev, false)
    } else if sup_stable && sup_full < params.cutoff - margin {
        let ev = base_stats(Evidence::new(
            "candidate sup is stable across a depth doubling and clear of the cutoff",
        ));
        (VerdictValue::Bounded, ev, false)
    } else {
        let ev = base_stats(Evidence::new(
            "candidates neither stabilize clearly below the cutoff nor \
             persistently approach it",
        ));
        (VerdictValue::Inconclusive, ev, false)
    };

    let sup_finite = match value {
        VerdictValue::Bounded => Some(sup_full),
        _ => None,
    };

    Ok(LimitPointEstimate {
        clusters: cand_full,
        sup_finite,
        cutoff: params.cutoff,
        depth,
        verdict: Verdict3::new(value, evidence),
        analytic: analytic_flag,
    })
}

fn max_center(clusters: &[Cluster]) -> f64 {
    clusters.iter().map(|c| c.center).fold(0.0, f64::max)
}

/// Analytic verdict for built-in families, when both stabilities are
/// decided by rule.
fn analytic_rule(
    beta: &ExponentSequence,
    alpha: &ExponentSequence,
) -> Option<(VerdictValue, String)> {
    let sb = check_stability(beta, 16).ok()?;
    let sa = check_stability(alpha, 16).ok()?;
    let stable_b = sb.analytic && sb.is_stable();
    let stable_a = sa.analytic && sa.is_stable();
    let unstable_b = sb.analytic && sb.verdict.is(VerdictValue::Unbounded);
    let unstable_a = sa.analytic && sa.verdict.is(VerdictValue::Unbounded);
    if stable_a || stable_b {
        let side = if stable_a { "denominator" } else { "numerator" };
        return Some((
            VerdictValue::Unbounded,
            format!(
                "analytic rule: the {side} sequence is stable, so every window \
                 [r, Q·r] contains finite limit points and the set is unbounded"
            ),
        ));
    }
    if unstable_a && unstable_b {
        return Some((
            VerdictValue::Bounded,
            "analytic rule: both sequences are non-stable, so the set of \
             finite limit points is bounded"
                .to_string(),
        ));
    }
    None
}

/// Clusters at `depth` that have accumulated at least two pairs over each of
/// the last two depth doublings. One doubling is not enough evidence:
/// coincidences contribute one or two pairs ever (for factorial sequences,
/// `1/24` is hit by exactly `1!/4!` and `23!/24!`), and the slow march of
/// values like `1/n` toward zero enters a fixed eps-window in one burst —
/// its whole population arrives within a single doubling and never grows
/// again. A genuine limit point sits still and keeps collecting. Points
/// accumulating slower than two pairs per doubling, or starting deeper than
/// `depth/4`, are missed — the verdicts are evidence, not theorems.
fn candidates(
    beta: &ExponentSequence,
    alpha: &ExponentSequence,
    depth: u32,
    cutoff: f64,
    eps: f64,
    exec: Execution,
) -> Vec<Cluster> {
    let full = cluster_sorted(&collect_ratios(beta, alpha, depth, cutoff, exec), eps);
    let half = cluster_sorted(
        &collect_ratios(beta, alpha, (depth / 2).max(1), cutoff, exec),
        eps,
    );
    let quarter = cluster_sorted(
        &collect_ratios(beta, alpha, (depth / 4).max(1), cutoff, exec),
        eps,
    );
    full.into_iter()
        .filter(|c| {
            let Some(prev) = match_cluster(&half, c.center, eps) else {
                return false;
            };
            let Some(earlier) = match_cluster(&quarter, prev.center, eps) else {
                return false;
            };
            c.mass >= prev.mass + 2 && prev.mass >= earlier.mass + 2
        })
        .collect()
}

fn match_cluster(clusters: &[Cluster], center: f64, eps: f64) -> Option<&Cluster> {
    // Clusters are sorted by center; find the nearest within eps.
    let idx = clusters.partition_point(|c| c.center < center);
    let mut best: Option<&Cluster> = None;
    for c in &clusters[idx.saturating_sub(1)..(idx + 1).min(clusters.len())] {
        if (c.center - center).abs() <= eps {
            match best {
                Some(b) if (b.center - center).abs() <= (c.center - center).abs() => {}
                _ => best = Some(c),
            }
        }
    }
    best
}

/// All ratios `β_i/α_j < cutoff` for `i, j ≤ depth`, sorted ascending.
/// Computed in log domain; underflow lands exactly on the zero cluster.
fn collect_ratios(
    beta: &ExponentSequence,
    alpha: &ExponentSequence,
    depth: u32,
    cutoff: f64,
    exec: Execution,
) -> Vec<f64> {
    let lbeta: Vec<f64> = beta.log_iter(depth).collect();
    let lalpha: Vec<f64> = alpha.log_iter(depth).collect();
    let ln_cut = cutoff.ln();
    let rows = ordered_map(exec, lbeta, |lb| {
        let mut row = Vec::new();
        for &la in &lalpha {
            let lr = lb - la;
            if lr < ln_cut {
                let v = lr.exp();
                if v < cutoff {
                    row.push(v);
                }
            }
        }
        row
    });
    let mut all: Vec<f64> = rows.into_iter().flatten().collect();
    all.sort_unstable_by(f64::total_cmp);
    all
}

/// Greedy clustering of sorted values at resolution `eps`. Values at most
/// `eps` form the zero cluster with center exactly 0; a new cluster starts
/// whenever a value exceeds the current cluster's first member by more than
/// `eps`. Centers are member means (deterministic: input is sorted).
fn cluster_sorted(sorted: &[f64], eps: f64) -> Vec<Cluster> {
    let mut out = Vec::new();
    let zero_end = sorted.partition_point(|&v| v <= eps);
    if zero_end > 0 {
        out.push(Cluster {
            center: 0.0,
            mass: zero_end as u64,
        });
    }
    let mut i = zero_end;
    while i < sorted.len() {
        let first = sorted[i];
        let mut j = i;
        let mut sum = 0.0;
        while j < sorted.len() && sorted[j] - first <= eps {
            sum += sorted[j];
            j += 1;
        }
        out.push(Cluster {
            center: sum / (j - i) as f64,
            mass: (j - i) as u64,
        });
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(text: &str) -> ExponentSequence {
        ExponentSequence::parse(text).unwrap()
    }

    fn table_of(seq_text: &str, depth: u32) -> ExponentSequence {
        let s = seq(seq_text);
        ExponentSequence::from_table(s.iter(depth).collect()).unwrap()
    }

    #[test]
    fn factorial_self_ratios_cluster_at_zero_and_one() {
        let f = seq("n!");
        let est = estimate_limit_points(&f, &f, &LimitPointParams::new(40, 10.0)).unwrap();
        assert!(est.analytic);
        assert!(est.verdict.is(VerdictValue::Bounded));
        assert_eq!(est.clusters.len(), 2);
        assert!(est.clusters[0].center.abs() < 1e-6);
        assert!((est.clusters[1].center - 1.0).abs() < 1e-6);
        assert!((est.sup_finite.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scaled_factorial_sup_is_the_scale() {
        let beta = seq("2*n!");
        let alpha = seq("n!");
        let est = estimate_limit_points(&beta, &alpha, &LimitPointParams::new(40, 10.0)).unwrap();
        assert!(est.verdict.is(VerdictValue::Bounded));
        assert!((est.sup_finite.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn linear_self_ratios_are_unbounded() {
        let n = seq("n");
        let est = estimate_limit_points(&n, &n, &LimitPointParams::new(2000, 10.0)).unwrap();
        assert!(est.analytic);
        assert!(est.verdict.is(VerdictValue::Unbounded));
        assert!(est.sup_finite.is_none());
    }

    #[test]
    fn numeric_path_detects_density_on_tables() {
        // Same data as (n) but presented as a table: no analytic rule.
        let t = table_of("n", 600);
        let est = estimate_limit_points(&t, &t, &LimitPointParams::new(600, 10.0)).unwrap();
        assert!(!est.analytic);
        assert!(est.verdict.is(VerdictValue::Unbounded));
    }

    #[test]
    fn numeric_path_bounds_factorial_tables() {
        let t = table_of("n!", 40);
        let est = estimate_limit_points(&t, &t, &LimitPointParams::new(40, 10.0)).unwrap();
        assert!(!est.analytic);
        assert!(est.verdict.is(VerdictValue::Bounded));
        assert!((est.sup_finite.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn clustering_is_deterministic_across_execution_modes() {
        let t = table_of("n", 300);
        let seq_params = LimitPointParams::new(300, 10.0);
        let par_params = seq_params.clone().with_execution(Execution::Parallel);
        let a = estimate_limit_points(&t, &t, &seq_params).unwrap();
        let b = estimate_limit_points(&t, &t, &par_params).unwrap();
        assert_eq!(a.clusters, b.clusters);
        assert_eq!(a.verdict.value, b.verdict.value);
    }

    proptest! {
        /// The diagonal always contributes a candidate cluster at 1.
        #[test]
        fn self_ratio_reports_cluster_at_one(idx in 0usize..4, depth in 12u32..60) {
            let texts = ["n", "n^2", "n!", "2^n"];
            let s = seq(texts[idx]);
            let est = estimate_limit_points(&s, &s, &LimitPointParams::new(depth, 4.0)).unwrap();
            prop_assert!(
                est.clusters.iter().any(|c| (c.center - 1.0).abs() < 1e-9),
                "clusters: {:?}",
                est.clusters
            );
        }

        /// Raising the cutoff never drops a candidate found below the old one.
        #[test]
        fn cutoff_monotonicity(depth in 16u32..64) {
            let s = table_of("n", 64);
            let lo = estimate_limit_points(&s, &s, &LimitPointParams::new(depth, 4.0)).unwrap();
            let hi = estimate_limit_points(&s, &s, &LimitPointParams::new(depth, 8.0)
                .with_eps(4e-3)).unwrap();
            for c in lo.clusters.iter().filter(|c| c.center < 4.0 - 4e-3) {
                prop_assert!(
                    hi.clusters.iter().any(|h| (h.center - c.center).abs() <= 2.0 * 4e-3),
                    "cluster {c:?} vanished when the cutoff rose: {:?}",
                    hi.clusters
                );
            }
        }
    }
}
