//! The infinite-type witness: a continuous quasi-diagonal operator whose
//! norm growth defeats a prescribed convex grade map `S` on every block.
//!
//! Writing `ΔS_k = S(k+1) - S(k)`, block `k` collects member pairs `(n, m)`
//! with `β_m/α_n ∈ [ΔS_k, ΔS_{k+1})` and maps
//!
//! ```text
//! T e_n = e^{S(k+1)·α_n - k·β_m} e_m .
//! ```
//!
//! Then `log ‖T e_n‖_k = S(k+1)·α_n = log ‖e_n‖_{S(k+1)}` exactly, while for
//! every other grade `j` the membership interval gives the continuity chain
//! `log ‖T e_n‖_j ≤ log ‖e_n‖_{S(j+1)}`: upward, `ρ < ΔS_{k+1} ≤ ΔS_i` for
//! `i > k` by convexity, so `(j-k)·ρ ≤ S(j+1) - S(k+1)`; downward,
//! `ρ ≥ ΔS_k ≥ ΔS_i` for `i ≤ k`, so `(k-j)·ρ ≥ S(k+1) - S(j+1)`. Within
//! block `k` the ratio `‖T e_n‖_k / ‖e_n‖_{S(k)}` is `e^{ΔS_k·α_n}`, which
//! grows without bound along the block — `T` is continuous but not S-tame.
//!
//! The construction needs the ratio set of the pair to reach every gap
//! interval `[ΔS_k, ΔS_{k+1})`; when it does not (factorial-type ratio sets
//! concentrate on `{0, 1, ∞}`), the builder reports the short blocks.

use super::CHECK_TOL;
use crate::error::{Error, Result};
use crate::maps::MonotoneIntMap;
use crate::numeric::Wide;
use crate::operators::{QdEntry, QuasiDiagonalOperator};
use crate::sequences::ExponentSequence;
use crate::spaces::{log_basis_norm, GradedSpace};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessBlock {
    pub k: u32,
    /// Ratio interval `[lo, hi)` admitting members of this block.
    pub lo: f64,
    pub hi: f64,
    /// `(n, m)` pairs: source index and its target `m(k, n)`.
    pub members: Vec<(u32, u32)>,
}

impl WitnessBlock {
    /// `(S(k+1)-S(k))·α_n` at the deepest member: the block's growth
    /// statistic for the defeat of `S` at grade `k`.
    pub fn growth_at_deepest(&self, alpha: &ExponentSequence) -> Result<f64> {
        let &(n, _) = self
            .members
            .last()
            .ok_or_else(|| Error::Validation("empty block".to_string()))?;
        Ok(self.lo * alpha.eval(n)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfiniteTypeWitness {
    pub s_map: MonotoneIntMap,
    pub alpha: ExponentSequence,
    pub beta: ExponentSequence,
    pub k_max: u32,
    pub depth: u32,
    pub blocks: Vec<WitnessBlock>,
    pub operator: QuasiDiagonalOperator,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InfiniteWitnessOptions {
    /// A block below this many members makes the construction fail.
    pub min_block: u32,
    /// Members collected per block before moving on.
    pub block_size: u32,
}

impl Default for InfiniteWitnessOptions {
    fn default() -> Self {
        InfiniteWitnessOptions {
            min_block: 5,
            block_size: 16,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)] // the witness is the common case
pub enum InfiniteOutcome {
    Witness(InfiniteTypeWitness),
    /// Some gap interval found too few ratios: `(k, members_found)` per block.
    NotFound { blocks_found: Vec<(u32, u32)> },
}

impl InfiniteOutcome {
    pub fn witness(&self) -> Option<&InfiniteTypeWitness> {
        match self {
            InfiniteOutcome::Witness(w) => Some(w),
            InfiniteOutcome::NotFound { .. } => None,
        }
    }
}

/// Assemble the witness greedily: blocks in ascending `k`, members by
/// ascending unclaimed `n`, first unused `m` whose ratio lands in the gap
/// interval.
pub fn build_infinite_type_witness(
    alpha: &ExponentSequence,
    beta: &ExponentSequence,
    s: &MonotoneIntMap,
    k_max: u32,
    depth: u32,
    options: InfiniteWitnessOptions,
) -> Result<InfiniteOutcome> {
    if k_max < 1 {
        return Err(Error::Validation("k_max must be >= 1".to_string()));
    }
    let gaps = validate_s(s, k_max)?;
    let depth = match (alpha.max_index(), beta.max_index()) {
        (Some(a), Some(b)) => depth.min(a).min(b),
        (Some(a), None) => depth.min(a),
        (None, Some(b)) => depth.min(b),
        (None, None) => depth,
    };

    let la: Vec<f64> = alpha.log_iter(depth).collect();
    let lb: Vec<f64> = beta.log_iter(depth).collect();

    let mut claimed = vec![false; depth as usize + 1];
    let mut used_m = vec![false; depth as usize + 1];
    let mut blocks: Vec<WitnessBlock> = Vec::with_capacity(k_max as usize);

    for k in 1..=k_max {
        let lo = gaps[k as usize - 1];
        let hi = gaps[k as usize];
        let mut members = Vec::new();
        for n in 1..=depth {
            if claimed[n as usize] {
                continue;
            }
            // Smallest unused m with β_m/α_n ∈ [lo, hi), deciding membership
            // by the same exp(log-difference) ratio the verifier recomputes
            // (a log-domain lower bound can disagree at the boundary by one
            // ulp). Start one index early to cover that wobble.
            let ln_lo = lo.ln() + la[n as usize - 1];
            let mut m = (lb.partition_point(|&b| b < ln_lo) as u32).max(1);
            let mut chosen = None;
            while m <= depth {
                let ratio = (lb[m as usize - 1] - la[n as usize - 1]).exp();
                if ratio >= hi {
                    break;
                }
                if ratio >= lo && !used_m[m as usize] {
                    chosen = Some(m);
                    break;
                }
                m += 1;
            }
            if let Some(m) = chosen {
                used_m[m as usize] = true;
                claimed[n as usize] = true;
                members.push((n, m));
                if members.len() as u32 == options.block_size {
                    break;
                }
            }
        }
        blocks.push(WitnessBlock { k, lo, hi, members });
    }

    if blocks
        .iter()
        .any(|b| (b.members.len() as u32) < options.min_block)
    {
        return Ok(InfiniteOutcome::NotFound {
            blocks_found: blocks
                .iter()
                .map(|b| (b.k, b.members.len() as u32))
                .collect(),
        });
    }

    // Assemble the operator: log t = S(k+1)·α_n - k·β_m, sorted by source.
    let mut entries: Vec<QdEntry> = Vec::new();
    for block in &blocks {
        let s_next = s.eval(block.k + 1)? as f64;
        for &(n, m) in &block.members {
            let a_n = alpha.eval(n)?;
            let b_m = beta.eval(m)?;
            let log_scalar = s_next * a_n - block.k as f64 * b_m;
            if !log_scalar.is_finite() {
                return Err(Error::InvalidDescriptor(format!(
                    "witness scalar at (n={n}, m={m}) exceeds f64 range"
                )));
            }
            entries.push(QdEntry {
                source: n,
                target: m,
                log_scalar,
            });
        }
    }
    entries.sort_unstable_by_key(|e| e.source);
    let operator = QuasiDiagonalOperator::new(
        GradedSpace::power_series_infinite(alpha.clone()),
        GradedSpace::power_series_infinite(beta.clone()),
        entries,
    )?;

    let witness = InfiniteTypeWitness {
        s_map: s.clone(),
        alpha: alpha.clone(),
        beta: beta.clone(),
        k_max,
        depth,
        blocks,
        operator,
    };
    verify_infinite_witness(&witness)?;
    Ok(InfiniteOutcome::Witness(witness))
}

/// `ΔS_k` for `k = 1..=k_max+1`, checking `ΔS` is positive non-decreasing.
fn validate_s(s: &MonotoneIntMap, k_max: u32) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(k_max as usize + 2);
    for k in 1..=k_max + 2 {
        values.push(s.eval(k).map_err(|e| match e {
            Error::GradeOutOfRange { grade, max } => Error::InvalidS(format!(
                "S must be evaluable up to k_max+2 (grade {grade}, max {max})"
            )),
            other => other,
        })? as f64);
    }
    let gaps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, w) in gaps.windows(2).enumerate() {
        if w[0] <= 0.0 || w[1] < w[0] {
            return Err(Error::InvalidS(format!(
                "gaps S(k+1)-S(k) must be positive and non-decreasing; at k={} got {} then {}",
                i + 1,
                w[0],
                w[1]
            )));
        }
    }
    if gaps[0] <= 0.0 {
        return Err(Error::InvalidS("S must be strictly increasing".to_string()));
    }
    Ok(gaps)
}

/// Independent re-check of every inequality the witness stands on:
/// membership intervals, the exact isometry `log ‖T e_n‖_k = S(k+1)·α_n`,
/// the full continuity chain `log ‖T e_n‖_j ≤ log ‖e_n‖_{S(j+1)}`, and
/// strictly increasing growth statistics within each block.
pub fn verify_infinite_witness(w: &InfiniteTypeWitness) -> Result<Vec<String>> {
    let op = &w.operator;
    let alpha_space = op.domain();
    let invalid = |msg: String| Err(Error::InvalidCertificate(msg));

    let mut checked_members = 0usize;
    for block in &w.blocks {
        let s_next = w.s_map.eval(block.k + 1)?;
        let mut prev_growth = f64::NEG_INFINITY;
        for &(n, m) in &block.members {
            let ratio = (w.beta.log_eval(m)? - w.alpha.log_eval(n)?).exp();
            if ratio < block.lo || ratio >= block.hi {
                return invalid(format!(
                    "member (n={n}, m={m}) of block {} has ratio {ratio} outside [{}, {})",
                    block.k, block.lo, block.hi
                ));
            }
            let pos = op
                .entries()
                .binary_search_by_key(&n, |e| e.source)
                .map_err(|_| Error::InvalidCertificate(format!("no entry for member n={n}")))?;
            let entry = op.entries()[pos];
            if entry.target != m {
                return invalid(format!("entry for n={n} targets {}, expected {m}", entry.target));
            }

            // Exact isometry one grade past S at the block grade.
            let norm_k =
                Wide::from_f64(entry.log_scalar).add(op.codomain().log_weight(m, block.k)?);
            let expected = log_basis_norm(alpha_space, n, s_next)?;
            if !norm_k.approx_eq(expected, CHECK_TOL) {
                return invalid(format!(
                    "block {} member (n={n}, m={m}): log ‖Te_n‖_k = {} but S(k+1)·α_n = {}",
                    block.k,
                    norm_k.to_f64(),
                    expected.to_f64()
                ));
            }

            // Continuity chain at every computed grade.
            for j in 1..=w.k_max {
                let norm_j = Wide::from_f64(entry.log_scalar)
                    .add(op.codomain().log_weight(m, j)?);
                let bound = log_basis_norm(alpha_space, n, w.s_map.eval(j + 1)?)?;
                let slack = bound.abs().max(Wide::from_f64(1.0)).scale(CHECK_TOL);
                if norm_j > bound.add(slack) {
                    return invalid(format!(
                        "continuity chain fails at j={j} for (n={n}, m={m}): {} > {}",
                        norm_j.to_f64(),
                        bound.to_f64()
                    ));
                }
            }

            // Growth statistic strictly increases along the block.
            let growth = block.lo * w.alpha.eval(n)?;
            if growth <= prev_growth {
                return invalid(format!(
                    "growth statistic not increasing within block {} at n={n}",
                    block.k
                ));
            }
            prev_growth = growth;
            checked_members += 1;
        }
    }
    Ok(vec![
        format!(
            "{} members across {} blocks: ratios inside their gap intervals",
            checked_members,
            w.blocks.len()
        ),
        "exact isometry log ‖Te_n‖_k = S(k+1)·α_n on every member".to_string(),
        format!("continuity chain log ‖Te_n‖_j <= log ‖e_n‖_{{S(j+1)}} for j <= {}", w.k_max),
        "growth statistics strictly increasing within each block".to_string(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MonotoneIntMap;

    fn seq(text: &str) -> ExponentSequence {
        ExponentSequence::parse(text).unwrap()
    }

    #[test]
    fn linear_pair_with_square_s_builds_and_verifies() {
        let n = seq("n");
        let out = build_infinite_type_witness(
            &n,
            &n,
            &MonotoneIntMap::Square,
            5,
            2000,
            InfiniteWitnessOptions::default(),
        )
        .unwrap();
        let w = out.witness().expect("gap intervals are reachable for m/n");
        assert_eq!(w.blocks.len(), 5);
        for block in &w.blocks {
            assert_eq!(block.members.len(), 16);
            // Gap intervals for S = k²: [2k+1, 2k+3).
            assert_eq!(block.lo, (2 * block.k + 1) as f64);
            assert_eq!(block.hi, (2 * block.k + 3) as f64);
        }
        // Deepest block-2 member is past n = 16, so growth exceeds 5·17.
        let g = w.blocks[1].growth_at_deepest(&w.alpha).unwrap();
        assert!(g > 80.0, "growth {g}");
    }

    #[test]
    fn factorial_ratio_set_misses_gap_intervals() {
        let f = seq("n!");
        let out = build_infinite_type_witness(
            &f,
            &f,
            &MonotoneIntMap::Square,
            5,
            120,
            InfiniteWitnessOptions::default(),
        )
        .unwrap();
        match out {
            InfiniteOutcome::NotFound { blocks_found } => {
                // Ratios i!/j! hit each interval [2k+1, 2k+3) at most twice.
                for &(_, found) in &blocks_found {
                    assert!(found < 5, "{blocks_found:?}");
                }
            }
            InfiniteOutcome::Witness(_) => panic!("factorial pair cannot fill blocks"),
        }
    }

    #[test]
    fn non_convex_s_is_rejected() {
        let n = seq("n");
        // S(k) = k: gaps are constant 1 > 0 (allowed, blocks empty) — but a
        // decreasing-gap table must be rejected.
        let bad = MonotoneIntMap::table(vec![1, 5, 7, 8, 9, 10, 11, 12]).unwrap();
        let err = build_infinite_type_witness(&n, &n, &bad, 3, 100, Default::default());
        assert!(matches!(err, Err(Error::InvalidS(_))));
    }

    #[test]
    fn affine_s_has_empty_gap_intervals() {
        // Constant gaps: [ΔS, ΔS) is empty, so every block is short.
        let n = seq("n");
        let s = MonotoneIntMap::affine(3, 1, 0).unwrap();
        let out =
            build_infinite_type_witness(&n, &n, &s, 3, 200, Default::default()).unwrap();
        assert!(out.witness().is_none());
    }

    #[test]
    fn witness_operator_defeats_its_own_grade_map() {
        use crate::operators::STameOutcome;
        let n = seq("n");
        let w = build_infinite_type_witness(
            &n,
            &n,
            &MonotoneIntMap::Square,
            4,
            2000,
            Default::default(),
        )
        .unwrap()
        .witness()
        .unwrap()
        .clone();
        // Within block k the values at (k, S(k)) are (S(k+1)-S(k))·α_n,
        // strictly increasing: the surrogate fails past S.
        match w
            .operator
            .is_s_tame(&MonotoneIntMap::Square, 3, 2000)
            .unwrap()
        {
            STameOutcome::Fails { growth, .. } => assert!(growth > 0.0),
            other => panic!("witness should defeat S, got {other:?}"),
        }
    }

    #[test]
    fn tampering_with_a_member_is_caught() {
        let n = seq("n");
        let out = build_infinite_type_witness(
            &n,
            &n,
            &MonotoneIntMap::Square,
            3,
            500,
            Default::default(),
        )
        .unwrap();
        let mut w = out.witness().unwrap().clone();
        w.blocks[0].members[0].1 += 1; // member no longer matches the entry
        assert!(verify_infinite_witness(&w).is_err());
    }
}
