//! Quasi-diagonal operators `T e_n = t_n e_{σ(n)}` between graded spaces.
//!
//! For these generalized weighted shifts the restricted operator norm is a
//! sup over entries,
//!
//! ```text
//! log ‖T‖_{k,r} = sup_i [ log t_i + log b_{σ(i),k} - log a_{i,r} ]
//! ```
//!
//! exactly, for every `p ∈ {1,2,∞}` (targets are disjoint). Finiteness of a
//! full sup is undecidable from a prefix; the truncation surrogate used
//! throughout is tail monotonicity: the windowed max over the final stretch
//! of entries must not exceed the max over everything before it.

use crate::error::{Error, Result};
use crate::maps::MonotoneIntMap;
use crate::numeric::Wide;
use crate::sequences::{merge, ExponentSequence, MergedSequence};
use crate::spaces::{FiniteVector, GradedSpace};
use serde::{Deserialize, Serialize};

/// One diagonal entry: `e_source ↦ e^{log_scalar} · e_target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QdEntry {
    pub source: u32,
    pub target: u32,
    pub log_scalar: f64,
}

impl Serialize for QdEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.source, self.target, self.log_scalar).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QdEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (source, target, log_scalar) = <(u32, u32, f64)>::deserialize(d)?;
        Ok(QdEntry {
            source,
            target,
            log_scalar,
        })
    }
}

/// An injective-index weighted shift with positive scalars kept in log
/// domain. Source indices are strictly increasing; unlisted sources map
/// to zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiDiagonalOperator {
    domain: GradedSpace,
    codomain: GradedSpace,
    entries: Vec<QdEntry>,
}

impl QuasiDiagonalOperator {
    pub fn new(
        domain: GradedSpace,
        codomain: GradedSpace,
        entries: Vec<QdEntry>,
    ) -> Result<QuasiDiagonalOperator> {
        let mut prev_source = 0u32;
        let mut targets: Vec<u32> = Vec::with_capacity(entries.len());
        for e in &entries {
            if e.source == 0 || e.source <= prev_source {
                return Err(Error::Validation(format!(
                    "source indices must be strictly increasing (at {})",
                    e.source
                )));
            }
            if e.target == 0 {
                return Err(Error::Validation("target index 0".to_string()));
            }
            if !e.log_scalar.is_finite() {
                return Err(Error::Validation(format!(
                    "log scalar {} at source {} is not finite",
                    e.log_scalar, e.source
                )));
            }
            if let Some(max) = domain.max_row() {
                if e.source > max {
                    return Err(Error::IndexOutOfRange {
                        index: e.source,
                        limit: max,
                    });
                }
            }
            if let Some(max) = codomain.max_row() {
                if e.target > max {
                    return Err(Error::IndexOutOfRange {
                        index: e.target,
                        limit: max,
                    });
                }
            }
            prev_source = e.source;
            targets.push(e.target);
        }
        targets.sort_unstable();
        if targets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(
                "target indices must be pairwise distinct (σ injective)".to_string(),
            ));
        }
        Ok(QuasiDiagonalOperator {
            domain,
            codomain,
            entries,
        })
    }

    /// `T e_n = e_n` for `n ≤ depth` on a single space.
    pub fn identity(space: &GradedSpace, depth: u32) -> Result<QuasiDiagonalOperator> {
        let entries = (1..=depth)
            .map(|n| QdEntry {
                source: n,
                target: n,
                log_scalar: 0.0,
            })
            .collect();
        QuasiDiagonalOperator::new(space.clone(), space.clone(), entries)
    }

    pub fn domain(&self) -> &GradedSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &GradedSpace {
        &self.codomain
    }

    pub fn entries(&self) -> &[QdEntry] {
        &self.entries
    }

    /// Multiply every scalar by `e^{log_c}`.
    pub fn scale_all(&self, log_c: f64) -> QuasiDiagonalOperator {
        let entries = self
            .entries
            .iter()
            .map(|e| QdEntry {
                log_scalar: e.log_scalar + log_c,
                ..*e
            })
            .collect();
        QuasiDiagonalOperator {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            entries,
        }
    }

    /// `log [ t_i · b_{σ(i),k} / a_{i,r} ]` for one entry. The weight
    /// difference is formed first: equal weights cancel exactly, so the
    /// scalar survives even when both weights dwarf it.
    pub fn entry_log_ratio(&self, entry: &QdEntry, k: u32, r: u32) -> Result<Wide> {
        let diff = self
            .codomain
            .log_weight(entry.target, k)?
            .sub(self.domain.log_weight(entry.source, r)?);
        Ok(diff.add(Wide::from_f64(entry.log_scalar)))
    }

    fn entry_ratios(&self, k: u32, r: u32, depth: u32) -> Result<Vec<Wide>> {
        self.entries
            .iter()
            .take_while(|e| e.source <= depth)
            .map(|e| self.entry_log_ratio(e, k, r))
            .collect()
    }

    /// Truncated operator norm `log ‖T‖_{k,r}` over entries with source
    /// index at most `depth`, with the argmax and a divergence flag (true
    /// when the per-entry values are still rising at the truncation edge).
    pub fn qd_norm(&self, k: u32, r: u32, depth: u32) -> Result<QdNorm> {
        let values = self.entry_ratios(k, r, depth)?;
        if values.is_empty() {
            return Err(Error::EmptyOperator(depth));
        }
        let mut best = values[0];
        let mut best_idx = 0usize;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                best_idx = i;
            }
        }
        let (bounded, _) = tail_bounded(&values, values.len() / 4);
        Ok(QdNorm {
            log_norm: best,
            attained_source: self.entries[best_idx].source,
            diverging: !bounded,
        })
    }

    /// Characteristic of continuity surrogate: for each `k ≤ k_max`, the
    /// least `r ≤ r_max` whose per-entry value sequence passes the
    /// tail-monotonicity test, `Diverged` if none does. `growth_window = 0`
    /// means the final quarter of the entries.
    pub fn continuity_characteristic(
        &self,
        k_max: u32,
        r_max: u32,
        depth: u32,
        growth_window: u32,
    ) -> Result<ContinuityProfile> {
        if k_max < 1 || r_max < k_max {
            return Err(Error::Validation(
                "need 1 <= k_max <= r_max for a continuity profile".to_string(),
            ));
        }
        self.codomain.check_grade(k_max)?;
        self.domain.check_grade(r_max)?;
        let mut grades = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max {
            let mut pi = Pi::Diverged;
            let mut curve = Vec::with_capacity(r_max as usize);
            for r in 1..=r_max {
                let values = self.entry_ratios(k, r, depth)?;
                let window = if growth_window == 0 {
                    values.len() / 4
                } else {
                    growth_window as usize
                };
                let (bounded, _) = tail_bounded(&values, window);
                let sup = values.iter().copied().max().unwrap_or(Wide::NEG_INFINITY);
                if bounded && matches!(pi, Pi::Diverged) {
                    pi = Pi::Grade(r);
                }
                curve.push(NormSample {
                    r,
                    log_norm: sup,
                    diverging: !bounded,
                });
            }
            grades.push(GradeProfile { k, pi, norm_curve: curve });
        }
        Ok(ContinuityProfile {
            depth,
            growth_window,
            grades,
        })
    }

    /// Does the continuity surrogate stay under `S` on a tail of grades?
    pub fn is_s_tame(&self, s: &MonotoneIntMap, k_max: u32, depth: u32) -> Result<STameOutcome> {
        if k_max < 1 {
            return Err(Error::Validation("k_max must be >= 1".to_string()));
        }
        let mut r_max = k_max;
        for k in 1..=k_max {
            r_max = r_max.max(s.eval(k)?);
        }
        let profile = self.continuity_characteristic(k_max, r_max, depth, 0)?;
        let holds: Vec<bool> = (1..=k_max)
            .map(|k| {
                let bound = s.eval(k).expect("evaluated above");
                match profile.grades[k as usize - 1].pi {
                    Pi::Grade(g) => g <= bound,
                    Pi::Diverged => false,
                }
            })
            .collect();
        if *holds.last().expect("k_max >= 1") {
            // Tail of holding grades ending at k_max.
            let mut from = k_max;
            for k in (1..=k_max).rev() {
                if holds[k as usize - 1] {
                    from = k;
                } else {
                    break;
                }
            }
            return Ok(STameOutcome::Holds { from_grade: from });
        }
        // Report the start of the failing tail with its growth statistic.
        let mut grade = k_max;
        for k in (1..=k_max).rev() {
            if !holds[k as usize - 1] {
                grade = k;
            } else {
                break;
            }
        }
        let r = s.eval(grade)?;
        let values = self.entry_ratios(grade, r, depth)?;
        let (_, growth) = tail_bounded(&values, values.len() / 4);
        Ok(STameOutcome::Fails { grade, growth })
    }

    /// Apply to a finite vector. Coefficients whose product with the scalar
    /// underflows `f64` are dropped from the support.
    pub fn apply(&self, x: &FiniteVector) -> Result<FiniteVector> {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for &(idx, c) in x.support() {
            if let Ok(pos) = self.entries.binary_search_by_key(&idx, |e| e.source) {
                let e = &self.entries[pos];
                let v = c * e.log_scalar.exp();
                if v != 0.0 && v.is_finite() {
                    out.push((e.target, v));
                }
            }
        }
        out.sort_unstable_by_key(|&(t, _)| t);
        FiniteVector::new(out)
    }

    /// Composition `self` then `other` (i.e. `other ∘ self`). Sources that
    /// `other` does not map are dropped (they go to zero).
    pub fn compose(&self, other: &QuasiDiagonalOperator) -> Result<QuasiDiagonalOperator> {
        let mut entries = Vec::new();
        for e in &self.entries {
            if let Ok(pos) = other.entries.binary_search_by_key(&e.target, |o| o.source) {
                let o = &other.entries[pos];
                entries.push(QdEntry {
                    source: e.source,
                    target: o.target,
                    log_scalar: e.log_scalar + o.log_scalar,
                });
            }
        }
        QuasiDiagonalOperator::new(self.domain.clone(), other.codomain.clone(), entries)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QdNorm {
    pub log_norm: Wide,
    pub attained_source: u32,
    pub diverging: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pi {
    Grade(u32),
    Diverged,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormSample {
    pub r: u32,
    pub log_norm: Wide,
    pub diverging: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradeProfile {
    pub k: u32,
    pub pi: Pi,
    pub norm_curve: Vec<NormSample>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityProfile {
    pub depth: u32,
    pub growth_window: u32,
    pub grades: Vec<GradeProfile>,
}

impl ContinuityProfile {
    pub fn pi(&self, k: u32) -> Option<Pi> {
        self.grades.get(k as usize - 1).map(|g| g.pi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum STameOutcome {
    Holds { from_grade: u32 },
    Fails { grade: u32, growth: f64 },
}

/// Tail-monotonicity test. `values` are ordered by source index; the max
/// over the final `window` entries must not exceed the max over the entries
/// before them (up to a relative `1e-9` slack). Fewer than two values, or an
/// empty head, count as bounded — a prefix that short shows no growth.
/// Returns `(bounded, tail_max - head_max)`.
pub(crate) fn tail_bounded(values: &[Wide], window: usize) -> (bool, f64) {
    if values.len() < 2 {
        return (true, 0.0);
    }
    let w = window.clamp(1, values.len() - 1);
    let split = values.len() - w;
    let head_max = values[..split].iter().copied().max().expect("nonempty head");
    let tail_max = values[split..].iter().copied().max().expect("nonempty tail");
    let slack = head_max
        .abs()
        .max(Wide::from_f64(1.0))
        .scale(1e-9);
    let bounded = tail_max <= head_max.add(slack);
    (bounded, tail_max.sub(head_max).to_f64())
}

// ---------------------------------------------------------------------------
// The merged-sequence embedding triple
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceType {
    Finite,
    Infinite,
}

impl SpaceType {
    pub fn space(self, seq: ExponentSequence) -> GradedSpace {
        match self {
            SpaceType::Finite => GradedSpace::power_series_finite(seq),
            SpaceType::Infinite => GradedSpace::power_series_infinite(seq),
        }
    }
}

/// The coordinate-selection / coordinate-placement pair through the merged
/// sequence γ: `select_left` maps `e_{t(n)} ↦ e_n` (γ-space → α-space,
/// surjective, a grade contraction), `place_right` maps `e_n ↦ e_{s(n)}`
/// (β-space → γ-space, injective, grade-isometric since `γ_{s(n)} = β_n`
/// bit-exactly).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingTriple {
    pub select_left: QuasiDiagonalOperator,
    pub place_right: QuasiDiagonalOperator,
    pub merged: MergedSequence,
}

pub fn build_embedding_triple(
    alpha: &ExponentSequence,
    beta: &ExponentSequence,
    space_type: SpaceType,
    depth: u32,
) -> Result<EmbeddingTriple> {
    let merged = merge(alpha, beta, depth)?;
    let gamma_space = space_type.space(merged.gamma.clone());
    let alpha_space = space_type.space(alpha.clone());
    let beta_space = space_type.space(beta.clone());

    let select_entries: Vec<QdEntry> = merged
        .left_map
        .iter()
        .enumerate()
        .map(|(n, &t)| QdEntry {
            source: t,
            target: n as u32 + 1,
            log_scalar: 0.0,
        })
        .collect();
    let place_entries: Vec<QdEntry> = merged
        .right_map
        .iter()
        .enumerate()
        .map(|(n, &s)| QdEntry {
            source: n as u32 + 1,
            target: s,
            log_scalar: 0.0,
        })
        .collect();

    let select_left = QuasiDiagonalOperator::new(gamma_space.clone(), alpha_space, select_entries)?;
    let place_right = QuasiDiagonalOperator::new(beta_space, gamma_space, place_entries)?;
    Ok(EmbeddingTriple {
        select_left,
        place_right,
        merged,
    })
}

impl EmbeddingTriple {
    pub fn gamma_space(&self) -> &GradedSpace {
        self.select_left.domain()
    }

    pub fn alpha_space(&self) -> &GradedSpace {
        self.select_left.codomain()
    }

    pub fn beta_space(&self) -> &GradedSpace {
        self.place_right.domain()
    }

    /// Conjugate an α→β operator through the triple:
    /// `R = place_right ∘ T ∘ select_left` on the γ-space.
    pub fn conjugate(&self, t: &QuasiDiagonalOperator) -> Result<QuasiDiagonalOperator> {
        self.select_left.compose(t)?.compose(&self.place_right)
    }

    /// Lift an α-indexed vector to the γ-space along the left map:
    /// `u_{t(n)} = x_n`, zero elsewhere — a norm-preserving section of
    /// `select_left`.
    pub fn lift_left(&self, x: &FiniteVector) -> Result<FiniteVector> {
        let mut support = Vec::with_capacity(x.support().len());
        for &(n, c) in x.support() {
            let pos = self.merged.left_map.get(n as usize - 1).ok_or(
                Error::IndexOutOfRange {
                    index: n,
                    limit: self.merged.left_map.len() as u32,
                },
            )?;
            support.push((*pos, c));
        }
        support.sort_unstable_by_key(|&(i, _)| i);
        FiniteVector::new(support)
    }
}
