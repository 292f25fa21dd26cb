//! Tameness classification of pairs (and Cartesian products) of power
//! series spaces.
//!
//! The catalog of verdicts, keyed on the type of each factor and the
//! stability of its exponent sequence:
//!
//! | domain \ codomain | Λ₀(β)           | Λ∞(β)                      |
//! |-------------------|-----------------|----------------------------|
//! | Λ₀(α)             | Tame (4.3)      | Tame (4.2)                 |
//! | Λ∞(α), stable     | Non-tame (4.6)  | Tame iff bounded (P2)      |
//! | Λ∞(α), non-stable | see 4.4 / 4.6   | Tame iff `M_βα` bounded    |
//!
//! `M_βα` is the set of finite limit points of `(β_i/α_j)`; its boundedness
//! resolves the infinite-type cells. Verdicts carry the sub-verdicts they
//! rest on and a confidence grade: `Proven` when every consulted sub-verdict
//! was analytic, `Numerical` otherwise.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ratio_analysis::{estimate_limit_points, LimitPointEstimate, LimitPointParams};
use crate::sequences::{check_stability, ExponentSequence, StabilityReport};
use crate::spaces::{GradedSpace, SpaceKind};
use crate::verdict::VerdictValue;
use serde::{Deserialize, Serialize};

pub const CITE_FINITE_FINITE: &str = "Theorem 4.3 (T2)";
pub const CITE_FINITE_INFINITE: &str = "Proposition 4.2 (P1)";
pub const CITE_INFINITE_FINITE_NONTAME: &str = "Theorem 4.6 (T4)";
pub const CITE_INFINITE_FINITE: &str = "Theorem 4.4 (T3)";
pub const CITE_INFINITE_INFINITE: &str = "Theorem 4.7 (T1)";
pub const CITE_CONDITIONAL: &str = "Proposition P2";
pub const CITE_PRODUCT: &str = "Theorem T6";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Tame,
    NonTame,
    TameIffBounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    /// Every consulted sub-verdict was analytic.
    Proven,
    Numerical,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub space_type: String,
    pub sequence: String,
    pub stable: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub verdict: VerdictValue,
    pub analytic: bool,
    pub sup_ratio_observed: Option<f64>,
}

impl From<&StabilityReport> for StabilitySummary {
    fn from(r: &StabilityReport) -> Self {
        StabilitySummary {
            verdict: r.verdict.value,
            analytic: r.analytic,
            sup_ratio_observed: r.sup_ratio_observed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPointSummary {
    pub verdict: VerdictValue,
    pub analytic: bool,
    pub sup_finite: Option<f64>,
    pub summary: String,
}

impl From<&LimitPointEstimate> for LimitPointSummary {
    fn from(e: &LimitPointEstimate) -> Self {
        LimitPointSummary {
            verdict: e.verdict.value,
            analytic: e.analytic,
            sup_finite: e.sup_finite,
            summary: e.verdict.evidence.summary.clone(),
        }
    }
}

/// Resolution of a conditional cell through the `M_βα` verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Resolution {
    pub cell: Cell,
    pub citation: String,
}

/// The verdicts a classification rests on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubVerdicts {
    pub stability_left: StabilitySummary,
    pub stability_right: StabilitySummary,
    /// `M_βα` sub-verdict, when consulted.
    pub limit_points: Option<LimitPointSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub left: SpaceDescriptor,
    pub right: SpaceDescriptor,
    pub cell: Cell,
    pub citation: String,
    pub confidence: Confidence,
    pub sub_verdicts: SubVerdicts,
    /// For `TameIffBounded` cells: the resolved verdict, when the limit
    /// point analysis settles it.
    pub resolution: Option<Resolution>,
}

fn descriptor(space: &GradedSpace, stab: &StabilityReport) -> SpaceDescriptor {
    let space_type = match space.kind() {
        SpaceKind::PowerSeriesFinite(_) => "finite",
        SpaceKind::PowerSeriesInfinite(_) => "infinite",
        SpaceKind::GeneralKothe(_) => "kothe",
    };
    SpaceDescriptor {
        space_type: space_type.to_string(),
        sequence: space.sequence().map(|s| s.text().to_string()).unwrap_or_default(),
        stable: match (stab.analytic, stab.verdict.value) {
            (true, VerdictValue::Bounded) => Some(true),
            (true, VerdictValue::Unbounded) => Some(false),
            _ => None,
        },
    }
}

fn power_series_seq(space: &GradedSpace) -> Result<&ExponentSequence> {
    space.sequence().ok_or_else(|| {
        Error::UnsupportedSpace(format!(
            "{} is not a power series space; run the truncated criterion check instead",
            space.label()
        ))
    })
}

/// Classify the pair `(left, right)`: operators map the left space into the
/// right space.
pub fn classify_pair(
    left: &GradedSpace,
    right: &GradedSpace,
    depth: u32,
    cutoff: f64,
    exec: Execution,
) -> Result<ClassificationReport> {
    let alpha = power_series_seq(left)?;
    let beta = power_series_seq(right)?;
    let stab_left = check_stability(alpha, depth.clamp(2, 4096))?;
    let stab_right = check_stability(beta, depth.clamp(2, 4096))?;

    // Stability resolved analytically: Some(true)=stable, Some(false)=non-stable.
    let stable = |s: &StabilityReport| -> Option<bool> {
        if s.analytic {
            Some(s.is_stable())
        } else {
            None
        }
    };
    let sl = stable(&stab_left);
    let sr = stable(&stab_right);

    let consult_m = |exec: Execution| -> Result<LimitPointEstimate> {
        estimate_limit_points(
            beta,
            alpha,
            &LimitPointParams::new(depth.max(10), cutoff).with_execution(exec),
        )
    };

    let left_finite = matches!(left.kind(), SpaceKind::PowerSeriesFinite(_));
    let right_finite = matches!(right.kind(), SpaceKind::PowerSeriesFinite(_));

    let mut limit_points: Option<LimitPointEstimate> = None;
    let (cell, citation, resolution) = match (left_finite, right_finite) {
        (true, true) => (Cell::Tame, CITE_FINITE_FINITE, None),
        (true, false) => (Cell::Tame, CITE_FINITE_INFINITE, None),
        (false, true) => {
            // Infinite → finite: non-tame with a stable factor, tame when
            // both are non-stable, otherwise decided by M_βα directly.
            let m = consult_m(exec)?;
            let out = if sl == Some(true) || sr == Some(true) {
                (Cell::NonTame, CITE_INFINITE_FINITE_NONTAME, None)
            } else if sl == Some(false) && sr == Some(false) {
                (Cell::Tame, CITE_INFINITE_FINITE, None)
            } else {
                match m.verdict.value {
                    VerdictValue::Bounded => (Cell::Tame, CITE_INFINITE_FINITE, None),
                    VerdictValue::Unbounded => (Cell::NonTame, CITE_INFINITE_FINITE, None),
                    VerdictValue::Inconclusive => {
                        (Cell::TameIffBounded, CITE_INFINITE_FINITE, None)
                    }
                }
            };
            limit_points = Some(m);
            out
        }
        (false, false) => {
            let m = consult_m(exec)?;
            let out = if sl == Some(false) && sr == Some(false) {
                // Both non-stable: tame, with the bounded M_βα attached.
                (Cell::Tame, CITE_INFINITE_INFINITE, None)
            } else if sl == Some(true) || sr == Some(true) {
                // A stable factor: the catalog cell is the conditional
                // "tame iff every operator is bounded"; the M_βα verdict
                // resolves it when it is decisive.
                let resolution = match m.verdict.value {
                    VerdictValue::Bounded => Some(Resolution {
                        cell: Cell::Tame,
                        citation: CITE_INFINITE_INFINITE.to_string(),
                    }),
                    VerdictValue::Unbounded => Some(Resolution {
                        cell: Cell::NonTame,
                        citation: CITE_INFINITE_INFINITE.to_string(),
                    }),
                    VerdictValue::Inconclusive => None,
                };
                (Cell::TameIffBounded, CITE_CONDITIONAL, resolution)
            } else {
                // Stability unresolved (table input): fall back to M_βα.
                match m.verdict.value {
                    VerdictValue::Bounded => (Cell::Tame, CITE_INFINITE_INFINITE, None),
                    VerdictValue::Unbounded => (Cell::NonTame, CITE_INFINITE_INFINITE, None),
                    VerdictValue::Inconclusive => (Cell::TameIffBounded, CITE_CONDITIONAL, None),
                }
            };
            limit_points = Some(m);
            out
        }
    };

    let confidence = if stab_left.analytic
        && stab_right.analytic
        && limit_points.as_ref().is_none_or(|m| m.analytic)
    {
        Confidence::Proven
    } else {
        Confidence::Numerical
    };

    Ok(ClassificationReport {
        left: descriptor(left, &stab_left),
        right: descriptor(right, &stab_right),
        cell,
        citation: citation.to_string(),
        confidence,
        sub_verdicts: SubVerdicts {
            stability_left: (&stab_left).into(),
            stability_right: (&stab_right).into(),
            limit_points: limit_points.as_ref().map(Into::into),
        },
        resolution,
    })
}

// ---------------------------------------------------------------------------
// Cartesian products
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockReport {
    /// Block position in the 2×2 operator matrix.
    pub name: String,
    pub report: ClassificationReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductReport {
    pub left: SpaceDescriptor,
    pub right: SpaceDescriptor,
    pub blocks: Vec<BlockReport>,
    pub cell: Cell,
    pub citation: String,
    pub confidence: Confidence,
    /// Ratio families whose limit points were consulted.
    pub consulted: Vec<String>,
}

/// Classify `left × right` through the four operator blocks of the 2×2
/// matrix representation: the product is tame iff all four pairs are.
pub fn classify_product(
    left: &GradedSpace,
    right: &GradedSpace,
    depth: u32,
    cutoff: f64,
    exec: Execution,
) -> Result<ProductReport> {
    power_series_seq(left)?;
    power_series_seq(right)?;
    // Blocks of T(x, y) = (T11 x + T12 y, T21 x + T22 y).
    let blocks_spec: [(&str, &GradedSpace, &GradedSpace, &str); 4] = [
        ("T11", left, left, "(alpha_i/alpha_j)"),
        ("T12", right, left, "(alpha_i/beta_j)"),
        ("T21", left, right, "(beta_i/alpha_j)"),
        ("T22", right, right, "(beta_i/beta_j)"),
    ];
    let mut blocks = Vec::with_capacity(4);
    let mut consulted = Vec::new();
    for (name, domain, codomain, family) in blocks_spec {
        let report = classify_pair(domain, codomain, depth, cutoff, exec)?;
        if report.sub_verdicts.limit_points.is_some() {
            consulted.push(family.to_string());
        }
        blocks.push(BlockReport {
            name: name.to_string(),
            report,
        });
    }

    let resolved_cell = |b: &BlockReport| match (b.report.cell, &b.report.resolution) {
        (Cell::TameIffBounded, Some(r)) => r.cell,
        (c, _) => c,
    };
    let cell = if blocks.iter().any(|b| resolved_cell(b) == Cell::NonTame) {
        Cell::NonTame
    } else if blocks.iter().all(|b| resolved_cell(b) == Cell::Tame) {
        Cell::Tame
    } else {
        Cell::TameIffBounded
    };
    let confidence = if blocks
        .iter()
        .all(|b| b.report.confidence == Confidence::Proven)
    {
        Confidence::Proven
    } else {
        Confidence::Numerical
    };

    let stab_left = check_stability(power_series_seq(left)?, depth.clamp(2, 4096))?;
    let stab_right = check_stability(power_series_seq(right)?, depth.clamp(2, 4096))?;
    Ok(ProductReport {
        left: descriptor(left, &stab_left),
        right: descriptor(right, &stab_right),
        blocks,
        cell,
        citation: CITE_PRODUCT.to_string(),
        confidence,
        consulted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::ExponentSequence;

    fn l0(text: &str) -> GradedSpace {
        GradedSpace::power_series_finite(ExponentSequence::parse(text).unwrap())
    }

    fn linf(text: &str) -> GradedSpace {
        GradedSpace::power_series_infinite(ExponentSequence::parse(text).unwrap())
    }

    fn classify(l: &GradedSpace, r: &GradedSpace) -> ClassificationReport {
        classify_pair(l, r, 2000, 10.0, Execution::Sequential).unwrap()
    }

    #[test]
    fn finite_pairs_are_always_tame() {
        let rep = classify(&l0("ln(n+1)"), &l0("n!"));
        assert_eq!(rep.cell, Cell::Tame);
        assert_eq!(rep.citation, CITE_FINITE_FINITE);
        assert_eq!(rep.confidence, Confidence::Proven);
        assert!(rep.sub_verdicts.limit_points.is_none());
    }

    #[test]
    fn stable_infinite_to_finite_is_non_tame() {
        let rep = classify(&linf("n"), &l0("n!"));
        assert_eq!(rep.cell, Cell::NonTame);
        assert_eq!(rep.citation, CITE_INFINITE_FINITE_NONTAME);
        assert_eq!(rep.confidence, Confidence::Proven);
    }

    #[test]
    fn non_stable_infinite_pair_is_tame_with_bounded_ratios() {
        let rep = classify(&linf("n!"), &linf("n!"));
        assert_eq!(rep.cell, Cell::Tame);
        assert_eq!(rep.citation, CITE_INFINITE_INFINITE);
        assert_eq!(rep.confidence, Confidence::Proven);
        let m = rep.sub_verdicts.limit_points.expect("M_βα consulted");
        assert_eq!(m.verdict, VerdictValue::Bounded);
        assert!(m.analytic);
    }

    #[test]
    fn stable_infinite_pair_is_conditional_resolved_non_tame() {
        let rep = classify(&linf("n"), &linf("2^n"));
        assert_eq!(rep.cell, Cell::TameIffBounded);
        assert_eq!(rep.citation, CITE_CONDITIONAL);
        assert_eq!(rep.confidence, Confidence::Proven);
        let res = rep.resolution.expect("analytic rule resolves it");
        assert_eq!(res.cell, Cell::NonTame);
        assert_eq!(res.citation, CITE_INFINITE_INFINITE);
    }

    #[test]
    fn kothe_matrices_are_rejected() {
        let m = crate::spaces::KotheMatrix {
            rows: 2,
            grades: 2,
            log_weights: vec![vec![0.0, 1.0], vec![0.0, 2.0]],
        };
        let kothe = GradedSpace::general_kothe(m, "demo").unwrap();
        assert!(matches!(
            classify_pair(&kothe, &l0("n"), 100, 10.0, Execution::Sequential),
            Err(Error::UnsupportedSpace(_))
        ));
    }

    #[test]
    fn proven_verdicts_are_depth_stable() {
        for (l, r) in [
            (linf("n!"), linf("n!")),
            (linf("n"), l0("n")),
            (l0("ln(n+1)"), linf("exp(n^2)")),
        ] {
            let shallow = classify_pair(&l, &r, 100, 10.0, Execution::Sequential).unwrap();
            let deep = classify_pair(&l, &r, 3000, 20.0, Execution::Sequential).unwrap();
            assert_eq!(shallow.confidence, Confidence::Proven);
            assert_eq!(shallow.cell, deep.cell);
            assert_eq!(shallow.citation, deep.citation);
        }
    }

    #[test]
    fn products_follow_their_worst_block() {
        let rep = classify_product(&l0("n"), &l0("n^2"), 500, 10.0, Execution::Sequential).unwrap();
        assert_eq!(rep.cell, Cell::Tame);
        assert!(rep.consulted.is_empty());

        let rep =
            classify_product(&l0("n!"), &linf("n!"), 500, 10.0, Execution::Sequential).unwrap();
        assert_eq!(rep.cell, Cell::Tame);
        assert_eq!(rep.confidence, Confidence::Proven);
        // The infinite-type blocks consulted their ratio families.
        assert!(rep.consulted.contains(&"(alpha_i/beta_j)".to_string()));
        assert!(rep.consulted.contains(&"(beta_i/beta_j)".to_string()));

        let rep =
            classify_product(&linf("n"), &linf("n"), 500, 10.0, Execution::Sequential).unwrap();
        assert_eq!(rep.cell, Cell::NonTame);
        assert_eq!(rep.citation, CITE_PRODUCT);
    }
}
