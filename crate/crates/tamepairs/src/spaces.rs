//! Graded Fréchet spaces as log-weight families.
//!
//! A space is a matrix of weights `a_{j,k}` (non-decreasing in the grade
//! `k`); the two power series families are the special cases
//!
//! ```text
//! finite type:    a_{j,k} = e^{-α_j / k}      log weight  -α_j/k
//! infinite type:  a_{j,k} = e^{k · α_j}       log weight   k·α_j
//! ```
//!
//! Everything is computed on log weights as [`Wide`] values; the weights
//! themselves are never materialized.

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp_wide, Wide};
use crate::sequences::ExponentSequence;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SpaceKind {
    PowerSeriesFinite(ExponentSequence),
    PowerSeriesInfinite(ExponentSequence),
    GeneralKothe(KotheMatrix),
}

/// Explicit log-weight matrix `{rows, grades, log_weights[row][grade]}`.
/// Entries may be `-inf` (a zero weight); each row must be non-decreasing
/// across grades and have at least one finite entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KotheMatrix {
    pub rows: u32,
    pub grades: u32,
    pub log_weights: Vec<Vec<f64>>,
}

impl KotheMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.log_weights.len() != self.rows as usize {
            return Err(Error::Validation(format!(
                "expected {} rows, found {}",
                self.rows,
                self.log_weights.len()
            )));
        }
        for (j, row) in self.log_weights.iter().enumerate() {
            if row.len() != self.grades as usize {
                return Err(Error::Validation(format!(
                    "row {} has {} grades, expected {}",
                    j + 1,
                    row.len(),
                    self.grades
                )));
            }
            if row.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
                return Err(Error::Validation(format!("row {} has invalid weight", j + 1)));
            }
            if row.iter().all(|w| *w == f64::NEG_INFINITY) {
                return Err(Error::Validation(format!("row {} is identically zero", j + 1)));
            }
            for w in row.windows(2) {
                if w[1] < w[0] {
                    return Err(Error::Validation(format!(
                        "row {} log-weights decrease across grades ({} -> {})",
                        j + 1,
                        w[0],
                        w[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A graded space with a printable label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradedSpace {
    kind: SpaceKind,
    label: String,
}

impl GradedSpace {
    pub fn power_series_finite(seq: ExponentSequence) -> GradedSpace {
        let label = format!("L0:{}", seq.text());
        GradedSpace {
            kind: SpaceKind::PowerSeriesFinite(seq),
            label,
        }
    }

    pub fn power_series_infinite(seq: ExponentSequence) -> GradedSpace {
        let label = format!("Linf:{}", seq.text());
        GradedSpace {
            kind: SpaceKind::PowerSeriesInfinite(seq),
            label,
        }
    }

    pub fn general_kothe(matrix: KotheMatrix, label: impl Into<String>) -> Result<GradedSpace> {
        matrix.validate()?;
        Ok(GradedSpace {
            kind: SpaceKind::GeneralKothe(matrix),
            label: label.into(),
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_power_series(&self) -> bool {
        !matches!(self.kind, SpaceKind::GeneralKothe(..))
    }

    /// The generating exponent sequence, for power series spaces.
    pub fn sequence(&self) -> Option<&ExponentSequence> {
        match &self.kind {
            SpaceKind::PowerSeriesFinite(s) | SpaceKind::PowerSeriesInfinite(s) => Some(s),
            SpaceKind::GeneralKothe(..) => None,
        }
    }

    /// Largest valid row index (`None` when unbounded).
    pub fn max_row(&self) -> Option<u32> {
        match &self.kind {
            SpaceKind::GeneralKothe(m) => Some(m.rows),
            _ => self.sequence().and_then(|s| s.max_index()),
        }
    }

    /// Largest valid grade (`None` when unbounded).
    pub fn max_grade(&self) -> Option<u32> {
        match &self.kind {
            SpaceKind::GeneralKothe(m) => Some(m.grades),
            _ => None,
        }
    }

    pub fn check_grade(&self, k: u32) -> Result<()> {
        if k == 0 {
            return Err(Error::GradeOutOfRange { grade: 0, max: 1 });
        }
        if let Some(max) = self.max_grade() {
            if k > max {
                return Err(Error::GradeOutOfRange { grade: k, max });
            }
        }
        Ok(())
    }

    /// `log a_{j,k}` as a [`Wide`] value.
    pub fn log_weight(&self, j: u32, k: u32) -> Result<Wide> {
        self.check_grade(k)?;
        match &self.kind {
            SpaceKind::PowerSeriesFinite(seq) => {
                let ln_alpha = seq.log_eval(j)?;
                Ok(Wide::from_sign_ln(-1, ln_alpha - (k as f64).ln()))
            }
            SpaceKind::PowerSeriesInfinite(seq) => {
                let ln_alpha = seq.log_eval(j)?;
                Ok(Wide::from_sign_ln(1, ln_alpha + (k as f64).ln()))
            }
            SpaceKind::GeneralKothe(m) => {
                if j == 0 || j > m.rows {
                    return Err(Error::IndexOutOfRange {
                        index: j,
                        limit: m.rows,
                    });
                }
                Ok(Wide::from_f64(m.log_weights[j as usize - 1][k as usize - 1]))
            }
        }
    }

    /// Power-series weight at a *real* grade parameter: `g·α_j` for infinite
    /// type, `-α_j/g` for finite type. Needed by linear-tameness bounds,
    /// where the grade `A·k + B` is generally not an integer.
    pub fn log_weight_real_grade(&self, j: u32, g: f64) -> Result<Wide> {
        if g.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Validation(format!("real grade must be positive, got {g}")));
        }
        match &self.kind {
            SpaceKind::PowerSeriesFinite(seq) => {
                let ln_alpha = seq.log_eval(j)?;
                Ok(Wide::from_sign_ln(-1, ln_alpha - g.ln()))
            }
            SpaceKind::PowerSeriesInfinite(seq) => {
                let ln_alpha = seq.log_eval(j)?;
                Ok(Wide::from_sign_ln(1, ln_alpha + g.ln()))
            }
            SpaceKind::GeneralKothe(..) => Err(Error::UnsupportedSpace(
                "real-grade weights exist only for power series spaces".to_string(),
            )),
        }
    }
}

impl std::fmt::Display for GradedSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label)
    }
}

/// Finitely supported vector: strictly increasing 1-based indices, nonzero
/// finite coefficients. The empty support is the zero vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteVector {
    support: Vec<(u32, f64)>,
}

impl FiniteVector {
    pub fn new(support: Vec<(u32, f64)>) -> Result<FiniteVector> {
        let mut prev = 0u32;
        for &(idx, c) in &support {
            if idx == 0 || idx <= prev {
                return Err(Error::Validation(format!(
                    "support indices must be strictly increasing and positive (at {idx})"
                )));
            }
            if c == 0.0 || !c.is_finite() {
                return Err(Error::Validation(format!("coefficient {c} at index {idx} invalid")));
            }
            prev = idx;
        }
        Ok(FiniteVector { support })
    }

    pub fn zero() -> FiniteVector {
        FiniteVector { support: Vec::new() }
    }

    /// The basis vector `e_n`.
    pub fn basis(n: u32) -> FiniteVector {
        FiniteVector {
            support: vec![(n, 1.0)],
        }
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl PNorm {
    pub const ALL: [PNorm; 3] = [PNorm::One, PNorm::Two, PNorm::Inf];
}

/// `log ‖e_n‖_k = log a_{n,k}`; the same for every `p` since `e_n` has a
/// single term.
pub fn log_basis_norm(space: &GradedSpace, n: u32, k: u32) -> Result<Wide> {
    space.log_weight(n, k)
}

/// `log ‖x‖_k` for the weighted ℓ^p norm, `p ∈ {1, 2, ∞}`: a log-sum-exp
/// reduction for finite `p`, a max for `p = ∞`. The zero vector yields `-∞`.
pub fn vector_norm(space: &GradedSpace, x: &FiniteVector, k: u32, p: PNorm) -> Result<Wide> {
    space.check_grade(k)?;
    let mut terms = Vec::with_capacity(x.support().len());
    for &(idx, c) in x.support() {
        let w = space.log_weight(idx, k)?;
        terms.push(Wide::from_f64(c.abs().ln()).add(w));
    }
    let norm = match p {
        PNorm::Inf => terms.into_iter().max().unwrap_or(Wide::NEG_INFINITY),
        PNorm::One => log_sum_exp_wide(&terms),
        PNorm::Two => {
            let doubled: Vec<Wide> = terms.into_iter().map(|t| t.scale(2.0)).collect();
            let lse = log_sum_exp_wide(&doubled);
            if lse.is_finite() {
                lse.scale(0.5)
            } else {
                lse
            }
        }
    };
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::ExponentSequence;
    use proptest::prelude::*;

    fn linf(text: &str) -> GradedSpace {
        GradedSpace::power_series_infinite(ExponentSequence::parse(text).unwrap())
    }

    fn l0(text: &str) -> GradedSpace {
        GradedSpace::power_series_finite(ExponentSequence::parse(text).unwrap())
    }

    #[test]
    fn basis_norm_examples() {
        // Λ∞(n): log ‖e_3‖_2 = 2·3 = 6.
        let v = log_basis_norm(&linf("n"), 3, 2).unwrap().to_f64();
        assert!((v - 6.0).abs() < 1e-12);
        // Λ₀(n): log ‖e_3‖_2 = -3/2.
        let v = log_basis_norm(&l0("n"), 3, 2).unwrap().to_f64();
        assert!((v + 1.5).abs() < 1e-12);
        // Λ∞(n!): log ‖e_4‖_1 = 24.
        let v = log_basis_norm(&linf("n!"), 4, 1).unwrap().to_f64();
        assert!((v - 24.0).abs() < 1e-12);
    }

    #[test]
    fn basis_norms_agree_across_p() {
        let space = linf("n^2");
        let e = FiniteVector::basis(5);
        let norms: Vec<Wide> = PNorm::ALL
            .iter()
            .map(|&p| vector_norm(&space, &e, 3, p).unwrap())
            .collect();
        assert!(norms[0].approx_eq(norms[1], 1e-12));
        assert!(norms[1].approx_eq(norms[2], 1e-12));
    }

    #[test]
    fn lse_example_e1_plus_e2() {
        let space = linf("n");
        let x = FiniteVector::new(vec![(1, 1.0), (2, 1.0)]).unwrap();
        let inf = vector_norm(&space, &x, 1, PNorm::Inf).unwrap().to_f64();
        assert!((inf - 2.0).abs() < 1e-12);
        let one = vector_norm(&space, &x, 1, PNorm::One).unwrap().to_f64();
        let expected = (1f64.exp() + 2f64.exp()).ln();
        assert!((one - expected).abs() < 1e-12, "{one} vs {expected}");
    }

    #[test]
    fn zero_vector_norm_is_neg_infinity() {
        let n = vector_norm(&linf("n"), &FiniteVector::zero(), 1, PNorm::One).unwrap();
        assert!(!n.is_finite());
        assert!(n.sign() < 0);
    }

    #[test]
    fn kothe_matrix_validation_and_lookup() {
        let m = KotheMatrix {
            rows: 2,
            grades: 3,
            log_weights: vec![vec![0.0, 1.0, 1.0], vec![f64::NEG_INFINITY, 0.0, 2.0]],
        };
        let space = GradedSpace::general_kothe(m, "demo").unwrap();
        assert_eq!(space.log_weight(2, 2).unwrap().to_f64(), 0.0);
        assert_eq!(space.log_weight(1, 2).unwrap().to_f64(), 1.0);
        assert!(space.log_weight(3, 1).is_err());
        assert!(space.log_weight(1, 4).is_err());

        let bad = KotheMatrix {
            rows: 1,
            grades: 2,
            log_weights: vec![vec![1.0, 0.0]],
        };
        assert!(GradedSpace::general_kothe(bad, "bad").is_err());
    }

    #[test]
    fn factorial_weights_overflow_f64_but_stay_ordered() {
        let space = linf("n!");
        let a = log_basis_norm(&space, 190, 3).unwrap();
        let b = log_basis_norm(&space, 191, 3).unwrap();
        assert!(a < b);
        assert_eq!(a.to_f64(), f64::INFINITY); // saturates only on conversion
        assert!(a.is_finite());
    }

    proptest! {
        /// Grade monotonicity: ‖x‖_k ≤ ‖x‖_{k+1} for every p.
        #[test]
        fn norms_non_decreasing_in_grade(
            idxs in proptest::collection::btree_set(1u32..60, 1..6),
            seed in 0u64..1000,
            k in 1u32..6,
        ) {
            let coeffs: Vec<(u32, f64)> = idxs
                .iter()
                .enumerate()
                .map(|(i, &idx)| (idx, 0.25 + ((seed + i as u64) % 17) as f64))
                .collect();
            let x = FiniteVector::new(coeffs).unwrap();
            for space in [linf("n"), l0("n"), linf("n!"), l0("ln(n+1)")] {
                for p in PNorm::ALL {
                    let a = vector_norm(&space, &x, k, p).unwrap();
                    let b = vector_norm(&space, &x, k + 1, p).unwrap();
                    prop_assert!(a <= b.add(Wide::from_f64(1e-12)));
                }
            }
        }

        /// Log-domain result matches plain arithmetic when representable.
        #[test]
        fn log_domain_matches_plain(
            idxs in proptest::collection::btree_set(1u32..25, 1..5),
            k in 1u32..4,
        ) {
            let coeffs: Vec<(u32, f64)> =
                idxs.iter().map(|&i| (i, 1.0 + i as f64 / 3.0)).collect();
            let x = FiniteVector::new(coeffs.clone()).unwrap();
            let space = linf("n");
            let plain: f64 = coeffs
                .iter()
                .map(|&(i, c)| (c * ((k * i) as f64).exp()).powi(2))
                .sum::<f64>()
                .sqrt();
            prop_assume!(plain.is_finite());
            let got = vector_norm(&space, &x, k, PNorm::Two).unwrap().to_f64();
            prop_assert!((got - plain.ln()).abs() < 1e-12 * plain.ln().abs().max(1.0));
        }
    }
}
