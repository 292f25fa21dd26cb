//! Extended-range log-domain arithmetic.
//!
//! Graded norms on power series spaces are handled as logarithms
//! (`log ‖x‖_k`), but even the *logarithms* overflow `f64` for fast-growing
//! exponent sequences: the log-norm `k·α_n` with `α_n = n!` passes `1e308`
//! near `n = 171`. [`Wide`] stores a real number as sign plus natural log of
//! its magnitude, which keeps every quantity in this crate finite and ordered
//! while spending one `f64` of precision on the magnitude.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// A real number `sign · e^ln_mag` with ~`±exp(1.7e308)` dynamic range.
///
/// Zero is `sign == 0` (with `ln_mag = -inf` internally). `ln_mag = +inf`
/// encodes `±∞`, which only arises for the log of an empty sup/sum.
#[derive(Clone, Copy, Debug)]
pub struct Wide {
    sign: i8,
    ln_mag: f64,
}

impl Wide {
    pub const ZERO: Wide = Wide {
        sign: 0,
        ln_mag: f64::NEG_INFINITY,
    };

    /// `-∞`, the log of an empty sum (norm of the zero vector).
    pub const NEG_INFINITY: Wide = Wide {
        sign: -1,
        ln_mag: f64::INFINITY,
    };

    /// Build from sign and natural log of the magnitude.
    pub fn from_sign_ln(sign: i8, ln_mag: f64) -> Wide {
        debug_assert!(!ln_mag.is_nan());
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            Wide::ZERO
        } else {
            Wide {
                sign: sign.signum(),
                ln_mag,
            }
        }
    }

    pub fn from_f64(v: f64) -> Wide {
        debug_assert!(!v.is_nan());
        if v == 0.0 {
            Wide::ZERO
        } else {
            Wide {
                sign: if v > 0.0 { 1 } else { -1 },
                ln_mag: v.abs().ln(),
            }
        }
    }

    /// Saturating conversion; values past `f64` range come back `±inf`.
    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.ln_mag.exp()
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_mag(self) -> f64 {
        self.ln_mag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(self) -> bool {
        self.ln_mag != f64::INFINITY
    }

    #[allow(clippy::should_implement_trait)] // explicit value calls keep Copy chains readable
    pub fn neg(self) -> Wide {
        Wide {
            sign: -self.sign,
            ln_mag: self.ln_mag,
        }
    }

    pub fn abs(self) -> Wide {
        Wide {
            sign: self.sign.abs(),
            ln_mag: self.ln_mag,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Wide) -> Wide {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        if self.sign == other.sign {
            let (hi, lo) = if self.ln_mag >= other.ln_mag {
                (self.ln_mag, other.ln_mag)
            } else {
                (other.ln_mag, self.ln_mag)
            };
            // hi may be +inf (infinite magnitude): exp(lo - hi) = 0 is correct.
            let bump = if hi == f64::INFINITY {
                0.0
            } else {
                (lo - hi).exp().ln_1p()
            };
            return Wide {
                sign: self.sign,
                ln_mag: hi + bump,
            };
        }
        // Opposite signs: the larger magnitude wins.
        match self
            .ln_mag
            .partial_cmp(&other.ln_mag)
            .expect("ln_mag is never NaN")
        {
            Ordering::Equal => Wide::ZERO,
            Ordering::Greater => Wide::from_sign_ln(
                self.sign,
                self.ln_mag + (-((other.ln_mag - self.ln_mag).exp())).ln_1p(),
            ),
            Ordering::Less => Wide::from_sign_ln(
                other.sign,
                other.ln_mag + (-((self.ln_mag - other.ln_mag).exp())).ln_1p(),
            ),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Wide) -> Wide {
        self.add(other.neg())
    }

    /// Multiply by an `f64` scalar.
    pub fn scale(self, c: f64) -> Wide {
        debug_assert!(!c.is_nan());
        if c == 0.0 || self.sign == 0 {
            return Wide::ZERO;
        }
        let sign = if c > 0.0 { self.sign } else { -self.sign };
        Wide {
            sign,
            ln_mag: self.ln_mag + c.abs().ln(),
        }
    }

    pub fn max(self, other: Wide) -> Wide {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Wide) -> Wide {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `|self - other|` as saturating `f64`.
    pub fn abs_diff_f64(self, other: Wide) -> f64 {
        self.sub(other).abs().to_f64()
    }

    /// Closeness test for log-domain quantities: absolute `tol` for values of
    /// magnitude ≤ 1, relative beyond (values reach `1e300`-scale where an
    /// absolute tolerance is meaningless for a 53-bit mantissa).
    pub fn approx_eq(self, other: Wide, tol: f64) -> bool {
        if self.sign == other.sign && self.ln_mag == other.ln_mag {
            return true;
        }
        let diff = self.sub(other).abs();
        let scale = self.abs().max(other.abs()).max(Wide::from_f64(1.0));
        diff <= scale.scale(tol)
    }
}

impl PartialEq for Wide {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Wide {}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Wide {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.sign {
            1 => self
                .ln_mag
                .partial_cmp(&other.ln_mag)
                .expect("ln_mag is never NaN"),
            -1 => other
                .ln_mag
                .partial_cmp(&self.ln_mag)
                .expect("ln_mag is never NaN"),
            _ => Ordering::Equal,
        }
    }
}

impl Serialize for Wide {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Wide", 2)?;
        // Canonical zero keeps ln finite so JSON round-trips losslessly.
        let ln = if self.sign == 0 { 0.0 } else { self.ln_mag };
        s.serialize_field("ln", &ln)?;
        s.serialize_field("sign", &self.sign)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Wide {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            ln: f64,
            sign: i8,
        }
        let r = Repr::deserialize(deserializer)?;
        Ok(if r.sign == 0 {
            Wide::ZERO
        } else {
            Wide::from_sign_ln(r.sign, r.ln)
        })
    }
}

/// `ln(e^a + e^b)` on plain `f64` log values.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{t_i}` over [`Wide`] exponents. Empty input yields `-∞`.
///
/// Terms more than ~745 nats below the maximum vanish at `f64` resolution,
/// so the correction only consults gaps that convert to finite `f64`.
pub fn log_sum_exp_wide(terms: &[Wide]) -> Wide {
    let Some(max) = terms.iter().copied().max() else {
        return Wide::NEG_INFINITY;
    };
    if !max.is_finite() && max.sign() < 0 {
        return Wide::NEG_INFINITY;
    }
    let mut acc = 0.0f64;
    for &t in terms {
        acc += t.sub(max).to_f64().exp();
    }
    max.add(Wide::from_f64(acc.ln()))
}

/// `ln(n!)` — exact accumulation for small `n`, Stirling series beyond
/// (absolute error below `1e-14` relative for `n > 128`).
pub fn ln_factorial(n: u32) -> f64 {
    if n <= 128 {
        let mut acc = 0.0f64;
        for i in 2..=n as u64 {
            acc += (i as f64).ln();
        }
        return acc;
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * x.ln() - x
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wide_round_trips_moderate_values() {
        // Round-tripping through (sign, ln) costs ~|ln v| ulps of relative
        // precision: ~1.5e-13 at the edge of f64 range.
        for &v in &[1.0, -2.5, 1e-300, 3e300, -7.25e-12] {
            let w = Wide::from_f64(v);
            assert!((w.to_f64() - v).abs() <= v.abs() * 1e-12, "{v}");
        }
        assert_eq!(Wide::from_f64(0.0).to_f64(), 0.0);
    }

    #[test]
    fn wide_survives_past_f64_range() {
        // 2e9 * e^800 has magnitude ~ 1e356: not an f64, fine as a Wide.
        let huge = Wide::from_sign_ln(1, 800.0).scale(2e9);
        let half = Wide::from_sign_ln(1, 800.0).scale(1e9);
        let sum = huge.add(half);
        assert!(sum > huge);
        assert_eq!(sum.to_f64(), f64::INFINITY);
        let back = sum.sub(huge);
        assert!(back.approx_eq(half, 1e-12));
        // Additions below the representation's relative resolution vanish.
        assert_eq!(huge.add(Wide::from_f64(123.0)), huge);
    }

    #[test]
    fn opposite_sign_cancellation() {
        let a = Wide::from_f64(5.0);
        assert!(a.sub(a).is_zero());
        let b = Wide::from_f64(3.0);
        assert!(a.sub(b).approx_eq(Wide::from_f64(2.0), 1e-12));
        assert!(b.sub(a).approx_eq(Wide::from_f64(-2.0), 1e-12));
    }

    #[test]
    fn ordering_is_total_and_sign_aware() {
        let mut vals = [
            Wide::from_f64(-3.0),
            Wide::ZERO,
            Wide::from_f64(2.0),
            Wide::from_f64(-0.5),
            Wide::from_f64(10.0),
            Wide::NEG_INFINITY,
        ];
        vals.sort();
        let expected = [f64::NEG_INFINITY, -3.0, -0.5, 0.0, 2.0, 10.0];
        for (w, e) in vals.iter().zip(expected) {
            assert!(
                w.to_f64() == e || (w.to_f64() - e).abs() <= e.abs() * 1e-12,
                "{} vs {e}",
                w.to_f64()
            );
        }
    }

    #[test]
    fn lse_matches_plain_arithmetic() {
        let terms = [1.0f64, 2.0, -0.5];
        let wide: Vec<Wide> = terms.iter().map(|&t| Wide::from_f64(t)).collect();
        let expected = terms.iter().map(|t| t.exp()).sum::<f64>().ln();
        let got = log_sum_exp_wide(&wide).to_f64();
        assert!((got - expected).abs() < 1e-12);
        assert!(log_sum_exp_wide(&[]).sign() < 0);
        assert!(!log_sum_exp_wide(&[]).is_finite());
    }

    #[test]
    fn ln_factorial_agrees_with_direct_sum() {
        for n in [0u32, 1, 5, 20, 128, 129, 200, 1000, 10_000] {
            let direct: f64 = (2..=n as u64).map(|i| (i as f64).ln()).sum();
            let got = ln_factorial(n);
            let tol = 1e-12 * direct.max(1.0);
            assert!(
                (got - direct).abs() <= tol,
                "n={n}: {got} vs {direct}"
            );
        }
    }

    proptest! {
        #[test]
        fn add_commutes(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (wa, wb) = (Wide::from_f64(a), Wide::from_f64(b));
            let ab = wa.add(wb);
            let ba = wb.add(wa);
            prop_assert!(ab.approx_eq(ba, 1e-13));
            prop_assert!(ab.approx_eq(Wide::from_f64(a + b), 1e-9));
        }

        #[test]
        fn log_add_exp_matches_naive(a in -30f64..30.0, b in -30f64..30.0) {
            let naive = (a.exp() + b.exp()).ln();
            prop_assert!((log_add_exp(a, b) - naive).abs() < 1e-12);
        }

        #[test]
        fn scale_then_unscale(v in -1e8f64..1e8, c in 1e-3f64..1e3) {
            prop_assume!(v != 0.0);
            let w = Wide::from_f64(v).scale(c).scale(1.0 / c);
            prop_assert!(w.approx_eq(Wide::from_f64(v), 1e-12));
        }

        /// Subtraction near cancellation stays sign-correct and within the
        /// representation's relative resolution of the true difference.
        #[test]
        fn near_cancellation_subtraction(base in 1f64..1e12, delta in 0f64..1.0) {
            let a = Wide::from_f64(base + delta);
            let b = Wide::from_f64(base);
            let d = a.sub(b);
            prop_assert!(d.sign() >= 0);
            // |d - delta| bounded by the ulp scale of the operands.
            let err = (d.to_f64() - delta).abs();
            prop_assert!(err <= 1e-11 * base.max(1.0), "err {err} base {base}");
            prop_assert!(b.sub(a).add(d).approx_eq(Wide::ZERO, 1e-11));
        }
    }
}
