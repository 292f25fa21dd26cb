//! Non-decreasing maps from grades to grades: the `S` of S-tameness and the
//! `ψ`, `φ` of the tameness criterion.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A non-decreasing map `N → N`. Affine maps use a rational slope rounded
/// up (`⌈num·k/den⌉ + b`); `Square` and `Pow2` are closed forms of commonly
/// used table maps; `Table` is an explicit prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MonotoneIntMap {
    Affine { num: u32, den: u32, intercept: i64 },
    Square,
    Pow2,
    Table(Vec<u32>),
}

impl MonotoneIntMap {
    pub fn affine(num: u32, den: u32, intercept: i64) -> Result<MonotoneIntMap> {
        if den == 0 {
            return Err(Error::Validation("affine map denominator is zero".to_string()));
        }
        let m = MonotoneIntMap::Affine { num, den, intercept };
        if m.eval(1)? < 1 {
            return Err(Error::Validation(format!(
                "affine map sends 1 to {}, must be >= 1",
                (num as i64).div_euclid(den as i64) + intercept
            )));
        }
        Ok(m)
    }

    pub fn identity() -> MonotoneIntMap {
        MonotoneIntMap::Affine {
            num: 1,
            den: 1,
            intercept: 0,
        }
    }

    pub fn table(values: Vec<u32>) -> Result<MonotoneIntMap> {
        if values.is_empty() {
            return Err(Error::Validation("table map is empty".to_string()));
        }
        if values[0] < 1 {
            return Err(Error::Validation("table map values must be >= 1".to_string()));
        }
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Validation(format!(
                    "table map decreases: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(MonotoneIntMap::Table(values))
    }

    pub fn eval(&self, k: u32) -> Result<u32> {
        if k == 0 {
            return Err(Error::GradeOutOfRange { grade: 0, max: 1 });
        }
        match self {
            MonotoneIntMap::Affine { num, den, intercept } => {
                let scaled = (*num as u64 * k as u64).div_ceil(*den as u64) as i64;
                let v = scaled + intercept;
                if v < 1 {
                    return Err(Error::Validation(format!("map sends {k} below 1")));
                }
                u32::try_from(v).map_err(|_| Error::GradeOutOfRange {
                    grade: k,
                    max: u32::MAX,
                })
            }
            MonotoneIntMap::Square => k
                .checked_mul(k)
                .ok_or(Error::GradeOutOfRange { grade: k, max: 65_535 }),
            MonotoneIntMap::Pow2 => {
                if k > 31 {
                    Err(Error::GradeOutOfRange { grade: k, max: 31 })
                } else {
                    Ok(1u32 << k)
                }
            }
            MonotoneIntMap::Table(values) => values
                .get(k as usize - 1)
                .copied()
                .ok_or(Error::GradeOutOfRange {
                    grade: k,
                    max: values.len() as u32,
                }),
        }
    }

    /// True for maps that are strictly increasing and unbounded (the shape
    /// required of ψ in the tameness criterion).
    pub fn tends_to_infinity(&self) -> bool {
        match self {
            MonotoneIntMap::Affine { num, .. } => *num >= 1,
            MonotoneIntMap::Square | MonotoneIntMap::Pow2 => true,
            MonotoneIntMap::Table(_) => false,
        }
    }

    /// Parse `"k"`, `"2k"`, `"3*k+1"`, `"k+2"`, `"k^2"`, `"2^k"`,
    /// `"table:[...]"`.
    pub fn parse(text: &str) -> Result<MonotoneIntMap> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if t == "k^2" {
            return Ok(MonotoneIntMap::Square);
        }
        if t == "2^k" {
            return Ok(MonotoneIntMap::Pow2);
        }
        if let Some(rest) = t.strip_prefix("table:") {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::parse(6, "expected [..] after table:"))?;
            let values = inner
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(7, format!("bad table entry: {e}")))?;
            return MonotoneIntMap::table(values);
        }
        // Affine: [num*]k[±intercept]
        let kpos = t
            .find('k')
            .ok_or_else(|| Error::parse(0, "expected 'k' in grade map"))?;
        let num = match &t[..kpos] {
            "" => 1u32,
            head => {
                let head = head.strip_suffix('*').unwrap_or(head);
                head.parse::<u32>()
                    .map_err(|_| Error::parse(0, format!("bad slope {head:?}")))?
            }
        };
        let tail = &t[kpos + 1..];
        let intercept = match tail {
            "" => 0i64,
            _ => tail
                .parse::<i64>()
                .map_err(|_| Error::parse(kpos + 1, format!("bad intercept {tail:?}")))?,
        };
        MonotoneIntMap::affine(num, 1, intercept)
    }
}

impl std::fmt::Display for MonotoneIntMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MonotoneIntMap::Affine { num, den, intercept } => {
                if *den == 1 {
                    if *num == 1 {
                        write!(f, "k")?;
                    } else {
                        write!(f, "{num}k")?;
                    }
                } else {
                    write!(f, "{num}k/{den}")?;
                }
                match intercept.cmp(&0) {
                    std::cmp::Ordering::Greater => write!(f, "+{intercept}"),
                    std::cmp::Ordering::Less => write!(f, "{intercept}"),
                    std::cmp::Ordering::Equal => Ok(()),
                }
            }
            MonotoneIntMap::Square => write!(f, "k^2"),
            MonotoneIntMap::Pow2 => write!(f, "2^k"),
            MonotoneIntMap::Table(v) => write!(f, "table[{} values]", v.len()),
        }
    }
}

/// The φ family explored by the certificate searches: identity, squares,
/// and powers of two.
pub fn built_in_phi_family() -> Vec<MonotoneIntMap> {
    vec![
        MonotoneIntMap::identity(),
        MonotoneIntMap::Square,
        MonotoneIntMap::Pow2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        assert_eq!(MonotoneIntMap::parse("k").unwrap().eval(7).unwrap(), 7);
        assert_eq!(MonotoneIntMap::parse("2k").unwrap().eval(7).unwrap(), 14);
        assert_eq!(MonotoneIntMap::parse("2*k").unwrap().eval(3).unwrap(), 6);
        assert_eq!(MonotoneIntMap::parse("k+1").unwrap().eval(7).unwrap(), 8);
        assert_eq!(MonotoneIntMap::parse("k^2").unwrap().eval(5).unwrap(), 25);
        assert_eq!(MonotoneIntMap::parse("2^k").unwrap().eval(5).unwrap(), 32);
        let t = MonotoneIntMap::parse("table:[1,1,2,3]").unwrap();
        assert_eq!(t.eval(2).unwrap(), 1);
        assert!(t.eval(5).is_err());
    }

    #[test]
    fn rejects_maps_below_one() {
        assert!(MonotoneIntMap::parse("k-1").is_err());
        assert!(MonotoneIntMap::affine(0, 1, 0).is_err());
        assert!(MonotoneIntMap::table(vec![2, 1]).is_err());
        assert!(MonotoneIntMap::table(vec![0]).is_err());
    }

    #[test]
    fn rational_slope_rounds_up() {
        let half = MonotoneIntMap::affine(1, 2, 1).unwrap();
        assert_eq!(half.eval(1).unwrap(), 2); // ceil(1/2)+1
        assert_eq!(half.eval(4).unwrap(), 3); // ceil(4/2)+1
        assert_eq!(half.eval(5).unwrap(), 4); // ceil(5/2)+1
    }
}
