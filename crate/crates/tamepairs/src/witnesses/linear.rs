//! Linear-tameness certificates for quasi-diagonal operators between
//! infinite-type spaces.
//!
//! When the finite limit points of `(β_i/α_j)` stay strictly under a slope
//! `A`, every continuous quasi-diagonal operator is controlled by the affine
//! grade map `A·k + B` with `B = π_T(1)`. Each entry is bounded through one
//! of three bands of its diagonal ratio `ρ_n = β_{σ(n)}/α_n`:
//!
//! * `ρ_n ≤ A` — the grade-1 continuity constant `C_1` absorbs it:
//!   `(k-1)·β_{σ(n)} ≤ A·k·α_n - A·α_n` keeps the telescoped ratio under
//!   `C_1`.
//! * `ρ_n ≥ max(2A, π_T(k+1))` — the grade-`k+1` constant `C_{k+1}` absorbs
//!   it: `β_{σ(n)} ≥ π_T(k+1)·α_n` pays for the grade shift.
//! * the band between — only finitely many entries land here (their ratios
//!   would otherwise accumulate at a finite limit point above `A`); they are
//!   recorded as exceptional indices and bounded directly.
//!
//! `D_k` is the max of the three bounds; the final verification sweeps every
//! entry and grade, independent of the bands that produced the constants.

use super::CHECK_TOL;
use crate::error::{Error, Result};
use crate::numeric::Wide;
use crate::operators::{Pi, QuasiDiagonalOperator};
use crate::ratio_analysis::{estimate_limit_points, LimitPointParams};
use crate::spaces::SpaceKind;
use crate::verdict::VerdictValue;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GradeConstant {
    pub k: u32,
    pub log_d: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearTameCertificate {
    /// Slope of the affine grade map; strict upper bound for the finite
    /// limit points of the ratio family.
    pub a: f64,
    /// Intercept `B = π_T(1)`.
    pub b: u32,
    /// Per-grade constants `log D_k`, `k = 1..=k_max`.
    pub d_log: Vec<GradeConstant>,
    /// Sources whose ratio falls in the middle band.
    pub exceptional: Vec<u32>,
    pub k_max: u32,
    pub depth: u32,
    pub operator: QuasiDiagonalOperator,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)] // the certificate is the common case
pub enum LinearOutcome {
    Certificate(LinearTameCertificate),
    /// A checked entry exceeded its bound.
    Refuted {
        source: u32,
        grade: u32,
        log_lhs: f64,
        log_bound: f64,
    },
}

impl LinearOutcome {
    pub fn certificate(&self) -> Option<&LinearTameCertificate> {
        match self {
            LinearOutcome::Certificate(c) => Some(c),
            LinearOutcome::Refuted { .. } => None,
        }
    }
}

/// Certify `log ‖T e_n‖_k - log ‖e_n‖_{A·k+B} ≤ log D_k` for all entries
/// with source at most `depth` and `k ≤ k_max`.
pub fn linear_tame_certificate(
    op: &QuasiDiagonalOperator,
    a: f64,
    k_max: u32,
    depth: u32,
) -> Result<LinearOutcome> {
    if a.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || k_max < 1 {
        return Err(Error::Validation("need a > 0 and k_max >= 1".to_string()));
    }
    let (alpha, beta) = match (op.domain().kind(), op.codomain().kind()) {
        (SpaceKind::PowerSeriesInfinite(a), SpaceKind::PowerSeriesInfinite(b)) => (a, b),
        _ => {
            return Err(Error::UnsupportedSpace(
                "linear-tameness certificates require infinite-type power series spaces"
                    .to_string(),
            ))
        }
    };

    // Precondition 1: the finite limit points of (β_i/α_j) must stay
    // strictly under the slope.
    let est_depth = depth.clamp(10, 400);
    let est = estimate_limit_points(
        beta,
        alpha,
        &LimitPointParams::new(est_depth, (4.0 * a).max(10.0)),
    )?;
    if !est.verdict.is(VerdictValue::Bounded) {
        return Err(Error::PreconditionFailed(format!(
            "finite limit points of the ratio family are not bounded ({}): {}",
            est.verdict.value, est.verdict.evidence.summary
        )));
    }
    let sup = est.sup_finite.unwrap_or(0.0);
    if sup >= a {
        return Err(Error::PreconditionFailed(format!(
            "slope {a} does not strictly exceed the limit-point sup {sup}"
        )));
    }

    // Precondition 2: finite characteristic of continuity up to k_max + 1.
    let r_cap = (4 * (k_max + 1)).max(16);
    let profile = op.continuity_characteristic(k_max + 1, r_cap, depth, 0)?;
    let mut pi = Vec::with_capacity(k_max as usize + 2);
    pi.push(0u32); // grade 0 placeholder
    for k in 1..=k_max + 1 {
        match profile.pi(k) {
            Some(Pi::Grade(g)) => pi.push(g),
            _ => {
                return Err(Error::PreconditionFailed(format!(
                    "characteristic of continuity diverges at grade {k} (searched r <= {r_cap})"
                )))
            }
        }
    }
    let b = pi[1];

    // Truncated continuity constants C_j = sup_n ‖Te_n‖_j / ‖e_n‖_{π_T(j)}.
    let entries: Vec<_> = op
        .entries()
        .iter()
        .filter(|e| e.source <= depth)
        .copied()
        .collect();
    let c_log = |j: u32, pi_j: u32| -> Result<Wide> {
        let mut sup = Wide::NEG_INFINITY;
        for e in &entries {
            sup = sup.max(op.entry_log_ratio(e, j, pi_j)?);
        }
        Ok(sup)
    };
    let c1 = c_log(1, pi[1])?;

    let mut d_log = Vec::with_capacity(k_max as usize);
    let mut exceptional: Vec<u32> = Vec::new();
    for k in 1..=k_max {
        let c_next = c_log(k + 1, pi[k as usize + 1])?;
        let theta = (2.0 * a).max(pi[k as usize + 1] as f64);
        let mut band_max = Wide::NEG_INFINITY;
        for e in &entries {
            let rho = (beta.log_eval(e.target)? - alpha.log_eval(e.source)?).exp();
            if rho > a && rho < theta {
                if !exceptional.contains(&e.source) {
                    exceptional.push(e.source);
                }
                let diff = op
                    .codomain()
                    .log_weight(e.target, k)?
                    .sub(op.domain().log_weight_real_grade(e.source, a * k as f64 + b as f64)?);
                band_max = band_max.max(diff.add(Wide::from_f64(e.log_scalar)));
            }
        }
        let v = c1.max(c_next).max(band_max).to_f64();
        // An empty sup (no entries) leaves -inf; any positive constant works.
        let log_d = if v == f64::NEG_INFINITY { 0.0 } else { v };
        d_log.push(GradeConstant { k, log_d });
    }
    exceptional.sort_unstable();

    let cert = LinearTameCertificate {
        a,
        b,
        d_log,
        exceptional,
        k_max,
        depth,
        operator: op.clone(),
    };
    match sweep(&cert)? {
        None => Ok(LinearOutcome::Certificate(cert)),
        Some(refuted) => Ok(refuted),
    }
}

/// Full verification sweep; `None` when every entry passes.
fn sweep(cert: &LinearTameCertificate) -> Result<Option<LinearOutcome>> {
    let op = &cert.operator;
    for gc in &cert.d_log {
        let bound = Wide::from_f64(gc.log_d);
        let slack = bound.abs().max(Wide::from_f64(1.0)).scale(CHECK_TOL);
        for e in op.entries().iter().filter(|e| e.source <= cert.depth) {
            let lhs = op
                .codomain()
                .log_weight(e.target, gc.k)?
                .sub(
                    op.domain()
                        .log_weight_real_grade(e.source, cert.a * gc.k as f64 + cert.b as f64)?,
                )
                .add(Wide::from_f64(e.log_scalar));
            if lhs > bound.add(slack) {
                return Ok(Some(LinearOutcome::Refuted {
                    source: e.source,
                    grade: gc.k,
                    log_lhs: lhs.to_f64(),
                    log_bound: gc.log_d,
                }));
            }
        }
    }
    Ok(None)
}

/// Re-check a serialized certificate: the bound `log ‖T e_n‖_k ≤
/// log ‖e_n‖_{A·k+B} + log D_k` for every entry and grade.
pub fn verify_linear_certificate(cert: &LinearTameCertificate) -> Result<Vec<String>> {
    if cert.d_log.len() != cert.k_max as usize {
        return Err(Error::InvalidCertificate(format!(
            "expected {} grade constants, found {}",
            cert.k_max,
            cert.d_log.len()
        )));
    }
    if let Some(LinearOutcome::Refuted {
        source,
        grade,
        log_lhs,
        log_bound,
    }) = sweep(cert)?
    {
        return Err(Error::InvalidCertificate(format!(
            "entry at source {source} exceeds D_{grade}: {log_lhs} > {log_bound}"
        )));
    }
    Ok(vec![format!(
        "{} entries bounded against A·k+B = {}·k+{} for k <= {} (D constants held)",
        cert.operator.entries().len(),
        cert.a,
        cert.b,
        cert.k_max
    )])
}
