//! Search for grade-map failure certificates and the operator they induce.
//!
//! A certificate row `(n, i_n, ν_n)` witnesses, at norm grade `m`:
//!
//! ```text
//! b_{ν_n,m} / a_{i_n,ψ(m)}  ≥  n · max_{1≤q≤n} b_{ν_n,q} / a_{i_n,φ(q)}
//! ```
//!
//! with `(i_n)` and `(ν_n)` strictly increasing. From the rows, taking
//! `t_n^{-1} = max_{1≤q≤n} b_{ν_n,q}/a_{i_n,φ(q)}` defines a continuous
//! quasi-diagonal operator with `‖T e_{i_n}‖_m / ‖e_{i_n}‖_{ψ(m)} ≥ n`: its
//! continuity characteristic escapes ψ by an unbounded factor.
//!
//! The norm grade `m` is pinned to the first grades (`m ≤ 2`). This is a
//! deliberate evidence-quality restriction: at larger `m`, full row runs
//! exist even on tame pairs whenever the competitor outpaces ψ pointwise
//! (against `φ = 2^k` with `ψ = 2k` on a pair of finite-type spaces over
//! `α_n = n`, the window `β_ν ∈ [~α_i/2, ~α_i]` is feasible for every `n`
//! once `m ≥ 3`), so such certificates measure the gap between ψ and φ, not
//! anything about the pair. At `m ≤ 2` the built-in competitors pin the
//! right-hand max to the numerator's own grade and rows survive only where
//! the pair's weights genuinely misbehave.

use super::CHECK_TOL;
use crate::error::{Error, Result};
use crate::maps::MonotoneIntMap;
use crate::numeric::Wide;
use crate::operators::{QdEntry, QuasiDiagonalOperator};
use crate::spaces::{GradedSpace, SpaceKind};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureRow {
    pub n: u32,
    /// Target grade whose tameness bound the row defeats.
    pub k: u32,
    /// Norm grade where the defeat is measured (`m_k` of the criterion).
    pub m_k: u32,
    pub i_n: u32,
    pub nu_n: u32,
    pub log_lhs: f64,
    pub log_rhs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureCertificate {
    pub psi: MonotoneIntMap,
    pub phi: MonotoneIntMap,
    /// The single norm grade shared by all rows.
    pub m: u32,
    pub depth: u32,
    pub rows: Vec<FailureRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SearchOutcome {
    Found(FailureCertificate),
    NotFound {
        depth: u32,
        /// Longest row run achieved over all scanned `m`.
        best_rows: u32,
    },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&FailureCertificate> {
        match self {
            SearchOutcome::Found(c) => Some(c),
            SearchOutcome::NotFound { .. } => None,
        }
    }
}

/// Greedy scan for a certificate with rows `n = 1..=n_target` at truncation
/// `depth`, against a single competitor `φ`.
pub fn search_tameness_failure(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    psi: &MonotoneIntMap,
    phi: &MonotoneIntMap,
    n_target: u32,
    depth: u32,
) -> Result<SearchOutcome> {
    if n_target < 1 {
        return Err(Error::Validation("n_target must be >= 1".to_string()));
    }
    if !psi.tends_to_infinity() {
        return Err(Error::Validation(
            "psi must be increasing and tend to infinity".to_string(),
        ));
    }
    // See the module docs: certificates away from the first norm grades do
    // not discriminate tame from non-tame pairs.
    let m_cap = 2u32;
    // Grade coverage for every grade the scan can touch.
    for m in 1..=m_cap {
        domain.check_grade(psi.eval(m)?)?;
        codomain.check_grade(m)?;
    }
    for q in 1..=n_target {
        domain.check_grade(phi.eval(q)?)?;
        codomain.check_grade(q)?;
    }

    let rows_a = domain.max_row().map_or(depth, |r| r.min(depth));
    let rows_b = codomain.max_row().map_or(depth, |r| r.min(depth));

    let mut best_rows = 0u32;
    for m in 1..=m_cap {
        let rows = greedy_rows(domain, codomain, psi, phi, m, n_target, rows_a, rows_b)?;
        best_rows = best_rows.max(rows.len() as u32);
        if rows.len() as u32 == n_target {
            return Ok(SearchOutcome::Found(FailureCertificate {
                psi: psi.clone(),
                phi: phi.clone(),
                m,
                depth,
                rows,
            }));
        }
    }
    Ok(SearchOutcome::NotFound { depth, best_rows })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiAttempt {
    pub phi: MonotoneIntMap,
    pub rows_found: u32,
    pub found: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySearch {
    pub found: Option<FailureCertificate>,
    pub attempts: Vec<PhiAttempt>,
}

/// Run the search against each `φ` in turn, stopping at the first success.
/// The universal quantifier over φ is not finitely checkable; the report
/// records exactly which competitors were tried.
pub fn search_over_phi_family(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    psi: &MonotoneIntMap,
    phis: &[MonotoneIntMap],
    n_target: u32,
    depth: u32,
) -> Result<FamilySearch> {
    let mut attempts = Vec::new();
    for phi in phis {
        match search_tameness_failure(domain, codomain, psi, phi, n_target, depth)? {
            SearchOutcome::Found(cert) => {
                attempts.push(PhiAttempt {
                    phi: phi.clone(),
                    rows_found: n_target,
                    found: true,
                });
                return Ok(FamilySearch {
                    found: Some(cert),
                    attempts,
                });
            }
            SearchOutcome::NotFound { best_rows, .. } => attempts.push(PhiAttempt {
                phi: phi.clone(),
                rows_found: best_rows,
                found: false,
            }),
        }
    }
    Ok(FamilySearch {
        found: None,
        attempts,
    })
}

/// Greedy row assembly: ascending `n`, first feasible `(i, ν)` with both
/// indices strictly past the previous row.
#[allow(clippy::too_many_arguments)] // plain scan parameters, no grouping pays off
fn greedy_rows(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    psi: &MonotoneIntMap,
    phi: &MonotoneIntMap,
    m: u32,
    n_target: u32,
    rows_a: u32,
    rows_b: u32,
) -> Result<Vec<FailureRow>> {
    if let (Some(ga), Some(gb)) = (grade_scale(domain), grade_scale(codomain)) {
        let alpha: Vec<f64> = domain
            .sequence()
            .expect("power series domain")
            .iter(rows_a)
            .collect();
        let beta: Vec<f64> = codomain
            .sequence()
            .expect("power series codomain")
            .iter(rows_b)
            .collect();
        if alpha.iter().chain(beta.iter()).all(|v| v.is_finite()) {
            return greedy_rows_separable(
                domain, codomain, ga, gb, &alpha, &beta, psi, phi, m, n_target,
            );
        }
    }
    greedy_rows_direct(domain, codomain, psi, phi, m, n_target, rows_a, rows_b)
}

fn grade_scale(space: &GradedSpace) -> Option<fn(u32) -> f64> {
    match space.kind() {
        SpaceKind::PowerSeriesFinite(_) => Some(|k| -1.0 / k as f64),
        SpaceKind::PowerSeriesInfinite(_) => Some(|k| k as f64),
        SpaceKind::GeneralKothe(_) => None,
    }
}

/// Power-series fast path. Row feasibility for fixed `n`, `i` is an interval
/// condition on `β_ν`:
///
/// ```text
/// ∀ q ≤ n:  (g_B(m) - g_B(q))·β_ν  ≥  ln n - (g_A(φ(q)) - g_A(ψ(m)))·α_i
/// ```
///
/// so the smallest admissible ν comes from one binary search per candidate i.
#[allow(clippy::too_many_arguments)]
fn greedy_rows_separable(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    ga: fn(u32) -> f64,
    gb: fn(u32) -> f64,
    alpha: &[f64],
    beta: &[f64],
    psi: &MonotoneIntMap,
    phi: &MonotoneIntMap,
    m: u32,
    n_target: u32,
) -> Result<Vec<FailureRow>> {
    let g_psi = ga(psi.eval(m)?);
    let g_m = gb(m);
    let mut coeffs = Vec::with_capacity(n_target as usize);
    for q in 1..=n_target {
        coeffs.push((g_m - gb(q), ga(phi.eval(q)?) - g_psi));
    }

    let mut rows: Vec<FailureRow> = Vec::with_capacity(n_target as usize);
    let mut prev_i = 0usize;
    let mut prev_nu = 0usize;
    'rows: for n in 1..=n_target {
        let ln_n = (n as f64).ln();
        for i in prev_i + 1..=alpha.len() {
            let y = alpha[i - 1];
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            let mut feasible = true;
            for &(c, d) in coeffs.iter().take(n as usize) {
                let rhs = ln_n - d * y;
                if c > 0.0 {
                    lo = lo.max(rhs / c);
                } else if c < 0.0 {
                    hi = hi.min(rhs / c);
                } else if rhs > 0.0 {
                    feasible = false;
                    break;
                }
            }
            if !feasible || lo > hi {
                continue;
            }
            let from = beta.partition_point(|&b| b < lo);
            let nu = from.max(prev_nu) + 1;
            if nu <= beta.len() && beta[nu - 1] <= hi {
                rows.push(make_row(domain, codomain, psi, phi, m, n, i as u32, nu as u32)?);
                prev_i = i;
                prev_nu = nu;
                continue 'rows;
            }
        }
        break;
    }
    Ok(rows)
}

/// Direct scan for explicit Köthe matrices (small truncations).
#[allow(clippy::too_many_arguments)]
fn greedy_rows_direct(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    psi: &MonotoneIntMap,
    phi: &MonotoneIntMap,
    m: u32,
    n_target: u32,
    rows_a: u32,
    rows_b: u32,
) -> Result<Vec<FailureRow>> {
    let psi_m = psi.eval(m)?;
    let mut rows: Vec<FailureRow> = Vec::new();
    let mut prev_i = 0u32;
    let mut prev_nu = 0u32;
    'rows: for n in 1..=n_target {
        let ln_n = Wide::from_f64((n as f64).ln());
        for i in prev_i + 1..=rows_a {
            let den_psi = domain.log_weight(i, psi_m)?;
            for nu in prev_nu + 1..=rows_b {
                let lhs = codomain.log_weight(nu, m)?.sub(den_psi);
                let mut rhs = Wide::NEG_INFINITY;
                for q in 1..=n {
                    let r = codomain
                        .log_weight(nu, q)?
                        .sub(domain.log_weight(i, phi.eval(q)?)?);
                    rhs = rhs.max(r);
                }
                if lhs >= ln_n.add(rhs) {
                    rows.push(make_row(domain, codomain, psi, phi, m, n, i, nu)?);
                    prev_i = i;
                    prev_nu = nu;
                    continue 'rows;
                }
            }
        }
        break;
    }
    Ok(rows)
}

/// Recompute the two sides of the row inequality from the spaces.
#[allow(clippy::too_many_arguments)]
fn make_row(
    domain: &GradedSpace,
    codomain: &GradedSpace,
    psi: &MonotoneIntMap,
    phi: &MonotoneIntMap,
    m: u32,
    n: u32,
    i: u32,
    nu: u32,
) -> Result<FailureRow> {
    let lhs = codomain
        .log_weight(nu, m)?
        .sub(domain.log_weight(i, psi.eval(m)?)?);
    let mut rhs = Wide::NEG_INFINITY;
    for q in 1..=n {
        rhs = rhs.max(
            codomain
                .log_weight(nu, q)?
                .sub(domain.log_weight(i, phi.eval(q)?)?),
        );
    }
    Ok(FailureRow {
        n,
        k: m,
        m_k: m,
        i_n: i,
        nu_n: nu,
        log_lhs: lhs.to_f64(),
        log_rhs: rhs.to_f64(),
    })
}

/// Build the witness operator from a certificate: entry `(i_n, ν_n)` with
/// `log t_n = -log_rhs`. Every row is re-validated against the spaces, and
/// the resulting operator is checked to reproduce the `≥ n` norm-ratio
/// growth and the unit continuity bounds `‖T‖_{q,φ(q)} ≤ 1`.
pub fn build_qd_witness(
    cert: &FailureCertificate,
    domain: &GradedSpace,
    codomain: &GradedSpace,
) -> Result<QuasiDiagonalOperator> {
    if cert.rows.is_empty() {
        return Err(Error::InvalidCertificate("certificate has no rows".to_string()));
    }
    let mut entries = Vec::with_capacity(cert.rows.len());
    let mut prev_i = 0u32;
    let mut prev_nu = 0u32;
    for row in &cert.rows {
        if row.i_n <= prev_i || row.nu_n <= prev_nu {
            return Err(Error::InvalidCertificate(format!(
                "indices not strictly increasing at row n={}",
                row.n
            )));
        }
        prev_i = row.i_n;
        prev_nu = row.nu_n;
        let fresh = make_row(domain, codomain, &cert.psi, &cert.phi, cert.m, row.n, row.i_n, row.nu_n)?;
        let scale = fresh.log_lhs.abs().max(fresh.log_rhs.abs()).max(1.0);
        if fresh.log_lhs + CHECK_TOL * scale < (row.n as f64).ln() + fresh.log_rhs {
            return Err(Error::InvalidCertificate(format!(
                "row n={} violates the failure inequality: lhs {} < ln n + rhs {}",
                row.n,
                fresh.log_lhs,
                (row.n as f64).ln() + fresh.log_rhs
            )));
        }
        entries.push(QdEntry {
            source: row.i_n,
            target: row.nu_n,
            log_scalar: -fresh.log_rhs,
        });
    }
    let op = QuasiDiagonalOperator::new(domain.clone(), codomain.clone(), entries)?;
    verify_qd_witness(&op, cert)?;
    Ok(op)
}

/// Independent re-check of a witness operator against its certificate:
/// the `≥ n` growth at the certificate grade and the `≤ 1` continuity
/// bounds at each dominated grade.
pub fn verify_qd_witness(
    op: &QuasiDiagonalOperator,
    cert: &FailureCertificate,
) -> Result<Vec<String>> {
    if op.entries().len() != cert.rows.len() {
        return Err(Error::InvalidCertificate(format!(
            "operator has {} entries, certificate {} rows",
            op.entries().len(),
            cert.rows.len()
        )));
    }
    let psi_m = cert.psi.eval(cert.m)?;
    for (entry, row) in op.entries().iter().zip(&cert.rows) {
        if entry.source != row.i_n || entry.target != row.nu_n {
            return Err(Error::InvalidCertificate(format!(
                "entry ({}, {}) does not match row n={} ({}, {})",
                entry.source, entry.target, row.n, row.i_n, row.nu_n
            )));
        }
        // Growth: log t + log b_{ν,m} - log a_{i,ψ(m)} ≥ ln n.
        let growth = op
            .entry_log_ratio(entry, cert.m, psi_m)?;
        let need = Wide::from_f64((row.n as f64).ln());
        let slack = need.abs().max(growth.abs()).max(Wide::from_f64(1.0)).scale(CHECK_TOL);
        if growth.add(slack) < need {
            return Err(Error::InvalidCertificate(format!(
                "row n={}: norm ratio {} fails to reach ln n = {}",
                row.n,
                growth.to_f64(),
                (row.n as f64).ln()
            )));
        }
        // Continuity: value at (q, φ(q)) is ≤ 0 for q ≤ n by construction.
        for q in 1..=row.n {
            let v = op.entry_log_ratio(entry, q, cert.phi.eval(q)?)?;
            let slack = v.abs().max(Wide::from_f64(1.0)).scale(CHECK_TOL);
            if v > slack {
                return Err(Error::InvalidCertificate(format!(
                    "row n={}: continuity bound fails at q={} (value {})",
                    row.n,
                    q,
                    v.to_f64()
                )));
            }
        }
    }
    Ok(vec![
        format!(
            "{} rows: norm-ratio growth >= n at grade m={} against psi={}",
            cert.rows.len(),
            cert.m,
            cert.psi
        ),
        format!("continuity bounds <= 1 at (q, phi(q)) for phi={}", cert.phi),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::built_in_phi_family;
    use crate::sequences::ExponentSequence;

    fn linf(text: &str) -> GradedSpace {
        GradedSpace::power_series_infinite(ExponentSequence::parse(text).unwrap())
    }

    fn l0(text: &str) -> GradedSpace {
        GradedSpace::power_series_finite(ExponentSequence::parse(text).unwrap())
    }

    #[test]
    fn single_row_always_exists_on_positive_matrices() {
        // n_target = 1 only needs a factor of 1.
        let domain = l0("n");
        let codomain = l0("n");
        let out = search_tameness_failure(
            &domain,
            &codomain,
            &MonotoneIntMap::parse("2k").unwrap(),
            &MonotoneIntMap::identity(),
            1,
            100,
        )
        .unwrap();
        let cert = out.found().expect("single row");
        assert_eq!(cert.rows.len(), 1);
        // A one-entry witness with ratio ≥ 1 builds and verifies.
        let op = build_qd_witness(cert, &domain, &codomain).unwrap();
        assert_eq!(op.entries().len(), 1);
    }

    #[test]
    fn non_tame_pair_yields_certificate() {
        let domain = linf("n");
        let codomain = l0("n");
        let psi = MonotoneIntMap::parse("k+1").unwrap();
        let search = search_over_phi_family(
            &domain,
            &codomain,
            &psi,
            &built_in_phi_family(),
            12,
            2000,
        )
        .unwrap();
        let cert = search.found.expect("non-tame pair must fail");
        assert_eq!(cert.rows.len(), 12);
        let op = build_qd_witness(&cert, &domain, &codomain).unwrap();
        assert_eq!(op.entries().len(), 12);
        // Growth ratios reproduce >= n per row.
        let psi_m = cert.psi.eval(cert.m).unwrap();
        for (entry, row) in op.entries().iter().zip(&cert.rows) {
            let ratio = op.entry_log_ratio(entry, cert.m, psi_m).unwrap().to_f64();
            assert!(ratio >= (row.n as f64).ln() - 1e-9);
        }
    }

    #[test]
    fn tame_pair_yields_no_certificate() {
        let domain = l0("n");
        let codomain = l0("n");
        let psi = MonotoneIntMap::parse("2k").unwrap();
        for phi in built_in_phi_family() {
            let out =
                search_tameness_failure(&domain, &codomain, &psi, &phi, 20, 2000).unwrap();
            assert!(out.found().is_none(), "phi={phi} should not certify failure");
        }
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let domain = linf("n");
        let codomain = l0("n");
        let psi = MonotoneIntMap::parse("k+1").unwrap();
        let cert = search_over_phi_family(
            &domain,
            &codomain,
            &psi,
            &built_in_phi_family(),
            6,
            500,
        )
        .unwrap()
        .found
        .unwrap();

        let mut broken = cert.clone();
        // Swap two source indices: no longer strictly increasing.
        broken.rows.swap(0, 1);
        assert!(build_qd_witness(&broken, &domain, &codomain).is_err());

        let mut forged = cert;
        // Claim the inequality at an index pair where it does not hold.
        forged.rows[0].i_n = forged.rows[1].i_n - 1;
        forged.rows[0].nu_n = 1;
        forged.rows[0].n = 6;
        let r = build_qd_witness(&forged, &domain, &codomain);
        assert!(matches!(r, Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn direct_path_matches_separable_on_matrices() {
        // The same finite-type space given as an explicit matrix must yield
        // the same greedy rows.
        let seq = ExponentSequence::parse("n").unwrap();
        let depth = 60u32;
        let grades = 24u32;
        let log_weights = (1..=depth)
            .map(|j| {
                (1..=grades)
                    .map(|k| -(seq.eval(j).unwrap()) / k as f64)
                    .collect()
            })
            .collect();
        let matrix = crate::spaces::KotheMatrix {
            rows: depth,
            grades,
            log_weights,
        };
        let kothe = GradedSpace::general_kothe(matrix, "kothe:n").unwrap();
        let psi = MonotoneIntMap::parse("2k").unwrap();
        let phi = MonotoneIntMap::identity();

        let fast = search_tameness_failure(&l0("n"), &l0("n"), &psi, &phi, 4, depth).unwrap();
        let slow = search_tameness_failure(&kothe, &kothe, &psi, &phi, 4, depth).unwrap();
        match (fast, slow) {
            (SearchOutcome::Found(a), SearchOutcome::Found(b)) => {
                let fa: Vec<(u32, u32)> = a.rows.iter().map(|r| (r.i_n, r.nu_n)).collect();
                let fb: Vec<(u32, u32)> = b.rows.iter().map(|r| (r.i_n, r.nu_n)).collect();
                assert_eq!(fa, fb);
                assert_eq!(a.m, b.m);
            }
            (SearchOutcome::NotFound { best_rows: a, .. }, SearchOutcome::NotFound { best_rows: b, .. }) => {
                assert_eq!(a, b);
            }
            other => panic!("paths disagree: {other:?}"),
        }
    }
}
