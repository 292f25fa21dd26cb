//! Command-line front end: parse space and sequence specs, run the
//! analyses, and emit deterministic JSON reports plus CSV plot data.
//!
//! Exit codes: 0 — analysis completed (whatever the verdict); 2 — a
//! certificate was refuted or failed verification; 1 — errors.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use tamepairs::classifier::{classify_pair, classify_product};
use tamepairs::operators::QuasiDiagonalOperator;
use tamepairs::ratio_analysis::{
    check_piszczek, estimate_limit_points, LimitPointParams, PiszczekParams,
};
use tamepairs::report::{to_canonical_json, to_canonical_json_pretty, to_csv, CsvField};
use tamepairs::witnesses::{
    build_infinite_type_witness, build_qd_witness, search_over_phi_family, InfiniteOutcome,
    InfiniteWitnessOptions, WitnessDocument,
};
use tamepairs::{
    built_in_phi_family, check_stability, Error, Execution, ExponentSequence, GradedSpace,
    KotheMatrix, MonotoneIntMap,
};

#[derive(Parser)]
#[command(
    name = "tamepairs",
    version,
    about = "Tameness analysis for pairs of power series and Köthe spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Write the JSON report to this path (it is always printed to stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write CSV plot data to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pretty-print the JSON report.
    #[arg(long)]
    pretty: bool,
    /// Partition grid scans across worker threads (results are identical).
    #[arg(long)]
    parallel: bool,
}

impl OutputArgs {
    fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Truncation depth; `TAMEPAIRS_DEPTH` overrides the default of 2000.
fn resolve_depth(depth: Option<u32>) -> u32 {
    depth
        .or_else(|| {
            std::env::var("TAMEPAIRS_DEPTH")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(2000)
}

#[derive(Subcommand)]
enum Command {
    /// Classify a pair of power series spaces against the tameness catalog.
    Classify {
        /// Domain space spec: `L0:<seq>`, `Linf:<seq>` or `kothe:<file>`.
        #[arg(long)]
        left: String,
        /// Codomain space spec.
        #[arg(long)]
        right: String,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 10.0)]
        cutoff: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classify a Cartesian product through its four operator blocks.
    Product {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 10.0)]
        cutoff: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stability of one exponent sequence.
    Stability {
        /// Sequence DSL, e.g. "n!", "ln(n+1)", "merge(n,n^2)".
        #[arg(long)]
        seq: String,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Finite limit points of the ratio family (beta_i/alpha_j).
    Limitpoints {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 10.0)]
        cutoff: f64,
        /// Clustering resolution (default: cutoff/1000).
        #[arg(long)]
        cluster_eps: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Truncated tameness-criterion constants C(N) for a Köthe pair.
    Piszczek {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        codomain: String,
        /// Grade map psi, e.g. "2k", "k+1".
        #[arg(long)]
        psi: String,
        /// Competitor grade map phi, e.g. "k", "k^2", "2^k".
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        /// Comma-separated depths; default "depth/4,depth/2,depth".
        #[arg(long)]
        depths: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Search a grade-map failure certificate and build its witness operator.
    WitnessQd {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        codomain: String,
        #[arg(long)]
        psi: String,
        /// Competitor map; omitted = try the built-in family k, k^2, 2^k.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, default_value_t = 20)]
        ntarget: u32,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build the infinite-type witness operator for a convex grade map S.
    WitnessInf {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        /// Grade map with non-decreasing gaps, e.g. "k^2".
        #[arg(long = "S", alias = "s")]
        s: String,
        #[arg(long, default_value_t = 5)]
        kmax: u32,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 5)]
        min_block: u32,
        #[arg(long, default_value_t = 16)]
        block_size: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Norm grid and continuity profile of a quasi-diagonal operator.
    CheckOp {
        /// Operator JSON: `{"domain": spec, "codomain": spec,`
        /// `"entries": [[i, m, log_t], ...]}`.
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        kmax: u32,
        #[arg(long, default_value_t = 8)]
        rmax: u32,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 0)]
        growth_window: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-check every inequality of a serialized witness or certificate.
    Verify {
        #[arg(long)]
        file: PathBuf,
    },
}

/// Parse `L0:<seq>` | `Linf:<seq>` | `kothe:<file>`.
fn parse_space_spec(text: &str) -> Result<GradedSpace> {
    if let Some(rest) = text.strip_prefix("L0:") {
        return Ok(GradedSpace::power_series_finite(
            ExponentSequence::parse(rest).with_context(|| format!("in space spec {text:?}"))?,
        ));
    }
    if let Some(rest) = text.strip_prefix("Linf:") {
        return Ok(GradedSpace::power_series_infinite(
            ExponentSequence::parse(rest).with_context(|| format!("in space spec {text:?}"))?,
        ));
    }
    if let Some(path) = text.strip_prefix("kothe:") {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading Köthe matrix from {path}"))?;
        let matrix: KotheMatrix =
            serde_json::from_str(&raw).with_context(|| format!("parsing {path}"))?;
        return Ok(GradedSpace::general_kothe(matrix, text)?);
    }
    Err(anyhow!(
        "space spec must start with \"L0:\", \"Linf:\" or \"kothe:\" (got {text:?})"
    ))
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: C,
    report: R,
}

fn emit<C: Serialize, R: Serialize>(
    command: &str,
    config: C,
    report: R,
    out: &OutputArgs,
    csv: Option<String>,
) -> Result<()> {
    let doc = Report {
        command,
        config,
        report,
    };
    let rendered = if out.pretty {
        to_canonical_json_pretty(&doc)?
    } else {
        to_canonical_json(&doc)?
    };
    println!("{rendered}");
    if let Some(path) = &out.json {
        std::fs::write(path, &rendered).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &out.csv {
        let data = csv.ok_or_else(|| anyhow!("this command produces no CSV data"))?;
        std::fs::write(path, data).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Classify {
            left,
            right,
            depth,
            cutoff,
            out,
        } => {
            let depth = resolve_depth(depth);
            let l = parse_space_spec(&left)?;
            let r = parse_space_spec(&right)?;
            let report = classify_pair(&l, &r, depth, cutoff, out.execution())?;
            let config = serde_json::json!({
                "left": left, "right": right, "depth": depth, "cutoff": cutoff,
                "parallel": out.parallel,
            });
            emit("classify", config, report, &out, None)?;
            Ok(0)
        }
        Command::Product {
            left,
            right,
            depth,
            cutoff,
            out,
        } => {
            let depth = resolve_depth(depth);
            let l = parse_space_spec(&left)?;
            let r = parse_space_spec(&right)?;
            let report = classify_product(&l, &r, depth, cutoff, out.execution())?;
            let config = serde_json::json!({
                "left": left, "right": right, "depth": depth, "cutoff": cutoff,
                "parallel": out.parallel,
            });
            emit("product", config, report, &out, None)?;
            Ok(0)
        }
        Command::Stability { seq, depth, out } => {
            let depth = resolve_depth(depth);
            let s = ExponentSequence::parse(&seq)?;
            let report = check_stability(&s, depth)?;
            let config = serde_json::json!({ "seq": seq, "depth": depth });
            emit("stability", config, report, &out, None)?;
            Ok(0)
        }
        Command::Limitpoints {
            beta,
            alpha,
            depth,
            cutoff,
            cluster_eps,
            out,
        } => {
            let depth = resolve_depth(depth);
            let b = ExponentSequence::parse(&beta)?;
            let a = ExponentSequence::parse(&alpha)?;
            let mut params = LimitPointParams::new(depth, cutoff).with_execution(out.execution());
            if let Some(eps) = cluster_eps {
                params = params.with_eps(eps);
            }
            let est = estimate_limit_points(&b, &a, &params)?;
            let csv = to_csv(
                &["center", "mass"],
                &est.clusters
                    .iter()
                    .map(|c| vec![CsvField::Float(c.center), CsvField::UInt(c.mass)])
                    .collect::<Vec<_>>(),
            );
            let config = serde_json::json!({
                "beta": beta, "alpha": alpha, "depth": depth, "cutoff": cutoff,
                "cluster_eps": params.cluster_eps, "parallel": out.parallel,
            });
            emit("limitpoints", config, est, &out, Some(csv))?;
            Ok(0)
        }
        Command::Piszczek {
            domain,
            codomain,
            psi,
            phi,
            m,
            nmax,
            depths,
            depth,
            out,
        } => {
            let depth = resolve_depth(depth);
            let d = parse_space_spec(&domain)?;
            let c = parse_space_spec(&codomain)?;
            let psi_map = MonotoneIntMap::parse(&psi)?;
            let phi_map = MonotoneIntMap::parse(&phi)?;
            let depth_list: Vec<u32> = match &depths {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse::<u32>())
                    .collect::<std::result::Result<_, _>>()
                    .context("parsing --depths")?,
                None => vec![(depth / 4).max(1), (depth / 2).max(2), depth],
            };
            let params = PiszczekParams {
                m,
                n_max: nmax,
                depths: depth_list.clone(),
                execution: out.execution(),
            };
            let run = check_piszczek(&d, &c, &psi_map, &phi_map, &params)?;
            let csv = to_csv(
                &["depth", "n_used", "log_c"],
                &run.constants
                    .iter()
                    .map(|s| {
                        vec![
                            CsvField::UInt(s.depth as u64),
                            CsvField::UInt(s.n_used as u64),
                            CsvField::Float(s.log_c),
                        ]
                    })
                    .collect::<Vec<_>>(),
            );
            let config = serde_json::json!({
                "domain": domain, "codomain": codomain, "psi": psi, "phi": phi,
                "m": m, "nmax": nmax, "depths": depth_list, "parallel": out.parallel,
            });
            emit("piszczek", config, run, &out, Some(csv))?;
            Ok(0)
        }
        Command::WitnessQd {
            domain,
            codomain,
            psi,
            phi,
            ntarget,
            depth,
            out,
        } => {
            let depth = resolve_depth(depth);
            let d = parse_space_spec(&domain)?;
            let c = parse_space_spec(&codomain)?;
            let psi_map = MonotoneIntMap::parse(&psi)?;
            let phis = match &phi {
                Some(p) => vec![MonotoneIntMap::parse(p)?],
                None => built_in_phi_family(),
            };
            let search = search_over_phi_family(&d, &c, &psi_map, &phis, ntarget, depth)?;
            let config = serde_json::json!({
                "domain": domain, "codomain": codomain, "psi": psi,
                "phi": phi, "ntarget": ntarget, "depth": depth,
            });
            match &search.found {
                Some(cert) => {
                    let operator = build_qd_witness(cert, &d, &c)?;
                    let csv = to_csv(
                        &["n", "i_n", "nu_n", "log_lhs", "log_rhs"],
                        &cert
                            .rows
                            .iter()
                            .map(|r| {
                                vec![
                                    CsvField::UInt(r.n as u64),
                                    CsvField::UInt(r.i_n as u64),
                                    CsvField::UInt(r.nu_n as u64),
                                    CsvField::Float(r.log_lhs),
                                    CsvField::Float(r.log_rhs),
                                ]
                            })
                            .collect::<Vec<_>>(),
                    );
                    let doc = WitnessDocument::QdWitness {
                        certificate: cert.clone(),
                        operator,
                    };
                    let report = serde_json::json!({
                        "attempts": search.attempts,
                        "document": doc,
                    });
                    emit("witness-qd", config, report, &out, Some(csv))?;
                }
                None => {
                    let report = serde_json::json!({
                        "attempts": search.attempts,
                        "document": null,
                    });
                    let csv = to_csv(&["n", "i_n", "nu_n", "log_lhs", "log_rhs"], &[]);
                    emit("witness-qd", config, report, &out, Some(csv))?;
                }
            }
            Ok(0)
        }
        Command::WitnessInf {
            alpha,
            beta,
            s,
            kmax,
            depth,
            min_block,
            block_size,
            out,
        } => {
            let depth = resolve_depth(depth);
            let a = ExponentSequence::parse(&alpha)?;
            let b = ExponentSequence::parse(&beta)?;
            let s_map = MonotoneIntMap::parse(&s)?;
            let options = InfiniteWitnessOptions {
                min_block,
                block_size,
            };
            let outcome = build_infinite_type_witness(&a, &b, &s_map, kmax, depth, options)?;
            let config = serde_json::json!({
                "alpha": alpha, "beta": beta, "S": s, "kmax": kmax, "depth": depth,
                "min_block": min_block, "block_size": block_size,
            });
            match outcome {
                InfiniteOutcome::Witness(w) => {
                    let mut rows = Vec::new();
                    for block in &w.blocks {
                        for &(n, _) in &block.members {
                            rows.push(vec![
                                CsvField::UInt(block.k as u64),
                                CsvField::UInt(n as u64),
                                CsvField::Float(w.alpha.eval(n)?),
                                CsvField::Float(block.lo * w.alpha.eval(n)?),
                            ]);
                        }
                    }
                    let csv = to_csv(&["k", "n", "alpha_n", "log_growth"], &rows);
                    let doc = WitnessDocument::InfiniteType { witness: w };
                    emit("witness-inf", config, doc, &out, Some(csv))?;
                }
                InfiniteOutcome::NotFound { blocks_found } => {
                    let report = serde_json::json!({
                        "found": false,
                        "blocks_found": blocks_found,
                    });
                    let csv = to_csv(&["k", "n", "alpha_n", "log_growth"], &[]);
                    emit("witness-inf", config, report, &out, Some(csv))?;
                }
            }
            Ok(0)
        }
        Command::CheckOp {
            file,
            kmax,
            rmax,
            depth,
            growth_window,
            out,
        } => {
            let depth = resolve_depth(depth);
            let op = read_operator(&file)?;
            let profile = op.continuity_characteristic(kmax, rmax, depth, growth_window)?;
            let mut rows = Vec::new();
            for g in &profile.grades {
                for s in &g.norm_curve {
                    rows.push(vec![
                        CsvField::UInt(g.k as u64),
                        CsvField::UInt(s.r as u64),
                        CsvField::Float(s.log_norm.to_f64()),
                        CsvField::Text(if s.diverging { "diverging" } else { "bounded" }.to_string()),
                    ]);
                }
            }
            let csv = to_csv(&["k", "r", "log_norm", "tail"], &rows);
            let config = serde_json::json!({
                "file": file.display().to_string(), "kmax": kmax, "rmax": rmax,
                "depth": depth, "growth_window": growth_window,
            });
            emit("check-op", config, profile, &out, Some(csv))?;
            Ok(0)
        }
        Command::Verify { file } => {
            let raw = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let doc: WitnessDocument = serde_json::from_str(&raw)
                .with_context(|| format!("parsing {}", file.display()))?;
            match doc.verify() {
                Ok(checks) => {
                    for line in checks {
                        println!("ok: {line}");
                    }
                    Ok(0)
                }
                Err(e @ Error::InvalidCertificate(_)) => {
                    eprintln!("verification failed: {e}");
                    Ok(2)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Operator JSON with string space specs.
fn read_operator(path: &Path) -> Result<QuasiDiagonalOperator> {
    #[derive(serde::Deserialize)]
    struct OpFile {
        domain: String,
        codomain: String,
        entries: Vec<(u32, u32, f64)>,
    }
    let raw =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: OpFile = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
    let domain = parse_space_spec(&spec.domain)?;
    let codomain = parse_space_spec(&spec.codomain)?;
    let entries = spec
        .entries
        .into_iter()
        .map(|(source, target, log_scalar)| tamepairs::operators::QdEntry {
            source,
            target,
            log_scalar,
        })
        .collect();
    Ok(QuasiDiagonalOperator::new(domain, codomain, entries)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            // Refuted / invalid-certificate outcomes exit 2; other errors 1.
            if let Some(Error::InvalidCertificate(_)) = e.downcast_ref::<Error>() {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
