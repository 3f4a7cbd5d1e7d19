//! Library half of the sigmak command-line tool: configuration handling,
//! the four commands, and artifact writers. The binary in main.rs is a
//! thin argument-parsing wrapper so tests can call commands directly.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 non-convergence,
//! 3 negative verification (intersection test rejected the background).

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sigmak_core::{
    beta0, c_kn, c_kn_printed, fredholm_probe, indicial_roots, intersection_check, newton_solve,
    write_csv, GridFunction,
};

pub use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn usage_from_core(e: sigmak_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        1
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Io(format!("cannot create output directory {}: {e}", dir.display()))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// One row of the identities table.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub n: usize,
    pub k: usize,
    pub beta0: f64,
    pub c_kn: f64,
    pub c_kn_printed: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// True where the alternating-sum value and the quoted closed form for
    /// c_{k,n} disagree.
    pub mismatch: bool,
}

/// Model-constant table for n = 2..=n_max, all k, with indicial roots at
/// beta = beta_k^0 and the c_{k,n} disagreement flag.
pub fn identity_rows(n_max: usize) -> Result<Vec<IdentityRow>, CliError> {
    if !(2..=12).contains(&n_max) {
        return Err(CliError::Usage(format!("nmax must lie in 2..=12, got {n_max}")));
    }
    let mut rows = Vec::new();
    for n in 2..=n_max {
        for k in 1..=n + 1 {
            let b0 = beta0(n, k).map_err(CliError::usage_from_core)?;
            let c = c_kn(n, k).map_err(CliError::usage_from_core)?;
            let cp = c_kn_printed(n, k).map_err(CliError::usage_from_core)?;
            let d = indicial_roots(n, k, b0).map_err(CliError::usage_from_core)?;
            rows.push(IdentityRow {
                n,
                k,
                beta0: b0,
                c_kn: c,
                c_kn_printed: cp,
                gamma_minus: d.gamma_minus,
                gamma_plus: d.gamma_plus,
                mismatch: c != cp,
            });
        }
    }
    Ok(rows)
}

pub fn identities_csv(rows: &[IdentityRow]) -> String {
    let mut out = String::from("n,k,beta0,c_kn,c_kn_printed,gamma_minus,gamma_plus,mismatch\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.n, r.k, r.beta0, r.c_kn, r.c_kn_printed, r.gamma_minus, r.gamma_plus, r.mismatch
        ));
    }
    out
}

pub fn cmd_identities(n_max: usize, out_dir: Option<PathBuf>) -> Result<i32, CliError> {
    let rows = identity_rows(n_max)?;
    let dir = config::resolve_output_dir(out_dir);
    ensure_dir(&dir)?;
    let path = dir.join("identities.csv");
    write_text(&path, &identities_csv(&rows))?;
    let flagged = rows.iter().filter(|r| r.mismatch).count();
    println!(
        "identities: wrote {} rows to {} ({flagged} rows flag a c_kn mismatch)",
        rows.len(),
        path.display()
    );
    Ok(0)
}

fn write_solution_csv(path: &Path, u: &GridFunction) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_csv(u, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, buf).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_solve(config_path: &Path) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let problem = cfg.problem()?;
    let params = cfg.solver_params()?;
    let u0 = GridFunction::zeros(problem.grid().clone());
    let report = newton_solve(&problem, &params, &u0).map_err(CliError::usage_from_core)?;

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let report_path = dir.join("report.json");
    write_text(&report_path, &report.to_json_string())?;
    let solution_path = dir.join("solution.csv");
    write_solution_csv(&solution_path, &report.u)?;

    println!(
        "solve: n={} k={} beta={:.6} converged={} iterations={} residual={:.3e} decay={:?}",
        report.n,
        report.k,
        report.beta,
        report.converged,
        report.iterations,
        report.residual_history.last().unwrap(),
        report.decay_estimate,
    );
    println!("solve: wrote {} and {}", report_path.display(), solution_path.display());
    Ok(if report.converged { 0 } else { 2 })
}

#[derive(Serialize)]
struct ProbeRow {
    gamma: f64,
    weighted_norm: Option<f64>,
    log_flag: bool,
}

#[derive(Serialize)]
struct ProbeDocument {
    n: usize,
    k: usize,
    beta: f64,
    rows: Vec<ProbeRow>,
}

pub fn cmd_probe(config_path: &Path, gammas: &[f64]) -> Result<i32, CliError> {
    if gammas.is_empty() {
        return Err(CliError::Usage("probe requires at least one --gamma value".into()));
    }
    let cfg = RunConfig::load(config_path)?;
    let problem = cfg.problem()?;
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let rep = fredholm_probe(&problem, gamma).map_err(CliError::usage_from_core)?;
        println!(
            "probe: gamma={:+.4} weighted_norm={:?} log_flag={} singular={}",
            rep.gamma, rep.weighted_norm, rep.log_flag, rep.singular
        );
        rows.push(ProbeRow {
            gamma: rep.gamma,
            weighted_norm: rep.weighted_norm,
            log_flag: rep.log_flag,
        });
    }
    let doc = ProbeDocument {
        n: problem.n(),
        k: problem.k(),
        beta: problem.beta(),
        rows,
    };
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let path = dir.join("probe.json");
    write_text(&path, &serde_json::to_string_pretty(&doc).expect("probe serialization"))?;
    println!("probe: wrote {}", path.display());
    Ok(0)
}

pub fn cmd_intersect(config_path: &Path) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let bg = cfg.background()?;
    let grid = cfg.grid()?;
    let report = intersection_check(&bg, &grid).map_err(CliError::usage_from_core)?;

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let path = dir.join("intersect.json");
    write_text(&path, &serde_json::to_string_pretty(&report).expect("report serialization"))?;

    for row in &report.rows {
        if row.constant {
            println!("intersect: k={} constant at {:+.6} (deviation {:.2e})",
                row.k, row.target, row.max_deviation);
        } else {
            println!(
                "intersect: k={} NOT constant: deviation {:.3e} at node {}",
                row.k, row.max_deviation, row.worst_node
            );
        }
    }
    println!(
        "intersect: einstein={} spread={:?}; wrote {}",
        report.einstein,
        report.eigen_spread,
        path.display()
    );
    Ok(if report.einstein { 0 } else { 3 })
}

/// Flush stdout before the process exits through `std::process::exit`.
pub fn flush_stdout() {
    let _ = std::io::stdout().flush();
}
