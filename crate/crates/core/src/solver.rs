//! Damped Newton solution of F_k = 0 with a cone guard, continuation in
//! the slice amplitude, Fredholm-window probes of the linearization, and
//! the Poincare-Einstein intersection checker.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{beta0, is_einstein, schouten_center, schouten_eigs_warped, SchoutenEigs,
    WarpedBackground};
use crate::grid::{d1, d2, decay_rate, least_squares_slope, weighted_sup_norm, GridFunction,
    RadialGrid};
use crate::operator::{linearize, residual, SigmaProblem};
use crate::par;
use crate::symfunc::{all_sigmas_positive, eigs_from_sigmas, Spectrum};

/// Sup deviation below which a sigma_k profile counts as constant in the
/// intersection checker, and the Einstein tolerance used with it.
const INTERSECTION_TOL: f64 = 1e-8;

/// Newton iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    /// Sup-norm residual target over the unknown nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest line-search fraction before the step counts as failed.
    pub min_step: f64,
    /// Reject steps whose shifted spectrum leaves Gamma_k^+ at any node.
    pub cone_guard: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-10,
            max_iter: 25,
            min_step: 1.0 / 64.0,
            cone_guard: true,
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::domain("solver tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        if self.min_step.is_nan() || self.min_step <= 0.0 || self.min_step > 1.0 {
            return Err(Error::domain("min_step must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Newton convergence record.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Sup residual before iteration and after each accepted step.
    pub residual_history: Vec<f64>,
    pub u: GridFunction,
    /// Tail decay exponent of u; None when u is below the truncation floor
    /// everywhere (the trivial solve).
    pub decay_estimate: Option<f64>,
    /// Whether every accepted iterate kept its spectrum in Gamma_k^+.
    pub cone_ok: bool,
    pub beta: f64,
    pub n: usize,
    pub k: usize,
}

#[derive(Serialize)]
struct SolveReportJson<'a> {
    converged: bool,
    iterations: usize,
    residual_history: &'a [f64],
    beta: f64,
    k: usize,
    n: usize,
    decay_estimate: Option<f64>,
    cone_ok: bool,
}

impl SolveReport {
    /// JSON document with the fixed report schema.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SolveReportJson {
            converged: self.converged,
            iterations: self.iterations,
            residual_history: &self.residual_history,
            beta: self.beta,
            k: self.k,
            n: self.n,
            decay_estimate: self.decay_estimate,
            cone_ok: self.cone_ok,
        })
        .expect("report serialization cannot fail")
    }
}

/// Sup norm of the residual over the unknown nodes 0..N-1.
fn unknown_sup(r: &GridFunction) -> f64 {
    let v = r.values();
    v[..v.len() - 1].iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// True when the shifted spectrum lies in Gamma_k^+ at every unknown node.
fn spectra_in_cone(p: &SigmaProblem, u: &GridFunction) -> bool {
    let du = d1(u);
    let ddu = d2(u);
    let n = p.n();
    let k = p.k();
    let mut buf = vec![0.0; n + 1];
    for i in 0..u.len() - 1 {
        let (br, bt) = p.shifted_pair(i, du.values()[i], ddu.values()[i]);
        buf[0] = br;
        buf[1..].fill(bt);
        if !all_sigmas_positive(&buf, k) {
            return false;
        }
    }
    true
}

/// Damped Newton iteration on u with Dirichlet updates (delta(T) = 0, so the
/// boundary value of u0 is preserved) and even reflection at the center.
/// Steps halve until the sup residual decreases, and with the cone guard
/// enabled also until the shifted spectrum stays in Gamma_k^+.
pub fn newton_solve(p: &SigmaProblem, params: &SolverParams, u0: &GridFunction) -> Result<SolveReport> {
    params.validate()?;
    let mut u = u0.clone();
    let mut r = residual(p, &u)?;
    let mut rn = unknown_sup(&r);
    let mut history = vec![rn];
    let mut cone_ok = spectra_in_cone(p, &u);
    let mut iterations = 0;
    let mut converged = rn <= params.tol;

    while !converged && iterations < params.max_iter {
        let op = linearize(p, &u)?;
        let unknowns = op.len();
        let rhs: Vec<f64> = r.values()[..unknowns].iter().map(|v| -v).collect();
        let delta = op.solve(&rhs)?;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= params.min_step {
            let mut trial = u.clone();
            for (i, d) in delta.iter().enumerate() {
                trial.values_mut()[i] += step * d;
            }
            if params.cone_guard && !spectra_in_cone(p, &trial) {
                step *= 0.5;
                continue;
            }
            let r_trial = residual(p, &trial)?;
            let rn_trial = unknown_sup(&r_trial);
            if rn_trial < rn {
                u = trial;
                r = r_trial;
                rn = rn_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        history.push(rn);
        cone_ok = cone_ok && spectra_in_cone(p, &u);
        converged = rn <= params.tol;
    }

    let decay_estimate = decay_rate(&u, 0.25).ok();
    Ok(SolveReport {
        converged,
        iterations,
        residual_history: history,
        u,
        decay_estimate,
        cone_ok,
        beta: p.beta(),
        n: p.n(),
        k: p.k(),
    })
}

/// One continuation stage: the amplitude it ran at and its report.
#[derive(Debug, Clone)]
pub struct ContinuationStage {
    pub amplitude: f64,
    pub report: SolveReport,
}

/// Continuation outcome; `failed_at` names the first amplitude whose solve
/// did not converge (its partial report is the last stage).
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub stages: Vec<ContinuationStage>,
    pub failed_at: Option<f64>,
}

/// Walks the solution graph over the slice amplitude, warm-starting each
/// solve from the previous stage. Amplitudes must be sorted by |a|.
pub fn continuation(
    template: &SigmaProblem,
    amplitudes: &[f64],
    params: &SolverParams,
) -> Result<ContinuationReport> {
    if amplitudes.windows(2).any(|w| w[0].abs() > w[1].abs()) {
        return Err(Error::domain("amplitudes must be sorted by |a| ascending"));
    }
    let mut stages = Vec::with_capacity(amplitudes.len());
    let mut failed_at = None;
    let mut warm: Option<GridFunction> = None;
    for &a in amplitudes {
        let bg = WarpedBackground::perturbed(template.n(), a)?;
        let p = SigmaProblem::new(bg, template.grid().clone(), template.k(), template.beta())?;
        let u0 = warm
            .clone()
            .unwrap_or_else(|| GridFunction::zeros(template.grid().clone()));
        let report = newton_solve(&p, params, &u0)?;
        let ok = report.converged;
        if ok {
            warm = Some(report.u.clone());
        }
        stages.push(ContinuationStage {
            amplitude: a,
            report,
        });
        if !ok {
            failed_at = Some(a);
            break;
        }
    }
    Ok(ContinuationReport { stages, failed_at })
}

/// Fredholm probe outcome at one weight.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub gamma: f64,
    /// Weighted sup norm of the solution; None when the solve was singular.
    pub weighted_norm: Option<f64>,
    /// True when the tail profile v x^{-gamma} grows like log x, the
    /// signature of hitting an indicial root.
    pub log_flag: bool,
    pub singular: bool,
}

/// Smooth cutoff: 0 below t = 1, 1 above t = 2 (quintic bridge).
fn cutoff(t: f64) -> f64 {
    let s = ((t - 1.0) / 1.0).clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Solves the model linearization against x^gamma (cut off near the center)
/// and inspects the tail for the log factor that signals an indicial root.
///
/// Detection: on the window t in [max(2, T/4), T-2], normalize both the
/// profile w = v x^{-gamma} and the log x axis to unit scale and fit slopes
/// on each half. A log factor keeps |slope| > 0.5 on both halves with one
/// sign; power-law transients from nearby indicial roots are one-sided.
pub fn fredholm_probe(p: &SigmaProblem, gamma: f64) -> Result<ProbeReport> {
    if !gamma.is_finite() {
        return Err(Error::domain("gamma must be finite"));
    }
    let grid = p.grid().clone();
    let u0 = GridFunction::zeros(grid.clone());
    let op = linearize(p, &u0)?.with_weight(gamma);
    let rhs: Vec<f64> = (0..op.len())
        .map(|i| {
            let t = grid.t(i);
            (-gamma * t).exp() * cutoff(t)
        })
        .collect();
    let v = match op.solve(&rhs) {
        Ok(v) => v,
        Err(Error::SingularLinearization { .. }) => {
            return Ok(ProbeReport {
                gamma,
                weighted_norm: None,
                log_flag: false,
                singular: true,
            });
        }
        Err(e) => return Err(e),
    };
    let mut padded = v;
    padded.push(0.0);
    let vf = GridFunction::from_values(grid.clone(), padded)?;
    let norm = weighted_sup_norm(&vf, gamma, 0)?;

    let t0 = (grid.t_max() / 4.0).max(2.0);
    let t1 = grid.t_max() - 2.0;
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for i in 0..vf.len() {
        let t = grid.t(i);
        if t >= t0 && t <= t1 {
            ts.push(t);
            ws.push(vf.values()[i] * (gamma * t).exp());
        }
    }
    if ts.len() < 8 {
        return Err(Error::domain(format!(
            "truncation radius {} leaves no tail window for the probe fit",
            grid.t_max()
        )));
    }
    let wmax = ws.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let span = ts[ts.len() - 1] - ts[0];
    let log_flag = if wmax > 0.0 && span > 0.0 {
        let start = ts[0];
        let xi: Vec<f64> = ts.iter().map(|t| (t - start) / span).collect();
        let wh: Vec<f64> = ws.iter().map(|w| w / wmax).collect();
        let half = xi.iter().position(|&x| x >= 0.5).unwrap_or(xi.len() / 2);
        let early = least_squares_slope(&xi[..half], &wh[..half]);
        let late = least_squares_slope(&xi[half..], &wh[half..]);
        early.abs() > 0.5 && late.abs() > 0.5 && early * late > 0.0
    } else {
        false
    };
    Ok(ProbeReport {
        gamma,
        weighted_norm: Some(norm),
        log_flag,
        singular: false,
    })
}

/// Per-level constancy record for the intersection checker.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaConstancyRow {
    pub k: usize,
    /// Target value (-1)^k beta_k^0.
    pub target: f64,
    pub max_deviation: f64,
    pub worst_node: usize,
    pub constant: bool,
}

/// Outcome of the Poincare-Einstein intersection test: the background lies
/// in every Sigma_k(beta_k^0) iff all sigma_k profiles are constant at the
/// model values, in which case the reconstructed Schouten spectrum must be
/// isotropic.
#[derive(Debug, Clone, Serialize)]
pub struct IntersectionReport {
    pub rows: Vec<SigmaConstancyRow>,
    pub all_constant: bool,
    pub eigen_spread: Option<f64>,
    pub eigenvalues: Option<Vec<f64>>,
    pub einstein: bool,
}

/// Evaluates sigma_k(A_g) on the grid for every k = 1..n+1 and tests the
/// characteristic-polynomial reconstruction when all profiles are constant.
pub fn intersection_check(bg: &WarpedBackground, grid: &Arc<RadialGrid>) -> Result<IntersectionReport> {
    let n = bg.n();
    let nodes = grid.num_nodes();
    let center = schouten_center(bg);
    let mut spectra = Vec::with_capacity(nodes);
    spectra.push(center);
    for i in 1..nodes {
        spectra.push(schouten_eigs_warped(bg, grid.t(i))?);
    }

    let mut rows = Vec::with_capacity(n + 1);
    let mut means = Vec::with_capacity(n + 1);
    for k in 1..=n + 1 {
        let target = if k % 2 == 0 { 1.0 } else { -1.0 } * beta0(n, k)?;
        let values = par::map_indexed(nodes, |i| {
            let a = &spectra[i];
            crate::operator::sigma_pair(n, k, a.lam_r, a.lam_t)
        });
        let mut max_deviation = 0.0f64;
        let mut worst_node = 0;
        let mut sum = 0.0;
        for (i, v) in values.iter().enumerate() {
            sum += v;
            let dev = (v - target).abs();
            if dev > max_deviation {
                max_deviation = dev;
                worst_node = i;
            }
        }
        means.push(sum / nodes as f64);
        rows.push(SigmaConstancyRow {
            k,
            target,
            max_deviation,
            worst_node,
            constant: max_deviation <= INTERSECTION_TOL,
        });
    }

    let all_constant = rows.iter().all(|r| r.constant);
    if !all_constant {
        return Ok(IntersectionReport {
            rows,
            all_constant,
            eigen_spread: None,
            eigenvalues: None,
            einstein: false,
        });
    }
    let spectrum = eigs_from_sigmas(&means)?;
    let sorted = spectrum.sorted();
    let spread = sorted[sorted.len() - 1] - sorted[0];
    let einstein = is_einstein(
        &SchoutenEigs {
            lam_r: sorted[0],
            lam_t: sorted[sorted.len() - 1],
            t: 0.0,
        },
        INTERSECTION_TOL,
    );
    Ok(IntersectionReport {
        rows,
        all_constant,
        eigen_spread: Some(spread),
        eigenvalues: Some(sorted),
        einstein,
    })
}

/// Shifted spectrum (b_r, b_t x n) of a conformal factor at one node, for
/// callers that assert cone membership of solver output.
pub fn shifted_spectrum_at(p: &SigmaProblem, u: &GridFunction, i: usize) -> Result<Spectrum> {
    let du = d1(u);
    let ddu = d2(u);
    let (br, bt) = p.shifted_pair(i, du.values()[i], ddu.values()[i]);
    let mut v = vec![bt; p.n() + 1];
    v[0] = br;
    Spectrum::new(v)
}
