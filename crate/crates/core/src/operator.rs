//! The sigma_k-Yamabe residual F_k, its exact linearization as a
//! tridiagonal operator, the normal-operator coefficients, and indicial
//! root analysis for the Fredholm window.
//!
//! Radial reduction: for u = u(t) on dt^2 + phi^2 g_{S^n}, the argument of
//! sigma_k in F_k has the two-eigenvalue spectrum
//!   b_r = u'' - u'^2/2 - lam_r,
//!   b_t = u' phi'/phi + u'^2/2 - lam_t   (multiplicity n),
//! and F_k(u) = sigma_k(b) - beta e^{2ku}. At the center u' phi'/phi is
//! replaced by its limit u''(0).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    beta0, binomial, c_kn, schouten_center, schouten_eigs_warped, WarpedBackground,
};
use crate::grid::{d1, d2, GridFunction, RadialGrid};
use crate::par;

/// A sigma_k deformation problem: level k with constant beta on a warped
/// background, discretized on a radial grid. Background curvature data is
/// precomputed per node at construction.
#[derive(Debug, Clone)]
pub struct SigmaProblem {
    n: usize,
    k: usize,
    beta: f64,
    bg: WarpedBackground,
    grid: Arc<RadialGrid>,
    lam_r: Vec<f64>,
    lam_t: Vec<f64>,
    /// phi'/phi at each node; entry 0 is unused (center limit applies).
    warp_ratio: Vec<f64>,
}

impl SigmaProblem {
    pub fn new(bg: WarpedBackground, grid: Arc<RadialGrid>, k: usize, beta: f64) -> Result<Self> {
        let n = bg.n();
        if k == 0 || k > n + 1 {
            return Err(Error::domain(format!("k={k} out of range 1..={}", n + 1)));
        }
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::domain(format!("beta={beta} must be positive")));
        }
        let nodes = grid.num_nodes();
        let mut lam_r = vec![0.0; nodes];
        let mut lam_t = vec![0.0; nodes];
        let mut warp_ratio = vec![0.0; nodes];
        let center = schouten_center(&bg);
        lam_r[0] = center.lam_r;
        lam_t[0] = center.lam_t;
        for i in 1..nodes {
            let t = grid.t(i);
            let a = schouten_eigs_warped(&bg, t)?;
            lam_r[i] = a.lam_r;
            lam_t[i] = a.lam_t;
            warp_ratio[i] = bg.dphi(t) / bg.phi(t);
        }
        Ok(SigmaProblem {
            n,
            k,
            beta,
            bg,
            grid,
            lam_r,
            lam_t,
            warp_ratio,
        })
    }

    /// Problem at the hyperbolic model constant beta_k^0.
    pub fn at_model_constant(bg: WarpedBackground, grid: Arc<RadialGrid>, k: usize) -> Result<Self> {
        let beta = beta0(bg.n(), k)?;
        SigmaProblem::new(bg, grid, k, beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn background(&self) -> &WarpedBackground {
        &self.bg
    }

    pub fn background_eigs(&self, i: usize) -> (f64, f64) {
        (self.lam_r[i], self.lam_t[i])
    }

    /// Shifted spectrum (b_r, b_t) entering sigma_k at node i.
    pub(crate) fn shifted_pair(&self, i: usize, du: f64, ddu: f64) -> (f64, f64) {
        let half_sq = 0.5 * du * du;
        let br = ddu - half_sq - self.lam_r[i];
        let bt = if i == 0 {
            ddu + half_sq - self.lam_t[0]
        } else {
            du * self.warp_ratio[i] + half_sq - self.lam_t[i]
        };
        (br, bt)
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if u.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::dimension("grid function does not live on the problem grid"));
        }
        Ok(())
    }
}

/// sigma_k of the two-eigenvalue spectrum (br, bt x n):
/// C(n,k) bt^k + C(n,k-1) br bt^{k-1}.
pub(crate) fn sigma_pair(n: usize, k: usize, br: f64, bt: f64) -> f64 {
    let btk1 = bt.powi(k as i32 - 1);
    binomial(n, k) * btk1 * bt + binomial(n, k - 1) * br * btk1
}

/// Partial derivatives of sigma_pair: (d/d br, summed d/d bt over the n
/// tangential slots). These are the diagonal entries of T_{k-1}(b).
pub(crate) fn sigma_pair_gradient(n: usize, k: usize, br: f64, bt: f64) -> (f64, f64) {
    let btk1 = bt.powi(k as i32 - 1);
    let s_r = binomial(n, k - 1) * btk1;
    let s_t = if k >= 2 {
        let btk2 = bt.powi(k as i32 - 2);
        n as f64 * (binomial(n - 1, k - 1) * btk1 + binomial(n - 1, k - 2) * br * btk2)
    } else {
        n as f64
    };
    (s_r, s_t)
}

fn scan_finite(values: &[f64], context: &'static str) -> Result<()> {
    if let Some(node) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node, context });
    }
    Ok(())
}

fn residual_values(p: &SigmaProblem, u: &GridFunction, parallel: bool) -> Result<Vec<f64>> {
    p.check_grid(u)?;
    let du = d1(u);
    let ddu = d2(u);
    scan_finite(du.values(), "residual derivatives")?;
    scan_finite(ddu.values(), "residual derivatives")?;
    let uv = u.values();
    let duv = du.values();
    let dduv = ddu.values();
    let twok = 2.0 * p.k as f64;
    let node = |i: usize| -> f64 {
        let (br, bt) = p.shifted_pair(i, duv[i], dduv[i]);
        sigma_pair(p.n, p.k, br, bt) - p.beta * (twok * uv[i]).exp()
    };
    let values = if parallel {
        par::map_indexed(uv.len(), node)
    } else {
        par::map_indexed_seq(uv.len(), node)
    };
    scan_finite(&values, "residual")?;
    Ok(values)
}

/// F_k(u) sampled on the grid: sigma_k of the shifted spectrum minus
/// beta e^{2ku}.
pub fn residual(p: &SigmaProblem, u: &GridFunction) -> Result<GridFunction> {
    let values = residual_values(p, u, true)?;
    GridFunction::from_values(p.grid.clone(), values)
}

/// Sequential twin of [`residual`]; used by the benchmark suite and as the
/// fallback when the `parallel` feature is disabled.
pub fn residual_seq(p: &SigmaProblem, u: &GridFunction) -> Result<GridFunction> {
    let values = residual_values(p, u, false)?;
    GridFunction::from_values(p.grid.clone(), values)
}

/// Discrete linearization L_k as a banded linear map on the unknowns at
/// nodes 0..N-1 (node N carries the Dirichlet truncation condition).
/// `sub[0]` and `sup[N-1]` are stored as zero. The weight exponent is
/// bookkeeping for the space rho^gamma Lambda the operator is read on.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub gamma: f64,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn with_weight(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Applies the operator to a vector of unknowns (v_N = 0 implied).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if v.len() != n {
            return Err(Error::dimension(format!(
                "vector length {} does not match operator size {n}",
                v.len()
            )));
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Thomas elimination. Fails on a vanishing pivot, which signals an
    /// indicial or weight failure rather than a programming error.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::dimension(format!(
                "rhs length {} does not match operator size {n}",
                rhs.len()
            )));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let scale = |i: usize| -> f64 {
            self.diag[i]
                .abs()
                .max(self.sub[i].abs())
                .max(self.sup[i].abs())
                .max(1.0)
        };
        let mut den = self.diag[0];
        if !den.is_finite() || den.abs() <= 1e-14 * scale(0) {
            return Err(Error::SingularLinearization { row: 0 });
        }
        c[0] = self.sup[0] / den;
        d[0] = rhs[0] / den;
        for i in 1..n {
            den = self.diag[i] - self.sub[i] * c[i - 1];
            if !den.is_finite() || den.abs() <= 1e-14 * scale(i) {
                return Err(Error::SingularLinearization { row: i });
            }
            if i + 1 < n {
                c[i] = self.sup[i] / den;
            }
            d[i] = (rhs[i] - self.sub[i] * d[i - 1]) / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }
}

fn linearize_rows(p: &SigmaProblem, u: &GridFunction, parallel: bool) -> Result<Vec<[f64; 3]>> {
    p.check_grid(u)?;
    let du = d1(u);
    let ddu = d2(u);
    let uv = u.values();
    let duv = du.values();
    let dduv = ddu.values();
    let h = p.grid.h();
    let h2 = h * h;
    let twok = 2.0 * p.k as f64;
    let unknowns = p.grid.n();
    let row = |i: usize| -> [f64; 3] {
        let (br, bt) = p.shifted_pair(i, duv[i], dduv[i]);
        let (s_r, s_t) = sigma_pair_gradient(p.n, p.k, br, bt);
        let a0 = -twok * p.beta * (twok * uv[i]).exp();
        if i == 0 {
            // Center row: both Hessian eigenvalues collapse to u''(0) and the
            // ghost reflection turns it into 2 (u_1 - u_0) / h^2.
            let a2 = s_r + s_t;
            [0.0, -2.0 * a2 / h2 + a0, 2.0 * a2 / h2]
        } else {
            let a2 = s_r;
            let a1 = -s_r * duv[i] + s_t * (p.warp_ratio[i] + duv[i]);
            [
                a2 / h2 - a1 / (2.0 * h),
                -2.0 * a2 / h2 + a0,
                a2 / h2 + a1 / (2.0 * h),
            ]
        }
    };
    let rows = if parallel {
        par::map_indexed(unknowns, row)
    } else {
        par::map_indexed_seq(unknowns, row)
    };
    for (i, r) in rows.iter().enumerate() {
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                node: i,
                context: "linearization",
            });
        }
    }
    Ok(rows)
}

fn rows_to_operator(rows: Vec<[f64; 3]>) -> TridiagonalOperator {
    let n = rows.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for (i, r) in rows.into_iter().enumerate() {
        sub[i] = r[0];
        diag[i] = r[1];
        sup[i] = r[2];
    }
    // Coupling into the Dirichlet node is dropped from the square system.
    sup[n - 1] = 0.0;
    TridiagonalOperator {
        sub,
        diag,
        sup,
        gamma: 0.0,
    }
}

/// Exact Frechet derivative of [`residual`] at u with respect to radial
/// perturbations, discretized with the same stencils. The second-order
/// coefficient is the radial entry of T_{k-1}(b), so ellipticity is
/// inherited from cone membership of b.
pub fn linearize(p: &SigmaProblem, u: &GridFunction) -> Result<TridiagonalOperator> {
    Ok(rows_to_operator(linearize_rows(p, u, true)?))
}

/// Sequential twin of [`linearize`].
pub fn linearize_seq(p: &SigmaProblem, u: &GridFunction) -> Result<TridiagonalOperator> {
    Ok(rows_to_operator(linearize_rows(p, u, false)?))
}

/// Indicial exponents of the linearized operator at the boundary, with the
/// quadratic they solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicialData {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub ckn: f64,
    /// Coefficients (c_{k,n}, -n c_{k,n}, -2 k beta) of the indicial
    /// quadratic c (g^2 - n g) - 2 k beta = 0.
    pub poly: [f64; 3],
}

/// Roots gamma_± = n/2 ± sqrt(n^2/4 + 2 k beta / c_{k,n}) of the indicial
/// quadratic. The general-beta form is used throughout; at beta = beta_k^0
/// the roots collapse to (-1, n+1) for every k. The simplified radical
/// sqrt(n^2/4 + 2k/c_{k,n}) sometimes quoted for these roots drops beta
/// and agrees with the quadratic only at beta = 1.
pub fn indicial_roots(n: usize, k: usize, beta: f64) -> Result<IndicialData> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::domain(format!("beta={beta} must be positive")));
    }
    let c = c_kn(n, k)?;
    let nf = n as f64;
    let disc = nf * nf / 4.0 + 2.0 * k as f64 * beta / c;
    let root = disc.sqrt();
    Ok(IndicialData {
        gamma_minus: nf / 2.0 - root,
        gamma_plus: nf / 2.0 + root,
        ckn: c,
        poly: [c, -nf * c, -2.0 * k as f64 * beta],
    })
}

/// Coefficients (c_{k,n}, -n c_{k,n}, -2 k beta) of the radial normal
/// operator c ((s d/ds)^2 - n s d/ds) - 2 k beta at the boundary.
pub fn normal_operator_coeffs(p: &SigmaProblem) -> Result<[f64; 3]> {
    let c = c_kn(p.n(), p.k())?;
    Ok([c, -(p.n() as f64) * c, -2.0 * p.k() as f64 * p.beta()])
}
