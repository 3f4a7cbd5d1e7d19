//! Warped-product conformally compact backgrounds dt^2 + phi(t)^2 g_{S^n},
//! their Schouten spectra, the conformal transformation law, Einstein
//! detection, and the model constants beta_k^0 and c_{k,n}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symfunc::Spectrum;

/// Where the perturbation bump is supported; phi equals sinh t exactly
/// beyond this radius.
pub const BUMP_SUPPORT: f64 = 4.0;

/// Range scanned by the constructor positivity check.
const POSITIVITY_SCAN_MAX: f64 = 24.0;
const POSITIVITY_SCAN_STEP: f64 = 5e-3;

/// Warp function descriptor for the radial metric dt^2 + phi(t)^2 g_{S^n}.
///
/// `Hyperbolic` is phi = sinh t. `Perturbed` adds a * psi with the smooth
/// compactly supported bump psi(t) = t^3 exp(-t^2 / (1 - (t/4)^2)) on [0,4).
/// The bump is odd at the center (so curvature stays bounded there) and
/// vanishes identically near the conformal boundary, which keeps the
/// deformation forcing out of the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WarpFamily {
    Hyperbolic,
    Perturbed { amplitude: f64 },
}

/// Smooth bump and its first two derivatives.
fn bump(t: f64) -> (f64, f64, f64) {
    if !(0.0..BUMP_SUPPORT - 1e-6).contains(&t) {
        return (0.0, 0.0, 0.0);
    }
    let c2 = BUMP_SUPPORT * BUMP_SUPPORT;
    let s = 1.0 - t * t / c2;
    let g = t * t / s;
    let gp = 2.0 * t / (s * s);
    let gpp = 2.0 / (s * s) + (8.0 * t * t / c2) / (s * s * s);
    let e = (-g).exp();
    let t2 = t * t;
    let t3 = t2 * t;
    let psi = t3 * e;
    let dpsi = (3.0 * t2 - t3 * gp) * e;
    let ddpsi = (6.0 * t - 6.0 * t2 * gp - t3 * gpp + t3 * gp * gp) * e;
    (psi, dpsi, ddpsi)
}

/// A cohomogeneity-one conformally compact metric dt^2 + phi(t)^2 g_{S^n}
/// with boundary dimension n (manifold dimension n + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedBackground {
    n: usize,
    family: WarpFamily,
}

impl WarpedBackground {
    pub fn new(n: usize, family: WarpFamily) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("boundary dimension n={n} must be >= 2")));
        }
        let bg = WarpedBackground { n, family };
        if let WarpFamily::Perturbed { amplitude } = family {
            if !amplitude.is_finite() {
                return Err(Error::domain("perturbation amplitude must be finite"));
            }
            let mut t = POSITIVITY_SCAN_STEP;
            while t <= POSITIVITY_SCAN_MAX {
                if bg.phi(t) <= 0.0 {
                    return Err(Error::domain(format!(
                        "warp function is not positive at t={t} for amplitude {amplitude}"
                    )));
                }
                t += POSITIVITY_SCAN_STEP;
            }
        }
        Ok(bg)
    }

    pub fn hyperbolic(n: usize) -> Result<Self> {
        WarpedBackground::new(n, WarpFamily::Hyperbolic)
    }

    pub fn perturbed(n: usize, amplitude: f64) -> Result<Self> {
        WarpedBackground::new(n, WarpFamily::Perturbed { amplitude })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Manifold dimension m = n + 1.
    pub fn m(&self) -> usize {
        self.n + 1
    }

    pub fn family(&self) -> WarpFamily {
        self.family
    }

    pub fn amplitude(&self) -> f64 {
        match self.family {
            WarpFamily::Hyperbolic => 0.0,
            WarpFamily::Perturbed { amplitude } => amplitude,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self.family {
            WarpFamily::Hyperbolic => t.sinh(),
            WarpFamily::Perturbed { amplitude } => t.sinh() + amplitude * bump(t).0,
        }
    }

    pub fn dphi(&self, t: f64) -> f64 {
        match self.family {
            WarpFamily::Hyperbolic => t.cosh(),
            WarpFamily::Perturbed { amplitude } => t.cosh() + amplitude * bump(t).1,
        }
    }

    /// phi'(t) - 1 without cancellation near the center, via
    /// cosh t - 1 = 2 sinh^2(t/2).
    pub fn dphi_minus_one(&self, t: f64) -> f64 {
        let base = 2.0 * (t / 2.0).sinh().powi(2);
        match self.family {
            WarpFamily::Hyperbolic => base,
            WarpFamily::Perturbed { amplitude } => base + amplitude * bump(t).1,
        }
    }

    pub fn ddphi(&self, t: f64) -> f64 {
        match self.family {
            WarpFamily::Hyperbolic => t.sinh(),
            WarpFamily::Perturbed { amplitude } => t.sinh() + amplitude * bump(t).2,
        }
    }

    /// Coefficient of t^3 in the Taylor expansion of phi at the center.
    /// Controls every curvature limit there: lam_r(0) = lam_t(0) = -3 c3.
    pub fn center_cubic_coeff(&self) -> f64 {
        match self.family {
            WarpFamily::Hyperbolic => 1.0 / 6.0,
            WarpFamily::Perturbed { amplitude } => 1.0 / 6.0 + amplitude,
        }
    }
}

/// Radial and tangential Schouten eigenvalues of a warped background at a
/// point, measured against the background metric itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchoutenEigs {
    pub lam_r: f64,
    pub lam_t: f64,
    pub t: f64,
}

impl SchoutenEigs {
    /// Full spectrum (lam_r, lam_t x n), m = n + 1 entries.
    pub fn spectrum(&self, n: usize) -> Spectrum {
        let mut values = vec![self.lam_t; n + 1];
        values[0] = self.lam_r;
        Spectrum::new(values).expect("finite eigenvalues")
    }
}

/// Model constants attached to the hyperbolic solution at level k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    pub n: usize,
    pub k: usize,
    pub beta0: f64,
    pub ckn: f64,
}

/// Exact binomial coefficient as f64 (arguments stay far below overflow).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for j in 0..k {
        num *= (n - j) as u128;
        den *= (j + 1) as u128;
    }
    (num / den) as f64
}

fn check_level(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("boundary dimension n={n} must be >= 2")));
    }
    if k == 0 || k > n + 1 {
        return Err(Error::domain(format!("k={k} out of range 1..={}", n + 1)));
    }
    Ok(())
}

/// beta_k^0 = 2^{-k} C(n+1, k), the sigma_k constant of the hyperbolic
/// metric normalized to Ric = -n g.
pub fn beta0(n: usize, k: usize) -> Result<f64> {
    check_level(n, k)?;
    Ok(binomial(n + 1, k) * 0.5f64.powi(k as i32))
}

/// c_{k,n} = 2^{1-k} sum_{j=0}^{k-1} (-1)^j C(n+1, k-1-j), the constant with
/// T_{k-1}(-A_g) = c_{k,n} I on a Poincare-Einstein background. Evaluated as
/// the alternating sum that the Newton transform actually produces; see
/// [`c_kn_printed`] for the commonly quoted closed form, which differs for
/// some (n, k).
pub fn c_kn(n: usize, k: usize) -> Result<f64> {
    check_level(n, k)?;
    let mut sum = 0.0;
    for j in 0..k {
        let term = binomial(n + 1, k - 1 - j);
        sum += if j % 2 == 0 { term } else { -term };
    }
    Ok(sum * 0.5f64.powi(k as i32 - 1))
}

/// The closed form 2^{1-k} C(n, k) quoted for c_{k,n} in the literature.
/// It matches the alternating sum only when C(n,k) = C(n,k-1), i.e. at the
/// binomial symmetry point 2k = n + 1; `cli identities` flags the rest.
pub fn c_kn_printed(n: usize, k: usize) -> Result<f64> {
    check_level(n, k)?;
    Ok(binomial(n, k) * 0.5f64.powi(k as i32 - 1))
}

pub fn model_constants(n: usize, k: usize) -> Result<ModelConstants> {
    Ok(ModelConstants {
        n,
        k,
        beta0: beta0(n, k)?,
        ckn: c_kn(n, k)?,
    })
}

/// Schouten eigenvalues of the warped background at t > 0.
///
/// Standard warped-product curvature: Ric_r = -n phi''/phi and
/// Ric_t = -phi''/phi - (n-1)(phi'^2 - 1)/phi^2, then
/// A = (Ric - R/(2n) g)/(n-1). The phi'^2 - 1 factor goes through
/// `dphi_minus_one` to avoid cancellation near the center.
pub fn schouten_eigs_warped(bg: &WarpedBackground, t: f64) -> Result<SchoutenEigs> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::domain(format!(
            "t={t} must be positive; use schouten_center for the center limit"
        )));
    }
    let phi = bg.phi(t);
    if phi <= 0.0 || phi.is_nan() {
        return Err(Error::domain(format!("warp function not positive at t={t}")));
    }
    let n = bg.n() as f64;
    let q1 = bg.ddphi(t) / phi;
    let q2 = bg.dphi_minus_one(t) * (bg.dphi(t) + 1.0) / (phi * phi);
    let ric_r = -n * q1;
    let ric_t = -q1 - (n - 1.0) * q2;
    let r = ric_r + n * ric_t;
    let lam_r = (ric_r - r / (2.0 * n)) / (n - 1.0);
    let lam_t = (ric_t - r / (2.0 * n)) / (n - 1.0);
    Ok(SchoutenEigs { lam_r, lam_t, t })
}

/// Center limit t -> 0 of the Schouten eigenvalues: both equal -3 c3 where
/// c3 is the cubic Taylor coefficient of phi.
pub fn schouten_center(bg: &WarpedBackground) -> SchoutenEigs {
    let lam = -3.0 * bg.center_cubic_coeff();
    SchoutenEigs {
        lam_r: lam,
        lam_t: lam,
        t: 0.0,
    }
}

/// Value-level Schouten eigenvalues from warp data (phi, phi', phi'') at a
/// point. Used by tests to probe warps outside the built-in families.
pub fn schouten_eigs_from_warp(n: usize, phi: f64, dphi: f64, ddphi: f64) -> SchoutenEigs {
    let nf = n as f64;
    let q1 = ddphi / phi;
    let q2 = (dphi * dphi - 1.0) / (phi * phi);
    let ric_r = -nf * q1;
    let ric_t = -q1 - (nf - 1.0) * q2;
    let r = ric_r + nf * ric_t;
    SchoutenEigs {
        lam_r: (ric_r - r / (2.0 * nf)) / (nf - 1.0),
        lam_t: (ric_t - r / (2.0 * nf)) / (nf - 1.0),
        t: f64::NAN,
    }
}

/// Spectrum of the conformally transformed Schouten tensor
/// A - hess u + du (x) du - |du|^2/2 g for radial u, measured against the
/// background. The radial Hessian eigenvalues are (u'', u' phi'/phi).
pub fn conformal_schouten_eigs(
    a: &SchoutenEigs,
    n: usize,
    du: f64,
    ddu: f64,
    logwarp_prime: f64,
) -> Spectrum {
    let radial = a.lam_r - ddu + 0.5 * du * du;
    let tangential = a.lam_t - du * logwarp_prime - 0.5 * du * du;
    let mut values = vec![tangential; n + 1];
    values[0] = radial;
    Spectrum::new(values).expect("finite eigenvalues")
}

/// True iff the eigenvalue pair is isotropic within `tol`, which for a
/// warped product is the Einstein condition.
pub fn is_einstein(a: &SchoutenEigs, tol: f64) -> bool {
    (a.lam_r - a.lam_t).abs() <= tol
}
