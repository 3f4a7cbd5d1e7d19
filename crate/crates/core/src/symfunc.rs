//! Exact algebra of elementary symmetric functions on spectra and symmetric
//! matrices: the stable σ_k recurrence, Newton transforms T_q, the Reilly
//! derivative pairing, the Γ_k^± cone test, and reconstruction of a real
//! spectrum from its symmetric-function data via the companion matrix.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Matrix sizes above which σ_k of a matrix falls back to an eigensolver
/// instead of principal-minor sums.
const MINOR_LIMIT: usize = 6;

/// Eigenvalues of a symmetric bilinear form measured against a background
/// metric. Entries are dimensionless; every operation is symmetric in them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("spectrum must have at least one entry"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("spectrum entry {v} is not finite")));
        }
        Ok(Spectrum { values })
    }

    /// Spectrum of a constant multiple of the identity.
    pub fn constant(value: f64, m: usize) -> Result<Self> {
        Spectrum::new(vec![value; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entrywise negation, i.e. the spectrum of -A.
    pub fn negated(&self) -> Spectrum {
        Spectrum {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Entries sorted ascending (the values themselves are unordered data).
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Real symmetric matrix with exact storage symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds from an explicit dense matrix, rejecting any pair of entries
    /// that is not bitwise symmetric.
    pub fn try_from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::dimension(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for i in 0..data.nrows() {
            for j in (i + 1)..data.ncols() {
                if data[(i, j)] != data[(j, i)] {
                    return Err(Error::domain(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(SymMatrix { data })
    }

    /// Evaluates `f` on the upper triangle only and mirrors it, so the
    /// symmetry invariant holds by construction.
    pub fn from_fn_symmetric(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::dimension("matrix size must be positive"));
        }
        let mut data = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn identity(m: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(m, m),
        }
    }

    pub fn scaled_identity(m: usize, c: f64) -> Self {
        SymMatrix {
            data: DMatrix::identity(m, m) * c,
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::dimension("matrix size must be positive"));
        }
        Ok(SymMatrix {
            data: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries)),
        })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    /// Eigenvalues through the symmetric eigensolver, as a Spectrum.
    pub fn eigenvalues(&self) -> Spectrum {
        let eig = self.data.clone().symmetric_eigen();
        Spectrum {
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }
}

/// Position of a spectrum relative to the elliptic cones at level k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeTag {
    Plus,
    Minus,
    Neither,
}

/// Cone membership answer, tagged with the level it was tested at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeLabel {
    pub tag: ConeTag,
    pub k: usize,
}

/// All elementary symmetric values e_0..e_k of `values`, by the
/// degree-graded accumulation e_j <- e_j + x e_{j-1}.
pub(crate) fn elementary_all(values: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (count, &x) in values.iter().enumerate() {
        let top = k.min(count + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// k-th elementary symmetric polynomial of the spectrum entries; σ_0 = 1.
pub fn sigma_k(s: &Spectrum, k: usize) -> Result<f64> {
    let m = s.len();
    if k > m {
        return Err(Error::domain(format!("k={k} out of range for m={m}")));
    }
    Ok(elementary_all(s.values(), k)[k])
}

/// σ_k of a symmetric matrix, i.e. of its eigenvalue spectrum. Small sizes
/// use sums of principal k x k minors (exact up to rounding); larger ones
/// fall back to the symmetric eigensolver.
pub fn sigma_k_matrix(b: &SymMatrix, k: usize) -> Result<f64> {
    let m = b.dim();
    if k > m {
        return Err(Error::domain(format!("k={k} out of range for m={m}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if m <= MINOR_LIMIT {
        Ok(principal_minor_sum(b, k))
    } else {
        sigma_k(&b.eigenvalues(), k)
    }
}

/// Sum of all principal k x k minors, enumerated by bitmask.
fn principal_minor_sum(b: &SymMatrix, k: usize) -> f64 {
    let m = b.dim();
    let mut idx = Vec::with_capacity(k);
    let mut total = 0.0;
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != k {
            continue;
        }
        idx.clear();
        for i in 0..m {
            if mask & (1 << i) != 0 {
                idx.push(i);
            }
        }
        total += minor_det(b, &idx);
    }
    total
}

/// Determinant of the principal submatrix on `idx`, by Gaussian elimination
/// with partial pivoting on a local copy.
fn minor_det(b: &SymMatrix, idx: &[usize]) -> f64 {
    let k = idx.len();
    let mut a = vec![0.0; k * k];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[r * k + c] = b.get(i, j);
        }
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in (col + 1)..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(col * k + c, piv * k + c);
            }
            det = -det;
        }
        let d = a[col * k + col];
        det *= d;
        for r in (col + 1)..k {
            let factor = a[r * k + col] / d;
            for c in col..k {
                a[r * k + c] -= factor * a[col * k + c];
            }
        }
    }
    det
}

/// q-th Newton transform T_q(B) = σ_q I - σ_{q-1} B + ... + (-1)^q B^q,
/// evaluated by the Horner recurrence T_j = σ_j I - B T_{j-1}, T_0 = I.
pub fn newton_transform(b: &SymMatrix, q: usize) -> Result<SymMatrix> {
    let m = b.dim();
    if q > m {
        return Err(Error::domain(format!("q={q} out of range for m={m}")));
    }
    let mut t = DMatrix::<f64>::identity(m, m);
    for j in 1..=q {
        let sj = sigma_k_matrix(b, j)?;
        let prod = b.as_matrix() * &t;
        t = DMatrix::identity(m, m) * sj - prod;
    }
    // B commutes with polynomials in B, so T_q is symmetric; re-symmetrize
    // to restore exact storage symmetry lost to rounding in the product.
    let sym = (&t + t.transpose()) * 0.5;
    SymMatrix::try_from_matrix(sym)
}

/// Directional derivative of σ_k at B along Bdot: the Frobenius pairing
/// <T_{k-1}(B), Bdot>.
pub fn reilly_derivative(b: &SymMatrix, bdot: &SymMatrix, k: usize) -> Result<f64> {
    if b.dim() != bdot.dim() {
        return Err(Error::dimension(format!(
            "B is {}x{} but Bdot is {}x{}",
            b.dim(),
            b.dim(),
            bdot.dim(),
            bdot.dim()
        )));
    }
    let m = b.dim();
    if k == 0 || k > m {
        return Err(Error::domain(format!("k={k} out of range for m={m}")));
    }
    let t = newton_transform(b, k - 1)?;
    Ok((t.as_matrix() * bdot.as_matrix()).trace())
}

/// Decides Γ_k^± membership: PLUS iff σ_j(s) > 0 for j = 1..k, MINUS iff
/// the negated spectrum is PLUS, NEITHER otherwise.
pub fn cone_membership(s: &Spectrum, k: usize) -> Result<ConeLabel> {
    let m = s.len();
    if k == 0 || k > m {
        return Err(Error::domain(format!("k={k} out of range for m={m}")));
    }
    let tag = if all_sigmas_positive(s.values(), k) {
        ConeTag::Plus
    } else {
        let neg = s.negated();
        if all_sigmas_positive(neg.values(), k) {
            ConeTag::Minus
        } else {
            ConeTag::Neither
        }
    };
    Ok(ConeLabel { tag, k })
}

pub(crate) fn all_sigmas_positive(values: &[f64], k: usize) -> bool {
    let e = elementary_all(values, k);
    e[1..=k].iter().all(|&v| v > 0.0)
}

/// Scale used for the backward-error and imaginary-part tolerances of
/// [`eigs_from_sigmas`].
fn sigma_scale(sigmas: &[f64]) -> f64 {
    1.0 + sigmas.iter().fold(0.0f64, |acc, s| acc.max(s.abs()))
}

/// Recovers the real roots (with multiplicity) of
/// λ^m - σ_1 λ^{m-1} + σ_2 λ^{m-2} - ... + (-1)^m σ_m
/// as companion-matrix eigenvalues.
///
/// A multiplicity-q root scatters by roughly eps^(1/q) under a backward
/// stable eigensolver, so raw eigenvalues are post-processed by cluster
/// merging: for a ladder of radii, clusters are replaced by their means and
/// the merge is kept only when the merged spectrum reproduces the input
/// σ's to near machine precision. Cluster means of true multiple roots are
/// eps-accurate, while merging a genuinely separated pair with gap g moves
/// the σ's by about (g/2)^2 and is rejected. Conjugate pairs from a split
/// real root cancel in the mean; genuinely complex spectra survive merging
/// and are rejected by the imaginary-part tolerance.
pub fn eigs_from_sigmas(sigmas: &[f64]) -> Result<Spectrum> {
    let m = sigmas.len();
    if m == 0 {
        return Err(Error::domain("need at least one symmetric function"));
    }
    if let Some(v) = sigmas.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("sigma value {v} is not finite")));
    }
    let scale = sigma_scale(sigmas);

    // Coefficient of λ^i in the monic characteristic polynomial.
    let coeff = |i: usize| -> f64 {
        let j = m - i;
        let s = sigmas[j - 1];
        if j.is_multiple_of(2) {
            s
        } else {
            -s
        }
    };
    let mut companion = DMatrix::<f64>::zeros(m, m);
    for i in 0..m - 1 {
        companion[(i + 1, i)] = 1.0;
    }
    for i in 0..m {
        companion[(i, m - 1)] = -coeff(i);
    }
    let mut roots: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().copied().collect();
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let root_scale = 1.0 + roots.iter().fold(0.0f64, |acc, r| acc.max(r.norm()));
    let backward_tol = 1e-13 * scale;
    let radii = [
        3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 1e-12, 0.0,
    ];
    let mut chosen = roots.clone();
    for &r in &radii {
        let candidate = merge_clusters(&roots, r * root_scale);
        if backward_error(&candidate, sigmas) <= backward_tol {
            chosen = candidate;
            break;
        }
    }

    let imag_tol = 1e-8 * scale;
    let max_imag = chosen.iter().fold(0.0f64, |acc, r| acc.max(r.im.abs()));
    if max_imag > imag_tol {
        return Err(Error::NonRealSpectrum {
            max_imag,
            tol: imag_tol,
        });
    }
    let mut values: Vec<f64> = chosen.iter().map(|r| r.re).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Spectrum::new(values)
}

/// Greedy chain clustering of sorted roots; each cluster collapses to its
/// mean, repeated with the cluster's multiplicity.
fn merge_clusters(sorted: &[Complex<f64>], radius: f64) -> Vec<Complex<f64>> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && (sorted[end] - sorted[end - 1]).norm() <= radius {
            end += 1;
        }
        let size = end - start;
        let mean = sorted[start..end].iter().sum::<Complex<f64>>() / size as f64;
        out.extend(std::iter::repeat_n(mean, size));
        start = end;
    }
    out
}

/// Max mismatch between the elementary symmetric values of `roots` and the
/// target σ's.
fn backward_error(roots: &[Complex<f64>], sigmas: &[f64]) -> f64 {
    let k = sigmas.len();
    let mut e = vec![Complex::new(0.0, 0.0); k + 1];
    e[0] = Complex::new(1.0, 0.0);
    for (count, &x) in roots.iter().enumerate() {
        let top = k.min(count + 1);
        for j in (1..=top).rev() {
            let prev = e[j - 1];
            e[j] += x * prev;
        }
    }
    let mut err = 0.0f64;
    for j in 1..=k {
        err = err.max((e[j] - Complex::new(sigmas[j - 1], 0.0)).norm());
    }
    err
}
