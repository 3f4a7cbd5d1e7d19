//! Uniform radial lattice in the geodesic coordinate t with defining
//! function x = e^{-t}, second-order stencils, weighted sup norms built
//! from x d/dx derivatives, and tail decay-rate estimation.

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Truncation floor for decay fitting, relative to max|f|.
const DECAY_FLOOR: f64 = 1e-13;

/// Truncated radial lattice t_i = i h, h = T/N, i = 0..N, with
/// x_i = e^{-t_i}.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    t_max: f64,
    n: usize,
    xs: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.t_max == other.t_max && self.n == other.n
    }
}

impl RadialGrid {
    /// `n` is the interval count; the lattice has n + 1 nodes.
    pub fn new(t_max: f64, n: usize) -> Result<Arc<Self>> {
        if t_max <= 0.0 || !t_max.is_finite() {
            return Err(Error::domain(format!("truncation radius T={t_max} must be positive")));
        }
        if n < 16 {
            return Err(Error::domain(format!("node count N={n} must be at least 16")));
        }
        let h = t_max / n as f64;
        let xs = (0..=n).map(|i| (-(i as f64) * h).exp()).collect();
        Ok(Arc::new(RadialGrid { t_max, n, xs }))
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Interval count N.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        self.t_max / self.n as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xs[i]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
}

/// Scalar field sampled on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    grid: Arc<RadialGrid>,
}

impl GridFunction {
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::dimension(format!(
                "{} values on a grid with {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(GridFunction { values, grid })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.num_nodes()];
        GridFunction { values, grid }
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        let values = vec![c; grid.num_nodes()];
        GridFunction { values, grid }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.num_nodes()).map(|i| f(grid.t(i))).collect();
        GridFunction { values, grid }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(GridFunction {
            values,
            grid: self.grid.clone(),
        })
    }
}

pub(crate) fn same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.grid.as_ref() != b.grid.as_ref() {
        return Err(Error::dimension("grid functions live on different grids"));
    }
    Ok(())
}

/// First derivative in t: central stencils inside, even ghost reflection at
/// the center (radial smoothness gives f'(0) = 0), one-sided second order
/// at t = T.
pub fn d1(f: &GridFunction) -> GridFunction {
    let v = f.values();
    let n = v.len() - 1;
    let h = f.grid().h();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[0] = 0.0;
    out[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    GridFunction {
        values: out,
        grid: f.grid().clone(),
    }
}

/// Second derivative in t, same boundary treatment as [`d1`].
pub fn d2(f: &GridFunction) -> GridFunction {
    let v = f.values();
    let n = v.len() - 1;
    let h = f.grid().h();
    let h2 = h * h;
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    out[0] = 2.0 * (v[1] - v[0]) / h2;
    out[n] = (2.0 * v[n] - 5.0 * v[n - 1] + 4.0 * v[n - 2] - v[n - 3]) / h2;
    GridFunction {
        values: out,
        grid: f.grid().clone(),
    }
}

/// max over nodes of x^{-gamma} |(x d/dx)^j f| for j = 0..order. On this
/// grid x d/dx = -d/dt, so the derivatives are stencil applications in t.
pub fn weighted_sup_norm(f: &GridFunction, gamma: f64, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::domain(format!("derivative order {order} exceeds 2")));
    }
    let grid = f.grid().clone();
    let mut worst = 0.0f64;
    let mut scan = |layer: &GridFunction| {
        for (i, v) in layer.values().iter().enumerate() {
            worst = worst.max((gamma * grid.t(i)).exp() * v.abs());
        }
    };
    scan(f);
    if order >= 1 {
        scan(&d1(f));
    }
    if order >= 2 {
        scan(&d2(f));
    }
    Ok(worst)
}

/// Least-squares slope of ys against xs.
pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Leading decay exponent of f near the conformal boundary: the slope of
/// log|f| against log x over the last `window` fraction of the nodes that
/// sit above the truncation floor 1e-13 max|f|. The relative floor keeps
/// the estimate exactly invariant under f -> c f.
pub fn decay_rate(f: &GridFunction, window: f64) -> Result<f64> {
    if window.is_nan() || window <= 0.0 || window > 1.0 {
        return Err(Error::domain(format!("window fraction {window} must be in (0, 1]")));
    }
    let mx = f.sup_norm();
    if mx == 0.0 {
        return Err(Error::DecayTooFast);
    }
    let floor = DECAY_FLOOR * mx;
    let usable: Vec<usize> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= floor)
        .map(|(i, _)| i)
        .collect();
    let m = ((usable.len() as f64 * window).ceil() as usize).max(2);
    if usable.len() < m || m < 2 {
        return Err(Error::DecayTooFast);
    }
    let tail = &usable[usable.len() - m..];
    let grid = f.grid();
    let xs: Vec<f64> = tail.iter().map(|&i| -grid.t(i)).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| f.values()[i].abs().ln()).collect();
    if xs.first() == xs.last() {
        return Err(Error::DecayTooFast);
    }
    Ok(least_squares_slope(&xs, &ys))
}

/// Writes (i, t_i, x_i, f_i) rows with a header, 17 significant digits,
/// LF line endings.
pub fn write_csv<W: Write>(f: &GridFunction, out: &mut W) -> io::Result<()> {
    let grid = f.grid();
    out.write_all(b"i,t,x,f\n")?;
    for (i, v) in f.values().iter().enumerate() {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", i, grid.t(i), grid.x(i), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_max: f64, n: usize) -> Arc<RadialGrid> {
        RadialGrid::new(t_max, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(0.0, 100).is_err());
        assert!(RadialGrid::new(10.0, 8).is_err());
        let g = grid(16.0, 4000);
        assert_eq!(g.num_nodes(), 4001);
        assert!((g.t(4000) - 16.0).abs() <= 1e-12);
        assert!(g.x(0) == 1.0 && g.x(4000) < g.x(3999));
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let g = grid(8.0, 64);
        let f = GridFunction::from_fn(g.clone(), |t| t * t);
        let df2 = d2(&f);
        for i in 0..=64 {
            assert!((df2.values()[i] - 2.0).abs() <= 1e-9, "node {i}");
        }
        let c = GridFunction::constant(g, 3.25);
        assert_eq!(d1(&c).sup_norm(), 0.0);
        assert_eq!(d2(&c).sup_norm(), 0.0);
    }

    #[test]
    fn stencils_on_sine() {
        // The center stencil imposes f'(0) = 0, which sin t violates, so
        // accuracy is asserted from node 1 on.
        let g = grid(16.0, 4000);
        let f = GridFunction::from_fn(g.clone(), |t| t.sin());
        let df = d1(&f);
        let ddf = d2(&f);
        let mut worst1 = 0.0f64;
        let mut worst2 = 0.0f64;
        for i in 1..=4000 {
            let t = g.t(i);
            worst1 = worst1.max((df.values()[i] - t.cos()).abs());
            worst2 = worst2.max((ddf.values()[i] + t.sin()).abs());
        }
        assert!(worst1 <= 1e-5, "{worst1}");
        assert!(worst2 <= 1e-5, "{worst2}");
    }

    #[test]
    fn stencil_halving_reduces_error_by_four() {
        let mut errs = Vec::new();
        for n in [250usize, 500, 1000] {
            let g = grid(8.0, n);
            let f = GridFunction::from_fn(g.clone(), |t| (t * 0.7).cos() + 0.1 * t * t);
            let df = d1(&f);
            let mut worst = 0.0f64;
            for i in 1..=n {
                let t = g.t(i);
                let exact = -0.7 * (t * 0.7).sin() + 0.2 * t;
                worst = worst.max((df.values()[i] - exact).abs());
            }
            errs.push(worst);
        }
        for pair in errs.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let g = grid(16.0, 2000);
        let gamma = 2.5;
        let f = GridFunction::from_fn(g.clone(), |t| (-gamma * t).exp());
        let norm = weighted_sup_norm(&f, gamma, 0).unwrap();
        assert!((norm - 1.0).abs() <= 1e-12);

        // One extra decay order: x^{gamma+1} against weight gamma peaks at
        // the largest x.
        let f = GridFunction::from_fn(g.clone(), |t| (-(gamma + 1.0) * t).exp());
        let norm = weighted_sup_norm(&f, gamma, 0).unwrap();
        assert!(norm <= 1.0 + 1e-12);
        assert!(weighted_sup_norm(&f, gamma, 3).is_err());
    }

    #[test]
    fn weighted_norm_weight_shift() {
        // Shift consistency holds at order 0, where x^{-gamma-delta} |f x^delta|
        // equals x^{-gamma} |f| pointwise. The derivative layers pick up
        // delta-commutator terms, so no identity is asserted for them.
        let g = grid(12.0, 2000);
        let f = GridFunction::from_fn(g.clone(), |t| (-1.2 * t).exp() * (1.0 + 0.3 * (t * 0.5).sin()));
        let delta = 0.75;
        let shifted = GridFunction::from_fn(g.clone(), |t| {
            (-1.2 * t).exp() * (1.0 + 0.3 * (t * 0.5).sin()) * (-delta * t).exp()
        });
        let a = weighted_sup_norm(&f, 0.9, 0).unwrap();
        let b = weighted_sup_norm(&shifted, 0.9 + delta, 0).unwrap();
        assert!((a - b).abs() <= 1e-6 * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn decay_rate_examples() {
        let g = grid(16.0, 4000);
        let f = GridFunction::from_fn(g.clone(), |t| (-4.0 * t).exp());
        let rate = decay_rate(&f, 0.25).unwrap();
        assert!((rate - 4.0).abs() <= 1e-3, "{rate}");

        // Two-term expansion x^4 (1 + 0.1 x).
        let f2 = GridFunction::from_fn(g.clone(), |t| (-4.0 * t).exp() * (1.0 + 0.1 * (-t).exp()));
        let rate2 = decay_rate(&f2, 0.25).unwrap();
        assert!((rate2 - 4.0).abs() <= 2e-2, "{rate2}");

        // Scale invariance: the relative floor keeps the fit window fixed
        // and the log shift cancels in the slope up to roundoff.
        let f3 = GridFunction::from_fn(g.clone(), |t| -7.3e-5 * (-4.0 * t).exp());
        assert!((decay_rate(&f3, 0.25).unwrap() - rate).abs() <= 1e-12);

        let zero = GridFunction::zeros(g);
        assert!(matches!(decay_rate(&zero, 0.25), Err(Error::DecayTooFast)));
    }

    #[test]
    fn csv_format() {
        let g = grid(1.0, 16);
        let f = GridFunction::from_fn(g, |t| t);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "i,t,x,f");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,0.0000000000000000e0,1.0000000000000000e0"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 18);
    }
}
