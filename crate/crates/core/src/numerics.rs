//! Quadrature rules, uniform grids, θ-Fourier analysis and interpolation.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, ErrorKind, Result};
use crate::marginals::OpticalMarginal;

const MODULE: &str = "numerics";

/// Uniform grid `min, min+h, …, max` with `count ≥ 2` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max {
            bail!(MODULE, Domain, "grid needs finite min < max, got [{min}, {max}]");
        }
        if count < 2 {
            bail!(MODULE, Range, "grid needs at least 2 points, got {count}");
        }
        Ok(UniformGrid { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + self.step() * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.min) / self.step()).round();
        i.clamp(0.0, (self.count - 1) as f64) as usize
    }
}

/// Uniform angles `2πj/count` on `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub count: usize,
}

impl ThetaGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            bail!(MODULE, Range, "theta grid needs at least one angle");
        }
        Ok(ThetaGrid { count })
    }

    pub fn point(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.point(j)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedNodes1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedNodes1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule with `count` nodes on `[a, b]`, ascending.
pub fn gauss_legendre(a: f64, b: f64, count: usize) -> Result<WeightedNodes1D> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        bail!(MODULE, Domain, "Gauss-Legendre interval needs a < b, got [{a}, {b}]");
    }
    if count == 0 {
        bail!(MODULE, Range, "Gauss-Legendre rule needs at least one node");
    }
    let n = count;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(WeightedNodes1D {
        nodes: x.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&t| half * t).collect(),
    })
}

/// Composite trapezoid rule for samples on a uniform grid with spacing `step`.
pub fn trapezoid<T>(values: &[T], step: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    assert!(values.len() >= 2, "trapezoid rule needs at least two samples");
    let n = values.len();
    let mut acc = (values[0] + values[n - 1]) * 0.5;
    for &v in &values[1..n - 1] {
        acc = acc + v;
    }
    acc * step
}

/// A quadrature node in the `α` plane; weights integrate against `d²α/π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaNode {
    pub alpha: Complex64,
    pub weight: f64,
}

/// Polar product rule on the disk `|α| ≤ radius` for the measure `d²α/π`:
/// uniform angles times Gauss–Legendre in `|α|`. Weights sum to `radius²`.
pub fn disk_nodes(radius: f64, n_angular: usize, n_radial: usize) -> Result<Vec<AlphaNode>> {
    if !(radius > 0.0 && radius.is_finite()) {
        bail!(MODULE, Domain, "disk radius must be positive, got {radius}");
    }
    if n_angular == 0 {
        bail!(MODULE, Range, "disk rule needs at least one angle");
    }
    let radial = gauss_legendre(0.0, radius, n_radial)?;
    let mut nodes = Vec::with_capacity(n_angular * n_radial);
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        for j in 0..n_angular {
            let th = 2.0 * PI * j as f64 / n_angular as f64;
            nodes.push(AlphaNode { alpha: Complex64::from_polar(r, th), weight: 2.0 * wr * r / n_angular as f64 });
        }
    }
    Ok(nodes)
}

/// A node in the `(μ, ν)` plane with weight for `dμ dν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuNuNode {
    pub mu: f64,
    pub nu: f64,
    pub weight: f64,
}

impl MuNuNode {
    pub fn radius(&self) -> f64 {
        self.mu.hypot(self.nu)
    }

    pub fn angle(&self) -> f64 {
        self.nu.atan2(self.mu)
    }
}

/// Polar product rule over the disk `μ² + ν² ≤ r_max²`: `n_theta` uniform
/// angles times an `n_radial`-point Gauss–Legendre rule in `u = r²` on
/// `(0, r_max²]`. With `unit_ring`, zero-weight nodes on `r = 1` at the same
/// angles are appended so unit-circle values are available without
/// interpolation.
pub fn polar_mu_nu_nodes(r_max: f64, n_theta: usize, n_radial: usize, unit_ring: bool) -> Result<Vec<MuNuNode>> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        bail!(MODULE, Domain, "radial extent must be positive, got {r_max}");
    }
    if n_theta == 0 {
        bail!(MODULE, Range, "polar rule needs at least one angle");
    }
    let radial = gauss_legendre(0.0, r_max * r_max, n_radial)?;
    let mut nodes = Vec::with_capacity(n_theta * (n_radial + 1));
    for (&u, &wu) in radial.nodes.iter().zip(&radial.weights) {
        let r = u.sqrt();
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            nodes.push(MuNuNode { mu: r * th.cos(), nu: r * th.sin(), weight: PI * wu / n_theta as f64 });
        }
    }
    if unit_ring {
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            nodes.push(MuNuNode { mu: th.cos(), nu: th.sin(), weight: 0.0 });
        }
    }
    Ok(nodes)
}

/// θ-Fourier decomposition of a function sampled on uniform angles:
/// `w(x, θ) = c0(x) + Σ_{n ≥ 1} Re(h_n(x) e^{inθ})` with `h_n = c_n − i d_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeriesTheta {
    pub c0: Vec<f64>,
    pub harmonics: Vec<Vec<Complex64>>,
}

impl FourierSeriesTheta {
    pub fn n_harm(&self) -> usize {
        self.harmonics.len()
    }

    /// Trigonometric resynthesis at angle `theta`.
    pub fn resynthesize(&self, theta: f64) -> Vec<f64> {
        let mut out = self.c0.clone();
        for (n, h) in self.harmonics.iter().enumerate() {
            let e = Complex64::from_polar(1.0, (n + 1) as f64 * theta);
            for (o, hv) in out.iter_mut().zip(h) {
                *o += (hv * e).re;
            }
        }
        out
    }

    /// The harmonic-polynomial extension obtained by replacing
    /// `cos θ → μ`, `sin θ → ν`: `c0 + Σ Re((μ + iν)^n h_n)`.
    pub fn polynomial_extension(&self, mu: f64, nu: f64) -> Vec<f64> {
        let z = Complex64::new(mu, nu);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut out = self.c0.clone();
        for h in &self.harmonics {
            zn *= z;
            for (o, hv) in out.iter_mut().zip(h) {
                *o += (hv * zn).re;
            }
        }
        out
    }
}

/// Fourier analysis of the columns of `values` (rows indexed by x, columns by
/// the uniform angles `theta0 + 2πj/N`).
pub(crate) fn fourier_columns(
    values: &nalgebra::DMatrix<f64>,
    theta0: f64,
    n_harm: usize,
) -> Result<FourierSeriesTheta> {
    let n_theta = values.ncols();
    if n_theta < 2 * n_harm + 1 {
        return Err(Error::new(MODULE, ErrorKind::Aliasing { n_harm, theta_count: n_theta }));
    }
    let nx = values.nrows();
    let inv = 1.0 / n_theta as f64;
    let c0: Vec<f64> = (0..nx).map(|i| values.row(i).sum() * inv).collect();
    let mut harmonics = Vec::with_capacity(n_harm);
    for n in 1..=n_harm {
        let phases: Vec<Complex64> = (0..n_theta)
            .map(|j| Complex64::from_polar(2.0 * inv, -(n as f64) * (theta0 + 2.0 * PI * j as f64 * inv)))
            .collect();
        let h: Vec<Complex64> = (0..nx)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                // mean removed so θ-constant rows give exactly zero harmonics
                for (j, p) in phases.iter().enumerate() {
                    acc += p * (values[(i, j)] - c0[i]);
                }
                acc
            })
            .collect();
        harmonics.push(h);
    }
    Ok(FourierSeriesTheta { c0, harmonics })
}

/// Discrete θ-Fourier analysis of an optical marginal; exact for inputs
/// band-limited to `n_harm` harmonics.
pub fn theta_fourier(w: &OpticalMarginal, n_harm: usize) -> Result<FourierSeriesTheta> {
    fourier_columns(&w.values, 0.0, n_harm)
}

/// Local polynomial interpolation through `order` consecutive samples of a
/// uniform grid, evaluated in barycentric form.
#[derive(Clone, Debug)]
pub struct UniformLagrange {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    weights: Vec<f64>,
}

impl UniformLagrange {
    pub fn new(grid: &UniformGrid, y: Vec<f64>, order: usize) -> Self {
        assert_eq!(grid.count, y.len());
        let order = order.clamp(2, y.len());
        // barycentric weights (−1)^j C(order−1, j) for equispaced nodes
        let mut weights = vec![1.0; order];
        for j in 1..order {
            weights[j] = -weights[j - 1] * (order - j) as f64 / j as f64;
        }
        UniformLagrange { x0: grid.min, h: grid.step(), y, weights }
    }

    /// Interpolated value, or `None` outside the sampled interval.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.y.len();
        let p = self.weights.len();
        let pos = (x - self.x0) / self.h;
        if !(pos >= -1e-12 && pos <= (n - 1) as f64 + 1e-12) {
            return None;
        }
        let start = ((pos - (p as f64 - 1.0) / 2.0).round().max(0.0) as usize).min(n - p);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            let t = pos - (start + j) as f64;
            if t == 0.0 {
                return Some(self.y[start + j]);
            }
            let c = w / t;
            num += c * self.y[start + j];
            den += c;
        }
        Some(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn gauss_legendre_exactness() {
        let r = gauss_legendre(0.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(r.integrate(|x| x * x), 1.0 / 3.0, epsilon = 1e-15);
        let r = gauss_legendre(-2.0, 5.0, 7).unwrap();
        assert_abs_diff_eq!(r.integrate(|_| 1.0), 7.0, epsilon = 1e-12);
        assert!(r.weights.iter().all(|&w| w > 0.0));
        assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        // √π erf(8) differs from √π by ~1e-29
        let r = gauss_legendre(-8.0, 8.0, 48).unwrap();
        assert_abs_diff_eq!(r.integrate(|x| (-x * x).exp()), PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn gauss_legendre_rejects_bad_input() {
        assert_eq!(gauss_legendre(1.0, 1.0, 3).unwrap_err().code(), "E_DOMAIN");
        assert_eq!(gauss_legendre(0.0, 1.0, 0).unwrap_err().code(), "E_RANGE");
    }

    #[test]
    fn trapezoid_examples() {
        assert_abs_diff_eq!(trapezoid(&[1.0; 11], 0.1), 1.0, epsilon = 1e-15);
        let n = 101;
        let h = 2.0 * PI / (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|i| (h * i as f64).sin()).collect();
        assert_abs_diff_eq!(trapezoid(&s, h), 0.0, epsilon = 1e-15);
        let g = UniformGrid::new(-8.0, 8.0, 801).unwrap();
        let e: Vec<f64> = g.points().iter().map(|x| (-x * x).exp()).collect();
        assert_abs_diff_eq!(trapezoid(&e, g.step()), PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn disk_rule() {
        let nodes = disk_nodes(3.0, 32, 24).unwrap();
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        assert_abs_diff_eq!(total, 9.0, epsilon = 1e-12);
        let gauss: f64 = nodes.iter().map(|n| n.weight * (-n.alpha.norm_sqr()).exp()).sum();
        assert_abs_diff_eq!(gauss, 1.0 - (-9.0f64).exp(), epsilon = 1e-10);
        let first: Complex64 = nodes.iter().map(|n| n.alpha * n.weight).sum();
        assert!(first.norm() < 1e-13);
    }

    #[test]
    fn polar_rule_area_and_ring() {
        let nodes = polar_mu_nu_nodes(8.0, 64, 48, true).unwrap();
        assert_eq!(nodes.len(), 64 * 49);
        let area: f64 = nodes.iter().map(|n| n.weight).sum();
        assert_abs_diff_eq!(area, PI * 64.0, epsilon = 1e-10);
        let g: f64 = nodes.iter().map(|n| n.weight * (-(n.mu * n.mu + n.nu * n.nu) / 4.0).exp()).sum();
        assert_abs_diff_eq!(g, 4.0 * PI * (1.0 - (-16.0f64).exp()), epsilon = 1e-10);
        let ring: Vec<_> = nodes.iter().filter(|n| n.weight == 0.0).collect();
        assert_eq!(ring.len(), 64);
        assert!(ring.iter().all(|n| (n.radius() - 1.0).abs() < 1e-15));
        // smallest radius stays well away from zero
        let rmin = nodes.iter().map(|n| n.radius()).fold(f64::INFINITY, f64::min);
        assert!(rmin > 0.15, "{rmin}");
    }

    fn optical_from(values: DMatrix<f64>) -> OpticalMarginal {
        let nx = values.nrows();
        let nt = values.ncols();
        OpticalMarginal {
            x_grid: UniformGrid::new(-1.0, 1.0, nx).unwrap(),
            theta_grid: ThetaGrid::new(nt).unwrap(),
            values,
            warnings: vec![],
        }
    }

    #[test]
    fn fourier_of_constant_and_cosine() {
        let theta = ThetaGrid::new(16).unwrap();
        let f = [0.2, 1.0, -0.7];
        let flat = optical_from(DMatrix::from_fn(3, 16, |i, _| f[i]));
        let s = theta_fourier(&flat, 7).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(s.c0[i], f[i], epsilon = 1e-15);
        }
        assert!(s.harmonics.iter().flatten().all(|h| h.norm() < 1e-15));

        let cosine = optical_from(DMatrix::from_fn(3, 16, |i, j| f[i] * theta.point(j).cos()));
        let s = theta_fourier(&cosine, 7).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(s.harmonics[0][i].re, f[i], epsilon = 1e-15);
            assert_abs_diff_eq!(s.harmonics[0][i].im, 0.0, epsilon = 1e-15);
            assert!(s.c0[i].abs() < 1e-15);
        }
        assert!(s.harmonics[1..].iter().flatten().all(|h| h.norm() < 1e-12));
        let back = s.resynthesize(0.3);
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], f[i] * 0.3f64.cos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn fourier_aliasing_rejected() {
        let w = optical_from(DMatrix::zeros(3, 64));
        let err = theta_fourier(&w, 32).unwrap_err();
        assert_eq!(err.code(), "E_ALIASING");
        assert!(theta_fourier(&w, 31).is_ok());
    }

    #[test]
    fn lagrange_accuracy() {
        let g = UniformGrid::new(-3.0, 3.0, 301).unwrap();
        let f = |x: f64| (-x * x).exp() * (3.0 * x).cos();
        let ip = UniformLagrange::new(&g, g.points().iter().map(|&x| f(x)).collect(), 10);
        for &x in &[-2.9991, -2.513, -0.001, 0.4567, 1.99, 2.9999] {
            assert_abs_diff_eq!(ip.eval(x).unwrap(), f(x), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(ip.eval(g.point(10)).unwrap(), f(g.point(10)), epsilon = 1e-15);
        assert!(ip.eval(3.5).is_none());
        // a degree-9 polynomial is reproduced exactly
        let poly = |x: f64| (0..10).fold(0.0, |acc, k| acc * x + (k as f64 - 4.5));
        let ip = UniformLagrange::new(&g, g.points().iter().map(|&x| poly(x)).collect(), 10);
        assert_abs_diff_eq!(ip.eval(0.123).unwrap(), poly(0.123), epsilon = 1e-9);
    }
}
