//! Conversions among the three marginals and from marginals back to the
//! density matrix.
//!
//! Sign conventions: the symplectic inversion pairs `e^{+ix}` with
//! `D(γ)`, `γ = (ν − iμ)/√2`, giving
//! `ρ = (2π)^{−1} ∫ dμ dν χ(μ, ν) D(γ)` with `χ = ∫ e^{ix} w(x, μ, ν) dx`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{bail, Error, ErrorKind, Result};
use crate::fockspace::{displacement_block, laguerre_sequence, DensityMatrix, OrderingParam, StateMeta, MAX_FOCK_DIM};
use crate::marginals::{KernelSign, OpticalMarginal, PhotonMarginal, ShiftedKernel, SymplecticMarginal};
use crate::numerics::{
    fourier_columns, theta_fourier, trapezoid, AlphaNode, MuNuNode, ThetaGrid, UniformGrid, UniformLagrange,
};

const MODULE: &str = "transforms";

/// Smallest covered `(μ, ν)` radius accepted by the symplectic inversions.
pub const MIN_COVERAGE_RADIUS: f64 = 6.0;
/// Uniform bound below which kernel series terms are dropped.
pub const SERIES_TERM_BOUND: f64 = 1e-12;
/// Imaginary part tolerated (then discarded) in real-valued outputs.
pub const IMAG_RESIDUE_BOUND: f64 = 1e-6;

/// Stencil size of the x interpolation in the homogeneous extension.
pub const X_INTERP_ORDER: usize = 10;

const CHUNK: usize = 64;

/// Photon-number distribution `P(n)`, `n < n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    pub probabilities: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PhotonDistribution {
    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// How `optical_to_symplectic` extends data off the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionMode {
    /// Harmonic-polynomial extension `cos θ → μ`, `sin θ → ν`.
    Literal,
    /// Scaling `w(x, μ, ν) = r^{−1} w(x/r, θ)`.
    Homogeneous,
}

/// Sums `f(chunk)` over fixed-size chunks of `0..n` in index order, so the
/// result does not depend on the thread count.
fn ordered_chunk_sum<T, F>(n: usize, zero: T, f: F, add: impl Fn(T, T) -> T) -> T
where
    T: Send + Clone,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts: Vec<T> = starts.par_iter().map(|&a| f(a..(a + CHUNK).min(n))).collect();
    parts.into_iter().fold(zero, add)
}

/// Per-node data of the symplectic inversion: `γ = (ν − iμ)/√2` and
/// `coef = weight · χ / 2π` with `χ = ∫ e^{ix} w dx`.
struct SpectralNode {
    gamma: Complex64,
    coef: Complex64,
}

fn spectral_nodes(w: &SymplecticMarginal) -> Result<Vec<SpectralNode>> {
    let covered = w.covered_radius();
    if covered < MIN_COVERAGE_RADIUS {
        bail!(
            MODULE,
            Coverage,
            "(mu, nu) nodes cover radius {covered:.3}; at least {MIN_COVERAGE_RADIUS} is needed"
        );
    }
    if w.values.ncols() != w.nodes.len() || w.values.nrows() != w.x_grid.count {
        bail!(MODULE, Range, "symplectic marginal values do not match its grids");
    }
    let xs = w.x_grid.points();
    let (cos, sin): (Vec<f64>, Vec<f64>) = xs.iter().map(|x| (x.cos(), x.sin())).unzip();
    let h = w.x_grid.step();
    let mut out = Vec::with_capacity(w.nodes.len());
    for (j, node) in w.nodes.iter().enumerate() {
        if node.weight == 0.0 {
            continue;
        }
        let col = w.values.column(j);
        let re: Vec<f64> = col.iter().zip(&cos).map(|(v, c)| v * c).collect();
        let im: Vec<f64> = col.iter().zip(&sin).map(|(v, s)| v * s).collect();
        let chi = Complex64::new(trapezoid(&re, h), trapezoid(&im, h));
        if !chi.re.is_finite() || !chi.im.is_finite() {
            bail!(MODULE, Numeric, "non-finite integrand at node ({}, {})", node.mu, node.nu);
        }
        out.push(SpectralNode {
            gamma: Complex64::new(node.nu, -node.mu) / SQRT_2,
            coef: chi * (node.weight / (2.0 * PI)),
        });
    }
    Ok(out)
}

/// Density matrix from the symplectic marginal,
/// `ρ = (2π)^{−1} ∫ dμ dν ∫ dx e^{ix} w(x, μ, ν) D(γ)`. The lower triangle is
/// computed and mirrored, so the result is Hermitian by construction.
pub fn symplectic_to_density(w: &SymplecticMarginal, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 || dim > MAX_FOCK_DIM {
        bail!(MODULE, Range, "dim must be in 1..={MAX_FOCK_DIM}, got {dim}");
    }
    let nodes = spectral_nodes(w)?;
    let acc = ordered_chunk_sum(
        nodes.len(),
        DMatrix::<Complex64>::zeros(dim, dim),
        |range| {
            let mut m = DMatrix::<Complex64>::zeros(dim, dim);
            for node in &nodes[range] {
                let d = displacement_block(node.gamma, dim, dim);
                for c in 0..dim {
                    for r in c..dim {
                        m[(r, c)] += node.coef * d[(r, c)];
                    }
                }
            }
            m
        },
        |a, b| a + b,
    );
    let mut e = acc;
    for c in 0..dim {
        e[(c, c)] = Complex64::new(e[(c, c)].re, 0.0);
        for r in c + 1..dim {
            e[(c, r)] = e[(r, c)].conj();
        }
    }
    let rho = DensityMatrix::from_elements(e)?;
    let trace = rho.trace().re;
    let mut warnings = w.warnings.clone();
    if (trace - 1.0).abs() > 1e-2 {
        warnings.push(format!("reconstructed trace {trace}"));
    }
    Ok(rho.with_meta(StateMeta { trace_deficit: 1.0 - trace, warnings }))
}

fn check_imag(values: &DMatrix<Complex64>, what: &str) -> Result<DMatrix<f64>> {
    let worst = values.iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
    if worst > IMAG_RESIDUE_BOUND {
        bail!(MODULE, ConventionViolation, "{what} has imaginary residue {worst:e}");
    }
    Ok(values.map(|v| v.re))
}

/// `Σ_nodes coef · e^{2i Im(α γ*)} e^{−|γ|²/2} L_n(|γ|²)` for every `(n, α)`.
fn displaced_populations(nodes: &[SpectralNode], n_max: usize, alphas: &[Complex64]) -> DMatrix<Complex64> {
    let diag: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|node| {
            let g2 = node.gamma.norm_sqr();
            let mut lag = vec![0.0; n_max];
            laguerre_sequence(0.0, g2, &mut lag);
            let damp = (-g2 / 2.0).exp();
            lag.iter().map(|l| node.coef * (damp * l)).collect()
        })
        .collect();
    let cols: Vec<Vec<Complex64>> = alphas
        .par_iter()
        .map(|&alpha| {
            let mut col = vec![Complex64::new(0.0, 0.0); n_max];
            for (node, d) in nodes.iter().zip(&diag) {
                let phase = Complex64::from_polar(1.0, 2.0 * (alpha * node.gamma.conj()).im);
                for (c, v) in col.iter_mut().zip(d) {
                    *c += phase * v;
                }
            }
            col
        })
        .collect();
    DMatrix::from_fn(n_max, alphas.len(), |n, j| cols[j][n])
}

/// `P(n) = (2π)^{−1} ∫ e^{ix − r²/4} w L_n(r²/2)`, the diagonal of
/// [`symplectic_to_density`].
pub fn symplectic_to_photon_dist(w: &SymplecticMarginal, n_max: usize) -> Result<PhotonDistribution> {
    if n_max == 0 || n_max > 2 * MAX_FOCK_DIM {
        bail!(MODULE, Range, "n_max must be in 1..={}, got {n_max}", 2 * MAX_FOCK_DIM);
    }
    let nodes = spectral_nodes(w)?;
    let p = check_imag(&displaced_populations(&nodes, n_max, &[Complex64::new(0.0, 0.0)]), "photon distribution")?;
    Ok(PhotonDistribution { probabilities: p.column(0).iter().copied().collect(), warnings: w.warnings.clone() })
}

/// Photon-number marginal `w(n, α)` from the symplectic marginal.
pub fn symplectic_to_photon_marginal(
    w: &SymplecticMarginal,
    n_max: usize,
    alpha_nodes: &[AlphaNode],
) -> Result<PhotonMarginal> {
    if n_max == 0 || n_max > 2 * MAX_FOCK_DIM {
        bail!(MODULE, Range, "n_max must be in 1..={}, got {n_max}", 2 * MAX_FOCK_DIM);
    }
    let nodes = spectral_nodes(w)?;
    let alphas: Vec<Complex64> = alpha_nodes.iter().map(|a| a.alpha).collect();
    let values = check_imag(&displaced_populations(&nodes, n_max, &alphas), "photon marginal")?;
    Ok(PhotonMarginal { n_max, nodes: alpha_nodes.to_vec(), values, warnings: w.warnings.clone() })
}

/// Index after the last series term at or above [`SERIES_TERM_BOUND`], or a
/// divergence error when the final five terms are all above the bound and
/// strictly growing.
fn series_extent(terms: &[f64], alpha: Complex64) -> Result<usize> {
    let n = terms.len();
    if n >= 5 {
        let tail = &terms[n - 5..];
        if tail.iter().all(|t| t.abs() >= SERIES_TERM_BOUND) && tail.windows(2).all(|p| p[1].abs() > p[0].abs()) {
            return Err(Error::new(
                MODULE,
                ErrorKind::Divergence {
                    alpha,
                    detail: format!("terms grow through m = {}..{} (last {:e})", n - 5, n - 1, tail[4]),
                },
            ));
        }
    }
    Ok(terms.iter().rposition(|t| t.abs() >= SERIES_TERM_BOUND).map_or(0, |i| i + 1))
}

/// `S(α) = Σ_m [2/(1−s)] ((s+1)/(s−1))^m w(m, α)` per node, truncated at a
/// uniform term bound.
fn kernel_series(w: &PhotonMarginal, s: OrderingParam, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let ratio = s.kernel_ratio();
    let mut terms = Vec::with_capacity(w.nodes.len());
    let mut stop = 0;
    for (j, node) in w.nodes.iter().enumerate() {
        let t: Vec<f64> = (0..w.n_max).map(|m| ratio.powi(m as i32) * w.values[(m, j)]).collect();
        stop = stop.max(series_extent(&t, node.alpha)?);
        terms.push(t);
    }
    if stop == w.n_max && w.n_max > 0 {
        warnings.push(format!("kernel series truncated by count at n_max = {}", w.n_max));
    }
    Ok(terms.iter().map(|t| s.prefactor() * t[..stop].iter().sum::<f64>()).collect())
}

/// `T(−α, −s)` with `D(−α)` taken from a space of `inner ≥ dim` states.
fn inversion_kernel(alpha: Complex64, s: f64, dim: usize, inner: usize) -> DMatrix<Complex64> {
    // −s < −1 gives the decaying ratio (s−1)/(s+1)
    let ratio = (s - 1.0) / (s + 1.0);
    let pref = 2.0 / (1.0 + s);
    let u = displacement_block(-alpha, dim, inner);
    let mut scaled = u.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::new(pref * ratio.powi(k as i32), 0.0);
    }
    scaled * u.adjoint()
}

/// Density matrix from the photon-number marginal,
/// `ρ = Σ_n ∫ d²α/π w(n, α) [2/(1−s)] ((s+1)/(s−1))^n T(−α, −s)`.
pub fn photon_to_density(w: &PhotonMarginal, s: f64, dim: usize) -> Result<DensityMatrix> {
    let s = OrderingParam::for_inversion(s)?;
    if dim == 0 || dim > MAX_FOCK_DIM {
        bail!(MODULE, Range, "dim must be in 1..={MAX_FOCK_DIM}, got {dim}");
    }
    let mut warnings = w.warnings.clone();
    let radius = w.nodes.iter().fold(0.0f64, |a, n| a.max(n.alpha.norm()));
    if radius < 2.0 * (dim as f64).sqrt() {
        warnings.push(format!(
            "truncation: alpha disk radius {radius:.3} is below 2*sqrt(dim) = {:.3}",
            2.0 * (dim as f64).sqrt()
        ));
    }
    let series = kernel_series(w, s, &mut warnings)?;
    let inner = (dim + 40).min(2 * MAX_FOCK_DIM);
    let sv = s.s();
    let acc = ordered_chunk_sum(
        w.nodes.len(),
        DMatrix::<Complex64>::zeros(dim, dim),
        |range| {
            let mut m = DMatrix::<Complex64>::zeros(dim, dim);
            for j in range {
                let c = w.nodes[j].weight * series[j];
                if c != 0.0 {
                    m += inversion_kernel(w.nodes[j].alpha, sv, dim, inner) * Complex64::new(c, 0.0);
                }
            }
            m
        },
        |a, b| a + b,
    );
    if acc.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        bail!(MODULE, Numeric, "photon-number inversion produced non-finite entries");
    }
    let mut rho = DensityMatrix::from_elements(acc)?;
    rho.hermitize();
    let trace = rho.trace().re;
    Ok(rho.with_meta(StateMeta { trace_deficit: 1.0 - trace, warnings }))
}

/// Adds `amp · exp(−(x − c)²/spread)` to `out` on a uniform grid, stepping
/// outward from the centre with a multiplicative recurrence and stopping
/// once the Gaussian drops below `1e−18` of its peak.
fn add_gaussian(out: &mut [f64], grid: &UniformGrid, amp: f64, c: f64, spread: f64) {
    let n = grid.count;
    let h = grid.step();
    let j0 = grid.nearest_index(c);
    let x0 = grid.point(j0);
    let g0 = (-(x0 - c).powi(2) / spread).exp();
    let step_ratio = (-2.0 * h * h / spread).exp();
    let floor = 1e-18;
    out[j0] += amp * g0;
    // upward: g_{j+1}/g_j = exp(−(2(x_j − c)h + h²)/spread)
    let mut g = g0;
    let mut ratio = (-(2.0 * (x0 - c) * h + h * h) / spread).exp();
    for v in out.iter_mut().take(n).skip(j0 + 1) {
        g *= ratio;
        ratio *= step_ratio;
        if g < floor && ratio < 1.0 {
            break;
        }
        *v += amp * g;
    }
    let mut g = g0;
    let mut ratio = (-(-2.0 * (x0 - c) * h + h * h) / spread).exp();
    for v in out[..j0].iter_mut().rev() {
        g *= ratio;
        ratio *= step_ratio;
        if g < floor && ratio < 1.0 {
            break;
        }
        *v += amp * g;
    }
}

/// Symplectic marginal from the photon-number marginal,
/// `w(x, μ, ν) = ∫ d²α/π S(α) w_{−α,−s}(x, μ, ν)`.
pub fn photon_to_symplectic(
    w: &PhotonMarginal,
    s: f64,
    x_grid: &UniformGrid,
    nodes: &[MuNuNode],
) -> Result<SymplecticMarginal> {
    let s = OrderingParam::for_inversion(s)?;
    for n in nodes {
        if !(n.radius() > 0.0) {
            return Err(Error::new(MODULE, ErrorKind::SingularNode { mu: n.mu, nu: n.nu }));
        }
    }
    let mut warnings = w.warnings.clone();
    let series = kernel_series(w, s, &mut warnings)?;
    let kernel = ShiftedKernel::new(s.s(), KernelSign::Minus)?;
    let norm = kernel.prefactor() / PI.sqrt();
    let cols: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|node| {
            let spread = (node.mu * node.mu + node.nu * node.nu) * kernel.coth();
            let amp0 = norm / spread.sqrt();
            let mut col = vec![0.0; x_grid.count];
            for (a, sa) in w.nodes.iter().zip(&series) {
                let amp = a.weight * sa * amp0;
                if amp != 0.0 {
                    add_gaussian(&mut col, x_grid, amp, kernel.center(a.alpha, node.mu, node.nu), spread);
                }
            }
            col
        })
        .collect();
    let values = DMatrix::from_fn(x_grid.count, nodes.len(), |i, j| cols[j][i]);
    if values.iter().any(|v| !v.is_finite()) {
        bail!(MODULE, Numeric, "photon-to-symplectic produced non-finite values");
    }
    Ok(SymplecticMarginal { x_grid: *x_grid, nodes: nodes.to_vec(), values, warnings })
}

/// Optical marginal from the photon-number marginal: the symplectic result
/// at `(μ, ν) = (cos θ, sin θ)`.
pub fn photon_to_optical(
    w: &PhotonMarginal,
    s: f64,
    x_grid: &UniformGrid,
    theta_grid: &ThetaGrid,
) -> Result<OpticalMarginal> {
    let nodes: Vec<MuNuNode> =
        theta_grid.points().iter().map(|t| MuNuNode { mu: t.cos(), nu: t.sin(), weight: 0.0 }).collect();
    let sym = photon_to_symplectic(w, s, x_grid, &nodes)?;
    Ok(OpticalMarginal { x_grid: *x_grid, theta_grid: *theta_grid, values: sym.values, warnings: sym.warnings })
}

/// A ring of nodes on one radius with uniformly spaced angles.
struct Ring {
    radius: f64,
    theta0: f64,
    /// Column indices ordered by angle.
    columns: Vec<usize>,
}

fn rings(nodes: &[MuNuNode]) -> Vec<Ring> {
    let mut sorted: Vec<usize> = (0..nodes.len()).collect();
    sorted.sort_by(|&a, &b| nodes[a].radius().total_cmp(&nodes[b].radius()));
    let mut out: Vec<Ring> = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let r = nodes[sorted[start]].radius();
        let mut end = start + 1;
        while end < sorted.len() && (nodes[sorted[end]].radius() - r).abs() <= 1e-12 * r.max(1.0) {
            end += 1;
        }
        let mut cols = sorted[start..end].to_vec();
        let angle = |i: usize| nodes[i].angle().rem_euclid(2.0 * PI);
        cols.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
        let n = cols.len();
        let theta0 = angle(cols[0]);
        let uniform = cols
            .iter()
            .enumerate()
            .all(|(k, &c)| (angle(c) - theta0 - 2.0 * PI * k as f64 / n as f64).abs() < 1e-9);
        if uniform {
            out.push(Ring { radius: r, theta0, columns: cols });
        }
        start = end;
    }
    out
}

/// Values of one ring at angle `theta`: the node column itself when a node
/// sits at `theta`, trigonometric interpolation otherwise.
fn ring_at(w: &SymplecticMarginal, ring: &Ring, theta: f64) -> Result<Vec<f64>> {
    let n = ring.columns.len();
    let step = 2.0 * PI / n as f64;
    let pos = (theta - ring.theta0).rem_euclid(2.0 * PI) / step;
    let k = pos.round();
    if (pos - k).abs() < 1e-9 {
        let c = ring.columns[(k as usize) % n];
        return Ok(w.values.column(c).iter().copied().collect());
    }
    let block = DMatrix::from_fn(w.values.nrows(), n, |i, j| w.values[(i, ring.columns[j])]);
    let series = fourier_columns(&block, ring.theta0, (n - 1) / 2)?;
    Ok(series.resynthesize(theta))
}

/// Restriction to the unit circle, `w(x, θ) = w(x, cos θ, sin θ)`. Exact on
/// shared nodes; otherwise trigonometric in θ and linear in r.
pub fn symplectic_to_optical(w: &SymplecticMarginal, theta_grid: &ThetaGrid) -> Result<OpticalMarginal> {
    let rings = rings(&w.nodes);
    let exact = rings.iter().find(|r| (r.radius - 1.0).abs() <= 1e-12);
    let below = rings.iter().filter(|r| r.radius < 1.0).last();
    let above = rings.iter().find(|r| r.radius > 1.0);
    let nx = w.values.nrows();
    let mut values = DMatrix::zeros(nx, theta_grid.count);
    for (j, theta) in theta_grid.points().into_iter().enumerate() {
        let col = match (exact, below, above) {
            (Some(ring), _, _) => ring_at(w, ring, theta)?,
            (None, Some(lo), Some(hi)) => {
                let t = (1.0 - lo.radius) / (hi.radius - lo.radius);
                let a = ring_at(w, lo, theta)?;
                let b = ring_at(w, hi, theta)?;
                a.iter().zip(&b).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            }
            _ => bail!(MODULE, Coverage, "the unit circle lies outside the radial range of the (mu, nu) rings"),
        };
        values.column_mut(j).copy_from_slice(&col);
    }
    Ok(OpticalMarginal { x_grid: w.x_grid, theta_grid: *theta_grid, values, warnings: w.warnings.clone() })
}

/// Symplectic marginal on `nodes` from the optical marginal, on the input
/// x grid.
pub fn optical_to_symplectic(
    w: &OpticalMarginal,
    nodes: &[MuNuNode],
    n_harm: usize,
    mode: ExtensionMode,
) -> Result<SymplecticMarginal> {
    let series = theta_fourier(w, n_harm)?;
    let nx = w.x_grid.count;
    let cols: Vec<Vec<f64>> = match mode {
        ExtensionMode::Literal => nodes.par_iter().map(|n| series.polynomial_extension(n.mu, n.nu)).collect(),
        ExtensionMode::Homogeneous => {
            for n in nodes {
                if !(n.radius() > 0.0) {
                    return Err(Error::new(MODULE, ErrorKind::SingularNode { mu: n.mu, nu: n.nu }));
                }
            }
            let xs = w.x_grid.points();
            nodes
                .par_iter()
                .map(|n| {
                    let r = n.radius();
                    let at_theta = series.resynthesize(n.angle());
                    if r == 1.0 {
                        return at_theta;
                    }
                    let interp = UniformLagrange::new(&w.x_grid, at_theta, X_INTERP_ORDER);
                    xs.iter().map(|x| interp.eval(x / r).unwrap_or(0.0) / r).collect()
                })
                .collect()
        }
    };
    let values = DMatrix::from_fn(nx, nodes.len(), |i, j| cols[j][i]);
    Ok(SymplecticMarginal { x_grid: w.x_grid, nodes: nodes.to_vec(), values, warnings: w.warnings.clone() })
}
