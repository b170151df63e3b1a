//! Forward models: optical, symplectic and photon-number marginals of a
//! density matrix, the characteristic function, and the closed-form
//! Gaussian marginals of thermal and shifted-thermal operators.
//!
//! Quadrature marginals are Fock-basis sums,
//! `w(x, θ) = Σ_mn ρ_mn ψ_m(x) ψ_n(x) e^{i(n−m)θ}`, and the symplectic
//! marginal follows from `w(x, μ, ν) = r^{−1} w(x/r, θ)` with
//! `r = √(μ²+ν²)`, `θ = atan2(ν, μ)`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{bail, Error, ErrorKind, Result};
use crate::fockspace::{
    displacement_block, hermite_wavefunctions, ComplexAmplitude, DensityMatrix, OrderingParam,
};
use crate::numerics::{disk_nodes, polar_mu_nu_nodes, trapezoid, AlphaNode, MuNuNode, ThetaGrid, UniformGrid};

const MODULE: &str = "marginals";

/// Imaginary residue above which a quadrature sum is reported as a
/// convention violation.
pub const RESIDUE_ERROR: f64 = 1e-8;
/// Imaginary residue below which it is silently discarded.
pub const RESIDUE_SILENT: f64 = 1e-10;

/// Default grids.
pub mod defaults {
    use super::*;

    pub const OPTICAL_X: (f64, f64, usize) = (-8.0, 8.0, 801);
    pub const THETA_COUNT: usize = 64;
    pub const RADIAL_MAX: f64 = 12.0;
    pub const RADIAL_COUNT: usize = 48;
    /// The symplectic x range scales with `RADIAL_MAX` so that every node's
    /// support fits on the grid at the optical grid spacing.
    pub const SYMPLECTIC_X: (f64, f64, usize) = (-72.0, 72.0, 7201);
    pub const ALPHA_RADIUS: f64 = 3.0;
    pub const ALPHA_ANGULAR: usize = 32;
    pub const ALPHA_RADIAL: usize = 24;
    pub const N_HARM: usize = 31;

    pub fn optical_x() -> UniformGrid {
        UniformGrid::new(OPTICAL_X.0, OPTICAL_X.1, OPTICAL_X.2).unwrap()
    }

    pub fn symplectic_x() -> UniformGrid {
        UniformGrid::new(SYMPLECTIC_X.0, SYMPLECTIC_X.1, SYMPLECTIC_X.2).unwrap()
    }

    pub fn theta() -> ThetaGrid {
        ThetaGrid::new(THETA_COUNT).unwrap()
    }

    pub fn mu_nu_nodes() -> Vec<MuNuNode> {
        polar_mu_nu_nodes(RADIAL_MAX, THETA_COUNT, RADIAL_COUNT, true).unwrap()
    }

    pub fn alpha_nodes() -> Vec<AlphaNode> {
        disk_nodes(ALPHA_RADIUS, ALPHA_ANGULAR, ALPHA_RADIAL).unwrap()
    }
}

/// `w(x, θ)` sampled on an `x × θ` product grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalMarginal {
    pub x_grid: UniformGrid,
    pub theta_grid: ThetaGrid,
    /// Rows indexed by x, columns by θ.
    pub values: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl OpticalMarginal {
    /// Trapezoid integral over x for each θ.
    pub fn row_integrals(&self) -> Vec<f64> {
        let h = self.x_grid.step();
        self.values.column_iter().map(|c| trapezoid(c.as_slice(), h)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }
}

/// `w(x, μ, ν)` sampled on an x grid times a list of `(μ, ν)` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMarginal {
    pub x_grid: UniformGrid,
    pub nodes: Vec<MuNuNode>,
    /// Rows indexed by x, columns by node.
    pub values: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl SymplecticMarginal {
    /// Trapezoid integral over x for each node.
    pub fn node_integrals(&self) -> Vec<f64> {
        let h = self.x_grid.step();
        self.values.column_iter().map(|c| trapezoid(c.as_slice(), h)).collect()
    }

    /// Largest radius among nodes with non-zero weight.
    pub fn covered_radius(&self) -> f64 {
        self.nodes.iter().filter(|n| n.weight != 0.0).map(|n| n.radius()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: f64) -> SymplecticMarginal {
        SymplecticMarginal { values: &self.values * a, ..self.clone() }
    }
}

/// `w(n, α)` for `n < n_max` at a list of weighted `α` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonMarginal {
    pub n_max: usize,
    pub nodes: Vec<AlphaNode>,
    /// Rows indexed by n, columns by node.
    pub values: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl PhotonMarginal {
    pub fn column_sums(&self) -> Vec<f64> {
        self.values.column_iter().map(|c| c.sum()).collect()
    }
}

fn hermitian_and_residue(rho: &DensityMatrix) -> (DMatrix<Complex64>, Option<DMatrix<Complex64>>) {
    if rho.is_exactly_hermitian() {
        return (rho.elements().clone(), None);
    }
    let e = rho.elements();
    let h = (e + e.adjoint()) * Complex64::new(0.5, 0.0);
    // −i(ρ − ρ†)/2 is Hermitian; its quadrature sum is the imaginary residue
    let k = (e - e.adjoint()) * Complex64::new(0.0, -0.5);
    (h, Some(k))
}

/// `Σ_mn H_mn ψ_m(x/r) ψ_n(x/r) e^{i(n−m)θ} / r` for Hermitian `H` at every
/// `(x, node)`. Nodes sharing a radius share the θ-harmonic decomposition
/// `h_d(y) = Σ_m H_{m,m+d} ψ_m(y) ψ_{m+d}(y)`.
fn quadrature_density(h: &DMatrix<Complex64>, xs: &[f64], polar: &[(f64, f64)]) -> DMatrix<f64> {
    let dim = h.nrows();
    let nx = xs.len();
    let mut rings: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &(r, _)) in polar.iter().enumerate() {
        rings.entry(r.to_bits()).or_default().push(i);
    }
    let cutoff = (2.0 * dim as f64 + 1.0).sqrt() + 12.0;
    let bands: Vec<usize> = (0..dim).filter(|&d| (0..dim - d).any(|m| h[(m, m + d)] != Complex64::new(0.0, 0.0))).collect();
    let rings: Vec<(f64, Vec<usize>)> = rings.into_iter().map(|(b, v)| (f64::from_bits(b), v)).collect();
    let columns: Vec<Vec<(usize, Vec<f64>)>> = rings
        .par_iter()
        .map(|(r, members)| {
            let r = *r;
            let mut harm = vec![Complex64::new(0.0, 0.0); nx * dim];
            let mut psi = vec![0.0; dim];
            let mut active = vec![false; nx];
            for (j, &x) in xs.iter().enumerate() {
                let y = x / r;
                if y.abs() > cutoff {
                    continue;
                }
                active[j] = true;
                hermite_wavefunctions(y, &mut psi);
                let row = &mut harm[j * dim..(j + 1) * dim];
                for &d in &bands {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..dim - d {
                        acc += h[(m, m + d)] * (psi[m] * psi[m + d]);
                    }
                    row[d] = acc;
                }
            }
            members
                .iter()
                .map(|&idx| {
                    let theta = polar[idx].1;
                    let phases: Vec<Complex64> =
                        (0..dim).map(|d| Complex64::from_polar(2.0, d as f64 * theta)).collect();
                    let col = (0..nx)
                        .map(|j| {
                            if !active[j] {
                                return 0.0;
                            }
                            let row = &harm[j * dim..(j + 1) * dim];
                            let mut v = row[0].re;
                            for &d in bands.iter().filter(|&&d| d > 0) {
                                v += row[d].re * phases[d].re - row[d].im * phases[d].im;
                            }
                            v / r
                        })
                        .collect();
                    (idx, col)
                })
                .collect()
        })
        .collect();
    let mut out = DMatrix::zeros(nx, polar.len());
    for (idx, col) in columns.into_iter().flatten() {
        out.column_mut(idx).copy_from_slice(&col);
    }
    out
}

fn evaluate_quadrature(
    rho: &DensityMatrix,
    xs: &[f64],
    polar: &[(f64, f64)],
    warnings: &mut Vec<String>,
) -> Result<DMatrix<f64>> {
    let (h, residue) = hermitian_and_residue(rho);
    let values = quadrature_density(&h, xs, polar);
    if let Some(k) = residue {
        let res = quadrature_density(&k, xs, polar);
        let worst = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if worst > RESIDUE_ERROR {
            bail!(
                MODULE,
                ConventionViolation,
                "imaginary residue {worst:e} of the quadrature sum exceeds {RESIDUE_ERROR:e}; input is not Hermitian"
            );
        }
        if worst > RESIDUE_SILENT {
            warnings.push(format!("discarded imaginary residue {worst:e}"));
        }
    }
    Ok(values)
}

fn boundary_check(values: &DMatrix<f64>, warnings: &mut Vec<String>) {
    let n = values.nrows();
    let edge = values.row(0).iter().chain(values.row(n - 1).iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    if edge > 1e-10 {
        warnings.push(format!("x grid does not cover the state support: boundary value {edge:e}"));
    }
}

/// Rotated-quadrature marginal `w(x, θ)`.
pub fn optical_marginal(rho: &DensityMatrix, x_grid: &UniformGrid, theta_grid: &ThetaGrid) -> Result<OpticalMarginal> {
    let xs = x_grid.points();
    let polar: Vec<(f64, f64)> = theta_grid.points().into_iter().map(|t| (1.0, t)).collect();
    let mut warnings = rho.meta().warnings.clone();
    let values = evaluate_quadrature(rho, &xs, &polar, &mut warnings)?;
    boundary_check(&values, &mut warnings);
    Ok(OpticalMarginal { x_grid: *x_grid, theta_grid: *theta_grid, values, warnings })
}

/// Marginal of `μq + νp` at every node, via the scaling identity
/// `w(x, μ, ν) = r^{−1} w(x/r, θ)`.
pub fn symplectic_marginal(rho: &DensityMatrix, x_grid: &UniformGrid, nodes: &[MuNuNode]) -> Result<SymplecticMarginal> {
    if nodes.is_empty() {
        bail!(MODULE, Range, "symplectic marginal needs at least one (mu, nu) node");
    }
    let mut polar = Vec::with_capacity(nodes.len());
    for n in nodes {
        let r = n.radius();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::new(MODULE, ErrorKind::SingularNode { mu: n.mu, nu: n.nu }));
        }
        polar.push((r, n.angle()));
    }
    let xs = x_grid.points();
    let mut warnings = rho.meta().warnings.clone();
    let values = evaluate_quadrature(rho, &xs, &polar, &mut warnings)?;
    boundary_check(&values, &mut warnings);
    Ok(SymplecticMarginal { x_grid: *x_grid, nodes: nodes.to_vec(), values, warnings })
}

/// Photon-count distribution of the displaced state,
/// `w(n, α) = Σ_kl ⟨n|D(α)|k⟩ ρ_kl ⟨l|D(α)†|n⟩`.
pub fn photon_marginal(rho: &DensityMatrix, n_max: usize, nodes: &[AlphaNode]) -> Result<PhotonMarginal> {
    let dim = rho.dim();
    if n_max == 0 || n_max > dim {
        bail!(MODULE, Range, "n_max must be in 1..={dim}, got {n_max}");
    }
    let cols: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|node| {
            let d = displacement_block(node.alpha, n_max, dim);
            let m = &d * rho.elements();
            (0..n_max)
                .map(|n| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..dim {
                        acc += m[(n, k)] * d[(n, k)].conj();
                    }
                    acc.re
                })
                .collect()
        })
        .collect();
    let mut values = DMatrix::zeros(n_max, nodes.len());
    for (j, c) in cols.iter().enumerate() {
        values.column_mut(j).copy_from_slice(c);
    }
    let mut warnings = rho.meta().warnings.clone();
    let honest = (dim as f64).sqrt() / 2.0;
    let worst = values
        .column_iter()
        .zip(nodes)
        .map(|(c, n)| (1.0 - c.sum(), n.alpha))
        .fold((0.0f64, Complex64::new(0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a });
    if worst.0 > 1e-6 {
        warnings.push(format!(
            "truncation: photon column deficit {:e} at alpha = {} (honest radius {honest:.3})",
            worst.0, worst.1
        ));
    }
    Ok(PhotonMarginal { n_max, nodes: nodes.to_vec(), values, warnings })
}

/// `χ(k) = ⟨e^{ik(cos θ q + sin θ p)}⟩ = tr(ρ D(ik e^{iθ}/√2))`.
pub fn characteristic_function(rho: &DensityMatrix, k: f64, theta: f64) -> Result<Complex64> {
    if !k.is_finite() || !theta.is_finite() {
        bail!(MODULE, Domain, "characteristic function needs finite k and theta");
    }
    let alpha = Complex64::new(0.0, k) * Complex64::from_polar(1.0 / SQRT_2, theta);
    let dim = rho.dim();
    let d = displacement_block(alpha, dim, dim);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..dim {
        for n in 0..dim {
            acc += rho.get(m, n) * d[(n, m)];
        }
    }
    Ok(acc)
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Symplectic marginal of the thermal state at temperature `t`:
/// a centred Gaussian of variance `(μ²+ν²) coth(1/2T) / 2`.
pub fn thermal_symplectic_closed_form(t: f64, x: f64, mu: f64, nu: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        bail!(MODULE, Domain, "temperature must be positive, got {t}");
    }
    let r2 = mu * mu + nu * nu;
    if !(r2 > 0.0) || !r2.is_finite() {
        bail!(MODULE, Domain, "mu^2 + nu^2 must be positive, got {r2}");
    }
    let spread = r2 * coth(0.5 / t);
    Ok((PI * spread).powf(-0.5) * (-x * x / spread).exp())
}

/// Which member of the shifted-kernel pair to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSign {
    /// Marginal of `T(α, s)`; needs `s < −1`.
    Plus,
    /// Marginal of `T(−α, −s)`; needs `s > 1`.
    Minus,
}

/// Precomputed shape of a shifted-kernel marginal for fixed `(s, sign)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShiftedKernel {
    prefactor: f64,
    coth: f64,
    sign: f64,
}

impl ShiftedKernel {
    pub(crate) fn new(s: f64, sign: KernelSign) -> Result<Self> {
        let ok = match sign {
            KernelSign::Plus => s < -1.0,
            KernelSign::Minus => s > 1.0,
        };
        if !ok || !s.is_finite() {
            let interval = match sign {
                KernelSign::Plus => "s < -1",
                KernelSign::Minus => "s > 1",
            };
            bail!(MODULE, Domain, "shifted kernel with sign {sign:?} is a real Gaussian only for {interval}, got s = {s}");
        }
        let param = OrderingParam::new(s)?;
        let t = param.temperature().expect("|s| > 1");
        let boltzmann = (-1.0 / t).exp();
        // the kernel operator is [2/(1∓s)] times the non-normalized shifted
        // thermal operator, whose marginal carries 1/(1 − e^{−1/T})
        let ordering = match sign {
            KernelSign::Plus => 2.0 / (1.0 - s),
            KernelSign::Minus => 2.0 / (1.0 + s),
        };
        Ok(ShiftedKernel {
            prefactor: ordering / (1.0 - boltzmann),
            coth: coth(0.5 / t),
            sign: if sign == KernelSign::Plus { 1.0 } else { -1.0 },
        })
    }

    pub(crate) fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub(crate) fn coth(&self) -> f64 {
        self.coth
    }

    /// Centre of the Gaussian in x.
    pub(crate) fn center(&self, alpha: Complex64, mu: f64, nu: f64) -> f64 {
        self.sign * SQRT_2 * (mu * alpha.re + nu * alpha.im)
    }

    pub(crate) fn eval(&self, alpha: Complex64, x: f64, mu: f64, nu: f64) -> f64 {
        let spread = (mu * mu + nu * nu) * self.coth;
        let dx = x - self.center(alpha, mu, nu);
        self.prefactor * (PI * spread).powf(-0.5) * (-dx * dx / spread).exp()
    }
}

/// Symplectic marginal of the `s`-ordered kernel operators:
/// `Plus` gives the marginal of `T(α, s)`, `Minus` that of `T(−α, −s)`.
/// Both are Gaussians in x with spread `(μ²+ν²) coth(1/2T)`, centred at
/// `±√2 (μ Re α + ν Im α)`.
pub fn shifted_kernel_marginal(
    alpha: ComplexAmplitude,
    s: f64,
    x: f64,
    mu: f64,
    nu: f64,
    sign: KernelSign,
) -> Result<f64> {
    let kernel = ShiftedKernel::new(s, sign)?;
    if !(mu * mu + nu * nu > 0.0) {
        bail!(MODULE, Domain, "mu^2 + nu^2 must be positive");
    }
    Ok(kernel.eval(alpha.value(), x, mu, nu))
}

/// Total x-integral of [`shifted_kernel_marginal`]: the kernel prefactor
/// times `√(π (μ²+ν²) coth)` over the Gaussian normalization.
pub fn shifted_kernel_weight(s: f64, sign: KernelSign) -> Result<f64> {
    Ok(ShiftedKernel::new(s, sign)?.prefactor())
}
