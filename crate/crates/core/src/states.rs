//! Reference states used as ground truth by the transforms.
//!
//! Every constructor renormalizes to unit trace at the working dimension
//! and records the pre-rescale deficit in the state metadata.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::fockspace::{ln_factorial, ComplexAmplitude, DensityMatrix, StateMeta, MAX_FOCK_DIM};

const MODULE: &str = "states";

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_FOCK_DIM {
        bail!(MODULE, Range, "dim must be in 1..={MAX_FOCK_DIM}, got {dim}");
    }
    Ok(())
}

/// Coherent amplitudes `e^{−|β|²/2} β^n / √n!` for `n < dim`, unnormalized.
fn coherent_vector(beta: Complex64, dim: usize) -> DVector<Complex64> {
    let r2 = beta.norm_sqr();
    DVector::from_fn(dim, |n, _| {
        if n == 0 {
            return Complex64::new((-r2 / 2.0).exp(), 0.0);
        }
        if r2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ln_mag = -r2 / 2.0 + n as f64 * beta.norm().ln() - 0.5 * ln_factorial(n);
        Complex64::from_polar(ln_mag.exp(), n as f64 * beta.arg())
    })
}

fn from_vector(psi: DVector<Complex64>, mut warnings: Vec<String>) -> Result<DensityMatrix> {
    let norm2 = psi.norm_squared();
    let psi = psi / Complex64::new(norm2.sqrt(), 0.0);
    let rho = DensityMatrix::from_pure(&psi)?;
    let deficit = 1.0 - norm2;
    if deficit > 1e-6 {
        warnings.push(format!("truncation: trace deficit {deficit:e} before renormalization"));
    }
    Ok(rho.with_meta(StateMeta { trace_deficit: deficit, warnings }))
}

/// `|n⟩⟨n|`.
pub fn fock_state(n: usize, dim: usize) -> Result<DensityMatrix> {
    check_dim(dim)?;
    if n >= dim {
        bail!(MODULE, Range, "Fock index {n} must be below dim {dim}");
    }
    let mut e = DMatrix::zeros(dim, dim);
    e[(n, n)] = Complex64::new(1.0, 0.0);
    DensityMatrix::from_elements(e)
}

/// `|β⟩⟨β|` truncated and renormalized.
pub fn coherent_state(beta: ComplexAmplitude, dim: usize) -> Result<DensityMatrix> {
    check_dim(dim)?;
    let mut warnings = Vec::new();
    if beta.value().norm_sqr() > dim as f64 / 4.0 {
        warnings.push(format!("truncation: |beta|^2 = {} exceeds dim/4 = {}", beta.value().norm_sqr(), dim as f64 / 4.0));
    }
    from_vector(coherent_vector(beta.value(), dim), warnings)
}

/// Canonical state `(1 − e^{−1/T}) e^{−a†a/T}`.
pub fn thermal_state(t: f64, dim: usize) -> Result<DensityMatrix> {
    check_dim(dim)?;
    if !(t > 0.0) || !t.is_finite() {
        bail!(MODULE, Domain, "temperature must be positive and finite, got {t}");
    }
    let q = (-1.0 / t).exp();
    let pops: Vec<f64> = (0..dim).map(|n| (1.0 - q) * (-(n as f64) / t).exp()).collect();
    let total: f64 = pops.iter().sum();
    let mut e = DMatrix::zeros(dim, dim);
    for (n, p) in pops.iter().enumerate() {
        e[(n, n)] = Complex64::new(p / total, 0.0);
    }
    let mut warnings = Vec::new();
    let tail = (-(dim as f64) / t).exp();
    if tail >= 1e-12 {
        warnings.push(format!("truncation: thermal tail e^(-dim/T) = {tail:e}"));
    }
    let rho = DensityMatrix::from_elements(e)?;
    Ok(rho.with_meta(StateMeta { trace_deficit: 1.0 - total, warnings }))
}

/// Mean occupation `(e^{1/T} − 1)^{−1}` of the untruncated thermal state.
pub fn mean_occupation(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        bail!(MODULE, Domain, "temperature must be positive and finite, got {t}");
    }
    Ok(1.0 / (1.0 / t).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Normalized projector onto `|β⟩ ± |−β⟩`.
pub fn cat_state(beta: ComplexAmplitude, parity: Parity, dim: usize) -> Result<DensityMatrix> {
    check_dim(dim)?;
    let b = beta.value();
    if parity == Parity::Odd && b.norm() == 0.0 {
        bail!(MODULE, Domain, "odd cat state is the zero vector at beta = 0");
    }
    let plus = coherent_vector(b, dim);
    let minus = DVector::from_fn(dim, |n, _| if n % 2 == 0 { plus[n] } else { -plus[n] });
    let v = match parity {
        Parity::Even => plus + minus,
        Parity::Odd => plus - minus,
    };
    // untruncated norm² of |β⟩ ± |−β⟩ is 2(1 ± e^{−2|β|²})
    let full = match parity {
        Parity::Even => 2.0 * (1.0 + (-2.0 * b.norm_sqr()).exp()),
        Parity::Odd => -2.0 * (-2.0 * b.norm_sqr()).exp_m1(),
    };
    let norm2 = v.norm_squared();
    if !(norm2 > 0.0) {
        bail!(MODULE, Domain, "cat superposition vanishes at the working dimension");
    }
    let mut warnings = Vec::new();
    if b.norm_sqr() > dim as f64 / 4.0 {
        warnings.push(format!("truncation: |beta|^2 = {} exceeds dim/4 = {}", b.norm_sqr(), dim as f64 / 4.0));
    }
    let rho = from_vector(v / Complex64::new(full.sqrt(), 0.0), warnings)?;
    Ok(rho)
}
