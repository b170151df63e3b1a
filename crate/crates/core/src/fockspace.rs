//! Special functions and Fock-basis operator matrix elements.
//!
//! All modules share one set of conventions: `hbar = 1`,
//! `q = (a + a†)/√2`, `p = (a − a†)/(i√2)` and
//! `D(α) = exp(α a† − α* a)`. With these, the rotated quadrature
//! `cos θ q + sin θ p` equals `(a e^{−iθ} + a† e^{iθ})/√2` and the
//! oscillator eigenfunctions are
//! `ψ_n(x) = (2^n n! √π)^{−1/2} H_n(x) e^{−x²/2}`.
//!
//! The truncation dimension is always passed explicitly.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{bail, Error, ErrorKind, Result};

const MODULE: &str = "fockspace";

/// Conventions stamp written into every artifact file.
pub const CONVENTIONS: &str = "hbar=1;q=(a+adag)/sqrt2;z=1";

/// Largest supported Fock truncation.
pub const MAX_FOCK_DIM: usize = 128;

/// Hermiticity tolerance of a valid density matrix.
pub const TOL_HERMITIAN: f64 = 1e-12;
/// Trace tolerance of a valid, normalized density matrix.
pub const TOL_TRACE: f64 = 1e-10;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; 2 * MAX_FOCK_DIM + 1];
        for k in 1..t.len() {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// `ln n!` from a cached table of log-gamma values.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorials();
    if n < table.len() {
        table[n]
    } else {
        table[table.len() - 1]
            + ((table.len())..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// A phase-space displacement `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexAmplitude(Complex64);

impl ComplexAmplitude {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            bail!(MODULE, Domain, "amplitude components must be finite, got {z}");
        }
        Ok(ComplexAmplitude(z))
    }

    pub fn zero() -> Self {
        ComplexAmplitude(Complex64::new(0.0, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }
}

impl From<ComplexAmplitude> for Complex64 {
    fn from(a: ComplexAmplitude) -> Self {
        a.0
    }
}

/// Bookkeeping carried alongside a density matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateMeta {
    /// `1 − trace` before any renormalization (generators), or after
    /// reconstruction (transforms).
    pub trace_deficit: f64,
    pub warnings: Vec<String>,
}

/// A state `ρ` in the truncated Fock basis `|0⟩ … |dim−1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
    meta: StateMeta,
}

impl DensityMatrix {
    /// Wraps a square matrix. No physicality check is made; see [`DensityMatrix::validate`].
    pub fn from_elements(elements: DMatrix<Complex64>) -> Result<Self> {
        let dim = elements.nrows();
        if dim == 0 || elements.ncols() != dim {
            bail!(
                MODULE,
                Range,
                "density matrix must be square and non-empty, got {}x{}",
                elements.nrows(),
                elements.ncols()
            );
        }
        if dim > MAX_FOCK_DIM {
            bail!(MODULE, Range, "dim {dim} exceeds supported maximum {MAX_FOCK_DIM}");
        }
        if elements.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            bail!(MODULE, Numeric, "density matrix has non-finite entries");
        }
        Ok(DensityMatrix { elements, meta: StateMeta::default() })
    }

    /// Builds the pure state `|ψ⟩⟨ψ|` (no normalization).
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        Self::from_elements(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn meta(&self) -> &StateMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut StateMeta {
        &mut self.meta
    }

    pub fn with_meta(mut self, meta: StateMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    pub fn trace(&self) -> Complex64 {
        self.elements.trace()
    }

    /// Photon-number populations `ρ_nn` (real parts).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.elements[(n, n)].re).collect()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in m..d {
                let e = (self.elements[(m, n)] - self.elements[(n, m)].conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        let d = self.dim();
        (0..d).all(|m| (m..d).all(|n| self.elements[(m, n)] == self.elements[(n, m)].conj()))
    }

    /// Replaces `ρ` by `(ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        let h = (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        self.elements = h;
    }

    pub fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// `Re tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.elements * &self.elements).trace().re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.hermitian_part().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &DVector<Complex64>) -> Complex64 {
        (psi.adjoint() * &self.elements * psi)[(0, 0)]
    }

    /// Uhlmann fidelity `(tr √(√σ ρ √σ))²` with `self` as the reference
    /// state `σ`. Reduces to `⟨ψ|ρ|ψ⟩` for a pure reference.
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        // √σ ρ √σ restricted to the support of σ
        let (vecs, roots) = psd_support(&self.hermitian_part());
        let inner = vecs.adjoint() * other.hermitian_part() * &vecs;
        let k = roots.len();
        let m = DMatrix::from_fn(k, k, |i, j| inner[(i, j)] * (roots[i] * roots[j]));
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let root_sum: f64 = m.symmetric_eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).sum();
        root_sum * root_sum
    }

    /// `a ρ₁ + b ρ₂`.
    pub fn mix(&self, a: f64, other: &DensityMatrix, b: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            bail!(MODULE, Range, "cannot mix dim {} with dim {}", self.dim(), other.dim());
        }
        let e = self.elements.map(|z| z * a) + other.elements.map(|z| z * b);
        DensityMatrix::from_elements(e)
    }

    /// Checks the physical-state invariants: Hermitian, unit trace,
    /// non-negative populations.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > TOL_HERMITIAN {
            bail!(MODULE, Domain, "matrix is not Hermitian (max |ρ−ρ†| = {h:e})");
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            bail!(MODULE, Domain, "trace {tr} differs from 1");
        }
        if let Some(n) = (0..self.dim()).find(|&n| self.elements[(n, n)].re < -TOL_HERMITIAN) {
            bail!(MODULE, Domain, "negative population at n = {n}");
        }
        Ok(())
    }
}

/// Eigenvectors of `h` with eigenvalues above `1e-14` of the largest, and
/// the square roots of those eigenvalues.
fn psd_support(h: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>) {
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 1e-14 * top).collect();
    let vecs = DMatrix::from_fn(h.nrows(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    (vecs, keep.iter().map(|&i| eig.eigenvalues[i].sqrt()).collect())
}

/// The ordering parameter `s` of the `s`-ordered operator family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderingParam {
    s: f64,
}

impl OrderingParam {
    /// Any finite `s` other than `±1`.
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            bail!(MODULE, Domain, "ordering parameter must be finite, got {s}");
        }
        if s == 1.0 || s == -1.0 {
            bail!(MODULE, SingularParameter, "s = {s} makes the s-ordered kernel singular");
        }
        Ok(OrderingParam { s })
    }

    /// Constructor for the photon-number inversion series, which needs
    /// `e^{−1/T} = (s−1)/(s+1) ∈ (0, 1)`, i.e. `s > 1`.
    pub fn for_inversion(s: f64) -> Result<Self> {
        if s.is_finite() && s <= 1.0 {
            bail!(
                MODULE,
                Conditioning,
                "inversion kernels require s > 1 (got s = {s}); the effective temperature is not real and positive"
            );
        }
        Self::new(s)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `(s+1)/(s−1)`, the ratio of the kernel's geometric series.
    pub fn kernel_ratio(&self) -> f64 {
        (self.s + 1.0) / (self.s - 1.0)
    }

    /// `2/(1−s)`.
    pub fn prefactor(&self) -> f64 {
        2.0 / (1.0 - self.s)
    }

    /// `e^{−1/T} = (|s|−1)/(|s|+1)`, defined for `|s| > 1`.
    pub fn boltzmann_factor(&self) -> Option<f64> {
        let a = self.s.abs();
        (a > 1.0).then(|| (a - 1.0) / (a + 1.0))
    }

    /// Effective temperature `T = [ln((|s|+1)/(|s|−1))]^{−1}`; `None` for `|s| < 1`.
    pub fn temperature(&self) -> Option<f64> {
        let a = self.s.abs();
        (a > 1.0).then(|| 1.0 / ((a + 1.0) / (a - 1.0)).ln())
    }
}

/// Fills `out[0..count]` with `ψ_0(x) … ψ_{count−1}(x)`.
pub fn hermite_wavefunctions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Normalized oscillator eigenfunction `ψ_n(x)`.
pub fn hermite_wavefunction(n: usize, x: f64) -> Result<f64> {
    if n >= MAX_FOCK_DIM {
        bail!(MODULE, Range, "hermite index {n} exceeds supported maximum {}", MAX_FOCK_DIM - 1);
    }
    if !x.is_finite() {
        bail!(MODULE, Domain, "x must be finite");
    }
    let mut buf = vec![0.0; n + 1];
    hermite_wavefunctions(x, &mut buf);
    Ok(buf[n])
}

/// Fills `out[j] = L_j^{(k)}(x)` for `j < out.len()`.
pub(crate) fn laguerre_sequence(k: f64, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 1.0 + k - x;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 + k - x) * out[n] - (nf + k) * out[n - 1]) / (nf + 1.0);
    }
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)`.
pub fn laguerre(n: usize, k: i64, x: f64) -> Result<f64> {
    if n >= 2 * MAX_FOCK_DIM {
        bail!(MODULE, Range, "laguerre degree {n} exceeds supported range");
    }
    if k < -(n as i64) {
        bail!(MODULE, Range, "laguerre order k = {k} must satisfy k >= -n = -{n}");
    }
    let mut buf = vec![0.0; n + 1];
    laguerre_sequence(k as f64, x, &mut buf);
    Ok(buf[n])
}

/// `⟨m|D(α)|n⟩` for `m < rows`, `n < cols`, from the closed form
/// `√(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)` (`m ≥ n`) and
/// `D(α)† = D(−α)`. Factorial ratios are taken in log space.
pub(crate) fn displacement_block(alpha: Complex64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(rows, cols);
    let x = alpha.norm_sqr();
    let base = -0.5 * x;
    if x == 0.0 {
        for n in 0..rows.min(cols) {
            out[(n, n)] = Complex64::new(1.0, 0.0);
        }
        return out;
    }
    let ln_abs = alpha.norm().ln();
    let phase = alpha / alpha.norm();
    let lnf = ln_factorials();
    let mut lag = vec![0.0; rows.max(cols)];
    let mut phase_k = Complex64::new(1.0, 0.0);
    for k in 0..rows.max(cols) {
        let lower = if k < rows { (rows - k).min(cols) } else { 0 };
        let upper = if k >= 1 && k < cols { (cols - k).min(rows) } else { 0 };
        let count = lower.max(upper);
        if count == 0 {
            phase_k *= phase;
            continue;
        }
        laguerre_sequence(k as f64, x, &mut lag[..count]);
        let kf = k as f64;
        let upper_phase = if k % 2 == 0 { phase_k.conj() } else { -phase_k.conj() };
        for j in 0..count {
            let mag = (0.5 * (lnf[j] - lnf[j + k]) + kf * ln_abs + base).exp() * lag[j];
            if j < lower {
                out[(j + k, j)] = phase_k * mag;
            }
            if k >= 1 && j < upper {
                out[(j, j + k)] = upper_phase * mag;
            }
        }
        phase_k *= phase;
    }
    out
}

/// The `rows × cols` block of `D(α)` in the Fock basis.
pub fn displacement_matrix(alpha: ComplexAmplitude, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
    if rows > 2 * MAX_FOCK_DIM || cols > 2 * MAX_FOCK_DIM {
        bail!(MODULE, Range, "displacement block {rows}x{cols} exceeds supported range");
    }
    Ok(displacement_block(alpha.value(), rows, cols))
}

/// Single matrix element `⟨m|D(α)|n⟩`.
pub fn displacement_matrix_element(m: usize, n: usize, alpha: ComplexAmplitude) -> Result<Complex64> {
    if m >= 2 * MAX_FOCK_DIM || n >= 2 * MAX_FOCK_DIM {
        bail!(MODULE, Range, "Fock indices ({m}, {n}) exceed supported range");
    }
    Ok(displacement_block(alpha.value(), m + 1, n + 1)[(m, n)])
}

/// `T(α, s) = [2/(1−s)] D(α) ((s+1)/(s−1))^{a†a} D(α)†`, truncated to `dim`.
pub fn t_operator_matrix(alpha: ComplexAmplitude, s: f64, dim: usize) -> Result<DMatrix<Complex64>> {
    if dim == 0 || dim > MAX_FOCK_DIM {
        bail!(MODULE, Range, "dim must be in 1..={MAX_FOCK_DIM}, got {dim}");
    }
    if s == 1.0 {
        return Err(Error::new(
            MODULE,
            ErrorKind::SingularParameter("s = 1: the s-ordered kernel 2/(1-s) is singular".into()),
        ));
    }
    if !s.is_finite() {
        bail!(MODULE, Domain, "s must be finite");
    }
    Ok(t_operator_block(alpha.value(), s, dim))
}

pub(crate) fn t_operator_block(alpha: Complex64, s: f64, dim: usize) -> DMatrix<Complex64> {
    let ratio = (s + 1.0) / (s - 1.0);
    let pref = 2.0 / (1.0 - s);
    let u = displacement_block(alpha, dim, dim);
    let weights = DVector::from_iterator(dim, (0..dim).map(|n| Complex64::new(pref * ratio.powi(n as i32), 0.0)));
    let mut scaled = u.clone();
    for (mut col, w) in scaled.column_iter_mut().zip(weights.iter()) {
        col *= *w;
    }
    scaled * u.adjoint()
}
