//! Invariant suites run against a single state by `tomo check`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::fockspace::DensityMatrix;
use crate::marginals::{defaults, optical_marginal, photon_marginal, symplectic_marginal};
use crate::numerics::{disk_nodes, MuNuNode};
use crate::transforms::{
    optical_to_symplectic, photon_to_density, symplectic_to_density, symplectic_to_optical,
    symplectic_to_photon_dist, ExtensionMode,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Normalization,
    Roundtrip,
    Restriction,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "normalization" => Some(Suite::Normalization),
            "roundtrip" => Some(Suite::Roundtrip),
            "restriction" => Some(Suite::Restriction),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

/// One measured quantity against its bound.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    fn at_most(&mut self, suite: &'static str, name: impl Into<String>, value: f64, tol: f64) {
        self.lines.push(CheckLine {
            suite,
            name: name.into(),
            value,
            bound: format!("<= {tol:e}"),
            pass: value <= tol,
            note: None,
        });
    }

    fn at_least(&mut self, suite: &'static str, name: impl Into<String>, value: f64, min: f64) {
        self.lines.push(CheckLine {
            suite,
            name: name.into(),
            value,
            bound: format!(">= {min:e}"),
            pass: value >= min,
            note: None,
        });
    }

    /// Records a stage that raised an error as a failed line.
    fn errored(&mut self, suite: &'static str, name: impl Into<String>, err: &crate::Error) {
        self.lines.push(CheckLine {
            suite,
            name: name.into(),
            value: f64::NAN,
            bound: "no error".into(),
            pass: false,
            note: Some(format!("{} {err}", err.code())),
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            let tag = if l.pass { "PASS" } else { "FAIL" };
            write!(f, "{tag}  {:<14} {:<44} {:>12.4e}  ({})", l.suite, l.name, l.value, l.bound)?;
            if let Some(n) = &l.note {
                write!(f, "  {n}")?;
            }
            writeln!(f)?;
        }
        let failed = self.lines.iter().filter(|l| !l.pass).count();
        writeln!(f, "{} checks, {} failed", self.lines.len(), failed)
    }
}

fn max_dev(values: &[f64], target: f64) -> f64 {
    values.iter().fold(0.0f64, |a, v| a.max((v - target).abs()))
}

fn min_value(m: &DMatrix<f64>) -> f64 {
    m.iter().copied().fold(f64::INFINITY, f64::min)
}

fn sup(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn unit_circle_nodes(count: usize) -> Vec<MuNuNode> {
    (0..count)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            MuNuNode { mu: t.cos(), nu: t.sin(), weight: 0.0 }
        })
        .collect()
}

fn normalization(rho: &DensityMatrix, report: &mut CheckReport) -> Result<()> {
    const S: &str = "normalization";
    let o = optical_marginal(rho, &defaults::optical_x(), &defaults::theta())?;
    report.at_most(S, "optical row integrals |1 - int w dx|", max_dev(&o.row_integrals(), 1.0), 1e-4);
    report.at_least(S, "optical min value", min_value(&o.values), -1e-12);
    let w = symplectic_marginal(rho, &defaults::symplectic_x(), &defaults::mu_nu_nodes())?;
    report.at_most(S, "symplectic node integrals |1 - int w dx|", max_dev(&w.node_integrals(), 1.0), 1e-4);
    report.at_least(S, "symplectic min value", min_value(&w.values), -1e-12);
    let dim = rho.dim();
    let radius = ((dim as f64).sqrt() / 2.0).min(1.0);
    let alphas = disk_nodes(radius, defaults::ALPHA_ANGULAR, defaults::ALPHA_RADIAL)?;
    let p = photon_marginal(rho, dim, &alphas)?;
    report.at_most(S, format!("photon column sums, |alpha| <= {radius:.3}"), max_dev(&p.column_sums(), 1.0), 1e-4);
    report.at_least(S, "photon min value", min_value(&p.values), -1e-12);
    Ok(())
}

fn restriction(rho: &DensityMatrix, report: &mut CheckReport) -> Result<()> {
    const S: &str = "restriction";
    let x = defaults::optical_x();
    let theta = defaults::theta();
    let opt = optical_marginal(rho, &x, &theta)?;
    let unit = unit_circle_nodes(theta.count);
    let sym = symplectic_marginal(rho, &x, &unit)?;
    report.at_most(S, "unit-circle symplectic vs optical", sup(&sym.values, &opt.values), 1e-12);
    let via = symplectic_to_optical(&sym, &theta)?;
    report.at_most(S, "symplectic_to_optical vs optical", sup(&via.values, &opt.values), 1e-12);
    let mut homog = 0.0f64;
    for lambda in [0.5, 2.0, 3.0] {
        let scaled: Vec<MuNuNode> =
            unit.iter().map(|n| MuNuNode { mu: lambda * n.mu, nu: lambda * n.nu, weight: 0.0 }).collect();
        let xs = crate::numerics::UniformGrid::new(x.min * lambda, x.max * lambda, x.count)?;
        let w = symplectic_marginal(rho, &xs, &scaled)?;
        homog = homog.max(sup(&(w.values * lambda), &sym.values));
    }
    report.at_most(S, "homogeneity lambda in {0.5, 2, 3}", homog, 1e-10);
    for mode in [ExtensionMode::Literal, ExtensionMode::Homogeneous] {
        let out = optical_to_symplectic(&opt, &unit, defaults::N_HARM, mode)?;
        report.at_most(S, format!("optical_to_symplectic {mode:?} on unit circle"), sup(&out.values, &opt.values), 1e-8);
    }
    Ok(())
}

fn roundtrip(rho: &DensityMatrix, s: Option<f64>, report: &mut CheckReport) -> Result<()> {
    const S: &str = "roundtrip";
    let dim = rho.dim();
    let w = symplectic_marginal(rho, &defaults::symplectic_x(), &defaults::mu_nu_nodes())?;
    let rec = symplectic_to_density(&w, dim)?;
    report.at_least(S, "symplectic fidelity", rho.fidelity(&rec), 0.99);
    report.at_most(S, "symplectic |trace - 1|", (rec.trace().re - 1.0).abs(), 1e-2);
    report.at_least(S, "symplectic min diagonal", rec.diagonal().into_iter().fold(f64::INFINITY, f64::min), -0.01);
    report.at_most(S, "symplectic hermiticity", rec.hermiticity_error(), 0.0);
    let p = symplectic_to_photon_dist(&w, dim)?;
    let diag = rec.diagonal();
    let d = p.probabilities.iter().zip(&diag).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    report.at_most(S, "photon distribution vs diagonal", d, 1e-10);
    if let Some(s) = s {
        let pm = photon_marginal(rho, dim, &defaults::alpha_nodes())?;
        match photon_to_density(&pm, s, dim) {
            Ok(prec) => {
                report.at_least(S, format!("photon fidelity (s = {s})"), rho.fidelity(&prec), 0.99);
                report.at_most(S, format!("photon |trace - 1| (s = {s})"), (prec.trace().re - 1.0).abs(), 1e-2);
            }
            Err(e) => report.errored(S, format!("photon inversion (s = {s})"), &e),
        }
    }
    Ok(())
}

/// Runs `suite` on `rho`. `s` enables the photon-side inversion in the
/// round-trip suite. Errors from forward models propagate; a failing photon
/// inversion is reported as a failed line.
pub fn run(suite: Suite, rho: &DensityMatrix, s: Option<f64>) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    if matches!(suite, Suite::Normalization | Suite::All) {
        normalization(rho, &mut report)?;
    }
    if matches!(suite, Suite::Restriction | Suite::All) {
        restriction(rho, &mut report)?;
    }
    if matches!(suite, Suite::Roundtrip | Suite::All) {
        roundtrip(rho, s, &mut report)?;
    }
    Ok(report)
}
