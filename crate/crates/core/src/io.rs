//! The versioned JSON container and CSV plot data.
//!
//! A container holds `format_version`, `kind`, the `conventions` string,
//! a kind-specific `payload` with explicit shapes, and free-form
//! `metadata`. Floats are written in shortest round-trip form, so a
//! save/load cycle is bitwise lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{bail, Error, ErrorKind, Result};
use crate::fockspace::{DensityMatrix, StateMeta, CONVENTIONS};
use crate::marginals::{OpticalMarginal, PhotonMarginal, SymplecticMarginal};
use crate::numerics::{AlphaNode, MuNuNode, ThetaGrid, UniformGrid};
use crate::transforms::PhotonDistribution;

const MODULE: &str = "io";

pub const FORMAT_VERSION: i64 = 1;

/// Values in `[−NEGATIVE_ROUNDING, 0)` are written as 0 in plot data.
pub const NEGATIVE_ROUNDING: f64 = 1e-12;

pub type Metadata = Map<String, Value>;

/// Any object the container can hold.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Density(DensityMatrix),
    Optical(OpticalMarginal),
    Symplectic(SymplecticMarginal),
    Photon(PhotonMarginal),
    PhotonDist(PhotonDistribution),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Density,
    Optical,
    Symplectic,
    Photon,
    PhotonDist,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Density => "density",
            Kind::Optical => "optical",
            Kind::Symplectic => "symplectic",
            Kind::Photon => "photon",
            Kind::PhotonDist => "photon_dist",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        [Kind::Density, Kind::Optical, Kind::Symplectic, Kind::Photon, Kind::PhotonDist]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

impl Artifact {
    pub fn kind(&self) -> Kind {
        match self {
            Artifact::Density(_) => Kind::Density,
            Artifact::Optical(_) => Kind::Optical,
            Artifact::Symplectic(_) => Kind::Symplectic,
            Artifact::Photon(_) => Kind::Photon,
            Artifact::PhotonDist(_) => Kind::PhotonDist,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            Artifact::Density(d) => &d.meta().warnings,
            Artifact::Optical(o) => &o.warnings,
            Artifact::Symplectic(s) => &s.warnings,
            Artifact::Photon(p) => &p.warnings,
            Artifact::PhotonDist(p) => &p.warnings,
        }
    }

    fn set_warnings(&mut self, w: Vec<String>) {
        match self {
            Artifact::Density(d) => d.meta_mut().warnings = w,
            Artifact::Optical(o) => o.warnings = w,
            Artifact::Symplectic(s) => s.warnings = w,
            Artifact::Photon(p) => p.warnings = w,
            Artifact::PhotonDist(p) => p.warnings = w,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DensityPayload {
    dim: usize,
    shape: [usize; 2],
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct OpticalPayload {
    x_grid: UniformGrid,
    theta_count: usize,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymplecticPayload {
    x_grid: UniformGrid,
    /// `[mu, nu, weight]` per node.
    nodes: Vec<[f64; 3]>,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PhotonPayload {
    n_max: usize,
    /// `[re alpha, im alpha, weight]` per node.
    nodes: Vec<[f64; 3]>,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PhotonDistPayload {
    n_max: usize,
    probabilities: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(shape: [usize; 2], data: Vec<f64>, what: &str) -> Result<DMatrix<f64>> {
    if shape[0].checked_mul(shape[1]) != Some(data.len()) {
        bail!(MODULE, Malformed, "{what}: shape {:?} does not match {} values", shape, data.len());
    }
    Ok(DMatrix::from_row_slice(shape[0], shape[1], &data))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("cannot encode payload: {e}"))))
}

fn payload_of(a: &Artifact) -> Result<Value> {
    match a {
        Artifact::Density(d) => {
            let n = d.dim();
            let e = d.elements();
            let re = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| e[(r, c)].re).collect();
            let im = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| e[(r, c)].im).collect();
            to_value(&DensityPayload { dim: n, shape: [n, n], re, im })
        }
        Artifact::Optical(o) => to_value(&OpticalPayload {
            x_grid: o.x_grid,
            theta_count: o.theta_grid.count,
            shape: [o.values.nrows(), o.values.ncols()],
            values: row_major(&o.values),
        }),
        Artifact::Symplectic(s) => to_value(&SymplecticPayload {
            x_grid: s.x_grid,
            nodes: s.nodes.iter().map(|n| [n.mu, n.nu, n.weight]).collect(),
            shape: [s.values.nrows(), s.values.ncols()],
            values: row_major(&s.values),
        }),
        Artifact::Photon(p) => to_value(&PhotonPayload {
            n_max: p.n_max,
            nodes: p.nodes.iter().map(|n| [n.alpha.re, n.alpha.im, n.weight]).collect(),
            shape: [p.values.nrows(), p.values.ncols()],
            values: row_major(&p.values),
        }),
        Artifact::PhotonDist(p) => {
            to_value(&PhotonDistPayload { n_max: p.probabilities.len(), probabilities: p.probabilities.clone() })
        }
    }
}

fn parse_payload<T: for<'de> Deserialize<'de>>(v: Value, kind: Kind) -> Result<T> {
    serde_json::from_value(v)
        .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("{} payload: {e}", kind.name()))))
}

fn grid_checked(g: UniformGrid) -> Result<UniformGrid> {
    UniformGrid::new(g.min, g.max, g.count)
        .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("invalid x grid: {e}"))))
}

fn artifact_from(kind: Kind, payload: Value, meta: &Metadata) -> Result<Artifact> {
    let mut a = match kind {
        Kind::Density => {
            let p: DensityPayload = parse_payload(payload, kind)?;
            if p.shape != [p.dim, p.dim] {
                bail!(MODULE, Malformed, "density shape {:?} is not {}x{}", p.shape, p.dim, p.dim);
            }
            let re = from_row_major(p.shape, p.re, "density re")?;
            let im = from_row_major(p.shape, p.im, "density im")?;
            let e = DMatrix::from_fn(p.dim, p.dim, |r, c| Complex64::new(re[(r, c)], im[(r, c)]));
            let rho = DensityMatrix::from_elements(e)
                .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("density payload: {e}"))))?;
            let deficit = meta.get("trace_deficit").and_then(Value::as_f64).unwrap_or(0.0);
            Artifact::Density(rho.with_meta(StateMeta { trace_deficit: deficit, warnings: vec![] }))
        }
        Kind::Optical => {
            let p: OpticalPayload = parse_payload(payload, kind)?;
            let x_grid = grid_checked(p.x_grid)?;
            let theta_grid = ThetaGrid::new(p.theta_count)
                .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("theta grid: {e}"))))?;
            if p.shape != [x_grid.count, theta_grid.count] {
                bail!(MODULE, Malformed, "optical shape {:?} does not match its grids", p.shape);
            }
            let values = from_row_major(p.shape, p.values, "optical values")?;
            Artifact::Optical(OpticalMarginal { x_grid, theta_grid, values, warnings: vec![] })
        }
        Kind::Symplectic => {
            let p: SymplecticPayload = parse_payload(payload, kind)?;
            let x_grid = grid_checked(p.x_grid)?;
            if p.shape != [x_grid.count, p.nodes.len()] {
                bail!(MODULE, Malformed, "symplectic shape {:?} does not match its grids", p.shape);
            }
            let values = from_row_major(p.shape, p.values, "symplectic values")?;
            let nodes = p.nodes.iter().map(|n| MuNuNode { mu: n[0], nu: n[1], weight: n[2] }).collect();
            Artifact::Symplectic(SymplecticMarginal { x_grid, nodes, values, warnings: vec![] })
        }
        Kind::Photon => {
            let p: PhotonPayload = parse_payload(payload, kind)?;
            if p.shape != [p.n_max, p.nodes.len()] {
                bail!(MODULE, Malformed, "photon shape {:?} does not match n_max and nodes", p.shape);
            }
            let values = from_row_major(p.shape, p.values, "photon values")?;
            let nodes =
                p.nodes.iter().map(|n| AlphaNode { alpha: Complex64::new(n[0], n[1]), weight: n[2] }).collect();
            Artifact::Photon(PhotonMarginal { n_max: p.n_max, nodes, values, warnings: vec![] })
        }
        Kind::PhotonDist => {
            let p: PhotonDistPayload = parse_payload(payload, kind)?;
            if p.probabilities.len() != p.n_max {
                bail!(MODULE, Malformed, "photon_dist has {} entries, n_max {}", p.probabilities.len(), p.n_max);
            }
            Artifact::PhotonDist(PhotonDistribution { probabilities: p.probabilities, warnings: vec![] })
        }
    };
    if let Some(w) = meta.get("warnings").and_then(Value::as_array) {
        a.set_warnings(w.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect());
    }
    Ok(a)
}

/// Serializes `artifact` with `metadata`; warnings and the trace deficit are
/// added to the metadata automatically.
pub fn to_json(artifact: &Artifact, metadata: &Metadata) -> Result<String> {
    let mut meta = metadata.clone();
    meta.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("warnings".into(), json!(artifact.warnings()));
    if let Artifact::Density(d) = artifact {
        meta.insert("dim".into(), json!(d.dim()));
        meta.insert("trace_deficit".into(), json!(d.meta().trace_deficit));
    }
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "kind": artifact.kind().name(),
        "conventions": CONVENTIONS,
        "payload": payload_of(artifact)?,
        "metadata": Value::Object(meta),
    });
    serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("cannot encode container: {e}"))))
}

/// Parses a container, checking version, conventions and kind in that order.
pub fn from_json(text: &str) -> Result<(Artifact, Metadata)> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::new(MODULE, ErrorKind::Malformed(format!("not a JSON container: {e}"))))?;
    let Value::Object(mut doc) = doc else {
        bail!(MODULE, Malformed, "container must be a JSON object");
    };
    let version = doc
        .get("format_version")
        .and_then(Value::as_i64)
        .ok_or_else(|| Error::new(MODULE, ErrorKind::Malformed("missing integer format_version".into())))?;
    if version != FORMAT_VERSION {
        return Err(Error::new(MODULE, ErrorKind::Version { expected: FORMAT_VERSION, found: version }));
    }
    let conventions = doc
        .get("conventions")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::new(MODULE, ErrorKind::Malformed("missing conventions string".into())))?;
    if conventions != CONVENTIONS {
        return Err(Error::new(
            MODULE,
            ErrorKind::Conventions { expected: CONVENTIONS.into(), found: conventions.into() },
        ));
    }
    let kind_name = doc
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::new(MODULE, ErrorKind::Malformed("missing kind".into())))?;
    let kind = Kind::parse(kind_name)
        .ok_or_else(|| Error::new(MODULE, ErrorKind::Malformed(format!("unknown kind {kind_name:?}"))))?;
    let meta = match doc.remove("metadata") {
        Some(Value::Object(m)) => m,
        None => Map::new(),
        Some(_) => bail!(MODULE, Malformed, "metadata must be an object"),
    };
    let payload = doc
        .remove("payload")
        .ok_or_else(|| Error::new(MODULE, ErrorKind::Malformed("missing payload".into())))?;
    Ok((artifact_from(kind, payload, &meta)?, meta))
}

pub fn save(path: impl AsRef<Path>, artifact: &Artifact, metadata: &Metadata) -> Result<()> {
    let text = to_json(artifact, metadata)?;
    fs::write(path, text).map_err(|e| Error::new(MODULE, ErrorKind::Io(e)))
}

pub fn load(path: impl AsRef<Path>) -> Result<(Artifact, Metadata)> {
    let text = fs::read_to_string(path).map_err(|e| Error::new(MODULE, ErrorKind::Io(e)))?;
    from_json(&text)
}

/// Loads a container and requires it to hold `expected`.
pub fn load_kind(path: impl AsRef<Path>, expected: Kind) -> Result<(Artifact, Metadata)> {
    let (a, m) = load(path)?;
    if a.kind() != expected {
        return Err(Error::new(
            MODULE,
            ErrorKind::Kind { expected: expected.name().into(), found: a.kind().name().into() },
        ));
    }
    Ok((a, m))
}

fn num(v: f64) -> String {
    let v = if (-NEGATIVE_ROUNDING..0.0).contains(&v) { 0.0 } else { v };
    format!("{v:.14e}")
}

/// Flat CSV: coordinate columns, then value columns, with a header row.
/// Numbers carry 15 significant digits.
pub fn plot_csv(artifact: &Artifact) -> String {
    let mut out = String::new();
    match artifact {
        Artifact::Density(d) => {
            out.push_str("m,n,re,im\n");
            for m in 0..d.dim() {
                for n in 0..d.dim() {
                    let v = d.get(m, n);
                    let _ = writeln!(out, "{m},{n},{},{}", num(v.re), num(v.im));
                }
            }
        }
        Artifact::Optical(o) => {
            out.push_str("x,theta,w\n");
            for (j, t) in o.theta_grid.points().iter().enumerate() {
                for (i, x) in o.x_grid.points().iter().enumerate() {
                    let _ = writeln!(out, "{},{},{}", num(*x), num(*t), num(o.values[(i, j)]));
                }
            }
        }
        Artifact::Symplectic(s) => {
            out.push_str("x,mu,nu,w\n");
            for (j, node) in s.nodes.iter().enumerate() {
                for (i, x) in s.x_grid.points().iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{}", num(*x), num(node.mu), num(node.nu), num(s.values[(i, j)]));
                }
            }
        }
        Artifact::Photon(p) => {
            out.push_str("n,alpha_re,alpha_im,w\n");
            for (j, node) in p.nodes.iter().enumerate() {
                for n in 0..p.n_max {
                    let _ =
                        writeln!(out, "{n},{},{},{}", num(node.alpha.re), num(node.alpha.im), num(p.values[(n, j)]));
                }
            }
        }
        Artifact::PhotonDist(p) => {
            out.push_str("n,p\n");
            for (n, v) in p.probabilities.iter().enumerate() {
                let _ = writeln!(out, "{n},{}", num(*v));
            }
        }
    }
    out
}
