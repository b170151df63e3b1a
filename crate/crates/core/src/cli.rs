//! The `tomo` command-line driver.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::check::{self, Suite};
use crate::error::{Error, Result};
use crate::fockspace::ComplexAmplitude;
use crate::io::{self, Artifact, Kind, Metadata};
use crate::marginals::{defaults, optical_marginal, photon_marginal, symplectic_marginal};
use crate::numerics::{disk_nodes, polar_mu_nu_nodes, AlphaNode, MuNuNode, ThetaGrid, UniformGrid};
use crate::states::{cat_state, coherent_state, fock_state, thermal_state, Parity};
use crate::transforms::{self, ExtensionMode};

const MODULE: &str = "cli";

/// Exit status for a failed check suite.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for argument errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tomo", version, about = "Optical, symplectic and photon-number tomograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a reference density matrix.
    State(StateArgs),
    /// Forward model: marginal of a stored state.
    Marginal(MarginalArgs),
    /// Transform between marginals and density matrices.
    Transform(TransformArgs),
    /// Run an invariant suite on a stored state.
    Check(CheckArgs),
    /// Write a stored object as flat CSV.
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StateKind {
    Fock,
    Coherent,
    Thermal,
    CatEven,
    CatOdd,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[arg(long, value_enum)]
    kind: StateKind,
    #[arg(long, value_parser = parse_dim)]
    dim: usize,
    /// Fock index.
    #[arg(long)]
    n: Option<usize>,
    /// Amplitude as RE,IM.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    beta: Option<ComplexAmplitude>,
    /// Temperature.
    #[arg(long, value_parser = parse_positive)]
    temp: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MarginalKind {
    Optical,
    Symplectic,
    Photon,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// x grid as MIN:MAX:COUNT.
    #[arg(long, value_parser = parse_x_grid, allow_hyphen_values = true)]
    x: Option<UniformGrid>,
    /// Number of uniform θ samples (also the angular count of (μ, ν) nodes).
    #[arg(long, value_parser = parse_count)]
    theta: Option<usize>,
    /// Radial Gauss–Legendre nodes as COUNT:RMAX.
    #[arg(long, value_parser = parse_radial)]
    radial: Option<(usize, f64)>,
    /// α disk as RMAX:NANG:NRAD.
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<(f64, usize, usize)>,
    #[arg(long, value_parser = parse_count)]
    nmax: Option<usize>,
    /// Number of θ harmonics for opt2sym.
    #[arg(long, value_parser = parse_count)]
    nharm: Option<usize>,
}

#[derive(Args, Debug)]
struct MarginalArgs {
    #[arg(long, value_enum)]
    kind: MarginalKind,
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Op {
    Sym2dens,
    Sym2pdist,
    Sym2photon,
    Photon2dens,
    Photon2sym,
    Sym2opt,
    Opt2sym,
    Photon2opt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Literal,
    Homogeneous,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long, value_enum)]
    op: Op,
    #[arg(long = "in")]
    input: PathBuf,
    /// Ordering parameter for photon-side inversions.
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, value_enum, default_value = "homogeneous")]
    mode: Mode,
    #[arg(long, value_parser = parse_dim)]
    dim: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long)]
    state: PathBuf,
    /// Also run the photon-number inversion at this ordering parameter.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_dim(s: &str) -> std::result::Result<usize, String> {
    let n = parse_count(s)?;
    if n > crate::fockspace::MAX_FOCK_DIM {
        return Err(format!("dim must be at most {}", crate::fockspace::MAX_FOCK_DIM));
    }
    Ok(n)
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite decimal number, got {s:?}")),
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s:?}"))
    }
}

fn fields<'a, const N: usize>(s: &'a str, sep: char, what: &str) -> std::result::Result<[&'a str; N], String> {
    let parts: Vec<&str> = s.split(sep).collect();
    parts.try_into().map_err(|_| format!("expected {what}, got {s:?}"))
}

fn parse_complex(s: &str) -> std::result::Result<ComplexAmplitude, String> {
    let [re, im] = fields(s, ',', "RE,IM")?;
    ComplexAmplitude::new(parse_real(re)?, parse_real(im)?).map_err(|e| e.to_string())
}

fn parse_x_grid(s: &str) -> std::result::Result<UniformGrid, String> {
    let [min, max, count] = fields(s, ':', "MIN:MAX:COUNT")?;
    UniformGrid::new(parse_real(min)?, parse_real(max)?, parse_count(count)?).map_err(|e| e.to_string())
}

fn parse_radial(s: &str) -> std::result::Result<(usize, f64), String> {
    let [count, rmax] = fields(s, ':', "COUNT:RMAX")?;
    Ok((parse_count(count)?, parse_positive(rmax)?))
}

fn parse_alpha(s: &str) -> std::result::Result<(f64, usize, usize), String> {
    let [rmax, nang, nrad] = fields(s, ':', "RMAX:NANG:NRAD")?;
    Ok((parse_positive(rmax)?, parse_count(nang)?, parse_count(nrad)?))
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| format!("unknown suite {s:?}; expected normalization, roundtrip, restriction or all"))
}

/// Failure of one invocation, with its exit status.
enum Failure {
    Usage(String),
    Lib(Error),
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl GridArgs {
    fn optical_x(&self) -> UniformGrid {
        self.x.unwrap_or_else(defaults::optical_x)
    }

    fn symplectic_x(&self) -> UniformGrid {
        self.x.unwrap_or_else(defaults::symplectic_x)
    }

    fn theta(&self) -> Result<ThetaGrid> {
        ThetaGrid::new(self.theta.unwrap_or(defaults::THETA_COUNT))
    }

    fn mu_nu_nodes(&self) -> Result<Vec<MuNuNode>> {
        let (count, rmax) = self.radial.unwrap_or((defaults::RADIAL_COUNT, defaults::RADIAL_MAX));
        polar_mu_nu_nodes(rmax, self.theta.unwrap_or(defaults::THETA_COUNT), count, true)
    }

    fn alpha_nodes(&self) -> Result<Vec<AlphaNode>> {
        let (r, nang, nrad) =
            self.alpha.unwrap_or((defaults::ALPHA_RADIUS, defaults::ALPHA_ANGULAR, defaults::ALPHA_RADIAL));
        disk_nodes(r, nang, nrad)
    }
}

fn emit_warnings(a: &Artifact) {
    for w in a.warnings() {
        log::warn!("{w}");
    }
}

fn save(path: &PathBuf, a: &Artifact, meta: &Metadata) -> CliResult<()> {
    emit_warnings(a);
    io::save(path, a, meta)?;
    Ok(())
}

fn meta_dim(meta: &Metadata) -> Option<usize> {
    meta.get("dim").and_then(|v| v.as_u64()).map(|d| d as usize)
}

fn require_dim(explicit: Option<usize>, meta: &Metadata) -> CliResult<usize> {
    explicit
        .or_else(|| meta_dim(meta))
        .ok_or_else(|| Failure::Usage("--dim is required: the input carries no dim in its metadata".into()))
}

fn run_state(a: StateArgs) -> CliResult<()> {
    let need = |what: &str| Failure::Usage(format!("--kind {:?} requires --{what}", a.kind));
    let beta = || a.beta.ok_or_else(|| need("beta"));
    let rho = match a.kind {
        StateKind::Fock => fock_state(a.n.ok_or_else(|| need("n"))?, a.dim)?,
        StateKind::Coherent => coherent_state(beta()?, a.dim)?,
        StateKind::Thermal => thermal_state(a.temp.ok_or_else(|| need("temp"))?, a.dim)?,
        StateKind::CatEven => cat_state(beta()?, Parity::Even, a.dim)?,
        StateKind::CatOdd => cat_state(beta()?, Parity::Odd, a.dim)?,
    };
    let mut meta = Metadata::new();
    meta.insert("state".into(), json!(format!("{:?}", a.kind).to_lowercase()));
    if let Some(n) = a.n {
        meta.insert("n".into(), json!(n));
    }
    if let Some(b) = a.beta {
        meta.insert("beta".into(), json!([b.re(), b.im()]));
    }
    if let Some(t) = a.temp {
        meta.insert("temp".into(), json!(t));
    }
    save(&a.out, &Artifact::Density(rho), &meta)
}

fn run_marginal(a: MarginalArgs) -> CliResult<()> {
    let (state, _) = io::load_kind(&a.state, Kind::Density)?;
    let Artifact::Density(rho) = state else { unreachable!() };
    let g = &a.grid;
    let out = match a.kind {
        MarginalKind::Optical => Artifact::Optical(optical_marginal(&rho, &g.optical_x(), &g.theta()?)?),
        MarginalKind::Symplectic => {
            Artifact::Symplectic(symplectic_marginal(&rho, &g.symplectic_x(), &g.mu_nu_nodes()?)?)
        }
        MarginalKind::Photon => {
            Artifact::Photon(photon_marginal(&rho, g.nmax.unwrap_or(rho.dim()), &g.alpha_nodes()?)?)
        }
    };
    let mut meta = Metadata::new();
    meta.insert("dim".into(), json!(rho.dim()));
    save(&a.out, &out, &meta)
}

fn run_transform(a: TransformArgs) -> CliResult<()> {
    let expected = match a.op {
        Op::Sym2dens | Op::Sym2pdist | Op::Sym2photon | Op::Sym2opt => Kind::Symplectic,
        Op::Photon2dens | Op::Photon2sym | Op::Photon2opt => Kind::Photon,
        Op::Opt2sym => Kind::Optical,
    };
    let (input, in_meta) = io::load_kind(&a.input, expected)?;
    let g = &a.grid;
    let mut meta = Metadata::new();
    if let Some(d) = meta_dim(&in_meta) {
        meta.insert("dim".into(), json!(d));
    }
    let out = match (input, a.op) {
        (Artifact::Symplectic(w), Op::Sym2dens) => {
            Artifact::Density(transforms::symplectic_to_density(&w, require_dim(a.dim, &in_meta)?)?)
        }
        (Artifact::Symplectic(w), Op::Sym2pdist) => {
            let n_max = match g.nmax {
                Some(n) => n,
                None => require_dim(a.dim, &in_meta)?,
            };
            Artifact::PhotonDist(transforms::symplectic_to_photon_dist(&w, n_max)?)
        }
        (Artifact::Symplectic(w), Op::Sym2photon) => {
            let n_max = match g.nmax {
                Some(n) => n,
                None => require_dim(a.dim, &in_meta)?,
            };
            Artifact::Photon(transforms::symplectic_to_photon_marginal(&w, n_max, &g.alpha_nodes()?)?)
        }
        (Artifact::Symplectic(w), Op::Sym2opt) => Artifact::Optical(transforms::symplectic_to_optical(&w, &g.theta()?)?),
        (Artifact::Photon(w), Op::Photon2dens) => {
            meta.insert("s".into(), json!(a.s));
            let dim = a.dim.unwrap_or(w.n_max);
            Artifact::Density(transforms::photon_to_density(&w, a.s, dim)?)
        }
        (Artifact::Photon(w), Op::Photon2sym) => {
            meta.insert("s".into(), json!(a.s));
            Artifact::Symplectic(transforms::photon_to_symplectic(&w, a.s, &g.symplectic_x(), &g.mu_nu_nodes()?)?)
        }
        (Artifact::Photon(w), Op::Photon2opt) => {
            meta.insert("s".into(), json!(a.s));
            Artifact::Optical(transforms::photon_to_optical(&w, a.s, &g.optical_x(), &g.theta()?)?)
        }
        (Artifact::Optical(w), Op::Opt2sym) => {
            let mode = match a.mode {
                Mode::Literal => ExtensionMode::Literal,
                Mode::Homogeneous => ExtensionMode::Homogeneous,
            };
            meta.insert("mode".into(), json!(format!("{:?}", a.mode).to_lowercase()));
            Artifact::Symplectic(transforms::optical_to_symplectic(
                &w,
                &g.mu_nu_nodes()?,
                g.nharm.unwrap_or(defaults::N_HARM),
                mode,
            )?)
        }
        _ => unreachable!("input kind is checked on load"),
    };
    save(&a.out, &out, &meta)
}

fn run_check(a: CheckArgs) -> CliResult<()> {
    let (state, _) = io::load_kind(&a.state, Kind::Density)?;
    let Artifact::Density(rho) = state else { unreachable!() };
    let report = check::run(a.suite, &rho, a.s)?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn run_plotdata(a: PlotArgs) -> CliResult<()> {
    let (obj, _) = io::load(&a.input)?;
    std::fs::write(&a.out, io::plot_csv(&obj)).map_err(|e| Error::new(MODULE, crate::ErrorKind::Io(e)))?;
    Ok(())
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::State(a) => run_state(a),
        Command::Marginal(a) => run_marginal(a),
        Command::Transform(a) => run_transform(a),
        Command::Check(a) => run_check(a),
        Command::Plotdata(a) => run_plotdata(a),
    }
}

/// Parses `argv` (including the program name), runs one subcommand and
/// returns the process exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::CheckFailed) => EXIT_CHECK_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: [{MODULE}] {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {} {e}", e.code());
            e.exit_code()
        }
    }
}
