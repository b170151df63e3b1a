use std::path::Path;
use std::process::{Command, Output};

fn tomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomo")).args(args).output().expect("spawn tomo")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn vacuum(dir: &Path) -> std::path::PathBuf {
    let state = dir.join("vac.json");
    let out = tomo(&["state", "--kind", "fock", "--n", "0", "--dim", "8", "--out", p(&state)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    state
}

#[test]
fn vacuum_pipeline_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let state = vacuum(dir.path());
    let opt = dir.path().join("opt.json");
    let out = tomo(&["marginal", "--kind", "optical", "--state", p(&state), "--out", p(&opt)]);
    assert_eq!(out.status.code(), Some(0));
    let csv_path = dir.path().join("opt.csv");
    let out = tomo(&["plotdata", "--in", p(&opt), "--out", p(&csv_path)]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,theta,w"));
    let at_origin: Vec<f64> = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .filter(|r| r[0].abs() < 1e-12)
        .map(|r| r[2])
        .collect();
    assert_eq!(at_origin.len(), 64);
    for w in at_origin {
        assert!((w - 0.5642).abs() < 1e-4, "{w}");
    }
}

#[test]
fn check_all_on_vacuum_passes() {
    let dir = tempfile::tempdir().unwrap();
    let state = vacuum(dir.path());
    let out = tomo(&["check", "--suite", "all", "--state", p(&state)]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert!(report.contains("0 failed"));
}

#[test]
fn photon_inversion_below_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let state = vacuum(dir.path());
    let photon = dir.path().join("ph.json");
    let out = tomo(&["marginal", "--kind", "photon", "--state", p(&state), "--alpha", "1:8:6", "--out", p(&photon)]);
    assert_eq!(out.status.code(), Some(0));
    let rec = dir.path().join("rec.json");
    let out = tomo(&["transform", "--op", "photon2dens", "--s", "0.5", "--in", p(&photon), "--out", p(&rec)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("conditioning"), "{err}");
    assert!(err.contains("[fockspace]"), "{err}");
    assert!(!rec.exists());
}

#[test]
fn argument_and_kind_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let state = vacuum(dir.path());
    let out = tomo(&["marginal", "--kind", "optical", "--state", p(&state), "--x", "-4:4", "--out", "o.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tomo(&["transform", "--op", "sym2dens", "--in", p(&state), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_KIND"));
    let out = tomo(&["plotdata", "--in", p(&dir.path().join("missing.json")), "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn symplectic_round_trip_through_files_matches_library() {
    use tomo_marginals::io::{load, Artifact};
    use tomo_marginals::marginals::symplectic_marginal;
    use tomo_marginals::numerics::{polar_mu_nu_nodes, UniformGrid};
    use tomo_marginals::transforms::symplectic_to_density;

    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("coh.json");
    let out = tomo(&["state", "--kind", "coherent", "--beta", "-0.4,0.3", "--dim", "6", "--out", p(&state)]);
    assert_eq!(out.status.code(), Some(0));
    let sym = dir.path().join("sym.json");
    let grid = ["--x", "-40:40:1601", "--theta", "16", "--radial", "24:8"];
    let mut args = vec!["marginal", "--kind", "symplectic", "--state", p(&state), "--out", p(&sym)];
    args.extend(grid);
    assert_eq!(tomo(&args).status.code(), Some(0));
    let rec = dir.path().join("rec.json");
    assert_eq!(tomo(&["transform", "--op", "sym2dens", "--in", p(&sym), "--out", p(&rec)]).status.code(), Some(0));

    let Artifact::Density(rho) = load(&state).unwrap().0 else { panic!() };
    let w = symplectic_marginal(&rho, &UniformGrid::new(-40.0, 40.0, 1601).unwrap(), &polar_mu_nu_nodes(8.0, 16, 24, true).unwrap())
        .unwrap();
    let lib = symplectic_to_density(&w, 6).unwrap();
    let Artifact::Density(cli) = load(&rec).unwrap().0 else { panic!() };
    assert_eq!(cli.elements(), lib.elements());
    assert!(rho.fidelity(&cli) > 0.99);
}
