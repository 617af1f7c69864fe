use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convexa::bruhat::SignedPerm;
use convexa::harness::deserialize;
use convexa::harness::sampling::{cell_sample_in, rng};
use tempfile::TempDir;

fn convexa() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_convexa"));
    c.env_remove("CONVEXA_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    convexa().args(args).output().expect("the binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn family(dir: &Path, name: &str, params: &str) -> PathBuf {
    let path = dir.join(format!("{name}-{}.json", params.replace([',', '='], "_")));
    let o = run(&["family", name, "--params", params, "-o", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn component(path: &Path) -> String {
    let o = run(&["classify-component", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o).trim().to_string()
}

#[test]
fn circles_fall_in_their_components() {
    let dir = TempDir::new().unwrap();
    assert_eq!(component(&family(dir.path(), "nu", "s=1")), "NegConvex");
    assert_eq!(component(&family(dir.path(), "nu", "s=2")), "Pos");
    assert_eq!(component(&family(dir.path(), "nu", "s=3")), "NegNonconvex");
}

#[test]
fn documents_load_back() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "g0", "theta=0.3,alpha=1.1");
    let curve = deserialize(&std::fs::read(&path).unwrap()).unwrap();
    assert!(curve.is_locally_convex());
    assert_eq!(component(&path), "Pos");
}

#[test]
fn one_loop_flips_the_component() {
    let dir = TempDir::new().unwrap();
    let nu2 = family(dir.path(), "nu", "s=2");
    let out = dir.path().join("looped.json");
    let o = run(&["deform", "add-loops", nu2.to_str().unwrap(), "--t0", "0.3", "--n", "1", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(component(&out), "NegNonconvex");
}

#[test]
fn integrating_constant_speeds_gives_nu1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nu1.json");
    let speed = (std::f64::consts::SQRT_2 * std::f64::consts::PI).to_string();
    let o = run(&["integrate", "--v", &speed, "--v-hat", &speed, "--cells", "128", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(component(&out), "NegConvex");
}

#[test]
fn curve_csv_has_the_documented_columns() {
    let dir = TempDir::new().unwrap();
    let nu1 = family(dir.path(), "nu", "s=1");
    let o = run(&["export-plot", "curve", nu1.to_str().unwrap(), "--samples", "8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z,qw,qx,qy,qz,v,v_hat");
    assert_eq!(lines.len(), 10);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[..4], [0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn classify_cell_reports_the_open_cell() {
    let open = SignedPerm::parse("(13);2").unwrap();
    let q = cell_sample_in(&mut rng(11), open).unwrap().q;
    let entries: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| q.0[(i, j)].to_string()).collect();
    let o = run(&["classify-cell", "--matrix", &entries.join(","), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["cell"], "(13);2");
    assert_eq!(v["open_convex"], true);
    assert_eq!(v["dimension"], 3);
}

#[test]
fn input_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["classify-component", "/nonexistent/curve.json"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, b"{\"format_version\": \"0\"}").unwrap();
    assert_eq!(run(&["classify-component", bad.to_str().unwrap()]).status.code(), Some(2));
    let open = family(dir.path(), "nu", "s=1.5");
    assert_eq!(run(&["classify-component", open.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["classify-cell", "--quaternion", "1,0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "no_such_check"]).status.code(), Some(2));
    assert_eq!(run(&["family", "circle", "--params", "rho=2"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_fails_with_the_right_codes() {
    let ok = run(&["verify", "total_curvature", "hex_family"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("PASS  3 total_curvature"));
    let tampered = run(&["verify", "minor_predicate", "--samples", "200", "--tamper-minor-sign"]);
    assert_eq!(tampered.status.code(), Some(1));
    let coarse = run(&["verify", "degree", "--coarsen", "16"]);
    assert_eq!(coarse.status.code(), Some(1));
    assert!(stdout(&coarse).contains("too coarse"), "{}", stdout(&coarse));
}

#[test]
fn seeds_come_from_flag_then_environment() {
    let json = |o: Output| -> serde_json::Value { serde_json::from_slice(&o.stdout).unwrap() };
    let args = ["verify", "bruhat_oracle", "--samples", "50", "--json"];
    let from_env = json(convexa().args(args).env("CONVEXA_SEED", "77").output().unwrap());
    assert_eq!(from_env["seed"], 77);
    let from_flag = json(convexa().args(args).args(["--seed", "5"]).env("CONVEXA_SEED", "77").output().unwrap());
    assert_eq!(from_flag["seed"], 5);
    let bad = convexa().args(args).env("CONVEXA_SEED", "seven").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_workers() {
    let args = ["verify", "bruhat_oracle", "minor_predicate", "ellipses", "--samples", "300", "--json"];
    let one = run(&[&args[..], &["--workers", "1"]].concat());
    let three = run(&[&args[..], &["--workers", "3"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
}
