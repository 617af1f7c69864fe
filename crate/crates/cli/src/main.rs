//! Command-line front end: build, deform and classify curves, export plot data and run the suite.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use convexa::bruhat::{
    is_anticonvex_quat, is_convex_matrix, is_convex_quat, is_graftable, is_open_convex, is_stably_convex_quat,
    normal_form, signed_cell, CellId, DEFAULT_TOL,
};
use convexa::convexity::{mk_coordinates, mu_trace};
use convexa::curves::{integrate_frame, uniform_grid, FramedCurve, LogCoords};
use convexa::deform::{add_loops, graft, spread_loops, spread_until_convex, GraftSpec, LoopSpec};
use convexa::families::{beta, circle, g0, gamma_alpha, gs, h_hat, nu, path_nu, SpherePoint};
use convexa::harness::{classify_component, deserialize, run_suite, serialize, Metadata, Resolution, SuiteConfig, CHECK_IDS};
use convexa::rotations::{project, Rotation, UnitQuaternion};
use nalgebra::Matrix3;
use serde_json::json;

#[derive(Parser)]
#[command(name = "convexa", version, about = "Locally convex spherical curves: frames, Bruhat cells, surgeries and topological witnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the frame equation for given cell speeds and write a curve document.
    Integrate(IntegrateArgs),
    /// Bruhat cell and convexity predicates of a rotation or a unit quaternion.
    ClassifyCell(ClassifyCellArgs),
    /// Component of a closed curve with endpoint lift ±1.
    ClassifyComponent {
        curve: PathBuf,
    },
    /// Build a named family member.
    Family(FamilyArgs),
    /// Apply a surgery to a curve document.
    Deform {
        #[command(subcommand)]
        op: DeformOp,
    },
    /// Run the reproduction suite; exits with 1 when a check fails.
    Verify(VerifyArgs),
    /// Write plot data as CSV.
    ExportPlot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IntegrateArgs {
    /// CSV with columns `v,v_hat`, one row per cell of a uniform grid.
    #[arg(long, conflicts_with_all = ["v", "v_hat"])]
    speeds: Option<PathBuf>,
    /// Number of uniform cells for constant speeds.
    #[arg(long, default_value_t = 256)]
    cells: usize,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long = "v-hat", allow_hyphen_values = true)]
    v_hat: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ClassifyCellArgs {
    /// Unit quaternion `w,x,y,z`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "matrix", required_unless_present = "matrix")]
    quaternion: Option<Vec<f64>>,
    /// Rotation matrix, nine entries in row order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    matrix: Option<Vec<f64>>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    /// `ν_s`; parameter `s`.
    Nu,
    /// Latitude circle; parameter `rho`.
    Circle,
    /// `β_α`; parameter `alpha`.
    Beta,
    /// `γ_α`; parameter `alpha`.
    Gamma,
    /// `g₀(p)`; parameters `theta`, `alpha`.
    G0,
    /// Path `ν_n → ν_{n+2}`; parameters `n`, `sigma`.
    PathNu,
    /// `g_s(p)`; parameters `s`, `theta`, `alpha`.
    Gs,
    /// `ĥ(p)`; parameters `k`, quaternion `zw,zx,zy,zz` and disk points `x0,y0,x1,y1,…`.
    HHat,
}

#[derive(Args)]
struct FamilyArgs {
    name: FamilyName,
    /// Comma-separated `key=value` pairs.
    #[arg(long, value_parser = parse_params, default_value = "")]
    params: BTreeMap<String, f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum DeformOp {
    /// Insert `n` circles at `t0`.
    AddLoops {
        curve: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        n: u32,
        /// Window half-width; the default depends on `t0` and `n`.
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Spread `2n` loops along the curve; with `--until-convex`, search `n` up to `--max`.
    Spread {
        curve: PathBuf,
        #[arg(long, required_unless_present = "until_convex")]
        n: Option<usize>,
        #[arg(long)]
        until_convex: bool,
        #[arg(long, default_value_t = 40)]
        max: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Graft on `[t0, t1]` with parameter `s` for the cell `(13);ell`.
    Graft {
        curve: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 7)]
        ell: u8,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Checks to run; all when none are given.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(CHECK_IDS))]
    checks: Vec<String>,
    /// Overrides `CONVEXA_SEED` and the default seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Random samples for the Bruhat checks.
    #[arg(long)]
    samples: Option<usize>,
    /// Divide every scan resolution by this factor.
    #[arg(long, default_value_t = 1)]
    coarsen: usize,
    /// Mutation test: flip the sign of the second open-cell minor.
    #[arg(long, hide = true)]
    tamper_minor_sign: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlotKind {
    /// Curve samples: `t,x,y,z,qw,qx,qy,qz,v,v_hat`.
    Curve {
        curve: PathBuf,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// The two open-cell minors of `Γ(t0; t)` for `t ∈ [t0, 1]`.
    Mu {
        curve: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// `M_k∘g₀` along the circle of polar angle `alpha` around the south pole.
    MkLoop {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// An error of the caller rather than of the computation.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn is_input_error(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        if cause.is::<InputError>() || cause.is::<io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return true;
        }
        matches!(
            cause.downcast_ref::<convexa::Error>(),
            Some(
                convexa::Error::InvalidInput(_)
                    | convexa::Error::Format { .. }
                    | convexa::Error::VersionUnsupported(_)
                    | convexa::Error::WrongEndpoint
                    | convexa::Error::ProjectionMismatch { .. }
            )
        )
    })
}

fn parse_params(raw: &str) -> std::result::Result<BTreeMap<String, f64>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').ok_or_else(|| format!("expected key=value, got {pair:?}"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("{k}: {v:?} is not a number"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn write_bytes(output: &Output, bytes: &[u8]) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn read_curve(path: &Path) -> Result<FramedCurve> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_curve(output: &Output, curve: &FramedCurve, family: &str, parameters: BTreeMap<String, f64>) -> Result<()> {
    let bytes = serialize(curve, &Metadata { family: family.into(), parameters })?;
    write_bytes(output, &bytes)
}

fn integrate(args: &IntegrateArgs) -> Result<()> {
    let (v, v_hat) = match &args.speeds {
        Some(path) => {
            let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            let mut v = Vec::new();
            let mut v_hat = Vec::new();
            for row in reader.deserialize::<(f64, f64)>() {
                let (a, b) = row?;
                v.push(a);
                v_hat.push(b);
            }
            (v, v_hat)
        }
        None => {
            let (Some(v), Some(vh)) = (args.v, args.v_hat) else {
                return Err(input_error("give --speeds or both --v and --v-hat"));
            };
            (vec![v; args.cells], vec![vh; args.cells])
        }
    };
    if v.is_empty() {
        return Err(input_error("no cells to integrate"));
    }
    let coords = LogCoords::from_speeds(uniform_grid(v.len()), &v, &v_hat)?;
    let curve = integrate_frame(&coords);
    write_curve(&args.output, &curve, "integrate", BTreeMap::from([("cells".to_string(), v.len() as f64)]))
}

fn classify_cell(args: &ClassifyCellArgs) -> Result<()> {
    let (rotation, quaternion) = match (&args.quaternion, &args.matrix) {
        (Some(q), _) => {
            if q.len() != 4 {
                return Err(input_error(format!("a quaternion has 4 entries, got {}", q.len())));
            }
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(input_error(format!("quaternion norm is {n}, expected 1")));
            }
            let z = UnitQuaternion::new(q[0], q[1], q[2], q[3]);
            (project(&z), Some(z))
        }
        (None, Some(m)) => {
            if m.len() != 9 {
                return Err(input_error(format!("a 3×3 matrix has 9 entries, got {}", m.len())));
            }
            let m = Matrix3::from_row_slice(m);
            if (m.transpose() * m - Matrix3::identity()).norm() > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9 {
                return Err(input_error("matrix is not a rotation"));
            }
            (Rotation(m), None)
        }
        (None, None) => return Err(input_error("give --quaternion or --matrix")),
    };
    let nf = normal_form(&rotation, DEFAULT_TOL)?;
    let cell = CellId::new(nf.p);
    let mut report = json!({
        "cell": cell.to_string(),
        "dimension": cell.dim,
        "open_convex": is_open_convex(&rotation),
        "convex_matrix": is_convex_matrix(&rotation)?,
        "graftable": is_graftable(&rotation)?,
    });
    if let Some(z) = quaternion {
        let lifted = signed_cell(&z)?;
        report["lifted_representative"] = json!(lifted.q.as_array());
        report["convex"] = json!(is_convex_quat(&z)?);
        report["stably_convex"] = json!(is_stably_convex_quat(&z)?);
        report["anticonvex"] = json!(is_anticonvex_quat(&z)?);
    }
    if args.json {
        writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        for (key, value) in report.as_object().expect("built as an object") {
            writeln!(io::stdout(), "{key}: {value}")?;
        }
    }
    Ok(())
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    params.get(key).copied().or(default).ok_or_else(|| input_error(format!("missing parameter {key}")))
}

fn family(args: &FamilyArgs) -> Result<()> {
    let p = &args.params;
    let sphere = || -> Result<SpherePoint> {
        Ok(SpherePoint::from_angles(param(p, "theta", Some(0.0))?, param(p, "alpha", Some(0.0))?))
    };
    let (name, curve) = match args.name {
        FamilyName::Nu => ("nu", nu(param(p, "s", Some(1.0))?)?),
        FamilyName::Circle => ("circle", circle(&Rotation::identity(), param(p, "rho", None)?)?),
        FamilyName::Beta => ("beta", beta(param(p, "alpha", None)?)),
        FamilyName::Gamma => ("gamma", gamma_alpha(param(p, "alpha", None)?)),
        FamilyName::G0 => ("g0", g0(&sphere()?)),
        FamilyName::PathNu => {
            let n = param(p, "n", Some(2.0))?;
            if n < 2.0 || n.fract() != 0.0 {
                return Err(input_error("n must be an integer at least 2"));
            }
            ("path_nu", path_nu(n as u32, param(p, "sigma", Some(0.0))?)?)
        }
        FamilyName::Gs => ("gs", gs(param(p, "s", None)?, &sphere()?)?),
        FamilyName::HHat => {
            let k = param(p, "k", Some(2.0))?;
            if k < 2.0 || k.fract() != 0.0 {
                return Err(input_error("k must be an integer at least 2"));
            }
            let k = k as usize;
            let z = UnitQuaternion::new(
                param(p, "zw", Some(1.0))?,
                param(p, "zx", Some(0.0))?,
                param(p, "zy", Some(0.0))?,
                param(p, "zz", Some(0.0))?,
            );
            let points = (0..k - 1)
                .map(|i| Ok([param(p, &format!("x{i}"), Some(0.0))?, param(p, &format!("y{i}"), Some(0.0))?]))
                .collect::<Result<Vec<_>>>()?;
            ("h_hat", h_hat(k, z, &points)?)
        }
    };
    write_curve(&args.output, &curve, name, p.clone())
}

fn deform(op: &DeformOp) -> Result<()> {
    match op {
        DeformOp::AddLoops { curve, t0, n, eps, output } => {
            let spec = match eps {
                Some(e) => LoopSpec::with_eps(*t0, *n, *e),
                None => LoopSpec::new(*t0, *n),
            };
            let c = add_loops(&read_curve(curve)?, &spec)?;
            let params = BTreeMap::from([("t0".into(), *t0), ("n".into(), *n as f64), ("eps".into(), spec.eps)]);
            write_curve(output, &c, "add_loops", params)
        }
        DeformOp::Spread { curve, n, until_convex, max, output } => {
            let base = read_curve(curve)?;
            let (n, c) = if *until_convex {
                spread_until_convex(&base, *max)?
            } else {
                let n = n.expect("clap requires n without --until-convex");
                (n, spread_loops(&base, n)?)
            };
            if *until_convex {
                eprintln!("locally convex with n = {n}");
            }
            write_curve(output, &c, "spread_loops", BTreeMap::from([("n".into(), n as f64)]))
        }
        DeformOp::Graft { curve, t0, t1, s, ell, output } => {
            let c = graft(&read_curve(curve)?, &GraftSpec::new(*t0, *t1, *s, *ell))?;
            let params =
                BTreeMap::from([("t0".into(), *t0), ("t1".into(), *t1), ("s".into(), *s), ("ell".into(), f64::from(*ell))]);
            write_curve(output, &c, "graft", params)
        }
    }
}

/// Runs the suite; `Ok(false)` when a check fails.
fn verify(args: &VerifyArgs) -> Result<bool> {
    let mut config = SuiteConfig::default().with_env_seed()?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(input_error("--workers must be positive"));
        }
        config.workers = w;
    }
    if let Some(n) = args.samples {
        config.samples = n;
    }
    if args.coarsen == 0 {
        return Err(input_error("--coarsen must be positive"));
    }
    config.resolution = Resolution::default().coarsened(args.coarsen);
    config.tamper_minor_sign = args.tamper_minor_sign;
    config.checks = args.checks.clone();
    let report = run_suite(&config)?;
    let json = report.to_json();
    if let Some(path) = &args.report {
        fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    if args.json {
        writeln!(io::stdout(), "{json}")?;
    } else {
        write!(io::stdout(), "{}", report.to_text())?;
    }
    Ok(report.passed)
}

fn write_csv(output: &Output, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn export_plot(kind: &PlotKind) -> Result<()> {
    match kind {
        PlotKind::Curve { curve, samples, output } => {
            let c = read_curve(curve)?;
            let n = (*samples).max(1);
            let rows = (0..=n).map(|i| {
                let t = i as f64 / n as f64;
                let p = c.point_at(t);
                let q = c.lift_at(t);
                let cell = c.cell_of(t);
                vec![t, p.x, p.y, p.z, q.w, q.x, q.y, q.z, c.v[cell], c.v_hat[cell]]
            });
            write_csv(output, &["t", "x", "y", "z", "qw", "qx", "qy", "qz", "v", "v_hat"], rows)
        }
        PlotKind::Mu { curve, t0, samples, output } => {
            if !(0.0..1.0).contains(t0) {
                return Err(input_error("t0 must lie in [0, 1)"));
            }
            let c = read_curve(curve)?;
            let rows = mu_trace(&c, *t0, (*samples).max(1)).into_iter().map(|(t, a, b)| vec![t, a, b]);
            write_csv(output, &["t", "mu1", "mu2"], rows)
        }
        PlotKind::MkLoop { alpha, k, samples, output } => {
            if !(*alpha > 0.0 && *alpha < std::f64::consts::PI) {
                return Err(input_error("alpha must lie in (0, π)"));
            }
            if *k < 2 {
                return Err(input_error("k must be at least 2"));
            }
            let n = (*samples).max(3);
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let m = mk_coordinates(&g0(&SpherePoint::from_angles(theta, *alpha)), *k)
                    .map_err(|e| anyhow!("M_{k} at θ = {theta:.4}: {e}"))?;
                rows.push(std::iter::once(theta).chain(m).collect());
            }
            let names: Vec<String> =
                (1..*k).flat_map(|j| [format!("theta{j}"), format!("eta{j}")]).collect();
            let header: Vec<&str> = std::iter::once("angle").chain(names.iter().map(String::as_str)).collect();
            write_csv(output, &header, rows.into_iter())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Integrate(a) => integrate(&a)?,
        Command::ClassifyCell(a) => classify_cell(&a)?,
        Command::ClassifyComponent { curve } => {
            let component = classify_component(&read_curve(&curve)?)?;
            writeln!(io::stdout(), "{component:?}")?;
        }
        Command::Family(a) => family(&a)?,
        Command::Deform { op } => deform(&op)?,
        Command::Verify(a) => return verify(&a),
        Command::ExportPlot { kind } => export_plot(&kind)?,
    }
    Ok(true)
}

/// A closed stdout, as in `convexa ... | head`, ends the run quietly.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>().is_some_and(|csv| matches!(csv.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe))
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_input_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        let p = parse_params("s=2, alpha=-0.5").unwrap();
        assert_eq!(p["s"], 2.0);
        assert_eq!(p["alpha"], -0.5);
        assert!(parse_params("s").is_err());
        assert!(parse_params("").unwrap().is_empty());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn input_errors_are_classified() {
        assert!(is_input_error(&input_error("bad")));
        assert!(is_input_error(&anyhow::Error::from(convexa::Error::WrongEndpoint).context("classifying")));
        assert!(!is_input_error(&anyhow::Error::from(convexa::Error::TooCoarse)));
    }
}
