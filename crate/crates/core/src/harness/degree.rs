//! Degree of `ĝ(p, t) = F̃_{g(p)}(t)` on `S² × S¹ → S³` by signed preimage counting.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{distance, sphere_grid, Chart};
use super::{Domain, DomainPoint, FamilyMap};
use crate::curves::{nu1_lift, FramedCurve};
use crate::error::{Error, Result};
use crate::families::SpherePoint;
use crate::rotations::UnitQuaternion;

/// Scan step (chordal, in `S³`) above which the grid is rejected as too coarse.
pub const MAX_SCAN_STEP: f64 = 0.3;
/// Smallest admissible `|det J|` at a refined preimage.
pub const DET_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-11;
const FD_STEP: f64 = 1e-6;
const STEP_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub p: [f64; 3],
    pub t: f64,
    pub sign: i32,
    pub jacobian_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub value: i32,
    pub preimages: Vec<Preimage>,
    pub regular_value: UnitQuaternion,
}

/// Candidate regular values, tried in order until one is transversal.
pub fn regular_values() -> Vec<UnitQuaternion> {
    vec![
        -UnitQuaternion::one(),
        -nu1_lift(0.37),
        UnitQuaternion::new(0.31, -0.52, 0.44, 0.66),
        UnitQuaternion::new(-0.27, 0.61, 0.58, -0.46),
    ]
}

/// Degree at the first regular value of [`regular_values`] with transversal preimages.
pub fn degree(g: &FamilyMap) -> Result<DegreeReport> {
    let mut last = None;
    for q in regular_values() {
        match degree_at(g, q) {
            Err(e @ Error::NonTransversal(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("the fallback list is not empty"))
}

fn closed_lift(g: &FamilyMap, p: &DomainPoint) -> Result<FramedCurve> {
    let c = g.eval(p)?.based();
    if c.endpoint_lift().chordal(&UnitQuaternion::one()) > 1e-6 {
        return Err(Error::InvalidInput(format!("{} has a value outside ℒ_𝟏; ĝ is undefined on S¹", g.name)));
    }
    Ok(c)
}

fn lift_at(c: &FramedCurve, t: f64) -> UnitQuaternion {
    c.lift_at(t.rem_euclid(1.0))
}

/// Chart coordinates of `q` at the regular value: `Im(q*⁻¹q)` and the real part.
fn local(target: &UnitQuaternion, q: &UnitQuaternion) -> (Vector3<f64>, f64) {
    let r = target.inv() * *q;
    (Vector3::new(r.x, r.y, r.z), r.w)
}

struct Node {
    /// Local minima of `|ĝ(p, ·) − q*|` over the cyclic `t` grid.
    minima: Vec<(f64, f64)>,
    coarse: Vec<UnitQuaternion>,
    step_t: f64,
}

fn scan_node(g: &FamilyMap, p: &DomainPoint, target: &UnitQuaternion, n: usize) -> Result<Node> {
    let c = closed_lift(g, p)?;
    let lifts: Vec<UnitQuaternion> = (0..n).map(|k| c.lift_at(k as f64 / n as f64)).collect();
    let d: Vec<f64> = lifts.iter().map(|q| q.chordal(target)).collect();
    let minima = (0..n)
        .filter(|&k| d[k] <= d[(k + n - 1) % n] && d[k] < d[(k + 1) % n])
        .map(|k| (k as f64 / n as f64, d[k]))
        .collect();
    let step_t = (0..n).map(|k| lifts[k].chordal(&lifts[(k + 1) % n])).fold(0.0, f64::max);
    let stride = (n / STEP_SAMPLES).max(1);
    let coarse = lifts.iter().step_by(stride).copied().collect();
    Ok(Node { minima, coarse, step_t })
}

/// Residual and real part at chart coordinates `x = (a, b, dt)`.
fn field(g: &FamilyMap, target: &UnitQuaternion, chart: &Chart, x: &[f64; 3], t: f64) -> Result<(Vector3<f64>, f64)> {
    let c = closed_lift(g, &chart.at(&x[..2])?)?;
    Ok(local(target, &lift_at(&c, t + x[2])))
}

fn jacobian(g: &FamilyMap, target: &UnitQuaternion, chart: &Chart, t: f64) -> Result<Matrix3<f64>> {
    let h = FD_STEP;
    let mut j = Matrix3::zeros();
    for col in 0..2 {
        let mut xp = [0.0; 3];
        let mut xm = [0.0; 3];
        xp[col] = h;
        xm[col] = -h;
        let d = (field(g, target, chart, &xp, t)?.0 - field(g, target, chart, &xm, t)?.0) / (2.0 * h);
        j.set_column(col, &d);
    }
    let c = closed_lift(g, chart.base())?;
    let d = (local(target, &lift_at(&c, t + h)).0 - local(target, &lift_at(&c, t - h)).0) / (2.0 * h);
    j.set_column(2, &d);
    Ok(j)
}

/// Damped Gauss–Newton in the chart `(a, b, dt)`; `None` when it stalls.
fn refine(g: &FamilyMap, target: &UnitQuaternion, p: SpherePoint, t: f64) -> Result<Option<(SpherePoint, f64)>> {
    let (mut p, mut t) = (p, t);
    for _ in 0..60 {
        let chart = Chart::new(DomainPoint::Sphere(p));
        let (r0, w0) = field(g, target, &chart, &[0.0; 3], t)?;
        if r0.norm() < NEWTON_TOL {
            return Ok((w0 > 0.0).then_some((p, t.rem_euclid(1.0))));
        }
        let j = jacobian(g, target, &chart, t)?;
        let Ok(delta) = j.svd(true, true).solve(&-r0, 1e-12) else {
            return Ok(None);
        };
        let mut lam = 1.0;
        let accepted = loop {
            let x = [lam * delta[0], lam * delta[1], lam * delta[2]];
            let r = field(g, target, &chart, &x, t)?.0;
            if r.norm() < (1.0 - 1e-4 * lam) * r0.norm() {
                break Some(x);
            }
            lam *= 0.5;
            if lam < 1e-4 {
                break None;
            }
        };
        let Some(x) = accepted else { return Ok(None) };
        match chart.at(&x[..2])? {
            DomainPoint::Sphere(q) => p = q,
            _ => unreachable!("sphere charts map to the sphere"),
        }
        t += x[2];
    }
    Ok(None)
}

fn cyclic_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Degree of `ĝ` computed from the preimages of `target`.
pub fn degree_at(g: &FamilyMap, target: UnitQuaternion) -> Result<DegreeReport> {
    if g.domain != Domain::Sphere2 {
        return Err(Error::InvalidInput("degree needs a family over S²".into()));
    }
    let res = g.resolution;
    let grid = sphere_grid(res.alpha, res.theta);
    let n = res.t.max(3);
    let nodes = grid.points.par_iter().map(|p| scan_node(g, p, &target, n)).collect::<Result<Vec<_>>>()?;

    let step_t = nodes.iter().map(|nd| nd.step_t).fold(0.0, f64::max);
    let step_p = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            grid.neighbors[i]
                .iter()
                .filter(|&&j| j > i)
                .flat_map(|&j| nodes[i].coarse.iter().zip(&nodes[j].coarse).map(|(a, b)| a.chordal(b)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if step_t.max(step_p) > MAX_SCAN_STEP {
        return Err(Error::TooCoarse);
    }
    let tau = 2.0 * (step_t + step_p);

    let mut candidates: Vec<(f64, usize, f64)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(i, nd)| nd.minima.iter().filter(|m| m.1 < tau).map(move |&(t, d)| (d, i, t)))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let radius_p = 1.5 * grid.spacing;
    let radius_t = 3.0 / n as f64;
    let mut seeds: Vec<(usize, f64)> = Vec::new();
    for &(_, i, t) in &candidates {
        let near = seeds
            .iter()
            .any(|&(j, s)| distance(&grid.points[i], &grid.points[j]) <= radius_p && cyclic_gap(t, s) <= radius_t);
        if !near {
            seeds.push((i, t));
        }
    }

    let refined = seeds
        .par_iter()
        .map(|&(i, t)| match &grid.points[i] {
            DomainPoint::Sphere(p) => refine(g, &target, *p, t),
            _ => unreachable!("sphere grids hold sphere points"),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut found: Vec<(SpherePoint, f64)> = Vec::new();
    for (p, t) in refined.into_iter().flatten() {
        if !found.iter().any(|(q, s)| (p.0 - q.0).norm() < 1e-6 && cyclic_gap(t, *s) < 1e-6) {
            found.push((p, t));
        }
    }

    let mut preimages = found
        .par_iter()
        .map(|(p, t)| {
            let det = jacobian(g, &target, &Chart::new(DomainPoint::Sphere(*p)), *t)?.determinant();
            if det.abs() < DET_TOL {
                return Err(Error::NonTransversal(format!(
                    "|det J| = {:.2e} at p = ({:.4}, {:.4}, {:.4}), t = {t:.6}",
                    det.abs(),
                    p.0.x,
                    p.0.y,
                    p.0.z
                )));
            }
            Ok(Preimage { p: [p.0.x, p.0.y, p.0.z], t: *t, sign: det.signum() as i32, jacobian_det: det })
        })
        .collect::<Result<Vec<_>>>()?;
    preimages.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.p[2].total_cmp(&b.p[2])));
    Ok(DegreeReport { value: preimages.iter().map(|p| p.sign).sum(), preimages, regular_value: target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::nu;
    use crate::harness::Resolution;

    fn small() -> Resolution {
        Resolution { alpha: 17, theta: 32, t: 256, ..Resolution::default() }
    }

    #[test]
    fn constant_family_has_degree_zero() {
        let g = FamilyMap::constant("nu2", Domain::Sphere2, nu(2.0).unwrap()).with_resolution(small());
        assert!(matches!(degree_at(&g, -UnitQuaternion::one()), Err(Error::NonTransversal(_))));
        let r = degree(&g).unwrap();
        assert_eq!(r.value, 0);
        assert!(r.preimages.is_empty());
        assert_ne!(r.regular_value, -UnitQuaternion::one());
    }

    #[test]
    fn open_curves_are_rejected() {
        let g = FamilyMap::constant("nu1", Domain::Sphere2, nu(1.0).unwrap()).with_resolution(small());
        assert!(matches!(degree(&g), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn g0_on_a_small_grid() {
        let g = FamilyMap::g0().with_resolution(Resolution { alpha: 33, theta: 64, t: 512, ..Resolution::default() });
        let r = degree(&g).unwrap();
        assert_eq!(r.value.abs(), 1, "{r:?}");
        assert_eq!(r.preimages.len(), 3, "{r:?}");
    }
}
