//! Signed count `m_{2k−2}` of intersections of a family with `ℳ_k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{distance, mk_grid, Chart};
use super::{winding_number, DomainPoint, FamilyMap};
use crate::convexity::{mk_coordinates, multiconvex_multiplicity, Multiplicity};
use crate::error::{Error, Result};

/// Scan nodes with `|M_k|` above this value are never refined.
pub const CANDIDATE_TOL: f64 = 0.5;
const NEWTON_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;
/// Circle radii tried in turn for the local winding number.
const WINDING_RADII: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
const WINDING_SAMPLES: usize = 64;
const MAX_WINDING_SAMPLES: usize = 1 << 14;
const DET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    /// Ambient coordinates of the domain point.
    pub point: Vec<f64>,
    pub sign: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub value: i32,
    pub zeros: Vec<Zero>,
    pub scanned: usize,
    /// Scan nodes whose curve is outside `U_k` and not in `ℳ_k`.
    pub outside_uk: usize,
    /// Scan nodes where neither `M_k` nor the multiplicity could be computed.
    pub unresolved: usize,
}

enum Node {
    Inside(f64),
    Outside,
    Unresolved,
}

fn coords_at(g: &FamilyMap, p: &DomainPoint, k: usize) -> Result<Vec<f64>> {
    mk_coordinates(&g.eval(p)?, k)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `None` whenever the chart point or the curve leaves `U_k`.
fn field(g: &FamilyMap, chart: &Chart, x: &[f64], k: usize) -> Result<Option<Vec<f64>>> {
    let Ok(p) = chart.at(x) else { return Ok(None) };
    Ok(coords_at(g, &p, k).ok())
}

fn jacobian(g: &FamilyMap, chart: &Chart, k: usize, dim: usize) -> Result<Option<DMatrix<f64>>> {
    let mut j = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut xp = vec![0.0; dim];
        let mut xm = vec![0.0; dim];
        xp[col] = FD_STEP;
        xm[col] = -FD_STEP;
        let (Some(a), Some(b)) = (field(g, chart, &xp, k)?, field(g, chart, &xm, k)?) else {
            return Ok(None);
        };
        for row in 0..dim {
            j[(row, col)] = (a[row] - b[row]) / (2.0 * FD_STEP);
        }
    }
    Ok(Some(j))
}

fn refine(g: &FamilyMap, start: &DomainPoint, k: usize, dim: usize) -> Result<Option<DomainPoint>> {
    let mut p = start.clone();
    for _ in 0..60 {
        let chart = Chart::new(p.clone());
        let zero = vec![0.0; dim];
        let Some(r0) = field(g, &chart, &zero, k)? else { return Ok(None) };
        let n0 = norm(&r0);
        if n0 < NEWTON_TOL {
            return Ok(Some(p));
        }
        let Some(j) = jacobian(g, &chart, k, dim)? else { return Ok(None) };
        let Ok(delta) = j.svd(true, true).solve(&(-DVector::from_vec(r0)), 1e-12) else {
            return Ok(None);
        };
        let mut lam = 1.0;
        let step = loop {
            let x: Vec<f64> = delta.iter().map(|d| lam * d).collect();
            if let Some(r) = field(g, &chart, &x, k)? {
                if norm(&r) < (1.0 - 1e-4 * lam) * n0 {
                    break Some(x);
                }
            }
            lam *= 0.5;
            if lam < 1e-4 {
                break None;
            }
        };
        let Some(x) = step else { return Ok(None) };
        p = chart.at(&x)?;
    }
    Ok(None)
}

/// `(θ₁, η₁)` on the chart circle of radius `r` at angle `a`; `None` outside `U_2`.
fn circle_point(g: &FamilyMap, chart: &Chart, r: f64, a: f64) -> Result<Option<[f64; 2]>> {
    let x = [r * a.cos(), r * a.sin()];
    Ok(field(g, chart, &x, 2)?.map(|m| [m[0], m[1]]))
}

fn turn(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs()
}

/// Samples the circle, bisecting every arc whose image turns by more than `π/4`.
fn adaptive_loop(g: &FamilyMap, chart: &Chart, r: f64) -> Result<Option<Vec<[f64; 2]>>> {
    let start: Vec<f64> = (0..WINDING_SAMPLES).map(|i| 2.0 * PI * i as f64 / WINDING_SAMPLES as f64).collect();
    let values = start.par_iter().map(|&a| circle_point(g, chart, r, a)).collect::<Result<Vec<_>>>()?;
    let Some(values) = values.into_iter().collect::<Option<Vec<_>>>() else { return Ok(None) };
    let mut samples: Vec<(f64, [f64; 2])> = start.into_iter().zip(values).collect();
    while samples.len() < MAX_WINDING_SAMPLES {
        let n = samples.len();
        let coarse: Vec<usize> = (0..n).filter(|&i| turn(&samples[i].1, &samples[(i + 1) % n].1) > PI / 4.0).collect();
        if coarse.is_empty() {
            return Ok(Some(samples.into_iter().map(|s| s.1).collect()));
        }
        let mids: Vec<f64> = coarse
            .iter()
            .map(|&i| {
                let next = if i + 1 == n { 2.0 * PI } else { samples[i + 1].0 };
                0.5 * (samples[i].0 + next)
            })
            .collect();
        let values = mids.par_iter().map(|&a| circle_point(g, chart, r, a)).collect::<Result<Vec<_>>>()?;
        let Some(values) = values.into_iter().collect::<Option<Vec<_>>>() else { return Ok(None) };
        samples.extend(mids.into_iter().zip(values));
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Err(Error::TooCoarse)
}

/// Winding of `(θ₁, η₁)` around the largest chart circle that stays inside `U_2`.
fn winding_sign(g: &FamilyMap, p: &DomainPoint) -> Result<i32> {
    let chart = Chart::new(p.clone());
    for r in WINDING_RADII {
        let Some(loop_points) = adaptive_loop(g, &chart, r)? else { continue };
        return match winding_number(&loop_points) {
            Ok(0) => Err(Error::NonTransversal(format!("zero local winding at {:?}", p.coords()))),
            Ok(w) => Ok(w),
            Err(Error::InvalidInput(_)) => Err(Error::NonTransversal(format!("second zero near {:?}", p.coords()))),
            Err(e) => Err(e),
        };
    }
    Err(Error::NonTransversal(format!("no circle around {:?} stays inside U_2", p.coords())))
}

fn jacobian_sign(g: &FamilyMap, p: &DomainPoint, k: usize, dim: usize) -> Result<i32> {
    let j = jacobian(g, &Chart::new(p.clone()), k, dim)?
        .ok_or_else(|| Error::NonTransversal(format!("Jacobian stencil leaves U_k at {:?}", p.coords())))?;
    let det = j.determinant();
    if det.abs() < DET_TOL {
        return Err(Error::NonTransversal(format!("|det J| = {:.2e} at {:?}", det.abs(), p.coords())));
    }
    Ok(det.signum() as i32)
}

/// Zeros of `M_k∘g` located on the scan grid and refined by Newton's method.
pub fn count_mk_intersections(g: &FamilyMap, k: usize) -> Result<IntersectionReport> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be at least 2, got {k}")));
    }
    let dim = g.domain.dim();
    if dim != 2 * k - 2 {
        return Err(Error::InvalidInput(format!("family dimension {dim} differs from 2k − 2 = {}", 2 * k - 2)));
    }
    let grid = mk_grid(g.domain, &g.resolution);
    let values = grid
        .points
        .par_iter()
        .map(|p| {
            let c = g.eval(p)?;
            match mk_coordinates(&c, k) {
                Ok(m) => Ok(Node::Inside(norm(&m))),
                Err(why) => match multiconvex_multiplicity(&c) {
                    Ok(r) if r.multiplicity == Multiplicity::Multiconvex(k) => Err(Error::NonTransversal(format!(
                        "member of ℳ_{k} without M_{k} coordinates at {:?}: {why}",
                        p.coords()
                    ))),
                    Ok(_) => Ok(Node::Outside),
                    Err(_) => Ok(Node::Unresolved),
                },
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let outside_uk = values.iter().filter(|v| matches!(v, Node::Outside)).count();
    let unresolved = values.iter().filter(|v| matches!(v, Node::Unresolved)).count();
    let values: Vec<Option<f64>> = values.into_iter().map(|v| if let Node::Inside(m) = v { Some(m) } else { None }).collect();
    let seeds: Vec<usize> = (0..grid.points.len())
        .filter(|&i| {
            let Some(m) = values[i] else { return false };
            m < CANDIDATE_TOL && grid.neighbors[i].iter().all(|&j| values[j].is_none_or(|n| m <= n))
        })
        .collect();
    let refined = seeds.par_iter().map(|&i| refine(g, &grid.points[i], k, dim)).collect::<Result<Vec<_>>>()?;
    let mut found: Vec<DomainPoint> = Vec::new();
    for p in refined.into_iter().flatten() {
        if !found.iter().any(|q| distance(q, &p) < 1e-5) {
            found.push(p);
        }
    }
    let zeros = found
        .iter()
        .map(|p| {
            let sign = if k == 2 { winding_sign(g, p)? } else { jacobian_sign(g, p, k, dim)? };
            Ok(Zero { point: p.coords(), sign })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntersectionReport { value: zeros.iter().map(|z| z.sign).sum(), zeros, scanned: grid.points.len(), outside_uk, unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::nu;
    use crate::harness::{Domain, Resolution};

    #[test]
    fn dimension_must_match() {
        let g = FamilyMap::constant("nu2", Domain::Sphere2, nu(2.0).unwrap());
        assert!(count_mk_intersections(&g, 3).is_err());
        assert!(count_mk_intersections(&g, 1).is_err());
    }

    #[test]
    fn constant_family_off_mk() {
        let r = Resolution { mk_alpha: 5, mk_theta: 8, ..Resolution::default() };
        let g = FamilyMap::constant("nu3", Domain::Sphere2, nu(3.0).unwrap()).with_resolution(r);
        let rep = count_mk_intersections(&g, 2).unwrap();
        assert_eq!(rep.value, 0);
        assert_eq!(rep.outside_uk, rep.scanned);
    }
}
