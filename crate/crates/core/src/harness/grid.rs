//! Scan grids over the parameter domains and local charts for refinement.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{Domain, DomainPoint, Resolution};
use crate::error::{Error, Result};
use crate::families::SpherePoint;

/// Grid nodes with their neighbour lists.
pub(crate) struct ScanGrid {
    pub points: Vec<DomainPoint>,
    pub neighbors: Vec<Vec<usize>>,
    /// Largest distance between neighbouring nodes in ambient coordinates.
    pub spacing: f64,
}

/// Sphere grid with single nodes at the poles; `α = 0` is `𝐬`.
pub(crate) fn sphere_grid(rows: usize, cols: usize) -> ScanGrid {
    let rows = rows.max(3);
    let cols = cols.max(3);
    let mut points = vec![DomainPoint::Sphere(SpherePoint::south())];
    for i in 1..rows - 1 {
        let alpha = PI * i as f64 / (rows - 1) as f64;
        for j in 0..cols {
            points.push(DomainPoint::Sphere(SpherePoint::from_angles(2.0 * PI * j as f64 / cols as f64, alpha)));
        }
    }
    points.push(DomainPoint::Sphere(SpherePoint::north()));
    let north = points.len() - 1;
    let idx = |i: usize, j: usize| 1 + (i - 1) * cols + j % cols;
    let mut neighbors = vec![Vec::new(); points.len()];
    neighbors[0] = (0..cols).map(|j| idx(1, j)).collect();
    neighbors[north] = (0..cols).map(|j| idx(rows - 2, j)).collect();
    for i in 1..rows - 1 {
        for j in 0..cols {
            let n = &mut neighbors[idx(i, j)];
            n.push(if i == 1 { 0 } else { idx(i - 1, j) });
            n.push(if i == rows - 2 { north } else { idx(i + 1, j) });
            n.push(idx(i, j + cols - 1));
            n.push(idx(i, j + 1));
        }
    }
    let spacing = 2.0 * (PI / (rows - 1) as f64).max(2.0 * PI / cols as f64);
    ScanGrid { points, neighbors, spacing }
}

/// Square grid of side `m` on `[−1, 1]²` clipped to the unit disk, raised to the `n`-th power.
pub(crate) fn disk_grid(m: usize, n: usize) -> ScanGrid {
    let m = m.max(3);
    let h = 2.0 / (m - 1) as f64;
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let (x, y) = (-1.0 + h * a as f64, -1.0 + h * b as f64);
            if x.hypot(y) <= 1.0 + 1e-12 {
                cells.push((a, b));
            }
        }
    }
    let lookup = |a: isize, b: isize| -> Option<usize> {
        if a < 0 || b < 0 {
            return None;
        }
        cells.iter().position(|&c| c == (a as usize, b as usize))
    };
    let single: Vec<Vec<usize>> = cells
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (a as isize, b as isize);
            [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)].iter().filter_map(|&(x, y)| lookup(x, y)).collect()
        })
        .collect();
    let coord = |c: usize| [-1.0 + h * cells[c].0 as f64, -1.0 + h * cells[c].1 as f64];
    let c = cells.len();
    let total = c.pow(n as u32);
    let mut points = Vec::with_capacity(total);
    let mut neighbors = Vec::with_capacity(total);
    for flat in 0..total {
        let digits: Vec<usize> = (0..n).map(|f| flat / c.pow(f as u32) % c).collect();
        points.push(DomainPoint::Disks(digits.iter().map(|&d| coord(d)).collect()));
        let mut nb = Vec::new();
        for (f, &d) in digits.iter().enumerate() {
            for &e in &single[d] {
                nb.push(flat - d * c.pow(f as u32) + e * c.pow(f as u32));
            }
        }
        neighbors.push(nb);
    }
    ScanGrid { points, neighbors, spacing: h * (n as f64).sqrt() }
}

pub(crate) fn interval_grid(m: usize) -> ScanGrid {
    let m = m.max(3);
    let points = (0..m).map(|i| DomainPoint::Interval(i as f64 / (m - 1) as f64)).collect();
    let neighbors = (0..m)
        .map(|i| [i.checked_sub(1), (i + 1 < m).then_some(i + 1)].into_iter().flatten().collect())
        .collect();
    ScanGrid { points, neighbors, spacing: 1.0 / (m - 1) as f64 }
}

pub(crate) fn mk_grid(domain: Domain, res: &Resolution) -> ScanGrid {
    match domain {
        Domain::Sphere2 => sphere_grid(res.mk_alpha, res.mk_theta),
        Domain::DiskPower(n) => disk_grid(res.disk, n),
        Domain::Interval => interval_grid(res.t),
    }
}

/// Local coordinates `x ∈ R^dim` around a base point.
#[derive(Debug, Clone)]
pub(crate) struct Chart {
    base: DomainPoint,
    tangent: Option<(Vector3<f64>, Vector3<f64>)>,
}

/// An oriented orthonormal pair `(e₁, e₂)` with `e₁ × e₂ = p`.
pub(crate) fn tangent_frame(p: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = if p.x.abs() <= p.y.abs() && p.x.abs() <= p.z.abs() {
        Vector3::x()
    } else if p.y.abs() <= p.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (axis - p * axis.dot(p)).normalize();
    (e1, p.cross(&e1))
}

impl Chart {
    pub fn new(base: DomainPoint) -> Self {
        let tangent = match &base {
            DomainPoint::Sphere(p) => Some(tangent_frame(&p.0)),
            _ => None,
        };
        Self { base, tangent }
    }

    pub fn base(&self) -> &DomainPoint {
        &self.base
    }

    pub fn at(&self, x: &[f64]) -> Result<DomainPoint> {
        match &self.base {
            DomainPoint::Sphere(p) => {
                let (e1, e2) = self.tangent.expect("sphere charts carry a tangent frame");
                Ok(DomainPoint::Sphere(SpherePoint::new(p.0 + e1 * x[0] + e2 * x[1])?))
            }
            DomainPoint::Disks(d) => {
                let moved: Vec<[f64; 2]> = d.iter().enumerate().map(|(i, q)| [q[0] + x[2 * i], q[1] + x[2 * i + 1]]).collect();
                if moved.iter().any(|q| q[0].hypot(q[1]) > 1.0 + 1e-12) {
                    return Err(Error::InvalidInput("chart left the unit disk".into()));
                }
                Ok(DomainPoint::Disks(moved))
            }
            DomainPoint::Interval(t) => {
                let s = t + x[0];
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidInput("chart left [0, 1]".into()));
                }
                Ok(DomainPoint::Interval(s))
            }
        }
    }
}

pub(crate) fn distance(a: &DomainPoint, b: &DomainPoint) -> f64 {
    let (x, y) = (a.coords(), b.coords());
    x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_grid_shape() {
        let g = sphere_grid(5, 8);
        assert_eq!(g.points.len(), 2 + 3 * 8);
        assert_eq!(g.neighbors[0].len(), 8);
        for (i, nb) in g.neighbors.iter().enumerate() {
            for &j in nb {
                assert!(g.neighbors[j].contains(&i), "{i} -> {j} is not symmetric");
                assert!(distance(&g.points[i], &g.points[j]) <= g.spacing);
            }
        }
    }

    #[test]
    fn disk_grid_shape() {
        let g = disk_grid(5, 1);
        assert_eq!(g.points.len(), 13);
        let g2 = disk_grid(3, 2);
        assert_eq!(g2.points.len(), 25);
        for (i, nb) in g2.neighbors.iter().enumerate() {
            for &j in nb {
                assert!(g2.neighbors[j].contains(&i));
            }
        }
    }

    #[test]
    fn tangent_frames_are_oriented() {
        for p in [Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.3, -0.4, 0.2).normalize(), Vector3::x()] {
            let (e1, e2) = tangent_frame(&p);
            assert!((e1.cross(&e2) - p).norm() < 1e-12);
        }
    }
}
