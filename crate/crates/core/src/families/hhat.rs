//! The map `ĥ : (D²)^{k−1} → ℒ_{(−𝟏)^k z}` whose only multiconvex value is `ĥ(0)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::tail::TailFixer;
use super::{convex_connect, g0, path_nu, SpherePoint};
use crate::bruhat::{is_convex_quat, is_stably_convex_quat};
use crate::curves::{concat_weighted, nu1_lift, FramedCurve};
use crate::error::{Error, Result};
use crate::rotations::UnitQuaternion;

const INNER: f64 = PI / 4.0;
const OUTER: f64 = 7.0 / 8.0;

/// Precomputed constants of `ĥ` for one `(k, z)`.
#[derive(Debug, Clone)]
pub struct HHat {
    pub k: usize,
    pub z: UnitQuaternion,
    pub eps0: f64,
    pub s0: f64,
    pub s1: f64,
    pub z0: UnitQuaternion,
    pub fixer: TailFixer,
    tail: FramedCurve,
}

fn sign_power(k: usize) -> UnitQuaternion {
    if k.is_multiple_of(2) {
        UnitQuaternion::one()
    } else {
        -UnitQuaternion::one()
    }
}

fn power(q: UnitQuaternion, n: usize) -> UnitQuaternion {
    (0..n).fold(UnitQuaternion::one(), |acc, _| acc * q)
}

impl HHat {
    pub fn new(k: usize, z: UnitQuaternion) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("ĥ needs k ≥ 2, got {k}")));
        }
        if !is_convex_quat(&-z).unwrap_or(false) {
            return Err(Error::InvalidInput("ĥ needs −z convex".into()));
        }
        let target = sign_power(k) * z;
        let eps0 = (0..80)
            .map(|n| 0.2 / k as f64 * 0.9f64.powi(n))
            .find(|&e| {
                let window_convex = (1..=16).all(|j| {
                    let t = e * j as f64 / 16.0;
                    is_convex_quat(&-(nu1_lift(k as f64 * t).inv() * z)).unwrap_or(false)
                });
                let z0 = -nu1_lift(e);
                window_convex && is_stably_convex_quat(&(power(z0, k - 1).inv() * target)).unwrap_or(false)
            })
            .ok_or(Error::ConvexityWindowNotFound)?;
        let z0 = -nu1_lift(eps0);
        let s1 = (1.0 - eps0) / 2.0;
        let tail = convex_connect(power(z0, k - 1), target)?;
        let mut samples: Vec<FramedCurve> = Vec::new();
        let golden = PI * (3.0 - 5f64.sqrt());
        let points: Vec<SpherePoint> = (0..32)
            .map(|i| SpherePoint::from_angles(golden * i as f64, (1.0 - (2.0 * i as f64 + 1.0) / 32.0).acos()))
            .chain([SpherePoint::south(), SpherePoint::north()])
            .collect();
        samples.extend(points.par_iter().map(g0).collect::<Vec<_>>());
        let chain: Vec<(u32, f64)> =
            (0..moves(k)).flat_map(|m| [0.0, 0.5, 1.0].map(|s| (4 + 2 * m as u32, s))).collect();
        samples.extend(chain.par_iter().map(|&(n, s)| path_nu(n, s)).collect::<Result<Vec<_>>>()?);
        let fixer = TailFixer::calibrate(&samples)?;
        Ok(Self { k, z, eps0, s0: k as f64 * (1.0 + eps0), s1, z0, fixer, tail })
    }

    /// Curve used in one factor before its tail is fixed, as a function of `p_i ∈ D²`.
    pub fn factor_curve(&self, p: [f64; 2]) -> Result<FramedCurve> {
        let r = p[0].hypot(p[1]);
        if r <= INNER {
            let theta = if r > 0.0 { p[1].atan2(p[0]) } else { 0.0 };
            return Ok(g0(&SpherePoint::from_angles(theta, 4.0 * r)));
        }
        let tau = ((r - INNER) / (OUTER - INNER)).min(1.0);
        let total = moves(self.k);
        let x = tau * total as f64;
        let m = (x.floor() as usize).min(total - 1);
        path_nu(4 + 2 * m as u32, x - m as f64)
    }

    /// `ĥ(p)` for `p ∈ (D²)^{k−1}`.
    pub fn eval(&self, p: &[[f64; 2]]) -> Result<FramedCurve> {
        if p.len() != self.k - 1 {
            return Err(Error::InvalidInput(format!("ĥ needs {} disk points, got {}", self.k - 1, p.len())));
        }
        if p.iter().any(|q| q[0].hypot(q[1]) > 1.0 + 1e-12) {
            return Err(Error::InvalidInput("disk point outside the unit disk".into()));
        }
        let blocks = p
            .iter()
            .map(|&q| Ok(self.fixer.apply(&self.factor_curve(q)?, self.s1)?.restrict(0.0, 1.0 - self.s1)))
            .collect::<Result<Vec<_>>>()?;
        let mut parts: Vec<(&FramedCurve, f64)> = blocks.iter().map(|b| (b, 1.0)).collect();
        parts.push((&self.tail, 1.0));
        Ok(concat_weighted(&parts))
    }

    /// `z₀^i`, the lifted frame of every `ĥ(p)` at `i/k`.
    pub fn anchor(&self, i: usize) -> UnitQuaternion {
        power(self.z0, i)
    }
}

/// Number of `ν_n → ν_{n+2}` moves from `ν₄` to `ν_{8k}`.
fn moves(k: usize) -> usize {
    4 * k - 2
}

/// `ĥ(p)`; build an [`HHat`] once when evaluating many points.
pub fn h_hat(k: usize, z: UnitQuaternion, p: &[[f64; 2]]) -> Result<FramedCurve> {
    HHat::new(k, z)?.eval(p)
}
