//! The six-arc curves `β_α`, their duals `γ_α` and the map `g₀ : S² → ℒ_𝟏`.
//!
//! Arc `j = 0..5` lives on `[j/6 − 1/12, j/6 + 1/12]` and follows the circle through
//! `P_i`, `Q_i^σ(α)`, `P_{i+1}` with `i = j mod 3` and `σ = (−1)^j`. Each arc is a
//! rotation about the axis of its circle, so the lift has constant logarithmic
//! derivative on it and is evaluated exactly.

use std::f64::consts::{FRAC_PI_3, PI};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expq, SpherePoint};
use crate::curves::{frame_velocity, uniform_grid, FramedCurve};
use crate::rotations::{dist_to_circle, exp_im, ImQuaternion, Rotation, UnitQuaternion};

/// Default number of uniform cells for sampled members of the family; a multiple of 12.
pub const DEFAULT_HEX_CELLS: usize = 1536;

/// `α`, `α̃ = arcsin(sin α / 2)` and the closed-form window constants `u(α)`, `v(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexArcParams {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub u: f64,
    pub v: f64,
}

impl HexArcParams {
    pub fn new(alpha: f64) -> Self {
        let sa = alpha.sin();
        let alpha_tilde = (0.5 * sa).asin();
        let u = 6.0 * (alpha.cos() / (4.0 - sa * sa).sqrt()).clamp(-1.0, 1.0).acos();
        let v = -0.5 * (0.5 * sa).asin();
        Self { alpha, alpha_tilde, u, v }
    }

    /// `exp(−α𝐣/2)·exp(u t𝐤)·exp(−v𝐣)`, valid for `t ∈ [−1/12, 1/12]`.
    pub fn closed_form(&self, t: f64) -> UnitQuaternion {
        expq(ImQuaternion::J, -self.alpha / 2.0) * expq(ImQuaternion::K, self.u * t) * expq(ImQuaternion::J, -self.v)
    }
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    /// Circle axis `m`, offset `d = x·m`, radius `√(1 − d²)`.
    m: Vector3<f64>,
    center: Vector3<f64>,
    radius: f64,
    u1: Vector3<f64>,
    u2: Vector3<f64>,
    dir: f64,
    sweep: f64,
    v: f64,
    v_hat: f64,
    mid_lift: UnitQuaternion,
}

impl Arc {
    fn omega(&self) -> ImQuaternion {
        frame_velocity(self.v, self.v_hat)
    }

    fn frame(&self, t_local: f64) -> Rotation {
        let psi = self.dir * self.sweep * 6.0 * t_local;
        let (s, c) = psi.sin_cos();
        let x = self.center + self.radius * (c * self.u1 + s * self.u2);
        let tangent = self.dir * (-s * self.u1 + c * self.u2);
        let n = x.cross(&tangent);
        Rotation(Matrix3::from_columns(&[x, tangent, n]))
    }
}

fn p_vertex(i: usize) -> Vector3<f64> {
    let a = -FRAC_PI_3 + 2.0 * FRAC_PI_3 * i as f64;
    Vector3::new(a.cos(), a.sin(), 0.0)
}

fn q_vertex(i: usize) -> Vector3<f64> {
    let a = 2.0 * FRAC_PI_3 * i as f64;
    Vector3::new(a.cos(), a.sin(), 0.0)
}

fn angle_in_plane(arc_center: &Vector3<f64>, u1: &Vector3<f64>, u2: &Vector3<f64>, x: &Vector3<f64>) -> f64 {
    let r = x - arc_center;
    r.dot(u2).atan2(r.dot(u1)).rem_euclid(2.0 * PI)
}

fn build_arc(alpha: f64, alpha_tilde: f64, j: usize) -> Arc {
    let i = j % 3;
    let sigma = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let north = Vector3::z();
    let m = -alpha.cos() * north + sigma * alpha.sin() * q_vertex(i);
    let start = p_vertex(i);
    let end = p_vertex((i + 1) % 3);
    let via = (alpha - alpha_tilde).cos() * q_vertex(i) + sigma * (alpha - alpha_tilde).sin() * north;
    let d = start.dot(&m);
    let center = d * m;
    let radius = (1.0 - d * d).sqrt();
    let u1 = (start - center) / radius;
    let u2 = m.cross(&u1);
    let a_via = angle_in_plane(&center, &u1, &u2, &via);
    let a_end = angle_in_plane(&center, &u1, &u2, &end);
    let (dir, sweep) = if a_via < a_end { (1.0, a_end) } else { (-1.0, 2.0 * PI - a_end) };
    let rate = 6.0 * sweep;
    let probe = Arc { m, center, radius, u1, u2, dir, sweep, v: 0.0, v_hat: 0.0, mid_lift: UnitQuaternion::one() };
    let f = probe.frame(0.0);
    let omega = dir * rate * m;
    let v = omega.dot(&f.col(2));
    let v_hat = omega.dot(&f.col(0));
    Arc { v, v_hat, ..probe }
}

/// One member `β_α` of the family together with `γ_α`.
#[derive(Debug, Clone)]
pub struct HexFamily {
    pub params: HexArcParams,
    arcs: [Arc; 6],
}

impl HexFamily {
    pub fn new(alpha: f64) -> Self {
        let params = HexArcParams::new(alpha);
        let mut arcs: [Arc; 6] = std::array::from_fn(|j| build_arc(alpha, params.alpha_tilde, j));
        arcs[0].mid_lift = expq(ImQuaternion::J, -(alpha - params.alpha_tilde) / 2.0);
        for j in 1..6 {
            let prev = arcs[j - 1];
            let half = |a: &Arc| exp_im(a.omega().scale(1.0 / 12.0));
            arcs[j].mid_lift = prev.mid_lift * half(&prev) * half(&arcs[j]);
        }
        Self { params, arcs }
    }

    /// Arc index and local time relative to the arc's midpoint.
    fn locate(&self, t: f64) -> (usize, f64) {
        let u = t - (t + 1.0 / 12.0).floor();
        let j = (((u + 1.0 / 12.0) * 6.0).floor() as usize).min(5);
        (j, u - j as f64 / 6.0)
    }

    /// `B̃_α(t)`, 1-periodic in `t`.
    pub fn beta_lift(&self, t: f64) -> UnitQuaternion {
        let (j, dt) = self.locate(t);
        let arc = &self.arcs[j];
        arc.mid_lift * exp_im(arc.omega().scale(dt))
    }

    /// `Γ̃_α(t) = B̃_α(t)𝐡⁻¹`.
    pub fn gamma_lift(&self, t: f64) -> UnitQuaternion {
        self.beta_lift(t) * UnitQuaternion::h().inv()
    }

    /// Frame of `β_α` computed from the circle geometry, independently of the lift.
    pub fn beta_frame_geometric(&self, t: f64) -> Rotation {
        let (j, dt) = self.locate(t);
        self.arcs[j].frame(dt + 1.0 / 12.0)
    }

    /// `(v, v̂)` of `β_α` on the arc containing `t`.
    pub fn beta_speeds(&self, t: f64) -> (f64, f64) {
        let a = &self.arcs[self.locate(t).0];
        (a.v, a.v_hat)
    }

    /// `(v, v̂)` of `γ_α`: conjugation by `𝐡` sends `(v̂𝐢 + v𝐤)` to `((v + v̂)𝐢 + (v − v̂)𝐤)/√2`.
    pub fn gamma_speeds(&self, t: f64) -> (f64, f64) {
        let (v, vh) = self.beta_speeds(t);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ((v - vh) * r, (v + vh) * r)
    }

    /// Axis of the circle carrying arc `j`.
    pub fn arc_axis(&self, j: usize) -> Vector3<f64> {
        self.arcs[j].m
    }

    fn sampled(&self, cells: usize, shift: f64, lift: impl Fn(f64) -> UnitQuaternion, speeds: impl Fn(f64) -> (f64, f64)) -> FramedCurve {
        let mut grid = uniform_grid(cells);
        for j in 0..6 {
            let joint = ((2 * j + 1) as f64 / 12.0 - shift).rem_euclid(1.0);
            grid.push(joint);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        *grid.last_mut().unwrap() = 1.0;
        let base = lift(shift).inv();
        let lifts: Vec<UnitQuaternion> = grid.iter().map(|&t| base * lift(t + shift)).collect();
        let mut v = Vec::with_capacity(grid.len());
        let mut vh = Vec::with_capacity(grid.len());
        for w in grid.windows(2) {
            let (a, b) = speeds(0.5 * (w[0] + w[1]) + shift);
            v.push(a);
            vh.push(b);
        }
        v.push(*v.last().unwrap());
        vh.push(*vh.last().unwrap());
        FramedCurve { grid, lifts, v, v_hat: vh }
    }

    /// `β_α` with its own lift `B̃_α` (not based).
    pub fn beta_curve(&self, cells: usize) -> FramedCurve {
        let c = self.sampled(cells, 0.0, |t| self.beta_lift(t), |t| self.beta_speeds(t));
        c.left_mul(self.beta_lift(0.0))
    }

    /// `γ_α` with lift `Γ̃_α` (not based).
    pub fn gamma_curve(&self, cells: usize) -> FramedCurve {
        let c = self.sampled(cells, 0.0, |t| self.gamma_lift(t), |t| self.gamma_speeds(t));
        c.left_mul(self.gamma_lift(0.0))
    }

    /// `t ↦ Γ_α(s)⁻¹γ_α(t + s)`, based at `𝟏`.
    pub fn shifted_gamma(&self, s: f64, cells: usize) -> FramedCurve {
        self.sampled(cells, s, |t| self.gamma_lift(t), |t| self.gamma_speeds(t))
    }
}

pub fn beta(alpha: f64) -> FramedCurve {
    HexFamily::new(alpha).beta_curve(DEFAULT_HEX_CELLS)
}

pub fn gamma_alpha(alpha: f64) -> FramedCurve {
    HexFamily::new(alpha).gamma_curve(DEFAULT_HEX_CELLS)
}

/// `g₀(p)(t) = Γ_α(θ/6π)⁻¹γ_α(t + θ/6π)`.
pub fn g0(p: &SpherePoint) -> FramedCurve {
    let (theta, alpha) = p.angles();
    HexFamily::new(alpha).shifted_gamma(theta / (6.0 * PI), DEFAULT_HEX_CELLS)
}

/// Minimum of `dist_to_circle(B̃_α(t₀)⁻¹B̃_α(t₁), 𝐤)` over an `n × n` grid with `|t₀ − t₁| > band`.
pub fn no_common_tangent_min(alpha: f64, n: usize, band: f64) -> f64 {
    let fam = HexFamily::new(alpha);
    let lifts: Vec<UnitQuaternion> = (0..n).map(|i| fam.beta_lift(i as f64 / n as f64)).collect();
    (0..n)
        .into_par_iter()
        .map(|a| {
            let ta = a as f64 / n as f64;
            let inv = lifts[a].inv();
            (0..n)
                .filter(|&b| {
                    let d = (ta - b as f64 / n as f64).abs();
                    d.min(1.0 - d) > band
                })
                .map(|b| dist_to_circle(&(inv * lifts[b]), &ImQuaternion::K))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}
