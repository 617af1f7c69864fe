//! Explicit curves and maps: `ν_s`, latitude circles, the hexagonal family
//! `β_α`/`γ_α`/`g₀`, the tail-fixed maps `g_s`, ellipse arcs and `ĥ`.

mod ellipse;
mod hex;
mod hhat;
mod tail;

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use crate::curves::{concat_weighted, nu1_lift, uniform_grid, FramedCurve};
use crate::error::{Error, Result};
use crate::rotations::{exp_im, ImQuaternion, Rotation, UnitQuaternion};

pub use ellipse::{convex_connect, fit_ellipse, ellipse_speed, osculating_ellipse, osculating_ellipse_with_speeds, EllipseFit};
pub use hex::{beta, g0, gamma_alpha, no_common_tangent_min, HexArcParams, HexFamily, DEFAULT_HEX_CELLS};
pub use hhat::{h_hat, HHat};
pub(crate) use ellipse::ELLIPSE_CELLS;
pub use tail::{gs, TailFixer};

/// A unit vector of `R³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(pub Vector3<f64>);

impl SpherePoint {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::InvalidInput("zero or non-finite vector".into()));
        }
        Ok(Self(v / n))
    }

    /// `p = (cos θ sin α, sin θ sin α, −cos α)`; `α = 0` is the south pole `𝐬`.
    pub fn from_angles(theta: f64, alpha: f64) -> Self {
        Self(Vector3::new(theta.cos() * alpha.sin(), theta.sin() * alpha.sin(), -alpha.cos()))
    }

    /// `(θ, α)` with `θ ∈ (−π, π]`, `α ∈ [0, π]`; `θ = 0` at the poles.
    pub fn angles(&self) -> (f64, f64) {
        let alpha = (-self.0.z).clamp(-1.0, 1.0).acos();
        let rho = self.0.x.hypot(self.0.y);
        let theta = if rho < 1e-300 { 0.0 } else { self.0.y.atan2(self.0.x) };
        (theta, alpha)
    }

    pub fn south() -> Self {
        Self(Vector3::new(0.0, 0.0, -1.0))
    }

    pub fn north() -> Self {
        Self(Vector3::new(0.0, 0.0, 1.0))
    }
}

fn cells_for(speed_turns: f64) -> usize {
    64 * (speed_turns.ceil().max(1.0) as usize)
}

/// `ν_s`, with lift `exp(πst𝐤̂)` and `v = v̂ = √2πs`.
pub fn nu(s: f64) -> Result<FramedCurve> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidInput(format!("nu needs s > 0, got {s}")));
    }
    Ok(nu_window(s, 0.0, 1.0))
}

/// `ν_s` restricted to `[a, b]` and rescaled to `[0, 1]`; lifts are exact.
pub(crate) fn nu_window(s: f64, a: f64, b: f64) -> FramedCurve {
    let grid = uniform_grid(cells_for(s * (b - a)));
    let lifts = grid.iter().map(|&t| nu1_lift(s * (a + (b - a) * t))).collect();
    let speed = SQRT_2 * PI * s * (b - a);
    let n = grid.len();
    FramedCurve { grid, lifts, v: vec![speed; n], v_hat: vec![speed; n] }
}

/// The circle of spherical radius `ρ` about `v₃`, starting at `sin ρ·v₁ + cos ρ·v₃`.
pub fn circle(basis: &Rotation, rho: f64) -> Result<FramedCurve> {
    if !(rho > 0.0 && rho < PI / 2.0) {
        return Err(Error::InvalidInput(format!("circle radius must lie in (0, π/2), got {rho}")));
    }
    let (sr, cr) = rho.sin_cos();
    let start = Matrix3::new(sr, 0.0, -cr, 0.0, 1.0, 0.0, cr, 0.0, sr);
    let q0 = UnitQuaternion::from_rotation(&Rotation(basis.0 * start));
    let v = 2.0 * PI * sr;
    let v_hat = 2.0 * PI * cr;
    let omega = crate::curves::frame_velocity(v, v_hat);
    let grid = uniform_grid(256);
    let lifts = grid.iter().map(|&t| q0 * exp_im(omega.scale(t))).collect();
    let n = grid.len();
    Ok(FramedCurve { grid, lifts, v: vec![v; n], v_hat: vec![v_hat; n] })
}

/// The path from `ν_n` (σ = 0) to a reparametrization of `ν_{n+2}` (σ = 1).
///
/// For `n = 2` this is the based `γ_{σπ}`; for larger `n` the curve `ν_{n−2}`
/// runs on `[0, (n−2)/(n+2σ)]` and the `n = 2` path fills the rest, so both
/// ends are constant-speed circles.
pub fn path_nu(n: u32, sigma: f64) -> Result<FramedCurve> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("path_nu needs n > 1, got {n}")));
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidInput(format!("σ must lie in [0, 1], got {sigma}")));
    }
    let loop_part = HexFamily::new(sigma * PI).gamma_curve(DEFAULT_HEX_CELLS).based();
    if n == 2 {
        return Ok(loop_part);
    }
    let head = nu((n - 2) as f64)?;
    Ok(concat_weighted(&[(&head, (n - 2) as f64), (&loop_part, 2.0 + 2.0 * sigma)]))
}

/// `exp(θ·axis)` as a shorthand used throughout the family constructors.
pub(crate) fn expq(axis: ImQuaternion, theta: f64) -> UnitQuaternion {
    exp_im(axis.scale(theta))
}
