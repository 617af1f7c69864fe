//! Forcing a closed curve to agree with `ν₂` near its end: the maps `g_s`.
//!
//! A curve `g ∈ ℒ_𝟏` is first patched into `ĝ`, equal to `g` on `[0, 1 − ε₁]` and to
//! `ν₂` on `[1 − ε₂, 1]`, with an osculating ellipse arc in between. For `s > ε₂` the
//! projective map `A(c)` lengthens that tail: it fixes the frame `I` and acts on `ν₁`'s
//! circle by `1/τ ↦ 1/τ + c/√2` where `τ = tan(πu)`, so `c = √2(cot 2πε₂ − cot 2πs)`
//! places `ĝ(1 − ε₂)` at `ν₂(1 − s)`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use rayon::prelude::*;

use super::ellipse::{osculating_arc_into, unipotent, ELLIPSE_CELLS};
use super::{g0, nu_window, SpherePoint};
use crate::bruhat::is_stably_convex_quat;
use crate::curves::{concat_weighted, nu1_lift, reparametrize, transform_from, FramedCurve};
use crate::error::{Error, Result};
use crate::rotations::{project, UnitQuaternion};

/// Patch windows `ε₁` (uniform convexity) and `ε₂ = ε₁/8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFixer {
    pub eps1: f64,
    pub eps2: f64,
}

const JOINT_TOL: f64 = 1e-8;

fn nu2_lift(t: f64) -> UnitQuaternion {
    nu1_lift(2.0 * t)
}

fn stably(z: &UnitQuaternion) -> bool {
    is_stably_convex_quat(z).unwrap_or(false)
}

/// The end of `curve` is convex on `[1 − 2e, 1]` and the patch target is stably convex.
fn window_ok(curve: &FramedCurve, e: f64) -> bool {
    let end = curve.endpoint_lift();
    (1..=8).all(|j| stably(&(curve.lift_at(1.0 - 2.0 * e * j as f64 / 8.0).inv() * end)))
        && stably(&(curve.lift_at(1.0 - e).inv() * nu2_lift(1.0 - e / 8.0)))
}

fn sample_points() -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..32)
        .map(|i| {
            let z = -1.0 + (2.0 * i as f64 + 1.0) / 32.0;
            SpherePoint::from_angles(golden * i as f64, (-z).acos())
        })
        .collect()
}

impl TailFixer {
    /// Largest `ε₁ = 0.1·0.85ⁿ` whose doubled window works for every sample.
    pub fn calibrate(samples: &[FramedCurve]) -> Result<Self> {
        for n in 0..60 {
            let e = 0.1 * 0.85f64.powi(n);
            if samples.par_iter().all(|c| window_ok(c, e) && window_ok(c, 2.0 * e)) {
                return Ok(Self { eps1: e, eps2: e / 8.0 });
            }
        }
        Err(Error::ConvexityWindowNotFound)
    }

    /// Calibration over `g₀` on a 32-point Fibonacci grid of `S²` and both poles.
    pub fn for_g0() -> Result<Self> {
        static CACHE: OnceLock<Result<TailFixer>> = OnceLock::new();
        CACHE
            .get_or_init(|| {
                let mut pts = sample_points();
                pts.push(SpherePoint::south());
                pts.push(SpherePoint::north());
                let curves: Vec<FramedCurve> = pts.par_iter().map(g0).collect();
                Self::calibrate(&curves)
            })
            .clone()
    }

    /// `g` with its end `[1 − e₁, 1]` replaced by an ellipse arc and `ν₂|[1 − e₂, 1]`.
    ///
    /// The arc osculates `ν₂` at `1 − e₂` and matches the speeds of both neighbours.
    pub fn patched(&self, curve: &FramedCurve, e1: f64, e2: f64) -> Result<FramedCurve> {
        let one = UnitQuaternion::one();
        if curve.start_lift().chordal(&one) > JOINT_TOL || curve.endpoint_lift().chordal(&one) > JOINT_TOL {
            return Err(Error::InvalidInput("tail fixing needs a based curve in ℒ_𝟏".into()));
        }
        let width = e1 - e2;
        let zc = curve.lift_at(1.0 - e1);
        let zd = nu2_lift(1.0 - e2);
        let rel = zc.inv() * zd;
        if !stably(&rel) {
            return Err(Error::ConvexityWindowNotFound);
        }
        let speed_in = curve.v[curve.cell_of(1.0 - e1)] * width;
        let speed_out = 2.0 * SQRT_2 * PI * width;
        let arc = osculating_arc_into(&project(&rel), speed_in, speed_out, ELLIPSE_CELLS)?;
        if arc.endpoint_lift().chordal(&rel) > JOINT_TOL {
            return Err(Error::ConvexityWindowNotFound);
        }
        let body = curve.restrict(0.0, 1.0 - e1);
        let closing = nu_window(2.0, 1.0 - e2, 1.0);
        Ok(concat_weighted(&[(&body, 1.0 - e1), (&arc, width), (&closing, e2)]))
    }

    /// `G_s(g)`: equal to `ν₂` exactly on `[1 − s, 1]` and off `𝒞_𝐤̂` on `(0, 1 − s)`.
    ///
    /// Up to `ε₂` the patch windows shrink with `s`, so `s → 0` recovers `g`.
    pub fn apply(&self, curve: &FramedCurve, s: f64) -> Result<FramedCurve> {
        if !(0.0..0.5).contains(&s) {
            return Err(if s >= 0.5 { Error::WindowTooSmall } else { Error::InvalidInput(format!("negative tail {s}")) });
        }
        if s == 0.0 {
            return Ok(curve.clone());
        }
        if s <= self.eps2 {
            return self.patched(curve, 8.0 * s, s);
        }
        let patched = self.patched(curve, self.eps1, self.eps2)?;
        let c = SQRT_2 * (1.0 / (2.0 * PI * self.eps2).tan() - 1.0 / (2.0 * PI * s).tan());
        if !c.is_finite() {
            return Err(Error::WindowTooSmall);
        }
        let moved = transform_from(&unipotent(c), &patched, UnitQuaternion::one())?;
        if moved.lift_at(1.0 - self.eps2).chordal(&nu2_lift(1.0 - s)) > 1e-7 {
            return Err(Error::WindowTooSmall);
        }
        // A(c) runs along ν₂'s circle at a different pace; undo that pace so the circle stays ν₂.
        reparametrize(&moved, &|y| unpace(y, c).clamp(0.0, 1.0))
    }
}

/// Inverse of the time change `cot 2πψ = cot 2πt + c/√2` that `A(c)` induces on `ν₂`.
fn unpace(u: f64, c: f64) -> f64 {
    let k = (2.0 * u).floor();
    let r = u - 0.5 * k;
    if r <= 0.0 {
        return u;
    }
    let x = 1.0 / (2.0 * PI * r).tan() - c / SQRT_2;
    0.5 * k + 1f64.atan2(x) / (2.0 * PI)
}

/// `g_s(p)` for `s ∈ [0, ½)`.
pub fn gs(s: f64, p: &SpherePoint) -> Result<FramedCurve> {
    TailFixer::for_g0()?.apply(&g0(p), s)
}
