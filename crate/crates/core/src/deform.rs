//! Curve surgeries: adding loops `γ^[t₀#n]`, spreading loops `γ^[♭(2n)]` and grafting
//! `γ^[(t₀,t₁)#s]`.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::bruhat::{graft_lift0, graft_lift1, graft_normalizer, GraftConstants};
use crate::curves::{act, concat_weighted, transform_from, uniform_grid, FramedCurve};
use crate::error::{Error, Result};
use crate::families::{fit_ellipse, nu, SpherePoint};
use crate::rotations::{exp_im, project, ImQuaternion, UnitQuaternion};

/// Insertion of `n` loops at `t0` with half-width `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSpec {
    pub t0: f64,
    pub n: u32,
    pub eps: f64,
}

impl LoopSpec {
    /// Default width `min(1/(8n), t₀/4, (1 − t₀)/4)`, ignoring the bound at an endpoint.
    pub fn new(t0: f64, n: u32) -> Self {
        let mut eps = 1.0 / (8.0 * n.max(1) as f64);
        if t0 > 0.0 {
            eps = eps.min(t0 / 4.0);
        }
        if t0 < 1.0 {
            eps = eps.min((1.0 - t0) / 4.0);
        }
        Self { t0, n, eps }
    }

    pub fn with_eps(t0: f64, n: u32, eps: f64) -> Self {
        Self { t0, n, eps }
    }

    /// Parameter interval modified by the insertion.
    pub fn window(&self) -> (f64, f64) {
        if self.t0 == 0.0 {
            (0.0, 2.0 * self.eps)
        } else if self.t0 == 1.0 {
            (1.0 - 2.0 * self.eps, 1.0)
        } else {
            (self.t0 - 2.0 * self.eps, self.t0 + 2.0 * self.eps)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t0) || !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidInput(format!("bad loop spec {self:?}")));
        }
        let (a, b) = self.window();
        if a < 0.0 || b > 1.0 {
            return Err(Error::WindowOverflow);
        }
        Ok(())
    }
}

fn push_part(parts: &mut Vec<(FramedCurve, f64)>, curve: FramedCurve, weight: f64) {
    if weight > 0.0 {
        parts.push((curve, weight));
    }
}

fn join(parts: &[(FramedCurve, f64)]) -> FramedCurve {
    let refs: Vec<(&FramedCurve, f64)> = parts.iter().map(|(c, w)| (c, *w)).collect();
    concat_weighted(&refs)
}

/// `γ^[t₀#n]`: `ν_n` left-translated by `F̃_γ(t₀)` spliced in at `t₀`.
pub fn add_loops(curve: &FramedCurve, spec: &LoopSpec) -> Result<FramedCurve> {
    spec.validate()?;
    if spec.n == 0 {
        return Ok(curve.clone());
    }
    let (t0, e) = (spec.t0, spec.eps);
    let lp = nu(spec.n as f64)?.left_mul(curve.lift_at(t0));
    let mut parts = Vec::new();
    if t0 == 0.0 {
        parts.push((lp, e));
        parts.push((curve.restrict(0.0, 2.0 * e), e));
        push_part(&mut parts, curve.restrict(2.0 * e, 1.0), 1.0 - 2.0 * e);
    } else if t0 == 1.0 {
        push_part(&mut parts, curve.restrict(0.0, 1.0 - 2.0 * e), 1.0 - 2.0 * e);
        parts.push((curve.restrict(1.0 - 2.0 * e, 1.0), e));
        parts.push((lp, e));
    } else {
        push_part(&mut parts, curve.restrict(0.0, t0 - 2.0 * e), t0 - 2.0 * e);
        parts.push((curve.restrict(t0 - 2.0 * e, t0), e));
        parts.push((lp, 2.0 * e));
        parts.push((curve.restrict(t0, t0 + 2.0 * e), e));
        push_part(&mut parts, curve.restrict(t0 + 2.0 * e, 1.0), 1.0 - t0 - 2.0 * e);
    }
    Ok(join(&parts))
}

/// Several insertions with pairwise disjoint windows, applied in order.
pub fn add_loops_many(curve: &FramedCurve, specs: &[LoopSpec]) -> Result<FramedCurve> {
    for (i, a) in specs.iter().enumerate() {
        a.validate()?;
        let (a0, a1) = a.window();
        for b in &specs[i + 1..] {
            let (b0, b1) = b.window();
            if a0 < b1 && b0 < a1 {
                return Err(Error::WindowOverflow);
            }
        }
    }
    specs.iter().try_fold(curve.clone(), |c, s| add_loops(&c, s))
}

/// Loop width used by [`spread_loops`].
pub fn spread_eps(n: usize) -> f64 {
    1.0 / (8.0 * n as f64)
}

/// `γ^[#(2n)]`: one loop at each end and two at every interior `j/n`, all of width [`spread_eps`].
pub fn sharp_loops(curve: &FramedCurve, n: usize) -> Result<FramedCurve> {
    if n == 0 {
        return Err(Error::InvalidInput("loop spreading needs n > 0".into()));
    }
    let e = spread_eps(n);
    let specs: Vec<LoopSpec> = (0..=n)
        .map(|j| LoopSpec::with_eps(j as f64 / n as f64, if j == 0 || j == n { 1 } else { 2 }, e))
        .collect();
    add_loops_many(curve, &specs)
}

/// `γ^[♭(2n)]`: the loops of `γ^[#(2n)]` joined by ellipse bridges.
///
/// Bridge `j` runs over `[t_{j−1} + 7ε/8, t_j − 7ε/8]`, matches the frames of `γ^[#(2n)]`
/// at both ends and passes through `γ((2j − 1)/2n)`.
pub fn spread_loops(curve: &FramedCurve, n: usize) -> Result<FramedCurve> {
    let sharp = sharp_loops(curve, n)?;
    let e = spread_eps(n);
    let nf = n as f64;
    let mut parts = Vec::with_capacity(2 * n + 1);
    let mut last = 0.0;
    for j in 1..=n {
        let a = (j - 1) as f64 / nf + 7.0 * e / 8.0;
        let b = j as f64 / nf - 7.0 * e / 8.0;
        let mid = SpherePoint::new(sharp.point_at((2 * j - 1) as f64 / (2.0 * nf))).map_err(|_| Error::BridgeFailed(j))?;
        let fit = fit_ellipse(sharp.lift_at(a), &mid, 0.5, sharp.lift_at(b)).map_err(|_| Error::BridgeFailed(j))?;
        parts.push((sharp.restrict(last, a), a - last));
        parts.push((fit.curve, b - a));
        last = b;
    }
    parts.push((sharp.restrict(last, 1.0), 1.0 - last));
    Ok(join(&parts))
}

/// Smallest `n ≤ n_max` whose spread curve exists and is locally convex.
pub fn spread_until_convex(curve: &FramedCurve, n_max: usize) -> Result<(usize, FramedCurve)> {
    let mut last = Error::BridgeFailed(0);
    for n in 1..=n_max {
        match spread_loops(curve, n) {
            Ok(c) => match c.v_hat.iter().position(|&x| !(x > 0.0)) {
                Some(i) if i + 1 < c.len() => last = Error::NotLocallyConvex { t: c.grid[i] },
                _ => return Ok((n, c)),
            },
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Grafting `s` turns between the tangency times `t0 < t1` of a `(13);ℓ` arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraftSpec {
    pub t0: f64,
    pub t1: f64,
    pub s: f64,
    pub ell: u8,
    pub eps: f64,
}

impl GraftSpec {
    /// Default width `ε = (t₁ − t₀)/(8·max(s, 1))`.
    pub fn new(t0: f64, t1: f64, s: f64, ell: u8) -> Self {
        Self { t0, t1, s, ell, eps: (t1 - t0) / (8.0 * s.max(1.0)) }
    }
}

/// Normalized endpoint angles `(θ₀, φ₀, θ₁, φ₁)` of a graft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraftAngles {
    pub theta0: f64,
    pub phi0: f64,
    pub theta1: f64,
    pub phi1: f64,
}

impl From<GraftConstants> for GraftAngles {
    fn from(c: GraftConstants) -> Self {
        Self { theta0: c.theta0, phi0: c.phi0, theta1: c.theta1, phi1: c.phi1 }
    }
}

/// The projective normalization `M = Q₀,ℓ·U·Q₀⁻¹` of the arc `[t0, t1]`.
pub fn graft_matrix(curve: &FramedCurve, spec: &GraftSpec) -> Result<Matrix3<f64>> {
    let consts = GraftConstants::for_cell(spec.ell)?;
    let q0 = curve.frame_at(spec.t0);
    let q1 = curve.frame_at(spec.t1);
    let u = graft_normalizer(&q0, &q1, spec.ell).map_err(|e| match e {
        Error::WrongCell { found, .. } => Error::NotGraftable(format!("arc lies in {found}")),
        other => other,
    })?;
    Ok(consts.q0().0 * u * q0.0.transpose())
}

/// `A(s) = M⁻¹·Π(e^{sπ𝐤})·M`, the motion applied to the middle of a graft.
pub fn graft_motion(m: &Matrix3<f64>, s: f64) -> Result<Matrix3<f64>> {
    let m_inv = m.try_inverse().ok_or(Error::Degenerate)?;
    let rot = project(&exp_im(ImQuaternion::K.scale(PI * s)));
    Ok(m_inv * rot.0 * m)
}

/// `γ^[(t₀,t₁)#s]` for `ℓ ∈ {1, 4, 7}`.
pub fn graft(curve: &FramedCurve, spec: &GraftSpec) -> Result<FramedCurve> {
    let m = graft_matrix(curve, spec)?;
    let consts = GraftConstants::for_cell(spec.ell)?;
    graft_general(curve, spec.t0, spec.t1, spec.s, spec.eps, &m, consts.into())
}

fn spin(lift: UnitQuaternion, turn: f64, reverse: bool) -> FramedCurve {
    let cells = 64 * (turn.abs().ceil().max(1.0) as usize);
    let grid = uniform_grid(cells);
    let lifts = grid
        .iter()
        .map(|&u| exp_im(ImQuaternion::K.scale(PI * turn * if reverse { 1.0 - u } else { u })) * lift)
        .collect();
    FramedCurve::from_lifts(grid, lifts)
}

/// Grafting with a caller-supplied normalization: `π(M)` must carry the frames at `t0`
/// and `t1` to `e^{θ₀𝐤/2}e^{φ₀𝐣/2}` and `e^{θ₁𝐤/2}e^{φ₁𝐣/2}e^{π𝐢/2}`.
pub fn graft_general(
    curve: &FramedCurve,
    t0: f64,
    t1: f64,
    s: f64,
    eps: f64,
    m: &Matrix3<f64>,
    angles: GraftAngles,
) -> Result<FramedCurve> {
    if !(0.0 < t0 && t0 < t1 && t1 < 1.0) || !(s >= 0.0) || !s.is_finite() || !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("bad graft window t0 = {t0}, t1 = {t1}, s = {s}, ε = {eps}")));
    }
    let w = s * eps;
    if 4.0 * w > t1 - t0 {
        return Err(Error::WindowOverflow);
    }
    let target0 = graft_lift0(angles.theta0, angles.phi0);
    let target1 = graft_lift1(angles.theta1, angles.phi1);
    let tol = 1e-7;
    let frame_gap = |t: f64, target: &UnitQuaternion| -> Result<f64> {
        let image = act(m, &curve.frame_at(t))?;
        Ok((image.0 - project(target).0).norm())
    };
    if frame_gap(t0, &target0)? > tol || frame_gap(t1, &target1)? > tol {
        return Err(Error::NotGraftable("normalization does not reach the graft frames".into()));
    }
    if s == 0.0 {
        return Ok(curve.clone());
    }
    let middle = curve.restrict(t0, t1);
    // The end lift may be −target₁, which is the same frame named by θ₁ + 2π.
    let normal = transform_from(m, &middle, target0)?;
    let len = t1 - t0;
    let r = |t: f64| (t - t0) / len;
    let lift_start = normal.start_lift();
    let lift_end = normal.endpoint_lift();
    let turn = exp_im(ImQuaternion::K.scale(PI * s));
    let mut parts = Vec::new();
    parts.push((spin(lift_start, s, false), w));
    parts.push((normal.restrict(0.0, r(t0 + 2.0 * w)).left_mul(turn), w));
    push_part(&mut parts, normal.restrict(r(t0 + 2.0 * w), r(t1 - 2.0 * w)).left_mul(turn), len - 4.0 * w);
    parts.push((normal.restrict(r(t1 - 2.0 * w), 1.0).left_mul(turn), w));
    parts.push((spin(lift_end, s, true), w));
    let grafted = join(&parts);
    let m_inv = m.try_inverse().ok_or(Error::Degenerate)?;
    let back = transform_from(&m_inv, &grafted, curve.lift_at(t0))?;
    if back.endpoint_lift().chordal(&curve.lift_at(t1)) > tol {
        return Err(Error::NotGraftable("grafted arc does not close up with the curve".into()));
    }
    Ok(join(&[(curve.restrict(0.0, t0), t0), (back, len), (curve.restrict(t1, 1.0), 1.0 - t1)]))
}
