//! Ellipse arcs through prescribed frames, and convex connectors built from them.
//!
//! Every arc is `t ↦ π(M)∘ν₁(t/2)` on `[0, 1]`. Normalizing the endpoint frames to
//! `(I, P_{(13);2})` leaves the diagonal scalings `B_c = diag(c, c⁻², c)` and
//! `D_a = diag(a⁻¹, 1, a)`; both preserve the two frames, `B_c` moves between the
//! conics of the pencil and `D_a` slides points along `ν₁`'s circle by
//! `tan(πu) ↦ a·tan(πu)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use super::SpherePoint;
use crate::bruhat::{is_stably_convex_quat, normal_form, CellId, DEFAULT_TOL};
use crate::curves::{eval_ellipse, uniform_grid, EllipseArc, FramedCurve};
use crate::error::{Error, Result};
use crate::rotations::{lift_path, project, Rotation, UnitQuaternion};

/// Cells used when an ellipse arc is sampled into a curve.
pub(crate) const ELLIPSE_CELLS: usize = 512;

/// A fitted arc with the worst of its three interpolation residuals.
#[derive(Debug, Clone)]
pub struct EllipseFit {
    pub arc: EllipseArc,
    pub curve: FramedCurve,
    pub residual: f64,
}

fn b_c(c: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(c, 1.0 / (c * c), c))
}

fn d_a(a: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0 / a, 1.0, a))
}

/// Upper-triangular `U₀` of the normal form of `Y ∈ Bru_{(13);2}`, scaled to determinant 1.
fn open_cell_normalizer(y: &Rotation) -> Result<Matrix3<f64>> {
    let nf = normal_form(y, DEFAULT_TOL).map_err(|_| Error::NotStablyConvex)?;
    if CellId::new(nf.p) != CellId::named("(13);2") {
        return Err(Error::NotStablyConvex);
    }
    Ok(nf.u0 / nf.u0.determinant().cbrt())
}

/// The ellipse arc from `I` to `Q` that osculates `𝒞_𝐤̂` at `e₁`, parametrized by `ν₁(t/2)`.
pub fn osculating_ellipse(q: &Rotation) -> Result<EllipseArc> {
    let l = osculating_base(q)?;
    EllipseArc::new(l, 0.0, 0.5)
}

/// `L·B_c` with `c = √L₂₂`, the osculating member of the pencil through `I` and `Q`.
fn osculating_base(q: &Rotation) -> Result<Matrix3<f64>> {
    let l = open_cell_normalizer(q)?.try_inverse().ok_or(Error::Degenerate)?;
    let m = l * b_c(l[(1, 1)].sqrt());
    Ok(m / m.determinant().cbrt())
}

/// Speed `|γ′(t)|` of `π(M)∘ν₁(a + bt)`.
pub fn ellipse_speed(arc: &EllipseArc, t: f64) -> f64 {
    let u = arc.a + arc.b * t;
    let (s, c) = (2.0 * PI * u).sin_cos();
    let x = Vector3::new(0.5 * (1.0 + c), s / SQRT_2, 0.5 * (1.0 - c));
    let dx = PI * arc.b * Vector3::new(-s, SQRT_2 * c, s);
    let mx = arc.m * x;
    let n = mx.norm();
    let p = mx / n;
    let mdx = arc.m * dx;
    (mdx - p * p.dot(&mdx)).norm() / n
}

/// The osculating ellipse arc from `I` to `Q` with prescribed end speeds.
///
/// The arc is `π(L·B_c·D_a·A(−√2 cot πb))∘ν₁(bt)`: `A(·)` maps `ν₁(b)` to `ν₁(½)` along the
/// circle. In the normalized picture the start speed scales as `ab` and the end speed as
/// `b/(a sin²πb)`, so the product fixes `b` and the ratio fixes `a`. The product is bounded
/// below as `b → 0`; when the requested speeds fall short of that bound `b` is held at
/// [`MIN_SHARE`] and only the start speed is matched.
pub fn osculating_ellipse_with_speeds(q: &Rotation, speed0: f64, speed1: f64) -> Result<EllipseArc> {
    if !(speed0 > 0.0 && speed1 > 0.0) {
        return Err(Error::InvalidInput(format!("end speeds must be positive, got {speed0}, {speed1}")));
    }
    let base = osculating_base(q)?;
    let canonical = EllipseArc::new(base, 0.0, 0.5)?;
    let k0 = 2.0 * ellipse_speed(&canonical, 0.0);
    let k1 = 2.0 * ellipse_speed(&canonical, 1.0);
    let g = |b: f64| b / (PI * b).sin();
    let target = (speed0 * speed1 / (k0 * k1)).sqrt();
    if !target.is_finite() {
        return Err(Error::NoConvergence(format!("end speeds {speed0}, {speed1} overflow")));
    }
    let (mut lo, mut hi) = (MIN_SHARE, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = if target <= g(MIN_SHARE) { MIN_SHARE } else { 0.5 * (lo + hi) };
    let a = speed0 / (k0 * b);
    let shear = -SQRT_2 / (PI * b).tan();
    let m = base * d_a(a) * unipotent(shear);
    EllipseArc::new(m / m.determinant().cbrt(), 0.0, b)
}

/// Smallest fraction of `ν₁` an arc with prescribed speeds may use.
pub const MIN_SHARE: f64 = 1e-2;

/// `A(c) = exp(c(E₁₂ + E₂₃))`.
pub(crate) fn unipotent(c: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, c, 0.5 * c * c, 0.0, 1.0, c, 0.0, 0.0, 1.0)
}

/// The unique ellipse arc with `F̃(0) = z0`, `γ(t) = v_t` and `F̃(1) = z1`.
pub fn fit_ellipse(z0: UnitQuaternion, v_t: &SpherePoint, t: f64, z1: UnitQuaternion) -> Result<EllipseFit> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidInput(format!("interpolation time must lie in (0, 1), got {t}")));
    }
    let q0 = project(&z0);
    let y = q0.transpose() * project(&z1);
    let u0 = open_cell_normalizer(&y)?;
    let a = u0 * q0.0.transpose();
    let w = (a * v_t.0).normalize();
    if !(w.x > 0.0 && w.y > 0.0 && w.z > 0.0) {
        return Err(Error::PointOutsideRegion);
    }
    let c = (w.y * w.y / (2.0 * w.x * w.z)).powf(1.0 / 6.0);
    let tan_target = (w.y / (c * c)) / (SQRT_2 * c * w.x);
    let scale = tan_target / (PI * t / 2.0).tan();
    let a_inv = a.try_inverse().ok_or(Error::Degenerate)?;
    let m = a_inv * b_c(1.0 / c) * d_a(scale);
    let arc = EllipseArc::new(m / m.determinant().cbrt(), 0.0, 0.5)?;
    let curve = arc.to_curve(ELLIPSE_CELLS, z0)?;
    let end = curve.endpoint_lift();
    if end.chordal(&-z1) < end.chordal(&z1) {
        return Err(Error::NotStablyConvex);
    }
    let residual = curve
        .start_lift()
        .chordal(&z0)
        .max((eval_ellipse(&arc, t).0 - v_t.0).norm())
        .max(end.chordal(&z1));
    if !(residual < 1e-6) {
        return Err(Error::NoConvergence(format!("ellipse fit residual {residual:.3e}")));
    }
    Ok(EllipseFit { arc, curve, residual })
}

/// Convex arc from `z_a` to `z_b`: the osculating ellipse of `Π(z_a⁻¹z_b)`, left-translated by `z_a`.
pub fn convex_connect(z_a: UnitQuaternion, z_b: UnitQuaternion) -> Result<FramedCurve> {
    let rel = z_a.inv() * z_b;
    if !is_stably_convex_quat(&rel).unwrap_or(false) {
        return Err(Error::NotStablyConvex);
    }
    let arc = osculating_ellipse(&project(&rel))?;
    let curve = arc.to_curve(ELLIPSE_CELLS, UnitQuaternion::one())?.left_mul(z_a);
    if curve.endpoint_lift().chordal(&z_b) > 1e-8 {
        return Err(Error::NotStablyConvex);
    }
    Ok(curve)
}

/// Based arc from `I` to `Y` osculating `𝒞_𝐤̂` at its end, with the given end speeds.
///
/// Obtained from the start-osculating arc of `JY⁻¹J`, `J = diag(1, −1, 1)`, by
/// reversing time and reflecting; both operations preserve local convexity.
pub(crate) fn osculating_arc_into(y: &Rotation, speed0: f64, speed1: f64, cells: usize) -> Result<FramedCurve> {
    let j = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
    let mirrored = Rotation(j * y.0.transpose() * j);
    let arc = osculating_ellipse_with_speeds(&mirrored, speed1, speed0)?;
    let grid = uniform_grid(cells);
    let frames: Vec<Rotation> = grid.iter().map(|&t| Rotation(y.0 * j * eval_ellipse(&arc, 1.0 - t).1 .0 * j)).collect();
    let lifts = lift_path(&frames, UnitQuaternion::one())?;
    Ok(FramedCurve::from_lifts(grid, lifts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruhat::SignedPerm;
    use crate::convexity::is_stably_convex_arc;
    use crate::curves::{nu1_lift, nu1_point};
    use crate::rotations::{exp_im, ImQuaternion};

    fn on_nu1_circle(p: &Vector3<f64>) -> f64 {
        (2.0 * p.x * p.z - p.y * p.y).abs()
    }

    fn speed_at_start(arc: &EllipseArc) -> f64 {
        let h = 1e-7;
        (eval_ellipse(arc, h).0 - eval_ellipse(arc, 0.0).0).norm() / h
    }

    fn curvature_at_start(arc: &EllipseArc) -> f64 {
        let h = 1e-5;
        let p0 = eval_ellipse(arc, 0.0).0;
        let p1 = eval_ellipse(arc, h).0;
        let p2 = eval_ellipse(arc, 2.0 * h).0;
        let d1 = (p1 - p0) / h;
        let d2 = (p2 - 2.0 * p1 + p0) / (h * h);
        p0.dot(&d1.cross(&d2)) / d1.norm().powi(3)
    }

    fn random_open_cell(seed: u64) -> Rotation {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let u0 = Matrix3::new(1.0 + next().abs(), next(), next(), 0.0, 1.0 + next().abs(), next(), 0.0, 0.0, 1.0 + next().abs());
        let u1 = Matrix3::new(1.0 + next().abs(), next(), next(), 0.0, 1.0 + next().abs(), next(), 0.0, 0.0, 1.0 + next().abs());
        let p = SignedPerm::parse("(13);2").unwrap().matrix();
        Rotation::gram_schmidt(&(u0.try_inverse().unwrap() * p * u1)).unwrap()
    }

    #[test]
    fn osculating_at_half_is_the_circle() {
        let q = project(&nu1_lift(0.5));
        let arc = osculating_ellipse(&q).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((eval_ellipse(&arc, t).0 - nu1_point(t / 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn osculating_at_quarter_stays_on_the_circle() {
        let q = project(&nu1_lift(0.25));
        let arc = osculating_ellipse(&q).unwrap();
        for i in 0..=10 {
            assert!(on_nu1_circle(&eval_ellipse(&arc, i as f64 / 10.0).0) < 1e-12);
        }
        assert!(eval_ellipse(&arc, 1.0).1.distance(&q) < 1e-12);
        let speed = SQRT_2 * PI * 0.25;
        let fitted = osculating_ellipse_with_speeds(&q, speed, speed).unwrap();
        assert!((fitted.b - 0.25).abs() < 1e-12);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((eval_ellipse(&fitted, t).0 - nu1_point(t / 4.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn osculating_random_targets() {
        for seed in 0..30 {
            let q = random_open_cell(seed);
            let arc = osculating_ellipse(&q).unwrap();
            let (p, f0) = eval_ellipse(&arc, 0.0);
            assert!(f0.distance(&Rotation::identity()) < 1e-10);
            assert!((p - Vector3::x()).norm() < 1e-12);
            assert!(eval_ellipse(&arc, 1.0).1.distance(&q) < 1e-8);
            assert!((curvature_at_start(&arc) - 1.0).abs() < 1e-3, "seed {seed}");
            let c = arc.to_curve(ELLIPSE_CELLS, UnitQuaternion::one()).unwrap();
            assert!(is_stably_convex_arc(&c, 0.0, 1.0).unwrap());
            let (s0, s1) = (3.0 * ellipse_speed(&arc, 0.0), 2.5 * ellipse_speed(&arc, 1.0));
            let with_speeds = osculating_ellipse_with_speeds(&q, s0, s1).unwrap();
            assert!((speed_at_start(&with_speeds) - s0).abs() < 1e-5 * s0);
            assert!((ellipse_speed(&with_speeds, 1.0) - s1).abs() < 1e-9 * s1);
            assert!(eval_ellipse(&with_speeds, 1.0).1.distance(&q) < 1e-8);
            let k = curvature_at_start(&with_speeds);
            assert!((k - 1.0).abs() < 1e-3, "seed {seed}: {k}");
            let slow = osculating_ellipse_with_speeds(&q, 1e-3, 1e-3).unwrap();
            assert_eq!(slow.b, MIN_SHARE);
            assert!((ellipse_speed(&slow, 0.0) - 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_into_osculates_at_its_end() {
        for seed in 0..10 {
            let y = random_open_cell(100 + seed);
            let c = osculating_arc_into(&y, 40.0, 0.9, ELLIPSE_CELLS).unwrap();
            assert!(c.frame_at(1.0).distance(&y) < 1e-8);
            assert!(c.is_locally_convex());
            assert!(is_stably_convex_quat(&c.endpoint_lift()).unwrap());
            let speed = *c.v.last().unwrap();
            assert!((speed - 0.9).abs() < 2e-2, "seed {seed}: {speed}");
        }
    }

    #[test]
    fn fit_recovers_nu1_arc() {
        let z1 = exp_im(ImQuaternion::K_HAT.scale(3.0 * PI / 4.0));
        let v = SpherePoint(nu1_point(3.0 / 8.0));
        let fit = fit_ellipse(UnitQuaternion::one(), &v, 0.5, z1).unwrap();
        assert!(fit.residual < 1e-10);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let p = eval_ellipse(&fit.arc, t).0;
            assert!(on_nu1_circle(&p) < 1e-10);
            let u = (SQRT_2 * p.y).atan2(p.x - p.z).rem_euclid(2.0 * PI) / (2.0 * PI);
            assert!((-1e-10..=0.75 + 1e-10).contains(&u), "t = {t}, u = {u}");
        }
    }

    #[test]
    fn fit_is_stable_under_perturbation() {
        let z0 = UnitQuaternion::new(1.0, 1e-3, -1e-3, 1e-3);
        let z1 = exp_im(ImQuaternion::K_HAT.scale(3.0 * PI / 4.0)) * UnitQuaternion::new(1.0, -1e-3, 1e-3, 1e-3);
        let v = SpherePoint::new(nu1_point(3.0 / 8.0) + Vector3::new(1e-3, -1e-3, 1e-3)).unwrap();
        let fit = fit_ellipse(z0, &v, 0.5, z1).unwrap();
        assert!(fit.residual < 1e-8);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let p = eval_ellipse(&fit.arc, t).0;
            let d = (p.dot(&Vector3::new(1.0, 0.0, 1.0)) / SQRT_2).acos() - PI / 4.0;
            assert!(d.abs() < 1e-2, "t = {t}: {d}");
        }
    }

    #[test]
    fn fit_errors() {
        let v = SpherePoint(nu1_point(0.2));
        assert_eq!(fit_ellipse(UnitQuaternion::one(), &v, 0.5, UnitQuaternion::one()).unwrap_err(), Error::NotStablyConvex);
        let z1 = nu1_lift(0.75);
        let outside = SpherePoint(Vector3::new(0.0, -1.0, 0.0));
        assert_eq!(fit_ellipse(UnitQuaternion::one(), &outside, 0.5, z1).unwrap_err(), Error::PointOutsideRegion);
        let wrong_lift = fit_ellipse(UnitQuaternion::one(), &SpherePoint(nu1_point(0.375)), 0.5, -z1);
        assert_eq!(wrong_lift.unwrap_err(), Error::NotStablyConvex);
    }

    #[test]
    fn convex_connect_examples() {
        let c = convex_connect(UnitQuaternion::one(), UnitQuaternion::k_hat()).unwrap();
        assert!(c.endpoint_lift().chordal(&UnitQuaternion::k_hat()) < 1e-10);
        assert!(c.is_locally_convex());
        let g = UnitQuaternion::new(0.2, 0.9, -0.3, 0.1);
        let za = UnitQuaternion::new(0.5, 0.1, 0.2, -0.4);
        let zb = za * nu1_lift(0.6);
        let plain = convex_connect(za, zb).unwrap();
        let moved = convex_connect(g * za, g * zb).unwrap();
        for (a, b) in plain.lifts.iter().zip(&moved.lifts) {
            assert!((g * *a).chordal(b) < 1e-9);
        }
        let err = convex_connect(za, -(za * UnitQuaternion::k_hat())).unwrap_err();
        assert_eq!(err, Error::NotStablyConvex);
    }
}
