//! Next-step function, convex arcs, multiconvexity and the `M_k` coordinates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bruhat::{cell_id, normal_form, open_cell_minors, CellId};
use crate::curves::FramedCurve;
use crate::error::{Error, Result};
use crate::rotations::{project, Rotation, UnitQuaternion};

/// Distance of `Γ(t₀;t₁)` from `I` below which a step is bad.
pub const BAD_STEP_TOL: f64 = 1e-6;
/// Width of the bisection bracket for exit times.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Good,
    Bad,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t0: f64,
    /// Exit time; `None` when the relative frame stays in the open cell up to `t = 1`.
    pub t1: Option<f64>,
    pub boundary_cell: Option<CellId>,
    pub kind: StepKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Multiplicity {
    Multiconvex(usize),
    Complicated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticonvexReport {
    pub multiplicity: Multiplicity,
    pub breakpoints: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoodArcClass {
    A1,
    A2,
    Outside,
}

/// Cells of the set `A₁`.
pub const A1_CELLS: [&str; 7] = ["(13);1", "(13);4", "(13);7", "(123);3", "(123);5", "(132);5", "(132);6"];
/// Cells added to `A₁` to form `A₂`.
pub const A2_EXTRA_CELLS: [&str; 5] = ["(13);2", "(123);6", "(132);0", "(23);2", "(12);4"];

fn check_convex_from(curve: &FramedCurve, t0: f64) -> Result<()> {
    let start = curve.cell_of(t0);
    for i in start..curve.len() - 1 {
        if !(curve.v_hat[i] > 0.0) {
            return Err(Error::NotLocallyConvex { t: curve.grid[i] });
        }
    }
    Ok(())
}

struct Scan<'a> {
    curve: &'a FramedCurve,
    base: UnitQuaternion,
}

impl Scan<'_> {
    fn frame(&self, t: f64) -> Rotation {
        project(&(self.base * self.curve.lift_at(t)))
    }

    fn f(&self, t: f64) -> f64 {
        let (a, b) = open_cell_minors(&self.frame(t));
        a.min(b)
    }

    fn d(&self, t: f64) -> f64 {
        self.frame(t).distance(&Rotation::identity())
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn golden_min(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        const G: f64 = 0.618_033_988_749_894_8;
        let mut c = b - G * (b - a);
        let mut d = a + G * (b - a);
        let (mut fc, mut fd) = (self.d(c), self.d(d));
        while b - a > 1e-13 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - G * (b - a);
                fc = self.d(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + G * (b - a);
                fd = self.d(d);
            }
        }
        let t = 0.5 * (a + b);
        (t, self.d(t))
    }

    fn classify(&self, t: f64) -> Option<CellId> {
        let f = self.frame(t);
        [1e-6, 1e-5, 1e-7, 1e-4, 1e-8]
            .iter()
            .find_map(|&tol| normal_form(&f, tol).ok().map(|nf| CellId::new(nf.p)))
    }
}

/// First time after `t0` at which `Γ(t0; t)` leaves the open cell `Bru_(13);2`.
pub fn next_step(curve: &FramedCurve, t0: f64) -> Result<StepReport> {
    if !(0.0..1.0).contains(&t0) {
        return Err(Error::InvalidInput(format!("t0 = {t0} outside [0, 1)")));
    }
    check_convex_from(curve, t0)?;
    let scan = Scan { curve, base: curve.lift_at(t0).inv() };
    let i0 = curve.cell_of(t0);
    let delta = curve.grid[i0 + 1] - curve.grid[i0];
    let start = (t0 + delta).min(1.0);
    let mut ts = vec![start];
    for i in 0..curve.len() - 1 {
        for t in [curve.grid[i], 0.5 * (curve.grid[i] + curve.grid[i + 1])] {
            if t > start {
                ts.push(t);
            }
        }
    }
    if *ts.last().unwrap() < 1.0 {
        ts.push(1.0);
    }
    let f: Vec<f64> = ts.iter().map(|&t| scan.f(t)).collect();
    let d: Vec<f64> = ts.iter().map(|&t| scan.d(t)).collect();

    let bad = |t: f64| StepReport { t0, t1: Some(t), boundary_cell: Some(CellId::named("e;0")), kind: StepKind::Bad };
    let good = |t: f64| StepReport { t0, t1: Some(t), boundary_cell: scan.classify(t), kind: StepKind::Good };

    if f[0] <= 0.0 {
        let lo = t0 + delta * 1e-6;
        if scan.f(lo) <= 0.0 {
            return Err(Error::NoConvergence(format!("relative frame not in the open cell right after t0 = {t0}")));
        }
        let r = scan.bisect(lo, start);
        return Ok(if scan.d(r) < BAD_STEP_TOL { bad(r) } else { good(r) });
    }
    for i in 1..ts.len() {
        if i + 1 < ts.len() && d[i] <= d[i - 1] && d[i] <= d[i + 1] && d[i] < 0.5 && f[i] > 0.0 {
            let (tm, dm) = scan.golden_min(ts[i - 1], ts[i + 1]);
            if dm < BAD_STEP_TOL {
                return Ok(bad(tm));
            }
        }
        if f[i] <= 0.0 {
            let r = scan.bisect(ts[i - 1], ts[i]);
            let hi = if i + 1 < ts.len() { ts[i + 1] } else { ts[i] };
            let (tm, dm) = scan.golden_min(ts[i - 1], hi);
            if dm < BAD_STEP_TOL {
                return Ok(bad(tm));
            }
            return Ok(good(r));
        }
    }
    let last = *d.last().unwrap();
    if last < BAD_STEP_TOL {
        return Ok(bad(1.0));
    }
    Ok(StepReport { t0, t1: None, boundary_cell: None, kind: StepKind::Unbounded })
}

/// Inverse of the next-step function on the range where it is defined.
pub fn next_step_inverse(curve: &FramedCurve, t1: f64) -> Result<f64> {
    let ns = |t: f64| -> Result<f64> { Ok(next_step(curve, t)?.t1.unwrap_or(f64::INFINITY)) };
    let mut lo = 0.0;
    if ns(lo)? > t1 {
        return Err(Error::InvalidInput(format!("{t1} is below ns(0)")));
    }
    let mut hi = t1;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ns(mid)? <= t1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn is_convex_arc(curve: &FramedCurve, t0: f64, t1: f64) -> Result<bool> {
    let r = next_step(curve, t0)?;
    Ok(match r.t1 {
        None => true,
        Some(t) => t >= t1 - 1e-9,
    })
}

pub fn is_stably_convex_arc(curve: &FramedCurve, t0: f64, t1: f64) -> Result<bool> {
    if !is_convex_arc(curve, t0, t1)? {
        return Ok(false);
    }
    Ok(matches!(cell_id(&curve.relative_frame(t0, t1)), Ok(c) if c == CellId::named("(13);2")))
}

/// Counts the bad steps starting from `t = 0`.
pub fn multiconvex_multiplicity(curve: &FramedCurve) -> Result<MulticonvexReport> {
    let mut breakpoints = vec![0.0];
    let mut t = 0.0;
    for _ in 0..100_000 {
        let r = next_step(curve, t)?;
        match (r.kind, r.t1) {
            (_, Some(t1)) if t1 >= 1.0 - 1e-9 => {
                breakpoints.push(1.0);
                return Ok(MulticonvexReport { multiplicity: Multiplicity::Multiconvex(breakpoints.len() - 1), breakpoints });
            }
            (StepKind::Unbounded, _) => {
                breakpoints.push(1.0);
                return Ok(MulticonvexReport { multiplicity: Multiplicity::Multiconvex(breakpoints.len() - 1), breakpoints });
            }
            (StepKind::Good, Some(t1)) => {
                breakpoints.push(t1);
                return Ok(MulticonvexReport { multiplicity: Multiplicity::Complicated, breakpoints });
            }
            (_, Some(t1)) => {
                breakpoints.push(t1);
                t = t1;
            }
            (_, None) => unreachable!("only unbounded steps lack an exit time"),
        }
    }
    Err(Error::NoConvergence("too many bad steps".into()))
}

/// Crossings of the curve with the great circle `y = 0` on `[0, 1)`, `t = 0` included.
pub fn rho_crossings(curve: &FramedCurve) -> Vec<f64> {
    let y = |t: f64| curve.point_at(t)[1];
    let mut ts = Vec::new();
    for i in 0..curve.len() - 1 {
        let (a, b) = (curve.grid[i], curve.grid[i + 1]);
        for t in [a, 0.5 * (a + b)] {
            if t > 0.0 {
                ts.push(t);
            }
        }
    }
    let mut out = vec![0.0];
    for w in ts.windows(2) {
        let (ya, yb) = (y(w[0]), y(w[1]));
        if ya == 0.0 {
            out.push(w[0]);
            continue;
        }
        if (ya > 0.0) != (yb > 0.0) && yb != 0.0 {
            let (mut lo, mut hi) = (w[0], w[1]);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if (y(mid) > 0.0) == (ya > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

fn wrap_into(theta: f64, lo: f64, hi: f64) -> Option<f64> {
    let mut t = theta;
    while t <= lo {
        t += 2.0 * PI;
    }
    while t > lo + 2.0 * PI {
        t -= 2.0 * PI;
    }
    (t > lo && t < hi).then_some(t)
}

/// The coordinates `(θ₁, η₁, …, θ_{k−1}, η_{k−1})` of a curve in `U_k`.
pub fn mk_coordinates(curve: &FramedCurve, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let curve = &curve.based();
    let ts = rho_crossings(curve);
    if ts.len() != 2 * k {
        return Err(Error::NotInUk(format!("{} crossings of rho, expected {}", ts.len(), 2 * k)));
    }
    let mut thetas = Vec::with_capacity(2 * k);
    let mut etas = Vec::with_capacity(k);
    for (idx, &t) in ts.iter().enumerate() {
        let f = curve.frame_at(t);
        let p = f.col(0);
        let tangent = f.col(1);
        let integer = idx % 2 == 0;
        if tangent[1].abs() < 1e-6 {
            return Err(Error::NotInUk(format!("tangential crossing at t = {t:.6}")));
        }
        if (tangent[1] > 0.0) != integer {
            return Err(Error::NotInUk(format!("crossing at t = {t:.6} has the wrong direction")));
        }
        let raw = p[2].atan2(p[0]);
        let theta = if idx == 0 {
            0.0
        } else if integer {
            let prev: f64 = thetas[idx - 1];
            wrap_into(raw, prev - PI, prev).ok_or_else(|| Error::NotInUk(format!("theta window violated at t = {t:.6}")))?
        } else {
            let prev: f64 = thetas[idx - 1];
            wrap_into(raw, prev, prev + PI).ok_or_else(|| Error::NotInUk(format!("theta window violated at t = {t:.6}")))?
        };
        thetas.push(theta);
        if integer {
            let n = nalgebra::Vector3::new(-theta.sin(), 0.0, theta.cos());
            etas.push(tangent.dot(&n).atan2(tangent[1]));
        }
    }
    for w in ts.windows(2) {
        if (curve.point_at(w[0]) - curve.point_at(w[1])).norm() < 1e-6 {
            return Err(Error::NotInUk(format!("coincident crossings at t = {:.6}", w[0])));
        }
    }
    let mut ends = ts.clone();
    ends.push(1.0);
    for w in ends.windows(2) {
        if !is_convex_arc(curve, w[0], w[1])? {
            return Err(Error::NotInUk(format!("arc [{:.6}, {:.6}] is not convex", w[0], w[1])));
        }
    }
    let mut out = Vec::with_capacity(2 * k - 2);
    for j in 1..k {
        out.push(thetas[2 * j]);
        out.push(etas[j]);
    }
    Ok(out)
}

/// Classifies a relative frame against the cell lists `A₁ ⊂ A₂`.
pub fn good_arc_class(q: &Rotation) -> Result<GoodArcClass> {
    let c = cell_id(q)?;
    if A1_CELLS.iter().any(|n| CellId::named(n) == c) {
        Ok(GoodArcClass::A1)
    } else if A2_EXTRA_CELLS.iter().any(|n| CellId::named(n) == c) {
        Ok(GoodArcClass::A2)
    } else {
        Ok(GoodArcClass::Outside)
    }
}

pub fn good_arc_membership(curve: &FramedCurve, ta: f64, tb: f64) -> Result<GoodArcClass> {
    if !(0.0 <= ta && ta < tb && tb <= 1.0) {
        return Err(Error::InvalidInput(format!("need 0 <= ta < tb <= 1, got {ta}, {tb}")));
    }
    good_arc_class(&curve.relative_frame(ta, tb))
}

/// Samples `(t, μ₁, μ₂)` of `Γ(t0; t)` for plotting.
pub fn mu_trace(curve: &FramedCurve, t0: f64, samples: usize) -> Vec<(f64, f64, f64)> {
    let base = curve.lift_at(t0).inv();
    (0..=samples)
        .map(|i| {
            let t = t0 + (1.0 - t0) * i as f64 / samples as f64;
            let (a, b) = open_cell_minors(&project(&(base * curve.lift_at(t))));
            (t, a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{integrate_frame, LogCoords};
    use std::f64::consts::SQRT_2;

    fn nu(s: f64) -> FramedCurve {
        let v = SQRT_2 * PI * s;
        integrate_frame(&LogCoords::constant(256, v, v).unwrap())
    }

    #[test]
    fn nu1_single_bad_step() {
        let r = next_step(&nu(1.0), 0.0).unwrap();
        assert_eq!(r.kind, StepKind::Bad);
        assert!((r.t1.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nu2_closes_at_half() {
        let r = next_step(&nu(2.0), 0.0).unwrap();
        assert_eq!(r.kind, StepKind::Bad);
        assert!((r.t1.unwrap() - 0.5).abs() < 1e-9, "{r:?}");
        assert_eq!(r.boundary_cell, Some(CellId::named("e;0")));
    }

    #[test]
    fn partial_circle_is_unbounded() {
        let r = next_step(&nu(0.75), 0.0).unwrap();
        assert_eq!(r.kind, StepKind::Unbounded);
    }

    #[test]
    fn convex_arc_examples() {
        let n1 = nu(1.0);
        assert!(is_convex_arc(&n1, 0.0, 1.0).unwrap());
        assert!(!is_stably_convex_arc(&n1, 0.0, 1.0).unwrap());
        assert!(is_convex_arc(&n1, 0.0, 0.75).unwrap());
        assert!(is_stably_convex_arc(&n1, 0.0, 0.75).unwrap());
        assert!(!is_convex_arc(&nu(2.0), 0.0, 0.75).unwrap());
    }

    #[test]
    fn nu_k_multiplicity() {
        for k in 1..=5 {
            let r = multiconvex_multiplicity(&nu(k as f64)).unwrap();
            assert_eq!(r.multiplicity, Multiplicity::Multiconvex(k));
            assert_eq!(r.breakpoints.len(), k + 1);
            for (j, b) in r.breakpoints.iter().enumerate() {
                assert!((b - j as f64 / k as f64).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn nu_mk_coordinates_vanish() {
        for k in [2usize, 3] {
            let m = mk_coordinates(&nu(k as f64), k).unwrap();
            assert_eq!(m.len(), 2 * k - 2);
            assert!(m.iter().all(|x| x.abs() < 1e-9), "{m:?}");
        }
        assert!(matches!(mk_coordinates(&nu(2.0), 3), Err(Error::NotInUk(_))));
    }

    #[test]
    fn good_arc_examples() {
        use crate::bruhat::SignedPerm;
        let c = |n: &str| good_arc_class(&SignedPerm::parse(n).unwrap().rotation()).unwrap();
        assert_eq!(c("(13);7"), GoodArcClass::A1);
        assert_eq!(c("(13);2"), GoodArcClass::A2);
        assert_eq!(c("e;5"), GoodArcClass::Outside);
    }

    #[test]
    fn not_locally_convex_is_rejected() {
        let c = integrate_frame(&LogCoords::constant(16, 2.0 * PI, 0.0).unwrap());
        assert!(matches!(next_step(&c, 0.0), Err(Error::NotLocallyConvex { .. })));
    }
}
