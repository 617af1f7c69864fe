//! Curves carried as lifted Frenet frames on a parameter grid.
//!
//! A [`FramedCurve`] stores `F̃(tᵢ) ∈ S³` at each grid point together with the
//! speeds `(v, v̂)` that drive `q′ = ½·q·(v̂𝐢 + v𝐤)` on the cell starting at `tᵢ`.
//! Between samples the lift is the geodesic of `S³`, which is exact whenever the
//! speeds are constant on the cell.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotations::{exp_im, lift_path, project, ImQuaternion, Rotation, UnitQuaternion};

/// Largest quaternion angle of a single integration step.
const MAX_STEP_ANGLE: f64 = 0.1;

/// Which second coordinate a [`LogCoords`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// `ŵ = v̂ − 1/v̂`, forcing `v̂ > 0` (locally convex curves).
    Convex,
    /// `v̂` stored directly, any sign (immersed curves).
    Immersion,
}

/// Piecewise-constant log coordinates `(w, ŵ)` on a grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogCoords {
    pub grid: Vec<f64>,
    /// `w = v − 1/v` on each cell.
    pub w: Vec<f64>,
    /// `ŵ` on each cell in [`Chart::Convex`], `v̂` itself in [`Chart::Immersion`].
    pub w_hat: Vec<f64>,
    pub chart: Chart,
}

/// Inverse of `x ↦ x − 1/x` on `(0, ∞)`.
pub fn from_log(w: f64) -> f64 {
    if w >= 0.0 {
        (w + (w * w + 4.0).sqrt()) / 2.0
    } else {
        2.0 / ((w * w + 4.0).sqrt() - w)
    }
}

pub fn to_log(v: f64) -> f64 {
    v - 1.0 / v
}

/// `n` equal cells on `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::InvalidInput("grid must start at 0 and end at 1".into()));
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

impl LogCoords {
    pub fn new(grid: Vec<f64>, w: Vec<f64>, w_hat: Vec<f64>, chart: Chart) -> Result<Self> {
        validate_grid(&grid)?;
        let cells = grid.len() - 1;
        if w.len() != cells || w_hat.len() != cells {
            return Err(Error::InvalidInput(format!(
                "expected {cells} samples per coordinate, got {} and {}",
                w.len(),
                w_hat.len()
            )));
        }
        if w.iter().chain(&w_hat).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate sample".into()));
        }
        Ok(Self { grid, w, w_hat, chart })
    }

    /// Builds coordinates from cell speeds, choosing the convex chart when `v̂ > 0` throughout.
    pub fn from_speeds(grid: Vec<f64>, v: &[f64], v_hat: &[f64]) -> Result<Self> {
        if v.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidInput("speed v must be positive".into()));
        }
        let w = v.iter().map(|&x| to_log(x)).collect();
        if v_hat.iter().all(|&x| x > 0.0) {
            let wh = v_hat.iter().map(|&x| to_log(x)).collect();
            Self::new(grid, w, wh, Chart::Convex)
        } else {
            Self::new(grid, w, v_hat.to_vec(), Chart::Immersion)
        }
    }

    /// Constant speeds on `cells` equal cells.
    pub fn constant(cells: usize, v: f64, v_hat: f64) -> Result<Self> {
        Self::from_speeds(uniform_grid(cells), &vec![v; cells], &vec![v_hat; cells])
    }

    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    /// `(v, v̂)` on cell `i`.
    pub fn speeds(&self, i: usize) -> (f64, f64) {
        let v = from_log(self.w[i]);
        let vh = match self.chart {
            Chart::Convex => from_log(self.w_hat[i]),
            Chart::Immersion => self.w_hat[i],
        };
        (v, vh)
    }
}

/// A sampled curve carried by its lifted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedCurve {
    pub grid: Vec<f64>,
    pub lifts: Vec<UnitQuaternion>,
    /// Speed `|γ′|` on the cell starting at each grid point; the last entry repeats.
    pub v: Vec<f64>,
    /// `v̂ = κ·v` on the cell starting at each grid point; the last entry repeats.
    pub v_hat: Vec<f64>,
}

/// Logarithmic derivative `½(v̂𝐢 + v𝐤)` of the lift.
pub fn frame_velocity(v: f64, v_hat: f64) -> ImQuaternion {
    ImQuaternion::new(0.5 * v_hat, 0.0, 0.5 * v)
}

impl FramedCurve {
    /// Integrates constant speeds exactly on each cell, starting from `q0`.
    pub fn from_cells(q0: UnitQuaternion, grid: &[f64], v: &[f64], v_hat: &[f64]) -> Self {
        let mut out = FramedCurve { grid: vec![grid[0]], lifts: vec![q0], v: Vec::new(), v_hat: Vec::new() };
        for i in 0..grid.len() - 1 {
            let h = grid[i + 1] - grid[i];
            let omega = frame_velocity(v[i], v_hat[i]);
            let steps = ((h * omega.norm() / MAX_STEP_ANGLE).ceil() as usize).max(1);
            let step = exp_im(omega.scale(h / steps as f64));
            let mut q = *out.lifts.last().unwrap();
            for s in 1..=steps {
                q = q * step;
                let t = if s == steps { grid[i + 1] } else { grid[i] + h * s as f64 / steps as f64 };
                out.grid.push(t);
                out.lifts.push(q);
                out.v.push(v[i]);
                out.v_hat.push(v_hat[i]);
            }
        }
        out.v.push(*v.last().unwrap());
        out.v_hat.push(*v_hat.last().unwrap());
        out
    }

    /// Wraps lifts sampled on a grid, recovering the cell speeds from the discrete logarithm.
    pub fn from_lifts(grid: Vec<f64>, lifts: Vec<UnitQuaternion>) -> Self {
        let n = grid.len();
        let mut v = Vec::with_capacity(n);
        let mut v_hat = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let h = grid[i + 1] - grid[i];
            let l = (lifts[i].inv() * lifts[i + 1]).log();
            v.push(2.0 * l.z / h);
            v_hat.push(2.0 * l.x / h);
        }
        v.push(*v.last().unwrap_or(&0.0));
        v_hat.push(*v_hat.last().unwrap_or(&0.0));
        FramedCurve { grid, lifts, v, v_hat }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn start_lift(&self) -> UnitQuaternion {
        self.lifts[0]
    }

    pub fn endpoint_lift(&self) -> UnitQuaternion {
        *self.lifts.last().unwrap()
    }

    /// The same curve left-translated so that its initial lift is `𝟏`.
    pub fn based(&self) -> Self {
        self.left_mul(self.lifts[0].inv())
    }

    /// Left translation of every lift by `q`.
    pub fn left_mul(&self, q: UnitQuaternion) -> Self {
        FramedCurve { lifts: self.lifts.iter().map(|l| q * *l).collect(), ..self.clone() }
    }

    /// Locally convex: `v̂ > 0` on every cell.
    pub fn is_locally_convex(&self) -> bool {
        self.v_hat[..self.len() - 1].iter().all(|&x| x > 0.0)
    }

    pub fn is_immersed(&self) -> bool {
        self.v[..self.len() - 1].iter().all(|&x| x > 0.0)
    }

    /// Index `i` of the cell `[tᵢ, tᵢ₊₁]` containing `t` (clamped to the domain).
    pub fn cell_of(&self, t: f64) -> usize {
        let n = self.grid.len();
        if t <= self.grid[0] {
            return 0;
        }
        if t >= self.grid[n - 1] {
            return n - 2;
        }
        self.grid.partition_point(|&g| g <= t).saturating_sub(1).min(n - 2)
    }

    pub fn lift_at(&self, t: f64) -> UnitQuaternion {
        let i = self.cell_of(t);
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
        if s == 0.0 {
            self.lifts[i]
        } else if s == 1.0 {
            self.lifts[i + 1]
        } else {
            self.lifts[i].slerp(&self.lifts[i + 1], s)
        }
    }

    pub fn frame_at(&self, t: f64) -> Rotation {
        project(&self.lift_at(t))
    }

    pub fn point_at(&self, t: f64) -> Vector3<f64> {
        self.frame_at(t).col(0)
    }

    /// Relative frame `F(t0)⁻¹F(t1)`.
    pub fn relative_frame(&self, t0: f64, t1: f64) -> Rotation {
        project(&(self.lift_at(t0).inv() * self.lift_at(t1)))
    }

    /// Geodesic curvature `v̂/v` on each cell.
    pub fn curvature(&self) -> Vec<f64> {
        self.v.iter().zip(&self.v_hat).map(|(v, vh)| vh / v).collect()
    }

    /// Restriction to `[a, b]`, rescaled to `[0, 1]` and keeping the lifts.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        let mut grid = vec![0.0];
        let mut lifts = vec![self.lift_at(a)];
        let mut v = Vec::new();
        let mut vh = Vec::new();
        let scale = b - a;
        let i0 = self.cell_of(a);
        v.push(self.v[i0] * scale);
        vh.push(self.v_hat[i0] * scale);
        for i in 0..self.len() {
            let t = self.grid[i];
            if t > a + 1e-15 && t < b - 1e-15 {
                grid.push((t - a) / scale);
                lifts.push(self.lifts[i]);
                v.push(self.v[i] * scale);
                vh.push(self.v_hat[i] * scale);
            }
        }
        grid.push(1.0);
        lifts.push(self.lift_at(b));
        v.push(*v.last().unwrap());
        vh.push(*vh.last().unwrap());
        FramedCurve { grid, lifts, v, v_hat: vh }
    }

    /// Maximum chordal gap between consecutive lifts.
    pub fn max_step(&self) -> f64 {
        self.lifts.windows(2).map(|p| p[0].chordal(&p[1])).fold(0.0, f64::max)
    }
}

/// Solves the frame equation `Γ′ = ΓΛ`, `Γ(0) = I`, lifted to `S³`.
pub fn integrate_frame(coords: &LogCoords) -> FramedCurve {
    let n = coords.cells();
    let (v, vh): (Vec<f64>, Vec<f64>) = (0..n).map(|i| coords.speeds(i)).unzip();
    FramedCurve::from_cells(UnitQuaternion::one(), &coords.grid, &v, &vh)
}

/// Log coordinates of a curve on its own grid; inverse of [`integrate_frame`] on based curves.
pub fn extract_coords(curve: &FramedCurve) -> LogCoords {
    let n = curve.len() - 1;
    let v: Vec<f64> = curve.v[..n].to_vec();
    let vh: Vec<f64> = curve.v_hat[..n].to_vec();
    LogCoords::from_speeds(curve.grid.clone(), &v, &vh).expect("curve grid and speeds are valid")
}

/// Total curvature `tot(γ)`, twice the length of the lifted frame.
pub fn total_curvature(curve: &FramedCurve) -> f64 {
    curve.lifts.windows(2).map(|p| 2.0 * p[0].angle_to(&p[1])).sum()
}

/// The projective action `π(A)` on a single frame: Gram–Schmidt of `A·Q`.
pub fn act(a: &Matrix3<f64>, q: &Rotation) -> Result<Rotation> {
    Rotation::gram_schmidt(&(a * q.0))
}

/// Applies `π(A)` frame-wise; the new initial lift is the one nearest the old.
pub fn transform(a: &Matrix3<f64>, curve: &FramedCurve) -> Result<FramedCurve> {
    transform_from(a, curve, curve.lifts[0])
}

/// The action of `π(A)` on lifted frames, continuous in the frame.
///
/// With the polar decomposition `A = R·S`, the image of a lift `q` is `r·q₁` where `q₁` is
/// followed continuously along `π(S^λ)`, `λ ∈ [0, 1]`, and `r` lifts `R`. Nearest-lift
/// matching between neighbouring samples cannot see a frame that winds once around and
/// comes back, but this lift flips sign there.
#[derive(Debug, Clone)]
pub struct LiftedAction {
    a: Matrix3<f64>,
    r: UnitQuaternion,
    basis: Matrix3<f64>,
    log_sigma: Vector3<f64>,
}

impl LiftedAction {
    pub fn new(a: &Matrix3<f64>) -> Result<Self> {
        let det = a.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("transformation has determinant {det}")));
        }
        let svd = a.svd(true, true);
        let (u, v_t) = (svd.u.ok_or(Error::Degenerate)?, svd.v_t.ok_or(Error::Degenerate)?);
        if svd.singular_values.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Degenerate);
        }
        let r = UnitQuaternion::from_rotation(&Rotation(u * v_t));
        Ok(Self { a: *a, r, basis: v_t.transpose(), log_sigma: svd.singular_values.map(f64::ln) })
    }

    fn stretch(&self, lambda: f64) -> Matrix3<f64> {
        self.basis * Matrix3::from_diagonal(&self.log_sigma.map(|x| (lambda * x).exp())) * self.basis.transpose()
    }

    pub fn apply(&self, q: &UnitQuaternion) -> Result<UnitQuaternion> {
        let frame = project(q);
        let exact = UnitQuaternion::from_rotation(&act(&self.a, &frame)?);
        let tracked = self.track(q, &frame)?;
        Ok(if exact.dot(&tracked) >= 0.0 { exact } else { -exact })
    }

    /// The stretch path is ill-conditioned for large `A`; it only decides the sign.
    fn track(&self, q: &UnitQuaternion, frame: &Rotation) -> Result<UnitQuaternion> {
        let mut cur = *q;
        let (mut lambda, mut step) = (0.0f64, 0.125f64);
        while lambda < 1.0 {
            let next = (lambda + step).min(1.0);
            let cand = UnitQuaternion::from_rotation(&act(&self.stretch(next), frame)?);
            let cand = if cand.dot(&cur) >= 0.0 { cand } else { -cand };
            if cand.angle_to(&cur) > TRACK_STEP && step > 1e-9 {
                step *= 0.5;
                continue;
            }
            cur = cand;
            lambda = next;
            step = (2.0 * step).min(0.25);
        }
        Ok(self.r * cur)
    }
}

/// Largest frame move accepted per step of the stretch path.
const TRACK_STEP: f64 = 0.25;

/// Applies `π(A)` frame-wise, choosing the initial lift nearest to `hint`.
///
/// Cells whose image turns farther than the source are subdivided.
pub fn transform_from(a: &Matrix3<f64>, curve: &FramedCurve, hint: UnitQuaternion) -> Result<FramedCurve> {
    let action = LiftedAction::new(a)?;
    let mut grid = Vec::with_capacity(curve.len());
    let mut lifts = Vec::with_capacity(curve.len());
    grid.push(curve.grid[0]);
    lifts.push(action.apply(&curve.lifts[0])?);
    for i in 0..curve.len() - 1 {
        let end = action.apply(&curve.lifts[i + 1])?;
        let cell = Cell { action: &action, curve, index: i };
        cell.subdivide(curve.grid[i], curve.grid[i + 1], *lifts.last().unwrap(), end, 0, &mut grid, &mut lifts)?;
    }
    if lifts[0].dot(&hint) < 0.0 {
        lifts.iter_mut().for_each(|q| *q = -*q);
    }
    Ok(FramedCurve::from_lifts(grid, lifts))
}

struct Cell<'a> {
    action: &'a LiftedAction,
    curve: &'a FramedCurve,
    index: usize,
}

impl Cell<'_> {
    fn source(&self, t: f64) -> UnitQuaternion {
        let (g0, g1) = (self.curve.grid[self.index], self.curve.grid[self.index + 1]);
        self.curve.lifts[self.index].slerp(&self.curve.lifts[self.index + 1], (t - g0) / (g1 - g0))
    }

    #[allow(clippy::too_many_arguments)]
    fn subdivide(
        &self,
        t0: f64,
        t1: f64,
        l0: UnitQuaternion,
        l1: UnitQuaternion,
        depth: usize,
        grid: &mut Vec<f64>,
        lifts: &mut Vec<UnitQuaternion>,
    ) -> Result<()> {
        let tm = 0.5 * (t0 + t1);
        let (s0, sm, s1) = (self.source(t0), self.source(tm), self.source(t1));
        let lm = self.action.apply(&sm)?;
        let image = l0.angle_to(&lm) + lm.angle_to(&l1);
        let source = s0.angle_to(&sm) + sm.angle_to(&s1);
        if image < 0.01 || image <= source * (1.0 + 1e-9) || depth > 48 {
            grid.push(t1);
            lifts.push(l1);
            return Ok(());
        }
        self.subdivide(t0, tm, l0, lm, depth + 1, grid, lifts)?;
        self.subdivide(tm, t1, lm, l1, depth + 1, grid, lifts)
    }
}

/// Juxtaposition: `c1` on `[0, ½]` followed by `c2` translated to start at `c1`'s endpoint.
pub fn concat(c1: &FramedCurve, c2: &FramedCurve) -> FramedCurve {
    let shift = c1.endpoint_lift() * c2.lifts[0].inv();
    let mut grid: Vec<f64> = c1.grid.iter().map(|t| 0.5 * t).collect();
    let mut lifts = c1.lifts.clone();
    let mut v: Vec<f64> = c1.v.iter().map(|x| 2.0 * x).collect();
    let mut vh: Vec<f64> = c1.v_hat.iter().map(|x| 2.0 * x).collect();
    v.pop();
    vh.pop();
    for i in 0..c2.len() {
        if i > 0 {
            grid.push(0.5 + 0.5 * c2.grid[i]);
            lifts.push(shift * c2.lifts[i]);
        }
        v.push(2.0 * c2.v[i]);
        vh.push(2.0 * c2.v_hat[i]);
    }
    FramedCurve { grid, lifts, v, v_hat: vh }
}

/// Concatenation of several curves on consecutive windows `[bᵢ, bᵢ₊₁]`.
pub fn concat_weighted(parts: &[(&FramedCurve, f64)]) -> FramedCurve {
    let total: f64 = parts.iter().map(|p| p.1).sum();
    let mut grid = vec![0.0];
    let mut lifts = vec![parts[0].0.lifts[0]];
    let mut v = Vec::new();
    let mut vh = Vec::new();
    let mut start = 0.0;
    let mut shift = UnitQuaternion::one();
    for (idx, (c, wgt)) in parts.iter().enumerate() {
        let len = wgt / total;
        let base = if idx == 0 { UnitQuaternion::one() } else { shift * c.lifts[0].inv() };
        for i in 0..c.len() - 1 {
            let t = if idx + 1 == parts.len() && i + 2 == c.len() { 1.0 } else { start + len * c.grid[i + 1] };
            grid.push(t);
            lifts.push(base * c.lifts[i + 1]);
            v.push(c.v[i] / len);
            vh.push(c.v_hat[i] / len);
        }
        shift = *lifts.last().unwrap();
        start += len;
    }
    v.push(*v.last().unwrap());
    vh.push(*vh.last().unwrap());
    FramedCurve { grid, lifts, v, v_hat: vh }
}

/// The curve `s ↦ γ(φ(s))` for an increasing bijection `φ` of `[0, 1]`.
pub fn reparametrize(curve: &FramedCurve, phi: &dyn Fn(f64) -> f64) -> Result<FramedCurve> {
    if phi(0.0).abs() > 1e-12 || (phi(1.0) - 1.0).abs() > 1e-12 {
        return Err(Error::NotMonotone);
    }
    let probe: Vec<f64> = (0..=4096).map(|i| phi(i as f64 / 4096.0)).collect();
    if probe.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::NotMonotone);
    }
    let n = curve.len();
    let mut grid = Vec::with_capacity(n);
    for (i, &t) in curve.grid.iter().enumerate() {
        let s = if i == 0 {
            0.0
        } else if i + 1 == n {
            1.0
        } else {
            invert_increasing(phi, t)
        };
        grid.push(s);
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::NotMonotone);
    }
    let mut v = curve.v.clone();
    let mut vh = curve.v_hat.clone();
    for i in 0..n - 1 {
        let r = (curve.grid[i + 1] - curve.grid[i]) / (grid[i + 1] - grid[i]);
        v[i] *= r;
        vh[i] *= r;
    }
    v[n - 1] = v[n - 2];
    vh[n - 1] = vh[n - 2];
    Ok(FramedCurve { grid, lifts: curve.lifts.clone(), v, v_hat: vh })
}

fn invert_increasing(phi: &dyn Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ν₁(u) = ½(1 + cos 2πu, √2 sin 2πu, 1 − cos 2πu)`.
pub fn nu1_point(u: f64) -> Vector3<f64> {
    let (s, c) = (2.0 * PI * u).sin_cos();
    Vector3::new(0.5 * (1.0 + c), s / SQRT_2, 0.5 * (1.0 - c))
}

/// `F̃_{ν₁}(u) = exp(πu𝐤̂)`.
pub fn nu1_lift(u: f64) -> UnitQuaternion {
    exp_im(ImQuaternion::K_HAT.scale(PI * u))
}

/// The arc `t ↦ π(M)∘ν₁(a + bt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseArc {
    pub m: Matrix3<f64>,
    pub a: f64,
    pub b: f64,
}

impl EllipseArc {
    pub fn new(m: Matrix3<f64>, a: f64, b: f64) -> Result<Self> {
        let det = m.determinant();
        if (det - 1.0).abs() > 1e-9 || b == 0.0 || !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput(format!("ellipse needs det 1 and b != 0 (det {det}, b {b})")));
        }
        Ok(Self { m, a, b })
    }

    /// Samples the arc on `cells` equal cells; the initial lift is nearest to `hint`.
    pub fn to_curve(&self, cells: usize, hint: UnitQuaternion) -> Result<FramedCurve> {
        let grid = uniform_grid(cells);
        let frames: Vec<Rotation> = grid.iter().map(|&t| eval_ellipse(self, t).1).collect();
        let first = UnitQuaternion::from_rotation(&frames[0]);
        let q0 = if first.dot(&hint) >= 0.0 { first } else { -first };
        Ok(FramedCurve::from_lifts(grid, lift_path(&frames, q0)?))
    }
}

/// Point and frame of an ellipse arc at `t ∈ [0, 1]`.
pub fn eval_ellipse(e: &EllipseArc, t: f64) -> (Vector3<f64>, Rotation) {
    let u = e.a + e.b * t;
    let frame = act(&e.m, &project(&nu1_lift(u))).expect("SL3 image of a frame has full rank");
    (frame.col(0), frame)
}
