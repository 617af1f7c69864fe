//! Unit quaternions, rotation matrices and the double cover `S³ → SO(3)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest operator-norm gap between consecutive frames that `lift_path` accepts.
pub const BRANCH_THRESHOLD: f64 = 0.5;

/// A point of `S³ ⊂ ℍ`, stored as `w + x𝐢 + y𝐣 + z𝐤`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A pure imaginary quaternion `x𝐢 + y𝐣 + z𝐤`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImQuaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub Matrix3<f64>);

impl UnitQuaternion {
    /// Normalizes the four components. Panics on the zero quaternion.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        assert!(n > 0.0 && n.is_finite(), "cannot normalize {w}, {x}, {y}, {z}");
        Self { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    /// Builds from components assumed already normalized.
    pub const fn from_parts(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn one() -> Self {
        Self::from_parts(1.0, 0.0, 0.0, 0.0)
    }
    pub const fn i() -> Self {
        Self::from_parts(0.0, 1.0, 0.0, 0.0)
    }
    pub const fn j() -> Self {
        Self::from_parts(0.0, 0.0, 1.0, 0.0)
    }
    pub const fn k() -> Self {
        Self::from_parts(0.0, 0.0, 0.0, 1.0)
    }
    /// `𝐤̂ = (𝐢 + 𝐤)/√2`.
    pub const fn k_hat() -> Self {
        Self::from_parts(0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2)
    }
    /// `𝐢̂ = (𝐢 − 𝐤)/√2`.
    pub const fn i_hat() -> Self {
        Self::from_parts(0.0, FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2)
    }
    /// `𝐡 = exp(π𝐣/8)`; conjugation by it sends 𝐢 to 𝐢̂ and 𝐤 to 𝐤̂.
    pub fn h() -> Self {
        exp_im(ImQuaternion::J.scale(PI / 8.0))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn imag(&self) -> ImQuaternion {
        ImQuaternion::new(self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Self::from_parts(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion (its conjugate).
    pub fn inv(&self) -> Self {
        self.conj()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Euclidean distance in `R⁴`.
    pub fn chordal(&self, o: &Self) -> f64 {
        let d = [self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z];
        d.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Great-circle distance on `S³`, computed stably via `2·atan2(|a−b|, |a+b|)`.
    pub fn angle_to(&self, o: &Self) -> f64 {
        let s = [self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z];
        let sum = s.iter().map(|c| c * c).sum::<f64>().sqrt();
        2.0 * self.chordal(o).atan2(sum)
    }

    /// Principal logarithm; the returned vector has norm in `[0, π]`.
    pub fn log(&self) -> ImQuaternion {
        let v = self.imag();
        let n = v.norm();
        if n < 1e-300 {
            return ImQuaternion::default();
        }
        let theta = n.atan2(self.w);
        v.scale(theta / n)
    }

    /// Geodesic interpolation from `self` (s = 0) to `o` (s = 1).
    pub fn slerp(&self, o: &Self, s: f64) -> Self {
        let rel = self.inv() * *o;
        *self * exp_im(rel.log().scale(s))
    }

    /// The lift of `r` with non-negative real part (Shepperd's method).
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = &r.0;
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let (w, x, y, z);
        if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[(2, 1)] - m[(1, 2)]) / s;
            y = (m[(0, 2)] - m[(2, 0)]) / s;
            z = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(2, 1)] - m[(1, 2)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(0, 2)] - m[(2, 0)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            w = (m[(1, 0)] - m[(0, 1)]) / s;
            x = (m[(0, 2)] + m[(2, 0)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let q = Self::new(w, x, y, z);
        if q.w < 0.0 { -q } else { q }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|c| c.is_finite())
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        let a = self;
        UnitQuaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;
    fn neg(self) -> UnitQuaternion {
        UnitQuaternion::from_parts(-self.w, -self.x, -self.y, -self.z)
    }
}

impl ImQuaternion {
    pub const I: ImQuaternion = ImQuaternion { x: 1.0, y: 0.0, z: 0.0 };
    pub const J: ImQuaternion = ImQuaternion { x: 0.0, y: 1.0, z: 0.0 };
    pub const K: ImQuaternion = ImQuaternion { x: 0.0, y: 0.0, z: 1.0 };
    pub const K_HAT: ImQuaternion = ImQuaternion { x: FRAC_1_SQRT_2, y: 0.0, z: FRAC_1_SQRT_2 };
    pub const I_HAT: ImQuaternion = ImQuaternion { x: FRAC_1_SQRT_2, y: 0.0, z: -FRAC_1_SQRT_2 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for ImQuaternion {
    type Output = ImQuaternion;
    fn add(self, o: ImQuaternion) -> ImQuaternion {
        ImQuaternion::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for ImQuaternion {
    type Output = ImQuaternion;
    fn sub(self, o: ImQuaternion) -> ImQuaternion {
        ImQuaternion::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn col(&self, j: usize) -> Vector3<f64> {
        self.0.column(j).into_owned()
    }

    /// Operator-norm distance `‖A − B‖₂` between rotations, equal to `‖A − B‖_F/√2`.
    pub fn distance(&self, o: &Self) -> f64 {
        (self.0 - o.0).norm() * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Gram–Schmidt orthonormalization of the columns, third column by cross product.
    pub fn gram_schmidt(m: &Matrix3<f64>) -> Result<Self> {
        let c0 = m.column(0).into_owned();
        let n0 = c0.norm();
        if !(n0 > 1e-14) {
            return Err(Error::Degenerate);
        }
        let e0 = c0 / n0;
        let c1 = m.column(1).into_owned();
        let t = c1 - e0 * e0.dot(&c1);
        let n1 = t.norm();
        if !(n1 > 1e-14 * c1.norm().max(1.0)) {
            return Err(Error::Degenerate);
        }
        let e1 = t / n1;
        let e2 = e0.cross(&e1);
        Ok(Rotation(Matrix3::from_columns(&[e0, e1, e2])))
    }

    /// `R_z(θ)`, rotation by `θ` around the third axis.
    pub fn about_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// `R_y(φ)`, rotation by `φ` around the second axis.
    pub fn about_y(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, o: Rotation) -> Rotation {
        Rotation(self.0 * o.0)
    }
}

/// The covering map `Π`, with `Π(q)v = q v q⁻¹`.
pub fn project(q: &UnitQuaternion) -> Rotation {
    let UnitQuaternion { w, x, y, z } = *q;
    Rotation(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// `exp(v) = cos|v| + sin|v|·v/|v|`.
pub fn exp_im(v: ImQuaternion) -> UnitQuaternion {
    let n = v.norm();
    if n < 1e-300 {
        return UnitQuaternion::one();
    }
    let (s, c) = n.sin_cos();
    let f = s / n;
    UnitQuaternion::new(c, v.x * f, v.y * f, v.z * f)
}

/// Continuous lift of a sampled path of frames starting at `q0`.
pub fn lift_path(frames: &[Rotation], q0: UnitQuaternion) -> Result<Vec<UnitQuaternion>> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let residual = project(&q0).distance(first);
    if residual > 1e-6 {
        return Err(Error::ProjectionMismatch { residual });
    }
    let mut out = Vec::with_capacity(frames.len());
    out.push(q0);
    for (i, pair) in frames.windows(2).enumerate() {
        let distance = pair[0].distance(&pair[1]);
        if !(distance < BRANCH_THRESHOLD) {
            return Err(Error::BranchAmbiguous { index: i, distance });
        }
        let prev = out[i];
        let q = UnitQuaternion::from_rotation(&pair[1]);
        out.push(if q.dot(&prev) >= 0.0 { q } else { -q });
    }
    Ok(out)
}

/// Chordal distance from `q` to the circle `{exp(s·axis)}`.
pub fn dist_to_circle(q: &UnitQuaternion, axis: &ImQuaternion) -> f64 {
    let a = axis.normalized();
    let along = q.imag().dot(&a);
    let m = (q.w * q.w + along * along).sqrt().min(1.0);
    (2.0 - 2.0 * m).max(0.0).sqrt()
}

/// The standard basis vector `e_i` (0-based).
pub fn e(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_projects_to_identity() {
        assert_eq!(project(&UnitQuaternion::one()).0, Matrix3::identity());
    }

    #[test]
    fn projection_matches_rotation_about_z() {
        for &theta in &[0.3, 1.2, -2.5, 3.0] {
            let q = exp_im(ImQuaternion::K.scale(theta / 2.0));
            let r = project(&q);
            assert_abs_diff_eq!(r.0, Rotation::about_z(theta).0, epsilon = 1e-14);
            let q = exp_im(ImQuaternion::J.scale(theta / 2.0));
            assert_abs_diff_eq!(project(&q).0, Rotation::about_y(theta).0, epsilon = 1e-14);
        }
    }

    #[test]
    fn k_hat_projects_to_open_cell_representative() {
        // P_(13);2 has columns e3, -e2, e1.
        let p = Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0);
        assert_abs_diff_eq!(project(&UnitQuaternion::k_hat()).0, p, epsilon = 1e-15);
    }

    #[test]
    fn one_minus_j_projects_to_13_1() {
        // signs ++- by column: columns e3, e2, -e1.
        let p = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        let q = UnitQuaternion::new(1.0, 0.0, -1.0, 0.0);
        assert_abs_diff_eq!(project(&q).0, p, epsilon = 1e-15);
    }

    #[test]
    fn h_conjugates_i_and_k() {
        let h = UnitQuaternion::h();
        let ci = h * UnitQuaternion::i() * h.inv();
        let ck = h * UnitQuaternion::k() * h.inv();
        assert_abs_diff_eq!(ci.chordal(&UnitQuaternion::from_parts(0.0, FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ck.chordal(&UnitQuaternion::k_hat()), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_im(ImQuaternion::default()), UnitQuaternion::one());
        let q = exp_im(ImQuaternion::K_HAT.scale(PI));
        assert_abs_diff_eq!(q.chordal(&-UnitQuaternion::one()), 0.0, epsilon = 1e-15);
        let q = exp_im(ImQuaternion::K_HAT.scale(PI / 2.0));
        assert_abs_diff_eq!(q.chordal(&UnitQuaternion::k_hat()), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn log_inverts_exp() {
        let v = ImQuaternion::new(0.4, -1.1, 0.7);
        let l = exp_im(v).log();
        assert_abs_diff_eq!((l - v).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn from_rotation_round_trip_all_branches() {
        let qs = [
            UnitQuaternion::new(0.9, 0.1, -0.2, 0.3),
            UnitQuaternion::new(0.1, 0.9, -0.2, 0.3),
            UnitQuaternion::new(0.1, -0.2, 0.9, 0.3),
            UnitQuaternion::new(0.1, 0.3, -0.2, 0.9),
            UnitQuaternion::new(-0.2, 0.3, -0.2, 0.9),
        ];
        for q in qs {
            let back = UnitQuaternion::from_rotation(&project(&q));
            let d = back.chordal(&q).min(back.chordal(&-q));
            assert!(d < 1e-14, "{q:?} -> {back:?}");
        }
    }

    #[test]
    fn lift_constant_path() {
        let frames = vec![Rotation::identity(); 5];
        let lifts = lift_path(&frames, UnitQuaternion::one()).unwrap();
        assert!(lifts.iter().all(|q| *q == UnitQuaternion::one()));
    }

    #[test]
    fn lift_of_nu1_ends_at_minus_one() {
        let frames: Vec<_> = (0..=64)
            .map(|i| project(&exp_im(ImQuaternion::K_HAT.scale(PI * i as f64 / 64.0))))
            .collect();
        let lifts = lift_path(&frames, UnitQuaternion::one()).unwrap();
        assert!(lifts.last().unwrap().chordal(&-UnitQuaternion::one()) < 1e-12);
    }

    #[test]
    fn lift_of_nu2_ends_at_one() {
        let frames: Vec<_> = (0..=128)
            .map(|i| project(&exp_im(ImQuaternion::K_HAT.scale(2.0 * PI * i as f64 / 128.0))))
            .collect();
        let lifts = lift_path(&frames, UnitQuaternion::one()).unwrap();
        assert!(lifts.last().unwrap().chordal(&UnitQuaternion::one()) < 1e-12);
    }

    #[test]
    fn lift_errors() {
        let frames = vec![Rotation::identity(), Rotation::about_z(2.0)];
        assert!(matches!(lift_path(&frames, UnitQuaternion::one()), Err(Error::BranchAmbiguous { index: 0, .. })));
        assert!(matches!(lift_path(&frames, UnitQuaternion::k()), Err(Error::ProjectionMismatch { .. })));
    }

    #[test]
    fn dist_to_circle_examples() {
        let kh = ImQuaternion::K_HAT;
        assert_abs_diff_eq!(dist_to_circle(&UnitQuaternion::one(), &kh), 0.0);
        assert_abs_diff_eq!(dist_to_circle(&UnitQuaternion::j(), &kh), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(dist_to_circle(&exp_im(kh.scale(PI / 5.0)), &kh), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn dist_to_circle_matches_brute_force() {
        let q = UnitQuaternion::new(0.3, -0.5, 0.4, 0.2);
        let a = ImQuaternion::new(0.2, 0.9, -0.1).normalized();
        let brute = (0..20000)
            .map(|i| q.chordal(&exp_im(a.scale(2.0 * PI * i as f64 / 20000.0))))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(dist_to_circle(&q, &a), brute, epsilon = 1e-6);
    }
}
