//! Bruhat cells of SO(3) and their lifts to `S³`.
//!
//! A cell is named by its signed permutation matrix: the permutation `σ` in cycle
//! notation (column `j` has its nonzero entry in row `σ(j)`) followed by the
//! column signs read as a binary number, first column most significant, `−` = 1.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::curves::act;
use crate::error::{Error, Result};
use crate::rotations::{exp_im, lift_path, project, ImQuaternion, Rotation, UnitQuaternion};

/// Default zero test on entries of orthogonal matrices.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An element of `B₃⁺`, the signed permutation matrices of determinant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPerm {
    /// `perm[j]` is the (0-based) row of the nonzero entry of column `j`.
    pub perm: [u8; 3],
    /// Sign of the nonzero entry of each column.
    pub signs: [i8; 3],
}

impl SignedPerm {
    pub const IDENTITY: SignedPerm = SignedPerm { perm: [0, 1, 2], signs: [1, 1, 1] };

    /// Parses names such as `"(13);2"`, `"(123);6"` or `"e;5"`.
    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad cell name {name:?}"));
        let (cycle, code) = name.split_once(';').ok_or_else(bad)?;
        let code: u8 = code.trim().parse().map_err(|_| bad())?;
        if code > 7 {
            return Err(bad());
        }
        let mut perm = [0u8, 1, 2];
        let cycle = cycle.trim();
        if cycle != "e" {
            let digits: Vec<u8> = cycle
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .ok_or_else(bad)?
                .bytes()
                .map(|b| b.wrapping_sub(b'1'))
                .collect();
            if digits.len() < 2 || digits.iter().any(|&d| d > 2) {
                return Err(bad());
            }
            for (i, &d) in digits.iter().enumerate() {
                perm[d as usize] = digits[(i + 1) % digits.len()];
            }
        }
        let signs = [0, 1, 2].map(|j| if code >> (2 - j) & 1 == 1 { -1 } else { 1 });
        let p = SignedPerm { perm, signs };
        if p.det() != 1 {
            return Err(Error::InvalidInput(format!("{name:?} has determinant -1")));
        }
        Ok(p)
    }

    pub fn det(&self) -> i32 {
        let parity = if self.inversions().is_multiple_of(2) { 1 } else { -1 };
        parity * self.signs.iter().map(|&s| s as i32).product::<i32>()
    }

    /// Number of inversions of the permutation, which is the cell dimension.
    pub fn inversions(&self) -> u32 {
        let mut n = 0;
        for i in 0..3 {
            for j in i + 1..3 {
                if self.perm[i] > self.perm[j] {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn sign_code(&self) -> u8 {
        self.signs.iter().fold(0, |acc, &s| (acc << 1) | (s < 0) as u8)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            m[(self.perm[j] as usize, j)] = self.signs[j] as f64;
        }
        m
    }

    pub fn rotation(&self) -> Rotation {
        Rotation(self.matrix())
    }

    fn cycle_name(&self) -> String {
        let p = self.perm;
        match self.inversions() {
            0 => "e".into(),
            _ => {
                let moved: Vec<usize> = (0..3).filter(|&j| p[j] as usize != j).collect();
                if moved.len() == 2 {
                    format!("({}{})", moved[0] + 1, moved[1] + 1)
                } else {
                    format!("(1{}{})", p[0] + 1, p[p[0] as usize] + 1)
                }
            }
        }
    }

    /// All 24 elements of `B₃⁺`.
    pub fn all() -> Vec<SignedPerm> {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(24);
        for perm in perms {
            for code in 0..8u8 {
                let signs = [0, 1, 2].map(|j| if code >> (2 - j) & 1 == 1 { -1 } else { 1 });
                let p = SignedPerm { perm, signs };
                if p.det() == 1 {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for SignedPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.cycle_name(), self.sign_code())
    }
}

/// An element of `B̃₃⁺ ⊂ S³`, the 48 lifts of `B₃⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedSignedPerm {
    pub q: UnitQuaternion,
}

impl LiftedSignedPerm {
    pub fn perm(&self) -> SignedPerm {
        classify_exact(&project(&self.q))
    }
}

/// A Bruhat cell, named by its representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub rep: SignedPerm,
    pub dim: u32,
}

impl CellId {
    pub fn new(rep: SignedPerm) -> Self {
        Self { rep, dim: rep.inversions() }
    }

    pub fn named(name: &str) -> Self {
        Self::new(SignedPerm::parse(name).expect("literal cell name"))
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.rep.fmt(f)
    }
}

/// Output of [`normal_form`]: `U₀·Q·U₁⁻¹ = P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForm {
    pub p: SignedPerm,
    pub u0: Matrix3<f64>,
    pub u1: Matrix3<f64>,
}

/// Reduces `Q` to its signed permutation by upper-triangular row and column operations.
pub fn normal_form(q: &Rotation, tol: f64) -> Result<NormalForm> {
    let mut m = q.0;
    let mut u0 = Matrix3::identity();
    let mut u1_inv = Matrix3::identity();
    let mut used = [false; 3];
    let mut perm = [0u8; 3];
    let mut signs = [1i8; 3];
    for j in 0..3 {
        let mut pivot = None;
        for r in (0..3).rev() {
            if used[r] {
                continue;
            }
            let value = m[(r, j)].abs();
            if value > tol / 10.0 && value < tol * 10.0 {
                return Err(Error::NearBoundary { value: m[(r, j)] });
            }
            if pivot.is_none() && value > tol {
                pivot = Some(r);
            }
        }
        let p = pivot.ok_or(Error::Degenerate)?;
        for r in 0..3 {
            if !used[r] && r > p {
                m[(r, j)] = 0.0;
            }
        }
        let pv = m[(p, j)];
        for r in 0..p {
            if used[r] {
                continue;
            }
            let f = -m[(r, j)] / pv;
            if f != 0.0 {
                let row_p = m.row(p).into_owned();
                m.set_row(r, &(m.row(r) + row_p * f));
                let u_row = u0.row(p).into_owned();
                u0.set_row(r, &(u0.row(r) + u_row * f));
            }
            m[(r, j)] = 0.0;
        }
        for c in j + 1..3 {
            let f = -m[(p, c)] / pv;
            if f != 0.0 {
                let col_j = m.column(j).into_owned();
                m.set_column(c, &(m.column(c) + col_j * f));
                let u_col = u1_inv.column(j).into_owned();
                u1_inv.set_column(c, &(u1_inv.column(c) + u_col * f));
            }
            m[(p, c)] = 0.0;
        }
        used[p] = true;
        perm[j] = p as u8;
        signs[j] = if pv > 0.0 { 1 } else { -1 };
    }
    for j in 0..3 {
        let r = perm[j] as usize;
        let s = 1.0 / m[(r, j)].abs();
        let row = u0.row(r) * s;
        u0.set_row(r, &row);
    }
    let u1 = u1_inv.try_inverse().ok_or(Error::Degenerate)?;
    Ok(NormalForm { p: SignedPerm { perm, signs }, u0, u1 })
}

/// Bruhat cell of `Q` with the default tolerance.
pub fn cell_id(q: &Rotation) -> Result<CellId> {
    Ok(CellId::new(normal_form(q, DEFAULT_TOL)?.p))
}

/// Classifies an exact signed permutation matrix (entries 0 or ±1 up to rounding).
fn classify_exact(q: &Rotation) -> SignedPerm {
    let mut perm = [0u8; 3];
    let mut signs = [1i8; 3];
    for j in 0..3 {
        let (r, v) = (0..3).map(|r| (r, q.0[(r, j)])).max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        perm[j] = r as u8;
        signs[j] = if v > 0.0 { 1 } else { -1 };
    }
    SignedPerm { perm, signs }
}

/// Minor test for the open cell `Bru_(13);2`: `Q₃₁ > 0` and `Q₂₁Q₃₂ − Q₂₂Q₃₁ > 0`.
pub fn is_open_convex(q: &Rotation) -> bool {
    let (q31, minor) = open_cell_minors(q);
    q31 > 0.0 && minor > 0.0
}

/// The pair `(Q₃₁, Q₂₁Q₃₂ − Q₂₂Q₃₁)` whose signs separate the four open cells.
pub fn open_cell_minors(q: &Rotation) -> (f64, f64) {
    let m = &q.0;
    (m[(2, 0)], m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// The 48 elements of `B̃₃⁺`.
pub fn lifted_group() -> &'static [UnitQuaternion] {
    static GROUP: OnceLock<Vec<UnitQuaternion>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let mut out = Vec::with_capacity(48);
        for axis in 0..4 {
            for s in [1.0, -1.0] {
                let mut c = [0.0; 4];
                c[axis] = s;
                out.push(UnitQuaternion::from_parts(c[0], c[1], c[2], c[3]));
            }
        }
        for a in 0..4 {
            for b in a + 1..4 {
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut c = [0.0; 4];
                    c[a] = sa * FRAC_1_SQRT_2;
                    c[b] = sb * FRAC_1_SQRT_2;
                    out.push(UnitQuaternion::from_parts(c[0], c[1], c[2], c[3]));
                }
            }
        }
        for bits in 0..16u8 {
            let c = [0, 1, 2, 3].map(|i| if bits >> i & 1 == 1 { -0.5 } else { 0.5 });
            out.push(UnitQuaternion::from_parts(c[0], c[1], c[2], c[3]));
        }
        out
    })
}

fn nearest_lifted(q: &UnitQuaternion) -> (UnitQuaternion, f64) {
    lifted_group()
        .iter()
        .map(|g| (*g, g.chordal(q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

/// The element of `B̃₃⁺` reached by lifting the in-cell path from `Π(z)` to its representative.
pub fn signed_cell(z: &UnitQuaternion) -> Result<LiftedSignedPerm> {
    let q = project(z);
    let nf = normal_form(&q, DEFAULT_TOL)?;
    let mut steps = 64;
    loop {
        let mut frames = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let s = i as f64 / steps as f64;
            let u = Matrix3::identity() * (1.0 - s) + nf.u0 * s;
            frames.push(act(&u, &q)?);
        }
        match lift_path(&frames, *z) {
            Ok(lifts) => {
                let (g, d) = nearest_lifted(lifts.last().unwrap());
                if d > 1e-6 {
                    return Err(Error::NoConvergence(format!("signed cell lift ended {d:.2e} from the group")));
                }
                return Ok(LiftedSignedPerm { q: g });
            }
            Err(Error::BranchAmbiguous { .. }) if steps < 1 << 16 => steps *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Cells whose closure realizes endpoint frames of convex arcs.
pub const CONVEX_CELLS: [&str; 6] = ["(13);2", "(123);6", "(132);0", "(23);2", "(12);4", "e;0"];
/// Cells of graftable matrices.
pub const GRAFTABLE_CELLS: [&str; 8] = ["(13);1", "(13);4", "(13);7", "(123);3", "(123);5", "(132);5", "(132);6", "e;5"];

/// The six convex elements of `B̃₃⁺`, the stably convex one first.
pub fn convex_lifts() -> [UnitQuaternion; 6] {
    [
        UnitQuaternion::new(0.0, 1.0, 0.0, 1.0),
        UnitQuaternion::new(-1.0, 1.0, -1.0, 1.0),
        UnitQuaternion::new(-1.0, 1.0, 1.0, 1.0),
        UnitQuaternion::new(-1.0, 1.0, 0.0, 0.0),
        UnitQuaternion::new(-1.0, 0.0, 0.0, 1.0),
        -UnitQuaternion::one(),
    ]
}

fn cell_in(q: &Rotation, names: &[&str]) -> Result<bool> {
    let c = cell_id(q)?;
    Ok(names.iter().any(|n| CellId::named(n) == c))
}

pub fn is_convex_matrix(q: &Rotation) -> Result<bool> {
    cell_in(q, &CONVEX_CELLS)
}

pub fn is_convex_quat(z: &UnitQuaternion) -> Result<bool> {
    let s = signed_cell(z)?.q;
    Ok(convex_lifts().iter().any(|c| c.chordal(&s) < 1e-9))
}

pub fn is_stably_convex_quat(z: &UnitQuaternion) -> Result<bool> {
    Ok(signed_cell(z)?.q.chordal(&convex_lifts()[0]) < 1e-9)
}

pub fn is_anticonvex_quat(z: &UnitQuaternion) -> Result<bool> {
    is_convex_quat(&-*z)
}

pub fn is_graftable(q: &Rotation) -> Result<bool> {
    cell_in(q, &GRAFTABLE_CELLS)
}

/// Normalized endpoint data `(θ₀, φ₀, θ₁, φ₁)` of the grafting constants for one open cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraftConstants {
    pub ell: u8,
    pub theta0: f64,
    pub phi0: f64,
    pub theta1: f64,
    pub phi1: f64,
}

impl GraftConstants {
    /// Constants for `ℓ ∈ {1, 4, 7}`, with `−π/2 < φ₀ < 0 < φ₁ < π/2`.
    pub fn for_cell(ell: u8) -> Result<Self> {
        let (theta1, phi0, phi1) = match ell {
            1 => (PI, -PI / 3.0, PI / 6.0),
            4 => (PI, -PI / 6.0, PI / 3.0),
            7 => (0.0, -PI / 4.0, PI / 4.0),
            _ => return Err(Error::NotGraftable(format!("no normalizer for cell (13);{ell}"))),
        };
        Ok(Self { ell, theta0: 0.0, phi0, theta1, phi1 })
    }

    /// `e^{θ₀𝐤/2} e^{φ₀𝐣/2}`.
    pub fn lift0(&self) -> UnitQuaternion {
        graft_lift0(self.theta0, self.phi0)
    }

    /// `e^{θ₁𝐤/2} e^{φ₁𝐣/2} e^{π𝐢/2}`.
    pub fn lift1(&self) -> UnitQuaternion {
        graft_lift1(self.theta1, self.phi1)
    }

    pub fn q0(&self) -> Rotation {
        project(&self.lift0())
    }

    pub fn q1(&self) -> Rotation {
        project(&self.lift1())
    }
}

pub fn graft_lift0(theta0: f64, phi0: f64) -> UnitQuaternion {
    exp_im(ImQuaternion::K.scale(theta0 / 2.0)) * exp_im(ImQuaternion::J.scale(phi0 / 2.0))
}

pub fn graft_lift1(theta1: f64, phi1: f64) -> UnitQuaternion {
    exp_im(ImQuaternion::K.scale(theta1 / 2.0))
        * exp_im(ImQuaternion::J.scale(phi1 / 2.0))
        * exp_im(ImQuaternion::I.scale(PI / 2.0))
}

/// The unique unipotent `U` with `π(Q₀,ℓ·U·Q₀⁻¹)(Qᵢ) = Qᵢ,ℓ`.
pub fn graft_normalizer(q0: &Rotation, q1: &Rotation, ell: u8) -> Result<Matrix3<f64>> {
    let consts = GraftConstants::for_cell(ell)?;
    let x = q0.transpose() * *q1;
    let expected = CellId::named(&format!("(13);{ell}"));
    let found = cell_id(&x)?;
    if found != expected {
        return Err(Error::WrongCell { expected: expected.to_string(), found: found.to_string() });
    }
    let y = consts.q0().transpose() * consts.q1();
    // (Yᵀ U X)_{rc} = Σ Y_{ar} U_{ab} X_{bc}; U = I + a E12 + b E13 + c E23.
    let (x, y) = (x.0, y.0);
    let entry = |r: usize, c: usize, ua: usize, ub: usize| y[(ua, r)] * x[(ub, c)];
    let targets = [(1, 0), (2, 0), (2, 1)];
    let mut lhs = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (row, &(r, c)) in targets.iter().enumerate() {
        lhs[(row, 0)] = entry(r, c, 0, 1);
        lhs[(row, 1)] = entry(r, c, 0, 2);
        lhs[(row, 2)] = entry(r, c, 1, 2);
        rhs[row] = -(0..3).map(|a| entry(r, c, a, a)).sum::<f64>();
    }
    let sol = lhs.lu().solve(&rhs).ok_or(Error::Degenerate)?;
    let u = Matrix3::new(1.0, sol[0], sol[1], 0.0, 1.0, sol[2], 0.0, 0.0, 1.0);
    let t = y.transpose() * u * x;
    if (0..3).any(|i| !(t[(i, i)] > 0.0)) {
        return Err(Error::WrongCell { expected: expected.to_string(), found: "sign mismatch".into() });
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn names_round_trip() {
        for p in SignedPerm::all() {
            assert_eq!(SignedPerm::parse(&p.to_string()).unwrap(), p);
        }
        assert_eq!(SignedPerm::all().len(), 24);
        assert!(SignedPerm::parse("(13);0").is_err());
    }

    #[test]
    fn open_cell_representative_layout() {
        let p = SignedPerm::parse("(13);2").unwrap();
        assert_eq!(p.matrix(), Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0));
        assert_eq!(p.inversions(), 3);
    }

    #[test]
    fn lifted_group_projects_into_b3() {
        let g = lifted_group();
        assert_eq!(g.len(), 48);
        let mut seen = std::collections::HashSet::new();
        for q in g {
            let r = project(q);
            let p = classify_exact(&r);
            assert_abs_diff_eq!(r.0, p.matrix(), epsilon = 1e-15);
            seen.insert(p);
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn quoted_lifts_name_their_cells() {
        let cases = [
            (UnitQuaternion::k_hat(), "(13);2"),
            (UnitQuaternion::new(1.0, 0.0, -1.0, 0.0), "(13);1"),
            (UnitQuaternion::new(-1.0, 0.0, 0.0, 1.0), "(12);4"),
            (UnitQuaternion::new(-1.0, 1.0, 0.0, 0.0), "(23);2"),
            (UnitQuaternion::new(-1.0, 1.0, 1.0, 1.0), "(132);0"),
            (UnitQuaternion::new(-1.0, 1.0, -1.0, 1.0), "(123);6"),
        ];
        for (q, name) in cases {
            assert_eq!(cell_id(&project(&q)).unwrap(), CellId::named(name), "{q:?}");
        }
    }

    #[test]
    fn convex_lifts_cover_convex_cells() {
        for (q, name) in convex_lifts().iter().zip(CONVEX_CELLS) {
            assert_eq!(cell_id(&project(q)).unwrap(), CellId::named(name));
        }
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form(&Rotation::identity(), DEFAULT_TOL).unwrap();
        assert_eq!(nf.p, SignedPerm::IDENTITY);
        assert_eq!(nf.u0, Matrix3::identity());
        assert_eq!(nf.u1, Matrix3::identity());
        let p = SignedPerm::parse("(13);2").unwrap();
        let nf = normal_form(&p.rotation(), DEFAULT_TOL).unwrap();
        assert_eq!(nf.p, p);
        assert_eq!(nf.u0, Matrix3::identity());
    }

    #[test]
    fn normal_form_transcript_is_exact() {
        let q = project(&UnitQuaternion::new(0.3, -0.6, 0.2, 0.7));
        let nf = normal_form(&q, DEFAULT_TOL).unwrap();
        let back = nf.u0 * q.0 * nf.u1.try_inverse().unwrap();
        assert_abs_diff_eq!(back, nf.p.matrix(), epsilon = 1e-12);
        assert_abs_diff_eq!(nf.u0.determinant(), 1.0, epsilon = 1e-12);
        for i in 0..3 {
            assert!(nf.u0[(i, i)] > 0.0 && nf.u1[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(nf.u0[(i, j)], 0.0);
                assert_eq!(nf.u1[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn near_boundary_is_reported() {
        let q = Rotation::about_y(5e-9);
        assert!(matches!(normal_form(&q, DEFAULT_TOL), Err(Error::NearBoundary { .. })));
    }

    #[test]
    fn cell_examples() {
        let f = project(&crate::curves::nu1_lift(0.5));
        assert_eq!(cell_id(&f).unwrap(), CellId::named("(13);2"));
        assert_eq!(cell_id(&f).unwrap().dim, 3);
        assert_eq!(cell_id(&Rotation::identity()).unwrap(), CellId::named("e;0"));
        let closed = project(&exp_im(ImQuaternion::K_HAT.scale(PI)));
        assert_eq!(cell_id(&closed).unwrap(), CellId::named("e;0"));
    }

    #[test]
    fn open_convex_minor_examples() {
        assert!(is_open_convex(&SignedPerm::parse("(13);2").unwrap().rotation()));
        assert!(!is_open_convex(&Rotation::identity()));
        assert!(!is_open_convex(&SignedPerm::parse("(13);7").unwrap().rotation()));
        let sign_pairs = [("(13);1", (1.0, -1.0)), ("(13);2", (1.0, 1.0)), ("(13);4", (-1.0, 1.0)), ("(13);7", (-1.0, -1.0))];
        for (name, (s1, s2)) in sign_pairs {
            let (a, b) = open_cell_minors(&SignedPerm::parse(name).unwrap().rotation());
            assert_eq!((a.signum(), b.signum()), (s1, s2), "{name}");
        }
    }

    #[test]
    fn signed_cell_examples() {
        let z = UnitQuaternion::new(1.0, 0.0, -1.0, 0.0);
        assert!(signed_cell(&z).unwrap().q.chordal(&z) < 1e-12);
        let m1 = -UnitQuaternion::one();
        assert!(signed_cell(&m1).unwrap().q.chordal(&m1) < 1e-12);
        let z = exp_im(ImQuaternion::K_HAT.scale(PI / 3.0));
        assert!(signed_cell(&z).unwrap().q.chordal(&UnitQuaternion::k_hat()) < 1e-12);
    }

    #[test]
    fn convexity_of_quaternions() {
        assert!(is_convex_quat(&-UnitQuaternion::one()).unwrap());
        assert!(!is_convex_quat(&UnitQuaternion::one()).unwrap());
        assert!(!is_convex_quat(&UnitQuaternion::i()).unwrap());
        assert!(!is_convex_quat(&-UnitQuaternion::i()).unwrap());
        assert!(is_stably_convex_quat(&UnitQuaternion::k_hat()).unwrap());
        assert!(!is_stably_convex_quat(&-UnitQuaternion::k_hat()).unwrap());
        assert!(is_anticonvex_quat(&UnitQuaternion::one()).unwrap());
    }

    #[test]
    fn graftable_examples() {
        assert!(is_graftable(&SignedPerm::parse("(13);7").unwrap().rotation()).unwrap());
        assert!(!is_graftable(&SignedPerm::parse("(13);2").unwrap().rotation()).unwrap());
        for ell in [1, 4, 7] {
            let c = GraftConstants::for_cell(ell).unwrap();
            let x = c.q0().transpose() * c.q1();
            assert_eq!(cell_id(&x).unwrap(), CellId::named(&format!("(13);{ell}")));
            assert!(is_graftable(&x).unwrap());
        }
    }

    #[test]
    fn normalizer_of_constants_is_identity() {
        for ell in [1, 4, 7] {
            let c = GraftConstants::for_cell(ell).unwrap();
            let u = graft_normalizer(&c.q0(), &c.q1(), ell).unwrap();
            assert_abs_diff_eq!(u, Matrix3::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn normalizer_rejects_wrong_cell() {
        let c = GraftConstants::for_cell(7).unwrap();
        assert!(matches!(graft_normalizer(&c.q0(), &c.q1(), 1), Err(Error::WrongCell { .. })));
    }

    #[test]
    fn literal_upper_sign_constants_land_in_stably_convex_cell() {
        // With φ₀ = π/4 and φ₁ = −π/4 the relative frame is P_(13);2, not P_(13);7.
        let q0 = project(&exp_im(ImQuaternion::J.scale(PI / 8.0)));
        let q1 = project(&(exp_im(ImQuaternion::J.scale(-PI / 8.0)) * exp_im(ImQuaternion::I.scale(PI / 2.0))));
        assert_eq!(cell_id(&(q0.transpose() * q1)).unwrap(), CellId::named("(13);2"));
    }
}
