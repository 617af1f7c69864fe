//! Seeded random quaternions, rotations and Bruhat-cell samples.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bruhat::SignedPerm;
use crate::error::Result;
use crate::rotations::{project, Rotation, UnitQuaternion};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on `S³` by rejection from the 4-cube.
pub fn random_quaternion(rng: &mut impl Rng) -> UnitQuaternion {
    loop {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = c.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return UnitQuaternion::new(c[0], c[1], c[2], c[3]);
        }
    }
}

/// Haar-distributed rotation.
pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    project(&random_quaternion(rng))
}

/// Upper triangular with diagonal in `[½, 2]` and off-diagonal entries in `[−2, 2]`.
pub fn random_upper(rng: &mut impl Rng) -> Matrix3<f64> {
    let mut u = Matrix3::zeros();
    for i in 0..3 {
        u[(i, i)] = rng.random_range(0.5..2.0);
        for j in i + 1..3 {
            u[(i, j)] = rng.random_range(-2.0..2.0);
        }
    }
    u
}

/// A rotation in a known cell: `GS(U₀·P·U₁)`.
#[derive(Debug, Clone, Copy)]
pub struct CellSample {
    pub perm: SignedPerm,
    pub q: Rotation,
}

pub fn cell_sample(rng: &mut impl Rng) -> Result<CellSample> {
    let all = SignedPerm::all();
    let perm = all[rng.random_range(0..all.len())];
    cell_sample_in(rng, perm)
}

pub fn cell_sample_in(rng: &mut impl Rng, perm: SignedPerm) -> Result<CellSample> {
    let m = random_upper(rng) * perm.matrix() * random_upper(rng);
    Ok(CellSample { perm, q: Rotation::gram_schmidt(&m)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruhat::{normal_form, DEFAULT_TOL};

    #[test]
    fn samples_are_reproducible() {
        let a: Vec<_> = (0..5).map({
            let mut r = rng(7);
            move |_| random_quaternion(&mut r)
        }).collect();
        let mut r = rng(7);
        for q in a {
            assert_eq!(q, random_quaternion(&mut r));
        }
    }

    #[test]
    fn cell_samples_land_in_their_cell() {
        let mut r = rng(3);
        let mut hits = 0;
        for _ in 0..200 {
            let s = cell_sample(&mut r).unwrap();
            if let Ok(nf) = normal_form(&s.q, DEFAULT_TOL) {
                assert_eq!(nf.p, s.perm);
                hits += 1;
            }
        }
        assert!(hits > 150);
    }
}
