//! Seeded random instances: unitaries, CP maps, nilpotent maps of a given type.
//!
//! Random entries of nilpotent instances have modulus in `[0.5, 1.5]` and a
//! uniform phase, which keeps powers `α^k(I)` well away from the zero-test
//! threshold and every rank decision well separated.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cpmap::KrausMap;
use crate::error::Result;
use crate::nilpotency::{check_basic_inequalities, synthesize, CPNilpotentType};
use crate::numerics::{ComplexMatrix, C64};

/// Deterministic generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// A CP map with `d` independent Gaussian Kraus coefficients.
pub fn random_cp_map(n: usize, d: usize, rng: &mut impl Rng) -> KrausMap {
    KrausMap::new((0..d).map(|_| gaussian_matrix(n, n, rng)).collect())
        .expect("nonempty list of square matrices")
}

fn random_entry(rng: &mut impl Rng) -> C64 {
    let modulus = rng.random_range(0.5..1.5);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    C64::from_polar(modulus, phase)
}

/// All types `(a_1, …, a_p)` with `Σ a_i = n` satisfying `a_{i+1} ≤ d·a_i`.
pub fn valid_types(n: usize, d: usize) -> Vec<CPNilpotentType> {
    fn extend(prefix: &mut Vec<usize>, left: usize, d: usize, out: &mut Vec<CPNilpotentType>) {
        if left == 0 {
            out.push(CPNilpotentType::new(prefix.clone()));
            return;
        }
        let cap = prefix.last().map_or(left, |&a| left.min(d * a));
        for a in 1..=cap {
            prefix.push(a);
            extend(prefix, left - a, d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 && d > 0 {
        extend(&mut Vec::new(), n, d, &mut out);
    }
    debug_assert!(out.iter().all(|t| check_basic_inequalities(t, d)));
    out
}

pub fn random_valid_type(n: usize, d: usize, rng: &mut impl Rng) -> CPNilpotentType {
    let all = valid_types(n, d);
    all[rng.random_range(0..all.len())].clone()
}

/// A nilpotent map of CP type exactly `t` with `d` coefficients, in a random orthonormal basis.
///
/// Starts from [`synthesize`], gives every structural entry a random value, adds
/// random entries from block `i+1` into blocks `1..i-1` (these keep the type),
/// and conjugates by a Haar unitary.
pub fn random_nilpotent_of_type(t: &CPNilpotentType, d: usize, rng: &mut impl Rng) -> Result<KrausMap> {
    let base = synthesize(t, d)?;
    let n = t.total();
    let mut block_of = Vec::with_capacity(n);
    for (b, &a) in t.entries().iter().enumerate() {
        block_of.extend(std::iter::repeat_n(b, a));
    }
    let kraus: Vec<ComplexMatrix> = base
        .kraus()
        .iter()
        .map(|l| {
            DMatrix::from_fn(n, n, |r, c| {
                if l[(r, c)].norm() > 0.0 || (block_of[r] + 1 < block_of[c] && rng.random_bool(0.3)) {
                    random_entry(rng)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    KrausMap::new(kraus)?.rotated(&random_unitary(n, rng))
}

/// A nilpotent map whose coefficients have random entries in the strictly
/// block-upper part of a random block structure, in a random orthonormal basis.
/// Its type is not prescribed.
pub fn random_nilpotent(n: usize, d: usize, rng: &mut impl Rng) -> KrausMap {
    let mut block = 0;
    let mut block_of = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.6) {
            block += 1;
        }
        block_of.push(block);
    }
    let kraus: Vec<ComplexMatrix> = (0..d)
        .map(|_| {
            DMatrix::from_fn(n, n, |r, c| {
                if block_of[r] < block_of[c] && rng.random_bool(0.7) {
                    random_entry(rng)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let alpha = KrausMap::new(kraus).expect("square coefficients");
    alpha.rotated(&random_unitary(n, rng)).expect("matching dimension")
}

/// Rescales a nonzero map so that `‖α(I)‖` is uniform in `[1/2, 1]`.
pub fn make_contractive(alpha: &KrausMap, rng: &mut impl Rng) -> KrausMap {
    let s = alpha.norm();
    if s == 0.0 {
        return alpha.clone();
    }
    let target: f64 = rng.random_range(0.5..=1.0);
    alpha.scaled((target / s).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilpotency::cp_type;
    use crate::numerics::Tolerance;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = trial_rng(1, 0);
        let u = random_unitary(5, &mut rng);
        assert!((u.adjoint() * &u - ComplexMatrix::identity(5, 5)).norm() < 1e-13);
    }

    #[test]
    fn valid_type_counts() {
        // compositions of 3 with a_{i+1} <= a_i: (3), (2,1), (1,1,1)
        assert_eq!(valid_types(3, 1).len(), 3);
        // every composition of 3 when d = 2 except none: (3),(2,1),(1,2),(1,1,1)
        assert_eq!(valid_types(3, 2).len(), 4);
        assert_eq!(valid_types(4, 4).len(), 8);
    }

    #[test]
    fn random_type_instances_keep_their_type() {
        let tol = Tolerance::default();
        let mut rng = trial_rng(3, 1);
        for _ in 0..40 {
            let n = rng.random_range(1..=6);
            let d = rng.random_range(1..=3);
            let t = random_valid_type(n, d, &mut rng);
            let alpha = random_nilpotent_of_type(&t, d, &mut rng).unwrap();
            assert_eq!(cp_type(&alpha, &tol).unwrap(), t);
        }
    }

    #[test]
    fn streams_are_deterministic() {
        let a = random_cp_map(3, 2, &mut trial_rng(9, 4));
        let b = random_cp_map(3, 2, &mut trial_rng(9, 4));
        let c = random_cp_map(3, 2, &mut trial_rng(9, 5));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
