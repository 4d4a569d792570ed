//! Roots of pure states: unital CP maps `τ` with `τ^p(X) = ⟨u, Xu⟩ I`.
//!
//! A root compresses to a nilpotent CP map on `u^⊥`, and a contractive
//! nilpotent map `α` on `C^m` yields a root on `C ⊕ C^m` through
//! `τ([[x, ·], [·, X]]) = [[x, 0], [0, α(X) + x(I − α(I))]]`.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cpmap::{KrausMap, Superoperator};
use crate::error::{Error, Result};
use crate::nilpotency::nilpotency_order;
use crate::numerics::{hermitian_eigen, is_psd, matrix_unit, ComplexMatrix, Tolerance, C64, ONE};

/// Why a candidate is not a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootFailure {
    NotCP,
    NotUnital,
    PowerMismatch,
    /// `u` is not a unit vector of the right length, or the order claim is zero.
    InvalidCandidate,
}

impl fmt::Display for RootFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RootFailure::NotCP => "NotCP",
            RootFailure::NotUnital => "NotUnital",
            RootFailure::PowerMismatch => "PowerMismatch",
            RootFailure::InvalidCandidate => "InvalidCandidate",
        };
        f.write_str(s)
    }
}

/// The map of a root candidate, either in Kraus form or as a bare superoperator.
#[derive(Debug, Clone, PartialEq)]
pub enum RootMap {
    Kraus(KrausMap),
    Superoperator(Superoperator),
}

impl RootMap {
    pub fn dim(&self) -> usize {
        match self {
            RootMap::Kraus(k) => k.dim(),
            RootMap::Superoperator(s) => s.n,
        }
    }

    pub fn to_superoperator(&self) -> Superoperator {
        match self {
            RootMap::Kraus(k) => k.to_superoperator(),
            RootMap::Superoperator(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCandidate {
    pub tau: RootMap,
    pub u: DVector<C64>,
    /// The claimed `p` in `τ^p(X) = ⟨u, Xu⟩ I`.
    pub order: usize,
}

impl RootCandidate {
    /// A copy of the candidate with Kraus coefficients extracted from the Choi matrix.
    pub fn with_kraus_form(&self, tol: &Tolerance) -> Result<RootCandidate> {
        let kraus = match &self.tau {
            RootMap::Kraus(k) => k.clone(),
            RootMap::Superoperator(s) => s.to_choi().to_kraus(tol)?,
        };
        Ok(RootCandidate { tau: RootMap::Kraus(kraus), u: self.u.clone(), order: self.order })
    }
}

/// Checks complete positivity, unitality and `τ^p(E_ij) = ū_i u_j I` on every matrix unit.
pub fn check_root(r: &RootCandidate, tol: &Tolerance) -> std::result::Result<(), RootFailure> {
    let n = r.tau.dim();
    if r.order == 0 || r.u.len() != n || (r.u.norm() - 1.0).abs() > tol.atol.max(1e-12) {
        return Err(RootFailure::InvalidCandidate);
    }
    let s = r.tau.to_superoperator();
    if let RootMap::Superoperator(_) = r.tau {
        if !is_psd(&s.to_choi().matrix, tol) {
            return Err(RootFailure::NotCP);
        }
    }
    let id = ComplexMatrix::identity(n, n);
    let unit = s.apply(&id).map_err(|_| RootFailure::InvalidCandidate)?;
    if (unit - &id).norm() > tol.atol {
        return Err(RootFailure::NotUnital);
    }
    if power_residual(&s.power(r.order), &r.u) > tol.atol {
        return Err(RootFailure::PowerMismatch);
    }
    Ok(())
}

pub fn is_root_of_state(r: &RootCandidate, tol: &Tolerance) -> bool {
    check_root(r, tol).is_ok()
}

/// Largest `‖S(E_ij) − ū_i u_j I‖` over all matrix units.
pub fn power_residual(s: &Superoperator, u: &DVector<C64>) -> f64 {
    let n = s.n;
    let id = ComplexMatrix::identity(n, n);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let image = s.apply(&matrix_unit(n, i, j)).expect("square operand");
            let state = u[i].conj() * u[j];
            worst = worst.max((image - &id * state).norm());
        }
    }
    worst
}

/// Columns `2..n` of a Householder reflection sending `e_1` to `u` up to a phase:
/// an isometry `C^{n-1} → C^n` onto `u^⊥`.
pub fn complement_isometry(u: &DVector<C64>) -> ComplexMatrix {
    let n = u.len();
    let lead = u[0];
    let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { ONE };
    // v = phase·u has real nonnegative first entry
    let v = u * phase;
    let mut w = -v;
    w[0] += ONE;
    let w2 = w.norm_squared();
    let mut h = ComplexMatrix::identity(n, n);
    if w2 > 0.0 {
        h -= (&w * w.adjoint()) * C64::new(2.0 / w2, 0.0);
    }
    h.columns(1, n - 1).into_owned()
}

/// The compression `Y ↦ V* τ(V Y V*) V` of a root to `u^⊥`.
pub fn compress_to_nilpotent(r: &RootCandidate, tol: &Tolerance) -> Result<KrausMap> {
    check_root(r, tol).map_err(Error::NotARoot)?;
    let n = r.tau.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("u^⊥ is zero-dimensional".into()));
    }
    let v = complement_isometry(&r.u);
    match &r.tau {
        RootMap::Kraus(k) => {
            let va = v.adjoint();
            KrausMap::new(k.kraus().iter().map(|l| &va * l * &v).collect())
        }
        RootMap::Superoperator(s) => {
            let va = v.adjoint();
            let compressed = Superoperator::from_fn(n - 1, |y| {
                let lifted = &v * y * &va;
                &va * s.apply(&lifted).expect("square operand") * &v
            });
            compressed.to_choi().to_kraus(tol)
        }
    }
}

/// The root `τ` on `C ⊕ C^m` of the state at `u = e_1`, built from a contractive nilpotent `α`.
pub fn build_root(alpha: &KrausMap, tol: &Tolerance) -> Result<RootCandidate> {
    let m = alpha.dim();
    let defect = ComplexMatrix::identity(m, m) - alpha.unit_image();
    if !is_psd(&defect, tol) {
        let (values, _) = hermitian_eigen(&defect);
        return Err(Error::NotContractive { min_eigenvalue: values[0] });
    }
    let p = nilpotency_order(alpha, tol)?.ok_or(Error::NotNilpotent)?;
    let tau = root_superoperator(alpha, &defect);
    let mut u = DVector::zeros(m + 1);
    u[0] = ONE;
    Ok(RootCandidate { tau: RootMap::Superoperator(tau), u, order: p })
}

fn root_superoperator(alpha: &KrausMap, defect: &ComplexMatrix) -> Superoperator {
    let m = alpha.dim();
    Superoperator::from_fn(m + 1, |x| {
        let corner = x[(0, 0)];
        let tail = x.view((1, 1), (m, m)).into_owned();
        let mut out = ComplexMatrix::zeros(m + 1, m + 1);
        out[(0, 0)] = corner;
        let lower = alpha.apply(&tail).expect("square operand") + defect * corner;
        out.view_mut((1, 1), (m, m)).copy_from(&lower);
        out
    })
}

/// `τ^k(X) = [[x, 0], [0, α^k(X) + x(I − α^k(I))]]` on every matrix unit.
pub fn check_power_formula(alpha: &KrausMap, k: usize, tol: &Tolerance) -> Result<bool> {
    let root = build_root(alpha, tol)?;
    let s = root.tau.to_superoperator().power(k);
    let m = alpha.dim();
    let id = ComplexMatrix::identity(m, m);
    let alpha_k_unit = alpha.power_apply(k, &id)?;
    for i in 0..=m {
        for j in 0..=m {
            let x = matrix_unit(m + 1, i, j);
            let corner = x[(0, 0)];
            let tail = x.view((1, 1), (m, m)).into_owned();
            let mut expected = ComplexMatrix::zeros(m + 1, m + 1);
            expected[(0, 0)] = corner;
            let lower = alpha.power_apply(k, &tail)? + (&id - &alpha_k_unit) * corner;
            expected.view_mut((1, 1), (m, m)).copy_from(&lower);
            if (s.apply(&x)? - expected).norm() > tol.atol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilpotency::{cp_type, synthesize, CPNilpotentType};
    use crate::numerics::real_matrix;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn shift() -> KrausMap {
        KrausMap::new(vec![real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])]).unwrap()
    }

    fn e1(n: usize) -> DVector<C64> {
        let mut u = DVector::zeros(n);
        u[0] = ONE;
        u
    }

    #[test]
    fn shift_root_is_a_square_root() {
        let r = build_root(&shift(), &tol()).unwrap();
        assert_eq!(r.order, 2);
        assert_eq!(r.tau.dim(), 3);
        assert!(is_root_of_state(&r, &tol()));
        assert!(power_residual(&r.tau.to_superoperator().power(2), &r.u) < 1e-14);
        let early = RootCandidate { order: 1, ..r.clone() };
        assert_eq!(check_root(&early, &tol()), Err(RootFailure::PowerMismatch));
    }

    #[test]
    fn identity_is_not_a_root() {
        for p in 1..4 {
            let r = RootCandidate { tau: RootMap::Kraus(KrausMap::identity(2)), u: e1(2), order: p };
            assert_eq!(check_root(&r, &tol()), Err(RootFailure::PowerMismatch));
        }
    }

    #[test]
    fn state_is_its_own_first_root() {
        let n = 3;
        let u = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let uu = u.clone();
        let tau = Superoperator::from_fn(n, |x| {
            let value = (uu.adjoint() * x * &uu)[(0, 0)];
            ComplexMatrix::identity(n, n) * value
        });
        let r = RootCandidate { tau: RootMap::Superoperator(tau), u, order: 1 };
        assert!(is_root_of_state(&r, &tol()));
        let alpha = compress_to_nilpotent(&r, &tol()).unwrap();
        assert_eq!(alpha.dim(), 2);
        assert_eq!(nilpotency_order(&alpha, &tol()).unwrap(), Some(1));
    }

    #[test]
    fn failure_reasons() {
        let not_unital = RootCandidate { tau: RootMap::Kraus(shift()), u: e1(2), order: 2 };
        assert_eq!(check_root(&not_unital, &tol()), Err(RootFailure::NotUnital));
        let transpose = Superoperator::from_fn(2, |x| x.transpose());
        let r = RootCandidate { tau: RootMap::Superoperator(transpose), u: e1(2), order: 1 };
        assert_eq!(check_root(&r, &tol()), Err(RootFailure::NotCP));
        let bad_u = RootCandidate { tau: RootMap::Kraus(KrausMap::identity(2)), u: e1(2) * C64::new(2.0, 0.0), order: 1 };
        assert_eq!(check_root(&bad_u, &tol()), Err(RootFailure::InvalidCandidate));
    }

    #[test]
    fn compression_recovers_shift() {
        let r = build_root(&shift(), &tol()).unwrap();
        let alpha = compress_to_nilpotent(&r, &tol()).unwrap();
        assert_eq!(nilpotency_order(&alpha, &tol()).unwrap(), Some(2));
        assert!(alpha.to_superoperator().distance(&shift().to_superoperator()) < 1e-12);
        // same through the Kraus form of τ
        let kr = r.with_kraus_form(&tol()).unwrap();
        assert!(is_root_of_state(&kr, &tol()));
        let alpha = compress_to_nilpotent(&kr, &tol()).unwrap();
        assert!(alpha.to_superoperator().distance(&shift().to_superoperator()) < 1e-12);
    }

    #[test]
    fn two_dimensional_root_compresses_to_zero() {
        let r = build_root(&KrausMap::zero(1), &tol()).unwrap();
        assert_eq!(r.order, 1);
        let alpha = compress_to_nilpotent(&r, &tol()).unwrap();
        assert!(alpha.kraus().iter().all(|l| l.norm() < 1e-14));
    }

    #[test]
    fn zero_map_root_is_the_state() {
        let r = build_root(&KrausMap::zero(2), &tol()).unwrap();
        assert_eq!(r.order, 1);
        assert!(is_root_of_state(&r, &tol()));
        let x = real_matrix(3, 3, &[2.0, 1.0, 1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 7.0]);
        let y = r.tau.to_superoperator().apply(&x).unwrap();
        assert!((y - ComplexMatrix::identity(3, 3) * C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn build_root_preconditions() {
        assert_eq!(build_root(&KrausMap::identity(2), &tol()).unwrap_err(), Error::NotNilpotent);
        let err = build_root(&shift().scaled(2.0), &tol()).unwrap_err();
        assert!(matches!(err, Error::NotContractive { .. }));
    }

    #[test]
    fn power_formula_examples() {
        assert!(check_power_formula(&shift(), 1, &tol()).unwrap());
        assert!(check_power_formula(&shift(), 2, &tol()).unwrap());
        let one_two = synthesize(&CPNilpotentType::new(vec![1, 2]), 2).unwrap();
        // α(I) = diag(0,1,1) is already contractive; scaling keeps it so
        let scaled = one_two.scaled(std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(cp_type(&scaled, &tol()).unwrap().entries(), &[1, 2]);
        assert!(check_power_formula(&scaled, 2, &tol()).unwrap());
        let r = build_root(&scaled, &tol()).unwrap();
        assert!(is_root_of_state(&r, &tol()));
    }

    #[test]
    fn householder_completion_is_orthogonal_to_u() {
        let u = DVector::from_vec(vec![C64::new(0.0, 0.6), C64::new(0.48, 0.0), C64::new(0.0, -0.64)]);
        let v = complement_isometry(&u);
        assert!((v.adjoint() * &v - ComplexMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((u.adjoint() * &v).norm() < 1e-14);
        assert_eq!(complement_isometry(&e1(3)), ComplexMatrix::identity(3, 3).columns(1, 2).into_owned());
    }
}
