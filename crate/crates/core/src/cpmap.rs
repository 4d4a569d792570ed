//! Completely positive maps in Kraus form `X ↦ Σ L_i* X L_i`.
//!
//! Superoperators use column-stacking vectorization: the entry `(r, c)` of an
//! `n×n` matrix lives at index `c·n + r`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use crate::error::{Error, Result};
use crate::numerics::{
    common_kernel, hermitian_eigen, hermitian_norm, kernel, matrix_unit, range, rank, unvec_col,
    vec_col, ComplexMatrix, Subspace, Tolerance, C64,
};

/// A CP map on `B(C^n)` given by an ordered, nonempty list of Kraus coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausMap {
    /// Every coefficient must be `n×n` with finite entries and the list must be nonempty.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidArgument("Kraus list is empty".into()));
        };
        let n = first.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for l in &kraus {
            if l.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, found: l.nrows() });
            }
            if l.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: l.ncols() });
            }
            if l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidArgument("Kraus coefficient has a non-finite entry".into()));
            }
        }
        Ok(Self { dim: n, kraus })
    }

    /// The zero map, represented by a single zero coefficient.
    pub fn zero(n: usize) -> Self {
        Self { dim: n, kraus: vec![ComplexMatrix::zeros(n, n)] }
    }

    pub fn identity(n: usize) -> Self {
        Self { dim: n, kraus: vec![ComplexMatrix::identity(n, n)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Number of coefficients in this representation (not necessarily the index).
    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_operand(&self, x: &ComplexMatrix) -> Result<()> {
        if x.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.nrows() });
        }
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.ncols() });
        }
        Ok(())
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(x)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim;
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, l| acc + l.adjoint() * x * l)
    }

    /// `α^k(X)` by `k` successive applications.
    pub fn power_apply(&self, k: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(x)?;
        let mut y = x.clone();
        for _ in 0..k {
            y = self.apply_unchecked(&y);
        }
        Ok(y)
    }

    /// `α(I)`.
    pub fn unit_image(&self) -> ComplexMatrix {
        self.apply_unchecked(&ComplexMatrix::identity(self.dim, self.dim))
    }

    /// The conjugate map `X ↦ Σ L_i X L_i*`.
    pub fn conjugate(&self) -> KrausMap {
        Self { dim: self.dim, kraus: self.kraus.iter().map(|l| l.adjoint()).collect() }
    }

    /// Multiplies every coefficient by `factor`, scaling the map by `factor²`.
    pub fn scaled(&self, factor: f64) -> KrausMap {
        Self { dim: self.dim, kraus: self.kraus.iter().map(|l| l * C64::new(factor, 0.0)).collect() }
    }

    /// Conjugates every coefficient by the unitary `u`: `L ↦ U L U*`.
    pub fn rotated(&self, u: &ComplexMatrix) -> Result<KrausMap> {
        self.check_operand(u)?;
        let ua = u.adjoint();
        Ok(Self { dim: self.dim, kraus: self.kraus.iter().map(|l| u * l * &ua).collect() })
    }

    /// Operator norm of `α(I)`, which is the norm of the map.
    pub fn norm(&self) -> f64 {
        hermitian_norm(&self.unit_image())
    }

    /// The same map rescaled so that `‖α(I)‖ = 1`, with the scale factor `‖α(I)‖`.
    /// Maps with `‖α(I)‖ <= atol` are returned unchanged with scale 0.
    pub fn normalized(&self, tol: &Tolerance) -> (KrausMap, f64) {
        let s = self.norm();
        if s <= tol.atol {
            (self.clone(), 0.0)
        } else {
            (self.scaled(1.0 / s.sqrt()), s)
        }
    }

    /// Choi matrix `Σ E_ij ⊗ α(E_ij)`.
    pub fn to_choi(&self) -> ChoiMatrix {
        let n = self.dim;
        let mut c = ComplexMatrix::zeros(n * n, n * n);
        // the vector Σ_i e_i ⊗ L* e_i is vec(L*)
        for l in &self.kraus {
            let w = vec_col(&l.adjoint());
            c += &w * w.adjoint();
        }
        ChoiMatrix { n, matrix: c }
    }

    /// Superoperator `Σ Lᵀ ⊗ L*` acting on column-stacked vectors.
    pub fn to_superoperator(&self) -> Superoperator {
        let n = self.dim;
        let mut s = ComplexMatrix::zeros(n * n, n * n);
        for l in &self.kraus {
            s += l.transpose().kronecker(&l.adjoint());
        }
        Superoperator { n, matrix: s }
    }

    /// Dimension of the metric operator space `span{L_i}`.
    pub fn index(&self, tol: &Tolerance) -> Result<usize> {
        rank(&self.coefficient_rows(), tol)
    }

    fn coefficient_rows(&self) -> ComplexMatrix {
        let n2 = self.dim * self.dim;
        let mut rows = ComplexMatrix::zeros(self.kraus.len(), n2);
        for (i, l) in self.kraus.iter().enumerate() {
            rows.row_mut(i).copy_from(&vec_col(l).transpose());
        }
        rows
    }

    /// An equivalent Kraus list with linearly independent coefficients.
    pub fn reduce(&self, tol: &Tolerance) -> Result<KrausMap> {
        self.to_choi().to_kraus(tol)
    }

    /// `ker α(I)`.
    pub fn unit_kernel(&self, tol: &Tolerance) -> Result<Subspace> {
        kernel(&self.unit_image(), tol)
    }

    /// `ran α(I)`.
    pub fn unit_range(&self, tol: &Tolerance) -> Result<Subspace> {
        range(&self.unit_image(), tol)
    }

    /// `{x : α(|x⟩⟨x|) = 0}`, the common kernel of the adjoint coefficients.
    pub fn annihilated_vectors(&self, tol: &Tolerance) -> Result<Subspace> {
        let adjoints: Vec<ComplexMatrix> = self.kraus.iter().map(|l| l.adjoint()).collect();
        common_kernel(&adjoints, tol)
    }
}

/// Choi matrix of a map on `B(C^n)`, of size `n²×n²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub n: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = integer_sqrt(matrix.nrows())?;
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self { n, matrix })
    }

    /// Kraus coefficients from the eigendecomposition of the Choi matrix.
    ///
    /// Each eigenpair `(λ, v)` above the cutoff contributes `L = (√λ · unvec(v))*`.
    /// Eigenpairs are taken in descending order of `λ` and each eigenvector is
    /// rotated so its first nonzero component is real and positive. A Choi matrix
    /// with no eigenvalue above the cutoff yields the zero map.
    pub fn to_kraus(&self, tol: &Tolerance) -> Result<KrausMap> {
        let n = self.n;
        let (values, vectors) = hermitian_eigen(&self.matrix);
        let lambda_max = values.last().copied().unwrap_or(0.0);
        let sigma_max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let lambda_min = values.first().copied().unwrap_or(0.0);
        if lambda_min < -tol.atol * sigma_max {
            return Err(Error::NotPsd { min_eigenvalue: lambda_min });
        }
        let mut descending: Vec<(f64, usize)> =
            values.iter().copied().enumerate().map(|(i, v)| (v, i)).collect();
        descending.sort_by(|a, b| b.0.total_cmp(&a.0));
        let magnitudes: Vec<f64> = {
            let mut m: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            m.sort_by(|a, b| b.total_cmp(a));
            m
        };
        crate::numerics::certified_split(&magnitudes, tol)?;
        let cutoff = tol.cutoff(lambda_max.max(0.0));
        let kraus: Vec<ComplexMatrix> = descending
            .iter()
            .take_while(|(v, _)| *v > cutoff)
            .map(|&(v, i)| {
                let mut col: Vec<C64> = vectors.column(i).iter().copied().collect();
                normalize_phase(&mut col);
                let k = unvec_col(&col, n, n) * C64::new(v.sqrt(), 0.0);
                k.adjoint()
            })
            .collect();
        if kraus.is_empty() {
            Ok(KrausMap::zero(n))
        } else {
            KrausMap::new(kraus)
        }
    }
}

/// Rotates a vector so that its first component of non-negligible magnitude is real positive.
fn normalize_phase(v: &mut [C64]) {
    let largest = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if largest == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-10 * largest).copied() {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn integer_sqrt(m: usize) -> Result<usize> {
    let n = (m as f64).sqrt().round() as usize;
    if n * n != m || n == 0 {
        return Err(Error::InvalidArgument(format!("{m} is not a positive perfect square")));
    }
    Ok(n)
}

/// A linear map on `B(C^n)` as an `n²×n²` matrix acting on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub n: usize,
    pub matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = integer_sqrt(matrix.nrows())?;
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self { n, matrix })
    }

    /// Tabulates a linear map on `n×n` matrices through its action on matrix units.
    pub fn from_fn(n: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut matrix = ComplexMatrix::zeros(n * n, n * n);
        for j in 0..n {
            for i in 0..n {
                let image = f(&matrix_unit(n, i, j));
                matrix.set_column(j * n + i, &vec_col(&image));
            }
        }
        Self { n, matrix }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.nrows() });
        }
        let v = &self.matrix * vec_col(x);
        Ok(unvec_col(v.as_slice(), self.n, self.n))
    }

    pub fn power(&self, k: usize) -> Superoperator {
        let n2 = self.n * self.n;
        let mut m = ComplexMatrix::identity(n2, n2);
        for _ in 0..k {
            m = &self.matrix * m;
        }
        Superoperator { n: self.n, matrix: m }
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let n = self.n;
        let mut c = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let image = unvec_col(self.matrix.column(j * n + i).as_slice(), n, n);
                c.view_mut((i * n, j * n), (n, n)).copy_from(&image);
            }
        }
        ChoiMatrix { n, matrix: c }
    }

    /// Frobenius distance between the two matrices.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real_matrix;

    fn shift_map() -> KrausMap {
        KrausMap::new(vec![real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])]).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn apply_examples() {
        let x = real_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(KrausMap::identity(2).apply(&x).unwrap(), x);
        let y = shift_map().apply(&ComplexMatrix::identity(2, 2)).unwrap();
        assert_eq!(y, real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        assert_eq!(shift_map().apply(&ComplexMatrix::zeros(2, 2)).unwrap(), ComplexMatrix::zeros(2, 2));
        assert!(matches!(
            shift_map().apply(&ComplexMatrix::zeros(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn power_apply_examples() {
        let x = real_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shift_map().power_apply(0, &x).unwrap(), x);
        let id = ComplexMatrix::identity(2, 2);
        assert_eq!(shift_map().power_apply(2, &id).unwrap(), ComplexMatrix::zeros(2, 2));
        assert_eq!(KrausMap::identity(2).power_apply(5, &x).unwrap(), x);
    }

    #[test]
    fn choi_examples() {
        let c = KrausMap::identity(2).to_choi();
        let mut expected = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected += matrix_unit(2, i, j).kronecker(&matrix_unit(2, i, j));
            }
        }
        assert!((&c.matrix - &expected).norm() < 1e-15);
        assert_eq!(rank(&c.matrix, &tol()).unwrap(), 1);
        assert!((c.matrix.trace().re - 2.0).abs() < 1e-15);

        assert_eq!(KrausMap::zero(2).to_choi().matrix, ComplexMatrix::zeros(4, 4));

        let s = shift_map().to_choi();
        assert!(crate::numerics::is_psd(&s.matrix, &tol()));
        assert!((s.matrix.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn choi_agrees_with_direct_summation() {
        let a = KrausMap::new(vec![
            real_matrix(2, 2, &[1.0, 2.0, 0.5, -1.0]),
            real_matrix(2, 2, &[0.0, 1.0, 3.0, 0.0]),
        ])
        .unwrap();
        let mut direct = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                direct += matrix_unit(2, i, j).kronecker(&a.apply(&matrix_unit(2, i, j)).unwrap());
            }
        }
        assert!((a.to_choi().matrix - &direct).norm() < 1e-13);
        assert!((a.to_superoperator().to_choi().matrix - direct).norm() < 1e-13);
    }

    #[test]
    fn from_choi_examples() {
        let zero = ChoiMatrix::new(ComplexMatrix::zeros(4, 4)).unwrap().to_kraus(&tol()).unwrap();
        assert_eq!(zero, KrausMap::zero(2));

        let id = KrausMap::identity(2);
        let back = id.to_choi().to_kraus(&tol()).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back.to_superoperator().distance(&id.to_superoperator()) < 1e-12);

        let back = shift_map().to_choi().to_kraus(&tol()).unwrap();
        assert_eq!(back.len(), 1);
        let l = &back.kraus()[0];
        let magnitudes: Vec<f64> = l.iter().map(|z| z.norm()).collect();
        // column-major: entry (0,1) is at index 2
        assert!((magnitudes[2] - 1.0).abs() < 1e-12);
        assert!(magnitudes[0] < 1e-12 && magnitudes[1] < 1e-12 && magnitudes[3] < 1e-12);
    }

    #[test]
    fn from_choi_rejects_indefinite() {
        let c = ChoiMatrix::new(real_matrix(1, 1, &[-1.0])).unwrap();
        assert!(matches!(c.to_kraus(&tol()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn index_examples() {
        let id = ComplexMatrix::identity(2, 2);
        assert_eq!(KrausMap::new(vec![id.clone(), id]).unwrap().index(&tol()).unwrap(), 1);
        let units = KrausMap::new(vec![matrix_unit(3, 0, 1), matrix_unit(3, 0, 2)]).unwrap();
        assert_eq!(units.index(&tol()).unwrap(), 2);
        assert_eq!(KrausMap::zero(3).index(&tol()).unwrap(), 0);
    }

    #[test]
    fn reduce_examples() {
        let id = ComplexMatrix::identity(2, 2);
        let doubled = KrausMap::new(vec![id.clone(), id]).unwrap();
        let r = doubled.reduce(&tol()).unwrap();
        assert_eq!(r.len(), 1);
        let target = KrausMap::identity(2).to_superoperator().matrix * C64::new(2.0, 0.0);
        assert!((r.to_superoperator().matrix - target).norm() < 1e-12);

        let units = KrausMap::new(vec![matrix_unit(3, 0, 1), matrix_unit(3, 0, 2)]).unwrap();
        assert_eq!(units.reduce(&tol()).unwrap().index(&tol()).unwrap(), 2);

        let with_zero =
            KrausMap::new(vec![ComplexMatrix::zeros(2, 2), shift_map().kraus()[0].clone()]).unwrap();
        assert_eq!(with_zero.reduce(&tol()).unwrap().len(), 1);
    }

    #[test]
    fn conjugate_examples() {
        let diag = KrausMap::new(vec![real_matrix(2, 2, &[1.0, 0.0, 0.0, 2.0])]).unwrap();
        assert_eq!(diag.conjugate(), diag);
        assert_eq!(shift_map().conjugate().kraus()[0], real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        let a = KrausMap::new(vec![real_matrix(2, 2, &[1.0, 2.0, 0.5, -1.0])]).unwrap();
        assert_eq!(a.conjugate().conjugate(), a);
    }

    #[test]
    fn superoperator_examples() {
        assert_eq!(KrausMap::identity(2).to_superoperator().matrix, ComplexMatrix::identity(4, 4));
        assert_eq!(KrausMap::zero(2).to_superoperator().matrix, ComplexMatrix::zeros(4, 4));
        let s = shift_map().to_superoperator().matrix;
        let nonzero: Vec<(usize, usize)> = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| s[(r, c)].norm() > 0.0)
            .collect();
        // α(E_11) = E_22: vec index 0 goes to vec index 3
        assert_eq!(nonzero, vec![(3, 0)]);
        assert_eq!(s[(3, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn kernel_and_range_examples() {
        let t = tol();
        assert_eq!(KrausMap::identity(2).unit_kernel(&t).unwrap().dim(), 0);
        let k = shift_map().unit_kernel(&t).unwrap();
        assert!(k.distance(&Subspace::coordinate(2, &[0])) < 1e-12);
        assert_eq!(KrausMap::zero(3).unit_kernel(&t).unwrap().dim(), 3);

        assert_eq!(KrausMap::identity(2).unit_range(&t).unwrap().dim(), 2);
        let r = shift_map().unit_range(&t).unwrap();
        assert!(r.distance(&Subspace::coordinate(2, &[1])) < 1e-12);
        assert_eq!(KrausMap::zero(2).unit_range(&t).unwrap().dim(), 0);

        assert_eq!(KrausMap::identity(2).annihilated_vectors(&t).unwrap().dim(), 0);
        let a = shift_map().annihilated_vectors(&t).unwrap();
        assert!(a.distance(&Subspace::coordinate(2, &[1])) < 1e-12);
        assert_eq!(KrausMap::zero(2).annihilated_vectors(&t).unwrap().dim(), 2);
    }

    #[test]
    fn constructor_validation() {
        assert!(KrausMap::new(vec![]).is_err());
        assert!(KrausMap::new(vec![ComplexMatrix::zeros(2, 3)]).is_err());
        assert!(KrausMap::new(vec![ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(3, 3)]).is_err());
        let mut bad = ComplexMatrix::zeros(2, 2);
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(KrausMap::new(vec![bad]).is_err());
    }
}
