//! Tolerance-aware dense linear algebra.
//!
//! Every integer produced here (a rank, a kernel dimension) comes from a
//! singular-value split at `max(atol, rtol * sigma_max)` that must be
//! separated by at least `gap_ratio`: the smallest kept value divided by the
//! largest dropped value. When the split is not separated the routine returns
//! [`Error::IllConditioned`] instead of guessing.

use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix; the carrier for operators, Kraus coefficients and superoperators.
pub type ComplexMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Cutoffs used for every rank decision.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerance {
    /// Relative singular-value cutoff.
    pub rtol: f64,
    /// Absolute cutoff.
    pub atol: f64,
    /// Minimum ratio of the smallest kept to the largest dropped singular value.
    pub gap_ratio: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, gap_ratio: 1e4 }
    }
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64, gap_ratio: f64) -> Result<Self> {
        if !(rtol >= 0.0 && atol >= 0.0 && rtol.is_finite() && atol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be finite and nonnegative (rtol={rtol}, atol={atol})"
            )));
        }
        if !(gap_ratio >= 1.0 && gap_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("gap_ratio must be >= 1, got {gap_ratio}")));
        }
        Ok(Self { rtol, atol, gap_ratio })
    }

    /// The rank cutoff for a spectrum whose largest value is `sigma_max`.
    pub fn cutoff(&self, sigma_max: f64) -> f64 {
        self.atol.max(self.rtol * sigma_max)
    }
}

/// Splits a descending list of nonnegative values at the tolerance cutoff and
/// returns how many are kept, after checking the gap certificate.
pub fn certified_split(descending: &[f64], tol: &Tolerance) -> Result<usize> {
    let sigma_max = descending.first().copied().unwrap_or(0.0);
    let cutoff = tol.cutoff(sigma_max);
    let kept = descending.iter().take_while(|&&s| s > cutoff).count();
    if kept > 0 && kept < descending.len() {
        let smallest_kept = descending[kept - 1];
        let largest_dropped = descending[kept];
        if largest_dropped > 0.0 && smallest_kept < tol.gap_ratio * largest_dropped {
            return Err(Error::IllConditioned(format!(
                "singular values {smallest_kept:e} (kept) and {largest_dropped:e} (dropped) \
                 are separated by less than the gap ratio {}",
                tol.gap_ratio
            )));
        }
    }
    Ok(kept)
}

/// A subspace of C^n stored as a matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: ComplexMatrix,
}

impl Subspace {
    /// Wraps a basis, checking orthonormality to `atol` per entry.
    pub fn new(basis: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let gram = basis.adjoint() * &basis;
        let k = basis.ncols();
        let dev = max_abs(&(gram - ComplexMatrix::identity(k, k)));
        if dev > tol.atol.max(64.0 * f64::EPSILON) {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (deviation {dev:e})"
            )));
        }
        if k > basis.nrows() {
            return Err(Error::InvalidArgument("more basis vectors than ambient dimension".into()));
        }
        Ok(Self { ambient_dim: basis.nrows(), basis })
    }

    pub(crate) fn from_orthonormal(basis: ComplexMatrix) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_orthonormal(ComplexMatrix::zeros(n, 0))
    }

    pub fn full(n: usize) -> Self {
        Self::from_orthonormal(ComplexMatrix::identity(n, n))
    }

    /// Span of the standard basis vectors with the given (0-based) indices.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut basis = ComplexMatrix::zeros(n, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            basis[(i, col)] = ONE;
        }
        Self::from_orthonormal(basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    /// Orthogonal projection onto the subspace.
    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Frobenius norm of the part of `self` lying outside `other`; zero iff `self` is contained in `other`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        let outside = &self.basis - other.projector() * &self.basis;
        outside.norm()
    }

    /// Frobenius distance between the two projections.
    pub fn distance(&self, other: &Subspace) -> f64 {
        (self.projector() - other.projector()).norm()
    }

    pub fn orthogonal_complement(&self, tol: &Tolerance) -> Result<Subspace> {
        kernel(&self.basis.adjoint(), tol)
    }

    /// Direct sum of mutually orthogonal subspaces.
    pub fn direct_sum(parts: &[&Subspace]) -> Result<Subspace> {
        let n = parts.first().map(|s| s.ambient_dim).unwrap_or(0);
        let cols: usize = parts.iter().map(|s| s.dim()).sum();
        let mut basis = ComplexMatrix::zeros(n, cols);
        let mut at = 0;
        for s in parts {
            if s.ambient_dim != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.ambient_dim });
            }
            basis.columns_mut(at, s.dim()).copy_from(&s.basis);
            at += s.dim();
        }
        Ok(Self::from_orthonormal(basis))
    }
}

fn to_faer(a: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn no_convergence() -> Error {
    Error::IllConditioned("singular value decomposition did not converge".into())
}

/// Singular values in descending order, padded with zeros to `cols`, and all
/// `cols` right singular vectors as columns.
fn right_singular_system(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = a.ncols();
    let svd = to_faer(a).svd().map_err(|_| no_convergence())?;
    let s = svd.S().column_vector();
    let mut values: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    values.resize(n, 0.0);
    Ok((values, from_faer(svd.V())))
}

/// Certified numerical null space of `a`.
pub fn kernel(a: &ComplexMatrix, tol: &Tolerance) -> Result<Subspace> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Ok(Subspace::full(n));
    }
    let (values, v) = right_singular_system(a)?;
    let rank = certified_split(&values, tol)?;
    Ok(Subspace::from_orthonormal(v.columns(rank, n - rank).into_owned()))
}

/// Certified numerical column space of `a`.
pub fn range(a: &ComplexMatrix, tol: &Tolerance) -> Result<Subspace> {
    let m = a.nrows();
    if m == 0 || a.ncols() == 0 {
        return Ok(Subspace::zero(m));
    }
    let svd = to_faer(a).thin_svd().map_err(|_| no_convergence())?;
    let s = svd.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let rank = certified_split(&values, tol)?;
    Ok(Subspace::from_orthonormal(from_faer(svd.U().subcols(0, rank))))
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(vec![]);
    }
    let mut s = to_faer(a).singular_values().map_err(|_| no_convergence())?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Certified numerical rank.
pub fn rank(a: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    certified_split(&singular_values(a)?, tol)
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.ncols() != cols {
            return Err(Error::DimensionMismatch { expected: cols, found: b.ncols() });
        }
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    Ok(out)
}

/// Intersection of the kernels of all matrices.
pub fn common_kernel(mats: &[ComplexMatrix], tol: &Tolerance) -> Result<Subspace> {
    let refs: Vec<&ComplexMatrix> = mats.iter().collect();
    kernel(&vstack(&refs)?, tol)
}

fn check_same_ambient(s: &Subspace, t: &Subspace) -> Result<()> {
    if s.ambient_dim != t.ambient_dim {
        return Err(Error::DimensionMismatch { expected: s.ambient_dim, found: t.ambient_dim });
    }
    Ok(())
}

/// `S ∩ T^⊥`, as the kernel of the stacked projections `(I - P_S; P_T)`.
pub fn intersect_with_complement(s: &Subspace, t: &Subspace, tol: &Tolerance) -> Result<Subspace> {
    check_same_ambient(s, t)?;
    let n = s.ambient_dim;
    let outside_s = ComplexMatrix::identity(n, n) - s.projector();
    kernel(&vstack(&[&outside_s, &t.projector()])?, tol)
}

/// `S ∩ T`, as the kernel of `(I - P_S; I - P_T)`.
pub fn intersect(s: &Subspace, t: &Subspace, tol: &Tolerance) -> Result<Subspace> {
    check_same_ambient(s, t)?;
    let n = s.ambient_dim;
    let id = ComplexMatrix::identity(n, n);
    let outside_s = &id - s.projector();
    let outside_t = &id - t.projector();
    kernel(&vstack(&[&outside_s, &outside_t])?, tol)
}

/// Largest entry modulus.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest entry magnitude of `a - a*`.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `a`.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], ComplexMatrix::zeros(0, 0));
    }
    let herm = (a + a.adjoint()).unscale(2.0);
    let eig = to_faer(&herm)
        .self_adjoint_eigen(Side::Lower)
        .expect("self-adjoint eigensolver converges");
    let s = eig.S().column_vector();
    ((0..n).map(|i| s[i].re).collect(), from_faer(eig.U()))
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn hermitian_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let (values, _) = hermitian_eigen(a);
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Positive semidefiniteness test: Hermitian within tolerance and
/// `lambda_min >= -atol * max(1, sigma_max)`.
pub fn is_psd(a: &ComplexMatrix, tol: &Tolerance) -> bool {
    if !a.is_square() {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    let scale = max_abs(a).max(1.0);
    if hermitian_defect(a) > tol.atol * scale {
        return false;
    }
    let (values, _) = hermitian_eigen(a);
    let sigma_max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    values[0] >= -tol.atol * sigma_max.max(1.0)
}

/// Column-stacking vectorization: entry `(r, c)` goes to index `c * rows + r`.
pub fn vec_col(a: &ComplexMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_col`].
pub fn unvec_col(v: &[C64], rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v)
}

/// Builds a matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
}

/// The matrix unit `E_{ij}` (0-based).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(i, j)] = ONE;
    e
}
