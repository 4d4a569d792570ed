//! Invariant subspaces, the compressions of a CP map to `M` and `M^⊥`, and the
//! unordered majorization cone
//! `C(x) = {y ≥ 0 : Σ_{i≤k} y_i ≤ Σ_{i≤k} x_i for all k, Σ y = Σ x}`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpmap::KrausMap;
use crate::error::{Error, Result};
use crate::nilpotency::CPNilpotentType;
use crate::numerics::{ComplexMatrix, Subspace, Tolerance, C64};

/// The block form `L_i = [[B_i, 0], [D_i, C_i]]` of every Kraus coefficient in an
/// orthonormal basis adapted to `C^n = M ⊕ N`.
#[derive(Debug, Clone)]
pub struct InvariantSplit {
    pub m: Subspace,
    pub n: Subspace,
    /// `B_i`, acting on `M`.
    pub b: Vec<ComplexMatrix>,
    /// `C_i`, acting on `N`.
    pub c: Vec<ComplexMatrix>,
    /// `D_i : M → N`.
    pub d: Vec<ComplexMatrix>,
}

impl InvariantSplit {
    /// Reassembles the coefficients in the standard basis.
    pub fn reassemble(&self) -> Vec<ComplexMatrix> {
        let q = adapted_basis(&self.m, &self.n);
        let (dm, dn) = (self.m.dim(), self.n.dim());
        (0..self.b.len())
            .map(|i| {
                let mut block = ComplexMatrix::zeros(dm + dn, dm + dn);
                block.view_mut((0, 0), (dm, dm)).copy_from(&self.b[i]);
                block.view_mut((dm, dm), (dn, dn)).copy_from(&self.c[i]);
                block.view_mut((dm, 0), (dn, dm)).copy_from(&self.d[i]);
                &q * block * q.adjoint()
            })
            .collect()
    }
}

/// Compressions `β(X) = Σ B_i* X B_i` on `M` and `γ(X) = Σ C_i* X C_i` on `N`.
/// A zero-dimensional corner has no compression.
#[derive(Debug, Clone)]
pub struct Compressions {
    pub beta: Option<KrausMap>,
    pub gamma: Option<KrausMap>,
}

fn adapted_basis(m: &Subspace, n: &Subspace) -> ComplexMatrix {
    let dim = m.ambient_dim();
    let mut q = ComplexMatrix::zeros(dim, m.dim() + n.dim());
    q.columns_mut(0, m.dim()).copy_from(m.basis());
    q.columns_mut(m.dim(), n.dim()).copy_from(n.basis());
    q
}

/// Whether every coefficient leaves `M^⊥` invariant, i.e. `‖P_M L_i P_N‖ ≤ atol·‖L_i‖`.
pub fn is_invariant(alpha: &KrausMap, m: &Subspace, tol: &Tolerance) -> Result<bool> {
    Ok(invariance_residual(alpha, m, tol)?.0 <= 0.0)
}

/// Largest excess of `‖P_M L_i P_N‖` over `atol·‖L_i‖`, together with `N`.
fn invariance_residual(alpha: &KrausMap, m: &Subspace, tol: &Tolerance) -> Result<(f64, Subspace)> {
    if m.ambient_dim() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), found: m.ambient_dim() });
    }
    let n = m.orthogonal_complement(tol)?;
    let pm = m.projector();
    let pn = n.projector();
    let excess = alpha
        .kraus()
        .iter()
        .map(|l| (&pm * l * &pn).norm() - tol.atol * l.norm())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((excess, n))
}

/// Reads off the blocks `B_i, C_i, D_i` in the basis adapted to `M ⊕ M^⊥`.
pub fn split(alpha: &KrausMap, m: &Subspace, tol: &Tolerance) -> Result<InvariantSplit> {
    let (excess, n) = invariance_residual(alpha, m, tol)?;
    if excess > 0.0 {
        return Err(Error::NotInvariant { residual: excess });
    }
    let q = adapted_basis(m, &n);
    let dm = m.dim();
    let dn = n.dim();
    let mut split = InvariantSplit { m: m.clone(), n, b: vec![], c: vec![], d: vec![] };
    for l in alpha.kraus() {
        let block = q.adjoint() * l * &q;
        split.b.push(block.view((0, 0), (dm, dm)).into_owned());
        split.c.push(block.view((dm, dm), (dn, dn)).into_owned());
        split.d.push(block.view((dm, 0), (dn, dm)).into_owned());
    }
    Ok(split)
}

pub fn compress(s: &InvariantSplit) -> Result<Compressions> {
    let beta = if s.m.dim() > 0 { Some(KrausMap::new(s.b.clone())?) } else { None };
    let gamma = if s.n.dim() > 0 { Some(KrausMap::new(s.c.clone())?) } else { None };
    Ok(Compressions { beta, gamma })
}

/// Prefix majorization `Σ_{i≤k} a_i ≤ Σ_{i≤k} b_i + Σ_{i≤k} c_i` for every `k` and
/// equality of totals. `b` and `c` are zero-padded to the length of `a`.
pub fn check_compression_majorization(
    a: &CPNilpotentType,
    b: &CPNilpotentType,
    c: &CPNilpotentType,
) -> Result<bool> {
    let p = a.len();
    let b = b.padded(p)?;
    let c = c.padded(p)?;
    let (mut sa, mut sbc) = (0, 0);
    for k in 0..p {
        sa += a.entries()[k];
        sbc += b.entries()[k] + c.entries()[k];
        if sa > sbc {
            return Ok(false);
        }
    }
    Ok(sa == sbc)
}

/// A random nilpotent map with a coordinate subspace `M` that is invariant by construction.
///
/// The coordinates are split into random consecutive blocks; each coefficient
/// has random entries (modulus in `[0.5, 1.5]`, random phase, some entries
/// dropped) only in the strictly block-upper positions, so it maps block `i+1`
/// into blocks `1..i`. `M` is a random set of `dim_m` coordinates, and every
/// entry from `M^⊥` into `M` is cleared.
pub fn random_invariant_instance(
    n: usize,
    dim_m: usize,
    d: usize,
    seed: u64,
) -> Result<(KrausMap, Subspace)> {
    if n == 0 || dim_m == 0 || dim_m > n || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= dim_m <= n and d >= 1 (n={n}, dim_m={dim_m}, d={d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block_of = random_blocks(n, &mut rng);
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(&mut rng);
    let mut in_m = vec![false; n];
    let mut m_coords: Vec<usize> = coords[..dim_m].to_vec();
    m_coords.sort_unstable();
    for &i in &m_coords {
        in_m[i] = true;
    }
    let kraus = (0..d)
        .map(|_| {
            DMatrix::from_fn(n, n, |r, c| {
                let allowed = block_of[r] < block_of[c] && !(in_m[r] && !in_m[c]);
                if allowed && rng.random_bool(0.75) {
                    let modulus = rng.random_range(0.5..1.5);
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    C64::from_polar(modulus, phase)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Ok((KrausMap::new(kraus)?, Subspace::coordinate(n, &m_coords)))
}

/// Assigns each coordinate to one of a random number of consecutive blocks.
fn random_blocks(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut block = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.5) {
            block += 1;
        }
        out.push(block);
    }
    out
}

/// A vector for the majorization cone.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationVector(pub Vec<f64>);

impl MajorizationVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn prefix_sums(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, &v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

impl From<Vec<f64>> for MajorizationVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_positive(x: &MajorizationVector) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("x is empty".into()));
    }
    if let Some(v) = x.0.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("x has a non-positive entry {v}")));
    }
    Ok(())
}

/// Membership of `y` in `C(x)`, with inclusive tolerance `atol` on every constraint.
pub fn cone_membership(x: &MajorizationVector, y: &MajorizationVector, tol: &Tolerance) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    check_positive(x)?;
    let sx = x.prefix_sums();
    let sy = y.prefix_sums();
    let nonneg = y.0.iter().all(|&v| v >= -tol.atol);
    let prefixes = sx.iter().zip(&sy).all(|(a, b)| *b <= *a + tol.atol);
    let total = (sx[sx.len() - 1] - sy[sy.len() - 1]).abs() <= tol.atol;
    Ok(nonneg && prefixes && total)
}

/// The `2^(n-1)` extreme points of `C(x)`.
///
/// Each of the positions `1..n-1` either has `y_i = 0` or makes the prefix sum
/// of `y` equal to that of `x`; the last entry takes the remaining total.
/// Patterns are enumerated with the first position as the most significant
/// bit, "equality" before "zero".
pub fn extreme_points(x: &MajorizationVector) -> Result<Vec<MajorizationVector>> {
    check_positive(x)?;
    let n = x.len();
    let prefix = x.prefix_sums();
    let count = 1usize << (n - 1);
    let points = (0..count)
        .map(|pattern| {
            let mut y = Vec::with_capacity(n);
            let mut so_far = 0.0;
            for (i, &target) in prefix.iter().enumerate().take(n - 1) {
                let zero = (pattern >> (n - 2 - i)) & 1 == 1;
                let v = if zero { 0.0 } else { target - so_far };
                so_far += v;
                y.push(v);
            }
            y.push(prefix[n - 1] - so_far);
            MajorizationVector(y)
        })
        .collect();
    Ok(points)
}

/// Whether `y ∈ C(x)` is an extreme point, by searching for a two-sided perturbation.
///
/// Moving mass between two coordinates `i < j` is the only kind of direction
/// that can stay inside `C(x)`; the transfer `±ε(e_i − e_j)` is feasible iff
/// `y_i`, `y_j` and the prefix slacks at `i..j-1` are all positive. A slack
/// counts as positive when it exceeds `10·atol`.
pub fn verify_extreme(x: &MajorizationVector, y: &MajorizationVector, tol: &Tolerance) -> Result<bool> {
    if !cone_membership(x, y, tol)? {
        return Err(Error::NotInCone);
    }
    let n = x.len();
    let sx = x.prefix_sums();
    let sy = y.prefix_sums();
    let strict = 10.0 * tol.atol;
    let prefix_slack: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
    for i in 0..n {
        for j in i + 1..n {
            let ends_free = y.0[i] > strict && y.0[j] > strict;
            if ends_free && prefix_slack[i..j].iter().all(|&s| s > strict) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Nonnegative weights `w` with `Σ w_k p_k ≈ y` and `Σ w_k = 1`, by nonnegative least squares.
///
/// Returns the weights and the Euclidean residual of the combination.
pub fn convex_weights(points: &[MajorizationVector], y: &MajorizationVector) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::LengthMismatch { left: n, right: points[0].len() });
    }
    let k = points.len();
    // append the affine constraint as a weighted row
    let weight = points.iter().flat_map(|p| p.0.iter()).fold(1.0, |m: f64, v| m.max(v.abs()));
    let a = DMatrix::from_fn(n + 1, k, |r, c| if r < n { points[c].0[r] } else { weight });
    let b = nalgebra::DVector::from_fn(n + 1, |r, _| if r < n { y.0[r] } else { weight });
    let w = nnls(&a, &b);
    let combo = DMatrix::from_fn(n, 1, |r, _| (0..k).map(|c| w[c] * points[c].0[r]).sum::<f64>());
    let residual = (0..n).map(|r| (combo[(r, 0)] - y.0[r]).powi(2)).sum::<f64>().sqrt();
    let affine = (w.iter().sum::<f64>() - 1.0).abs();
    Ok((w.iter().copied().collect(), residual.max(affine)))
}

/// Lawson–Hanson active-set nonnegative least squares.
fn nnls(a: &DMatrix<f64>, b: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let k = a.ncols();
    let mut x = nalgebra::DVector::zeros(k);
    let mut passive = vec![false; k];
    let eps = 1e-12;
    for _ in 0..(3 * k + 10) {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..k)
            .filter(|&j| !passive[j] && grad[j] > eps)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let z_sub = least_squares(&sub, b);
            if z_sub.iter().all(|&v| v > 0.0) {
                for (c, &j) in idx.iter().enumerate() {
                    x[j] = z_sub[c];
                }
                break;
            }
            let mut step = 1.0_f64;
            for (c, &j) in idx.iter().enumerate() {
                if z_sub[c] <= 0.0 {
                    step = step.min(x[j] / (x[j] - z_sub[c]));
                }
            }
            for (c, &j) in idx.iter().enumerate() {
                x[j] += step * (z_sub[c] - x[j]);
                if x[j] <= eps {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// Minimum-norm least-squares solution through the pseudo-inverse.
fn least_squares(a: &DMatrix<f64>, b: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("singular value decomposition converges");
    let s = svd.S().column_vector();
    let cutoff = 1e-12 * (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let (u, v) = (svd.U(), svd.V());
    nalgebra::DVector::from_fn(a.ncols(), |j, _| {
        (0..s.nrows())
            .filter(|&k| s[k] > cutoff)
            .map(|k| {
                let ub: f64 = (0..a.nrows()).map(|i| u[(i, k)] * b[i]).sum();
                v[(j, k)] * ub / s[k]
            })
            .sum()
    })
}

/// Draws a point of `C(x)` by choosing each `y_k` uniformly in the remaining prefix slack.
pub fn sample_cone(x: &MajorizationVector, rng: &mut impl Rng) -> Result<MajorizationVector> {
    check_positive(x)?;
    let sx = x.prefix_sums();
    let n = x.len();
    let mut y = Vec::with_capacity(n);
    let mut so_far = 0.0;
    for &target in sx.iter().take(n - 1) {
        let v = rng.random_range(0.0..=(target - so_far));
        so_far += v;
        y.push(v);
    }
    y.push(sx[n - 1] - so_far);
    Ok(MajorizationVector(y))
}
