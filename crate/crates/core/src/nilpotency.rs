//! Nilpotent CP maps: order, flag decomposition, CP nilpotent types and the
//! inequalities relating them.
//!
//! For a nilpotent map `α` of order `p` the flag is
//! `H_k = ker α^k(I) ∩ (ker α^{k-1}(I))^⊥`, and the CP nilpotent type is
//! `(dim H_1, …, dim H_p)`. Zero tests on powers `α^k(I)` are done on the map
//! rescaled to `‖α(I)‖ = 1`, so they do not depend on the overall scale of the
//! Kraus coefficients.

use serde::{Deserialize, Serialize};

use crate::cpmap::KrausMap;
use crate::error::{Error, Result};
use crate::numerics::{intersect, intersect_with_complement, kernel, ComplexMatrix, Subspace, Tolerance};

/// The CP nilpotent type `(a_1, …, a_p)`. Trailing zeros only appear in padded tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CPNilpotentType(Vec<usize>);

impl CPNilpotentType {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Length of the tuple; the order for unpadded types.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of the entries, the dimension of the underlying space.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Pads with trailing zeros up to `len`.
    pub fn padded(&self, len: usize) -> Result<Self> {
        if len < self.0.len() {
            return Err(Error::LengthMismatch { left: self.0.len(), right: len });
        }
        let mut entries = self.0.clone();
        entries.resize(len, 0);
        Ok(Self(entries))
    }

    fn prefix_sums(&self) -> Vec<usize> {
        self.0
            .iter()
            .scan(0, |acc, &a| {
                *acc += a;
                Some(*acc)
            })
            .collect()
    }
}

impl From<Vec<usize>> for CPNilpotentType {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// The linear nilpotent type `(l_1, …, l_p)` of `α` as an operator on `B(C^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearNilpotentType(Vec<usize>);

impl LinearNilpotentType {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Orthogonal decomposition `C^n = H_1 ⊕ … ⊕ H_p`.
#[derive(Debug, Clone)]
pub struct FlagDecomposition {
    subspaces: Vec<Subspace>,
    projections: Vec<ComplexMatrix>,
}

impl FlagDecomposition {
    pub fn new(subspaces: Vec<Subspace>) -> Self {
        let projections = subspaces.iter().map(Subspace::projector).collect();
        Self { subspaces, projections }
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn projections(&self) -> &[ComplexMatrix] {
        &self.projections
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(Subspace::dim).collect()
    }

    /// `H_1 ⊕ … ⊕ H_k`.
    pub fn partial_sum(&self, k: usize) -> Result<Subspace> {
        let parts: Vec<&Subspace> = self.subspaces[..k].iter().collect();
        if parts.is_empty() {
            return Ok(Subspace::zero(self.subspaces.first().map_or(0, Subspace::ambient_dim)));
        }
        Subspace::direct_sum(&parts)
    }
}

/// The least `p ≤ n` with `α^p = 0`, or `None` when `α^n(I) ≠ 0`.
///
/// `α^p = 0` is decided through `α^p(I) = 0`: the kernel of `α^p(I)` is the
/// common kernel of all length-`p` Kraus products, so `α^p(I)` vanishes exactly
/// when every product does.
pub fn nilpotency_order(alpha: &KrausMap, tol: &Tolerance) -> Result<Option<usize>> {
    let unit_norm = alpha.unit_image().norm();
    if unit_norm < tol.atol {
        return Ok(Some(1));
    }
    if unit_norm < tol.gap_ratio * tol.atol {
        return Err(ambiguous_power(1, unit_norm));
    }
    let (beta, _) = alpha.normalized(tol);
    let n = alpha.dim();
    let mut power = beta.unit_image();
    for k in 2..=n {
        power = beta.apply(&power)?;
        let r = power.norm();
        if r < tol.atol {
            return Ok(Some(k));
        }
        if r < tol.gap_ratio * tol.atol {
            return Err(ambiguous_power(k, r));
        }
    }
    Ok(None)
}

fn ambiguous_power(k: usize, norm: f64) -> Error {
    Error::IllConditioned(format!("‖α^{k}(I)‖ = {norm:e} lies in the ambiguous band"))
}

fn require_order(alpha: &KrausMap, tol: &Tolerance) -> Result<usize> {
    nilpotency_order(alpha, tol)?.ok_or(Error::NotNilpotent)
}

/// Kernels `ker α^k(I)` for `k = 1..=p`.
fn unit_power_kernels(alpha: &KrausMap, p: usize, tol: &Tolerance) -> Result<Vec<Subspace>> {
    let (beta, _) = alpha.normalized(tol);
    let mut power = ComplexMatrix::identity(alpha.dim(), alpha.dim());
    let mut kernels = Vec::with_capacity(p);
    for _ in 0..p {
        power = beta.apply(&power)?;
        kernels.push(kernel(&power, tol)?);
    }
    Ok(kernels)
}

/// The flag `H_k = ker α^k(I) ∩ (ker α^{k-1}(I))^⊥`, `k = 1..=p`.
pub fn flag(alpha: &KrausMap, tol: &Tolerance) -> Result<FlagDecomposition> {
    let p = require_order(alpha, tol)?;
    let n = alpha.dim();
    let kernels = unit_power_kernels(alpha, p, tol)?;
    let mut subspaces = Vec::with_capacity(p);
    let mut previous = Subspace::zero(n);
    for k in kernels {
        let h = intersect_with_complement(&k, &previous, tol)?;
        if h.dim() + previous.dim() != k.dim() || h.dim() == 0 {
            return Err(Error::IllConditioned(format!(
                "kernels of powers of α(I) are not nested consistently (dims {} ⊄ {})",
                previous.dim(),
                k.dim()
            )));
        }
        subspaces.push(h);
        previous = k;
    }
    if previous.dim() != n {
        return Err(Error::IllConditioned("flag does not exhaust the space".into()));
    }
    Ok(FlagDecomposition::new(subspaces))
}

/// The CP nilpotent type `(dim H_1, …, dim H_p)`.
pub fn cp_type(alpha: &KrausMap, tol: &Tolerance) -> Result<CPNilpotentType> {
    Ok(CPNilpotentType(flag(alpha, tol)?.dims()))
}

/// The CP nilpotent type of the conjugate map.
pub fn adjoint_type(alpha: &KrausMap, tol: &Tolerance) -> Result<CPNilpotentType> {
    cp_type(&alpha.conjugate(), tol)
}

/// `a_{i+1} ≤ d·a_i` for all `i`, with every entry positive.
pub fn check_basic_inequalities(t: &CPNilpotentType, d: usize) -> bool {
    !t.0.is_empty() && t.0.iter().all(|&a| a >= 1) && t.0.windows(2).all(|w| w[1] <= d * w[0])
}

/// Builds a nilpotent map with exactly `d` Kraus coefficients and CP type `t`.
///
/// The space is split into consecutive coordinate blocks of sizes `a_1, …, a_p`.
/// Target vector `j` of block `i+1` is assigned to coefficient `j mod d`, which
/// maps it to source vector `⌊j/d⌋` of block `i`; the images of the adjoints
/// therefore jointly span every block.
pub fn synthesize(t: &CPNilpotentType, d: usize) -> Result<KrausMap> {
    if d == 0 {
        return Err(Error::InvalidType("d must be at least 1".into()));
    }
    if !check_basic_inequalities(t, d) {
        return Err(Error::InvalidType(format!(
            "type {:?} violates a_(i+1) <= {d}·a_i or has a zero entry",
            t.0
        )));
    }
    let n = t.total();
    let mut kraus = vec![ComplexMatrix::zeros(n, n); d];
    let mut offset = 0;
    for w in t.0.windows(2) {
        let (source, target) = (w[0], w[1]);
        let next = offset + source;
        for j in 0..target {
            kraus[j % d][(offset + j / d, next + j)] = crate::numerics::ONE;
        }
        offset = next;
    }
    KrausMap::new(kraus)
}

/// `a_{p-i+1} + … + a_p ≤ a^1 + … + a^i` for every `i`, and equal totals.
pub fn check_adjoint_majorization(a: &CPNilpotentType, a_adj: &CPNilpotentType) -> Result<bool> {
    if a.len() != a_adj.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: a_adj.len() });
    }
    let p = a.len();
    let mut suffix = 0;
    let mut prefix = 0;
    for i in 0..p {
        suffix += a.0[p - 1 - i];
        prefix += a_adj.0[i];
        if suffix > prefix {
            return Ok(false);
        }
    }
    Ok(a.total() == a_adj.total())
}

/// Residual threshold for the block checks, which compare entries of computed
/// flag bases; these carry the error of the certified kernel computations.
fn block_threshold(tol: &Tolerance) -> f64 {
    tol.atol * tol.gap_ratio.sqrt()
}

/// Checks that every coefficient maps `H_{i+1}` into `H_1 ⊕ … ⊕ H_i` and kills `H_1`.
pub fn check_block_triangular(alpha: &KrausMap, f: &FlagDecomposition, tol: &Tolerance) -> bool {
    let n = alpha.dim();
    if f.subspaces().iter().any(|s| s.ambient_dim() != n) {
        return false;
    }
    let (beta, _) = alpha.normalized(tol);
    let threshold = block_threshold(tol);
    let p = f.projections().len();
    // upper[i] projects onto H_{i+1} ⊕ … ⊕ H_p (0-based i)
    let mut upper = vec![ComplexMatrix::zeros(n, n); p + 1];
    for i in (0..p).rev() {
        upper[i] = &upper[i + 1] + &f.projections()[i];
    }
    beta.kraus().iter().all(|l| {
        (0..p).all(|i| (&upper[i] * l * &f.projections()[i]).norm() < threshold)
    })
}

/// The matrix `m_ij = dim(H^i ∩ H_j)` when all flag projections of `α` and `α*` commute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommutingFlags(Vec<Vec<usize>>);

impl CommutingFlags {
    pub fn matrix(&self) -> &[Vec<usize>] {
        &self.0
    }

    /// Column sums give `a`, row sums give `a_adj`, and `m_ij = 0` for `i + j > p + 1`.
    pub fn is_consistent(&self, a: &CPNilpotentType, a_adj: &CPNilpotentType) -> bool {
        let p = self.0.len();
        if a.len() != p || a_adj.len() != p || self.0.iter().any(|row| row.len() != p) {
            return false;
        }
        let rows_ok = (0..p).all(|i| self.0[i].iter().sum::<usize>() == a_adj.0[i]);
        let cols_ok = (0..p).all(|j| (0..p).map(|i| self.0[i][j]).sum::<usize>() == a.0[j]);
        // 0-based: i + j > p - 1
        let anti_ok = (0..p).all(|i| (0..p).all(|j| i + j < p || self.0[i][j] == 0));
        rows_ok && cols_ok && anti_ok
    }
}

/// `Some(m)` with `m_ij = dim(H^i ∩ H_j)` (`H^i` the flag of `α*`) when every
/// pair of flag projections commutes; `None` otherwise.
pub fn commuting_flags_report(alpha: &KrausMap, tol: &Tolerance) -> Result<Option<CommutingFlags>> {
    let lower = flag(alpha, tol)?;
    let upper = flag(&alpha.conjugate(), tol)?;
    let threshold = block_threshold(tol);
    for q in upper.projections() {
        for r in lower.projections() {
            if (q * r - r * q).norm() >= threshold {
                return Ok(None);
            }
        }
    }
    let m = upper
        .subspaces()
        .iter()
        .map(|hi| {
            lower
                .subspaces()
                .iter()
                .map(|hj| intersect(hi, hj, tol).map(|s| s.dim()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(CommutingFlags(m)))
}

/// `l_i = dim ker(S^i) − dim ker(S^{i-1})` for the superoperator `S` of `α`.
pub fn linear_nilpotent_type(alpha: &KrausMap, tol: &Tolerance) -> Result<LinearNilpotentType> {
    let p = require_order(alpha, tol)?;
    let (beta, _) = alpha.normalized(tol);
    let s = beta.to_superoperator().matrix;
    let n2 = s.nrows();
    let mut power = ComplexMatrix::identity(n2, n2);
    let mut previous = 0;
    let mut entries = Vec::with_capacity(p);
    for _ in 0..p {
        power = &s * power;
        let dim = kernel(&power, tol)?.dim();
        if dim <= previous {
            return Err(Error::IllConditioned("kernels of superoperator powers do not grow".into()));
        }
        entries.push(dim - previous);
        previous = dim;
    }
    let l = LinearNilpotentType(entries);
    if previous != n2 || !l.is_non_increasing() {
        return Err(Error::IllConditioned(format!("inconsistent linear type {:?}", l.0)));
    }
    Ok(l)
}

/// `Σ_{i≤k} l_i ≥ A_k² + 2·A_k·(Σ_{i>k} a^i)` with `A_k = Σ_{i≤k} a^i`, for every `k`.
///
/// The second sum runs over the adjoint type up to its length `p`.
pub fn check_l_lower_bound(l: &LinearNilpotentType, a_adj: &CPNilpotentType) -> Result<bool> {
    if l.0.len() != a_adj.len() {
        return Err(Error::LengthMismatch { left: l.0.len(), right: a_adj.len() });
    }
    let n = a_adj.total();
    let mut l_sum = 0;
    for (k, &a_k) in a_adj.prefix_sums().iter().enumerate() {
        l_sum += l.0[k];
        if l_sum < a_k * a_k + 2 * a_k * (n - a_k) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest Frobenius norm among all `d^len` Kraus products `L_{i_1}⋯L_{i_len}`.
///
/// Exponential in `len`; intended as an independent check on small instances.
pub fn max_kraus_product_norm(alpha: &KrausMap, len: usize) -> f64 {
    fn walk(kraus: &[ComplexMatrix], acc: &ComplexMatrix, left: usize) -> f64 {
        if left == 0 {
            return acc.norm();
        }
        kraus.iter().map(|l| walk(kraus, &(acc * l), left - 1)).fold(0.0, f64::max)
    }
    let n = alpha.dim();
    walk(alpha.kraus(), &ComplexMatrix::identity(n, n), len)
}
