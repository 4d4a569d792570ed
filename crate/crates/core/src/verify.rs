//! Named property checks over single instances and over seeded random trials.
//!
//! Every check yields a [`Verdict`]; checks that do not apply to an instance
//! (nilpotency checks on a non-nilpotent map, say) report `not_applicable`
//! rather than being left out.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpmap::KrausMap;
use crate::ensemble::{
    gaussian_matrix, random_cp_map, random_nilpotent_of_type, random_valid_type, trial_rng,
};
use crate::error::{Error, Result};
use crate::json::Instance;
use crate::majorization::{
    check_compression_majorization, compress, cone_membership, convex_weights, extreme_points,
    is_invariant, random_invariant_instance, sample_cone, split, verify_extreme, InvariantSplit,
    MajorizationVector,
};
use crate::nilpotency::{
    adjoint_type, check_adjoint_majorization, check_basic_inequalities, check_block_triangular,
    check_l_lower_bound, commuting_flags_report, cp_type, flag, linear_nilpotent_type,
    max_kraus_product_norm, nilpotency_order, synthesize, CPNilpotentType, CommutingFlags,
    LinearNilpotentType,
};
use crate::numerics::{common_kernel, is_psd, ComplexMatrix, Subspace, Tolerance, C64};
use crate::roots::{build_root, check_power_formula, check_root, compress_to_nilpotent, RootCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Combines two verdicts on the same check: a failure anywhere is a failure.
    pub fn merge(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, _) | (_, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::NotApplicable,
        }
    }
}

pub type Verdicts = BTreeMap<String, Verdict>;

/// Checks reported for every nilpotent map, `not_applicable` otherwise.
pub const NILPOTENT_CHECKS: [&str; 11] = [
    "thm_2_4",
    "cor_2_5",
    "prop_2_6",
    "thm_2_7",
    "prop_2_2",
    "block_triangular",
    "commuting_flags",
    "l_lower_bound",
    "linear_type",
    "thm_3_1",
    "thm_4_3",
];

/// Checks reported for every CP map.
pub const MAP_CHECKS: [&str; 4] = ["prop_2_1", "trace_duality", "choi_round_trip", "index"];

fn record(v: &mut Verdicts, key: &str, verdict: Verdict) {
    let merged = v.get(key).map_or(verdict, |old| old.merge(verdict));
    v.insert(key.to_string(), merged);
}

pub fn merge_verdicts(into: &mut Verdicts, from: &Verdicts) {
    for (k, &v) in from {
        record(into, k, v);
    }
}

pub fn any_failed(v: &Verdicts) -> bool {
    v.values().any(|&x| x == Verdict::Fail)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub n: usize,
    /// Length of the given Kraus list.
    pub d: usize,
    /// Dimension of the span of the Kraus coefficients.
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_type: Option<CPNilpotentType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint_type: Option<CPNilpotentType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_nilpotent_type: Option<LinearNilpotentType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commuting_flags: Option<CommutingFlags>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub summary: Summary,
    pub verdicts: Verdicts,
}

/// Runs every applicable check on `alpha`.
pub fn analyze(alpha: &KrausMap, tol: &Tolerance) -> Result<Analysis> {
    let n = alpha.dim();
    let index = alpha.index(tol)?;
    let mut verdicts = map_checks(alpha, tol)?;
    let mut summary = Summary {
        n,
        d: alpha.len(),
        index,
        order: None,
        cp_type: None,
        adjoint_type: None,
        linear_nilpotent_type: None,
        commuting_flags: None,
    };
    let Some(p) = nilpotency_order(alpha, tol)? else {
        for key in NILPOTENT_CHECKS {
            record(&mut verdicts, key, Verdict::NotApplicable);
        }
        return Ok(Analysis { summary, verdicts });
    };
    let a = cp_type(alpha, tol)?;
    let a_adj = adjoint_type(alpha, tol)?;
    let l = linear_nilpotent_type(alpha, tol)?;
    let adjoint_order = nilpotency_order(&alpha.conjugate(), tol)?;

    record(&mut verdicts, "thm_2_4", Verdict::from_bool(check_basic_inequalities(&a, index)));
    let cor = p <= n && a.len() == p && a.entries().iter().all(|&x| x >= 1) && a.total() == n;
    record(&mut verdicts, "cor_2_5", Verdict::from_bool(cor));
    record(&mut verdicts, "prop_2_6", Verdict::from_bool(adjoint_order == Some(p)));
    let thm_2_7 = a_adj.len() == p && check_adjoint_majorization(&a, &a_adj)?;
    record(&mut verdicts, "thm_2_7", Verdict::from_bool(thm_2_7));
    record(&mut verdicts, "prop_2_2", product_oracle_verdict(alpha, p, tol)?);
    let f = flag(alpha, tol)?;
    record(&mut verdicts, "block_triangular", Verdict::from_bool(check_block_triangular(alpha, &f, tol)));
    let commuting = commuting_flags_report(alpha, tol)?;
    let commuting_verdict = match &commuting {
        Some(m) => Verdict::from_bool(m.is_consistent(&a, &a_adj)),
        None => Verdict::NotApplicable,
    };
    record(&mut verdicts, "commuting_flags", commuting_verdict);
    let l_ok = l.total() == n * n && l.is_non_increasing() && l.entries().len() == p;
    record(&mut verdicts, "linear_type", Verdict::from_bool(l_ok));
    record(&mut verdicts, "l_lower_bound", Verdict::from_bool(a_adj.len() == p && check_l_lower_bound(&l, &a_adj)?));

    let mut thm_3_1 = Verdict::NotApplicable;
    for m in invariant_subspaces(alpha, tol)? {
        thm_3_1 = thm_3_1.merge(Verdict::from_bool(check_invariant_pair(alpha, &m, tol)?));
    }
    record(&mut verdicts, "thm_3_1", thm_3_1);

    let s = alpha.norm();
    let contractive = if s > 0.0 { alpha.scaled((0.5 / s).sqrt()) } else { alpha.clone() };
    record(&mut verdicts, "thm_4_3", Verdict::from_bool(check_root_round_trip(&contractive, tol)?));

    summary.order = Some(p);
    summary.cp_type = Some(a);
    summary.adjoint_type = Some(a_adj);
    summary.linear_nilpotent_type = Some(l);
    summary.commuting_flags = commuting;
    Ok(Analysis { summary, verdicts })
}

/// Kernel correspondence, trace duality, Choi round trip and index of a CP map.
pub fn map_checks(alpha: &KrausMap, tol: &Tolerance) -> Result<Verdicts> {
    let mut v = Verdicts::new();
    let n = alpha.dim();
    // probes depend only on the dimension, so analysis stays deterministic
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);

    let kernel_ok = unit_kernel_residual(alpha, tol)? < tol.atol.max(1e-8)
        && annihilation_residual(alpha, &mut rng, tol)? < tol.atol * alpha.norm().max(1.0);
    record(&mut v, "prop_2_1", Verdict::from_bool(kernel_ok));

    let mut duality = 0.0_f64;
    for _ in 0..4 {
        let x = gaussian_matrix(n, n, &mut rng);
        let y = gaussian_matrix(n, n, &mut rng);
        duality = duality.max(trace_duality_defect(alpha, &x, &y)?);
    }
    let scale = alpha.norm().max(1.0);
    record(&mut v, "trace_duality", Verdict::from_bool(duality < tol.atol.max(1e-8) * scale));

    let round_trip = alpha.to_choi().to_kraus(tol)?.to_superoperator();
    let sup = alpha.to_superoperator();
    record(&mut v, "choi_round_trip", Verdict::from_bool(round_trip.distance(&sup) < tol.atol * scale));

    let reduced = alpha.reduce(tol)?;
    let index = alpha.index(tol)?;
    // the zero map reduces to a single zero coefficient
    let reduced_len = if index == 0 { 0 } else { reduced.len() };
    record(&mut v, "index", Verdict::from_bool(reduced.index(tol)? == index && reduced_len == index));
    Ok(v)
}

/// Frobenius distance between the projections onto `ker α(I)` and the common kernel of the coefficients.
pub fn unit_kernel_residual(alpha: &KrausMap, tol: &Tolerance) -> Result<f64> {
    let (beta, _) = alpha.normalized(tol);
    let unit = beta.unit_kernel(tol)?;
    let common = common_kernel(beta.kraus(), tol)?;
    Ok(unit.distance(&common))
}

/// `‖α(X)‖` for a random PSD `X` supported on the annihilated vectors; zero if there are none.
fn annihilation_residual(alpha: &KrausMap, rng: &mut impl Rng, tol: &Tolerance) -> Result<f64> {
    let (beta, scale) = alpha.normalized(tol);
    let w = beta.annihilated_vectors(tol)?;
    if w.dim() == 0 {
        return Ok(0.0);
    }
    let g = gaussian_matrix(w.dim(), w.dim(), rng);
    let x = w.basis() * (&g * g.adjoint()) * w.basis().adjoint();
    Ok(beta.apply(&x)?.norm() * scale.max(1.0) / x.norm())
}

/// `|tr(α(X)* Y) − tr(X* α*(Y))| / (‖X‖‖Y‖)`.
pub fn trace_duality_defect(alpha: &KrausMap, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
    let left = (alpha.apply(x)?.adjoint() * y).trace();
    let right = (x.adjoint() * alpha.conjugate().apply(y)?).trace();
    Ok((left - right).norm() / (x.norm() * y.norm()))
}

/// Agreement between `α^k(I) = 0` and the vanishing of all length-`k` Kraus products,
/// for every `k ≤ p`, on the map rescaled to `‖α(I)‖ = 1`. Not applicable when the
/// enumeration would exceed 4096 products.
pub fn product_oracle_verdict(alpha: &KrausMap, p: usize, tol: &Tolerance) -> Result<Verdict> {
    let d = alpha.len();
    if (d as f64).powi(p as i32) > 4096.0 {
        return Ok(Verdict::NotApplicable);
    }
    let (beta, _) = alpha.normalized(tol);
    let threshold = 1e-9;
    let mut power = ComplexMatrix::identity(alpha.dim(), alpha.dim());
    for k in 1..=p {
        power = beta.apply(&power)?;
        let vanishes = power.norm() < threshold;
        let products_vanish = max_kraus_product_norm(&beta, k) < threshold;
        if vanishes != products_vanish || vanishes != (k == p) {
            return Ok(Verdict::Fail);
        }
    }
    Ok(Verdict::Pass)
}

/// Proper nonzero invariant subspaces to test: the tails `H_{k+1} ⊕ … ⊕ H_p` of the
/// flag, and, for `n ≤ 8`, every invariant coordinate subspace.
pub fn invariant_subspaces(alpha: &KrausMap, tol: &Tolerance) -> Result<Vec<Subspace>> {
    let n = alpha.dim();
    let f = flag(alpha, tol)?;
    let p = f.subspaces().len();
    let mut out = Vec::new();
    for k in 1..p {
        let tail: Vec<&Subspace> = f.subspaces()[k..].iter().collect();
        out.push(Subspace::direct_sum(&tail)?);
    }
    if n <= 8 {
        for mask in 1..(1u32 << n) - 1 {
            let coords: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let m = Subspace::coordinate(n, &coords);
            if is_invariant(alpha, &m, tol)? {
                out.push(m);
            }
        }
    }
    Ok(out)
}

/// Compression orders at most `p`, compression majorization of the types, and the
/// block structure of Kraus products up to length `min(p, 3)`.
pub fn check_invariant_pair(alpha: &KrausMap, m: &Subspace, tol: &Tolerance) -> Result<bool> {
    let p = nilpotency_order(alpha, tol)?.ok_or(Error::NotNilpotent)?;
    let a = cp_type(alpha, tol)?;
    let s = split(alpha, m, tol)?;
    let comp = compress(&s)?;
    let mut types = Vec::with_capacity(2);
    for part in [&comp.beta, &comp.gamma] {
        let t = match part {
            Some(map) => {
                let order = nilpotency_order(map, tol)?.ok_or(Error::NotNilpotent)?;
                if order > p {
                    return Ok(false);
                }
                cp_type(map, tol)?
            }
            None => CPNilpotentType::new(vec![]),
        };
        types.push(t);
    }
    if !check_compression_majorization(&a, &types[0], &types[1])? {
        return Ok(false);
    }
    let scale = alpha.kraus().iter().map(|l| l.norm()).fold(1.0, f64::max);
    let mut word = Vec::new();
    Ok(block_words_ok(&s, &mut word, p.min(3), scale.powi(p.min(3) as i32) * tol.atol))
}

fn block_words_ok(s: &InvariantSplit, word: &mut Vec<usize>, left: usize, threshold: f64) -> bool {
    if !word.is_empty() && block_product_residual(s, word) > threshold {
        return false;
    }
    if left == 0 {
        return true;
    }
    (0..s.b.len()).all(|i| {
        word.push(i);
        let ok = block_words_ok(s, word, left - 1, threshold);
        word.pop();
        ok
    })
}

/// Distance between the diagonal blocks of `L_{i_1}⋯L_{i_k}` and the products
/// `B_{i_1}⋯B_{i_k}`, `C_{i_1}⋯C_{i_k}`, plus the size of its upper-right block.
pub fn block_product_residual(s: &InvariantSplit, word: &[usize]) -> f64 {
    let full = s.reassemble();
    let (dm, dn) = (s.m.dim(), s.n.dim());
    let mut q = ComplexMatrix::zeros(dm + dn, dm + dn);
    q.columns_mut(0, dm).copy_from(s.m.basis());
    q.columns_mut(dm, dn).copy_from(s.n.basis());
    let mut product = ComplexMatrix::identity(dm + dn, dm + dn);
    let mut b = ComplexMatrix::identity(dm, dm);
    let mut c = ComplexMatrix::identity(dn, dn);
    for &i in word {
        product *= &full[i];
        b *= &s.b[i];
        c *= &s.c[i];
    }
    let block = q.adjoint() * product * &q;
    let rb = (block.view((0, 0), (dm, dm)) - b).norm();
    let rc = (block.view((dm, dm), (dn, dn)) - c).norm();
    let upper = block.view((0, dm), (dm, dn)).norm();
    rb.max(rc).max(upper)
}

/// For a contractive nilpotent `α` of order `p`: the built root passes at `p` and
/// fails at `p − 1`, the power formula holds for `k ≤ p`, the monotone chain on
/// `|u⟩⟨u|` holds, and compressing the root recovers `α`.
pub fn check_root_round_trip(alpha: &KrausMap, tol: &Tolerance) -> Result<bool> {
    let root = build_root(alpha, tol)?;
    let p = root.order;
    if check_root(&root, tol).is_err() {
        return Ok(false);
    }
    if p >= 2 {
        let early = RootCandidate { order: p - 1, ..root.clone() };
        if check_root(&early, tol).is_ok() {
            return Ok(false);
        }
    }
    for k in 1..=p {
        if !check_power_formula(alpha, k, tol)? {
            return Ok(false);
        }
    }
    if !monotone_chain(&root, tol)? {
        return Ok(false);
    }
    if alpha.dim() > 0 {
        let back = compress_to_nilpotent(&root, tol)?;
        if back.to_superoperator().distance(&alpha.to_superoperator()) > tol.atol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `τ^m(|u⟩⟨u|) ≥ |u⟩⟨u|` and `τ^m(I − |u⟩⟨u|) ≤ I − |u⟩⟨u|` for `m ≤ p`.
fn monotone_chain(root: &RootCandidate, tol: &Tolerance) -> Result<bool> {
    let s = root.tau.to_superoperator();
    let n = root.tau.dim();
    let u: &DVector<C64> = &root.u;
    let pu = u * u.adjoint();
    let rest = ComplexMatrix::identity(n, n) - &pu;
    let (mut x, mut y) = (pu.clone(), rest.clone());
    for _ in 0..root.order {
        x = s.apply(&x)?;
        y = s.apply(&y)?;
        if !is_psd(&(&x - &pu), tol) || !is_psd(&(&rest - &y), tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Count, distinctness, cone membership and extremality of `E(x)`, and convex
/// decomposition of `samples` random cone points. For `n ≤ 3` also scans a grid
/// of step `1/4` for extreme points outside `E(x)`.
pub fn extreme_verdicts(
    x: &MajorizationVector,
    samples: usize,
    rng: &mut impl Rng,
    tol: &Tolerance,
) -> Result<Verdicts> {
    let mut v = Verdicts::new();
    let points = extreme_points(x)?;
    let n = x.len();
    let count_ok = points.len() == 1 << (n - 1);
    let distinct = points.iter().enumerate().all(|(i, p)| points[..i].iter().all(|q| q != p));
    let mut members = true;
    let mut certified = true;
    for p in &points {
        members &= cone_membership(x, p, tol)?;
        certified &= verify_extreme(x, p, tol)?;
    }
    record(&mut v, "extreme_points", Verdict::from_bool(count_ok && distinct && members && certified));

    let mut hull = true;
    for _ in 0..samples {
        let y = sample_cone(x, rng)?;
        let (_, residual) = convex_weights(&points, &y)?;
        hull &= residual < 1e-8;
    }
    record(&mut v, "convex_hull", if samples > 0 { Verdict::from_bool(hull) } else { Verdict::NotApplicable });

    if n <= 3 {
        let mut complete = true;
        for y in cone_grid(x, 4) {
            if verify_extreme(x, &y, tol)? && !points.iter().any(|p| distance(p, &y) < 1e-9) {
                complete = false;
            }
        }
        record(&mut v, "extreme_grid", Verdict::from_bool(complete));
    }
    Ok(v)
}

fn distance(a: &MajorizationVector, b: &MajorizationVector) -> f64 {
    a.0.iter().zip(&b.0).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Points of `C(x)` whose entries are multiples of `1/steps`, for integer-valued `x`.
pub fn cone_grid(x: &MajorizationVector, steps: usize) -> Vec<MajorizationVector> {
    let total: f64 = x.0.iter().sum();
    let units = (total * steps as f64).round() as usize;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(x.len());
    fn walk(
        x: &[f64],
        steps: usize,
        left: usize,
        prefix_x: f64,
        prefix_y: usize,
        current: &mut Vec<f64>,
        out: &mut Vec<MajorizationVector>,
    ) {
        let i = current.len();
        if i + 1 == x.len() {
            current.push(left as f64 / steps as f64);
            out.push(MajorizationVector(current.clone()));
            current.pop();
            return;
        }
        let cap = ((prefix_x + x[i]) * steps as f64).round() as usize - prefix_y;
        for k in 0..=cap.min(left) {
            current.push(k as f64 / steps as f64);
            walk(x, steps, left - k, prefix_x + x[i], prefix_y + k, current, out);
            current.pop();
        }
    }
    if !x.is_empty() {
        walk(&x.0, steps, units, 0.0, 0, &mut current, &mut out);
    }
    out
}

/// Outcome of one seeded trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub verdicts: Verdicts,
    pub failure: Option<TrialFailure>,
}

/// The first failing instance of a trial, kept for replay.
#[derive(Debug, Clone)]
pub struct TrialFailure {
    /// Failing check names, or the error message for an instance that errored.
    pub checks: Vec<String>,
    pub ill_conditioned: bool,
    pub instance: Instance,
}

/// Runs one trial of the full suite on instances drawn from stream `trial` of `seed`:
/// a synthesized type, a rotated nilpotent map of that type, a random CP map, an
/// invariant pair, and a majorization vector.
pub fn run_trial(seed: u64, trial: u64, n_max: usize, d_max: usize, tol: &Tolerance) -> Result<TrialOutcome> {
    if n_max == 0 || d_max == 0 {
        return Err(Error::InvalidArgument("n_max and d_max must be at least 1".into()));
    }
    let mut rng = trial_rng(seed, trial);
    let n = rng.random_range(1..=n_max);
    let d = rng.random_range(1..=d_max);
    let t = random_valid_type(n, d, &mut rng);
    let mut outcome = TrialOutcome { trial, verdicts: Verdicts::new(), failure: None };

    let synthesized = synthesize(&t, d)?;
    let synthesis = (|| -> Result<Verdicts> {
        let mut v = analyze(&synthesized, tol)?.verdicts;
        let ok = cp_type(&synthesized, tol)? == t && nilpotency_order(&synthesized, tol)? == Some(t.len());
        record(&mut v, "synthesis_round_trip", Verdict::from_bool(ok));
        Ok(v)
    })();
    if outcome.absorb(synthesis, || Instance::KrausMap(synthesized.clone())) {
        return Ok(outcome);
    }

    let alpha = random_nilpotent_of_type(&t, d, &mut rng)?;
    let rotated = (|| -> Result<Verdicts> {
        let mut v = analyze(&alpha, tol)?.verdicts;
        record(&mut v, "ensemble_type", Verdict::from_bool(cp_type(&alpha, tol)? == t));
        Ok(v)
    })();
    if outcome.absorb(rotated, || Instance::KrausMap(alpha.clone())) {
        return Ok(outcome);
    }

    let cp = random_cp_map(n, d, &mut rng);
    let general = analyze(&cp, tol).map(|a| a.verdicts);
    if outcome.absorb(general, || Instance::KrausMap(cp.clone())) {
        return Ok(outcome);
    }

    let dim_m = rng.random_range(1..=n);
    let (pair_map, m) = random_invariant_instance(n, dim_m, d, rng.random())?;
    let pair = (|| -> Result<Verdicts> {
        let mut v = Verdicts::new();
        record(&mut v, "thm_3_1", Verdict::from_bool(check_invariant_pair(&pair_map, &m, tol)?));
        Ok(v)
    })();
    if outcome.absorb(pair, || Instance::KrausMap(pair_map.clone())) {
        return Ok(outcome);
    }

    let len = n.min(5);
    let x = MajorizationVector((0..len).map(|_| rng.random_range(1..=3) as f64).collect());
    let extreme = extreme_verdicts(&x, 3, &mut rng, tol);
    outcome.absorb(extreme, || Instance::Vector(x.0.clone()));
    Ok(outcome)
}

impl TrialOutcome {
    /// Merges the verdicts of one instance; records it as the failure and returns
    /// true if a check failed or the instance errored.
    fn absorb(&mut self, result: Result<Verdicts>, instance: impl FnOnce() -> Instance) -> bool {
        match result {
            Ok(v) => {
                merge_verdicts(&mut self.verdicts, &v);
                let failed: Vec<String> =
                    v.iter().filter(|(_, &x)| x == Verdict::Fail).map(|(k, _)| k.clone()).collect();
                if failed.is_empty() {
                    return false;
                }
                self.failure = Some(TrialFailure { checks: failed, ill_conditioned: false, instance: instance() });
                true
            }
            Err(e) => {
                let ill_conditioned = matches!(e, Error::IllConditioned(_));
                self.failure = Some(TrialFailure { checks: vec![e.to_string()], ill_conditioned, instance: instance() });
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real_matrix;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn shift_passes_everything() {
        let alpha = KrausMap::new(vec![real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let report = analyze(&alpha, &tol()).unwrap();
        assert_eq!(report.summary.order, Some(2));
        assert_eq!(report.summary.cp_type, Some(CPNilpotentType::new(vec![1, 1])));
        for key in NILPOTENT_CHECKS.iter().chain(MAP_CHECKS.iter()) {
            assert_eq!(report.verdicts[*key], Verdict::Pass, "{key}");
        }
    }

    #[test]
    fn identity_channel_is_not_applicable() {
        let report = analyze(&KrausMap::identity(2), &tol()).unwrap();
        assert_eq!(report.summary.order, None);
        for key in NILPOTENT_CHECKS {
            assert_eq!(report.verdicts[key], Verdict::NotApplicable, "{key}");
        }
        for key in MAP_CHECKS {
            assert_eq!(report.verdicts[key], Verdict::Pass, "{key}");
        }
    }

    #[test]
    fn verdict_serialization() {
        assert_eq!(serde_json::to_string(&Verdict::NotApplicable).unwrap(), "\"not_applicable\"");
        assert_eq!(Verdict::Pass.merge(Verdict::NotApplicable), Verdict::Pass);
        assert_eq!(Verdict::Pass.merge(Verdict::Fail), Verdict::Fail);
    }

    #[test]
    fn grid_of_simple_cone() {
        // C(1,1) = {(0,2), (1,1)} ∪ segment; step 1/2 gives (0,2), (1/2,3/2), (1,1)
        let grid = cone_grid(&MajorizationVector(vec![1.0, 1.0]), 2);
        assert_eq!(grid.len(), 3);
    }

    #[test]
    fn trials_pass() {
        for trial in 0..20 {
            let outcome = run_trial(7, trial, 4, 2, &tol()).unwrap();
            assert!(outcome.failure.is_none(), "trial {trial}: {:?}", outcome.failure.map(|f| f.checks));
        }
    }
}
