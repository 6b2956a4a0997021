//! `(ρ,F,δ,σ)`-independence sets `𝒥 ⊆ {1..d}`: every `ω: 𝒥 → {1..k}` is
//! realized at `𝒥` by a microstate in `Map(ρ,F,δ,σ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpec, ConstraintSet, SetTuple};
use crate::error::{Error, Result};
use crate::group::{GroupElement, RingMatrix};
use crate::microstates::{algebraic_microstate, fullshift_microstate, is_microstate, Microstate};
use crate::sofic::SoficMap;

/// An integer configuration `z ∈ (Z^n)^G`, zero off the listed positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub values: BTreeMap<GroupElement, Vec<i64>>,
}

impl BaseConfig {
    pub fn zero() -> Self {
        Self { values: BTreeMap::new() }
    }

    /// `c` at the identity, zero elsewhere.
    pub fn at_identity(identity: GroupElement, c: Vec<i64>) -> Self {
        Self { values: BTreeMap::from([(identity, c)]) }
    }

    pub fn get(&self, g: &GroupElement, n: usize) -> Vec<i64> {
        self.values.get(g).cloned().unwrap_or_else(|| vec![0; n])
    }

    pub fn sup_norm(&self) -> i64 {
        self.values.values().flatten().map(|c| c.abs()).max().unwrap_or(0)
    }
}

/// How a witness microstate is produced for a pattern `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WitnessGenerator {
    /// `φ_η` where `η` satisfies the cylinder constraints of `A_{ω(a)}` at each
    /// `a ∈ 𝒥` and is a seeded random symbol elsewhere.
    FullShift { radius: usize, seed: u64 },
    /// The algebraic construction with `ξ(σ_t a) = z_{ω(a)}(t⁻¹)` for `t ∈ K⁻¹`, `a ∈ 𝒥`, and `ξ = 0` elsewhere.
    Algebraic { radius: usize, k_set: Vec<GroupElement>, base: Vec<BaseConfig>, bound: i64 },
}

fn omega_seed(seed: u64, omega: &[usize]) -> u64 {
    omega.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, &w| h.wrapping_mul(0x100_0000_01b3).wrapping_add(w as u64 + 1))
}

/// Build the witness for `ω` (listed along `𝒥`), or `None` when the generator cannot satisfy the constraints.
pub fn witness(
    generator: &WitnessGenerator,
    action: &ActionSpec,
    sigma: &Arc<SoficMap>,
    j: &[usize],
    tuple: &SetTuple,
    omega: &[usize],
) -> Result<Option<Microstate>> {
    let d = sigma.d();
    let g = sigma.group();
    match generator {
        WitnessGenerator::FullShift { radius, seed } => {
            let sym = action.as_symbolic()?;
            let k = sym.alphabet();
            let mut allowed: Vec<Option<BTreeSet<u32>>> = vec![None; d];
            for (&a, &w) in j.iter().zip(omega) {
                let ConstraintSet::Cylinders(cyls) = &tuple.0[w] else {
                    return Err(Error::Unsupported("full-shift witnesses need cylinder sets".into()));
                };
                for c in cyls {
                    // φ_η(a)_p = η(σ_{p⁻¹}(a))
                    let b = sigma.apply(&g.inverse(&c.position)?, a)?;
                    let ok: BTreeSet<u32> = (0..k).filter(|&v| c.admits(sym, v)).collect();
                    let slot = allowed[b].get_or_insert_with(|| (0..k).collect());
                    *slot = slot.intersection(&ok).copied().collect();
                    if slot.is_empty() {
                        return Ok(None);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(omega_seed(*seed, omega));
            let eta: Vec<u32> = allowed
                .iter()
                .map(|s| match s {
                    Some(set) => *set.iter().collect::<Vec<_>>().choose(&mut rng).unwrap().to_owned(),
                    None => rng.gen_range(0..k),
                })
                .collect();
            Ok(Some(fullshift_microstate(&eta, sigma.clone(), *radius)?))
        }
        WitnessGenerator::Algebraic { radius, k_set, base, bound } => {
            let alg = action.as_algebraic()?;
            let n = alg.n();
            let mut xi: Vec<Option<Vec<i64>>> = vec![None; d];
            for (&a, &w) in j.iter().zip(omega) {
                let z = base.get(w).ok_or_else(|| Error::Precondition(format!("no base point for symbol {w}")))?;
                for kk in k_set {
                    // t = k⁻¹ ∈ K⁻¹, ξ(σ_t a) = z(t⁻¹) = z(k)
                    let t = g.inverse(kk)?;
                    let b = sigma.apply(&t, a)?;
                    let v = z.get(kk, n);
                    match &xi[b] {
                        Some(old) if *old != v => return Ok(None),
                        _ => xi[b] = Some(v),
                    }
                }
            }
            let xi: Vec<Vec<i64>> = xi.into_iter().map(|v| v.unwrap_or_else(|| vec![0; n])).collect();
            Ok(Some(algebraic_microstate(&xi, alg, sigma.clone(), *radius, *bound)?.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternPolicy {
    /// Exhaustive enumeration is used up to this many patterns.
    pub exhaustive_cap: u64,
    /// Beyond the cap, check this many uniformly sampled patterns (statistical evidence only).
    pub sample: Option<(u64, u64)>,
}

impl Default for PatternPolicy {
    fn default() -> Self {
        Self { exhaustive_cap: 1 << 20, sample: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoficIndependenceReport {
    pub holds: bool,
    pub total_patterns: f64,
    pub checked: u64,
    pub sampled: bool,
    pub failures: u64,
    pub first_failure: Option<Vec<usize>>,
    /// Largest equivariance defect over all witnesses built.
    pub max_defect: f64,
}

fn decode(m: u64, k: usize, len: usize) -> Vec<usize> {
    let mut r = m;
    (0..len)
        .map(|_| {
            let v = (r % k as u64) as usize;
            r /= k as u64;
            v
        })
        .collect()
}

/// Validate one witness: in `Map(ρ,F,δ,σ)` and `φ(a) ∈ A_{ω(a)}` on `𝒥`.
#[allow(clippy::too_many_arguments)]
fn check_pattern(
    generator: &WitnessGenerator,
    action: &ActionSpec,
    sigma: &Arc<SoficMap>,
    j: &[usize],
    tuple: &SetTuple,
    f: &[GroupElement],
    delta: f64,
    omega: &[usize],
) -> Result<(bool, f64)> {
    let Some(phi) = witness(generator, action, sigma, j, tuple, omega)? else {
        return Ok((false, f64::NAN));
    };
    let rep = is_microstate(action, &phi, f, delta)?;
    if let ActionSpec::Symbolic(s) = action {
        for e in phi.entries() {
            if !s.admissible(e)? {
                return Ok((false, rep.max_defect()));
            }
        }
    }
    for (&a, &w) in j.iter().zip(omega) {
        if !tuple.0[w].contains(action, phi.entry(a))? {
            return Ok((false, rep.max_defect()));
        }
    }
    Ok((rep.holds, rep.max_defect()))
}

/// Check every (or a sample of) `ω: 𝒥 → {1..k}` with constructed witnesses.
#[allow(clippy::too_many_arguments)]
pub fn sofic_independence_check(
    j: &[usize],
    tuple: &SetTuple,
    f: &[GroupElement],
    delta: f64,
    sigma: &Arc<SoficMap>,
    action: &ActionSpec,
    generator: &WitnessGenerator,
    policy: &PatternPolicy,
) -> Result<SoficIndependenceReport> {
    let k = tuple.len();
    if k == 0 {
        return Err(Error::Precondition("empty set tuple".into()));
    }
    if j.iter().any(|&a| a >= sigma.d()) {
        return Err(Error::Precondition("index outside {1..d}".into()));
    }
    let total = (k as f64).powi(j.len() as i32);
    let exhaustive = total <= policy.exhaustive_cap as f64;
    let patterns: Vec<Vec<usize>> = if exhaustive {
        (0..total as u64).map(|m| decode(m, k, j.len())).collect()
    } else {
        let (count, seed) = policy.sample.ok_or_else(|| {
            Error::BudgetExceeded(format!("{k}^{} patterns exceed the cap without sampling", j.len()))
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..j.len()).map(|_| rng.gen_range(0..k)).collect()).collect()
    };
    let results: Vec<(bool, f64)> = patterns
        .par_iter()
        .map(|omega| check_pattern(generator, action, sigma, j, tuple, f, delta, omega))
        .collect::<Result<_>>()?;
    let failures: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.0).map(|(i, _)| i).collect();
    Ok(SoficIndependenceReport {
        holds: failures.is_empty(),
        total_patterns: total,
        checked: patterns.len() as u64,
        sampled: !exhaustive,
        failures: failures.len() as u64,
        first_failure: failures.first().map(|&i| patterns[i].clone()),
        max_defect: results.iter().map(|r| r.1).filter(|v| !v.is_nan()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicIndependenceReport {
    pub d: usize,
    pub k_size: usize,
    /// `|Λ|`, the points where `s ↦ σ_s(a)` is injective on `K⁻¹`.
    pub lambda: usize,
    /// The selected `𝒥`, with pairwise disjoint `K⁻¹a`.
    pub j: Vec<usize>,
    pub density: f64,
    /// `|𝒥| ≥ d / (2|K|²)`, checked in integers.
    pub meets_bound: bool,
    pub witnesses: Option<SoficIndependenceReport>,
}

/// The injectivity locus `Λ` and a greedy maximal `𝒥 ⊆ Λ` with disjoint `K⁻¹`-translates.
pub fn disjoint_translates(sigma: &SoficMap, k_set: &[GroupElement]) -> Result<(Vec<usize>, Vec<usize>)> {
    let g = sigma.group();
    let perms = k_set.iter().map(|kk| sigma.perm(&g.inverse(kk)?)).collect::<Result<Vec<_>>>()?;
    let image = |a: usize| perms.iter().map(move |p| p[a] as usize);
    let lambda: Vec<usize> = (0..sigma.d())
        .filter(|&a| {
            let mut seen = BTreeSet::new();
            image(a).all(|b| seen.insert(b))
        })
        .collect();
    let mut used = vec![false; sigma.d()];
    let mut j = Vec::new();
    for &a in &lambda {
        if image(a).all(|b| !used[b]) {
            image(a).for_each(|b| used[b] = true);
            j.push(a);
        }
    }
    Ok((lambda, j))
}

/// Independence set for a tuple of balls in `X_A`, following the counting argument.
#[allow(clippy::too_many_arguments)]
pub fn algebraic_independence_set(
    action: &ActionSpec,
    k_set: &[GroupElement],
    sigma: &Arc<SoficMap>,
    balls: &SetTuple,
    base: &[BaseConfig],
    f: &[GroupElement],
    delta: f64,
    radius: usize,
    policy: &PatternPolicy,
) -> Result<AlgebraicIndependenceReport> {
    let alg = action.as_algebraic()?;
    if base.len() != balls.len() {
        return Err(Error::SizeMismatch(base.len(), balls.len()));
    }
    let norm = alg.matrix().l1_norm();
    let bound = base.iter().map(|z| z.sup_norm()).max().unwrap_or(0);
    if bound as f64 > norm {
        return Err(Error::Precondition(format!("base points exceed ||A||_1 = {norm}")));
    }
    let d = sigma.d();
    let (lambda, j) = disjoint_translates(sigma, k_set)?;
    if 2 * lambda.len() < d {
        return Err(Error::SigmaQuality(format!("|Lambda|/d = {}", lambda.len() as f64 / d as f64)));
    }
    let ks = k_set.len();
    let meets_bound = 2 * ks * ks * j.len() >= d;
    let generator = WitnessGenerator::Algebraic {
        radius,
        k_set: k_set.to_vec(),
        base: base.to_vec(),
        bound: norm.floor() as i64,
    };
    let witnesses = sofic_independence_check(&j, balls, f, delta, sigma, action, &generator, policy)?;
    Ok(AlgebraicIndependenceReport {
        d,
        k_size: ks,
        lambda: lambda.len(),
        density: j.len() as f64 / d as f64,
        j,
        meets_bound,
        witnesses: Some(witnesses),
    })
}

/// Identity-coordinate values `P(z (A*)⁻¹)_e` of base configurations, for centering balls.
pub fn base_centers(inverse: &RingMatrix, base: &[BaseConfig]) -> Vec<Vec<f64>> {
    let n = inverse.dim();
    let g = inverse.group();
    base.iter()
        .map(|z| {
            (0..n)
                .map(|jj| {
                    let mut v = 0.0;
                    for i in 0..n {
                        for (h, beta) in inverse.get(i, jj).float_terms() {
                            // (z·B)_j(e) = Σ_i Σ_h B_{ij,h} z_i(h⁻¹)
                            v += beta * z.get(&g.inverse(&h).unwrap(), n)[i] as f64;
                        }
                    }
                    crate::actions::reduce_mod1(v)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub i: Vec<usize>,
    /// 1 for `A_{1,1}`, 2 for `A_{1,2}`.
    pub branch: usize,
    /// `|I| / |𝒥|`.
    pub ratio: f64,
    pub validation: SoficIndependenceReport,
}

/// Largest `|𝒥|` for the exhaustive split search.
pub const SPLIT_CAP: usize = 12;

/// Given witnesses for `(A_1, …, A_k)` on `𝒥` with `A_1 = A_{1,1} ∪ A_{1,2}`,
/// find the largest `I ⊆ 𝒥` and branch `b` such that every pattern on `I` is
/// realized with the first set refined to `A_{1,b}`.
#[allow(clippy::too_many_arguments)]
pub fn decomposition_split(
    j: &[usize],
    tuple: &SetTuple,
    split: (&ConstraintSet, &ConstraintSet),
    f: &[GroupElement],
    delta: f64,
    sigma: &Arc<SoficMap>,
    action: &ActionSpec,
    generator: &WitnessGenerator,
) -> Result<SplitReport> {
    if j.len() > SPLIT_CAP {
        return Err(Error::BudgetExceeded(format!("|J| = {} exceeds the split cap {SPLIT_CAP}", j.len())));
    }
    let k = tuple.len();
    let n = j.len();
    let total = (k as u64).pow(n as u32);
    // membership[m][a] = (in A_11, in A_12) for witnesses of pattern m; None when no valid witness
    let rows: Vec<Option<Vec<(bool, bool)>>> = (0..total)
        .into_par_iter()
        .map(|m| {
            let omega = decode(m, k, n);
            let Some(phi) = witness(generator, action, sigma, j, tuple, &omega)? else {
                return Ok(None);
            };
            if !is_microstate(action, &phi, f, delta)?.holds {
                return Ok(None);
            }
            let mut row = Vec::with_capacity(n);
            for (&a, &w) in j.iter().zip(&omega) {
                if !tuple.0[w].contains(action, phi.entry(a))? {
                    return Ok(None);
                }
                let x = phi.entry(a);
                row.push((split.0.contains(action, x)?, split.1.contains(action, x)?));
            }
            Ok(Some(row))
        })
        .collect::<Result<_>>()?;
    if rows.iter().any(|r| r.is_none()) {
        return Err(Error::Validation("witnesses for J do not all validate".into()));
    }
    let rows: Vec<Vec<(bool, bool)>> = rows.into_iter().map(Option::unwrap).collect();
    let realized = |subset: &[usize], branch: usize| -> bool {
        let mut seen = BTreeSet::new();
        for (m, row) in rows.iter().enumerate() {
            let omega = decode(m as u64, k, n);
            let ok = subset.iter().all(|&p| omega[p] != 0 || if branch == 0 { row[p].0 } else { row[p].1 });
            if ok {
                seen.insert(subset.iter().map(|&p| omega[p]).collect::<Vec<_>>());
            }
        }
        seen.len() as u64 == (k as u64).pow(subset.len() as u32)
    };
    let mut best: (Vec<usize>, usize) = (Vec::new(), 0);
    for branch in 0..2 {
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
        while let Some((i, cur)) = stack.pop() {
            if cur.len() > best.0.len() {
                best = (cur.clone(), branch);
            }
            if i == n || cur.len() + (n - i) <= best.0.len() {
                continue;
            }
            stack.push((i + 1, cur.clone()));
            let mut with = cur;
            with.push(i);
            if realized(&with, branch) {
                stack.push((i + 1, with));
            }
        }
    }
    let (positions, branch) = best;
    let i: Vec<usize> = positions.iter().map(|&p| j[p]).collect();
    let mut refined = tuple.clone();
    refined.0[0] = if branch == 0 { split.0.clone() } else { split.1.clone() };
    let branch = branch + 1;
    let validation = sofic_independence_check(&i, &refined, f, delta, sigma, action, generator, &PatternPolicy::default())?;
    Ok(SplitReport {
        ratio: if j.is_empty() { 1.0 } else { i.len() as f64 / j.len() as f64 },
        i,
        branch,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{AlgebraicAction, SymbolicAction};
    use crate::group::text::parse_ring;
    use crate::group::GroupSpec;
    use crate::sofic::quotient_sofic;

    fn z() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn full(k: u32) -> ActionSpec {
        ActionSpec::Symbolic(SymbolicAction::full_shift(z(), k).unwrap())
    }

    #[test]
    fn full_shift_all_indices() {
        let s = Arc::new(quotient_sofic(&z(), &[8], 1).unwrap());
        let t = SetTuple::identity_cylinders(&z(), 2);
        let j: Vec<usize> = (0..8).collect();
        let gen = WitnessGenerator::FullShift { radius: 1, seed: 3 };
        let r = sofic_independence_check(&j, &t, &z().ball(1), 0.1, &s, &full(2), &gen, &PatternPolicy::default()).unwrap();
        assert!(r.holds);
        assert_eq!(r.checked, 256);
        assert_eq!(r.max_defect, 0.0);
        let empty = sofic_independence_check(&[], &t, &z().ball(1), 0.1, &s, &full(2), &gen, &PatternPolicy::default()).unwrap();
        assert!(empty.holds);
    }

    #[test]
    fn contradictory_tuple_fails() {
        let s = Arc::new(quotient_sofic(&z(), &[8], 1).unwrap());
        let t = SetTuple(vec![ConstraintSet::parse(&z(), "cyl:0=0&0=1").unwrap()]);
        let gen = WitnessGenerator::FullShift { radius: 1, seed: 3 };
        let r = sofic_independence_check(&[0], &t, &z().ball(1), 0.1, &s, &full(2), &gen, &PatternPolicy::default()).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn cap_without_sampling_errors() {
        let s = Arc::new(quotient_sofic(&z(), &[30], 1).unwrap());
        let t = SetTuple::identity_cylinders(&z(), 2);
        let gen = WitnessGenerator::FullShift { radius: 1, seed: 3 };
        let policy = PatternPolicy { exhaustive_cap: 16, sample: None };
        let j: Vec<usize> = (0..10).collect();
        assert!(matches!(
            sofic_independence_check(&j, &t, &z().ball(1), 0.1, &s, &full(2), &gen, &policy),
            Err(Error::BudgetExceeded(_))
        ));
        let sampled = PatternPolicy { exhaustive_cap: 16, sample: Some((50, 1)) };
        let r = sofic_independence_check(&j, &t, &z().ball(1), 0.1, &s, &full(2), &gen, &sampled).unwrap();
        assert!(r.sampled && r.holds && r.checked == 50);
    }

    #[test]
    fn constant_two_takes_everything() {
        let a = ActionSpec::Algebraic(
            AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z(), "2").unwrap()), 1e-9).unwrap(),
        );
        let s = Arc::new(quotient_sofic(&z(), &[8], 1).unwrap());
        let e = z().identity();
        let base = vec![BaseConfig::zero(), BaseConfig::at_identity(e.clone(), vec![1])];
        let centers = base_centers(a.as_algebraic().unwrap().inverse(), &base);
        assert_eq!(centers, vec![vec![0.0], vec![0.5]]);
        let balls = SetTuple(centers.into_iter().map(|c| ConstraintSet::Ball { center: c, radius: 0.1 }).collect());
        let r = algebraic_independence_set(&a, &[e], &s, &balls, &base, &z().ball(1), 0.1, 1, &PatternPolicy::default())
            .unwrap();
        assert_eq!(r.j, (0..8).collect::<Vec<_>>());
        assert!(r.meets_bound);
        assert!(r.witnesses.unwrap().holds);
    }

    #[test]
    fn cycle_packing_bound() {
        let s = quotient_sofic(&z(), &[30], 1).unwrap();
        let (lambda, j) = disjoint_translates(&s, &z().ball(1)).unwrap();
        assert_eq!(lambda.len(), 30);
        assert_eq!(j.len(), 10);
        assert!(2 * 9 * j.len() >= 30);
    }

    #[test]
    fn split_with_empty_branch() {
        let s = Arc::new(quotient_sofic(&z(), &[6], 1).unwrap());
        let t = SetTuple::identity_cylinders(&z(), 2);
        let first = t.0[0].clone();
        let empty = ConstraintSet::parse(&z(), "cyl:0=0&0=1").unwrap();
        let gen = WitnessGenerator::FullShift { radius: 1, seed: 5 };
        let j: Vec<usize> = (0..6).collect();
        let r = decomposition_split(&j, &t, (&first, &empty), &z().ball(1), 0.1, &s, &full(2), &gen).unwrap();
        assert_eq!(r.branch, 1);
        assert_eq!(r.i, j);
        assert!(r.validation.holds);
        let r0 = decomposition_split(&[], &t, (&first, &empty), &z().ball(1), 0.1, &s, &full(2), &gen).unwrap();
        assert!(r0.i.is_empty());
    }
}
