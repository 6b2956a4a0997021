//! Quasitilings of sofic approximations: density selection, η-disjoint
//! refinement of even covers, Rokhlin-type tilings, matched tiles, an
//! approximately commuting permutation, and the residually finite mixing bound.

mod matching;
mod rf;
mod tiles;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::sofic::SoficMap;

pub use matching::{
    bijection_report, commuting_bijection, matched_tiles, BijectionConfig, BijectionReport, MatchedTiles,
    tau_prime, ThresholdCheck,
};
pub use rf::{rf_mixing_check, right_action_table, RfMixingReport};
pub use tiles::{good_points, quasitile, TileSystem};

/// Permutations `σ_s` for `s ∈ F`, in the order of `F`.
pub(crate) fn perms<'a>(sigma: &'a SoficMap, f: &[GroupElement]) -> Result<Vec<&'a [u32]>> {
    f.iter().map(|s| sigma.perm(s)).collect()
}

/// `σ(F)c` listed along `F`.
pub(crate) fn translate(perms: &[&[u32]], c: usize) -> Vec<usize> {
    perms.iter().map(|p| p[c] as usize).collect()
}

/// Whether `s ↦ σ_s(c)` is injective on `F`.
pub(crate) fn injective(perms: &[&[u32]], c: usize) -> bool {
    let mut seen = BTreeSet::new();
    perms.iter().all(|p| seen.insert(p[c]))
}

/// Greedy placement of sets: fully disjoint from `frozen`, `η`-disjoint from `current`.
#[derive(Debug, Clone)]
pub(crate) struct Packer {
    frozen: Vec<bool>,
    current: Vec<bool>,
    covered: usize,
}

impl Packer {
    pub(crate) fn new(d: usize) -> Self {
        Self { frozen: vec![false; d], current: vec![false; d], covered: 0 }
    }

    /// Place `set` if allowed; returns its witness `set \ current`.
    pub(crate) fn admit(&mut self, set: &[usize], eta: f64) -> Option<Vec<usize>> {
        if set.iter().any(|&x| self.frozen[x]) {
            return None;
        }
        let fresh: Vec<usize> = set.iter().copied().filter(|&x| !self.current[x]).collect();
        if (fresh.len() as f64) < (1.0 - eta) * set.len() as f64 - 1e-9 {
            return None;
        }
        self.force(set);
        Some(fresh)
    }

    /// Mark `set` as part of the current family without checks.
    pub(crate) fn force(&mut self, set: &[usize]) {
        for &x in set {
            if !self.current[x] && !self.frozen[x] {
                self.covered += 1;
            }
            self.current[x] = true;
        }
    }

    /// Make the current family a hard obstacle for later sets.
    pub(crate) fn freeze(&mut self) {
        for (f, c) in self.frozen.iter_mut().zip(self.current.iter_mut()) {
            *f |= std::mem::take(c);
        }
    }

    pub(crate) fn covered(&self) -> usize {
        self.covered
    }
}

/// Check a claimed `η`-disjoint family: witnesses inside their sets,
/// pairwise disjoint, and each of relative size at least `1 − η`.
pub fn validate_disjointness(sets: &[Vec<usize>], witnesses: &[Vec<usize>], d: usize, eta: f64) -> Result<()> {
    if sets.len() != witnesses.len() {
        return Err(Error::SizeMismatch(sets.len(), witnesses.len()));
    }
    let mut owner = vec![usize::MAX; d];
    for (i, (set, w)) in sets.iter().zip(witnesses).enumerate() {
        let members: BTreeSet<usize> = set.iter().copied().collect();
        if (w.len() as f64) < (1.0 - eta) * set.len() as f64 - 1e-9 {
            return Err(Error::Validation(format!("witness {i} has {} of {} points", w.len(), set.len())));
        }
        for &x in w {
            if !members.contains(&x) {
                return Err(Error::Validation(format!("witness {i} leaves its set at {x}")));
            }
            if owner[x] != usize::MAX {
                return Err(Error::Validation(format!("witnesses {} and {i} share point {x}", owner[x])));
            }
            owner[x] = i;
        }
    }
    Ok(())
}

/// Size of `⋃ sets`.
pub fn union_size(sets: &[Vec<usize>], d: usize) -> usize {
    let mut hit = vec![false; d];
    sets.iter().flatten().filter(|&&x| !std::mem::replace(&mut hit[x], true)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySelection {
    /// `{a ∈ B : |σ(F)a ∩ 𝒥| > λ|F|}`, ascending.
    pub v: Vec<usize>,
    /// `(|B|(1−λ) − d + |𝒥|)/(1−λ)`.
    pub bound: f64,
    pub meets_bound: bool,
}

pub fn density_select(
    sigma: &SoficMap,
    f: &[GroupElement],
    b: &[usize],
    j: &[usize],
    lambda: f64,
) -> Result<DensitySelection> {
    if f.is_empty() {
        return Err(Error::Precondition("F must be nonempty".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} outside (0,1)")));
    }
    let d = sigma.d();
    let ps = perms(sigma, f)?;
    let b: BTreeSet<usize> = b.iter().copied().collect();
    if let Some(&a) = b.iter().find(|&&a| a >= d) {
        return Err(Error::Precondition(format!("point {a} outside 0..{d}")));
    }
    let bad = b.iter().filter(|&&a| !injective(&ps, a)).count();
    if bad > 0 {
        return Err(Error::Precondition(format!("{bad} points of B are not F-injective")));
    }
    let mut in_j = vec![false; d];
    j.iter().filter(|&&x| x < d).for_each(|&x| in_j[x] = true);
    let j_size = in_j.iter().filter(|&&x| x).count();
    let threshold = lambda * f.len() as f64;
    let v: Vec<usize> = b
        .iter()
        .copied()
        .filter(|&a| ps.iter().filter(|p| in_j[p[a] as usize]).count() as f64 > threshold)
        .collect();
    let bound = (b.len() as f64 * (1.0 - lambda) - d as f64 + j_size as f64) / (1.0 - lambda);
    Ok(DensitySelection { meets_bound: v.len() as f64 >= bound - 1e-9, bound, v })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Indices of the selected sets, in selection order.
    pub chosen: Vec<usize>,
    /// Pairwise disjoint `Â_i ⊆ A_i`, one per chosen set.
    pub witnesses: Vec<Vec<usize>>,
    pub multiplicity: usize,
    pub cover: f64,
    /// `η(1−δ)`.
    pub target: f64,
}

/// Verify `{A_i}` is a `δ`-even cover with multiplicity `M`: every point lies in at most
/// `M` sets and `Σ|A_i| ≥ (1−δ)Md`. `M` defaults to the largest point multiplicity.
pub fn even_cover_multiplicity(family: &[Vec<usize>], d: usize, delta: f64, multiplicity: Option<usize>) -> Result<usize> {
    let mut count = vec![0usize; d];
    for &x in family.iter().flatten() {
        if x >= d {
            return Err(Error::Precondition(format!("point {x} outside 0..{d}")));
        }
        count[x] += 1;
    }
    let top = count.iter().copied().max().unwrap_or(0);
    let m = multiplicity.unwrap_or(top);
    if top > m {
        return Err(Error::Precondition(format!("a point is covered {top} > {m} times")));
    }
    let total: usize = family.iter().map(Vec::len).sum();
    if (total as f64) < (1.0 - delta) * (m * d) as f64 - 1e-9 {
        return Err(Error::Precondition(format!(
            "not a {delta}-even cover: total {total} < (1-delta)*{m}*{d}"
        )));
    }
    Ok(m)
}

/// Greedily enlarge an `η`-disjoint subfamily of a `δ`-even cover until it is maximal.
pub fn even_cover_refine(
    family: &[Vec<usize>],
    d: usize,
    eta: f64,
    delta: f64,
    multiplicity: Option<usize>,
) -> Result<Refinement> {
    let m = even_cover_multiplicity(family, d, delta, multiplicity)?;
    let mut packer = Packer::new(d);
    let mut chosen = Vec::new();
    let mut witnesses = Vec::new();
    for (i, set) in family.iter().enumerate() {
        if let Some(w) = packer.admit(set, eta) {
            chosen.push(i);
            witnesses.push(w);
        }
    }
    let cover = if d == 0 { 1.0 } else { packer.covered() as f64 / d as f64 };
    let target = eta * (1.0 - delta);
    if cover + 1e-12 < target {
        return Err(Error::Validation(format!("refined cover {cover} below {target}")));
    }
    Ok(Refinement { chosen, witnesses, multiplicity: m, cover, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::sofic::quotient_sofic;

    fn z() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    #[test]
    fn density_filter_matches_recount() {
        let s = quotient_sofic(&z(), &[12], 1).unwrap();
        let f = z().ball(1);
        let b: Vec<usize> = (0..12).collect();
        let j = vec![0, 1, 2, 3, 5, 7, 8, 10];
        let r = density_select(&s, &f, &b, &j, 0.5).unwrap();
        // |{a-1, a, a+1} ∩ J| ≥ 2
        let oracle: Vec<usize> = (0..12)
            .filter(|&a| [11, 0, 1].iter().filter(|&&o| j.contains(&((a + o) % 12))).count() >= 2)
            .collect();
        assert_eq!(r.v, oracle);
        assert_eq!(r.bound, 4.0);
        assert!(r.meets_bound);
        assert_eq!(density_select(&s, &f, &b, &b, 0.5).unwrap().v, b);
        let empty = density_select(&s, &f, &b, &[], 0.5).unwrap();
        assert!(empty.v.is_empty() && empty.bound <= 0.0);
    }

    #[test]
    fn density_rejects_non_injective() {
        let q = quotient_sofic(&z(), &[2], 1).unwrap();
        assert!(matches!(density_select(&q, &z().ball(1), &[0], &[0], 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn refine_disjoint_family() {
        let fam: Vec<Vec<usize>> = (0..4).map(|i| (3 * i..3 * i + 3).collect()).collect();
        let r = even_cover_refine(&fam, 12, 0.3, 0.0, None).unwrap();
        assert_eq!(r.chosen, vec![0, 1, 2, 3]);
        assert_eq!(r.cover, 1.0);
        validate_disjointness(&fam, &r.witnesses, 12, 0.3).unwrap();
    }

    #[test]
    fn refine_cyclic_intervals() {
        let fam: Vec<Vec<usize>> = (0..24).map(|c| (0..5).map(|i| (c + i) % 24).collect()).collect();
        let r = even_cover_refine(&fam, 24, 0.1, 0.25, None).unwrap();
        assert_eq!(r.multiplicity, 5);
        assert!(r.cover >= 0.075);
        let sets: Vec<Vec<usize>> = r.chosen.iter().map(|&i| fam[i].clone()).collect();
        validate_disjointness(&sets, &r.witnesses, 24, 0.1).unwrap();
    }

    #[test]
    fn single_set() {
        // a lone set of measure 1−δ is a δ-even cover with multiplicity 1
        let fam = vec![vec![0, 1]];
        let r = even_cover_refine(&fam, 10, 0.99, 0.8, None).unwrap();
        assert_eq!(r.chosen, vec![0]);
        assert!(r.cover >= r.target);
        assert!(matches!(even_cover_refine(&fam, 10, 0.5, 0.6, None), Err(Error::Precondition(_))));
    }
}
