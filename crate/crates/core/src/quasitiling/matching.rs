use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tiles::{good_points, quasitile};
use super::{density_select, perms, translate, union_size, validate_disjointness, Packer};
use crate::error::{Error, Result};
use crate::group::text::format_element;
use crate::group::GroupElement;
use crate::sofic::SoficMap;

/// `τ' = τ/2 + (2−2τ)/(2−τ)`.
pub fn tau_prime(tau: f64) -> f64 {
    tau / 2.0 + (2.0 - 2.0 * tau) / (2.0 - tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl ThresholdCheck {
    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, ok: value >= bound - 1e-12 }
    }

    fn below(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, ok: value < bound }
    }
}

/// Two `η`-disjoint families of `F`-translates with a matching `c1[i] ↦ c2[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTiles {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub witnesses1: Vec<Vec<usize>>,
    pub witnesses2: Vec<Vec<usize>>,
    pub cover1: f64,
    pub cover2: f64,
    /// `min_c |{s ∈ F : σ_s(c) ∈ 𝒥_1, σ_s(φ(c)) ∈ 𝒥_2}|`.
    pub min_overlap: usize,
    pub checks: Vec<ThresholdCheck>,
    /// Some conclusion failed at this `d`.
    pub partial: bool,
}

fn membership(d: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; d];
    set.iter().filter(|&&x| x < d).for_each(|&x| m[x] = true);
    m
}

#[allow(clippy::too_many_arguments)]
pub fn matched_tiles(
    sigma: &SoficMap,
    f: &[GroupElement],
    b1: &[usize],
    b2: &[usize],
    j1: &[usize],
    j2: &[usize],
    tau: f64,
    eta: f64,
) -> Result<MatchedTiles> {
    if !(tau > 0.0 && tau <= 1.0) || !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Precondition(format!("need 0 < tau <= 1 and 0 < eta < 1/2, got {tau}, {eta}")));
    }
    let d = sigma.d() as f64;
    let tp = tau_prime(tau);
    for (name, b) in [("B_1", b1), ("B_2", b2)] {
        if (b.len() as f64) < tp * d - 1e-9 {
            return Err(Error::Precondition(format!("|{name}| = {} below tau' d = {}", b.len(), tp * d)));
        }
    }
    let in_j1 = membership(sigma.d(), j1);
    let in_j2 = membership(sigma.d(), j2);
    for (name, m) in [("J_1", &in_j1), ("J_2", &in_j2)] {
        let n = m.iter().filter(|&&x| x).count();
        if (n as f64) < tau * d - 1e-9 {
            return Err(Error::Precondition(format!("|{name}| = {n} below tau d")));
        }
    }
    let ps = perms(sigma, f)?;
    let lam = tau / 2.0;
    let v1 = density_select(sigma, f, b1, j1, lam)?.v;
    let delta = (2.0 - tau) / 2.0;
    let fam1: Vec<Vec<usize>> = v1.iter().map(|&c| translate(&ps, c)).collect();
    let w1 = super::even_cover_refine(&fam1, sigma.d(), eta, delta, Some(f.len()))?;
    // bucket each c ∈ W_1 by its first ⌈|F|τ/2⌉ positions landing in 𝒥_1
    let m = ((f.len() as f64) * tau / 2.0 - 1e-9).ceil().max(1.0) as usize;
    let mut buckets: BTreeMap<Vec<usize>, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
    for (&i, w) in w1.chosen.iter().zip(&w1.witnesses) {
        let c = v1[i];
        let key: Vec<usize> = (0..f.len()).filter(|&p| in_j1[ps[p][c] as usize]).take(m).collect();
        if key.len() == m {
            buckets.entry(key).or_default().push((c, w.clone()));
        }
    }
    let mut packer = Packer::new(sigma.d());
    let mut taken2: BTreeSet<usize> = BTreeSet::new();
    let (mut c1, mut c2, mut wit1, mut wit2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (key, members) in &buckets {
        let fj: Vec<GroupElement> = key.iter().map(|&p| f[p].clone()).collect();
        let v2 = density_select(sigma, &fj, b2, j2, lam)?.v;
        let mut added = Vec::new();
        for &c in v2.iter().filter(|c| !taken2.contains(c)) {
            if added.len() == members.len() {
                break;
            }
            if let Some(w) = packer.admit(&translate(&ps, c), eta) {
                added.push((c, w));
            }
        }
        for ((a, wa), (b, wb)) in members.iter().zip(added) {
            taken2.insert(b);
            c1.push(*a);
            wit1.push(wa.clone());
            c2.push(b);
            wit2.push(wb);
        }
    }
    let tiles1: Vec<Vec<usize>> = c1.iter().map(|&c| translate(&ps, c)).collect();
    let tiles2: Vec<Vec<usize>> = c2.iter().map(|&c| translate(&ps, c)).collect();
    let disjoint = validate_disjointness(&tiles1, &wit1, sigma.d(), eta).is_ok()
        && validate_disjointness(&tiles2, &wit2, sigma.d(), eta).is_ok();
    let cover1 = union_size(&tiles1, sigma.d()) as f64 / d;
    let cover2 = union_size(&tiles2, sigma.d()) as f64 / d;
    let min_overlap = c1
        .iter()
        .zip(&c2)
        .map(|(&a, &b)| ps.iter().filter(|p| in_j1[p[a] as usize] && in_j2[p[b] as usize]).count())
        .min()
        .unwrap_or(0);
    let cover_bound = eta * tau / 16.0;
    let checks = vec![
        ThresholdCheck::at_least("eta-disjoint witnesses", f64::from(u8::from(disjoint)), 1.0),
        ThresholdCheck::at_least("cover of C_1", cover1, cover_bound),
        ThresholdCheck::at_least("cover of C_2", cover2, cover_bound),
        ThresholdCheck::at_least("matched overlap", min_overlap as f64, (tau / 2.0).powi(2) * f.len() as f64),
    ];
    Ok(MatchedTiles {
        partial: checks.iter().any(|c| !c.ok),
        c1,
        c2,
        witnesses1: wit1,
        witnesses2: wit2,
        cover1,
        cover2,
        min_overlap,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BijectionConfig {
    /// Big shapes `F_1 ⊆ … ⊆ F_ℓ` for the matched Rokhlin step.
    pub big: Vec<Vec<GroupElement>>,
    /// Small shapes `F'_1 ⊆ … ⊆ F'_ℓ'` filling the complement.
    pub small: Vec<Vec<GroupElement>>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BijectionReport {
    pub d: usize,
    pub phi: Vec<u32>,
    /// `ρ_Hamm(φσ_s, σ_sφ)` per `s ∈ F`.
    pub defects: Vec<(String, f64)>,
    pub defect: f64,
    /// `|φ(𝒴) ∩ 𝒵| / d`.
    pub overlap: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub tau_prime: f64,
    /// `τ²(1−τ')/384`.
    pub lambda: f64,
    pub big_cover: f64,
    pub small_cover: f64,
    pub checks: Vec<ThresholdCheck>,
    pub partial: bool,
}

/// Defects and overlap of a given permutation.
pub fn bijection_report(
    sigma: &SoficMap,
    phi: &[u32],
    y: &[usize],
    z: &[usize],
    f: &[GroupElement],
) -> Result<(Vec<(String, f64)>, f64)> {
    let d = sigma.d();
    if phi.len() != d {
        return Err(Error::SizeMismatch(phi.len(), d));
    }
    let mut seen = vec![false; d];
    for &x in phi {
        if (x as usize) >= d || std::mem::replace(&mut seen[x as usize], true) {
            return Err(Error::Validation("phi is not a permutation".into()));
        }
    }
    let defects = f
        .iter()
        .map(|s| {
            let p = sigma.perm(s)?;
            let bad = (0..d).filter(|&a| phi[p[a] as usize] != p[phi[a] as usize]).count();
            Ok((format_element(s), if d == 0 { 0.0 } else { bad as f64 / d as f64 }))
        })
        .collect::<Result<Vec<_>>>()?;
    let in_z = membership(d, z);
    let ys: BTreeSet<usize> = y.iter().copied().filter(|&a| a < d).collect();
    let hit = ys.iter().filter(|&&a| in_z[phi[a] as usize]).count();
    Ok((defects, if d == 0 { 0.0 } else { hit as f64 / d as f64 }))
}

/// A tile pair: `σ(F)c` on the `𝒴` side, `σ(F)c'` on the `𝒵` side, with witnesses.
struct Pair {
    shape: usize,
    big: bool,
    c: usize,
    c2: usize,
    w1: Vec<usize>,
    w2: Vec<usize>,
}

/// Permutation that approximately commutes with `σ_s`, `s ∈ F`, and moves a
/// definite fraction of `𝒴` into `𝒵`.
pub fn commuting_bijection(
    sigma: &SoficMap,
    y: &[usize],
    z: &[usize],
    f: &[GroupElement],
    epsilon: f64,
    config: &BijectionConfig,
) -> Result<BijectionReport> {
    let d = sigma.d();
    let g = sigma.group();
    let ys: BTreeSet<usize> = y.iter().copied().filter(|&a| a < d).collect();
    let zs: BTreeSet<usize> = z.iter().copied().filter(|&a| a < d).collect();
    let tau = ys.len().min(zs.len()) as f64 / (2.0 * d as f64);
    if tau <= 0.0 {
        return Err(Error::Precondition("Y and Z must be nonempty".into()));
    }
    if config.big.is_empty() || config.small.is_empty() {
        return Err(Error::Precondition("need big and small shapes".into()));
    }
    let eta = config.eta;
    let tp = tau_prime(tau);
    let lambda = tau * tau * (1.0 - tp) / 384.0;
    let top = config.big.last().unwrap();
    let mut mult: Vec<GroupElement> = f.iter().chain(top).cloned().collect();
    mult.extend(mult.clone().iter().map(|s| g.inverse(s)).collect::<Result<Vec<_>>>()?);
    let mut free: Vec<GroupElement> = top.clone();
    free.extend(top.iter().map(|s| g.inverse(s)).collect::<Result<Vec<_>>>()?);
    let b = good_points(sigma, &mult, &free)?;
    let mut checks = vec![ThresholdCheck::at_least("good points |B|/d", b.len() as f64 / d as f64, tp)];

    // matched big tiles, largest shape first, until they cover (1−τ')/24 of the points
    let target = (1.0 - tp) / 24.0 * d as f64;
    let mut pairs: Vec<Pair> = Vec::new();
    let mut occ1 = vec![false; d];
    let mut occ2 = vec![false; d];
    let mut covered = 0usize;
    let ys_v: Vec<usize> = ys.iter().copied().collect();
    let zs_v: Vec<usize> = zs.iter().copied().collect();
    for k in (0..config.big.len()).rev() {
        if covered as f64 >= target {
            break;
        }
        let ps = perms(sigma, &config.big[k])?;
        let free_of = |occ: &[bool]| -> Vec<usize> {
            b.iter().copied().filter(|&c| translate(&ps, c).iter().all(|&x| !occ[x])).collect()
        };
        let (b1, b2) = (free_of(&occ1), free_of(&occ2));
        // a level whose free region is too small contributes no tiles
        let mt = match matched_tiles(sigma, &config.big[k], &b1, &b2, &ys_v, &zs_v, tau, eta) {
            Err(Error::Precondition(_)) => continue,
            other => other?,
        };
        for i in 0..mt.c1.len() {
            if covered as f64 >= target {
                break;
            }
            for &x in &translate(&ps, mt.c1[i]) {
                covered += usize::from(!std::mem::replace(&mut occ1[x], true));
            }
            translate(&ps, mt.c2[i]).into_iter().for_each(|x| occ2[x] = true);
            pairs.push(Pair {
                shape: k,
                big: true,
                c: mt.c1[i],
                c2: mt.c2[i],
                w1: mt.witnesses1[i].clone(),
                w2: mt.witnesses2[i].clone(),
            });
        }
    }
    let big_cover = covered as f64 / d as f64;
    checks.push(ThresholdCheck::at_least("big-tile cover", big_cover, (1.0 - eta) * (1.0 - tp) / 24.0));

    // small tiles on the complement of the big ones, paired by cardinality
    let small_top = perms(sigma, config.small.last().unwrap())?;
    let complement = |occ: &[bool]| -> Vec<usize> {
        b.iter().copied().filter(|&c| translate(&small_top, c).iter().all(|&x| !occ[x])).collect()
    };
    let (v1, v2) = (complement(&occ1), complement(&occ2));
    let tile = |v: &[usize]| quasitile(sigma, &config.small, v, 1.0 - v.len() as f64 / d as f64, eta, false);
    let (t1, t2) = (tile(&v1)?, tile(&v2)?);
    let mut small_points = 0usize;
    for k in 0..config.small.len() {
        let ps = perms(sigma, &config.small[k])?;
        for i in 0..t1.centers[k].len().min(t2.centers[k].len()) {
            small_points += ps.len();
            pairs.push(Pair {
                shape: k,
                big: false,
                c: t1.centers[k][i],
                c2: t2.centers[k][i],
                w1: t1.witnesses[k][i].clone(),
                w2: t2.witnesses[k][i].clone(),
            });
        }
    }
    let small_cover = small_points as f64 / d as f64;

    // φ(σ_s c) = σ_s(c') wherever both sides lie in their witnesses, extended to a permutation
    let mut phi: Vec<Option<u32>> = vec![None; d];
    let mut hit = vec![false; d];
    for p in &pairs {
        let shape = if p.big { &config.big[p.shape] } else { &config.small[p.shape] };
        let ps = perms(sigma, shape)?;
        let w1: BTreeSet<usize> = p.w1.iter().copied().collect();
        let w2: BTreeSet<usize> = p.w2.iter().copied().collect();
        for perm in &ps {
            let (x, x2) = (perm[p.c] as usize, perm[p.c2] as usize);
            if w1.contains(&x) && w2.contains(&x2) && phi[x].is_none() && !hit[x2] {
                phi[x] = Some(x2 as u32);
                hit[x2] = true;
            }
        }
    }
    for x in 0..d {
        if phi[x].is_none() && !hit[x] {
            phi[x] = Some(x as u32);
            hit[x] = true;
        }
    }
    let mut free_targets = (0..d).filter(|&x| !hit[x]);
    let phi: Vec<u32> =
        phi.into_iter().map(|v| v.unwrap_or_else(|| free_targets.next().expect("bijective fill") as u32)).collect();

    let (defects, overlap) = bijection_report(sigma, &phi, y, z, f)?;
    let defect = defects.iter().map(|x| x.1).fold(0.0, f64::max);
    checks.push(ThresholdCheck::below("commutation defect", defect, epsilon));
    checks.push(ThresholdCheck::at_least("overlap", overlap, lambda));
    Ok(BijectionReport {
        d,
        phi,
        defects,
        defect,
        overlap,
        epsilon,
        tau,
        tau_prime: tp,
        lambda,
        big_cover,
        small_cover,
        partial: checks.iter().any(|c| !c.ok),
        checks,
    })
}
