use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{injective, perms, translate, validate_disjointness, Packer};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::sofic::SoficMap;

/// Points `a` with `σ_e(a) = a`, `σ_{st}(a) = σ_sσ_t(a)` for `s,t ∈ mult`
/// (whenever `st` is in the support) and `σ_s(a) ≠ σ_{s'}(a)` for distinct `s,s' ∈ free`.
pub fn good_points(sigma: &SoficMap, mult: &[GroupElement], free: &[GroupElement]) -> Result<Vec<usize>> {
    let g = sigma.group();
    let mult: Vec<GroupElement> = mult.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let free: Vec<GroupElement> = free.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mp = perms(sigma, &mult)?;
    let fp = perms(sigma, &free)?;
    let mut triples = Vec::new();
    for (i, s) in mult.iter().enumerate() {
        for (j, t) in mult.iter().enumerate() {
            let st = g.mul(s, t)?;
            if sigma.contains(&st) {
                triples.push((i, j, sigma.perm(&st)?));
            }
        }
    }
    let e = g.identity();
    let id = if sigma.contains(&e) { Some(sigma.perm(&e)?) } else { None };
    Ok((0..sigma.d())
        .filter(|&a| {
            id.is_none_or(|p| p[a] as usize == a)
                && triples.iter().all(|&(i, j, st)| st[a] == mp[i][mp[j][a] as usize])
                && injective(&fp, a)
        })
        .collect())
}

fn with_inverses(g: &GroupSpec, f: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut out: BTreeSet<GroupElement> = f.iter().cloned().collect();
    for s in f {
        out.insert(g.inverse(s)?);
    }
    Ok(out.into_iter().collect())
}

/// Nested shapes `F_1 ⊆ … ⊆ F_ℓ`, centers `C_k` and disjointness witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSystem {
    pub d: usize,
    pub shapes: Vec<Vec<GroupElement>>,
    pub centers: Vec<Vec<usize>>,
    /// `witnesses[k][i]` is `Â ⊆ σ(F_k)c` for `c = centers[k][i]`.
    pub witnesses: Vec<Vec<Vec<usize>>>,
    pub tau: f64,
    pub eta: f64,
    /// `|⋃_k σ(F_k)C_k| / d`.
    pub cover: f64,
    /// Fraction of points where `σ` is multiplicative and free on `F_ℓ ∪ F_ℓ⁻¹`.
    pub good_fraction: f64,
    /// `cover ≥ 1 − τ − η`.
    pub meets_cover: bool,
    /// Occupancies `|σ(F_k)C_k| / d`, when requested.
    pub lambda: Option<Vec<f64>>,
}

impl TileSystem {
    pub fn tiles(&self, sigma: &SoficMap) -> Result<Vec<Vec<Vec<usize>>>> {
        self.shapes
            .iter()
            .zip(&self.centers)
            .map(|(f, cs)| {
                let ps = perms(sigma, f)?;
                Ok(cs.iter().map(|&c| translate(&ps, c)).collect())
            })
            .collect()
    }

    pub fn occupancy(&self, sigma: &SoficMap) -> Result<Vec<f64>> {
        Ok(self
            .tiles(sigma)?
            .iter()
            .map(|ts| super::union_size(ts, self.d) as f64 / self.d as f64)
            .collect())
    }

    /// `Σ_k ||σ(F_k)C_k|/d − λ_k| < δ` against reference occupancies.
    pub fn lambda_consistent(&self, sigma: &SoficMap, reference: &[f64], delta: f64) -> Result<bool> {
        let occ = self.occupancy(sigma)?;
        if occ.len() != reference.len() {
            return Err(Error::SizeMismatch(occ.len(), reference.len()));
        }
        Ok(occ.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum::<f64>() < delta)
    }

    /// Recount every invariant from scratch.
    pub fn validate(&self, sigma: &SoficMap) -> Result<()> {
        if sigma.d() != self.d {
            return Err(Error::SizeMismatch(sigma.d(), self.d));
        }
        check_nested(&sigma.group().identity(), &self.shapes)?;
        let tiles = self.tiles(sigma)?;
        let mut owner = vec![usize::MAX; self.d];
        for (k, ts) in tiles.iter().enumerate() {
            for (i, t) in ts.iter().enumerate() {
                if t.iter().collect::<BTreeSet<_>>().len() != t.len() {
                    return Err(Error::Validation(format!("tile {i} of shape {k} is not injective")));
                }
                for &x in t {
                    if owner[x] != usize::MAX && owner[x] != k {
                        return Err(Error::Validation(format!("shapes {} and {k} overlap at {x}", owner[x])));
                    }
                    owner[x] = k;
                }
            }
            if ts.len() != self.witnesses[k].len() {
                return Err(Error::SizeMismatch(ts.len(), self.witnesses[k].len()));
            }
        }
        let all_tiles: Vec<Vec<usize>> = tiles.iter().flatten().cloned().collect();
        let all_w: Vec<Vec<usize>> = self.witnesses.iter().flatten().cloned().collect();
        validate_disjointness(&all_tiles, &all_w, self.d, self.eta)?;
        let covered = owner.iter().filter(|&&o| o != usize::MAX).count();
        if (covered as f64 / self.d as f64 - self.cover).abs() > 1e-12 {
            return Err(Error::Validation(format!("cover recount {covered}/{} disagrees", self.d)));
        }
        Ok(())
    }
}

fn check_nested(e: &GroupElement, shapes: &[Vec<GroupElement>]) -> Result<()> {
    if shapes.is_empty() {
        return Err(Error::Precondition("no shapes".into()));
    }
    if !shapes[0].contains(e) {
        return Err(Error::Precondition("the smallest shape must contain the identity".into()));
    }
    for w in shapes.windows(2) {
        let outer: BTreeSet<&GroupElement> = w[1].iter().collect();
        if !w[0].iter().all(|s| outer.contains(s)) {
            return Err(Error::Precondition("shapes are not nested".into()));
        }
    }
    Ok(())
}

/// Tile `σ` with translates of the shapes centered in `V`, largest shape first, ascending centers.
pub fn quasitile(
    sigma: &SoficMap,
    shapes: &[Vec<GroupElement>],
    v: &[usize],
    tau: f64,
    eta: f64,
    want_lambda: bool,
) -> Result<TileSystem> {
    let g = sigma.group();
    check_nested(&g.identity(), shapes)?;
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Precondition(format!("eta = {eta} outside [0,1)")));
    }
    let d = sigma.d();
    let v: BTreeSet<usize> = v.iter().copied().filter(|&a| a < d).collect();
    if (v.len() as f64) < (1.0 - tau) * d as f64 - 1e-9 {
        return Err(Error::Precondition(format!("|V| = {} below (1-tau)d", v.len())));
    }
    let top = with_inverses(g, shapes.last().unwrap())?;
    let good = good_points(sigma, &top, &top)?.len();
    let good_fraction = if d == 0 { 1.0 } else { good as f64 / d as f64 };
    if good_fraction < 1.0 - eta {
        return Err(Error::SigmaQuality(format!(
            "sigma is multiplicative and free on only {good_fraction} of the points"
        )));
    }
    let mut packer = Packer::new(d);
    let mut centers = vec![Vec::new(); shapes.len()];
    let mut witnesses = vec![Vec::new(); shapes.len()];
    for k in (0..shapes.len()).rev() {
        let ps = perms(sigma, &shapes[k])?;
        for &c in &v {
            if !injective(&ps, c) {
                continue;
            }
            if let Some(w) = packer.admit(&translate(&ps, c), eta) {
                centers[k].push(c);
                witnesses[k].push(w);
            }
        }
        packer.freeze();
    }
    let cover = if d == 0 { 1.0 } else { packer.covered() as f64 / d as f64 };
    let mut ts = TileSystem {
        d,
        shapes: shapes.to_vec(),
        centers,
        witnesses,
        tau,
        eta,
        cover,
        good_fraction,
        meets_cover: cover >= 1.0 - tau - eta - 1e-12,
        lambda: None,
    };
    if want_lambda {
        ts.lambda = Some(ts.occupancy(sigma)?);
    }
    ts.validate(sigma)?;
    Ok(ts)
}
