//! Finite models `σ: G → Sym(d)` and their quality metrics.
//!
//! Points of `{1..d}` are stored 0-based; the text format uses 1-based images.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::text::{format_element, parse_element};
use crate::group::{GroupElement, GroupKind, GroupSpec};

/// Default upper bound on `d` for constructed maps.
pub const DEFAULT_MAX_D: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Translation action on `Z^r / N Z^r`; point `a` is the residue with row-major index `a`.
    ExactQuotient { moduli: Vec<u64> },
    Perturbed { moved: usize, seed: u64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoficMap {
    group: GroupSpec,
    d: usize,
    support: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    table: Vec<Vec<u32>>,
    provenance: Provenance,
}

fn check_permutation(p: &[u32], d: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::InvalidSoficMap(format!("permutation of length {} for d = {d}", p.len())));
    }
    let mut seen = vec![false; d];
    for &x in p {
        let x = x as usize;
        if x >= d || seen[x] {
            return Err(Error::InvalidSoficMap("table entry is not a bijection".into()));
        }
        seen[x] = true;
    }
    Ok(())
}

impl SoficMap {
    /// Build and validate a map from explicit permutations.
    pub fn new(
        group: GroupSpec,
        d: usize,
        entries: Vec<(GroupElement, Vec<u32>)>,
        provenance: Provenance,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSoficMap("d must be positive".into()));
        }
        let mut support = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut table = Vec::with_capacity(entries.len());
        for (g, p) in entries {
            if !group.contains(&g) {
                return Err(Error::GroupMismatch(format!("{g:?} is not an element of {group}")));
            }
            check_permutation(&p, d)?;
            if index.insert(g.clone(), support.len()).is_some() {
                return Err(Error::InvalidSoficMap(format!("duplicate support element {g}")));
            }
            support.push(g);
            table.push(p);
        }
        if !index.contains_key(&group.identity()) {
            return Err(Error::InvalidSoficMap("support must contain the identity".into()));
        }
        for g in &support {
            if !index.contains_key(&group.inverse(g)?) {
                return Err(Error::InvalidSoficMap(format!("support not inverse-closed at {g}")));
            }
        }
        let map = Self { group, d, support, index, table, provenance };
        if matches!(map.provenance, Provenance::ExactQuotient { .. })
            && map.perm(&map.group.identity())?.iter().enumerate().any(|(i, &x)| x as usize != i)
        {
            return Err(Error::InvalidSoficMap("identity must act trivially".into()));
        }
        Ok(map)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &[GroupElement] {
        &self.support
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn contains(&self, s: &GroupElement) -> bool {
        self.index.contains_key(s)
    }

    /// Largest `r` such that the whole ball of radius `r` lies in the support.
    pub fn support_radius(&self) -> usize {
        let mut r = 0;
        while self.group.ball(r + 1).iter().all(|g| self.contains(g)) {
            r += 1;
            if r > self.support.len() {
                break;
            }
        }
        r
    }

    /// The permutation `σ_s`.
    pub fn perm(&self, s: &GroupElement) -> Result<&[u32]> {
        self.index
            .get(s)
            .map(|&i| self.table[i].as_slice())
            .ok_or_else(|| Error::OutsideSupport(format_element(s)))
    }

    /// `σ_s(a)`.
    pub fn apply(&self, s: &GroupElement, a: usize) -> Result<usize> {
        Ok(self.perm(s)?[a] as usize)
    }

    fn product(&self, s: &GroupElement, t: &GroupElement) -> Result<GroupElement> {
        let st = self.group.mul(s, t)?;
        if !self.contains(&st) {
            return Err(Error::OutsideSupport(format_element(&st)));
        }
        Ok(st)
    }

    /// Number of points where `σ_{st}(a) ≠ σ_s σ_t(a)`.
    pub fn multiplicativity_mismatches(&self, s: &GroupElement, t: &GroupElement) -> Result<usize> {
        let st = self.product(s, t)?;
        let (ps, pt, pst) = (self.perm(s)?, self.perm(t)?, self.perm(&st)?);
        Ok((0..self.d).filter(|&a| pst[a] != ps[pt[a] as usize]).count())
    }

    pub fn multiplicativity_defect(&self, s: &GroupElement, t: &GroupElement) -> Result<f64> {
        Ok(self.multiplicativity_mismatches(s, t)? as f64 / self.d as f64)
    }

    /// Number of points where `σ_s(a) = σ_t(a)`, for `s ≠ t`.
    pub fn freeness_coincidences(&self, s: &GroupElement, t: &GroupElement) -> Result<usize> {
        if s == t {
            return Err(Error::SameElement);
        }
        let (ps, pt) = (self.perm(s)?, self.perm(t)?);
        Ok(ps.iter().zip(pt).filter(|(x, y)| x == y).count())
    }

    pub fn freeness_defect(&self, s: &GroupElement, t: &GroupElement) -> Result<f64> {
        Ok(self.freeness_coincidences(s, t)? as f64 / self.d as f64)
    }

    /// Worst defects over all pairs drawn from `elems` (products outside the support are skipped).
    pub fn quality(&self, elems: &[GroupElement]) -> Result<SoficQuality> {
        let mut q = SoficQuality::default();
        for s in elems {
            for t in elems {
                if let Ok(st) = self.group.mul(s, t) {
                    if self.contains(s) && self.contains(t) && self.contains(&st) {
                        q.multiplicativity = q.multiplicativity.max(self.multiplicativity_defect(s, t)?);
                    }
                }
                if s < t {
                    q.freeness = q.freeness.max(self.freeness_defect(s, t)?);
                }
            }
        }
        Ok(q)
    }

    /// Serialize as `d=<int>` followed by `elem: images` lines (1-based images).
    pub fn to_text(&self) -> String {
        let mut out = format!("d={}\n", self.d);
        for (g, p) in self.support.iter().zip(&self.table) {
            let _ = write!(out, "{}:", format_element(g));
            for x in p {
                let _ = write!(out, " {}", x + 1);
            }
            out.push('\n');
        }
        out
    }

    /// Parse the text format; the result has custom provenance.
    pub fn from_text(group: &GroupSpec, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty sofic map file".into()))?;
        let d: usize = header
            .trim()
            .strip_prefix("d=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
        let mut entries = Vec::new();
        for line in lines {
            let (elem, images) = line
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("missing ':' in {line:?}")))?;
            let g = parse_element(group, elem)?;
            let p = images
                .split_whitespace()
                .map(|x| match x.parse::<u32>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::Parse(format!("bad image {x:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push((g, p));
        }
        Self::new(group.clone(), d, entries, Provenance::Custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SoficQuality {
    pub multiplicativity: f64,
    pub freeness: f64,
}

/// Translation permutation of `s ∈ Z^r` on `Z^r / N Z^r`.
fn translation(quotient: &GroupSpec, s: &GroupElement, d: usize) -> Result<Vec<u32>> {
    let shift = quotient.reduce(s)?;
    (0..d)
        .map(|a| {
            let x = quotient.residue_from_index(a)?;
            Ok(quotient.residue_index(&quotient.mul(&shift, &x)?)? as u32)
        })
        .collect()
}

/// The exact finite-quotient map on the ball of the given radius.
pub fn quotient_sofic(spec: &GroupSpec, moduli: &[u64], support_radius: usize) -> Result<SoficMap> {
    quotient_sofic_capped(spec, moduli, support_radius, DEFAULT_MAX_D)
}

pub fn quotient_sofic_capped(
    spec: &GroupSpec,
    moduli: &[u64],
    support_radius: usize,
    max_d: usize,
) -> Result<SoficMap> {
    quotient_sofic_on(spec, moduli, &spec.ball(support_radius), max_d)
}

/// The exact finite-quotient map on an explicit inverse-closed support.
pub fn quotient_sofic_on(
    spec: &GroupSpec,
    moduli: &[u64],
    support: &[GroupElement],
    max_d: usize,
) -> Result<SoficMap> {
    if !matches!(spec.kind(), GroupKind::Lattice { .. }) {
        return Err(Error::InvalidGroup("quotient maps need a lattice group".into()));
    }
    if moduli.len() != spec.rank() {
        return Err(Error::SizeMismatch(moduli.len(), spec.rank()));
    }
    let quotient = GroupSpec::quotient(moduli.to_vec())?;
    let d = quotient.order().expect("finite quotient");
    if d > max_d as u128 {
        return Err(Error::DimensionOverflow { d, max: max_d });
    }
    let d = d as usize;
    let entries = support
        .iter()
        .map(|s| Ok((s.clone(), translation(&quotient, s, d)?)))
        .collect::<Result<Vec<_>>>()?;
    SoficMap::new(spec.clone(), d, entries, Provenance::ExactQuotient { moduli: moduli.to_vec() })
}

/// Compose every non-identity permutation with a random permutation moving at most `m` points.
pub fn perturb(sigma: &SoficMap, m: usize, seed: u64) -> Result<SoficMap> {
    if m > sigma.d {
        return Err(Error::Precondition(format!("cannot move {m} of {} points", sigma.d)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = sigma.group.identity();
    let points: Vec<u32> = (0..sigma.d as u32).collect();
    let entries = sigma
        .support
        .iter()
        .zip(&sigma.table)
        .map(|(g, p)| {
            if *g == e || m == 0 {
                return (g.clone(), p.clone());
            }
            let chosen: Vec<u32> = points.choose_multiple(&mut rng, m).copied().collect();
            let mut shuffled = chosen.clone();
            shuffled.shuffle(&mut rng);
            let mut pi: Vec<u32> = points.clone();
            for (&from, &to) in chosen.iter().zip(&shuffled) {
                pi[from as usize] = to;
            }
            (g.clone(), p.iter().map(|&x| pi[x as usize]).collect())
        })
        .collect();
    SoficMap::new(sigma.group.clone(), sigma.d, entries, Provenance::Perturbed { moved: m, seed })
}

/// Normalized Hamming distance `|{a : τ(a) ≠ τ'(a)}| / d`.
pub fn hamming(tau: &[u32], tau2: &[u32]) -> Result<f64> {
    if tau.len() != tau2.len() {
        return Err(Error::SizeMismatch(tau.len(), tau2.len()));
    }
    if tau.is_empty() {
        return Ok(0.0);
    }
    Ok(tau.iter().zip(tau2).filter(|(x, y)| x != y).count() as f64 / tau.len() as f64)
}

/// `τ ∘ τ'` as maps on points.
pub fn compose(tau: &[u32], tau2: &[u32]) -> Vec<u32> {
    tau2.iter().map(|&x| tau[x as usize]).collect()
}
