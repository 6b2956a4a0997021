//! Canonical group elements for lattices, free groups and finite cyclic quotients.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which group an element lives in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    /// The free abelian group of the given rank.
    Lattice { rank: usize },
    /// The free group of the given rank.
    Free { rank: usize },
    /// `Z^d / N Z^d` with one modulus per coordinate.
    Quotient { moduli: Vec<u64> },
}

/// A group together with its canonical symmetric generating set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    kind: GroupKind,
}

/// An element in canonical form.
///
/// Free-group words store letters as `+(i+1)` for generator `i` and `-(i+1)`
/// for its inverse, with no adjacent cancelling pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Free(Vec<i32>),
    Residue(Vec<u64>),
}

impl GroupSpec {
    pub fn lattice(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidGroup("lattice rank must be positive".into()));
        }
        Ok(Self { kind: GroupKind::Lattice { rank } })
    }

    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > super::text::FREE_LETTERS.len() {
            return Err(Error::InvalidGroup(format!(
                "free rank must be in 1..={}",
                super::text::FREE_LETTERS.len()
            )));
        }
        Ok(Self { kind: GroupKind::Free { rank } })
    }

    pub fn quotient(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(Error::InvalidGroup("moduli must be nonempty and positive".into()));
        }
        Ok(Self { kind: GroupKind::Quotient { moduli } })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// Number of free generators (rank of the lattice or free group, length of the modulus vector).
    pub fn rank(&self) -> usize {
        match &self.kind {
            GroupKind::Lattice { rank } | GroupKind::Free { rank } => *rank,
            GroupKind::Quotient { moduli } => moduli.len(),
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self.kind, GroupKind::Free { rank } if rank > 1)
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Lattice { rank } => GroupElement::Lattice(vec![0; *rank]),
            GroupKind::Free { .. } => GroupElement::Free(Vec::new()),
            GroupKind::Quotient { moduli } => GroupElement::Residue(vec![0; moduli.len()]),
        }
    }

    /// The `i`-th canonical generator.
    pub fn generator(&self, i: usize) -> Result<GroupElement> {
        if i >= self.rank() {
            return Err(Error::InvalidGroup(format!("generator index {i} out of range")));
        }
        Ok(match &self.kind {
            GroupKind::Lattice { rank } => {
                let mut v = vec![0; *rank];
                v[i] = 1;
                GroupElement::Lattice(v)
            }
            GroupKind::Free { .. } => GroupElement::Free(vec![i as i32 + 1]),
            GroupKind::Quotient { moduli } => {
                let mut v = vec![0; moduli.len()];
                v[i] = 1 % moduli[i];
                GroupElement::Residue(v)
            }
        })
    }

    /// Generators followed by their inverses; closed under formal inverse.
    pub fn generating_set(&self) -> Vec<GroupElement> {
        let gens: Vec<_> = (0..self.rank()).map(|i| self.generator(i).unwrap()).collect();
        let mut out = gens.clone();
        out.extend(gens.iter().map(|g| self.inverse(g).unwrap()));
        out
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        match (&self.kind, x) {
            (GroupKind::Lattice { rank }, GroupElement::Lattice(v)) => v.len() == *rank,
            (GroupKind::Free { rank }, GroupElement::Free(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (GroupKind::Quotient { moduli }, GroupElement::Residue(r)) => {
                r.len() == moduli.len() && r.iter().zip(moduli).all(|(a, m)| a < m)
            }
            _ => false,
        }
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::GroupMismatch(format!("{x:?} is not an element of {self}")))
        }
    }

    /// Product `ab` in canonical form.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    pub(crate) fn mul_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (&self.kind, a, b) {
            (_, GroupElement::Lattice(x), GroupElement::Lattice(y)) => {
                GroupElement::Lattice(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (_, GroupElement::Free(x), GroupElement::Free(y)) => {
                let mut w = x.clone();
                for &l in y {
                    if w.last() == Some(&-l) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                GroupElement::Free(w)
            }
            (GroupKind::Quotient { moduli }, GroupElement::Residue(x), GroupElement::Residue(y)) => {
                GroupElement::Residue(
                    x.iter().zip(y).zip(moduli).map(|((p, q), m)| (p + q) % m).collect(),
                )
            }
            _ => unreachable!("checked elements"),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        Ok(self.inverse_unchecked(a))
    }

    pub(crate) fn inverse_unchecked(&self, a: &GroupElement) -> GroupElement {
        match (&self.kind, a) {
            (_, GroupElement::Lattice(x)) => GroupElement::Lattice(x.iter().map(|p| -p).collect()),
            (_, GroupElement::Free(w)) => GroupElement::Free(w.iter().rev().map(|l| -l).collect()),
            (GroupKind::Quotient { moduli }, GroupElement::Residue(x)) => GroupElement::Residue(
                x.iter().zip(moduli).map(|(p, m)| (m - p) % m).collect(),
            ),
            _ => unreachable!("checked element"),
        }
    }

    pub fn pow(&self, a: &GroupElement, n: i64) -> Result<GroupElement> {
        let base = if n < 0 { self.inverse(a)? } else { a.clone() };
        let mut out = self.identity();
        for _ in 0..n.unsigned_abs() {
            out = self.mul_unchecked(&out, &base);
        }
        Ok(out)
    }

    /// Word length with respect to the canonical generating set.
    pub fn word_length(&self, a: &GroupElement) -> usize {
        match (&self.kind, a) {
            (_, GroupElement::Lattice(x)) => x.iter().map(|p| p.unsigned_abs() as usize).sum(),
            (_, GroupElement::Free(w)) => w.len(),
            (GroupKind::Quotient { moduli }, GroupElement::Residue(x)) => x
                .iter()
                .zip(moduli)
                .map(|(&p, &m)| p.min(m - p) as usize)
                .sum(),
            _ => usize::MAX,
        }
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        *a == self.identity()
    }

    /// The closed ball of the given radius around the identity, sorted by
    /// word length and then by canonical order.
    pub fn ball(&self, radius: usize) -> Vec<GroupElement> {
        let mut seen = BTreeSet::new();
        seen.insert(self.identity());
        let mut frontier = vec![self.identity()];
        let gens = self.generating_set();
        for _ in 0..radius {
            let mut next = Vec::new();
            for x in &frontier {
                for g in &gens {
                    let y = self.mul_unchecked(x, g);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_by(|a, b| self.word_length(a).cmp(&self.word_length(b)).then(a.cmp(b)));
        out
    }

    /// Reduce a lattice element into this quotient.
    pub fn reduce(&self, a: &GroupElement) -> Result<GroupElement> {
        match (&self.kind, a) {
            (GroupKind::Quotient { moduli }, GroupElement::Lattice(x)) if x.len() == moduli.len() => {
                Ok(GroupElement::Residue(
                    x.iter()
                        .zip(moduli)
                        .map(|(&p, &m)| p.rem_euclid(m as i64) as u64)
                        .collect(),
                ))
            }
            (GroupKind::Quotient { .. }, GroupElement::Residue(_)) => {
                self.check(a)?;
                Ok(a.clone())
            }
            _ => Err(Error::GroupMismatch(format!("cannot reduce {a:?} into {self}"))),
        }
    }

    /// Mixed-radix row-major index of a residue vector (last coordinate fastest).
    pub fn residue_index(&self, a: &GroupElement) -> Result<usize> {
        match (&self.kind, a) {
            (GroupKind::Quotient { moduli }, GroupElement::Residue(r)) if self.contains(a) => {
                Ok(r.iter().zip(moduli).fold(0usize, |acc, (&x, &m)| acc * m as usize + x as usize))
            }
            _ => Err(Error::GroupMismatch(format!("{a:?} is not a residue of {self}"))),
        }
    }

    pub fn residue_from_index(&self, mut idx: usize) -> Result<GroupElement> {
        match &self.kind {
            GroupKind::Quotient { moduli } => {
                let mut r = vec![0u64; moduli.len()];
                for (slot, &m) in r.iter_mut().zip(moduli).rev() {
                    *slot = (idx % m as usize) as u64;
                    idx /= m as usize;
                }
                Ok(GroupElement::Residue(r))
            }
            _ => Err(Error::GroupMismatch("residue indexing needs a quotient group".into())),
        }
    }

    /// Order of a finite quotient; `None` for infinite groups.
    pub fn order(&self) -> Option<u128> {
        match &self.kind {
            GroupKind::Quotient { moduli } => {
                Some(moduli.iter().fold(1u128, |acc, &m| acc.saturating_mul(m as u128)))
            }
            _ => None,
        }
    }

    /// Left-invariance defect `|F⁻¹F' \ F'|` used by quasitiling conditions.
    pub fn boundary_count(&self, inner: &[GroupElement], outer: &[GroupElement]) -> usize {
        let outer_set: BTreeSet<_> = outer.iter().cloned().collect();
        let mut prod = BTreeSet::new();
        for a in inner {
            let ai = self.inverse_unchecked(a);
            for b in outer {
                prod.insert(self.mul_unchecked(&ai, b));
            }
        }
        prod.difference(&outer_set).count()
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GroupKind::Lattice { rank } => write!(f, "Z^{rank}"),
            GroupKind::Free { rank } => write!(f, "F_{rank}"),
            GroupKind::Quotient { moduli } => {
                let parts: Vec<_> = moduli.iter().map(|m| format!("Z/{m}")).collect();
                write!(f, "{}", parts.join(" x "))
            }
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::format_element(self))
    }
}
