//! Square matrices over the group ring and Neumann-series inversion in `M_n(ℓ¹(G))`.

use super::element::{GroupElement, GroupSpec};
use super::ring::GroupRingElement;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RingMatrix {
    n: usize,
    entries: Vec<GroupRingElement>,
}

impl RingMatrix {
    /// Build from row-major entries; all entries must share group and coefficient mode.
    pub fn from_rows(rows: Vec<Vec<GroupRingElement>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Precondition("matrix dimension must be >= 1".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("matrix must be square".into()));
        }
        let entries: Vec<_> = rows.into_iter().flatten().collect();
        let g = entries[0].group().clone();
        let exact = entries[0].is_exact();
        for e in &entries {
            if *e.group() != g {
                return Err(Error::GroupMismatch("matrix entries over different groups".into()));
            }
            if e.is_exact() != exact {
                return Err(Error::ModeMismatch);
            }
        }
        Ok(Self { n, entries })
    }

    pub fn scalar(f: GroupRingElement) -> Self {
        Self { n: 1, entries: vec![f] }
    }

    pub fn identity(group: &GroupSpec, n: usize, exact: bool) -> Self {
        let entries = (0..n * n)
            .map(|k| {
                let e = if k / n == k % n {
                    GroupRingElement::one(group.clone())
                } else {
                    GroupRingElement::zero(group.clone())
                };
                if exact {
                    e
                } else {
                    e.to_float()
                }
            })
            .collect();
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn group(&self) -> &GroupSpec {
        self.entries[0].group()
    }

    pub fn is_exact(&self) -> bool {
        self.entries[0].is_exact()
    }

    pub fn get(&self, i: usize, j: usize) -> &GroupRingElement {
        &self.entries[i * self.n + j]
    }

    pub fn to_float(&self) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|e| e.to_float()).collect() }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        if self.group() != other.group() {
            return Err(Error::GroupMismatch("matrices over different groups".into()));
        }
        if self.is_exact() != other.is_exact() {
            return Err(Error::ModeMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self { n: self.n, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self { n: self.n, entries })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = if self.is_exact() {
                    GroupRingElement::zero(self.group().clone())
                } else {
                    GroupRingElement::zero(self.group().clone()).to_float()
                };
                for k in 0..n {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(Self { n, entries })
    }

    /// `A*`: the `(i,j)` entry is the involution of the `(j,i)` entry.
    pub fn involution(&self) -> Self {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.get(k % n, k / n).involution()).collect();
        Self { n, entries }
    }

    /// `‖A‖₁ = Σ_{i,j} ‖A_ij‖₁` over stored coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.l1_norm()).sum()
    }

    /// Sum of entry tail bounds.
    pub fn tail_bound(&self) -> f64 {
        self.entries.iter().map(|e| e.tail()).sum()
    }

    /// Largest word length over all entry supports.
    pub fn radius(&self) -> usize {
        self.entries.iter().map(|e| e.radius()).max().unwrap_or(0)
    }

    fn map_entries(&self, f: impl Fn(usize, usize, &GroupRingElement) -> Result<GroupRingElement>) -> Result<Self> {
        let n = self.n;
        let entries = (0..n * n).map(|k| f(k / n, k % n, &self.entries[k])).collect::<Result<_>>()?;
        Ok(Self { n, entries })
    }
}

/// Diagonal monomial `D = diag(c_i g_i)` with `A = D(I − B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSplit {
    pub diagonal: Vec<(GroupElement, f64)>,
}

/// Result of a certified inversion.
#[derive(Debug, Clone)]
pub struct NeumannInverse {
    pub inverse: RingMatrix,
    pub split: NeumannSplit,
    /// `‖B‖₁` of the split actually used.
    pub split_norm: f64,
    /// Number of series terms summed (including `B⁰`).
    pub terms: usize,
    /// Total stored tail bound of the inverse.
    pub tail: f64,
    /// A-posteriori bound on `‖A·A⁻¹ − I‖₁`.
    pub residual: f64,
}

const MAX_SERIES_TERMS: usize = 20_000;

impl NeumannSplit {
    fn from_choice(a: &RingMatrix, pick: impl Fn(&GroupRingElement) -> Option<(GroupElement, f64)>) -> Option<Self> {
        (0..a.dim()).map(|i| pick(a.get(i, i))).collect::<Option<Vec<_>>>().map(|diagonal| Self { diagonal })
    }

    /// Split using the identity coefficient of each diagonal entry.
    pub fn identity_coefficients(a: &RingMatrix) -> Option<Self> {
        let e = a.group().identity();
        Self::from_choice(a, |f| {
            let c = f.coefficient_f64(&e);
            (c != 0.0).then(|| (e.clone(), c))
        })
    }

    /// Split using the largest-magnitude monomial of each diagonal entry.
    pub fn dominant_monomials(a: &RingMatrix) -> Option<Self> {
        Self::from_choice(a, |f| {
            f.float_terms()
                .into_iter()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()).then_with(|| y.0.cmp(&x.0)))
        })
    }

    /// `B = I − D⁻¹A`.
    fn remainder(&self, a: &RingMatrix) -> Result<RingMatrix> {
        let g = a.group().clone();
        let af = a.to_float();
        let scaled = af.map_entries(|i, _, e| {
            let (gi, ci) = &self.diagonal[i];
            Ok(e.left_translate(&g.inverse(gi)?)?.scale(1.0 / ci))
        })?;
        RingMatrix::identity(&g, a.dim(), false).sub(&scaled)
    }

    fn max_inverse_coefficient(&self) -> f64 {
        self.diagonal.iter().map(|(_, c)| 1.0 / c.abs()).fold(0.0, f64::max)
    }
}

/// Invert `A` in `M_n(ℓ¹(G))` by a Neumann series, detecting the split automatically.
pub fn l1_inverse(a: &RingMatrix, tolerance: f64) -> Result<RingMatrix> {
    l1_inverse_with(a, tolerance, None).map(|r| r.inverse)
}

/// As [`l1_inverse`], with an optional caller-supplied split and a full report.
pub fn l1_inverse_with(a: &RingMatrix, tolerance: f64, split: Option<NeumannSplit>) -> Result<NeumannInverse> {
    if !(tolerance > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let g = a.group().clone();
    let n = a.dim();
    let candidates: Vec<NeumannSplit> = match split {
        Some(s) => {
            if s.diagonal.len() != n || s.diagonal.iter().any(|(_, c)| *c == 0.0) {
                return Err(Error::Precondition("split must give a nonzero monomial per row".into()));
            }
            vec![s]
        }
        None => [NeumannSplit::identity_coefficients(a), NeumannSplit::dominant_monomials(a)]
            .into_iter()
            .flatten()
            .collect(),
    };
    let mut best: Option<(NeumannSplit, RingMatrix, f64)> = None;
    for s in candidates {
        let b = s.remainder(a)?;
        let norm = b.l1_norm();
        if best.as_ref().is_none_or(|(_, _, bn)| norm < *bn) {
            best = Some((s, b, norm));
        }
    }
    let (split, b, norm) = best.ok_or(Error::NeumannConditionFailed { norm: f64::INFINITY })?;
    if norm >= 1.0 {
        return Err(Error::NeumannConditionFailed { norm });
    }

    let scale = split.max_inverse_coefficient();
    let prune_at = tolerance * 1e-4 / (n * n) as f64;
    let mut sum = RingMatrix::identity(&g, n, false);
    let mut power = sum.clone();
    let mut terms = 1;
    let mut geometric = norm / (1.0 - norm);
    let truncation = |geom: f64| (n * n) as f64 * geom * scale;
    while truncation(geometric) + sum.tail_bound() * scale > tolerance {
        if terms >= MAX_SERIES_TERMS {
            return Err(Error::BudgetExceeded(format!("Neumann series needs more than {MAX_SERIES_TERMS} terms")));
        }
        power = power.mul(&b)?.map_entries(|_, _, e| Ok(e.prune(prune_at)))?;
        sum = sum.add(&power)?;
        terms += 1;
        geometric *= norm;
    }

    // A⁻¹ = (Σ Bᵐ) D⁻¹: scale column j by c_j⁻¹ and right-translate by g_j⁻¹.
    let geom_tail = geometric * scale;
    let inverse = sum.map_entries(|_, j, e| {
        let (gj, cj) = &split.diagonal[j];
        Ok(e.right_translate(&g.inverse(gj)?)?.scale(1.0 / cj).with_tail(geom_tail))
    })?;
    let tail = inverse.tail_bound();

    let a_norm = a.l1_norm();
    let product = a.to_float().mul(&inverse)?;
    let defect = product.sub(&RingMatrix::identity(&g, n, false))?;
    let residual = defect.l1_norm() + defect.tail_bound();
    let bound = 2.0 * tolerance * a_norm;
    if residual > bound {
        return Err(Error::InverseResidual { residual, bound });
    }
    Ok(NeumannInverse { inverse, split, split_norm: norm, terms, tail, residual })
}
