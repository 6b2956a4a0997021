//! Group-ring elements: exact `ZG` and truncated `ℓ¹(G)` approximants.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::element::{GroupElement, GroupSpec};
use crate::error::{Error, Result};

/// Coefficients of a finitely supported element. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Exact(BTreeMap<GroupElement, BigInt>),
    /// Truncated `ℓ¹` element; `tail` bounds the `ℓ¹` mass of everything not stored.
    Float { terms: BTreeMap<GroupElement, f64>, tail: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRingElement {
    group: GroupSpec,
    coeffs: Coefficients,
}

impl GroupRingElement {
    pub fn zero(group: GroupSpec) -> Self {
        Self { group, coeffs: Coefficients::Exact(BTreeMap::new()) }
    }

    pub fn one(group: GroupSpec) -> Self {
        let e = group.identity();
        Self::monomial(group, e, 1)
    }

    pub fn monomial(group: GroupSpec, g: GroupElement, c: i64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(g, BigInt::from(c));
        }
        Self { group, coeffs: Coefficients::Exact(m) }
    }

    pub fn from_exact(group: GroupSpec, mut terms: BTreeMap<GroupElement, BigInt>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        Self { group, coeffs: Coefficients::Exact(terms) }
    }

    pub fn from_float(
        group: GroupSpec,
        mut terms: BTreeMap<GroupElement, f64>,
        tail: f64,
    ) -> Result<Self> {
        if !(tail >= 0.0) || !tail.is_finite() {
            return Err(Error::Precondition(format!("tail bound must be finite and >= 0, got {tail}")));
        }
        if terms.values().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("non-finite coefficient".into()));
        }
        terms.retain(|_, c| *c != 0.0);
        Ok(Self { group, coeffs: Coefficients::Float { terms, tail } })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coeffs, Coefficients::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match &self.coeffs {
            Coefficients::Exact(m) => m.is_empty(),
            Coefficients::Float { terms, tail } => terms.is_empty() && *tail == 0.0,
        }
    }

    /// Stored tail bound; always 0 for exact elements.
    pub fn tail(&self) -> f64 {
        match &self.coeffs {
            Coefficients::Exact(_) => 0.0,
            Coefficients::Float { tail, .. } => *tail,
        }
    }

    pub fn support(&self) -> Vec<GroupElement> {
        match &self.coeffs {
            Coefficients::Exact(m) => m.keys().cloned().collect(),
            Coefficients::Float { terms, .. } => terms.keys().cloned().collect(),
        }
    }

    /// Terms as floats regardless of mode.
    pub fn float_terms(&self) -> Vec<(GroupElement, f64)> {
        match &self.coeffs {
            Coefficients::Exact(m) => m
                .iter()
                .map(|(g, c)| (g.clone(), c.to_f64().unwrap_or(f64::NAN)))
                .collect(),
            Coefficients::Float { terms, .. } => terms.iter().map(|(g, c)| (g.clone(), *c)).collect(),
        }
    }

    pub fn exact_terms(&self) -> Option<&BTreeMap<GroupElement, BigInt>> {
        match &self.coeffs {
            Coefficients::Exact(m) => Some(m),
            Coefficients::Float { .. } => None,
        }
    }

    pub fn coefficient_f64(&self, g: &GroupElement) -> f64 {
        match &self.coeffs {
            Coefficients::Exact(m) => m.get(g).and_then(|c| c.to_f64()).unwrap_or(0.0),
            Coefficients::Float { terms, .. } => terms.get(g).copied().unwrap_or(0.0),
        }
    }

    pub fn to_float(&self) -> Self {
        match &self.coeffs {
            Coefficients::Exact(_) => Self {
                group: self.group.clone(),
                coeffs: Coefficients::Float { terms: self.float_terms().into_iter().collect(), tail: 0.0 },
            },
            Coefficients::Float { .. } => self.clone(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch(format!("{} vs {}", self.group, other.group)));
        }
        if self.is_exact() != other.is_exact() {
            return Err(Error::ModeMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (Coefficients::Exact(a), Coefficients::Exact(b)) => {
                let mut m = a.clone();
                for (g, c) in b {
                    *m.entry(g.clone()).or_default() += c;
                }
                Self::from_exact(self.group.clone(), m)
            }
            (Coefficients::Float { terms: a, tail: ta }, Coefficients::Float { terms: b, tail: tb }) => {
                let mut m = a.clone();
                for (g, c) in b {
                    *m.entry(g.clone()).or_default() += c;
                }
                Self::from_float(self.group.clone(), m, ta + tb)?
            }
            _ => unreachable!(),
        })
    }

    pub fn neg(&self) -> Self {
        match &self.coeffs {
            Coefficients::Exact(m) => Self::from_exact(
                self.group.clone(),
                m.iter().map(|(g, c)| (g.clone(), -c)).collect(),
            ),
            Coefficients::Float { terms, tail } => Self {
                group: self.group.clone(),
                coeffs: Coefficients::Float {
                    terms: terms.iter().map(|(g, c)| (g.clone(), -c)).collect(),
                    tail: *tail,
                },
            },
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Multiply every coefficient by a float; the result is in float mode.
    pub fn scale(&self, s: f64) -> Self {
        let f = self.to_float();
        match f.coeffs {
            Coefficients::Float { terms, tail } => Self {
                group: f.group,
                coeffs: Coefficients::Float {
                    terms: terms.into_iter().map(|(g, c)| (g, c * s)).filter(|(_, c)| *c != 0.0).collect(),
                    tail: tail * s.abs(),
                },
            },
            Coefficients::Exact(_) => unreachable!(),
        }
    }

    /// Left-multiply by a group element: `g·f`.
    pub fn left_translate(&self, g: &GroupElement) -> Result<Self> {
        self.translate(g, true)
    }

    /// Right-multiply by a group element: `f·g`.
    pub fn right_translate(&self, g: &GroupElement) -> Result<Self> {
        self.translate(g, false)
    }

    fn translate(&self, g: &GroupElement, left: bool) -> Result<Self> {
        if !self.group.contains(g) {
            return Err(Error::GroupMismatch(format!("{g} not in {}", self.group)));
        }
        let mv = |s: &GroupElement| {
            if left {
                self.group.mul_unchecked(g, s)
            } else {
                self.group.mul_unchecked(s, g)
            }
        };
        Ok(match &self.coeffs {
            Coefficients::Exact(m) => Self::from_exact(
                self.group.clone(),
                m.iter().map(|(s, c)| (mv(s), c.clone())).collect(),
            ),
            Coefficients::Float { terms, tail } => Self {
                group: self.group.clone(),
                coeffs: Coefficients::Float {
                    terms: terms.iter().map(|(s, c)| (mv(s), *c)).collect(),
                    tail: *tail,
                },
            },
        })
    }

    /// Convolution `Σ_s (Σ_t f_t g_{t⁻¹s}) s`.
    ///
    /// In float mode the output tail is `‖f‖·tail(g) + tail(f)·‖g‖ + tail(f)·tail(g)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (Coefficients::Exact(a), Coefficients::Exact(b)) => {
                let mut m: BTreeMap<GroupElement, BigInt> = BTreeMap::new();
                for (t, ft) in a {
                    for (u, gu) in b {
                        *m.entry(self.group.mul_unchecked(t, u)).or_default() += ft * gu;
                    }
                }
                Self::from_exact(self.group.clone(), m)
            }
            (Coefficients::Float { terms: a, tail: ta }, Coefficients::Float { terms: b, tail: tb }) => {
                let mut m: BTreeMap<GroupElement, f64> = BTreeMap::new();
                for (t, ft) in a {
                    for (u, gu) in b {
                        *m.entry(self.group.mul_unchecked(t, u)).or_default() += ft * gu;
                    }
                }
                let na: f64 = a.values().map(|c| c.abs()).sum();
                let nb: f64 = b.values().map(|c| c.abs()).sum();
                let tail = na * tb + ta * nb + ta * tb;
                Self::from_float(self.group.clone(), m, tail)?
            }
            _ => unreachable!(),
        })
    }

    /// `(Σ f_s s)* = Σ f_s s⁻¹`.
    pub fn involution(&self) -> Self {
        let inv = |s: &GroupElement| self.group.inverse_unchecked(s);
        match &self.coeffs {
            Coefficients::Exact(m) => Self::from_exact(
                self.group.clone(),
                m.iter().map(|(s, c)| (inv(s), c.clone())).collect(),
            ),
            Coefficients::Float { terms, tail } => Self {
                group: self.group.clone(),
                coeffs: Coefficients::Float {
                    terms: terms.iter().map(|(s, c)| (inv(s), *c)).collect(),
                    tail: *tail,
                },
            },
        }
    }

    /// Sum of absolute stored coefficients. The tail bound is reported separately by [`Self::tail`].
    pub fn l1_norm(&self) -> f64 {
        match &self.coeffs {
            Coefficients::Exact(m) => m.values().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).sum(),
            Coefficients::Float { terms, .. } => terms.values().map(|c| c.abs()).sum(),
        }
    }

    /// Exact `ℓ¹` norm of an integer element.
    pub fn l1_norm_exact(&self) -> Option<BigInt> {
        self.exact_terms().map(|m| m.values().map(|c| c.abs()).sum())
    }

    /// Drop float coefficients with `|c| < threshold`, moving their mass into the tail.
    pub fn prune(&self, threshold: f64) -> Self {
        match &self.coeffs {
            Coefficients::Exact(_) => self.clone(),
            Coefficients::Float { terms, tail } => {
                let mut dropped = 0.0;
                let kept = terms
                    .iter()
                    .filter(|(_, c)| {
                        if c.abs() < threshold {
                            dropped += c.abs();
                            false
                        } else {
                            true
                        }
                    })
                    .map(|(g, c)| (g.clone(), *c))
                    .collect();
                Self {
                    group: self.group.clone(),
                    coeffs: Coefficients::Float { terms: kept, tail: tail + dropped },
                }
            }
        }
    }

    /// Largest word length in the support.
    pub fn radius(&self) -> usize {
        self.support().iter().map(|g| self.group.word_length(g)).max().unwrap_or(0)
    }

    pub(crate) fn with_tail(mut self, extra: f64) -> Self {
        if let Coefficients::Float { tail, .. } = &mut self.coeffs {
            *tail += extra;
        }
        self
    }
}
