//! Fuglede–Kadison determinants through finite quotients of `ℤ^r`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{estimate, EntropySchedule};
use crate::error::{Error, Result};
use crate::group::text::format_ring;
use crate::group::{l1_inverse_with, Coefficients, GroupElement, GroupKind, GroupRingElement, GroupSpec, RingMatrix};

/// `f` acting by convolution on a finite quotient.
#[derive(Debug, Clone, PartialEq)]
pub enum QuotientMatrix {
    Exact(Vec<Vec<BigInt>>),
    Float(Vec<Vec<f64>>),
}

impl QuotientMatrix {
    pub fn dim(&self) -> usize {
        match self {
            QuotientMatrix::Exact(m) => m.len(),
            QuotientMatrix::Float(m) => m.len(),
        }
    }
}

/// Entry `(a, b)` is `Σ f_s` over `s` with `s·a ≡ b`; rows follow the residue indexing.
pub fn quotient_matrix(f: &GroupRingElement, moduli: &[u64]) -> Result<QuotientMatrix> {
    let g = f.group();
    if !matches!(g.kind(), GroupKind::Lattice { .. }) {
        return Err(Error::GroupMismatch("quotient matrices need a lattice group".into()));
    }
    if g.rank() != moduli.len() {
        return Err(Error::SizeMismatch(g.rank(), moduli.len()));
    }
    let q = GroupSpec::quotient(moduli.to_vec())?;
    let d = q.order().expect("finite quotient") as usize;
    let points = (0..d).map(|i| q.residue_from_index(i)).collect::<Result<Vec<_>>>()?;
    let column = |s: &GroupElement| -> Result<Vec<usize>> {
        let r = q.reduce(s)?;
        points.iter().map(|a| q.residue_index(&q.mul(&r, a)?)).collect()
    };
    match f.coefficients() {
        Coefficients::Exact(terms) => {
            let mut m = vec![vec![BigInt::zero(); d]; d];
            for (s, c) in terms {
                for (a, b) in column(s)?.into_iter().enumerate() {
                    m[a][b] += c;
                }
            }
            Ok(QuotientMatrix::Exact(m))
        }
        Coefficients::Float { terms, tail } => {
            if *tail > 0.0 {
                return Err(Error::Unsupported("quotient matrix of a truncated element".into()));
            }
            let mut m = vec![vec![0.0; d]; d];
            for (s, c) in terms {
                for (a, b) in column(s)?.into_iter().enumerate() {
                    m[a][b] += c;
                }
            }
            Ok(QuotientMatrix::Float(m))
        }
    }
}

/// Fraction-free Gaussian elimination.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// `ln|x|` for arbitrarily large integers.
pub fn ln_abs(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x.magnitude() >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// `(ln|det|, pivot ratio)` by partial-pivoting LU, or `None` when numerically singular.
pub fn lu_log_det(mut m: Vec<Vec<f64>>) -> Option<(f64, f64)> {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
    if n == 0 {
        return Some((0.0, 1.0));
    }
    if scale == 0.0 {
        return None;
    }
    let mut log = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs())).unwrap();
        m.swap(k, p);
        let piv = m[k][k];
        if piv.abs() <= 1e-12 * scale * n as f64 {
            return None;
        }
        lo = lo.min(piv.abs());
        hi = hi.max(piv.abs());
        log += piv.abs().ln();
        for i in k + 1..n {
            let factor = m[i][k] / piv;
            if factor != 0.0 {
                for j in k + 1..n {
                    m[i][j] -= factor * m[k][j];
                }
            }
        }
    }
    Some((log, hi / lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetMethod {
    Exact,
    Float,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDet {
    pub moduli: Vec<u64>,
    pub d: usize,
    pub method: DetMethod,
    /// Decimal determinant, for exact levels.
    pub det: Option<String>,
    pub log_abs_det: Option<f64>,
    /// `(1/d) log|det|`.
    pub normalized: Option<f64>,
    pub singular: bool,
    /// Largest over smallest pivot magnitude, for float levels.
    pub pivot_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub f: String,
    pub levels: Vec<LevelDet>,
    /// Mean of the last `window` nonsingular normalized values.
    pub estimate: f64,
    pub spread: f64,
    pub window: usize,
    pub exact_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetOptions {
    pub exact_cap: usize,
    pub window: usize,
}

impl Default for DetOptions {
    fn default() -> Self {
        Self { exact_cap: 512, window: 3 }
    }
}

pub fn level_det(f: &GroupRingElement, moduli: &[u64], exact_cap: usize) -> Result<LevelDet> {
    let m = quotient_matrix(f, moduli)?;
    let d = m.dim();
    let mut out = LevelDet {
        moduli: moduli.to_vec(),
        d,
        method: DetMethod::Exact,
        det: None,
        log_abs_det: None,
        normalized: None,
        singular: false,
        pivot_ratio: None,
    };
    let float = match m {
        QuotientMatrix::Exact(rows) if d <= exact_cap => {
            let det = bareiss_det(rows);
            out.singular = det.is_zero();
            if !out.singular {
                out.log_abs_det = Some(ln_abs(&det));
            }
            out.det = Some(det.to_string());
            None
        }
        QuotientMatrix::Exact(rows) => {
            Some(rows.into_iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect())
        }
        QuotientMatrix::Float(rows) => Some(rows),
    };
    if let Some(rows) = float {
        out.method = DetMethod::Float;
        match lu_log_det(rows) {
            Some((log, ratio)) => {
                out.log_abs_det = Some(log);
                out.pivot_ratio = Some(ratio);
            }
            None => out.singular = true,
        }
    }
    out.normalized = out.log_abs_det.map(|l| l / d as f64);
    Ok(out)
}

pub fn fk_det_estimate(f: &GroupRingElement, levels: &[Vec<u64>], opts: &DetOptions) -> Result<DetReport> {
    if f.is_zero() {
        return Err(Error::Precondition("f must be nonzero".into()));
    }
    if opts.window == 0 {
        return Err(Error::Precondition("aggregation window must be positive".into()));
    }
    let levels: Vec<LevelDet> =
        levels.par_iter().map(|m| level_det(f, m, opts.exact_cap)).collect::<Result<_>>()?;
    let values: Vec<f64> = levels.iter().filter_map(|l| l.normalized).collect();
    if values.is_empty() {
        return Err(Error::AllSingular);
    }
    let tail = &values[values.len().saturating_sub(opts.window)..];
    let estimate = tail.iter().sum::<f64>() / tail.len() as f64;
    let spread = tail.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - tail.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(DetReport { f: format_ring(f), levels, estimate, spread, window: opts.window, exact_cap: opts.exact_cap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeningerVerdict {
    #[serde(rename = "consistent-with-corollary")]
    Consistent,
    #[serde(rename = "unit-detected")]
    UnitDetected,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeningerReport {
    pub verdict: DeningerVerdict,
    pub det: DetReport,
    /// `log det` estimate, i.e. the margin of `det` above 1 on a log scale.
    pub log_margin: f64,
    /// Largest distance of an inverse coefficient to the nearest integer.
    pub integrality_gap: f64,
    pub inverse_support: usize,
    pub inverse_tail: f64,
    /// The rounded inverse `g` satisfies `f g = 1` exactly.
    pub rounded_inverse_exact: bool,
}

/// Screen `f` for units and compare the determinant estimate with 1.
pub fn deninger_check(f: &GroupRingElement, levels: &[Vec<u64>], opts: &DetOptions, tol: f64) -> Result<DeningerReport> {
    let g = f.group().clone();
    let inv = l1_inverse_with(&RingMatrix::scalar(f.clone()), tol, None)?;
    let h = inv.inverse.get(0, 0);
    let terms = h.float_terms();
    let integrality_gap = terms.iter().map(|(_, c)| (c - c.round()).abs()).fold(0.0, f64::max);
    let rounded: std::collections::BTreeMap<GroupElement, BigInt> = terms
        .iter()
        .filter(|(_, c)| c.round() != 0.0)
        .map(|(s, c)| (s.clone(), BigInt::from(c.round() as i64)))
        .collect();
    let candidate = GroupRingElement::from_exact(g.clone(), rounded);
    let rounded_inverse_exact = f.is_exact()
        && !candidate.is_zero()
        && f.mul(&candidate)? == GroupRingElement::one(g.clone())
        && candidate.mul(f)? == GroupRingElement::one(g);
    let det = fk_det_estimate(f, levels, opts)?;
    let unit = rounded_inverse_exact || (integrality_gap <= tol && h.tail() <= tol);
    let verdict = if unit {
        DeningerVerdict::UnitDetected
    } else if det.estimate > det.spread.max(tol) {
        DeningerVerdict::Consistent
    } else {
        DeningerVerdict::Inconclusive
    };
    Ok(DeningerReport {
        verdict,
        log_margin: det.estimate,
        det,
        integrality_gap,
        inverse_support: terms.len(),
        inverse_tail: h.tail(),
        rounded_inverse_exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub d: usize,
    /// `min_{F,δ} max_ε` of the per-level entropy values.
    pub entropy_lower: f64,
    /// `(1/d) log|det|` at the quotient of the same size, if computed.
    pub det_normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetEntropyReport {
    pub det: DetReport,
    pub levels: Vec<LevelComparison>,
    /// Largest per-level entropy lower bound.
    pub entropy_lower: f64,
    pub tolerance: f64,
    /// `entropy_lower ≤ det estimate + tolerance`.
    pub consistent: bool,
    /// Only the one-sided inequality is checked.
    pub equality_checked: bool,
    pub partial: bool,
}

pub fn det_vs_entropy(
    f: &GroupRingElement,
    levels: &[Vec<u64>],
    opts: &DetOptions,
    schedule: &EntropySchedule,
    tolerance: f64,
) -> Result<DetEntropyReport> {
    let det = fk_det_estimate(f, levels, opts)?;
    let ent = estimate(schedule)?;
    let mut out: Vec<LevelComparison> = Vec::new();
    for (li, sigma) in schedule.levels.iter().enumerate() {
        let cells: Vec<_> = ent.cells.iter().filter(|c| c.level == li && !c.value.is_nan()).collect();
        let mut lower = f64::INFINITY;
        for fi in 0..schedule.f_chain.len() {
            for &delta in &schedule.deltas {
                let best = cells
                    .iter()
                    .filter(|c| c.f_index == fi && c.delta == delta)
                    .map(|c| c.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                lower = lower.min(best);
            }
        }
        if cells.is_empty() {
            continue;
        }
        out.push(LevelComparison {
            d: sigma.d(),
            entropy_lower: lower,
            det_normalized: det.levels.iter().find(|l| l.d == sigma.d()).and_then(|l| l.normalized),
        });
    }
    let entropy_lower = out.iter().map(|l| l.entropy_lower).fold(f64::NEG_INFINITY, f64::max);
    Ok(DetEntropyReport {
        consistent: entropy_lower <= det.estimate + tolerance,
        det,
        levels: out,
        entropy_lower,
        tolerance,
        equality_checked: false,
        partial: ent.partial,
    })
}
