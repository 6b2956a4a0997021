//! Per-level sofic entropy estimates `(1/d) log N_ε(Map(ρ,F,δ,σ), ρ)` over
//! schedules of finite levels and parameter grids.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpec, PointPattern, Values};
use crate::error::{Error, Result};
use crate::group::text::format_element;
use crate::group::GroupElement;
use crate::microstates::{
    algebraic_microstate, equivariance_defects, fullshift_microstate, separated_count_classes, MetricKind,
    Microstate, SeparationOptions, SeparationReport, SignatureClasses,
};
pub use crate::actions::product_action;
use crate::sofic::SoficMap;

/// Which constructed microstates are enumerated at each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilyPolicy {
    /// `φ_ω` for every `ω ∈ {0..k−1}^d`. For subshifts only `ω` whose
    /// entries avoid forbidden patterns inside the window are kept.
    FullShift { radius: usize },
    /// The algebraic construction for every `ξ ∈ {low..=high}^{n d}`.
    Algebraic { radius: usize, low: i64, high: i64 },
}

#[derive(Debug, Clone)]
pub struct EntropySchedule {
    pub action: ActionSpec,
    pub levels: Vec<Arc<SoficMap>>,
    pub f_chain: Vec<Vec<GroupElement>>,
    /// Strictly decreasing.
    pub deltas: Vec<f64>,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub metric: MetricKind,
    pub family: FamilyPolicy,
    /// Largest family enumerated at one level.
    pub budget: u64,
    pub separation: SeparationOptions,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] > w[1])
}

impl EntropySchedule {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.f_chain.is_empty() || self.deltas.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Precondition("schedule grids must be nonempty".into()));
        }
        if !strictly_decreasing(&self.deltas) || !strictly_decreasing(&self.epsilons) {
            return Err(Error::Precondition("delta and epsilon grids must be strictly decreasing".into()));
        }
        if self.deltas.iter().chain(&self.epsilons).any(|x| !(*x >= 0.0)) {
            return Err(Error::Precondition("grid values must be nonnegative".into()));
        }
        if !self.levels.windows(2).all(|w| w[0].d() < w[1].d()) {
            return Err(Error::Precondition("level sizes must increase".into()));
        }
        if self.budget == 0 {
            return Err(Error::Precondition("budget must be positive".into()));
        }
        for (i, f) in self.f_chain.iter().enumerate() {
            if i > 0 && !self.f_chain[i - 1].iter().all(|g| f.contains(g)) {
                return Err(Error::Precondition("F-chain must be increasing".into()));
            }
            for sigma in &self.levels {
                if let Some(g) = f.iter().find(|g| !sigma.contains(g)) {
                    return Err(Error::OutsideSupport(format_element(g)));
                }
            }
        }
        match (&self.action, &self.family) {
            (ActionSpec::Symbolic(_), FamilyPolicy::FullShift { .. })
            | (ActionSpec::Algebraic(_), FamilyPolicy::Algebraic { .. }) => Ok(()),
            _ => Err(Error::ActionMismatch("family policy does not match the action".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    #[serde(rename = "done")]
    Done,
    #[serde(rename = "budget-exceeded")]
    BudgetExceeded,
}

mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else if v.is_nan() {
            "nan".serialize(s)
        } else if *v > 0.0 {
            "inf".serialize(s)
        } else {
            "-inf".serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Num(x) => x,
            Repr::Text(t) => match t.as_str() {
                "-inf" => f64::NEG_INFINITY,
                "inf" => f64::INFINITY,
                _ => f64::NAN,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub level: usize,
    pub d: usize,
    pub f_index: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub family_size: u64,
    /// Family members that lie in `Map(ρ,F,δ,σ)`.
    pub admitted: u64,
    pub separation: Option<SeparationReport>,
    /// `(1/d) log N`, `−∞` for an empty family, NaN when not computed.
    #[serde(with = "extended_float")]
    pub value: f64,
    #[serde(with = "extended_float")]
    pub value_log2: f64,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub f_index: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub values: Vec<f64>,
    #[serde(with = "extended_float")]
    pub max: f64,
    #[serde(with = "extended_float")]
    pub min: f64,
    #[serde(with = "extended_float")]
    pub last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub metric: MetricKind,
    pub cells: Vec<CellReport>,
    pub summaries: Vec<CellSummary>,
    /// `log k` for symbolic actions, where `N_ε ≤ k^d` by coordinate counting.
    pub upper_bound: Option<f64>,
    /// Algebraic runs report lower bounds only.
    pub lower_bound_only: bool,
    /// Some cells were skipped for budget reasons.
    pub partial: bool,
    /// Violations of the expected monotonicity in δ and ε.
    pub monotonicity_violations: Vec<String>,
}

fn family_size(schedule: &EntropySchedule, d: usize) -> Option<u64> {
    let (base, len) = match (&schedule.action, &schedule.family) {
        (ActionSpec::Symbolic(s), FamilyPolicy::FullShift { .. }) => (u64::from(s.alphabet()), d),
        (ActionSpec::Algebraic(a), FamilyPolicy::Algebraic { low, high, .. }) => {
            ((high - low + 1).max(0) as u64, d * a.n())
        }
        _ => return None,
    };
    base.checked_pow(u32::try_from(len).ok()?)
}

fn digits(mut m: u64, base: u64, len: usize) -> Vec<u64> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = m % base;
        m /= base;
    }
    out
}

/// The `m`-th member of the level's family, or `None` if it is excluded (non-admissible subshift pattern).
fn member(schedule: &EntropySchedule, sigma: &Arc<SoficMap>, m: u64) -> Result<Option<Microstate>> {
    let d = sigma.d();
    match (&schedule.action, &schedule.family) {
        (ActionSpec::Symbolic(s), FamilyPolicy::FullShift { radius }) => {
            let omega: Vec<u32> = digits(m, u64::from(s.alphabet()), d).into_iter().map(|x| x as u32).collect();
            let phi = fullshift_microstate(&omega, sigma.clone(), *radius)?;
            if !s.is_full_shift() {
                for e in phi.entries() {
                    if !s.admissible(e)? {
                        return Ok(None);
                    }
                }
            }
            Ok(Some(phi))
        }
        (ActionSpec::Algebraic(a), FamilyPolicy::Algebraic { radius, low, high }) => {
            let base = (high - low + 1) as u64;
            let flat = digits(m, base, d * a.n());
            let xi: Vec<Vec<i64>> = flat.chunks(a.n()).map(|c| c.iter().map(|&x| x as i64 + low).collect()).collect();
            let bound = low.abs().max(high.abs());
            Ok(Some(algebraic_microstate(&xi, a, sigma.clone(), *radius, bound)?.0))
        }
        _ => Err(Error::ActionMismatch("family policy does not match the action".into())),
    }
}

struct LevelData {
    classes: SignatureClasses,
    /// `min_defect[class][f_index]` over family members in the class.
    min_defect: Vec<Vec<f64>>,
}

fn enumerate_level(schedule: &EntropySchedule, sigma: &Arc<SoficMap>, size: u64) -> Result<LevelData> {
    const CHUNK: u64 = 4096;
    let chunks: Vec<u64> = (0..size.div_ceil(CHUNK)).collect();
    let results: Vec<Vec<(crate::microstates::Signature, Vec<f64>)>> = chunks
        .par_iter()
        .map(|&c| {
            let mut out = Vec::new();
            for m in c * CHUNK..((c + 1) * CHUNK).min(size) {
                if let Some(phi) = member(schedule, sigma, m)? {
                    let defects = schedule
                        .f_chain
                        .iter()
                        .map(|f| Ok(equivariance_defects(&schedule.action, &phi, f)?.into_iter().fold(0.0, f64::max)))
                        .collect::<Result<Vec<f64>>>()?;
                    out.push((phi.signature(), defects));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut data = LevelData { classes: SignatureClasses::new(), min_defect: Vec::new() };
    for (sig, defects) in results.into_iter().flatten() {
        let i = data.classes.insert(sig);
        if i == data.min_defect.len() {
            data.min_defect.push(defects);
        } else {
            for (slot, v) in data.min_defect[i].iter_mut().zip(defects) {
                *slot = slot.min(v);
            }
        }
    }
    Ok(data)
}

/// Run every grid cell of the schedule.
pub fn estimate(schedule: &EntropySchedule) -> Result<EntropyReport> {
    schedule.validate()?;
    let mut cells = Vec::new();
    let mut partial = false;
    for (li, sigma) in schedule.levels.iter().enumerate() {
        let d = sigma.d();
        let size = family_size(schedule, d).filter(|&s| s <= schedule.budget);
        let data = match size {
            Some(s) => Some(enumerate_level(schedule, sigma, s)?),
            None => None,
        };
        for fi in 0..schedule.f_chain.len() {
            for &delta in &schedule.deltas {
                let admitted: Vec<usize> = data
                    .as_ref()
                    .map(|dt| (0..dt.classes.len()).filter(|&c| dt.min_defect[c][fi] < delta).collect())
                    .unwrap_or_default();
                for &epsilon in &schedule.epsilons {
                    let mut cell = CellReport {
                        level: li,
                        d,
                        f_index: fi,
                        delta,
                        epsilon,
                        family_size: data.as_ref().map_or(0, |dt| dt.classes.total()),
                        admitted: admitted.len() as u64,
                        separation: None,
                        value: f64::NAN,
                        value_log2: f64::NAN,
                        status: CellStatus::Done,
                    };
                    match &data {
                        None => {
                            cell.status = CellStatus::BudgetExceeded;
                            partial = true;
                        }
                        Some(dt) => {
                            let count = separated_count_classes(
                                &schedule.action,
                                &dt.classes,
                                &admitted,
                                epsilon,
                                schedule.metric,
                                &schedule.separation,
                            );
                            match count {
                                Ok(rep) => {
                                    cell.value = level_value(rep.count, d);
                                    cell.value_log2 = cell.value / std::f64::consts::LN_2;
                                    cell.separation = Some(rep);
                                }
                                Err(Error::BudgetExceeded(_)) => {
                                    cell.status = CellStatus::BudgetExceeded;
                                    partial = true;
                                }
                                Err(e) => return Err(e),
                            }
                        }
                    }
                    cells.push(cell);
                }
            }
        }
    }
    let summaries = summarize(schedule, &cells);
    let monotonicity_violations = monotonicity(&cells);
    Ok(EntropyReport {
        metric: schedule.metric,
        cells,
        summaries,
        upper_bound: match &schedule.action {
            ActionSpec::Symbolic(s) => Some(f64::from(s.alphabet()).ln()),
            ActionSpec::Algebraic(_) => None,
        },
        lower_bound_only: matches!(schedule.action, ActionSpec::Algebraic(_)),
        partial,
        monotonicity_violations,
    })
}

/// `(1/d) log count`, with `−∞` for an empty family.
pub fn level_value(count: u64, d: usize) -> f64 {
    if count == 0 {
        f64::NEG_INFINITY
    } else {
        (count as f64).ln() / d as f64
    }
}

fn summarize(schedule: &EntropySchedule, cells: &[CellReport]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for fi in 0..schedule.f_chain.len() {
        for &delta in &schedule.deltas {
            for &epsilon in &schedule.epsilons {
                let values: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.f_index == fi && c.delta == delta && c.epsilon == epsilon)
                    .map(|c| c.value)
                    .collect();
                let finite_or_empty = values.iter().filter(|v| !v.is_nan());
                let any_empty = values.contains(&f64::NEG_INFINITY);
                let max = finite_or_empty.clone().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = if any_empty {
                    f64::NEG_INFINITY
                } else {
                    finite_or_empty.copied().fold(f64::INFINITY, f64::min)
                };
                let last = values.last().copied().unwrap_or(f64::NAN);
                out.push(CellSummary {
                    f_index: fi,
                    delta,
                    epsilon,
                    values: values.clone(),
                    max: if any_empty && max == f64::NEG_INFINITY { f64::NEG_INFINITY } else { max },
                    min,
                    last,
                });
            }
        }
    }
    out
}

/// For a fixed family, N grows with δ and shrinks with ε.
fn monotonicity(cells: &[CellReport]) -> Vec<String> {
    let mut out = Vec::new();
    for a in cells {
        for b in cells {
            if a.level != b.level || a.f_index != b.f_index || a.value.is_nan() || b.value.is_nan() {
                continue;
            }
            if a.epsilon == b.epsilon && a.delta < b.delta && a.value > b.value {
                out.push(format!("level {} eps {}: value drops as delta grows {} -> {}", a.level, a.epsilon, a.delta, b.delta));
            }
            if a.delta == b.delta && a.epsilon < b.epsilon && a.value < b.value {
                out.push(format!("level {} delta {}: value grows with eps {} -> {}", a.level, a.delta, a.epsilon, b.epsilon));
            }
        }
    }
    out
}

/// Pair microstates of `X` and `Y` into a microstate of `X × Y` over the product alphabet.
pub fn combine_microstates(product: &ActionSpec, phi: &Microstate, psi: &Microstate) -> Result<Microstate> {
    let p = product.as_symbolic()?;
    if p.factors().len() != 2 {
        return Err(Error::ActionMismatch("expected a two-factor product".into()));
    }
    if phi.d() != psi.d() {
        return Err(Error::SizeMismatch(phi.d(), psi.d()));
    }
    let entries = phi
        .entries()
        .iter()
        .zip(psi.entries())
        .map(|(x, y)| match (x.values(), y.values()) {
            (Values::Symbols(a), Values::Symbols(b)) if x.window() == y.window() => PointPattern::symbolic(
                x.window().clone(),
                a.iter().zip(b).map(|(&u, &v)| p.compose_symbol(&[u, v])).collect(),
            ),
            _ => Err(Error::ActionMismatch("product needs symbolic entries on equal windows".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Microstate::new(phi.sigma().clone(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::SymbolicAction;
    use crate::group::GroupSpec;
    use crate::microstates::CountMode;
    use crate::sofic::quotient_sofic;

    fn z() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn schedule(action: ActionSpec, ns: std::ops::RangeInclusive<u64>, deltas: Vec<f64>) -> EntropySchedule {
        EntropySchedule {
            action,
            levels: ns.map(|n| Arc::new(quotient_sofic(&z(), &[n], 1).unwrap())).collect(),
            f_chain: vec![z().ball(1)],
            deltas,
            epsilons: vec![0.5],
            metric: MetricKind::RhoInf,
            family: FamilyPolicy::FullShift { radius: 1 },
            budget: 1 << 20,
            separation: SeparationOptions::default(),
        }
    }

    #[test]
    fn full_shift_two_is_log_two() {
        let s = schedule(ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap()), 4..=10, vec![0.1]);
        let r = estimate(&s).unwrap();
        for c in &r.cells {
            assert_eq!(c.separation.as_ref().unwrap().count, 1 << c.d);
            assert!((c.value - 2f64.ln()).abs() < 1e-12);
        }
        assert!(r.monotonicity_violations.is_empty());
        assert!(!r.partial);
    }

    #[test]
    fn zero_delta_gives_minus_infinity() {
        let s = schedule(ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap()), 4..=4, vec![0.0]);
        let r = estimate(&s).unwrap();
        assert_eq!(r.cells[0].value, f64::NEG_INFINITY);
        assert_eq!(r.summaries[0].min, f64::NEG_INFINITY);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"-inf\""));
    }

    #[test]
    fn product_family_is_log_six() {
        let a = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap());
        let b = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 3).unwrap());
        let p = product_action(&a, &b).unwrap();
        let r = estimate(&schedule(p, 4..=5, vec![0.1])).unwrap();
        for c in &r.cells {
            assert_eq!(c.separation.as_ref().unwrap().count, 6u64.pow(c.d as u32));
        }
    }

    #[test]
    fn budget_marks_partial() {
        let mut s = schedule(ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap()), 4..=6, vec![0.1]);
        s.budget = 32;
        let r = estimate(&s).unwrap();
        assert!(r.partial);
        assert_eq!(r.cells[2].status, CellStatus::BudgetExceeded);
        assert_eq!(r.cells[0].status, CellStatus::Done);
    }

    #[test]
    fn golden_mean_counts_local_patterns() {
        let gm = ActionSpec::Symbolic(SymbolicAction::golden_mean());
        let mut s = schedule(gm, 5..=5, vec![0.1]);
        s.separation.mode = CountMode::Exact;
        let r = estimate(&s).unwrap();
        // cyclic binary words of length 5 with no two adjacent 1s: Lucas number L_5 = 11
        assert_eq!(r.cells[0].separation.as_ref().unwrap().count, 11);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut s = schedule(ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap()), 4..=5, vec![0.1, 0.2]);
        assert!(s.validate().is_err());
        s.deltas = vec![0.1];
        s.f_chain = vec![z().ball(2)];
        assert!(matches!(s.validate(), Err(Error::OutsideSupport(_))));
    }
}
