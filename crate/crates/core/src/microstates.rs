//! Maps `φ: {1..d} → X`, their distances, approximate equivariance and
//! separated counting.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{reduce_mod1, ActionSpec, AlgebraicAction, PointPattern, PointValue, Values, Window};
use crate::error::{Error, Result};
use crate::group::text::format_element;
use crate::group::GroupElement;
use crate::sofic::SoficMap;

#[derive(Debug, Clone)]
pub struct Microstate {
    sigma: Arc<SoficMap>,
    entries: Vec<PointPattern>,
}

impl Microstate {
    pub fn new(sigma: Arc<SoficMap>, entries: Vec<PointPattern>) -> Result<Self> {
        if entries.len() != sigma.d() {
            return Err(Error::SizeMismatch(entries.len(), sigma.d()));
        }
        Ok(Self { sigma, entries })
    }

    pub fn sigma(&self) -> &Arc<SoficMap> {
        &self.sigma
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[PointPattern] {
        &self.entries
    }

    pub fn entry(&self, a: usize) -> &PointPattern {
        &self.entries[a]
    }

    /// Identity-coordinate values, which determine every distance computed here.
    pub fn signature(&self) -> Signature {
        match self.entries.first().map(|e| e.values()) {
            Some(Values::Torus { n, .. }) => {
                let mut v = Vec::with_capacity(self.d() * n);
                for e in &self.entries {
                    if let PointValue::Torus(x) = e.identity_value() {
                        v.extend_from_slice(x);
                    }
                }
                Signature::Torus { n: *n, values: v }
            }
            _ => Signature::Symbols(
                self.entries
                    .iter()
                    .map(|e| match e.identity_value() {
                        PointValue::Symbol(s) => s,
                        PointValue::Torus(_) => unreachable!("uniform entries"),
                    })
                    .collect(),
            ),
        }
    }
}

/// The identity coordinates `(φ(1)_e, …, φ(d)_e)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Signature {
    Symbols(Vec<u32>),
    Torus { n: usize, values: Vec<f64> },
}

impl Signature {
    pub fn d(&self) -> usize {
        match self {
            Signature::Symbols(s) => s.len(),
            Signature::Torus { n, values } => values.len() / n,
        }
    }

    fn value(&self, a: usize) -> PointValue<'_> {
        match self {
            Signature::Symbols(s) => PointValue::Symbol(s[a]),
            Signature::Torus { n, values } => PointValue::Torus(&values[a * n..(a + 1) * n]),
        }
    }

    fn key(&self) -> Vec<u64> {
        match self {
            Signature::Symbols(s) => s.iter().map(|&x| u64::from(x)).collect(),
            Signature::Torus { values, .. } => values.iter().map(|x| x.to_bits()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "rho2")]
    Rho2,
    #[serde(rename = "rhoinf")]
    RhoInf,
}

impl MetricKind {
    fn combine(self, per_index: impl Iterator<Item = f64>, d: usize) -> f64 {
        match self {
            MetricKind::Rho2 => (per_index.map(|x| x * x).sum::<f64>() / d as f64).sqrt(),
            MetricKind::RhoInf => per_index.fold(0.0, f64::max),
        }
    }
}

fn signature_distance(action: &ActionSpec, x: &Signature, y: &Signature, metric: MetricKind) -> Result<f64> {
    if x.d() != y.d() {
        return Err(Error::SizeMismatch(x.d(), y.d()));
    }
    let d = x.d();
    let per = (0..d).map(|a| action.value_distance(x.value(a), y.value(a))).collect::<Result<Vec<_>>>()?;
    Ok(metric.combine(per.into_iter(), d))
}

fn pointwise(action: &ActionSpec, phi: &Microstate, psi: &Microstate) -> Result<Vec<f64>> {
    if phi.d() != psi.d() {
        return Err(Error::SizeMismatch(phi.d(), psi.d()));
    }
    phi.entries.iter().zip(&psi.entries).map(|(x, y)| action.rho(x, y)).collect()
}

/// `ρ_2(φ,ψ) = ((1/d) Σ_a ρ(φ(a),ψ(a))²)^{1/2}`.
pub fn rho2_maps(action: &ActionSpec, phi: &Microstate, psi: &Microstate) -> Result<f64> {
    let p = pointwise(action, phi, psi)?;
    Ok(MetricKind::Rho2.combine(p.into_iter(), phi.d()))
}

/// `ρ_∞(φ,ψ) = max_a ρ(φ(a),ψ(a))`.
pub fn rhoinf_maps(action: &ActionSpec, phi: &Microstate, psi: &Microstate) -> Result<f64> {
    let p = pointwise(action, phi, psi)?;
    Ok(MetricKind::RhoInf.combine(p.into_iter(), phi.d()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub delta: f64,
    /// `ρ_2(φ∘σ_s, α_s∘φ)` for each `s ∈ F`, in the order given.
    pub defects: Vec<(String, f64)>,
    pub holds: bool,
}

impl EquivarianceReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// Per-`s` defects `ρ_2(φ∘σ_s, α_s∘φ)`, comparing `φ(σ_s a)_e` with `φ(a)_{s⁻¹}`.
pub fn equivariance_defects(action: &ActionSpec, phi: &Microstate, f: &[GroupElement]) -> Result<Vec<f64>> {
    let g = phi.sigma.group();
    f.iter()
        .map(|s| {
            let p = phi.sigma.perm(s)?;
            let si = g.inverse(s)?;
            let per = (0..phi.d())
                .map(|a| {
                    let moved = phi.entries[p[a] as usize].identity_value();
                    let shifted = phi.entries[a].value_at(&si)?;
                    action.value_distance(moved, shifted)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MetricKind::Rho2.combine(per.into_iter(), phi.d()))
        })
        .collect()
}

/// Membership in `Map(ρ, F, δ, σ)` with the strict inequality.
pub fn is_microstate(action: &ActionSpec, phi: &Microstate, f: &[GroupElement], delta: f64) -> Result<EquivarianceReport> {
    let defects = equivariance_defects(action, phi, f)?;
    let holds = defects.iter().all(|&v| v < delta);
    Ok(EquivarianceReport {
        delta,
        defects: f.iter().map(format_element).zip(defects).collect(),
        holds,
    })
}

/// The elements `t⁻¹` for `t` in the ball of radius `r`, each checked against the support.
fn window_perms<'a>(sigma: &'a SoficMap, window: &Window) -> Result<Vec<&'a [u32]>> {
    let g = sigma.group();
    window.elems().iter().map(|t| sigma.perm(&g.inverse(t)?)).collect()
}

/// `φ_ω(a)_t = ω(σ_{t⁻¹}(a))` on the ball of radius `radius`.
pub fn fullshift_microstate(omega: &[u32], sigma: Arc<SoficMap>, radius: usize) -> Result<Microstate> {
    if omega.len() != sigma.d() {
        return Err(Error::SizeMismatch(omega.len(), sigma.d()));
    }
    let window = Window::ball(sigma.group(), radius);
    let perms = window_perms(&sigma, &window)?;
    let entries = (0..sigma.d())
        .map(|a| PointPattern::symbolic(window.clone(), perms.iter().map(|p| omega[p[a] as usize]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Microstate::new(sigma, entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicReport {
    /// `M · max_j Σ_i tail((A*)⁻¹_{ij})`, the error from truncating the inverse.
    pub tail_error: f64,
    /// Largest word length of an element of the σ-support that was used.
    pub support_used: usize,
}

/// `φ(a) = P(h(a)(A*)⁻¹)` with `h(a)_{t⁻¹} = ξ(σ_t a)`, on the ball of radius `radius`.
///
/// Coordinate `u` of `h(a)·B` is `Σ_{i,g} B_{ij,g} ξ_i(σ_{g u⁻¹}(a))`.
pub fn algebraic_microstate(
    xi: &[Vec<i64>],
    action: &AlgebraicAction,
    sigma: Arc<SoficMap>,
    radius: usize,
    bound: i64,
) -> Result<(Microstate, AlgebraicReport)> {
    let n = action.n();
    let d = sigma.d();
    if xi.len() != d {
        return Err(Error::SizeMismatch(xi.len(), d));
    }
    if xi.iter().any(|v| v.len() != n || v.iter().any(|c| c.abs() > bound)) {
        return Err(Error::Precondition(format!("xi must be {n}-vectors bounded by {bound}")));
    }
    let g = sigma.group();
    let b = action.inverse();
    let window = Window::ball(g, radius);
    let mut support_used = 0;
    // plan[u][j] = list of (permutation, i, β)
    let mut plan: Vec<Vec<Vec<(&[u32], usize, f64)>>> = Vec::with_capacity(window.len());
    for u in window.elems() {
        let ui = g.inverse(u)?;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut terms = Vec::new();
            for i in 0..n {
                for (h, beta) in b.get(i, j).float_terms() {
                    let s = g.mul(&h, &ui)?;
                    support_used = support_used.max(g.word_length(&s));
                    terms.push((sigma.perm(&s)?, i, beta));
                }
            }
            cols.push(terms);
        }
        plan.push(cols);
    }
    let tail_j = (0..n).map(|j| (0..n).map(|i| b.get(i, j).tail()).sum::<f64>()).fold(0.0, f64::max);
    let tail_error = bound as f64 * tail_j;
    let entries = (0..d)
        .map(|a| {
            let mut coords = Vec::with_capacity(window.len() * n);
            for cols in &plan {
                for terms in cols {
                    let v: f64 = terms.iter().map(|(p, i, beta)| beta * xi[p[a] as usize][*i] as f64).sum();
                    coords.push(reduce_mod1(v));
                }
            }
            PointPattern::torus(window.clone(), n, coords, tail_error)
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma2 = sigma.clone();
    drop(plan);
    Ok((Microstate::new(sigma2, entries)?, AlgebraicReport { tail_error, support_used }))
}

/// Sufficient conditions from the construction: truncation error below `δ/2` and
/// the multiplicative locus `Λ` of density at least `1 − (δ/2)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionThresholds {
    pub tail_error: f64,
    pub lambda_fraction: f64,
    pub required_lambda_fraction: f64,
    pub holds: bool,
}

/// `Λ = {a : σ_t σ_s a = σ_{ts} a for t ∈ K⁻¹, s ∈ F}` with `K⁻¹` the elements used by the inverse.
pub fn construction_thresholds(
    action: &AlgebraicAction,
    sigma: &SoficMap,
    f: &[GroupElement],
    delta: f64,
    bound: i64,
) -> Result<ConstructionThresholds> {
    let g = sigma.group();
    let n = action.n();
    let mut kinv = Vec::new();
    for i in 0..n {
        for j in 0..n {
            kinv.extend(action.inverse().get(i, j).support());
        }
    }
    kinv.sort();
    kinv.dedup();
    let mut good = vec![true; sigma.d()];
    for t in &kinv {
        let pt = sigma.perm(t)?;
        for s in f {
            let ps = sigma.perm(s)?;
            let pts = sigma.perm(&g.mul(t, s)?)?;
            for (a, ok) in good.iter_mut().enumerate() {
                if pt[ps[a] as usize] != pts[a] {
                    *ok = false;
                }
            }
        }
    }
    let lambda_fraction = good.iter().filter(|&&x| x).count() as f64 / sigma.d() as f64;
    let tail_j = (0..n).map(|j| (0..n).map(|i| action.inverse().get(i, j).tail()).sum::<f64>()).fold(0.0, f64::max);
    let tail_error = bound as f64 * tail_j;
    let required = 1.0 - (delta / 2.0).powi(2);
    Ok(ConstructionThresholds {
        tail_error,
        lambda_fraction,
        required_lambda_fraction: required,
        holds: tail_error < delta / 2.0 && lambda_fraction >= required,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "greedy")]
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "greedy-lower")]
    GreedyLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationOptions {
    pub mode: CountMode,
    /// Maximum number of distinct classes for the conflict-graph search.
    pub exact_cap: usize,
    /// Branch-and-bound node budget.
    pub node_budget: u64,
    pub seed: u64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self { mode: CountMode::Exact, exact_cap: 1 << 14, node_budget: 50_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub epsilon: f64,
    pub metric: MetricKind,
    pub count: u64,
    pub bound: BoundKind,
    pub family_size: u64,
    /// Number of distinct identity-coordinate classes (distance-0 classes).
    pub classes: u64,
    pub seed: Option<u64>,
}

/// Distinct signatures with their multiplicities, in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct SignatureClasses {
    index: HashMap<Vec<u64>, usize>,
    reps: Vec<Signature>,
    total: u64,
}

impl SignatureClasses {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the class index of `sig`.
    pub fn insert(&mut self, sig: Signature) -> usize {
        self.total += 1;
        let key = sig.key();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.reps.len();
        self.index.insert(key, i);
        self.reps.push(sig);
        i
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn reps(&self) -> &[Signature] {
        &self.reps
    }
}

/// Maximum cardinality of a `(ρ, ε)`-separated subset (or a greedy lower bound).
pub fn separated_count<'a>(
    action: &ActionSpec,
    family: impl IntoIterator<Item = &'a Microstate>,
    epsilon: f64,
    metric: MetricKind,
    opts: &SeparationOptions,
) -> Result<SeparationReport> {
    let mut classes = SignatureClasses::new();
    for m in family {
        classes.insert(m.signature());
    }
    let subset: Vec<usize> = (0..classes.len()).collect();
    separated_count_classes(action, &classes, &subset, epsilon, metric, opts)
}

/// As [`separated_count`], over a chosen subset of precomputed classes.
pub fn separated_count_classes(
    action: &ActionSpec,
    classes: &SignatureClasses,
    subset: &[usize],
    epsilon: f64,
    metric: MetricKind,
    opts: &SeparationOptions,
) -> Result<SeparationReport> {
    let mut report = SeparationReport {
        epsilon,
        metric,
        count: 0,
        bound: match opts.mode {
            CountMode::Exact => BoundKind::Exact,
            CountMode::Greedy => BoundKind::GreedyLower,
        },
        family_size: classes.total(),
        classes: subset.len() as u64,
        seed: None,
    };
    if subset.is_empty() {
        return Ok(report);
    }
    let reps: Vec<&Signature> = subset.iter().map(|&i| &classes.reps[i]).collect();
    let d = reps[0].d();
    let dist = |x: usize, y: usize| signature_distance(action, reps[x], reps[y], metric);

    if opts.mode == CountMode::Exact {
        // Symbolic distances between distinct classes are bounded below.
        if let ActionSpec::Symbolic(_) = action {
            let floor = match metric {
                MetricKind::RhoInf => 1.0,
                MetricKind::Rho2 => (1.0 / d as f64).sqrt(),
            };
            if epsilon <= floor {
                report.count = reps.len() as u64;
                return Ok(report);
            }
        }
        if reps.len() > opts.exact_cap {
            return Err(Error::BudgetExceeded(format!(
                "{} classes exceed the exact cap {}",
                reps.len(),
                opts.exact_cap
            )));
        }
        let m = reps.len();
        let mut adj = vec![Vec::new(); m];
        for x in 0..m {
            for y in x + 1..m {
                let v = dist(x, y)?;
                if v < epsilon {
                    adj[x].push(y);
                    adj[y].push(x);
                }
            }
        }
        report.count = max_independent_set(&adj, opts.node_budget)?.len() as u64;
        return Ok(report);
    }

    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let mut chosen: Vec<usize> = Vec::new();
    for x in order {
        let mut ok = true;
        for &y in &chosen {
            if dist(x, y)? < epsilon {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(x);
        }
    }
    report.count = chosen.len() as u64;
    report.seed = Some(opts.seed);
    Ok(report)
}

/// Maximum independent set of a graph given by adjacency lists, component by component.
pub fn max_independent_set(adj: &[Vec<usize>], node_budget: u64) -> Result<Vec<usize>> {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut nodes = 0u64;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut i = 0;
        while i < members.len() {
            for &w in &adj[members[i]] {
                if comp[w] == usize::MAX {
                    comp[w] = start;
                    members.push(w);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let ladj: Vec<Bits> = members
            .iter()
            .map(|&v| {
                let mut b = Bits::new(members.len());
                for w in &adj[v] {
                    b.set(local[w]);
                }
                b
            })
            .collect();
        let mut search = Mis { adj: &ladj, best: Vec::new(), nodes: &mut nodes, budget: node_budget };
        let mut all = Bits::new(members.len());
        for i in 0..members.len() {
            all.set(i);
        }
        search.run(all, &mut Vec::new())?;
        out.extend(search.best.iter().map(|&i| members[i]));
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn and_count(&self, o: &Bits) -> usize {
        self.0.iter().zip(&o.0).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }
    fn minus(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }
}

struct Mis<'a> {
    adj: &'a [Bits],
    best: Vec<usize>,
    nodes: &'a mut u64,
    budget: u64,
}

impl Mis<'_> {
    fn run(&mut self, mut cand: Bits, cur: &mut Vec<usize>) -> Result<()> {
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return Err(Error::BudgetExceeded(format!("independent-set search exceeded {} nodes", self.budget)));
        }
        let depth = cur.len();
        // Vertices of degree <= 1 in the candidate graph can always be taken.
        loop {
            let pick = cand.iter().find(|&v| self.adj[v].and_count(&cand) <= 1);
            match pick {
                Some(v) => {
                    cur.push(v);
                    cand.clear(v);
                    cand = cand.minus(&self.adj[v]);
                }
                None => break,
            }
        }
        let remaining = cand.count();
        if remaining == 0 {
            if cur.len() > self.best.len() {
                self.best = cur.clone();
            }
        } else if cur.len() + remaining > self.best.len() {
            let v = cand.iter().max_by_key(|&v| (self.adj[v].and_count(&cand), std::cmp::Reverse(v))).unwrap();
            let mut with = cand.minus(&self.adj[v]);
            with.clear(v);
            cur.push(v);
            self.run(with, cur)?;
            cur.pop();
            let mut without = cand;
            without.clear(v);
            self.run(without, cur)?;
        }
        cur.truncate(depth);
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct DumpEntry {
    radius: usize,
    window: Vec<String>,
    values: serde_json::Value,
    tail: f64,
}

/// JSON record of a microstate with a hash of its sofic map.
pub fn dump(phi: &Microstate) -> serde_json::Value {
    let sigma_hash = hex::encode(Sha256::digest(phi.sigma.to_text().as_bytes()));
    let entries: Vec<DumpEntry> = phi
        .entries
        .iter()
        .map(|e| DumpEntry {
            radius: e.radius(),
            window: e.window().elems().iter().map(format_element).collect(),
            values: match e.values() {
                Values::Symbols(s) => serde_json::json!(s),
                Values::Torus { coords, .. } => serde_json::json!(coords),
            },
            tail: e.tail(),
        })
        .collect();
    serde_json::json!({ "d": phi.d(), "sigma": sigma_hash, "entries": entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::SymbolicAction;
    use crate::group::text::parse_ring;
    use crate::group::{GroupSpec, RingMatrix};
    use crate::sofic::quotient_sofic;

    fn z() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn el(v: i64) -> GroupElement {
        GroupElement::Lattice(vec![v])
    }

    fn shift(k: u32) -> ActionSpec {
        ActionSpec::Symbolic(SymbolicAction::full_shift(z(), k).unwrap())
    }

    #[test]
    fn one_disagreement_distances() {
        let s = Arc::new(quotient_sofic(&z(), &[4], 1).unwrap());
        let a = fullshift_microstate(&[0, 1, 0, 1], s.clone(), 0).unwrap();
        let b = fullshift_microstate(&[0, 1, 1, 1], s, 0).unwrap();
        assert_eq!(rho2_maps(&shift(2), &a, &b).unwrap(), 0.5);
        assert_eq!(rhoinf_maps(&shift(2), &a, &b).unwrap(), 1.0);
        assert_eq!(rho2_maps(&shift(2), &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn fullshift_microstate_identity_coordinate() {
        let s = Arc::new(quotient_sofic(&z(), &[5], 1).unwrap());
        let phi = fullshift_microstate(&[1, 2, 1, 2, 1], s, 1).unwrap();
        for a in 0..5 {
            assert_eq!(phi.entry(a).symbol_at(&el(0)).unwrap(), [1, 2, 1, 2, 1][a]);
            // φ(a)_t = ω(a − t)
            assert_eq!(phi.entry(a).symbol_at(&el(1)).unwrap(), [1, 2, 1, 2, 1][(a + 4) % 5]);
        }
        let r = is_microstate(&shift(3), &phi, &[el(1), el(-1)], 1e-9).unwrap();
        assert!(r.holds);
        assert_eq!(r.max_defect(), 0.0);
    }

    #[test]
    fn violating_map_fails() {
        let s = Arc::new(quotient_sofic(&z(), &[4], 1).unwrap());
        let w = Window::ball(&z(), 1);
        // identity coordinate 0 but every neighbour 1: never equivariant
        let entries = (0..4).map(|_| PointPattern::from_fn(w.clone(), |g| u32::from(*g != el(0)))).collect();
        let phi = Microstate::new(s, entries).unwrap();
        let r = is_microstate(&shift(2), &phi, &[el(1)], 1.0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.max_defect(), 1.0);
    }

    #[test]
    fn small_family_counts() {
        let s = Arc::new(quotient_sofic(&z(), &[3], 1).unwrap());
        let fam: Vec<Microstate> = (0..8u32)
            .map(|m| fullshift_microstate(&[m & 1, (m >> 1) & 1, (m >> 2) & 1], s.clone(), 1).unwrap())
            .collect();
        let opts = SeparationOptions::default();
        let r = separated_count(&shift(2), &fam, 0.5, MetricKind::RhoInf, &opts).unwrap();
        assert_eq!(r.count, 8);
        let big = separated_count(&shift(2), &fam, 1.5, MetricKind::RhoInf, &opts).unwrap();
        assert_eq!(big.count, 1);
        let same = vec![fam[3].clone(), fam[3].clone()];
        assert_eq!(separated_count(&shift(2), &same, 0.5, MetricKind::RhoInf, &opts).unwrap().count, 1);
        // ρ_2 at ε = 0.9: need disagreement on all three indices, so antipodal pairs only
        let r2 = separated_count(&shift(2), &fam, 0.9, MetricKind::Rho2, &opts).unwrap();
        assert_eq!(r2.count, 2);
        let g = SeparationOptions { mode: CountMode::Greedy, ..opts };
        let rg = separated_count(&shift(2), &fam, 0.9, MetricKind::Rho2, &g).unwrap();
        assert!(rg.count >= 1 && rg.count <= 2);
    }

    #[test]
    fn mis_on_cycle() {
        let n = 7;
        let adj: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n, (i + n - 1) % n]).collect();
        assert_eq!(max_independent_set(&adj, 1000).unwrap().len(), 3);
        let k4: Vec<Vec<usize>> = (0..4).map(|i| (0..4).filter(|&j| j != i).collect()).collect();
        assert_eq!(max_independent_set(&k4, 1000).unwrap().len(), 1);
    }

    #[test]
    fn algebraic_constant_two() {
        let a = AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z(), "2").unwrap()), 1e-9).unwrap();
        let s = Arc::new(quotient_sofic(&z(), &[4], 2).unwrap());
        let xi = vec![vec![0], vec![1], vec![1], vec![0]];
        let (phi, rep) = algebraic_microstate(&xi, &a, s, 1, 1).unwrap();
        assert_eq!(rep.tail_error, 0.0);
        for (k, x) in xi.iter().enumerate() {
            assert_eq!(phi.entry(k).identity_value(), PointValue::Torus(&[x[0] as f64 / 2.0]));
        }
    }

    #[test]
    fn algebraic_two_minus_t_is_microstate() {
        let a = AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z(), "2-t").unwrap()), 1e-9).unwrap();
        let s = Arc::new(quotient_sofic(&z(), &[32], a.radius() + 2).unwrap());
        let xi: Vec<Vec<i64>> = (0..32).map(|k| vec![(k * 7 % 3) as i64 - 1]).collect();
        let (phi, rep) = algebraic_microstate(&xi, &a, s, 1, 1).unwrap();
        let act = ActionSpec::Algebraic(a);
        let r = is_microstate(&act, &phi, &[el(1), el(-1)], 0.1).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(rep.tail_error < 1e-8);
    }

    #[test]
    fn dump_is_stable() {
        let s = Arc::new(quotient_sofic(&z(), &[3], 1).unwrap());
        let phi = fullshift_microstate(&[0, 1, 1], s, 1).unwrap();
        assert_eq!(dump(&phi), dump(&phi.clone()));
        assert_eq!(dump(&phi)["d"], 3);
    }
}
