//! Orbit independence sets `J ⊆ G`: every `ω: J → {1..k}` has
//! `⋂_{s∈J} s⁻¹A_{ω(s)} ≠ ∅`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpec, ConstraintSet, Cylinder, SetTuple, SymbolicAction, Window};
use crate::error::{Error, Result};
use crate::group::text::format_element;
use crate::group::GroupElement;

/// Outcome of a consistency search that may run out of budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Independent,
    /// A pattern `ω` (listed in the order of `J`) with empty intersection.
    NotIndependent { omega: Vec<usize> },
    Unknown,
}

impl Verdict {
    pub fn is_independent(&self) -> bool {
        matches!(self, Verdict::Independent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Radius of the window in which subshift points are filled; `None` picks
    /// the constrained radius plus the largest forbidden-pattern radius.
    pub window: Option<usize>,
    /// Backtracking node budget per pattern `ω`.
    pub node_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { window: None, node_budget: 1_000_000 }
    }
}

/// Required symbol sets per position: `x ∈ s⁻¹A` iff `x_{s⁻¹p}` is allowed.
fn constraints(
    action: &SymbolicAction,
    j: &[GroupElement],
    tuple: &SetTuple,
    omega: &[usize],
) -> Result<Option<BTreeMap<GroupElement, BTreeSet<u32>>>> {
    let g = action.group();
    let mut req: BTreeMap<GroupElement, BTreeSet<u32>> = BTreeMap::new();
    for (s, &w) in j.iter().zip(omega) {
        let ConstraintSet::Cylinders(cyls) = &tuple.0[w] else {
            return Err(Error::Unsupported("orbit independence needs cylinder sets".into()));
        };
        let si = g.inverse(s)?;
        for c in cyls {
            let pos = g.mul(&si, &c.position)?;
            let allowed: BTreeSet<u32> = (0..action.alphabet()).filter(|&v| c.admits(action, v)).collect();
            let slot = req.entry(pos).or_insert_with(|| (0..action.alphabet()).collect());
            *slot = slot.intersection(&allowed).copied().collect();
            if slot.is_empty() {
                return Ok(None);
            }
        }
    }
    Ok(Some(req))
}

/// Does some locally admissible filling of the window satisfy `req`?
fn fill_window(
    action: &SymbolicAction,
    req: &BTreeMap<GroupElement, BTreeSet<u32>>,
    radius: usize,
    budget: u64,
) -> Result<Option<bool>> {
    let g = action.group();
    let window = Window::ball(g, radius);
    for p in req.keys() {
        if window.position(p).is_none() {
            return Err(Error::WindowExhausted { needed: g.word_length(p), available: radius });
        }
    }
    let n = window.len();
    // occurrences[i]: pattern placements whose last window cell is i
    let mut occurrences: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); n];
    for (pi, p) in action.forbidden().iter().enumerate() {
        for u in window.elems() {
            let cells: Option<Vec<usize>> =
                p.cells.iter().map(|(c, _)| g.mul(u, c).ok().and_then(|x| window.position(&x))).collect();
            if let Some(cells) = cells {
                let last = *cells.iter().max().unwrap();
                occurrences[last].push((pi, cells));
            }
        }
    }
    let domains: Vec<Vec<u32>> = window
        .elems()
        .iter()
        .map(|e| match req.get(e) {
            Some(set) => set.iter().copied().collect(),
            None => (0..action.alphabet()).collect(),
        })
        .collect();
    let mut label = vec![0u32; n];
    let mut nodes = 0u64;
    fn rec(
        i: usize,
        label: &mut Vec<u32>,
        domains: &[Vec<u32>],
        occ: &[Vec<(usize, Vec<usize>)>],
        action: &SymbolicAction,
        nodes: &mut u64,
        budget: u64,
    ) -> Option<bool> {
        if i == label.len() {
            return Some(true);
        }
        for &v in &domains[i] {
            *nodes += 1;
            if *nodes > budget {
                return None;
            }
            label[i] = v;
            let bad = occ[i].iter().any(|(pi, cells)| {
                let p = &action.forbidden()[*pi];
                cells.iter().zip(&p.cells).all(|(&c, (_, want))| action.digit(label[c], p.factor) == *want)
            });
            if bad {
                continue;
            }
            match rec(i + 1, label, domains, occ, action, nodes, budget) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
        }
        Some(false)
    }
    Ok(rec(0, &mut label, &domains, &occurrences, action, &mut nodes, budget))
}

fn pattern_radius(action: &SymbolicAction) -> usize {
    let g = action.group();
    action
        .forbidden()
        .iter()
        .flat_map(|p| p.cells.iter().map(|(c, _)| g.word_length(c)))
        .max()
        .unwrap_or(0)
}

/// Check every `ω: J → {1..k}`. Subshifts are filled by backtracking over a
/// window; points are required to be admissible inside that window only.
pub fn is_independence_set(
    j: &[GroupElement],
    tuple: &SetTuple,
    action: &ActionSpec,
    opts: &SearchOptions,
) -> Result<Verdict> {
    let ActionSpec::Symbolic(sym) = action else {
        return Err(Error::Unsupported("orbit independence is decided for symbolic actions only".into()));
    };
    let k = tuple.len();
    if k == 0 {
        return Err(Error::Precondition("empty set tuple".into()));
    }
    let g = sym.group();
    let constrained = j
        .iter()
        .flat_map(|s| {
            let si = g.inverse(s).unwrap();
            tuple.positions().into_iter().map(move |p| g.word_length(&g.mul(&si, &p).unwrap()))
        })
        .max()
        .unwrap_or(0);
    let radius = opts.window.unwrap_or(constrained + pattern_radius(sym));
    if constrained > radius {
        return Err(Error::WindowExhausted { needed: constrained, available: radius });
    }
    let total = (k as u128).checked_pow(j.len() as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| {
        Error::BudgetExceeded(format!("{k}^{} patterns", j.len()))
    })? as u64;
    let mut unknown = false;
    for m in 0..total {
        let mut omega = Vec::with_capacity(j.len());
        let mut r = m;
        for _ in 0..j.len() {
            omega.push((r % k as u64) as usize);
            r /= k as u64;
        }
        let Some(req) = constraints(sym, j, tuple, &omega)? else {
            return Ok(Verdict::NotIndependent { omega });
        };
        if sym.is_full_shift() {
            continue;
        }
        match fill_window(sym, &req, radius, opts.node_budget)? {
            Some(true) => {}
            Some(false) => return Ok(Verdict::NotIndependent { omega }),
            None => unknown = true,
        }
    }
    Ok(if unknown { Verdict::Unknown } else { Verdict::Independent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "greedy")]
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub f_size: usize,
    pub j: Vec<GroupElement>,
    pub q: f64,
    pub mode: SearchMode,
    /// Some candidate sets returned `Unknown` and were treated as dependent.
    pub incomplete: bool,
}

/// Largest `|F|` accepted in exact mode.
pub const EXACT_DENSITY_CAP: usize = 20;

/// A maximum (exact) or maximal (greedy) independence subset of `F`.
pub fn independence_density(
    f: &[GroupElement],
    tuple: &SetTuple,
    action: &ActionSpec,
    mode: SearchMode,
    opts: &SearchOptions,
) -> Result<DensityReport> {
    if mode == SearchMode::Exact && f.len() > EXACT_DENSITY_CAP {
        return Err(Error::BudgetExceeded(format!("|F| = {} exceeds the exact cap {EXACT_DENSITY_CAP}", f.len())));
    }
    let mut incomplete = false;
    let mut check = |cand: &[GroupElement]| -> Result<bool> {
        match is_independence_set(cand, tuple, action, opts)? {
            Verdict::Independent => Ok(true),
            Verdict::NotIndependent { .. } => Ok(false),
            Verdict::Unknown => {
                incomplete = true;
                Ok(false)
            }
        }
    };
    let j = match mode {
        SearchMode::Greedy => {
            let mut j = Vec::new();
            for s in f {
                j.push(s.clone());
                if !check(&j)? {
                    j.pop();
                }
            }
            j
        }
        SearchMode::Exact => {
            // Independence sets are closed under subsets, so only independent prefixes are extended.
            let mut best = Vec::new();
            let mut stack: Vec<(usize, Vec<GroupElement>)> = vec![(0, Vec::new())];
            while let Some((i, cur)) = stack.pop() {
                if cur.len() > best.len() {
                    best = cur.clone();
                }
                if i == f.len() || cur.len() + (f.len() - i) <= best.len() {
                    continue;
                }
                stack.push((i + 1, cur.clone()));
                let mut with = cur;
                with.push(f[i].clone());
                if check(&with)? {
                    stack.push((i + 1, with));
                }
            }
            best
        }
    };
    Ok(DensityReport {
        f_size: f.len(),
        q: if f.is_empty() { 1.0 } else { j.len() as f64 / f.len() as f64 },
        j,
        mode,
        incomplete,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDensityReport {
    pub f_size: usize,
    /// Independence subset of `F` for the first tuple.
    pub j: Vec<GroupElement>,
    /// Independence subset of `J` for the second tuple.
    pub j1: Vec<GroupElement>,
    pub q: f64,
    /// `|J_1| / |J|`.
    pub r: f64,
    /// Density of the second tuple on `F` itself.
    pub r_on_f: f64,
    /// `J_1` passed the independence check for `(A_1×B_1, …, A_k×B_k)`.
    pub validated: bool,
    /// `|J_1| ≥ q·r·|F|`.
    pub meets_bound: bool,
    /// `|J_1| ≥ q·r_F·|F|`.
    pub meets_density_product: bool,
}

fn lift(c: &Cylinder, factors: usize, offset: usize) -> Result<Cylinder> {
    let factor = match c.factor {
        Some(f) => f + offset,
        None if factors == 1 => offset,
        None => return Err(Error::Unsupported("lift whole-symbol cylinders of multi-factor actions".into())),
    };
    Ok(Cylinder { position: c.position.clone(), factor: Some(factor), allowed: c.allowed.clone() })
}

/// `(A_1 × B_1, …, A_k × B_k)` as cylinder sets on the product action.
pub fn product_tuple(x: &SymbolicAction, a: &SetTuple, y: &SymbolicAction, b: &SetTuple) -> Result<SetTuple> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let (fx, fy) = (x.factors().len(), y.factors().len());
    a.0.iter()
        .zip(&b.0)
        .map(|(sa, sb)| match (sa, sb) {
            (ConstraintSet::Cylinders(ca), ConstraintSet::Cylinders(cb)) => {
                let mut out = ca.iter().map(|c| lift(c, fx, 0)).collect::<Result<Vec<_>>>()?;
                out.extend(cb.iter().map(|c| lift(c, fy, fx)).collect::<Result<Vec<_>>>()?);
                Ok(ConstraintSet::Cylinders(out))
            }
            _ => Err(Error::Unsupported("product tuples need cylinder sets".into())),
        })
        .collect::<Result<Vec<_>>>()
        .map(SetTuple)
}

/// Two-stage certificate: `J ⊆ F` for `A`, then `J_1 ⊆ J` for `B`, validated for `A × B`.
pub fn product_density_check(
    f: &[GroupElement],
    x: &ActionSpec,
    a: &SetTuple,
    y: &ActionSpec,
    b: &SetTuple,
    opts: &SearchOptions,
) -> Result<ProductDensityReport> {
    let first = independence_density(f, a, x, SearchMode::Exact, opts)?;
    let second = independence_density(&first.j, b, y, SearchMode::Exact, opts)?;
    let on_f = independence_density(f, b, y, SearchMode::Exact, opts)?;
    let product = crate::actions::product_action(x, y)?;
    let tuple = product_tuple(x.as_symbolic()?, a, y.as_symbolic()?, b)?;
    let validated = is_independence_set(&second.j, &tuple, &product, opts)?.is_independent();
    let n = f.len() as f64;
    let q = first.q;
    let r = if first.j.is_empty() { 0.0 } else { second.j.len() as f64 / first.j.len() as f64 };
    let j1 = second.j.len() as f64;
    Ok(ProductDensityReport {
        f_size: f.len(),
        j: first.j,
        j1: second.j,
        q,
        r,
        r_on_f: on_f.q,
        validated,
        meets_bound: j1 + 1e-9 >= q * r * n,
        meets_density_product: j1 + 1e-9 >= q * on_f.q * n,
    })
}

/// Readable form of a set of group elements.
pub fn format_set(j: &[GroupElement]) -> Vec<String> {
    j.iter().map(format_element).collect()
}
