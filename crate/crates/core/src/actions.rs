//! Full shifts, subshifts of finite type and algebraic actions `X_A`, with
//! window-approximated points and the identity-coordinate pseudometrics.
//!
//! Symbolic alphabets are `{0,…,k−1}`. A product of symbolic actions keeps
//! its factors: a symbol is a mixed-radix digit vector (first factor most
//! significant) and the pseudometric counts disagreeing factors.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::text::{format_element, parse_element};
use crate::group::{l1_inverse_with, GroupElement, GroupSpec, NeumannInverse, RingMatrix};

/// A ball `B_R` of the group, indexed.
#[derive(Debug, PartialEq)]
pub struct Window {
    group: GroupSpec,
    radius: usize,
    elems: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

impl Window {
    /// The ball of radius `radius`, shared between callers.
    pub fn ball(group: &GroupSpec, radius: usize) -> Arc<Window> {
        static CACHE: OnceLock<Mutex<HashMap<(GroupSpec, usize), Arc<Window>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (group.clone(), radius);
        if let Some(w) = cache.lock().unwrap().get(&key) {
            return w.clone();
        }
        let elems = group.ball(radius);
        let index = elems.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        let w = Arc::new(Window { group: group.clone(), radius, elems, index });
        cache.lock().unwrap().insert(key, w.clone());
        w
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn elems(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Symbols(Vec<u32>),
    /// Row-major `window × n` coordinates in `[0,1)`.
    Torus { n: usize, coords: Vec<f64>, tail: f64 },
}

/// A point of `X` known on a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    window: Arc<Window>,
    values: Values,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointValue<'a> {
    Symbol(u32),
    Torus(&'a [f64]),
}

/// `t − ⌊t⌋`, landing in `[0,1)`.
pub fn reduce_mod1(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Circle distance `min_m |t₁ − t₂ − m|`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    // ordered so the result is exactly symmetric
    let r = reduce_mod1(a.max(b) - a.min(b));
    r.min(1.0 - r)
}

impl PointPattern {
    pub fn symbolic(window: Arc<Window>, symbols: Vec<u32>) -> Result<Self> {
        if symbols.len() != window.len() {
            return Err(Error::SizeMismatch(symbols.len(), window.len()));
        }
        Ok(Self { window, values: Values::Symbols(symbols) })
    }

    pub fn torus(window: Arc<Window>, n: usize, coords: Vec<f64>, tail: f64) -> Result<Self> {
        if n == 0 || coords.len() != window.len() * n {
            return Err(Error::SizeMismatch(coords.len(), window.len() * n));
        }
        if coords.iter().any(|c| !(0.0..1.0).contains(c)) || !(tail >= 0.0) {
            return Err(Error::InvalidPattern("torus values must lie in [0,1) with tail >= 0".into()));
        }
        Ok(Self { window, values: Values::Torus { n, coords, tail } })
    }

    /// Symbolic point defined by a function of the position.
    pub fn from_fn(window: Arc<Window>, f: impl Fn(&GroupElement) -> u32) -> Self {
        let symbols = window.elems().iter().map(f).collect();
        Self { window, values: Values::Symbols(symbols) }
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn radius(&self) -> usize {
        self.window.radius()
    }

    pub fn tail(&self) -> f64 {
        match &self.values {
            Values::Symbols(_) => 0.0,
            Values::Torus { tail, .. } => *tail,
        }
    }

    pub fn value_at(&self, t: &GroupElement) -> Result<PointValue<'_>> {
        let i = self.window.position(t).ok_or(Error::WindowExhausted {
            needed: self.window.group().word_length(t),
            available: self.radius(),
        })?;
        Ok(self.value_at_index(i))
    }

    fn value_at_index(&self, i: usize) -> PointValue<'_> {
        match &self.values {
            Values::Symbols(s) => PointValue::Symbol(s[i]),
            Values::Torus { n, coords, .. } => PointValue::Torus(&coords[i * n..(i + 1) * n]),
        }
    }

    /// Value at the identity, always inside the window.
    pub fn identity_value(&self) -> PointValue<'_> {
        self.value_at_index(0)
    }

    /// `symbol(t)` for a symbolic pattern.
    pub fn symbol_at(&self, t: &GroupElement) -> Result<u32> {
        match self.value_at(t)? {
            PointValue::Symbol(s) => Ok(s),
            PointValue::Torus(_) => Err(Error::ActionMismatch("expected a symbolic point".into())),
        }
    }
}

/// `(sx)_t = x_{s⁻¹t}`; the window shrinks by `|s|`.
pub fn act(s: &GroupElement, x: &PointPattern) -> Result<PointPattern> {
    let g = x.window.group();
    let len = g.word_length(s);
    if len > x.radius() {
        return Err(Error::WindowExhausted { needed: len, available: x.radius() });
    }
    let out = Window::ball(g, x.radius() - len);
    let si = g.inverse(s)?;
    let idx: Vec<usize> = out
        .elems()
        .iter()
        .map(|t| {
            let src = g.mul(&si, t)?;
            x.window.position(&src).ok_or(Error::WindowExhausted { needed: g.word_length(&src), available: x.radius() })
        })
        .collect::<Result<_>>()?;
    let values = match &x.values {
        Values::Symbols(v) => Values::Symbols(idx.iter().map(|&i| v[i]).collect()),
        Values::Torus { n, coords, tail } => Values::Torus {
            n: *n,
            coords: idx.iter().flat_map(|&i| coords[i * n..(i + 1) * n].iter().copied()).collect(),
            tail: *tail,
        },
    };
    Ok(PointPattern { window: out, values })
}

/// A forbidden pattern on one factor: occurs at `u` when `x_{ug}` has digit `v` for every cell `(g, v)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenPattern {
    pub factor: usize,
    pub cells: Vec<(GroupElement, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicAction {
    group: GroupSpec,
    factors: Vec<u32>,
    forbidden: Vec<ForbiddenPattern>,
}

impl SymbolicAction {
    pub fn full_shift(group: GroupSpec, k: u32) -> Result<Self> {
        Self::sft(group, k, Vec::new())
    }

    pub fn sft(group: GroupSpec, k: u32, forbidden: Vec<Vec<(GroupElement, u32)>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("alphabet size must be >= 1".into()));
        }
        let forbidden = forbidden.into_iter().map(|cells| ForbiddenPattern { factor: 0, cells }).collect();
        let a = Self { group, factors: vec![k], forbidden };
        a.validate()?;
        Ok(a)
    }

    /// The golden-mean shift over `Z`: no two adjacent 1s.
    pub fn golden_mean() -> Self {
        let z = GroupSpec::lattice(1).unwrap();
        let cells = vec![(GroupElement::Lattice(vec![0]), 1), (GroupElement::Lattice(vec![1]), 1)];
        Self::sft(z, 2, vec![cells]).unwrap()
    }

    fn validate(&self) -> Result<()> {
        for p in &self.forbidden {
            let k = *self.factors.get(p.factor).ok_or_else(|| Error::InvalidPattern("unknown factor".into()))?;
            if p.cells.is_empty() {
                return Err(Error::InvalidPattern("empty forbidden pattern".into()));
            }
            for (g, v) in &p.cells {
                if !self.group.contains(g) || *v >= k {
                    return Err(Error::InvalidPattern(format!("cell {}={v} invalid", format_element(g))));
                }
            }
        }
        Ok(())
    }

    /// Parse `offset=symbol` pairs separated by `;`, one pattern per line; `#` starts a comment.
    pub fn parse_sft(group: GroupSpec, k: u32, text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let cells = line
                .split(';')
                .filter(|c| !c.trim().is_empty())
                .map(|cell| {
                    let (pos, sym) = cell
                        .rsplit_once('=')
                        .ok_or_else(|| Error::Parse(format!("cell {cell:?} lacks '='")))?;
                    let sym = sym.trim().parse().map_err(|_| Error::Parse(format!("bad symbol in {cell:?}")))?;
                    Ok((parse_element(&group, pos)?, sym))
                })
                .collect::<Result<Vec<_>>>()?;
            patterns.push(cells);
        }
        Self::sft(group, k, patterns)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    pub fn forbidden(&self) -> &[ForbiddenPattern] {
        &self.forbidden
    }

    pub fn alphabet(&self) -> u32 {
        self.factors.iter().product()
    }

    pub fn is_full_shift(&self) -> bool {
        self.forbidden.is_empty()
    }

    /// Digit of `symbol` in factor `i`.
    pub fn digit(&self, symbol: u32, i: usize) -> u32 {
        let below: u32 = self.factors[i + 1..].iter().product();
        (symbol / below) % self.factors[i]
    }

    /// Combine factor digits into a symbol.
    pub fn compose_symbol(&self, digits: &[u32]) -> u32 {
        digits.iter().zip(&self.factors).fold(0, |acc, (d, k)| acc * k + d)
    }

    /// Number of factors on which two symbols disagree.
    pub fn symbol_distance(&self, a: u32, b: u32) -> u32 {
        if self.factors.len() == 1 {
            return u32::from(a != b);
        }
        (0..self.factors.len()).filter(|&i| self.digit(a, i) != self.digit(b, i)).count() as u32
    }

    /// Does `p` occur at `u` in the partial labeling `label` (unknown cells never match)?
    pub fn occurs_at(&self, p: &ForbiddenPattern, u: &GroupElement, label: impl Fn(&GroupElement) -> Option<u32>) -> bool {
        p.cells.iter().all(|(g, v)| {
            self.group
                .mul(u, g)
                .ok()
                .and_then(|pos| label(&pos))
                .is_some_and(|sym| self.digit(sym, p.factor) == *v)
        })
    }

    /// No forbidden pattern occurs inside the window of `x`.
    pub fn admissible(&self, x: &PointPattern) -> Result<bool> {
        let Values::Symbols(sym) = &x.values else {
            return Err(Error::ActionMismatch("expected a symbolic point".into()));
        };
        if sym.iter().any(|&s| s >= self.alphabet()) {
            return Ok(false);
        }
        let label = |g: &GroupElement| x.window.position(g).map(|i| sym[i]);
        for p in &self.forbidden {
            for u in x.window.elems() {
                if self.occurs_at(p, u, label) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `X_A ⊆ ((R/Z)^G)^n` with a certified inverse of `A*`.
#[derive(Debug, Clone)]
pub struct AlgebraicAction {
    matrix: RingMatrix,
    adjoint_inverse: NeumannInverse,
    blocks: Vec<usize>,
    tolerance: f64,
}

impl AlgebraicAction {
    /// Invert `A*` to tolerance `tol / (2n‖A‖₁)`.
    pub fn new(a: RingMatrix, tol: f64) -> Result<Self> {
        if !a.is_exact() {
            return Err(Error::ModeMismatch);
        }
        let n = a.dim();
        let inner = tol / (2.0 * n as f64 * a.l1_norm().max(1.0));
        let adjoint_inverse = l1_inverse_with(&a.involution(), inner, None)?;
        Ok(Self { matrix: a, adjoint_inverse, blocks: vec![n], tolerance: tol })
    }

    pub fn matrix(&self) -> &RingMatrix {
        &self.matrix
    }

    pub fn group(&self) -> &GroupSpec {
        self.matrix.group()
    }

    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    /// `(A*)⁻¹` truncated.
    pub fn inverse(&self) -> &RingMatrix {
        &self.adjoint_inverse.inverse
    }

    pub fn certificate(&self) -> &NeumannInverse {
        &self.adjoint_inverse
    }

    pub fn residual_bound(&self) -> f64 {
        self.adjoint_inverse.residual
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Truncation radius of the stored inverse.
    pub fn radius(&self) -> usize {
        self.inverse().radius()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Sum over coordinate blocks of the max circle distance within the block.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut start = 0;
        let mut total = 0.0;
        for &len in &self.blocks {
            let m = (start..start + len).map(|i| circle_distance(a[i], b[i])).fold(0.0, f64::max);
            total += m;
            start += len;
        }
        total
    }
}

#[derive(Debug, Clone)]
pub enum ActionSpec {
    Symbolic(SymbolicAction),
    Algebraic(AlgebraicAction),
}

impl ActionSpec {
    pub fn group(&self) -> &GroupSpec {
        match self {
            ActionSpec::Symbolic(s) => s.group(),
            ActionSpec::Algebraic(a) => a.group(),
        }
    }

    pub fn as_symbolic(&self) -> Result<&SymbolicAction> {
        match self {
            ActionSpec::Symbolic(s) => Ok(s),
            ActionSpec::Algebraic(_) => Err(Error::ActionMismatch("expected a symbolic action".into())),
        }
    }

    pub fn as_algebraic(&self) -> Result<&AlgebraicAction> {
        match self {
            ActionSpec::Algebraic(a) => Ok(a),
            ActionSpec::Symbolic(_) => Err(Error::ActionMismatch("expected an algebraic action".into())),
        }
    }

    /// Pseudometric between identity-coordinate values.
    pub fn value_distance(&self, a: PointValue<'_>, b: PointValue<'_>) -> Result<f64> {
        match (self, a, b) {
            (ActionSpec::Symbolic(s), PointValue::Symbol(x), PointValue::Symbol(y)) => {
                Ok(f64::from(s.symbol_distance(x, y)))
            }
            (ActionSpec::Algebraic(al), PointValue::Torus(x), PointValue::Torus(y)) if x.len() == al.n() && y.len() == al.n() => {
                Ok(al.torus_distance(x, y))
            }
            _ => Err(Error::ActionMismatch("point does not belong to this action".into())),
        }
    }

    /// `ρ(x, y)` at the identity coordinate.
    pub fn rho(&self, x: &PointPattern, y: &PointPattern) -> Result<f64> {
        self.value_distance(x.identity_value(), y.identity_value())
    }
}

/// `X × Y` with the sum pseudometric.
pub fn product_action(a: &ActionSpec, b: &ActionSpec) -> Result<ActionSpec> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch("product of actions of different groups".into()));
    }
    match (a, b) {
        (ActionSpec::Symbolic(x), ActionSpec::Symbolic(y)) => {
            let shift = x.factors.len();
            let mut forbidden = x.forbidden.clone();
            forbidden.extend(y.forbidden.iter().map(|p| ForbiddenPattern { factor: p.factor + shift, cells: p.cells.clone() }));
            let mut factors = x.factors.clone();
            factors.extend(&y.factors);
            Ok(ActionSpec::Symbolic(SymbolicAction { group: x.group.clone(), factors, forbidden }))
        }
        (ActionSpec::Algebraic(x), ActionSpec::Algebraic(y)) => {
            let (n1, n2) = (x.n(), y.n());
            let g = x.group().clone();
            let zero = crate::group::GroupRingElement::zero(g);
            let rows = (0..n1 + n2)
                .map(|i| {
                    (0..n1 + n2)
                        .map(|j| match (i < n1, j < n1) {
                            (true, true) => x.matrix.get(i, j).clone(),
                            (false, false) => y.matrix.get(i - n1, j - n1).clone(),
                            _ => zero.clone(),
                        })
                        .collect()
                })
                .collect();
            let mut out = AlgebraicAction::new(RingMatrix::from_rows(rows)?, x.tolerance.min(y.tolerance))?;
            out.blocks = x.blocks.iter().chain(&y.blocks).copied().collect();
            Ok(ActionSpec::Algebraic(out))
        }
        _ => Err(Error::ActionMismatch("cannot mix symbolic and algebraic factors".into())),
    }
}

/// Residual of `xA* ≡ 0 (mod 1)` at every checkable position; `Ok(true)` iff all are within `tol`.
pub fn membership_xa(x: &PointPattern, a: &RingMatrix, tol: f64) -> Result<bool> {
    Ok(xa_residual(x, a)? <= tol)
}

/// Max over checkable positions `u` and columns `j` of `‖Σ_i Σ_h A_{ji,h} x_i(uh)‖_{R/Z}`.
pub fn xa_residual(x: &PointPattern, a: &RingMatrix) -> Result<f64> {
    let Values::Torus { n, coords, .. } = &x.values else {
        return Err(Error::ActionMismatch("membership needs a torus-valued point".into()));
    };
    let n = *n;
    if n != a.dim() {
        return Err(Error::SizeMismatch(n, a.dim()));
    }
    let g = x.window.group();
    let needed = a.radius();
    let mut worst: Option<f64> = None;
    'pos: for u in x.window.elems() {
        let mut acc = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                for (h, c) in a.get(j, i).float_terms() {
                    let Some(p) = x.window.position(&g.mul(u, &h)?) else {
                        continue 'pos;
                    };
                    acc[j] += c * coords[p * n + i];
                }
            }
        }
        let r = acc.iter().map(|&v| circle_distance(v, 0.0)).fold(0.0, f64::max);
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    worst.ok_or(Error::WindowExhausted { needed, available: x.radius() })
}

/// A single-coordinate constraint `x_position ∈ allowed` (on one factor's digit if `factor` is set).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub position: GroupElement,
    pub factor: Option<usize>,
    pub allowed: BTreeSet<u32>,
}

impl Cylinder {
    pub fn at_identity(group: &GroupSpec, symbol: u32) -> Self {
        Self { position: group.identity(), factor: None, allowed: BTreeSet::from([symbol]) }
    }

    pub fn admits(&self, action: &SymbolicAction, symbol: u32) -> bool {
        let v = match self.factor {
            Some(f) => action.digit(symbol, f),
            None => symbol,
        };
        self.allowed.contains(&v)
    }
}

/// One member of a set tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintSet {
    /// Intersection of cylinders; the empty list is the whole space.
    Cylinders(Vec<Cylinder>),
    /// Open ball `{x : ρ(x, center) < radius}` around an identity-coordinate value.
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConstraintSet {
    pub fn whole() -> Self {
        ConstraintSet::Cylinders(Vec::new())
    }

    pub fn cylinder(c: Cylinder) -> Self {
        ConstraintSet::Cylinders(vec![c])
    }

    /// `x ∈ s⁻¹A`, i.e. `sx ∈ A`.
    pub fn contains_translate(&self, action: &ActionSpec, s: &GroupElement, x: &PointPattern) -> Result<bool> {
        let g = action.group();
        let si = g.inverse(s)?;
        match self {
            ConstraintSet::Cylinders(cyls) => {
                let sym = action.as_symbolic()?;
                for c in cyls {
                    if !c.admits(sym, x.symbol_at(&g.mul(&si, &c.position)?)?) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ConstraintSet::Ball { center, radius } => {
                let v = x.value_at(&si)?;
                Ok(action.value_distance(v, PointValue::Torus(center))? < *radius)
            }
        }
    }

    pub fn contains(&self, action: &ActionSpec, x: &PointPattern) -> Result<bool> {
        self.contains_translate(action, &action.group().identity(), x)
    }

    /// Parse `whole`, or `cyl:` followed by `&`-joined `pos=sym|sym[@factor]` constraints.
    pub fn parse(group: &GroupSpec, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "whole" {
            return Ok(Self::whole());
        }
        let body = s.strip_prefix("cyl:").ok_or_else(|| Error::Parse(format!("unknown set {s:?}")))?;
        let cyls = body
            .split('&')
            .map(|c| {
                let (pos, rest) = c.rsplit_once('=').ok_or_else(|| Error::Parse(format!("{c:?} lacks '='")))?;
                let (syms, factor) = match rest.split_once('@') {
                    Some((a, f)) => (a, Some(f.trim().parse().map_err(|_| Error::Parse(format!("bad factor in {c:?}")))?)),
                    None => (rest, None),
                };
                let allowed = syms
                    .split('|')
                    .map(|v| v.trim().parse().map_err(|_| Error::Parse(format!("bad symbol in {c:?}"))))
                    .collect::<Result<BTreeSet<u32>>>()?;
                Ok(Cylinder { position: parse_element(group, pos)?, factor, allowed })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstraintSet::Cylinders(cyls))
    }
}

/// `(A_1, …, A_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetTuple(pub Vec<ConstraintSet>);

impl SetTuple {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Identity cylinders `({x_e = 0}, …, {x_e = k−1})`.
    pub fn identity_cylinders(group: &GroupSpec, k: u32) -> Self {
        SetTuple((0..k).map(|v| ConstraintSet::cylinder(Cylinder::at_identity(group, v))).collect())
    }

    /// Positions constrained by any cylinder.
    pub fn positions(&self) -> Vec<GroupElement> {
        let mut out: Vec<_> = self
            .0
            .iter()
            .flat_map(|c| match c {
                ConstraintSet::Cylinders(cs) => cs.iter().map(|c| c.position.clone()).collect(),
                ConstraintSet::Ball { .. } => Vec::new(),
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::text::parse_ring;

    fn z() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn el(v: i64) -> GroupElement {
        GroupElement::Lattice(vec![v])
    }

    #[test]
    fn act_relocates_values() {
        let w = Window::ball(&z(), 2);
        let x = PointPattern::from_fn(w, |g| match g {
            GroupElement::Lattice(v) => (v[0] + 2) as u32,
            _ => 0,
        });
        assert_eq!(act(&z().identity(), &x).unwrap(), x);
        let sx = act(&el(1), &x).unwrap();
        assert_eq!(sx.radius(), 1);
        assert_eq!(sx.symbol_at(&el(0)).unwrap(), x.symbol_at(&el(-1)).unwrap());
        assert!(matches!(act(&el(3), &x), Err(Error::WindowExhausted { needed: 3, available: 2 })));
    }

    #[test]
    fn rho_examples() {
        let full = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 3).unwrap());
        let w = Window::ball(&z(), 0);
        let x = PointPattern::symbolic(w.clone(), vec![1]).unwrap();
        let y = PointPattern::symbolic(w.clone(), vec![2]).unwrap();
        assert_eq!(full.rho(&x, &x).unwrap(), 0.0);
        assert_eq!(full.rho(&x, &y).unwrap(), 1.0);
        assert!((circle_distance(0.9, 0.05) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_admissibility() {
        let gm = SymbolicAction::golden_mean();
        let w = Window::ball(&z(), 2);
        let ok = PointPattern::symbolic(w.clone(), vec![1, 0, 0, 1, 0]).unwrap();
        assert!(gm.admissible(&ok).unwrap());
        // window order is 0, -1, 1, -2, 2: symbols at 0 and 1 are both 1
        let bad = PointPattern::symbolic(w, vec![1, 0, 1, 0, 0]).unwrap();
        assert!(!gm.admissible(&bad).unwrap());
        let parsed = SymbolicAction::parse_sft(z(), 2, "# golden mean\n0=1;1=1\n").unwrap();
        assert_eq!(parsed, gm);
        assert!(SymbolicAction::parse_sft(z(), 2, "0=2;1=1").is_err());
    }

    #[test]
    fn product_metric_is_sum() {
        let a = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap());
        let b = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 3).unwrap());
        let p = product_action(&a, &b).unwrap();
        let s = p.as_symbolic().unwrap();
        assert_eq!(s.alphabet(), 6);
        assert_eq!(s.symbol_distance(s.compose_symbol(&[0, 0]), s.compose_symbol(&[1, 2])), 2);
        assert_eq!(s.symbol_distance(s.compose_symbol(&[0, 1]), s.compose_symbol(&[0, 2])), 1);
        let trivial = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 1).unwrap());
        let q = product_action(&a, &trivial).unwrap();
        assert_eq!(q.as_symbolic().unwrap().alphabet(), 2);
        assert_eq!(q.as_symbolic().unwrap().symbol_distance(0, 1), 1);
    }

    #[test]
    fn membership_examples() {
        let two = RingMatrix::scalar(parse_ring(&z(), "2").unwrap());
        let w = Window::ball(&z(), 3);
        let zero = PointPattern::torus(w.clone(), 1, vec![0.0; 7], 0.0).unwrap();
        assert!(membership_xa(&zero, &two, 1e-12).unwrap());
        let half = PointPattern::torus(w.clone(), 1, vec![0.5; 7], 0.0).unwrap();
        assert!(membership_xa(&half, &two, 1e-12).unwrap());
        let third = PointPattern::torus(w, 1, vec![1.0 / 3.0; 7], 0.0).unwrap();
        assert!(!membership_xa(&third, &two, 1e-3).unwrap());
    }

    #[test]
    fn cylinder_translates() {
        let full = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap());
        let set = ConstraintSet::parse(&z(), "cyl:0=1").unwrap();
        let w = Window::ball(&z(), 2);
        let x = PointPattern::from_fn(w, |g| u32::from(*g == el(-1)));
        // x ∈ s⁻¹A iff x_{s⁻¹} = 1
        assert!(set.contains_translate(&full, &el(1), &x).unwrap());
        assert!(!set.contains(&full, &x).unwrap());
        assert!(ConstraintSet::whole().contains(&full, &x).unwrap());
        assert!(ConstraintSet::parse(&z(), "ball").is_err());
    }

    #[test]
    fn algebraic_action_inverse_certified() {
        let a = AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z(), "2-t").unwrap()), 1e-9).unwrap();
        assert!(a.certificate().tail <= 1e-9);
        assert!(a.radius() > 10);
        assert!(AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z(), "1-t").unwrap()), 1e-9).is_err());
    }
}
