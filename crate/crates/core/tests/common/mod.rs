//! Strategies and property checks shared by the invariant suites and the acceptance target.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use soficlab_core::actions::{ActionSpec, AlgebraicAction, ConstraintSet, PointPattern, SetTuple, SymbolicAction, Window};
use soficlab_core::group::text::parse_ring;
use soficlab_core::group::{l1_inverse_with, GroupElement, GroupRingElement, GroupSpec, RingMatrix};
use soficlab_core::independence::{decomposition_split, WitnessGenerator};
use soficlab_core::microstates::{
    fullshift_microstate, rho2_maps, rhoinf_maps, separated_count, CountMode, MetricKind, Microstate,
    SeparationOptions,
};
use soficlab_core::sofic::quotient_sofic;

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config { cases: CASES, failure_persistence: None, ..Config::default() }
}

/// `Z^2`, the free group of rank 2 and `Z/5 × Z/3`.
pub fn group(kind: usize) -> GroupSpec {
    match kind {
        0 => GroupSpec::lattice(2).unwrap(),
        1 => GroupSpec::free(2).unwrap(),
        _ => GroupSpec::quotient(vec![5, 3]).unwrap(),
    }
}

/// A word in the generators and their inverses.
pub type Word = Vec<(usize, bool)>;

pub fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec((0..2usize, any::<bool>()), 0..4)
}

pub fn element(g: &GroupSpec, w: &Word) -> GroupElement {
    w.iter().fold(g.identity(), |acc, &(i, inv)| {
        let s = g.generator(i).unwrap();
        let s = if inv { g.inverse(&s).unwrap() } else { s };
        g.mul(&acc, &s).unwrap()
    })
}

pub type RawRing = Vec<(Word, i64)>;

pub fn raw_ring() -> impl Strategy<Value = RawRing> {
    prop::collection::vec((word(), -3..=3i64), 0..4)
}

pub fn ring(g: &GroupSpec, raw: &RawRing) -> GroupRingElement {
    raw.iter().fold(GroupRingElement::zero(g.clone()), |acc, (w, c)| {
        acc.add(&GroupRingElement::monomial(g.clone(), element(g, w), *c)).unwrap()
    })
}

pub fn ring_laws(kind: usize, a: &RawRing, b: &RawRing, c: &RawRing) -> Result<(), TestCaseError> {
    let g = group(kind);
    let (a, b, c) = (ring(&g, a), ring(&g, b), ring(&g, c));
    let ab = a.mul(&b).unwrap();
    prop_assert_eq!(ab.mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
    prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), ab.add(&a.mul(&c).unwrap()).unwrap());
    prop_assert_eq!(a.add(&b).unwrap().mul(&c).unwrap(), a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap());
    prop_assert_eq!(ab.involution(), b.involution().mul(&a.involution()).unwrap());
    prop_assert!(ab.l1_norm() <= a.l1_norm() * b.l1_norm());
    Ok(())
}

pub fn free_inverse(w: &Word) -> Result<(), TestCaseError> {
    let g = group(1);
    let x = element(&g, w);
    prop_assert!(g.is_identity(&g.mul(&x, &g.inverse(&x).unwrap()).unwrap()));
    prop_assert!(g.is_identity(&g.mul(&g.inverse(&x).unwrap(), &x).unwrap()));
    Ok(())
}

/// `c·e + rest` with `‖rest‖₁ < |c|`, so the Neumann series converges. On the
/// free group `rest` is a single monomial, since supports of powers grow exponentially.
pub fn dominant() -> impl Strategy<Value = (usize, i64, RawRing)> {
    prop_oneof![
        (prop_oneof![Just(0usize), Just(2usize)], prop_oneof![8..=12i64, -12..=-8i64], prop::collection::vec((word(), -1..=1i64), 0..4)),
        (Just(1usize), prop_oneof![4..=7i64, -7..=-4i64], prop::collection::vec((word(), -1..=1i64), 0..2)),
    ]
}

pub fn inverse_residual(kind: usize, c: i64, rest: &RawRing) -> Result<(), TestCaseError> {
    let g = group(kind);
    let e = GroupRingElement::monomial(g.clone(), g.identity(), c);
    let rest: RawRing = rest.iter().filter(|(w, _)| !g.is_identity(&element(&g, w))).cloned().collect();
    let f = e.add(&ring(&g, &rest)).unwrap();
    let a = RingMatrix::scalar(f);
    let inv = l1_inverse_with(&a, 1e-8, None).unwrap();
    let product = a.to_float().mul(&inv.inverse).unwrap();
    let id = RingMatrix::identity(&g, 1, false);
    let recomputed = product.sub(&id).unwrap().l1_norm();
    prop_assert!(recomputed <= inv.residual + 1e-9, "{} > {}", recomputed, inv.residual);
    prop_assert!(inv.residual <= 1e-6);
    Ok(())
}

fn full_shift(k: u32) -> ActionSpec {
    ActionSpec::Symbolic(SymbolicAction::full_shift(GroupSpec::lattice(1).unwrap(), k).unwrap())
}

fn circle_action() -> ActionSpec {
    let z = GroupSpec::lattice(1).unwrap();
    ActionSpec::Algebraic(AlgebraicAction::new(RingMatrix::scalar(parse_ring(&z, "3-t").unwrap()), 1e-9).unwrap())
}

/// Symmetry, vanishing on the diagonal and the triangle inequality for
/// `ρ` on symbolic and torus points, and for `ρ_2, ρ_∞` on maps.
pub fn pseudometric(sym: &[Vec<u32>; 3], torus: &[f64; 3], omegas: &[Vec<u32>; 3]) -> Result<(), TestCaseError> {
    let z = GroupSpec::lattice(1).unwrap();
    let w = Window::ball(&z, 2);
    let act = full_shift(3);
    let pts: Vec<PointPattern> = sym.iter().map(|s| PointPattern::symbolic(w.clone(), s.clone()).unwrap()).collect();
    let alg = circle_action();
    let w0 = Window::ball(&z, 0);
    let tps: Vec<PointPattern> = torus.iter().map(|&t| PointPattern::torus(w0.clone(), 1, vec![t], 0.0).unwrap()).collect();
    for (a, ps) in [(&act, &pts), (&alg, &tps)] {
        for x in ps.iter() {
            prop_assert_eq!(a.rho(x, x).unwrap(), 0.0);
            for y in ps.iter() {
                prop_assert_eq!(a.rho(x, y).unwrap(), a.rho(y, x).unwrap());
                for v in ps.iter() {
                    prop_assert!(a.rho(x, v).unwrap() <= a.rho(x, y).unwrap() + a.rho(y, v).unwrap() + 1e-12);
                }
            }
        }
    }
    let sigma = Arc::new(quotient_sofic(&z, &[omegas[0].len() as u64], 1).unwrap());
    let maps: Vec<Microstate> = omegas.iter().map(|o| fullshift_microstate(o, sigma.clone(), 1).unwrap()).collect();
    let act2 = full_shift(2);
    for x in &maps {
        for y in &maps {
            let (r2, ri) = (rho2_maps(&act2, x, y).unwrap(), rhoinf_maps(&act2, x, y).unwrap());
            prop_assert!(r2 <= ri + 1e-12);
            prop_assert_eq!(r2, rho2_maps(&act2, y, x).unwrap());
            for v in &maps {
                prop_assert!(rho2_maps(&act2, x, v).unwrap() <= r2 + rho2_maps(&act2, y, v).unwrap() + 1e-12);
                prop_assert!(rhoinf_maps(&act2, x, v).unwrap() <= ri + rhoinf_maps(&act2, y, v).unwrap());
            }
        }
    }
    Ok(())
}

pub fn pseudometric_inputs() -> impl Strategy<Value = ([Vec<u32>; 3], [f64; 3], [Vec<u32>; 3])> {
    let sym = prop::collection::vec(0..3u32, 5);
    let om = prop::collection::vec(0..2u32, 6);
    (
        [sym.clone(), sym.clone(), sym],
        [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64],
        [om.clone(), om.clone(), om],
    )
}

/// `N_ε` is nonincreasing in `ε`; greedy never beats exact; both are at least 1.
pub fn separation_monotone(family: &[Vec<u32>], seed: u64) -> Result<(), TestCaseError> {
    let z = GroupSpec::lattice(1).unwrap();
    let sigma = Arc::new(quotient_sofic(&z, &[family[0].len() as u64], 1).unwrap());
    let maps: Vec<Microstate> = family.iter().map(|o| fullshift_microstate(o, sigma.clone(), 1).unwrap()).collect();
    let act = full_shift(2);
    let exact = SeparationOptions::default();
    let greedy = SeparationOptions { mode: CountMode::Greedy, seed, ..exact };
    for metric in [MetricKind::Rho2, MetricKind::RhoInf] {
        let mut prev = u64::MAX;
        for eps in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let e = separated_count(&act, &maps, eps, metric, &exact).unwrap().count;
            let g = separated_count(&act, &maps, eps, metric, &greedy).unwrap().count;
            prop_assert!(e >= 1 && g >= 1);
            prop_assert!(g <= e, "greedy {} > exact {} at {}", g, e, eps);
            prop_assert!(e <= prev, "N grows from {} to {} at {}", prev, e, eps);
            prev = e;
        }
    }
    Ok(())
}

pub fn separation_inputs() -> impl Strategy<Value = (Vec<Vec<u32>>, u64)> {
    (prop::collection::vec(prop::collection::vec(0..2u32, 6), 1..10), any::<u64>())
}

/// The split's chosen `I` lies in `𝒥` and its witnesses validate.
pub fn split_valid(n: u64, j: &BTreeSet<usize>, seed: u64) -> Result<(), TestCaseError> {
    let z = GroupSpec::lattice(1).unwrap();
    let sigma = Arc::new(quotient_sofic(&z, &[n], 1).unwrap());
    let act = full_shift(3);
    let tuple = SetTuple(vec![
        ConstraintSet::parse(&z, "cyl:0=0|1").unwrap(),
        ConstraintSet::parse(&z, "cyl:0=2").unwrap(),
    ]);
    let a11 = ConstraintSet::parse(&z, "cyl:0=0").unwrap();
    let a12 = ConstraintSet::parse(&z, "cyl:0=1").unwrap();
    let j: Vec<usize> = j.iter().copied().filter(|&a| a < n as usize).collect();
    let gen = WitnessGenerator::FullShift { radius: 1, seed };
    let r = decomposition_split(&j, &tuple, (&a11, &a12), &z.ball(1), 0.1, &sigma, &act, &gen).unwrap();
    prop_assert!(r.validation.holds);
    prop_assert!(r.i.iter().all(|p| j.contains(p)));
    prop_assert!(r.branch == 1 || r.branch == 2);
    Ok(())
}

pub fn split_inputs() -> impl Strategy<Value = (u64, BTreeSet<usize>, u64)> {
    (4..10u64, prop::collection::btree_set(0..10usize, 0..6), any::<u64>())
}

/// Run a property with [`CASES`] cases outside the `proptest!` macro.
pub fn run_suite<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String> {
    let mut runner = TestRunner::new(config());
    runner.run(&strategy, test).map(|_| CASES).map_err(|e| e.to_string())
}

/// Largest shattered coordinate set, by trying every subset.
pub fn brute_force_shatter(k: u32, tuples: &[Vec<u32>]) -> usize {
    let n = tuples.first().map_or(0, Vec::len);
    (0u32..1 << n)
        .filter(|mask| {
            let cols: Vec<usize> = (0..n).filter(|c| mask >> c & 1 == 1).collect();
            shattered(k, tuples, &cols)
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn shattered(k: u32, tuples: &[Vec<u32>], cols: &[usize]) -> bool {
    let seen: BTreeSet<Vec<u32>> = tuples.iter().map(|t| cols.iter().map(|&c| t[c]).collect()).collect();
    seen.len() as u64 == u64::from(k).pow(cols.len() as u32)
}

pub fn km_inputs(max_n: usize) -> impl Strategy<Value = (u32, Vec<Vec<u32>>)> {
    (2..=3u32, 1..=max_n).prop_flat_map(|(k, n)| {
        (Just(k), prop::collection::vec(prop::collection::vec(1..=k, n), 1..40))
    })
}

/// `Σ_s |(𝒴 − s) Δ 𝒴|` on `Z/n`, the maximum over `s`, and `|𝒴|`.
pub fn cyclic_symmetric_differences(n: usize, y: &BTreeSet<usize>) -> (u64, u64, u64) {
    let mut total = 0;
    let mut best = 0;
    for s in 0..n {
        let moved: BTreeSet<usize> = y.iter().map(|&t| (t + n - s) % n).collect();
        let c = moved.symmetric_difference(y).count() as u64;
        total += c;
        best = best.max(c);
    }
    (total, best, y.len() as u64)
}

/// Recount a tiling from the map and centers alone.
pub fn independent_tiling_check(
    sigma: &soficlab_core::sofic::SoficMap,
    ts: &soficlab_core::quasitiling::TileSystem,
) -> Result<(), TestCaseError> {
    let d = sigma.d();
    let mut owner = vec![usize::MAX; d];
    let mut witness_owner = vec![false; d];
    let mut covered = 0;
    for (k, (shape, centers)) in ts.shapes.iter().zip(&ts.centers).enumerate() {
        prop_assert_eq!(centers.len(), ts.witnesses[k].len());
        for (c, w) in centers.iter().zip(&ts.witnesses[k]) {
            let tile: Vec<usize> = shape.iter().map(|s| sigma.apply(s, *c).unwrap()).collect();
            let set: BTreeSet<usize> = tile.iter().copied().collect();
            prop_assert_eq!(set.len(), tile.len());
            prop_assert!(w.len() as f64 >= (1.0 - ts.eta) * tile.len() as f64 - 1e-9);
            for &x in w {
                prop_assert!(set.contains(&x));
                prop_assert!(!std::mem::replace(&mut witness_owner[x], true));
            }
            for x in set {
                prop_assert!(owner[x] == usize::MAX || owner[x] == k, "shapes overlap at {}", x);
                if owner[x] == usize::MAX {
                    covered += 1;
                }
                owner[x] = k;
            }
        }
    }
    prop_assert!((covered as f64 / d as f64 - ts.cover).abs() < 1e-12);
    Ok(())
}
