mod common;

use std::sync::Arc;

use common::config;
use proptest::prelude::*;
use soficlab_core::actions::{act, membership_xa, xa_residual, ActionSpec, AlgebraicAction, PointPattern, Window};
use soficlab_core::group::text::parse_ring;
use soficlab_core::group::{GroupElement, GroupSpec, RingMatrix};
use soficlab_core::microstates::{algebraic_microstate, equivariance_defects, fullshift_microstate};
use soficlab_core::sofic::{compose, hamming, perturb, quotient_sofic};

fn perm(n: usize) -> impl Strategy<Value = Vec<u32>> {
    Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle()
}

fn three_perms() -> impl Strategy<Value = [Vec<u32>; 4]> {
    (2..12usize).prop_flat_map(|n| [perm(n), perm(n), perm(n), perm(n)])
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn exact_quotients_have_no_defects(m1 in 1..7u64, m2 in 1..7u64, rank2 in any::<bool>(), r in 1..3usize) {
        let (g, moduli) = if rank2 {
            (GroupSpec::lattice(2).unwrap(), vec![m1, m2])
        } else {
            (GroupSpec::lattice(1).unwrap(), vec![m1 * m2])
        };
        let s = quotient_sofic(&g, &moduli, r).unwrap();
        let q = GroupSpec::quotient(moduli).unwrap();
        let support = s.support().to_vec();
        for a in &support {
            for b in &support {
                if s.contains(&g.mul(a, b).unwrap()) {
                    prop_assert_eq!(s.multiplicativity_mismatches(a, b).unwrap(), 0);
                }
                if q.reduce(a).unwrap() != q.reduce(b).unwrap() {
                    prop_assert_eq!(s.freeness_coincidences(a, b).unwrap(), 0);
                }
            }
        }
    }

    #[test]
    fn hamming_is_a_biinvariant_metric([a, b, c, p] in three_perms()) {
        let (ab, bc, ac) = (hamming(&a, &b).unwrap(), hamming(&b, &c).unwrap(), hamming(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, hamming(&b, &a).unwrap());
        prop_assert_eq!(ab, hamming(&compose(&p, &a), &compose(&p, &b)).unwrap());
        prop_assert_eq!(ab, hamming(&compose(&a, &p), &compose(&b, &p)).unwrap());
    }

    #[test]
    fn perturbation_moves_at_most_m_points(n in 2..30u64, frac in 0.0..1.0f64, seed in any::<u64>()) {
        let z = GroupSpec::lattice(1).unwrap();
        let s = quotient_sofic(&z, &[n], 2).unwrap();
        let m = (frac * n as f64) as usize;
        let t = perturb(&s, m, seed).unwrap();
        for g in s.support() {
            let h = hamming(s.perm(g).unwrap(), t.perm(g).unwrap()).unwrap();
            prop_assert!(h <= m as f64 / n as f64 + 1e-12);
        }
        prop_assert!(t.perm(&z.identity()).unwrap() == s.perm(&z.identity()).unwrap());
    }

    #[test]
    fn shifts_compose(symbols in prop::collection::vec(0..3u32, 41), s in -2..=2i64, t in -2..=2i64) {
        let g = GroupSpec::lattice(2).unwrap();
        let w = Window::ball(&g, 4);
        let symbols: Vec<u32> = symbols.into_iter().cycle().take(w.len()).collect();
        let x = PointPattern::symbolic(w, symbols).unwrap();
        let (s, t) = (GroupElement::Lattice(vec![s, 0]), GroupElement::Lattice(vec![0, t]));
        let lhs = act(&s, &act(&t, &x).unwrap()).unwrap();
        let rhs = act(&g.mul(&s, &t).unwrap(), &x).unwrap();
        let common = lhs.radius().min(rhs.radius());
        for u in g.ball(common) {
            prop_assert_eq!(lhs.symbol_at(&u).unwrap(), rhs.symbol_at(&u).unwrap());
        }
    }

    #[test]
    fn fullshift_microstates_are_equivariant(omega in prop::collection::vec(0..3u32, 3..20), r in 0..3usize) {
        let z = GroupSpec::lattice(1).unwrap();
        let sigma = Arc::new(quotient_sofic(&z, &[omega.len() as u64], r.max(1)).unwrap());
        let phi = fullshift_microstate(&omega, sigma, r).unwrap();
        let action = ActionSpec::Symbolic(soficlab_core::actions::SymbolicAction::full_shift(z.clone(), 3).unwrap());
        prop_assert!(equivariance_defects(&action, &phi, &z.ball(r)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn algebraic_microstates_lie_near_xa(xi in prop::collection::vec(-3..=3i64, 6..16)) {
        let z = GroupSpec::lattice(1).unwrap();
        let a = RingMatrix::scalar(parse_ring(&z, "3-t").unwrap());
        let alg = AlgebraicAction::new(a.clone(), 1e-9).unwrap();
        let sigma = Arc::new(quotient_sofic(&z, &[xi.len() as u64], alg.radius() + 2).unwrap());
        let rows: Vec<Vec<i64>> = xi.iter().map(|&v| vec![v]).collect();
        let (phi, report) = algebraic_microstate(&rows, &alg, sigma, 2, 3).unwrap();
        for x in phi.entries() {
            let r = xa_residual(x, &a).unwrap();
            prop_assert!(r <= report.tail_error * a.l1_norm() + 1e-9, "{}", r);
            prop_assert!(membership_xa(x, &a, 1e-6).unwrap());
        }
    }
}
