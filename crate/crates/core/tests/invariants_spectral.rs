mod common;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use common::config;
use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;
use soficlab_core::group::{GroupElement, GroupRingElement, GroupSpec};
use soficlab_core::spectral::{bareiss_det, level_det, quotient_matrix, QuotientMatrix};

type Terms = Vec<(Vec<i64>, i64)>;

fn terms(rank: usize) -> impl Strategy<Value = Terms> {
    prop::collection::vec((prop::collection::vec(-2..=2i64, rank), -3..=3i64), 1..4)
}

fn build(rank: usize, t: &Terms) -> GroupRingElement {
    let g = GroupSpec::lattice(rank).unwrap();
    let mut map = BTreeMap::new();
    for (v, c) in t {
        *map.entry(GroupElement::Lattice(v.clone())).or_insert_with(|| BigInt::from(0)) += *c;
    }
    GroupRingElement::from_exact(g, map)
}

fn det(f: &GroupRingElement, moduli: &[u64]) -> BigInt {
    match quotient_matrix(f, moduli).unwrap() {
        QuotientMatrix::Exact(m) => bareiss_det(m),
        QuotientMatrix::Float(_) => unreachable!("integer coefficients"),
    }
}

fn shape() -> impl Strategy<Value = (usize, Vec<u64>)> {
    prop_oneof![
        (1..=12u64).prop_map(|n| (1, vec![n])),
        (1..=4u64, 1..=4u64).prop_map(|(a, b)| (2, vec![a, b])),
    ]
}

/// `|f̂(χ)|` over the characters of `Z/n`.
fn fourier_moduli(t: &Terms, n: u64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (v, c) in t {
                let angle = TAU * (j as f64) * (v[0] as f64) / n as f64;
                re += *c as f64 * angle.cos();
                im += *c as f64 * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn determinant_is_multiplicative((rank, moduli) in shape(), a in terms(2), b in terms(2)) {
        let a: Terms = a.into_iter().map(|(v, c)| (v[..rank].to_vec(), c)).collect();
        let b: Terms = b.into_iter().map(|(v, c)| (v[..rank].to_vec(), c)).collect();
        let (f, g) = (build(rank, &a), build(rank, &b));
        let fg = f.mul(&g).unwrap();
        prop_assert_eq!(det(&fg, &moduli), det(&f, &moduli) * det(&g, &moduli));
    }

    #[test]
    fn involution_preserves_absolute_determinant((rank, moduli) in shape(), a in terms(2)) {
        let a: Terms = a.into_iter().map(|(v, c)| (v[..rank].to_vec(), c)).collect();
        let f = build(rank, &a);
        prop_assert_eq!(det(&f, &moduli).abs(), det(&f.involution(), &moduli).abs());
    }

    #[test]
    fn units_have_unit_determinant((rank, moduli) in shape(), v in prop::collection::vec(-5..=5i64, 2), sign in prop::bool::ANY) {
        let f = build(rank, &vec![(v[..rank].to_vec(), if sign { 1 } else { -1 })]);
        prop_assert!(det(&f, &moduli).abs().is_one());
        let level = level_det(&f, &moduli, 512).unwrap();
        prop_assert_eq!(level.normalized, Some(0.0));
    }

    #[test]
    fn circulant_matches_fourier(n in 1..=24u64, a in terms(1)) {
        let f = build(1, &a);
        let level = level_det(&f, &[n], 512).unwrap();
        let moduli = fourier_moduli(&a, n);
        let smallest = moduli.iter().copied().fold(f64::INFINITY, f64::min);
        match level.log_abs_det {
            Some(l) => {
                let oracle: f64 = moduli.iter().map(|m| m.ln()).sum();
                prop_assert!((l - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "{} vs {}", l, oracle);
            }
            None => prop_assert!(level.singular && smallest < 1e-9),
        }
    }

    #[test]
    fn two_minus_t_is_increasing(n in 1..=40u32) {
        let big = |k: u32| -> BigInt { (BigInt::one() << k) - 1 };
        prop_assert!(big(n).pow(n + 1) < big(n + 1).pow(n));
        let f = build(1, &vec![(vec![0], 2), (vec![1], -1)]);
        prop_assert_eq!(det(&f, &[n as u64]), big(n));
    }
}
