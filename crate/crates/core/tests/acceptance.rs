//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soficlab_core::actions::{product_action, ActionSpec, AlgebraicAction, ConstraintSet, SetTuple, SymbolicAction};
use soficlab_core::entropy::{estimate, EntropySchedule, FamilyPolicy};
use soficlab_core::group::text::parse_ring;
use soficlab_core::group::{GroupElement, GroupSpec, RingMatrix};
use soficlab_core::independence::{
    algebraic_independence_set, base_centers, independence_density, km_extract, product_density_check, BaseConfig,
    KmMode, PatternPolicy, SearchMode, SearchOptions, TupleSet, KM_EXACT_CAP,
};
use soficlab_core::microstates::{MetricKind, SeparationOptions};
use soficlab_core::quasitiling::{
    commuting_bijection, quasitile, rf_mixing_check, right_action_table, tau_prime, BijectionConfig,
};
use soficlab_core::sofic::{quotient_sofic, SoficMap};
use soficlab_core::spectral::{det_vs_entropy, fk_det_estimate, level_det, DetOptions};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn z() -> GroupSpec {
    GroupSpec::lattice(1).unwrap()
}

fn at(i: i64) -> GroupElement {
    GroupElement::Lattice(vec![i])
}

fn symbolic_schedule(action: ActionSpec, ns: std::ops::RangeInclusive<u64>, budget: u64) -> EntropySchedule {
    EntropySchedule {
        action,
        levels: ns.map(|n| Arc::new(quotient_sofic(&z(), &[n], 1).unwrap())).collect(),
        f_chain: vec![z().ball(1)],
        deltas: vec![0.1],
        epsilons: vec![0.5],
        metric: MetricKind::RhoInf,
        family: FamilyPolicy::FullShift { radius: 1 },
        budget,
        separation: SeparationOptions::default(),
    }
}

/// Per-level counts must be exactly `k^d`.
fn log_k_levels(action: ActionSpec, k: u64, ns: std::ops::RangeInclusive<u64>, budget: u64) -> Check {
    let r = estimate(&symbolic_schedule(action, ns, budget)).map_err(|e| e.to_string())?;
    ensure(!r.partial, || "partial run".into())?;
    let mut worst = 0f64;
    for c in &r.cells {
        let count = c.separation.as_ref().map(|s| s.count).ok_or("cell without a count")?;
        ensure(Some(count) == k.checked_pow(c.d as u32), || format!("d = {}: N = {count}", c.d))?;
        worst = worst.max((c.value - (k as f64).ln()).abs());
    }
    ensure(worst <= 1e-15, || format!("float log differs by {worst:e}"))?;
    Ok(format!("{} levels, N = {k}^d", r.cells.len()))
}

fn full_shift_entropy() -> Check {
    let mut out = Vec::new();
    for k in [2u32, 3] {
        let a = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), k).unwrap());
        out.push(format!("k={k}: {}", log_k_levels(a, u64::from(k), 4..=12, 1 << 20)?));
    }
    Ok(out.join("; "))
}

fn product_additivity() -> Check {
    let a = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 2).unwrap());
    let b = ActionSpec::Symbolic(SymbolicAction::full_shift(z(), 3).unwrap());
    let p = product_action(&a, &b).map_err(|e| e.to_string())?;
    log_k_levels(p, 6, 4..=7, 1 << 20)
}

/// `∫ log|3 − 2cos θ| dθ/2π` by the trapezoid rule, exponentially accurate for periodic integrands.
fn mahler_three_minus_t_minus_inverse() -> f64 {
    let m = 1 << 14;
    (0..m).map(|j| (3.0 - 2.0 * (TAU * j as f64 / m as f64).cos()).ln()).sum::<f64>() / m as f64
}

fn fuglede_kadison() -> Check {
    let f = parse_ring(&z(), "2-t").unwrap();
    let l16 = level_det(&f, &[16], 512).map_err(|e| e.to_string())?;
    ensure(l16.det.as_deref() == Some("65535"), || format!("det at N=16 is {:?}", l16.det))?;
    let target = 65535f64.ln() / 16.0;
    let got = l16.normalized.ok_or("singular at N=16")?;
    ensure((got - target).abs() <= 1e-12, || format!("N=16: {got} vs {target}"))?;

    let levels: Vec<Vec<u64>> = (4..=32).map(|n| vec![n]).collect();
    let r = fk_det_estimate(&f, &levels, &DetOptions::default()).map_err(|e| e.to_string())?;
    let gap = (r.estimate - 2f64.ln()).abs();
    ensure(gap <= 1e-3, || format!("2-t estimate off by {gap}"))?;

    let g = parse_ring(&z(), "3-t-T").unwrap();
    let levels: Vec<Vec<u64>> = (16..=48).step_by(8).map(|n| vec![n]).collect();
    let r3 = fk_det_estimate(&g, &levels, &DetOptions::default()).map_err(|e| e.to_string())?;
    let oracle = mahler_three_minus_t_minus_inverse();
    let gap3 = (r3.estimate - oracle).abs();
    ensure(gap3 <= 5e-3, || format!("3-t-T: {} vs oracle {oracle}", r3.estimate))?;
    Ok(format!("N=16 exact; |2-t − log 2| = {gap:.1e}; |3-t-T − oracle| = {gap3:.1e}"))
}

fn det_entropy_constant_two() -> Check {
    let f = parse_ring(&z(), "2").unwrap();
    let action = ActionSpec::Algebraic(AlgebraicAction::new(RingMatrix::scalar(f.clone()), 1e-9).unwrap());
    let ns = 4..=10u64;
    let schedule = EntropySchedule {
        action,
        levels: ns.clone().map(|n| Arc::new(quotient_sofic(&z(), &[n], 2).unwrap())).collect(),
        f_chain: vec![z().ball(1)],
        deltas: vec![0.1],
        epsilons: vec![0.5],
        metric: MetricKind::RhoInf,
        family: FamilyPolicy::Algebraic { radius: 1, low: 0, high: 1 },
        budget: 1 << 20,
        separation: SeparationOptions::default(),
    };
    let levels: Vec<Vec<u64>> = ns.map(|n| vec![n]).collect();
    let r = det_vs_entropy(&f, &levels, &DetOptions::default(), &schedule, 1e-12).map_err(|e| e.to_string())?;
    let ln2 = 2f64.ln();
    ensure(r.consistent && !r.partial && r.levels.len() == 7, || "inconsistent or partial".into())?;
    for l in &r.levels {
        let det = l.det_normalized.ok_or("missing det level")?;
        ensure((l.entropy_lower - ln2).abs() <= 1e-15 && (det - ln2).abs() <= 1e-15, || {
            format!("d = {}: entropy {} det {det}", l.d, l.entropy_lower)
        })?;
    }
    Ok(format!("{} levels, both log 2", r.levels.len()))
}

/// Whether every 0/1 pattern on `J` is seen on some golden-mean word over the window.
/// Admissible words extend to points by zeros, so the window `0..=9` is enough. The cylinder
/// for `s` sits at `−s`; the no-`11` rule is symmetric under that reflection.
fn golden_mean_oracle(j: &[i64]) -> bool {
    let words: Vec<u32> = (0u32..1 << 10).filter(|w| w & (w >> 1) == 0).collect();
    let patterns: BTreeSet<Vec<u32>> = words
        .iter()
        .map(|w| j.iter().map(|&s| w >> (s as u32) & 1).collect())
        .collect();
    patterns.len() == 1 << j.len()
}

fn coordinates(j: &[GroupElement]) -> Vec<i64> {
    j.iter()
        .map(|s| match s {
            GroupElement::Lattice(v) => v[0],
            other => panic!("unexpected element {other:?}"),
        })
        .collect()
}

fn independence_density_golden() -> Check {
    let f: Vec<GroupElement> = (0..10).map(at).collect();
    let gm = ActionSpec::Symbolic(SymbolicAction::golden_mean());
    let t = SetTuple::identity_cylinders(&z(), 2);
    let r = independence_density(&f, &t, &gm, SearchMode::Exact, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let oracle = (0u32..1 << 10)
        .filter(|m| golden_mean_oracle(&(0..10).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
        .map(u32::count_ones)
        .max()
        .unwrap();
    ensure(!r.incomplete && r.j.len() == 5 && oracle == 5, || format!("|J| = {}, oracle {oracle}", r.j.len()))?;
    ensure(golden_mean_oracle(&coordinates(&r.j)), || "returned J fails the oracle".into())?;
    Ok(format!("|J| = 5, q = {}", r.q))
}

fn product_density() -> Check {
    let f: Vec<GroupElement> = (0..8).map(at).collect();
    let gm = ActionSpec::Symbolic(SymbolicAction::golden_mean());
    let t = SetTuple::identity_cylinders(&z(), 2);
    let r = product_density_check(&f, &gm, &t, &gm, &t, &SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.validated && r.meets_bound, || format!("{r:?}"))?;
    ensure(r.j1.len() as f64 >= r.q * r.r * 8.0 - 1e-12, || "bound recount fails".into())?;
    ensure(golden_mean_oracle(&coordinates(&r.j1)), || "J_1 fails the oracle".into())?;
    Ok(format!("|J| = {}, |J_1| = {}, q = {}, r = {}", r.j.len(), r.j1.len(), r.q, r.r))
}

fn karpovsky_milman() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let k = rng.gen_range(2..=3u32);
        let n = rng.gen_range(1..=12usize);
        let size = rng.gen_range(1..=80usize);
        let tuples: Vec<Vec<u32>> = (0..size).map(|_| (0..n).map(|_| rng.gen_range(1..=k)).collect()).collect();
        let s = TupleSet::new(k, tuples.clone()).map_err(|e| e.to_string())?;
        let r = km_extract(&s, KmMode::Exact, KM_EXACT_CAP).map_err(|e| e.to_string())?;
        let oracle = common::brute_force_shatter(k, &tuples);
        ensure(r.i.len() == oracle && common::shattered(k, &tuples, &r.i), || {
            format!("trial {trial}: |I| = {} vs {oracle}", r.i.len())
        })?;
    }
    Ok("200 instances match".into())
}

fn upe_construction() -> Check {
    let a = parse_ring(&z(), "2-t").unwrap();
    let alg = AlgebraicAction::new(RingMatrix::scalar(a), 1e-9).unwrap();
    let (window, k_radius, f_radius, d) = (1, 1, 1, 32usize);
    let sigma = Arc::new(quotient_sofic(&z(), &[d as u64], window + alg.radius() + k_radius + f_radius).unwrap());
    let base = vec![BaseConfig::zero(), BaseConfig::at_identity(z().identity(), vec![1])];
    let balls = SetTuple(
        base_centers(alg.inverse(), &base).into_iter().map(|c| ConstraintSet::Ball { center: c, radius: 0.25 }).collect(),
    );
    let k_set = z().ball(k_radius);
    let action = ActionSpec::Algebraic(alg);
    let r = algebraic_independence_set(
        &action,
        &k_set,
        &sigma,
        &balls,
        &base,
        &z().ball(f_radius),
        0.1,
        window,
        &PatternPolicy::default(),
    )
    .map_err(|e| e.to_string())?;
    let ks = k_set.len();
    ensure(2 * ks * ks * r.j.len() >= d, || format!("|J| = {} below d/(2|K|^2)", r.j.len()))?;
    ensure(translates_disjoint(&sigma, &k_set, &r.j), || "K^-1 translates of J overlap".into())?;
    let w = r.witnesses.ok_or("no witnesses")?;
    ensure(w.holds && !w.sampled && w.checked == 1 << r.j.len(), || format!("{w:?}"))?;
    Ok(format!("|J| = {} ≥ {d}/{}, {} patterns pass", r.j.len(), 2 * ks * ks, w.checked))
}

fn translates_disjoint(sigma: &SoficMap, k_set: &[GroupElement], j: &[usize]) -> bool {
    let g = sigma.group();
    let mut used = BTreeSet::new();
    j.iter().all(|&a| k_set.iter().all(|kk| used.insert(sigma.apply(&g.inverse(kk).unwrap(), a).unwrap())))
}

fn quasitiling() -> Check {
    let mut out = Vec::new();
    for moduli in [vec![60u64], vec![12, 12]] {
        let g = GroupSpec::lattice(moduli.len()).unwrap();
        let sigma = quotient_sofic(&g, &moduli, 6).unwrap();
        let shapes = vec![g.ball(1), g.ball(3)];
        let v: Vec<usize> = (0..sigma.d()).collect();
        let ts = quasitile(&sigma, &shapes, &v, 0.0, 0.2, false).map_err(|e| e.to_string())?;
        ts.validate(&sigma).map_err(|e| e.to_string())?;
        common::independent_tiling_check(&sigma, &ts).map_err(|e| e.to_string())?;
        ensure(ts.cover >= 0.8, || format!("{moduli:?}: cover {}", ts.cover))?;
        out.push(format!("{moduli:?}: cover {:.3}", ts.cover));
    }
    Ok(out.join("; "))
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(density)).collect()
}

fn commuting_bijection_trials() -> Check {
    let g = z();
    let n = 240usize;
    let sigma = quotient_sofic(&g, &[n as u64], 5).unwrap();
    let f = g.ball(1);
    let config = BijectionConfig { big: vec![g.ball(4)], small: vec![g.ball(0), g.ball(5)], eta: 0.1 };
    let tau = 0.25;
    let lambda = tau * tau * (1.0 - tau_prime(tau)) / 384.0;
    let mut worst = (0f64, f64::INFINITY);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_subset(&mut rng, n, 0.5);
        let zz = random_subset(&mut rng, n, 0.5);
        let r = commuting_bijection(&sigma, &y, &zz, &f, 0.2, &config).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut seen = vec![false; n];
        ensure(r.phi.len() == n && r.phi.iter().all(|&p| !std::mem::replace(&mut seen[p as usize], true)), || {
            format!("seed {seed}: not a permutation")
        })?;
        let phi = &r.phi;
        let defect = f
            .iter()
            .map(|s| {
                let p = sigma.perm(s).unwrap();
                (0..n).filter(|&a| phi[p[a] as usize] != p[phi[a] as usize]).count() as f64 / n as f64
            })
            .fold(0.0, f64::max);
        let zs: BTreeSet<usize> = zz.iter().copied().collect();
        let overlap = y.iter().filter(|&&a| zs.contains(&(phi[a] as usize))).count() as f64 / n as f64;
        ensure(defect < 0.2 && overlap >= lambda, || format!("seed {seed}: defect {defect}, overlap {overlap}"))?;
        worst = (worst.0.max(defect), worst.1.min(overlap));
    }
    Ok(format!("20 trials, max defect {:.3}, min overlap {:.3} ≥ {lambda:.2e}", worst.0, worst.1))
}

fn ratio(s: &str) -> Result<Ratio<u64>, String> {
    Ratio::from_str(s).map_err(|e| format!("{s}: {e}"))
}

fn rf_mixing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let n = rng.gen_range(1..=60usize);
        let density = rng.gen_range(0.0..=1.0);
        let y: BTreeSet<usize> = random_subset(&mut rng, n, density).into_iter().collect();
        let q = GroupSpec::quotient(vec![n as u64]).unwrap();
        let table = right_action_table(&q).map_err(|e| e.to_string())?;
        let yv: Vec<usize> = y.iter().copied().collect();
        let r = rf_mixing_check(&q, &table, &yv).map_err(|e| e.to_string())?;
        let (total, best, size) = common::cyclic_symmetric_differences(n, &y);
        let nn = n as u64;
        ensure(total == 2 * size * (nn - size), || format!("trial {trial}: identity fails in the oracle"))?;
        let moved: BTreeSet<usize> = y.iter().map(|&t| (t + r.s) % n).collect();
        let at_s = moved.symmetric_difference(&y).count() as u64;
        let ok = r.identity_holds
            && r.meets_bound
            && ratio(&r.average)? == Ratio::new(total, nn * nn)
            && ratio(&r.bound)? == Ratio::new(2 * size * (nn - size), nn * nn)
            && ratio(&r.achieved)? == Ratio::new(best, nn)
            && at_s == best
            && best * nn >= 2 * size * (nn - size);
        ensure(ok, || format!("trial {trial}: {r:?}"))?;
    }
    Ok("1000 subsets".into())
}

fn invariant_suites() -> Check {
    use common::*;
    use proptest::prelude::*;
    let total = [
        run_suite((0..3usize, raw_ring(), raw_ring(), raw_ring()), |(k, a, b, c)| ring_laws(k, &a, &b, &c))?,
        run_suite(prop::collection::vec((0..2usize, any::<bool>()), 0..12), |w| free_inverse(&w))?,
        run_suite(dominant(), |(k, c, rest)| inverse_residual(k, c, &rest))?,
        run_suite(pseudometric_inputs(), |(s, t, o)| pseudometric(&s, &t, &o))?,
        run_suite(separation_inputs(), |(f, seed)| separation_monotone(&f, seed))?,
        run_suite(split_inputs(), |(n, j, seed)| split_valid(n, &j, seed))?,
    ];
    Ok(format!("6 suites × {} cases, no failures", total[0]))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 12] = [
        ("full-shift entropy is log k", 10, full_shift_entropy),
        ("entropy is additive on products", 10, product_additivity),
        ("Fuglede-Kadison determinants", 30, fuglede_kadison),
        ("determinant and entropy agree for f = 2", 10, det_entropy_constant_two),
        ("golden-mean independence density", 60, independence_density_golden),
        ("product independence density", 60, product_density),
        ("Karpovsky-Milman extraction", 120, karpovsky_milman),
        ("independence sets for 2 - t", 60, upe_construction),
        ("quasitiling", 30, quasitiling),
        ("matched tiles and commuting bijection", 120, commuting_bijection_trials),
        ("RF mixing identity", 30, rf_mixing),
        ("invariant suites", 120, invariant_suites),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => Err(format!("{detail}; over the {budget}s budget")),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.2}s]", i + 1, elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
