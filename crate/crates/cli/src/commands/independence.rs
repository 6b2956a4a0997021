use std::sync::Arc;

use serde::Serialize;
use soficlab_core::actions::{ActionSpec, ConstraintSet, PointPattern, SetTuple, Window};
use soficlab_core::group::{GroupElement, GroupSpec};
use soficlab_core::independence::{
    algebraic_independence_set, base_centers, independence_density, km_extract, li_yorke_scan,
    product_density_check, sofic_independence_check, BaseConfig, KmMode, PatternPolicy, SearchMode, SearchOptions,
    TupleSet, WitnessGenerator, KM_EXACT_CAP,
};
use soficlab_core::sofic::quotient_sofic;

use super::{ActionArgs, DensityArgs, IndepArgs, KmArgs, LiyorkeArgs};
use crate::config::{parse_usizes, parse_window, read_file, CliError, CliResult, Outcome};

fn tuple(g: &GroupSpec, k: Option<u32>, sets: Option<&str>) -> CliResult<SetTuple> {
    match sets {
        Some(s) => Ok(SetTuple(s.split(';').map(|x| ConstraintSet::parse(g, x)).collect::<Result<_, _>>()?)),
        None => Ok(SetTuple::identity_cylinders(g, k.unwrap_or(2))),
    }
}

pub fn density(args: &DensityArgs) -> CliResult<Outcome> {
    let action = args.action.build()?;
    let g = action.group().clone();
    let f = parse_window(&g, args.window.as_deref().ok_or_else(|| CliError::config("density needs --window"))?)?;
    let t = tuple(&g, args.k, args.sets.as_deref())?;
    let mut opts = SearchOptions::default();
    if let Some(b) = args.node_budget {
        opts.node_budget = b;
    }
    if let Some(p) = &args.product {
        let other = ActionArgs { preset: Some(p.clone()), group: args.action.group.clone(), ..ActionArgs::default() }.build()?;
        let t2 = tuple(&g, args.k, args.sets.as_deref())?;
        return Outcome::ok(product_density_check(&f, &action, &t, &other, &t2, &opts)?);
    }
    let mode = match args.mode.as_deref().unwrap_or("exact") {
        "exact" => SearchMode::Exact,
        "greedy" => SearchMode::Greedy,
        other => return Err(CliError::config(format!("unknown mode {other:?}; use exact or greedy"))),
    };
    Outcome::ok(independence_density(&f, &t, &action, mode, &opts)?)
}

pub fn indep(args: &IndepArgs) -> CliResult<Outcome> {
    let action = args.action.build()?;
    let g = action.group().clone();
    if g.rank() != 1 {
        return Err(CliError::config("indep uses the cyclic quotients of Z"));
    }
    let n = args.n.unwrap_or(32);
    let f_radius = args.f_radius.unwrap_or(1);
    let window = args.window.unwrap_or(1);
    let delta = args.delta.unwrap_or(0.1);
    let f = g.ball(f_radius);
    let policy = match args.samples {
        Some(s) => PatternPolicy { exhaustive_cap: 0, sample: Some((s, args.seed.unwrap_or(0))) },
        None => PatternPolicy::default(),
    };
    match &action {
        ActionSpec::Algebraic(alg) => {
            let k_radius = args.k_radius.unwrap_or(1);
            let support = window + alg.radius() + k_radius + f_radius;
            let sigma = Arc::new(quotient_sofic(&g, &[n], support)?);
            let e = g.identity();
            let base = vec![BaseConfig::zero(), BaseConfig::at_identity(e, vec![1; alg.n()])];
            let r = args.ball_radius.unwrap_or(0.25);
            let balls = SetTuple(
                base_centers(alg.inverse(), &base)
                    .into_iter()
                    .map(|c| ConstraintSet::Ball { center: c, radius: r })
                    .collect(),
            );
            let k_set = g.ball(k_radius);
            Outcome::ok(algebraic_independence_set(&action, &k_set, &sigma, &balls, &base, &f, delta, window, &policy)?)
        }
        ActionSpec::Symbolic(_) => {
            let sigma = Arc::new(quotient_sofic(&g, &[n], window.max(f_radius))?);
            let t = tuple(&g, args.k, None)?;
            let j = match &args.j {
                Some(s) => parse_usizes(s)?,
                None => (0..n as usize).collect(),
            };
            let generator = WitnessGenerator::FullShift { radius: window, seed: args.seed.unwrap_or(0) };
            Outcome::ok(sofic_independence_check(&j, &t, &f, delta, &sigma, &action, &generator, &policy)?)
        }
    }
}

#[derive(Serialize)]
struct KmOutput {
    report: soficlab_core::independence::KmReport,
    /// `I` in 1-based coordinates.
    coordinates: Vec<usize>,
}

pub fn km(args: &KmArgs) -> CliResult<Outcome> {
    let path = args.input.as_ref().ok_or_else(|| CliError::config("km needs --input"))?;
    let k = args.k.ok_or_else(|| CliError::config("km needs --k"))?;
    let set = TupleSet::parse(k, &read_file(path)?)?;
    let mode = match args.mode.as_deref().unwrap_or("exact") {
        "exact" => KmMode::Exact,
        "greedy" => KmMode::Greedy,
        other => return Err(CliError::config(format!("unknown mode {other:?}; use exact or greedy"))),
    };
    let report = km_extract(&set, mode, args.cap.unwrap_or(KM_EXACT_CAP))?;
    let coordinates = report.i.iter().map(|c| c + 1).collect();
    Outcome::ok(KmOutput { report, coordinates })
}

fn first_coordinate(t: &GroupElement) -> CliResult<i64> {
    match t {
        GroupElement::Lattice(v) if !v.is_empty() => Ok(v[0]),
        _ => Err(CliError::config("point specs other than const need a lattice group")),
    }
}

/// Symbolic point on the ball of the given radius.
fn point(g: &GroupSpec, spec: &str, radius: usize, alphabet: u32) -> CliResult<PointPattern> {
    let window = Window::ball(g, radius);
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let bad = || CliError::config(format!("bad point spec {spec:?}; use const:v, periodic:0110, pow2 or random:seed"));
    let symbols: Vec<u32> = match kind {
        "const" => {
            let v: u32 = arg.parse().map_err(|_| bad())?;
            vec![v; window.len()]
        }
        "periodic" => {
            let digits: Vec<u32> = arg.chars().map(|c| c.to_digit(10).ok_or_else(bad)).collect::<CliResult<_>>()?;
            if digits.is_empty() {
                return Err(bad());
            }
            let p = digits.len() as i64;
            window
                .elems()
                .iter()
                .map(|t| Ok(digits[first_coordinate(t)?.rem_euclid(p) as usize]))
                .collect::<CliResult<_>>()?
        }
        "pow2" => window
            .elems()
            .iter()
            .map(|t| Ok(u32::from(first_coordinate(t)?.unsigned_abs().is_power_of_two())))
            .collect::<CliResult<_>>()?,
        "random" => {
            let seed: u64 = arg.parse().map_err(|_| bad())?;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..window.len()).map(|_| rng.gen_range(0..alphabet)).collect()
        }
        _ => return Err(bad()),
    };
    if let Some(v) = symbols.iter().find(|&&v| v >= alphabet) {
        return Err(CliError::config(format!("symbol {v} outside the alphabet of size {alphabet}")));
    }
    Ok(PointPattern::symbolic(window, symbols)?)
}

pub fn liyorke(args: &LiyorkeArgs) -> CliResult<Outcome> {
    let action = args.action.build()?;
    let sym = action.as_symbolic()?;
    let g = action.group().clone();
    let radius = args.radius.unwrap_or(32);
    let x = point(&g, args.x.as_deref().ok_or_else(|| CliError::config("liyorke needs --x"))?, radius, sym.alphabet())?;
    let y = point(&g, args.y.as_deref().ok_or_else(|| CliError::config("liyorke needs --y"))?, radius, sym.alphabet())?;
    let thresholds = (args.above.unwrap_or(1.0), args.below.unwrap_or(0.0));
    Outcome::ok(li_yorke_scan(&action, &x, &y, radius, thresholds)?)
}
